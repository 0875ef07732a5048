//! Density matrices, bipartitions and the dense linear algebra shared by the
//! rest of the crate.
//!
//! Layout: qubit 0 is the most significant tensor factor, so bit `n-1-q` of a
//! basis index belongs to qubit `q`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Entrywise tolerance for `rho == rho^dagger`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance for `Tr rho == 1`.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-EIGEN_ZERO_TOL, 0)` count as zero.
pub const EIGEN_ZERO_TOL: f64 = 1e-10;
/// Hermiticity tolerance accepted by spectral routines on general input.
pub const INPUT_HERMITIAN_TOL: f64 = 1e-10;

/// A Hermitian, unit-trace, positive-semidefinite `2^n x 2^n` matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityMatrixRepr", into = "DensityMatrixRepr")]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validate and wrap `matrix` as an `n_qubits` state.
    pub fn new(n_qubits: usize, matrix: CMatrix) -> Result<Self> {
        check_dims(n_qubits, &matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (max |rho - rho^dag| = {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = min_eigenvalue(&matrix);
        if min_eig < -EIGEN_ZERO_TOL {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(DensityMatrix { n_qubits, matrix })
    }

    /// Wrap a matrix that is PSD by construction. The matrix is symmetrized
    /// and scaled to unit trace; positivity is the caller's guarantee.
    pub(crate) fn from_psd_unchecked(n_qubits: usize, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.nrows(), 1 << n_qubits);
        let mut m = hermitize(&matrix);
        let tr = m.trace().re;
        m.unscale_mut(tr);
        DensityMatrix {
            n_qubits,
            matrix: m,
        }
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let d = 1usize << n_qubits;
        DensityMatrix {
            n_qubits,
            matrix: CMatrix::identity(d, d).unscale(d as f64),
        }
    }

    /// Projector onto a (not necessarily normalized) pure state.
    pub fn from_pure(n_qubits: usize, amplitudes: &[C64]) -> Result<Self> {
        let d = 1usize << n_qubits;
        if amplitudes.len() != d {
            return Err(Error::arg(format!(
                "state vector has {} amplitudes, expected {d}",
                amplitudes.len()
            )));
        }
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::Degenerate("zero state vector".into()));
        }
        let v = v.unscale(norm);
        Ok(DensityMatrix::from_psd_unchecked(n_qubits, &v * v.adjoint()))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.matrix)
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> f64 {
        // Tr(rho rho) = sum |rho_ij|^2 for Hermitian rho
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::arg("cannot mix states of different qubit counts"));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::arg(format!("mixing weight {lambda} outside [0, 1]")));
        }
        let m = self.matrix.scale(lambda) + other.matrix.scale(1.0 - lambda);
        Ok(DensityMatrix::from_psd_unchecked(self.n_qubits, m))
    }

    /// `self ⊗ other`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_psd_unchecked(
            self.n_qubits + other.n_qubits,
            self.matrix.kronecker(&other.matrix),
        )
    }

    /// `U rho U^dagger`.
    pub fn conjugate_by(&self, unitary: &CMatrix) -> Result<Self> {
        if unitary.shape() != self.matrix.shape() {
            return Err(Error::arg("unitary dimension does not match state"));
        }
        Ok(DensityMatrix::from_psd_unchecked(
            self.n_qubits,
            unitary * &self.matrix * unitary.adjoint(),
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixRepr {
    n_qubits: usize,
    /// Row-major `(re, im)` pairs.
    matrix: Vec<[f64; 2]>,
}

impl From<DensityMatrix> for DensityMatrixRepr {
    fn from(rho: DensityMatrix) -> Self {
        let d = rho.dim();
        let mut entries = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = rho.matrix[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        DensityMatrixRepr {
            n_qubits: rho.n_qubits,
            matrix: entries,
        }
    }
}

impl TryFrom<DensityMatrixRepr> for DensityMatrix {
    type Error = Error;

    fn try_from(repr: DensityMatrixRepr) -> Result<Self> {
        if repr.n_qubits == 0 || repr.n_qubits > 16 {
            return Err(Error::arg(format!("unsupported n_qubits {}", repr.n_qubits)));
        }
        let d = 1usize << repr.n_qubits;
        if repr.matrix.len() != d * d {
            return Err(Error::arg(format!(
                "expected {} entries for {} qubits, found {}",
                d * d,
                repr.n_qubits,
                repr.matrix.len()
            )));
        }
        let m = CMatrix::from_row_iterator(
            d,
            d,
            repr.matrix.iter().map(|&[re, im]| C64::new(re, im)),
        );
        DensityMatrix::new(repr.n_qubits, m)
    }
}

/// A split of the qubits into `X` and a nonempty proper subset `Y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bipartition {
    n_qubits: usize,
    side_y: Vec<usize>,
}

impl Bipartition {
    pub fn new(n_qubits: usize, side_y: &[usize]) -> Result<Self> {
        let mut y: Vec<usize> = side_y.to_vec();
        y.sort_unstable();
        y.dedup();
        if y.is_empty() || y.len() >= n_qubits {
            return Err(Error::arg(format!(
                "side Y must be a nonempty proper subset of {n_qubits} qubits, got {side_y:?}"
            )));
        }
        if let Some(&q) = y.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::arg(format!("qubit {q} out of range for {n_qubits} qubits")));
        }
        Ok(Bipartition { n_qubits, side_y: y })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn side_y(&self) -> &[usize] {
        &self.side_y
    }

    pub fn side_x(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|q| !self.side_y.contains(q))
            .collect()
    }

    /// Bits of a basis index that belong to `Y`.
    pub fn mask_y(&self) -> usize {
        self.side_y
            .iter()
            .fold(0, |acc, &q| acc | (1 << (self.n_qubits - 1 - q)))
    }
}

/// Left-to-right Kronecker product of square factors.
pub fn kron_all(factors: &[CMatrix]) -> Result<CMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::arg("kron_all needs at least one factor"))?;
    if let Some(f) = factors.iter().find(|f| !f.is_square() || f.nrows() == 0) {
        return Err(Error::arg(format!(
            "kron_all factor is not square: {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    Ok(rest.iter().fold(first.clone(), |acc, f| acc.kronecker(f)))
}

/// `rho^{Gamma_Y}`: transpose of the `Y` tensor indices only.
pub fn partial_transpose(rho: &DensityMatrix, part: &Bipartition) -> Result<CMatrix> {
    if part.n_qubits() != rho.n_qubits() {
        return Err(Error::arg(format!(
            "bipartition over {} qubits applied to a {}-qubit state",
            part.n_qubits(),
            rho.n_qubits()
        )));
    }
    Ok(partial_transpose_raw(rho.matrix(), part.mask_y()))
}

/// Partial transpose of any square matrix: swaps the masked bits of the row
/// and column index. Pure permutation of entries.
pub fn partial_transpose_raw(m: &CMatrix, mask: usize) -> CMatrix {
    let d = m.nrows();
    CMatrix::from_fn(d, d, |i, j| {
        let src_i = (i & !mask) | (j & mask);
        let src_j = (j & !mask) | (i & mask);
        m[(src_i, src_j)]
    })
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(h: &CMatrix) -> Result<f64> {
    if !h.is_square() {
        return Err(Error::arg("trace_norm needs a square matrix"));
    }
    let defect = hermiticity_defect(h);
    if defect > INPUT_HERMITIAN_TOL {
        return Err(Error::arg(format!(
            "trace_norm input not Hermitian (defect {defect:e})"
        )));
    }
    Ok(h.clone().symmetric_eigenvalues().iter().map(|l| l.abs()).sum())
}

/// Clamp negative eigenvalues to zero and renormalize.
pub fn project_to_physical(h: &CMatrix, n_qubits: usize) -> Result<DensityMatrix> {
    check_dims(n_qubits, h)?;
    let defect = hermiticity_defect(h);
    if defect > INPUT_HERMITIAN_TOL {
        return Err(Error::arg(format!(
            "projection input not Hermitian (defect {defect:e})"
        )));
    }
    let eig = SymmetricEigen::new(hermitize(h));
    let clipped: DVector<f64> = eig.eigenvalues.map(|l| l.max(0.0));
    let total: f64 = clipped.sum();
    if total <= 0.0 {
        return Err(Error::Degenerate(
            "all eigenvalues are nonpositive; nothing to renormalize".into(),
        ));
    }
    let v = &eig.eigenvectors;
    let weights = clipped.map(|l| C64::new(l / total, 0.0));
    let m = v * CMatrix::from_diagonal(&weights) * v.adjoint();
    Ok(DensityMatrix::from_psd_unchecked(n_qubits, m))
}

/// Largest entrywise `|A - A^dagger|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A^dagger) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn sorted_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut eigs: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_dims(n_qubits: usize, m: &CMatrix) -> Result<()> {
    if n_qubits == 0 {
        return Err(Error::arg("n_qubits must be positive"));
    }
    let d = 1usize << n_qubits;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::arg(format!(
            "expected {d}x{d} matrix for {n_qubits} qubits, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}
