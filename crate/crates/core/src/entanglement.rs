//! Bipartite negativities, their partition-averaged geometric means, and the
//! benchmark state families (noisy W states, the Smolin state).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{partial_transpose, trace_norm, Bipartition, DensityMatrix, C64};

/// Negativities below this are reported as exactly zero.
pub const NEGATIVITY_ZERO_TOL: f64 = 1e-10;

/// `(n1, n2)`: geometric means of cut negativities over balanced cuts and
/// over single-qubit-vs-rest cuts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NegativityPair {
    pub n1: f64,
    pub n2: f64,
}

/// `(||rho^{Gamma_Y}||_1 - 1) / 2`, the summed magnitude of the negative
/// eigenvalues of the partial transpose. Zero below [`NEGATIVITY_ZERO_TOL`].
pub fn negativity(rho: &DensityMatrix, part: &Bipartition) -> Result<f64> {
    let pt = partial_transpose(rho, part)?;
    let raw = 0.5 * (trace_norm(&pt)? - 1.0);
    Ok(if raw < NEGATIVITY_ZERO_TOL { 0.0 } else { raw })
}

/// Cuts of `k` qubits against the remaining `n - k`, each listed once. For
/// `2k == n` the side containing qubit 0 is taken as `X` to avoid counting a
/// cut twice.
pub fn cuts_of_size(n_qubits: usize, k: usize) -> Vec<Bipartition> {
    assert!(k >= 1 && k < n_qubits, "cut size {k} invalid for {n_qubits} qubits");
    let mut cuts = Vec::new();
    for subset in 0usize..(1 << n_qubits) {
        if subset.count_ones() as usize != k {
            continue;
        }
        let members: Vec<usize> = (0..n_qubits).filter(|q| subset & (1 << q) != 0).collect();
        if 2 * k == n_qubits && !members.contains(&0) {
            continue;
        }
        // members form X; Y is the complement
        let y: Vec<usize> = (0..n_qubits).filter(|q| !members.contains(q)).collect();
        cuts.push(Bipartition::new(n_qubits, &y).expect("complement of a proper subset"));
    }
    cuts
}

/// Balanced cuts (`floor(n/2)` vs rest): the family averaged into `n1`.
pub fn balanced_cuts(n_qubits: usize) -> Vec<Bipartition> {
    cuts_of_size(n_qubits, n_qubits / 2)
}

/// Single-qubit-vs-rest cuts: the family averaged into `n2`.
pub fn single_qubit_cuts(n_qubits: usize) -> Vec<Bipartition> {
    cuts_of_size(n_qubits, 1)
}

/// Geometric mean that short-circuits to zero on any zero factor.
pub fn geometric_mean(values: &[f64]) -> f64 {
    if values.is_empty() || values.iter().any(|&v| v <= 0.0) {
        return 0.0;
    }
    let log_sum: f64 = values.iter().map(|v| v.ln()).sum();
    (log_sum / values.len() as f64).exp()
}

pub fn negativity_pair(rho: &DensityMatrix) -> Result<NegativityPair> {
    let n = rho.n_qubits();
    if n < 2 {
        return Err(Error::arg("negativities need at least two qubits"));
    }
    let family_mean = |cuts: Vec<Bipartition>| -> Result<f64> {
        let vals = cuts
            .iter()
            .map(|c| negativity(rho, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(geometric_mean(&vals))
    };
    let n2 = family_mean(single_qubit_cuts(n))?;
    let n1 = if n <= 3 { n2 } else { family_mean(balanced_cuts(n))? };
    Ok(NegativityPair { n1, n2 })
}

/// Equal superposition of the `n` single-excitation basis states.
pub fn w_vector(n_qubits: usize) -> Vec<C64> {
    let d = 1usize << n_qubits;
    let amp = 1.0 / (n_qubits as f64).sqrt();
    (0..d)
        .map(|i| {
            if i.count_ones() == 1 {
                C64::new(amp, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// `q |W><W| + (1 - q) I / 2^n`.
pub fn w_noise_state(q: f64, n_qubits: usize) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::arg(format!("q = {q} outside [0, 1]")));
    }
    if n_qubits < 2 {
        return Err(Error::arg("W states need at least two qubits"));
    }
    let w = DensityMatrix::from_pure(n_qubits, &w_vector(n_qubits))?;
    w.mix(&DensityMatrix::maximally_mixed(n_qubits), q)
}

/// Four-qubit Smolin state: equal mixture of `|B><B|_AB ⊗ |B><B|_CD` over the
/// four Bell states `B`.
pub fn smolin_state() -> DensityMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let bells: [[C64; 4]; 4] = [
        [z, C64::new(s, 0.0), C64::new(s, 0.0), z],
        [z, C64::new(s, 0.0), C64::new(-s, 0.0), z],
        [C64::new(s, 0.0), z, z, C64::new(s, 0.0)],
        [C64::new(s, 0.0), z, z, C64::new(-s, 0.0)],
    ];
    let mut acc = crate::qstate::CMatrix::zeros(16, 16);
    for b in &bells {
        let pair = DensityMatrix::from_pure(2, b).expect("normalized Bell vector");
        acc += pair.tensor(&pair).into_matrix();
    }
    DensityMatrix::from_psd_unchecked(4, acc)
}

/// Smallest `q` at which the chosen component of the noisy-W negativity pair
/// turns positive, located by bisection to within `tol`.
pub fn w_separability_threshold(
    n_qubits: usize,
    pick: impl Fn(&NegativityPair) -> f64,
    tol: f64,
) -> Result<f64> {
    let entangled = |q: f64| -> Result<bool> {
        Ok(pick(&negativity_pair(&w_noise_state(q, n_qubits)?)?) > NEGATIVITY_ZERO_TOL)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if entangled(lo)? || !entangled(hi)? {
        return Err(Error::Degenerate("no separability transition in [0, 1]".into()));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if entangled(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
