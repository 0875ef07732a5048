//! Direct samplers for the Z and GH prior measures over density matrices,
//! and the identity-mixed variants that rebalance entangled vs separable
//! weight.
//!
//! Both priors are images of a uniform measure on a parameter space:
//!
//! - GH: `H` a `d x d` complex matrix with real and imaginary parts uniform
//!   on `(-1, 1)`, `rho = H H^dag / Tr(H H^dag)`.
//! - Z: a uniform point `e` of the `(d-1)`-simplex and a Haar unitary `V`,
//!   `rho = V diag(e) V^dag`.
//!
//! The Metropolis walk in [`crate::sampler`] moves in these same parameter
//! spaces, reusing the maps below.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{CMatrix, DensityMatrix, C64};
use crate::Rng;

pub const DEFAULT_BETA_Z: f64 = 0.66;
pub const DEFAULT_BETA_GH: f64 = 0.50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorKind {
    #[serde(rename = "Z")]
    Z,
    #[serde(rename = "GH")]
    Gh,
}

impl PriorKind {
    pub fn default_beta(self) -> f64 {
        match self {
            PriorKind::Z => DEFAULT_BETA_Z,
            PriorKind::Gh => DEFAULT_BETA_GH,
        }
    }
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PriorKind::Z => "Z",
            PriorKind::Gh => "GH",
        })
    }
}

impl std::str::FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "z" => Ok(PriorKind::Z),
            "gh" => Ok(PriorKind::Gh),
            other => Err(Error::arg(format!("unknown prior `{other}` (expected z or gh)"))),
        }
    }
}

/// Which prior to sample, optionally mixed with `I/d` using `lambda = u^beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    #[serde(default)]
    pub mixed: bool,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl PriorSpec {
    pub fn pure(kind: PriorKind) -> Self {
        PriorSpec {
            kind,
            mixed: false,
            beta: None,
        }
    }

    pub fn mixed(kind: PriorKind) -> Self {
        PriorSpec {
            kind,
            mixed: true,
            beta: None,
        }
    }

    pub fn mixed_with_beta(kind: PriorKind, beta: f64) -> Self {
        PriorSpec {
            kind,
            mixed: true,
            beta: Some(beta),
        }
    }

    /// Distortion exponent, falling back to the kind's default.
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| self.kind.default_beta())
    }

    pub fn validate(&self) -> Result<()> {
        let beta = self.beta();
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::validation("beta", format!("must be positive, got {beta}")));
        }
        Ok(())
    }

    /// Short stable name used in file names and reports.
    pub fn label(&self) -> String {
        let base = match self.kind {
            PriorKind::Z => "z",
            PriorKind::Gh => "gh",
        };
        if self.mixed {
            format!("{base}_mixed")
        } else {
            base.to_string()
        }
    }
}

/// GH parameters: `d x d` complex matrix, entries uniform on the unit box.
pub fn sample_gh_params(rng: &mut Rng, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// `H H^dag / Tr(H H^dag)` as a raw matrix.
pub fn gh_matrix(h: &CMatrix) -> CMatrix {
    let mut m = h * h.adjoint();
    let tr = m.trace().re;
    m.unscale_mut(tr);
    m
}

pub fn sample_gh(rng: &mut Rng, n_qubits: usize) -> DensityMatrix {
    let h = sample_gh_params(rng, 1 << n_qubits);
    DensityMatrix::from_psd_unchecked(n_qubits, gh_matrix(&h))
}

/// Uniform point of the `(dim-1)`-simplex via normalized exponentials.
pub fn sample_simplex(rng: &mut Rng, dim: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// `d x d` complex Gaussian matrix with `E|g_ij|^2 = 1`.
pub fn ginibre(rng: &mut Rng, dim: usize) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `diag(R)` moved into `Q`.
pub fn haar_unitary(rng: &mut Rng, dim: usize) -> CMatrix {
    let qr = ginibre(rng, dim).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `V diag(e) V^dag` as a raw matrix.
pub fn z_matrix(spectrum: &[f64], basis: &CMatrix) -> CMatrix {
    let scaled = CMatrix::from_fn(basis.nrows(), basis.ncols(), |i, j| {
        basis[(i, j)] * spectrum[j]
    });
    scaled * basis.adjoint()
}

pub fn sample_z(rng: &mut Rng, n_qubits: usize) -> DensityMatrix {
    let d = 1 << n_qubits;
    let spectrum = sample_simplex(rng, d);
    let basis = haar_unitary(rng, d);
    DensityMatrix::from_psd_unchecked(n_qubits, z_matrix(&spectrum, &basis))
}

/// `lambda rho + (1 - lambda) I/d` with `lambda = u^beta`, `u` uniform.
pub fn mix_identity(rho: &DensityMatrix, rng: &mut Rng, beta: f64) -> DensityMatrix {
    let u: f64 = rng.random();
    mix_identity_at(rho, u, beta)
}

/// [`mix_identity`] at a fixed `u`.
pub fn mix_identity_at(rho: &DensityMatrix, u: f64, beta: f64) -> DensityMatrix {
    let lambda = u.clamp(0.0, 1.0).powf(beta);
    DensityMatrix::from_psd_unchecked(rho.n_qubits(), mixed_matrix(rho.matrix(), lambda))
}

pub(crate) fn mixed_matrix(m: &CMatrix, lambda: f64) -> CMatrix {
    let d = m.nrows();
    let mut out = m.scale(lambda);
    let fill = (1.0 - lambda) / d as f64;
    for i in 0..d {
        out[(i, i)] += C64::new(fill, 0.0);
    }
    out
}

/// Draw one state from the prior described by `spec`.
pub fn sample_prior(spec: &PriorSpec, rng: &mut Rng, n_qubits: usize) -> DensityMatrix {
    let base = match spec.kind {
        PriorKind::Gh => sample_gh(rng, n_qubits),
        PriorKind::Z => sample_z(rng, n_qubits),
    };
    if spec.mixed {
        mix_identity(&base, rng, spec.beta())
    } else {
        base
    }
}
