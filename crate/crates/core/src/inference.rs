//! Likelihood of a state given a record, linear-inversion tomography, the
//! clipped-spectrum MLE, and parametric bootstrap of the MLE negativities.

use rayon::prelude::*;

use rand::Rng as _;

use crate::entanglement::{negativity_pair, NegativityPair};
use crate::error::{Error, Result};
use crate::povm::{multinomial, outcome_probabilities, MeasurementRecord, SicPovm};
use crate::qstate::{min_eigenvalue, project_to_physical, CMatrix, DensityMatrix, EIGEN_ZERO_TOL};
use crate::{rng_from_seed, Rng};

/// Natural-log multinomial likelihood, up to the combinatorial constant.
/// `-inf` marks a state that assigns zero probability to an observed outcome.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogLikelihood(pub f64);

impl LogLikelihood {
    pub const IMPOSSIBLE: LogLikelihood = LogLikelihood(f64::NEG_INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_impossible(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// `Σ_k counts_k ln p_k`, skipping unobserved outcomes.
pub fn log_likelihood_of_probs(probs: &[f64], counts: &[u64]) -> LogLikelihood {
    let mut total = 0.0;
    for (&p, &c) in probs.iter().zip(counts) {
        if c == 0 {
            continue;
        }
        if p <= 0.0 {
            return LogLikelihood::IMPOSSIBLE;
        }
        total += c as f64 * p.ln();
    }
    LogLikelihood(total)
}

pub fn log_likelihood(
    rho: &DensityMatrix,
    record: &MeasurementRecord,
    povm: &SicPovm,
) -> Result<LogLikelihood> {
    check_record(record, povm)?;
    let probs = outcome_probabilities(rho, povm)?;
    Ok(log_likelihood_of_probs(&probs, record.counts()))
}

pub(crate) fn check_record(record: &MeasurementRecord, povm: &SicPovm) -> Result<()> {
    if record.n_qubits() != povm.n_qubits() {
        return Err(Error::arg(format!(
            "{}-qubit record used with a {}-qubit POVM",
            record.n_qubits(),
            povm.n_qubits()
        )));
    }
    Ok(())
}

/// `ρ_tomo`: the unit-trace Hermitian operator whose outcome probabilities
/// equal the observed frequencies. May have negative eigenvalues.
pub fn linear_inversion(record: &MeasurementRecord, povm: &SicPovm) -> Result<CMatrix> {
    check_record(record, povm)?;
    Ok(povm.invert_frequencies(&record.frequencies()?))
}

/// `ρ_tomo` if it is physical, otherwise its clipped and renormalized
/// spectrum.
pub fn mle_from_frequencies(freqs: &[f64], povm: &SicPovm) -> Result<DensityMatrix> {
    if freqs.len() != povm.n_outcomes() {
        return Err(Error::arg("frequency vector length does not match POVM"));
    }
    let tomo = povm.invert_frequencies(freqs);
    if min_eigenvalue(&tomo) >= -EIGEN_ZERO_TOL {
        Ok(DensityMatrix::from_psd_unchecked(povm.n_qubits(), tomo))
    } else {
        project_to_physical(&tomo, povm.n_qubits())
    }
}

pub fn mle_estimate(record: &MeasurementRecord, povm: &SicPovm) -> Result<DensityMatrix> {
    check_record(record, povm)?;
    mle_from_frequencies(&record.frequencies()?, povm)
}

/// How each bootstrap data set is generated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shots {
    /// Multinomial record with this many shots.
    Finite(u64),
    /// Frequencies equal to the exact outcome probabilities.
    Exact,
}

/// Parametric bootstrap: `k_resamples` synthetic records from `rho_mle`,
/// each re-estimated and reduced to its negativity pair.
pub fn bootstrap_negativity(
    rho_mle: &DensityMatrix,
    povm: &SicPovm,
    m: u64,
    k_resamples: usize,
    rng: &mut Rng,
) -> Result<Vec<NegativityPair>> {
    if m == 0 {
        return Err(Error::arg("bootstrap needs a positive shot count"));
    }
    bootstrap_negativity_with(rho_mle, povm, Shots::Finite(m), k_resamples, rng)
}

/// [`bootstrap_negativity`] with an explicit [`Shots`] mode. Each resample
/// runs on its own seed drawn from `rng`, so results do not depend on the
/// thread count.
pub fn bootstrap_negativity_with(
    rho_mle: &DensityMatrix,
    povm: &SicPovm,
    shots: Shots,
    k_resamples: usize,
    rng: &mut Rng,
) -> Result<Vec<NegativityPair>> {
    if k_resamples < 2 {
        return Err(Error::arg("bootstrap needs at least two resamples"));
    }
    let probs = outcome_probabilities(rho_mle, povm)?;
    let seeds: Vec<u64> = (0..k_resamples).map(|_| rng.random()).collect();
    seeds
        .into_par_iter()
        .map(|seed| {
            let freqs = match shots {
                Shots::Exact => probs.clone(),
                Shots::Finite(m) => {
                    let counts = multinomial(&probs, m, &mut rng_from_seed(seed));
                    counts.iter().map(|&c| c as f64 / m as f64).collect()
                }
            };
            negativity_pair(&mle_from_frequencies(&freqs, povm)?)
        })
        .collect()
}
