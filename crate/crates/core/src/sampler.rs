//! Random-walk Metropolis sampling of the posterior over density matrices.
//!
//! The walk moves in the prior's own parameter space, where the prior is
//! uniform, so the acceptance ratio is the likelihood ratio alone. Each step
//! picks one move kind uniformly at random; every kind has its own step size:
//!
//! - GH entries: every real and imaginary entry of `H` gets a Gaussian kick
//!   and is reflected back into `(-1, 1)`.
//! - Z spectrum: a zero-sum Gaussian kick; proposals leaving the simplex are
//!   rejected.
//! - Z basis: the eigenbasis is left-multiplied by `exp(i s G)` with `G`
//!   drawn from a GUE.
//! - Mixing weight (identity-mixed priors only): `u` in `[0, 1]` is kicked
//!   and reflected, with `lambda = u^beta`.
//!
//! All kicks are symmetric and the kind is chosen independently of the
//! state, so detailed balance holds once the step sizes are frozen at the
//! end of burn-in.

use std::io::{BufRead, Write};

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entanglement::{negativity_pair, NegativityPair};
use crate::error::{Error, Result};
use crate::inference::{check_record, log_likelihood_of_probs};
use crate::povm::{MeasurementRecord, SicPovm};
use crate::priors::{
    ginibre, gh_matrix, haar_unitary, mixed_matrix, sample_gh_params, sample_simplex, z_matrix,
    PriorKind, PriorSpec,
};
use crate::qstate::{CMatrix, DensityMatrix, C64};
use crate::{rng_from_seed, Rng};

/// Burn-in steps between step-size updates.
pub const ADAPT_INTERVAL: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChainConfig {
    pub total_steps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub target_acceptance: (f64, f64),
    pub initial_step_size: f64,
    pub seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            total_steps: 100_000,
            burn_in: 1_000,
            thinning: 10,
            target_acceptance: (0.35, 0.40),
            initial_step_size: 0.05,
            seed: 0,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_steps == 0 {
            return Err(Error::validation("chain.total_steps", "must be positive"));
        }
        if self.burn_in >= self.total_steps {
            return Err(Error::validation(
                "chain.burn_in",
                format!("must be below total_steps ({})", self.total_steps),
            ));
        }
        if self.thinning == 0 {
            return Err(Error::validation("chain.thinning", "must be positive"));
        }
        let (lo, hi) = self.target_acceptance;
        if !(0.0 < lo && lo <= hi && hi < 1.0) {
            return Err(Error::validation(
                "chain.target_acceptance",
                format!("need 0 < lo <= hi < 1, got ({lo}, {hi})"),
            ));
        }
        if !(self.initial_step_size > 0.0 && self.initial_step_size.is_finite()) {
            return Err(Error::validation("chain.initial_step_size", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorChain {
    /// Negativities of the retained (post-burn-in, thinned) states.
    pub samples: Vec<NegativityPair>,
    /// Step index of each retained sample.
    pub sample_steps: Vec<usize>,
    /// Log-likelihood of each retained sample.
    pub log_likelihood_trace: Vec<f64>,
    /// Accepted fraction of post-burn-in proposals.
    pub acceptance_rate: f64,
    /// Frozen step size of each move kind.
    pub step_sizes: Vec<(MoveKind, f64)>,
    pub initial_log_likelihood: f64,
    /// `(step_index, kind, new_step_size)` for every adaptation event.
    pub adaptations: Vec<(usize, MoveKind, f64)>,
}

impl PosteriorChain {
    /// Frozen step size of the first move kind.
    pub fn final_step_size(&self) -> f64 {
        self.step_sizes[0].1
    }
}

/// One family of proposals, each adapted with its own step size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    GhEntries,
    ZSpectrum,
    ZBasis,
    MixingWeight,
}

impl MoveKind {
    /// Move kinds used for `spec`, in a fixed order.
    pub fn for_prior(spec: &PriorSpec) -> Vec<MoveKind> {
        let mut kinds = match spec.kind {
            PriorKind::Gh => vec![MoveKind::GhEntries],
            PriorKind::Z => vec![MoveKind::ZSpectrum, MoveKind::ZBasis],
        };
        if spec.mixed {
            kinds.push(MoveKind::MixingWeight);
        }
        kinds
    }

    fn initial_step(self, base: f64, dim: usize) -> f64 {
        match self {
            MoveKind::ZSpectrum => base / dim as f64,
            _ => base,
        }
    }
}

/// Multiplicative step-size update from the accept/reject history of the
/// last adaptation window.
pub fn adapt_step_size(history: &[bool], step_size: f64, target: (f64, f64)) -> f64 {
    if history.is_empty() {
        return step_size;
    }
    let rate = history.iter().filter(|&&a| a).count() as f64 / history.len() as f64;
    if rate > target.1 {
        step_size * 1.1
    } else if rate < target.0 {
        step_size * 0.9
    } else {
        step_size
    }
}

/// Metropolis acceptance probability `min(1, L'/L)` from log-likelihoods.
pub fn acceptance_probability(current: f64, proposed: f64) -> f64 {
    if proposed == f64::NEG_INFINITY {
        return 0.0;
    }
    if current == f64::NEG_INFINITY {
        return 1.0;
    }
    (proposed - current).exp().min(1.0)
}

/// Reflect `x` into `[lo, hi]`.
fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    let y = (x - lo).rem_euclid(2.0 * width);
    lo + if y > width { 2.0 * width - y } else { y }
}

#[derive(Clone, Debug)]
enum BasePoint {
    Gh(CMatrix),
    Z { spectrum: Vec<f64>, basis: CMatrix },
}

#[derive(Clone, Debug)]
struct WalkPoint {
    base: BasePoint,
    mix_u: Option<f64>,
}

impl WalkPoint {
    fn from_prior(spec: &PriorSpec, rng: &mut Rng, dim: usize) -> Self {
        let base = match spec.kind {
            PriorKind::Gh => BasePoint::Gh(sample_gh_params(rng, dim)),
            PriorKind::Z => BasePoint::Z {
                spectrum: sample_simplex(rng, dim),
                basis: haar_unitary(rng, dim),
            },
        };
        let mix_u = spec.mixed.then(|| rng.random::<f64>());
        WalkPoint { base, mix_u }
    }

    fn density(&self, beta: f64) -> CMatrix {
        let base = match &self.base {
            BasePoint::Gh(h) => gh_matrix(h),
            BasePoint::Z { spectrum, basis } => z_matrix(spectrum, basis),
        };
        match self.mix_u {
            Some(u) => mixed_matrix(&base, u.powf(beta)),
            None => base,
        }
    }

    /// Symmetric proposal of the given kind; `None` when it leaves the
    /// parameter domain.
    fn propose(&self, rng: &mut Rng, kind: MoveKind, step: f64) -> Option<WalkPoint> {
        let mut next = self.clone();
        match (kind, &mut next.base) {
            (MoveKind::GhEntries, BasePoint::Gh(h)) => {
                for z in h.iter_mut() {
                    let dr: f64 = StandardNormal.sample(rng);
                    let di: f64 = StandardNormal.sample(rng);
                    *z = C64::new(
                        reflect(z.re + step * dr, -1.0, 1.0),
                        reflect(z.im + step * di, -1.0, 1.0),
                    );
                }
            }
            (MoveKind::ZSpectrum, BasePoint::Z { spectrum, .. }) => {
                let d = spectrum.len();
                let kicks: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let kick_mean = kicks.iter().sum::<f64>() / d as f64;
                for (e, k) in spectrum.iter_mut().zip(&kicks) {
                    *e += step * (k - kick_mean);
                }
                if spectrum.iter().any(|&e| e < 0.0) {
                    return None;
                }
                // re-impose the unit sum against drift from rounding
                let total: f64 = spectrum.iter().sum();
                spectrum.iter_mut().for_each(|e| *e /= total);
            }
            (MoveKind::ZBasis, BasePoint::Z { basis, .. }) => {
                *basis = unitary_kick(rng, basis.nrows(), step) * &*basis;
            }
            (MoveKind::MixingWeight, _) => {
                let u = next.mix_u.as_mut()?;
                let du: f64 = StandardNormal.sample(rng);
                *u = reflect(*u + step * du, 0.0, 1.0);
            }
            _ => unreachable!("move kind does not match the prior"),
        }
        Some(next)
    }
}

/// `exp(i s G)` with `G` a GUE matrix normalized so its spectrum is O(1).
fn unitary_kick(rng: &mut Rng, dim: usize, step: f64) -> CMatrix {
    let a = ginibre(rng, dim);
    let g = (&a + a.adjoint()).unscale(2.0 * (dim as f64).sqrt());
    let eig = nalgebra::SymmetricEigen::new(g);
    let phases = eig.eigenvalues.map(|l| C64::from_polar(1.0, step * l));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

/// Step size kept after burn-in: the geometric mean of the adapted sizes
/// over the second half of burn-in, which smooths out window-to-window noise
/// in the acceptance estimate.
fn frozen_step_size(adapted: &[(usize, f64)], burn_in: usize, current: f64) -> f64 {
    let late: Vec<f64> = adapted
        .iter()
        .filter(|&&(i, _)| 2 * i >= burn_in)
        .map(|&(_, s)| s.ln())
        .collect();
    if late.is_empty() {
        current
    } else {
        (late.iter().sum::<f64>() / late.len() as f64).exp()
    }
}

/// Run one Metropolis chain targeting the posterior of `prior` given `record`.
pub fn mh_chain(
    prior: &PriorSpec,
    record: &MeasurementRecord,
    povm: &SicPovm,
    config: &ChainConfig,
) -> Result<PosteriorChain> {
    check_record(record, povm)?;
    config.validate()?;
    prior.validate()?;
    let n = povm.n_qubits();
    let dim = 1usize << n;
    let beta = prior.beta();
    let counts = record.counts();
    let mut rng = rng_from_seed(config.seed);

    let loglik = |m: &CMatrix| log_likelihood_of_probs(&povm.probabilities_of(m), counts).value();

    let mut current = WalkPoint::from_prior(prior, &mut rng, dim);
    let mut current_rho = current.density(beta);
    let mut current_ll = loglik(&current_rho);
    let initial_log_likelihood = current_ll;

    let kinds = MoveKind::for_prior(prior);
    let mut steps: Vec<f64> = kinds
        .iter()
        .map(|k| k.initial_step(config.initial_step_size, dim))
        .collect();
    let mut windows: Vec<Vec<bool>> = vec![Vec::with_capacity(ADAPT_INTERVAL); kinds.len()];
    let mut adapted: Vec<Vec<(usize, f64)>> = vec![Vec::new(); kinds.len()];
    let mut adaptations = Vec::new();
    let mut post_accepted = 0usize;
    let mut post_total = 0usize;
    let mut samples = Vec::new();
    let mut sample_steps = Vec::new();
    let mut log_likelihood_trace = Vec::new();

    for i in 0..config.total_steps {
        let k = if kinds.len() == 1 { 0 } else { rng.random_range(0..kinds.len()) };
        let mut accepted = false;
        if let Some(candidate) = current.propose(&mut rng, kinds[k], steps[k]) {
            let rho = candidate.density(beta);
            let ll = loglik(&rho);
            let p_accept = acceptance_probability(current_ll, ll);
            if p_accept >= 1.0 || (p_accept > 0.0 && rng.random::<f64>() < p_accept) {
                current = candidate;
                current_rho = rho;
                current_ll = ll;
                accepted = true;
            }
        }

        if i < config.burn_in {
            windows[k].push(accepted);
            if windows[k].len() == ADAPT_INTERVAL {
                steps[k] = adapt_step_size(&windows[k], steps[k], config.target_acceptance);
                adapted[k].push((i, steps[k]));
                adaptations.push((i, kinds[k], steps[k]));
                windows[k].clear();
            }
            if i + 1 == config.burn_in {
                for (j, kind) in kinds.iter().enumerate() {
                    steps[j] = frozen_step_size(&adapted[j], config.burn_in, steps[j]);
                    adaptations.push((i, *kind, steps[j]));
                }
            }
            continue;
        }

        post_total += 1;
        post_accepted += usize::from(accepted);
        if (i - config.burn_in) % config.thinning == 0 {
            let state = DensityMatrix::from_psd_unchecked(n, current_rho.clone());
            samples.push(negativity_pair(&state)?);
            sample_steps.push(i);
            log_likelihood_trace.push(current_ll);
        }
    }

    if post_accepted == 0 {
        return Err(Error::Diagnostic(format!(
            "no proposal accepted after burn-in (step sizes {steps:?})"
        )));
    }

    Ok(PosteriorChain {
        samples,
        sample_steps,
        log_likelihood_trace,
        acceptance_rate: post_accepted as f64 / post_total as f64,
        step_sizes: kinds.into_iter().zip(steps).collect(),
        initial_log_likelihood,
        adaptations,
    })
}

/// Sidecar metadata written next to a chain CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMetadata {
    pub config: ChainConfig,
    pub prior: PriorSpec,
    pub total_m: u64,
    pub n_qubits: usize,
    pub acceptance_rate: f64,
    pub step_sizes: Vec<(MoveKind, f64)>,
    pub n_samples: usize,
}

impl PosteriorChain {
    pub fn metadata(
        &self,
        config: &ChainConfig,
        prior: &PriorSpec,
        record: &MeasurementRecord,
    ) -> ChainMetadata {
        ChainMetadata {
            config: config.clone(),
            prior: *prior,
            total_m: record.total_m(),
            n_qubits: record.n_qubits(),
            acceptance_rate: self.acceptance_rate,
            step_sizes: self.step_sizes.clone(),
            n_samples: self.samples.len(),
        }
    }

    /// Rows `(step_index, n1, n2, log_likelihood)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step_index", "n1", "n2", "log_likelihood"])?;
        for ((step, pair), ll) in self
            .sample_steps
            .iter()
            .zip(&self.samples)
            .zip(&self.log_likelihood_trace)
        {
            w.write_record([
                step.to_string(),
                pair.n1.to_string(),
                pair.n2.to_string(),
                ll.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One row of a chain CSV.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
pub struct ChainRow {
    pub step_index: usize,
    pub n1: f64,
    pub n2: f64,
    pub log_likelihood: f64,
}

pub fn read_chain_csv<R: BufRead>(input: R) -> Result<Vec<ChainRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let rows = reader.deserialize().collect::<std::result::Result<Vec<ChainRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::w_noise_state;
    use crate::povm::simulate_counts;
    use crate::stats::{ks_critical_value, ks_two_sample, mean, sample_std};

    #[test]
    fn acceptance_probability_examples() {
        assert!((acceptance_probability(0.0, 0.7f64.ln()) - 0.7).abs() < 1e-12);
        assert_eq!(acceptance_probability(-5.0, -1.0), 1.0);
        assert_eq!(acceptance_probability(-5.0, -5.0), 1.0);
        assert_eq!(acceptance_probability(-5.0, f64::NEG_INFINITY), 0.0);
        assert_eq!(acceptance_probability(f64::NEG_INFINITY, -1e9), 1.0);
    }

    #[test]
    fn adapt_rule() {
        let all = vec![true; 100];
        let none = vec![false; 100];
        let mid: Vec<bool> = (0..100).map(|i| i % 8 < 3).collect(); // 0.375
        assert!(adapt_step_size(&all, 0.1, (0.35, 0.40)) > 0.1);
        assert!(adapt_step_size(&none, 0.1, (0.35, 0.40)) < 0.1);
        assert_eq!(adapt_step_size(&mid, 0.1, (0.35, 0.40)), 0.1);
        assert_eq!(adapt_step_size(&[], 0.1, (0.35, 0.40)), 0.1);
    }

    #[test]
    fn reflection_stays_in_range() {
        for x in [-7.3, -1.5, -1.0, 0.2, 1.0, 1.7, 5.9, 123.4] {
            let y = reflect(x, -1.0, 1.0);
            assert!((-1.0..=1.0).contains(&y), "{x} -> {y}");
        }
        assert!((reflect(1.25, -1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((reflect(-0.1, 0.0, 1.0) - 0.1).abs() < 1e-15);
    }

    /// Standalone 1-D Metropolis on a standard normal with the same
    /// adaptation rule.
    #[test]
    fn adaptation_on_gaussian_target() {
        let mut rng = rng_from_seed(3);
        let target = (0.35, 0.40);
        let mut x = 0.0f64;
        let mut step = 20.0;
        let mut window = Vec::new();
        let step_fn = |x: &mut f64, step: f64, rng: &mut Rng| -> bool {
            let dx: f64 = StandardNormal.sample(rng);
            let y = *x + step * dx;
            let p = (0.5 * (*x * *x - y * y)).exp().min(1.0);
            if rng.random::<f64>() < p {
                *x = y;
                true
            } else {
                false
            }
        };
        for _ in 0..5_000 {
            window.push(step_fn(&mut x, step, &mut rng));
            if window.len() == ADAPT_INTERVAL {
                step = adapt_step_size(&window, step, target);
                window.clear();
            }
        }
        let accepted = (0..20_000).filter(|_| step_fn(&mut x, step, &mut rng)).count();
        let rate = accepted as f64 / 20_000.0;
        assert!((0.30..=0.45).contains(&rate), "rate {rate}");
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::default().validate().is_ok());
        let bad = ChainConfig {
            burn_in: 10,
            total_steps: 10,
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ChainConfig {
            target_acceptance: (0.5, 0.4),
            ..ChainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mismatched_record_is_error() {
        let povm = SicPovm::new(2).unwrap();
        let record = MeasurementRecord::empty(3);
        let err = mh_chain(&PriorSpec::pure(PriorKind::Gh), &record, &povm, &ChainConfig::default());
        assert!(matches!(err, Err(Error::Argument(_))));
    }

    fn small_config(seed: u64) -> ChainConfig {
        ChainConfig {
            total_steps: 6_000,
            burn_in: 2_000,
            thinning: 5,
            seed,
            ..ChainConfig::default()
        }
    }

    #[test]
    fn chains_are_deterministic_and_freeze_step_size() {
        let povm = SicPovm::new(2).unwrap();
        let truth = w_noise_state(0.6, 2).unwrap();
        let record = simulate_counts(&truth, &povm, 1_000, &mut rng_from_seed(1)).unwrap();
        for spec in [
            PriorSpec::pure(PriorKind::Gh),
            PriorSpec::pure(PriorKind::Z),
            PriorSpec::mixed(PriorKind::Gh),
            PriorSpec::mixed(PriorKind::Z),
        ] {
            let cfg = small_config(7);
            let a = mh_chain(&spec, &record, &povm, &cfg).unwrap();
            let b = mh_chain(&spec, &record, &povm, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(a.adaptations.iter().all(|&(i, _, _)| i < cfg.burn_in));
            let kinds = MoveKind::for_prior(&spec);
            assert_eq!(a.step_sizes.len(), kinds.len());
            for (kind, size) in &a.step_sizes {
                let last = a.adaptations.iter().rev().find(|(_, k, _)| k == kind).unwrap();
                assert_eq!(last.2, *size);
            }
            assert_eq!(a.samples.len(), 800);
            assert!(a.sample_steps.iter().all(|&s| s >= cfg.burn_in));
            assert!(mean(&a.log_likelihood_trace) > a.initial_log_likelihood);
        }
    }

    #[test]
    fn empty_record_reproduces_gh_prior() {
        let povm = SicPovm::new(2).unwrap();
        let spec = PriorSpec::pure(PriorKind::Gh);
        let cfg = ChainConfig {
            total_steps: 21_000,
            burn_in: 1_000,
            thinning: 10,
            seed: 5,
            ..ChainConfig::default()
        };
        let chain = mh_chain(&spec, &MeasurementRecord::empty(2), &povm, &cfg).unwrap();
        let walked: Vec<f64> = chain.samples.iter().map(|p| p.n1).collect();
        let mut rng = rng_from_seed(99);
        let direct: Vec<f64> = (0..walked.len())
            .map(|_| negativity_pair(&crate::priors::sample_gh(&mut rng, 2)).unwrap().n1)
            .collect();
        let d = ks_two_sample(&walked, &direct);
        assert!(d < ks_critical_value(0.01, walked.len(), direct.len()), "KS {d}");
    }

    #[test]
    fn posterior_contracts_with_more_data() {
        let povm = SicPovm::new(2).unwrap();
        let truth = w_noise_state(0.6, 2).unwrap();
        let spread = |m: u64| {
            let record = simulate_counts(&truth, &povm, m, &mut rng_from_seed(m)).unwrap();
            let cfg = ChainConfig {
                total_steps: 20_000,
                burn_in: 5_000,
                thinning: 5,
                seed: 11,
                ..ChainConfig::default()
            };
            let chain = mh_chain(&PriorSpec::pure(PriorKind::Gh), &record, &povm, &cfg).unwrap();
            sample_std(&chain.samples.iter().map(|p| p.n1).collect::<Vec<_>>())
        };
        assert!(spread(100_000) < spread(1_000));
    }

    #[test]
    fn chain_csv_roundtrip() {
        let povm = SicPovm::new(2).unwrap();
        let record = simulate_counts(&w_noise_state(0.6, 2).unwrap(), &povm, 200, &mut rng_from_seed(2)).unwrap();
        let cfg = ChainConfig {
            total_steps: 500,
            burn_in: 100,
            thinning: 10,
            ..ChainConfig::default()
        };
        let chain = mh_chain(&PriorSpec::pure(PriorKind::Z), &record, &povm, &cfg).unwrap();
        let mut buf = Vec::new();
        chain.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"step_index,n1,n2,log_likelihood\n100,"));
        let rows = read_chain_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), chain.samples.len());
        for (row, pair) in rows.iter().zip(&chain.samples) {
            assert_eq!((row.n1, row.n2), (pair.n1, pair.n2));
        }
    }
}
