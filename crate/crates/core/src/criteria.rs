//! Posterior summaries, the two-prior and prior-vs-MLE agreement criteria,
//! and log-log power-law fits for convergence rates.

use serde::{Deserialize, Serialize};

use crate::entanglement::NegativityPair;
use crate::error::{Error, Result};
use crate::priors::PriorKind;
use crate::stats::{mean, sample_std};

/// Where a set of negativity samples came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "Z")]
    Z,
    #[serde(rename = "GH")]
    Gh,
    #[serde(rename = "MLE_BOOTSTRAP")]
    MleBootstrap,
}

impl From<PriorKind> for Source {
    fn from(kind: PriorKind) -> Self {
        match kind {
            PriorKind::Z => Source::Z,
            PriorKind::Gh => Source::Gh,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    N1,
    N2,
}

impl Measure {
    pub const ALL: [Measure; 2] = [Measure::N1, Measure::N2];

    pub fn of(self, pair: &NegativityPair) -> f64 {
        match self {
            Measure::N1 => pair.n1,
            Measure::N2 => pair.n2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Criterion {
    /// Z posterior vs GH posterior.
    C1,
    /// A prior's posterior vs the MLE bootstrap.
    #[serde(rename = "C1_5")]
    C1_5,
}

/// Sample mean and standard deviation of both negativities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mean_n1: f64,
    pub mean_n2: f64,
    pub err_n1: f64,
    pub err_n2: f64,
    pub source: Source,
    pub m: u64,
}

impl PosteriorSummary {
    pub fn mean(&self, measure: Measure) -> f64 {
        match measure {
            Measure::N1 => self.mean_n1,
            Measure::N2 => self.mean_n2,
        }
    }

    pub fn err(&self, measure: Measure) -> f64 {
        match measure {
            Measure::N1 => self.err_n1,
            Measure::N2 => self.err_n2,
        }
    }
}

pub fn summarize(samples: &[NegativityPair], source: Source, m: u64) -> Result<PosteriorSummary> {
    if samples.len() < 2 {
        return Err(Error::arg(format!(
            "need at least two samples to summarize, got {}",
            samples.len()
        )));
    }
    let n1: Vec<f64> = samples.iter().map(|p| p.n1).collect();
    let n2: Vec<f64> = samples.iter().map(|p| p.n2).collect();
    let summary = PosteriorSummary {
        mean_n1: mean(&n1),
        mean_n2: mean(&n2),
        err_n1: sample_std(&n1),
        err_n2: sample_std(&n2),
        source,
        m,
    };
    if ![summary.mean_n1, summary.mean_n2, summary.err_n1, summary.err_n2]
        .iter()
        .all(|v| v.is_finite())
    {
        return Err(Error::arg("non-finite negativity samples"));
    }
    Ok(summary)
}

/// One side-by-side comparison: `satisfied` iff `gap < budget`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub m: u64,
    pub gap: f64,
    pub budget: f64,
    pub satisfied: bool,
    pub which: Criterion,
    pub measure: Measure,
}

impl CriterionReport {
    pub fn new(m: u64, gap: f64, budget: f64, which: Criterion, measure: Measure) -> Self {
        CriterionReport {
            m,
            gap,
            budget,
            satisfied: gap < budget,
            which,
            measure,
        }
    }
}

fn compare(
    a: &PosteriorSummary,
    b: &PosteriorSummary,
    measure: Measure,
    width: f64,
    which: Criterion,
) -> Result<CriterionReport> {
    if a.m != b.m {
        return Err(Error::arg(format!(
            "summaries at different M ({} vs {})",
            a.m, b.m
        )));
    }
    let gap = (a.mean(measure) - b.mean(measure)).abs();
    let budget = width * (a.err(measure) + b.err(measure));
    Ok(CriterionReport::new(a.m, gap, budget, which, measure))
}

/// `|<N>_Z - <N>_GH| < dN_Z + dN_GH`.
pub fn criterion_1(
    sz: &PosteriorSummary,
    sgh: &PosteriorSummary,
    measure: Measure,
) -> Result<CriterionReport> {
    criterion_1_scaled(sz, sgh, measure, 1.0)
}

/// [`criterion_1`] with error bars scaled by `width`.
pub fn criterion_1_scaled(
    sz: &PosteriorSummary,
    sgh: &PosteriorSummary,
    measure: Measure,
    width: f64,
) -> Result<CriterionReport> {
    compare(sz, sgh, measure, width, Criterion::C1)
}

/// `|<N>_P - N_MLE| < dN_P + dN_MLE`.
pub fn criterion_1_5(
    sp: &PosteriorSummary,
    smle: &PosteriorSummary,
    measure: Measure,
) -> Result<CriterionReport> {
    criterion_1_5_scaled(sp, smle, measure, 1.0)
}

pub fn criterion_1_5_scaled(
    sp: &PosteriorSummary,
    smle: &PosteriorSummary,
    measure: Measure,
    width: f64,
) -> Result<CriterionReport> {
    compare(sp, smle, measure, width, Criterion::C1_5)
}

/// Smallest tested `M` from which the criterion holds at every larger tested
/// `M`. Expects reports sorted by strictly increasing `m`.
pub fn sufficient_m(series: &[CriterionReport]) -> Option<u64> {
    debug_assert!(series.windows(2).all(|w| w[0].m < w[1].m));
    series
        .iter()
        .rev()
        .take_while(|r| r.satisfied)
        .last()
        .map(|r| r.m)
}

/// `y = amplitude * m^(-exponent)` fitted by least squares in log-log space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub exponent: f64,
    /// Root-mean-square residual of `ln y`.
    pub rms_residual: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if let Some(&(m, y)) = points.iter().find(|&&(m, y)| !(m > 0.0 && y > 0.0)) {
        return Err(Error::arg(format!(
            "power-law fit needs positive m and y, got ({m}, {y})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if points.len() < 2 || sxx <= 0.0 {
        return Err(Error::arg("power-law fit needs at least two distinct m values"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(PowerLawFit {
        amplitude: intercept.exp(),
        exponent: -slope,
        rms_residual: (ss_res / points.len() as f64).sqrt(),
    })
}
