//! Tetrahedral SIC-POVM on each qubit, its tensor-product outcomes, and
//! multinomial measurement simulation.
//!
//! Outcome `k` of an `n`-qubit record is the compound element
//! `Π_{α_0} ⊗ … ⊗ Π_{α_{n-1}}` with `k = Σ_q α_q 4^q`.
//!
//! Both the forward map (state to outcome probabilities) and its inverse act
//! as a 4x4 map on every qubit axis of a length-`4^n` tensor, so neither ever
//! forms the `4^n` compound matrices.

use std::io::{BufRead, Write};
use std::path::Path;

use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::qstate::{kron_all, CMatrix, DensityMatrix, C64};
use crate::Rng;

/// Unit Bloch vectors of the tetrahedron (before the `1/sqrt(3)` factor).
pub const TETRAHEDRON: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

type Map4 = [[C64; 4]; 4];

#[derive(Clone, Debug)]
pub struct SicPovm {
    n_qubits: usize,
    elements: [CMatrix; 4],
    /// `forward[α][2a+b] = (Π_α)_{ba}`.
    forward: Map4,
    /// `inverse[2a+b][α] = 6 (Π_α)_{ab} - δ_ab`.
    inverse: Map4,
    /// Basis index -> its bits spread into base-4 digits (qubit `q` at `4^q`).
    spread: Vec<usize>,
}

/// The four single-qubit elements `Π_α = (I + v_α·σ) / 4`.
pub fn sic_qubit() -> [CMatrix; 4] {
    let s = 1.0 / 3f64.sqrt();
    TETRAHEDRON.map(|[x, y, z]| {
        let (x, y, z) = (x * s, y * s, z * s);
        CMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0 + z, 0.0),
                C64::new(x, -y),
                C64::new(x, y),
                C64::new(1.0 - z, 0.0),
            ],
        )
        .unscale(4.0)
    })
}

impl SicPovm {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 8 {
            return Err(Error::arg(format!("unsupported qubit count {n_qubits}")));
        }
        let elements = sic_qubit();
        let zero = C64::new(0.0, 0.0);
        let mut forward = [[zero; 4]; 4];
        let mut inverse = [[zero; 4]; 4];
        for (alpha, el) in elements.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    forward[alpha][2 * a + b] = el[(b, a)];
                    let delta = if a == b { 1.0 } else { 0.0 };
                    inverse[2 * a + b][alpha] = el[(a, b)] * 6.0 - C64::new(delta, 0.0);
                }
            }
        }
        let d = 1usize << n_qubits;
        let spread = (0..d)
            .map(|i| {
                (0..n_qubits)
                    .map(|q| ((i >> (n_qubits - 1 - q)) & 1) << (2 * q))
                    .sum()
            })
            .collect();
        Ok(SicPovm {
            n_qubits,
            elements,
            forward,
            inverse,
            spread,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_outcomes(&self) -> usize {
        1 << (2 * self.n_qubits)
    }

    pub fn single_qubit_elements(&self) -> &[CMatrix; 4] {
        &self.elements
    }

    /// Per-qubit outcome digits of a flat index.
    pub fn outcome_digits(&self, flat: usize) -> Vec<usize> {
        (0..self.n_qubits).map(|q| (flat >> (2 * q)) & 3).collect()
    }

    /// The compound element `M_k` as a dense matrix.
    pub fn compound_element(&self, flat: usize) -> CMatrix {
        let factors: Vec<CMatrix> = self
            .outcome_digits(flat)
            .into_iter()
            .map(|a| self.elements[a].clone())
            .collect();
        kron_all(&factors).expect("nonempty square factors")
    }

    /// `p_k = Tr(rho M_k)` for a raw matrix of the right size. Small negative
    /// values from rounding are clamped to zero.
    pub fn probabilities_of(&self, rho: &CMatrix) -> Vec<f64> {
        let d = rho.nrows();
        let mut tensor = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                tensor[2 * self.spread[i] + self.spread[j]] = rho[(i, j)];
            }
        }
        for axis in 0..self.n_qubits {
            apply_axis(&mut tensor, axis, &self.forward);
        }
        tensor.into_iter().map(|z| z.re.max(0.0)).collect()
    }

    /// `Σ_k q_k M_k` with `q = (6I - J)^{⊗n} f`: the state whose outcome
    /// probabilities equal `freqs`.
    pub fn invert_frequencies(&self, freqs: &[f64]) -> CMatrix {
        assert_eq!(freqs.len(), self.n_outcomes());
        let mut tensor: Vec<C64> = freqs.iter().map(|&f| C64::new(f, 0.0)).collect();
        for axis in 0..self.n_qubits {
            apply_axis(&mut tensor, axis, &self.inverse);
        }
        let d = 1usize << self.n_qubits;
        CMatrix::from_fn(d, d, |i, j| tensor[2 * self.spread[i] + self.spread[j]])
    }
}

fn apply_axis(data: &mut [C64], axis: usize, map: &Map4) {
    let stride = 1usize << (2 * axis);
    let zero = C64::new(0.0, 0.0);
    for block in (0..data.len()).step_by(4 * stride) {
        for off in 0..stride {
            let base = block + off;
            let input = [
                data[base],
                data[base + stride],
                data[base + 2 * stride],
                data[base + 3 * stride],
            ];
            for (row, coeffs) in map.iter().enumerate() {
                data[base + row * stride] = coeffs
                    .iter()
                    .zip(&input)
                    .fold(zero, |acc, (c, x)| acc + c * x);
            }
        }
    }
}

pub fn outcome_probabilities(rho: &DensityMatrix, povm: &SicPovm) -> Result<Vec<f64>> {
    if rho.n_qubits() != povm.n_qubits() {
        return Err(Error::arg(format!(
            "{}-qubit state measured with a {}-qubit POVM",
            rho.n_qubits(),
            povm.n_qubits()
        )));
    }
    Ok(povm.probabilities_of(rho.matrix()))
}

/// Outcome counts over the `4^n` compound outcomes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementRecord {
    n_qubits: usize,
    counts: Vec<u64>,
    total_m: u64,
}

impl MeasurementRecord {
    pub fn new(n_qubits: usize, counts: Vec<u64>) -> Result<Self> {
        let expected = 1usize << (2 * n_qubits);
        if counts.len() != expected {
            return Err(Error::arg(format!(
                "record for {n_qubits} qubits needs {expected} counts, got {}",
                counts.len()
            )));
        }
        let total_m = counts.iter().sum();
        Ok(MeasurementRecord {
            n_qubits,
            counts,
            total_m,
        })
    }

    /// Record with no shots; its likelihood is flat.
    pub fn empty(n_qubits: usize) -> Self {
        MeasurementRecord {
            n_qubits,
            counts: vec![0; 1 << (2 * n_qubits)],
            total_m: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_m(&self) -> u64 {
        self.total_m
    }

    /// `counts / total_m`; errors on an empty record.
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        if self.total_m == 0 {
            return Err(Error::arg("record has no shots"));
        }
        let m = self.total_m as f64;
        Ok(self.counts.iter().map(|&c| c as f64 / m).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(["n_qubits", "total_m"])?;
        w.write_record([self.n_qubits.to_string(), self.total_m.to_string()])?;
        w.write_record(["flat_index", "count"])?;
        for (k, c) in self.counts.iter().enumerate() {
            w.write_record([k.to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R, origin: &str) -> Result<Self> {
        let bad = |message: String| Error::Format {
            path: origin.to_string(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(input);
        let rows: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
        if rows.len() < 3 || &rows[0][0] != "n_qubits" || &rows[2][0] != "flat_index" {
            return Err(bad("missing record header".into()));
        }
        let parse = |s: &str| -> Result<u64> {
            s.trim()
                .parse::<u64>()
                .map_err(|e| bad(format!("bad integer `{s}`: {e}")))
        };
        let n_qubits = parse(&rows[1][0])? as usize;
        let total_m = parse(&rows[1][1])?;
        if n_qubits == 0 || n_qubits > 8 {
            return Err(bad(format!("unsupported n_qubits {n_qubits}")));
        }
        let mut counts = vec![0u64; 1 << (2 * n_qubits)];
        for row in &rows[3..] {
            let k = parse(&row[0])? as usize;
            if k >= counts.len() {
                return Err(bad(format!("outcome index {k} out of range")));
            }
            counts[k] = parse(&row[1])?;
        }
        let record = MeasurementRecord::new(n_qubits, counts)?;
        if record.total_m != total_m {
            return Err(bad(format!(
                "header total_m {total_m} != sum of counts {}",
                record.total_m
            )));
        }
        Ok(record)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file), &path.display().to_string())
    }
}

/// Multinomial draw over the given cell probabilities via sequential
/// conditional binomials.
pub fn multinomial(probs: &[f64], m: u64, rng: &mut Rng) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = m;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = remaining;
            break;
        }
        let cond = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, cond)
            .expect("conditional probability in [0, 1]")
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    counts
}

pub fn simulate_counts(
    rho: &DensityMatrix,
    povm: &SicPovm,
    m: u64,
    rng: &mut Rng,
) -> Result<MeasurementRecord> {
    if m == 0 {
        return Err(Error::arg("number of shots must be positive"));
    }
    let probs = outcome_probabilities(rho, povm)?;
    MeasurementRecord::new(rho.n_qubits(), multinomial(&probs, m, rng))
}
