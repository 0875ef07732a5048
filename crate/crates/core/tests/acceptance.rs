//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails. The paper-scale run (criterion 8) is skipped
//! unless `ENTCRIT_EXTENDED=1` is set.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use entcrit::criteria::{
    criterion_1, criterion_1_5, fit_power_law, summarize, sufficient_m, Criterion,
    CriterionReport, Measure, PosteriorSummary, Source,
};
use entcrit::entanglement::{
    negativity_pair, smolin_state, w_noise_state, w_separability_threshold,
};
use entcrit::experiment::{run_experiment, ExperimentConfig, TrueState};
use entcrit::povm::{outcome_probabilities, sic_qubit, simulate_counts, MeasurementRecord, SicPovm};
use entcrit::priors::{sample_gh, sample_prior, PriorKind, PriorSpec};
use entcrit::qstate::CMatrix;
use entcrit::sampler::{mh_chain, ChainConfig};
use entcrit::stats::{ks_critical_value, ks_two_sample, mean};
use entcrit::rng_from_seed;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn sic_algebra() -> Outcome {
    let els = sic_qubit();
    let sum = els.iter().fold(CMatrix::zeros(2, 2), |acc, e| acc + e);
    let norm_err = max_abs(&(sum - CMatrix::identity(2, 2)));
    let mut overlap_err = 0.0f64;
    for a in 0..4 {
        for b in 0..4 {
            let want = if a == b { 1.0 / 4.0 } else { 1.0 / 12.0 };
            let t = (&els[a] * &els[b]).trace();
            overlap_err = overlap_err.max((t.re - want).abs()).max(t.im.abs());
        }
    }
    let povm = SicPovm::new(2).map_err(|e| e.to_string())?;
    let compound = (0..16).fold(CMatrix::zeros(4, 4), |acc, k| acc + povm.compound_element(k));
    let compound_err = max_abs(&(compound - CMatrix::identity(4, 4)));
    check(
        norm_err <= 1e-12 && overlap_err <= 1e-12 && compound_err <= 1e-12,
        format!("sum err {norm_err:.1e}, overlap err {overlap_err:.1e}, 2-qubit sum err {compound_err:.1e}"),
    )
}

fn inversion_round_trip() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=4 {
        let povm = SicPovm::new(n).map_err(|e| e.to_string())?;
        let mut rng = rng_from_seed(100 + n as u64);
        for _ in 0..100 {
            let rho = sample_gh(&mut rng, n);
            let probs = outcome_probabilities(&rho, &povm).map_err(|e| e.to_string())?;
            let back = povm.invert_frequencies(&probs);
            worst = worst.max(max_abs(&(back - rho.matrix())));
        }
    }
    check(worst <= 1e-10, format!("max entry error {worst:.1e} over 300 GH states"))
}

fn golden_negativities() -> Outcome {
    let e = |e: entcrit::Error| e.to_string();
    let smolin = negativity_pair(&smolin_state()).map_err(e)?;
    let w = negativity_pair(&w_noise_state(0.8, 4).map_err(e)?).map_err(e)?;
    let q1 = w_separability_threshold(4, |p| p.n1, 1e-7).map_err(e)?;
    let q2 = w_separability_threshold(4, |p| p.n2, 1e-7).map_err(e)?;
    check(
        smolin.n1.abs() <= 1e-10
            && (smolin.n2 - 0.5).abs() <= 1e-10
            && (w.n1 - 0.3875).abs() <= 5e-4
            && (w.n2 - 0.3339).abs() <= 5e-4
            && (q1 - 0.1112).abs() <= 5e-4
            && (q2 - 0.1262).abs() <= 5e-4,
        format!(
            "Smolin ({:.2e}, {:.12}), rho(0.8) ({:.5}, {:.5}), thresholds {:.5} / {:.5}",
            smolin.n1, smolin.n2, w.n1, w.n2, q1, q2
        ),
    )
}

fn zero_data_sampler() -> Outcome {
    const COUNT: usize = 5_000;
    let povm = SicPovm::new(2).map_err(|e| e.to_string())?;
    let record = MeasurementRecord::empty(2);
    let critical = ks_critical_value(0.01, COUNT, COUNT);
    let mut details = Vec::new();
    let mut ok = true;
    for (kind, seed) in [(PriorKind::Gh, 11), (PriorKind::Z, 12)] {
        let spec = PriorSpec::pure(kind);
        let thinning = 100;
        let cfg = ChainConfig {
            total_steps: 10_000 + COUNT * thinning,
            burn_in: 10_000,
            thinning,
            seed,
            ..ChainConfig::default()
        };
        let chain = mh_chain(&spec, &record, &povm, &cfg).map_err(|e| e.to_string())?;
        let from_chain: Vec<f64> = chain.samples.iter().map(|p| p.n1).collect();
        let mut rng = rng_from_seed(seed + 1000);
        let direct: Vec<f64> = (0..COUNT)
            .map(|_| negativity_pair(&sample_prior(&spec, &mut rng, 2)).map(|p| p.n1))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let d = ks_two_sample(&from_chain, &direct);
        ok &= from_chain.len() == COUNT && d < critical;
        details.push(format!("{kind} D = {d:.4}"));
    }
    check(ok, format!("{} (critical {critical:.4})", details.join(", ")))
}

struct ConsistencyRun {
    worst_z_score: f64,
    exponents: Vec<(String, f64)>,
    acceptance: (f64, f64),
}

fn posterior_consistency_runs() -> Result<ConsistencyRun, String> {
    let e = |e: entcrit::Error| e.to_string();
    let n = 2;
    let truth_state = w_noise_state(0.6, n).map_err(e)?;
    let truth = negativity_pair(&truth_state).map_err(e)?;
    let povm = SicPovm::new(n).map_err(e)?;
    let ms = [1_000u64, 10_000, 100_000];
    let priors = [PriorSpec::pure(PriorKind::Z), PriorSpec::pure(PriorKind::Gh)];
    let mut worst_z_score = 0.0f64;
    let mut acceptance = (f64::INFINITY, f64::NEG_INFINITY);
    // mean error bar per (prior, measure) for each M
    let mut errs = vec![vec![Vec::new(); 2]; priors.len()];
    for &m in &ms {
        let mut per = vec![vec![Vec::new(); 2]; priors.len()];
        for seed in 0..10u64 {
            let mut rng = rng_from_seed(1_000 * m + seed);
            let record = simulate_counts(&truth_state, &povm, m, &mut rng).map_err(e)?;
            for (pi, spec) in priors.iter().enumerate() {
                let cfg = ChainConfig {
                    total_steps: 30_000,
                    burn_in: 10_000,
                    thinning: 10,
                    seed: 7 * seed + pi as u64,
                    ..ChainConfig::default()
                };
                let chain = mh_chain(spec, &record, &povm, &cfg).map_err(e)?;
                acceptance.0 = acceptance.0.min(chain.acceptance_rate);
                acceptance.1 = acceptance.1.max(chain.acceptance_rate);
                let s = summarize(&chain.samples, Source::from(spec.kind), m).map_err(e)?;
                for (mi, measure) in Measure::ALL.into_iter().enumerate() {
                    let z = (s.mean(measure) - measure.of(&truth)).abs() / s.err(measure);
                    worst_z_score = worst_z_score.max(z);
                    per[pi][mi].push(s.err(measure));
                }
            }
        }
        for pi in 0..priors.len() {
            for mi in 0..2 {
                errs[pi][mi].push((m as f64, mean(&per[pi][mi])));
            }
        }
    }
    let mut exponents = Vec::new();
    for (pi, spec) in priors.iter().enumerate() {
        for (mi, measure) in Measure::ALL.into_iter().enumerate() {
            let fit = fit_power_law(&errs[pi][mi]).map_err(e)?;
            exponents.push((format!("{}/{measure:?}", spec.kind), fit.exponent));
        }
    }
    Ok(ConsistencyRun {
        worst_z_score,
        exponents,
        acceptance,
    })
}

fn posterior_consistency(run: &ConsistencyRun) -> Outcome {
    let exps_ok = run.exponents.iter().all(|(_, a)| (0.35..=0.65).contains(a));
    let exps: Vec<String> = run.exponents.iter().map(|(k, a)| format!("{k} {a:.3}")).collect();
    check(
        run.worst_z_score < 3.0 && exps_ok,
        format!(
            "worst |mean - truth| / sd = {:.2} over 60 chains; dN exponents {}",
            run.worst_z_score,
            exps.join(", ")
        ),
    )
}

fn acceptance_control(run: &ConsistencyRun) -> Outcome {
    let (lo, hi) = run.acceptance;
    check(
        lo >= 0.30 && hi <= 0.45,
        format!("post-burn-in acceptance in [{lo:.3}, {hi:.3}] over 60 chains"),
    )
}

fn summary(mean_n1: f64, err_n1: f64, source: Source, m: u64) -> PosteriorSummary {
    PosteriorSummary {
        mean_n1,
        mean_n2: mean_n1,
        err_n1,
        err_n2: err_n1,
        source,
        m,
    }
}

fn criteria_machinery() -> Outcome {
    let mut failures = Vec::new();
    let mut expect = |name: &str, cond: bool| {
        if !cond {
            failures.push(name.to_string());
        }
    };
    let z = summary(0.3, 0.05, Source::Z, 1000);
    let gh = summary(0.3, 0.05, Source::Gh, 1000);
    let r = criterion_1(&z, &gh, Measure::N1).map_err(|e| e.to_string())?;
    expect("identical summaries", r.gap == 0.0 && r.satisfied);

    let z = summary(0.5, 0.05, Source::Z, 1000);
    let gh = summary(0.3, 0.05, Source::Gh, 1000);
    let r = criterion_1(&z, &gh, Measure::N1).map_err(|e| e.to_string())?;
    expect(
        "gap 0.2 budget 0.1",
        (r.gap - 0.2).abs() < 1e-15 && (r.budget - 0.1).abs() < 1e-15 && !r.satisfied,
    );
    expect(
        "mismatched m",
        criterion_1(&z, &summary(0.3, 0.05, Source::Gh, 10), Measure::N1).is_err(),
    );

    let p = summary(0.2, 0.01, Source::Gh, 1000);
    let mle = summary(0.2, 0.01, Source::MleBootstrap, 1000);
    let r = criterion_1_5(&p, &mle, Measure::N2).map_err(|e| e.to_string())?;
    expect("1.5 identical summaries", r.satisfied);
    let p = summary(0.2, 0.0, Source::Z, 1000);
    let mle = summary(0.2, 0.0, Source::MleBootstrap, 1000);
    let r = criterion_1_5(&p, &mle, Measure::N1).map_err(|e| e.to_string())?;
    expect("1.5 zero gap zero budget", r.gap == 0.0 && r.budget == 0.0 && !r.satisfied);

    let series = |sat: [bool; 4]| -> Vec<CriterionReport> {
        [1_000u64, 10_000, 100_000, 1_000_000]
            .iter()
            .zip(sat)
            .map(|(&m, s)| {
                let gap = if s { 0.0 } else { 1.0 };
                CriterionReport::new(m, gap, 0.5, Criterion::C1, Measure::N1)
            })
            .collect()
    };
    expect("all satisfied", sufficient_m(&series([true; 4])) == Some(1_000));
    expect("none satisfied", sufficient_m(&series([false; 4])).is_none());
    expect(
        "satisfied at 1e5 and 1e6",
        sufficient_m(&series([false, false, true, true])) == Some(100_000),
    );
    expect(
        "satisfied then lost",
        sufficient_m(&series([true, true, false, true])) == Some(1_000_000),
    );
    check(
        failures.is_empty(),
        if failures.is_empty() {
            "all unit examples and sufficient-M thresholds hold".into()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn paper_scale() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        true_state: TrueState::WNoise { q: 0.6 },
        n_qubits: 4,
        m_values: vec![10_000, 100_000, 1_000_000],
        chain: ChainConfig {
            total_steps: 100_000,
            burn_in: 10_000,
            thinning: 10,
            ..ChainConfig::default()
        },
        trials_per_m: 10,
        seed: 2010,
        output_dir: dir.path().to_path_buf(),
        ..ExperimentConfig::default()
    };
    let report = run_experiment(&cfg, 0).map_err(|e| e.to_string())?;
    let threshold = report.criterion_1_sufficient_m;
    let gap_exponent = |measure: Measure| {
        report
            .fits
            .iter()
            .find(|f| f.quantity == "gap" && f.comparison == "z~gh" && f.measure == measure)
            .and_then(|f| f.fit.as_ref())
            .map(|f| f.exponent)
    };
    // mean of the Z and GH error-bar exponents
    let err_exponent = |measure: Measure| {
        let exps: Vec<f64> = report
            .fits
            .iter()
            .filter(|f| f.quantity == "err" && f.measure == measure && f.comparison != "mle")
            .filter_map(|f| f.fit.as_ref().map(|f| f.exponent))
            .collect();
        (exps.len() == 2).then(|| mean(&exps))
    };
    let (a1, a2) = (gap_exponent(Measure::N1), gap_exponent(Measure::N2));
    let (e1, e2) = (err_exponent(Measure::N1), err_exponent(Measure::N2));
    let within = |a: Option<f64>, want: f64| a.is_some_and(|a| (a - want).abs() <= 0.2);
    let separated = |a: Option<f64>, e: Option<f64>| matches!((a, e), (Some(a), Some(e)) if a - e >= 0.1);
    let threshold_ok = threshold.is_some_and(|m| (10_000..=1_000_000).contains(&m));
    check(
        threshold_ok && within(a1, 0.81) && within(a2, 0.66) && separated(a1, e1) && separated(a2, e2),
        format!(
            "criterion 1 sufficient M {threshold:?}; gap exponents N1 {a1:.3?} N2 {a2:.3?}; \
             dN exponents N1 {e1:.3?} N2 {e2:.3?}"
        ),
    )
}

fn run_cli(out_dir: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_entcrit"))
        .args(args)
        .current_dir(out_dir)
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "entcrit {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&status.stderr)
        ))
    }
}

fn csv_files(root: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let config = r#"{
        "n_qubits": 2,
        "m_values": [100, 1000],
        "trials_per_m": 2,
        "bootstrap_resamples": 20,
        "chain": {"total_steps": 600, "burn_in": 200, "thinning": 5}
    }"#;
    let mut roots = Vec::new();
    let mut keep = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let p = dir.path();
        std::fs::write(p.join("config.json"), config).map_err(|e| e.to_string())?;
        run_cli(p, &["--seed", "9", "--output", "prior.csv", "sample-prior", "--prior", "z", "--n-qubits", "3", "--count", "50"])?;
        run_cli(p, &["--seed", "9", "--output", "record.csv", "simulate", "--n-qubits", "3", "--m", "5000"])?;
        run_cli(p, &["--seed", "9", "--output", "chain", "chain", "--record", "record.csv", "--prior", "gh", "--mixed", "--steps", "2000", "--burn-in", "500"])?;
        run_cli(p, &["--seed", "9", "--output", "mle", "mle", "--record", "record.csv", "--resamples", "20"])?;
        run_cli(p, &["--config", "config.json", "--seed", "9", "--workers", "2", "--output", "run", "run"])?;
        run_cli(p, &["--output", "run", "report"])?;
        roots.push(p.to_path_buf());
        keep.push(dir);
    }
    let files = csv_files(&roots[0]);
    if files != csv_files(&roots[1]) {
        return Err("the two runs produced different file sets".into());
    }
    let differing: Vec<String> = files
        .iter()
        .filter(|f| std::fs::read(roots[0].join(f)).ok() != std::fs::read(roots[1].join(f)).ok())
        .map(|f| f.display().to_string())
        .collect();
    check(
        differing.is_empty() && files.len() >= 10,
        if differing.is_empty() {
            format!("{} CSV files byte-identical across two runs", files.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    )
}

fn main() {
    let extended = std::env::var("ENTCRIT_EXTENDED").is_ok_and(|v| v == "1");
    let mut failed = 0;
    let mut report = |id: &str, name: &str, started: Instant, outcome: Outcome| {
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS  {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {detail} ({secs:.1}s)");
            }
        }
    };

    let t = Instant::now();
    report("1", "SIC-POVM algebra", t, sic_algebra());
    let t = Instant::now();
    report("2", "inversion round trip", t, inversion_round_trip());
    let t = Instant::now();
    report("3", "golden negativities", t, golden_negativities());
    let t = Instant::now();
    report("4", "zero-data sampler", t, zero_data_sampler());
    let t = Instant::now();
    match posterior_consistency_runs() {
        Ok(run) => {
            report("5", "posterior consistency", t, posterior_consistency(&run));
            report("6", "acceptance-rate control", t, acceptance_control(&run));
        }
        Err(e) => {
            report("5", "posterior consistency", t, Err(e.clone()));
            report("6", "acceptance-rate control", t, Err(e));
        }
    }
    let t = Instant::now();
    report("7", "criteria machinery", t, criteria_machinery());
    if extended {
        let t = Instant::now();
        report("8", "paper-scale reproduction", t, paper_scale());
    } else {
        println!("criterion 8 SKIP  paper-scale reproduction (set ENTCRIT_EXTENDED=1)");
    }
    let t = Instant::now();
    report("9", "determinism", t, determinism());

    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
