use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use entcrit::criteria::{summarize, Source};
use entcrit::entanglement::negativity_pair;
use entcrit::experiment::{
    report, run_experiment, verify_golden, write_bootstrap_csv, ExperimentConfig, ReportSummary,
    TrueState,
};
use entcrit::inference::{bootstrap_negativity, mle_estimate};
use entcrit::povm::{simulate_counts, MeasurementRecord, SicPovm};
use entcrit::priors::{sample_prior, PriorKind, PriorSpec};
use entcrit::sampler::{mh_chain, ChainConfig};
use entcrit::{rng_from_seed, Error, Result};

#[derive(Parser)]
#[command(name = "entcrit", version, about = "Bayesian entanglement estimation from simulated SIC-POVM tomography")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw states from a prior and print their negativities.
    SamplePrior(SamplePriorArgs),
    /// Simulate a SIC-POVM measurement record.
    Simulate(SimulateArgs),
    /// Run one Metropolis-Hastings chain on a record.
    Chain(ChainArgs),
    /// Maximum-likelihood estimate plus bootstrap.
    Mle(MleArgs),
    /// Run the full (M, trial, prior) sweep from a config.
    Run,
    /// Recompute criteria and fits from a finished run.
    Report,
    /// Check the golden reference values.
    Verify,
}

#[derive(Args)]
struct PriorArgs {
    /// `z` or `gh`.
    #[arg(long, default_value = "gh")]
    prior: PriorKind,
    /// Use the mixed-with-identity variant.
    #[arg(long)]
    mixed: bool,
    /// Exponent of the mixing weight (implies --mixed).
    #[arg(long)]
    beta: Option<f64>,
}

impl PriorArgs {
    fn spec(&self) -> PriorSpec {
        match self.beta {
            Some(b) => PriorSpec::mixed_with_beta(self.prior, b),
            None if self.mixed => PriorSpec::mixed(self.prior),
            None => PriorSpec::pure(self.prior),
        }
    }
}

#[derive(Args)]
struct SamplePriorArgs {
    #[command(flatten)]
    prior: PriorArgs,
    #[arg(long, default_value_t = 4)]
    n_qubits: usize,
    #[arg(long, default_value_t = 1000)]
    count: usize,
}

#[derive(Args)]
struct SimulateArgs {
    /// `w:<q>`, `smolin` or `file:<path>`.
    #[arg(long, default_value = "w:0.6")]
    state: TrueState,
    #[arg(long, default_value_t = 4)]
    n_qubits: usize,
    #[arg(long)]
    m: u64,
}

#[derive(Args)]
struct ChainArgs {
    /// Measurement record CSV.
    #[arg(long)]
    record: PathBuf,
    #[command(flatten)]
    prior: PriorArgs,
    /// Total steps, burn-in included (default from config).
    #[arg(long)]
    steps: Option<usize>,
    /// Burn-in steps (default from config).
    #[arg(long)]
    burn_in: Option<usize>,
    /// Keep every k-th post-burn-in step (default from config).
    #[arg(long)]
    thinning: Option<usize>,
}

#[derive(Args)]
struct MleArgs {
    /// Measurement record CSV.
    #[arg(long)]
    record: PathBuf,
    #[arg(long)]
    resamples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn base_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            Box::new(BufWriter::new(fs::File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn output_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli
        .output
        .clone()
        .ok_or_else(|| Error::Argument("--output <dir> is required".into()))?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let cfg = base_config(&cli)?;
    let workers = cli.workers.unwrap_or(0);
    if workers > 0 {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match &cli.command {
        Command::SamplePrior(args) => {
            let spec = args.prior.spec();
            spec.validate()?;
            let mut rng = rng_from_seed(cfg.seed);
            let mut out = csv::Writer::from_writer(open_output(cli.output.as_deref())?);
            out.write_record(["index", "n1", "n2", "purity"])?;
            for i in 0..args.count {
                let rho = sample_prior(&spec, &mut rng, args.n_qubits);
                let pair = negativity_pair(&rho)?;
                out.write_record([
                    i.to_string(),
                    pair.n1.to_string(),
                    pair.n2.to_string(),
                    rho.purity().to_string(),
                ])?;
            }
            out.flush()?;
        }
        Command::Simulate(args) => {
            let rho = args.state.build(args.n_qubits)?;
            let povm = SicPovm::new(args.n_qubits)?;
            let mut rng = rng_from_seed(cfg.seed);
            let record = simulate_counts(&rho, &povm, args.m, &mut rng)?;
            let mut out = open_output(cli.output.as_deref())?;
            record.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Chain(args) => {
            let record = MeasurementRecord::load(&args.record)?;
            let povm = SicPovm::new(record.n_qubits())?;
            let spec = args.prior.spec();
            let chain_cfg = ChainConfig {
                total_steps: args.steps.unwrap_or(cfg.chain.total_steps),
                burn_in: args.burn_in.unwrap_or(cfg.chain.burn_in),
                thinning: args.thinning.unwrap_or(cfg.chain.thinning),
                seed: cfg.seed,
                ..cfg.chain.clone()
            };
            let chain = mh_chain(&spec, &record, &povm, &chain_cfg)?;
            let dir = output_dir(&cli)?;
            let label = spec.label();
            chain.write_csv(BufWriter::new(fs::File::create(
                dir.join(format!("chain_{label}.csv")),
            )?))?;
            let meta = chain.metadata(&chain_cfg, &spec, &record);
            fs::write(
                dir.join(format!("chain_{label}.json")),
                serde_json::to_string_pretty(&meta)? + "\n",
            )?;
            let s = summarize(&chain.samples, Source::from(spec.kind), record.total_m())?;
            println!(
                "{label}: <N1> = {:.6} +- {:.6}, <N2> = {:.6} +- {:.6}, acceptance {:.3}",
                s.mean_n1, s.err_n1, s.mean_n2, s.err_n2, chain.acceptance_rate
            );
        }
        Command::Mle(args) => {
            let record = MeasurementRecord::load(&args.record)?;
            let povm = SicPovm::new(record.n_qubits())?;
            let rho = mle_estimate(&record, &povm)?;
            let point = negativity_pair(&rho)?;
            let k = args.resamples.unwrap_or(cfg.bootstrap_resamples);
            let mut rng = rng_from_seed(cfg.seed);
            let pairs = bootstrap_negativity(&rho, &povm, record.total_m(), k, &mut rng)?;
            let dir = output_dir(&cli)?;
            fs::write(dir.join("mle.json"), serde_json::to_string_pretty(&rho)? + "\n")?;
            write_bootstrap_csv(
                BufWriter::new(fs::File::create(dir.join("bootstrap.csv"))?),
                &pairs,
                &point,
            )?;
            let s = summarize(&pairs, Source::MleBootstrap, record.total_m())?;
            println!(
                "mle: N1 = {:.6} +- {:.6}, N2 = {:.6} +- {:.6}",
                point.n1, s.err_n1, point.n2, s.err_n2
            );
        }
        Command::Run => {
            let summary = run_experiment(&cfg, workers)?;
            print_report(&summary);
        }
        Command::Report => {
            let dir = cli
                .output
                .clone()
                .ok_or_else(|| Error::Argument("--output <dir> is required".into()))?;
            print_report(&report(&dir)?);
        }
        Command::Verify => {
            let checks = verify_golden()?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {:<22} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::Diagnostic(format!("{failed} golden check(s) failed")));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn print_report(summary: &ReportSummary) {
    println!(
        "{:>10}  {:<6} {:<14} {:<3} {:>12} {:>12}  ok",
        "M", "crit", "comparison", "N", "gap", "budget"
    );
    for s in &summary.series {
        for r in &s.reports {
            println!(
                "{:>10}  {:<6} {:<14} {:<3} {:>12.6} {:>12.6}  {}",
                r.m,
                format!("{:?}", s.criterion),
                s.comparison,
                format!("{:?}", s.measure),
                r.gap,
                r.budget,
                if r.satisfied { "yes" } else { "no" }
            );
        }
    }
    let show = |m: Option<u64>| m.map_or("not reached".to_string(), |m| m.to_string());
    println!("criterion 1 sufficient M:   {}", show(summary.criterion_1_sufficient_m));
    println!("criterion 1.5 sufficient M: {}", show(summary.criterion_1_5_sufficient_m));
}
