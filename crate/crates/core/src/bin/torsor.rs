use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use torsor::hsp::write_samples_csv;
use torsor::reduction::{
    amplifier_experiment, bruteforce, run_trial_detailed, seeded_jobs, statevec_cap_from_env,
    OracleSetup, SummaryRow,
};
use torsor::{BackendKind, Error, GroupSpec, InstanceFile, NoiseModel, ReductionConfig, TorsorInstance};

const EXIT_TRIAL_FAILED: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "torsor", version, about = "Group-action vectorization from a parallelization oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file.
    Gen {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Include the secret challenge in the file.
        #[arg(long)]
        with_secret: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the reduction and emit JSON-lines reports plus a CSV summary.
    Vectorize {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Permit a noisy oracle inside the sampler; results are reported, not asserted.
        #[arg(long)]
        experiment_noise: bool,
        /// JSON-lines report path (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV summary path (stdout if absent).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// CSV dump of every character sample drawn.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Solve the instance by walking the orbit of E.
    Bruteforce {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Amplifier failure rate against the binomial tail, and optionally
    /// end-to-end reductions under a noisy oracle.
    NoiseExp {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        /// End-to-end reduction trials to run under noise.
        #[arg(long, default_value_t = 0)]
        reduction_trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file written by `gen`.
    #[arg(long, conflicts_with_all = ["moduli", "twist"])]
    instance: Option<PathBuf>,
    /// Comma-separated moduli d_1,...,d_r.
    #[arg(long)]
    moduli: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enable the twist capability.
    #[arg(long)]
    twist: bool,
}

#[derive(Args)]
struct RunArgs {
    /// `ideal` or `statevector`; defaults to ideal for `vectorize` and
    /// statevector for `noise-exp`.
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    run_seed: u64,
    /// Oracle success probability; omit for a perfect oracle.
    #[arg(long)]
    alpha: Option<f64>,
    /// Majority-vote width (odd).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "uniform")]
    noise_model: NoiseModel,
}

struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(EXIT_CONFIG, e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure(EXIT_CONFIG, e.to_string())
    }
}

fn sink(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

impl InstanceArgs {
    /// Jobs for `trials` runs: a file pins one instance, `--moduli` gives
    /// instance seeds `seed, seed + 1, ...`.
    fn jobs(&self, trials: usize, run_seed: u64) -> Result<Vec<(Arc<TorsorInstance>, u64)>, Failure> {
        match (&self.instance, &self.moduli) {
            (Some(path), _) => {
                let inst = Arc::new(InstanceFile::read_from(File::open(path)?)?.instantiate()?);
                Ok((0..trials as u64)
                    .map(|t| (inst.clone(), run_seed.wrapping_add(t)))
                    .collect())
            }
            (None, Some(m)) => Ok(seeded_jobs(&m.parse::<GroupSpec>()?, self.seed, self.twist, run_seed, trials)?),
            (None, None) => Err(Failure(EXIT_CONFIG, "need --instance or --moduli".into())),
        }
    }

    fn single(&self) -> Result<Arc<TorsorInstance>, Failure> {
        Ok(self.jobs(1, 0)?.remove(0).0)
    }
}

impl RunArgs {
    fn validate(&self) -> Result<(), Failure> {
        if let Some(k) = self.k {
            if k == 0 || k.is_multiple_of(2) {
                return Err(Failure(EXIT_CONFIG, format!("--k must be odd, got {k}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Failure(EXIT_CONFIG, format!("--alpha must lie in (0, 1], got {a}")));
            }
        }
        Ok(())
    }

    fn oracle(&self) -> OracleSetup {
        OracleSetup {
            success_prob: self.alpha,
            noise_model: self.noise_model,
        }
    }

    fn config(&self, experiment_noise: bool, default_backend: BackendKind) -> ReductionConfig {
        ReductionConfig {
            backend: self.backend.unwrap_or(default_backend),
            statevec_cap: statevec_cap_from_env(),
            experiment_noise,
            votes: self.k,
            ..ReductionConfig::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            instance,
            with_secret,
            out,
        } => {
            let inst = instance.single()?;
            let mut w = sink(&out)?;
            InstanceFile::describe(&inst, with_secret).write_to(&mut w)?;
            writeln!(w)?;
        }
        Command::Vectorize {
            instance,
            run,
            experiment_noise,
            out,
            summary,
            dump_samples,
        } => {
            run.validate()?;
            let jobs = instance.jobs(run.trials, run.run_seed)?;
            let cfg = run.config(experiment_noise, BackendKind::Ideal);
            let setup = run.oracle();
            let rank = jobs.first().map_or(1, |(i, _)| i.spec().rank());
            let results = {
                use rayon::prelude::*;
                jobs.par_iter()
                    .map(|(inst, seed)| run_trial_detailed(inst.clone(), *seed, &cfg, &setup))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let mut w = sink(&out)?;
            for (report, _) in &results {
                serde_json::to_writer(&mut w, report).map_err(Error::from)?;
                writeln!(w)?;
            }
            w.flush()?;
            drop(w);

            let reports: Vec<_> = results.iter().map(|(r, _)| r.clone()).collect();
            if let Some(row) = SummaryRow::from_reports(&reports) {
                let mut csv = csv::Writer::from_writer(sink(&summary)?);
                csv.serialize(row).map_err(Error::from)?;
                csv.flush()?;
            }
            if let Some(path) = dump_samples {
                let all: Vec<_> = results.iter().flat_map(|(_, o)| o.samples.iter().cloned()).collect();
                write_samples_csv(File::create(path)?, rank, &all)?;
            }
            if !experiment_noise && reports.iter().any(|r| !r.success) {
                return Err(Failure(EXIT_TRIAL_FAILED, "some trials failed".into()));
            }
        }
        Command::Bruteforce { instance } => {
            let inst = instance.single()?;
            let g = bruteforce(inst.public())?;
            println!(
                "{}",
                serde_json::json!({ "moduli": inst.spec().moduli(), "seed": inst.seed(), "alpha": g.exponents() })
            );
        }
        Command::NoiseExp {
            instance,
            run,
            reduction_trials,
            out,
        } => {
            run.validate()?;
            let alpha = run
                .alpha
                .ok_or_else(|| Failure(EXIT_CONFIG, "noise-exp needs --alpha".into()))?;
            let inst = instance.single()?;
            let k = run.k.unwrap_or(15);
            let amp = amplifier_experiment(inst, alpha, run.noise_model, k, run.trials, run.run_seed)?;
            let mut w = sink(&out)?;
            serde_json::to_writer(&mut w, &amp).map_err(Error::from)?;
            writeln!(w)?;
            if reduction_trials > 0 {
                let cfg = run.config(true, BackendKind::Statevector);
                let jobs = instance.jobs(reduction_trials, run.run_seed)?;
                let mut reports = Vec::new();
                for (inst, seed) in jobs {
                    let (r, _) = run_trial_detailed(inst, seed, &cfg, &run.oracle())?;
                    serde_json::to_writer(&mut w, &r).map_err(Error::from)?;
                    writeln!(w)?;
                    reports.push(r);
                }
                if let Some(row) = SummaryRow::from_reports(&reports) {
                    let mut csv = csv::Writer::from_writer(io::stderr());
                    csv.serialize(row).map_err(Error::from)?;
                    csv.flush()?;
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("torsor: {msg}");
            ExitCode::from(code)
        }
    }
}
