use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use normlab::experiment::{configure_threads, run, ExperimentConfig, OutputFormat};
use normlab::Error;

/// Seeded numerical experiments on a randomly perturbed Euclidean norm.
///
/// Without a subcommand the full configured experiment runs. Set
/// NORMLAB_THREADS to fix the number of worker threads.
#[derive(Parser, Debug)]
#[command(name = "normlab", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check |x| <= ||x|| <= (sqrt 2 + eta)|x| on random points (--trials points).
    SampleNorm(Common),
    /// Worst-case goodness over random planes (--trials planes).
    ProbeSubspaces(Common),
    /// Run lemma verifiers (--trials Monte-Carlo trials).
    VerifyLemmas {
        #[command(flatten)]
        common: Common,
        /// Comma-separated lemma ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        lemmas: Vec<String>,
    },
    /// Decide the parameter conditions exactly.
    CheckParams(Common),
    /// Monte-Carlo frequency of d(x, Y) <= gamma for an m-dimensional Y.
    McBounds {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file; flags override its values.
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    /// Rank of the sampled projection (0 for none).
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    grid: Option<usize>,
    /// Report destination; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    tol: Option<f64>,
}

enum TrialsMeaning {
    Mc,
    Sandwich,
    Subspaces,
    Ignored,
}

impl Common {
    fn load(&self, trials: TrialsMeaning) -> Result<ExperimentConfig, Error> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.n {
            c.n = v;
        }
        if let Some(v) = self.eta {
            c.eta = v;
        }
        if let Some(v) = self.rank {
            c.rank = Some(v);
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.grid {
            c.grid_size = v;
        }
        if let Some(v) = self.tol {
            c.tol = v;
        }
        if let Some(v) = &self.out {
            c.output_path = Some(v.clone());
        }
        if let Some(f) = self.format {
            c.format = match f {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            };
        }
        if let Some(t) = self.trials {
            match trials {
                TrialsMeaning::Mc => c.mc_trials = t,
                TrialsMeaning::Sandwich => c.sandwich_points = t as usize,
                TrialsMeaning::Subspaces => c.subspace_trials = t as usize,
                TrialsMeaning::Ignored => {}
            }
        }
        Ok(c)
    }
}

fn only(ids: &[&str]) -> Vec<String> {
    ids.iter().map(|s| s.to_string()).collect()
}

fn build(cli: Cli) -> Result<ExperimentConfig, Error> {
    let config = match cli.command {
        None => cli.common.load(TrialsMeaning::Mc)?,
        Some(Command::SampleNorm(common)) => ExperimentConfig {
            sandwich: true,
            lemma_selection: Vec::new(),
            ..common.load(TrialsMeaning::Sandwich)?
        },
        Some(Command::ProbeSubspaces(common)) => ExperimentConfig {
            sandwich: false,
            lemma_selection: only(&["counterexample_probe"]),
            ..common.load(TrialsMeaning::Subspaces)?
        },
        Some(Command::VerifyLemmas { common, lemmas }) => {
            let base = common.load(TrialsMeaning::Mc)?;
            ExperimentConfig {
                sandwich: false,
                lemma_selection: if lemmas.is_empty() { base.lemma_selection.clone() } else { lemmas },
                ..base
            }
        }
        Some(Command::CheckParams(common)) => ExperimentConfig {
            sandwich: false,
            lemma_selection: only(&["parameter_chain"]),
            ..common.load(TrialsMeaning::Ignored)?
        },
        Some(Command::McBounds { common, m, gamma }) => ExperimentConfig {
            sandwich: false,
            lemma_selection: only(&["subspace_volume"]),
            volume_m: Some(m),
            volume_gamma: Some(gamma),
            ..common.load(TrialsMeaning::Mc)?
        },
    };
    config.validate()?;
    Ok(config)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } | Error::Undecidable { .. } | Error::NetBudgetExceeded { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let config = match build(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let report = match run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = report.write(config.output_path.as_deref(), config.format) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let s = &report.summary;
    eprintln!(
        "{} pass, {} fail, {} not applicable, {} evidence",
        s.pass, s.fail, s.not_applicable, s.evidence
    );
    if let Some(floor) = s.goodness_floor {
        eprintln!("goodness floor {floor:.6e} (enclosure width {:.3e})", s.enclosure_width.unwrap_or(f64::NAN));
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        eprintln!("failing: {}", s.failing_ids.join(", "));
        ExitCode::from(1)
    }
}
