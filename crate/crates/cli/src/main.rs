//! `galign`: dataset generation, bootstrap simulations, verification suites,
//! robustness grids and ad-hoc Frechet statistics.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CanonicalizerKind, Layers, RunConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "galign", version, about = "Bootstrapped pose re-alignment experiments")]
struct Cli {
    /// Master seed; every random stream derives from it.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Skip SVG output.
    #[arg(long, global = true)]
    no_plot: bool,

    /// Output directory; must exist.
    #[arg(long, global = true, env = "GALIGN_OUT", default_value = ".")]
    out: PathBuf,

    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Config override, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset file.
    Generate {
        #[arg(long)]
        classes: Option<usize>,
        #[arg(long)]
        per_class: Option<usize>,
        /// Pose distribution, e.g. `vonmises:0:2` or `vonmises:0:1;dirac:0`.
        #[arg(long)]
        pose: Option<String>,
        /// Group manifold, e.g. `so2` or `so2*logscale:0.5:2`.
        #[arg(long)]
        manifold: Option<String>,
        #[arg(long)]
        jitter: Option<f64>,
    },
    /// Run the bootstrapping loop on a dataset.
    Simulate {
        /// Dataset file written by `generate`.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, value_enum)]
        canonicalizer: Option<KindArg>,
        /// Fraction of specimens re-aligned per step.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Noise-to-variance ratio; sets the noisy canonicalizer's κ each step.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Run verification suites (lemma1, lemma2, lemma3, theorem1, defs or all).
    Verify {
        #[arg(default_value = "all")]
        suites: Vec<String>,
    },
    /// Per-cell toy-classifier accuracy over the evaluation grid.
    Robustness {
        /// Training dataset file written by `generate`.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, value_enum)]
        canonicalizer: Option<KindArg>,
        /// Classifier templates: fit on aligned training data, or the generator prototypes.
        #[arg(long, value_enum)]
        templates: Option<TemplatesArg>,
    },
    /// Frechet mean and variance of a pose list (file or stdin).
    Frechet {
        /// One pose per line; `-` or absent reads stdin.
        input: Option<PathBuf>,
        #[arg(long)]
        manifold: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum KindArg {
    Identity,
    Oracle,
    Noisy,
    Template,
}

impl From<KindArg> for CanonicalizerKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Identity => CanonicalizerKind::Identity,
            KindArg::Oracle => CanonicalizerKind::Oracle,
            KindArg::Noisy => CanonicalizerKind::Noisy,
            KindArg::Template => CanonicalizerKind::Template,
        }
    }
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
enum TemplatesArg {
    Fit,
    Prototype,
}

fn kind_name(k: CanonicalizerKind) -> &'static str {
    match k {
        CanonicalizerKind::Identity => "identity",
        CanonicalizerKind::Oracle => "oracle",
        CanonicalizerKind::Noisy => "noisy",
        CanonicalizerKind::Template => "template",
    }
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut layers = Layers::from_file(cli.config.as_deref())?;
    match &cli.command {
        Command::Generate {
            classes,
            per_class,
            pose,
            manifold,
            jitter,
        } => {
            layers.set_opt("classes", classes.map(|v| v as i64));
            layers.set_opt("per_class", per_class.map(|v| v as i64));
            layers.set_opt("pose", pose.clone());
            layers.set_opt("manifold", manifold.clone());
            layers.set_opt("jitter", *jitter);
        }
        Command::Simulate {
            dataset,
            canonicalizer,
            alpha,
            steps,
            beta,
        } => {
            layers.set_opt("dataset", dataset.clone());
            layers.set_opt("canonicalizer", canonicalizer.map(|k| kind_name(k.into())));
            layers.set_opt("alpha", *alpha);
            layers.set_opt("steps", steps.map(|v| v as i64));
            layers.set_opt("beta", *beta);
        }
        Command::Robustness {
            dataset,
            canonicalizer,
            templates,
        } => {
            layers.set_opt("dataset", dataset.clone());
            layers.set_opt("canonicalizer", canonicalizer.map(|k| kind_name(k.into())));
            layers.set_opt(
                "templates",
                templates.map(|t| match t {
                    TemplatesArg::Fit => "fit",
                    TemplatesArg::Prototype => "prototype",
                }),
            );
        }
        Command::Frechet { manifold, .. } => layers.set_opt("manifold", manifold.clone()),
        Command::Verify { .. } => {}
    }
    if cli.no_plot {
        layers.set("plot", false);
    }
    layers.apply_overrides(&cli.set)?;
    if let Some(seed) = cli.seed {
        let seed = i64::try_from(seed).map_err(|_| CliError::field("seed", "must fit in a signed 64-bit integer"))?;
        layers.set("seed", seed);
    }
    layers.resolve()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::field("workers", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let config = resolve(&cli)?;
    match &cli.command {
        Command::Frechet { input, .. } => commands::frechet(&config, input.as_deref()),
        command => {
            let out = commands::Output::new(&cli.out)?;
            match command {
                Command::Generate { .. } => commands::generate(&config, &out),
                Command::Simulate { .. } => commands::simulate(&config, &out),
                Command::Verify { suites } => commands::verify(&config, &commands::parse_suites(suites)?, &out),
                Command::Robustness { .. } => commands::robustness_cmd(&config, &out),
                Command::Frechet { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("galign: {e}");
            e.exit_code()
        }
    }
}
