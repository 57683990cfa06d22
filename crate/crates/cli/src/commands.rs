use std::io::Read;
use std::path::{Path, PathBuf};

use galign::engine::{contraction_rate, estimate_lambda, run, DatasetState, RunOutcome, StopReason};
use galign::frechet::{frechet_mean, FrechetOptions};
use galign::verify::{run_suite, Suite, SuiteReport};
use galign::world::{
    evaluation_grid, generate_dataset, generate_test_set, robustness, CellAccuracy, ClassTemplates, DatasetFile,
};
use galign::{GroupElement, WeightedPoseSample};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, TemplateMode};
use crate::error::CliError;
use crate::plot::{polar_chart, variance_chart, VarianceOverlay};

pub const DATASET_FILE: &str = "dataset.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const ROBUSTNESS_FORMAT_VERSION: u32 = 1;

/// Output directory handle; the directory must already exist.
pub struct Output {
    dir: PathBuf,
}

impl Output {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::io(dir, "output directory does not exist"));
        }
        Ok(Output { dir: dir.to_path_buf() })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn write_config(&self, config: &RunConfig) -> Result<PathBuf, CliError> {
        self.write(CONFIG_FILE, &config.to_toml()?)
    }
}

fn load_dataset(config: &RunConfig) -> Result<DatasetFile, CliError> {
    let path = config
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::field("dataset", "required (pass --dataset or set `dataset`)"))?;
    let path = Path::new(path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    DatasetFile::from_json(&text).map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct GenerateManifest<'a> {
    format: &'static str,
    command: &'static str,
    seed: u64,
    manifold: String,
    pose: &'a str,
    classes: usize,
    per_class: usize,
    jitter: f64,
    specimens: usize,
}

pub fn generate(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let data = generate_dataset(&config.dataset_spec()?)?;
    out.write(DATASET_FILE, &data.to_json()?)?;
    out.write_json(
        "generate.json",
        &GenerateManifest {
            format: "galign-manifest",
            command: "generate",
            seed: config.seed,
            manifold: data.manifold.to_string(),
            pose: &config.pose,
            classes: config.classes,
            per_class: config.per_class,
            jitter: config.jitter,
            specimens: data.specimens.len(),
        },
    )?;
    out.write_config(config)?;
    println!(
        "wrote {} specimens ({} classes x {}) to {}",
        data.specimens.len(),
        config.classes,
        config.per_class,
        out.dir.join(DATASET_FILE).display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RateSummary {
    steps_recorded: usize,
    sigma2_initial: f64,
    sigma2_final: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_squared: Option<f64>,
    /// Index where the fit window was cut at a zero variance.
    #[serde(skip_serializing_if = "Option::is_none")]
    fit_truncated_at: Option<usize>,
}

fn rate_summary(config: &RunConfig, outcome: &RunOutcome) -> Result<RateSummary, CliError> {
    let s = outcome.trajectory.sigma2();
    let fit = estimate_lambda(&s, 0..s.len()).ok();
    let lambda = config.beta.map(|b| contraction_rate(config.alpha, b)).transpose()?;
    Ok(RateSummary {
        steps_recorded: s.len() - 1,
        sigma2_initial: s[0],
        sigma2_final: s[s.len() - 1],
        lambda,
        lambda_hat: fit.as_ref().map(|f| f.lambda),
        r_squared: fit.as_ref().map(|f| f.r_squared),
        fit_truncated_at: fit.and_then(|f| f.truncated_at),
    })
}

#[derive(Serialize)]
struct RunManifest<'a> {
    format: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a RunConfig,
    manifold: String,
    canonicalizer: &'static str,
    specimens: usize,
    stop: &'a StopReason,
    #[serde(flatten)]
    rates: RateSummary,
}

fn bootstrap(config: &RunConfig, data: &DatasetFile) -> Result<RunOutcome, CliError> {
    let state = DatasetState::new(data.specimens.clone())?;
    Ok(run(&config.bootstrap(), state)?)
}

pub fn simulate(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let data = load_dataset(config)?;
    let outcome = bootstrap(config, &data)?;
    let rates = rate_summary(config, &outcome)?;
    out.write("trajectory.csv", &outcome.trajectory.to_csv()?)?;
    let aligned = DatasetFile {
        specimens: outcome.state.specimens.clone(),
        ..data.clone()
    };
    out.write("aligned.json", &aligned.to_json()?)?;
    if config.plot {
        let overlay = VarianceOverlay {
            lambda: rates.lambda,
            fit: rates.lambda_hat.zip(rates.r_squared),
        };
        out.write("trajectory.svg", &variance_chart(&outcome.trajectory.sigma2(), overlay))?;
    }
    println!(
        "{} steps, sigma2 {:.6e} -> {:.6e}{}",
        rates.steps_recorded,
        rates.sigma2_initial,
        rates.sigma2_final,
        rates
            .lambda_hat
            .map(|l| format!(", fitted lambda {l:.4}"))
            .unwrap_or_default()
    );
    out.write_json(
        "run.json",
        &RunManifest {
            format: "galign-manifest",
            command: "simulate",
            seed: config.seed,
            config,
            manifold: data.manifold.to_string(),
            canonicalizer: config.canonicalizer_spec().name(),
            specimens: data.specimens.len(),
            stop: &outcome.stop,
            rates,
        },
    )?;
    out.write_config(config)?;
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    format: &'static str,
    seed: u64,
    passed: bool,
    suites: &'a [SuiteReport],
}

pub fn parse_suites(names: &[String]) -> Result<Vec<Suite>, CliError> {
    if names.is_empty() || names.iter().any(|n| n == "all") {
        return Ok(Suite::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<Suite>().map_err(|e| CliError::Config(e.to_string())))
        .collect()
}

pub fn verify(config: &RunConfig, suites: &[Suite], out: &Output) -> Result<(), CliError> {
    let reports = suites
        .par_iter()
        .map(|s| run_suite(*s, config.seed))
        .collect::<galign::Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed);
    for r in &reports {
        println!("== {} ({})", r.suite, if r.passed { "pass" } else { "FAIL" });
        for c in &r.checks {
            println!("  {c}");
        }
        for row in &r.rates {
            println!(
                "  alpha {:<5} beta {:<5} lambda {:.4} lambda_hat {:.4} r2 {:.4}",
                row.alpha, row.beta, row.lambda, row.lambda_hat, row.r_squared
            );
        }
    }
    out.write_json(
        "report.json",
        &VerifyReport {
            format: "galign-report",
            seed: config.seed,
            passed,
            suites: &reports,
        },
    )?;
    out.write_config(config)?;
    if passed {
        return Ok(());
    }
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c| format!("{}/{}", r.suite, c.name)))
        .collect();
    Err(CliError::Verification(failed.join(", ")))
}

#[derive(Serialize)]
struct ScaleSummary {
    scale: f64,
    mean_accuracy: f64,
}

#[derive(Serialize)]
struct RobustnessManifest<'a> {
    format: &'static str,
    command: &'static str,
    seed: u64,
    config: &'a RunConfig,
    manifold: String,
    canonicalizer: &'static str,
    templates: TemplateMode,
    test_specimens: usize,
    stop: &'a StopReason,
    #[serde(flatten)]
    rates: RateSummary,
    identity_accuracy: f64,
    mean_accuracy: f64,
    mean_off_identity_accuracy: f64,
    per_scale: Vec<ScaleSummary>,
}

fn robustness_csv(cells: &[CellAccuracy]) -> String {
    let mut text = format!("#galign-robustness v{ROBUSTNESS_FORMAT_VERSION}\n");
    text.push_str("cell,rotation,rotation_deg,scale,correct,total,accuracy\n");
    for c in cells {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.cell,
            c.rotation,
            c.rotation.to_degrees(),
            c.scale,
            c.correct,
            c.total,
            c.accuracy
        ));
    }
    text
}

/// Groups cells by scale, keeping first-seen order.
fn by_scale(cells: &[CellAccuracy]) -> Vec<(f64, Vec<&CellAccuracy>)> {
    let mut groups: Vec<(f64, Vec<&CellAccuracy>)> = Vec::new();
    for c in cells {
        match groups.iter_mut().find(|(s, _)| (s - c.scale).abs() < 1e-9) {
            Some((_, g)) => g.push(c),
            None => groups.push((c.scale, vec![c])),
        }
    }
    groups
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn robustness_cmd(config: &RunConfig, out: &Output) -> Result<(), CliError> {
    let data = load_dataset(config)?;
    let outcome = bootstrap(config, &data)?;
    let rates = rate_summary(config, &outcome)?;
    let m = &data.manifold;
    let engine = config.bootstrap();
    let search = engine.grid(m)?;
    let cells = evaluation_grid(m.clone(), config.rotation_order, &config.scales)?;
    let templates = match config.templates {
        TemplateMode::Fit => ClassTemplates::fit(
            &outcome.state.specimens,
            data.num_classes(),
            &outcome.canonicalizer,
            &search,
            config.refine,
        )?,
        TemplateMode::Prototype => ClassTemplates::new(data.class_shapes.clone())?,
    };
    let test = generate_test_set(&data, config.test_per_class, config.seed);
    let acc = robustness(
        &test,
        &outcome.canonicalizer,
        &search,
        config.refine,
        &templates,
        &cells,
    )?;
    out.write("robustness.csv", &robustness_csv(&acc))?;

    let identity = cells.identity_index();
    let groups = by_scale(&acc);
    if config.plot {
        for (scale, group) in &groups {
            let angles: Vec<f64> = group.iter().map(|c| c.rotation).collect();
            let values: Vec<f64> = group.iter().map(|c| c.accuracy).collect();
            out.write(
                &format!("polar-scale-{scale}.svg"),
                &polar_chart(&format!("scale {scale}"), &angles, &values),
            )?;
        }
    }
    let manifest = RobustnessManifest {
        format: "galign-manifest",
        command: "robustness",
        seed: config.seed,
        config,
        manifold: m.to_string(),
        canonicalizer: config.canonicalizer_spec().name(),
        templates: config.templates,
        test_specimens: test.len(),
        stop: &outcome.stop,
        rates,
        identity_accuracy: acc[identity].accuracy,
        mean_accuracy: mean(acc.iter().map(|c| c.accuracy)),
        mean_off_identity_accuracy: mean(acc.iter().filter(|c| c.cell != identity).map(|c| c.accuracy)),
        per_scale: groups
            .iter()
            .map(|(scale, g)| ScaleSummary {
                scale: *scale,
                mean_accuracy: mean(g.iter().map(|c| c.accuracy)),
            })
            .collect(),
    };
    println!(
        "{} canonicalizer: identity-cell accuracy {:.3}, off-identity mean {:.3}, sigma2 {:.4e} -> {:.4e}",
        manifest.canonicalizer,
        manifest.identity_accuracy,
        manifest.mean_off_identity_accuracy,
        manifest.rates.sigma2_initial,
        manifest.rates.sigma2_final
    );
    out.write_json("robustness.json", &manifest)?;
    out.write_config(config)?;
    Ok(())
}

#[derive(Serialize)]
struct FrechetReport {
    manifold: String,
    n: usize,
    mean: Vec<f64>,
    variance: f64,
    converged: bool,
    iterations: usize,
}

/// Parses one pose per line: `dim` coordinates, optionally followed by a
/// non-negative weight. Blank lines and `#` comments are skipped.
fn parse_poses(text: &str, config: &RunConfig) -> Result<WeightedPoseSample, CliError> {
    let m = config.manifold()?;
    let dim = m.dim();
    let mut elements = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Io(format!("line {}: {e}", i + 1)))?;
        if values.len() != dim && values.len() != dim + 1 {
            return Err(CliError::Io(format!(
                "line {}: expected {dim} coordinates (plus an optional weight), got {} values",
                i + 1,
                values.len()
            )));
        }
        elements.push(
            GroupElement::new(m.clone(), &values[..dim]).map_err(|e| CliError::Io(format!("line {}: {e}", i + 1)))?,
        );
        weights.push(values.get(dim).copied().unwrap_or(1.0));
    }
    if elements.is_empty() {
        return Err(CliError::Io("no poses in input".into()));
    }
    WeightedPoseSample::from_unnormalized(elements, weights).map_err(|e| CliError::Io(e.to_string()))
}

pub fn frechet(config: &RunConfig, input: Option<&Path>) -> Result<(), CliError> {
    let text = match input {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?,
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Io(format!("stdin: {e}")))?;
            s
        }
    };
    let sample = parse_poses(&text, config)?;
    let summary = frechet_mean(&sample, &FrechetOptions::default())?;
    let report = FrechetReport {
        manifold: sample.manifold().to_string(),
        n: sample.len(),
        mean: summary.mean.coords().to_vec(),
        variance: summary.variance,
        converged: summary.converged,
        iterations: summary.iterations,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    println!("{text}");
    Ok(())
}
