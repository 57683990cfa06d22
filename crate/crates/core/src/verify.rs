//! Self-contained verification suites for the variance-contraction theory
//! and the canonicalization definitions.
//!
//! Every suite generates its own data from a master seed and reports each
//! check with the exact bound it was held to.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::PoseDistribution;
use crate::engine::{
    bootstrap_step, contraction_rate, estimate_lambda, predict_variance, run, verify_lemma1, BootstrapConfig,
    CanonicalizerSpec, DatasetState, Selection,
};
use crate::error::{Error, Result};
use crate::frechet::{frechet_mean, mixture_decomposition, FrechetOptions};
use crate::group::{GroupElement, GroupManifold};
use crate::rng::stream_rng;
use crate::world::{
    evaluation_grid, generate_dataset, generate_test_set, robustness, Canonicalizer, ClassTemplates, DatasetSpec,
    GroupGrid, Specimen,
};

/// Stream key for suite-local randomness.
const VERIFY_STREAM: u64 = 0x7665_7269;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Lemma2,
    Lemma3,
    Theorem1,
    Defs,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Lemma3,
        Suite::Theorem1,
        Suite::Defs,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Lemma3 => "lemma3",
            Suite::Theorem1 => "theorem1",
            Suite::Defs => "defs",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.to_string() == s).ok_or_else(|| {
            Error::param(
                "suite",
                format!("unknown suite `{s}` (lemma1, lemma2, lemma3, theorem1, defs)"),
            )
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "==")]
    Equal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: Relation,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, value: f64, relation: Relation, bound: f64, detail: String) -> Self {
        let passed = match relation {
            Relation::Below => value < bound,
            Relation::Above => value > bound,
            Relation::AtLeast => value >= bound,
            Relation::Equal => value == bound,
        };
        Check {
            name: name.to_string(),
            passed,
            value,
            relation,
            bound,
            detail,
        }
    }

    pub fn below(name: &str, value: f64, bound: f64, detail: String) -> Self {
        Self::new(name, value, Relation::Below, bound, detail)
    }

    pub fn above(name: &str, value: f64, bound: f64, detail: String) -> Self {
        Self::new(name, value, Relation::Above, bound, detail)
    }

    pub fn at_least(name: &str, value: f64, bound: f64, detail: String) -> Self {
        Self::new(name, value, Relation::AtLeast, bound, detail)
    }

    pub fn equal(name: &str, value: f64, bound: f64, detail: String) -> Self {
        Self::new(name, value, Relation::Equal, bound, detail)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.relation {
            Relation::Below => "<",
            Relation::Above => ">",
            Relation::AtLeast => ">=",
            Relation::Equal => "==",
        };
        write!(
            f,
            "{} {}: {:.6e} {rel} {:.6e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.bound
        )?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Per-pair rows of the theorem suite; empty elsewhere.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rates: Vec<RateRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateRow {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    pub lambda_hat: f64,
    pub r_squared: f64,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, checks: Vec<Check>) -> Self {
        SuiteReport {
            suite,
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
            rates: Vec::new(),
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Lemma1 => lemma1(seed),
        Suite::Lemma2 => lemma2(seed),
        Suite::Lemma3 => lemma3(seed),
        Suite::Theorem1 => theorem1(seed),
        Suite::Defs => defs(seed),
    }
}

fn so2() -> Arc<GroupManifold> {
    Arc::new(GroupManifold::so2())
}

/// Single-class SO(2) dataset of `n` specimens with poses from `pose`.
pub fn pose_dataset(n: usize, pose: &str, seed: u64) -> Result<DatasetState> {
    let dist = PoseDistribution::parse(so2(), pose)?;
    let mut spec = DatasetSpec::new(1, n, dist, seed);
    spec.jitter = 0.0;
    DatasetState::new(generate_dataset(&spec)?.specimens)
}

fn noisy_config(alpha: f64, kappa: f64, bias: f64, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        alpha,
        selection: Selection::Random,
        seed,
        grid_resolution: 64,
        canonicalizer: CanonicalizerSpec::Noisy {
            kappa,
            bias: if bias == 0.0 { vec![] } else { vec![bias] },
            wrapped: false,
        },
        ..BootstrapConfig::default()
    }
}

/// One noisy bootstrap step from `state`.
fn noisy_step(state: &DatasetState, config: &BootstrapConfig) -> Result<crate::engine::StepOutput> {
    let m = Arc::clone(state.manifold());
    let mut c = config
        .canonicalizer
        .build(&m, &state.specimens, config.temperature, config.seed)?;
    c.set_epoch(state.step + 1);
    bootstrap_step(state, config, &c, &config.grid(&m)?)
}

/// Accounting suite on flat SO(2): the five-term accounting and a vanishing residual.
fn lemma1(seed: u64) -> Result<SuiteReport> {
    let tol = 5e-3;
    let mut checks = Vec::new();

    let same = pose_dataset(10_000, "vonmises:1:50", seed)?.pose_sample()?;
    let d = mixture_decomposition(&same, &same, 0.5)?;
    let s = frechet_mean(&same, &FrechetOptions::default())?.variance;
    checks.push(Check::below(
        "identical_components_variance",
        (d.sigma2_next - s).abs(),
        1e-10,
        format!("sigma2 {s:.6e}"),
    ));
    checks.push(Check::below(
        "identical_components_drift",
        d.drift_total(),
        1e-10,
        String::new(),
    ));
    checks.push(Check::below(
        "identical_components_residual",
        d.residual.abs(),
        1e-10,
        String::new(),
    ));

    let before = pose_dataset(10_000, "vonmises:0:50", seed)?;
    let out = noisy_step(&before, &noisy_config(0.5, 100.0, 0.0, seed))?;
    let report = verify_lemma1(&before, &out.state, 0.5, tol)?;
    checks.push(Check::below(
        "residual_half_circle",
        report.decomposition.residual.abs(),
        tol,
        format!(
            "n=10000, alpha={}, sigma2_next={:.6e}",
            report.alpha, report.decomposition.sigma2_next
        ),
    ));
    checks.push(Check::below(
        "five_term_reconstruction",
        report.reconstruction_error,
        1e-10,
        String::new(),
    ));
    Ok(SuiteReport::new(Suite::Lemma1, seed, checks))
}

/// Drift suite: unbiased corrections leave the mean in place, biased ones drag it.
fn lemma2(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let before = pose_dataset(10_000, "vonmises:0:2", seed)?;
    let unbiased = noisy_step(&before, &noisy_config(0.5, 100.0, 0.0, seed))?.decomposition;
    let biased = noisy_step(&before, &noisy_config(0.5, 100.0, 0.3, seed))?.decomposition;
    checks.push(Check::below(
        "unbiased_drift",
        unbiased.drift_total(),
        5e-3,
        format!(
            "drift_kept={:.3e}, drift_updated={:.3e}",
            unbiased.drift_kept, unbiased.drift_updated
        ),
    ));
    let ratio_bound = 10.0 * unbiased.drift_updated;
    checks.push(Check::above(
        "biased_drift_updated",
        biased.drift_updated,
        ratio_bound,
        format!("bound is 10x the unbiased drift_updated {:.3e}", unbiased.drift_updated),
    ));

    let bias = GroupElement::so2(0.3);
    let start = pose_dataset(2000, "vonmises:0:2", seed)?;
    let config = BootstrapConfig {
        steps: 50,
        ..noisy_config(0.5, 100.0, 0.3, seed)
    };
    let out = run(&config, start)?;
    let rows = out.trajectory.rows();
    let m0 = bias.manifold().element(&rows[0].mean)?;
    let mt = bias.manifold().element(&rows[rows.len() - 1].mean)?;
    let (d0, dt) = (m0.distance(&bias)?, mt.distance(&bias)?);
    checks.push(Check::below(
        "biased_mean_moves_toward_bias",
        dt,
        d0,
        format!("d(mu_0, bias)={d0:.4}, d(mu_50, bias)={dt:.4}"),
    ));
    Ok(SuiteReport::new(Suite::Lemma2, seed, checks))
}

struct SignTally {
    agree: usize,
    disagree: usize,
    inconclusive: usize,
    worst_gap: f64,
}

/// Steps each trajectory of `config` and compares the sign of the measured
/// change with the sign of `σ̃² - σ²`, skipping steps where the Monte-Carlo
/// margin cannot resolve it. Also records the worst one-step variance prediction gap.
fn sign_tally(config: &BootstrapConfig, mut state: DatasetState, steps: usize) -> Result<SignTally> {
    let m = Arc::clone(state.manifold());
    let grid = config.grid(&m)?;
    let mut c = config
        .canonicalizer
        .build(&m, &state.specimens, config.temperature, config.seed)?;
    let mut tally = SignTally {
        agree: 0,
        disagree: 0,
        inconclusive: 0,
        worst_gap: f64::NEG_INFINITY,
    };
    let n = state.len() as f64;
    for _ in 0..steps {
        let summary = state.summary()?;
        let d2: Vec<f64> = state
            .poses()
            .iter()
            .map(|p| p.distance(&summary.mean).map(|d| d * d))
            .collect::<Result<_>>()?;
        let mean_d2 = d2.iter().sum::<f64>() / n;
        let sd = (d2.iter().map(|v| (v - mean_d2).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        c.set_epoch(state.step + 1);
        let out = bootstrap_step(&state, config, &c, &grid)?;
        let d = &out.decomposition;
        let alpha = d.alpha;
        let measured = d.sigma2_next - summary.variance;
        let predicted = predict_variance(summary.variance, d.sigma2_updated, alpha)?;
        let bound = d.drift_total() + d.residual.abs() + (1.0 - alpha) * (d.sigma2_kept - summary.variance).abs();
        tally.worst_gap = tally.worst_gap.max((d.sigma2_next - predicted).abs() - bound - 1e-12);
        let margin = 3.0 * sd * ((1.0 - alpha) / (alpha * n)).sqrt() + d.drift_total() / alpha;
        let gap = d.sigma2_updated - summary.variance;
        if gap.abs() <= margin {
            tally.inconclusive += 1;
        } else if (gap > 0.0) == (measured > 0.0) {
            tally.agree += 1;
        } else {
            tally.disagree += 1;
        }
        state = out.state;
    }
    Ok(tally)
}

/// Contraction suite: one-step variance prediction and the contraction-iff condition.
fn lemma3(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let contracting = sign_tally(
        &noisy_config(0.2, 100.0, 0.0, seed),
        pose_dataset(2000, "vonmises:0:5", seed)?,
        50,
    )?;
    let expanding = sign_tally(
        &noisy_config(0.2, 50.0, 0.0, seed),
        pose_dataset(2000, "vonmises:0:400", seed)?,
        50,
    )?;
    let worst = contracting.worst_gap.max(expanding.worst_gap);
    checks.push(Check::below(
        "variance_prediction",
        worst,
        0.0,
        "|measured - predicted| minus (drift + |residual| + kept sampling error), worst step".into(),
    ));
    for (name, t) in [("contraction_sign", &contracting), ("expansion_sign", &expanding)] {
        checks.push(Check::equal(
            name,
            t.disagree as f64,
            0.0,
            format!(
                "{} agree, {} inside the 3-sigma margin, over {} steps",
                t.agree,
                t.inconclusive,
                t.agree + t.disagree + t.inconclusive
            ),
        ));
        checks.push(Check::at_least(
            &format!("{name}_resolved_steps"),
            t.agree as f64,
            5.0,
            String::new(),
        ));
    }
    Ok(SuiteReport::new(Suite::Lemma3, seed, checks))
}

/// One beta-controlled run; returns `(λ, λ̂, r²)`.
pub fn theorem1_run(alpha: f64, beta: f64, seed: u64) -> Result<RateRow> {
    let config = BootstrapConfig {
        steps: 60,
        beta: Some(beta),
        ..noisy_config(alpha, 100.0, 0.0, seed)
    };
    let out = run(&config, pose_dataset(2000, "vonmises:0:5", seed)?)?;
    let series = out.trajectory.sigma2();
    let fit = estimate_lambda(&series, 0..series.len())?;
    Ok(RateRow {
        alpha,
        beta,
        lambda: contraction_rate(alpha, beta)?,
        lambda_hat: fit.lambda,
        r_squared: fit.r_squared,
    })
}

pub const THEOREM1_ALPHAS: [f64; 3] = [0.05, 0.1, 0.5];
pub const THEOREM1_BETAS: [f64; 3] = [0.25, 0.5, 0.75];

/// Rate suite: fitted contraction rates of nine beta-controlled runs.
fn theorem1(seed: u64) -> Result<SuiteReport> {
    let pairs: Vec<(f64, f64)> = THEOREM1_ALPHAS
        .iter()
        .flat_map(|a| THEOREM1_BETAS.iter().map(move |b| (*a, *b)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|(a, b)| theorem1_run(*a, *b, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::new();
    for r in &rows {
        let tag = format!("a={},b={}", r.alpha, r.beta);
        checks.push(Check::below(
            &format!("lambda[{tag}]"),
            (r.lambda_hat - r.lambda).abs(),
            0.02,
            format!("lambda_hat={:.4}, lambda={:.4}", r.lambda_hat, r.lambda),
        ));
        checks.push(Check::at_least(&format!("r2[{tag}]"), r.r_squared, 0.99, String::new()));
    }
    let mut report = SuiteReport::new(Suite::Theorem1, seed, checks);
    report.rates = rows;
    Ok(report)
}

fn random_element<R: Rng>(m: &Arc<GroupManifold>, rng: &mut R, log_scale_range: f64) -> GroupElement {
    let coords: Vec<f64> = m
        .factors()
        .iter()
        .map(|f| match f.log_bounds() {
            Some(_) => rng.random_range(-log_scale_range..=log_scale_range),
            None => f.from_natural(rng.random_range(0.0..std::f64::consts::TAU)),
        })
        .collect();
    m.element(&coords).expect("finite coordinates")
}

/// Definitions: orbit canonicalizer exactness, canonicalized-classifier
/// invariance, scoring equivariance and one-step collapse.
fn defs(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let m: Arc<GroupManifold> = Arc::new("so2*logscale:0.5:2".parse()?);
    let dist = PoseDistribution::uniform(Arc::clone(&m));
    let data = generate_dataset(&DatasetSpec::new(10, 100, dist, seed))?;
    let oracle = Canonicalizer::oracle(Arc::clone(&m), 0.1)?;
    let grid = GroupGrid::uniform_with(Arc::clone(&m), 16, 5)?;
    let mut rng = stream_rng(seed, VERIFY_STREAM, 0);
    let quarter = 2f64.ln() / 4.0;

    let mut exact = 0usize;
    for x in data.specimens.iter().take(1000) {
        let x = Specimen {
            true_pose: random_element(&m, &mut rng, quarter),
            ..x.clone()
        };
        let g = random_element(&m, &mut rng, quarter);
        let moved = x.transformed(&g)?;
        let lhs = oracle.canonicalize(&moved, &grid, false)?;
        let rhs = g.compose(&oracle.canonicalize(&x, &grid, false)?)?;
        if lhs.distance(&rhs)? <= 1e-12 {
            exact += 1;
        }
    }
    checks.push(Check::equal(
        "def1_oracle_exact",
        exact as f64,
        1000.0,
        "out of 1000 (g, x)".into(),
    ));

    let test = generate_test_set(&data, 20, seed);
    let templates = ClassTemplates::new(data.class_shapes.clone())?;
    let cells = evaluation_grid(Arc::clone(&m), 17, &[1.0, 1.125, 1.25])?;
    let acc = robustness(&test, &oracle, &grid, false, &templates, &cells)?;
    let constant = (0..test.len())
        .filter(|&i| acc.iter().all(|c| c.predictions[i] == acc[0].predictions[i]))
        .count();
    checks.push(Check::equal(
        "def2_invariance",
        constant as f64,
        test.len() as f64,
        format!("specimens with one prediction across all {} cells", cells.len()),
    ));

    let template = Canonicalizer::template(Arc::clone(&m), data.class_shapes[0].clone(), 0.1)?;
    let mut worst: f64 = 0.0;
    for i in 0..500 {
        let x = data.specimens[i].clone();
        let x = Specimen {
            true_pose: random_element(&m, &mut rng, quarter),
            ..x
        };
        let g = random_element(&m, &mut rng, quarter);
        let h = random_element(&m, &mut rng, quarter);
        let lhs = template.score(&g, &x.transformed(&h)?)?;
        let rhs = template.score(&h.inverse().compose(&g)?, &x)?;
        worst = worst.max((lhs - rhs).abs());
    }
    checks.push(Check::below(
        "scoring_equivariance",
        worst,
        1e-9,
        "worst of 500 (g, h, x)".into(),
    ));

    let uniform = pose_dataset(2000, "uniform", seed)?;
    let sigma0 = uniform.summary()?.variance;
    let config = BootstrapConfig {
        alpha: 1.0,
        steps: 1,
        variance_floor: 0.0,
        canonicalizer: CanonicalizerSpec::Oracle,
        ..BootstrapConfig::default()
    };
    let out = run(&config, uniform)?;
    checks.push(Check::below(
        "oracle_full_update_collapse",
        out.trajectory.rows()[1].sigma2,
        1e-12,
        format!("sigma0^2={sigma0:.4}"),
    ));
    Ok(SuiteReport::new(Suite::Defs, seed, checks))
}
