//! Variance recurrence, contraction rate and their empirical counterparts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frechet::{mixture_decomposition, MixtureDecomposition, WeightedPoseSample};

use super::state::DatasetState;

/// One step of `σ²_{t+1} ≈ (1-α)σ_t² + ασ̃_t²`.
pub fn predict_variance(sigma2: f64, sigma2_updated: f64, alpha: f64) -> Result<f64> {
    if !(sigma2 >= 0.0 && sigma2_updated >= 0.0) {
        return Err(Error::param("sigma2", "variances must be >= 0"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::param("alpha", format!("must be in (0, 1], got {alpha}")));
    }
    Ok((1.0 - alpha) * sigma2 + alpha * sigma2_updated)
}

/// `λ = 1 - α(1 - β)` for `α, β ∈ (0, 1)`.
pub fn contraction_rate(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", format!("must be in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::param("beta", format!("must be in (0, 1), got {beta}")));
    }
    Ok(1.0 - alpha * (1.0 - beta))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaFit {
    pub lambda: f64,
    pub r_squared: f64,
    /// Number of `(t, ln σ_t²)` points in the fit.
    pub points: usize,
    /// Index of the first non-positive variance that cut the window short.
    pub truncated_at: Option<usize>,
}

/// Log-linear least-squares fit of `σ_t² = λᵗ σ_0²` over `series[window]`.
pub fn estimate_lambda(series: &[f64], window: std::ops::Range<usize>) -> Result<LambdaFit> {
    let end = window.end.min(series.len());
    let start = window.start.min(end);
    let mut truncated_at = None;
    let mut pts = Vec::new();
    for (t, v) in series.iter().enumerate().take(end).skip(start) {
        if v.is_nan() || *v <= 0.0 {
            truncated_at = Some(t);
            break;
        }
        pts.push((t as f64, v.ln()));
    }
    if pts.len() < 3 {
        return Err(Error::InvalidSample(format!(
            "need at least 3 positive variances, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n * (1.0 + my * my) {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).min(1.0)
    };
    Ok(LambdaFit {
        lambda: slope.exp(),
        r_squared,
        points: pts.len(),
        truncated_at,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub decomposition: MixtureDecomposition,
    /// Updated fraction actually realised, `k / n`.
    pub alpha: f64,
    pub n_updated: usize,
    pub tolerance: f64,
    /// `|sum of five terms - measured variance|`.
    pub reconstruction_error: f64,
    pub residual_ok: bool,
    pub drift_flagged: bool,
}

/// Splits consecutive snapshots into kept and re-aligned specimens and
/// decomposes the variance of the later one.
pub fn verify_lemma1(before: &DatasetState, after: &DatasetState, alpha: f64, tolerance: f64) -> Result<Lemma1Report> {
    if before.len() != after.len() || before.is_empty() {
        return Err(Error::InvalidSample(
            "snapshots must be non-empty and equally sized".into(),
        ));
    }
    let mut kept = Vec::new();
    let mut updated = Vec::new();
    for (b, a) in before.specimens.iter().zip(&after.specimens) {
        if b.id != a.id {
            return Err(Error::InvalidSample(format!("specimen order differs at id {}", b.id)));
        }
        if b.correction == a.correction {
            kept.push(a.current_pose());
        } else {
            updated.push(a.current_pose());
        }
    }
    if updated.is_empty() {
        return Err(Error::InvalidSample("no specimen changed between snapshots".into()));
    }
    let n = before.len() as f64;
    let realised = updated.len() as f64 / n;
    if (realised - alpha).abs() > 1.0 / n + 1e-12 {
        return Err(Error::param(
            "alpha",
            format!("{alpha} does not match the realised update fraction {realised}"),
        ));
    }
    let n_updated = updated.len();
    let updated = WeightedPoseSample::uniform(updated)?;
    let kept = if kept.is_empty() {
        updated.clone()
    } else {
        WeightedPoseSample::uniform(kept)?
    };
    let d = mixture_decomposition(&kept, &updated, realised)?;
    let reconstruction_error = (d.reconstructed() - d.sigma2_next).abs();
    Ok(Lemma1Report {
        alpha: realised,
        n_updated,
        tolerance,
        reconstruction_error,
        residual_ok: d.residual.abs() < tolerance,
        drift_flagged: d.drift_total() > tolerance,
        decomposition: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn recurrence_arithmetic() {
        assert_abs_diff_eq!(predict_variance(1.0, 0.25, 0.2).unwrap(), 0.85, epsilon = 1e-15);
        assert_abs_diff_eq!(predict_variance(0.7, 0.7, 0.3).unwrap(), 0.7, epsilon = 1e-15);
        assert_eq!(predict_variance(0.7, 0.0, 1.0).unwrap(), 0.0);
        assert!(predict_variance(1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn rate_arithmetic_and_domain() {
        assert_abs_diff_eq!(contraction_rate(0.5, 0.5).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(contraction_rate(0.1, 0.25).unwrap(), 0.925, epsilon = 1e-15);
        assert!(contraction_rate(1e-9, 0.5).unwrap() > 1.0 - 1e-8);
        assert!(contraction_rate(1.0, 0.5).is_err());
        assert!(contraction_rate(0.5, 0.0).is_err());
    }

    #[test]
    fn fits_its_own_model() {
        let s: Vec<f64> = (0..40).map(|t| 0.9f64.powi(t)).collect();
        let fit = estimate_lambda(&s, 0..s.len()).unwrap();
        assert_abs_diff_eq!(fit.lambda, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        let flat = estimate_lambda(&[2.0; 10], 0..10).unwrap();
        assert_eq!(flat.lambda, 1.0);
        assert_eq!(flat.r_squared, 1.0);
    }

    #[test]
    fn zero_truncates_window() {
        let s = [1.0, 0.5, 0.25, 0.125, 0.0, 0.01];
        let fit = estimate_lambda(&s, 0..6).unwrap();
        assert_eq!(fit.truncated_at, Some(4));
        assert_eq!(fit.points, 4);
        assert_abs_diff_eq!(fit.lambda, 0.5, epsilon = 1e-12);
        assert!(estimate_lambda(&[1.0, 0.0, 1.0], 0..3).is_err());
    }
}
