//! Self-contained SVG charts. Output depends only on the data, so re-runs
//! produce identical files.

use std::f64::consts::TAU;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 52.0;

fn header(out: &mut String, w: f64, h: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
}

fn polyline(out: &mut String, points: &[(f64, f64)], style: &str) {
    if points.len() < 2 {
        return;
    }
    let coords: Vec<String> = points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(out, r#"<polyline fill="none" {style} points="{}"/>"#, coords.join(" "));
}

/// Inputs of the variance chart beyond the measured series.
#[derive(Clone, Copy, Debug, Default)]
pub struct VarianceOverlay {
    /// Theoretical contraction rate, drawn as `λᵗσ₀²`.
    pub lambda: Option<f64>,
    /// Fitted rate and its r².
    pub fit: Option<(f64, f64)>,
}

/// σ² per step on a log axis with optional rate lines.
pub fn variance_chart(sigma2: &[f64], overlay: VarianceOverlay) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT);
    let steps = sigma2.len().saturating_sub(1).max(1) as f64;
    let s0 = sigma2.first().copied().unwrap_or(1.0);
    let line = |rate: f64| -> Vec<(f64, f64)> {
        (0..sigma2.len())
            .map(|t| (t as f64, s0 * rate.powi(t as i32)))
            .collect()
    };
    let prediction = overlay.lambda.map(line);
    let fitted = overlay.fit.map(|(l, _)| line(l));

    let positive = sigma2
        .iter()
        .chain(prediction.iter().flatten().map(|p| &p.1))
        .chain(fitted.iter().flatten().map(|p| &p.1))
        .copied()
        .filter(|v| *v > 0.0 && v.is_finite());
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (1e-3, 1.0) };
    let d_lo = lo.log10().floor();
    let d_hi = hi.log10().ceil().max(d_lo + 1.0);
    let px = |t: f64| LEFT + t / steps * (WIDTH - LEFT - RIGHT);
    // Zeros sit on the bottom axis.
    let py = |v: f64| {
        let l = if v > 0.0 { v.log10().max(d_lo) } else { d_lo };
        TOP + (d_hi - l) / (d_hi - d_lo) * (HEIGHT - TOP - BOTTOM)
    };

    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" font-size="15" text-anchor="middle">Pose variance per bootstrap step</text>"#,
        WIDTH / 2.0
    );
    let mut d = d_lo;
    while d <= d_hi + 1e-9 {
        let y = py(10f64.powf(d));
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            WIDTH - RIGHT,
            LEFT - 6.0,
            y + 4.0
        );
        d += 1.0;
    }
    let tick = (steps / 10.0).ceil().max(1.0);
    let mut t = 0.0;
    while t <= steps + 1e-9 {
        let x = px(t);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#,
            HEIGHT - BOTTOM + 18.0
        );
        t += tick;
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step t</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 10.0
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">σ² (log scale)</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0
    );

    let to_px = |pts: &[(f64, f64)]| pts.iter().map(|(t, v)| (px(*t), py(*v))).collect::<Vec<_>>();
    if let Some(p) = &fitted {
        polyline(
            &mut out,
            &to_px(p),
            r##"stroke="#888" stroke-width="1.5" stroke-dasharray="2 3""##,
        );
    }
    if let Some(p) = &prediction {
        polyline(
            &mut out,
            &to_px(p),
            r##"stroke="#c0392b" stroke-width="1.5" stroke-dasharray="6 4""##,
        );
    }
    let measured: Vec<(f64, f64)> = sigma2.iter().enumerate().map(|(t, v)| (t as f64, *v)).collect();
    polyline(&mut out, &to_px(&measured), r##"stroke="#1f4e9c" stroke-width="2""##);

    let mut y = TOP + 16.0;
    let x = WIDTH - RIGHT - 8.0;
    let _ = writeln!(
        out,
        r##"<text x="{x:.2}" y="{y:.2}" text-anchor="end" fill="#1f4e9c">measured σ²ₜ</text>"##
    );
    if let Some(l) = overlay.lambda {
        y += 16.0;
        let _ = writeln!(
            out,
            r##"<text id="lambda" data-value="{l}" x="{x:.2}" y="{y:.2}" text-anchor="end" fill="#c0392b">prediction λᵗσ₀², λ = {l:.4}</text>"##
        );
    }
    if let Some((l, r2)) = overlay.fit {
        y += 16.0;
        let _ = writeln!(
            out,
            r##"<text id="fit" data-value="{l}" x="{x:.2}" y="{y:.2}" text-anchor="end" fill="#555">fitted λ̂ = {l:.4} (r² = {r2:.4})</text>"##
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One polar accuracy chart: accuracy per rotation angle at a fixed scale,
/// with the enclosed area shaded.
pub fn polar_chart(title: &str, angles: &[f64], accuracy: &[f64]) -> String {
    let size = 420.0;
    let (cx, cy, radius) = (size / 2.0, size / 2.0 + 14.0, 160.0);
    let mut out = String::new();
    header(&mut out, size, size + 20.0);
    let mean = if accuracy.is_empty() {
        0.0
    } else {
        accuracy.iter().sum::<f64>() / accuracy.len() as f64
    };
    let _ = writeln!(
        out,
        r#"<text x="{cx}" y="22" font-size="15" text-anchor="middle">{title}, mean accuracy {mean:.3}</text>"#
    );
    for ring in [0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            out,
            r##"<circle cx="{cx}" cy="{cy}" r="{:.2}" fill="none" stroke="#ccc"/><text x="{:.2}" y="{:.2}" fill="#888" font-size="10">{ring}</text>"##,
            ring * radius,
            cx + 3.0,
            cy - ring * radius - 2.0
        );
    }
    let point = |theta: f64, r: f64| (cx + r * radius * theta.cos(), cy - r * radius * theta.sin());
    for &theta in angles {
        let (x, y) = point(theta, 1.0);
        let _ = writeln!(
            out,
            r##"<line x1="{cx}" y1="{cy}" x2="{x:.2}" y2="{y:.2}" stroke="#eee"/>"##
        );
        let (lx, ly) = point(theta, 1.1);
        let deg = (theta.rem_euclid(TAU)).to_degrees();
        let _ = writeln!(
            out,
            r#"<text x="{lx:.2}" y="{:.2}" font-size="10" text-anchor="middle">{deg:.0}°</text>"#,
            ly + 3.0
        );
    }
    let pts: Vec<String> = angles
        .iter()
        .zip(accuracy)
        .map(|(t, a)| {
            let (x, y) = point(*t, *a);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(
        out,
        r##"<polygon points="{}" fill="#1f4e9c" fill-opacity="0.25" stroke="#1f4e9c" stroke-width="2"/>"##,
        pts.join(" ")
    );
    out.push_str("</svg>\n");
    out
}
