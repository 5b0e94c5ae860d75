//! Minimal standalone SVG line plots of regret curves.

use std::fmt::Write;

use crate::harness::RegretCurve;

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Centered rolling mean over `window` consecutive grid points.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Per-`n` mean and standard deviation across seeds.
fn seed_stats(curve: &RegretCurve, policy: &str, target: &str) -> Vec<(usize, f64, f64)> {
    let mut ns: Vec<usize> = curve.rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let v: Vec<f64> = curve
                .rows
                .iter()
                .filter(|r| r.n == n && r.policy == policy && r.target == target && r.error.is_none())
                .map(|r| r.regret)
                .collect();
            if v.is_empty() {
                return None;
            }
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            Some((n, m, sd))
        })
        .collect()
}

pub fn regret_svg(curve: &RegretCurve, target: &str, policies: &[&str], window: usize) -> String {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let series: Vec<(&str, Vec<(usize, f64, f64)>)> = policies
        .iter()
        .map(|&p| {
            let stats = seed_stats(curve, p, target);
            let means = rolling_mean(&stats.iter().map(|s| s.1).collect::<Vec<_>>(), window);
            let sds = rolling_mean(&stats.iter().map(|s| s.2).collect::<Vec<_>>(), window);
            let pts = stats.iter().zip(means).zip(sds).map(|((s, m), sd)| (s.0, m, sd)).collect();
            (p, pts)
        })
        .collect();
    let all: Vec<&(usize, f64, f64)> = series.iter().flat_map(|(_, s)| s).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">regret on target {target}</text>"#,
        w / 2.0
    );
    if all.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let x_min = all.iter().map(|p| p.0).min().unwrap_or(0) as f64;
    let x_max = all.iter().map(|p| p.0).max().unwrap_or(1) as f64;
    let y_min = all.iter().map(|p| p.1 - p.2).fold(f64::INFINITY, f64::min).min(0.0);
    let y_max = all.iter().map(|p| p.1 + p.2).fold(f64::NEG_INFINITY, f64::max).max(y_min + 1e-9);
    let sx = |x: f64| pad + (x - x_min) / (x_max - x_min).max(1.0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y_min) / (y_max - y_min) * (h - 2.0 * pad);
    let _ = writeln!(
        out,
        r#"<line x1="{pad}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{pad}" y1="{pad}" x2="{pad}" y2="{}" stroke="black"/>"#,
        h - pad,
        w - pad,
        h - pad,
        h - pad
    );
    let _ = writeln!(
        out,
        r#"<text x="{pad}" y="{}" font-family="sans-serif" font-size="11">n={x_min}</text><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="11">n={x_max}</text>"#,
        h - pad + 16.0,
        w - pad,
        h - pad + 16.0
    );
    let _ = writeln!(
        out,
        r#"<text x="4" y="{}" font-family="sans-serif" font-size="11">{y_max:.3}</text><text x="4" y="{}" font-family="sans-serif" font-size="11">{y_min:.3}</text>"#,
        pad,
        h - pad
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let upper: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0 as f64), sy(p.1 + p.2))).collect();
        let lower: Vec<String> = pts.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.0 as f64), sy(p.1 - p.2))).collect();
        let _ = writeln!(
            out,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.0 as f64), sy(p.1))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"><title>{name}</title></polyline>"#,
            line.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{color}" font-family="sans-serif" font-size="12">{name}</text>"#,
            w - pad - 80.0,
            pad + 16.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}
