//! Minimal SVG main-effect plots: solid posterior mean, dashed 5% and 95%
//! bands, dashed vertical line at the minimizing grid value.

use std::fmt::Write as _;
use std::path::Path;

use hypersens_core::sensitivity::{MainEffectCurve, SensitivityReport};

use crate::error::{io_at, Result};

const W: f64 = 560.0;
const H: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Render one curve. `ylabel` names the response; `tag` goes into a
/// comment for provenance.
pub fn curve_svg(curve: &MainEffectCurve, ylabel: &str, tag: &str) -> String {
    let (x0, x1) = (curve.grid[0], curve.grid[curve.grid.len() - 1]);
    let all = curve.q05.iter().chain(&curve.q95).chain(&curve.mean_curve);
    let (mut y0, mut y1) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
        (a.min(v), b.max(v))
    });
    let pad = if y1 > y0 {
        0.05 * (y1 - y0)
    } else {
        0.05 * y0.abs().max(1.0)
    };
    y0 -= pad;
    y1 += pad;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);
    let path = |ys: &[f64]| {
        let mut d = String::new();
        for (i, (x, y)) in curve.grid.iter().zip(ys).enumerate() {
            let _ = write!(
                d,
                "{}{:.2},{:.2}",
                if i == 0 { "M" } else { " L" },
                px(*x),
                py(*y)
            );
        }
        d
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, "<!-- {tag} -->");
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for t in ticks(x0, x1, 5) {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            H - BOTTOM,
            H - BOTTOM + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
            H - BOTTOM + 19.0,
            label(t)
        );
    }
    for t in ticks(y0, y1, 5) {
        let y = py(t);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#,
            LEFT - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-size="12" text-anchor="end" font-family="sans-serif">{}</text>"#,
            LEFT - 8.0,
            y + 4.0,
            label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        (LEFT + W - RIGHT) / 2.0,
        H - 10.0,
        curve.name
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="14" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 {})">{ylabel}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    );
    for band in [&curve.q05, &curve.q95] {
        let _ = writeln!(
            s,
            r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
            path(band)
        );
    }
    let _ = writeln!(
        s,
        r#"<path d="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        path(&curve.mean_curve)
    );
    let xm = px(curve.argmin);
    let _ = writeln!(
        s,
        r#"<line x1="{xm:.2}" y1="{TOP}" x2="{xm:.2}" y2="{}" stroke="red" stroke-width="1.5" stroke-dasharray="4 4"/>"#,
        H - BOTTOM
    );
    s.push_str("</svg>\n");
    s
}

/// One `<name>.svg` per input of the report.
pub fn write_plots(report: &SensitivityReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io_at(dir))?;
    let metric = report
        .metadata
        .get("metric")
        .map(String::as_str)
        .unwrap_or("response");
    let tag = format!(
        "config {}",
        report
            .metadata
            .get("config_hash")
            .map(String::as_str)
            .unwrap_or("unknown")
    );
    let ylabel = format!("main effect ({metric})");
    for c in &report.curves {
        let path = dir.join(format!("{}.svg", c.name));
        std::fs::write(&path, curve_svg(c, &ylabel, &tag)).map_err(io_at(&path))?;
    }
    Ok(())
}
