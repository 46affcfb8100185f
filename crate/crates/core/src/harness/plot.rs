//! Self-contained SVG regret plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::aggregate::AggregateBand;
use crate::error::{Error, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const FALLBACK: [&str; 6] = ["#8c564b", "#9467bd", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];

/// Fixed color per policy label.
pub fn policy_color(policy: &str) -> &'static str {
    match policy {
        "GBOSE" => "#d62728",
        "TS" => "#1f77b4",
        "SemiTS" => "#2ca02c",
        "ActionTS" => "#ff7f0e",
        other => {
            // FNV-1a keeps unknown labels stable across runs
            let h = other
                .bytes()
                .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
            FALLBACK[(h % FALLBACK.len() as u64) as usize]
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Rounds `x` up to 1, 2, 2.5 or 5 times a power of ten.
fn nice_ceiling(x: f64) -> f64 {
    if x.is_nan() || x <= 0.0 {
        return 1.0;
    }
    let p = 10f64.powf(x.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * p >= x {
            return m * p;
        }
    }
    10.0 * p
}

fn tick_label(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

/// Renders one figure: per band a solid median path and two dashed quartile
/// paths. Axes and legend use lines and text only.
pub fn render_svg(title: &str, bands: &[AggregateBand]) -> Result<String> {
    if bands.is_empty() || bands.iter().any(|b| b.times.is_empty()) {
        return Err(Error::invalid("cannot plot empty bands"));
    }
    let t_max = bands
        .iter()
        .filter_map(|b| b.times.last())
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let y_max = nice_ceiling(
        bands
            .iter()
            .flat_map(|b| b.q3.iter().chain(&b.median))
            .fold(0.0f64, |a, v| if v.is_finite() { a.max(*v) } else { a }),
    );
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |t: f64| LEFT + pw * t / t_max;
    let sy = |v: f64| TOP + ph * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );

    // axes
    let _ = writeln!(s, r#"<g class="axes" stroke="black" stroke-width="1">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/>"#,
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(s, r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}"/>"#, TOP + ph);
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let (x, y) = (sx(f * t_max), sy(f * y_max));
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}"/>"#, LEFT - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="tick-labels" font-family="sans-serif" font-size="11">"#);
    for k in 0..=TICKS {
        let f = k as f64 / TICKS as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(f * t_max),
            TOP + ph + 18.0,
            tick_label((f * t_max).round())
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            sy(f * y_max) + 4.0,
            tick_label(f * y_max)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">cumulative regret</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    let _ = writeln!(s, "</g>");

    for b in bands {
        let color = policy_color(&b.meta.policy);
        for (values, dashed) in [(&b.median, false), (&b.q1, true), (&b.q3, true)] {
            let mut d = String::new();
            for (i, (t, v)) in b.times.iter().zip(values.iter()).enumerate() {
                let _ = write!(
                    d,
                    "{}{:.2},{:.2}",
                    if i == 0 { "M" } else { " L" },
                    sx(*t as f64),
                    sy(*v)
                );
            }
            let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
            let _ = writeln!(
                s,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{}"{dash}/>"#,
                if dashed { 1.0 } else { 2.0 }
            );
        }
    }

    let _ = writeln!(s, r#"<g class="legend" font-family="sans-serif" font-size="12">"#);
    for (i, b) in bands.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="{}" stroke-width="2"/>"#,
            x + 25.0,
            policy_color(&b.meta.policy)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{} ({})</text>"#,
            x + 32.0,
            y + 4.0,
            escape(&b.meta.policy),
            tick_label(b.meta.gamma_mult)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

/// Groups bands by environment label (first-seen order) and writes
/// `<label>.svg` for each group.
pub fn render_figures(bands: &[AggregateBand], dir: &Path) -> Result<Vec<PathBuf>> {
    if bands.is_empty() {
        return Err(Error::invalid("no bands to plot"));
    }
    let mut groups: Vec<(&str, Vec<AggregateBand>)> = Vec::new();
    for b in bands {
        match groups.iter_mut().find(|(l, _)| *l == b.meta.env_label) {
            Some((_, v)) => v.push(b.clone()),
            None => groups.push((&b.meta.env_label, vec![b.clone()])),
        }
    }
    fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(groups.len());
    for (label, group) in groups {
        let file: String = label
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
            .collect();
        let path = dir.join(format!("{file}.svg"));
        fs::write(&path, render_svg(label, &group)?)?;
        paths.push(path);
    }
    Ok(paths)
}
