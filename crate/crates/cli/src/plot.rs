//! Minimal deterministic SVG line and step plots.

use std::fmt::Write;

use anyhow::{bail, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Solid,
    Dashed,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Series {
    /// Step outline of a histogram given as (lo, hi, height) rows.
    pub fn histogram(label: &str, rows: &[(f64, f64, f64)]) -> Self {
        let mut points = Vec::with_capacity(2 * rows.len() + 2);
        if let Some(first) = rows.first() {
            points.push((first.0, 0.0));
        }
        for &(lo, hi, h) in rows {
            points.push((lo, h));
            points.push((hi, h));
        }
        if let Some(last) = rows.last() {
            points.push((last.1, 0.0));
        }
        Self {
            label: label.to_string(),
            points,
            style: Style::Solid,
        }
    }

    /// Counting function N(k) through sorted `ks`, raised by `shift`.
    pub fn staircase(label: &str, ks: &[f64], shift: f64) -> Self {
        let mut points = Vec::with_capacity(2 * ks.len());
        for (i, &k) in ks.iter().enumerate() {
            points.push((k, i as f64 + shift));
            points.push((k, (i + 1) as f64 + shift));
        }
        Self {
            label: label.to_string(),
            points,
            style: Style::Solid,
        }
    }

    pub fn curve(label: &str, f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Self {
        let points = (0..=n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                (x, f(x))
            })
            .collect();
        Self {
            label: label.to_string(),
            points,
            style: Style::Dashed,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// 1, 2 or 5 times a power of ten, about `span / 5`.
fn tick_step(span: f64) -> f64 {
    let raw = span / 5.0;
    let p = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * p).find(|&s| s >= raw).unwrap_or(10.0 * p)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = tick_step(hi - lo);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label_num(x: f64) -> String {
    let s = format!("{x:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

pub fn render(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> Result<String> {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
    if all.is_empty() {
        bail!("nothing to plot");
    }
    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    y0 = y0.min(0.0);
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )?;
    writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#)?;
    writeln!(s, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, MARGIN_L + pw / 2.0, escape(title))?;
    writeln!(
        s,
        r##"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#333"/>"##
    )?;
    for t in ticks(x0, x1) {
        let x = sx(t);
        writeln!(s, r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##, MARGIN_T + ph, MARGIN_T + ph + 5.0)?;
        writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_T + ph + 19.0, label_num(t))?;
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_L}" y2="{y:.2}" stroke="#333"/>"##, MARGIN_L - 5.0)?;
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_L - 8.0, y + 4.0, label_num(t))?;
    }
    writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, MARGIN_L + pw / 2.0, HEIGHT - 12.0, escape(xlabel))?;
    writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(ylabel)
    )?;
    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = match ser.style {
            Style::Solid => "",
            Style::Dashed => r#" stroke-dasharray="6 4""#,
        };
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        )?;
        let ly = MARGIN_T + 14.0 + 20.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"{dash}/>"#,
            lx + 24.0
        )?;
        writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 30.0, ly + 4.0, escape(&ser.label))?;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(tick_step(37.0), 10.0);
    }

    #[test]
    fn legend_lists_every_series() {
        let a = Series::histogram("mc", &[(0.0, 1.0, 0.5), (1.0, 2.0, 0.5)]);
        let b = Series::curve("wigner <GOE>", |x| x, 0.0, 2.0, 10);
        let svg = render("t", "s", "P(s)", &[a, b]).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("wigner &lt;GOE&gt;"));
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(render("t", "x", "y", &[]).is_err());
        assert!(render("t", "x", "y", &[Series::staircase("n", &[], 0.0)]).is_err());
    }
}
