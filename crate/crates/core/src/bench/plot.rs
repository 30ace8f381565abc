//! Minimal deterministic SVG output: coverage scatter and line curves.

use std::fmt::Write as _;

use crate::archive::Repertoire;
use crate::error::{contract, Result};

pub const CANVAS: f64 = 600.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// Affine map of `[lo, hi]` onto the plot area; y grows upward.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(a, b): (f64, f64)| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        Self {
            x: widen(x),
            y: widen(y),
        }
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (CANVAS - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        CANVAS - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (CANVAS - 2.0 * MARGIN)
    }
}

fn header(out: &mut String, title: &str, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (lo, hi) = (MARGIN, CANVAS - MARGIN);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="{lo}" y="{lo}" width="{w}" height="{w}" fill="none" stroke="black"/>"#,
        w = hi - lo
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="30" text-anchor="middle" font-size="14">{title}</text>"#,
        CANVAS / 2.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#,
        CANVAS / 2.0,
        CANVAS - 15.0
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{c}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {c})">{ylabel}</text>"#,
        c = CANVAS / 2.0
    );
    for (v, anchor, x) in [(frame.x.0, "start", lo), (frame.x.1, "end", hi)] {
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#,
            hi + 14.0
        );
    }
    for (v, y) in [(frame.y.0, hi), (frame.y.1, lo + 8.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.3}</text>"#,
            lo - 4.0
        );
    }
}

/// Scatter of the first two control dimensions (compensated), with axes
/// spanning the repertoire's declared behavior bounds.
pub fn coverage_svg(repertoire: &Repertoire) -> String {
    let dims = repertoire.control_dims();
    let bounds = repertoire.behavior_bounds();
    let xd = dims[0];
    let yd = dims.get(1).copied();
    let frame = Frame::new(bounds[xd], yd.map_or((-1.0, 1.0), |d| bounds[d]));
    let mut out = String::new();
    header(
        &mut out,
        &format!("{} actions", repertoire.len()),
        &frame,
        &format!("behavior {xd}"),
        &yd.map_or("-".into(), |d| format!("behavior {d}")),
    );
    for ind in repertoire.individuals() {
        let x = frame.px(ind.compensated_at(xd));
        let y = frame.py(yd.map_or(0.0, |d| ind.compensated_at(d)));
        let _ = writeln!(
            out,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{}" fill-opacity="0.6"/>"#,
            COLORS[0]
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Line plot of every numeric column against the first one.
pub fn curves_svg(title: &str, csv_text: &str) -> Result<String> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if names.len() < 2 {
        return Err(contract("a curve file needs at least two columns"));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| crate::Error::Parse {
                line: line + 2,
                msg: format!("column {} is not numeric: {field:?}", names[k]),
            })?;
            cols[k].push(v);
        }
    }
    let finite = |c: &[f64]| {
        c.iter()
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)))
    };
    let xr = finite(&cols[0]);
    let yr = cols[1..]
        .iter()
        .map(|c| finite(c))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    let fix = |r: (f64, f64)| if r.0.is_finite() { r } else { (0.0, 1.0) };
    let frame = Frame::new(fix(xr), fix(yr));
    let mut out = String::new();
    header(&mut out, title, &frame, &names[0], "value");
    for (k, col) in cols.iter().enumerate().skip(1) {
        let color = COLORS[(k - 1) % COLORS.len()];
        let pts: Vec<String> = cols[0]
            .iter()
            .zip(col)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="10" fill="{color}">{}</text>"#,
            MARGIN + 6.0,
            MARGIN + 14.0 * k as f64,
            names[k]
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
