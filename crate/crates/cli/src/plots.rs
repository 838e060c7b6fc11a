//! Deterministic SVG plots with a fixed viewport.

use pseudolattice::detect::HChart;
use pseudolattice::geom::{Rect, Vec2};
use pseudolattice::monodromy::LoopPath;
use pseudolattice::synth::SpectrumCloud;
use std::collections::BTreeMap;
use std::fmt::Write;

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 48.0;
const HISTOGRAM_BINS: usize = 20;

/// Affine map from a data box onto the plot area, y pointing up.
struct Frame {
    lo: Vec2,
    hi: Vec2,
}

impl Frame {
    fn around<'a>(points: impl IntoIterator<Item = &'a Vec2>) -> Frame {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        if !lo[0].is_finite() {
            return Frame {
                lo: [0.0, 0.0],
                hi: [1.0, 1.0],
            };
        }
        for d in 0..2 {
            let pad = 0.05 * (hi[d] - lo[d]).max(1e-12);
            lo[d] -= pad;
            hi[d] += pad;
        }
        Frame { lo, hi }
    }

    fn map(&self, p: Vec2) -> (f64, f64) {
        let sx = (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]);
        let sy = (p[1] - self.lo[1]) / (self.hi[1] - self.lo[1]);
        (
            MARGIN + sx * (WIDTH - 2.0 * MARGIN),
            HEIGHT - MARGIN - sy * (HEIGHT - 2.0 * MARGIN),
        )
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
}

fn axis_labels(out: &mut String, frame: &Frame, x: &str, y: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.1}" font-family="sans-serif" font-size="10">{:.6}</text>"#,
        HEIGHT - MARGIN + 14.0,
        frame.lo[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="10" text-anchor="end">{:.6}</text>"#,
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 14.0,
        frame.hi[0]
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn clip(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot"><rect x="{MARGIN}" y="{MARGIN}" width="{:.1}" height="{:.1}"/></clipPath></defs>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
}

/// Eigenvalues in scaled coordinates `(Re mu, Im mu / eps)` as circles, with
/// the lattice lines `k1 = const` and `k2 = const` of a fitted chart.
pub fn plot_spectrum(cloud: &SpectrumCloud, hchart: Option<&HChart>) -> String {
    let eps = cloud.params.epsilon;
    let points: Vec<Vec2> = cloud.points.iter().map(|p| [p.mu.re, p.mu.im / eps]).collect();
    let frame = Frame::around(&points);
    let mut out = String::new();
    header(&mut out, &format!("spectrum, {} eigenvalues", points.len()));
    clip(&mut out);
    if let Some(chart) = hchart {
        let _ = writeln!(
            out,
            r#"<g class="lattice" clip-path="url(#plot)" fill="none" stroke="steelblue" stroke-width="0.6">"#
        );
        for line in lattice_lines(chart) {
            let coords: Vec<String> = line
                .iter()
                .map(|&u| {
                    let (x, y) = frame.map(u);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(out, r#"<polyline points="{}"/>"#, coords.join(" "));
        }
        let _ = writeln!(out, "</g>");
    }
    let _ = writeln!(out, r#"<g class="cloud" fill="black">"#);
    for &p in &points {
        let (x, y) = frame.map(p);
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.2"/>"#);
    }
    let _ = writeln!(out, "</g>");
    axis_labels(&mut out, &frame, "Re mu", "Im mu / eps");
    let _ = writeln!(out, "</svg>");
    out
}

/// One polyline per label value in each direction, through the chart
/// preimages of the integer nodes carried by the labeled points.
pub fn lattice_lines(chart: &HChart) -> Vec<Vec<Vec2>> {
    let mut lines = Vec::new();
    for axis in 0..2 {
        let other = 1 - axis;
        let mut ranges: BTreeMap<i64, (i64, i64)> = BTreeMap::new();
        for l in &chart.labels {
            let e = ranges.entry(l[axis]).or_insert((l[other], l[other]));
            e.0 = e.0.min(l[other]);
            e.1 = e.1.max(l[other]);
        }
        for (&k, &(a, b)) in &ranges {
            let line: Vec<Vec2> = (a..=b)
                .filter_map(|t| {
                    let mut node = [0.0; 2];
                    node[axis] = chart.h * k as f64;
                    node[other] = chart.h * t as f64;
                    chart.inverse(node).ok()
                })
                .collect();
            lines.push(line);
        }
    }
    lines
}

/// Histogram of residuals in units of `h`, with the acceptance threshold.
pub fn plot_residuals(residuals: &[f64], threshold: f64) -> String {
    let top = residuals.iter().cloned().fold(threshold, f64::max);
    let mut counts = [0usize; HISTOGRAM_BINS];
    for &r in residuals {
        let b = ((r / top) * HISTOGRAM_BINS as f64).floor() as usize;
        counts[b.min(HISTOGRAM_BINS - 1)] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(0).max(1) as f64;
    let frame = Frame {
        lo: [0.0, 0.0],
        hi: [top, peak],
    };
    let mut out = String::new();
    header(&mut out, &format!("residuals / h, {} points", residuals.len()));
    let _ = writeln!(out, r#"<g class="bars" fill="gray" stroke="black" stroke-width="0.5">"#);
    for (i, &c) in counts.iter().enumerate() {
        let (x0, y0) = frame.map([top * i as f64 / HISTOGRAM_BINS as f64, c as f64]);
        let (x1, y1) = frame.map([top * (i + 1) as f64 / HISTOGRAM_BINS as f64, 0.0]);
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }
    let _ = writeln!(out, "</g>");
    let (tx, _) = frame.map([threshold, 0.0]);
    let _ = writeln!(
        out,
        r#"<line class="threshold" x1="{tx:.3}" y1="{MARGIN}" x2="{tx:.3}" y2="{:.1}" stroke="red" stroke-dasharray="4 3"/>"#,
        HEIGHT - MARGIN
    );
    axis_labels(&mut out, &frame, "residual / h", "count");
    let _ = writeln!(out, "</svg>");
    out
}

/// Loop, pseudo-chart domains and chart values in the value plane, with
/// marked critical values.
pub fn plot_loop(path: &LoopPath, domains: &[Rect], values: &[Vec2], marks: &[Vec2]) -> String {
    let mut all: Vec<Vec2> = path.vertices.clone();
    for d in domains {
        all.push(d.lo());
        all.push(d.hi());
    }
    all.extend_from_slice(marks);
    let frame = Frame::around(&all);
    let mut out = String::new();
    header(&mut out, &format!("loop with {} charts", domains.len()));
    let _ = writeln!(
        out,
        r#"<g class="domains" fill="none" stroke="lightgray" stroke-width="0.5">"#
    );
    for d in domains {
        let (x0, y0) = frame.map([d.lo()[0], d.hi()[1]]);
        let (x1, y1) = frame.map([d.hi()[0], d.lo()[1]]);
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}"/>"#,
            x1 - x0,
            y1 - y0
        );
    }
    let _ = writeln!(out, "</g>");
    let coords: Vec<String> = path
        .vertices
        .iter()
        .map(|&v| {
            let (x, y) = frame.map(v);
            format!("{x:.3},{y:.3}")
        })
        .collect();
    let _ = writeln!(
        out,
        r#"<polygon class="loop" points="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
        coords.join(" ")
    );
    let _ = writeln!(out, r#"<g class="values" fill="steelblue">"#);
    for &v in values {
        let (x, y) = frame.map(v);
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.5"/>"#);
    }
    let _ = writeln!(out, "</g>");
    for &m in marks {
        let (x, y) = frame.map(m);
        let _ = writeln!(
            out,
            r#"<path class="critical" d="M {:.3} {:.3} L {:.3} {:.3} M {:.3} {:.3} L {:.3} {:.3}" stroke="red" stroke-width="1.5"/>"#,
            x - 5.0,
            y - 5.0,
            x + 5.0,
            y + 5.0,
            x - 5.0,
            y + 5.0,
            x + 5.0,
            y - 5.0
        );
    }
    axis_labels(&mut out, &frame, "E", "G");
    let _ = writeln!(out, "</svg>");
    out
}
