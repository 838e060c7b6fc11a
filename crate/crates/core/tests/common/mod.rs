#![allow(dead_code)]

use pseudolattice::geom::{dist, Vec2};
use pseudolattice::models::ActionChart;

/// Brute-force inverse of `phi`: nearest node of a dense grid over the chart
/// coordinates, refined by repeated 5 x 5 zooming.
pub struct GridOracle<'a> {
    chart: &'a ActionChart,
    nodes: Vec<(Vec2, Vec2)>,
    spacing: Vec2,
}

impl<'a> GridOracle<'a> {
    pub fn new(chart: &'a ActionChart, n: usize) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (xi, _) in &chart.grid {
            for d in 0..2 {
                lo[d] = lo[d].min(xi[d]);
                hi[d] = hi[d].max(xi[d]);
            }
        }
        let pad = [0.05 * (hi[0] - lo[0]), 0.05 * (hi[1] - lo[1])];
        let lo = [lo[0] - pad[0], lo[1] - pad[1]];
        let hi = [hi[0] + pad[0], hi[1] + pad[1]];
        let spacing = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
        let mut nodes = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let xi = [lo[0] + i as f64 * spacing[0], lo[1] + j as f64 * spacing[1]];
                if let Ok(w) = chart.phi(xi) {
                    nodes.push((xi, w));
                }
            }
        }
        GridOracle { chart, nodes, spacing }
    }

    pub fn invert(&self, target: Vec2) -> Vec2 {
        let mut center = self
            .nodes
            .iter()
            .min_by(|a, b| dist(a.1, target).total_cmp(&dist(b.1, target)))
            .expect("nonempty grid")
            .0;
        let mut half = self.spacing;
        while half[0].max(half[1]) > 1e-14 {
            let mut best = (f64::INFINITY, center);
            for i in 0..5 {
                for j in 0..5 {
                    let xi = [
                        center[0] + half[0] * (i as f64 / 2.0 - 1.0),
                        center[1] + half[1] * (j as f64 / 2.0 - 1.0),
                    ];
                    if let Ok(w) = self.chart.phi(xi) {
                        let d = dist(w, target);
                        if d < best.0 {
                            best = (d, xi);
                        }
                    }
                }
            }
            center = best.1;
            half = [half[0] / 2.0, half[1] / 2.0];
        }
        center
    }
}
