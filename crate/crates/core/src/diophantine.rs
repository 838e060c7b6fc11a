//! Diophantine frequencies and the good-value set.
//!
//! The lattice sweep is truncated at `|k| <= k_max`, so a positive answer is
//! only certified up to that radius.

use crate::geom::{Rect, Vec2};
use crate::models::ActionChart;
use crate::table::{fmt_f64, Table};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub alpha: f64,
    pub d: f64,
    pub k_max: u32,
}

impl DiophantineParams {
    pub fn new(alpha: f64, d: f64, k_max: u32) -> Result<Self> {
        let p = DiophantineParams { alpha, d, k_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {} must be positive",
                self.alpha
            )));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!("d = {} must be positive", self.d)));
        }
        if self.k_max < 100 {
            return Err(Error::InvalidParameter(format!(
                "k_max = {} must be at least 100",
                self.k_max
            )));
        }
        Ok(())
    }
}

impl Default for DiophantineParams {
    fn default() -> Self {
        DiophantineParams {
            alpha: 1e-3,
            d: 1.0,
            k_max: 10_000,
        }
    }
}

/// First lattice vector violating `|<omega, k>| >= alpha / |k|^(1+d)`.
///
/// Only one of `k, -k` is visited. For each value of the coordinate paired
/// with the smaller frequency component, the other coordinate is scanned
/// outward from the nearest resonance while `|<omega, k>| < alpha`, which is
/// necessary for a violation since `|k| >= 1`.
pub fn diophantine_witness(omega: Vec2, params: &DiophantineParams) -> Option<[i64; 2]> {
    let (i, j) = if omega[0].abs() <= omega[1].abs() {
        (0, 1)
    } else {
        (1, 0)
    };
    let (wi, wj) = (omega[i], omega[j]);
    if wj == 0.0 {
        return Some(if i == 0 { [1, 0] } else { [0, 1] });
    }
    let kmax = params.k_max as i64;
    let kmax2 = (kmax * kmax) as f64;
    let alpha = params.alpha;
    let expo = 0.5 * (1.0 + params.d);
    let violates = |ki: i64, kj: i64| -> Option<bool> {
        let n2 = (ki * ki + kj * kj) as f64;
        if n2 == 0.0 || n2 > kmax2 {
            return None;
        }
        let v = (wi * ki as f64 + wj * kj as f64).abs();
        if v >= alpha {
            return None;
        }
        Some(v < alpha / n2.powf(expo))
    };
    let make = |ki: i64, kj: i64| {
        let mut k = [0; 2];
        k[i] = ki;
        k[j] = kj;
        k
    };
    for ki in 0..=kmax {
        let center = (-wi * ki as f64 / wj).round() as i64;
        for dir in [1i64, -1] {
            if ki == 0 && dir == -1 {
                continue;
            }
            let mut kj = match (ki, dir) {
                (0, _) => 1,
                (_, 1) => center,
                _ => center - 1,
            };
            loop {
                let v = (wi * ki as f64 + wj * kj as f64).abs();
                if v >= alpha || kj.abs() > kmax {
                    break;
                }
                if violates(ki, kj) == Some(true) {
                    return Some(make(ki, kj));
                }
                kj += dir;
            }
        }
    }
    None
}

pub fn is_diophantine(omega: Vec2, params: &DiophantineParams) -> bool {
    diophantine_witness(omega, params).is_none()
}

/// Grid of candidate values in the value plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rect: Rect,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodValueNode {
    pub value: Vec2,
    pub diophantine_ok: bool,
    pub dq_ok: bool,
    pub omega_prime_ok: bool,
    pub singular_ok: bool,
}

impl GoodValueNode {
    pub fn good(&self) -> bool {
        self.diophantine_ok && self.dq_ok && self.omega_prime_ok && self.singular_ok
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodValueSet {
    pub nodes: Vec<GoodValueNode>,
}

impl GoodValueSet {
    pub fn good_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.good()).count()
    }

    pub fn good_fraction(&self) -> f64 {
        self.good_count() as f64 / self.nodes.len() as f64
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["E", "G", "diophantine", "dq", "omega_prime", "singular", "good"]);
        for n in &self.nodes {
            let flag = |b: bool| if b { "1" } else { "0" }.to_string();
            t.push(vec![
                fmt_f64(n.value[0]),
                fmt_f64(n.value[1]),
                flag(n.diophantine_ok),
                flag(n.dq_ok),
                flag(n.omega_prime_ok),
                flag(n.singular_ok),
                flag(n.good()),
            ]);
        }
        t
    }
}

/// Evaluate the four exclusion clauses at the value `a`.
pub fn classify_value(chart: &ActionChart, a: Vec2, params: &DiophantineParams) -> Result<GoodValueNode> {
    let xi = chart.xi_of(a)?;
    let omega = chart.frequency_exact(xi)?;
    let dq = chart.model.avg_q_gradient();
    Ok(GoodValueNode {
        value: a,
        diophantine_ok: is_diophantine(omega, params),
        dq_ok: dq[0].hypot(dq[1]) >= params.alpha,
        omega_prime_ok: chart.omega_prime_norm(xi)? >= params.alpha,
        singular_ok: chart.model.singular_distance(a) >= params.alpha,
    })
}

pub fn good_values(chart: &ActionChart, params: &DiophantineParams, grid: &GridSpec) -> Result<GoodValueSet> {
    if grid.n == 0 {
        return Err(Error::EmptyGrid);
    }
    if !chart.domain.contains_rect(&grid.rect) {
        return Err(Error::OutsideDomain(grid.rect.center[0], grid.rect.center[1]));
    }
    let nodes = grid
        .rect
        .grid(grid.n, 1.0)
        .into_par_iter()
        .map(|a| classify_value(chart, a, params))
        .collect::<Result<Vec<_>>>()?;
    Ok(GoodValueSet { nodes })
}

/// Good value closest to `target` on a square spiral of spacing `step`.
pub fn nearest_good_value(
    chart: &ActionChart,
    target: Vec2,
    params: &DiophantineParams,
    step: f64,
    max_rings: usize,
) -> Result<GoodValueNode> {
    for ring in 0..=max_rings as i64 {
        let mut candidates = Vec::new();
        for a in -ring..=ring {
            for b in -ring..=ring {
                if a.abs().max(b.abs()) == ring {
                    candidates.push([target[0] + a as f64 * step, target[1] + b as f64 * step]);
                }
            }
        }
        candidates.sort_by(|p, q| {
            let dp = (p[0] - target[0]).hypot(p[1] - target[1]);
            let dq = (q[0] - target[0]).hypot(q[1] - target[1]);
            dp.total_cmp(&dq)
        });
        for c in candidates {
            if !chart.contains(c) {
                continue;
            }
            let node = classify_value(chart, c, params)?;
            if node.good() {
                return Ok(node);
            }
        }
    }
    Err(Error::NotGood(target[0], target[1]))
}

/// Monte-Carlo estimate of the bad fraction of the chart domain per `alpha`.
pub fn bad_measure_estimate(
    chart: &ActionChart,
    d: f64,
    k_max: u32,
    alpha_list: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if samples == 0 {
        return Err(Error::EmptyGrid);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lo = chart.domain.lo();
    let hi = chart.domain.hi();
    let points: Vec<Vec2> = (0..samples)
        .map(|_| [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])])
        .collect();
    let prepared = points
        .par_iter()
        .map(|&a| {
            let xi = chart.xi_of(a)?;
            let omega = chart.frequency_exact(xi)?;
            let wp = chart.omega_prime_norm(xi)?;
            Ok((a, omega, wp))
        })
        .collect::<Result<Vec<_>>>()?;
    let dq = chart.model.avg_q_gradient();
    let dq = dq[0].hypot(dq[1]);
    Ok(alpha_list
        .iter()
        .map(|&alpha| {
            let params = DiophantineParams { alpha, d, k_max };
            let bad = prepared
                .par_iter()
                .filter(|(a, omega, wp)| {
                    let node = GoodValueNode {
                        value: *a,
                        diophantine_ok: alpha <= 0.0 || is_diophantine(*omega, &params),
                        dq_ok: dq >= alpha,
                        omega_prime_ok: *wp >= alpha,
                        singular_ok: chart.model.singular_distance(*a) >= alpha,
                    };
                    !node.good()
                })
                .count();
            (alpha, bad as f64 / samples as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(alpha: f64, k_max: u32) -> DiophantineParams {
        DiophantineParams { alpha, d: 1.0, k_max }
    }

    #[test]
    fn resonant_frequency_has_a_witness() {
        let w = diophantine_witness([1.0, 2.0], &params(0.01, 10_000)).unwrap();
        assert_eq!(w[0] + 2 * w[1], 0);
        assert!(!is_diophantine([1.0, 2.0], &params(0.01, 10_000)));
    }

    #[test]
    fn zero_component() {
        let w = diophantine_witness([0.0, 1.0], &params(1.0, 100)).unwrap();
        assert_eq!(w, [1, 0]);
        assert_eq!(diophantine_witness([1.0, 0.0], &params(0.5, 100)).unwrap(), [0, 1]);
    }

    #[test]
    fn golden_frequency_is_diophantine() {
        let g = 0.5 * (1.0 + 5f64.sqrt());
        assert!(is_diophantine([1.0, g], &params(0.1, 10_000)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(DiophantineParams::new(0.0, 1.0, 1000).is_err());
        assert!(DiophantineParams::new(0.1, -1.0, 1000).is_err());
        assert!(DiophantineParams::new(0.1, 1.0, 99).is_err());
    }
}
