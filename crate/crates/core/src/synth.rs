//! Synthetic eigenvalues inside good rectangles.
//!
//! Eigenvalues are the images of the Bohr-Sommerfeld lattice of actions
//! `S / 2 pi = h (k - eta / 4)` under the normal-form symbol
//!
//! ```text
//! P(xi) = p(xi) + i eps <q>(xi) + sum C[alpha, j, k] w^alpha eps^j h^k,
//! ```
//!
//! where `w = (p, <q>)(xi)` is the value-plane point, plus seeded noise of
//! size `h^N` standing in for the `O(h^inf)` remainder.

use crate::averaging::q_infinity;
use crate::diophantine::{is_diophantine, DiophantineParams, GoodValueNode};
use crate::geom::{Rect, Vec2};
use crate::models::ActionChart;
use crate::table::{fmt_f64, Table};
use crate::{Error, Result};
use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub type C64 = Complex<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalParams {
    pub h: f64,
    pub delta: f64,
    pub epsilon: f64,
    /// Remainder size `h^N`; `0` disables the remainder.
    pub noise_order: u32,
    pub seed: u64,
}

impl SemiclassicalParams {
    /// Parameters in the regime `eps = h^delta`.
    pub fn new(h: f64, delta: f64, noise_order: u32, seed: u64) -> Result<Self> {
        let p = SemiclassicalParams {
            h,
            delta,
            epsilon: h.powf(delta),
            noise_order,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h <= 0.1) {
            return Err(Error::InvalidParameter(format!("h = {} must lie in (0, 0.1]", self.h)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if !(self.epsilon / self.h >= 10.0) {
            return Err(Error::InvalidParameter(format!(
                "eps / h = {} must be at least 10",
                self.epsilon / self.h
            )));
        }
        Ok(())
    }

    pub fn noise_amplitude(&self) -> f64 {
        if self.noise_order == 0 {
            0.0
        } else {
            self.h.powi(self.noise_order as i32)
        }
    }

    /// Size `eps + h / eps` of the leading-term error.
    pub fn expansion_scale(&self) -> f64 {
        self.epsilon + self.h / self.epsilon
    }
}

/// Window `|Re mu - E| <= h^delta / C0`, `|Im mu - eps G| <= eps h^delta / C0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodRectangle {
    pub value: Vec2,
    pub epsilon: f64,
    pub half_width: f64,
    pub half_height: f64,
    pub c0: f64,
}

impl GoodRectangle {
    pub fn new(a: Vec2, params: &SemiclassicalParams, c0: f64) -> Result<Self> {
        if !(c0 >= 1.0) {
            return Err(Error::InvalidParameter(format!("C0 = {c0} must be at least 1")));
        }
        let w = params.h.powf(params.delta) / c0;
        Ok(GoodRectangle {
            value: a,
            epsilon: params.epsilon,
            half_width: w,
            half_height: params.epsilon * w,
            c0,
        })
    }

    pub fn center(&self) -> C64 {
        C64::new(self.value[0], self.epsilon * self.value[1])
    }

    pub fn contains(&self, mu: C64) -> bool {
        let c = self.center();
        (mu.re - c.re).abs() <= self.half_width && (mu.im - c.im).abs() <= self.half_height
    }

    /// The window in scaled coordinates `(Re mu, Im mu / eps)`.
    pub fn value_box(&self) -> Rect {
        Rect::new(self.value, [self.half_width, self.half_height / self.epsilon])
    }
}

pub fn good_rectangle(node: &GoodValueNode, params: &SemiclassicalParams, c0: f64) -> Result<GoodRectangle> {
    if !node.good() {
        return Err(Error::NotGood(node.value[0], node.value[1]));
    }
    GoodRectangle::new(node.value, params, c0)
}

/// One term `C w^alpha eps^j h^k` of the subprincipal expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HigherTerm {
    pub alpha: [u32; 2],
    pub j: u32,
    pub k: u32,
    pub re: f64,
    pub im: f64,
}

impl HigherTerm {
    pub fn new(alpha: [u32; 2], j: u32, k: u32, re: f64, im: f64) -> Self {
        HigherTerm { alpha, j, k, re, im }
    }

    pub fn order(&self) -> u32 {
        self.alpha[0] + self.alpha[1] + self.j + self.k
    }

    fn monomial(&self, w: Vec2, eps: f64, h: f64) -> f64 {
        w[0].powi(self.alpha[0] as i32)
            * w[1].powi(self.alpha[1] as i32)
            * eps.powi(self.j as i32)
            * h.powi(self.k as i32)
    }
}

/// Small deterministic subprincipal terms used unless configured otherwise.
pub fn default_higher_terms() -> Vec<HigherTerm> {
    vec![
        HigherTerm::new([0, 0], 2, 0, 0.01, 0.08),
        HigherTerm::new([1, 0], 2, 0, 0.0, 0.05),
        HigherTerm::new([0, 1], 0, 1, 0.01, 0.0),
        HigherTerm::new([0, 0], 1, 1, 0.0, 0.5),
    ]
}

pub fn validate_higher_terms(terms: &[HigherTerm]) -> Result<()> {
    for t in terms {
        if t.order() > 3 {
            return Err(Error::InvalidCoefficient(format!("{t:?}: |alpha| + j + k exceeds 3")));
        }
        if t.k == 0 && t.j <= 1 {
            return Err(Error::InvalidCoefficient(format!(
                "{t:?}: terms of order eps^0 h^0 and eps^1 h^0 belong to the leading symbol"
            )));
        }
        if t.j == 0 && t.im != 0.0 {
            return Err(Error::InvalidCoefficient(format!(
                "{t:?}: the symbol must be real for eps = 0"
            )));
        }
        if !(t.re.is_finite() && t.im.is_finite()) {
            return Err(Error::InvalidCoefficient(format!("{t:?}: non-finite coefficient")));
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormSymbol {
    pub chart: ActionChart,
    pub epsilon: f64,
    pub h: f64,
    pub higher: Vec<HigherTerm>,
    pub noise_order: u32,
}

impl NormalFormSymbol {
    pub fn new(chart: ActionChart, params: &SemiclassicalParams, higher: Vec<HigherTerm>) -> Result<Self> {
        validate_higher_terms(&higher)?;
        Ok(NormalFormSymbol {
            chart,
            epsilon: params.epsilon,
            h: params.h,
            higher,
            noise_order: params.noise_order,
        })
    }

    /// Leading term `p + i eps <q>` at the value-plane point `w`.
    pub fn leading_at(&self, w: Vec2) -> C64 {
        C64::new(w[0], self.epsilon * w[1])
    }

    pub fn leading(&self, xi: Vec2) -> Result<C64> {
        Ok(self.leading_at(self.chart.phi(xi)?))
    }

    pub fn correction(&self, w: Vec2) -> C64 {
        self.higher
            .iter()
            .map(|t| C64::new(t.re, t.im) * t.monomial(w, self.epsilon, self.h))
            .sum()
    }

    pub fn eval_at(&self, w: Vec2) -> C64 {
        self.leading_at(w) + self.correction(w)
    }

    pub fn eval(&self, xi: Vec2) -> Result<C64> {
        Ok(self.eval_at(self.chart.phi(xi)?))
    }

    /// Bound on `|Re|` and `|Im|` of the correction over the box.
    pub fn correction_bound(&self, rect: &Rect) -> Vec2 {
        let m = [rect.center[0].abs() + rect.half[0], rect.center[1].abs() + rect.half[1]];
        let mut b = [0.0; 2];
        for t in &self.higher {
            let s = t.monomial(m, self.epsilon, self.h).abs();
            b[0] += t.re.abs() * s;
            b[1] += t.im.abs() * s;
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumPoint {
    pub mu: C64,
    pub k: Option<[i64; 2]>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumCloud {
    pub points: Vec<SpectrumPoint>,
    pub params: SemiclassicalParams,
    pub rectangle: GoodRectangle,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Remainder for the eigenvalue `mu0`, keyed on `mu0` itself so that the
/// same eigenvalue receives the same perturbation in every chart.
fn remainder(mu0: C64, params: &SemiclassicalParams) -> C64 {
    let amp = params.noise_amplitude();
    if amp == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let qr = (mu0.re / (1e-4 * params.h)).round() as i64 as u64;
    let qi = (mu0.im / (1e-4 * params.epsilon * params.h)).round() as i64 as u64;
    let key = mix(mix(params.seed ^ mix(qr)) ^ qi.rotate_left(17));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    C64::new(amp * rng.gen_range(-1.0..=1.0), amp * rng.gen_range(-1.0..=1.0))
}

fn canonical_order(a: &SpectrumPoint, b: &SpectrumPoint) -> std::cmp::Ordering {
    a.mu.re.total_cmp(&b.mu.re).then(a.mu.im.total_cmp(&b.mu.im))
}

pub fn synth_spectrum(
    symbol: &NormalFormSymbol,
    rect: &GoodRectangle,
    params: &SemiclassicalParams,
) -> Result<SpectrumCloud> {
    let chart = &symbol.chart;
    let h = params.h;
    let eps = params.epsilon;
    let vbox = rect.value_box();
    let bound = symbol.correction_bound(&vbox);
    let amp = params.noise_amplitude();
    let search = Rect::new(
        vbox.center,
        [vbox.half[0] + bound[0] + amp, vbox.half[1] + (bound[1] + amp) / eps],
    );
    if !chart.domain.contains_rect(&search) {
        return Err(Error::ChartTooSmall);
    }
    // Bounding box of the preimage: images of the boundary of the search box.
    let (lo, hi) = (search.lo(), search.hi());
    let mut xlo = [f64::INFINITY; 2];
    let mut xhi = [f64::NEG_INFINITY; 2];
    let n = 16;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let e = lo[0] + s * (hi[0] - lo[0]);
        let g = lo[1] + s * (hi[1] - lo[1]);
        for w in [[e, lo[1]], [e, hi[1]], [lo[0], g], [hi[0], g]] {
            let a = chart.absolute(chart.xi_of(w)?);
            for d in 0..2 {
                xlo[d] = xlo[d].min(a[d]);
                xhi[d] = xhi[d].max(a[d]);
            }
        }
    }
    let eta = chart.eta;
    let krange = |d: usize| {
        let shift = eta[d] as f64 / 4.0;
        let a = (xlo[d] / h + shift).floor() as i64 - 2;
        let b = (xhi[d] / h + shift).ceil() as i64 + 2;
        (a, b)
    };
    let (k1lo, k1hi) = krange(0);
    let (k2lo, k2hi) = krange(1);
    let g_slack = search.half[1];
    let mut points = (k1lo..=k1hi)
        .into_par_iter()
        .map(|k1| -> Result<Vec<SpectrumPoint>> {
            let mut out = Vec::new();
            for k2 in k2lo..=k2hi {
                let actions = [
                    h * (k1 as f64 - eta[0] as f64 / 4.0),
                    h * (k2 as f64 - eta[1] as f64 / 4.0),
                ];
                let xi = [actions[0] - chart.tau[0], actions[1] - chart.tau[1]];
                let g = chart.avg_q(xi);
                if (g - vbox.center[1]).abs() > g_slack {
                    continue;
                }
                let e = match chart.energy(xi) {
                    Ok(e) => e,
                    Err(Error::NotRegular { .. }) => continue,
                    Err(err) => return Err(err),
                };
                if (e - vbox.center[0]).abs() > search.half[0] {
                    continue;
                }
                let mu0 = symbol.eval_at([e, g]);
                let mu = mu0 + remainder(mu0, params);
                if rect.contains(mu) {
                    out.push(SpectrumPoint { mu, k: Some([k1, k2]) });
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();
    points.sort_by(canonical_order);
    Ok(SpectrumCloud {
        points,
        params: *params,
        rectangle: *rect,
    })
}

impl SpectrumCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy with the lattice labels withheld.
    pub fn blind(&self) -> SpectrumCloud {
        SpectrumCloud {
            points: self
                .points
                .iter()
                .map(|p| SpectrumPoint { mu: p.mu, k: None })
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_table(&self, with_labels: bool) -> Table {
        let mut t = if with_labels {
            Table::new(&["re_mu", "im_mu", "k1", "k2"])
        } else {
            Table::new(&["re_mu", "im_mu"])
        };
        for p in &self.points {
            let mut row = vec![fmt_f64(p.mu.re), fmt_f64(p.mu.im)];
            if with_labels {
                match p.k {
                    Some(k) => {
                        row.push(k[0].to_string());
                        row.push(k[1].to_string());
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            t.push(row);
        }
        t
    }

    pub fn from_table(t: &Table, params: SemiclassicalParams, rectangle: GoodRectangle) -> Result<Self> {
        let re = t.column("re_mu").ok_or_else(|| Error::Table("missing re_mu".into()))?;
        let im = t.column("im_mu").ok_or_else(|| Error::Table("missing im_mu".into()))?;
        let k1 = t.column("k1");
        let k2 = t.column("k2");
        let mut points = Vec::with_capacity(t.rows.len());
        for r in 0..t.rows.len() {
            let mu = C64::new(t.f64_at(r, re)?, t.f64_at(r, im)?);
            let k = match (k1, k2) {
                (Some(a), Some(b)) if !t.rows[r][a].is_empty() => Some([
                    t.rows[r][a]
                        .parse()
                        .map_err(|_| Error::Table(format!("row {}: bad k1", r + 2)))?,
                    t.rows[r][b]
                        .parse()
                        .map_err(|_| Error::Table(format!("row {}: bad k2", r + 2)))?,
                ]),
                _ => None,
            };
            points.push(SpectrumPoint { mu, k });
        }
        Ok(SpectrumCloud {
            points,
            params,
            rectangle,
        })
    }
}

/// Scaled band `eps [inf Q - m, sup Q + m]` with `m = eps + h / eps`, where
/// `Q` ranges over the limit averages of the leaves with `|p - E| <= delta_e`
/// in the chart domain.
pub fn spectral_band(
    chart: &ActionChart,
    e: f64,
    delta_e: f64,
    params: &SemiclassicalParams,
    dioph: &DiophantineParams,
) -> Result<(f64, f64)> {
    let nodes: Vec<Vec2> = chart
        .domain
        .grid(41, 1.0)
        .into_iter()
        .filter(|w| (w[0] - e).abs() <= delta_e)
        .collect();
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ranges = nodes
        .par_iter()
        .map(|&w| {
            let xi = chart.xi_of(w)?;
            let omega = chart.frequency_exact(xi)?;
            let avg = chart.avg_q(xi);
            if is_diophantine(omega, dioph) {
                Ok((avg, avg))
            } else {
                let (lo, hi) = q_infinity(chart, xi, &[1e3])?;
                Ok((lo.min(avg), hi.max(avg)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let lo = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let hi = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let m = params.expansion_scale();
    let eps = params.epsilon;
    Ok((eps * (lo - m), eps * (hi + m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_geometry() {
        let p = SemiclassicalParams::new(1e-3, 0.5, 3, 0).unwrap();
        let r = GoodRectangle::new([0.0, 0.0], &p, 1.0).unwrap();
        assert_eq!(r.center(), C64::new(0.0, 0.0));
        assert!((r.half_width - 0.0316).abs() < 1e-4);
        assert!((r.half_height - 1e-3).abs() < 1e-12);
        assert!((r.half_height / r.half_width - p.epsilon).abs() < 1e-15);
        let r10 = GoodRectangle::new([0.0, 0.0], &p, 10.0).unwrap();
        assert!((r10.half_width * 10.0 - r.half_width).abs() < 1e-15);
        assert!((r10.half_height * 10.0 - r.half_height).abs() < 1e-15);
        let p4 = SemiclassicalParams::new(2.5e-4, 0.5, 3, 0).unwrap();
        let r4 = GoodRectangle::new([0.0, 0.0], &p4, 1.0).unwrap();
        assert!((r4.half_width * 2.0 - r.half_width).abs() < 1e-15);
    }

    #[test]
    fn regime_is_enforced() {
        assert!(SemiclassicalParams::new(0.5, 0.5, 3, 0).is_err());
        assert!(SemiclassicalParams::new(1e-3, 1.0, 3, 0).is_err());
        assert!(SemiclassicalParams::new(0.05, 0.9, 3, 0).is_err());
    }

    #[test]
    fn coefficient_validation() {
        assert!(validate_higher_terms(&default_higher_terms()).is_ok());
        assert!(validate_higher_terms(&[HigherTerm::new([1, 0], 0, 0, 1.0, 0.0)]).is_err());
        assert!(validate_higher_terms(&[HigherTerm::new([0, 0], 1, 0, 1.0, 0.0)]).is_err());
        assert!(validate_higher_terms(&[HigherTerm::new([0, 0], 0, 1, 0.0, 1.0)]).is_err());
        assert!(validate_higher_terms(&[HigherTerm::new([2, 1], 1, 0, 1.0, 0.0)]).is_err());
    }

    #[test]
    fn remainder_is_keyed_on_the_eigenvalue() {
        let p = SemiclassicalParams::new(1e-2, 0.5, 3, 7).unwrap();
        let mu = C64::new(0.123, 0.0456);
        assert_eq!(remainder(mu, &p), remainder(mu, &p));
        assert!(remainder(mu, &p).re.abs() <= 1e-6);
        let off = SemiclassicalParams { noise_order: 0, ..p };
        assert_eq!(remainder(mu, &off), C64::new(0.0, 0.0));
    }
}
