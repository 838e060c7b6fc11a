//! Champagne-bottle system `H = (p_r^2 + l^2 / r^2) / 2 + r^4 - b r^2` with
//! `F = (H, L_z)`.
//!
//! All radial quantities are written in `s = r^2`, where the turning points are
//! the positive roots of the cubic
//!
//! ```text
//! g(s) = s^3 - b s^2 - E s + l^2 / 2,
//! ```
//!
//! with `p_r^2 = -2 g(s) / s`. Factoring `g = (s - s_-)(s - s_+)(s - s_0)` and
//! substituting `s = s_- + (s_+ - s_-) sin^2(theta)` cancels the square-root
//! turning-point singularities exactly, leaving smooth integrands on
//! `[0, pi/2]`.

use crate::geom::Vec2;
use crate::quadrature::{integrate, QuadOptions};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Which smooth action coordinates a chart uses.
///
/// `Plain` is `(l, I_r)`, smooth away from the ray `{l = 0, E > 0}`. `Lifted`
/// is `(l, I_r + max(l, 0))`, smooth away from the ray `{l = 0, E < 0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChampagneBranch {
    Plain,
    Lifted,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChampagneParams {
    pub well_depth: f64,
}

/// Radial turning points in `s = r^2` and the nonpositive third root.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialRoots {
    pub s_minus: f64,
    pub s_plus: f64,
    pub s_zero: f64,
}

impl RadialRoots {
    pub fn r_minus(&self) -> f64 {
        self.s_minus.sqrt()
    }

    pub fn r_plus(&self) -> f64 {
        self.s_plus.sqrt()
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-16,
        rel_tol: 2e-15,
        max_panels: 4000,
    }
}

impl ChampagneParams {
    pub fn potential(&self, r: f64) -> f64 {
        let r2 = r * r;
        r2 * r2 - self.well_depth * r2
    }

    fn cubic(&self, e: f64, l: f64, s: f64) -> f64 {
        ((s - self.well_depth) * s - e) * s + 0.5 * l * l
    }

    fn cubic_prime(&self, e: f64, s: f64) -> f64 {
        (3.0 * s - 2.0 * self.well_depth) * s - e
    }

    /// Minimum energy at angular momentum `l` (bottom of the effective well).
    pub fn min_energy(&self, l: f64) -> f64 {
        let b = self.well_depth;
        // d/ds [l^2/(2s) + s^2 - b s] = 0  <=>  4 s^3 - 2 b s^2 - l^2 = 0.
        let mut s = 0.5 * b + l.abs() + 1.0;
        for _ in 0..200 {
            let f = (4.0 * s - 2.0 * b) * s * s - l * l;
            let df = (12.0 * s - 4.0 * b) * s;
            let next = s - f / df;
            if (next - s).abs() <= 1e-16 * s {
                s = next;
                break;
            }
            s = next;
        }
        0.5 * l * l / s + s * s - b * s
    }

    /// Positive turning points; fails outside the classically allowed range.
    pub fn radial_roots(&self, e: f64, l: f64) -> Result<RadialRoots> {
        let b = self.well_depth;
        let not_regular = Error::NotRegular { e, g: l };
        let disc = b * b + 3.0 * e;
        if disc <= 0.0 {
            return Err(not_regular);
        }
        let s_star = (b + disc.sqrt()) / 3.0;
        if self.cubic(e, l, s_star) >= 0.0 {
            return Err(not_regular);
        }
        // Newton from the right converges monotonically to the largest root
        // since g is convex for s > b/3.
        let mut s = 1.0 + b.max(e.abs()).max(0.5 * l * l) + s_star;
        for _ in 0..200 {
            let next = s - self.cubic(e, l, s) / self.cubic_prime(e, s);
            if (next - s).abs() <= 4.0 * f64::EPSILON * s {
                s = next;
                break;
            }
            s = next;
        }
        let s_plus = s;
        // Deflate: g(s) = (s - s_plus)(s^2 + beta s + gamma).
        let beta = s_plus - b;
        let gamma = -0.5 * l * l / s_plus;
        let q = -0.5 * (beta + beta.signum() * (beta * beta - 4.0 * gamma).sqrt());
        let (r1, r2) = if q == 0.0 { (0.0, -beta) } else { (q, gamma / q) };
        let s_minus = r1.max(r2);
        let s_zero = r1.min(r2);
        if s_minus == 0.0 && s_zero == 0.0 {
            return Err(not_regular);
        }
        if !(s_minus >= 0.0 && s_plus > s_minus) {
            return Err(not_regular);
        }
        Ok(RadialRoots {
            s_minus,
            s_plus,
            s_zero,
        })
    }

    /// Radial action `I_r = (1/pi) int_{r-}^{r+} p_r dr`.
    pub fn radial_action(&self, e: f64, l: f64) -> Result<f64> {
        let roots = self.radial_roots(e, l)?;
        let RadialRoots {
            s_minus,
            s_plus,
            s_zero,
        } = roots;
        let width = s_plus - s_minus;
        // Integrand width^2 sin^2 cos^2 sqrt(2(s - s0)) / s, written so that the
        // sin^2 / s ratio stays bounded as s_minus -> 0.
        let f = |t: f64| {
            let (sn, cs) = t.sin_cos();
            let s2 = sn * sn;
            let s = s_minus + width * s2;
            let ratio = width * s2 / s;
            width * cs * cs * ratio * (2.0 * (s - s_zero)).sqrt()
        };
        let r = integrate(f, 0.0, FRAC_PI_2, quad_opts())?;
        Ok(r.value / PI)
    }

    /// Partial derivatives `(dI_r/dE, dI_r/dl)`.
    ///
    /// `sign_at_zero` fixes the one-sided limit of `dI_r/dl` on the ray
    /// `{l = 0, E > 0}` where `I_r` has a `-|l|/2` kink.
    pub fn radial_action_gradient(&self, e: f64, l: f64, sign_at_zero: f64) -> Result<Vec2> {
        let roots = self.radial_roots(e, l)?;
        let RadialRoots {
            s_minus,
            s_plus,
            s_zero,
        } = roots;
        let width = s_plus - s_minus;
        let kernel = |s: f64| 1.0 / (2.0 * (s - s_zero)).sqrt();
        let d_e = integrate(
            |t: f64| {
                let sn = t.sin();
                kernel(s_minus + width * sn * sn)
            },
            0.0,
            FRAC_PI_2,
            quad_opts(),
        )?
        .value
            / PI;

        // int dtheta / (s sqrt(2(s - s0))) = k(s_-) int dtheta / s + int (k(s) - k(s_-)) / s.
        // The first integral is pi / (2 sqrt(s_- s_+)) and s_- s_+ = -l^2 / (2 s0).
        let k_minus = kernel(s_minus);
        let singular = if s_zero < 0.0 {
            let sgn = if l != 0.0 { l.signum() } else { sign_at_zero };
            sgn * FRAC_PI_2 * (-s_zero / (s_minus - s_zero)).sqrt()
        } else {
            0.0
        };
        let regular = if l == 0.0 {
            0.0
        } else {
            integrate(
                |t: f64| {
                    let sn = t.sin();
                    let ds = width * sn * sn;
                    let s = s_minus + ds;
                    let k = kernel(s);
                    // (k(s) - k(s_-)) / s without cancellation.
                    let diff = -2.0 * ds * k * k_minus / (k.recip() + k_minus.recip());
                    // k^-2 - k_-^-2 = 2 ds, so k - k_- = -2 ds k k_- / (k^-1 + k_-^-1).
                    diff / s
                },
                0.0,
                FRAC_PI_2,
                quad_opts(),
            )?
            .value
                * l
        };
        let d_l = -(singular + regular) / PI;
        Ok([d_e, d_l])
    }

    fn lift(l: f64, branch: ChampagneBranch) -> (f64, f64) {
        match branch {
            ChampagneBranch::Plain => (0.0, 0.0),
            ChampagneBranch::Lifted => {
                if l > 0.0 {
                    (l, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// Action coordinates `(l, I_r + lift)` of the torus over `w = (E, l)`.
    pub fn actions(&self, w: Vec2, branch: ChampagneBranch) -> Result<Vec2> {
        let ir = self.radial_action(w[0], w[1])?;
        let (shift, _) = Self::lift(w[1], branch);
        Ok([w[1], ir + shift])
    }

    /// Jacobian of [`Self::actions`] with respect to `(E, l)`, rows = actions.
    pub fn actions_jacobian(&self, w: Vec2, branch: ChampagneBranch) -> Result<[[f64; 2]; 2]> {
        // On the ray l = 0 take the right limit; the lifted branch then picks
        // up the slope of max(l, 0) from the same side.
        let [ie, il] = self.radial_action_gradient(w[0], w[1], 1.0)?;
        let (_, dshift) = Self::lift(w[1], branch);
        let dl = if branch == ChampagneBranch::Lifted && w[1] == 0.0 {
            il + 1.0
        } else {
            il + dshift
        };
        Ok([[0.0, 1.0], [ie, dl]])
    }

    /// Energy of the torus with actions `xi` (inverse of the radial action in E).
    pub fn energy(&self, xi: Vec2, branch: ChampagneBranch, guess: Option<f64>) -> Result<f64> {
        let l = xi[0];
        let (shift, _) = Self::lift(l, branch);
        let target = xi[1] - shift;
        if target < 0.0 {
            return Err(Error::NotRegular { e: f64::NAN, g: l });
        }
        let e_min = self.min_energy(l);
        // Bracket [lo, hi] with I_r(lo) <= target <= I_r(hi); I_r(e_min) = 0.
        let mut lo = e_min;
        let mut hi = e_min + 1.0;
        let eval = |e: f64| -> Result<f64> { Ok(self.radial_action(e, l)? - target) };
        let mut f_hi = loop {
            match eval(hi) {
                Ok(v) if v >= 0.0 => break v,
                Ok(_) => {
                    lo = hi;
                    hi = e_min + 2.0 * (hi - e_min);
                }
                // Hitting the focus-focus value exactly; nudge.
                Err(_) => hi += 1e-9,
            }
            if hi > 1e6 {
                return Err(Error::NotRegular { e: hi, g: l });
            }
        };
        let mut e = guess.filter(|g| *g > lo && *g < hi).unwrap_or(0.5 * (lo + hi));
        for it in 0..100 {
            let f = match eval(e) {
                Ok(f) => f,
                Err(_) => {
                    e = 0.5 * (lo + hi);
                    continue;
                }
            };
            if f == 0.0 {
                return Ok(e);
            }
            if f > 0.0 {
                hi = e;
                f_hi = f;
            } else {
                lo = e;
            }
            let de = self.radial_action_gradient(e, l, 1.0).map(|g| g[0]).unwrap_or(0.0);
            let mut next = if de > 0.0 { e - f / de } else { f64::NAN };
            if (next - e).abs() <= 2.0 * f64::EPSILON * (1.0 + e.abs()) {
                return Ok(next);
            }
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if it > 0 && hi - lo <= 4.0 * f64::EPSILON * (1.0 + e.abs()) {
                return Ok(0.5 * (lo + hi));
            }
            e = next;
        }
        Err(Error::NewtonDiverged {
            iterations: 100,
            residual: f_hi,
        })
    }

    /// Frequency `omega = dE/dxi` from the implicit function theorem.
    pub fn frequency(&self, xi: Vec2, branch: ChampagneBranch, guess: Option<f64>) -> Result<Vec2> {
        let e = self.energy(xi, branch, guess)?;
        self.frequency_at_value([e, xi[0]], branch)
    }

    pub fn frequency_at_value(&self, w: Vec2, branch: ChampagneBranch) -> Result<Vec2> {
        let j = self.actions_jacobian(w, branch)?;
        let ie = j[1][0];
        let il = j[1][1];
        Ok([-il / ie, 1.0 / ie])
    }

    pub fn is_regular(&self, w: Vec2) -> bool {
        !(w[0] == 0.0 && w[1] == 0.0) && w[0] > self.min_energy(w[1])
    }

    /// Euclidean distance in the value plane to the critical values: the
    /// focus-focus point and the curve of relative equilibria.
    pub fn singular_distance(&self, w: Vec2) -> f64 {
        let b = self.well_depth;
        let curve = |s: f64| -> Vec2 {
            let e = (3.0 * s - 2.0 * b) * s;
            let l = s * (2.0 * (2.0 * s - b)).max(0.0).sqrt();
            [e, if w[1] < 0.0 { -l } else { l }]
        };
        let d = |s: f64| {
            let c = curve(s);
            (c[0] - w[0]).hypot(c[1] - w[1])
        };
        let s_lo = 0.5 * b;
        let e_span = w[0].abs() + w[1].abs() + 1.0;
        let s_hi = (2.0 * b + (4.0 * b * b + 12.0 * e_span).sqrt()) / 6.0 + 1.0;
        let n = 400;
        let mut best = (s_lo, d(s_lo));
        for i in 1..=n {
            let s = s_lo + (s_hi - s_lo) * i as f64 / n as f64;
            let v = d(s);
            if v < best.1 {
                best = (s, v);
            }
        }
        let step = (s_hi - s_lo) / n as f64;
        let (mut a, mut c) = ((best.0 - step).max(s_lo), best.0 + step);
        for _ in 0..100 {
            let m1 = a + (c - a) / 3.0;
            let m2 = c - (c - a) / 3.0;
            if d(m1) < d(m2) {
                c = m2;
            } else {
                a = m1;
            }
        }
        let curve_dist = d(0.5 * (a + c)).min(best.1);
        curve_dist.min(w[0].hypot(w[1]))
    }

    /// Chart branch whose coordinates are smooth on the square `c +- radius`.
    pub fn branch_for(&self, c: Vec2, radius: f64) -> ChampagneBranch {
        if c[1].abs() < radius && c[0] > 0.0 {
            ChampagneBranch::Lifted
        } else {
            ChampagneBranch::Plain
        }
    }
}
