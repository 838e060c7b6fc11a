//! Torus and flow averages of the perturbation symbol.
//!
//! In action-angle variables the flow of `p` is the linear angle flow
//! `x(t) = x0 + t omega(xi)`, so time averages need no ODE integration.

use crate::geom::Vec2;
use crate::models::{ActionChart, TrigPolynomial};
use crate::quadrature::simpson;
use crate::table::{fmt_f64, Table};
use crate::{Error, Result};
use std::f64::consts::PI;

pub const ANGLE_GRID: usize = 64;
pub const Q_INFINITY_SAMPLES: usize = 16;

/// `(2 pi)^-2` times the integral of `q(., xi)` over the torus, by the
/// tensor-product trapezoid rule on an `n x n` grid.
pub fn torus_average_n(q: &TrigPolynomial, xi: Vec2, n: usize) -> f64 {
    let step = 2.0 * PI / n as f64;
    let mut sum = 0.0;
    for a in 0..n {
        for b in 0..n {
            sum += q.eval([a as f64 * step, b as f64 * step], xi);
        }
    }
    sum / (n * n) as f64
}

pub fn torus_average(chart: &ActionChart, xi: Vec2) -> f64 {
    torus_average_n(&chart.model.q, chart.absolute(xi), ANGLE_GRID)
}

/// Symmetric average of `q` over `t in [-T/2, T/2]` along `x0 + t omega`.
pub fn flow_average(q: &TrigPolynomial, omega: Vec2, xi: Vec2, x0: Vec2, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("averaging time {t} must be positive")));
    }
    let speed = omega[0].hypot(omega[1]);
    let max_step = if speed > 0.0 { 2.0 * PI / (50.0 * speed) } else { t };
    let n = ((t / max_step).ceil() as usize).max(2);
    let f = |s: f64| q.eval([x0[0] + s * omega[0], x0[1] + s * omega[1]], xi);
    Ok(simpson(f, -0.5 * t, 0.5 * t, n) / t)
}

pub fn time_average(chart: &ActionChart, xi: Vec2, x0: Vec2, t: f64) -> Result<f64> {
    let omega = chart.frequency_exact(xi)?;
    flow_average(&chart.model.q, omega, chart.absolute(xi), x0, t)
}

/// Deterministic quasi-random points on the torus (additive recurrence with
/// the plastic-number pair).
pub fn torus_samples(n: usize) -> Vec<Vec2> {
    let g = 1.324_717_957_244_746;
    let a = [1.0 / g, 1.0 / (g * g)];
    (0..n)
        .map(|i| {
            let k = i as f64 + 0.5;
            [2.0 * PI * (k * a[0]).fract(), 2.0 * PI * (k * a[1]).fract()]
        })
        .collect()
}

/// Finite-time surrogate for the interval of limit averages: min and max of
/// the average at the largest time over the torus samples.
pub fn q_infinity_with(q: &TrigPolynomial, omega: Vec2, xi: Vec2, t_list: &[f64]) -> Result<(f64, f64)> {
    let t = t_list.iter().copied().fold(f64::NAN, f64::max);
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("empty averaging time list".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for x0 in torus_samples(Q_INFINITY_SAMPLES) {
        let v = flow_average(q, omega, xi, x0, t)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

pub fn q_infinity(chart: &ActionChart, xi: Vec2, t_list: &[f64]) -> Result<(f64, f64)> {
    let omega = chart.frequency_exact(xi)?;
    q_infinity_with(&chart.model.q, omega, chart.absolute(xi), t_list)
}

/// Windowed ergodic constant: the largest `T' |<q>_T' - <q>|` over
/// `T' = T (1 + j/16)`, `j = 0..=16`, and the torus samples. The plain
/// product oscillates with `T`; its envelope over a window is stable.
pub fn ergodic_constant(q: &TrigPolynomial, omega: Vec2, xi: Vec2, t: f64) -> Result<f64> {
    let mean = torus_average_n(q, xi, ANGLE_GRID);
    let mut c: f64 = 0.0;
    for j in 0..=16 {
        let tj = t * (1.0 + j as f64 / 16.0);
        for x0 in torus_samples(Q_INFINITY_SAMPLES) {
            let v = flow_average(q, omega, xi, x0, tj)?;
            c = c.max(tj * (v - mean).abs());
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageReport {
    pub xi: Vec2,
    pub torus_avg: f64,
    pub time_avgs: Vec<(f64, f64)>,
    pub q_infinity: (f64, f64),
}

impl AverageReport {
    pub fn compute(chart: &ActionChart, xi: Vec2, x0: Vec2, t_list: &[f64]) -> Result<Self> {
        let time_avgs = t_list
            .iter()
            .map(|&t| Ok((t, time_average(chart, xi, x0, t)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(AverageReport {
            xi,
            torus_avg: torus_average(chart, xi),
            time_avgs,
            q_infinity: q_infinity(chart, xi, t_list)?,
        })
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["T", "time_avg", "torus_avg", "abs_err"]);
        for &(time, v) in &self.time_avgs {
            t.push(vec![
                fmt_f64(time),
                fmt_f64(v),
                fmt_f64(self.torus_avg),
                fmt_f64((v - self.torus_avg).abs()),
            ]);
        }
        t
    }
}
