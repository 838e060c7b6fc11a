//! Local action-angle charts around a regular value.
//!
//! Chart coordinates are centered: `xi = S(w) / 2 pi - tau` with
//! `tau = S(c) / 2 pi`, so the base value `c` sits at `xi = 0`.

use super::{fd_step, Branch, ModelSystem};
use crate::geom::{add, dist, norm, sub, Mat2, Rect, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const GRID_NODES: usize = 7;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct ActionChart {
    pub model: ModelSystem,
    pub base: Vec2,
    pub domain: Rect,
    pub branch: Branch,
    /// Action integrals `S(c)` over the two fundamental cycles.
    pub actions: Vec2,
    pub eta: [i64; 2],
    pub tau: Vec2,
    /// Sampled `(xi, phi(xi))` pairs over the domain.
    pub grid: Vec<(Vec2, Vec2)>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyData {
    pub omega: Vec2,
    /// Projective class of `omega` as an angle in `[0, pi)`.
    pub rho: f64,
    pub d_avg_q: Vec2,
    /// Smallest singular value of `d omega / d xi`.
    pub omega_prime_norm: f64,
}

/// Projective angle of `v` in `[0, pi)`.
pub fn rotation_angle(v: Vec2) -> f64 {
    let a = v[1].atan2(v[0]);
    let a = a.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

pub fn action_coords(model: &ModelSystem, c: Vec2) -> Result<ActionChart> {
    if !model.is_regular(c) {
        return Err(Error::NotRegular { e: c[0], g: c[1] });
    }
    let radius = model.chart_radius(c);
    let sd = model.singular_distance(c);
    if radius < 1e-4 {
        return Err(Error::TooCloseToSingular {
            e: c[0],
            g: c[1],
            dist: sd,
        });
    }
    let domain = Rect::square(c, radius);
    let branch = model.branch_for(c, radius);
    let tau = model.actions(c, branch)?;
    let mut chart = ActionChart {
        model: model.clone(),
        base: c,
        domain,
        branch,
        actions: [2.0 * PI * tau[0], 2.0 * PI * tau[1]],
        eta: model.maslov,
        tau,
        grid: Vec::new(),
    };
    let mut grid = Vec::with_capacity(GRID_NODES * GRID_NODES);
    for w in domain.grid(GRID_NODES, 1.0) {
        let xi = chart.xi_of(w)?;
        let back = chart.phi(xi)?;
        let err = dist(back, w);
        if err > 1e-9 * (1.0 + norm(w)) {
            return Err(Error::NewtonDiverged {
                iterations: NEWTON_MAX_ITER,
                residual: err,
            });
        }
        grid.push((xi, back));
    }
    chart.grid = grid;
    Ok(chart)
}

impl ActionChart {
    pub fn radius(&self) -> f64 {
        self.domain.half[0]
    }

    pub fn contains(&self, w: Vec2) -> bool {
        self.domain.contains(w)
    }

    /// Chart coordinates of the torus over `w`, from the action integrals.
    pub fn xi_of(&self, w: Vec2) -> Result<Vec2> {
        Ok(sub(self.model.actions(w, self.branch)?, self.tau))
    }

    /// Absolute actions `S / 2 pi` for chart coordinates `xi`.
    pub fn absolute(&self, xi: Vec2) -> Vec2 {
        add(xi, self.tau)
    }

    pub fn energy(&self, xi: Vec2) -> Result<f64> {
        self.model.energy(self.absolute(xi), self.branch, Some(self.base[0]))
    }

    pub fn avg_q(&self, xi: Vec2) -> f64 {
        self.model.avg_q(self.absolute(xi))
    }

    pub fn phi(&self, xi: Vec2) -> Result<Vec2> {
        Ok([self.energy(xi)?, self.avg_q(xi)])
    }

    /// Exact `d phi / d xi`, rows `omega` and `d<q>`.
    pub fn dphi(&self, xi: Vec2) -> Result<Mat2> {
        let omega = self.frequency_exact(xi)?;
        Ok(Mat2::from_rows(omega, self.model.avg_q_gradient()))
    }

    pub fn frequency_exact(&self, xi: Vec2) -> Result<Vec2> {
        self.model.frequency(self.absolute(xi), self.branch, Some(self.base[0]))
    }

    /// Frequency data by central differences of `p` and `<q>`.
    pub fn frequency(&self, xi: Vec2) -> Result<FrequencyData> {
        let w = self.phi(xi)?;
        if !self.domain.contains(w) {
            return Err(Error::OutsideDomain(w[0], w[1]));
        }
        let step = fd_step(xi);
        let mut omega = [0.0; 2];
        let mut d_avg_q = [0.0; 2];
        for i in 0..2 {
            let mut plus = xi;
            let mut minus = xi;
            plus[i] += step;
            minus[i] -= step;
            omega[i] = (self.energy(plus)? - self.energy(minus)?) / (2.0 * step);
            d_avg_q[i] = (self.avg_q(plus) - self.avg_q(minus)) / (2.0 * step);
        }
        Ok(FrequencyData {
            omega,
            rho: rotation_angle(omega),
            d_avg_q,
            omega_prime_norm: self.omega_prime_norm(xi)?,
        })
    }

    /// Smallest singular value of the Hessian of `p`.
    pub fn omega_prime_norm(&self, xi: Vec2) -> Result<f64> {
        let step = fd_step(xi);
        let mut cols = [[0.0; 2]; 2];
        for (i, col) in cols.iter_mut().enumerate() {
            let mut plus = xi;
            let mut minus = xi;
            plus[i] += step;
            minus[i] -= step;
            let a = self.frequency_exact(plus)?;
            let b = self.frequency_exact(minus)?;
            *col = [(a[0] - b[0]) / (2.0 * step), (a[1] - b[1]) / (2.0 * step)];
        }
        Ok(Mat2::from_cols(cols[0], cols[1]).singular_values().1)
    }

    /// One Newton step for `phi(xi) = target`.
    pub fn newton_step(&self, xi: Vec2, target: Vec2) -> Result<Vec2> {
        let r = sub(self.phi(xi)?, target);
        let jinv = self.dphi(xi)?.inverse().ok_or(Error::DegenerateAverage)?;
        Ok(sub(xi, jinv.apply(r)))
    }

    /// Grid node whose image is closest to `target`.
    pub fn seed(&self, target: Vec2) -> Vec2 {
        self.grid
            .iter()
            .min_by(|a, b| dist(a.1, target).total_cmp(&dist(b.1, target)))
            .map(|g| g.0)
            .unwrap_or([0.0, 0.0])
    }

    /// Newton inversion of `phi` seeded from the chart grid; returns the
    /// solution and the number of steps taken.
    pub fn invert(&self, target: Vec2) -> Result<(Vec2, usize)> {
        let mut xi = self.seed(target);
        let mut last = f64::INFINITY;
        for it in 1..=NEWTON_MAX_ITER {
            let next = self.newton_step(xi, target)?;
            let step = dist(next, xi);
            xi = next;
            if step <= 1e-15 * (1.0 + norm(xi)) || (step >= last && step < 1e-12) {
                return Ok((xi, it));
            }
            last = step;
        }
        Err(Error::NewtonDiverged {
            iterations: NEWTON_MAX_ITER,
            residual: dist(self.phi(xi)?, target),
        })
    }

    /// `tau` recovered at another value `a`: `S(a) / 2 pi - xi_a`, with `xi_a`
    /// from Newton inversion of `phi`.
    pub fn tau_at(&self, a: Vec2) -> Result<Vec2> {
        let s = self.model.actions(a, self.branch)?;
        let (xi, _) = self.invert(a)?;
        Ok(sub(s, xi))
    }

    pub fn document(&self) -> ChartDocument {
        ChartDocument {
            model: self.model.name.clone(),
            q_choice: self.model.q_choice.to_string(),
            base: self.base,
            radius: self.radius(),
            branch: self.branch,
            actions: self.actions,
            eta: self.eta,
            tau: self.tau,
            grid: self.grid.iter().map(|&(xi, phi)| GridRow { xi, phi }).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub xi: Vec2,
    pub phi: Vec2,
}

/// Structured-text form of an [`ActionChart`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartDocument {
    pub model: String,
    pub q_choice: String,
    pub base: Vec2,
    pub radius: f64,
    pub branch: Branch,
    pub actions: Vec2,
    pub eta: [i64; 2],
    pub tau: Vec2,
    pub grid: Vec<GridRow>,
}

impl ChartDocument {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("chart documents are plain data")
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Table(e.to_string()))
    }
}
