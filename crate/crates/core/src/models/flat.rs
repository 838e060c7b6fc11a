//! Flat reference system `p(xi) = <omega*, xi> + (kappa/2) |xi|^2` on a single
//! global action chart. Its classical monodromy is trivial.

use super::qsymbol::Affine;
use crate::geom::{dot, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    pub omega_star: Vec2,
    /// Coefficient of the quadratic term; `1.0` for the reference model.
    pub curvature: f64,
    /// Cap on chart radii, since the flat model has no singular values.
    pub max_radius: f64,
}

impl FlatParams {
    pub fn energy(&self, xi: Vec2) -> f64 {
        dot(self.omega_star, xi) + 0.5 * self.curvature * dot(xi, xi)
    }

    pub fn frequency(&self, xi: Vec2) -> Vec2 {
        [
            self.omega_star[0] + self.curvature * xi[0],
            self.omega_star[1] + self.curvature * xi[1],
        ]
    }

    /// Solve `p(xi) = e`, `avg(xi) = g` for the branch continuous with `xi = 0`
    /// at the value of the origin. `avg` must have a nonzero gradient.
    pub fn actions(&self, avg: &Affine, w: Vec2) -> Result<Vec2> {
        let grad = avg.gradient;
        let gn = grad[0].hypot(grad[1]);
        if gn == 0.0 {
            return Err(Error::DegenerateAverage);
        }
        // Level line of the average: xi = base + t * dir.
        let base = [
            (w[1] - avg.constant) * grad[0] / (gn * gn),
            (w[1] - avg.constant) * grad[1] / (gn * gn),
        ];
        let mut dir = [grad[1] / gn, -grad[0] / gn];
        if dot(self.omega_star, dir) < 0.0 {
            dir = [-dir[0], -dir[1]];
        }
        let p0 = self.energy(base);
        let beta = dot(self.frequency(base), dir);
        let kappa = self.curvature;
        // kappa/2 t^2 + beta t + (p0 - e) = 0, root continuous at kappa = 0.
        let disc = beta * beta - 2.0 * kappa * (p0 - w[0]);
        if disc <= 0.0 || beta + disc.sqrt() <= 0.0 {
            return Err(Error::NotRegular { e: w[0], g: w[1] });
        }
        let t = 2.0 * (w[0] - p0) / (beta + disc.sqrt());
        Ok([base[0] + t * dir[0], base[1] + t * dir[1]])
    }

    /// Distance-like margin to the fold of `(p, avg)`; infinite when `avg` is
    /// not degenerate and curvature vanishes.
    pub fn fold_margin(&self, avg: &Affine, w: Vec2) -> f64 {
        let grad = avg.gradient;
        let gn = grad[0].hypot(grad[1]);
        if gn == 0.0 {
            return 0.0;
        }
        let base = [
            (w[1] - avg.constant) * grad[0] / (gn * gn),
            (w[1] - avg.constant) * grad[1] / (gn * gn),
        ];
        let mut dir = [grad[1] / gn, -grad[0] / gn];
        if dot(self.omega_star, dir) < 0.0 {
            dir = [-dir[0], -dir[1]];
        }
        let beta = dot(self.frequency(base), dir);
        let disc = beta * beta - 2.0 * self.curvature * (self.energy(base) - w[0]);
        if self.curvature == 0.0 {
            return if beta > 0.0 { f64::INFINITY } else { 0.0 };
        }
        if disc <= 0.0 {
            0.0
        } else {
            // Energy distance to the fold along the level line.
            disc / (2.0 * self.curvature)
        }
    }
}
