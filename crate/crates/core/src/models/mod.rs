//! Reference integrable systems given by their action-angle data.
//!
//! A model exposes `p(xi)`, the perturbation symbol `q(x, xi)`, the Maslov
//! indices and the critical values of the momentum map. Values live in the
//! plane `w = (E, G) = (p, <q>)`; actions are returned as `S / 2 pi` in the
//! cycle basis of a [`Branch`].

pub mod champagne;
pub mod chart;
pub mod flat;
pub mod qsymbol;

pub use champagne::{ChampagneBranch, ChampagneParams, RadialRoots};
pub use chart::{action_coords, ActionChart, ChartDocument, FrequencyData};
pub use flat::FlatParams;
pub use qsymbol::{Affine, QChoice, TrigPolynomial, TrigTerm};

use crate::geom::{norm, Mat2, Vec2};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Cycle basis used for the actions of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Global actions of a model without monodromy.
    Global,
    Plain,
    Lifted,
}

impl Branch {
    fn champagne(self) -> ChampagneBranch {
        match self {
            Branch::Lifted => ChampagneBranch::Lifted,
            _ => ChampagneBranch::Plain,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    Flat(FlatParams),
    Champagne(ChampagneParams),
}

/// Critical values of the momentum map.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularValues {
    None,
    /// Isolated focus-focus value plus the curve `E = E_min(l)` of relative
    /// equilibria bounding the image from below.
    FocusFocus {
        point: Vec2,
        well_depth: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSystem {
    pub name: String,
    pub kind: ModelKind,
    pub q_choice: QChoice,
    pub q: TrigPolynomial,
    pub maslov: [i64; 2],
}

/// Step for central differences at action `xi`.
pub fn fd_step(xi: Vec2) -> f64 {
    1e-5 * (1.0 + norm(xi))
}

pub fn make_flat_model(omega_star: Vec2, q_choice: &str) -> Result<ModelSystem> {
    if omega_star[0] == 0.0 && omega_star[1] == 0.0 || !omega_star.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidParameter("omega_star must be finite and nonzero".into()));
    }
    let q_choice: QChoice = q_choice.parse()?;
    Ok(ModelSystem {
        name: "flat".into(),
        kind: ModelKind::Flat(FlatParams {
            omega_star,
            curvature: 1.0,
            max_radius: 0.05,
        }),
        q: q_choice.polynomial(),
        q_choice,
        maslov: [0, 0],
    })
}

pub fn make_champagne_model(well_depth: f64) -> Result<ModelSystem> {
    if !(well_depth > 0.0 && well_depth.is_finite()) {
        return Err(Error::InvalidParameter("well_depth must be positive".into()));
    }
    let q_choice = QChoice::AngularMomentum;
    Ok(ModelSystem {
        name: "champagne".into(),
        kind: ModelKind::Champagne(ChampagneParams { well_depth }),
        q: q_choice.polynomial(),
        q_choice,
        maslov: [0, 2],
    })
}

impl ModelSystem {
    /// Flat model with a different quadratic coefficient; `0` makes `p` linear.
    pub fn with_curvature(mut self, curvature: f64) -> Self {
        if let ModelKind::Flat(f) = &mut self.kind {
            f.curvature = curvature;
        }
        self
    }

    pub fn with_max_radius(mut self, radius: f64) -> Self {
        if let ModelKind::Flat(f) = &mut self.kind {
            f.max_radius = radius;
        }
        self
    }

    pub fn singular_values(&self) -> SingularValues {
        match &self.kind {
            ModelKind::Flat(_) => SingularValues::None,
            ModelKind::Champagne(c) => SingularValues::FocusFocus {
                point: [0.0, 0.0],
                well_depth: c.well_depth,
            },
        }
    }

    /// `p(xi)`; `guess` seeds the energy inversion of implicit models.
    pub fn energy(&self, xi: Vec2, branch: Branch, guess: Option<f64>) -> Result<f64> {
        match &self.kind {
            ModelKind::Flat(f) => Ok(f.energy(xi)),
            ModelKind::Champagne(c) => c.energy(xi, branch.champagne(), guess),
        }
    }

    pub fn avg_q(&self, xi: Vec2) -> f64 {
        self.q.mean(xi)
    }

    pub fn avg_q_gradient(&self) -> Vec2 {
        self.q.mean_gradient()
    }

    /// `phi(xi) = (p(xi), <q>(xi))`.
    pub fn phi(&self, xi: Vec2, branch: Branch, guess: Option<f64>) -> Result<Vec2> {
        Ok([self.energy(xi, branch, guess)?, self.avg_q(xi)])
    }

    /// Actions `S(w) / 2 pi` of the torus over the value `w`.
    pub fn actions(&self, w: Vec2, branch: Branch) -> Result<Vec2> {
        match &self.kind {
            ModelKind::Flat(f) => f.actions(&self.q.mean_affine(), w),
            ModelKind::Champagne(c) => c.actions(w, branch.champagne()),
        }
    }

    /// Jacobian of [`Self::actions`] in `w`.
    pub fn actions_jacobian(&self, w: Vec2, branch: Branch) -> Result<Mat2> {
        match &self.kind {
            ModelKind::Flat(f) => {
                let xi = f.actions(&self.q.mean_affine(), w)?;
                Mat2::from_rows(f.frequency(xi), self.avg_q_gradient())
                    .inverse()
                    .ok_or(Error::DegenerateAverage)
            }
            ModelKind::Champagne(c) => Ok(Mat2(c.actions_jacobian(w, branch.champagne())?)),
        }
    }

    /// Exact frequency `dp/dxi`; implicit for the champagne bottle.
    pub fn frequency(&self, xi: Vec2, branch: Branch, guess: Option<f64>) -> Result<Vec2> {
        match &self.kind {
            ModelKind::Flat(f) => Ok(f.frequency(xi)),
            ModelKind::Champagne(c) => c.frequency(xi, branch.champagne(), guess),
        }
    }

    pub fn frequency_at_value(&self, w: Vec2, branch: Branch) -> Result<Vec2> {
        match &self.kind {
            ModelKind::Flat(f) => Ok(f.frequency(f.actions(&self.q.mean_affine(), w)?)),
            ModelKind::Champagne(c) => c.frequency_at_value(w, branch.champagne()),
        }
    }

    /// Euclidean distance from `w` to the critical values.
    pub fn singular_distance(&self, w: Vec2) -> f64 {
        match &self.kind {
            ModelKind::Flat(_) => f64::INFINITY,
            ModelKind::Champagne(c) => c.singular_distance(w),
        }
    }

    /// Whether `w` is a regular value over which `(p, <q>)` is invertible.
    pub fn is_regular(&self, w: Vec2) -> bool {
        match &self.kind {
            ModelKind::Flat(f) => {
                let avg = self.q.mean_affine();
                match f.actions(&avg, w) {
                    Ok(xi) => Mat2::from_rows(f.frequency(xi), avg.gradient).det() != 0.0,
                    Err(_) => false,
                }
            }
            ModelKind::Champagne(c) => c.is_regular(w),
        }
    }

    /// Cycle basis whose actions are smooth on the square `c +- radius`.
    pub fn branch_for(&self, c: Vec2, radius: f64) -> Branch {
        match &self.kind {
            ModelKind::Flat(_) => Branch::Global,
            ModelKind::Champagne(p) => match p.branch_for(c, radius) {
                ChampagneBranch::Plain => Branch::Plain,
                ChampagneBranch::Lifted => Branch::Lifted,
            },
        }
    }

    /// Half-width of the action chart around `c`: half the distance to
    /// the critical values, capped for models without any.
    pub fn chart_radius(&self, c: Vec2) -> f64 {
        let r = 0.5 * self.singular_distance(c);
        match &self.kind {
            ModelKind::Flat(f) => r.min(f.max_radius),
            ModelKind::Champagne(_) => r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_model_averages() {
        let golden = 0.5 * (1.0 + 5f64.sqrt());
        let m = make_flat_model([1.0, golden], "cos_x1").unwrap();
        assert_eq!(m.avg_q([0.3, -0.2]), 0.0);
        let m = make_flat_model([1.0, 1.0], "xi_weighted").unwrap();
        assert_eq!(m.avg_q([0.3, -0.2]), -0.2);
        let m = make_flat_model([1.0, 2f64.sqrt()], "cos_x1").unwrap();
        assert_eq!(
            m.frequency([0.0, 0.0], Branch::Global, None).unwrap(),
            [1.0, 2f64.sqrt()]
        );
    }

    #[test]
    fn flat_model_rejects_bad_input() {
        assert!(matches!(
            make_flat_model([1.0, 1.0], "sin_x7"),
            Err(Error::UnknownQChoice(_))
        ));
        assert!(make_flat_model([0.0, 0.0], "cos_x1").is_err());
    }

    #[test]
    fn champagne_singular_values_contain_the_origin() {
        let m = make_champagne_model(1.0).unwrap();
        assert_eq!(m.singular_distance([0.0, 0.0]), 0.0);
        assert!(!m.is_regular([0.0, 0.0]));
        assert!(m.is_regular([0.5, 0.3]));
        assert!(make_champagne_model(0.0).is_err());
    }

    #[test]
    fn focus_focus_value_is_a_rank_drop() {
        // At r = 0, p = 0 the momentum map F = (H, L_z) has dF = 0: both
        // gradients vanish there and H = 0, L_z = 0.
        let b = 1.0;
        let h = 1e-6;
        let ham = |x: f64, y: f64, px: f64, py: f64| {
            let r2 = x * x + y * y;
            0.5 * (px * px + py * py) + r2 * r2 - b * r2
        };
        let lz = |x: f64, y: f64, px: f64, py: f64| x * py - y * px;
        let grad = |f: &dyn Fn(f64, f64, f64, f64) -> f64| {
            let mut g = [0.0; 4];
            for (i, gi) in g.iter_mut().enumerate() {
                let mut a = [0.0; 4];
                let mut bm = [0.0; 4];
                a[i] = h;
                bm[i] = -h;
                *gi = (f(a[0], a[1], a[2], a[3]) - f(bm[0], bm[1], bm[2], bm[3])) / (2.0 * h);
            }
            g
        };
        let gh = grad(&ham);
        let gl = grad(&lz);
        assert!(gh.iter().chain(gl.iter()).all(|v| v.abs() < 1e-9));
        assert_eq!(ham(0.0, 0.0, 0.0, 0.0), 0.0);
    }
}
