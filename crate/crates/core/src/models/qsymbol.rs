//! Perturbation symbols `q(x, xi)` as trigonometric polynomials in the angles
//! with coefficients affine in the actions.

use crate::geom::Vec2;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// `constant + <gradient, xi>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    pub gradient: Vec2,
}

impl Affine {
    pub const ZERO: Affine = Affine {
        constant: 0.0,
        gradient: [0.0, 0.0],
    };

    pub fn constant(c: f64) -> Self {
        Affine {
            constant: c,
            gradient: [0.0, 0.0],
        }
    }

    pub fn eval(&self, xi: Vec2) -> f64 {
        self.constant + self.gradient[0] * xi[0] + self.gradient[1] * xi[1]
    }
}

/// One harmonic `cos_coeff(xi) cos(k.x) + sin_coeff(xi) sin(k.x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: [i32; 2],
    pub cos: Affine,
    pub sin: Affine,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    pub terms: Vec<TrigTerm>,
}

impl TrigPolynomial {
    pub fn eval(&self, x: Vec2, xi: Vec2) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let phase = t.k[0] as f64 * x[0] + t.k[1] as f64 * x[1];
                let (s, c) = phase.sin_cos();
                t.cos.eval(xi) * c + t.sin.eval(xi) * s
            })
            .sum()
    }

    /// Exact torus average: the zero-mode coefficient.
    pub fn mean(&self, xi: Vec2) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.k == [0, 0])
            .map(|t| t.cos.eval(xi))
            .sum()
    }

    /// Gradient of the torus average with respect to the actions (constant).
    pub fn mean_gradient(&self) -> Vec2 {
        self.terms.iter().filter(|t| t.k == [0, 0]).fold([0.0, 0.0], |acc, t| {
            [acc[0] + t.cos.gradient[0], acc[1] + t.cos.gradient[1]]
        })
    }

    pub fn mean_affine(&self) -> Affine {
        let c: f64 = self
            .terms
            .iter()
            .filter(|t| t.k == [0, 0])
            .map(|t| t.cos.constant)
            .sum();
        Affine {
            constant: c,
            gradient: self.mean_gradient(),
        }
    }

    /// Largest `|k|_inf` among the harmonics.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.k[0].unsigned_abs().max(t.k[1].unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    fn harmonic(k: [i32; 2], amp: f64) -> TrigTerm {
        TrigTerm {
            k,
            cos: Affine::constant(amp),
            sin: Affine::ZERO,
        }
    }

    fn action_term(gradient: Vec2) -> TrigTerm {
        TrigTerm {
            k: [0, 0],
            cos: Affine {
                constant: 0.0,
                gradient,
            },
            sin: Affine::ZERO,
        }
    }
}

/// Named perturbation symbols shipped with the reference models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum QChoice {
    /// `cos x1`
    CosX1,
    /// `cos x2`
    CosX2,
    /// `xi2 + 0.1 cos x1`
    XiWeighted,
    /// `xi2 + cos x1 + 0.5 cos(x1 - x2)`
    Mixed,
    /// `xi1 + 0.1 cos x1`; for the champagne bottle `xi1` is the angular momentum.
    AngularMomentum,
    /// A constant symbol.
    Constant(f64),
}

impl QChoice {
    pub fn polynomial(&self) -> TrigPolynomial {
        use TrigPolynomial as T;
        let terms = match *self {
            QChoice::CosX1 => vec![T::harmonic([1, 0], 1.0)],
            QChoice::CosX2 => vec![T::harmonic([0, 1], 1.0)],
            QChoice::XiWeighted => vec![T::action_term([0.0, 1.0]), T::harmonic([1, 0], 0.1)],
            QChoice::Mixed => vec![
                T::action_term([0.0, 1.0]),
                T::harmonic([1, 0], 1.0),
                T::harmonic([1, -1], 0.5),
            ],
            QChoice::AngularMomentum => {
                vec![T::action_term([1.0, 0.0]), T::harmonic([1, 0], 0.1)]
            }
            QChoice::Constant(c) => vec![T::harmonic([0, 0], c)],
        };
        TrigPolynomial { terms }
    }
}

impl FromStr for QChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "cos_x1" => Ok(QChoice::CosX1),
            "cos_x2" => Ok(QChoice::CosX2),
            "xi_weighted" => Ok(QChoice::XiWeighted),
            "mixed" => Ok(QChoice::Mixed),
            "angular_momentum" => Ok(QChoice::AngularMomentum),
            other => {
                if let Some(v) = other.strip_prefix("const=") {
                    v.parse::<f64>()
                        .map(QChoice::Constant)
                        .map_err(|_| Error::UnknownQChoice(other.to_string()))
                } else {
                    Err(Error::UnknownQChoice(other.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for QChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QChoice::CosX1 => write!(f, "cos_x1"),
            QChoice::CosX2 => write!(f, "cos_x2"),
            QChoice::XiWeighted => write!(f, "xi_weighted"),
            QChoice::Mixed => write!(f, "mixed"),
            QChoice::AngularMomentum => write!(f, "angular_momentum"),
            QChoice::Constant(c) => write!(f, "const={c}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in [
            "cos_x1",
            "cos_x2",
            "xi_weighted",
            "mixed",
            "angular_momentum",
            "const=3",
        ] {
            let q: QChoice = s.parse().unwrap();
            assert_eq!(q.to_string(), s);
        }
        assert!(matches!("sin_x7".parse::<QChoice>(), Err(Error::UnknownQChoice(_))));
    }

    #[test]
    fn means_are_zero_modes() {
        let q = QChoice::XiWeighted.polynomial();
        assert_eq!(q.mean([0.2, 0.5]), 0.5);
        assert_eq!(q.mean_gradient(), [0.0, 1.0]);
        assert_eq!(QChoice::CosX1.polynomial().mean([1.0, 1.0]), 0.0);
        assert_eq!(QChoice::Constant(3.0).polynomial().mean([1.0, -1.0]), 3.0);
    }
}
