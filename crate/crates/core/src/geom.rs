//! Small fixed-size linear algebra in the plane.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

pub type Vec2 = [f64; 2];

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

#[inline]
pub fn max_abs(a: Vec2) -> f64 {
    a[0].abs().max(a[1].abs())
}

/// Real 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn from_cols(c0: Vec2, c1: Vec2) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn from_rows(r0: Vec2, r1: Vec2) -> Self {
        Mat2([r0, r1])
    }

    pub fn col(&self, j: usize) -> Vec2 {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        Mat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]))
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    /// Singular values, largest first.
    pub fn singular_values(&self) -> (f64, f64) {
        let m = &self.0;
        let a = m[0][0] * m[0][0] + m[1][0] * m[1][0];
        let b = m[0][0] * m[0][1] + m[1][0] * m[1][1];
        let c = m[0][1] * m[0][1] + m[1][1] * m[1][1];
        let tr = a + c;
        let disc = ((a - c) * (a - c) + 4.0 * b * b).sqrt();
        let l1 = 0.5 * (tr + disc);
        // det^2 / l1 is accurate when the small eigenvalue suffers cancellation.
        let l2 = if l1 > 0.0 { self.det().powi(2) / l1 } else { 0.0 };
        (l1.max(0.0).sqrt(), l2.max(0.0).sqrt())
    }

    pub fn condition_number(&self) -> f64 {
        let (s1, s2) = self.singular_values();
        if s2 == 0.0 {
            f64::INFINITY
        } else {
            s1 / s2
        }
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - other.0[i][j]).abs());
            }
        }
        m
    }

    /// Entrywise rounding to the nearest integer matrix.
    pub fn round(&self) -> IMat2 {
        let r = |x: f64| x.round() as i64;
        IMat2([[r(self.0[0][0]), r(self.0[0][1])], [r(self.0[1][0]), r(self.0[1][1])]])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] -= o.0[i][j];
            }
        }
        r
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        let mut r = self;
        for row in r.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        r
    }
}

/// Integer 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IMat2(pub [[i64; 2]; 2]);

impl IMat2 {
    pub const IDENTITY: IMat2 = IMat2([[1, 0], [0, 1]]);

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        IMat2([[a, b], [c, d]])
    }

    pub fn det(&self) -> i64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn trace(&self) -> i64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn transpose(&self) -> Self {
        IMat2([[self.0[0][0], self.0[1][0]], [self.0[0][1], self.0[1][1]]])
    }

    pub fn is_unimodular(&self) -> bool {
        self.det().abs() == 1
    }

    /// Exact inverse for unimodular matrices.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.abs() != 1 {
            return None;
        }
        let m = &self.0;
        Some(IMat2([[m[1][1] * d, -m[0][1] * d], [-m[1][0] * d, m[0][0] * d]]))
    }

    pub fn apply(&self, v: [i64; 2]) -> [i64; 2] {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn to_f64(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] as f64, m[0][1] as f64], [m[1][0] as f64, m[1][1] as f64]])
    }

    pub fn pow(&self, n: u32) -> IMat2 {
        (0..n).fold(IMat2::IDENTITY, |acc, _| acc * *self)
    }
}

impl Mul for IMat2 {
    type Output = IMat2;
    fn mul(self, o: IMat2) -> IMat2 {
        let a = &self.0;
        let b = &o.0;
        IMat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Neg for IMat2 {
    type Output = IMat2;
    fn neg(self) -> IMat2 {
        let m = &self.0;
        IMat2([[-m[0][0], -m[0][1]], [-m[1][0], -m[1][1]]])
    }
}

impl fmt::Display for IMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]
        )
    }
}

/// Axis-aligned rectangle `center +- half`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Vec2,
    pub half: Vec2,
}

impl Rect {
    pub fn new(center: Vec2, half: Vec2) -> Self {
        Rect { center, half }
    }

    pub fn square(center: Vec2, radius: f64) -> Self {
        Rect {
            center,
            half: [radius, radius],
        }
    }

    pub fn lo(&self) -> Vec2 {
        sub(self.center, self.half)
    }

    pub fn hi(&self) -> Vec2 {
        add(self.center, self.half)
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (p[0] - self.center[0]).abs() <= self.half[0] && (p[1] - self.center[1]).abs() <= self.half[1]
    }

    /// Whether `inner` lies entirely inside `self`.
    pub fn contains_rect(&self, inner: &Rect) -> bool {
        let (lo, hi) = (self.lo(), self.hi());
        let (ilo, ihi) = (inner.lo(), inner.hi());
        ilo[0] >= lo[0] && ilo[1] >= lo[1] && ihi[0] <= hi[0] && ihi[1] <= hi[1]
    }

    pub fn intersect(&self, other: &Rect) -> Option<Rect> {
        let (a_lo, a_hi) = (self.lo(), self.hi());
        let (b_lo, b_hi) = (other.lo(), other.hi());
        let lo = [a_lo[0].max(b_lo[0]), a_lo[1].max(b_lo[1])];
        let hi = [a_hi[0].min(b_hi[0]), a_hi[1].min(b_hi[1])];
        if lo[0] < hi[0] && lo[1] < hi[1] {
            Some(Rect {
                center: [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])],
                half: [0.5 * (hi[0] - lo[0]), 0.5 * (hi[1] - lo[1])],
            })
        } else {
            None
        }
    }

    /// `n x n` grid of nodes spanning the rectangle shrunk by `shrink`.
    pub fn grid(&self, n: usize, shrink: f64) -> Vec<Vec2> {
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.center];
        }
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let s = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                let t = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                out.push([
                    self.center[0] + shrink * s * self.half[0],
                    self.center[1] + shrink * t * self.half[1],
                ]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singular_values_of_diagonal() {
        let m = Mat2([[3.0, 0.0], [0.0, -0.5]]);
        let (a, b) = m.singular_values();
        assert!((a - 3.0).abs() < 1e-14);
        assert!((b - 0.5).abs() < 1e-14);
    }

    #[test]
    fn integer_inverse_is_exact() {
        let m = IMat2::new(2, 1, 1, 1);
        assert_eq!(m * m.inverse().unwrap(), IMat2::IDENTITY);
        assert!(IMat2::new(2, 0, 0, 1).inverse().is_none());
    }

    #[test]
    fn rect_intersection() {
        let a = Rect::square([0.0, 0.0], 1.0);
        let b = Rect::square([1.5, 0.0], 1.0);
        let c = a.intersect(&b).unwrap();
        assert!((c.center[0] - 0.75).abs() < 1e-15);
        assert!((c.half[0] - 0.25).abs() < 1e-15);
        assert!(a.intersect(&Rect::square([3.0, 0.0], 0.5)).is_none());
    }
}
