//! Transition matrices between overlapping charts, cocycle checks, and the
//! monodromy class of a loop, for both fitted spectral charts and exact
//! action charts.

use crate::detect::HChart;
use crate::geom::{dist, norm, sub, IMat2, Mat2, Rect, Vec2};
use crate::models::{action_coords, ActionChart, ModelSystem};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

pub const ROUNDING_THRESHOLD: f64 = 0.1;
pub const CENTER_SPACING: f64 = 0.4;
/// Entry bound of the brute-force conjugator search for general classes.
pub const CONJUGATOR_BOUND: i64 = 8;

const OVERLAP_SAMPLES: usize = 3;
const OVERLAP_SHRINK: f64 = 0.8;

/// A chart whose Jacobian can be sampled over its domain in the value plane.
pub trait LocalChart: Sync {
    fn domain(&self) -> Rect;
    fn jacobian(&self, w: Vec2) -> Result<Mat2>;
}

/// A fitted h-chart restricted to its pseudo-chart domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoChart {
    pub value: Vec2,
    pub domain: Rect,
    pub hchart: HChart,
}

impl LocalChart for PseudoChart {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn jacobian(&self, w: Vec2) -> Result<Mat2> {
        Ok(self.hchart.jacobian(w))
    }
}

/// An exact action chart; its map is `w -> xi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalChart {
    pub chart: ActionChart,
}

impl LocalChart for ClassicalChart {
    fn domain(&self) -> Rect {
        self.chart.domain
    }

    fn jacobian(&self, w: Vec2) -> Result<Mat2> {
        let step = 1e-6 * self.chart.radius();
        let mut cols = [[0.0; 2]; 2];
        for (i, col) in cols.iter_mut().enumerate() {
            let mut plus = w;
            let mut minus = w;
            plus[i] += step;
            minus[i] -= step;
            let a = self.chart.xi_of(plus)?;
            let b = self.chart.xi_of(minus)?;
            *col = [(a[0] - b[0]) / (2.0 * step), (a[1] - b[1]) / (2.0 * step)];
        }
        Ok(Mat2::from_cols(cols[0], cols[1]))
    }
}

/// How a sampled chart-change Jacobian `D_i D_j^-1` becomes a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionRule {
    Direct,
    /// Inverse transpose, the convention for trivializations of the
    /// classical period lattice.
    Adjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub i: usize,
    pub j: usize,
    pub m: IMat2,
    pub pre_round: Mat2,
    pub rounding_error: f64,
}

#[derive(Clone, Debug)]
pub struct Atlas<C> {
    pub charts: Vec<C>,
    pub rule: TransitionRule,
}

pub type PseudoChartAtlas = Atlas<PseudoChart>;
pub type ClassicalAtlas = Atlas<ClassicalChart>;

impl<C: LocalChart> Atlas<C> {
    pub fn new(charts: Vec<C>, rule: TransitionRule) -> Self {
        Atlas { charts, rule }
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn overlap(&self, i: usize, j: usize) -> Option<Rect> {
        self.charts[i].domain().intersect(&self.charts[j].domain())
    }

    pub fn triple_overlap(&self, i: usize, j: usize, k: usize) -> Option<Rect> {
        self.overlap(i, j)?.intersect(&self.charts[k].domain())
    }

    /// Transition `M_ij`, the integer part of `d(f_i o f_j^-1)`, from the
    /// average over `samples`.
    pub fn transition_at(&self, i: usize, j: usize, samples: &[Vec2]) -> Result<TransitionMatrix> {
        if i == j {
            return Ok(TransitionMatrix {
                i,
                j,
                m: IMat2::IDENTITY,
                pre_round: Mat2::IDENTITY,
                rounding_error: 0.0,
            });
        }
        if samples.len() < 4 {
            return Err(Error::InvalidParameter(format!(
                "transition {i}->{j} needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        let mut sum = Mat2([[0.0; 2]; 2]);
        for &w in samples {
            let di = self.charts[i].jacobian(w)?;
            let dj = self.charts[j].jacobian(w)?;
            let dj_inv = dj.inverse().ok_or(Error::DegenerateAverage)?;
            sum = sum + di * dj_inv;
        }
        let mut pre_round = sum * (1.0 / samples.len() as f64);
        if self.rule == TransitionRule::Adjoint {
            pre_round = pre_round.transpose().inverse().ok_or(Error::DegenerateAverage)?;
        }
        let m = pre_round.round();
        let rounding_error = pre_round.max_abs_diff(&m.to_f64());
        if rounding_error > ROUNDING_THRESHOLD {
            return Err(Error::TransitionRounding { i, j, rounding_error });
        }
        if m.det().abs() != 1 {
            return Err(Error::TransitionDeterminant { i, j, det: m.det() });
        }
        Ok(TransitionMatrix {
            i,
            j,
            m,
            pre_round,
            rounding_error,
        })
    }

    pub fn transition(&self, i: usize, j: usize) -> Result<TransitionMatrix> {
        if i == j {
            return self.transition_at(i, j, &[]);
        }
        let ov = self.overlap(i, j).ok_or(Error::NoOverlap(i, j))?;
        self.transition_at(i, j, &ov.grid(OVERLAP_SAMPLES, OVERLAP_SHRINK))
    }

    /// Ordered pairs `(i, j)`, `i != j`, with overlapping domains.
    pub fn overlapping_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.overlap(i, j).is_some() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn triples(&self) -> Vec<[usize; 3]> {
        let n = self.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.overlap(i, j).is_none() {
                    continue;
                }
                for k in j + 1..n {
                    if self.triple_overlap(i, j, k).is_some() {
                        out.push([i, j, k]);
                    }
                }
            }
        }
        out
    }

    /// All transitions on nonempty overlaps, computed independently in
    /// both directions.
    pub fn transition_table(&self) -> Result<TransitionTable> {
        let pairs = self.overlapping_pairs();
        let computed = pairs
            .par_iter()
            .map(|&(i, j)| self.transition(i, j))
            .collect::<Result<Vec<_>>>()?;
        let max_rounding_error = computed.iter().map(|t| t.rounding_error).fold(0.0, f64::max);
        Ok(TransitionTable {
            n: self.len(),
            matrices: computed.into_iter().map(|t| ((t.i, t.j), t.m)).collect(),
            triples: self.triples(),
            max_rounding_error,
        })
    }

    pub fn cocycle_check(&self) -> Result<CocycleReport> {
        Ok(check_cocycle(&self.transition_table()?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub n: usize,
    pub matrices: BTreeMap<(usize, usize), IMat2>,
    pub triples: Vec<[usize; 3]>,
    pub max_rounding_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    Determinant { i: usize, j: usize },
    Antisymmetry { i: usize, j: usize },
    Cocycle { i: usize, j: usize, k: usize },
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct CocycleReport {
    pub pairs_checked: usize,
    pub triples_checked: usize,
    pub violations: Vec<Violation>,
}

impl CocycleReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact integer checks: `det M_ij = +-1`, `M_ij M_ji = I` and
/// `M_ij M_jk M_ki = I` on every listed triple overlap.
pub fn check_cocycle(table: &TransitionTable) -> CocycleReport {
    let mut report = CocycleReport::default();
    let get = |i: usize, j: usize| -> Option<IMat2> {
        if i == j {
            Some(IMat2::IDENTITY)
        } else {
            table.matrices.get(&(i, j)).copied()
        }
    };
    for (&(i, j), m) in &table.matrices {
        if m.det().abs() != 1 {
            report.violations.push(Violation::Determinant { i, j });
        }
        if i < j {
            report.pairs_checked += 1;
            match get(j, i) {
                Some(back) if *m * back == IMat2::IDENTITY => {}
                _ => report.violations.push(Violation::Antisymmetry { i, j }),
            }
        }
    }
    for &[i, j, k] in &table.triples {
        report.triples_checked += 1;
        match (get(i, j), get(j, k), get(k, i)) {
            (Some(a), Some(b), Some(c)) if a * b * c == IMat2::IDENTITY => {}
            _ => report.violations.push(Violation::Cocycle { i, j, k }),
        }
    }
    report
}

/// GL(2, Z) conjugacy normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalForm {
    Identity,
    MinusIdentity,
    /// Conjugate to `[[1, m], [0, 1]]`.
    Parabolic {
        m: u64,
    },
    /// Conjugate to `-[[1, m], [0, 1]]`.
    NegativeParabolic {
        m: u64,
    },
    /// Any other class, described by its invariants and a small representative.
    Other {
        trace: i64,
        det: i64,
        representative: IMat2,
    },
}

impl NormalForm {
    pub fn representative(&self) -> IMat2 {
        match *self {
            NormalForm::Identity => IMat2::IDENTITY,
            NormalForm::MinusIdentity => -IMat2::IDENTITY,
            NormalForm::Parabolic { m } => IMat2::new(1, m as i64, 0, 1),
            NormalForm::NegativeParabolic { m } => -IMat2::new(1, m as i64, 0, 1),
            NormalForm::Other { representative, .. } => representative,
        }
    }

    /// `|m|` for parabolic classes, `0` for `+-I`.
    pub fn parabolic_index(&self) -> Option<u64> {
        match *self {
            NormalForm::Identity | NormalForm::MinusIdentity => Some(0),
            NormalForm::Parabolic { m } | NormalForm::NegativeParabolic { m } => Some(m),
            NormalForm::Other { .. } => None,
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalForm::Identity => write!(f, "identity"),
            NormalForm::MinusIdentity => write!(f, "minus identity"),
            NormalForm::Parabolic { m } => write!(f, "parabolic |m| = {m}"),
            NormalForm::NegativeParabolic { m } => write!(f, "negative parabolic |m| = {m}"),
            NormalForm::Other { trace, det, .. } => write!(f, "trace {trace}, det {det}"),
        }
    }
}

fn gcd(a: i64, b: i64) -> u64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn unimodular_conjugators(bound: i64) -> impl Iterator<Item = IMat2> {
    let r = -bound..=bound;
    r.clone().flat_map(move |a| {
        let r = r.clone();
        r.clone().flat_map(move |b| {
            let r = r.clone();
            r.clone().flat_map(move |c| {
                r.clone()
                    .map(move |d| IMat2::new(a, b, c, d))
                    .filter(|p| p.det().abs() == 1)
            })
        })
    })
}

fn max_entry(m: &IMat2) -> i64 {
    m.0.iter().flatten().map(|v| v.abs()).max().unwrap_or(0)
}

pub fn normal_form(m: &IMat2) -> NormalForm {
    let (t, d) = (m.trace(), m.det());
    if *m == IMat2::IDENTITY {
        return NormalForm::Identity;
    }
    if *m == -IMat2::IDENTITY {
        return NormalForm::MinusIdentity;
    }
    if d == 1 && (t == 2 || t == -2) {
        let s = t / 2;
        let n = *m * IMat2::new(s, 0, 0, s);
        let g = gcd(
            gcd(n.0[0][0] - 1, n.0[0][1]) as i64,
            gcd(n.0[1][0], n.0[1][1] - 1) as i64,
        );
        return if s == 1 {
            NormalForm::Parabolic { m: g }
        } else {
            NormalForm::NegativeParabolic { m: g }
        };
    }
    let mut best = *m;
    for p in unimodular_conjugators(3) {
        let pinv = p.inverse().expect("unimodular");
        let c = p * *m * pinv;
        if (max_entry(&c), c.0) < (max_entry(&best), best.0) {
            best = c;
        }
    }
    NormalForm::Other {
        trace: t,
        det: d,
        representative: best,
    }
}

/// Whether `a` and `b` are conjugate in GL(2, Z). Exact for `+-I` and the
/// parabolic classes; otherwise a search over conjugators with entries
/// bounded by [`CONJUGATOR_BOUND`].
pub fn gl2z_conjugate(a: &IMat2, b: &IMat2) -> bool {
    if a.trace() != b.trace() || a.det() != b.det() {
        return false;
    }
    let (na, nb) = (normal_form(a), normal_form(b));
    if na.parabolic_index().is_some() || nb.parabolic_index().is_some() {
        return na == nb;
    }
    unimodular_conjugators(CONJUGATOR_BOUND).any(|p| p * *a == *b * p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyClass {
    pub loop_charts: Vec<usize>,
    pub transitions: Vec<TransitionMatrix>,
    pub product: IMat2,
    pub normal_form: NormalForm,
    pub trace: i64,
    pub det: i64,
}

impl MonodromyClass {
    pub fn from_product(loop_charts: Vec<usize>, transitions: Vec<TransitionMatrix>, product: IMat2) -> Self {
        MonodromyClass {
            loop_charts,
            transitions,
            normal_form: normal_form(&product),
            trace: product.trace(),
            det: product.det(),
            product,
        }
    }

    pub fn max_rounding_error(&self) -> f64 {
        self.transitions.iter().map(|t| t.rounding_error).fold(0.0, f64::max)
    }
}

/// Product `M_{l0 l1} M_{l1 l2} ... M_{l(n-1) l0}` around a cyclic sequence
/// of charts.
pub fn loop_monodromy<C: LocalChart>(atlas: &Atlas<C>, loop_charts: &[usize]) -> Result<MonodromyClass> {
    let n = loop_charts.len();
    let mut transitions = Vec::with_capacity(n);
    let mut product = IMat2::IDENTITY;
    if n > 1 {
        for s in 0..n {
            let (a, b) = (loop_charts[s], loop_charts[(s + 1) % n]);
            if a != b && atlas.overlap(a, b).is_none() {
                return Err(Error::LoopGap(a, b));
            }
            let t = atlas.transition(a, b)?;
            product = product * t.m;
            transitions.push(t);
        }
    }
    Ok(MonodromyClass::from_product(loop_charts.to_vec(), transitions, product))
}

/// True iff the spectral product is GL(2, Z)-conjugate to the transpose of
/// the classical one.
pub fn compare_monodromies(spectral: &MonodromyClass, classical: &MonodromyClass) -> bool {
    gl2z_conjugate(&spectral.product, &classical.product.transpose())
}

/// Closed polygon in the value plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    pub vertices: Vec<Vec2>,
}

impl LoopPath {
    /// Axis-aligned square `center +- half`, counterclockwise.
    pub fn square(center: Vec2, half: f64) -> Result<Self> {
        let [x, y] = center;
        LoopPath::new(vec![
            [x - half, y - half],
            [x + half, y - half],
            [x + half, y + half],
            [x - half, y + half],
        ])
    }

    /// Hexagon around the focus-focus value of the champagne model with
    /// unit well depth, at distance at least 0.12 from its critical values.
    pub fn champagne_focus_loop() -> Self {
        LoopPath {
            vertices: vec![
                [0.25, 0.0],
                [0.1, 0.2],
                [-0.1, 0.12],
                [-0.125, 0.0],
                [-0.1, -0.12],
                [0.1, -0.2],
            ],
        }
    }

    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidParameter("a loop needs at least 3 vertices".into()));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("loop vertices must be finite".into()));
        }
        Ok(LoopPath { vertices })
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n).map(|i| dist(self.vertices[i], self.vertices[(i + 1) % n])).sum()
    }

    /// Point at arc length `s` from the first vertex.
    pub fn point_at(&self, s: f64) -> Vec2 {
        let n = self.vertices.len();
        let mut s = s.rem_euclid(self.perimeter());
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
            let len = dist(a, b);
            if s <= len && len > 0.0 {
                let t = s / len;
                return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            }
            s -= len;
        }
        self.vertices[0]
    }

    pub fn reversed(&self) -> LoopPath {
        let mut v = self.vertices.clone();
        v[1..].reverse();
        LoopPath { vertices: v }
    }

    pub fn centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let s = self
            .vertices
            .iter()
            .fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }

    /// Vertices moved radially about the centroid by the relative amounts
    /// `factors[i]` (so `0.1` moves a vertex 10% further out).
    pub fn perturbed(&self, factors: &[f64]) -> LoopPath {
        let c = self.centroid();
        let vertices = self
            .vertices
            .iter()
            .zip(factors.iter().cycle())
            .map(|(v, f)| {
                let d = sub(*v, c);
                [c[0] + (1.0 + f) * d[0], c[1] + (1.0 + f) * d[1]]
            })
            .collect();
        LoopPath { vertices }
    }

    /// Minimum distance from the path to `p`.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                let ab = sub(b, a);
                let l2 = ab[0] * ab[0] + ab[1] * ab[1];
                let t = if l2 > 0.0 {
                    (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / l2).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                norm(sub(p, [a[0] + t * ab[0], a[1] + t * ab[1]]))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Winding number of the path around `p`.
    pub fn winding_number(&self, p: Vec2) -> i64 {
        let n = self.vertices.len();
        let mut total = 0.0;
        for i in 0..n {
            let a = sub(self.vertices[i], p);
            let b = sub(self.vertices[(i + 1) % n], p);
            total += crate::geom::cross(a, b).atan2(crate::geom::dot(a, b));
        }
        (total / (2.0 * std::f64::consts::PI)).round() as i64
    }
}

/// Chart centers along the path, consecutive ones at most
/// `spacing * min(r_a, r_b)` apart in arc length, where `radius` gives
/// the chart radius at a point.
pub fn place_centers(path: &LoopPath, spacing: f64, radius: impl Fn(Vec2) -> Result<f64>) -> Result<Vec<Vec2>> {
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(Error::InvalidParameter(format!("spacing {spacing} must lie in (0, 1)")));
    }
    let total = path.perimeter();
    let r0 = radius(path.point_at(0.0))?;
    let mut centers = vec![path.point_at(0.0)];
    let mut s = 0.0;
    let mut r = r0;
    loop {
        if total - s <= spacing * r.min(r0) {
            break;
        }
        let mut step = spacing * r;
        let r_next = radius(path.point_at(s + step))?;
        if r_next < r {
            step = spacing * r_next;
        }
        s += step;
        if s >= total {
            break;
        }
        r = radius(path.point_at(s))?;
        centers.push(path.point_at(s));
        if centers.len() > 100_000 {
            return Err(Error::InvalidParameter("loop needs too many charts".into()));
        }
    }
    Ok(centers)
}

/// Classical atlas along the path and the monodromy of one traversal per
/// `winding`.
pub fn classical_monodromy(
    model: &ModelSystem,
    path: &LoopPath,
    spacing: f64,
    winding: usize,
) -> Result<(MonodromyClass, ClassicalAtlas)> {
    let centers = place_centers(path, spacing, |p| Ok(model.chart_radius(p)))?;
    let charts = centers
        .par_iter()
        .map(|&c| {
            Ok(ClassicalChart {
                chart: action_coords(model, c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let atlas = Atlas::new(charts, TransitionRule::Adjoint);
    let order: Vec<usize> = (0..winding.max(1)).flat_map(|_| 0..atlas.len()).collect();
    Ok((loop_monodromy(&atlas, &order)?, atlas))
}
