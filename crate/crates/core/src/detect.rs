//! Recovering local lattice charts from a raw eigenvalue cloud.
//!
//! Points are first rescaled by `chi^-1(mu) = (Re mu, Im mu / eps)`, where
//! both lattice directions have spacing of order `h`. A basis is read off
//! the clustered nearest-neighbor differences, labels are propagated by a
//! breadth-first walk that re-estimates the local basis as it goes, and a
//! polynomial map `f` with `f(u_k) ~ h k` is fitted by least squares.

use crate::geom::{dist, norm, sub, IMat2, Mat2, Vec2};
use crate::models::ActionChart;
use crate::synth::{GoodRectangle, SpectrumCloud, C64};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

pub const MIN_POINTS: usize = 25;
pub const MAX_CONDITION: f64 = 50.0;
pub const RESIDUAL_THRESHOLD: f64 = 0.05;
pub const MAX_UNLABELED_FRACTION: f64 = 0.01;
pub const DEFAULT_FIT_DEGREE: usize = 3;

const BASIS_NEIGHBORS: usize = 6;
const LABEL_NEIGHBORS: usize = 8;
const ROUNDING_SLACK: f64 = 0.3;

pub fn chi(u: Vec2, epsilon: f64) -> C64 {
    C64::new(u[0], epsilon * u[1])
}

pub fn chi_inverse(z: C64, epsilon: f64) -> Result<Vec2> {
    if epsilon == 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidParameter("chi_inverse needs a nonzero epsilon".into()));
    }
    Ok([z.re, z.im / epsilon])
}

pub fn scaled_points(cloud: &SpectrumCloud) -> Result<Vec<Vec2>> {
    cloud
        .points
        .iter()
        .map(|p| chi_inverse(p.mu, cloud.params.epsilon))
        .collect()
}

/// Uniform-cell index for k-nearest-neighbor queries.
pub struct NeighborIndex<'a> {
    points: &'a [Vec2],
    origin: Vec2,
    cell: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
}

impl<'a> NeighborIndex<'a> {
    pub fn new(points: &'a [Vec2]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(f64::MIN_POSITIVE);
        let mut cell = (area / points.len().max(1) as f64).sqrt();
        if !(cell > 0.0 && cell.is_finite()) {
            cell = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1.0);
        }
        let mut idx = NeighborIndex {
            points,
            origin: lo,
            cell,
            cells: HashMap::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let key = idx.key(*p);
            idx.cells.entry(key).or_default().push(i);
        }
        idx
    }

    fn key(&self, p: Vec2) -> (i64, i64) {
        (
            ((p[0] - self.origin[0]) / self.cell).floor() as i64,
            ((p[1] - self.origin[1]) / self.cell).floor() as i64,
        )
    }

    /// The `k` nearest other points of point `i`, closest first; ties are
    /// broken by index so the result is deterministic.
    pub fn knn(&self, i: usize, k: usize) -> Vec<usize> {
        let p = self.points[i];
        let (cx, cy) = self.key(p);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let max_ring = 1 + (self.cells.len() as f64).sqrt() as i64 * 4;
        for ring in 0..=max_ring {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    if dx.abs().max(dy.abs()) != ring {
                        continue;
                    }
                    if let Some(v) = self.cells.get(&(cx + dx, cy + dy)) {
                        for &j in v {
                            if j != i {
                                found.push((dist(p, self.points[j]), j));
                            }
                        }
                    }
                }
            }
            if found.len() >= k {
                found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                // Points beyond this ring are at least `ring * cell` away.
                if found[k - 1].0 <= ring as f64 * self.cell {
                    break;
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(k);
        found.into_iter().map(|x| x.1).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub b1: Vec2,
    pub b2: Vec2,
}

impl Basis {
    pub fn matrix(&self) -> Mat2 {
        Mat2::from_cols(self.b1, self.b2)
    }

    /// Lagrange-Gauss reduction followed by a sign flip making the basis acute.
    pub fn reduced(self) -> Basis {
        let (mut b1, mut b2) = (self.b1, self.b2);
        for _ in 0..100 {
            if norm(b2) < norm(b1) {
                std::mem::swap(&mut b1, &mut b2);
            }
            let m = (crate::geom::dot(b1, b2) / crate::geom::dot(b1, b1)).round();
            if m == 0.0 {
                break;
            }
            b2 = [b2[0] - m * b1[0], b2[1] - m * b1[1]];
        }
        if crate::geom::dot(b1, b2) < 0.0 {
            b2 = [-b2[0], -b2[1]];
        }
        Basis { b1, b2 }
    }
}

struct Cluster {
    sum: Vec2,
    count: usize,
}

impl Cluster {
    fn centroid(&self) -> Vec2 {
        [self.sum[0] / self.count as f64, self.sum[1] / self.count as f64]
    }
}

/// Lattice basis of a rescaled point cloud from clustered neighbor differences.
pub fn detect_basis_points(points: &[Vec2]) -> Result<Basis> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientPoints {
            needed: MIN_POINTS,
            got: points.len(),
        });
    }
    let index = NeighborIndex::new(points);
    let mut diffs: Vec<Vec2> = Vec::with_capacity(points.len() * BASIS_NEIGHBORS);
    for i in 0..points.len() {
        for j in index.knn(i, BASIS_NEIGHBORS) {
            let mut d = sub(points[j], points[i]);
            if d[1] < 0.0 || (d[1] == 0.0 && d[0] < 0.0) {
                d = [-d[0], -d[1]];
            }
            diffs.push(d);
        }
    }
    diffs.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)).then(a[0].total_cmp(&b[0])));
    let mut clusters: Vec<Cluster> = Vec::new();
    for d in diffs {
        let len = norm(d);
        if len == 0.0 {
            continue;
        }
        let mut matched = false;
        for c in clusters.iter_mut() {
            let cen = c.centroid();
            let tol = 0.2 * norm(cen);
            let flipped = [-d[0], -d[1]];
            let cand = if dist(d, cen) <= dist(flipped, cen) { d } else { flipped };
            if dist(cand, cen) <= tol {
                c.sum = [c.sum[0] + cand[0], c.sum[1] + cand[1]];
                c.count += 1;
                matched = true;
                break;
            }
        }
        if !matched {
            clusters.push(Cluster { sum: d, count: 1 });
        }
    }
    let max_count = clusters.iter().map(|c| c.count).max().unwrap_or(0);
    let min_count = 3.max(max_count / 20);
    let mut strong: Vec<Vec2> = clusters
        .iter()
        .filter(|c| c.count >= min_count)
        .map(|c| c.centroid())
        .collect();
    strong.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)));
    let b1 = *strong.first().ok_or(Error::DegenerateCloud)?;
    let b2 = strong
        .iter()
        .skip(1)
        .find(|v| (crate::geom::cross(b1, **v) / (norm(b1) * norm(**v))).abs() >= 0.3)
        .copied()
        .ok_or(Error::DegenerateCloud)?;
    let basis = Basis { b1, b2 }.reduced();
    let cond = basis.matrix().condition_number();
    if cond > MAX_CONDITION {
        return Err(Error::IllConditionedBasis(cond));
    }
    Ok(basis)
}

pub fn detect_basis(cloud: &SpectrumCloud) -> Result<Basis> {
    detect_basis_points(&scaled_points(cloud)?)
}

/// Index of the point closest to `target`.
pub fn nearest_point(points: &[Vec2], target: Vec2) -> Option<usize> {
    (0..points.len()).min_by(|&a, &b| {
        dist(points[a], target)
            .total_cmp(&dist(points[b], target))
            .then(a.cmp(&b))
    })
}

/// Least-squares local basis from labeled neighbors, if well determined.
fn local_basis(points: &[Vec2], labels: &[Option<[i64; 2]>], p: usize, nbrs: &[usize]) -> Option<Mat2> {
    let lp = labels[p]?;
    let mut dl = [[0.0; 2]; 2];
    let mut ll = [[0.0; 2]; 2];
    let mut n = 0;
    for &q in nbrs {
        if let Some(lq) = labels[q] {
            let l = [(lq[0] - lp[0]) as f64, (lq[1] - lp[1]) as f64];
            let d = sub(points[q], points[p]);
            for a in 0..2 {
                for b in 0..2 {
                    dl[a][b] += d[a] * l[b];
                    ll[a][b] += l[a] * l[b];
                }
            }
            n += 1;
        }
    }
    if n < 3 {
        return None;
    }
    let llm = Mat2(ll);
    // Gram determinant at least that of two unit steps keeps the fit determined.
    if llm.det() < 0.5 {
        return None;
    }
    Some(Mat2(dl) * llm.inverse()?)
}

/// Breadth-first labeling from `anchor`; the anchor gets label `(0, 0)`.
/// At most 1% of the points may stay unlabeled.
pub fn label_points(points: &[Vec2], basis: &Basis, anchor: usize) -> Result<Vec<Option<[i64; 2]>>> {
    let n = points.len();
    let index = NeighborIndex::new(points);
    let neighbors: Vec<Vec<usize>> = (0..n).map(|i| index.knn(i, LABEL_NEIGHBORS)).collect();
    let mut labels: Vec<Option<[i64; 2]>> = vec![None; n];
    let mut bases: Vec<Mat2> = vec![basis.matrix(); n];
    labels[anchor] = Some([0, 0]);
    let mut queue = VecDeque::from([anchor]);
    while let Some(p) = queue.pop_front() {
        if let Some(b) = local_basis(points, &labels, p, &neighbors[p]) {
            if b.condition_number() <= MAX_CONDITION {
                bases[p] = b;
            }
        }
        let inv = match bases[p].inverse() {
            Some(m) => m,
            None => continue,
        };
        let lp = labels[p].expect("queued points are labeled");
        for &q in &neighbors[p] {
            let c = inv.apply(sub(points[q], points[p]));
            let r = [c[0].round(), c[1].round()];
            if (c[0] - r[0]).abs() > ROUNDING_SLACK || (c[1] - r[1]).abs() > ROUNDING_SLACK {
                continue;
            }
            let proposed = [lp[0] + r[0] as i64, lp[1] + r[1] as i64];
            match labels[q] {
                None => {
                    labels[q] = Some(proposed);
                    bases[q] = bases[p];
                    queue.push_back(q);
                }
                Some(existing) if existing != proposed => {
                    return Err(Error::LabelConflict {
                        index: q,
                        existing,
                        proposed,
                    });
                }
                Some(_) => {}
            }
        }
    }
    let unlabeled = labels.iter().filter(|l| l.is_none()).count();
    if unlabeled as f64 > MAX_UNLABELED_FRACTION * n as f64 {
        return Err(Error::Unlabeled { unlabeled, total: n });
    }
    let mut seen: HashMap<[i64; 2], usize> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if let Some(l) = l {
            if let Some(&j) = seen.get(l) {
                return Err(Error::LabelConflict {
                    index: i.max(j),
                    existing: *l,
                    proposed: *l,
                });
            }
            seen.insert(*l, i);
        }
    }
    Ok(labels)
}

/// Labels of a cloud, anchored at the point nearest the rectangle center.
pub fn label_lattice(cloud: &SpectrumCloud, basis: &Basis) -> Result<(Vec<Option<[i64; 2]>>, usize)> {
    let points = scaled_points(cloud)?;
    let anchor = nearest_point(&points, cloud.rectangle.value).ok_or(Error::InsufficientPoints {
        needed: MIN_POINTS,
        got: 0,
    })?;
    Ok((label_points(&points, basis, anchor)?, anchor))
}

fn monomial_exponents(degree: usize) -> Vec<(u32, u32)> {
    let mut e = Vec::new();
    for total in 0..=degree as u32 {
        for a in (0..=total).rev() {
            e.push((a, total - a));
        }
    }
    e
}

/// Fitted h-chart: a polynomial map `f` of degree `degree` in the scaled
/// coordinates `t = (u - center) / scale`, with `f(u_k) ~ h label_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HChart {
    pub rectangle: GoodRectangle,
    pub h: f64,
    pub epsilon: f64,
    pub basis: Basis,
    pub anchor: usize,
    /// Labeled points and their labels; unlabeled points are dropped.
    pub points: Vec<Vec2>,
    pub labels: Vec<[i64; 2]>,
    /// Indices of the labeled points in the input cloud.
    pub indices: Vec<usize>,
    pub unlabeled: usize,
    pub center: Vec2,
    pub scale: f64,
    pub degree: usize,
    pub coeffs: [Vec<f64>; 2],
    /// Distance of `f(u) / h` to the integer lattice, per point.
    pub residuals: Vec<f64>,
}

fn solve_normal(rows: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let ata = rows.transpose() * rows;
    let chol = ata.clone().cholesky().ok_or(Error::RankDeficient)?;
    let atb = rows.transpose() * rhs;
    let mut x = chol.solve(&atb);
    // One step of iterative refinement on the normal equations.
    let r = &atb - &ata * &x;
    x += chol.solve(&r);
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::RankDeficient)
    }
}

pub fn fit_points(
    points: &[Vec2],
    labels: &[[i64; 2]],
    h: f64,
    center: Vec2,
    scale: f64,
    degree: usize,
) -> Result<[Vec<f64>; 2]> {
    let exps = monomial_exponents(degree);
    if points.len() < exps.len() {
        return Err(Error::InsufficientPoints {
            needed: exps.len(),
            got: points.len(),
        });
    }
    let mut a = DMatrix::zeros(points.len(), exps.len());
    for (i, p) in points.iter().enumerate() {
        let t = [(p[0] - center[0]) / scale, (p[1] - center[1]) / scale];
        for (j, &(ea, eb)) in exps.iter().enumerate() {
            a[(i, j)] = t[0].powi(ea as i32) * t[1].powi(eb as i32);
        }
    }
    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (d, slot) in out.iter_mut().enumerate() {
        let rhs = DVector::from_iterator(points.len(), labels.iter().map(|l| h * l[d] as f64));
        *slot = solve_normal(&a, &rhs)?.iter().copied().collect();
    }
    Ok(out)
}

impl HChart {
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        rectangle: GoodRectangle,
        h: f64,
        epsilon: f64,
        basis: Basis,
        anchor: usize,
        all_points: &[Vec2],
        all_labels: &[Option<[i64; 2]>],
        degree: usize,
    ) -> Result<Self> {
        let mut points = Vec::with_capacity(all_points.len());
        let mut labels = Vec::with_capacity(all_points.len());
        let mut indices = Vec::with_capacity(all_points.len());
        for (i, (p, l)) in all_points.iter().zip(all_labels).enumerate() {
            if let Some(l) = l {
                points.push(*p);
                labels.push(*l);
                indices.push(i);
            }
        }
        let unlabeled = all_points.len() - points.len();
        let center = rectangle.value;
        let scale = rectangle.half_width;
        let coeffs = fit_points(&points, &labels, h, center, scale, degree)?;
        let mut chart = HChart {
            rectangle,
            h,
            epsilon,
            basis,
            anchor,
            points,
            labels,
            indices,
            unlabeled,
            center,
            scale,
            degree,
            coeffs,
            residuals: Vec::new(),
        };
        chart.residuals = chart
            .points
            .iter()
            .map(|&u| {
                let f = chart.eval(u);
                let x = [f[0] / h, f[1] / h];
                (x[0] - x[0].round()).hypot(x[1] - x[1].round())
            })
            .collect();
        Ok(chart)
    }

    pub fn eval(&self, u: Vec2) -> Vec2 {
        let t = [
            (u[0] - self.center[0]) / self.scale,
            (u[1] - self.center[1]) / self.scale,
        ];
        let exps = monomial_exponents(self.degree);
        let mut f = [0.0; 2];
        for (j, &(a, b)) in exps.iter().enumerate() {
            let m = t[0].powi(a as i32) * t[1].powi(b as i32);
            f[0] += self.coeffs[0][j] * m;
            f[1] += self.coeffs[1][j] * m;
        }
        f
    }

    /// Analytic Jacobian `df/du`.
    pub fn jacobian(&self, u: Vec2) -> Mat2 {
        let t = [
            (u[0] - self.center[0]) / self.scale,
            (u[1] - self.center[1]) / self.scale,
        ];
        let exps = monomial_exponents(self.degree);
        let mut j = [[0.0; 2]; 2];
        let pw = |x: f64, e: u32| if e == 0 { 1.0 } else { x.powi(e as i32) };
        for (k, &(a, b)) in exps.iter().enumerate() {
            let da = if a == 0 {
                0.0
            } else {
                a as f64 * pw(t[0], a - 1) * pw(t[1], b)
            };
            let db = if b == 0 {
                0.0
            } else {
                b as f64 * pw(t[0], a) * pw(t[1], b - 1)
            };
            for (row, c) in j.iter_mut().zip(&self.coeffs) {
                row[0] += c[k] * da / self.scale;
                row[1] += c[k] * db / self.scale;
            }
        }
        Mat2(j)
    }

    /// Affine part of the chart at the rectangle center.
    pub fn affine_fit(&self) -> (Mat2, Vec2) {
        (self.jacobian(self.center), self.eval(self.center))
    }

    pub fn labeled_fraction(&self) -> f64 {
        self.points.len() as f64 / (self.points.len() + self.unlabeled) as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn accepted(&self) -> bool {
        self.max_residual() <= RESIDUAL_THRESHOLD && self.affine_fit().0.det() != 0.0
    }

    /// Newton inverse of `f` near the rectangle, seeded at its center.
    pub fn inverse(&self, target: Vec2) -> Result<Vec2> {
        let mut u = self.center;
        for _ in 0..50 {
            let r = sub(self.eval(u), target);
            let step = self.jacobian(u).inverse().ok_or(Error::DegenerateAverage)?.apply(r);
            u = sub(u, step);
            if norm(step) <= 1e-15 * (1.0 + norm(u)) {
                return Ok(u);
            }
        }
        Err(Error::NewtonDiverged {
            iterations: 50,
            residual: dist(self.eval(u), target),
        })
    }
}

/// Basis detection, labeling and fitting on one cloud.
pub fn fit_hchart(cloud: &SpectrumCloud, degree: usize) -> Result<HChart> {
    let points = scaled_points(cloud)?;
    let basis = detect_basis_points(&points)?;
    let anchor = nearest_point(&points, cloud.rectangle.value).ok_or(Error::InsufficientPoints {
        needed: MIN_POINTS,
        got: 0,
    })?;
    let labels = label_points(&points, &basis, anchor)?;
    HChart::fit(
        cloud.rectangle,
        cloud.params.h,
        cloud.params.epsilon,
        basis,
        anchor,
        &points,
        &labels,
        degree,
    )
}

/// Newton inversion of the leading term `phi` of an action chart.
pub fn invert_leading(chart: &ActionChart, target: Vec2) -> Result<Vec2> {
    chart.invert(target).map(|(xi, _)| xi)
}

/// Integer gauge `(M, c)` with `labels = M k + c` for every point, if any.
pub fn solve_gauge(labels: &[[i64; 2]], truth: &[[i64; 2]]) -> Option<(IMat2, [i64; 2])> {
    if labels.len() != truth.len() || labels.len() < 3 {
        return None;
    }
    // Least squares in the real numbers, then exact integer verification.
    let n = labels.len();
    let mut a = DMatrix::zeros(n, 3);
    for (i, t) in truth.iter().enumerate() {
        a[(i, 0)] = t[0] as f64;
        a[(i, 1)] = t[1] as f64;
        a[(i, 2)] = 1.0;
    }
    let mut m = [[0i64; 2]; 2];
    let mut c = [0i64; 2];
    for d in 0..2 {
        let rhs = DVector::from_iterator(n, labels.iter().map(|l| l[d] as f64));
        let x = a.clone().svd(true, true).solve(&rhs, 1e-12).ok()?;
        m[d] = [x[0].round() as i64, x[1].round() as i64];
        c[d] = x[2].round() as i64;
    }
    let gm = IMat2(m);
    if !gm.is_unimodular() {
        return None;
    }
    for (l, t) in labels.iter().zip(truth) {
        let v = gm.apply(*t);
        if [v[0] + c[0], v[1] + c[1]] != *l {
            return None;
        }
    }
    Some((gm, c))
}

/// Integer gauge relating two h-charts of the same region: `g ~ M f + h c`.
pub fn align_gauge(f: &HChart, g: &HChart, at: Vec2) -> (IMat2, [i64; 2]) {
    let m = (g.jacobian(at) * f.jacobian(at).inverse().unwrap_or(Mat2::IDENTITY)).round();
    let fv = m.to_f64().apply(f.eval(at));
    let gv = g.eval(at);
    let c = [
        ((gv[0] - fv[0]) / g.h).round() as i64,
        ((gv[1] - fv[1]) / g.h).round() as i64,
    ];
    (m, c)
}

/// Gauge of `g` relative to `f` followed by the gauge of `k` relative to `g`.
pub fn compose_gauge(first: (IMat2, [i64; 2]), second: (IMat2, [i64; 2])) -> (IMat2, [i64; 2]) {
    let (m1, c1) = first;
    let (m2, c2) = second;
    let shifted = m2.apply(c1);
    (m2 * m1, [shifted[0] + c2[0], shifted[1] + c2[1]])
}

/// Gauge of the last chart of `chain` relative to the first, composed from
/// consecutive alignments at `at`.
pub fn chain_gauge(chain: &[&HChart], at: Vec2) -> (IMat2, [i64; 2]) {
    chain.windows(2).fold((IMat2::IDENTITY, [0, 0]), |acc, w| {
        compose_gauge(acc, align_gauge(w[0], w[1], at))
    })
}

/// Two-level extrapolation `2 f_fine - f_coarse` of the leading term, with
/// the coarse chart moved into the gauge of the fine one by `gauge`.
pub fn richardson_leading(coarse: &HChart, fine: &HChart, gauge: (IMat2, [i64; 2]), u: Vec2) -> Vec2 {
    let (m, c) = gauge;
    let fc = m.to_f64().apply(coarse.eval(u));
    let fc = [fc[0] + fine.h * c[0] as f64, fc[1] + fine.h * c[1] as f64];
    let ff = fine.eval(u);
    [2.0 * ff[0] - fc[0], 2.0 * ff[1] - fc[1]]
}
