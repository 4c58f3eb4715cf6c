//! Brute-force references: discretized energy minimization in one and two
//! dimensions and a direct quadrature of the Hessian seminorm.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};
use serde::{Deserialize, Serialize};

use crate::field::Field2D;
use crate::geometry::{Point2, Square};
use crate::smooth::pow_p;
use crate::{Error, Result};

const MAX_OUTER: usize = 500;
const OUTER_TOL: f64 = 1e-8;

/// A jet constraint: value and gradient at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JetConstraint {
    pub point: Point2,
    pub value: f64,
    pub grad: Point2,
}

/// Grid discretization of `min ||grad^2 F||_p` subject to point values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProblem {
    #[serde(rename = "box")]
    pub domain: Square,
    pub n: usize,
    pub p: f64,
    pub constraints: Vec<(Point2, f64)>,
    #[serde(default)]
    pub jets: Vec<JetConstraint>,
}

/// Nodal values on an `n x n` grid over `domain`, node `(i, j)` at index `j n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    #[serde(rename = "box")]
    pub domain: Square,
    pub n: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn spacing(&self) -> f64 {
        self.domain.side / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize, j: usize) -> Point2 {
        let lo = self.domain.lower();
        let h = self.spacing();
        Point2::new(lo.x + i as f64 * h, lo.y + j as f64 * h)
    }

    /// Bilinear interpolation.
    pub fn value(&self, x: Point2) -> f64 {
        stencil_value(&self.domain, self.n, x)
            .iter()
            .map(|&(k, w)| w * self.values[k])
            .sum()
    }
}

/// Bilinear interpolation weights; `(cell i, cell j, tx, ty)` with clamping.
fn cell(domain: &Square, n: usize, x: Point2) -> (usize, usize, f64, f64) {
    let h = domain.side / (n - 1) as f64;
    let lo = domain.lower();
    let fx = ((x.x - lo.x) / h).clamp(0.0, (n - 1) as f64);
    let fy = ((x.y - lo.y) / h).clamp(0.0, (n - 1) as f64);
    let i = (fx.floor() as usize).min(n - 2);
    let j = (fy.floor() as usize).min(n - 2);
    (i, j, fx - i as f64, fy - j as f64)
}

fn stencil_value(domain: &Square, n: usize, x: Point2) -> Vec<(usize, f64)> {
    let (i, j, tx, ty) = cell(domain, n, x);
    let k = j * n + i;
    vec![
        (k, (1.0 - tx) * (1.0 - ty)),
        (k + 1, tx * (1.0 - ty)),
        (k + n, (1.0 - tx) * ty),
        (k + n + 1, tx * ty),
    ]
}

fn stencil_grad(domain: &Square, n: usize, x: Point2) -> [Vec<(usize, f64)>; 2] {
    let (i, j, tx, ty) = cell(domain, n, x);
    let h = domain.side / (n - 1) as f64;
    let k = j * n + i;
    [
        vec![
            (k, -(1.0 - ty) / h),
            (k + 1, (1.0 - ty) / h),
            (k + n, -ty / h),
            (k + n + 1, ty / h),
        ],
        vec![
            (k, -(1.0 - tx) / h),
            (k + 1, -tx / h),
            (k + n, (1.0 - tx) / h),
            (k + n + 1, tx / h),
        ],
    ]
}

/// Sparse constraint rows `C u = r`.
struct Constraints {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
}

impl Constraints {
    fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, r)| r - row.iter().map(|&(k, w)| w * u[k]).sum::<f64>())
            .collect()
    }
}

/// Equality-constrained Newton step: minimizes `g.d + d.H d / 2` with `C d = r`.
/// `H + C^T C` must be positive definite.
fn constrained_step(
    h: CscMatrix<f64>,
    g: &[f64],
    cons: &Constraints,
    r: &[f64],
) -> Result<Vec<f64>> {
    let m = g.len();
    let k = cons.rows.len();
    let chol = CscCholesky::factor(&h)
        .map_err(|e| Error::internal(format!("oracle factorization failed: {e:?}")))?;
    let mut rhs = DMatrix::<f64>::zeros(m, k + 1);
    for (c, row) in cons.rows.iter().enumerate() {
        for &(i, w) in row {
            rhs[(i, c)] += w;
        }
    }
    for i in 0..m {
        rhs[(i, k)] = -g[i];
    }
    let sol = chol.solve(&rhs);
    if k == 0 {
        return Ok(sol.column(0).iter().copied().collect());
    }
    let apply = |row: &Vec<(usize, f64)>, col: usize| {
        row.iter().map(|&(i, w)| w * sol[(i, col)]).sum::<f64>()
    };
    let s = DMatrix::from_fn(k, k, |a, b| apply(&cons.rows[a], b));
    let t = DVector::from_fn(k, |a, _| apply(&cons.rows[a], k) - r[a]);
    let lambda =
        s.clone().lu().solve(&t).ok_or_else(|| {
            Error::invalid_input("constraints are linearly dependent on this grid")
        })?;
    Ok((0..m)
        .map(|i| sol[(i, k)] - (0..k).map(|c| sol[(i, c)] * lambda[c]).sum::<f64>())
        .collect())
}

/// Interior-node second-difference stencils `(Dxx, Dxy, Dyy)`.
fn hessian_stencils(n: usize, h: f64) -> Vec<[Vec<(usize, f64)>; 3]> {
    let s = 1.0 / (h * h);
    let mut out = Vec::with_capacity((n - 2) * (n - 2));
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            let k = j * n + i;
            out.push([
                vec![(k - 1, s), (k, -2.0 * s), (k + 1, s)],
                vec![
                    (k + n + 1, 0.25 * s),
                    (k + n - 1, -0.25 * s),
                    (k - n + 1, -0.25 * s),
                    (k - n - 1, 0.25 * s),
                ],
                vec![(k - n, s), (k, -2.0 * s), (k + n, s)],
            ]);
        }
    }
    out
}

fn dot(st: &[(usize, f64)], u: &[f64]) -> f64 {
    st.iter().map(|&(k, w)| w * u[k]).sum()
}

/// Minimal discrete energy `(sum_nodes |D^2 u|^p h^2)^{1/p}` and its minimizer.
pub fn min_energy_2d(prob: &GridProblem) -> Result<(f64, GridField)> {
    min_energy_2d_tol(prob, OUTER_TOL)
}

/// [`min_energy_2d`], stopping once a Newton step lowers the energy by less
/// than `tol` relative.
pub fn min_energy_2d_tol(prob: &GridProblem, tol: f64) -> Result<(f64, GridField)> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let n = prob.n;
    let p = prob.p;
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 16 nodes per side, got {n}"
        )));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "p must be at least 2, got {p}"
        )));
    }
    let dom = prob.domain;
    let inside = |x: Point2| dom.contains(x);
    if let Some((x, _)) = prob.constraints.iter().find(|(x, _)| !inside(*x)) {
        return Err(Error::invalid_input(format!(
            "constraint {x:?} outside the box"
        )));
    }
    if let Some(j) = prob.jets.iter().find(|j| !inside(j.point)) {
        return Err(Error::invalid_input(format!(
            "jet constraint {:?} outside the box",
            j.point
        )));
    }
    let m = n * n;
    let mut cons = Constraints {
        rows: Vec::new(),
        rhs: Vec::new(),
    };
    for &(x, v) in &prob.constraints {
        cons.rows.push(stencil_value(&dom, n, x));
        cons.rhs.push(v);
    }
    for j in &prob.jets {
        cons.rows.push(stencil_value(&dom, n, j.point));
        cons.rhs.push(j.value);
        let [gx, gy] = stencil_grad(&dom, n, j.point);
        cons.rows.push(gx);
        cons.rhs.push(j.grad.x);
        cons.rows.push(gy);
        cons.rhs.push(j.grad.y);
    }
    if cons.rows.len() >= m {
        return Err(Error::invalid_input("more constraints than grid nodes"));
    }
    let h = dom.side / (n - 1) as f64;
    let area = h * h;
    let stencils = hessian_stencils(n, h);
    let energy = |u: &[f64]| -> f64 {
        stencils
            .iter()
            .map(|[a, b, c]| {
                let (xa, xb, xc) = (dot(a, u), dot(b, u), dot(c, u));
                (xa * xa + 2.0 * xb * xb + xc * xc).powf(0.5 * p)
            })
            .sum::<f64>()
            * area
    };
    // Constraint scale matches the Hessian scale so that H + C^T C is balanced.
    let cscale = area / (h * h * h * h);
    let assemble = |u: Option<&[f64]>| -> (CscMatrix<f64>, Vec<f64>) {
        let mut coo = CooMatrix::new(m, m);
        let mut grad = vec![0.0; m];
        let mut weights = Vec::with_capacity(stencils.len());
        for [a, b, c] in &stencils {
            let (xa, xb, xc) = u.map_or((0.0, 0.0, 0.0), |u| (dot(a, u), dot(b, u), dot(c, u)));
            weights.push((xa, xb, xc, xa * xa + 2.0 * xb * xb + xc * xc));
        }
        let wmax = weights.iter().map(|w| w.3).fold(0.0, f64::max);
        let qfloor = if u.is_some() { 1e-12 * wmax } else { 0.0 };
        for ([a, b, c], &(xa, xb, xc, q)) in stencils.iter().zip(&weights) {
            let (w1, w2) = if u.is_none() || p == 2.0 {
                (1.0, 0.0)
            } else {
                let qq = q.max(qfloor);
                (
                    0.5 * p * qq.powf(0.5 * p - 1.0),
                    if q > 0.0 {
                        0.5 * p * (0.5 * p - 1.0) * q.powf(0.5 * p - 2.0)
                    } else {
                        0.0
                    },
                )
            };
            for (st, coef, x) in [(a, 1.0, xa), (b, 2.0, xb), (c, 1.0, xc)] {
                for &(i, wi) in st {
                    grad[i] += area * w1 * 2.0 * coef * x * wi;
                    for &(k, wk) in st {
                        coo.push(i, k, area * w1 * 2.0 * coef * wi * wk);
                    }
                }
            }
            if w2 != 0.0 {
                let mut gq: Vec<(usize, f64)> = Vec::with_capacity(10);
                for (st, coef, x) in [(a, 1.0, xa), (b, 2.0, xb), (c, 1.0, xc)] {
                    for &(i, wi) in st {
                        gq.push((i, 2.0 * coef * x * wi));
                    }
                }
                for &(i, gi) in &gq {
                    for &(k, gk) in &gq {
                        coo.push(i, k, area * w2 * gi * gk);
                    }
                }
            }
        }
        for row in &cons.rows {
            for &(i, wi) in row {
                for &(k, wk) in row {
                    coo.push(i, k, cscale * wi * wk);
                }
            }
        }
        // Tiny ridge for directions that neither the energy nor the
        // constraints see (e.g. affine functions vanishing on a line).
        for i in 0..m {
            coo.push(i, i, 1e-13 * cscale);
        }
        (CscMatrix::from(&coo), grad)
    };
    let zero = vec![0.0; m];
    let (h2, _) = assemble(None);
    let r0 = cons.residual(&zero);
    let mut u = constrained_step(h2, &zero, &cons, &r0)?;
    let mut e = energy(&u);
    // Rounding in the linear solves leaves curvature of order 1e-10 |u| / h^2;
    // below 1e-8 |u| / h^2 the data count as affine.
    let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = pow_p(1e-8 * umax / (h * h), p) * dom.side * dom.side;
    if p != 2.0 {
        let mut converged = false;
        for _ in 0..MAX_OUTER {
            if e <= floor.max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
            let (hm, g) = assemble(Some(&u));
            let r = cons.residual(&u);
            let d = constrained_step(hm, &g, &cons, &r)?;
            let mut t = 1.0;
            let mut accepted = None;
            while t > 1e-12 {
                let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + t * b).collect();
                let et = energy(&trial);
                if et <= e {
                    accepted = Some((trial, et));
                    break;
                }
                t *= 0.5;
            }
            let Some((next, en)) = accepted else {
                converged = true;
                break;
            };
            let decrease = e - en;
            u = next;
            e = en;
            if decrease <= tol * e {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ToleranceNotMet {
                what: "grid energy minimization".into(),
                estimate: e.powf(1.0 / p),
                error: f64::NAN,
            });
        }
    }
    Ok((
        e.max(0.0).powf(1.0 / p),
        GridField {
            domain: dom,
            n,
            values: u,
        },
    ))
}

/// Minimal discretized 1D trace seminorm over slopes on `n` nodes between the
/// first and last point, slopes constant outside.
pub fn min_besov_1d(points: &[f64], values: &[f64], p: f64, n: usize) -> Result<f64> {
    min_besov_1d_tol(points, values, p, n, OUTER_TOL)
}

/// [`min_besov_1d`] with relative stopping tolerance `tol`.
pub fn min_besov_1d_tol(points: &[f64], values: &[f64], p: f64, n: usize, tol: f64) -> Result<f64> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    crate::besov1d::Samples1D::new(points.to_vec(), values.to_vec(), p)?;
    if points.len() <= 1 {
        return Ok(0.0);
    }
    if n < 16 {
        return Err(Error::InvalidArgument(format!(
            "need at least 16 nodes, got {n}"
        )));
    }
    let (a, b) = (points[0], *points.last().unwrap());
    let h = (b - a) / (n - 1) as f64;
    let t: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
    // Pair weights (i, j, w): energy = sum w |s_i - s_j|^p.
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, 2.0 * h * h / pow_p(t[j] - t[i], p)));
        }
    }
    for i in 1..n {
        let wl = 2.0 * h * (t[i] - a).powf(1.0 - p) / (p - 1.0);
        pairs.push((i, 0, wl));
        let k = n - 1 - i;
        let wr = 2.0 * h * (b - t[k]).powf(1.0 - p) / (p - 1.0);
        pairs.push((k, n - 1, wr));
    }
    pairs.push((
        0,
        n - 1,
        2.0 * (b - a).powf(2.0 - p) / ((p - 1.0) * (p - 2.0)),
    ));
    // Value constraints: integrals of the piecewise linear slope between points.
    let integral_row = |x0: f64, x1: f64| -> Vec<f64> {
        let mut row = vec![0.0; n];
        for c in 0..n - 1 {
            let (lo, hi) = (t[c].max(x0), t[c + 1].min(x1));
            if hi <= lo {
                continue;
            }
            // Exact integral of the hat functions over [lo, hi].
            let s0 = (lo - t[c]) / h;
            let s1 = (hi - t[c]) / h;
            let len = hi - lo;
            let mid = 0.5 * (s0 + s1);
            row[c] += len * (1.0 - mid);
            row[c + 1] += len * mid;
        }
        row
    };
    let k = points.len() - 1;
    let c = DMatrix::from_fn(k, n, |r, col| integral_row(points[r], points[r + 1])[col]);
    let rhs = DVector::from_fn(k, |r, _| values[r + 1] - values[r]);
    let energy = |s: &DVector<f64>| {
        pairs
            .iter()
            .map(|&(i, j, w)| w * pow_p((s[i] - s[j]).abs(), p))
            .sum::<f64>()
    };
    let hess_grad = |s: Option<&DVector<f64>>| -> (DMatrix<f64>, DVector<f64>) {
        let mut hm = DMatrix::zeros(n, n);
        let mut g = DVector::zeros(n);
        let dmax = s.map_or(0.0, |s| {
            pairs
                .iter()
                .map(|&(i, j, _)| (s[i] - s[j]).abs())
                .fold(0.0, f64::max)
        });
        for &(i, j, w) in &pairs {
            let (hw, gw) = match s {
                None => (2.0 * w, 0.0),
                Some(s) => {
                    let d = s[i] - s[j];
                    let ad = d.abs().max(1e-8 * dmax);
                    (
                        w * p * (p - 1.0) * ad.powf(p - 2.0),
                        w * p * d.abs().powf(p - 1.0) * d.signum(),
                    )
                }
            };
            hm[(i, i)] += hw;
            hm[(j, j)] += hw;
            hm[(i, j)] -= hw;
            hm[(j, i)] -= hw;
            g[i] += gw;
            g[j] -= gw;
        }
        (hm, g)
    };
    let step = |hm: DMatrix<f64>, g: &DVector<f64>, r: &DVector<f64>| -> Result<DVector<f64>> {
        let scale = hm.diagonal().max().max(f64::MIN_POSITIVE);
        let ct = c.transpose();
        let hreg = &hm + &ct * &c * scale + DMatrix::identity(n, n) * (1e-14 * scale);
        let chol = hreg
            .cholesky()
            .ok_or_else(|| Error::internal("1D oracle Hessian not positive definite"))?;
        let y = chol.solve(&ct);
        let y0 = chol.solve(&(-g));
        let s = &c * &y;
        let lambda = s
            .lu()
            .solve(&(&c * &y0 - r))
            .ok_or_else(|| Error::internal("1D oracle constraint system singular"))?;
        Ok(y0 - y * lambda)
    };
    let zero = DVector::zeros(n);
    let (h2, _) = hess_grad(None);
    let mut s = step(h2, &zero, &(&rhs - &c * &zero))?;
    let mut e = energy(&s);
    for _ in 0..MAX_OUTER {
        if e <= f64::MIN_POSITIVE {
            return Ok(0.0);
        }
        let (hm, g) = hess_grad(Some(&s));
        let r = &rhs - &c * &s;
        let d = step(hm, &g, &r)?;
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-12 {
            let trial = &s + &d * t;
            let et = energy(&trial);
            if et <= e {
                next = Some((trial, et));
                break;
            }
            t *= 0.5;
        }
        let Some((ns, en)) = next else {
            return Ok(e.powf(1.0 / p));
        };
        let decrease = e - en;
        s = ns;
        e = en;
        if decrease <= tol * e {
            return Ok(e.powf(1.0 / p));
        }
    }
    Err(Error::ToleranceNotMet {
        what: "1D trace minimization".into(),
        estimate: e.powf(1.0 / p),
        error: f64::NAN,
    })
}

/// Midpoint rule for `(int |grad^2 F|^p)^{1/p}` over `n x n` cells, Frobenius norm.
pub fn sobolev_seminorm_quadrature(f: &Field2D, domain: &Square, n: usize, p: f64) -> f64 {
    let h = domain.side / n as f64;
    let lo = domain.lower();
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let x = Point2::new(lo.x + (i as f64 + 0.5) * h, lo.y + (j as f64 + 0.5) * h);
            total += pow_p(f.jet2(x).hess_norm(), p);
        }
    }
    (total * h * h).powf(1.0 / p)
}

#[cfg(test)]
mod tests;
