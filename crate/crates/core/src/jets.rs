//! Keystone jet selection: closed-form `l^p` elimination of affine parameters
//! and the constant-path Whitney field.

use serde::{Deserialize, Serialize};

use crate::besov_set::{best_chord_pair, ChordPair};
use crate::cz::CzDecomposition;
use crate::geometry::{AffineJet, JetComponent, LinearFunctional, Point2, Square, WhitneyField};
use crate::local::LocalOperator;
use crate::smooth::pow_p;
use crate::{Config, Error, Result};

/// Weighted average `sum (z_j / b_j) |b_j|^p / sum |b_j|^p` over `b_j != 0`.
pub fn lp_eliminate(z: &[f64], beta: &[f64], p: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (&zj, &bj) in z.iter().zip(beta) {
        if bj != 0.0 {
            let w = pow_p(bj.abs(), p);
            num += zj / bj * w;
            den += w;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Affine maps `lambda_i = z_i - beta_i . (a1, a2, b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElimProblem {
    pub z: Vec<f64>,
    pub beta: Vec<[f64; 3]>,
}

impl ElimProblem {
    pub fn objective(&self, x: [f64; 3], p: f64) -> f64 {
        self.z
            .iter()
            .zip(&self.beta)
            .map(|(z, b)| pow_p((z - b[0] * x[0] - b[1] * x[1] - b[2] * x[2]).abs(), p))
            .sum()
    }
}

type ElimStep = (usize, Vec<f64>, [f64; 3], Vec<f64>);

/// Linear map `G` (3 x n) with `x = G z` from one nested elimination pass.
///
/// `b` is eliminated first as a function of `(a1, a2)` via [`lp_eliminate`] and
/// substituted back into the functionals, then `a2` as a function of `a1`, then
/// `a1`. Each step loses at most a factor 2 (in `p`-th root) against the exact
/// minimizer in its coordinate, and the weights depend on `beta` only, so the
/// result is linear in `z`. At `p = 2` every step is exact and `x` is the least
/// squares solution. A coordinate whose column has vanished (relative to its
/// original size) is set to zero.
pub fn elimination_matrix(beta: &[[f64; 3]], p: f64) -> Vec<[f64; 3]> {
    let n = beta.len();
    let mut b = beta.to_vec();
    let scale: [f64; 3] =
        std::array::from_fn(|k| beta.iter().fold(0.0f64, |a, r| a.max(r[k].abs())));
    // Per step: coordinate k, row g with c0 = g . z, coefficients c on the
    // coordinates still free, and the eliminated column.
    let mut steps: Vec<ElimStep> = Vec::with_capacity(3);
    for k in [2usize, 1, 0] {
        let col: Vec<f64> = b.iter().map(|r| r[k]).collect();
        let cmax = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if cmax <= 1e-12 * scale[k] || cmax == 0.0 {
            steps.push((k, vec![0.0; n], [0.0; 3], vec![0.0; n]));
            continue;
        }
        let w: Vec<f64> = col.iter().map(|&v| pow_p(v.abs(), p)).collect();
        let wt: f64 = w.iter().sum();
        let s: Vec<f64> = col
            .iter()
            .zip(&w)
            .map(|(&v, &wi)| if v != 0.0 { wi / v / wt } else { 0.0 })
            .collect();
        // The data seen at this step are z minus earlier substitutions.
        let mut g = s.clone();
        for (_, gm, _, colm) in &steps {
            let a: f64 = s.iter().zip(colm).map(|(x, y)| x * y).sum();
            for (gi, gmi) in g.iter_mut().zip(gm) {
                *gi -= a * gmi;
            }
        }
        let mut c = [0.0; 3];
        for (j, cj) in c.iter_mut().enumerate() {
            if j != k {
                *cj = s.iter().zip(&b).map(|(si, r)| si * r[j]).sum();
            }
        }
        for r in b.iter_mut() {
            let bk = r[k];
            for j in 0..3 {
                if j != k {
                    r[j] -= bk * c[j];
                }
            }
            r[k] = 0.0;
        }
        steps.push((k, g, c, col));
    }
    // Back substitution: x_k = g . z - sum_j c_j x_j over later coordinates.
    let mut rows = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut done = [false; 3];
    for (k, g, c, _) in steps.iter().rev() {
        let mut row = g.clone();
        for j in 0..3 {
            if done[j] && c[j] != 0.0 {
                for (ri, xj) in row.iter_mut().zip(&rows[j]) {
                    *ri -= c[j] * xj;
                }
            }
        }
        rows[*k] = row;
        done[*k] = true;
    }
    (0..n)
        .map(|i| [rows[0][i], rows[1][i], rows[2][i]])
        .collect()
}

/// Minimizer surrogate `(a1, a2, b)` for `sum |lambda_i|^p`; see
/// [`elimination_matrix`].
pub fn minimize_affine_lp(problem: &ElimProblem, p: f64) -> [f64; 3] {
    let g = elimination_matrix(&problem.beta, p);
    let mut x = [0.0; 3];
    for (gi, zi) in g.iter().zip(&problem.z) {
        for k in 0..3 {
            x[k] += gi[k] * zi;
        }
    }
    x
}

/// Cyclic coordinate elimination (`b`, `a2`, `a1` in turn, repeated), stopped
/// when the objective changes by less than `tol` relative or after
/// `max_cycles`. Its limit is a fixed point of the weighted averages, not a
/// minimizer, and can be far from optimal.
pub fn cyclic_eliminate(problem: &ElimProblem, p: f64, tol: f64, max_cycles: usize) -> [f64; 3] {
    let n = problem.z.len();
    let mut x = [0.0; 3];
    let mut prev = problem.objective(x, p);
    let mut resid = vec![0.0; n];
    let mut col = vec![0.0; n];
    for _ in 0..max_cycles {
        for k in [2, 1, 0] {
            for i in 0..n {
                let b = problem.beta[i];
                let others: f64 = (0..3).filter(|&j| j != k).map(|j| b[j] * x[j]).sum();
                resid[i] = problem.z[i] - others;
                col[i] = b[k];
            }
            x[k] = lp_eliminate(&resid, &col, p);
        }
        let obj = problem.objective(x, p);
        if (prev - obj).abs() <= tol * prev.max(f64::MIN_POSITIVE) {
            break;
        }
        prev = obj;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeystoneCase {
    /// Two well-spread chords determine the gradient.
    Chords,
    /// The jet minimizes the local extension cost.
    Flat,
}

/// The selected keystone jet as linear functionals of the data `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeystoneRule {
    pub case: KeystoneCase,
    pub base: Point2,
    pub value: LinearFunctional,
    pub gx: LinearFunctional,
    pub gy: LinearFunctional,
    pub chords: Option<ChordPair>,
}

impl KeystoneRule {
    pub fn apply(&self, f: &[f64]) -> AffineJet {
        AffineJet {
            base: self.base,
            value: self.value.apply(f, &[]),
            grad: Point2::new(self.gx.apply(f, &[]), self.gy.apply(f, &[])),
        }
    }

    pub fn component(&self, c: JetComponent) -> &LinearFunctional {
        match c {
            JetComponent::Value => &self.value,
            JetComponent::Gx => &self.gx,
            JetComponent::Gy => &self.gy,
        }
    }
}

/// Rule for the jet at keystone `mu`.
pub fn keystone_rule(mu: usize, decomp: &CzDecomposition, cfg: &Config) -> Result<KeystoneRule> {
    let base = *decomp
        .x_sharp
        .get(mu)
        .ok_or_else(|| Error::invalid_input(format!("keystone index {mu} out of range")))?;
    let sites = &decomp.e_sharp[mu];
    if sites.is_empty() {
        return Err(Error::internal(format!("keystone {mu} has no data in 9Q#")));
    }
    let pts: Vec<Point2> = sites.iter().map(|&i| decomp.points[i]).collect();
    if let Some(pair) = best_chord_pair(&pts).filter(|c| c.spread > cfg.c2) {
        return Ok(chord_rule(base, sites, &pts, pair));
    }
    let q = decomp.leaves[decomp.keystones[mu]];
    flat_rule(
        &Square::new(q.center, 10.0 * q.side),
        base,
        sites,
        &pts,
        cfg,
    )
}

/// Gradient from the two chord slopes, value matched at the first chord end.
fn chord_rule(base: Point2, sites: &[usize], pts: &[Point2], pair: ChordPair) -> KeystoneRule {
    let chord = |(i, j): (usize, usize)| {
        let d = pts[j] - pts[i];
        let len = d.norm();
        let mut m = LinearFunctional::new();
        m.add_f(sites[j], 1.0 / len).add_f(sites[i], -1.0 / len);
        ((1.0 / len) * d, m)
    };
    let (v1, m1) = chord(pair.first);
    let (v2, m2) = chord(pair.second);
    let det = v1.x * v2.y - v1.y * v2.x;
    // Rows v1, v2; inverse [[v2.y, -v1.y], [-v2.x, v1.x]] / det.
    let mut gx = LinearFunctional::new();
    gx.axpy(v2.y / det, &m1).axpy(-v1.y / det, &m2);
    let mut gy = LinearFunctional::new();
    gy.axpy(-v2.x / det, &m1).axpy(v1.x / det, &m2);
    let x1 = pts[pair.first.0];
    let d = base - x1;
    let mut value = LinearFunctional::new();
    value
        .add_f(sites[pair.first.0], 1.0)
        .axpy(d.x, &gx)
        .axpy(d.y, &gy);
    KeystoneRule {
        case: KeystoneCase::Chords,
        base,
        value,
        gx,
        gy,
        chords: Some(pair),
    }
}

fn flat_rule(
    q: &Square,
    base: Point2,
    sites: &[usize],
    pts: &[Point2],
    cfg: &Config,
) -> Result<KeystoneRule> {
    let op = LocalOperator::new(q, pts, base, cfg.p, cfg.angle_count)?;
    let [value, gx, gy] = minimizing_jet(&op, sites);
    Ok(KeystoneRule {
        case: KeystoneCase::Flat,
        base,
        value,
        gx,
        gy,
        chords: None,
    })
}

/// Jet `(value, gx, gy)` at `op.x0`, as functionals of the global data, that
/// minimizes the local cost up to the elimination constant. Local site `k`
/// is global site `sites[k]`.
pub fn minimizing_jet(op: &LocalOperator, sites: &[usize]) -> [LinearFunctional; 3] {
    let beta: Vec<[f64; 3]> = op
        .functionals
        .iter()
        .map(|l| {
            let c = |comp| -l.offset_weight * l.coeffs_jet.get(&(0, comp)).copied().unwrap_or(0.0);
            [
                c(JetComponent::Gx),
                c(JetComponent::Gy),
                c(JetComponent::Value),
            ]
        })
        .collect();
    let g = elimination_matrix(&beta, op.p);
    let (mut value, mut gx, mut gy) = (
        LinearFunctional::new(),
        LinearFunctional::new(),
        LinearFunctional::new(),
    );
    for (l, gi) in op.functionals.iter().zip(&g) {
        let mut z = LinearFunctional::new();
        for (&k, &c) in &l.coeffs_f {
            z.add_f(sites[k], c * l.offset_weight);
        }
        gx.axpy(gi[0], &z);
        gy.axpy(gi[1], &z);
        value.axpy(gi[2], &z);
    }
    [value, gx, gy]
}

/// Jet at keystone `mu` for data `f`.
pub fn keystone_jet(
    mu: usize,
    decomp: &CzDecomposition,
    f: &[f64],
    cfg: &Config,
) -> Result<AffineJet> {
    if f.len() != decomp.points.len() {
        return Err(Error::invalid_input(format!(
            "{} values for {} points",
            f.len(),
            decomp.points.len()
        )));
    }
    Ok(keystone_rule(mu, decomp, cfg)?.apply(f))
}

/// Jets on the leaf representatives: each leaf carries the polynomial of
/// its keystone, re-anchored at `x_nu`.
pub fn constant_path_field(lsharp: &[AffineJet], decomp: &CzDecomposition) -> Result<WhitneyField> {
    let jets = decomp
        .mu_of_nu
        .iter()
        .zip(&decomp.x_nu)
        .map(|(&mu, &x)| {
            lsharp
                .get(mu)
                .map(|j| j.rebased(x))
                .ok_or_else(|| Error::invalid_input(format!("missing jet for keystone {mu}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WhitneyField { jets })
}
