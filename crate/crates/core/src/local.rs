//! Local extension on a square around a flat piece of `E`: straighten the
//! points onto a line, extend in one variable, lift, pull back and pin the jet.

use crate::besov1d::{extend_tb, trace_norm_full_p, PiecewiseC11, Samples1D, TermKind};
use crate::besov_set::{flatness_threshold, set_seminorm};
use crate::field::{trace_extend_t1, Field2D, Jet2, ScalarField};
use crate::geometry::{frame_from_chord, AffineJet, Frame, LinearFunctional, Point2, Square};
use crate::smooth::pow_p;
use crate::{Error, Result};

/// Fixed-point tolerance of the inverse map, in unit coordinates.
const INVERSE_TOL: f64 = 1e-12;
const INVERSE_MAX_ITER: usize = 100;

/// Largest accepted gradient of the lifted graph function.
const CONTRACTION_LIMIT: f64 = 0.5;

/// Coordinates in which a flat point set lies on the `u`-axis.
///
/// Unit coordinates `y = (x - c_Q) / delta_Q` are rotated into `(u, v)` by
/// `frame`. The explicit map `(u, v) -> (u, v + phi_hat(u, v))` sends the axis
/// onto the graph of `phi` through the points; its inverse `(u, w) -> (u, V)`
/// straightens them.
#[derive(Debug, Clone)]
pub struct Straightening {
    pub square: Square,
    pub frame: Frame,
    pub phi: PiecewiseC11,
    pub phi_hat: Field2D,
    /// Largest `|grad phi_hat|` seen on the probe grid.
    pub max_slope: f64,
}

impl Straightening {
    fn to_unit(&self, x: Point2) -> Point2 {
        (1.0 / self.square.side) * (x - self.square.center)
    }

    fn unit_to_world(&self, y: Point2) -> Point2 {
        self.square.center + self.square.side * y
    }

    /// Frame coordinates `(u, w)` of a world point.
    pub fn frame_coords(&self, x: Point2) -> Point2 {
        self.frame.to_frame(self.to_unit(x))
    }

    /// `(u, v + phi_hat(u, v))` for frame coordinates `(u, v)`.
    pub fn lift_map(&self, uv: Point2) -> Point2 {
        Point2::new(uv.x, uv.y + self.phi_hat.value(uv))
    }

    /// Solve `w = V + phi_hat(u, V)` by fixed-point iteration.
    pub fn solve_v(&self, u: f64, w: f64) -> f64 {
        solve_v(&self.phi_hat, u, w)
    }

    /// Straightened coordinates `(u, V)` of a world point.
    pub fn straighten(&self, x: Point2) -> Point2 {
        let uw = self.frame_coords(x);
        Point2::new(uw.x, self.solve_v(uw.x, uw.y))
    }

    /// World point with straightened coordinates `(u, v)`.
    pub fn unstraighten(&self, uv: Point2) -> Point2 {
        self.unit_to_world(self.frame.to_world(self.lift_map(uv)))
    }

    /// `x -> g(S(x))` for a field `g` in straightened coordinates.
    pub fn pull_back(&self, g: Field2D) -> Field2D {
        let inner = Field2D::new(Straightened {
            g,
            phi_hat: self.phi_hat.clone(),
        });
        let s = 1.0 / self.square.side;
        inner
            .warp(self.frame.origin, self.frame.matrix())
            .warp(self.square.center, [[s, 0.0], [0.0, s]])
    }
}

fn solve_v(phi_hat: &Field2D, u: f64, w: f64) -> f64 {
    let mut v = w;
    for _ in 0..INVERSE_MAX_ITER {
        let next = w - phi_hat.value(Point2::new(u, v));
        let done = (next - v).abs() <= INVERSE_TOL;
        v = next;
        if done {
            break;
        }
    }
    v
}

/// `(u, w) -> g(u, V(u, w))` with the chain rule through the implicit `V`.
struct Straightened {
    g: Field2D,
    phi_hat: Field2D,
}

impl ScalarField for Straightened {
    fn jet2(&self, x: Point2) -> Jet2 {
        let v = solve_v(&self.phi_hat, x.x, x.y);
        let p = self.phi_hat.jet2(Point2::new(x.x, v));
        let (pu, pv) = (p.grad[0], p.grad[1]);
        let (puu, puv, pvv) = (p.hess[0][0], p.hess[0][1], p.hess[1][1]);
        let d = 1.0 + pv;
        let vu = -pu / d;
        let vw = 1.0 / d;
        let vuu = -(puu + 2.0 * puv * vu + pvv * vu * vu) / d;
        let vuw = -(puv * vw + pvv * vu * vw) / d;
        let vww = -pvv * vw * vw / d;
        let g = self.g.jet2(Point2::new(x.x, v));
        let (gu, gv) = (g.grad[0], g.grad[1]);
        let (guu, guv, gvv) = (g.hess[0][0], g.hess[0][1], g.hess[1][1]);
        let fuw = guv * vw + gvv * vu * vw + gv * vuw;
        Jet2 {
            value: g.value,
            grad: [gu + gv * vu, gv * vw],
            hess: [
                [guu + 2.0 * guv * vu + gvv * vu * vu + gv * vuu, fuw],
                [fuw, gvv * vw * vw + gv * vww],
            ],
        }
    }

    fn value(&self, x: Point2) -> f64 {
        let v = solve_v(&self.phi_hat, x.x, x.y);
        self.g.value(Point2::new(x.x, v))
    }
}

/// Straightening of `e0` inside `q`.
pub fn straighten(q: &Square, e0: &[Point2], p: f64, angles: usize) -> Result<Straightening> {
    let unit: Vec<Point2> = e0
        .iter()
        .map(|x| (1.0 / q.side) * (*x - q.center))
        .collect();
    let identity = |frame: Frame| Straightening {
        square: *q,
        frame,
        phi: PiecewiseC11::zero(),
        phi_hat: Field2D::zero(),
        max_slope: 0.0,
    };
    if unit.len() <= 1 {
        return Ok(identity(Frame::standard(
            unit.first().copied().unwrap_or(Point2::ORIGIN),
        )));
    }
    let best = set_seminorm(&unit, p, angles)?;
    if !best.graph_ok {
        return Err(Error::Config(
            "points do not form a graph over any direction; use a smaller c4".into(),
        ));
    }
    let us: Vec<f64> = unit.iter().map(|y| best.frame.to_frame(*y).x).collect();
    let (lo, hi) = (0..us.len()).fold((0, 0), |(lo, hi), k| {
        (
            if us[k] < us[lo] { k } else { lo },
            if us[k] > us[hi] { k } else { hi },
        )
    });
    let frame = frame_from_chord(unit[lo], unit[hi])?;
    let mut uv: Vec<Point2> = unit.iter().map(|y| frame.to_frame(*y)).collect();
    uv.sort_by(|a, b| a.x.total_cmp(&b.x));
    if uv.windows(2).any(|w| w[1].x <= w[0].x) {
        return Err(Error::Config(
            "straightening frame does not separate the points; use a smaller c4".into(),
        ));
    }
    if uv.iter().all(|a| a.y == 0.0) {
        return Ok(identity(frame));
    }
    let samples = Samples1D::new(
        uv.iter().map(|a| a.x).collect(),
        uv.iter().map(|a| a.y).collect(),
        p,
    )?;
    let phi = extend_tb(&samples)?;
    let phi_hat = trace_extend_t1(phi.clone());
    let mut max_slope: f64 = 0.0;
    for i in 0..=24 {
        for j in 0..=24 {
            let x = Point2::new(-1.5 + i as f64 / 8.0, -1.5 + j as f64 / 8.0);
            max_slope = max_slope.max(phi_hat.gradient(x).norm());
        }
    }
    for a in &uv {
        max_slope = max_slope.max(phi_hat.gradient(Point2::new(a.x, 0.0)).norm());
    }
    if max_slope > CONTRACTION_LIMIT {
        return Err(Error::Config(format!(
            "straightening slope {max_slope:.3} exceeds {CONTRACTION_LIMIT}; use a smaller c4"
        )));
    }
    Ok(Straightening {
        square: *q,
        frame,
        phi,
        phi_hat,
        max_slope,
    })
}

/// Output of the local extension operator.
#[derive(Debug, Clone)]
pub struct LocalSolution {
    pub field: Field2D,
    /// Functionals over the local values (site `i` is `e0[i]`) and the jet `L0`
    /// (jet id 0, components at `x0`).
    pub functionals: Vec<LinearFunctional>,
    pub mhat_p: f64,
    pub straightening: Option<Straightening>,
}

/// Sum of `|lambda|^p` for functionals applied to local data.
pub fn functional_sum(fs: &[LinearFunctional], f: &[f64], jets: &[AffineJet], p: f64) -> f64 {
    fs.iter().map(|l| pow_p(l.apply(f, jets).abs(), p)).sum()
}

/// The local extension operator for fixed geometry `(q, e0, x0)`: everything
/// that does not depend on the data.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub square: Square,
    pub points: Vec<Point2>,
    pub x0: Point2,
    pub p: f64,
    pub straightening: Option<Straightening>,
    /// `(straightened abscissa, index into points)` in increasing order.
    order: Vec<(f64, usize)>,
    /// Functionals over the local values and jet 0 based at `x0`.
    pub functionals: Vec<LinearFunctional>,
    /// Term kind behind each functional.
    pub kinds: Vec<TermKind>,
}

impl LocalOperator {
    pub fn new(q: &Square, e0: &[Point2], x0: Point2, p: f64, angles: usize) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::InvalidArgument(format!("p must exceed 2, got {p}")));
        }
        let inner = Square::new(q.center, 0.9 * q.side);
        if let Some(x) = e0.iter().find(|x| !inner.contains(**x)) {
            return Err(Error::invalid_input(format!(
                "point {x:?} outside 0.9 of the local square"
            )));
        }
        let gap = e0.iter().map(|e| e.dist(x0)).fold(f64::INFINITY, f64::min);
        if gap < q.side / 100.0 {
            return Err(Error::invalid_input(format!(
                "jet point at distance {gap} from the data, below side/100"
            )));
        }
        let mut op = LocalOperator {
            square: *q,
            points: e0.to_vec(),
            x0,
            p,
            straightening: None,
            order: Vec::new(),
            functionals: Vec::new(),
            kinds: Vec::new(),
        };
        if e0.is_empty() {
            return Ok(op);
        }
        let st = straighten(q, e0, p, angles)?;
        // Straightened abscissae through the same map used for evaluation.
        op.order = e0
            .iter()
            .enumerate()
            .map(|(i, x)| (st.straighten(*x).x, i))
            .collect();
        op.order.sort_by(|a, b| a.0.total_cmp(&b.0));
        op.straightening = Some(st);
        let norm = trace_norm_full_p(&op.samples(vec![0.0; e0.len()])?)?;
        let scale = q.side.powf((2.0 - 2.0 * p) / p);
        for t in &norm.terms {
            let w = t.weight.powf(1.0 / p) * scale * t.functional.offset_weight;
            let mut out = LinearFunctional::new();
            for (&k, &c) in &t.functional.coeffs_f {
                let site = op.order[k].1;
                out.add_f(site, w * c);
                out.add_jet_eval(0, x0, e0[site], -w * c);
            }
            if !out.is_zero() {
                op.functionals.push(out);
                op.kinds.push(t.kind);
            }
        }
        Ok(op)
    }

    fn samples(&self, shifted: Vec<f64>) -> Result<Samples1D> {
        Samples1D::new(self.order.iter().map(|o| o.0).collect(), shifted, self.p)
    }

    /// `sum |lambda_i(f0, l0)|^p`.
    pub fn mhat_p(&self, f0: &[f64], l0: &AffineJet) -> f64 {
        functional_sum(&self.functionals, f0, &[l0.rebased(self.x0)], self.p)
    }

    /// Extension of `f0` with jet `l0` at `x0`.
    pub fn field(&self, f0: &[f64], l0: &AffineJet) -> Result<Field2D> {
        if f0.len() != self.points.len() {
            return Err(Error::invalid_input(format!(
                "{} points but {} values",
                self.points.len(),
                f0.len()
            )));
        }
        let Some(st) = &self.straightening else {
            return Ok(Field2D::affine(*l0));
        };
        let shifted: Vec<f64> = self
            .order
            .iter()
            .map(|&(_, i)| f0[i] - l0.eval(self.points[i]))
            .collect();
        if shifted.iter().all(|v| *v == 0.0) {
            return Ok(Field2D::affine(*l0));
        }
        let g = extend_tb(&self.samples(shifted)?)?;
        let f2 = st.pull_back(trace_extend_t1(g));
        let j = f2.jet(self.x0);
        let theta =
            Field2D::radial_bump(self.x0, self.square.side / 200.0, self.square.side / 150.0);
        Ok(f2
            .sub(&theta.mul(&Field2D::affine(j)))
            .add(&Field2D::affine(*l0)))
    }

    pub fn solve(&self, f0: &[f64], l0: &AffineJet) -> Result<LocalSolution> {
        let l0 = l0.rebased(self.x0);
        Ok(LocalSolution {
            field: self.field(f0, &l0)?,
            functionals: self.functionals.clone(),
            mhat_p: self.mhat_p(f0, &l0),
            straightening: self.straightening.clone(),
        })
    }
}

/// Local extension `F` on `q` with `F = f0` on `e0` and jet `l0` at `x0`.
/// The returned functionals take jet 0 based at `x0`.
pub fn local_extend(
    q: &Square,
    e0: &[Point2],
    x0: Point2,
    f0: &[f64],
    l0: &AffineJet,
    p: f64,
    angles: usize,
) -> Result<LocalSolution> {
    if e0.len() != f0.len() {
        return Err(Error::invalid_input(format!(
            "{} points but {} values",
            e0.len(),
            f0.len()
        )));
    }
    LocalOperator::new(q, e0, x0, p, angles)?.solve(f0, l0)
}

/// Upper bound `|L(x0)|^p delta^{2-2p} + |grad L|^p delta^{2-p}` for the cost of
/// a zero-data extension with jet `L`, and whether the set is non-flat enough
/// (seminorm at least `c delta^{2/p-1}`) for it to be two-sided.
pub fn hat_m_zero_jet_bound(
    q: &Square,
    e0: &[Point2],
    x0: Point2,
    l: &AffineJet,
    p: f64,
    c: f64,
    angles: usize,
) -> Result<(f64, bool)> {
    let d = q.side;
    let upper = pow_p(l.eval(x0).abs(), p) * d.powf(2.0 - 2.0 * p)
        + pow_p(l.grad.norm(), p) * d.powf(2.0 - p);
    let s = set_seminorm(e0, p, angles)?;
    Ok((upper, s.value >= flatness_threshold(c, d, p)))
}
