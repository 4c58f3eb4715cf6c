//! Planar primitives: points, squares, frames, affine jets and sparse linear functionals.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, p: Point2) -> Point2 {
        Point2::new(self * p.x, self * p.y)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Position of a square inside a dyadic tree: level and integer lower-left index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicAddr {
    pub level: u32,
    pub i: i64,
    pub j: i64,
}

impl DyadicAddr {
    pub const ROOT: DyadicAddr = DyadicAddr {
        level: 0,
        i: 0,
        j: 0,
    };

    pub fn child(self, di: i64, dj: i64) -> DyadicAddr {
        DyadicAddr {
            level: self.level + 1,
            i: 2 * self.i + di,
            j: 2 * self.j + dj,
        }
    }

    pub fn parent(self) -> Option<DyadicAddr> {
        (self.level > 0).then(|| DyadicAddr {
            level: self.level - 1,
            i: self.i.div_euclid(2),
            j: self.j.div_euclid(2),
        })
    }

    /// Closed index ranges at a finer `level`.
    fn span(self, level: u32) -> ([i64; 2], [i64; 2]) {
        let s = 1i64 << (level - self.level);
        (
            [self.i * s, (self.i + 1) * s],
            [self.j * s, (self.j + 1) * s],
        )
    }

    /// Closed squares intersect (shared edges and corners count).
    pub fn touches(self, o: DyadicAddr) -> bool {
        let l = self.level.max(o.level);
        let (ax, ay) = self.span(l);
        let (bx, by) = o.span(l);
        ax[0] <= bx[1] && bx[0] <= ax[1] && ay[0] <= by[1] && by[0] <= ay[1]
    }

    /// Whether `o` lies inside `self` (or equals it).
    pub fn contains(self, o: DyadicAddr) -> bool {
        o.level >= self.level && {
            let sh = o.level - self.level;
            (o.i >> sh) == self.i && (o.j >> sh) == self.j
        }
    }
}

/// Closed axis-parallel square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Square {
    pub center: Point2,
    pub side: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyadic_addr: Option<DyadicAddr>,
}

impl Square {
    pub fn new(center: Point2, side: f64) -> Self {
        Square {
            center,
            side,
            dyadic_addr: None,
        }
    }

    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn lower(&self) -> Point2 {
        Point2::new(self.center.x - self.half(), self.center.y - self.half())
    }

    pub fn upper(&self) -> Point2 {
        Point2::new(self.center.x + self.half(), self.center.y + self.half())
    }

    pub fn diameter(&self) -> f64 {
        self.side * std::f64::consts::SQRT_2
    }

    /// Closed membership with an absolute slack.
    pub fn contains_with(&self, x: Point2, slack: f64) -> bool {
        (x - self.center).norm_inf() <= self.half() + slack
    }

    pub fn contains(&self, x: Point2) -> bool {
        self.contains_with(x, 0.0)
    }

    pub fn intersects(&self, o: &Square) -> bool {
        if let (Some(a), Some(b)) = (self.dyadic_addr, o.dyadic_addr) {
            return a.touches(b);
        }
        let d = self.center - o.center;
        let r = self.half() + o.half();
        d.x.abs() <= r && d.y.abs() <= r
    }

    /// Euclidean distance between the closed squares.
    pub fn distance(&self, o: &Square) -> f64 {
        let d = self.center - o.center;
        let r = self.half() + o.half();
        let gx = (d.x.abs() - r).max(0.0);
        let gy = (d.y.abs() - r).max(0.0);
        gx.hypot(gy)
    }

    pub fn distance_to_point(&self, x: Point2) -> f64 {
        let d = x - self.center;
        let gx = (d.x.abs() - self.half()).max(0.0);
        let gy = (d.y.abs() - self.half()).max(0.0);
        gx.hypot(gy)
    }

    /// Closest pair of points between two squares.
    pub fn closest_points(&self, o: &Square) -> (Point2, Point2) {
        fn axis(a0: f64, a1: f64, b0: f64, b1: f64) -> (f64, f64) {
            if a1 < b0 {
                (a1, b0)
            } else if b1 < a0 {
                (a0, b1)
            } else {
                let m = 0.5 * (a0.max(b0) + a1.min(b1));
                (m, m)
            }
        }
        let (al, au, bl, bu) = (self.lower(), self.upper(), o.lower(), o.upper());
        let (px, qx) = axis(al.x, au.x, bl.x, bu.x);
        let (py, qy) = axis(al.y, au.y, bl.y, bu.y);
        (Point2::new(px, py), Point2::new(qx, qy))
    }

    /// Parameter interval of the closed segment `a + t (b - a)` inside the square.
    pub fn clip_segment(&self, a: Point2, b: Point2) -> Option<(f64, f64)> {
        let (lo, hi) = (self.lower(), self.upper());
        let mut t0: f64 = 0.0;
        let mut t1: f64 = 1.0;
        for (s, d, l, h) in [(a.x, b.x - a.x, lo.x, hi.x), (a.y, b.y - a.y, lo.y, hi.y)] {
            if d == 0.0 {
                if s < l || s > h {
                    return None;
                }
            } else {
                let (mut u, mut v) = ((l - s) / d, (h - s) / d);
                if u > v {
                    std::mem::swap(&mut u, &mut v);
                }
                t0 = t0.max(u);
                t1 = t1.min(v);
            }
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Concentric dilate by `a`; the dyadic address survives only for `a == 1`.
pub fn dilate(q: &Square, a: f64) -> Result<Square> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "dilation factor must be positive, got {a}"
        )));
    }
    Ok(Square {
        center: q.center,
        side: q.side * a,
        dyadic_addr: if a == 1.0 { q.dyadic_addr } else { None },
    })
}

/// The four dyadic quarters, ordered (lower-left, lower-right, upper-left, upper-right).
pub fn children(q: &Square) -> [Square; 4] {
    let h = 0.25 * q.side;
    let mut out = [*q; 4];
    for (k, (di, dj)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
        out[k] = Square {
            center: Point2::new(
                q.center.x + if di == 0 { -h } else { h },
                q.center.y + if dj == 0 { -h } else { h },
            ),
            side: 0.5 * q.side,
            dyadic_addr: q.dyadic_addr.map(|a| a.child(di, dj)),
        };
    }
    out
}

/// Closed squares intersect; every square neighbors itself.
pub fn are_neighbors(a: &Square, b: &Square) -> bool {
    a.intersects(b)
}

/// Orthonormal frame: world point `x` has coordinates `((x-o).e1, (x-o).e2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: Point2,
    pub e1: Point2,
    pub e2: Point2,
}

impl Frame {
    pub fn standard(origin: Point2) -> Frame {
        Frame {
            origin,
            e1: Point2::new(1.0, 0.0),
            e2: Point2::new(0.0, 1.0),
        }
    }

    pub fn from_angle(origin: Point2, angle: f64) -> Frame {
        let e1 = Point2::new(angle.cos(), angle.sin());
        Frame {
            origin,
            e1,
            e2: e1.perp(),
        }
    }

    pub fn to_frame(&self, x: Point2) -> Point2 {
        let d = x - self.origin;
        Point2::new(d.dot(self.e1), d.dot(self.e2))
    }

    pub fn to_world(&self, uv: Point2) -> Point2 {
        self.origin + uv.x * self.e1 + uv.y * self.e2
    }

    /// Rows are `e1`, `e2`: the linear part of `to_frame`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.e1.x, self.e1.y], [self.e2.x, self.e2.y]]
    }
}

/// Frame with `e1` along the chord from `a` to `b` and origin `a`.
pub fn frame_from_chord(a: Point2, b: Point2) -> Result<Frame> {
    let d = b - a;
    let n = d.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateChord);
    }
    let e1 = (1.0 / n) * d;
    Ok(Frame {
        origin: a,
        e1,
        e2: e1.perp(),
    })
}

/// Affine polynomial `value + grad . (x - base)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineJet {
    pub base: Point2,
    pub value: f64,
    pub grad: Point2,
}

impl AffineJet {
    pub fn zero(base: Point2) -> Self {
        AffineJet {
            base,
            value: 0.0,
            grad: Point2::ORIGIN,
        }
    }

    pub fn eval(&self, x: Point2) -> f64 {
        jet_eval(self, x)
    }

    /// Same affine function expressed at a different base point.
    pub fn rebased(&self, base: Point2) -> AffineJet {
        AffineJet {
            base,
            value: self.eval(base),
            grad: self.grad,
        }
    }

    pub fn component(&self, c: JetComponent) -> f64 {
        match c {
            JetComponent::Value => self.value,
            JetComponent::Gx => self.grad.x,
            JetComponent::Gy => self.grad.y,
        }
    }
}

pub fn jet_eval(j: &AffineJet, x: Point2) -> f64 {
    j.value + j.grad.dot(x - j.base)
}

/// Affine jets attached to points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct WhitneyField {
    pub jets: Vec<AffineJet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JetComponent {
    Value,
    Gx,
    Gy,
}

/// Sparse linear functional of data values and jet components:
/// `scale * (sum_i a_i f_i + sum_(j,c) b_(j,c) jet_j.c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    pub coeffs_f: BTreeMap<usize, f64>,
    pub coeffs_jet: BTreeMap<(usize, JetComponent), f64>,
    pub offset_weight: f64,
}

impl Default for LinearFunctional {
    fn default() -> Self {
        LinearFunctional {
            coeffs_f: BTreeMap::new(),
            coeffs_jet: BTreeMap::new(),
            offset_weight: 1.0,
        }
    }
}

impl LinearFunctional {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_f(&mut self, site: usize, c: f64) -> &mut Self {
        *self.coeffs_f.entry(site).or_insert(0.0) += c;
        self
    }

    pub fn add_jet(&mut self, jet: usize, comp: JetComponent, c: f64) -> &mut Self {
        *self.coeffs_jet.entry((jet, comp)).or_insert(0.0) += c;
        self
    }

    /// Adds `c * L(x)` for the affine jet with id `jet`.
    pub fn add_jet_eval(&mut self, jet: usize, base: Point2, x: Point2, c: f64) -> &mut Self {
        let d = x - base;
        self.add_jet(jet, JetComponent::Value, c);
        self.add_jet(jet, JetComponent::Gx, c * d.x);
        self.add_jet(jet, JetComponent::Gy, c * d.y);
        self
    }

    /// `self + c * other`, with the scale folded into the coefficients.
    pub fn axpy(&mut self, c: f64, other: &LinearFunctional) -> &mut Self {
        let s = self.offset_weight;
        if s != 1.0 {
            for v in self.coeffs_f.values_mut() {
                *v *= s;
            }
            for v in self.coeffs_jet.values_mut() {
                *v *= s;
            }
            self.offset_weight = 1.0;
        }
        let k = c * other.offset_weight;
        for (&i, &v) in &other.coeffs_f {
            self.add_f(i, k * v);
        }
        for (&(j, comp), &v) in &other.coeffs_jet {
            self.add_jet(j, comp, k * v);
        }
        self
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.offset_weight *= s;
        self
    }

    /// Evaluates on site values `f` and jets indexed by id.
    pub fn apply(&self, f: &[f64], jets: &[AffineJet]) -> f64 {
        let a: f64 = self.coeffs_f.iter().map(|(&i, &c)| c * f[i]).sum();
        let b: f64 = self
            .coeffs_jet
            .iter()
            .map(|(&(j, comp), &c)| c * jets[j].component(comp))
            .sum();
        self.offset_weight * (a + b)
    }

    /// Re-expresses jet `from` (based at `from_base`) as jet `to` based at `to_base`.
    pub fn rebase_jet(&self, from: usize, from_base: Point2, to: usize, to_base: Point2) -> Self {
        let mut out = LinearFunctional {
            coeffs_f: self.coeffs_f.clone(),
            coeffs_jet: BTreeMap::new(),
            offset_weight: self.offset_weight,
        };
        let d = from_base - to_base;
        for (&(j, comp), &c) in &self.coeffs_jet {
            if j != from {
                out.add_jet(j, comp, c);
                continue;
            }
            match comp {
                JetComponent::Value => {
                    out.add_jet(to, JetComponent::Value, c);
                    out.add_jet(to, JetComponent::Gx, c * d.x);
                    out.add_jet(to, JetComponent::Gy, c * d.y);
                }
                other => {
                    out.add_jet(to, other, c);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.offset_weight == 0.0
            || (self.coeffs_f.values().all(|&c| c == 0.0)
                && self.coeffs_jet.values().all(|&c| c == 0.0))
    }
}
