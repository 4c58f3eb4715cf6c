//! Evaluable planar fields with exact first and second derivatives, built by
//! composition.

use std::fmt;
use std::sync::Arc;

use crate::besov1d::PiecewiseC11;
use crate::geometry::{AffineJet, Point2};
use crate::smooth::{gauss_legendre, plateau};

/// Value, gradient and Hessian at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [[f64; 2]; 2],
}

impl Jet2 {
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            ..Jet2::default()
        }
    }

    pub fn scaled(self, s: f64) -> Self {
        let h = self.hess;
        Jet2 {
            value: s * self.value,
            grad: [s * self.grad[0], s * self.grad[1]],
            hess: [[s * h[0][0], s * h[0][1]], [s * h[1][0], s * h[1][1]]],
        }
    }

    pub fn axpy(&mut self, s: f64, o: &Jet2) {
        self.value += s * o.value;
        for i in 0..2 {
            self.grad[i] += s * o.grad[i];
            for j in 0..2 {
                self.hess[i][j] += s * o.hess[i][j];
            }
        }
    }

    /// Product rule.
    pub fn mul(&self, o: &Jet2) -> Jet2 {
        let mut hess = [[0.0; 2]; 2];
        for (i, row) in hess.iter_mut().enumerate() {
            for (j, h) in row.iter_mut().enumerate() {
                *h = self.hess[i][j] * o.value
                    + o.hess[i][j] * self.value
                    + self.grad[i] * o.grad[j]
                    + self.grad[j] * o.grad[i];
            }
        }
        Jet2 {
            value: self.value * o.value,
            grad: [
                self.grad[0] * o.value + o.grad[0] * self.value,
                self.grad[1] * o.value + o.grad[1] * self.value,
            ],
            hess,
        }
    }

    /// Frobenius norm of the Hessian.
    pub fn hess_norm(&self) -> f64 {
        let h = self.hess;
        (h[0][0] * h[0][0] + h[0][1] * h[0][1] + h[1][0] * h[1][0] + h[1][1] * h[1][1]).sqrt()
    }

    pub fn affine_at(&self, x: Point2) -> AffineJet {
        AffineJet {
            base: x,
            value: self.value,
            grad: Point2::new(self.grad[0], self.grad[1]),
        }
    }
}

/// A scalar field on the plane. Implementations must be pure.
pub trait ScalarField: Send + Sync {
    fn jet2(&self, x: Point2) -> Jet2;

    fn value(&self, x: Point2) -> f64 {
        self.jet2(x).value
    }
}

/// Shared handle to a composed field.
#[derive(Clone)]
pub struct Field2D(Arc<dyn ScalarField>);

impl fmt::Debug for Field2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Field2D")
    }
}

impl Field2D {
    pub fn new(f: impl ScalarField + 'static) -> Self {
        Field2D(Arc::new(f))
    }

    pub fn value(&self, x: Point2) -> f64 {
        self.0.value(x)
    }

    pub fn jet2(&self, x: Point2) -> Jet2 {
        self.0.jet2(x)
    }

    pub fn gradient(&self, x: Point2) -> Point2 {
        let g = self.0.jet2(x).grad;
        Point2::new(g[0], g[1])
    }

    pub fn hessian(&self, x: Point2) -> [[f64; 2]; 2] {
        self.0.jet2(x).hess
    }

    /// First-order Taylor polynomial at `x`.
    pub fn jet(&self, x: Point2) -> AffineJet {
        self.0.jet2(x).affine_at(x)
    }

    pub fn zero() -> Self {
        Field2D::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Field2D::affine(AffineJet {
            base: Point2::ORIGIN,
            value: c,
            grad: Point2::ORIGIN,
        })
    }

    pub fn affine(j: AffineJet) -> Self {
        Field2D::new(Affine(j))
    }

    pub fn linear_combination(terms: Vec<(f64, Field2D)>) -> Self {
        Field2D::new(Combination(terms))
    }

    pub fn scale(&self, s: f64) -> Self {
        Field2D::linear_combination(vec![(s, self.clone())])
    }

    pub fn add(&self, o: &Field2D) -> Self {
        Field2D::linear_combination(vec![(1.0, self.clone()), (1.0, o.clone())])
    }

    pub fn sub(&self, o: &Field2D) -> Self {
        Field2D::linear_combination(vec![(1.0, self.clone()), (-1.0, o.clone())])
    }

    pub fn mul(&self, o: &Field2D) -> Self {
        Field2D::new(Product(self.clone(), o.clone()))
    }

    /// `x -> self(A (x - origin))`.
    pub fn warp(&self, origin: Point2, a: [[f64; 2]; 2]) -> Self {
        Field2D::new(Warp {
            inner: self.clone(),
            origin,
            a,
        })
    }

    /// Radial C^2 bump: 1 on the disk of radius `inner`, 0 outside radius `outer`.
    pub fn radial_bump(center: Point2, inner: f64, outer: f64) -> Self {
        Field2D::new(RadialBump {
            center,
            inner,
            outer,
        })
    }

    /// Tensor C^2 bump: 1 where `|x - c|_inf <= inner`, 0 where it is `>= outer`.
    pub fn box_bump(center: Point2, inner: f64, outer: f64) -> Self {
        Field2D::new(BoxBump {
            center,
            inner,
            outer,
        })
    }
}

struct Affine(AffineJet);

impl ScalarField for Affine {
    fn jet2(&self, x: Point2) -> Jet2 {
        Jet2 {
            value: self.0.eval(x),
            grad: [self.0.grad.x, self.0.grad.y],
            hess: [[0.0; 2]; 2],
        }
    }
}

struct Combination(Vec<(f64, Field2D)>);

impl ScalarField for Combination {
    fn jet2(&self, x: Point2) -> Jet2 {
        let mut out = Jet2::default();
        for (c, f) in &self.0 {
            out.axpy(*c, &f.jet2(x));
        }
        out
    }

    fn value(&self, x: Point2) -> f64 {
        self.0.iter().map(|(c, f)| c * f.value(x)).sum()
    }
}

struct Product(Field2D, Field2D);

impl ScalarField for Product {
    fn jet2(&self, x: Point2) -> Jet2 {
        self.0.jet2(x).mul(&self.1.jet2(x))
    }

    fn value(&self, x: Point2) -> f64 {
        self.0.value(x) * self.1.value(x)
    }
}

struct Warp {
    inner: Field2D,
    origin: Point2,
    a: [[f64; 2]; 2],
}

impl Warp {
    fn map(&self, x: Point2) -> Point2 {
        let d = x - self.origin;
        let a = self.a;
        Point2::new(a[0][0] * d.x + a[0][1] * d.y, a[1][0] * d.x + a[1][1] * d.y)
    }
}

impl ScalarField for Warp {
    fn jet2(&self, x: Point2) -> Jet2 {
        let j = self.inner.jet2(self.map(x));
        let a = self.a;
        let mut out = Jet2 {
            value: j.value,
            ..Jet2::default()
        };
        for i in 0..2 {
            out.grad[i] = a[0][i] * j.grad[0] + a[1][i] * j.grad[1];
            for k in 0..2 {
                let mut s = 0.0;
                for r in 0..2 {
                    for c in 0..2 {
                        s += a[r][i] * j.hess[r][c] * a[c][k];
                    }
                }
                out.hess[i][k] = s;
            }
        }
        out
    }

    fn value(&self, x: Point2) -> f64 {
        self.inner.value(self.map(x))
    }
}

struct RadialBump {
    center: Point2,
    inner: f64,
    outer: f64,
}

impl ScalarField for RadialBump {
    fn jet2(&self, x: Point2) -> Jet2 {
        let d = x - self.center;
        let r = d.norm();
        let (v, d1, d2) = plateau(r, self.inner, self.outer);
        if r <= self.inner || r >= self.outer {
            return Jet2::constant(v);
        }
        let (nx, ny) = (d.x / r, d.y / r);
        let t = d1 / r;
        Jet2 {
            value: v,
            grad: [d1 * nx, d1 * ny],
            hess: [
                [d2 * nx * nx + t * (1.0 - nx * nx), (d2 - t) * nx * ny],
                [(d2 - t) * nx * ny, d2 * ny * ny + t * (1.0 - ny * ny)],
            ],
        }
    }
}

struct BoxBump {
    center: Point2,
    inner: f64,
    outer: f64,
}

impl ScalarField for BoxBump {
    fn jet2(&self, x: Point2) -> Jet2 {
        let d = x - self.center;
        let (a, a1, a2) = plateau(d.x, self.inner, self.outer);
        let (b, b1, b2) = plateau(d.y, self.inner, self.outer);
        Jet2 {
            value: a * b,
            grad: [a1 * b, a * b1],
            hess: [[a2 * b, a1 * b1], [a1 * b1, a * b2]],
        }
    }

    fn value(&self, x: Point2) -> f64 {
        let d = x - self.center;
        plateau(d.x, self.inner, self.outer).0 * plateau(d.y, self.inner, self.outer).0
    }
}

/// Even kernel `(15/16)(1 - t^2)^2` on [-1, 1].
pub fn kernel_rho(t: f64) -> f64 {
    let s = 1.0 - t * t;
    0.9375 * s * s
}

/// `(u, v) -> int g(u - |v| t) rho(t) dt`, the lift of a function on the line
/// to the plane that restricts back to it on `v = 0`.
#[derive(Debug, Clone)]
pub struct TraceLift {
    g: PiecewiseC11,
    v_floor: f64,
}

impl TraceLift {
    pub fn new(g: PiecewiseC11) -> Self {
        let scale = (g.last() - g.first()).max(1.0);
        TraceLift {
            g,
            v_floor: 1e-9 * scale,
        }
    }

    /// Integrals of `g^(k)(u - h t) t^m rho(t)` for the needed `(k, m)` pairs,
    /// ordered `[g rho, g' rho, g' t rho, g'' rho, g'' t rho, g'' t^2 rho]`.
    fn moments(&self, u: f64, h: f64, full: bool) -> [f64; 6] {
        // Segment ends in t where u - h t crosses a break, descending in s.
        let mut cuts = vec![-1.0];
        let (lo, hi) = (u - h, u + h);
        let start = self.g.breaks.partition_point(|&b| b <= lo);
        for &b in self.g.breaks[start..].iter().take_while(|&&b| b < hi) {
            cuts.push((u - b) / h);
        }
        cuts.push(1.0);
        cuts.sort_by(|a, b| a.total_cmp(b));
        let rule = gauss_legendre(8);
        let mut m = [0.0; 6];
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
            for &(node, weight) in rule {
                let t = c + r * node;
                let wt = weight * r * kernel_rho(t);
                let (g0, g1, g2) = self.g.eval3(u - h * t);
                m[0] += wt * g0;
                if full {
                    m[1] += wt * g1;
                    m[2] += wt * g1 * t;
                    m[3] += wt * g2;
                    m[4] += wt * g2 * t;
                    m[5] += wt * g2 * t * t;
                }
            }
        }
        m
    }
}

impl ScalarField for TraceLift {
    fn jet2(&self, x: Point2) -> Jet2 {
        let (u, v) = (x.x, x.y);
        let h = v.abs();
        if h < self.v_floor {
            let (g0, g1, g2) = self.g.eval3(u);
            return Jet2 {
                value: g0,
                grad: [g1, 0.0],
                hess: [[g2, 0.0], [0.0, g2 / 7.0]],
            };
        }
        let sg = v.signum();
        let m = self.moments(u, h, true);
        Jet2 {
            value: m[0],
            grad: [m[1], -sg * m[2]],
            hess: [[m[3], -sg * m[4]], [-sg * m[4], m[5]]],
        }
    }

    fn value(&self, x: Point2) -> f64 {
        let h = x.y.abs();
        if h < self.v_floor {
            return self.g.eval(x.x);
        }
        self.moments(x.x, h, false)[0]
    }
}

/// The trace lift of `g` as a field in `(u, v)` coordinates.
pub fn trace_extend_t1(g: PiecewiseC11) -> Field2D {
    Field2D::new(TraceLift::new(g))
}

/// Central-difference check of gradient and Hessian against values and
/// gradients; returns the largest mismatch over `probes`, relative to the
/// local derivative magnitude (floored by the next lower derivative).
pub fn derivative_defect(f: &Field2D, probes: &[Point2], h: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &x in probes {
        let j = f.jet2(x);
        let gmax = j.grad[0].abs().max(j.grad[1].abs());
        let scale_g = gmax.max(j.value.abs()).max(1e-8);
        let scale_h = j.hess_norm().max(gmax).max(1e-8);
        for (i, e) in [Point2::new(h, 0.0), Point2::new(0.0, h)]
            .into_iter()
            .enumerate()
        {
            let fd = (f.value(x + e) - f.value(x - e)) / (2.0 * h);
            worst = worst.max((fd - j.grad[i]).abs() / scale_g);
            let (gp, gm) = (f.jet2(x + e).grad, f.jet2(x - e).grad);
            for k in 0..2 {
                let fdh = (gp[k] - gm[k]) / (2.0 * h);
                worst = worst.max((fdh - j.hess[i][k]).abs() / scale_h);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests;
