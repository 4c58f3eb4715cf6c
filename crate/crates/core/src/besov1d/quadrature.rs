use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::piecewise::{PiecewiseC11, SlopeCtx};
use crate::smooth::gauss_legendre;
use crate::{Error, Result};

/// Quadrature result for `int int |F'(x) - F'(y)|^p / |x - y|^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadEstimate {
    /// The double integral (the seminorm to the power `p`).
    pub value: f64,
    pub error: f64,
    pub regions: usize,
}

impl QuadEstimate {
    pub fn seminorm(&self, p: f64) -> f64 {
        self.value.powf(1.0 / p)
    }
}

const MAX_REGIONS: usize = 60_000;

#[derive(Clone, Copy)]
struct Region {
    x: (f64, f64),
    y: (f64, f64),
    i: usize,
    j: usize,
    mult: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Region {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Region {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

struct Integrand<'a> {
    f: &'a PiecewiseC11,
    ctx: SlopeCtx,
    p: f64,
}

impl Integrand<'_> {
    fn rule(&self, n: usize, x: (f64, f64), y: (f64, f64), i: usize, j: usize) -> f64 {
        let gl = gauss_legendre(n);
        let (hx, mx) = (0.5 * (x.1 - x.0), 0.5 * (x.1 + x.0));
        let (hy, my) = (0.5 * (y.1 - y.0), 0.5 * (y.1 + y.0));
        let mut acc = 0.0;
        for &(u, wu) in gl {
            let xv = mx + hx * u;
            for &(v, wv) in gl {
                let yv = my + hy * v;
                let d = self.f.slope_quotient(&self.ctx, xv, i, yv, j);
                acc += wu * wv * d.abs().powf(self.p);
            }
        }
        acc * hx * hy
    }

    fn region(&self, x: (f64, f64), y: (f64, f64), i: usize, j: usize, mult: f64) -> Region {
        let hi = self.rule(10, x, y, i, j);
        let lo = self.rule(6, x, y, i, j);
        Region {
            x,
            y,
            i,
            j,
            mult,
            value: mult * hi,
            error: mult * (hi - lo).abs(),
        }
    }

    /// Tail integrand: `x` on an affine tail ending at `a`, `y` in piece `j`;
    /// integrating in `x` analytically leaves `|D(a, y)|^p |y - a| / (p - 1)`.
    fn tail_rule(&self, n: usize, y: (f64, f64), j: usize, a: f64, tail: usize) -> f64 {
        let gl = gauss_legendre(n);
        let (h, m) = (0.5 * (y.1 - y.0), 0.5 * (y.1 + y.0));
        let mut acc = 0.0;
        for &(v, w) in gl {
            let yv = m + h * v;
            let d = self.f.slope_quotient(&self.ctx, a, tail, yv, j);
            acc += w * d.abs().powf(self.p) * (yv - a).abs();
        }
        acc * h / (self.p - 1.0)
    }

    fn tail_region(&self, y: (f64, f64), j: usize, a: f64, tail: usize) -> Region {
        let hi = self.tail_rule(10, y, j, a, tail);
        let lo = self.tail_rule(6, y, j, a, tail);
        // Tails are stored with x = (a, a) and i = tail.
        Region {
            x: (a, a),
            y,
            i: tail,
            j,
            mult: 2.0,
            value: 2.0 * hi,
            error: 2.0 * (hi - lo).abs(),
        }
    }
}

fn run(integ: &Integrand, seed: Vec<Region>, tol: f64, fixed: f64) -> Result<QuadEstimate> {
    let mut heap: BinaryHeap<Region> = seed.into_iter().collect();
    let n_pieces = integ.f.pieces.len();
    let is_tail = |r: &Region| r.x.0 == r.x.1 && (r.i == usize::MAX || r.i == n_pieces);
    let mut total: f64 = heap.iter().map(|r| r.value).sum::<f64>() + fixed;
    let mut err: f64 = heap.iter().map(|r| r.error).sum();
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps.is_multiple_of(512) {
            total = heap.iter().map(|r| r.value).sum::<f64>() + fixed;
            err = heap.iter().map(|r| r.error).sum();
        }
        let finite = total.is_finite() && err.is_finite();
        if finite && (err <= tol * total.abs() || err < 1e-300) {
            return Ok(QuadEstimate {
                value: total,
                error: err,
                regions: heap.len(),
            });
        }
        if heap.len() >= MAX_REGIONS || !finite {
            return Err(Error::ToleranceNotMet {
                what: "Besov seminorm quadrature".into(),
                estimate: total,
                error: err,
            });
        }
        let r = heap.pop().expect("nonempty heap");
        total -= r.value;
        err -= r.error;
        let mut kids = Vec::with_capacity(4);
        if is_tail(&r) {
            let mid = 0.5 * (r.y.0 + r.y.1);
            kids.push(integ.tail_region((r.y.0, mid), r.j, r.x.0, r.i));
            kids.push(integ.tail_region((mid, r.y.1), r.j, r.x.0, r.i));
        } else {
            let mx = 0.5 * (r.x.0 + r.x.1);
            let my = 0.5 * (r.y.0 + r.y.1);
            for x in [(r.x.0, mx), (mx, r.x.1)] {
                for y in [(r.y.0, my), (my, r.y.1)] {
                    kids.push(integ.region(x, y, r.i, r.j, r.mult));
                }
            }
        }
        for k in kids {
            total += k.value;
            err += k.error;
            heap.push(k);
        }
    }
}

/// Seminorm quadrature over the whole line. Affine tails are integrated in
/// closed form in the outer variable; a slope jump anywhere makes the integral
/// diverge and surfaces as [`Error::ToleranceNotMet`].
pub fn besov_seminorm_quadrature(f: &PiecewiseC11, p: f64, tol: f64) -> Result<QuadEstimate> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!("p must exceed 2, got {p}")));
    }
    let integ = Integrand {
        f,
        ctx: SlopeCtx::new(f),
        p,
    };
    let n = f.pieces.len();
    let (a, b) = (f.first(), f.last());
    // Tail-tail interaction.
    let (sl, sr) = (f.left.1, f.right.1);
    let fixed = if sl == sr {
        0.0
    } else if b <= a {
        f64::INFINITY
    } else {
        2.0 * (sl - sr).abs().powf(p) * (b - a).powf(2.0 - p) / ((p - 1.0) * (p - 2.0))
    };
    if !fixed.is_finite() {
        return Err(Error::ToleranceNotMet {
            what: "Besov seminorm quadrature (slope jump between tails)".into(),
            estimate: f64::INFINITY,
            error: f64::INFINITY,
        });
    }
    let mut seed = Vec::new();
    for i in 0..n {
        let xi = (f.breaks[i], f.breaks[i + 1]);
        for j in i..n {
            let yj = (f.breaks[j], f.breaks[j + 1]);
            seed.push(integ.region(xi, yj, i, j, if i == j { 1.0 } else { 2.0 }));
        }
        seed.push(integ.tail_region(xi, i, a, usize::MAX));
        seed.push(integ.tail_region(xi, i, b, n));
    }
    run(&integ, seed, tol, fixed)
}

/// Seminorm quadrature restricted to `[a, b] x [a, b]`.
pub fn besov_seminorm_interval(
    f: &PiecewiseC11,
    a: f64,
    b: f64,
    p: f64,
    tol: f64,
) -> Result<QuadEstimate> {
    if !(a < b) {
        return Err(Error::InvalidArgument("empty interval".into()));
    }
    let integ = Integrand {
        f,
        ctx: SlopeCtx::new(f),
        p,
    };
    let n = f.pieces.len();
    // Segments of [a, b] with their piece labels.
    let mut cuts = vec![a];
    cuts.extend(f.breaks.iter().copied().filter(|&t| t > a && t < b));
    cuts.push(b);
    let label = |lo: f64, hi: f64| -> usize {
        let mid = 0.5 * (lo + hi);
        if mid < f.first() {
            usize::MAX
        } else if mid > f.last() {
            n
        } else {
            f.locate(mid).expect("inside")
        }
    };
    let segs: Vec<((f64, f64), usize)> = cuts
        .windows(2)
        .map(|w| ((w[0], w[1]), label(w[0], w[1])))
        .collect();
    let mut seed = Vec::new();
    for (si, &(xi, li)) in segs.iter().enumerate() {
        for &(yj, lj) in &segs[si..] {
            let mult = if xi == yj { 1.0 } else { 2.0 };
            seed.push(integ.region(xi, yj, li, lj, mult));
        }
    }
    run(&integ, seed, tol, 0.0)
}
