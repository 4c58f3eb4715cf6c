use serde::{Deserialize, Serialize};

use crate::smooth::{poly_deriv, poly_divided_difference, poly_eval};

/// Piecewise polynomial on the line with affine tails.
///
/// Piece `k` lives on `[breaks[k], breaks[k+1]]` and is stored in the normalized
/// variable `t = (x - breaks[k]) / (breaks[k+1] - breaks[k])`. Left of the first
/// break the function is `left.0 + left.1 (x - breaks[0])`; right of the last break
/// it is `right.0 + right.1 (x - breaks[n])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseC11 {
    pub breaks: Vec<f64>,
    pub pieces: Vec<Vec<f64>>,
    pub left: (f64, f64),
    pub right: (f64, f64),
}

impl PiecewiseC11 {
    pub fn zero() -> Self {
        PiecewiseC11 {
            breaks: vec![0.0],
            pieces: Vec::new(),
            left: (0.0, 0.0),
            right: (0.0, 0.0),
        }
    }

    pub fn affine(x0: f64, value: f64, slope: f64) -> Self {
        PiecewiseC11 {
            breaks: vec![x0],
            pieces: Vec::new(),
            left: (value, slope),
            right: (value, slope),
        }
    }

    pub fn first(&self) -> f64 {
        self.breaks[0]
    }

    pub fn last(&self) -> f64 {
        *self.breaks.last().expect("at least one break")
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.len().saturating_sub(1))
            .max()
            .unwrap_or(1)
    }

    /// Index of the piece containing `x`, or `None` on the tails.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let n = self.pieces.len();
        if n == 0 || x < self.breaks[0] || x > self.breaks[n] {
            return None;
        }
        let k = self.breaks.partition_point(|&b| b <= x);
        Some(k.saturating_sub(1).min(n - 1))
    }

    fn width(&self, k: usize) -> f64 {
        self.breaks[k + 1] - self.breaks[k]
    }

    /// Value, first and second derivative at `x`.
    pub fn eval3(&self, x: f64) -> (f64, f64, f64) {
        match self.locate(x) {
            Some(k) => {
                let w = self.width(k);
                let t = (x - self.breaks[k]) / w;
                let c = &self.pieces[k];
                let d = poly_deriv(c);
                let dd = poly_deriv(&d);
                (
                    poly_eval(c, t),
                    poly_eval(&d, t) / w,
                    poly_eval(&dd, t) / (w * w),
                )
            }
            None if x < self.breaks[0] => (
                self.left.0 + self.left.1 * (x - self.breaks[0]),
                self.left.1,
                0.0,
            ),
            None => (
                self.right.0 + self.right.1 * (x - self.last()),
                self.right.1,
                0.0,
            ),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.eval3(x).1
    }

    /// One-sided values `(F(b-), F'(b-), F(b+), F'(b+))` at break `k`.
    pub fn one_sided(&self, k: usize) -> (f64, f64, f64, f64) {
        let n = self.pieces.len();
        let (vl, dl) = if k == 0 {
            (self.left.0, self.left.1)
        } else {
            let c = &self.pieces[k - 1];
            let w = self.width(k - 1);
            (poly_eval(c, 1.0), poly_eval(&poly_deriv(c), 1.0) / w)
        };
        let (vr, dr) = if k == n {
            (self.right.0, self.right.1)
        } else {
            let c = &self.pieces[k];
            let w = self.width(k);
            (poly_eval(c, 0.0), poly_eval(&poly_deriv(c), 0.0) / w)
        };
        (vl, dl, vr, dr)
    }

    /// Largest relative mismatch of value or slope across a break.
    pub fn c1_defect(&self) -> f64 {
        let scale = self.value_scale();
        (0..self.breaks.len())
            .map(|k| {
                let (vl, dl, vr, dr) = self.one_sided(k);
                ((vl - vr).abs() / scale.0).max((dl - dr).abs() / scale.1)
            })
            .fold(0.0, f64::max)
    }

    fn value_scale(&self) -> (f64, f64) {
        let mut v: f64 = 1e-300;
        let mut d: f64 = 1e-300;
        for k in 0..self.breaks.len() {
            let (a, b, c, e) = self.one_sided(k);
            v = v.max(a.abs()).max(c.abs());
            d = d.max(b.abs()).max(e.abs());
        }
        (
            v.max(d),
            d.max(v / (self.last() - self.first()).max(1e-300)),
        )
    }

    /// `x -> F(x / lambda)`.
    pub fn rescale_argument(&self, lambda: f64) -> Self {
        PiecewiseC11 {
            breaks: self.breaks.iter().map(|b| b * lambda).collect(),
            pieces: self.pieces.clone(),
            left: (self.left.0, self.left.1 / lambda),
            right: (self.right.0, self.right.1 / lambda),
        }
    }

    /// Slope difference quotient `(F'(y) - F'(x)) / (y - x)` with `x` in piece `i`
    /// and `y` in piece `j` (`i <= j`); piece index `usize::MAX` means the left
    /// tail, `pieces.len()` the right tail. Jumps in `F'` enter as point masses.
    pub(crate) fn slope_quotient(&self, ctx: &SlopeCtx, x: f64, i: usize, y: f64, j: usize) -> f64 {
        if i == j {
            return self.inner_quotient(ctx, i, x, y);
        }
        let (x, i, y, j) = if i < j || i == usize::MAX {
            (x, i, y, j)
        } else {
            (y, j, x, i)
        };
        // x in piece i, y in piece j, i < j (left tail sorts first).
        let (first_break, mut num) = if i == usize::MAX {
            (0usize, 0.0)
        } else {
            let b = self.breaks[i + 1];
            (i + 1, self.inner_quotient(ctx, i, x, b) * (b - x))
        };
        let last_break = j;
        num += ctx.prefix[last_break] - ctx.prefix[first_break] + ctx.jumps[last_break];
        if j < self.pieces.len() {
            let b = self.breaks[j];
            num += self.inner_quotient(ctx, j, b, y) * (y - b);
        }
        num / (y - x)
    }

    fn inner_quotient(&self, ctx: &SlopeCtx, k: usize, x: f64, y: f64) -> f64 {
        if k == usize::MAX || k >= self.pieces.len() {
            return 0.0;
        }
        let w = self.width(k);
        let b = self.breaks[k];
        poly_divided_difference(&ctx.dpoly[k], (x - b) / w, (y - b) / w) / (w * w)
    }
}

/// Precomputed slope data used by the Besov quadrature.
pub(crate) struct SlopeCtx {
    pub dpoly: Vec<Vec<f64>>,
    /// `prefix[k]` = sum over breaks `< k` of jumps plus full-piece slope increments up to break `k`.
    pub prefix: Vec<f64>,
    /// Jump of `F'` at each break.
    pub jumps: Vec<f64>,
}

impl SlopeCtx {
    pub fn new(f: &PiecewiseC11) -> Self {
        let n = f.pieces.len();
        let dpoly: Vec<Vec<f64>> = f.pieces.iter().map(|c| poly_deriv(c)).collect();
        let jumps: Vec<f64> = (0..=n)
            .map(|k| {
                let (_, dl, _, dr) = f.one_sided(k);
                dr - dl
            })
            .collect();
        // prefix[k]: F'(b_k-) - F'(b_0-) accumulated from jumps at breaks < k and piece increments.
        let mut prefix = vec![0.0; n + 1];
        for k in 0..n {
            let w = f.breaks[k + 1] - f.breaks[k];
            let inc = (poly_eval(&dpoly[k], 1.0) - poly_eval(&dpoly[k], 0.0)) / w;
            prefix[k + 1] = prefix[k] + jumps[k] + inc;
        }
        SlopeCtx {
            dpoly,
            prefix,
            jumps,
        }
    }
}
