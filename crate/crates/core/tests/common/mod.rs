//! Shared fixtures and independent checks for the integration tests.
#![allow(dead_code)]

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sobolev2d::cz::CzDecomposition;
use sobolev2d::geometry::{are_neighbors, dilate};
use sobolev2d::jets::ElimProblem;
use sobolev2d::Point2;

/// `n` points in `[-r, r]^2` with pairwise gaps at least `gap`.
pub fn separated_points(rng: &mut ChaCha8Rng, n: usize, r: f64, gap: f64) -> Vec<Point2> {
    let mut e: Vec<Point2> = Vec::with_capacity(n);
    let mut tries = 0;
    while e.len() < n {
        let x = Point2::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
        tries += 1;
        assert!(tries < 100_000, "could not place {n} points with gap {gap}");
        if e.iter().all(|y| y.dist(x) >= gap) {
            e.push(x);
        }
    }
    e
}

/// Random points with a small minimum gap, so no two coincide.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
    separated_points(rng, n, 1.0, 1e-3)
}

/// A random quadratic plus a random plane wave and uniform noise.
pub fn random_data(rng: &mut ChaCha8Rng, e: &[Point2]) -> Vec<f64> {
    let a: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let k = Point2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
    let noise = rng.gen_range(0.0..0.5);
    e.iter()
        .map(|x| {
            a[0] + a[1] * x.x
                + a[2] * x.y
                + a[3] * x.x * x.x
                + a[4] * x.x * x.y
                + a[5] * x.y * x.y
                + (k.dot(*x)).sin()
                + noise * rng.gen_range(-1.0..1.0)
        })
        .collect()
}

/// Eight points on a unit circle around a tight right-angle cluster at the origin.
pub fn two_scale() -> Vec<Point2> {
    let mut e: Vec<Point2> = (0..8)
        .map(|k| {
            let a = k as f64 * std::f64::consts::FRAC_PI_4 + 0.1;
            Point2::new(a.cos(), a.sin())
        })
        .collect();
    let c = Point2::new(0.013, -0.007);
    let s = 0.002;
    e.extend([c, Point2::new(c.x + s, c.y), Point2::new(c.x, c.y + s)]);
    e
}

pub fn collinear(n: usize) -> Vec<Point2> {
    (0..n)
        .map(|k| {
            let t = -0.9 + 1.8 * k as f64 / (n.max(2) - 1) as f64;
            Point2::new(t, 0.5 * t + 0.1)
        })
        .collect()
}

/// Structural invariants of a decomposition, checked from scratch. Returns a
/// description of the first violation.
pub fn check_decomposition(d: &CzDecomposition) -> Result<(), String> {
    let root_area = d.root.side * d.root.side;
    let area: f64 = d.leaves.iter().map(|q| q.side * q.side).sum();
    if (area / root_area - 1.0).abs() > 1e-9 {
        return Err(format!("leaf areas sum to {area}, root {root_area}"));
    }
    for (a, qa) in d.leaves.iter().enumerate() {
        if !d.root.contains_with(qa.center, 0.0) {
            return Err(format!("leaf {a} outside the root"));
        }
        for qb in &d.leaves[a + 1..] {
            let ox = (qa.half() + qb.half() - (qa.center.x - qb.center.x).abs()).max(0.0);
            let oy = (qa.half() + qb.half() - (qa.center.y - qb.center.y).abs()).max(0.0);
            if ox * oy > 1e-12 * qa.side * qb.side {
                return Err(format!("leaf {a} overlaps another leaf"));
            }
        }
    }
    if d.is_trivial() {
        return Ok(());
    }
    for (a, qa) in d.leaves.iter().enumerate() {
        // Neighbor lists agree with brute force touching.
        let brute: Vec<usize> = d
            .leaves
            .iter()
            .enumerate()
            .filter(|&(b, qb)| b == a || are_neighbors(qa, qb))
            .map(|(b, _)| b)
            .collect();
        if brute != d.adjacency[a] {
            return Err(format!("adjacency of leaf {a} differs from brute force"));
        }
        if d.adjacency[a].len() > 13 {
            return Err(format!("leaf {a} has {} neighbors", d.adjacency[a].len()));
        }
        for &b in &d.adjacency[a] {
            let r = qa.side / d.leaves[b].side;
            if !(0.5..=2.0).contains(&r) {
                return Err(format!("neighbor ratio {r} between {a} and {b}"));
            }
        }
        // 1.1-dilates of non-touching leaves stay apart.
        let ta = dilate(qa, 1.1).unwrap();
        for (b, qb) in d.leaves.iter().enumerate() {
            if b != a
                && d.adjacency[a].binary_search(&b).is_err()
                && ta.intersects(&dilate(qb, 1.1).unwrap())
            {
                return Err(format!("tilde dilates of non-neighbors {a} and {b} meet"));
            }
        }
        // Representative point.
        let x = d.x_nu[a];
        if !dilate(qa, 0.5).unwrap().contains(x) {
            return Err(format!("x_nu of leaf {a} outside its half-dilate"));
        }
        let dist = d
            .points
            .iter()
            .map(|y| x.dist(*y))
            .fold(f64::INFINITY, f64::min);
        if dist < 0.2 * qa.side * (1.0 - 1e-12) {
            return Err(format!(
                "x_nu of leaf {a} is {dist} from E, side {}",
                qa.side
            ));
        }
    }
    // Tilde-dilate overlap count at leaf centers and corners.
    for q in &d.leaves {
        for s in [
            (-1.0, -1.0),
            (1.0, -1.0),
            (-1.0, 1.0),
            (1.0, 1.0),
            (0.0, 0.0),
        ] {
            let x = Point2::new(q.center.x + s.0 * q.half(), q.center.y + s.1 * q.half());
            let count = d
                .leaves
                .iter()
                .filter(|o| dilate(o, 1.1).unwrap().contains(x))
                .count();
            if count > 13 {
                return Err(format!("{count} tilde dilates meet at {x:?}"));
            }
        }
    }
    // Keystones: local minima of the side length within the 100-dilate.
    for &k in &d.keystones {
        let big = dilate(&d.leaves[k], 100.0).unwrap();
        if d.leaves
            .iter()
            .any(|q| q.intersects(&big) && q.side < d.leaves[k].side)
        {
            return Err(format!(
                "keystone {k} sees a smaller leaf in its 100-dilate"
            ));
        }
    }
    for (nu, path) in d.paths.iter().enumerate() {
        if path.first() != Some(&nu) || path.last() != Some(&d.keystones[d.mu_of_nu[nu]]) {
            return Err(format!("path of leaf {nu} has wrong end points"));
        }
        for w in path.windows(2) {
            if d.adjacency[w[0]].binary_search(&w[1]).is_err() {
                return Err(format!("path of leaf {nu} jumps between non-neighbors"));
            }
        }
        // Exponential decay with the recorded constants.
        let cert = d.decay[nu];
        for i in 0..path.len() {
            for j in i..path.len() {
                let bound =
                    cert.constant * (1.0 - cert.rate).powi((j - i) as i32) * d.leaves[path[i]].side;
                if d.leaves[path[j]].side > bound * (1.0 + 1e-12) {
                    return Err(format!("decay certificate fails on path of leaf {nu}"));
                }
            }
        }
    }
    Ok(())
}

struct Closure<F>(F);

impl<F: Fn([f64; 3]) -> f64> CostFunction for Closure<F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, argmin::core::Error> {
        Ok((self.0)([x[0], x[1], x[2]]))
    }
}

/// Brute-force minimum of `f` over R^3: an 11^3 grid scan of the cube of
/// half-width `radius` around `center`, then Nelder-Mead from the best node.
pub fn scan_minimize(f: impl Fn([f64; 3]) -> f64, center: [f64; 3], radius: [f64; 3]) -> f64 {
    let mut best = (f64::INFINITY, center);
    let steps = 10;
    let t = |s: usize| -1.0 + 2.0 * s as f64 / steps as f64;
    for i in 0..=steps {
        for j in 0..=steps {
            for k in 0..=steps {
                let x = [
                    center[0] + radius[0] * t(i),
                    center[1] + radius[1] * t(j),
                    center[2] + radius[2] * t(k),
                ];
                let v = f(x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
    }
    let x0 = best.1.to_vec();
    let mut simplex = vec![x0.clone()];
    for k in 0..3 {
        let mut v = x0.clone();
        v[k] += 0.1 * radius[k];
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(1e-14).unwrap();
    let res = Executor::new(Closure(f), solver)
        .configure(|s| s.max_iters(4000))
        .run()
        .unwrap();
    res.state.best_cost.min(best.0)
}

/// Scan minimum of the elimination objective around the least-squares point.
pub fn scan_minimum(problem: &ElimProblem, p: f64, center: [f64; 3], radius: f64) -> f64 {
    scan_minimize(|x| problem.objective(x, p), center, [radius; 3])
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
