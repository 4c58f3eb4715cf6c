//! Shared instance generators for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sobolev2d::Point2;

/// `n` distinct random points in `[-1, 1]^2` and smooth data on them, fixed by `seed`.
pub fn instance(n: usize, seed: u64) -> (Vec<Point2>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut e: Vec<Point2> = Vec::with_capacity(n);
    while e.len() < n {
        let x = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if e.iter().all(|y| y.dist(x) > 1e-3) {
            e.push(x);
        }
    }
    let f = e
        .iter()
        .map(|x| (2.0 * x.x).sin() + x.x * x.y - 0.5 * x.y * x.y)
        .collect();
    (e, f)
}
