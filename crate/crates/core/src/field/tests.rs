use super::*;
use crate::besov1d::{extend_tb, Samples1D};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn probes(seed: u64, n: usize, half: f64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point2::new(rng.gen_range(-half..half), rng.gen_range(-half..half)))
        .collect()
}

fn sample_g() -> PiecewiseC11 {
    let s = Samples1D::new(
        vec![-0.6, -0.2, 0.1, 0.5, 0.7],
        vec![0.3, -0.1, 0.4, 0.0, 0.2],
        3.0,
    )
    .unwrap();
    extend_tb(&s).unwrap()
}

/// Composite Simpson on [-1, 1] with many panels.
fn simpson_lift(g: &PiecewiseC11, u: f64, v: f64) -> f64 {
    let n = 20000;
    let h = 2.0 / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        let t = -1.0 + i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        s += w * g.eval(u - v.abs() * t) * kernel_rho(t);
    }
    s * h / 3.0
}

#[test]
fn kernel_moments() {
    let z = |m: i32| crate::smooth::gl_integrate(8, -1.0, 1.0, |t| t.powi(m) * kernel_rho(t));
    assert!((z(0) - 1.0).abs() < 1e-14);
    assert!(z(1).abs() < 1e-15);
    assert!((z(2) - 1.0 / 7.0).abs() < 1e-14);
}

#[test]
fn lift_of_affine_is_constant_in_v() {
    let f = trace_extend_t1(PiecewiseC11::affine(0.3, 1.5, -2.0));
    for x in probes(1, 50, 3.0) {
        let expect = 1.5 - 2.0 * (x.x - 0.3);
        let j = f.jet2(x);
        assert!((j.value - expect).abs() < 1e-13);
        assert!((j.grad[0] + 2.0).abs() < 1e-13 && j.grad[1].abs() < 1e-13);
        assert!(j.hess_norm() < 1e-12);
    }
}

#[test]
fn lift_restricts_to_g() {
    let g = sample_g();
    let f = trace_extend_t1(g.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let u = rng.gen_range(-3.0..3.0);
        let expect = g.eval(u);
        assert!((f.value(Point2::new(u, 0.0)) - expect).abs() <= 1e-10 * expect.abs().max(1e-300));
    }
}

#[test]
fn lift_matches_simpson_oracle() {
    let g = sample_g();
    let f = trace_extend_t1(g.clone());
    for x in probes(3, 40, 1.5) {
        let o = simpson_lift(&g, x.x, x.y);
        assert!(
            (f.value(x) - o).abs() < 1e-9,
            "{x:?}: {} vs {o}",
            f.value(x)
        );
    }
}

#[test]
fn lift_derivatives_match_differences() {
    let f = trace_extend_t1(sample_g());
    let pts: Vec<Point2> = probes(4, 200, 1.5)
        .into_iter()
        .filter(|x| x.y.abs() > 1e-3)
        .collect();
    assert!(derivative_defect(&f, &pts, 1e-5) < 1e-4);
    // Second derivatives stay continuous across the line v = 0.
    for u in [-0.55, -0.1, 0.3, 0.66] {
        let on = f.jet2(Point2::new(u, 0.0));
        for v in [1e-7, -1e-7] {
            let off = f.jet2(Point2::new(u, v));
            assert!((on.value - off.value).abs() < 1e-9);
            for i in 0..2 {
                assert!((on.grad[i] - off.grad[i]).abs() < 1e-5);
                for k in 0..2 {
                    assert!((on.hess[i][k] - off.hess[i][k]).abs() < 1e-3 * (1.0 + on.hess_norm()));
                }
            }
        }
    }
}

#[test]
fn lift_vanishes_far_from_support() {
    let g = sample_g();
    let f = trace_extend_t1(g.clone());
    let far = g.last() + 2.0;
    for v in [-1.0, 0.0, 1.5] {
        assert_eq!(f.jet2(Point2::new(far + 1.6, v)), Jet2::default());
    }
}

#[test]
fn bumps_have_plateaus_and_supports() {
    let c = Point2::new(0.2, -0.1);
    let r = Field2D::radial_bump(c, 0.5, 1.0);
    let b = Field2D::box_bump(c, 0.5, 1.0);
    for x in probes(5, 500, 2.0) {
        let d = x - c;
        for (f, s) in [(&r, d.norm()), (&b, d.norm_inf())] {
            let v = f.value(x);
            assert!((0.0..=1.0).contains(&v));
            if s <= 0.5 {
                assert_eq!(v, 1.0);
            }
            if s >= 1.0 {
                assert_eq!(f.jet2(x), Jet2::default());
            }
        }
    }
    let pts = probes(6, 200, 1.2);
    assert!(derivative_defect(&r, &pts, 1e-6) < 1e-4);
    assert!(derivative_defect(&b, &pts, 1e-6) < 1e-4);
}

#[test]
fn combinators_follow_calculus_rules() {
    let lift = trace_extend_t1(sample_g());
    let bump = Field2D::radial_bump(Point2::new(0.1, 0.1), 0.2, 0.9);
    let aff = Field2D::affine(AffineJet {
        base: Point2::new(1.0, 2.0),
        value: 0.5,
        grad: Point2::new(-1.0, 3.0),
    });
    let warped = lift.warp(Point2::new(0.3, -0.2), [[0.8, -0.6], [0.6, 0.8]]);
    let f = warped.mul(&bump).sub(&aff.mul(&bump)).add(&aff.scale(2.0));
    let pts: Vec<Point2> = probes(7, 200, 1.2);
    assert!(derivative_defect(&f, &pts, 1e-5) < 1e-4);
    for x in pts.iter().take(20) {
        let manual = warped.value(*x) * bump.value(*x) - aff.value(*x) * bump.value(*x)
            + 2.0 * aff.value(*x);
        assert!((f.value(*x) - manual).abs() < 1e-13);
        assert!((f.jet2(*x).value - manual).abs() < 1e-13);
        let h = f.hessian(*x);
        assert!((h[0][1] - h[1][0]).abs() < 1e-12);
    }
}

#[test]
fn warp_composes_with_frame_maps() {
    let lift = trace_extend_t1(sample_g());
    let frame = crate::geometry::Frame::from_angle(Point2::new(0.4, 0.1), 0.7);
    let f = lift.warp(frame.origin, frame.matrix());
    for x in probes(8, 30, 1.0) {
        assert!((f.value(x) - lift.value(frame.to_frame(x))).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn lift_is_linear_in_g(a in -3.0..3.0f64, b in -3.0..3.0f64, u in -2.0..2.0f64, v in -1.0..1.0f64) {
        let s1 = Samples1D::new(vec![-0.5, 0.0, 0.4], vec![1.0, -1.0, 0.5], 3.0).unwrap();
        let s2 = Samples1D::new(vec![-0.5, 0.0, 0.4], vec![0.2, 0.7, -0.3], 3.0).unwrap();
        let s3 = Samples1D::new(vec![-0.5, 0.0, 0.4], vec![a + 0.2 * b, -a + 0.7 * b, 0.5 * a - 0.3 * b], 3.0).unwrap();
        let f = |s: &Samples1D| trace_extend_t1(extend_tb(s).unwrap()).jet2(Point2::new(u, v));
        let (j1, j2, j3) = (f(&s1), f(&s2), f(&s3));
        let mut comb = j1.scaled(a);
        comb.axpy(b, &j2);
        prop_assert!((comb.value - j3.value).abs() < 1e-12 * (1.0 + j3.value.abs()));
        for i in 0..2 {
            prop_assert!((comb.grad[i] - j3.grad[i]).abs() < 1e-11 * (1.0 + j3.grad[i].abs()));
        }
    }
}
