use super::*;
use crate::field::derivative_defect;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_points(seed: u64, n: usize) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn two_clusters() -> Vec<Point2> {
    let mut out = Vec::new();
    for (c, r) in [
        (Point2::new(-0.5, -0.45), 0.06),
        (Point2::new(0.55, 0.4), 0.09),
    ] {
        for k in 0..6 {
            let t = k as f64 * std::f64::consts::PI / 3.0 + 0.2;
            out.push(c + r * Point2::new(t.cos(), (1.3 * t).sin()));
        }
    }
    out
}

fn probes_in(q: &Square, seed: u64, n: usize) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = q.half();
    (0..n)
        .map(|_| q.center + Point2::new(rng.gen_range(-h..h), rng.gen_range(-h..h)))
        .collect()
}

#[test]
fn single_leaf_partition_is_one() {
    let d = CzDecomposition::build(
        &[Point2::new(0.1, 0.2), Point2::new(0.3, 0.2)],
        &Config::default(),
    )
    .unwrap();
    assert!(d.is_trivial());
    let pou = PartitionOfUnity::new(&d);
    for x in probes_in(&d.root, 1, 500) {
        let w = pou.weights_at(x).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].1.value, 1.0);
    }
}

#[test]
fn partition_properties_on_a_graded_tree() {
    let d = CzDecomposition::build(&two_clusters(), &Config::with_p(3.0)).unwrap();
    let pou = Arc::new(PartitionOfUnity::new(&d));
    let (mut grad_c, mut hess_c): (f64, f64) = (0.0, 0.0);
    for x in probes_in(&d.root, 2, 10_000) {
        let w = pou.weights_at(x).unwrap();
        let s: f64 = w.iter().map(|(_, j)| j.value).sum();
        assert!((s - 1.0).abs() < 1e-10);
        let home = d.leaf_index().locate(x);
        let q = d.leaves[home];
        for (nu, j) in &w {
            let leaf = d.leaves[*nu];
            assert!((0.0..=1.0 + 1e-12).contains(&j.value));
            assert!((x - leaf.center).norm_inf() <= 0.55 * leaf.side);
            grad_c = grad_c.max(Point2::new(j.grad[0], j.grad[1]).norm() * leaf.side);
            hess_c = hess_c.max(j.hess_norm() * leaf.side * leaf.side);
        }
        if (x - q.center).norm_inf() <= 0.45 * q.side {
            assert_eq!(w.len(), 1, "only the home leaf is active deep inside");
            assert!((w[0].1.value - 1.0).abs() < 1e-12);
        }
    }
    // Smoothstep ramps of width 0.024 delta: |grad| delta near 1.9/0.024 and
    // |hess| delta^2 near 5.8/0.024^2, amplified by the normalization.
    eprintln!("partition derivative constants: grad {grad_c:.1}, hess {hess_c:.1}");
    assert!(grad_c < 250.0, "{grad_c}");
    assert!(hess_c < 5e4, "{hess_c}");
    let leaf = d.leaves[d.leaves.len() / 2];
    let theta = pou.weight_field(d.leaves.len() / 2);
    assert_eq!(theta.value(leaf.center), 1.0);
    assert_eq!(
        theta.value(leaf.center + Point2::new(0.6 * leaf.side, 0.0)),
        0.0
    );
}

#[test]
fn affine_data_gives_an_affine_field() {
    let e = two_clusters();
    let truth = AffineJet {
        base: Point2::ORIGIN,
        value: 0.4,
        grad: Point2::new(1.2, -0.7),
    };
    let f: Vec<f64> = e.iter().map(|x| truth.eval(*x)).collect();
    let ext = extend(&f, &e, &Config::with_p(3.0)).unwrap();
    assert!(
        ext.m_p < 1e-18 && ext.mhat_p < 1e-18,
        "{} {}",
        ext.m_p,
        ext.mhat_p
    );
    for x in probes_in(&Square::new(Point2::ORIGIN, 30.0), 3, 300) {
        assert!((ext.field.value(x) - truth.eval(x)).abs() < 1e-8 * (1.0 + truth.eval(x).abs()));
    }
}

#[test]
fn interpolation_and_constant_path_jets() {
    let e = two_clusters();
    let op = ExtensionOperator::new(&e, &Config::with_p(3.0)).unwrap();
    assert!(!op.decomposition.is_trivial());
    let f: Vec<f64> = (0..e.len()).map(|k| (1.7 * k as f64).cos()).collect();
    let ext = op.apply(&f).unwrap();
    for (x, v) in e.iter().zip(&f) {
        assert!((ext.field.value(*x) - v).abs() <= 1e-7 * v.abs().max(1.0));
    }
    let h = 1e-6;
    for (nu, (x, j)) in op
        .decomposition
        .x_nu
        .iter()
        .zip(&ext.leaf_jets.jets)
        .enumerate()
    {
        let val = ext.field.value(*x);
        assert!(
            (val - j.value).abs() <= 1e-6 * j.value.abs().max(1.0),
            "leaf {nu}"
        );
        let hx = h * op.decomposition.leaves[nu].side;
        let fd = Point2::new(
            (ext.field.value(*x + Point2::new(hx, 0.0))
                - ext.field.value(*x - Point2::new(hx, 0.0)))
                / (2.0 * hx),
            (ext.field.value(*x + Point2::new(0.0, hx))
                - ext.field.value(*x - Point2::new(0.0, hx)))
                / (2.0 * hx),
        );
        assert!(
            (fd - j.grad).norm() <= 1e-4 * j.grad.norm().max(1.0),
            "leaf {nu}: {fd:?} vs {:?}",
            j.grad
        );
    }
    let pts = probes_in(&Square::new(Point2::ORIGIN, 2.5), 4, 200);
    assert!(derivative_defect(&ext.field, &pts, 1e-6) < 1e-3);
    assert!(ext.m_p > 0.0 && ext.mhat_p > 0.0);
    assert_eq!(ext.functional_report.len(), op.functional_count());
    assert!(op.functional_count() <= 50 * e.len() * e.len());
}

#[test]
fn tiny_sets() {
    let cfg = Config::default();
    let ext = extend(&[], &[], &cfg).unwrap();
    assert_eq!(ext.m_p, 0.0);
    assert_eq!(ext.field.value(Point2::new(0.3, 0.1)), 0.0);
    let e = [Point2::new(0.2, -0.3)];
    let ext = extend(&[1.5], &e, &cfg).unwrap();
    assert!(ext.m_p < 1e-24);
    for x in probes_in(&Square::new(Point2::ORIGIN, 10.0), 5, 50) {
        assert!((ext.field.value(x) - 1.5).abs() < 1e-12);
    }
    assert!(matches!(
        extend(&[1.0, 2.0], &[e[0], e[0]], &cfg),
        Err(Error::InvalidInput(_))
    ));
    assert!(matches!(
        extend(&[1.0], &[e[0], Point2::ORIGIN], &cfg),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn collinear_sets_use_the_trivial_path() {
    let e: Vec<Point2> = (0..7)
        .map(|k| Point2::new(-0.6 + 0.2 * k as f64, 0.5 * (-0.6 + 0.2 * k as f64)))
        .collect();
    let op = ExtensionOperator::new(&e, &Config::with_p(4.0)).unwrap();
    assert!(op.decomposition.is_trivial());
    let lin: Vec<f64> = e.iter().map(|x| 2.0 * x.x - 1.0).collect();
    let ext = op.apply(&lin).unwrap();
    assert!(ext.m_p < 1e-20);
    let f: Vec<f64> = (0..7).map(|k| (k as f64).sin()).collect();
    let ext = op.apply(&f).unwrap();
    for (x, v) in e.iter().zip(&f) {
        assert!((ext.field.value(*x) - v).abs() < 1e-9);
    }
    assert!(ext.m_p > 0.0);
}

#[test]
fn operator_is_linear_and_norm_homogeneous() {
    let e = random_points(7, 10);
    let op = ExtensionOperator::new(&e, &Config::with_p(3.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let f: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (a, b) = (0.7, -1.9);
    let h: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
    let (tf, tg, th) = (
        op.apply(&f).unwrap(),
        op.apply(&g).unwrap(),
        op.apply(&h).unwrap(),
    );
    for x in probes_in(&Square::new(Point2::ORIGIN, 3.0), 9, 100) {
        let lhs = th.field.value(x);
        let rhs = a * tf.field.value(x) + b * tg.field.value(x);
        assert!((lhs - rhs).abs() <= 1e-7 * lhs.abs().max(1.0));
    }
    let scaled: Vec<f64> = f.iter().map(|v| -3.0 * v).collect();
    let m1 = op.m_p(&f).powf(1.0 / 3.0);
    let m2 = op.m_p(&scaled).powf(1.0 / 3.0);
    assert!((m2 - 3.0 * m1).abs() <= 1e-10 * m2);
}
