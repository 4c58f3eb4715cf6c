use super::*;
use crate::besov1d::{trace_seminorm_p, Samples1D};
use crate::geometry::AffineJet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_box() -> Square {
    Square::new(Point2::ORIGIN, 2.0)
}

fn five_points() -> Vec<(Point2, f64)> {
    vec![
        (Point2::new(-0.5, -0.4), 0.3),
        (Point2::new(0.45, -0.3), -0.2),
        (Point2::new(0.1, 0.5), 0.8),
        (Point2::new(-0.3, 0.2), 0.0),
        (Point2::new(0.3, 0.15), 0.4),
    ]
}

fn problem(n: usize, p: f64, constraints: Vec<(Point2, f64)>) -> GridProblem {
    GridProblem {
        domain: unit_box(),
        n,
        p,
        constraints,
        jets: Vec::new(),
    }
}

#[test]
fn affine_constraints_cost_nothing() {
    let l = AffineJet {
        base: Point2::ORIGIN,
        value: 0.2,
        grad: Point2::new(1.0, -2.0),
    };
    let cons = five_points()
        .into_iter()
        .map(|(x, _)| (x, l.eval(x)))
        .collect();
    let (e, field) = min_energy_2d(&problem(24, 4.0, cons)).unwrap();
    assert!(e < 1e-6, "{e}");
    for j in 0..24 {
        for i in 0..24 {
            let x = field.node(i, j);
            assert!((field.values[j * 24 + i] - l.eval(x)).abs() < 1e-8);
        }
    }
}

/// Dense KKT solve of the quadratic problem, independent of the Schur route.
fn dense_quadratic(prob: &GridProblem) -> f64 {
    let n = prob.n;
    let m = n * n;
    let h = prob.domain.side / (n - 1) as f64;
    let st = hessian_stencils(n, h);
    let k = prob.constraints.len();
    let mut kkt = DMatrix::<f64>::zeros(m + k, m + k);
    for [a, b, c] in &st {
        for (s, coef) in [(a, 1.0), (b, 2.0), (c, 1.0)] {
            for &(i, wi) in s {
                for &(j, wj) in s {
                    kkt[(i, j)] += 2.0 * coef * h * h * wi * wj;
                }
            }
        }
    }
    let mut rhs = DVector::<f64>::zeros(m + k);
    for (r, &(x, v)) in prob.constraints.iter().enumerate() {
        for (i, w) in stencil_value(&prob.domain, n, x) {
            kkt[(m + r, i)] += w;
            kkt[(i, m + r)] += w;
        }
        rhs[m + r] = v;
    }
    let sol = kkt.lu().solve(&rhs).unwrap();
    let u: Vec<f64> = sol.iter().take(m).copied().collect();
    st.iter()
        .map(|[a, b, c]| {
            let (xa, xb, xc) = (dot(a, &u), dot(b, &u), dot(c, &u));
            xa * xa + 2.0 * xb * xb + xc * xc
        })
        .sum::<f64>()
        .sqrt()
        * h
}

#[test]
fn quadratic_case_matches_direct_solve() {
    let pr = problem(16, 2.0, five_points().into_iter().take(4).collect());
    let (e, _) = min_energy_2d(&pr).unwrap();
    let direct = dense_quadratic(&pr);
    assert!((e - direct).abs() <= 1e-6 * direct, "{e} vs {direct}");
}

#[test]
fn grid_refinement_is_stable() {
    let mut prev: Option<f64> = None;
    for n in [32, 64, 128] {
        let (e, _) = min_energy_2d(&problem(n, 4.0, five_points())).unwrap();
        if let Some(q) = prev {
            assert!((e - q).abs() < 0.1 * q, "n = {n}: {e} vs {q}");
        }
        prev = Some(e);
    }
}

#[test]
fn more_constraints_never_lower_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        let pts: Vec<(Point2, f64)> = (0..6)
            .map(|_| {
                (
                    Point2::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)),
                    rng.gen_range(-1.0..1.0),
                )
            })
            .collect();
        let e: Vec<f64> = [3, 4, 6]
            .iter()
            .map(|&k| {
                min_energy_2d(&problem(24, 3.0, pts[..k].to_vec()))
                    .unwrap()
                    .0
            })
            .map(|e| if e < 1e-9 { 0.0 } else { e })
            .collect();
        assert!(
            e[0] <= e[1] * (1.0 + 1e-8) && e[1] <= e[2] * (1.0 + 1e-8),
            "{e:?}"
        );
    }
}

#[test]
fn adding_an_affine_function_changes_nothing() {
    let base = five_points();
    let shifted: Vec<(Point2, f64)> = base
        .iter()
        .map(|&(x, v)| (x, v + 0.7 - 1.3 * x.x + 0.4 * x.y))
        .collect();
    let (a, _) = min_energy_2d(&problem(32, 4.0, base)).unwrap();
    let (b, _) = min_energy_2d(&problem(32, 4.0, shifted)).unwrap();
    assert!((a - b).abs() <= 1e-8 * a.max(1e-300) * 1e2, "{a} vs {b}");
}

#[test]
fn jet_constraints_are_met() {
    let mut pr = problem(32, 3.0, five_points());
    pr.jets.push(JetConstraint {
        point: Point2::new(0.6, 0.6),
        value: 1.0,
        grad: Point2::new(0.5, -0.5),
    });
    let (_, field) = min_energy_2d(&pr).unwrap();
    for (x, v) in five_points() {
        assert!((field.value(x) - v).abs() < 1e-9);
    }
    assert!((field.value(Point2::new(0.6, 0.6)) - 1.0).abs() < 1e-9);
}

#[test]
fn bad_grid_problems_are_rejected() {
    assert!(min_energy_2d(&problem(8, 3.0, five_points())).is_err());
    let outside = vec![(Point2::new(3.0, 0.0), 1.0)];
    assert!(matches!(
        min_energy_2d(&problem(16, 3.0, outside)),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn one_dimensional_oracle() {
    let xs = [0.0, 0.4, 1.0, 1.3];
    let lin: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
    assert!(min_besov_1d(&xs, &lin, 3.0, 64).unwrap() < 1e-8);
    for p in [2.5, 3.0, 4.0] {
        let (x3, g3) = ([0.0, 0.5, 1.2], [0.0, 1.0, -0.5]);
        let o = min_besov_1d(&x3, &g3, p, 128).unwrap();
        let m = trace_seminorm_p(&Samples1D::new(x3.to_vec(), g3.to_vec(), p).unwrap())
            .unwrap()
            .mp
            .powf(1.0 / p);
        assert!(
            o <= 50.0 * m && m <= 50.0 * o,
            "p = {p}: oracle {o}, formula {m}"
        );
        let xs2: Vec<f64> = x3.iter().map(|x| 2.0 * x).collect();
        let o2 = min_besov_1d(&xs2, &g3, p, 128).unwrap();
        let law = 2f64.powf((2.0 - 2.0 * p) / p);
        assert!(
            (o2 / o - law).abs() < 0.05 * law,
            "p = {p}: {} vs {law}",
            o2 / o
        );
        let shifted: Vec<f64> = x3.iter().zip(&g3).map(|(x, g)| g + 0.3 + 1.1 * x).collect();
        let o3 = min_besov_1d(&x3, &shifted, p, 128).unwrap();
        assert!((o3 - o).abs() <= 1e-8 * o);
    }
    assert_eq!(min_besov_1d(&[0.5], &[1.0], 3.0, 64).unwrap(), 0.0);
}

#[test]
fn hessian_quadrature() {
    let aff = Field2D::affine(AffineJet {
        base: Point2::ORIGIN,
        value: 1.0,
        grad: Point2::new(2.0, 3.0),
    });
    assert_eq!(sobolev_seminorm_quadrature(&aff, &unit_box(), 16, 3.0), 0.0);
    let quad = Field2D::affine(AffineJet::zero(Point2::ORIGIN)).add(&Field2D::new(Paraboloid));
    let unit = Square::new(Point2::new(0.5, 0.5), 1.0);
    for p in [2.5, 4.0] {
        assert!((sobolev_seminorm_quadrature(&quad, &unit, 8, p) - 2f64.sqrt()).abs() < 1e-12);
    }
    let bump = Field2D::radial_bump(Point2::new(0.1, 0.0), 0.2, 0.9);
    let a = sobolev_seminorm_quadrature(&bump, &unit_box(), 64, 3.0);
    let b = sobolev_seminorm_quadrature(&bump, &unit_box(), 128, 3.0);
    assert!((a - b).abs() < 0.02 * b, "{a} vs {b}");
}

struct Paraboloid;

impl crate::field::ScalarField for Paraboloid {
    fn jet2(&self, x: Point2) -> crate::field::Jet2 {
        crate::field::Jet2 {
            value: 0.5 * (x.x * x.x + x.y * x.y),
            grad: [x.x, x.y],
            hess: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}
