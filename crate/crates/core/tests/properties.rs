use airy_layer::airy;
use airy_layer::discretization::{build_1d, dense_eigenvalues, Grid1D};
use airy_layer::expansion1d::{lambda_series, taylor_from_callable, Endpoint};
use airy_layer::geometry::{find_perp_points, select_candidates, Ellipse, Moved, MovedCurve, PerpPoint, PolyPotential, PotentialField, Reversed, BoundaryCurve};
use airy_layer::model::{airy_halfline_spectrum, HalfLineAiryModel};
use airy_layer::resolvent::{resolvent_norm, semigroup_norm};
use airy_layer::C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn field(c: [f64; 5]) -> PolyPotential {
    PolyPotential::new(vec![(1, 0, c[0]), (0, 1, c[1]), (2, 0, c[2]), (1, 1, c[3]), (0, 2, c[4])])
}

fn on_curve(curve: &dyn BoundaryCurve, v: &dyn PotentialField, s: f64) -> f64 {
    v.value(curve.point(s))
}

proptest! {
    #![proptest_config(config(500))]

    #[test]
    fn airy_solves_its_equation(r in 0.0f64..20.0, theta in -PI..PI) {
        let z = C64::from_polar(r, theta);
        let e = airy::ai(z).unwrap();
        let za = z * e.value;
        prop_assert!((e.second - za).norm() <= 1e-8 * (1.0 + za.norm()), "z = {z}");
    }
}

#[test]
fn airy_decays_along_the_eigenfunction_ray() {
    let mu1 = airy::ai_zero(1).unwrap();
    let w = C64::from_polar(1.0, PI / 6.0);
    let vals: Vec<f64> = (0..=400).map(|k| airy::ai(w * (0.1 * k as f64) + mu1).unwrap().value.norm()).collect();
    let peak = (0..vals.len()).max_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap()).unwrap();
    assert!(peak < 60, "peak at τ = {}", 0.1 * peak as f64);
    assert!(vals[peak..].windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn zeros_change_sign_and_moments_are_positive() {
    let table = airy::zero_table(20).unwrap();
    for (n, &m) in table.zeros.iter().enumerate() {
        let lo = airy::ai(C64::new(m - 1e-9, 0.0)).unwrap().value.re;
        let hi = airy::ai(C64::new(m + 1e-9, 0.0)).unwrap().value.re;
        assert!(lo * hi < 0.0, "zero {}", n + 1);
        assert!(airy::airy_moment(0, n + 1).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn halfline_spectrum_scales_and_conjugates(beta in 0.05f64..20.0) {
        let one = airy_halfline_spectrum(&HalfLineAiryModel::new(1.0).unwrap(), 6).unwrap();
        let pos = airy_halfline_spectrum(&HalfLineAiryModel::new(beta).unwrap(), 6).unwrap();
        let neg = airy_halfline_spectrum(&HalfLineAiryModel::new(-beta).unwrap(), 6).unwrap();
        for i in 0..6 {
            prop_assert!((pos[i] - one[i] * beta.powf(2.0 / 3.0)).norm() <= 1e-12 * pos[i].norm());
            prop_assert!((neg[i] - pos[i].conj()).norm() <= 1e-14 * pos[i].norm());
        }
    }

    #[test]
    fn right_endpoint_is_the_reflected_left_endpoint(b1 in 0.3f64..3.0, b2 in -1.0f64..1.0, b3 in -1.0f64..1.0) {
        let a = 1.0;
        let v = move |x: f64| b1 * x + b2 * x * x + b3 * x * x * x;
        let right = taylor_from_callable(&v, Endpoint::Right, a, 4).unwrap();
        let reflected = taylor_from_callable(&|y: f64| v(a - y), Endpoint::Left, a, 4).unwrap();
        let sr = lambda_series(&right, 1, 3).unwrap();
        let sl = lambda_series(&reflected, 1, 3).unwrap();
        for (x, y) in sr.lambdas.iter().zip(&sl.lambdas) {
            prop_assert!((x - y).norm() <= 1e-9 * y.norm().max(1.0));
        }
    }

    #[test]
    fn conjugate_potential_gives_conjugate_matrix(c in prop::array::uniform3(-2.0f64..2.0), h in 0.01f64..0.2) {
        let v = move |x: f64| c[0] * x + c[1] * x * x + c[2] * (3.0 * x).sin();
        let grid = Grid1D::cheb(40, 0.0, 1.0);
        let a = build_1d(&v, 1.0, h, &grid).unwrap().to_dense().unwrap();
        let b = build_1d(&move |x| -v(x), 1.0, h, &grid).unwrap().to_dense().unwrap();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                prop_assert!((a[(i, j)].conj() - b[(i, j)]).norm() <= 1e-12 * (1.0 + a[(i, j)].norm()));
            }
        }
    }

    #[test]
    fn finite_difference_operators_are_accretive(c in prop::array::uniform3(-2.0f64..2.0), h in 0.02f64..0.2, t in 0.0f64..3.0) {
        let v = move |x: f64| c[0] * x + c[1] * x * x + c[2] * (3.0 * x).sin();
        let op = build_1d(&v, 1.0, h, &Grid1D::fd2(80, 0.0, 1.0)).unwrap();
        let rep = dense_eigenvalues(&op, op.dim(), None).unwrap();
        prop_assert!(rep.eigenvalues.iter().all(|l| l.re >= -1e-10));
        prop_assert!(semigroup_norm(&op, t).unwrap() <= 1.0 + 1e-10);
    }

    #[test]
    fn resolvent_norm_dominates_inverse_distance(re in -1.0f64..3.0, im in -1.0f64..3.0) {
        let op = build_1d(&|x| x, 1.0, 0.1, &Grid1D::fd2(60, 0.0, 1.0)).unwrap();
        let spec = dense_eigenvalues(&op, op.dim(), None).unwrap().eigenvalues;
        let z = C64::new(re, im);
        let dist = spec.iter().map(|l| (l - z).norm()).fold(f64::INFINITY, f64::min);
        prop_assume!(dist > 1e-6);
        let r = resolvent_norm(&op, z).unwrap().norm;
        prop_assert!(r >= (1.0 - 1e-8) / dist, "{r} vs {}", 1.0 / dist);
    }
}

fn same_points(a: &[PerpPoint], b: &[PerpPoint]) -> bool {
    a.len() == b.len()
        && a.iter().all(|p| {
            b.iter().any(|q| {
                let d = (p.position[0] - q.position[0]).hypot(p.position[1] - q.position[1]);
                d < 1e-8 && (p.c - q.c).abs() < 1e-8 && (p.alpha - q.alpha).abs() < 1e-8 * (1.0 + p.alpha.abs())
            })
        })
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn perpendicular_points_ignore_orientation(a in 0.6f64..2.0, b in 0.6f64..2.0, c in prop::array::uniform5(-1.0f64..1.0)) {
        let ell = Ellipse::new(a, b).unwrap();
        let v = field(c);
        let fwd = find_perp_points(&ell, &v, 2048);
        let rev = find_perp_points(&Reversed(ell.clone()), &v, 2048);
        prop_assume!(fwd.is_ok());
        let (fwd, rev) = (fwd.unwrap(), rev.unwrap());
        prop_assert!(same_points(&fwd, &rev));
        if let (Ok(x), Ok(y)) = (select_candidates(&fwd), select_candidates(&rev)) {
            let d = (x.x0.position[0] - y.x0.position[0]).hypot(x.x0.position[1] - y.x0.position[1]);
            prop_assert!(d < 1e-8);
        }
    }

    #[test]
    fn alpha_is_the_arclength_second_derivative(a in 0.6f64..2.0, b in 0.6f64..2.0, c in prop::array::uniform5(-1.0f64..1.0)) {
        let ell = Ellipse::new(a, b).unwrap();
        let v = field(c);
        let perps = find_perp_points(&ell, &v, 2048);
        prop_assume!(perps.is_ok());
        let d = 1e-4;
        for p in perps.unwrap() {
            let fd = (on_curve(&ell, &v, p.s + d) - 2.0 * on_curve(&ell, &v, p.s) + on_curve(&ell, &v, p.s - d)) / (d * d);
            prop_assert!((fd - p.alpha).abs() <= 1e-5 * p.alpha.abs().max(1.0), "{fd} vs {}", p.alpha);
        }
    }

    #[test]
    fn rigid_motions_preserve_boundary_data(a in 0.6f64..2.0, b in 0.6f64..2.0, c in prop::array::uniform5(-1.0f64..1.0), angle in -PI..PI, dx in -2.0f64..2.0, dy in -2.0f64..2.0) {
        let ell = Ellipse::new(a, b).unwrap();
        let v = field(c);
        let moved_curve = MovedCurve { inner: ell.clone(), angle, shift: [dx, dy] };
        let moved_field = Moved { inner: v.clone(), angle, shift: [dx, dy] };
        let p0 = find_perp_points(&ell, &v, 2048);
        prop_assume!(p0.is_ok());
        let p1 = find_perp_points(&moved_curve, &moved_field, 2048).unwrap();
        match (select_candidates(&p0.unwrap()), select_candidates(&p1)) {
            (Ok(x), Ok(y)) => {
                prop_assert!((x.c_m() - y.c_m()).abs() <= 1e-8 * x.c_m().max(1.0));
                prop_assert!((x.x0.alpha - y.x0.alpha).abs() <= 1e-8 * x.x0.alpha.abs().max(1.0));
                prop_assert_eq!(x.assumption_ok, y.assumption_ok);
            }
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x.map(|c| c.x0), y.map(|c| c.x0)),
        }
    }
}
