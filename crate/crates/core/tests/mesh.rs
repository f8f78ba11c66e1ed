use std::sync::OnceLock;

use glap::mesh::{build_mesh, gradient_per_element, interpolate, luxemburg_norm, modular, Mesh, Modular, Shape};
use glap::young::YoungFunction;
use proptest::prelude::*;

fn square() -> &'static Mesh {
    static M: OnceLock<Mesh> = OnceLock::new();
    M.get_or_init(|| {
        build_mesh(
            &Shape::Rectangle {
                ax: 0.0,
                bx: 1.0,
                ay: 0.0,
                by: 1.0,
            },
            0.125,
        )
        .unwrap()
    })
}

fn field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, square().n_vertices())
}

fn young() -> impl Strategy<Value = YoungFunction> {
    prop_oneof![
        (1.3f64..4.0).prop_map(|p| YoungFunction::power(p).unwrap()),
        (1.3f64..3.0, 0.2f64..1.5).prop_map(|(p, a)| YoungFunction::plog(p, a).unwrap()),
    ]
}

fn which() -> impl Strategy<Value = Modular> {
    prop_oneof![Just(Modular::PhiG), Just(Modular::Phi1G)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn unit_ball(u in field(), yf in young(), w in which(), c in 0.01f64..3.0) {
        let m = square();
        let u: Vec<f64> = u.iter().map(|x| c * x).collect();
        let n = luxemburg_norm(m, &u, &yf, w).unwrap();
        let scaled: Vec<f64> = u.iter().map(|x| x / n).collect();
        prop_assert!(modular(m, &scaled, &yf, w).unwrap() <= 1.0);
        if n <= 1.0 {
            prop_assert!(modular(m, &u, &yf, w).unwrap() <= 1.0);
        }
    }

    #[test]
    fn homogeneity(u in field(), yf in young(), w in which(), c in -20.0f64..20.0) {
        let m = square();
        let n = luxemburg_norm(m, &u, &yf, w).unwrap();
        let cu: Vec<f64> = u.iter().map(|x| c * x).collect();
        let nc = luxemburg_norm(m, &cu, &yf, w).unwrap();
        prop_assert!((nc - c.abs() * n).abs() <= 1e-8 * (1.0 + c.abs() * n), "{nc} vs {}", c.abs() * n);
    }

    #[test]
    fn triangle_inequality(u in field(), v in field(), yf in young(), w in which()) {
        let m = square();
        let s: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let ns = luxemburg_norm(m, &s, &yf, w).unwrap();
        let nu = luxemburg_norm(m, &u, &yf, w).unwrap();
        let nv = luxemburg_norm(m, &v, &yf, w).unwrap();
        prop_assert!(ns <= nu + nv + 1e-8);
    }

    #[test]
    fn gradient_is_linear(u in field(), v in field(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let m = square();
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (gu, gv, gw) = (
            gradient_per_element(m, &u).unwrap(),
            gradient_per_element(m, &v).unwrap(),
            gradient_per_element(m, &w).unwrap(),
        );
        for e in 0..gw.len() {
            for k in 0..2 {
                let lin = a * gu[e][k] + b * gv[e][k];
                prop_assert!((gw[e][k] - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
            }
        }
    }

    #[test]
    fn interpolation_reproduces_affine_fields(
        c in -3.0f64..3.0, a in -3.0f64..3.0, b in -3.0f64..3.0,
        pts in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..20),
    ) {
        let m = square();
        let lin = |x: [f64; 2]| c + a * x[0] + b * x[1];
        let u = m.field_from(lin);
        let points: Vec<[f64; 2]> = pts.into_iter().map(|(x, y)| [x, y]).collect();
        let it = interpolate(m, &u, &points).unwrap();
        prop_assert!(it.clamped.is_empty());
        for (x, val) in points.iter().zip(&it.values) {
            prop_assert!((val - lin(*x)).abs() <= 1e-12 * (1.0 + lin(*x).abs()));
        }
    }
}

#[test]
fn interpolation_is_exact_at_vertices() {
    let m = square();
    let u: Vec<f64> = (0..m.n_vertices()).map(|v| (v as f64 * 0.37).sin()).collect();
    let it = interpolate(m, &u, m.vertices()).unwrap();
    for (a, b) in it.values.iter().zip(&u) {
        assert!((a - b).abs() <= 1e-14);
    }
}

#[test]
fn interpolation_error_on_a_parabola() {
    let m = build_mesh(&Shape::Interval { a: 0.0, b: 1.0 }, 1.0 / 128.0).unwrap();
    let u = m.field_from(|x| x[0] * x[0]);
    let v = interpolate(&m, &u, &[[0.5, 0.0], [0.3, 0.0]]).unwrap();
    assert!((v.values[0] - 0.25).abs() <= 1e-4);
    // Linear interpolation of x^2 errs by at most h^2 / 4.
    assert!((v.values[1] - 0.09).abs() <= 0.25 / (128.0 * 128.0) + 1e-15);
}
