use std::collections::BTreeMap;

use proptest::prelude::*;
use quadric_asym::fields::{catalog_lookup, fd_gradient, japanese, CatalogField, CATALOG};

fn params(p: &[(&str, f64)]) -> BTreeMap<String, f64> {
    p.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn scalar(name: &str, p: &[(&str, f64)], dim: usize) -> quadric_asym::fields::ScalarField {
    catalog_lookup(name, &params(p), dim).unwrap().into_scalar().unwrap()
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(-1.0f64..1.0, dim), -2.0f64..1.5)
        .prop_map(|(v, k)| v.iter().map(|a| a * 10f64.powf(k)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn declared_bounds_hold(z in point(4)) {
        for (name, p) in [("gaussian", vec![]), ("poly_decay", vec![("p", 6.0)]), ("bump_annulus", vec![("r1", 0.5), ("r2", 2.0)])] {
            let f = scalar(name, &p, 4);
            prop_assert!(f.eval(&z).abs() <= f.bound_k * japanese(&z).powf(-f.decay_m) * (1.0 + 1e-12));
        }
        let w = catalog_lookup("poly_growth", &params(&[("r", 2.0)]), 4).unwrap().into_weight().unwrap();
        let g = w.eval(&z);
        prop_assert!(g > 0.0 && g <= w.bound_k * japanese(&z).powf(w.growth_r_star) * (1.0 + 1e-12));
    }

    #[test]
    fn analytic_gradients_match_differences(z in point(4)) {
        for (name, p) in [("gaussian", vec![("a", 0.7)]), ("poly_decay", vec![("p", 5.0)]), ("bump_annulus", vec![("r1", 0.3), ("r2", 2.5)])] {
            let f = scalar(name, &p, 4);
            prop_assert!(f.has_analytic_grad());
            let mut g = [0.0; 4];
            let mut fd = [0.0; 4];
            f.gradient(&z, &mut g);
            let ev = |x: &[f64]| f.eval(x);
            fd_gradient(&ev, &z, 1e-5, &mut fd);
            let scale = g.iter().chain(&fd).fold(1e-6f64, |m, v| m.max(v.abs()));
            for (a, b) in g.iter().zip(&fd) {
                prop_assert!((a - b).abs() <= 1e-5 * scale, "{name}: {g:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn scaling_is_exact(z in point(6), c in 0.1f64..10.0) {
        let f = scalar("gaussian", &[], 6);
        prop_assert!((f.scaled(c).eval(&z) - c * f.eval(&z)).abs() <= 1e-15 * c.max(1.0));
    }
}

#[test]
fn catalog_names_resolve_and_typos_do_not() {
    for name in CATALOG {
        let p = match name {
            "poly_decay" => params(&[("p", 4.0)]),
            "bump_annulus" => params(&[("r1", 0.5), ("r2", 1.0)]),
            "poly_growth" => params(&[("r", 1.0)]),
            _ => BTreeMap::new(),
        };
        let f = catalog_lookup(name, &p, 4).unwrap();
        let is_weight = matches!(f, CatalogField::Weight(_));
        assert_eq!(is_weight, name == "const" || name == "poly_growth");
    }
    assert!(catalog_lookup("gauss", &BTreeMap::new(), 4).is_err());
    assert!(catalog_lookup("gaussian", &params(&[("b", 1.0)]), 4).is_err());
    assert!(catalog_lookup("bump_annulus", &params(&[("r1", 2.0), ("r2", 1.0)]), 4).is_err());
}
