use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use robust_design::apportion::pukelsheim_rieder;
use robust_design::criteria::{bias_given_psi, cross_check_variance, maxbias, moments, variance, worst_case_psi};
use robust_design::model::{
    build_grid_space, evaluate_regressors, orthonormalize, DesignMeasure, OrthonormalBasis, RegressorMatrix,
    RegressorSpec,
};

fn model(n: usize, degree: usize) -> (RegressorMatrix, OrthonormalBasis) {
    let space = build_grid_space(&[(-1.0, 1.0)], &[n]).unwrap();
    let f = evaluate_regressors(&RegressorSpec::polynomial(degree, true), &space).unwrap();
    let q = orthonormalize(&f).unwrap();
    (f, q)
}

/// Positive weights on every point, so every design here is admissible.
fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn sparse_weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.01f64..1.0], n).prop_filter_map("empty", |w| {
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| w.into_iter().map(|x| x / s).collect())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn basis_is_orthonormal(n in 4usize..30, degree in 0usize..4) {
        prop_assume!(degree < n);
        let (_, q) = model(n, degree);
        let g = q.matrix().transpose() * q.matrix();
        prop_assert!((g - DMatrix::identity(degree + 1, degree + 1)).amax() < 1e-12);
    }

    #[test]
    fn worst_case_contaminant_attains_maxbias(w in weights(12)) {
        let (_, q) = model(12, 2);
        let xi = DesignMeasure::new(w).unwrap();
        let b = moments(&q, &xi).unwrap();
        let psi = worst_case_psi(&q, &xi).unwrap();
        prop_assert!((psi.attained_bias - maxbias(&b)).abs() <= 1e-8 * (1.0 + maxbias(&b)));
        let direct = bias_given_psi(&q, &xi, &psi.psi0).unwrap();
        prop_assert!((direct - psi.attained_bias).abs() <= 1e-8 * (1.0 + direct));
    }

    #[test]
    fn no_contaminant_beats_the_maximum(w in weights(10), raw in prop::collection::vec(-1.0f64..1.0, 10)) {
        let (_, q) = model(10, 1);
        let xi = DesignMeasure::new(w).unwrap();
        let qm = q.matrix();
        let v = DVector::from_vec(raw);
        let psi = &v - qm * (qm.transpose() * &v);
        prop_assume!(psi.norm() > 1e-6);
        let psi = psi.normalize();
        let b = bias_given_psi(&q, &xi, &psi).unwrap();
        prop_assert!(b <= maxbias(&moments(&q, &xi).unwrap()) * (1.0 + 1e-10));
        prop_assert!(b >= 1.0 - 1e-12);
    }

    #[test]
    fn variance_matches_the_regressor_form(w in sparse_weights(15)) {
        let (f, q) = model(15, 2);
        let xi = DesignMeasure::new(w).unwrap();
        prop_assume!(q.check_admissible(&xi).is_ok());
        let Ok(b) = moments(&q, &xi) else { return Ok(()) };
        let v = variance(&b);
        prop_assert!((v - cross_check_variance(&f, &xi).unwrap()).abs() <= 1e-8 * v);
    }

    #[test]
    fn criteria_are_invariant_under_reflection(w in weights(11)) {
        let (_, q) = model(11, 2);
        let xi = DesignMeasure::new(w).unwrap();
        let perm: Vec<usize> = (0..11).rev().collect();
        let a = moments(&q, &xi).unwrap();
        let b = moments(&q, &xi.permuted(&perm)).unwrap();
        prop_assert!((variance(&a) - variance(&b)).abs() <= 1e-9 * variance(&a));
        prop_assert!((maxbias(&a) - maxbias(&b)).abs() <= 1e-9 * maxbias(&a));
    }

    #[test]
    fn criteria_bounds(w in weights(9)) {
        let (_, q) = model(9, 1);
        let b = moments(&q, &DesignMeasure::new(w).unwrap()).unwrap();
        // tr R^{-1} >= p^2 / tr R = p^2 and maxbias >= 1
        prop_assert!(variance(&b) >= 4.0 - 1e-9);
        prop_assert!(maxbias(&b) >= 1.0 - 1e-9);
    }

    #[test]
    fn apportionment_is_monotone_in_run_size(w in sparse_weights(8)) {
        let xi = DesignMeasure::new(w).unwrap();
        let l = xi.support().len();
        let mut prev = vec![0usize; 8];
        for n in l..l + 25 {
            let a = pukelsheim_rieder(&xi, n).unwrap().allocations;
            prop_assert_eq!(a.iter().sum::<usize>(), n);
            prop_assert!(a.iter().zip(&prev).all(|(x, y)| x >= y), "n={} {:?} {:?}", n, prev, a);
            for i in 0..8 {
                prop_assert_eq!(a[i] == 0, xi.weights()[i] == 0.0);
            }
            prev = a;
        }
    }

    #[test]
    fn measures_are_sanitized(w in prop::collection::vec(0.0f64..1.0, 1..20), tiny in -1e-15f64..0.0) {
        let s: f64 = w.iter().sum();
        prop_assume!(s > 0.0);
        let mut w: Vec<f64> = w.into_iter().map(|x| x / s).collect();
        w.push(tiny);
        let xi = DesignMeasure::new(w).unwrap();
        prop_assert!(xi.weights().iter().all(|&x| x >= 0.0));
        prop_assert!((xi.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn measures_reject_real_negatives_and_bad_sums() {
    assert!(DesignMeasure::new(vec![0.6, 0.6, -0.2]).is_err());
    assert!(DesignMeasure::new(vec![0.5, 0.4]).is_err());
    assert!(DesignMeasure::new(vec![f64::NAN, 1.0]).is_err());
}
