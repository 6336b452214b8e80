//! Solver checks against independent oracles: subset enumeration, a dual
//! certificate built from the returned basis, and equivariance.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qroc_core::qreg::{fit_path, fit_quantile, fit_quantile_warm, objective};
use qroc_core::Sample;

fn pinball(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

/// Minimum of the check loss over all exact fits through `p + 1` points.
fn brute_force(y: &[f64], x: &[Vec<f64>], rho: f64) -> f64 {
    let n = y.len();
    let k = x[0].len();
    let tau = 1.0 - rho;
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let a = DMatrix::from_fn(k, k, |r, c| x[idx[r]][c]);
        let b = DVector::from_iterator(k, idx.iter().map(|&i| y[i]));
        if a.determinant().abs() > 1e-10 {
            if let Some(beta) = a.lu().solve(&b) {
                let loss: f64 = (0..n)
                    .map(|i| pinball(y[i] - x[i].iter().zip(beta.iter()).map(|(u, v)| u * v).sum::<f64>(), tau))
                    .sum();
                best = best.min(loss);
            }
        }
        // next combination
        let mut j = k;
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            if idx[j] < n - k + j {
                idx[j] += 1;
                for t in j + 1..k {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>, f64)> {
    (8usize..20, 0usize..3, 0.15f64..0.85).prop_flat_map(|(n, p, rho)| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, p), n),
            Just(rho),
        )
    })
}

fn augmented(z: &[Vec<f64>]) -> Vec<Vec<f64>> {
    z.iter()
        .map(|r| std::iter::once(1.0).chain(r.iter().copied()).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_matches_enumeration((y, z, rho) in instance()) {
        let cases = Sample::new(y.clone(), &z).unwrap();
        let fit = match fit_quantile(&cases, rho) {
            Ok(f) => f,
            Err(_) => return Ok(()), // rank-deficient draw
        };
        let best = brute_force(&y, &augmented(&z), rho);
        prop_assert!((fit.objective - best).abs() <= 1e-9 * best.abs().max(1.0), "{} vs {}", fit.objective, best);
    }

    #[test]
    fn basis_yields_a_dual_certificate((y, z, rho) in instance()) {
        let cases = Sample::new(y.clone(), &z).unwrap();
        let Ok(fit) = fit_quantile(&cases, rho) else { return Ok(()) };
        let x = augmented(&z);
        let k = x[0].len();
        // nonbasic weights from residual signs, basic ones from the balance equations
        let mut a = vec![0.0; y.len()];
        for i in 0..y.len() {
            if fit.basis.contains(&i) { continue; }
            let r = y[i] - x[i].iter().zip(&fit.beta).map(|(u, v)| u * v).sum::<f64>();
            a[i] = if r > 0.0 { 1.0 } else { 0.0 };
        }
        let mut rhs: Vec<f64> = (0..k).map(|c| rho * x.iter().map(|r| r[c]).sum::<f64>()).collect();
        for (i, row) in x.iter().enumerate() {
            for c in 0..k { rhs[c] -= a[i] * row[c]; }
        }
        let xb = DMatrix::from_fn(k, k, |c, j| x[fit.basis[j]][c]);
        let ab = xb.lu().solve(&DVector::from_vec(rhs)).expect("basis is nonsingular");
        for (j, &i) in fit.basis.iter().enumerate() {
            prop_assert!(ab[j] > -1e-9 && ab[j] < 1.0 + 1e-9, "basic weight {} out of bounds", ab[j]);
            a[i] = ab[j];
        }
        let dual: f64 = y.iter().zip(&a).map(|(yi, ai)| yi * ai).sum::<f64>() - rho * y.iter().sum::<f64>();
        prop_assert!((dual - fit.objective).abs() <= 1e-9 * fit.objective.abs().max(1.0));
    }

    #[test]
    fn regression_and_scale_equivariance((y, z, rho) in instance(), c in 0.1f64..10.0, shift in -3.0f64..3.0) {
        let cases = Sample::new(y.clone(), &z).unwrap();
        let Ok(fit) = fit_quantile(&cases, rho) else { return Ok(()) };
        let gamma: Vec<f64> = (0..=z[0].len()).map(|k| shift * (k as f64 + 1.0)).collect();
        let moved: Vec<f64> = y.iter().zip(augmented(&z)).map(|(yi, xi)| {
            c * yi + xi.iter().zip(&gamma).map(|(u, v)| u * v).sum::<f64>()
        }).collect();
        let moved_cases = Sample::new(moved, &z).unwrap();
        let mapped: Vec<f64> = fit.beta.iter().zip(&gamma).map(|(b, g)| c * b + g).collect();
        let refit = fit_quantile(&moved_cases, rho).unwrap();
        // the mapped solution is optimal for the transformed data
        let at_mapped = objective(&moved_cases, &mapped, rho);
        prop_assert!((refit.objective - at_mapped).abs() <= 1e-8 * at_mapped.abs().max(1.0));
        prop_assert!((refit.objective - c * fit.objective).abs() <= 1e-8 * refit.objective.abs().max(1.0));
    }

    #[test]
    fn warm_start_agrees_with_cold((y, z, rho) in instance(), other in 0.15f64..0.85) {
        let cases = Sample::new(y, &z).unwrap();
        let (Ok(a), Ok(b)) = (fit_quantile(&cases, rho), fit_quantile(&cases, other)) else { return Ok(()) };
        let warm = fit_quantile_warm(&cases, rho, &b.beta).unwrap();
        prop_assert!((warm.objective - a.objective).abs() <= 1e-9 * a.objective.abs().max(1.0));
    }

    #[test]
    fn path_is_optimal_between_knots((y, z, _rho) in instance()) {
        let cases = Sample::new(y, &z).unwrap();
        let Ok(path) = fit_path(&cases, 0.2, 0.8) else { return Ok(()) };
        prop_assert!(path.breakpoints.windows(2).all(|w| w[0] < w[1]));
        for k in 0..=24 {
            let rho = 0.2 + 0.6 * k as f64 / 24.0;
            let direct = fit_quantile(&cases, rho).unwrap().objective;
            let on_path = objective(&cases, path.eval(rho), rho);
            prop_assert!((on_path - direct).abs() <= 1e-9 * direct.abs().max(1.0), "rho {}: {} vs {}", rho, on_path, direct);
        }
    }
}

#[test]
fn hand_example_median() {
    let cases = Sample::markers_only(vec![3.0, 1.0, 2.0, 10.0, 4.0]).unwrap();
    let fit = fit_quantile(&cases, 0.5).unwrap();
    assert_eq!(fit.beta, vec![3.0]);
    assert_eq!(fit.objective, 0.5 * (2.0 + 1.0 + 7.0 + 1.0));
}
