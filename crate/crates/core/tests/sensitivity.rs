use std::collections::BTreeMap;
use std::f64::consts::PI;

use hypersens_core::design::lhs_unit;
use hypersens_core::rng::rng_from_seed;
use hypersens_core::sensitivity::{
    ishigami, main_effects, saltelli_evaluations, sobol_indices, Axis, ConstantSurface, FnSurface,
    MainEffectOptions, ResponseSurface, SensitivityReport,
};
use hypersens_core::surrogate::{
    fit, GpHyperState, GpPredictor, McmcSchedule, SurrogateTrainingSet,
};
use proptest::prelude::*;

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}

/// Analytic Ishigami decomposition: (S1, S2, S3, T1, T2, T3).
fn ishigami_truth(a: f64, b: f64) -> [f64; 6] {
    let pi4 = PI.powi(4);
    let pi8 = PI.powi(8);
    let v1 = 0.5 * (1.0 + b * pi4 / 5.0).powi(2);
    let v2 = a * a / 8.0;
    let v13 = 8.0 * b * b * pi8 / 225.0;
    let v = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi8 / 18.0 + 0.5;
    assert!((v - (v1 + v2 + v13)).abs() < 1e-9);
    [v1 / v, v2 / v, 0.0, (v1 + v13) / v, v2 / v, v13 / v]
}

#[test]
fn ishigami_oracle_values() {
    let t = ishigami_truth(7.0, 0.1);
    assert!((t[0] - 0.3139).abs() < 1e-4);
    assert!((t[1] - 0.4424).abs() < 1e-4);
    assert!((t[5] - 0.2437).abs() < 1e-4);
}

#[test]
fn single_variable_function() {
    let f = FnSurface {
        dim: 7,
        f: |x: &[f64]| x[0],
    };
    let idx = sobol_indices(&[f], &names(7), 10_000, 3).unwrap();
    for j in 0..7 {
        let want = if j == 0 { 1.0 } else { 0.0 };
        assert!((idx.first[j].unwrap().mean - want).abs() < 0.02, "S{j}");
        assert!((idx.total[j].unwrap().mean - want).abs() < 0.02, "T{j}");
    }
}

#[test]
fn additive_function_splits_by_squared_weights() {
    let f = FnSurface {
        dim: 7,
        f: |x: &[f64]| x[0] + 2.0 * x[1],
    };
    let idx = sobol_indices(&[f], &names(7), 10_000, 4).unwrap();
    let want = [0.2, 0.8, 0.0, 0.0, 0.0, 0.0, 0.0];
    for j in 0..7 {
        assert!((idx.first[j].unwrap().mean - want[j]).abs() < 0.03, "S{j}");
        assert!((idx.total[j].unwrap().mean - want[j]).abs() < 0.03, "T{j}");
    }
}

#[test]
fn ishigami_direct_matches_analytic() {
    let truth = ishigami_truth(7.0, 0.1);
    let idx = sobol_indices(&[ishigami(7.0, 0.1)], &names(3), 100_000, 5).unwrap();
    for j in 0..3 {
        assert!((idx.first[j].unwrap().mean - truth[j]).abs() < 0.02, "S{j}");
    }
    assert!((idx.total[2].unwrap().mean - truth[5]).abs() < 0.02, "T3");
}

#[test]
fn zero_variance_is_undefined() {
    let c = ConstantSurface { dim: 4, value: 3.5 };
    let idx = sobol_indices(&[c], &names(4), 1000, 1).unwrap();
    assert!(idx.first.iter().chain(&idx.total).all(|v| v.is_none()));
    assert_eq!(idx.undefined_draws(), 1);
}

#[test]
fn too_few_samples_rejected() {
    let c = ConstantSurface { dim: 2, value: 0.0 };
    assert!(sobol_indices(&[c], &names(2), 999, 1).is_err());
    assert!(main_effects(
        &[c],
        &Axis::unit(&["a", "b"]),
        MainEffectOptions {
            grid: 4,
            samples: 100
        },
        0
    )
    .is_err());
    assert!(main_effects(
        &[c],
        &Axis::unit(&["a", "b"]),
        MainEffectOptions {
            grid: 5,
            samples: 99
        },
        0
    )
    .is_err());
}

#[test]
fn main_effect_of_sum_is_shifted_identity() {
    let f = FnSurface {
        dim: 7,
        f: |x: &[f64]| x[0] + x[1],
    };
    let axes = Axis::unit(&["a", "b", "c", "d", "e", "f", "g"]);
    let curves = main_effects(&[f], &axes, MainEffectOptions::default(), 2).unwrap();
    for (g, v) in curves[0].grid.iter().zip(&curves[0].mean_curve) {
        // the LHS column mean of x1 is 0.5 up to O(1/M)
        assert!((v - (g + 0.5)).abs() < 2e-3, "{v} vs {}", g + 0.5);
    }
    assert_eq!(curves[0].argmin, 0.0);
    for c in &curves[2..] {
        assert!(c.range() < 1e-12);
    }
}

#[test]
fn constant_surface_has_flat_zero_width_curves() {
    let c = ConstantSurface {
        dim: 3,
        value: -1.25,
    };
    let curves = main_effects(
        &[c],
        &Axis::unit(&["a", "b", "c"]),
        MainEffectOptions::default(),
        0,
    )
    .unwrap();
    for curve in &curves {
        assert!(curve.mean_curve.iter().all(|v| *v == -1.25));
        assert_eq!(curve.q05, curve.q95);
    }
}

#[test]
fn grid_spans_axis_range() {
    let f = FnSurface {
        dim: 2,
        f: |x: &[f64]| x[0],
    };
    let axes = vec![
        Axis {
            name: "lr".into(),
            lower: -3.3,
            upper: -0.3,
        },
        Axis {
            name: "mu".into(),
            lower: -2.0,
            upper: 2.0,
        },
    ];
    let curves = main_effects(&[f], &axes, MainEffectOptions::default(), 0).unwrap();
    assert_eq!(curves[0].grid.len(), 21);
    assert!((curves[0].grid[0] + 3.3).abs() < 1e-12 && (curves[0].grid[20] + 0.3).abs() < 1e-12);
    assert!(curves[0].grid.windows(2).all(|w| w[1] > w[0]));
}

/// A GP predictor seen only through evaluation, so main effects use the
/// generic sample-averaging path.
struct Opaque<'a>(&'a GpPredictor);

impl ResponseSurface for Opaque<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }

    fn eval_batch(&self, points: &[f64], out: &mut [f64]) {
        self.0.predict_into(points, out)
    }
}

fn fitted_gp(n: usize, seed: u64) -> (SurrogateTrainingSet, Vec<GpPredictor>) {
    let mut rng = rng_from_seed(seed);
    let x = lhs_unit(n, 3, &mut rng);
    let y: Vec<f64> = x
        .chunks(3)
        .map(|r| (4.0 * r[0]).sin() + r[1] * r[2])
        .collect();
    let t = SurrogateTrainingSet::from_unit(&x, 3, &y).unwrap();
    let post = fit(
        &t,
        McmcSchedule {
            burn: 200,
            total: 700,
            thin: 50,
        },
        seed,
    )
    .unwrap();
    let preds = post
        .draws
        .iter()
        .map(|s| GpPredictor::new(s, &t).unwrap())
        .collect();
    (t, preds)
}

#[test]
fn factorized_gp_main_effect_matches_sample_average() {
    let (_, preds) = fitted_gp(40, 1);
    let axes = Axis::unit(&["a", "b", "c"]);
    let opts = MainEffectOptions {
        grid: 11,
        samples: 300,
    };
    let fast = main_effects(&preds, &axes, opts, 9).unwrap();
    let slow: Vec<Opaque> = preds.iter().map(Opaque).collect();
    let slow = main_effects(&slow, &axes, opts, 9).unwrap();
    for (a, b) in fast.iter().zip(&slow) {
        for (u, v) in a.mean_curve.iter().zip(&b.mean_curve) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
    }
}

#[test]
fn ishigami_through_gp_surrogate() {
    let truth = ishigami_truth(7.0, 0.1);
    let f = ishigami(7.0, 0.1);
    let mut rng = rng_from_seed(21);
    let x = lhs_unit(300, 3, &mut rng);
    let mut y = vec![0.0; 300];
    f.eval_batch(&x, &mut y);
    let t = SurrogateTrainingSet::from_unit(&x, 3, &y).unwrap();
    let post = fit(
        &t,
        McmcSchedule {
            burn: 300,
            total: 1300,
            thin: 20,
        },
        3,
    )
    .unwrap();
    let preds: Vec<GpPredictor> = post
        .draws
        .iter()
        .map(|s| GpPredictor::new(s, &t).unwrap())
        .collect();
    let idx = sobol_indices(&preds, &names(3), 10_000, 4).unwrap();
    for j in 0..3 {
        assert!(
            (idx.first[j].unwrap().mean - truth[j]).abs() < 0.10,
            "S{j} {:?}",
            idx.first[j]
        );
    }
    assert!(
        (idx.total[2].unwrap().mean - truth[5]).abs() < 0.10,
        "T3 {:?}",
        idx.total[2]
    );
}

#[test]
fn indices_respect_bounds_within_bootstrap_error() {
    let f = FnSurface {
        dim: 4,
        f: |x: &[f64]| x[0] * x[1] + (3.0 * x[2]).sin() + 0.1 * x[3],
    };
    let ev = saltelli_evaluations(&f, 4000, 7);
    let est = ev.estimate().unwrap();
    let (se_s, se_t, se_sum) = ev.bootstrap_se(200, 1).unwrap();
    assert!(est.first.iter().sum::<f64>() <= 1.0 + 3.0 * se_sum);
    for j in 0..4 {
        let eps = 3.0 * (se_s[j] + se_t[j]);
        assert!(est.total[j] >= est.first[j] - eps, "dim {j}");
    }
}

#[test]
fn affine_response_map_leaves_indices_and_argmin_unchanged() {
    let f = FnSurface {
        dim: 3,
        f: |x: &[f64]| (x[0] - 0.3).powi(2) + x[1] * x[2],
    };
    let g = FnSurface {
        dim: 3,
        f: |x: &[f64]| 4.0 * ((x[0] - 0.3).powi(2) + x[1] * x[2]) - 7.0,
    };
    let a = sobol_indices(&[f], &names(3), 5000, 2).unwrap();
    let b = sobol_indices(&[g], &names(3), 5000, 2).unwrap();
    for j in 0..3 {
        assert!((a.first[j].unwrap().mean - b.first[j].unwrap().mean).abs() < 1e-9);
        assert!((a.total[j].unwrap().mean - b.total[j].unwrap().mean).abs() < 1e-9);
    }
    let f = FnSurface {
        dim: 3,
        f: |x: &[f64]| (x[0] - 0.3).powi(2) + x[1] * x[2],
    };
    let g = FnSurface {
        dim: 3,
        f: |x: &[f64]| 4.0 * ((x[0] - 0.3).powi(2) + x[1] * x[2]) - 7.0,
    };
    let axes = Axis::unit(&["a", "b", "c"]);
    let ca = main_effects(&[f], &axes, MainEffectOptions::default(), 3).unwrap();
    let cb = main_effects(&[g], &axes, MainEffectOptions::default(), 3).unwrap();
    for (u, v) in ca.iter().zip(&cb) {
        assert_eq!(u.argmin, v.argmin);
    }
    assert!((ca[0].argmin - 0.3).abs() < 1e-12);
}

#[test]
fn additive_inactive_dimension_is_flat() {
    let f = FnSurface {
        dim: 3,
        f: |x: &[f64]| 3.0 * x[0] + (2.0 * x[1]).exp(),
    };
    let curves = main_effects(
        &[f],
        &Axis::unit(&["a", "b", "c"]),
        MainEffectOptions::default(),
        5,
    )
    .unwrap();
    let range = curves[0].range() + curves[1].range();
    assert!(curves[2].range() < 0.05 * range);
}

#[test]
fn report_round_trips_and_passes_indices_through() {
    let f = ishigami(7.0, 0.1);
    let n = names(3);
    let idx = sobol_indices(&[&f], &n, 2000, 5).unwrap();
    let curves = main_effects(
        &[&f],
        &Axis::unit(&["x0", "x1", "x2"]),
        MainEffectOptions::default(),
        5,
    )
    .unwrap();
    let mut meta = BTreeMap::new();
    meta.insert("seed".to_string(), "5".to_string());
    let r = SensitivityReport::new(curves, idx.clone(), meta).unwrap();
    assert_eq!(r.indices, idx);
    let back = SensitivityReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    let mut csv = Vec::new();
    r.write_index_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with(&r.cell(0)));
}

#[test]
fn constant_report_is_undefined_and_flat() {
    let c = ConstantSurface { dim: 1, value: 2.0 };
    let idx = sobol_indices(&[c], &names(1), 1000, 0).unwrap();
    let curves = main_effects(&[c], &Axis::unit(&["x0"]), MainEffectOptions::default(), 0).unwrap();
    let r = SensitivityReport::new(curves, idx, BTreeMap::new()).unwrap();
    assert_eq!(r.cell(0), "NA(NA)");
    assert_eq!(r.curves[0].range(), 0.0);
    let back = SensitivityReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn fixed_gp_state_curve_bands_are_ordered() {
    let (t, _) = fitted_gp(30, 4);
    let states: Vec<GpPredictor> = [0.2, 0.4, 0.8]
        .iter()
        .map(|l| {
            let s = GpHyperState {
                lengthscales: vec![*l; 3],
                signal_var: 1.0,
                nugget: 0.01,
                linear_coeffs: vec![0.0; 4],
            };
            GpPredictor::new(&s, &t).unwrap()
        })
        .collect();
    let curves = main_effects(
        &states,
        &Axis::unit(&["a", "b", "c"]),
        MainEffectOptions::default(),
        1,
    )
    .unwrap();
    for c in &curves {
        for i in 0..c.grid.len() {
            assert!(c.q05[i] <= c.mean_curve[i] + 1e-12 && c.mean_curve[i] <= c.q95[i] + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sobol_is_seed_deterministic(seed in any::<u64>()) {
        let f = ishigami(7.0, 0.1);
        let a = sobol_indices(&[&f], &names(3), 1000, seed).unwrap();
        let b = sobol_indices(&[&f], &names(3), 1000, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn affine_invariance_of_indices(scale in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let f = FnSurface { dim: 2, f: |x: &[f64]| x[0] * x[0] + 0.5 * x[1] };
        let g = FnSurface { dim: 2, f: move |x: &[f64]| scale * (x[0] * x[0] + 0.5 * x[1]) + shift };
        let a = sobol_indices(&[f], &names(2), 1000, 1).unwrap();
        let b = sobol_indices(&[g], &names(2), 1000, 1).unwrap();
        for j in 0..2 {
            prop_assert!((a.first[j].unwrap().mean - b.first[j].unwrap().mean).abs() < 1e-6);
            prop_assert!((a.total[j].unwrap().mean - b.total[j].unwrap().mean).abs() < 1e-6);
        }
    }
}
