use hypersens_core::bnn::Divergence;
use hypersens_core::design::{lhs, DesignSpace};
use proptest::prelude::*;

/// Upper-tail probability of the Kolmogorov distribution.
fn kolmogorov_sf(x: f64) -> f64 {
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        s += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * x * x).exp();
    }
    s.clamp(0.0, 1.0)
}

fn ks_statistic(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| ((i as f64 + 1.0) / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

fn strata(unit: &[f64], d: usize, j: usize, n: usize) -> Vec<usize> {
    let mut s: Vec<usize> = unit
        .chunks(d)
        .map(|r| (r[j] * n as f64).floor() as usize)
        .collect();
    s.sort_unstable();
    s
}

#[test]
fn one_point_per_stratum() {
    for div in [Divergence::Kl, Divergence::AlphaRenyi] {
        let space = DesignSpace::standard(div);
        for n in [10, 750] {
            let d = lhs(&space, n, 11).unwrap();
            for j in 0..7 {
                assert_eq!(strata(&d.unit, 7, j, n), (0..n).collect::<Vec<_>>());
            }
        }
    }
}

#[test]
fn ten_point_design_hits_each_decile_in_design_units() {
    let space = DesignSpace::standard(Divergence::Kl);
    let d = lhs(&space, 10, 2).unwrap();
    // continuous dimensions only; integer ones are rounded
    for j in [0, 1, 5, 6] {
        let dim = &space.dims[j];
        let mut dec: Vec<usize> = (0..10)
            .map(|i| (dim.to_unit(d.row(i)[j]) * 10.0).floor() as usize)
            .collect();
        dec.sort_unstable();
        assert_eq!(dec, (0..10).collect::<Vec<_>>());
    }
}

#[test]
fn marginals_pass_ks_at_one_percent() {
    let space = DesignSpace::standard(Divergence::Kl);
    let n = 750;
    let d = lhs(&space, n, 5).unwrap();
    for j in 0..7 {
        let col: Vec<f64> = d.unit.chunks(7).map(|r| r[j]).collect();
        let stat = ks_statistic(col);
        let p = kolmogorov_sf((n as f64).sqrt() * stat);
        assert!(p > 0.01, "dimension {j}: D = {stat}, p = {p}");
    }
}

#[test]
fn deterministic_in_seed() {
    let space = DesignSpace::standard(Divergence::AlphaRenyi);
    assert_eq!(lhs(&space, 50, 1).unwrap(), lhs(&space, 50, 1).unwrap());
    assert_ne!(
        lhs(&space, 50, 1).unwrap().rows,
        lhs(&space, 50, 2).unwrap().rows
    );
}

#[test]
fn log_dimensions_are_exponentiated() {
    let space = DesignSpace::standard(Divergence::Kl);
    let d = lhs(&space, 100, 3).unwrap();
    let cfgs = hypersens_core::design::to_configs(&d, Divergence::Kl).unwrap();
    for (i, c) in cfgs.iter().enumerate() {
        let r = d.row(i);
        assert!((c.gamma().unwrap().log10() - r[0]).abs() < 1e-12);
        assert!((c.learning_rate.log10() - r[5]).abs() < 1e-12);
        assert!((0.0005..0.502).contains(&c.learning_rate));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stratification_holds(n in 1usize..300, seed in any::<u64>()) {
        let space = DesignSpace::standard(Divergence::Kl);
        let d = lhs(&space, n, seed).unwrap();
        for j in 0..7 {
            prop_assert_eq!(strata(&d.unit, 7, j, n), (0..n).collect::<Vec<_>>());
        }
    }
}
