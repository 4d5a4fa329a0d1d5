//! Fit a single network and print its test metrics.
//!
//! `cargo run --release --example fit_one -- <r1|r2> <kl|renyi> <gamma-or-alpha> <sigma0> <steps> <features> <k> <lr> <mu0> [seed] [n]`

use std::time::Instant;

use hypersens_core::bnn::{posterior_predictive, train, HyperConfig, Objective};
use hypersens_core::dgm::{generate, standardize};
use hypersens_core::metrics::score;

fn main() {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let dgm = a[0].parse().unwrap();
    let hyper: f64 = a[2].parse().unwrap();
    let objective = match a[1].as_str() {
        "kl" => Objective::Kl { gamma: hyper },
        _ => Objective::AlphaRenyi { alpha: hyper },
    };
    let cfg = HyperConfig {
        objective,
        prior_sd: a[3].parse().unwrap(),
        optimizer_steps: a[4].parse().unwrap(),
        nn_features: a[5].parse().unwrap(),
        mc_samples: a[6].parse().unwrap(),
        learning_rate: a[7].parse().unwrap(),
        prior_mean: a[8].parse().unwrap(),
    };
    let seed: u64 = a.get(9).map(|s| s.parse().unwrap()).unwrap_or(0);
    let n: usize = a.get(10).map(|s| s.parse().unwrap()).unwrap_or(500);
    let (tr, te) = generate(dgm, n, n, seed).unwrap();
    let data = standardize(&tr, &te).unwrap();
    let t = Instant::now();
    match train(&data, &cfg, seed) {
        Ok(q) => {
            let fit = t.elapsed();
            let s =
                posterior_predictive(&q, &data.test_inputs, data.std_noise_var, 2000, 0.1, seed)
                    .unwrap();
            let (rmse, is) = score(&s, &data.test_responses).unwrap();
            let sd_mean = q.sds().iter().sum::<f64>() / q.param_count() as f64;
            println!(
                "rmse {rmse:.4} is {is:.2} (mean {:.4}) noise_floor {:.4} mean_sd {sd_mean:.4} fit {:.2?} total {:.2?}",
                is / n as f64,
                data.std_noise_var.sqrt(),
                fit,
                t.elapsed()
            );
        }
        Err(e) => println!("{e} after {:.2?}", t.elapsed()),
    }
}
