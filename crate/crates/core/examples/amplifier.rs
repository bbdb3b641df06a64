//! Majority-vote amplification of a noisy oracle.

use std::sync::Arc;

use torsor::reduction::{amplifier_experiment, majority_failure_bound};
use torsor::{make_instance, NoiseModel};

fn main() -> torsor::Result<()> {
    let inst = Arc::new(make_instance("4,16".parse()?, 3, false)?);
    for alpha in [0.6, 0.75, 0.9] {
        for k in [1, 5, 15] {
            let rep = amplifier_experiment(inst.clone(), alpha, NoiseModel::AdversarialFixed, k, 2000, 1)?;
            println!(
                "alpha {alpha:.2} k {k:>2}: amplified {:.4}, single {:.4}, tail {:.2e}",
                rep.empirical_failure_rate,
                rep.single_query_failures as f64 / rep.trials as f64,
                majority_failure_bound(alpha, k)
            );
        }
    }
    Ok(())
}
