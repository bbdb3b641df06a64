//! Fourier sampling on the exact state vector next to the ideal sampler.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torsor::hsp::{FCircuit, IdealSampler, StatevectorSampler, DEFAULT_STATEVEC_CAP};
use torsor::{make_instance, FourierSampler, ImplicitElement, ParallelOracle};

fn main() -> torsor::Result<()> {
    let inst = Arc::new(make_instance("2,4".parse()?, 5, false)?);
    let view = inst.public();
    let a = ImplicitElement::new(view.challenge_point(), view.base_point());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut oracle = ParallelOracle::perfect(inst.clone());

    let circuit = FCircuit::build(&mut oracle, view, a)?;
    println!("ladder {} queries, {} per shot", circuit.ladder_cost(), circuit.shot_cost());
    let cost = circuit.shot_cost();
    let mut sv = StatevectorSampler::new(view, circuit, DEFAULT_STATEVEC_CAP)?;
    let state = sv.prepare(&mut oracle, &mut rng)?;
    println!("state dimension {}, norm {:.12}", state.dimension(), state.norm_sqr());

    let mut ideal = IdealSampler::new(&inst, cost);
    for (name, draws) in [
        ("statevector", sv.sample(&mut oracle, 4000, &mut rng)?),
        ("ideal", ideal.sample(&mut oracle, 4000, &mut rng)?),
    ] {
        let mut hist = BTreeMap::new();
        for d in draws {
            *hist.entry(d.residues().to_vec()).or_insert(0) += 1;
        }
        println!("{name}: {hist:?}");
    }
    println!("queries charged: {}", oracle.query_count());
    Ok(())
}
