//! The full reduction on a handful of instances, with a public self-check.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torsor::reduction::{bruteforce, self_check};
use torsor::{make_instance, vectorize, BackendKind, ParallelOracle, ReductionConfig};

fn main() -> torsor::Result<()> {
    for (moduli, backend) in [
        ("2,4", BackendKind::Statevector),
        ("6,10", BackendKind::Statevector),
        ("65521", BackendKind::Ideal),
        ("256,256", BackendKind::Ideal),
    ] {
        let inst = Arc::new(make_instance(moduli.parse()?, 1, false)?);
        let mut oracle = ParallelOracle::perfect(inst.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let out = vectorize(&inst, &mut oracle, &ReductionConfig::with_backend(backend), &mut rng)?;
        let (queries, samples) = (out.total_queries(), out.samples.len());
        let g = out.recovered.expect("recovered");
        let lattice = out.lattice.expect("lattice");
        let mut check = ParallelOracle::perfect(inst.clone());
        let passed = self_check(&mut check, inst.public(), &lattice, 20, &mut rng)?;
        println!(
            "[{moduli}] {backend}: a = {:?}, {} samples, {} queries, self-check {passed}/20",
            g.exponents(),
            samples,
            queries
        );
        if inst.spec().order() <= 1 << 16 {
            assert_eq!(bruteforce(inst.public())?, g);
        }
    }
    Ok(())
}
