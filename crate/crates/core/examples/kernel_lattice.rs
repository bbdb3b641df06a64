//! Smith normal form and kernel reconstruction from character samples.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use torsor::hsp::{secret_kernel, IdealSampler};
use torsor::lattice::{extract_alpha, kernel_from_samples, snf, verify_contains_relations};
use torsor::{make_instance, DomainGroup, FourierSampler, IntegerMatrix, ParallelOracle};

fn main() -> torsor::Result<()> {
    let m = IntegerMatrix::from_rows(3, &[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
    let s = snf(&m);
    println!("invariant factors {:?}", s.invariant_factors());

    let inst = Arc::new(make_instance("6,10".parse()?, 11, false)?);
    let domain = DomainGroup::new(inst.spec());
    let mut oracle = ParallelOracle::perfect(inst.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let samples = IdealSampler::new(&inst, 0).sample(&mut oracle, 12, &mut rng)?;

    let lattice = kernel_from_samples(&samples, domain.moduli_ext());
    println!("kernel basis:\n{}", lattice.basis());
    println!("relations contained: {}", verify_contains_relations(&lattice));
    println!("matches hidden kernel: {}", lattice.same_as(&secret_kernel(&inst)));
    println!("recovered {:?}, secret {:?}", extract_alpha(&lattice, inst.spec())?.exponents(), inst.secret_alpha().exponents());
    Ok(())
}
