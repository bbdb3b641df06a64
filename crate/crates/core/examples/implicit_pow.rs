//! Double-and-add in the implicit group, with query accounting.

use std::sync::Arc;

use torsor::implicit::{implicit_pow, implicit_pow_signed, pow_query_cost};
use torsor::{make_instance, ImplicitElement, ParallelOracle, SignedStrategy};

fn main() -> torsor::Result<()> {
    let inst = Arc::new(make_instance("1048576".parse()?, 7, true)?);
    let view = inst.public();
    let a = ImplicitElement::new(view.challenge_point(), view.base_point());
    let mut oracle = ParallelOracle::perfect(inst.clone());

    for n in [2u64, 3, 100, 1023, 1024, 999_999] {
        let before = oracle.query_count();
        let p = implicit_pow(&mut oracle, a, n)?;
        println!(
            "a^{n:<7} * E = {}  queries {} (predicted {})",
            p.point,
            oracle.query_count() - before,
            pow_query_cost(n)
        );
    }

    let reduced = implicit_pow_signed(&mut oracle, view, a, -12345, SignedStrategy::ReduceModExponent)?;
    let twisted = implicit_pow_signed(&mut oracle, view, a, -12345, SignedStrategy::Twist)?;
    println!("a^-12345 * E: mod lambda {}, twist {}", reduced.point, twisted.point);
    Ok(())
}
