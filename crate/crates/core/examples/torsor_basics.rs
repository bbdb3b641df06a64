//! Build an instance, act on points, and save it to JSON.

use torsor::{make_instance, GroupSpec, InstanceFile};

fn main() -> torsor::Result<()> {
    let spec: GroupSpec = "6,10".parse()?;
    let inst = make_instance(spec, 42, true)?;
    let s = inst.spec();
    println!("G = Z/6 x Z/10, |G| = {}, exponent {}", s.order(), s.exponent());
    println!("E     = {}", inst.base_point());
    println!("a * E = {}", inst.challenge_point());

    let g = s.element(&[1, -3])?;
    let x = inst.act(&g, inst.base_point())?;
    println!("(1, 7) * E = {x}");
    println!("twist: {}", inst.twist(x)?);

    let mut json = Vec::new();
    InstanceFile::describe(&inst, false).write_to(&mut json)?;
    println!("{}", String::from_utf8_lossy(&json));
    Ok(())
}
