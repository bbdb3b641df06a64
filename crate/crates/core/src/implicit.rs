//! Arithmetic in the implicit group on `X`: with `E` fixed, the point
//! `a^x * E` stands for the exponent `x`, and the parallelization oracle
//! adds exponents.

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::oracle::ParallelOracle;
use crate::torsor::{PublicView, SpacePoint};

/// A point `a^x * E` together with the base `E` it is measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ImplicitElement {
    pub point: SpacePoint,
    pub base: SpacePoint,
}

impl ImplicitElement {
    pub fn new(point: SpacePoint, base: SpacePoint) -> Self {
        Self { point, base }
    }

    /// `E` itself, the implicit identity.
    pub fn identity(base: SpacePoint) -> Self {
        Self { point: base, base }
    }
}

/// How to handle a negative exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SignedStrategy {
    /// Use `n mod lcm(d_1, ..., d_r)`.
    #[default]
    ReduceModExponent,
    /// Compute `a^|n| * E` and twist it. Needs the twist capability.
    Twist,
}

/// `a^(x+y) * E` from `a^x * E` and `a^y * E`. One query.
pub fn implicit_mul(
    oracle: &mut ParallelOracle,
    u: ImplicitElement,
    v: ImplicitElement,
) -> Result<ImplicitElement> {
    if u.base != v.base {
        return Err(Error::MismatchedBase);
    }
    let point = oracle.parallelize(u.base, u.point, v.point)?;
    Ok(ImplicitElement::new(point, u.base))
}

/// Left-to-right double-and-add. Costs `floor(log2 n)` doublings plus
/// `popcount(n) - 1` additions; nothing for `n < 2`.
pub fn implicit_pow(
    oracle: &mut ParallelOracle,
    a: ImplicitElement,
    n: u64,
) -> Result<ImplicitElement> {
    if n == 0 {
        return Ok(ImplicitElement::identity(a.base));
    }
    let top = 63 - n.leading_zeros();
    let mut acc = a;
    for bit in (0..top).rev() {
        acc = implicit_mul(oracle, acc, acc)?;
        if (n >> bit) & 1 == 1 {
            acc = implicit_mul(oracle, acc, a)?;
        }
    }
    Ok(acc)
}

/// Query count of [`implicit_pow`] for exponent `n`.
pub fn pow_query_cost(n: u64) -> u64 {
    if n < 2 {
        0
    } else {
        (63 - n.leading_zeros()) as u64 + n.count_ones() as u64 - 1
    }
}

/// `a^n * E` for any signed `n`.
pub fn implicit_pow_signed(
    oracle: &mut ParallelOracle,
    view: PublicView<'_>,
    a: ImplicitElement,
    n: i128,
    strategy: SignedStrategy,
) -> Result<ImplicitElement> {
    if n >= 0 {
        return reduced_pow(oracle, view.spec(), a, n);
    }
    match strategy {
        SignedStrategy::ReduceModExponent => reduced_pow(oracle, view.spec(), a, n),
        SignedStrategy::Twist => {
            if !view.twist_enabled() {
                return Err(Error::TwistUnavailable);
            }
            let pos = reduced_pow(oracle, view.spec(), a, -n)?;
            Ok(ImplicitElement::new(view.twist(pos.point)?, a.base))
        }
    }
}

fn reduced_pow(
    oracle: &mut ParallelOracle,
    spec: &GroupSpec,
    a: ImplicitElement,
    n: i128,
) -> Result<ImplicitElement> {
    let lambda = spec.exponent() as i128;
    // Small nonnegative exponents are used as given so the query formula holds.
    let e = if (0..=u64::MAX as i128).contains(&n) {
        n as u64
    } else {
        n.rem_euclid(lambda) as u64
    };
    implicit_pow(oracle, a, e)
}
