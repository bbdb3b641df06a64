//! Finite abelian groups `Z/d_1 x ... x Z/d_r` written in a fixed basis.
//!
//! A [`GroupElement`] is an exponent vector `x` standing for `g_1^x_1 ... g_r^x_r`.
//! Elements never carry their moduli; all arithmetic goes through the
//! [`GroupSpec`] that owns them.

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Public description of `G = Z/d_1 x ... x Z/d_r`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    moduli: Vec<u64>,
}

/// Exponent vector, componentwise reduced modulo the owning spec's moduli.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(Vec<u64>);

impl GroupElement {
    pub fn exponents(&self) -> &[u64] {
        &self.0
    }
}

impl GroupSpec {
    pub fn new(moduli: Vec<u64>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::InvalidSpec("rank must be at least 1".into()));
        }
        if let Some(bad) = moduli.iter().find(|&&d| d == 0) {
            return Err(Error::InvalidSpec(format!("modulus {bad} is not >= 1")));
        }
        moduli
            .iter()
            .try_fold(1u64, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidSpec("group order overflows 64 bits".into()))?;
        Ok(Self { moduli })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn rank(&self) -> usize {
        self.moduli.len()
    }

    /// `|G| = d_1 * ... * d_r`.
    pub fn order(&self) -> u64 {
        self.moduli.iter().product()
    }

    /// Group exponent `lcm(d_1, ..., d_r)`.
    pub fn exponent(&self) -> u64 {
        self.moduli.iter().fold(1u64, |acc, &d| acc.lcm(&d))
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.rank()])
    }

    /// Reduces an arbitrary integer vector into `G`.
    pub fn element(&self, exponents: &[i64]) -> Result<GroupElement> {
        self.check_len(exponents.len())?;
        Ok(GroupElement(
            exponents
                .iter()
                .zip(&self.moduli)
                .map(|(&x, &d)| (x as i128).mod_floor(&(d as i128)) as u64)
                .collect(),
        ))
    }

    /// Like [`GroupSpec::element`] for unsigned input.
    pub fn element_unsigned(&self, exponents: &[u64]) -> Result<GroupElement> {
        self.check_len(exponents.len())?;
        Ok(GroupElement(
            exponents.iter().zip(&self.moduli).map(|(&x, &d)| x % d).collect(),
        ))
    }

    /// The basis element `g_i`.
    pub fn generator(&self, i: usize) -> GroupElement {
        let mut e = vec![0; self.rank()];
        e[i] = 1 % self.moduli[i];
        GroupElement(e)
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&b.0)
                .zip(&self.moduli)
                .map(|((&x, &y), &d)| ((x as u128 + y as u128) % d as u128) as u64)
                .collect(),
        )
    }

    pub fn inverse(&self, a: &GroupElement) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &d)| (d - x) % d)
                .collect(),
        )
    }

    /// `a^n` for a signed integer `n`.
    pub fn pow(&self, a: &GroupElement, n: i128) -> GroupElement {
        GroupElement(
            a.0.iter()
                .zip(&self.moduli)
                .map(|(&x, &d)| {
                    let d = d as i128;
                    ((x as i128 % d) * n.mod_floor(&d)).mod_floor(&d) as u64
                })
                .collect(),
        )
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> GroupElement {
        GroupElement(self.moduli.iter().map(|&d| rng.gen_range(0..d)).collect())
    }

    /// Mixed-radix index in `0..|G|`, first coordinate most significant.
    pub fn index_of(&self, a: &GroupElement) -> u64 {
        a.0.iter().zip(&self.moduli).fold(0u64, |acc, (&x, &d)| acc * d + x)
    }

    pub fn from_index(&self, mut index: u64) -> GroupElement {
        let mut e = vec![0; self.rank()];
        for (slot, &d) in e.iter_mut().zip(&self.moduli).rev() {
            *slot = index % d;
            index /= d;
        }
        GroupElement(e)
    }

    /// Every element of `G` in index order.
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.order()).map(move |i| self.from_index(i))
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.rank() {
            return Err(Error::ShapeMismatch {
                expected: self.rank(),
                got,
            });
        }
        Ok(())
    }
}

impl std::str::FromStr for GroupSpec {
    type Err = Error;

    /// Parses a comma-separated moduli list such as `2,4`.
    fn from_str(s: &str) -> Result<Self> {
        let moduli = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::InvalidSpec(format!("bad modulus {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(moduli)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(GroupSpec::new(vec![]).is_err());
        assert!(GroupSpec::new(vec![3, 0]).is_err());
        assert!(GroupSpec::new(vec![u64::MAX, 3]).is_err());
        assert!("2,x".parse::<GroupSpec>().is_err());
    }

    #[test]
    fn exponent_is_lcm() {
        let g: GroupSpec = "6,10".parse().unwrap();
        assert_eq!(g.order(), 60);
        assert_eq!(g.exponent(), 30);
        assert_eq!(GroupSpec::new(vec![1]).unwrap().exponent(), 1);
    }

    #[test]
    fn index_round_trip_and_arith() {
        let g: GroupSpec = "2,4,3".parse().unwrap();
        for i in 0..g.order() {
            assert_eq!(g.index_of(&g.from_index(i)), i);
        }
        let a = g.element(&[1, -1, 5]).unwrap();
        assert_eq!(a.exponents(), &[1, 3, 2]);
        assert_eq!(g.compose(&a, &g.inverse(&a)), g.identity());
        assert_eq!(g.pow(&a, -1), g.inverse(&a));
        assert_eq!(g.pow(&a, 12), g.identity());
    }
}
