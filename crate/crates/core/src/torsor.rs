//! Seeded free and transitive actions of a finite abelian group on an opaque
//! label set.
//!
//! The hidden labeling `sigma: G -> X` is a keyed Feistel permutation of the
//! 64-bit label space evaluated on the mixed-radix index of each group
//! element. Labels therefore look random, are pairwise distinct, and can be
//! inverted by whoever holds the key. Only the instance holds the key; the
//! reduction sees the instance through [`PublicView`].

use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};

/// Default cap on `|G|` for instance construction.
pub const DEFAULT_INSTANCE_CAP: u64 = 1 << 40;

const FEISTEL_ROUNDS: usize = 8;

/// An element of `X`, identified only by an opaque 64-bit label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SpacePoint(u64);

impl SpacePoint {
    pub fn label(self) -> u64 {
        self.0
    }

    pub fn from_label(label: u64) -> Self {
        Self(label)
    }
}

impl fmt::Display for SpacePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Clone, Debug)]
struct LabelPermutation {
    round_keys: [u64; FEISTEL_ROUNDS],
}

fn mix64(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl LabelPermutation {
    fn new<R: Rng>(rng: &mut R) -> Self {
        let mut round_keys = [0u64; FEISTEL_ROUNDS];
        rng.fill(&mut round_keys[..]);
        Self { round_keys }
    }

    fn round(key: u64, half: u32) -> u32 {
        (mix64(key ^ half as u64) >> 32) as u32
    }

    fn forward(&self, x: u64) -> u64 {
        let (mut l, mut r) = ((x >> 32) as u32, x as u32);
        for &k in &self.round_keys {
            (l, r) = (r, l ^ Self::round(k, r));
        }
        ((l as u64) << 32) | r as u64
    }

    fn backward(&self, y: u64) -> u64 {
        let (mut l, mut r) = ((y >> 32) as u32, y as u32);
        for &k in self.round_keys.iter().rev() {
            (l, r) = (r ^ Self::round(k, l), l);
        }
        ((l as u64) << 32) | r as u64
    }
}

/// A seeded simulated hard homogeneous space together with its secret
/// challenge `a`.
#[derive(Clone, Debug)]
pub struct TorsorInstance {
    spec: GroupSpec,
    seed: u64,
    twist_enabled: bool,
    sigma: LabelPermutation,
    alpha: GroupElement,
    base_point: SpacePoint,
}

/// Builds the instance determined by `(spec, seed)` under the default cap.
pub fn make_instance(spec: GroupSpec, seed: u64, twist_enabled: bool) -> Result<TorsorInstance> {
    make_instance_with_cap(spec, seed, twist_enabled, DEFAULT_INSTANCE_CAP)
}

pub fn make_instance_with_cap(
    spec: GroupSpec,
    seed: u64,
    twist_enabled: bool,
    cap: u64,
) -> Result<TorsorInstance> {
    let order = spec.order();
    if order > cap {
        return Err(Error::InstanceTooLarge {
            order: order as u128,
            cap: cap as u128,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = LabelPermutation::new(&mut rng);
    let alpha = spec.random_element(&mut rng);
    let base_point = SpacePoint(sigma.forward(0));
    Ok(TorsorInstance {
        spec,
        seed,
        twist_enabled,
        sigma,
        alpha,
        base_point,
    })
}

impl TorsorInstance {
    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn twist_enabled(&self) -> bool {
        self.twist_enabled
    }

    /// `E = sigma(identity)`.
    pub fn base_point(&self) -> SpacePoint {
        self.base_point
    }

    /// The published challenge `a * E`.
    pub fn challenge_point(&self) -> SpacePoint {
        self.secret_label(&self.alpha)
    }

    pub fn public(&self) -> PublicView<'_> {
        PublicView { inst: self }
    }

    pub fn contains(&self, x: SpacePoint) -> bool {
        self.sigma.backward(x.0) < self.spec.order()
    }

    /// `g * x`.
    pub fn act(&self, g: &GroupElement, x: SpacePoint) -> Result<SpacePoint> {
        let h = self.secret_exponent(x)?;
        Ok(self.secret_label(&self.spec.compose(g, &h)))
    }

    /// Maps `b * E` to `b^-1 * E`.
    pub fn twist(&self, x: SpacePoint) -> Result<SpacePoint> {
        if !self.twist_enabled {
            return Err(Error::TwistUnavailable);
        }
        let h = self.secret_exponent(x)?;
        Ok(self.secret_label(&self.spec.inverse(&h)))
    }

    // Everything below reads the hidden labeling. Tests, the oracle and the
    // ideal sampler use it; the reduction does not.

    pub fn secret_alpha(&self) -> &GroupElement {
        &self.alpha
    }

    /// `sigma(g)`.
    pub fn secret_label(&self, g: &GroupElement) -> SpacePoint {
        SpacePoint(self.sigma.forward(self.spec.index_of(g)))
    }

    /// `sigma^-1(x)`.
    pub fn secret_exponent(&self, x: SpacePoint) -> Result<GroupElement> {
        let index = self.sigma.backward(x.0);
        if index >= self.spec.order() {
            return Err(Error::ForeignPoint(x));
        }
        Ok(self.spec.from_index(index))
    }

    /// The unique `g` with `g * x = y`.
    pub fn secret_vectorize(&self, x: SpacePoint, y: SpacePoint) -> Result<GroupElement> {
        let hx = self.secret_exponent(x)?;
        let hy = self.secret_exponent(y)?;
        Ok(self.spec.compose(&hy, &self.spec.inverse(&hx)))
    }

    /// A uniformly random point of `X`.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> SpacePoint {
        SpacePoint(self.sigma.forward(rng.gen_range(0..self.spec.order())))
    }
}

/// The attacker's view of an instance: the public group structure, the two
/// published points and the efficiently computable action.
#[derive(Clone, Copy, Debug)]
pub struct PublicView<'a> {
    inst: &'a TorsorInstance,
}

impl PublicView<'_> {
    pub fn spec(&self) -> &GroupSpec {
        &self.inst.spec
    }

    pub fn base_point(&self) -> SpacePoint {
        self.inst.base_point
    }

    pub fn challenge_point(&self) -> SpacePoint {
        self.inst.challenge_point()
    }

    pub fn twist_enabled(&self) -> bool {
        self.inst.twist_enabled
    }

    pub fn act(&self, g: &GroupElement, x: SpacePoint) -> Result<SpacePoint> {
        self.inst.act(g, x)
    }

    pub fn twist(&self, x: SpacePoint) -> Result<SpacePoint> {
        self.inst.twist(x)
    }
}

/// On-disk instance description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub moduli: Vec<u64>,
    pub seed: u64,
    pub twist: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secret: Option<InstanceSecret>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSecret {
    pub alpha: Vec<u64>,
}

impl InstanceFile {
    pub fn describe(inst: &TorsorInstance, with_secret: bool) -> Self {
        Self {
            moduli: inst.spec.moduli().to_vec(),
            seed: inst.seed,
            twist: inst.twist_enabled,
            secret: with_secret.then(|| InstanceSecret {
                alpha: inst.alpha.exponents().to_vec(),
            }),
        }
    }

    /// Regenerates the instance and checks the recorded secret, if any.
    pub fn instantiate(&self) -> Result<TorsorInstance> {
        let inst = make_instance(GroupSpec::new(self.moduli.clone())?, self.seed, self.twist)?;
        if let Some(secret) = &self.secret {
            if secret.alpha != inst.alpha.exponents() {
                return Err(Error::SecretMismatch);
            }
        }
        Ok(inst)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}
