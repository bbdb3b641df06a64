//! The parallelization oracle `pi: (x, a*x, b*x) -> ab*x`, with query
//! accounting, a noisy mode, and the blinded majority-vote amplifier.

use std::cmp::Reverse;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torsor::{PublicView, SpacePoint, TorsorInstance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum OracleMode {
    Perfect,
    Noisy { success_prob: f64 },
}

/// What a noisy oracle returns when a query fails.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// A uniformly random point of `X`.
    #[default]
    Uniform,
    /// The same point on every failure, fixed when the oracle is built.
    AdversarialFixed,
}

impl FromStr for NoiseModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "adversarial-fixed" => Ok(Self::AdversarialFixed),
            other => Err(format!("unknown noise model {other:?}")),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Uniform => "uniform",
            Self::AdversarialFixed => "adversarial-fixed",
        })
    }
}

/// Stateful oracle handle. Not shareable across threads mid-run; give each
/// worker its own [`ParallelOracle::fork`] and sum the counters.
#[derive(Clone, Debug)]
pub struct ParallelOracle {
    inst: Arc<TorsorInstance>,
    mode: OracleMode,
    noise_model: NoiseModel,
    rng: ChaCha8Rng,
    fixed_wrong: SpacePoint,
    queries: u64,
}

impl ParallelOracle {
    pub fn perfect(inst: Arc<TorsorInstance>) -> Self {
        Self::build(inst, OracleMode::Perfect, NoiseModel::Uniform, 0)
    }

    pub fn noisy(
        inst: Arc<TorsorInstance>,
        success_prob: f64,
        noise_model: NoiseModel,
        seed: u64,
    ) -> Result<Self> {
        if !(success_prob > 0.0 && success_prob <= 1.0) {
            return Err(Error::InvalidSuccessProbability(success_prob));
        }
        Ok(Self::build(
            inst,
            OracleMode::Noisy { success_prob },
            noise_model,
            seed,
        ))
    }

    fn build(inst: Arc<TorsorInstance>, mode: OracleMode, noise_model: NoiseModel, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fixed_wrong = inst.random_point(&mut rng);
        Self {
            inst,
            mode,
            noise_model,
            rng,
            fixed_wrong,
            queries: 0,
        }
    }

    /// Same instance and mode, fresh counter and an independent noise stream.
    pub fn fork(&self, seed: u64) -> Self {
        let mut o = Self::build(self.inst.clone(), self.mode, self.noise_model, seed);
        o.fixed_wrong = self.fixed_wrong;
        o
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    pub fn noise_model(&self) -> NoiseModel {
        self.noise_model
    }

    pub fn is_perfect(&self) -> bool {
        matches!(self.mode, OracleMode::Perfect)
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Given `base`, `y = a*base` and `z = b*base`, returns `ab*base`.
    pub fn parallelize(&mut self, base: SpacePoint, y: SpacePoint, z: SpacePoint) -> Result<SpacePoint> {
        self.queries += 1;
        self.answer(base, y, z)
    }

    /// One oracle invocation on a superposition of basis inputs. Each branch
    /// is answered independently, so a noisy oracle may corrupt any subset of
    /// them.
    pub fn parallelize_superposition(
        &mut self,
        base: SpacePoint,
        branches: &[(SpacePoint, SpacePoint)],
    ) -> Result<Vec<SpacePoint>> {
        self.queries += 1;
        branches.iter().map(|&(y, z)| self.answer(base, y, z)).collect()
    }

    /// Charges `n` invocations without evaluating anything. Used when a
    /// simulator re-measures a memoized state: each shot of a real device
    /// would have paid for its own circuit run.
    pub fn record_replayed_queries(&mut self, n: u64) {
        self.queries += n;
    }

    fn answer(&mut self, base: SpacePoint, y: SpacePoint, z: SpacePoint) -> Result<SpacePoint> {
        let spec = self.inst.spec();
        let a = self.inst.secret_vectorize(base, y)?;
        let b = self.inst.secret_vectorize(base, z)?;
        let correct = self.inst.act(&spec.compose(&a, &b), base)?;
        match self.mode {
            OracleMode::Perfect => Ok(correct),
            OracleMode::Noisy { success_prob } => {
                if self.rng.gen_bool(success_prob) {
                    Ok(correct)
                } else {
                    Ok(match self.noise_model {
                        NoiseModel::Uniform => self.inst.random_point(&mut self.rng),
                        NoiseModel::AdversarialFixed => self.fixed_wrong,
                    })
                }
            }
        }
    }
}

fn check_votes(k: usize) -> Result<()> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::InvalidVoteCount(k));
    }
    Ok(())
}

/// Most frequent point; ties go to the smallest label.
fn plurality(votes: &[SpacePoint]) -> SpacePoint {
    let mut counts: HashMap<SpacePoint, usize> = HashMap::new();
    for &v in votes {
        *counts.entry(v).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by_key(|&(p, c)| (c, Reverse(p)))
        .map(|(p, _)| p)
        .expect("at least one vote")
}

/// Random self-reduction with majority vote: `k` blinded queries
/// `pi(base, beta*y, gamma*z)` each unblinded by `(beta*gamma)^-1`.
pub fn amplify<R: Rng + ?Sized>(
    oracle: &mut ParallelOracle,
    view: PublicView<'_>,
    base: SpacePoint,
    y: SpacePoint,
    z: SpacePoint,
    k: usize,
    rng: &mut R,
) -> Result<SpacePoint> {
    check_votes(k)?;
    let spec = view.spec();
    let mut votes = Vec::with_capacity(k);
    for _ in 0..k {
        let beta = spec.random_element(rng);
        let gamma = spec.random_element(rng);
        let w = oracle.parallelize(base, view.act(&beta, y)?, view.act(&gamma, z)?)?;
        let unblind = spec.inverse(&spec.compose(&beta, &gamma));
        votes.push(view.act(&unblind, w)?);
    }
    Ok(plurality(&votes))
}

/// [`amplify`] applied branchwise to a superposition: `k` superposition
/// queries, each branch blinded with its own random elements.
pub fn amplify_superposition<R: Rng + ?Sized>(
    oracle: &mut ParallelOracle,
    view: PublicView<'_>,
    base: SpacePoint,
    branches: &[(SpacePoint, SpacePoint)],
    k: usize,
    rng: &mut R,
) -> Result<Vec<SpacePoint>> {
    check_votes(k)?;
    let spec = view.spec();
    let mut votes: Vec<Vec<SpacePoint>> = vec![Vec::with_capacity(k); branches.len()];
    for _ in 0..k {
        let mut blinded = Vec::with_capacity(branches.len());
        let mut unblinds = Vec::with_capacity(branches.len());
        for &(y, z) in branches {
            let beta = spec.random_element(rng);
            let gamma = spec.random_element(rng);
            blinded.push((view.act(&beta, y)?, view.act(&gamma, z)?));
            unblinds.push(spec.inverse(&spec.compose(&beta, &gamma)));
        }
        let answers = oracle.parallelize_superposition(base, &blinded)?;
        for ((slot, w), u) in votes.iter_mut().zip(answers).zip(&unblinds) {
            slot.push(view.act(u, w)?);
        }
    }
    Ok(votes.iter().map(|v| plurality(v)).collect())
}
