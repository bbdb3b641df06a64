//! The hidden-subgroup instance `f(x, y) = g^x * (a^y * E)` and Fourier
//! sampling of characters trivial on its kernel.
//!
//! `f` is evaluated on the finite domain `D = Z/d_1 x ... x Z/d_r x Z/lambda`
//! with `lambda` the group exponent, which is exact because every modulus is
//! public. Two samplers are provided:
//!
//! * [`StatevectorSampler`] prepares `sum_u |u>|f(u)>` through oracle
//!   queries, applies the exact QFT of `D` to the input register and measures.
//! * [`IdealSampler`] reads the secret `a` and draws from the annihilator
//!   `K^perp` directly. It exists to reach sizes the state vector cannot and
//!   is validated against the honest sampler on small instances.

use std::collections::HashMap;
use std::io::Write;

use log::info;
use num_bigint::BigInt;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::implicit::{implicit_mul, implicit_pow, ImplicitElement};
use crate::lattice::{subgroup_order, IntegerMatrix, KernelLattice};
use crate::oracle::{amplify, amplify_superposition, ParallelOracle};
use crate::torsor::{PublicView, SpacePoint, TorsorInstance};

/// Default cap on `|D|` for the state-vector backend.
pub const DEFAULT_STATEVEC_CAP: u64 = 1 << 14;

/// Environment variable overriding [`DEFAULT_STATEVEC_CAP`].
pub const STATEVEC_CAP_ENV: &str = "TORSOR_MAX_STATEVEC_DIM";

/// `Z/d_1 x ... x Z/d_r x Z/lambda`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainGroup {
    moduli_ext: Vec<u64>,
}

impl DomainGroup {
    pub fn new(spec: &GroupSpec) -> Self {
        let mut moduli_ext = spec.moduli().to_vec();
        moduli_ext.push(spec.exponent());
        Self { moduli_ext }
    }

    pub fn moduli_ext(&self) -> &[u64] {
        &self.moduli_ext
    }

    pub fn rank(&self) -> usize {
        self.moduli_ext.len() - 1
    }

    pub fn lambda(&self) -> u64 {
        *self.moduli_ext.last().expect("nonempty")
    }

    /// `|D|`, saturating.
    pub fn size(&self) -> u128 {
        self.moduli_ext
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128))
    }

    /// Row-major index, last coordinate fastest.
    fn decode(&self, mut index: usize, out: &mut [u64]) {
        for (slot, &n) in out.iter_mut().zip(&self.moduli_ext).rev() {
            *slot = index as u64 % n;
            index /= n as usize;
        }
    }
}

/// A character `(x, y) -> exp(2 pi i (sum_j c_j x_j / d_j + c y / lambda))`
/// of the domain, stored as its residues `(c_1, ..., c_r, c)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CharacterSample(Vec<u64>);

impl CharacterSample {
    pub fn new(residues: Vec<u64>, moduli_ext: &[u64]) -> Result<Self> {
        if residues.len() != moduli_ext.len() {
            return Err(Error::ShapeMismatch {
                expected: moduli_ext.len(),
                got: residues.len(),
            });
        }
        Ok(Self(
            residues.iter().zip(moduli_ext).map(|(&c, &n)| c % n).collect(),
        ))
    }

    pub fn residues(&self) -> &[u64] {
        &self.0
    }

    /// Whether `chi(u) = 1`, evaluated exactly.
    pub fn is_trivial_on(&self, u: &[BigInt], moduli_ext: &[u64]) -> bool {
        let big_m = moduli_ext.iter().fold(1u64, |a, &n| num_integer::lcm(a, n));
        let total: BigInt = self
            .0
            .iter()
            .zip(u)
            .zip(moduli_ext)
            .map(|((&c, x), &n)| BigInt::from(c) * x * BigInt::from(big_m / n))
            .sum();
        num_integer::Integer::is_multiple_of(&total, &BigInt::from(big_m))
    }
}

/// Group structure and basis of `G`.
///
/// On a quantum computer this comes out of the generalised Shor algorithm
/// run on the public description of `G`. Here the description already is the
/// structure, so it is passed through unchanged.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupStructure {
    pub moduli: Vec<u64>,
    pub basis: Vec<GroupElement>,
}

pub fn group_structure(spec: &GroupSpec) -> GroupStructure {
    info!(
        "simulated quantum step: group structure {:?} taken from the public spec",
        spec.moduli()
    );
    GroupStructure {
        moduli: spec.moduli().to_vec(),
        basis: (0..spec.rank()).map(|i| spec.generator(i)).collect(),
    }
}

fn check_domain_point(domain: &DomainGroup, x: &[u64], y: u64) -> Result<()> {
    if x.len() != domain.rank() {
        return Err(Error::ShapeMismatch {
            expected: domain.rank(),
            got: x.len(),
        });
    }
    let in_range = x.iter().chain([&y]).zip(domain.moduli_ext()).all(|(&c, &n)| c < n);
    if !in_range {
        return Err(Error::ResidueOutOfRange);
    }
    Ok(())
}

/// `f(x, y) = g^x * (a^y * E)`, with `a^y * E` by double-and-add.
pub fn eval_f(
    oracle: &mut ParallelOracle,
    view: PublicView<'_>,
    a: ImplicitElement,
    x: &[u64],
    y: u64,
) -> Result<SpacePoint> {
    let domain = DomainGroup::new(view.spec());
    check_domain_point(&domain, x, y)?;
    let ay = implicit_pow(oracle, a, y)?;
    view.act(&view.spec().element_unsigned(x)?, ay.point)
}

/// The reversible circuit for `f` on superposed inputs: classically
/// precomputed powers `P_j = a^(2^j) * E`, then one controlled oracle call
/// per bit of `y`, then the known shift `g^x`.
#[derive(Clone, Debug)]
pub struct FCircuit {
    base: SpacePoint,
    powers: Vec<SpacePoint>,
    domain: DomainGroup,
}

impl FCircuit {
    /// Builds the power ladder: `bits(lambda - 1) - 1` doublings.
    pub fn build(oracle: &mut ParallelOracle, view: PublicView<'_>, a: ImplicitElement) -> Result<Self> {
        Self::build_voted(oracle, view, a, None, &mut rand::rngs::mock::StepRng::new(0, 1))
    }

    /// [`FCircuit::build`] with every doubling done by a `k`-fold majority
    /// vote when `votes = Some(k)`.
    pub fn build_voted<R: Rng + ?Sized>(
        oracle: &mut ParallelOracle,
        view: PublicView<'_>,
        a: ImplicitElement,
        votes: Option<usize>,
        rng: &mut R,
    ) -> Result<Self> {
        let domain = DomainGroup::new(view.spec());
        let bits = 64 - (domain.lambda() - 1).leading_zeros() as usize;
        let mut powers = Vec::with_capacity(bits);
        let mut p = a;
        for j in 0..bits {
            if j > 0 {
                p = match votes {
                    None => implicit_mul(oracle, p, p)?,
                    Some(k) => ImplicitElement::new(
                        amplify(oracle, view, a.base, p.point, p.point, k, rng)?,
                        a.base,
                    ),
                };
            }
            powers.push(p.point);
        }
        Ok(Self {
            base: a.base,
            powers,
            domain,
        })
    }

    pub fn domain(&self) -> &DomainGroup {
        &self.domain
    }

    /// Oracle calls spent by [`FCircuit::build`], before voting.
    pub fn ladder_cost(&self) -> u64 {
        self.powers.len().saturating_sub(1) as u64
    }

    /// Oracle calls per circuit run.
    pub fn shot_cost(&self) -> u64 {
        self.powers.len() as u64
    }

    /// `f` on every domain point, indexed as [`DomainGroup`] orders them.
    /// `votes = Some(k)` replaces each oracle call by a `k`-fold blinded
    /// majority vote.
    pub fn evaluate_all<R: Rng + ?Sized>(
        &self,
        oracle: &mut ParallelOracle,
        view: PublicView<'_>,
        votes: Option<usize>,
        rng: &mut R,
    ) -> Result<Vec<SpacePoint>> {
        let size = self.domain.size() as usize;
        let k = self.domain.moduli_ext.len();
        let mut coords = vec![0u64; k];
        let ys: Vec<u64> = (0..size)
            .map(|i| {
                self.domain.decode(i, &mut coords);
                coords[k - 1]
            })
            .collect();

        let mut acc = vec![self.base; size];
        for (j, &p) in self.powers.iter().enumerate() {
            let controlled: Vec<usize> = (0..size).filter(|&i| (ys[i] >> j) & 1 == 1).collect();
            let branches: Vec<_> = controlled.iter().map(|&i| (acc[i], p)).collect();
            let out = match votes {
                None => oracle.parallelize_superposition(self.base, &branches)?,
                Some(k) => amplify_superposition(oracle, view, self.base, &branches, k, rng)?,
            };
            for (&i, w) in controlled.iter().zip(out) {
                acc[i] = w;
            }
        }

        let spec = view.spec();
        for (i, slot) in acc.iter_mut().enumerate() {
            self.domain.decode(i, &mut coords);
            *slot = view.act(&spec.element_unsigned(&coords[..k - 1])?, *slot)?;
        }
        Ok(acc)
    }
}

/// Anything that emits characters trivial on the hidden kernel.
pub trait FourierSampler {
    fn name(&self) -> &'static str;

    fn sample(
        &mut self,
        oracle: &mut ParallelOracle,
        count: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Vec<CharacterSample>>;
}

/// Either backend behind one handle.
pub enum Backend<'a> {
    Statevector(StatevectorSampler<'a>),
    Ideal(IdealSampler<'a>),
}

impl<'a> Backend<'a> {
    pub fn as_sampler(&mut self) -> &mut (dyn FourierSampler + 'a) {
        match self {
            Backend::Statevector(s) => s,
            Backend::Ideal(s) => s,
        }
    }
}

/// `count` independent samples from the chosen backend.
pub fn fourier_sample<R: rand::RngCore>(
    backend: &mut Backend<'_>,
    oracle: &mut ParallelOracle,
    count: usize,
    rng: &mut R,
) -> Result<Vec<CharacterSample>> {
    backend.as_sampler().sample(oracle, count, rng)
}

/// The prepared and Fourier-transformed state, kept block-sparse in the
/// output register: one `|D|`-vector of amplitudes per label in the image
/// of `f`.
pub struct StateVector {
    input_dims: Vec<u64>,
    output_dim: u64,
    blocks: Vec<(SpacePoint, Vec<Complex64>)>,
}

impl StateVector {
    /// `|D| * |X|`.
    pub fn dimension(&self) -> u128 {
        self.input_dims.iter().map(|&n| n as u128).product::<u128>() * self.output_dim as u128
    }

    pub fn input_dims(&self) -> &[u64] {
        &self.input_dims
    }

    pub fn output_dim(&self) -> u64 {
        self.output_dim
    }

    pub fn norm_sqr(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|(_, b)| b.iter())
            .map(|z| z.norm_sqr())
            .sum()
    }

    /// Probability of each input-register outcome.
    pub fn input_marginal(&self) -> Vec<f64> {
        let n = self.input_dims.iter().product::<u64>() as usize;
        let mut p = vec![0.0; n];
        for (_, block) in &self.blocks {
            for (slot, z) in p.iter_mut().zip(block) {
                *slot += z.norm_sqr();
            }
        }
        p
    }

    fn from_f_table(domain: &DomainGroup, output_dim: u64, table: &[SpacePoint]) -> Self {
        let size = table.len();
        let amp = 1.0 / (size as f64).sqrt();
        let mut groups: HashMap<SpacePoint, Vec<usize>> = HashMap::new();
        for (i, &w) in table.iter().enumerate() {
            groups.entry(w).or_default().push(i);
        }
        let mut labels: Vec<_> = groups.keys().copied().collect();
        labels.sort();

        let mut qft = DomainQft::new(domain.moduli_ext());
        let blocks = labels
            .into_iter()
            .map(|w| {
                let mut block = vec![Complex64::new(0.0, 0.0); size];
                for &i in &groups[&w] {
                    block[i] = Complex64::new(amp, 0.0);
                }
                qft.apply(&mut block);
                (w, block)
            })
            .collect();
        Self {
            input_dims: domain.moduli_ext().to_vec(),
            output_dim,
            blocks,
        }
    }
}

/// Exact QFT over `Z/n_1 x ... x Z/n_k`: a unitary DFT along every axis.
struct DomainQft {
    dims: Vec<usize>,
    plans: Vec<std::sync::Arc<dyn rustfft::Fft<f64>>>,
}

impl DomainQft {
    fn new(dims: &[u64]) -> Self {
        let mut planner = FftPlanner::new();
        let dims: Vec<usize> = dims.iter().map(|&n| n as usize).collect();
        let plans = dims.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self { dims, plans }
    }

    /// `|u> -> n^-1/2 sum_c exp(2 pi i c u / n) |c>` on each axis.
    fn apply(&mut self, data: &mut [Complex64]) {
        let total: usize = self.dims.iter().product();
        assert_eq!(data.len(), total);
        let mut stride = total;
        for (axis, &n) in self.dims.iter().enumerate() {
            stride /= n;
            if n == 1 {
                continue;
            }
            let scale = 1.0 / (n as f64).sqrt();
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let outer = total / (n * stride);
            for o in 0..outer {
                for inner in 0..stride {
                    let start = o * n * stride + inner;
                    for (t, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + t * stride];
                    }
                    self.plans[axis].process(&mut line);
                    for (t, z) in line.iter().enumerate() {
                        data[start + t * stride] = z * scale;
                    }
                }
            }
        }
    }
}

/// Honest sampler: state preparation through oracle calls, exact QFT,
/// measurement.
///
/// With a deterministic (perfect) oracle every run prepares the same state,
/// so the state is built once and re-measured; each extra shot is still
/// charged its circuit cost. A noisy oracle forces a fresh preparation per
/// shot.
pub struct StatevectorSampler<'a> {
    view: PublicView<'a>,
    circuit: FCircuit,
    allow_noisy: bool,
    votes: Option<usize>,
    cached: Option<(StateVector, WeightedIndex<f64>)>,
}

impl<'a> StatevectorSampler<'a> {
    pub fn new(view: PublicView<'a>, circuit: FCircuit, cap: u64) -> Result<Self> {
        let size = circuit.domain().size();
        if size > cap as u128 {
            return Err(Error::DomainTooLarge {
                backend: "statevector",
                size,
                cap: cap as u128,
            });
        }
        Ok(Self {
            view,
            circuit,
            allow_noisy: false,
            votes: None,
            cached: None,
        })
    }

    /// Permits a noisy oracle. Results under noise carry no guarantee.
    pub fn allow_noisy(mut self, allow: bool) -> Self {
        self.allow_noisy = allow;
        self
    }

    /// Replaces each oracle call in the circuit with a `k`-fold majority vote.
    pub fn with_votes(mut self, k: Option<usize>) -> Self {
        self.votes = k;
        self
    }

    pub fn circuit(&self) -> &FCircuit {
        &self.circuit
    }

    /// Runs the circuit once and returns the transformed state.
    pub fn prepare(&self, oracle: &mut ParallelOracle, rng: &mut dyn rand::RngCore) -> Result<StateVector> {
        let table = self.circuit.evaluate_all(oracle, self.view, self.votes, rng)?;
        Ok(StateVector::from_f_table(
            self.circuit.domain(),
            self.view.spec().order(),
            &table,
        ))
    }

    fn measure(dist: &WeightedIndex<f64>, domain: &DomainGroup, rng: &mut dyn rand::RngCore) -> CharacterSample {
        let mut c = vec![0u64; domain.moduli_ext().len()];
        domain.decode(dist.sample(rng), &mut c);
        CharacterSample(c)
    }

    fn distribution(state: &StateVector) -> WeightedIndex<f64> {
        WeightedIndex::new(state.input_marginal()).expect("normalized state has positive mass")
    }
}

impl FourierSampler for StatevectorSampler<'_> {
    fn name(&self) -> &'static str {
        "statevector"
    }

    fn sample(
        &mut self,
        oracle: &mut ParallelOracle,
        count: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Vec<CharacterSample>> {
        if !oracle.is_perfect() && !self.allow_noisy {
            return Err(Error::NoisyOracleNotPermitted);
        }
        let domain = self.circuit.domain().clone();
        let cost = self.circuit.shot_cost() * self.votes.unwrap_or(1) as u64;
        let mut out = Vec::with_capacity(count);
        if oracle.is_perfect() {
            for _ in 0..count {
                match &self.cached {
                    Some((_, dist)) => {
                        oracle.record_replayed_queries(cost);
                        out.push(Self::measure(dist, &domain, rng));
                    }
                    None => {
                        let state = self.prepare(oracle, rng)?;
                        let dist = Self::distribution(&state);
                        out.push(Self::measure(&dist, &domain, rng));
                        self.cached = Some((state, dist));
                    }
                }
            }
        } else {
            for _ in 0..count {
                let state = self.prepare(oracle, rng)?;
                out.push(Self::measure(&Self::distribution(&state), &domain, rng));
            }
        }
        Ok(out)
    }
}

/// Uniform sampler on `K^perp` built from the secret `a = g^v`: a character
/// `(c, c_last)` kills `K = <(-v, 1)>` iff
/// `c_last = sum_i c_i v_i lambda / d_i (mod lambda)`.
pub struct IdealSampler<'a> {
    inst: &'a TorsorInstance,
    shot_cost: u64,
}

impl<'a> IdealSampler<'a> {
    /// `shot_cost` is charged per sample, normally [`FCircuit::shot_cost`].
    pub fn new(inst: &'a TorsorInstance, shot_cost: u64) -> Self {
        Self { inst, shot_cost }
    }
}

impl FourierSampler for IdealSampler<'_> {
    fn name(&self) -> &'static str {
        "ideal"
    }

    fn sample(
        &mut self,
        oracle: &mut ParallelOracle,
        count: usize,
        rng: &mut dyn rand::RngCore,
    ) -> Result<Vec<CharacterSample>> {
        if !oracle.is_perfect() {
            return Err(Error::NoisyOracleNotPermitted);
        }
        let spec = self.inst.spec();
        let lambda = spec.exponent() as u128;
        let v = self.inst.secret_alpha().exponents();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            oracle.record_replayed_queries(self.shot_cost);
            let c = spec.random_element(rng);
            let last = c
                .exponents()
                .iter()
                .zip(v)
                .zip(spec.moduli())
                .fold(0u128, |acc, ((&ci, &vi), &d)| {
                    let term = (ci as u128 * vi as u128) % lambda * (lambda / d as u128) % lambda;
                    (acc + term) % lambda
                });
            let mut residues = c.exponents().to_vec();
            residues.push(last as u64);
            out.push(CharacterSample(residues));
        }
        Ok(out)
    }
}

/// The true kernel `L` of `f`, read from the secret. Test and audit use only.
pub fn secret_kernel(inst: &TorsorInstance) -> KernelLattice {
    let spec = inst.spec();
    let domain = DomainGroup::new(spec);
    let neg_v = spec.inverse(inst.secret_alpha());
    let mut row: Vec<u64> = neg_v.exponents().to_vec();
    row.push(1 % domain.lambda());
    KernelLattice::with_relations(
        &IntegerMatrix::from_rows(row.len(), &[row]),
        domain.moduli_ext(),
    )
}

/// When to stop drawing samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StoppingRule {
    pub batch: usize,
    /// Consecutive batches without growth of the generated subgroup.
    pub patience: usize,
    pub cap: usize,
    /// Stop as soon as the generated subgroup reaches this order.
    pub target_order: Option<u64>,
}

impl StoppingRule {
    /// Batches of `r + 1`, patience 2, cap `64 (r + 1)`, and the target
    /// `|K^perp| = |G|`, which is public.
    pub fn for_spec(spec: &GroupSpec) -> Self {
        let batch = spec.rank() + 1;
        Self {
            batch,
            patience: 2,
            cap: 64 * batch,
            target_order: Some(spec.order()),
        }
    }

    /// The same rule without the target order: stabilization only.
    pub fn stabilization_only(spec: &GroupSpec) -> Self {
        Self {
            target_order: None,
            ..Self::for_spec(spec)
        }
    }
}

/// Draws batches until the rule says stop; returns all samples drawn.
pub fn sample_until_stable(
    sampler: &mut dyn FourierSampler,
    oracle: &mut ParallelOracle,
    moduli_ext: &[u64],
    rule: &StoppingRule,
    rng: &mut dyn rand::RngCore,
) -> Result<Vec<CharacterSample>> {
    let mut samples = Vec::new();
    let mut last_order = BigInt::from(0);
    let mut quiet = 0;
    while samples.len() < rule.cap {
        let n = rule.batch.min(rule.cap - samples.len());
        samples.extend(sampler.sample(oracle, n, rng)?);
        let order = subgroup_order(&samples, moduli_ext);
        if rule.target_order.is_some_and(|t| order >= BigInt::from(t)) {
            break;
        }
        if order == last_order {
            quiet += 1;
            if rule.target_order.is_none() && quiet >= rule.patience {
                break;
            }
        } else {
            quiet = 0;
            last_order = order;
        }
    }
    Ok(samples)
}

/// Writes samples as CSV with header `c_1,...,c_r,c`.
pub fn write_samples_csv<W: Write>(w: W, rank: usize, samples: &[CharacterSample]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=rank).map(|i| format!("c_{i}")).collect();
    header.push("c".into());
    out.write_record(&header)?;
    for s in samples {
        out.write_record(s.residues().iter().map(|c| c.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::kernel_from_samples;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn instance_with_alpha(moduli: &[u64], alpha: &[u64]) -> TorsorInstance {
        let spec = GroupSpec::new(moduli.to_vec()).unwrap();
        (0..)
            .map(|seed| crate::torsor::make_instance(spec.clone(), seed, false).unwrap())
            .find(|i| i.secret_alpha().exponents() == alpha)
            .unwrap()
    }

    fn naive_qft(dims: &[u64], data: &[Complex64]) -> Vec<Complex64> {
        let dom = DomainGroup {
            moduli_ext: dims.to_vec(),
        };
        let n = data.len();
        let mut cu = vec![0u64; dims.len()];
        let mut cc = vec![0u64; dims.len()];
        (0..n)
            .map(|c| {
                dom.decode(c, &mut cc);
                (0..n)
                    .map(|u| {
                        dom.decode(u, &mut cu);
                        let phase: f64 = cu
                            .iter()
                            .zip(&cc)
                            .zip(dims)
                            .map(|((&a, &b), &d)| (a * b % d) as f64 / d as f64)
                            .sum();
                        data[u] * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * phase)
                    })
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    #[test]
    fn qft_matches_naive_dft() {
        let dims = [3u64, 2, 4];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Complex64> = (0..24)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let want = naive_qft(&dims, &data);
        let mut got = data.clone();
        DomainQft::new(&dims).apply(&mut got);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn f_examples() {
        let inst = Arc::new(instance_with_alpha(&[5], &[2]));
        let mut o = ParallelOracle::perfect(inst.clone());
        let a = ImplicitElement::new(inst.challenge_point(), inst.base_point());
        let v = inst.public();
        assert_eq!(eval_f(&mut o, v, a, &[0], 0).unwrap(), inst.base_point());
        assert_eq!(eval_f(&mut o, v, a, &[3], 1).unwrap(), inst.base_point());
        assert!(eval_f(&mut o, v, a, &[3, 1], 1).is_err());
        assert!(matches!(eval_f(&mut o, v, a, &[5], 1), Err(Error::ResidueOutOfRange)));
        assert!(matches!(eval_f(&mut o, v, a, &[0], 5), Err(Error::ResidueOutOfRange)));
    }

    #[test]
    fn circuit_matches_classical_f() {
        let inst = Arc::new(crate::torsor::make_instance("2,6".parse().unwrap(), 3, false).unwrap());
        let mut o = ParallelOracle::perfect(inst.clone());
        let v = inst.public();
        let a = ImplicitElement::new(inst.challenge_point(), inst.base_point());
        let circuit = FCircuit::build(&mut o, v, a).unwrap();
        assert_eq!(o.query_count(), circuit.ladder_cost());
        let before = o.query_count();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let table = circuit.evaluate_all(&mut o, v, None, &mut rng).unwrap();
        assert_eq!(o.query_count() - before, circuit.shot_cost());
        let dom = circuit.domain().clone();
        let mut c = vec![0; 3];
        for (i, &w) in table.iter().enumerate() {
            dom.decode(i, &mut c);
            assert_eq!(eval_f(&mut o, v, a, &c[..2], c[2]).unwrap(), w);
        }
    }

    #[test]
    fn group_structure_passthrough() {
        let s: GroupSpec = "2,4".parse().unwrap();
        let gs = group_structure(&s);
        assert_eq!(gs.moduli, vec![2, 4]);
        assert_eq!(gs.basis, vec![s.generator(0), s.generator(1)]);
    }

    #[test]
    fn z2_annihilator_frequencies() {
        let inst = instance_with_alpha(&[2], &[1]);
        let mut o = ParallelOracle::perfect(Arc::new(inst.clone()));
        let mut ideal = IdealSampler::new(&inst, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples = ideal.sample(&mut o, 10_000, &mut rng).unwrap();
        let ones = samples.iter().filter(|s| s.residues() == [1, 1]).count();
        assert!(samples.iter().all(|s| s.residues() == [0, 0] || s.residues() == [1, 1]));
        assert!((ones as f64 / 1e4 - 0.5).abs() < 0.05);
    }

    #[test]
    fn trivial_group_emits_zero_character() {
        let inst = Arc::new(crate::torsor::make_instance("1".parse().unwrap(), 0, false).unwrap());
        let mut o = ParallelOracle::perfect(inst.clone());
        let a = ImplicitElement::new(inst.challenge_point(), inst.base_point());
        let circuit = FCircuit::build(&mut o, inst.public(), a).unwrap();
        let mut sv = StatevectorSampler::new(inst.public(), circuit, 1 << 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in sv.sample(&mut o, 20, &mut rng).unwrap() {
            assert_eq!(s.residues(), &[0, 0]);
        }
    }

    #[test]
    fn statevector_is_normalized_and_supported_on_annihilator() {
        let inst = Arc::new(instance_with_alpha(&[5], &[2]));
        let mut o = ParallelOracle::perfect(inst.clone());
        let a = ImplicitElement::new(inst.challenge_point(), inst.base_point());
        let circuit = FCircuit::build(&mut o, inst.public(), a).unwrap();
        let sv = StatevectorSampler::new(inst.public(), circuit, 1 << 14).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let state = sv.prepare(&mut o, &mut rng).unwrap();
        assert!((state.norm_sqr() - 1.0).abs() < 1e-9);
        assert_eq!(state.dimension(), 25 * 5);
        let p = state.input_marginal();
        for c1 in 0..5u64 {
            for c in 0..5u64 {
                let want = if (c1 + 2 * c) % 5 == 0 { 0.2 } else { 0.0 };
                assert!((p[(c1 * 5 + c) as usize] - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn backend_caps_and_noise_gate() {
        let inst = Arc::new(crate::torsor::make_instance("128,128".parse().unwrap(), 0, false).unwrap());
        let mut o = ParallelOracle::perfect(inst.clone());
        let a = ImplicitElement::new(inst.challenge_point(), inst.base_point());
        let circuit = FCircuit::build(&mut o, inst.public(), a).unwrap();
        assert!(matches!(
            StatevectorSampler::new(inst.public(), circuit, DEFAULT_STATEVEC_CAP),
            Err(Error::DomainTooLarge { .. })
        ));

        let mut noisy =
            ParallelOracle::noisy(inst.clone(), 0.5, crate::oracle::NoiseModel::Uniform, 0).unwrap();
        let mut ideal = IdealSampler::new(&inst, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            ideal.sample(&mut noisy, 1, &mut rng),
            Err(Error::NoisyOracleNotPermitted)
        ));
    }

    #[test]
    fn stopping_rule_reaches_full_annihilator() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..50 {
            let inst = crate::torsor::make_instance("2,4,3".parse().unwrap(), seed, false).unwrap();
            let mut o = ParallelOracle::perfect(Arc::new(inst.clone()));
            let dom = DomainGroup::new(inst.spec());
            let mut ideal = IdealSampler::new(&inst, 0);
            let rule = StoppingRule::for_spec(inst.spec());
            let samples =
                sample_until_stable(&mut ideal, &mut o, dom.moduli_ext(), &rule, &mut rng).unwrap();
            assert_eq!(samples.len() % rule.batch, 0);
            let l = kernel_from_samples(&samples, dom.moduli_ext());
            assert!(l.same_as(&secret_kernel(&inst)));
        }
    }

    #[test]
    fn csv_dump_header() {
        let n = [2, 4, 4];
        let s = vec![CharacterSample::new(vec![1, 2, 3], &n).unwrap()];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, 2, &s).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "c_1,c_2,c\n1,2,3\n");
    }
}
