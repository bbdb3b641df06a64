//! End-to-end vectorization from a parallelization oracle, plus the
//! classical baselines and experiment drivers built around it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::hsp::{
    eval_f, group_structure, sample_until_stable, Backend, CharacterSample, DomainGroup, FCircuit,
    IdealSampler, StatevectorSampler, StoppingRule, DEFAULT_STATEVEC_CAP, STATEVEC_CAP_ENV,
};
use crate::implicit::ImplicitElement;
use crate::lattice::{extract_alpha, kernel_from_samples, KernelLattice};
use crate::oracle::{amplify, NoiseModel, ParallelOracle};
use crate::torsor::{make_instance, PublicView, TorsorInstance};

/// Largest `|G|` the brute-force baseline will walk.
pub const BRUTEFORCE_CAP: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Ideal,
    Statevector,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "statevector" => Ok(Self::Statevector),
            other => Err(format!("unknown backend {other:?}")),
        }
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ideal => "ideal",
            Self::Statevector => "statevector",
        })
    }
}

/// State-vector cap from `TORSOR_MAX_STATEVEC_DIM`, else the default.
pub fn statevec_cap_from_env() -> u64 {
    std::env::var(STATEVEC_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_STATEVEC_CAP)
}

#[derive(Clone, Debug)]
pub struct ReductionConfig {
    pub backend: BackendKind,
    pub statevec_cap: u64,
    /// Extra attempts after the first, each doubling the sample count.
    pub max_retries: usize,
    /// Allows a noisy oracle inside the sampler. No correctness claim.
    pub experiment_noise: bool,
    /// Majority-vote width for every oracle call in the circuit.
    pub votes: Option<usize>,
    /// Defaults to [`StoppingRule::for_spec`].
    pub stopping: Option<StoppingRule>,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Ideal,
            statevec_cap: DEFAULT_STATEVEC_CAP,
            max_retries: 3,
            experiment_noise: false,
            votes: None,
            stopping: None,
        }
    }
}

impl ReductionConfig {
    pub fn with_backend(backend: BackendKind) -> Self {
        Self {
            backend,
            ..Self::default()
        }
    }
}

/// Everything one reduction run produced.
#[derive(Clone, Debug)]
pub struct ReductionOutcome {
    pub recovered: Option<GroupElement>,
    /// `act(recovered, E) == a * E`, checked with public operations only.
    pub success: bool,
    pub lattice: Option<KernelLattice>,
    pub samples: Vec<CharacterSample>,
    pub attempts: usize,
    pub ladder_queries: u64,
    pub circuit_queries: u64,
}

impl ReductionOutcome {
    pub fn total_queries(&self) -> u64 {
        self.ladder_queries + self.circuit_queries
    }
}

/// `samples * (2 floor(log2 lambda) + r + 2)`.
pub fn query_bound(spec: &GroupSpec, samples: usize) -> u64 {
    let lambda = spec.exponent();
    let log = 63 - lambda.leading_zeros() as u64;
    samples as u64 * (2 * log + spec.rank() as u64 + 2)
}

/// Recovers `a` from `E` and `a * E`.
///
/// `inst` is consulted for its public view only, except by the ideal
/// backend, which samples with the secret.
pub fn vectorize(
    inst: &TorsorInstance,
    oracle: &mut ParallelOracle,
    cfg: &ReductionConfig,
    rng: &mut dyn rand::RngCore,
) -> Result<ReductionOutcome> {
    let view = inst.public();
    let spec = view.spec();
    if !oracle.is_perfect() && !cfg.experiment_noise {
        return Err(Error::NoisyOracleNotPermitted);
    }
    let structure = group_structure(spec);
    debug_assert_eq!(structure.moduli, spec.moduli());
    let domain = DomainGroup::new(spec);
    let a = ImplicitElement::new(view.challenge_point(), view.base_point());

    let start = oracle.query_count();
    let circuit = FCircuit::build_voted(oracle, view, a, cfg.votes, rng)?;
    let ladder_queries = oracle.query_count() - start;
    let shot_cost = circuit.shot_cost();

    let mut backend = match cfg.backend {
        BackendKind::Statevector => Backend::Statevector(
            StatevectorSampler::new(view, circuit, cfg.statevec_cap)?
                .allow_noisy(cfg.experiment_noise)
                .with_votes(cfg.votes),
        ),
        BackendKind::Ideal => Backend::Ideal(IdealSampler::new(inst, shot_cost)),
    };
    let sampler = backend.as_sampler();
    let rule = cfg.stopping.clone().unwrap_or_else(|| StoppingRule::for_spec(spec));
    let mut samples = sample_until_stable(sampler, oracle, domain.moduli_ext(), &rule, rng)?;

    let mut outcome = ReductionOutcome {
        recovered: None,
        success: false,
        lattice: None,
        samples: Vec::new(),
        attempts: 0,
        ladder_queries,
        circuit_queries: 0,
    };
    for attempt in 0..=cfg.max_retries {
        outcome.attempts = attempt + 1;
        let lattice = kernel_from_samples(&samples, domain.moduli_ext());
        let candidate = match extract_alpha(&lattice, spec) {
            Ok(g) => Some(g),
            Err(Error::NoUnitLastCoordinate) => None,
            Err(e) => return Err(e),
        };
        outcome.lattice = Some(lattice);
        if let Some(g) = candidate {
            let ok = view.act(&g, view.base_point())? == view.challenge_point();
            outcome.recovered = Some(g);
            if ok {
                outcome.success = true;
                break;
            }
        }
        if attempt < cfg.max_retries {
            let more = samples.len().max(1);
            samples.extend(sampler.sample(oracle, more, rng)?);
        }
    }
    outcome.circuit_queries = oracle.query_count() - start - ladder_queries;
    outcome.samples = samples;
    Ok(outcome)
}

/// Checks `f(u) = E` for `count` random `u` in `lattice` using only public
/// operations. Returns the number of vectors that passed.
pub fn self_check<R: Rng + ?Sized>(
    oracle: &mut ParallelOracle,
    view: PublicView<'_>,
    lattice: &KernelLattice,
    count: usize,
    rng: &mut R,
) -> Result<usize> {
    use num_bigint::BigInt;
    use num_integer::Integer;

    let domain = DomainGroup::new(view.spec());
    let a = ImplicitElement::new(view.challenge_point(), view.base_point());
    let mut passed = 0;
    for _ in 0..count {
        let u = lattice.random_vector(rng);
        let reduced: Vec<u64> = u
            .iter()
            .zip(domain.moduli_ext())
            .map(|(x, &n)| u64::try_from(x.mod_floor(&BigInt::from(n))).expect("residue fits"))
            .collect();
        let r = domain.rank();
        if eval_f(oracle, view, a, &reduced[..r], reduced[r])? == view.base_point() {
            passed += 1;
        }
    }
    Ok(passed)
}

/// Exhaustive orbit walk for the `g` with `g * E = a * E`. Reads no secrets.
pub fn bruteforce(view: PublicView<'_>) -> Result<GroupElement> {
    let spec = view.spec();
    if spec.order() > BRUTEFORCE_CAP {
        return Err(Error::InstanceTooLarge {
            order: spec.order() as u128,
            cap: BRUTEFORCE_CAP as u128,
        });
    }
    let target = view.challenge_point();
    for g in spec.elements() {
        if view.act(&g, view.base_point())? == target {
            return Ok(g);
        }
    }
    unreachable!("the action is transitive")
}

/// How to build the oracle for a trial.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OracleSetup {
    /// `None` for the perfect oracle.
    pub success_prob: Option<f64>,
    pub noise_model: NoiseModel,
}

impl OracleSetup {
    pub fn build(&self, inst: Arc<TorsorInstance>, seed: u64) -> Result<ParallelOracle> {
        match self.success_prob {
            None => Ok(ParallelOracle::perfect(inst)),
            Some(p) => ParallelOracle::noisy(inst, p, self.noise_model, seed),
        }
    }
}

/// One JSON-lines record per trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub moduli: Vec<u64>,
    pub instance_seed: u64,
    pub run_seed: u64,
    pub backend: BackendKind,
    pub success_prob: Option<f64>,
    pub noise_model: NoiseModel,
    pub votes: Option<usize>,
    pub experiment: bool,
    pub oracle_queries: u64,
    pub implicit_pow_queries: u64,
    pub circuit_queries: u64,
    pub query_bound: u64,
    pub samples: usize,
    pub attempts: usize,
    pub success: bool,
    pub recovered_alpha: Option<Vec<u64>>,
    pub wall_time_ms: f64,
}

impl RunReport {
    /// Equality ignoring wall time.
    pub fn same_run(&self, other: &Self) -> bool {
        Self {
            wall_time_ms: 0.0,
            ..self.clone()
        } == Self {
            wall_time_ms: 0.0,
            ..other.clone()
        }
    }
}

/// One reduction run on `inst` under `run_seed`.
pub fn run_trial(
    inst: Arc<TorsorInstance>,
    run_seed: u64,
    cfg: &ReductionConfig,
    oracle_setup: &OracleSetup,
) -> Result<RunReport> {
    run_trial_detailed(inst, run_seed, cfg, oracle_setup).map(|(r, _)| r)
}

/// [`run_trial`] that also hands back the raw outcome.
pub fn run_trial_detailed(
    inst: Arc<TorsorInstance>,
    run_seed: u64,
    cfg: &ReductionConfig,
    oracle_setup: &OracleSetup,
) -> Result<(RunReport, ReductionOutcome)> {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    let mut oracle = oracle_setup.build(inst.clone(), rng.gen())?;
    let out = vectorize(&inst, &mut oracle, cfg, &mut rng)?;
    let success = match &out.recovered {
        Some(g) => inst.act(g, inst.base_point())? == inst.challenge_point(),
        None => false,
    };
    let report = RunReport {
        moduli: inst.spec().moduli().to_vec(),
        instance_seed: inst.seed(),
        run_seed,
        backend: cfg.backend,
        success_prob: oracle_setup.success_prob,
        noise_model: oracle_setup.noise_model,
        votes: cfg.votes,
        experiment: cfg.experiment_noise,
        oracle_queries: oracle.query_count(),
        implicit_pow_queries: out.ladder_queries,
        circuit_queries: out.circuit_queries,
        query_bound: query_bound(inst.spec(), out.samples.len()),
        samples: out.samples.len(),
        attempts: out.attempts,
        success,
        recovered_alpha: out.recovered.as_ref().map(|g| g.exponents().to_vec()),
        wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
    };
    Ok((report, out))
}

/// A batch of `(instance, run seed)` pairs run in parallel, reported in order.
pub fn run_trials(
    jobs: &[(Arc<TorsorInstance>, u64)],
    cfg: &ReductionConfig,
    oracle_setup: &OracleSetup,
) -> Result<Vec<RunReport>> {
    jobs.par_iter()
        .map(|(inst, seed)| run_trial(inst.clone(), *seed, cfg, oracle_setup))
        .collect()
}

/// Trials for `--moduli/--seed`: instance seed `seed + t` for trial `t`.
pub fn seeded_jobs(
    spec: &GroupSpec,
    seed: u64,
    twist: bool,
    run_seed: u64,
    trials: usize,
) -> Result<Vec<(Arc<TorsorInstance>, u64)>> {
    (0..trials as u64)
        .map(|t| {
            Ok((
                Arc::new(make_instance(spec.clone(), seed.wrapping_add(t), twist)?),
                run_seed.wrapping_add(t),
            ))
        })
        .collect()
}

/// One CSV row per configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub moduli: String,
    pub backend: BackendKind,
    pub success_prob: Option<f64>,
    pub votes: Option<usize>,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_queries: f64,
    pub max_queries: u64,
    pub mean_samples: f64,
}

impl SummaryRow {
    pub fn from_reports(reports: &[RunReport]) -> Option<Self> {
        let first = reports.first()?;
        let n = reports.len() as f64;
        let successes = reports.iter().filter(|r| r.success).count();
        Some(Self {
            moduli: first
                .moduli
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(","),
            backend: first.backend,
            success_prob: first.success_prob,
            votes: first.votes,
            trials: reports.len(),
            successes,
            success_rate: successes as f64 / n,
            mean_queries: reports.iter().map(|r| r.oracle_queries as f64).sum::<f64>() / n,
            max_queries: reports.iter().map(|r| r.oracle_queries).max().unwrap_or(0),
            mean_samples: reports.iter().map(|r| r.samples as f64).sum::<f64>() / n,
        })
    }
}

/// Probability that at most `(k - 1) / 2` of `k` independent queries
/// succeed, each with probability `alpha`. Upper-bounds the amplifier's
/// failure rate.
pub fn majority_failure_bound(alpha: f64, k: usize) -> f64 {
    let q = 1.0 - alpha;
    let mut binom = 1.0f64;
    let mut total = 0.0;
    for j in 0..=k {
        if j > 0 {
            binom = binom * (k - j + 1) as f64 / j as f64;
        }
        if 2 * j > k {
            total += binom * q.powi(j as i32) * alpha.powi((k - j) as i32);
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplifierReport {
    pub moduli: Vec<u64>,
    pub success_prob: f64,
    pub noise_model: NoiseModel,
    pub k: usize,
    pub trials: usize,
    pub failures: usize,
    pub single_query_failures: usize,
    pub empirical_failure_rate: f64,
    pub binomial_tail: f64,
    pub queries: u64,
}

/// Runs `trials` amplified parallelizations on random inputs and counts
/// wrong answers, alongside an unamplified query per trial for comparison.
pub fn amplifier_experiment(
    inst: Arc<TorsorInstance>,
    success_prob: f64,
    noise_model: NoiseModel,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<AmplifierReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut oracle = ParallelOracle::noisy(inst.clone(), success_prob, noise_model, rng.gen())?;
    let view = inst.public();
    let spec = inst.spec();
    let mut failures = 0;
    let mut single_failures = 0;
    for _ in 0..trials {
        let base = inst.random_point(&mut rng);
        let a = spec.random_element(&mut rng);
        let b = spec.random_element(&mut rng);
        let y = view.act(&a, base)?;
        let z = view.act(&b, base)?;
        let want = view.act(&spec.compose(&a, &b), base)?;
        if amplify(&mut oracle, view, base, y, z, k, &mut rng)? != want {
            failures += 1;
        }
        if oracle.parallelize(base, y, z)? != want {
            single_failures += 1;
        }
    }
    Ok(AmplifierReport {
        moduli: spec.moduli().to_vec(),
        success_prob,
        noise_model,
        k,
        trials,
        failures,
        single_query_failures: single_failures,
        empirical_failure_rate: failures as f64 / trials.max(1) as f64,
        binomial_tail: majority_failure_bound(success_prob, k),
        queries: oracle.query_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(moduli: &str, seed: u64) -> Arc<TorsorInstance> {
        Arc::new(make_instance(moduli.parse().unwrap(), seed, false).unwrap())
    }

    #[test]
    fn ideal_reduction_recovers_alpha() {
        for seed in 0..20 {
            let i = inst("101", seed);
            let r = run_trial(i.clone(), seed, &ReductionConfig::default(), &OracleSetup::default()).unwrap();
            assert!(r.success);
            assert_eq!(r.recovered_alpha.as_deref(), Some(i.secret_alpha().exponents()));
            assert!(r.oracle_queries <= r.query_bound);
        }
    }

    #[test]
    fn statevector_reduction_small() {
        let cfg = ReductionConfig::with_backend(BackendKind::Statevector);
        for seed in 0..5 {
            let i = inst("3", seed);
            let r = run_trial(i.clone(), seed, &cfg, &OracleSetup::default()).unwrap();
            assert!(r.success);
            assert!(r.oracle_queries <= r.query_bound);
        }
    }

    #[test]
    fn non_chain_moduli() {
        for seed in 0..10 {
            let i = inst("6,10", seed);
            let r = run_trial(i.clone(), seed, &ReductionConfig::default(), &OracleSetup::default()).unwrap();
            assert!(r.success);
            assert_eq!(r.recovered_alpha.as_deref(), Some(i.secret_alpha().exponents()));
        }
    }

    #[test]
    fn bruteforce_examples() {
        let i = inst("5", 7);
        assert_eq!(&bruteforce(i.public()).unwrap(), i.secret_alpha());
        let i = inst("1", 0);
        assert_eq!(bruteforce(i.public()).unwrap(), i.spec().identity());
        let i = inst("2,4", 3);
        let r = run_trial(i.clone(), 0, &ReductionConfig::default(), &OracleSetup::default()).unwrap();
        assert_eq!(
            r.recovered_alpha.unwrap(),
            bruteforce(i.public()).unwrap().exponents()
        );
        let big = inst("2048,1024", 0);
        assert!(matches!(bruteforce(big.public()), Err(Error::InstanceTooLarge { .. })));
    }

    #[test]
    fn noisy_oracle_requires_experiment_flag() {
        let i = inst("3", 1);
        let setup = OracleSetup {
            success_prob: Some(0.6),
            noise_model: NoiseModel::Uniform,
        };
        let cfg = ReductionConfig::with_backend(BackendKind::Statevector);
        assert!(matches!(
            run_trial(i.clone(), 0, &cfg, &setup),
            Err(Error::NoisyOracleNotPermitted)
        ));
        let cfg = ReductionConfig {
            experiment_noise: true,
            ..cfg
        };
        let r = run_trial(i, 0, &cfg, &setup).unwrap();
        assert!(r.experiment);
    }

    #[test]
    fn reports_are_deterministic() {
        let i = inst("2,4", 9);
        let cfg = ReductionConfig::with_backend(BackendKind::Statevector);
        let a = run_trial(i.clone(), 5, &cfg, &OracleSetup::default()).unwrap();
        let b = run_trial(i, 5, &cfg, &OracleSetup::default()).unwrap();
        assert!(a.same_run(&b));
    }

    #[test]
    fn failure_bound_values() {
        assert!((majority_failure_bound(0.9, 15) - 3.3624887968e-5).abs() < 1e-15);
        assert!((majority_failure_bound(1.0, 1)).abs() < 1e-300);
        assert!((majority_failure_bound(0.6, 5) - 0.31744).abs() < 1e-12);
    }

    #[test]
    fn summary_row() {
        let i = inst("7", 1);
        let jobs = seeded_jobs(i.spec(), 1, false, 0, 4).unwrap();
        let reports = run_trials(&jobs, &ReductionConfig::default(), &OracleSetup::default()).unwrap();
        let row = SummaryRow::from_reports(&reports).unwrap();
        assert_eq!(row.trials, 4);
        assert_eq!(row.successes, 4);
        assert_eq!(row.moduli, "7");
    }
}
