//! Vectorization (group-action discrete logarithm) from a parallelization
//! oracle (group-action Diffie-Hellman), over simulated free and transitive
//! abelian group actions.
//!
//! The pipeline, bottom up:
//!
//! * [`torsor`]: seeded instances with a hidden labeling of `X`.
//! * [`oracle`]: the parallelization oracle, noisy variants, majority vote.
//! * [`implicit`]: double-and-add in the implicit group on `X`.
//! * [`hsp`]: the homomorphism `f(x, y) = g^x * a^y * E` and Fourier
//!   sampling of characters trivial on its kernel.
//! * [`lattice`]: Smith normal form, kernel reconstruction, extraction of `a`.
//! * [`reduction`]: the end-to-end driver, baselines and experiments.

pub mod error;
pub mod group;
pub mod hsp;
pub mod implicit;
pub mod lattice;
pub mod oracle;
pub mod reduction;
pub mod torsor;

pub use error::{Error, Result};
pub use group::{GroupElement, GroupSpec};
pub use hsp::{CharacterSample, DomainGroup, FourierSampler, StoppingRule};
pub use implicit::{ImplicitElement, SignedStrategy};
pub use lattice::{IntegerMatrix, KernelLattice};
pub use oracle::{NoiseModel, OracleMode, ParallelOracle};
pub use reduction::{vectorize, BackendKind, ReductionConfig, ReductionOutcome, RunReport};
pub use torsor::{make_instance, InstanceFile, PublicView, SpacePoint, TorsorInstance};
