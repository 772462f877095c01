//! Online learning with dying experts.
//!
//! The setting is decision-theoretic online learning over `K` experts where
//! the adversary may permanently remove experts as the game proceeds: at the
//! end of a *night* round one or more experts die, and the stretches between
//! nights are *days*. The learner must put zero mass on dead experts, and the
//! natural comparator class is no longer a single expert but an *ordering*
//! of experts: an ordering plays its first still-alive expert each round, so
//! it upgrades to its next preference exactly when a death forces it to.
//!
//! What lives here:
//!
//! * [`instance`]: loss streams, dying schedules, and a plain-text instance
//!   format for reproducible experiments.
//! * [`ordering`]: orderings, their realized play sequences (behaviors), and
//!   counting/enumerating the *effective* orderings, the behavior-distinct
//!   equivalence classes a schedule induces.
//! * [`regret`]: ranking regret (against the best ordering in hindsight,
//!   found by dynamic programming) and classical regret.
//! * [`hedge`]: exponential-weights primitives, plain Hedge, and the
//!   restart-on-death baseline.
//! * [`grouped`]: Hedge over all `K!` orderings (or over the effective
//!   orderings when the dying order is known upfront) simulated in `O(K)`
//!   state per round via grouped weights.
//! * [`adaptive`]: follow-the-leader with death clamping, AdaHedge-style
//!   adaptive rates, the flip/flop regime switcher, and a quantile-style
//!   mixture of grouped learners at different rates.
//! * [`adversaries`]: deterministic, seeded loss/schedule generators,
//!   including the lower-bound-style constructions used in experiments.
//! * [`oracle`]: brute-force reference implementations (explicit Hedge over
//!   ordering lists, behavior deduplication over all `K!` permutations) and
//!   a certifier that compares a learner's played distributions against an
//!   oracle's round by round.
//!
//! Everything is deterministic given the inputs; randomness only enters
//! through the counter-based generator in [`rng`], which is a pure function
//! of (seed, stream, counter).

pub mod adaptive;
pub mod adversaries;
pub mod error;
pub mod grouped;
pub mod hedge;
pub mod instance;
pub mod learner;
pub mod math;
pub mod oracle;
pub mod ordering;
pub mod regret;
pub mod rng;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
