//! Deterministic simulator and routing engine for stationary Bluetooth-style
//! mesh networks.
//!
//! The crate covers the full experiment pipeline:
//!
//! 1. [`scenario`] — seeded generation and CSV persistence of node deployments.
//! 2. [`sim`] — message delivery over a scenario under a routing strategy,
//!    with per-hop logging (baseline AODV, or learned fusion routing).
//! 3. [`aodv`] — BFS route discovery with a TTL bound and the classic
//!    fallback selector used by the fusion strategies.
//! 4. [`features`] — the eight per-candidate routing features and the
//!    min-max normalizer used by the forwarder classifier.
//! 5. [`learners`] — from-scratch ridge regression, CART trees, random
//!    forests and gradient-boosted trees, plus evaluation metrics.
//! 6. [`models`] — extraction of the four training datasets from hop logs
//!    and the trained [`models::ModelBundle`].
//! 7. [`fusion`] — combined scoring and top-k forwarder selection.
//! 8. [`metrics`] — network-level summaries, the Wilcoxon signed-rank test
//!    and a bootstrap confidence interval.
//!
//! Every random draw in the crate flows through a ChaCha20 generator seeded
//! from user-supplied integers (see [`rng`]), so identical inputs produce
//! byte-identical scenario files, hop logs, model bundles and reports.
//!
//! With the default `parallel` feature, independent scenario runs and forest
//! trees are built on a rayon pool; outputs are identical to the sequential
//! fallback (see [`exec`]).

pub mod aodv;
pub mod config;
pub mod error;
pub mod exec;
pub mod features;
pub mod fusion;
pub mod learners;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod scenario;
pub mod sim;
pub(crate) mod util;

pub use error::{Error, Result};
