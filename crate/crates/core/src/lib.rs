//! Coded distributed matrix multiplication with straggling servers.
//!
//! The crate covers the whole pipeline of a coded Map/Shuffle/Reduce job that
//! computes `y_j = A x_j` for `N` input vectors on `K` servers:
//!
//! * [`gf`]: exact GF(2^w) arithmetic and the small amount of dense linear
//!   algebra that encoding and decoding need.
//! * [`codec`]: the MDS-coded storage design (generator, batches, placement),
//!   per-server storage matrices and Reduce-phase decoding.
//! * [`stragglers`]: Map latency models, expected order statistics and seeded
//!   sampling.
//! * [`shuffle`]: the greedy coded multicast shuffle with exact load
//!   accounting.
//! * [`analysis`]: closed-form achievable load, the converse bound, lower
//!   convex envelopes and gap ratios.
//! * [`sim`]: end-to-end seeded simulation with bit-exact verification.
//! * [`cli`]: the command-line surface used by the `coded-compute` binary.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory, e.g.
//! `cargo run --example golden_examples`.

pub mod analysis;
pub mod cli;
pub mod codec;
pub mod gf;
pub mod presets;
pub mod rational;
pub mod shuffle;
pub mod sim;
pub mod stragglers;
pub mod subset;

pub use analysis::{TradeoffCurve, TradeoffPoint};
pub use codec::{SchemeParams, StoragePlan};
pub use gf::{FieldElement, FieldMatrix, GaloisField};
pub use rational::Rational;
pub use shuffle::{ReduceAssignment, ShuffleTranscript};
pub use sim::{SimConfig, SimReport};
pub use stragglers::LatencyModel;
pub use subset::ServerSet;
