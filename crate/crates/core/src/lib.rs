//! Exact simulation and verification toolkit for a three-party
//! device-independent quantum secret sharing (DI-QSS) protocol built on the
//! multiparty parity game.
//!
//! The protocol distributes a seven-qubit GHZ state in the partition
//! `(1, 3, 3)` between a dealer (Alice) and two participants (Bob, Charlie).
//! Every round the parties play the parity game: on even-weight inputs
//! `x ∈ {0,1}⁷` the outputs must satisfy `Σ yⱼ ≡ (Σ xⱼ)/2 (mod 2)`. Rounds
//! whose input weight is a multiple of four double as key rounds, because on
//! exactly those rounds a winning output also satisfies the key relation
//! `K_A = K_B ⊕ K_C`.
//!
//! The crate is organised as five layers:
//!
//! - [`bitcore`] — bit-level game logic, exhaustive enumeration and the
//!   combinatorial closed forms (valid-pair ratio, classical optimum).
//! - [`quantum`] — dense statevector simulation of the `S`/`H`/measure
//!   circuit and density-operator checks for the reduced views.
//! - [`noise`] — the white-noise + photon-loss channel, QBER closed forms,
//!   binary entropy, and the key-rate bound with its efficiency threshold.
//! - [`protocol`] — the executable round/sift/test/abort/extract state
//!   machine with deterministic per-round RNG streams.
//! - [`analysis`] — round accounting against the CHSH-based scheme and the
//!   curve/table generators behind the CLI.
//!
//! All randomness flows through explicit [`rand_chacha::ChaCha8Rng`] streams
//! derived from a master seed, so every simulation result is reproducible
//! bit-for-bit regardless of worker count.

pub mod analysis;
pub mod bitcore;
pub mod noise;
pub mod protocol;
pub mod quantum;

pub use bitcore::{BitString, PairCount, Partition, Rational};
pub use noise::{Branch, NoiseParams};
pub use protocol::{ProtocolConfig, RoundRecord, SimulationReport};
pub use quantum::{DensityOperator, GhzLabel, StateVector};
