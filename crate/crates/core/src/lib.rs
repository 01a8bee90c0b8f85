//! Probability of consistency of soft-state sensor data distribution.
//!
//! A sender distributes an information record (IR) to `N` receivers over a
//! lossy network and keeps it alive with periodic refreshes (or, in reliable
//! mode, with acknowledged retransmissions). The system moves between four
//! macro-states:
//!
//! | state | sender | receivers |
//! |-------|--------|-----------|
//! | S1    | no IR  | -         |
//! | S2    | IR     | all hold it (consistent) |
//! | S3    | IR     | update in transfer |
//! | S4    | IR     | some receivers missing it |
//!
//! The crate offers three analytical models of increasing fidelity
//! ([`ModelKind`]), an exact semi-Markov reference ([`reference`]) and two
//! discrete-event simulators ([`sim`]).
//!
//! ```
//! use sdds_core::{steady_macro, reference_steady_state, ModelKind, SddsParams};
//!
//! let params = SddsParams::case2();
//! let markov = steady_macro(&params, ModelKind::Markov, 1).unwrap();
//! let erlang = steady_macro(&params, ModelKind::ErlangFull, 64).unwrap();
//! let exact = reference_steady_state(&params).unwrap();
//! assert!(markov.consistency() > erlang.consistency());
//! assert!((erlang.consistency() - exact.consistency()).abs() < 1e-3);
//! ```

pub mod chain;
pub mod distribution;
pub mod error;
pub mod params;
pub mod rates;
pub mod reference;
pub mod sim;
pub mod solver;

pub use chain::{aggregate, build_generator, build_state_space, Generator, ModelKind, StateSpace};
pub use distribution::{Distribution, MacroDistribution, MacroState};
pub use error::{Error, Result};
pub use params::SddsParams;
pub use rates::TransitionRates;
pub use reference::{embedded_chain, reference_steady_state, EmbeddedChain, HoldingLaw};
pub use sim::{simulate, simulate_packet_level, simulate_state_level, EventCounts, SimConfig, SimMode, SimReport};
pub use solver::{
    converge_in_k, solve_model, steady_macro, steady_state, sweep_k, transient, Convergence, ModelSolution,
    SweepPoint, SweepResult, CONVERGENCE_TOLERANCE, MAX_PHASES,
};
