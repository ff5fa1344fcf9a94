//! Dose-finding engine for phase I/II trials with late-onset toxicity and
//! efficacy outcomes.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every computational
//! piece of the design:
//!
//! * [`design`]: design constants, interval boundaries and the linear utility;
//! * [`interim`]: time-to-event weighted effective counts and Beta posterior tails;
//! * [`decision`]: the interval dose-finding rules with elimination and
//!   accrual suspension;
//! * [`table`]: programmatic regeneration of the decision table;
//! * [`isotonic`]: pool-adjacent-violators and unimodal isotonic regression;
//! * [`select`]: end-of-trial candidate selection by model-averaged efficacy;
//! * [`verify`]: posterior-sampling verification of the candidate;
//! * [`sim`]: calendar-time trial simulation and operating characteristics.
//!
//! Dose indices are 0-based in the Rust API. Serialized documents use
//! 1-based dose levels (see [`dose_level`]).

#![no_std]

extern crate alloc;

pub mod beta;
pub mod decision;
pub mod design;
pub mod dose_level;
pub mod error;
pub mod interim;
pub mod isotonic;
pub mod presets;
pub mod select;
pub mod sim;
pub mod table;
pub mod verify;

pub use decision::{next_dose, Decision, DoseState, Rationale, Verdict};
pub use design::{compute_boundaries, utility, Boundaries, DesignParams, Mode};
pub use error::{ConfigError, EstimateError, IsotonicError};
pub use interim::{
    follow_up_weight, interim_estimate, posterior_tail, summarize, Endpoint, InterimSummary,
    PatientRecord, Tail,
};
pub use select::{select_candidate, FinalData, SelectionReport};
pub use sim::{AccrualModel, OperatingCharacteristics, Scenario, TimeLaw, TrialResult};
pub use verify::{verify, VerificationReport};
