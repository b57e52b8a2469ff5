//! Lumped-element channel models for capacitive body-coupled links near
//! metallic objects.
//!
//! The crate is organised bottom-up: [`model`] holds the capacitance
//! profile and contact types, [`transfer`] the closed-form transfer
//! functions, [`oracle`] a nodal solver used to check them, [`link`] the
//! SNR/capacity/BER layer, and [`sweep`] plus [`emit`] the batch surface.
//! Scenario files and presets are read by [`scenario_file`] and
//! [`presets`].

pub mod emit;
pub mod error;
pub mod link;
pub mod model;
pub mod oracle;
pub mod presets;
pub mod scenario_file;
pub mod sweep;
pub mod transfer;
pub mod units;

pub use error::{HbcError, Result};
pub use link::{LinkBudget, LinkReport, Modulation, SnrSource};
pub use model::{
    CapName, CapacitanceProfile, ContactInterface, EffectiveCaps, Interaction, Scenario,
    ScenarioKind, Termination,
};
pub use sweep::{run_link, run_sweep, ModelChoice, SweepResult, SweepSpec};
pub use transfer::{ComplexTransfer, ModelForm};
