//! Multi-platoon car-following models on a single-lane ring road.
//!
//! Human-driven vehicles follow the optimal velocity model. Platoon members
//! track their platoon head through a centralised controller, and platoon
//! heads either follow the vehicle ahead, or are connected to the heads of
//! neighbouring platoons with an optional communication delay.
//!
//! * [`ovfunc`]: the optimal velocity function.
//! * [`models`]: acceleration laws and the safety overlay.
//! * [`scenario`]: platoon layouts and seeded initial conditions.
//! * [`sim`]: the time-stepping engine.
//! * [`metrics`]: headway tables, speed envelopes, stabilization detection.
//! * [`stability`]: closed-form thresholds and an eigenvalue oracle.

pub mod error;
pub mod metrics;
pub mod models;
pub mod ovfunc;
pub mod scenario;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
pub use models::{ControlParams, ModelKind, SafetyParams};
pub use ovfunc::OvParams;
pub use scenario::{Connectivity, PlatoonSpec, Scenario};
pub use sim::{RingRoad, SimConfig, State, Trajectory};
