//! Deterministic gait generation and analysis for quadruped robots.
//!
//! The crate builds rhythmic per-leg phase signals from a network of four
//! coupled Hopf oscillators or from scripted periodic functions, turns those
//! phases into smooth foot trajectories and joint references through
//! analytic leg kinematics, and evaluates locomotion logs offline.

pub mod angle;
pub mod cpg;
pub mod metrics;
pub mod oscillator;
pub mod kinematics;
pub mod logfile;
pub mod phasegen;
pub mod randomize;
pub mod trajectory;

pub use cpg::{contact_schedule, find_gait, gait_table, CpgNetwork, GaitDefinition, Leg};
pub use kinematics::{JointAngles, KneeLimits, LegGeometry, RobotGeometry};
pub use metrics::{ContactSequence, JointReference, RewardBreakdown, StateSample};
pub use oscillator::{OscillatorParams, OscillatorState};
pub use phasegen::{builtin_scripts, find_script, HandoffDecision, PhaseGen, ScriptedGait};
pub use randomize::{RandomizationSpec, Scenario};
pub use trajectory::{Contact, FootTarget, StepParams, VelocityCommand};
