//! Offline locomotion metrics over logged or synthetic robot state:
//! contact-sequence similarity, duty factors, velocity tracking error, and
//! a per-term reward breakdown.

use crate::cpg::{self, Leg};
use crate::trajectory::VelocityCommand;

/// Per-leg boolean stance series at a fixed sample rate (true = stance).
#[derive(Debug, Clone, PartialEq)]
pub struct ContactSequence {
    legs: [Vec<bool>; 4],
    rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("contact sequences disagree: {0}")]
    SequenceMismatch(String),
    #[error("leg series lengths differ: {0:?}")]
    RaggedLegs([usize; 4]),
    #[error("sample rate must be positive, got {0}")]
    BadRate(f64),
    #[error("empty input: {0}")]
    Empty(&'static str),
}

impl ContactSequence {
    pub fn new(legs: [Vec<bool>; 4], rate_hz: f64) -> Result<Self, MetricsError> {
        if !(rate_hz > 0.0) || !rate_hz.is_finite() {
            return Err(MetricsError::BadRate(rate_hz));
        }
        let lens = [legs[0].len(), legs[1].len(), legs[2].len(), legs[3].len()];
        if lens.iter().any(|&l| l != lens[0]) {
            return Err(MetricsError::RaggedLegs(lens));
        }
        Ok(Self { legs, rate_hz })
    }

    /// Build from rows of per-leg contacts, one row per sample instant.
    pub fn from_rows(rows: &[[bool; 4]], rate_hz: f64) -> Result<Self, MetricsError> {
        let mut legs: [Vec<bool>; 4] = Default::default();
        for row in rows {
            for i in 0..4 {
                legs[i].push(row[i]);
            }
        }
        Self::new(legs, rate_hz)
    }

    /// Sample a phase trajectory into a contact schedule.
    pub fn from_phases(phases: &[[f64; 4]], rate_hz: f64) -> Result<Self, MetricsError> {
        let rows: Vec<[bool; 4]> = phases.iter().map(cpg::contact_schedule).collect();
        Self::from_rows(&rows, rate_hz)
    }

    pub fn len(&self) -> usize {
        self.legs[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn leg(&self, leg: Leg) -> &[bool] {
        &self.legs[leg.index()]
    }

    /// Invert every sample (used by tests for the zero-similarity bound).
    pub fn complement(&self) -> Self {
        let legs = [0, 1, 2, 3].map(|i| self.legs[i].iter().map(|c| !c).collect());
        Self {
            legs,
            rate_hz: self.rate_hz,
        }
    }
}

/// Hamming similarity `1 - d / n` pooled over all four legs.
pub fn similarity(actual: &ContactSequence, desired: &ContactSequence) -> Result<f64, MetricsError> {
    if actual.len() != desired.len() {
        return Err(MetricsError::SequenceMismatch(format!(
            "lengths {} vs {}",
            actual.len(),
            desired.len()
        )));
    }
    if (actual.rate_hz - desired.rate_hz).abs() > 1e-9 {
        return Err(MetricsError::SequenceMismatch(format!(
            "rates {} Hz vs {} Hz",
            actual.rate_hz, desired.rate_hz
        )));
    }
    if actual.is_empty() {
        return Err(MetricsError::Empty("contact sequence"));
    }
    let mut distance = 0usize;
    for i in 0..4 {
        distance += actual.legs[i]
            .iter()
            .zip(&desired.legs[i])
            .filter(|(a, d)| a != d)
            .count();
    }
    let total = 4 * actual.len();
    Ok(1.0 - distance as f64 / total as f64)
}

/// Stance fraction of one leg's series.
pub fn duty_factor(seq: &ContactSequence, leg: Leg) -> Result<f64, MetricsError> {
    if seq.is_empty() {
        return Err(MetricsError::Empty("contact sequence"));
    }
    let series = seq.leg(leg);
    Ok(series.iter().filter(|&&c| c).count() as f64 / series.len() as f64)
}

/// Stance fraction pooled over all four legs: the gait-level duty factor.
pub fn gait_duty_factor(seq: &ContactSequence) -> Result<f64, MetricsError> {
    if seq.is_empty() {
        return Err(MetricsError::Empty("contact sequence"));
    }
    let stance: usize = Leg::ALL
        .iter()
        .map(|&leg| seq.leg(leg).iter().filter(|&&c| c).count())
        .sum();
    Ok(stance as f64 / (4 * seq.len()) as f64)
}

/// Velocity-tracking errors against a constant command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityTracking {
    /// Mean Euclidean error on (forward, lateral), m/s.
    pub linear: f64,
    /// Mean absolute yaw-rate error, rad/s.
    pub yaw: f64,
}

/// Mean tracking error of a base-velocity log `(forward, lateral, yaw)`.
pub fn velocity_error(
    log: &[[f64; 3]],
    cmd: &VelocityCommand,
) -> Result<VelocityTracking, MetricsError> {
    if log.is_empty() {
        return Err(MetricsError::Empty("velocity log"));
    }
    let n = log.len() as f64;
    let mut linear = 0.0;
    let mut yaw = 0.0;
    for row in log {
        linear += (row[0] - cmd.forward).hypot(row[1] - cmd.lateral);
        yaw += (row[2] - cmd.yaw_rate).abs();
    }
    Ok(VelocityTracking {
        linear: linear / n,
        yaw: yaw / n,
    })
}

/// One tick of robot state, the input to the reward.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSample {
    /// 12 joint positions, leg-major (FR, FL, HR, HL) x (abd, hip, knee).
    pub joint_positions: [f64; 12],
    pub joint_velocities: [f64; 12],
    pub joint_torques: [f64; 12],
    pub joint_torque_rates: [f64; 12],
    /// Measured base velocity (forward, lateral, yaw rate).
    pub base_velocity: [f64; 3],
    /// Commanded base velocity.
    pub commanded_velocity: [f64; 3],
    /// Gravity direction in the base frame, unit norm.
    pub gravity: [f64; 3],
    pub base_height: f64,
    pub desired_base_height: f64,
    /// Per-leg contact force (N).
    pub foot_forces: [[f64; 3]; 4],
    /// Per-leg foot velocity in the world frame (m/s).
    pub foot_velocities: [[f64; 3]; 4],
    /// Desired stance state per leg; derived from phases when absent.
    pub desired_contacts: Option<[bool; 4]>,
    /// Per-leg phases, the gate of the contact penalty.
    pub phases: [f64; 4],
}

impl StateSample {
    /// A sample with everything at its ideal: zero torques and rates,
    /// exact velocity and height, upright posture, no gated contact
    /// penalty, and joints exactly on the reference.
    pub fn ideal(reference: &JointReference) -> Self {
        Self {
            joint_positions: reference.positions,
            joint_velocities: reference.velocities,
            joint_torques: [0.0; 12],
            joint_torque_rates: [0.0; 12],
            base_velocity: [0.0; 3],
            commanded_velocity: [0.0; 3],
            gravity: [0.0, 0.0, 1.0],
            base_height: 0.30,
            desired_base_height: 0.30,
            foot_forces: [[0.0; 3]; 4],
            foot_velocities: [[0.0; 3]; 4],
            desired_contacts: None,
            phases: [0.0; 4],
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        let norm = (self.gravity[0] * self.gravity[0]
            + self.gravity[1] * self.gravity[1]
            + self.gravity[2] * self.gravity[2])
            .sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(MetricsError::SequenceMismatch(format!(
                "gravity direction norm {norm} is not unit"
            )));
        }
        Ok(())
    }
}

/// Reference joint positions and velocities for the imitation term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReference {
    pub positions: [f64; 12],
    pub velocities: [f64; 12],
}

/// Per-term reward values, each in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown {
    /// Joint torque magnitude and rate.
    pub torque: f64,
    /// Base-velocity tracking.
    pub velocity: f64,
    /// Joint position/velocity imitation.
    pub imitation: f64,
    /// Base orientation (gravity alignment).
    pub balance: f64,
    /// Base height tracking.
    pub height: f64,
    /// Phase-gated foot contact consistency.
    pub contact: f64,
    /// Weighted total.
    pub total: f64,
}

/// Term weights: torque, velocity, imitation, balance, height, contact.
pub const REWARD_WEIGHTS: [f64; 6] = [0.2, 0.15, 0.5, 0.05, 0.05, 0.05];

fn norm_sq(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().map(|v| v * v).sum()
}

/// Evaluate the reward of one state sample against a joint reference.
///
/// The contact term penalizes stance-foot speed and swing-foot force,
/// gated by `sin^2(phase)` so the penalty fades where the desired contact
/// state flips (phase 0 and half-turn).
pub fn reward(sample: &StateSample, reference: &JointReference) -> RewardBreakdown {
    let torque = 0.5 * (-norm_sq(sample.joint_torques.iter().map(|t| 0.05 * t))).exp()
        + 0.5 * (-norm_sq(sample.joint_torque_rates.iter().map(|t| 0.5 * t))).exp();

    let velocity = (-8.0
        * norm_sq(
            (0..3).map(|k| sample.base_velocity[k] - sample.commanded_velocity[k]),
        ))
    .exp();

    let dq = (0..12).map(|k| sample.joint_positions[k] - reference.positions[k]);
    let dqd = (0..12).map(|k| sample.joint_velocities[k] - reference.velocities[k]);
    let imitation = 0.25 * (-2.0 * norm_sq(dq)).exp() + 0.75 * (-2.0 * norm_sq(dqd)).exp();

    let up = [0.0, 0.0, 1.0];
    let balance = (-80.0 * norm_sq((0..3).map(|k| sample.gravity[k] - up[k]))).exp();

    let dh = sample.base_height - sample.desired_base_height;
    let height = (-80.0 * dh * dh).exp();

    let contacts = sample
        .desired_contacts
        .unwrap_or_else(|| cpg::contact_schedule(&sample.phases));
    let mut penalty = 0.0;
    for i in 0..4 {
        // Swing feet are penalized for contact force, stance feet for
        // world-frame speed.
        let foot_cost = if contacts[i] {
            norm_sq(sample.foot_velocities[i].iter().map(|v| 2.0 * v))
        } else {
            norm_sq(sample.foot_forces[i].iter().map(|f| 0.08 * f))
        };
        let gate = sample.phases[i].sin().powi(2);
        penalty += foot_cost * gate;
    }
    let contact = (-penalty).exp();

    let terms = [torque, velocity, imitation, balance, height, contact];
    let total = REWARD_WEIGHTS
        .iter()
        .zip(&terms)
        .map(|(w, r)| w * r)
        .sum();

    RewardBreakdown {
        torque,
        velocity,
        imitation,
        balance,
        height,
        contact,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::{find_gait, CpgNetwork};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::PI;

    fn zero_reference() -> JointReference {
        JointReference {
            positions: [0.0; 12],
            velocities: [0.0; 12],
        }
    }

    fn schedule(gait: &str, seconds: f64, rate: f64) -> ContactSequence {
        let gait = find_gait(gait).unwrap();
        let mut net = CpgNetwork::new(gait).unwrap();
        let dt = 0.0025f64.min(1.0 / rate);
        let per_sample = (1.0 / rate / dt).round() as usize;
        let samples = (seconds * rate).round() as usize;
        let mut rows = Vec::with_capacity(samples);
        for _ in 0..samples {
            rows.push(net.desired_contacts());
            for _ in 0..per_sample {
                net.step(dt).unwrap();
            }
        }
        ContactSequence::from_rows(&rows, rate).unwrap()
    }

    #[test]
    fn similarity_identity_and_complement() {
        let seq = schedule("trot", 2.0, 100.0);
        assert_eq!(similarity(&seq, &seq).unwrap(), 1.0);
        assert_eq!(similarity(&seq.complement(), &seq).unwrap(), 0.0);
    }

    #[test]
    fn similarity_five_percent_flips() {
        // 500 samples x 4 legs = 2000 entries; flip exactly 100.
        let rows = vec![[true, false, true, false]; 500];
        let desired = ContactSequence::from_rows(&rows, 100.0).unwrap();
        let mut legs: [Vec<bool>; 4] = [
            desired.leg(Leg::FrontRight).to_vec(),
            desired.leg(Leg::FrontLeft).to_vec(),
            desired.leg(Leg::HindRight).to_vec(),
            desired.leg(Leg::HindLeft).to_vec(),
        ];
        for k in 0..100 {
            let leg = k % 4;
            let idx = (k * 5) % 500;
            legs[leg][idx] = !legs[leg][idx];
        }
        let actual = ContactSequence::new(legs, 100.0).unwrap();
        let s = similarity(&actual, &desired).unwrap();
        assert_abs_diff_eq!(s, 0.95, epsilon = 1e-12);
    }

    #[test]
    fn similarity_is_symmetric() {
        let a = schedule("trot", 1.0, 100.0);
        let b = schedule("four-legged-walk", 1.0, 100.0);
        // Walk runs at a different period; truncate to equal length.
        let n = a.len().min(b.len());
        let cut = |s: &ContactSequence| {
            ContactSequence::new(
                [
                    s.leg(Leg::FrontRight)[..n].to_vec(),
                    s.leg(Leg::FrontLeft)[..n].to_vec(),
                    s.leg(Leg::HindRight)[..n].to_vec(),
                    s.leg(Leg::HindLeft)[..n].to_vec(),
                ],
                100.0,
            )
            .unwrap()
        };
        let (a, b) = (cut(&a), cut(&b));
        assert_eq!(similarity(&a, &b).unwrap(), similarity(&b, &a).unwrap());
        // Distinct gaits disagree on a sizable share of samples.
        assert!(similarity(&a, &b).unwrap() < 0.8);
    }

    #[test]
    fn similarity_rejects_mismatched_inputs() {
        let a = schedule("trot", 1.0, 100.0);
        let b = schedule("trot", 2.0, 100.0);
        assert!(matches!(
            similarity(&a, &b),
            Err(MetricsError::SequenceMismatch(_))
        ));
    }

    #[test]
    fn duty_factor_all_stance() {
        let seq = ContactSequence::from_rows(&vec![[true; 4]; 100], 100.0).unwrap();
        assert_eq!(duty_factor(&seq, Leg::FrontRight).unwrap(), 1.0);
        let empty = ContactSequence::from_rows(&[], 100.0).unwrap();
        assert!(matches!(
            duty_factor(&empty, Leg::FrontRight),
            Err(MetricsError::Empty(_))
        ));
    }

    #[test]
    fn duty_factors_track_gait_parameters() {
        let trot = schedule("trot", 5.0, 100.0);
        for leg in Leg::ALL {
            assert_abs_diff_eq!(duty_factor(&trot, leg).unwrap(), 0.5, epsilon = 0.02);
        }
        // Walk's per-leg duty breathes slowly; the gait-level (pooled)
        // stance fraction holds the published value.
        let walk = schedule("four-legged-walk", 20.0, 100.0);
        assert_abs_diff_eq!(gait_duty_factor(&walk).unwrap(), 0.75, epsilon = 0.02);
        for leg in Leg::ALL {
            assert_abs_diff_eq!(duty_factor(&walk, leg).unwrap(), 0.75, epsilon = 0.02);
        }
    }

    #[test]
    fn duty_converges_with_sample_rate() {
        let seq = schedule("trot", 4.0, 1000.0);
        for leg in Leg::ALL {
            assert_abs_diff_eq!(duty_factor(&seq, leg).unwrap(), 0.5, epsilon = 0.005);
        }
    }

    #[test]
    fn velocity_error_basics() {
        let cmd = VelocityCommand::new(0.5, 0.0, 0.1);
        let log = vec![[0.5, 0.0, 0.1]; 50];
        let err = velocity_error(&log, &cmd).unwrap();
        assert_eq!(err.linear, 0.0);
        assert_eq!(err.yaw, 0.0);

        let log = vec![[0.6, 0.0, 0.1]; 50];
        let err = velocity_error(&log, &cmd).unwrap();
        assert_relative_eq!(err.linear, 0.1, max_relative = 1e-12);

        assert!(matches!(
            velocity_error(&[], &cmd),
            Err(MetricsError::Empty(_))
        ));
    }

    #[test]
    fn perfect_sample_scores_one() {
        let reference = zero_reference();
        let sample = StateSample::ideal(&reference);
        let r = reward(&sample, &reference);
        assert_abs_diff_eq!(r.torque, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.velocity, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.imitation, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.balance, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.height, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.contact, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn contact_gate_vanishes_at_phase_boundaries() {
        let reference = zero_reference();
        let mut sample = StateSample::ideal(&reference);
        sample.foot_forces = [[100.0, 0.0, 300.0]; 4];
        sample.foot_velocities = [[2.0, 1.0, 0.5]; 4];
        // Phases 0 and the half-turn: gate is zero for any force/velocity.
        sample.phases = [0.0, PI - 1e-18, 0.0, PI - 1e-18];
        let r = reward(&sample, &reference);
        assert_abs_diff_eq!(r.contact, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn stance_foot_speed_is_penalized() {
        let reference = zero_reference();
        let mut sample = StateSample::ideal(&reference);
        // One stance foot moving at 0.5 m/s, gate fully open.
        sample.phases = [PI / 2.0, 0.0, 0.0, 0.0];
        sample.foot_velocities[0] = [0.5, 0.0, 0.0];
        let r = reward(&sample, &reference);
        assert_relative_eq!(r.contact, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn swing_foot_force_is_penalized() {
        let reference = zero_reference();
        let mut sample = StateSample::ideal(&reference);
        sample.phases = [-PI / 2.0, 0.0, 0.0, 0.0];
        sample.foot_forces[0] = [0.0, 0.0, 12.5];
        let r = reward(&sample, &reference);
        assert_relative_eq!(r.contact, (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn reward_terms_stay_in_unit_interval() {
        let reference = zero_reference();
        let mut sample = StateSample::ideal(&reference);
        sample.joint_torques = [30.0; 12];
        sample.joint_torque_rates = [100.0; 12];
        sample.base_velocity = [2.0, -1.0, 3.0];
        sample.gravity = [1.0, 0.0, 0.0];
        sample.base_height = 1.0;
        sample.foot_forces = [[200.0; 3]; 4];
        sample.foot_velocities = [[3.0; 3]; 4];
        sample.phases = [PI / 2.0; 4];
        let r = reward(&sample, &reference);
        for term in [r.torque, r.velocity, r.imitation, r.balance, r.height, r.contact, r.total] {
            assert!(term > 0.0 && term <= 1.0, "term {term} out of (0, 1]");
        }
    }

    #[test]
    fn reward_decreases_with_each_penalty() {
        let reference = zero_reference();
        let base = reward(&StateSample::ideal(&reference), &reference).total;

        let mut torque = StateSample::ideal(&reference);
        torque.joint_torques = [5.0; 12];
        assert!(reward(&torque, &reference).total < base);

        let mut vel = StateSample::ideal(&reference);
        vel.base_velocity = [0.3, 0.0, 0.0];
        assert!(reward(&vel, &reference).total < base);

        let mut posture = StateSample::ideal(&reference);
        posture.gravity = [0.1, 0.0, (1.0f64 - 0.01).sqrt()];
        assert!(reward(&posture, &reference).total < base);

        // Monotone: growing torque keeps shrinking the reward.
        let mut last = base;
        for magnitude in [1.0, 2.0, 4.0, 8.0] {
            let mut s = StateSample::ideal(&reference);
            s.joint_torques = [magnitude; 12];
            let r = reward(&s, &reference).total;
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn gravity_validation() {
        let reference = zero_reference();
        let mut sample = StateSample::ideal(&reference);
        sample.validate().unwrap();
        sample.gravity = [0.0, 0.0, 0.5];
        assert!(sample.validate().is_err());
    }
}
