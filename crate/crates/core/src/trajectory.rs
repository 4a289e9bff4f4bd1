//! Foot-trajectory synthesis: per-leg phase plus a velocity command become
//! foot position, velocity and acceleration in the horizontal frame,
//! relative to each foot's standing position.
//!
//! The horizontal stride is a quintic with zero first and second derivatives
//! at both ends; the swing lift is a sextic bump peaking at the swing
//! height. Touchdown and liftoff therefore happen with zero foot velocity
//! and acceleration.

use crate::angle::wrap_phase;
use crate::cpg::Leg;
use crate::kinematics::{
    self, JointAngles, KinematicsError, RobotGeometry,
};

use std::f64::consts::PI;

/// Commanded body velocity in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VelocityCommand {
    /// Forward velocity (m/s).
    pub forward: f64,
    /// Lateral velocity, positive left (m/s).
    pub lateral: f64,
    /// Yaw rate, positive counterclockwise (rad/s).
    pub yaw_rate: f64,
}

impl VelocityCommand {
    pub fn new(forward: f64, lateral: f64, yaw_rate: f64) -> Self {
        Self {
            forward,
            lateral,
            yaw_rate,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.forward.is_finite() && self.lateral.is_finite() && self.yaw_rate.is_finite()
    }
}

/// Gait-level stride parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    /// Swing apex height (m).
    pub swing_height: f64,
    /// Gait period (s).
    pub period: f64,
    /// Stance fraction of the period.
    pub duty: f64,
}

pub const DEFAULT_SWING_HEIGHT: f64 = 0.08;

impl StepParams {
    pub fn new(swing_height: f64, period: f64, duty: f64) -> Self {
        Self {
            swing_height,
            period,
            duty,
        }
    }

    /// Stride parameters of a gait with the default swing height.
    pub fn for_gait(period: f64, duty: f64) -> Self {
        Self::new(DEFAULT_SWING_HEIGHT, period, duty)
    }
}

/// Stance or swing, as the trajectory shape selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    Stance,
    Swing,
}

/// Phase mapped into the piecewise stride coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubPhase {
    /// Intermediate variable in [-1, 1], one sweep per half.
    pub p: f64,
    /// Normalized progress in [0, 1]: under decreasing phase, 1 -> 0 over
    /// stance and 0 -> 1 over swing.
    pub progress: f64,
    pub contact: Contact,
}

/// Split a phase into its half-plane and normalized progress.
pub fn subphase(phi: f64) -> SubPhase {
    let phi = wrap_phase(phi);
    let (p, contact) = if phi >= 0.0 {
        (2.0 * phi / PI - 1.0, Contact::Stance)
    } else {
        (-2.0 * phi / PI - 1.0, Contact::Swing)
    };
    SubPhase {
        p,
        progress: (p + 1.0) / 2.0,
        contact,
    }
}

/// Per-leg stride lengths (m).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepLengths {
    pub x: f64,
    pub y: f64,
}

/// Stride lengths realizing the commanded velocity: the stance displacement
/// over one period. The yaw command becomes an antisymmetric lateral
/// component between front and hind legs.
pub fn step_lengths(
    cmd: &VelocityCommand,
    period: f64,
    duty: f64,
    body_length: f64,
    leg: Leg,
) -> StepLengths {
    step_lengths_scaled(cmd, period * duty, body_length, leg)
}

/// [`step_lengths`] with the stance time given directly, for phase sources
/// whose legs hold individual stance durations.
pub fn step_lengths_scaled(
    cmd: &VelocityCommand,
    stance_seconds: f64,
    body_length: f64,
    leg: Leg,
) -> StepLengths {
    StepLengths {
        x: cmd.forward * stance_seconds,
        y: (cmd.lateral + leg.fore_sign() * cmd.yaw_rate * body_length / 2.0) * stance_seconds,
    }
}

/// Foot target in the horizontal frame, relative to the standing position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootTarget {
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub acceleration: [f64; 3],
    pub contact: Contact,
}

/// Quintic stride shape and its derivatives: spans -1/2 .. +1/2 with flat
/// ends.
fn stride_shape(s: f64) -> (f64, f64, f64) {
    let value = ((6.0 * s - 15.0) * s + 10.0) * s * s * s - 0.5;
    let first = ((30.0 * s - 60.0) * s + 30.0) * s * s;
    let second = ((120.0 * s - 180.0) * s + 60.0) * s;
    (value, first, second)
}

/// Sextic lift shape: 64 s^3 (1-s)^3, peaking at 1 for s = 1/2.
fn lift_shape(s: f64) -> (f64, f64, f64) {
    let u = s * (1.0 - s);
    let value = 64.0 * u * u * u;
    let first = 192.0 * u * u * (1.0 - 2.0 * s);
    let second = 384.0 * u * ((1.0 - 2.0 * s) * (1.0 - 2.0 * s)) - 384.0 * u * u;
    (value, first, second)
}

/// Evaluate the foot target for one leg.
///
/// Velocity and acceleration follow by the chain rule through the progress
/// rate; the phase rate is treated as constant over the sample. At the
/// stance/swing boundaries both vanish regardless of the phase rate.
pub fn foot_target(
    phi: f64,
    phi_rate: f64,
    params: &StepParams,
    lengths: StepLengths,
) -> FootTarget {
    let sub = subphase(phi);
    let s = sub.progress;
    // ds/dphi: stance s = phi/pi, swing s = -phi/pi.
    let ds_dt = match sub.contact {
        Contact::Stance => phi_rate / PI,
        Contact::Swing => -phi_rate / PI,
    };

    let (q, dq, ddq) = stride_shape(s);
    let position_xy = [lengths.x * q, lengths.y * q];
    let velocity_xy = [lengths.x * dq * ds_dt, lengths.y * dq * ds_dt];
    let accel_xy = [
        lengths.x * ddq * ds_dt * ds_dt,
        lengths.y * ddq * ds_dt * ds_dt,
    ];

    let (z, vz, az) = match sub.contact {
        Contact::Stance => (0.0, 0.0, 0.0),
        Contact::Swing => {
            let (l, dl, ddl) = lift_shape(s);
            let h = params.swing_height;
            (h * l, h * dl * ds_dt, h * ddl * ds_dt * ds_dt)
        }
    };

    FootTarget {
        position: [position_xy[0], position_xy[1], z],
        velocity: [velocity_xy[0], velocity_xy[1], vz],
        acceleration: [accel_xy[0], accel_xy[1], az],
        contact: sub.contact,
    }
}

/// Reference motion of all four legs at one control instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceMotion {
    pub feet: [FootTarget; 4],
    pub joints: [JointAngles; 4],
    pub joint_rates: [[f64; 3]; 4],
}

/// Compose foot targets with inverse kinematics and the Jacobian velocity
/// map: the full phase-to-joint reference pipeline.
pub fn reference_joint_motion(
    phases: &[f64; 4],
    phase_rates: &[f64; 4],
    cmd: &VelocityCommand,
    params: &StepParams,
    robot: &RobotGeometry,
) -> Result<ReferenceMotion, KinematicsError> {
    let mut feet = [FootTarget {
        position: [0.0; 3],
        velocity: [0.0; 3],
        acceleration: [0.0; 3],
        contact: Contact::Stance,
    }; 4];
    let mut joints = [JointAngles::new(0.0, 0.0, 0.0); 4];
    let mut joint_rates = [[0.0; 3]; 4];

    for leg in Leg::ALL {
        let i = leg.index();
        let lengths = step_lengths(cmd, params.period, params.duty, robot.body_length, leg);
        let target = foot_target(phases[i], phase_rates[i], params, lengths);
        let nominal = robot.nominal_foot(leg);
        let position = [
            nominal[0] + target.position[0],
            nominal[1] + target.position[1],
            nominal[2] + target.position[2],
        ];
        let geometry = robot.leg_geometry(leg);
        let q = kinematics::inverse_kinematics(position, &geometry, &robot.knee_limits)?;
        let rates = kinematics::joint_velocities(&q, target.velocity, &geometry)?;
        feet[i] = target;
        joints[i] = q;
        joint_rates[i] = rates;
    }

    Ok(ReferenceMotion {
        feet,
        joints,
        joint_rates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpg::find_gait;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn trot_steps() -> StepParams {
        StepParams::for_gait(0.5, 0.5)
    }

    #[test]
    fn subphase_midpoints_and_limits() {
        let mid_stance = subphase(PI / 2.0);
        assert_eq!(mid_stance.contact, Contact::Stance);
        assert_abs_diff_eq!(mid_stance.p, 0.0);
        assert_abs_diff_eq!(mid_stance.progress, 0.5);

        let mid_swing = subphase(-PI / 2.0);
        assert_eq!(mid_swing.contact, Contact::Swing);
        assert_abs_diff_eq!(mid_swing.p, 0.0);
        assert_abs_diff_eq!(mid_swing.progress, 0.5);

        // Swing start under decreasing phase: phi -> 0 from below.
        let start = subphase(-1e-12);
        assert_eq!(start.contact, Contact::Swing);
        assert_abs_diff_eq!(start.p, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(start.progress, 0.0, epsilon = 1e-9);

        // Stance runs 1 -> 0 as phi decreases pi -> 0.
        assert_abs_diff_eq!(subphase(PI - 1e-12).progress, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(subphase(0.0).progress, 0.0);
    }

    #[test]
    fn step_length_formula() {
        let cmd = VelocityCommand::new(0.5, 0.0, 0.0);
        let lengths = step_lengths(&cmd, 0.5, 0.5, 0.42, Leg::FrontRight);
        assert_relative_eq!(lengths.x, 0.125);
        assert_eq!(lengths.y, 0.0);

        // Yaw splits laterally, antisymmetric front/hind.
        let cmd = VelocityCommand::new(0.0, 0.0, 1.0);
        let front = step_lengths(&cmd, 0.5, 0.5, 0.42, Leg::FrontLeft);
        let hind = step_lengths(&cmd, 0.5, 0.5, 0.42, Leg::HindLeft);
        assert_relative_eq!(front.y, 0.0525);
        assert_relative_eq!(hind.y, -0.0525);

        let zero = step_lengths(&VelocityCommand::default(), 0.5, 0.5, 0.42, Leg::HindRight);
        assert_eq!((zero.x, zero.y), (0.0, 0.0));
    }

    #[test]
    fn swing_apex_is_the_swing_height() {
        let params = trot_steps();
        let target = foot_target(-PI / 2.0, -4.0 * PI, &params, StepLengths::default());
        assert_abs_diff_eq!(target.position[2], 0.08, epsilon = 1e-15);
        assert_eq!(target.contact, Contact::Swing);
    }

    #[test]
    fn stance_midpoint_centers_the_stride() {
        let params = trot_steps();
        let lengths = StepLengths { x: 0.125, y: 0.02 };
        let target = foot_target(PI / 2.0, -4.0 * PI, &params, lengths);
        assert_abs_diff_eq!(target.position[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(target.position[1], 0.0, epsilon = 1e-15);
        assert_eq!(target.position[2], 0.0);
    }

    #[test]
    fn stride_endpoints_are_flat() {
        let params = trot_steps();
        let lengths = StepLengths { x: 0.125, y: 0.0 };
        // s = 1 at stance start (phi -> pi) and swing end (phi -> -pi).
        let target = foot_target(PI - 1e-15, -4.0 * PI, &params, lengths);
        assert_relative_eq!(target.position[0], 0.0625, max_relative = 1e-9);
        assert_eq!(target.position[2], 0.0);
        assert_abs_diff_eq!(target.velocity[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(target.acceleration[0], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn boundary_derivatives_vanish_by_finite_differences() {
        // Differentiate position along time across each boundary at a
        // constant phase rate; velocity and acceleration must vanish.
        let params = trot_steps();
        let lengths = StepLengths { x: 0.125, y: 0.03 };
        let rate = -4.0 * PI;
        let h = 1e-5;
        let position = |t: f64| {
            let phi = wrap_phase(1e-7 + rate * t);
            foot_target(phi, rate, &params, lengths).position
        };
        // Boundary crossing times for phi(t) = 1e-7 + rate * t hitting
        // 0 (stance->swing... here phase decreases through 0) and -pi.
        for crossing in [0.0 + 1e-7 / -rate, (PI + 1e-7) / -rate, (2.0 * PI + 1e-7) / -rate] {
            let before = position(crossing - h);
            let at = position(crossing);
            let after = position(crossing + h);
            for axis in 0..3 {
                let vel = (after[axis] - before[axis]) / (2.0 * h);
                let acc = (after[axis] - 2.0 * at[axis] + before[axis]) / (h * h);
                assert!(
                    vel.abs() < 1e-3,
                    "velocity {vel} at crossing {crossing}, axis {axis}"
                );
                assert!(
                    acc.abs() < 1e-1,
                    "acceleration {acc} at crossing {crossing}, axis {axis}"
                );
            }
        }
    }

    #[test]
    fn horizontal_position_is_continuous_across_halves() {
        let params = trot_steps();
        let lengths = StepLengths { x: 0.1, y: -0.04 };
        let eps = 1e-9;
        // Across phi = 0.
        let stance_end = foot_target(eps, -1.0, &params, lengths);
        let swing_start = foot_target(-eps, -1.0, &params, lengths);
        assert_abs_diff_eq!(
            stance_end.position[0],
            swing_start.position[0],
            epsilon = 1e-8
        );
        // Across the wrap at +-pi.
        let swing_end = foot_target(-PI + eps, -1.0, &params, lengths);
        let stance_start = foot_target(PI - eps, -1.0, &params, lengths);
        assert_abs_diff_eq!(
            swing_end.position[0],
            stance_start.position[0],
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            swing_end.position[1],
            stance_start.position[1],
            epsilon = 1e-8
        );
    }

    #[test]
    fn zero_command_keeps_stance_feet_still() {
        let params = trot_steps();
        for k in 0..50 {
            let phi = PI * k as f64 / 50.0;
            let target = foot_target(phi, -4.0 * PI, &params, StepLengths::default());
            assert_eq!(target.position[0], 0.0);
            assert_eq!(target.position[1], 0.0);
            assert_eq!(target.velocity, [0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn reference_motion_standing_pose_at_zero_command() {
        let robot = RobotGeometry::default();
        let params = trot_steps();
        // All legs mid-stance under zero command: exactly the standing pose.
        let phases = [PI / 2.0; 4];
        let rates = [-4.0 * PI; 4];
        let motion = reference_joint_motion(
            &phases,
            &rates,
            &VelocityCommand::default(),
            &params,
            &robot,
        )
        .unwrap();
        for leg in Leg::ALL {
            let q = motion.joints[leg.index()];
            let foot = kinematics::forward_kinematics(&q, &robot.leg_geometry(leg));
            let nominal = robot.nominal_foot(leg);
            for axis in 0..3 {
                assert_abs_diff_eq!(foot[axis], nominal[axis], epsilon = 1e-9);
            }
            assert_abs_diff_eq!(motion.joint_rates[leg.index()][0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reference_motion_is_periodic_over_the_gait() {
        // Drive phases through a trot cycle; joint references repeat.
        let robot = RobotGeometry::default();
        let trot = find_gait("trot").unwrap();
        let params = StepParams::for_gait(trot.period, trot.duty);
        let cmd = VelocityCommand::new(0.5, 0.0, 0.0);
        let rate = -2.0 * PI / trot.period;

        let at = |t: f64| {
            let phases = trot.offsets.map(|o| wrap_phase(o + rate * t));
            reference_joint_motion(&phases, &[rate; 4], &cmd, &params, &robot).unwrap()
        };
        for k in 0..10 {
            let t = k as f64 * trot.period / 10.0;
            let a = at(t);
            let b = at(t + trot.period);
            for i in 0..4 {
                assert_abs_diff_eq!(a.joints[i].hip, b.joints[i].hip, epsilon = 1e-9);
                assert_abs_diff_eq!(a.joints[i].knee, b.joints[i].knee, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn swing_raises_the_knee() {
        let robot = RobotGeometry::default();
        let params = trot_steps();
        let stance = reference_joint_motion(
            &[PI / 2.0; 4],
            &[-4.0 * PI; 4],
            &VelocityCommand::default(),
            &params,
            &robot,
        )
        .unwrap();
        let swing = reference_joint_motion(
            &[-PI / 2.0; 4],
            &[-4.0 * PI; 4],
            &VelocityCommand::default(),
            &params,
            &robot,
        )
        .unwrap();
        for i in 0..4 {
            assert!(
                (swing.joints[i].knee - stance.joints[i].knee).abs() > 0.1,
                "knee should fold to lift the foot 8 cm"
            );
        }
    }

    proptest! {
        // The stride never leaves +-a/2 and the lift stays within [0, h].
        #[test]
        fn ranges_hold_everywhere(phi in -PI..PI, ax in 0.0f64..0.3, ay in -0.2f64..0.2) {
            let params = trot_steps();
            let lengths = StepLengths { x: ax, y: ay };
            let target = foot_target(phi, -4.0 * PI, &params, lengths);
            prop_assert!(target.position[0].abs() <= ax / 2.0 + 1e-12);
            prop_assert!(target.position[1].abs() <= ay.abs() / 2.0 + 1e-12);
            prop_assert!(target.position[2] >= 0.0 && target.position[2] <= 0.08 + 1e-12);
            match target.contact {
                Contact::Stance => prop_assert_eq!(target.position[2], 0.0),
                Contact::Swing => {}
            }
        }
    }
}
