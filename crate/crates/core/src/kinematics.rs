//! Analytic kinematics of a 3-joint quadruped leg: abduction about the body
//! x-axis, then hip and knee pitch. Knee-backward morphology, closed-form
//! inverse kinematics, and an analytic Jacobian for velocity mapping.
//!
//! The hip frame has x forward, y to the robot's left, z up, origin at the
//! abduction pivot. At the zero configuration the leg hangs straight down
//! with the foot at `(0, side * d, -(thigh + shank))`.

use crate::angle::wrap_diff;
use crate::cpg::Leg;

/// Geometry of one leg.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegGeometry {
    /// Lateral offset from the abduction axis to the leg plane (m).
    pub abduction_offset: f64,
    /// Thigh length (m).
    pub thigh: f64,
    /// Shank length (m).
    pub shank: f64,
    /// +1 for left-side legs, -1 for right-side legs.
    pub side: f64,
}

impl LegGeometry {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        if !(self.thigh > 0.0) || !(self.shank > 0.0) || !(self.abduction_offset >= 0.0) {
            return Err(KinematicsError::InvalidGeometry(format!(
                "thigh {} / shank {} must be positive, abduction offset {} non-negative",
                self.thigh, self.shank, self.abduction_offset
            )));
        }
        Ok(())
    }
}

/// Joint angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointAngles {
    pub abduction: f64,
    pub hip: f64,
    pub knee: f64,
}

impl JointAngles {
    pub fn new(abduction: f64, hip: f64, knee: f64) -> Self {
        Self {
            abduction,
            hip,
            knee,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.abduction, self.hip, self.knee]
    }
}

/// Mechanical knee range, knee-backward convention (negative angles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KneeLimits {
    pub min: f64,
    pub max: f64,
}

impl Default for KneeLimits {
    fn default() -> Self {
        Self { min: -2.6, max: -0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("invalid leg geometry: {0}")]
    InvalidGeometry(String),
    #[error(
        "target out of reach: planar distance {distance:.4} m outside [{min:.4}, {max:.4}] m"
    )]
    Unreachable { distance: f64, min: f64, max: f64 },
    #[error("target on the abduction axis: lateral distance {lateral:.4} m below offset {offset:.4} m")]
    SingularTarget { lateral: f64, offset: f64 },
    #[error("knee angle {value:.4} rad violates limits [{min:.4}, {max:.4}]")]
    KneeLimit { value: f64, min: f64, max: f64 },
    #[error("jacobian near singular (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },
    #[error("geometry file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Foot position in the hip frame for the given joint angles.
pub fn forward_kinematics(q: &JointAngles, g: &LegGeometry) -> [f64; 3] {
    let (sh, ch) = q.hip.sin_cos();
    let (shk, chk) = (q.hip + q.knee).sin_cos();
    let x = -g.thigh * sh - g.shank * shk;
    let y0 = g.side * g.abduction_offset;
    let zp = -g.thigh * ch - g.shank * chk;
    let (sa, ca) = q.abduction.sin_cos();
    [x, y0 * ca - zp * sa, y0 * sa + zp * ca]
}

/// Closed-form inverse kinematics, knee-backward branch.
///
/// Joint limits are checked, never clamped; an out-of-range knee is an
/// error. The abduction angle is recovered from the lateral plane, then the
/// remaining two joints from the planar two-link geometry.
pub fn inverse_kinematics(
    target: [f64; 3],
    g: &LegGeometry,
    limits: &KneeLimits,
) -> Result<JointAngles, KinematicsError> {
    g.validate()?;
    let [x, y, z] = target;
    let d = g.abduction_offset;

    let lateral = y.hypot(z);
    if lateral <= d + 1e-12 && d > 0.0 {
        return Err(KinematicsError::SingularTarget {
            lateral,
            offset: d,
        });
    }
    if d == 0.0 && lateral < 1e-12 && x.abs() < 1e-12 {
        return Err(KinematicsError::SingularTarget {
            lateral,
            offset: d,
        });
    }

    // In-plane vertical coordinate (negative: foot below the hip line).
    let zp = -(lateral * lateral - d * d).max(0.0).sqrt();
    let y0 = g.side * d;
    let abduction = wrap_diff(z.atan2(y) - zp.atan2(y0));

    let planar = (x * x + zp * zp).sqrt();
    let min_reach = (g.thigh - g.shank).abs();
    let max_reach = g.thigh + g.shank;
    if planar < min_reach - 1e-12 || planar > max_reach + 1e-12 {
        return Err(KinematicsError::Unreachable {
            distance: planar,
            min: min_reach,
            max: max_reach,
        });
    }

    let cos_knee = ((planar * planar - g.thigh * g.thigh - g.shank * g.shank)
        / (2.0 * g.thigh * g.shank))
        .clamp(-1.0, 1.0);
    let knee = -cos_knee.acos();
    if knee < limits.min || knee > limits.max {
        return Err(KinematicsError::KneeLimit {
            value: knee,
            min: limits.min,
            max: limits.max,
        });
    }

    let (sk, ck) = knee.sin_cos();
    let hip = wrap_diff((-x).atan2(-zp) - (g.shank * sk).atan2(g.thigh + g.shank * ck));

    Ok(JointAngles::new(abduction, hip, knee))
}

/// Analytic Jacobian of [`forward_kinematics`] with respect to
/// (abduction, hip, knee), one row per Cartesian coordinate.
pub fn jacobian(q: &JointAngles, g: &LegGeometry) -> [[f64; 3]; 3] {
    let (sh, ch) = q.hip.sin_cos();
    let (shk, chk) = (q.hip + q.knee).sin_cos();
    let (sa, ca) = q.abduction.sin_cos();
    let y0 = g.side * g.abduction_offset;
    let zp = -g.thigh * ch - g.shank * chk;

    let dx_dhip = zp;
    let dx_dknee = -g.shank * chk;
    let dzp_dhip = g.thigh * sh + g.shank * shk;
    let dzp_dknee = g.shank * shk;

    [
        [0.0, dx_dhip, dx_dknee],
        [-sa * y0 - ca * zp, -sa * dzp_dhip, -sa * dzp_dknee],
        [ca * y0 - sa * zp, ca * dzp_dhip, ca * dzp_dknee],
    ]
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn frobenius(m: &[[f64; 3]; 3]) -> f64 {
    m.iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Solve `J(q) * qdot = foot_velocity` exactly.
///
/// Near-singular configurations (straight knee) are reported as an error;
/// there is no pseudo-inverse fallback.
pub fn joint_velocities(
    q: &JointAngles,
    foot_velocity: [f64; 3],
    g: &LegGeometry,
) -> Result<[f64; 3], KinematicsError> {
    let j = jacobian(q, g);
    let det = det3(&j);

    // Adjugate (transposed cofactors).
    let adj = [
        [
            j[1][1] * j[2][2] - j[1][2] * j[2][1],
            j[0][2] * j[2][1] - j[0][1] * j[2][2],
            j[0][1] * j[1][2] - j[0][2] * j[1][1],
        ],
        [
            j[1][2] * j[2][0] - j[1][0] * j[2][2],
            j[0][0] * j[2][2] - j[0][2] * j[2][0],
            j[0][2] * j[1][0] - j[0][0] * j[1][2],
        ],
        [
            j[1][0] * j[2][1] - j[1][1] * j[2][0],
            j[0][1] * j[2][0] - j[0][0] * j[2][1],
            j[0][0] * j[1][1] - j[0][1] * j[1][0],
        ],
    ];

    // Condition estimate: ||J||_F * ||J^-1||_F.
    let cond = if det.abs() < f64::MIN_POSITIVE {
        f64::INFINITY
    } else {
        frobenius(&j) * frobenius(&adj) / det.abs()
    };
    if cond > 1e6 {
        return Err(KinematicsError::SingularJacobian { cond });
    }

    let v = foot_velocity;
    Ok([
        (adj[0][0] * v[0] + adj[0][1] * v[1] + adj[0][2] * v[2]) / det,
        (adj[1][0] * v[0] + adj[1][1] * v[1] + adj[1][2] * v[2]) / det,
        (adj[2][0] * v[0] + adj[2][1] * v[1] + adj[2][2] * v[2]) / det,
    ])
}

/// Whole-robot geometry: shared leg link lengths plus body dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotGeometry {
    /// Abduction lateral offset (m).
    pub abduction_offset: f64,
    /// Thigh length (m).
    pub thigh: f64,
    /// Shank length (m).
    pub shank: f64,
    /// Body length between front and hind hip pitch axes (m).
    pub body_length: f64,
    /// Body width between left and right abduction axes (m).
    pub body_width: f64,
    /// Standing height of the hip above the foot (m).
    pub stand_height: f64,
    pub knee_limits: KneeLimits,
}

impl Default for RobotGeometry {
    fn default() -> Self {
        Self {
            abduction_offset: 0.062,
            thigh: 0.195,
            shank: 0.195,
            body_length: 0.42,
            body_width: 0.27,
            stand_height: 0.30,
            knee_limits: KneeLimits::default(),
        }
    }
}

impl RobotGeometry {
    pub fn leg_geometry(&self, leg: Leg) -> LegGeometry {
        LegGeometry {
            abduction_offset: self.abduction_offset,
            thigh: self.thigh,
            shank: self.shank,
            side: leg.side_sign(),
        }
    }

    /// Foot position in the hip frame when standing at rest.
    pub fn nominal_foot(&self, leg: Leg) -> [f64; 3] {
        [
            0.0,
            leg.side_sign() * self.abduction_offset,
            -self.stand_height,
        ]
    }

    /// Parse the plain-text `key = value` geometry format. Unset keys keep
    /// their defaults. Lengths in meters, angles in radians.
    pub fn parse(text: &str) -> Result<Self, KinematicsError> {
        let mut geo = RobotGeometry::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(KinematicsError::Parse {
                    line: line_no,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            let value: f64 = value.trim().parse().map_err(|_| KinematicsError::Parse {
                line: line_no,
                message: format!("invalid number '{}'", value.trim()),
            })?;
            match key.trim() {
                "abduction_offset" | "d" => geo.abduction_offset = value,
                "thigh_length" | "thigh" => geo.thigh = value,
                "shank_length" | "shank" => geo.shank = value,
                "body_length" => geo.body_length = value,
                "body_width" => geo.body_width = value,
                "stand_height" => geo.stand_height = value,
                "knee_min" => geo.knee_limits.min = value,
                "knee_max" => geo.knee_limits.max = value,
                other => {
                    return Err(KinematicsError::Parse {
                        line: line_no,
                        message: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        geo.validate()?;
        Ok(geo)
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        self.leg_geometry(Leg::FrontLeft).validate()?;
        if !(self.body_length > 0.0) || !(self.body_width > 0.0) || !(self.stand_height > 0.0) {
            return Err(KinematicsError::InvalidGeometry(
                "body dimensions and stand height must be positive".into(),
            ));
        }
        if !(self.knee_limits.min < self.knee_limits.max) {
            return Err(KinematicsError::InvalidGeometry(format!(
                "knee limits [{}, {}] are inverted",
                self.knee_limits.min, self.knee_limits.max
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::PI;

    fn left_leg() -> LegGeometry {
        LegGeometry {
            abduction_offset: 0.062,
            thigh: 0.195,
            shank: 0.195,
            side: 1.0,
        }
    }

    fn wide_limits() -> KneeLimits {
        KneeLimits { min: -3.1, max: 0.0 }
    }

    /// Random pose with the foot below the hip line in the leg plane, the
    /// half-space the closed-form branch covers.
    fn random_pose(rng: &mut impl Rng) -> JointAngles {
        loop {
            let q = JointAngles::new(
                rng.random_range(-1.2..1.2),
                rng.random_range(-1.2..1.2),
                rng.random_range(-2.4..-0.2),
            );
            let zp = -0.195 * q.hip.cos() - 0.195 * (q.hip + q.knee).cos();
            if zp < -0.02 {
                return q;
            }
        }
    }

    #[test]
    fn zero_pose_hangs_straight_down() {
        let g = left_leg();
        let foot = forward_kinematics(&JointAngles::new(0.0, 0.0, 0.0), &g);
        assert_abs_diff_eq!(foot[0], 0.0);
        assert_abs_diff_eq!(foot[1], 0.062);
        assert_abs_diff_eq!(foot[2], -0.39);
    }

    #[test]
    fn quarter_knee_fold_moves_foot_forward() {
        let g = left_leg();
        let foot = forward_kinematics(&JointAngles::new(0.0, 0.0, -PI / 2.0), &g);
        assert_abs_diff_eq!(foot[0], 0.195, epsilon = 1e-12);
        assert_abs_diff_eq!(foot[1], 0.062, epsilon = 1e-12);
        assert_abs_diff_eq!(foot[2], -0.195, epsilon = 1e-12);
    }

    #[test]
    fn pure_abduction_rotates_about_x() {
        let g = left_leg();
        let foot = forward_kinematics(&JointAngles::new(PI / 2.0, 0.0, 0.0), &g);
        assert_abs_diff_eq!(foot[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(foot[1], 0.39, epsilon = 1e-12);
        assert_abs_diff_eq!(foot[2], 0.062, epsilon = 1e-12);
    }

    #[test]
    fn ik_round_trips_zero_pose() {
        let g = left_leg();
        let q = inverse_kinematics([0.0, 0.062, -0.39], &g, &wide_limits()).unwrap();
        assert_abs_diff_eq!(q.abduction, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.hip, 0.0, epsilon = 1e-9);
        // The fully stretched knee sits at the reach boundary; acos of a
        // clamped cosine is exact zero here.
        assert_abs_diff_eq!(q.knee, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn fk_ik_identity_on_random_targets() {
        let limits = wide_limits();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let g = if trial % 2 == 0 {
                left_leg()
            } else {
                LegGeometry { side: -1.0, ..left_leg() }
            };
            let q = random_pose(&mut rng);
            let target = forward_kinematics(&q, &g);
            let solved = inverse_kinematics(target, &g, &limits).unwrap();
            let foot = forward_kinematics(&solved, &g);
            for k in 0..3 {
                assert!(
                    (foot[k] - target[k]).abs() < 1e-9,
                    "trial {trial}: axis {k} error {}",
                    (foot[k] - target[k]).abs()
                );
            }
            // Same branch in, same angles out.
            assert_abs_diff_eq!(solved.abduction, q.abduction, epsilon = 1e-9);
            assert_abs_diff_eq!(solved.hip, q.hip, epsilon = 1e-9);
            assert_abs_diff_eq!(solved.knee, q.knee, epsilon = 1e-9);
        }
    }

    #[test]
    fn unreachable_targets_error() {
        let g = left_leg();
        let err = inverse_kinematics([0.0, 0.062, -0.40], &g, &wide_limits()).unwrap_err();
        assert!(matches!(err, KinematicsError::Unreachable { .. }));

        let err = inverse_kinematics([0.0, 0.0, 0.0], &g, &wide_limits()).unwrap_err();
        assert!(matches!(err, KinematicsError::SingularTarget { .. }));
    }

    #[test]
    fn knee_limits_reported_not_clamped() {
        let g = left_leg();
        // Nearly stretched: knee would be ~-0.05 rad, outside (-2.6, -0.1).
        let target = forward_kinematics(&JointAngles::new(0.0, 0.1, -0.05), &g);
        let err = inverse_kinematics(target, &g, &KneeLimits::default()).unwrap_err();
        assert!(matches!(err, KinematicsError::KneeLimit { .. }));
    }

    #[test]
    fn mirror_symmetry() {
        let left = left_leg();
        let right = LegGeometry { side: -1.0, ..left };
        let limits = wide_limits();
        let target = [0.05, 0.11, -0.30];
        let mirrored = [0.05, -0.11, -0.30];
        let ql = inverse_kinematics(target, &left, &limits).unwrap();
        let qr = inverse_kinematics(mirrored, &right, &limits).unwrap();
        assert_abs_diff_eq!(ql.abduction, -qr.abduction, epsilon = 1e-12);
        assert_abs_diff_eq!(ql.hip, qr.hip, epsilon = 1e-12);
        assert_abs_diff_eq!(ql.knee, qr.knee, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let g = left_leg();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let h = 1e-6;
        for _ in 0..100 {
            let q = random_pose(&mut rng);
            let j = jacobian(&q, &g);
            for col in 0..3 {
                let mut plus = q.as_array();
                let mut minus = q.as_array();
                plus[col] += h;
                minus[col] -= h;
                let fp = forward_kinematics(
                    &JointAngles::new(plus[0], plus[1], plus[2]),
                    &g,
                );
                let fm = forward_kinematics(
                    &JointAngles::new(minus[0], minus[1], minus[2]),
                    &g,
                );
                for row in 0..3 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!(
                        (j[row][col] - fd).abs() < 1e-6,
                        "J[{row}][{col}] = {} vs fd {}",
                        j[row][col],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn zero_velocity_maps_to_zero_rates() {
        let g = left_leg();
        let q = JointAngles::new(0.2, 0.3, -1.1);
        let rates = joint_velocities(&q, [0.0, 0.0, 0.0], &g).unwrap();
        assert_eq!(rates, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn joint_rates_match_ik_differencing() {
        let g = left_leg();
        let limits = wide_limits();
        let q = JointAngles::new(0.15, 0.35, -1.3);
        let x = forward_kinematics(&q, &g);
        let v = [0.21, -0.14, 0.09];
        let rates = joint_velocities(&q, v, &g).unwrap();

        let dt = 1e-6;
        let x2 = [x[0] + v[0] * dt, x[1] + v[1] * dt, x[2] + v[2] * dt];
        let q2 = inverse_kinematics(x2, &g, &limits).unwrap();
        let fd = [
            (q2.abduction - q.abduction) / dt,
            (q2.hip - q.hip) / dt,
            (q2.knee - q.knee) / dt,
        ];
        for k in 0..3 {
            assert!(
                (rates[k] - fd[k]).abs() < 1e-4,
                "joint {k}: {} vs {}",
                rates[k],
                fd[k]
            );
        }
    }

    #[test]
    fn straight_knee_is_singular() {
        let g = left_leg();
        let q = JointAngles::new(0.0, 0.2, 0.0);
        let err = joint_velocities(&q, [0.1, 0.0, 0.0], &g).unwrap_err();
        assert!(matches!(err, KinematicsError::SingularJacobian { .. }));
    }

    #[test]
    fn geometry_file_parses_and_validates() {
        let geo = RobotGeometry::parse(
            "
# test geometry
d = 0.05
thigh_length = 0.2
shank_length = 0.21
body_length = 0.4
body_width = 0.25
stand_height = 0.28
knee_min = -2.5
knee_max = -0.15
",
        )
        .unwrap();
        assert_eq!(geo.abduction_offset, 0.05);
        assert_eq!(geo.shank, 0.21);
        assert_eq!(geo.knee_limits.max, -0.15);

        let err = RobotGeometry::parse("thigh_length = x").unwrap_err();
        assert!(matches!(err, KinematicsError::Parse { line: 1, .. }));
        let err = RobotGeometry::parse("whatever = 1.0").unwrap_err();
        assert!(matches!(err, KinematicsError::Parse { .. }));
        let err = RobotGeometry::parse("thigh_length = -1").unwrap_err();
        assert!(matches!(err, KinematicsError::InvalidGeometry(_)));
    }

    #[test]
    fn default_geometry_is_consistent() {
        let geo = RobotGeometry::default();
        geo.validate().unwrap();
        // Leg reach covers the standing pose.
        assert!(geo.stand_height < geo.thigh + geo.shank);
        let q = inverse_kinematics(
            geo.nominal_foot(Leg::FrontLeft),
            &geo.leg_geometry(Leg::FrontLeft),
            &geo.knee_limits,
        )
        .unwrap();
        assert!(q.knee < -0.1);
    }
}
