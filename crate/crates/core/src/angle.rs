//! Angle arithmetic on the circle.
//!
//! Two wrapping conventions are used throughout the crate: leg phases live
//! in `[-pi, pi)` and phase-offset differences in `(-pi, pi]`.

use std::f64::consts::{PI, TAU};

/// Wrap an angle into the phase interval `[-pi, pi)`.
pub fn wrap_phase(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Wrap an angle into the offset-difference interval `(-pi, pi]`.
pub fn wrap_diff(angle: f64) -> f64 {
    let w = angle.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

/// Continue an unwrapped angle series given the previous unwrapped value and
/// the next wrapped sample.
pub fn unwrap_next(prev_unwrapped: f64, wrapped: f64) -> f64 {
    prev_unwrapped + wrap_diff(wrapped - wrap_phase(prev_unwrapped))
}

/// Circular mean of a set of angles (mean resultant direction), free of
/// wrap bias near the half-turn.
pub fn circular_mean(angles: impl IntoIterator<Item = f64>) -> f64 {
    let (sin_sum, cos_sum) = angles
        .into_iter()
        .fold((0.0, 0.0), |(s, c), a| (s + a.sin(), c + a.cos()));
    sin_sum.atan2(cos_sum)
}
