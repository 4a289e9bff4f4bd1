//! A single modified Hopf oscillator with a duty-modulated angular rate.
//!
//! The planar system has a stable circular limit cycle of radius `mu`. Its
//! angular rate depends on which half-plane the state is in, so that the
//! phase spends a fraction `duty` of the period in the stance half
//! (`sin(phase) >= 0`) and the rest in the swing half. The phase decreases
//! over time (clockwise motion).

use crate::angle;

/// Planar oscillator coordinates: `x = rho * cos(phase)`, `y = rho * sin(phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorState {
    pub x: f64,
    pub y: f64,
}

impl OscillatorState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(radius: f64, phase: f64) -> Self {
        Self {
            x: radius * phase.cos(),
            y: radius * phase.sin(),
        }
    }

    /// Distance from the origin.
    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Oscillator phase in `[-pi, pi)`.
    pub fn phase(&self) -> f64 {
        angle::wrap_phase(self.y.atan2(self.x))
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Parameters of the modified Hopf oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    /// Convergence gain toward the limit circle (1/s), positive.
    pub convergence_gain: f64,
    /// Radius of the limit circle, positive.
    pub limit_radius: f64,
    /// Sharpness of the logistic blend between the half-plane rates, positive.
    pub switch_sharpness: f64,
    /// Cycle period in seconds, positive.
    pub period: f64,
    /// Stance fraction of the period, in (0, 1).
    pub duty: f64,
}

impl OscillatorParams {
    pub fn new(
        convergence_gain: f64,
        limit_radius: f64,
        switch_sharpness: f64,
        period: f64,
        duty: f64,
    ) -> Result<Self, OscillatorError> {
        let params = Self {
            convergence_gain,
            limit_radius,
            switch_sharpness,
            period,
            duty,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), OscillatorError> {
        let checks = [
            ("convergence_gain", self.convergence_gain, self.convergence_gain > 0.0),
            ("limit_radius", self.limit_radius, self.limit_radius > 0.0),
            ("switch_sharpness", self.switch_sharpness, self.switch_sharpness > 0.0),
            ("period", self.period, self.period > 0.0),
            ("duty", self.duty, self.duty > 0.0 && self.duty < 1.0),
        ];
        for (name, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(OscillatorError::InvalidParam { name, value });
            }
        }
        Ok(())
    }

    /// Angular speed while deep in the stance half-plane (rad/s).
    pub fn stance_rate(&self) -> f64 {
        std::f64::consts::PI / (self.duty * self.period)
    }

    /// Angular speed while deep in the swing half-plane (rad/s).
    pub fn swing_rate(&self) -> f64 {
        std::f64::consts::PI / ((1.0 - self.duty) * self.period)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OscillatorError {
    #[error("invalid oscillator parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("integration step must be positive and finite, got {0}")]
    InvalidTimeStep(f64),
    #[error("coupling input must be finite, got ({0}, {1})")]
    NonFiniteCoupling(f64, f64),
    #[error("integration diverged to a non-finite state (dt = {dt} s too large?)")]
    Diverged { dt: f64 },
}

/// `1 / (e^x + 1)` evaluated without overflow for large `|x|`.
fn inv_one_plus_exp(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Instantaneous angular rate of the oscillator (rad/s), always positive.
///
/// Blends the stance and swing rates with a logistic switch on the vertical
/// coordinate, so the phase crosses the stance half in `duty * period`
/// seconds and the swing half in the rest.
pub fn angular_rate(state: &OscillatorState, params: &OscillatorParams) -> f64 {
    let b = params.switch_sharpness;
    params.stance_rate() * inv_one_plus_exp(-b * state.y)
        + params.swing_rate() * inv_one_plus_exp(b * state.y)
}

/// Time derivative of the state under the uncoupled oscillator dynamics.
///
/// The radial part attracts the state to the limit circle; the rotational
/// part turns it clockwise at [`angular_rate`].
pub fn vector_field(state: &OscillatorState, params: &OscillatorParams) -> (f64, f64) {
    let mu = params.limit_radius;
    let r2 = state.x * state.x + state.y * state.y;
    let radial = params.convergence_gain * (mu * mu - r2);
    let gamma = angular_rate(state, params);
    (
        radial * state.x + gamma * state.y,
        radial * state.y - gamma * state.x,
    )
}

/// Advance the oscillator by one classical 4th-order Runge-Kutta step.
///
/// `coupling` is an additive state-rate held constant over the step; pass
/// `(0.0, 0.0)` for an uncoupled oscillator. A non-finite result is reported
/// as [`OscillatorError::Diverged`], never clamped.
pub fn step(
    state: &OscillatorState,
    params: &OscillatorParams,
    coupling: (f64, f64),
    dt: f64,
) -> Result<OscillatorState, OscillatorError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(OscillatorError::InvalidTimeStep(dt));
    }
    if !coupling.0.is_finite() || !coupling.1.is_finite() {
        return Err(OscillatorError::NonFiniteCoupling(coupling.0, coupling.1));
    }

    let f = |s: &OscillatorState| {
        let (dx, dy) = vector_field(s, params);
        (dx + coupling.0, dy + coupling.1)
    };

    let k1 = f(state);
    let k2 = f(&OscillatorState::new(
        state.x + 0.5 * dt * k1.0,
        state.y + 0.5 * dt * k1.1,
    ));
    let k3 = f(&OscillatorState::new(
        state.x + 0.5 * dt * k2.0,
        state.y + 0.5 * dt * k2.1,
    ));
    let k4 = f(&OscillatorState::new(
        state.x + dt * k3.0,
        state.y + dt * k3.1,
    ));

    let next = OscillatorState::new(
        state.x + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        state.y + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    );
    if !next.is_finite() {
        return Err(OscillatorError::Diverged { dt });
    }
    Ok(next)
}
