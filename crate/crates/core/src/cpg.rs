//! Four coupled Hopf oscillators: gait presets, diffusive rotation coupling,
//! overshoot-driven gait transitions, and attractor pinning for three-legged
//! gaits.
//!
//! Legs are indexed in the fixed order FR, FL, HR, HL. Each leg's desired
//! relative phase is encoded in a pairwise rotation matrix; swapping the
//! matrices swaps the gait, and a transient overshoot on the target offsets
//! speeds the swap up and keeps it out of dead zones.

use std::f64::consts::{PI, TAU};

use crate::angle::{wrap_diff, wrap_phase};
use crate::oscillator::{self, OscillatorError, OscillatorParams, OscillatorState};

pub const LEG_COUNT: usize = 4;

/// Default oscillator constants shared by every gait preset.
pub const DEFAULT_CONVERGENCE_GAIN: f64 = 50.0;
pub const DEFAULT_LIMIT_RADIUS: f64 = 1.0;
pub const DEFAULT_SWITCH_SHARPNESS: f64 = 50.0;
/// Default coupling strength between oscillators (1/s).
pub const DEFAULT_COUPLING_STRENGTH: f64 = 1.0;
/// Remaining-progress level below which a transition counts as complete.
pub const TRANSITION_CONVERGED: f64 = 0.1;
/// Phase held by a pinned oscillator: the highest point of the swing.
pub const PIN_PHASE: f64 = -PI / 2.0;

/// One leg of the quadruped, in the fixed network order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Leg {
    FrontRight = 0,
    FrontLeft = 1,
    HindRight = 2,
    HindLeft = 3,
}

impl Leg {
    pub const ALL: [Leg; 4] = [
        Leg::FrontRight,
        Leg::FrontLeft,
        Leg::HindRight,
        Leg::HindLeft,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Leg> {
        Leg::ALL.get(index).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::FrontRight => "FR",
            Leg::FrontLeft => "FL",
            Leg::HindRight => "HR",
            Leg::HindLeft => "HL",
        }
    }

    /// +1 for front legs, -1 for hind legs.
    pub fn fore_sign(self) -> f64 {
        match self {
            Leg::FrontRight | Leg::FrontLeft => 1.0,
            Leg::HindRight | Leg::HindLeft => -1.0,
        }
    }

    /// +1 for left-side legs, -1 for right-side legs.
    pub fn side_sign(self) -> f64 {
        match self {
            Leg::FrontLeft | Leg::HindLeft => 1.0,
            Leg::FrontRight | Leg::HindRight => -1.0,
        }
    }
}

impl std::fmt::Display for Leg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A named gait: period, duty factor and per-leg desired phase offsets.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitDefinition {
    pub name: String,
    /// Cycle period in seconds.
    pub period: f64,
    /// Stance fraction of the period.
    pub duty: f64,
    /// Desired relative phases in radians. For a three-legged gait the first
    /// three entries apply to the active legs in index order and the last is
    /// a placeholder.
    pub offsets: [f64; 4],
    /// True when the gait describes three active legs plus a held one.
    pub three_legged: bool,
}

impl GaitDefinition {
    pub fn new(
        name: impl Into<String>,
        period: f64,
        duty: f64,
        offsets: [f64; 4],
        three_legged: bool,
    ) -> Result<Self, CpgError> {
        let gait = Self {
            name: name.into(),
            period,
            duty,
            offsets,
            three_legged,
        };
        gait.validate()?;
        Ok(gait)
    }

    pub fn validate(&self) -> Result<(), CpgError> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(CpgError::InvalidGait {
                name: self.name.clone(),
                reason: format!("period must be positive, got {}", self.period),
            });
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(CpgError::InvalidGait {
                name: self.name.clone(),
                reason: format!("duty factor must lie in (0, 1), got {}", self.duty),
            });
        }
        if self.offsets.iter().any(|o| !o.is_finite()) {
            return Err(CpgError::InvalidGait {
                name: self.name.clone(),
                reason: "phase offsets must be finite".into(),
            });
        }
        Ok(())
    }

    /// Distribute a three-legged gait's offsets over the legs that stay
    /// active when `pinned` is held, placeholder at the pinned slot.
    pub fn offsets_with_pin(&self, pinned: Leg) -> [f64; 4] {
        let mut out = [0.0; 4];
        let mut next = 0;
        for leg in Leg::ALL {
            if leg == pinned {
                continue;
            }
            out[leg.index()] = self.offsets[next];
            next += 1;
        }
        out
    }
}

/// The five built-in gait presets.
pub fn gait_table() -> Vec<GaitDefinition> {
    let gait = |name: &str, period, duty, offsets, three_legged| GaitDefinition {
        name: name.to_string(),
        period,
        duty,
        offsets,
        three_legged,
    };
    vec![
        gait("trot", 0.5, 0.5, [0.0, PI, PI, 0.0], false),
        gait("pacing", 0.5, 0.5, [0.0, PI, 0.0, PI], false),
        gait("bounding", 0.3, 0.4, [0.0, 0.0, PI, PI], false),
        gait(
            "four-legged-walk",
            0.6,
            0.75,
            [0.0, 0.5 * PI, PI, 1.5 * PI],
            false,
        ),
        gait(
            "three-legged-walk",
            0.45,
            2.0 / 3.0,
            [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0, 0.0],
            true,
        ),
    ]
}

/// Look up a preset by name. Accepts a few common aliases and treats `_`
/// and `-` interchangeably.
pub fn find_gait(name: &str) -> Option<GaitDefinition> {
    let wanted = name.trim().to_ascii_lowercase().replace('_', "-");
    let canonical = match wanted.as_str() {
        "walk" => "four-legged-walk",
        "pace" => "pacing",
        "bound" => "bounding",
        "three-legged" | "tripod" => "three-legged-walk",
        other => other,
    };
    gait_table().into_iter().find(|g| g.name == canonical)
}

/// A 2x2 rotation, stored as its cosine and sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation2 {
    pub cos: f64,
    pub sin: f64,
}

impl Rotation2 {
    pub fn from_angle(theta: f64) -> Self {
        Self {
            cos: theta.cos(),
            sin: theta.sin(),
        }
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.cos * x - self.sin * y, self.sin * x + self.cos * y)
    }
}

/// Pairwise rotations `R[i][j]` by the desired offset difference between
/// legs `i` and `j`. `R[i][i]` is the identity.
pub fn connection_matrices(offsets: &[f64; 4]) -> [[Rotation2; 4]; 4] {
    let mut out = [[Rotation2 { cos: 1.0, sin: 0.0 }; 4]; 4];
    for i in 0..LEG_COUNT {
        for j in 0..LEG_COUNT {
            out[i][j] = Rotation2::from_angle(wrap_diff(offsets[i] - offsets[j]));
        }
    }
    out
}

/// Coupling strength plus the pairwise rotation matrices it drives.
#[derive(Debug, Clone)]
pub struct CouplingSpec {
    /// Coupling strength in 1/s.
    pub strength: f64,
    pub rotations: [[Rotation2; 4]; 4],
}

impl CouplingSpec {
    pub fn from_offsets(strength: f64, offsets: &[f64; 4]) -> Self {
        Self {
            strength,
            rotations: connection_matrices(offsets),
        }
    }
}

/// State of an in-flight gait transition.
#[derive(Debug, Clone)]
pub struct TransitionState {
    /// Desired offsets of the gait being left.
    pub initial_offsets: [f64; 4],
    /// Desired offsets of the gait being entered.
    pub target_offsets: [f64; 4],
    /// Overshoot strength `k`, non-negative.
    pub overshoot: f64,
    /// Leg pair (m, n) whose offset difference tracks progress.
    pub indicator: (usize, usize),
    /// Most recent remaining-progress value, 1 at the start, 0 when done.
    pub remaining: f64,
    /// Remaining-progress level at which the transition completes.
    pub converge_threshold: f64,
}

impl TransitionState {
    /// Build a transition, choosing the indicator pair with the largest
    /// wrapped offset change (ties broken by lowest leg indices).
    ///
    /// Returns `None` when no pair changes at all (identical gaits).
    pub fn new(
        initial_offsets: [f64; 4],
        target_offsets: [f64; 4],
        overshoot: f64,
    ) -> Result<Option<Self>, CpgError> {
        if !(overshoot >= 0.0) || !overshoot.is_finite() {
            return Err(CpgError::InvalidOvershoot(overshoot));
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for m in 0..LEG_COUNT {
            for n in (m + 1)..LEG_COUNT {
                let span = wrap_diff(
                    wrap_diff(target_offsets[m] - target_offsets[n])
                        - wrap_diff(initial_offsets[m] - initial_offsets[n]),
                );
                if span.abs() > 1e-9 && best.is_none_or(|(_, s)| span.abs() > s.abs()) {
                    best = Some(((m, n), span));
                }
            }
        }
        Ok(best.map(|(indicator, _)| Self {
            initial_offsets,
            target_offsets,
            overshoot,
            indicator,
            remaining: 1.0,
            converge_threshold: TRANSITION_CONVERGED,
        }))
    }

    /// Wrapped per-leg offset change from the initial to the target gait.
    pub fn offset_delta(&self) -> [f64; 4] {
        let mut delta = [0.0; 4];
        for i in 0..LEG_COUNT {
            delta[i] = wrap_diff(self.target_offsets[i] - self.initial_offsets[i]);
        }
        delta
    }

    /// Offset difference of the indicator pair in the target gait.
    fn indicator_target(&self) -> f64 {
        let (m, n) = self.indicator;
        wrap_diff(self.target_offsets[m] - self.target_offsets[n])
    }

    /// Denominator of the progress ratio: the indicator pair's total change.
    pub fn indicator_span(&self) -> f64 {
        let (m, n) = self.indicator;
        wrap_diff(
            self.indicator_target() - wrap_diff(self.initial_offsets[m] - self.initial_offsets[n]),
        )
    }

    /// Remaining progress and the offsets to couple with right now, given
    /// the indicator pair's current phase difference.
    ///
    /// The remaining progress is the wrapped distance still to travel over
    /// the total change, clamped to [0, 1]. Near the half-turn wrap the raw
    /// ratio is ambiguous by a whole turn, so the branch closest to the
    /// previous value is taken; progress is always recomputed from phases,
    /// never integrated.
    pub fn evaluate(&self, indicator_current: f64) -> Result<([f64; 4], f64), CpgError> {
        let span = self.indicator_span();
        if span.abs() < 1e-9 {
            return Err(CpgError::DegenerateIndicator);
        }
        let raw = wrap_diff(self.indicator_target() - indicator_current) / span;
        let shift = TAU / span.abs();
        let eta = [raw, raw + shift, raw - shift]
            .into_iter()
            .min_by(|a, b| {
                (a - self.remaining)
                    .abs()
                    .total_cmp(&(b - self.remaining).abs())
            })
            .unwrap()
            .clamp(0.0, 1.0);

        let delta = self.offset_delta();
        let mut offsets = [0.0; 4];
        for i in 0..LEG_COUNT {
            offsets[i] = self.target_offsets[i] + self.overshoot * eta * delta[i];
        }
        Ok((offsets, eta))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CpgError {
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error("invalid gait '{name}': {reason}")]
    InvalidGait { name: String, reason: String },
    #[error("a gait transition is already in progress")]
    TransitionInProgress,
    #[error("cannot start a gait transition while a leg is pinned")]
    TransitionWhilePinned,
    #[error("transition target '{0}' must be a four-legged gait")]
    ThreeLeggedTarget(String),
    #[error("network gait '{0}' must be four-legged; use pin_leg for three-legged gaits")]
    ThreeLeggedNetwork(String),
    #[error("overshoot strength must be finite and non-negative, got {0}")]
    InvalidOvershoot(f64),
    #[error("indicator pair has zero offset change between gaits")]
    DegenerateIndicator,
}

/// Map an oscillator phase to the cycle coordinate that advances uniformly
/// in time on the limit cycle of duty factor `duty`.
///
/// For `duty = 0.5` this is the identity. For other duty factors the raw
/// phase crosses the stance and swing halves at different speeds, so raw
/// phase differences between time-shifted oscillators breathe over the
/// cycle; differences of this coordinate do not.
pub fn uniform_phase(phase: f64, duty: f64) -> f64 {
    let phi = wrap_phase(phase);
    // Fraction of the cycle elapsed since stance onset (phi = pi).
    let c = if phi >= 0.0 {
        duty * (PI - phi) / PI
    } else {
        duty + (1.0 - duty) * (-phi) / PI
    };
    wrap_phase(PI - TAU * c)
}

/// Inverse of [`uniform_phase`].
pub fn uniform_phase_inv(uniform: f64, duty: f64) -> f64 {
    let c = (PI - uniform).rem_euclid(TAU) / TAU;
    let phi = if c <= duty {
        PI - PI * c / duty
    } else {
        -PI * (c - duty) / (1.0 - duty)
    };
    wrap_phase(phi)
}

/// Stance/swing classification: stance iff the phase lies in `[0, pi)`.
pub fn is_stance(phase: f64) -> bool {
    (0.0..PI).contains(&wrap_phase(phase))
}

/// Desired contact states for a set of phases (true = stance).
pub fn contact_schedule(phases: &[f64; 4]) -> [bool; 4] {
    [
        is_stance(phases[0]),
        is_stance(phases[1]),
        is_stance(phases[2]),
        is_stance(phases[3]),
    ]
}

/// The coupled four-oscillator network.
#[derive(Debug, Clone)]
pub struct CpgNetwork {
    states: [OscillatorState; 4],
    params: OscillatorParams,
    gait: GaitDefinition,
    coupling: CouplingSpec,
    transition: Option<TransitionState>,
    pinned: Option<Leg>,
    resume_gait: Option<GaitDefinition>,
    time: f64,
}

impl CpgNetwork {
    /// Build a network locked-seeded on a four-legged gait with the default
    /// oscillator constants.
    pub fn new(gait: GaitDefinition) -> Result<Self, CpgError> {
        gait.validate()?;
        if gait.three_legged {
            return Err(CpgError::ThreeLeggedNetwork(gait.name));
        }
        let params = OscillatorParams::new(
            DEFAULT_CONVERGENCE_GAIN,
            DEFAULT_LIMIT_RADIUS,
            DEFAULT_SWITCH_SHARPNESS,
            gait.period,
            gait.duty,
        )?;
        let coupling = CouplingSpec::from_offsets(DEFAULT_COUPLING_STRENGTH, &gait.offsets);
        let mut net = Self {
            states: [OscillatorState::new(1.0, 0.0); 4],
            params,
            gait,
            coupling,
            transition: None,
            pinned: None,
            resume_gait: None,
            time: 0.0,
        };
        net.seed_pattern();
        Ok(net)
    }

    /// Build a network with explicit initial phases on the limit circle.
    pub fn with_phases(gait: GaitDefinition, phases: [f64; 4]) -> Result<Self, CpgError> {
        let mut net = Self::new(gait)?;
        net.seed_phases(&phases, DEFAULT_LIMIT_RADIUS);
        Ok(net)
    }

    /// Build a network with reproducible random initial phases.
    pub fn with_seeded_phases(gait: GaitDefinition, seed: u64) -> Result<Self, CpgError> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let phases = [0.0; 4].map(|_| rng.random_range(-PI..PI));
        Self::with_phases(gait, phases)
    }

    /// Seed the oscillators on the steady time-shifted pattern of the
    /// current gait: each leg is placed where the limit cycle sits at its
    /// desired time offset.
    pub fn seed_pattern(&mut self) {
        let duty = self.gait.duty;
        let offsets = self.gait.offsets;
        let phases = offsets.map(|o| uniform_phase_inv(wrap_phase(o), duty));
        self.seed_phases(&phases, self.params.limit_radius);
    }

    /// Place every oscillator at the given phase and radius.
    pub fn seed_phases(&mut self, phases: &[f64; 4], radius: f64) {
        for i in 0..LEG_COUNT {
            self.states[i] = OscillatorState::from_polar(radius, phases[i]);
        }
    }

    /// Override the coupling strength (1/s).
    pub fn set_coupling_strength(&mut self, strength: f64) {
        self.coupling.strength = strength;
        self.coupling = CouplingSpec {
            strength,
            rotations: self.coupling.rotations,
        };
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn gait(&self) -> &GaitDefinition {
        &self.gait
    }

    pub fn coupling(&self) -> &CouplingSpec {
        &self.coupling
    }

    pub fn transition(&self) -> Option<&TransitionState> {
        self.transition.as_ref()
    }

    pub fn pinned(&self) -> Option<Leg> {
        self.pinned
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn states(&self) -> &[OscillatorState; 4] {
        &self.states
    }

    /// Per-leg phases in `[-pi, pi)`.
    pub fn phases(&self) -> [f64; 4] {
        [
            self.states[0].phase(),
            self.states[1].phase(),
            self.states[2].phase(),
            self.states[3].phase(),
        ]
    }

    /// Per-leg oscillator radii.
    pub fn radii(&self) -> [f64; 4] {
        [
            self.states[0].radius(),
            self.states[1].radius(),
            self.states[2].radius(),
            self.states[3].radius(),
        ]
    }

    /// Per-leg duty-linearized cycle phases (see [`uniform_phase`]).
    pub fn cycle_phases(&self) -> [f64; 4] {
        self.phases().map(|p| uniform_phase(p, self.gait.duty))
    }

    /// Desired contact states (true = stance).
    pub fn desired_contacts(&self) -> [bool; 4] {
        contact_schedule(&self.phases())
    }

    /// Instantaneous phase rates (rad/s) under the full network field,
    /// coupling and pinning included.
    pub fn phase_rates(&self) -> [f64; 4] {
        let inputs = self.coupling_inputs();
        let mut rates = [0.0; 4];
        for i in 0..LEG_COUNT {
            let s = &self.states[i];
            let (dx, dy) = if self.pinned == Some(Leg::ALL[i]) {
                self.attractor_field(s)
            } else {
                let (fx, fy) = oscillator::vector_field(s, &self.params);
                (fx + inputs[i].0, fy + inputs[i].1)
            };
            let r2 = s.x * s.x + s.y * s.y;
            rates[i] = if r2 > 1e-18 {
                (s.x * dy - s.y * dx) / r2
            } else {
                0.0
            };
        }
        rates
    }

    /// Coupling input for each oscillator from the current (pre-step)
    /// states. A pinned oscillator neither receives nor contributes.
    fn coupling_inputs(&self) -> [(f64, f64); 4] {
        let mut inputs = [(0.0, 0.0); 4];
        let pinned = self.pinned.map(Leg::index);
        for i in 0..LEG_COUNT {
            if pinned == Some(i) {
                continue;
            }
            let mut acc = (0.0, 0.0);
            for j in 0..LEG_COUNT {
                if j == i || pinned == Some(j) {
                    continue;
                }
                let s = &self.states[j];
                let (rx, ry) = self.coupling.rotations[i][j].apply(s.x, s.y);
                acc.0 += rx;
                acc.1 += ry;
            }
            inputs[i] = (self.coupling.strength * acc.0, self.coupling.strength * acc.1);
        }
        inputs
    }

    /// Field holding a pinned oscillator at the swing apex: first-order
    /// convergence in polar coordinates, radial at the convergence gain and
    /// angular at 10 / period.
    fn attractor_field(&self, state: &OscillatorState) -> (f64, f64) {
        let r = state.radius();
        let target_radius = self.params.limit_radius;
        if r < 1e-9 {
            // Degenerate at the origin: pull straight toward the attractor point.
            let gain = self.params.convergence_gain;
            return (
                gain * (target_radius * PIN_PHASE.cos() - state.x),
                gain * (target_radius * PIN_PHASE.sin() - state.y),
            );
        }
        let phase_err = wrap_diff(state.phase() - PIN_PHASE);
        let r_dot = self.params.convergence_gain * (target_radius - r);
        let phase_dot = -(10.0 / self.params.period) * phase_err;
        let (c, s) = (state.x / r, state.y / r);
        (
            r_dot * c - r * phase_dot * s,
            r_dot * s + r * phase_dot * c,
        )
    }

    /// Advance the network by one integration step.
    ///
    /// Coupling inputs are evaluated from the pre-step states and held
    /// constant over the step. An active transition first rewrites the
    /// coupling rotations from the overshoot offsets; it completes (and the
    /// target offsets are installed) once the remaining progress falls to
    /// the convergence threshold.
    pub fn step(&mut self, dt: f64) -> Result<(), CpgError> {
        if let Some(ts) = &mut self.transition {
            let phases = [
                self.states[0].phase(),
                self.states[1].phase(),
                self.states[2].phase(),
                self.states[3].phase(),
            ];
            let (m, n) = ts.indicator;
            let current = wrap_diff(phases[m] - phases[n]);
            let (offsets, eta) = ts.evaluate(current)?;
            ts.remaining = eta;
            if eta <= ts.converge_threshold {
                let target = ts.target_offsets;
                self.transition = None;
                self.coupling = CouplingSpec::from_offsets(self.coupling.strength, &target);
            } else {
                self.coupling = CouplingSpec::from_offsets(self.coupling.strength, &offsets);
            }
        }

        let inputs = self.coupling_inputs();
        let mut next = self.states;
        for i in 0..LEG_COUNT {
            if self.pinned == Some(Leg::ALL[i]) {
                next[i] = self.step_pinned(&self.states[i], dt)?;
            } else {
                next[i] = oscillator::step(&self.states[i], &self.params, inputs[i], dt)?;
            }
        }
        self.states = next;
        self.time += dt;
        Ok(())
    }

    /// One RK4 step of the pinned-oscillator attractor dynamics.
    fn step_pinned(
        &self,
        state: &OscillatorState,
        dt: f64,
    ) -> Result<OscillatorState, CpgError> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(OscillatorError::InvalidTimeStep(dt).into());
        }
        let f = |s: &OscillatorState| self.attractor_field(s);
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
            return Err(OscillatorError::Diverged { dt }.into());
        }
        Ok(next)
    }

    /// Start a transition to a four-legged target gait with overshoot
    /// strength `k`. Period and duty switch to the target immediately.
    /// Identical gaits complete at once without installing a transition.
    pub fn begin_transition(
        &mut self,
        target: &GaitDefinition,
        overshoot: f64,
    ) -> Result<(), CpgError> {
        target.validate()?;
        if self.transition.is_some() {
            return Err(CpgError::TransitionInProgress);
        }
        if self.pinned.is_some() {
            return Err(CpgError::TransitionWhilePinned);
        }
        if target.three_legged {
            return Err(CpgError::ThreeLeggedTarget(target.name.clone()));
        }

        let transition =
            TransitionState::new(self.gait.offsets, target.offsets, overshoot)?;
        self.params.period = target.period;
        self.params.duty = target.duty;
        self.gait = target.clone();
        match transition {
            Some(ts) => {
                let (offsets, _) = ts.evaluate(wrap_diff(
                    self.states[ts.indicator.0].phase() - self.states[ts.indicator.1].phase(),
                ))?;
                self.coupling = CouplingSpec::from_offsets(self.coupling.strength, &offsets);
                self.transition = Some(ts);
            }
            None => {
                self.coupling =
                    CouplingSpec::from_offsets(self.coupling.strength, &self.gait.offsets);
            }
        }
        Ok(())
    }

    /// Hold one leg at the swing apex and run the remaining three on the
    /// three-legged-walk pattern. Pinning a different leg while pinned moves
    /// the hold. The four-legged gait active before the first pin is
    /// restored by [`release_leg`].
    pub fn pin_leg(&mut self, leg: Leg) -> Result<(), CpgError> {
        if self.transition.is_some() {
            return Err(CpgError::TransitionInProgress);
        }
        if self.pinned.is_none() {
            self.resume_gait = Some(self.gait.clone());
        }
        self.pinned = Some(leg);
        let tripod = gait_table()
            .into_iter()
            .find(|g| g.three_legged)
            .expect("built-in three-legged gait");
        let offsets = tripod.offsets_with_pin(leg);
        self.params.period = tripod.period;
        self.params.duty = tripod.duty;
        self.gait = GaitDefinition {
            offsets,
            ..tripod
        };
        self.coupling = CouplingSpec::from_offsets(self.coupling.strength, &offsets);
        Ok(())
    }

    /// Release a pinned leg and restore the remembered four-legged gait.
    /// A network with no pinned leg is left untouched.
    pub fn release_leg(&mut self) -> Result<(), CpgError> {
        if self.pinned.take().is_none() {
            return Ok(());
        }
        let gait = self
            .resume_gait
            .take()
            .expect("resume gait recorded at pin time");
        self.params.period = gait.period;
        self.params.duty = gait.duty;
        self.coupling = CouplingSpec::from_offsets(self.coupling.strength, &gait.offsets);
        self.gait = gait;
        Ok(())
    }
}

/// Parse a plain-text gait preset file.
///
/// One section per gait; `phases` are in units of pi:
///
/// ```text
/// [my-trot]
/// period = 0.5
/// duty = 0.5
/// phases = 0, 1, 1, 0
/// ```
///
/// Three phase entries define a three-legged gait.
pub fn parse_gait_file(text: &str) -> Result<Vec<GaitDefinition>, GaitFileError> {
    struct Pending {
        name: String,
        line: usize,
        period: Option<f64>,
        duty: Option<f64>,
        phases: Option<Vec<f64>>,
    }

    fn finish(p: Pending) -> Result<GaitDefinition, GaitFileError> {
        let period = p.period.ok_or_else(|| GaitFileError::MissingKey {
            gait: p.name.clone(),
            key: "period",
        })?;
        let duty = p.duty.ok_or_else(|| GaitFileError::MissingKey {
            gait: p.name.clone(),
            key: "duty",
        })?;
        let phases = p.phases.ok_or_else(|| GaitFileError::MissingKey {
            gait: p.name.clone(),
            key: "phases",
        })?;
        let three_legged = match phases.len() {
            3 => true,
            4 => false,
            n => {
                return Err(GaitFileError::Parse {
                    line: p.line,
                    message: format!("expected 3 or 4 phases, got {n}"),
                })
            }
        };
        let mut offsets = [0.0; 4];
        for (i, phase) in phases.iter().enumerate() {
            offsets[i] = phase * PI;
        }
        GaitDefinition::new(p.name, period, duty, offsets, three_legged)
            .map_err(|e| GaitFileError::Invalid(e.to_string()))
    }

    let mut gaits = Vec::new();
    let mut current: Option<Pending> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            if let Some(p) = current.take() {
                gaits.push(finish(p)?);
            }
            current = Some(Pending {
                name: name.trim().to_string(),
                line: line_no,
                period: None,
                duty: None,
                phases: None,
            });
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(GaitFileError::Parse {
                line: line_no,
                message: format!("expected 'key = value', got '{line}'"),
            });
        };
        let Some(p) = current.as_mut() else {
            return Err(GaitFileError::Parse {
                line: line_no,
                message: "key outside of a [gait] section".into(),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let parse_f64 = |v: &str| {
            v.parse::<f64>().map_err(|_| GaitFileError::Parse {
                line: line_no,
                message: format!("invalid number '{v}'"),
            })
        };
        match key {
            "period" | "T" => p.period = Some(parse_f64(value)?),
            "duty" | "beta" => p.duty = Some(parse_f64(value)?),
            "phases" => {
                let phases = value
                    .split(',')
                    .map(|v| parse_f64(v.trim()))
                    .collect::<Result<Vec<_>, _>>()?;
                p.phases = Some(phases);
            }
            other => {
                return Err(GaitFileError::Parse {
                    line: line_no,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    if let Some(p) = current.take() {
        gaits.push(finish(p)?);
    }
    Ok(gaits)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GaitFileError {
    #[error("gait file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("gait '{gait}' is missing key '{key}'")]
    MissingKey { gait: String, key: &'static str },
    #[error("{0}")]
    Invalid(String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn preset(name: &str) -> GaitDefinition {
        find_gait(name).unwrap()
    }

    #[test]
    fn table_matches_published_parameters() {
        let table = gait_table();
        assert_eq!(table.len(), 5);

        let trot = preset("trot");
        assert_eq!(trot.period, 0.5);
        assert_eq!(trot.duty, 0.5);
        assert_eq!(trot.offsets, [0.0, PI, PI, 0.0]);

        let walk = preset("four-legged-walk");
        assert_eq!(walk.period, 0.6);
        assert_eq!(walk.duty, 0.75);
        assert_eq!(walk.offsets, [0.0, 0.5 * PI, PI, 1.5 * PI]);

        let tripod = preset("three-legged-walk");
        assert_eq!(tripod.period, 0.45);
        assert_relative_eq!(tripod.duty, 2.0 / 3.0);
        assert_relative_eq!(tripod.offsets[1], 2.0 * PI / 3.0);
        assert_relative_eq!(tripod.offsets[2], 4.0 * PI / 3.0);
        assert!(tripod.three_legged);

        assert_eq!(preset("bounding").offsets, [0.0, 0.0, PI, PI]);
        assert_eq!(preset("pace").name, "pacing");
        assert_eq!(preset("walk").name, "four-legged-walk");
    }

    #[test]
    fn connection_matrix_examples() {
        let trot = preset("trot");
        let r = connection_matrices(&trot.offsets);
        // theta_d12 = 0 - pi wraps to pi: R = [[-1, 0], [0, -1]].
        assert_abs_diff_eq!(r[0][1].cos, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r[0][1].sin, 0.0, epsilon = 1e-12);
        for i in 0..4 {
            assert_abs_diff_eq!(r[i][i].cos, 1.0);
            assert_abs_diff_eq!(r[i][i].sin, 0.0);
        }
        let pace = preset("pacing");
        let r = connection_matrices(&pace.offsets);
        assert_abs_diff_eq!(r[0][2].cos, 1.0);
        assert_abs_diff_eq!(r[0][2].sin, 0.0);
    }

    #[test]
    fn rotations_are_orthogonal() {
        for gait in gait_table() {
            for row in connection_matrices(&gait.offsets) {
                for rot in row {
                    let det = rot.cos * rot.cos + rot.sin * rot.sin;
                    assert_abs_diff_eq!(det, 1.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn uniform_phase_round_trips() {
        for duty in [0.4, 0.5, 2.0 / 3.0, 0.75] {
            for k in -20..20 {
                let phi = k as f64 * 0.157;
                let phi = wrap_phase(phi);
                let psi = uniform_phase(phi, duty);
                assert_abs_diff_eq!(uniform_phase_inv(psi, duty), phi, epsilon = 1e-12);
            }
        }
        // Identity at duty 0.5.
        assert_abs_diff_eq!(uniform_phase(0.3, 0.5), 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(uniform_phase(-2.2, 0.5), -2.2, epsilon = 1e-12);
    }

    #[test]
    fn stance_classification_boundaries() {
        assert!(is_stance(PI / 2.0));
        assert!(!is_stance(-PI / 2.0));
        assert!(is_stance(0.0));
        assert!(!is_stance(-PI));
    }

    #[test]
    fn zero_coupling_decouples() {
        let mut a = CpgNetwork::with_phases(preset("trot"), [0.4, 0.4, 0.4, 0.4]).unwrap();
        a.set_coupling_strength(0.0);
        for _ in 0..400 {
            a.step(0.0025).unwrap();
        }
        let phases = a.phases();
        for i in 1..4 {
            assert_abs_diff_eq!(
                wrap_diff(phases[i] - phases[0]),
                0.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn trot_locks_from_random_phases() {
        let trot = preset("trot");
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let phases = [0.0; 4].map(|_| rng.random_range(-PI..PI));
        let mut net = CpgNetwork::with_phases(trot.clone(), phases).unwrap();
        for _ in 0..800 {
            net.step(0.0025).unwrap();
        }
        let locked = net.phases();
        for m in 0..4 {
            for n in 0..4 {
                let desired = wrap_diff(trot.offsets[m] - trot.offsets[n]);
                let got = wrap_diff(locked[m] - locked[n]);
                assert!(
                    wrap_diff(got - desired).abs() < 0.05,
                    "pair ({m},{n}): got {got}, desired {desired}"
                );
            }
        }
    }

    #[test]
    fn trot_offsets_are_stationary() {
        // duty = 0.5 makes the desired offsets an exact equilibrium.
        let trot = preset("trot");
        let mut net = CpgNetwork::new(trot.clone()).unwrap();
        for _ in 0..2000 {
            net.step(0.0025).unwrap();
        }
        let phases = net.phases();
        for i in 0..4 {
            let desired = wrap_diff(trot.offsets[i] - trot.offsets[0]);
            let got = wrap_diff(phases[i] - phases[0]);
            assert!(wrap_diff(got - desired).abs() < 0.02);
        }
    }

    /// Worst per-pair error of the cycle-averaged duty-linearized offsets
    /// against `desired`, measured over one full gait cycle of `net`.
    fn cycle_mean_offset_error(net: &mut CpgNetwork, desired: &[f64], legs: &[usize]) -> f64 {
        let dt = 0.0025;
        let steps = (net.gait().period / dt).round() as usize;
        let duty = net.gait().duty;
        let mut diffs = vec![Vec::with_capacity(steps); legs.len()];
        for _ in 0..steps {
            net.step(dt).unwrap();
            let psi = net.phases().map(|p| uniform_phase(p, duty));
            for (k, &leg) in legs.iter().enumerate() {
                diffs[k].push(wrap_diff(psi[leg] - psi[legs[0]]));
            }
        }
        let mut worst: f64 = 0.0;
        for (k, series) in diffs.iter().enumerate() {
            let want = wrap_diff(desired[k] - desired[0]);
            let got = crate::angle::circular_mean(series.iter().copied());
            worst = worst.max(wrap_diff(got - want).abs());
        }
        worst
    }

    #[test]
    fn walk_pattern_is_steady_in_cycle_coordinates() {
        // For duty != 0.5 the instantaneous angle differences breathe over
        // the cycle; the cycle-averaged duty-linearized differences hold the
        // desired offsets.
        let walk = preset("four-legged-walk");
        let mut net = CpgNetwork::new(walk.clone()).unwrap();
        // One settling cycle from the seeded pattern.
        cycle_mean_offset_error(&mut net, &walk.offsets, &[0, 1, 2, 3]);
        let cycles = (5.0f64 / walk.period).ceil() as usize;
        for _ in 0..cycles {
            let worst = cycle_mean_offset_error(&mut net, &walk.offsets, &[0, 1, 2, 3]);
            assert!(worst < 0.02, "cycle-offset error {worst}");
        }
    }

    #[test]
    fn transition_state_picks_widest_pair() {
        let pace = preset("pacing");
        let trot = preset("trot");
        let ts = TransitionState::new(pace.offsets, trot.offsets, 0.5)
            .unwrap()
            .unwrap();
        assert_eq!(ts.indicator, (0, 2));
        assert_relative_eq!(ts.indicator_span().abs(), PI);
        assert_eq!(ts.remaining, 1.0);
    }

    #[test]
    fn transition_offsets_follow_overshoot_formula() {
        let pace = preset("pacing");
        let trot = preset("trot");
        let mut ts = TransitionState::new(pace.offsets, trot.offsets, 0.5)
            .unwrap()
            .unwrap();

        // At the start the indicator sits at its initial value: eta = 1 and
        // the offsets overshoot by the full k * delta.
        let (offsets, eta) = ts.evaluate(0.0).unwrap();
        assert_relative_eq!(eta, 1.0);
        let delta = ts.offset_delta();
        for i in 0..4 {
            assert_relative_eq!(offsets[i], trot.offsets[i] + 0.5 * delta[i]);
        }

        // At the target value the transition is complete.
        ts.remaining = 0.2;
        let (offsets, eta) = ts.evaluate(ts.indicator_target()).unwrap();
        assert_relative_eq!(eta, 0.0);
        for i in 0..4 {
            assert_relative_eq!(offsets[i], trot.offsets[i]);
        }

        // Halfway point: published eta = 0.26 waypoint arithmetic.
        ts.remaining = 0.3;
        let current = ts.indicator_target() - 0.26 * ts.indicator_span();
        let (offsets, eta) = ts.evaluate(wrap_diff(current)).unwrap();
        assert_relative_eq!(eta, 0.26, max_relative = 1e-9);
        for i in 0..4 {
            let expect = trot.offsets[i] + 0.5 * 0.26 * delta[i];
            assert_relative_eq!(offsets[i], expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn identical_gaits_transition_is_noop() {
        let trot = preset("trot");
        let mut net = CpgNetwork::new(trot.clone()).unwrap();
        net.begin_transition(&trot, 0.5).unwrap();
        assert!(net.transition().is_none());
    }

    #[test]
    fn transition_guards() {
        let mut net = CpgNetwork::new(preset("pacing")).unwrap();
        net.begin_transition(&preset("trot"), 0.5).unwrap();
        assert_eq!(
            net.begin_transition(&preset("bounding"), 0.5),
            Err(CpgError::TransitionInProgress)
        );

        let mut pinned = CpgNetwork::new(preset("four-legged-walk")).unwrap();
        pinned.pin_leg(Leg::FrontRight).unwrap();
        assert_eq!(
            pinned.begin_transition(&preset("trot"), 0.5),
            Err(CpgError::TransitionWhilePinned)
        );

        let mut net = CpgNetwork::new(preset("trot")).unwrap();
        assert!(matches!(
            net.begin_transition(&preset("three-legged-walk"), 0.5),
            Err(CpgError::ThreeLeggedTarget(_))
        ));
    }

    #[test]
    fn trot_to_bounding_endpoints() {
        let trot = preset("trot");
        let bounding = preset("bounding");
        let ts = TransitionState::new(trot.offsets, bounding.offsets, 0.5)
            .unwrap()
            .unwrap();
        assert_eq!(ts.initial_offsets, [0.0, PI, PI, 0.0]);
        assert_eq!(ts.target_offsets, [0.0, 0.0, PI, PI]);
    }

    #[test]
    fn pace_to_trot_converges_near_published_timing() {
        let mut net = CpgNetwork::new(preset("pacing")).unwrap();
        let dt = 0.0025;
        for _ in 0..400 {
            net.step(dt).unwrap();
        }
        net.begin_transition(&preset("trot"), 0.5).unwrap();

        let mut t = 1.0;
        let mut crossed_026 = None;
        let mut done_at = None;
        while t < 6.0 {
            net.step(dt).unwrap();
            t += dt;
            let eta = net.transition().map_or(0.0, |ts| ts.remaining);
            if crossed_026.is_none() && eta <= 0.26 {
                crossed_026 = Some(t);
            }
            if done_at.is_none() && net.transition().is_none() {
                done_at = Some(t);
                break;
            }
        }
        let crossed = crossed_026.expect("eta reached 0.26");
        let done = done_at.expect("transition completed");
        assert!(
            (crossed - 2.0).abs() <= 0.3,
            "eta=0.26 at t = {crossed}, expected 2.0 +- 0.3"
        );
        assert!(
            (done - 2.48).abs() <= 0.5,
            "converged at t = {done}, expected 2.48 +- 0.5"
        );

        // After completion the network relaxes into the trot pattern.
        for _ in 0..1200 {
            net.step(dt).unwrap();
        }
        let phases = net.phases();
        let trot = preset("trot");
        for i in 0..4 {
            let desired = wrap_diff(trot.offsets[i] - trot.offsets[0]);
            let got = wrap_diff(phases[i] - phases[0]);
            assert!(wrap_diff(got - desired).abs() < 0.05);
        }
    }

    #[test]
    fn radii_stay_bounded_through_transitions() {
        let presets = ["trot", "pacing", "bounding", "four-legged-walk"];
        for from in presets {
            for to in presets {
                if from == to {
                    continue;
                }
                let mut net = CpgNetwork::new(preset(from)).unwrap();
                net.begin_transition(&preset(to), 0.5).unwrap();
                for _ in 0..1600 {
                    net.step(0.0025).unwrap();
                    for r in net.radii() {
                        assert!(
                            (0.5..=1.5).contains(&r),
                            "radius {r} out of bounds in {from}->{to}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn transition_progress_is_monotone_after_start() {
        let mut net = CpgNetwork::new(preset("pacing")).unwrap();
        net.begin_transition(&preset("trot"), 0.5).unwrap();
        let dt = 0.0025;
        let mut t = 0.0;
        let mut last = 1.0f64;
        while net.transition().is_some() && t < 6.0 {
            net.step(dt).unwrap();
            t += dt;
            let eta = net.transition().map_or(0.0, |ts| ts.remaining);
            if t > 0.2 {
                assert!(eta <= last + 0.02, "eta jumped from {last} to {eta} at {t}");
            }
            last = eta;
        }
        assert!(t < 6.0, "transition never completed");
    }

    #[test]
    fn pinned_leg_settles_at_swing_apex() {
        let mut net = CpgNetwork::new(preset("four-legged-walk")).unwrap();
        net.pin_leg(Leg::FrontRight).unwrap();
        for _ in 0..400 {
            net.step(0.0025).unwrap();
        }
        let phase = net.phases()[0];
        assert!(
            wrap_diff(phase - PIN_PHASE).abs() < 0.02,
            "pinned phase {phase}"
        );
        assert!(!net.desired_contacts()[0], "pinned leg must be in swing");
        // And it stays.
        for _ in 0..400 {
            net.step(0.0025).unwrap();
            assert!(wrap_diff(net.phases()[0] - PIN_PHASE).abs() < 0.02);
        }
    }

    #[test]
    fn active_legs_lock_to_tripod_offsets() {
        let mut net = CpgNetwork::new(preset("four-legged-walk")).unwrap();
        net.pin_leg(Leg::FrontLeft).unwrap();
        for _ in 0..((3.0f64 / 0.0025) as usize) {
            net.step(0.0025).unwrap();
        }
        let offsets = [0.0, 2.0 * PI / 3.0, 4.0 * PI / 3.0];
        let worst = cycle_mean_offset_error(&mut net, &offsets, &[0, 2, 3]);
        assert!(worst < 0.05, "tripod offset error {worst}");
    }

    #[test]
    fn release_restores_previous_gait() {
        let walk = preset("four-legged-walk");
        let mut net = CpgNetwork::new(walk.clone()).unwrap();
        net.pin_leg(Leg::HindLeft).unwrap();
        for _ in 0..400 {
            net.step(0.0025).unwrap();
        }
        // Move the hold, then release.
        net.pin_leg(Leg::FrontRight).unwrap();
        for _ in 0..400 {
            net.step(0.0025).unwrap();
        }
        net.release_leg().unwrap();
        assert_eq!(net.gait().name, walk.name);
        for _ in 0..((3.0f64 / 0.0025) as usize) {
            net.step(0.0025).unwrap();
        }
        let worst = cycle_mean_offset_error(&mut net, &walk.offsets, &[0, 1, 2, 3]);
        assert!(worst < 0.05, "re-lock offset error {worst}");
    }

    #[test]
    fn stepping_is_deterministic() {
        let run = || {
            let mut net = CpgNetwork::new(preset("pacing")).unwrap();
            net.begin_transition(&preset("trot"), 0.5).unwrap();
            let mut trace = Vec::new();
            for _ in 0..1000 {
                net.step(0.0025).unwrap();
                trace.push(net.phases());
            }
            trace
        };
        let a = run();
        let b = run();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            for i in 0..4 {
                assert!(x[i].to_bits() == y[i].to_bits(), "trace diverged");
            }
        }
    }

    #[test]
    fn gait_file_round_trip() {
        let text = "
# custom gaits
[slow-trot]
period = 0.8
duty = 0.6
phases = 0, 1, 1, 0

[hop]
T = 0.45
beta = 0.5
phases = 0, 0.5, 1   # three-legged
";
        let gaits = parse_gait_file(text).unwrap();
        assert_eq!(gaits.len(), 2);
        assert_eq!(gaits[0].name, "slow-trot");
        assert_eq!(gaits[0].period, 0.8);
        assert_relative_eq!(gaits[0].offsets[1], PI);
        assert!(!gaits[0].three_legged);
        assert!(gaits[1].three_legged);
        assert_relative_eq!(gaits[1].offsets[1], 0.5 * PI);
    }

    #[test]
    fn gait_file_errors_carry_line_numbers() {
        let err = parse_gait_file("period = 0.5").unwrap_err();
        assert!(matches!(err, GaitFileError::Parse { line: 1, .. }));

        let err = parse_gait_file("[g]\nperiod = abc").unwrap_err();
        assert!(matches!(err, GaitFileError::Parse { line: 2, .. }));

        let err = parse_gait_file("[g]\nperiod = 0.5\nduty = 0.5").unwrap_err();
        assert!(matches!(err, GaitFileError::MissingKey { key: "phases", .. }));
    }
}
