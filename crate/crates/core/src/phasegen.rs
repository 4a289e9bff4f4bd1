//! Phase sources: a unified front over the oscillator network and manually
//! scripted periodic phase functions, plus the handoff between them.
//!
//! Scripts are piecewise-linear phase functions of time, one list of
//! segments per leg, all summing to a common period. They cover rhythmic
//! dance gaits that the oscillator network cannot express.

use crate::angle::{wrap_diff, wrap_phase};
use crate::cpg::{CpgError, CpgNetwork, Leg};

use std::f64::consts::PI;

/// One linear piece of a scripted leg: for local time `u` in
/// `[0, duration)` the phase is `start_phase + rate * u`, wrapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScriptSegment {
    pub duration: f64,
    pub start_phase: f64,
    pub rate: f64,
}

impl ScriptSegment {
    pub fn new(duration: f64, start_phase: f64, rate: f64) -> Self {
        Self {
            duration,
            start_phase,
            rate,
        }
    }
}

/// A stance or swing bar of a footfall diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarKind {
    Stance,
    Swing,
}

/// One bar: the foot holds `kind` for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub kind: BarKind,
    pub duration: f64,
}

impl Bar {
    pub fn stance(duration: f64) -> Self {
        Self {
            kind: BarKind::Stance,
            duration,
        }
    }

    pub fn swing(duration: f64) -> Self {
        Self {
            kind: BarKind::Swing,
            duration,
        }
    }
}

/// A scripted periodic gait: per-leg phase segments over a common period.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedGait {
    name: String,
    legs: [Vec<ScriptSegment>; 4],
    period: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScriptError {
    #[error("script '{name}': leg {leg} has no segments")]
    EmptyLeg { name: String, leg: &'static str },
    #[error("script '{name}': segment duration must be positive, got {duration}")]
    BadDuration { name: String, duration: f64 },
    #[error(
        "script '{name}': leg {leg} period {got} differs from leg FR period {expected}"
    )]
    PeriodMismatch {
        name: String,
        leg: &'static str,
        got: f64,
        expected: f64,
    },
    #[error("script '{name}': period must be positive")]
    ZeroPeriod { name: String },
    #[error("script file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("script file is missing section [{0}]")]
    MissingLeg(&'static str),
}

impl ScriptedGait {
    /// Build a script, checking that every leg's segment durations sum to
    /// the same positive period.
    pub fn new(
        name: impl Into<String>,
        legs: [Vec<ScriptSegment>; 4],
    ) -> Result<Self, ScriptError> {
        let name = name.into();
        let mut period = None;
        for (i, segments) in legs.iter().enumerate() {
            let label = Leg::ALL[i].label();
            if segments.is_empty() {
                return Err(ScriptError::EmptyLeg { name, leg: label });
            }
            let mut sum = 0.0;
            for seg in segments {
                if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                    return Err(ScriptError::BadDuration {
                        name,
                        duration: seg.duration,
                    });
                }
                sum += seg.duration;
            }
            match period {
                None => period = Some(sum),
                Some(expected) => {
                    if (sum - expected).abs() > 1e-9 {
                        return Err(ScriptError::PeriodMismatch {
                            name,
                            leg: label,
                            got: sum,
                            expected,
                        });
                    }
                }
            }
        }
        let period = period.unwrap();
        if !(period > 0.0) {
            return Err(ScriptError::ZeroPeriod { name });
        }
        Ok(Self { name, legs, period })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn segments(&self, leg: Leg) -> &[ScriptSegment] {
        &self.legs[leg.index()]
    }

    /// Phase of one leg at time `t >= 0`, wrapped to `[-pi, pi)`.
    pub fn sample_leg(&self, leg: Leg, t: f64) -> f64 {
        let mut local = t.rem_euclid(self.period);
        let segments = &self.legs[leg.index()];
        for seg in segments {
            if local < seg.duration {
                return wrap_phase(seg.start_phase + seg.rate * local);
            }
            local -= seg.duration;
        }
        // Rounding pushed us past the last segment boundary.
        let last = segments.last().unwrap();
        wrap_phase(last.start_phase + last.rate * last.duration)
    }

    /// All four leg phases at time `t`.
    pub fn sample(&self, t: f64) -> [f64; 4] {
        [
            self.sample_leg(Leg::FrontRight, t),
            self.sample_leg(Leg::FrontLeft, t),
            self.sample_leg(Leg::HindRight, t),
            self.sample_leg(Leg::HindLeft, t),
        ]
    }

    /// Phase rates (rad/s) at time `t`: the containing segment's slope.
    pub fn rates(&self, t: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for leg in Leg::ALL {
            let mut local = t.rem_euclid(self.period);
            let segments = &self.legs[leg.index()];
            let mut rate = segments.last().unwrap().rate;
            for seg in segments {
                if local < seg.duration {
                    rate = seg.rate;
                    break;
                }
                local -= seg.duration;
            }
            out[leg.index()] = rate;
        }
        out
    }

    /// Stance fraction of one leg's cycle (time with phase in `[0, pi)`).
    pub fn leg_duty(&self, leg: Leg) -> f64 {
        let mut stance = 0.0;
        for seg in &self.legs[leg.index()] {
            stance += seg.stance_time();
        }
        stance / self.period
    }

    /// Mean duration of one stance event of this leg: total stance time
    /// over the number of swing-to-stance transitions per period. Zero for
    /// a leg that never touches down.
    pub fn mean_stance_duration(&self, leg: Leg) -> f64 {
        let samples = 4000;
        let dt = self.period / samples as f64;
        let mut stance_time = 0.0;
        let mut onsets = 0u32;
        let mut prev = crate::cpg::is_stance(self.sample_leg(leg, (samples as f64 - 0.5) * dt));
        for k in 0..samples {
            let now = crate::cpg::is_stance(self.sample_leg(leg, (k as f64 + 0.5) * dt));
            if now {
                stance_time += dt;
                if !prev {
                    onsets += 1;
                }
            }
            prev = now;
        }
        if onsets == 0 {
            0.0
        } else {
            stance_time / onsets as f64
        }
    }

    /// Parse the plain-text script format: one section per leg, each line
    /// `duration_s phase_start_rad phase_rate_rad_per_s`.
    ///
    /// ```text
    /// [fr]
    /// 0.25 0.0 -12.566
    /// 0.25 3.1416 -12.566
    /// [fl]
    /// ...
    /// ```
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, ScriptError> {
        let mut legs: [Option<Vec<ScriptSegment>>; 4] = [None, None, None, None];
        let mut current: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(section) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let leg = match section.trim().to_ascii_lowercase().as_str() {
                    "fr" => Leg::FrontRight,
                    "fl" => Leg::FrontLeft,
                    "hr" => Leg::HindRight,
                    "hl" => Leg::HindLeft,
                    other => {
                        return Err(ScriptError::Parse {
                            line: line_no,
                            message: format!("unknown leg section '{other}'"),
                        })
                    }
                };
                current = Some(leg.index());
                legs[leg.index()].get_or_insert_with(Vec::new);
                continue;
            }
            let Some(leg_index) = current else {
                return Err(ScriptError::Parse {
                    line: line_no,
                    message: "segment line outside of a [leg] section".into(),
                });
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(ScriptError::Parse {
                    line: line_no,
                    message: format!(
                        "expected 'duration start_phase rate', got {} fields",
                        fields.len()
                    ),
                });
            }
            let parse = |v: &str| {
                v.parse::<f64>().map_err(|_| ScriptError::Parse {
                    line: line_no,
                    message: format!("invalid number '{v}'"),
                })
            };
            let segment = ScriptSegment::new(parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            legs[leg_index].as_mut().unwrap().push(segment);
        }
        let mut out: [Vec<ScriptSegment>; 4] = Default::default();
        for leg in Leg::ALL {
            out[leg.index()] = legs[leg.index()]
                .take()
                .ok_or(ScriptError::MissingLeg(leg.label()))?;
        }
        ScriptedGait::new(name, out)
    }

    /// Render the script in the plain-text file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for leg in Leg::ALL {
            out.push_str(&format!("[{}]\n", leg.label().to_ascii_lowercase()));
            for seg in &self.legs[leg.index()] {
                out.push_str(&format!(
                    "{} {} {}\n",
                    seg.duration, seg.start_phase, seg.rate
                ));
            }
        }
        out
    }
}

impl ScriptSegment {
    /// Time this segment spends with the wrapped phase in the stance
    /// interval `[0, pi)`.
    fn stance_time(&self) -> f64 {
        // Sample finely; segments are short and this runs once per script.
        let n = 1000;
        let du = self.duration / n as f64;
        (0..n)
            .filter(|&k| {
                let phase = wrap_phase(self.start_phase + self.rate * (k as f64 + 0.5) * du);
                (0.0..PI).contains(&phase)
            })
            .count() as f64
            * du
    }
}

/// Stance phase sweeps pi -> 0 and swing 0 -> -pi, the decreasing-phase
/// convention. Converts footfall-diagram bars into a script.
pub fn script_from_bars(
    name: impl Into<String>,
    bars: [Vec<Bar>; 4],
) -> Result<ScriptedGait, ScriptError> {
    let name = name.into();
    let mut legs: [Vec<ScriptSegment>; 4] = Default::default();
    for (i, leg_bars) in bars.iter().enumerate() {
        for bar in leg_bars {
            if !(bar.duration > 0.0) || !bar.duration.is_finite() {
                return Err(ScriptError::BadDuration {
                    name,
                    duration: bar.duration,
                });
            }
            let segment = match bar.kind {
                BarKind::Stance => ScriptSegment::new(bar.duration, PI, -PI / bar.duration),
                BarKind::Swing => ScriptSegment::new(bar.duration, 0.0, -PI / bar.duration),
            };
            legs[i].push(segment);
        }
    }
    ScriptedGait::new(name, legs)
}

/// The built-in scripted gaits.
///
/// `split-period`: one diagonal pair cycles twice as fast as the other.
/// `swan-step`: stance-swing-stance-long-swing on a 0.15 s unit time,
/// period 0.9 s, identical on all four legs.
pub fn builtin_scripts() -> Vec<ScriptedGait> {
    let fast = || {
        vec![
            ScriptSegment::new(0.5, 0.0, 4.0 * PI),
            ScriptSegment::new(0.5, 0.0, 4.0 * PI),
        ]
    };
    let slow = || vec![ScriptSegment::new(1.0, 0.0, 2.0 * PI)];
    let split = ScriptedGait::new("split-period", [fast(), slow(), slow(), fast()])
        .expect("built-in script is valid");

    let unit = 0.15;
    let swan_leg = || {
        vec![
            ScriptSegment::new(2.0 * unit, PI, -PI / unit),
            ScriptSegment::new(unit, PI, -PI / unit),
            ScriptSegment::new(3.0 * unit, 0.0, -PI / (3.0 * unit)),
        ]
    };
    let swan = ScriptedGait::new("swan-step", [swan_leg(), swan_leg(), swan_leg(), swan_leg()])
        .expect("built-in script is valid");

    vec![split, swan]
}

/// Look up a built-in script by name.
pub fn find_script(name: &str) -> Option<ScriptedGait> {
    let wanted = name.trim().to_ascii_lowercase().replace('_', "-");
    builtin_scripts().into_iter().find(|s| s.name() == wanted)
}

/// A stepping producer of four leg phases: oscillator-network backed or
/// script backed.
#[derive(Debug, Clone)]
pub enum PhaseGen {
    Cpg {
        net: CpgNetwork,
        /// Integration substep for advancing the network.
        substep: f64,
    },
    Script {
        script: ScriptedGait,
        time: f64,
    },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhaseError {
    #[error(transparent)]
    Cpg(#[from] CpgError),
    #[error(transparent)]
    Script(#[from] ScriptError),
    #[error("advance duration must be non-negative and finite, got {0}")]
    BadDuration(f64),
    #[error("handoff tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

impl PhaseGen {
    pub fn from_cpg(net: CpgNetwork, substep: f64) -> Self {
        PhaseGen::Cpg { net, substep }
    }

    pub fn from_script(script: ScriptedGait) -> Self {
        PhaseGen::Script { script, time: 0.0 }
    }

    /// Current leg phases in `[-pi, pi)`.
    pub fn phases(&self) -> [f64; 4] {
        match self {
            PhaseGen::Cpg { net, .. } => net.phases(),
            PhaseGen::Script { script, time } => script.sample(*time),
        }
    }

    /// Current phase rates in rad/s.
    pub fn phase_rates(&self) -> [f64; 4] {
        match self {
            PhaseGen::Cpg { net, .. } => net.phase_rates(),
            PhaseGen::Script { script, time } => script.rates(*time),
        }
    }

    /// The generator's fundamental period in seconds.
    pub fn period(&self) -> f64 {
        match self {
            PhaseGen::Cpg { net, .. } => net.gait().period,
            PhaseGen::Script { script, .. } => script.period(),
        }
    }

    /// Stance fraction per leg of the underlying cycle.
    pub fn leg_duties(&self) -> [f64; 4] {
        match self {
            PhaseGen::Cpg { net, .. } => [net.gait().duty; 4],
            PhaseGen::Script { script, .. } => {
                [
                    script.leg_duty(Leg::FrontRight),
                    script.leg_duty(Leg::FrontLeft),
                    script.leg_duty(Leg::HindRight),
                    script.leg_duty(Leg::HindLeft),
                ]
            }
        }
    }

    /// Per-leg stance seconds per stance event, the stride time scale that
    /// multiplies the commanded velocity into a step length. For the
    /// network this is exactly duty * period.
    pub fn stride_scales(&self) -> [f64; 4] {
        match self {
            PhaseGen::Cpg { net, .. } => [net.gait().duty * net.gait().period; 4],
            PhaseGen::Script { script, .. } => Leg::ALL.map(|leg| script.mean_stance_duration(leg)),
        }
    }

    /// Advance by `dt` seconds. The network integrates in whole substeps
    /// plus one remainder step, so any `dt` is exact.
    pub fn advance(&mut self, dt: f64) -> Result<(), PhaseError> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(PhaseError::BadDuration(dt));
        }
        match self {
            PhaseGen::Cpg { net, substep } => {
                let whole = (dt / *substep).round();
                if whole >= 1.0 && (dt - whole * *substep).abs() < 1e-9 {
                    for _ in 0..whole as u64 {
                        net.step(*substep)?;
                    }
                    return Ok(());
                }
                let mut remaining = dt;
                while remaining > *substep + 1e-12 {
                    net.step(*substep)?;
                    remaining -= *substep;
                }
                if remaining > 1e-12 {
                    net.step(remaining)?;
                }
                Ok(())
            }
            PhaseGen::Script { time, .. } => {
                *time += dt;
                Ok(())
            }
        }
    }

    /// Phases this generator would produce `offset` seconds from now,
    /// without disturbing it.
    pub fn preview(&self, offset: f64) -> Result<[f64; 4], PhaseError> {
        let mut copy = self.clone();
        copy.advance(offset)?;
        Ok(copy.phases())
    }

    pub fn cpg(&self) -> Option<&CpgNetwork> {
        match self {
            PhaseGen::Cpg { net, .. } => Some(net),
            PhaseGen::Script { .. } => None,
        }
    }

    pub fn cpg_mut(&mut self) -> Option<&mut CpgNetwork> {
        match self {
            PhaseGen::Cpg { net, .. } => Some(net),
            PhaseGen::Script { .. } => None,
        }
    }
}

/// Outcome of a handoff check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandoffDecision {
    /// Switch now: start the target generator advanced by `offset` seconds
    /// for per-leg phase continuity within the requested tolerance.
    SwitchAt { offset: f64 },
    /// No matching target state found within one period; retry later.
    Wait,
}

/// Scan one period of `target` at `scan_step` resolution for a state whose
/// four phases all match `current` within `tolerance`.
pub fn handoff(
    current: &[f64; 4],
    target: &PhaseGen,
    tolerance: f64,
    scan_step: f64,
) -> Result<HandoffDecision, PhaseError> {
    if !(tolerance > 0.0) {
        return Err(PhaseError::BadTolerance(tolerance));
    }
    if !(scan_step > 0.0) || !scan_step.is_finite() {
        return Err(PhaseError::BadDuration(scan_step));
    }
    let period = target.period();
    let mut probe = target.clone();
    let mut offset = 0.0;
    while offset < period {
        let candidate = probe.phases();
        let matched = (0..4).all(|i| wrap_diff(current[i] - candidate[i]).abs() <= tolerance);
        if matched {
            return Ok(HandoffDecision::SwitchAt { offset });
        }
        probe.advance(scan_step)?;
        offset += scan_step;
    }
    Ok(HandoffDecision::Wait)
}
