//! The batch simulation driver shared by `simulate` and `transition`.

use gaitgen_core::cpg::{contact_schedule, CpgNetwork, GaitDefinition, Leg};
use gaitgen_core::kinematics::{self, RobotGeometry};
use gaitgen_core::logfile::standard_columns;
use gaitgen_core::phasegen::{PhaseGen, ScriptedGait};
use gaitgen_core::trajectory::{self, StepParams, VelocityCommand, DEFAULT_SWING_HEIGHT};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum Source {
    Gait(GaitDefinition),
    Script(ScriptedGait),
}

impl Source {
    pub fn name(&self) -> String {
        match self {
            Source::Gait(g) => g.name.clone(),
            Source::Script(s) => s.name().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransitionPlan {
    pub target: GaitDefinition,
    pub at: f64,
    pub overshoot: f64,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub source: Source,
    pub command: VelocityCommand,
    pub duration: f64,
    /// Integrator step (s).
    pub dt: f64,
    /// Control sampling rate (Hz).
    pub rate: f64,
    pub geometry: RobotGeometry,
    pub seed: Option<u64>,
    pub pin_leg: Option<Leg>,
    pub release_at: Option<f64>,
    pub transition: Option<TransitionPlan>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(CliError::config(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(CliError::config(format!(
                "control rate must be positive, got {}",
                self.rate
            )));
        }
        if !(self.dt > 0.0) || self.dt > 1.0 / self.rate + 1e-12 {
            return Err(CliError::config(format!(
                "integrator step {} must be positive and no larger than the control period {}",
                self.dt,
                1.0 / self.rate
            )));
        }
        if !self.command.is_finite() {
            return Err(CliError::config("velocity command must be finite"));
        }
        if let Some(plan) = &self.transition {
            if !(plan.at >= 0.0) || plan.at >= self.duration {
                return Err(CliError::config(format!(
                    "transition time {} must lie within the run duration {}",
                    plan.at, self.duration
                )));
            }
            if matches!(self.source, Source::Script(_)) {
                return Err(CliError::config(
                    "transitions require an oscillator-network gait source",
                ));
            }
        }
        if let (Some(release), None) = (self.release_at, self.pin_leg) {
            return Err(CliError::config(format!(
                "--release-at {release} requires --pin-leg"
            )));
        }
        Ok(())
    }
}

/// A finished run: the log table plus summary values for the plot.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub with_eta: bool,
}

/// Foot targets, joint angles and joint rates of all four legs at one tick.
pub struct LegReferences {
    pub feet: [[f64; 3]; 4],
    pub joints: [[f64; 3]; 4],
    pub joint_rates: [[f64; 3]; 4],
}

/// One tick of the phase-to-joint reference pipeline with per-leg stride
/// scales and duty factors.
pub fn leg_references(
    phases: &[f64; 4],
    rates: &[f64; 4],
    command: &VelocityCommand,
    period: f64,
    duties: &[f64; 4],
    strides: &[f64; 4],
    geometry: &RobotGeometry,
) -> Result<LegReferences, CliError> {
    let mut out = LegReferences {
        feet: [[0.0; 3]; 4],
        joints: [[0.0; 3]; 4],
        joint_rates: [[0.0; 3]; 4],
    };
    for leg in Leg::ALL {
        let i = leg.index();
        let lengths =
            trajectory::step_lengths_scaled(command, strides[i], geometry.body_length, leg);
        let params = StepParams::new(DEFAULT_SWING_HEIGHT, period, duties[i]);
        let target = trajectory::foot_target(phases[i], rates[i], &params, lengths);
        let nominal = geometry.nominal_foot(leg);
        let position = [
            nominal[0] + target.position[0],
            nominal[1] + target.position[1],
            nominal[2] + target.position[2],
        ];
        let leg_geo = geometry.leg_geometry(leg);
        let q = kinematics::inverse_kinematics(position, &leg_geo, &geometry.knee_limits)
            .map_err(|e| CliError::Numeric(format!("leg {leg}: {e}")))?;
        let dq = kinematics::joint_velocities(&q, target.velocity, &leg_geo)
            .map_err(|e| CliError::Numeric(format!("leg {leg}: {e}")))?;
        out.feet[i] = target.position;
        out.joints[i] = q.as_array();
        out.joint_rates[i] = dq;
    }
    Ok(out)
}

pub fn simulate(cfg: &SimConfig) -> Result<SimResult, CliError> {
    cfg.validate()?;

    let mut gen = match &cfg.source {
        Source::Gait(gait) => {
            if gait.three_legged && cfg.pin_leg.is_none() {
                return Err(CliError::config(
                    "three-legged gaits need --pin-leg to choose the held leg",
                ));
            }
            // A pinned run starts from a four-legged base gait; the pin
            // switches the pattern itself.
            let base = if gait.three_legged {
                gaitgen_core::find_gait("four-legged-walk").expect("built-in gait")
            } else {
                gait.clone()
            };
            let mut net = match cfg.seed {
                Some(seed) => CpgNetwork::with_seeded_phases(base, seed)?,
                None => CpgNetwork::new(base)?,
            };
            if let Some(leg) = cfg.pin_leg {
                net.pin_leg(leg)?;
            }
            PhaseGen::from_cpg(net, cfg.dt)
        }
        Source::Script(script) => {
            if cfg.pin_leg.is_some() {
                return Err(CliError::config(
                    "--pin-leg applies to oscillator-network gaits only",
                ));
            }
            PhaseGen::from_script(script.clone())
        }
    };

    let with_eta = cfg.transition.is_some();
    let columns = standard_columns(with_eta);
    let control_dt = 1.0 / cfg.rate;
    let ticks = (cfg.duration * cfg.rate).round() as usize;
    let mut rows = Vec::with_capacity(ticks);

    let mut transition_started = false;
    let mut released = false;

    for tick in 0..ticks {
        let t = tick as f64 * control_dt;

        if let Some(plan) = &cfg.transition {
            if !transition_started && t + 1e-9 >= plan.at {
                let net = gen.cpg_mut().expect("transition source is a network");
                net.begin_transition(&plan.target, plan.overshoot)?;
                transition_started = true;
            }
        }
        if let (Some(release), false) = (cfg.release_at, released) {
            if t + 1e-9 >= release {
                if let Some(net) = gen.cpg_mut() {
                    net.release_leg()?;
                }
                released = true;
            }
        }

        let phases = gen.phases();
        let rates = gen.phase_rates();
        let contacts = contact_schedule(&phases);
        let duties = gen.leg_duties();
        let strides = gen.stride_scales();
        let period = gen.period();

        let mut row = Vec::with_capacity(columns.len());
        row.push(t);
        row.extend_from_slice(&phases);
        row.extend(contacts.iter().map(|&c| c as u8 as f64));
        // Generator-level logs: the achieved contacts are the desired ones.
        row.extend(contacts.iter().map(|&c| c as u8 as f64));

        let refs = leg_references(
            &phases,
            &rates,
            &cfg.command,
            period,
            &duties,
            &strides,
            &cfg.geometry,
        )
        .map_err(|e| CliError::Numeric(format!("at sample {tick} (t = {t:.3} s): {e}")))?;
        for i in 0..4 {
            row.extend_from_slice(&refs.feet[i]);
        }
        for i in 0..4 {
            row.extend_from_slice(&refs.joints[i]);
        }
        for i in 0..4 {
            row.extend_from_slice(&refs.joint_rates[i]);
        }
        row.push(cfg.command.forward);
        row.push(cfg.command.lateral);
        row.push(cfg.command.yaw_rate);

        if with_eta {
            let eta = if !transition_started {
                f64::NAN
            } else {
                gen.cpg()
                    .and_then(|net| net.transition())
                    .map_or(0.0, |ts| ts.remaining)
            };
            row.push(eta);
        }

        debug_assert_eq!(row.len(), columns.len());
        rows.push(row);

        gen.advance(control_dt)?;
    }

    Ok(SimResult {
        columns,
        rows,
        with_eta,
    })
}
