//! The `metrics` command: lift a log into the metric types, compare against
//! a desired gait, and emit a text plus JSON report.

use gaitgen_core::angle::wrap_diff;
use gaitgen_core::cpg::{CpgNetwork, GaitDefinition, Leg};
use gaitgen_core::kinematics::RobotGeometry;
use gaitgen_core::logfile::LocomotionLog;
use gaitgen_core::metrics::{
    self, ContactSequence, JointReference, VelocityTracking,
};
use gaitgen_core::trajectory::VelocityCommand;
use serde_json::json;

use crate::error::CliError;
use crate::run::leg_references;

/// Optional context picked up from a run's metadata sidecar.
#[derive(Debug, Clone, Default)]
pub struct LogContext {
    pub command: Option<VelocityCommand>,
    pub dt: Option<f64>,
}

impl LogContext {
    pub fn from_sidecar(json: &serde_json::Value) -> Self {
        let command = json.get("command").map(|c| VelocityCommand {
            forward: c.get("vx").and_then(|v| v.as_f64()).unwrap_or(0.0),
            lateral: c.get("vy").and_then(|v| v.as_f64()).unwrap_or(0.0),
            yaw_rate: c.get("wz").and_then(|v| v.as_f64()).unwrap_or(0.0),
        });
        let dt = json.get("dt").and_then(|v| v.as_f64());
        Self { command, dt }
    }
}

pub struct Report {
    pub text: String,
    pub json: serde_json::Value,
}

/// Regenerate the desired contact schedule of `gait` at the log's sampling.
fn regenerate_schedule(
    gait: &GaitDefinition,
    samples: usize,
    rate: f64,
    dt: f64,
) -> Result<ContactSequence, CliError> {
    let mut net = CpgNetwork::new(gait.clone())?;
    let control_dt = 1.0 / rate;
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        rows.push(net.desired_contacts());
        let mut remaining = control_dt;
        let whole = (remaining / dt).round();
        if whole >= 1.0 && (remaining - whole * dt).abs() < 1e-9 {
            for _ in 0..whole as u64 {
                net.step(dt)?;
            }
        } else {
            while remaining > dt + 1e-12 {
                net.step(dt)?;
                remaining -= dt;
            }
            if remaining > 1e-12 {
                net.step(remaining)?;
            }
        }
    }
    Ok(ContactSequence::from_rows(&rows, rate)?)
}

/// Mean per-term reward over the log against references regenerated from
/// the log's own phases. Returns an explanation when the log lacks the
/// state columns or a reference cannot be built.
fn reward_section(
    log: &LocomotionLog,
    gait: Option<&GaitDefinition>,
    context: &LogContext,
    geometry: &RobotGeometry,
) -> serde_json::Value {
    if !log.reward_columns_present() {
        return json!({ "available": false, "reason": "missing state columns" });
    }
    let Some(gait) = gait else {
        return json!({
            "available": false,
            "reason": "a desired gait is needed to build the joint reference",
        });
    };
    let rate = match log.sample_rate() {
        Ok(r) => r,
        Err(e) => return json!({ "available": false, "reason": e.to_string() }),
    };
    let command = context.command.unwrap_or_default();
    let samples = match log.state_samples([command.forward, command.lateral, command.yaw_rate]) {
        Ok(s) => s,
        Err(e) => return json!({ "available": false, "reason": e.to_string() }),
    };
    let phases = match log.phases() {
        Ok(p) => p,
        Err(e) => return json!({ "available": false, "reason": e.to_string() }),
    };

    let duties = [gait.duty; 4];
    let strides = [gait.duty * gait.period; 4];
    let mut sums = [0.0f64; 7];
    for (k, sample) in samples.iter().enumerate() {
        let rates = if k == 0 {
            [0.0; 4]
        } else {
            let mut r = [0.0; 4];
            for i in 0..4 {
                r[i] = wrap_diff(phases[k][i] - phases[k - 1][i]) * rate;
            }
            r
        };
        let reference = match leg_references(
            &phases[k],
            &rates,
            &command,
            gait.period,
            &duties,
            &strides,
            geometry,
        ) {
            Ok(refs) => refs,
            Err(e) => {
                return json!({
                    "available": false,
                    "reason": format!("reference regeneration failed at row {k}: {e}"),
                })
            }
        };
        let mut positions = [0.0; 12];
        let mut velocities = [0.0; 12];
        for i in 0..4 {
            for j in 0..3 {
                positions[i * 3 + j] = reference.joints[i][j];
                velocities[i * 3 + j] = reference.joint_rates[i][j];
            }
        }
        let r = metrics::reward(sample, &JointReference { positions, velocities });
        for (slot, value) in sums.iter_mut().zip([
            r.torque, r.velocity, r.imitation, r.balance, r.height, r.contact, r.total,
        ]) {
            *slot += value;
        }
    }
    let n = samples.len() as f64;
    json!({
        "available": true,
        "mean_terms": {
            "torque": sums[0] / n,
            "velocity": sums[1] / n,
            "imitation": sums[2] / n,
            "balance": sums[3] / n,
            "height": sums[4] / n,
            "contact": sums[5] / n,
        },
        "mean_total": sums[6] / n,
    })
}

pub fn analyze(
    log: &LocomotionLog,
    log_name: &str,
    gait: Option<&GaitDefinition>,
    context: &LogContext,
    geometry: &RobotGeometry,
) -> Result<Report, CliError> {
    let rate = log.sample_rate()?;
    let actual = log.contact_sequence("contact_act")?;

    let mut text = String::new();
    text.push_str(&format!(
        "log: {log_name} ({} rows @ {rate:.1} Hz)\n",
        log.len()
    ));

    let similarity_vs_gait = match gait {
        Some(g) if !g.three_legged => {
            let dt = context.dt.unwrap_or(0.0025);
            let desired = regenerate_schedule(g, log.len(), rate, dt)?;
            let s = metrics::similarity(&actual, &desired)?;
            text.push_str(&format!("similarity vs {}: {s:.6}\n", g.name));
            Some(s)
        }
        Some(g) => {
            text.push_str(&format!(
                "similarity vs {}: skipped (three-legged presets have no fixed four-leg schedule)\n",
                g.name
            ));
            None
        }
        None => None,
    };

    let similarity_logged = if log.has_column("contact_des_fr") {
        let desired = log.contact_sequence("contact_des")?;
        let s = metrics::similarity(&actual, &desired)?;
        text.push_str(&format!("similarity (logged desired): {s:.6}\n"));
        Some(s)
    } else {
        None
    };

    let mut duties = [0.0; 4];
    for leg in Leg::ALL {
        duties[leg.index()] = metrics::duty_factor(&actual, leg)?;
    }
    let gait_duty = metrics::gait_duty_factor(&actual)?;
    text.push_str(&format!(
        "duty factors: FR {:.3}  FL {:.3}  HR {:.3}  HL {:.3}  (gait-level {gait_duty:.3})\n",
        duties[0], duties[1], duties[2], duties[3]
    ));

    let velocity: Option<VelocityTracking> = match (&context.command, log.has_column("base_vx")) {
        (Some(cmd), true) => {
            let v = metrics::velocity_error(&log.base_velocities()?, cmd)?;
            text.push_str(&format!(
                "velocity error: linear {:.4} m/s, yaw {:.4} rad/s\n",
                v.linear, v.yaw
            ));
            Some(v)
        }
        _ => {
            text.push_str("velocity error: unavailable (needs base velocity columns and a command)\n");
            None
        }
    };

    let reward = reward_section(log, gait, context, geometry);
    match reward.get("available") {
        Some(serde_json::Value::Bool(true)) => {
            let total = reward["mean_total"].as_f64().unwrap_or(f64::NAN);
            text.push_str(&format!("reward: mean total {total:.4}\n"));
        }
        _ => {
            let reason = reward
                .get("reason")
                .and_then(|r| r.as_str())
                .unwrap_or("unavailable");
            text.push_str(&format!("reward: unavailable ({reason})\n"));
        }
    }

    let json = json!({
        "log": log_name,
        "rows": log.len(),
        "rate_hz": rate,
        "similarity_vs_gait": similarity_vs_gait,
        "similarity_logged": similarity_logged,
        "duty_factors": {
            "fr": duties[0],
            "fl": duties[1],
            "hr": duties[2],
            "hl": duties[3],
            "gait_level": gait_duty,
        },
        "velocity_error": velocity.map(|v| json!({ "linear": v.linear, "yaw": v.yaw })),
        "reward": reward,
    });

    Ok(Report { text, json })
}
