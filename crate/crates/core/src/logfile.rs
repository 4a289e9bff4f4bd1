//! The locomotion log format: a versioned CSV of one row per control tick,
//! plus adapters that lift logs into the metric types.
//!
//! Layout: a `# gaitgen-log v1` comment line, a header row of column
//! names, then numeric rows. Contacts are 0/1. Readers accept any column
//! superset; metrics that need absent columns report them as unavailable.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::cpg::Leg;
use crate::metrics::{ContactSequence, MetricsError, StateSample};

pub const SCHEMA_VERSION: &str = "gaitgen-log v1";

/// Lower-case per-leg column suffixes in network order.
pub const LEG_SUFFIXES: [&str; 4] = ["fr", "fl", "hr", "hl"];

/// `base_vx, base_vy, base_wz`.
pub const BASE_VELOCITY_COLUMNS: [&str; 3] = ["base_vx", "base_vy", "base_wz"];

/// One column name per leg: `<stem>_fr`, `<stem>_fl`, ...
pub fn per_leg(stem: &str) -> [String; 4] {
    LEG_SUFFIXES.map(|leg| format!("{stem}_{leg}"))
}

/// Three columns per leg: `<stem>_x_fr`, `<stem>_y_fr`, `<stem>_z_fr`, ...
pub fn per_leg_xyz(stem: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(12);
    for leg in LEG_SUFFIXES {
        for axis in ["x", "y", "z"] {
            out.push(format!("{stem}_{axis}_{leg}"));
        }
    }
    out
}

/// Joint columns per leg: `<stem>_abd_fr`, `<stem>_hip_fr`, `<stem>_knee_fr`, ...
pub fn per_joint(stem: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(12);
    for leg in LEG_SUFFIXES {
        for joint in ["abd", "hip", "knee"] {
            out.push(format!("{stem}_{joint}_{leg}"));
        }
    }
    out
}

/// The columns a generator run writes: time, phases, desired and actual
/// contacts, foot targets, joint references, base velocity, and the
/// transition progress when requested.
pub fn standard_columns(with_eta: bool) -> Vec<String> {
    let mut columns = vec!["time".to_string()];
    columns.extend(per_leg("phi"));
    columns.extend(per_leg("contact_des"));
    columns.extend(per_leg("contact_act"));
    columns.extend(per_leg_xyz("foot"));
    columns.extend(per_joint("q"));
    columns.extend(per_joint("dq"));
    columns.extend(BASE_VELOCITY_COLUMNS.map(String::from));
    if with_eta {
        columns.push("eta".to_string());
    }
    columns
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("log I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("log line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("log is missing column '{0}'")]
    MissingColumn(String),
    #[error("log has no data rows")]
    Empty,
    #[error("log time column is not uniformly sampled at row {row}")]
    NonUniformTime { row: usize },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Streaming CSV writer for the log schema.
pub struct LogWriter<W: Write> {
    sink: W,
    width: usize,
}

impl<W: Write> LogWriter<W> {
    pub fn new(mut sink: W, columns: &[String]) -> Result<Self, LogError> {
        writeln!(sink, "# {SCHEMA_VERSION}")?;
        writeln!(sink, "{}", columns.join(","))?;
        Ok(Self {
            sink,
            width: columns.len(),
        })
    }

    pub fn write_row(&mut self, row: &[f64]) -> Result<(), LogError> {
        debug_assert_eq!(row.len(), self.width);
        let mut line = String::with_capacity(row.len() * 12);
        for (i, value) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{value}"));
        }
        writeln!(self.sink, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, LogError> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}

/// A parsed log: named columns over numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LocomotionLog {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl LocomotionLog {
    pub fn parse(text: &str) -> Result<Self, LogError> {
        let mut columns: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match &columns {
                None => {
                    columns = Some(line.split(',').map(|c| c.trim().to_string()).collect());
                }
                Some(cols) => {
                    let values: Result<Vec<f64>, _> = line
                        .split(',')
                        .map(|v| v.trim().parse::<f64>())
                        .collect();
                    let values = values.map_err(|e| LogError::Parse {
                        line: line_no,
                        message: e.to_string(),
                    })?;
                    if values.len() != cols.len() {
                        return Err(LogError::Parse {
                            line: line_no,
                            message: format!(
                                "expected {} columns, got {}",
                                cols.len(),
                                values.len()
                            ),
                        });
                    }
                    rows.push(values);
                }
            }
        }
        let columns = columns.ok_or(LogError::Empty)?;
        if rows.is_empty() {
            return Err(LogError::Empty);
        }
        let index = columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        Ok(Self {
            columns,
            rows,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column_index(&self, name: &str) -> Result<usize, LogError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| LogError::MissingColumn(name.to_string()))
    }

    pub fn series(&self, name: &str) -> Result<Vec<f64>, LogError> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|row| row[idx]).collect())
    }

    /// Sample rate inferred from the time column; the spacing must be
    /// uniform to within a nanosecond.
    pub fn sample_rate(&self) -> Result<f64, LogError> {
        let time = self.series("time")?;
        if time.len() < 2 {
            return Err(LogError::Empty);
        }
        let dt = time[1] - time[0];
        if !(dt > 0.0) {
            return Err(LogError::NonUniformTime { row: 1 });
        }
        for (row, pair) in time.windows(2).enumerate() {
            if ((pair[1] - pair[0]) - dt).abs() > 1e-9 {
                return Err(LogError::NonUniformTime { row: row + 1 });
            }
        }
        Ok(1.0 / dt)
    }

    /// Per-leg phases, one row per tick.
    pub fn phases(&self) -> Result<Vec<[f64; 4]>, LogError> {
        self.per_leg_rows("phi")
    }

    fn per_leg_rows(&self, stem: &str) -> Result<Vec<[f64; 4]>, LogError> {
        let names = per_leg(stem);
        let mut indices = [0usize; 4];
        for (k, name) in names.iter().enumerate() {
            indices[k] = self.column_index(name)?;
        }
        Ok(self
            .rows
            .iter()
            .map(|row| [row[indices[0]], row[indices[1]], row[indices[2]], row[indices[3]]])
            .collect())
    }

    /// Lift a 0/1 contact column group into a `ContactSequence`.
    pub fn contact_sequence(&self, stem: &str) -> Result<ContactSequence, LogError> {
        let rate
            = self.sample_rate()?;
        let rows = self.per_leg_rows(stem)?;
        let bools: Vec<[bool; 4]> = rows
            .iter()
            .map(|r| [r[0] != 0.0, r[1] != 0.0, r[2] != 0.0, r[3] != 0.0])
            .collect();
        Ok(ContactSequence::from_rows(&bools, rate)?)
    }

    /// Base-velocity rows `(forward, lateral, yaw)`.
    pub fn base_velocities(&self) -> Result<Vec<[f64; 3]>, LogError> {
        let idx = [
            self.column_index(BASE_VELOCITY_COLUMNS[0])?,
            self.column_index(BASE_VELOCITY_COLUMNS[1])?,
            self.column_index(BASE_VELOCITY_COLUMNS[2])?,
        ];
        Ok(self
            .rows
            .iter()
            .map(|row| [row[idx[0]], row[idx[1]], row[idx[2]]])
            .collect())
    }

    /// Columns the reward needs beyond the standard generator set.
    pub fn reward_columns_present(&self) -> bool {
        let mut needed: Vec<String> = per_joint("tau");
        needed.extend(per_leg_xyz("force"));
        needed.extend(per_leg_xyz("footvel"));
        needed.extend(
            ["grav_x", "grav_y", "grav_z", "base_z", "base_z_des"].map(String::from),
        );
        needed.iter().all(|c| self.has_column(c))
    }

    /// Extract full state samples for the reward. Torque rates come from
    /// `tau_rate_*` columns when present, otherwise by backward difference
    /// over the log (zero on the first row).
    pub fn state_samples(&self, commanded: [f64; 3]) -> Result<Vec<StateSample>, LogError> {
        let gather12 = |names: &[String]| -> Result<Vec<[f64; 12]>, LogError> {
            let mut idx = Vec::with_capacity(12);
            for name in names {
                idx.push(self.column_index(name)?);
            }
            Ok(self
                .rows
                .iter()
                .map(|row| {
                    let mut out = [0.0; 12];
                    for (k, &i) in idx.iter().enumerate() {
                        out[k] = row[i];
                    }
                    out
                })
                .collect())
        };
        let gather_feet = |stem: &str| -> Result<Vec<[[f64; 3]; 4]>, LogError> {
            let names = per_leg_xyz(stem);
            let mut idx = Vec::with_capacity(12);
            for name in &names {
                idx.push(self.column_index(name)?);
            }
            Ok(self
                .rows
                .iter()
                .map(|row| {
                    let mut out = [[0.0; 3]; 4];
                    for leg in 0..4 {
                        for axis in 0..3 {
                            out[leg][axis] = row[idx[leg * 3 + axis]];
                        }
                    }
                    out
                })
                .collect())
        };

        let rate = self.sample_rate()?;
        let q = gather12(&per_joint("q"))?;
        let dq = gather12(&per_joint("dq"))?;
        let tau = gather12(&per_joint("tau"))?;
        let tau_rate = if per_joint("tau_rate").iter().all(|c| self.has_column(c)) {
            gather12(&per_joint("tau_rate"))?
        } else {
            let mut rates = vec![[0.0; 12]];
            for k in 1..tau.len() {
                let mut row = [0.0; 12];
                for j in 0..12 {
                    row[j] = (tau[k][j] - tau[k - 1][j]) * rate;
                }
                rates.push(row);
            }
            rates
        };
        let phases = self.phases()?;
        let base_v = self.base_velocities()?;
        let grav = [
            self.series("grav_x")?,
            self.series("grav_y")?,
            self.series("grav_z")?,
        ];
        let base_z = self.series("base_z")?;
        let base_z_des = self.series("base_z_des")?;
        let forces = gather_feet("force")?;
        let foot_vels = gather_feet("footvel")?;
        let contacts = if per_leg("contact_des").iter().all(|c| self.has_column(c)) {
            Some(self.per_leg_rows("contact_des")?)
        } else {
            None
        };

        let mut samples = Vec::with_capacity(self.len());
        for k in 0..self.len() {
            samples.push(StateSample {
                joint_positions: q[k],
                joint_velocities: dq[k],
                joint_torques: tau[k],
                joint_torque_rates: tau_rate[k],
                base_velocity: base_v[k],
                commanded_velocity: commanded,
                gravity: [grav[0][k], grav[1][k], grav[2][k]],
                base_height: base_z[k],
                desired_base_height: base_z_des[k],
                foot_forces: forces[k],
                foot_velocities: foot_vels[k],
                desired_contacts: contacts
                    .as_ref()
                    .map(|c| [c[k][0] != 0.0, c[k][1] != 0.0, c[k][2] != 0.0, c[k][3] != 0.0]),
                phases: phases[k],
            });
        }
        Ok(samples)
    }
}

/// Duty factor of one leg straight from a log's actual contacts.
pub fn leg_duty_from_log(log: &LocomotionLog, leg: Leg) -> Result<f64, LogError> {
    let seq = log.contact_sequence("contact_act")?;
    Ok(crate::metrics::duty_factor(&seq, leg)?)
}
