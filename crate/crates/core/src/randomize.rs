//! Seeded sampler for the domain-randomization table: uniform and normal
//! parameter distributions with their application modes, exported as
//! reproducible scenario records for external simulators.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution as _, Normal, Uniform};
use serde::{Deserialize, Serialize};

/// Identifier of the PRNG family, recorded in every scenario.
pub const GENERATOR_ID: &str = "chacha12";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleDistribution {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, stddev: f64 },
}

/// How a sampled value applies to the simulated robot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyMode {
    /// The value replaces the parameter outright.
    Absolute,
    /// The value scales the parameter's default.
    Multiplier,
    /// The value is added as noise.
    Additive,
}

/// One randomized parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomEntry {
    pub name: String,
    pub unit: String,
    pub distribution: SampleDistribution,
    pub mode: ApplyMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationSpec {
    pub entries: Vec<RandomEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RandomizeError {
    #[error("entry '{name}': uniform bounds inverted ({lower} > {upper})")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("entry '{name}': stddev must be non-negative, got {stddev}")]
    NegativeStddev { name: String, stddev: f64 },
    #[error("entry '{name}': non-finite distribution parameter")]
    NonFinite { name: String },
}

impl RandomizationSpec {
    pub fn validate(&self) -> Result<(), RandomizeError> {
        for entry in &self.entries {
            match entry.distribution {
                SampleDistribution::Uniform { lower, upper } => {
                    if !lower.is_finite() || !upper.is_finite() {
                        return Err(RandomizeError::NonFinite {
                            name: entry.name.clone(),
                        });
                    }
                    if lower > upper {
                        return Err(RandomizeError::InvertedBounds {
                            name: entry.name.clone(),
                            lower,
                            upper,
                        });
                    }
                }
                SampleDistribution::Normal { mean, stddev } => {
                    if !mean.is_finite() || !stddev.is_finite() {
                        return Err(RandomizeError::NonFinite {
                            name: entry.name.clone(),
                        });
                    }
                    if stddev < 0.0 {
                        return Err(RandomizeError::NegativeStddev {
                            name: entry.name.clone(),
                            stddev,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// The published randomization table, verbatim.
pub fn default_spec() -> RandomizationSpec {
    let uniform = |name: &str, unit: &str, lower: f64, upper: f64| RandomEntry {
        name: name.to_string(),
        unit: unit.to_string(),
        distribution: SampleDistribution::Uniform { lower, upper },
        mode: ApplyMode::Absolute,
        note: None,
    };
    let normal = |name: &str, unit: &str, mean: f64, stddev: f64, mode: ApplyMode| RandomEntry {
        name: name.to_string(),
        unit: unit.to_string(),
        distribution: SampleDistribution::Normal { mean, stddev },
        mode,
        note: None,
    };
    RandomizationSpec {
        entries: vec![
            uniform("external_force", "N", 0.0, 10.0),
            uniform("external_torque", "Nm", 0.0, 2.0),
            uniform("ground_friction", "-", 0.4, 1.2),
            uniform("ground_height", "mm", -2.5, 2.5),
            normal("mass", "kg", 1.0, 0.05, ApplyMode::Multiplier),
            normal("body_size", "m", 1.0, 0.05, ApplyMode::Multiplier),
            normal("joint_position_noise", "rad", 0.0, 0.002, ApplyMode::Additive),
            normal("joint_velocity_noise", "rad/s", 0.0, 0.3, ApplyMode::Additive),
            normal("body_posture_noise", "rad", 0.0, 0.1, ApplyMode::Additive),
            RandomEntry {
                name: "angular_velocity_noise".to_string(),
                // Published unit; rad/s presumably intended.
                unit: "rad".to_string(),
                distribution: SampleDistribution::Normal {
                    mean: 0.0,
                    stddev: 0.3,
                },
                mode: ApplyMode::Additive,
                note: Some("unit published as rad; rad/s presumed".to_string()),
            },
        ],
    }
}

/// One sampled parameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledValue {
    pub name: String,
    pub unit: String,
    pub value: f64,
    pub mode: ApplyMode,
}

/// A reproducible draw of every spec entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub generator: String,
    pub values: Vec<SampledValue>,
}

/// Sample every entry once; deterministic in `(spec, seed)`. Uniform draws
/// stay inside their bounds, normal draws are not truncated.
pub fn sample(spec: &RandomizationSpec, seed: u64) -> Result<Scenario, RandomizeError> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(spec.entries.len());
    for entry in &spec.entries {
        let value = match entry.distribution {
            SampleDistribution::Uniform { lower, upper } => {
                if lower == upper {
                    lower
                } else {
                    rng.sample(Uniform::new(lower, upper).expect("validated bounds"))
                }
            }
            SampleDistribution::Normal { mean, stddev } => {
                Normal::new(mean, stddev).expect("validated stddev").sample(&mut rng)
            }
        };
        values.push(SampledValue {
            name: entry.name.clone(),
            unit: entry.unit.clone(),
            value,
            mode: entry.mode,
        });
    }
    Ok(Scenario {
        seed,
        generator: GENERATOR_ID.to_string(),
        values,
    })
}

/// Sample `count` scenarios from consecutive seeds starting at `seed`.
pub fn sample_many(
    spec: &RandomizationSpec,
    seed: u64,
    count: usize,
) -> Result<Vec<Scenario>, RandomizeError> {
    (0..count)
        .map(|k| sample(spec, seed.wrapping_add(k as u64)))
        .collect()
}

/// Serialize scenarios as pretty JSON.
pub fn scenarios_to_json(scenarios: &[Scenario]) -> String {
    serde_json::to_string_pretty(scenarios).expect("scenario serialization cannot fail")
}
