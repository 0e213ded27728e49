//! JSON scenario files.
//!
//! ```json
//! {
//!   "users": [{"p_max": 1.0, "h": 1.0, "n0": 1.0}],
//!   "costs": {"c_s": 0.8, "c_l": 2.0},
//!   "alpha": {"type": "uniform"},
//!   "snr_model": "high"
//! }
//! ```
//!
//! `users` may also be given as `{"g": [1.0, 3.0]}`, meaning unit gain and
//! unit noise. `alpha` defaults to uniform and `snr_model` to `"high"`.
//! Unknown keys are rejected at every level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AlphaDistribution, AlphaLaw, CostParams, Scenario, SnrModel, UserProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub users: UsersSpec,
    pub costs: CostsSpec,
    #[serde(default)]
    pub alpha: AlphaSpec,
    #[serde(default)]
    pub snr_model: SnrModelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UsersSpec {
    Profiles(Vec<ProfileSpec>),
    Shorthand(GShorthand),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub p_max: f64,
    pub h: f64,
    pub n0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GShorthand {
    pub g: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostsSpec {
    pub c_s: f64,
    pub c_l: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    tag = "type",
    content = "params",
    rename_all = "lowercase",
    deny_unknown_fields
)]
pub enum AlphaSpec {
    #[default]
    Uniform,
    Beta(BetaParams),
    Discrete(DiscreteParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteParams {
    pub points: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnrModelSpec {
    #[default]
    High,
    General,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let users = match self.users {
            UsersSpec::Profiles(list) => list
                .iter()
                .enumerate()
                .map(|(i, p)| UserProfile::new(p.p_max, p.h, p.n0).map_err(|e| reindex(e, i)))
                .collect::<Result<Vec<_>>>()?,
            UsersSpec::Shorthand(s) => {
                s.g.iter()
                    .enumerate()
                    .map(|(i, g)| UserProfile::from_g(*g).map_err(|e| reindex(e, i)))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let costs = CostParams::new(self.costs.c_s, self.costs.c_l)?;
        let alpha = AlphaDistribution::new(match self.alpha {
            AlphaSpec::Uniform => AlphaLaw::Uniform01,
            AlphaSpec::Beta(p) => AlphaLaw::Beta { a: p.a, b: p.b },
            AlphaSpec::Discrete(p) => AlphaLaw::Discrete {
                points: p.points,
                probs: p.probs,
            },
        })?;
        let model = match self.snr_model {
            SnrModelSpec::High => SnrModel::HighSnr,
            SnrModelSpec::General => SnrModel::General,
        };
        Scenario::new(users, costs, alpha, model)
    }

    pub fn from_scenario(scenario: &Scenario) -> Self {
        ScenarioFile {
            users: UsersSpec::Profiles(
                scenario
                    .users()
                    .iter()
                    .map(|u| ProfileSpec {
                        p_max: u.p_max(),
                        h: u.h(),
                        n0: u.n0(),
                    })
                    .collect(),
            ),
            costs: CostsSpec {
                c_s: scenario.costs().sensing(),
                c_l: scenario.costs().leasing(),
            },
            alpha: match scenario.alpha().law() {
                AlphaLaw::Uniform01 => AlphaSpec::Uniform,
                AlphaLaw::Beta { a, b } => AlphaSpec::Beta(BetaParams { a: *a, b: *b }),
                AlphaLaw::Discrete { points, probs } => AlphaSpec::Discrete(DiscreteParams {
                    points: points.clone(),
                    probs: probs.clone(),
                }),
            },
            snr_model: match scenario.snr_model() {
                SnrModel::HighSnr => SnrModelSpec::High,
                SnrModel::General => SnrModelSpec::General,
            },
        }
    }
}

fn reindex(e: Error, index: usize) -> Error {
    match e {
        Error::InvalidProfile { reason, .. } => Error::InvalidProfile { index, reason },
        other => other,
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_scenario()
}

pub fn render_scenario(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario))
        .expect("scenario files always serialize")
}
