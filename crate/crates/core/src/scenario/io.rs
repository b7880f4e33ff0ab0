//! JSON scenario files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FreqGrid, RisElement, Scenario};
use crate::error::{Error, Result};
use crate::physics::DipoleParams;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FreqGridFile {
    start_ghz: f64,
    stop_ghz: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DipoleFile {
    x: f64,
    y: f64,
    f_res_ghz: f64,
    chi: f64,
    gamma_ghz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RisFile {
    x: f64,
    y: f64,
    chi: f64,
    gamma_ghz: f64,
    f_res_state0_ghz: f64,
    f_res_state1_ghz: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    freq_grid: FreqGridFile,
    tx: Vec<DipoleFile>,
    rx: Vec<DipoleFile>,
    #[serde(default)]
    ris: Vec<RisFile>,
    #[serde(default)]
    env: Vec<DipoleFile>,
    #[serde(default)]
    dynamic_env: Vec<usize>,
}

impl From<&DipoleParams> for DipoleFile {
    fn from(d: &DipoleParams) -> Self {
        Self {
            x: d.pos.x,
            y: d.pos.y,
            f_res_ghz: d.f_res,
            chi: d.chi,
            gamma_ghz: d.gamma,
        }
    }
}

impl From<DipoleFile> for DipoleParams {
    fn from(d: DipoleFile) -> Self {
        DipoleParams::new(d.x, d.y, d.f_res_ghz, d.chi, d.gamma_ghz)
    }
}

impl Scenario {
    /// Parses a scenario document. Unknown keys are rejected; the result
    /// is not validated.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ScenarioFile = serde_json::from_str(text).map_err(|e| {
            Error::Parse(format!("scenario JSON, line {} column {}: {e}", e.line(), e.column()))
        })?;
        Ok(Scenario {
            freq_grid: FreqGrid {
                start_ghz: file.freq_grid.start_ghz,
                stop_ghz: file.freq_grid.stop_ghz,
                n_points: file.freq_grid.n_points,
            },
            tx: file.tx.into_iter().map(Into::into).collect(),
            rx: file.rx.into_iter().map(Into::into).collect(),
            ris: file
                .ris
                .into_iter()
                .map(|r| RisElement::new(r.x, r.y, r.chi, r.gamma_ghz, r.f_res_state0_ghz, r.f_res_state1_ghz))
                .collect(),
            env: file.env.into_iter().map(Into::into).collect(),
            dynamic_env: file.dynamic_env,
        })
    }

    pub fn to_json(&self) -> String {
        let file = ScenarioFile {
            freq_grid: FreqGridFile {
                start_ghz: self.freq_grid.start_ghz,
                stop_ghz: self.freq_grid.stop_ghz,
                n_points: self.freq_grid.n_points,
            },
            tx: self.tx.iter().map(Into::into).collect(),
            rx: self.rx.iter().map(Into::into).collect(),
            ris: self
                .ris
                .iter()
                .map(|r| RisFile {
                    x: r.base.pos.x,
                    y: r.base.pos.y,
                    chi: r.base.chi,
                    gamma_ghz: r.base.gamma,
                    f_res_state0_ghz: r.f_res_state0,
                    f_res_state1_ghz: r.f_res_state1,
                })
                .collect(),
            env: self.env.iter().map(Into::into).collect(),
            dynamic_env: self.dynamic_env.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scenario serialization cannot fail")
    }

    /// Reads, parses and validates a scenario file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let sc = Self::from_json(&text)?;
        sc.ensure_valid()?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::scenario::{random_scenario, RandomScenarioSpec};

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"{"freq_grid":{"start_ghz":2.4,"stop_ghz":2.4,"n_points":1},
            "tx":[{"x":0,"y":0,"f_res_ghz":2.4,"chi":1,"gamma_ghz":0.1,"phase":3}],
            "rx":[{"x":1,"y":0,"f_res_ghz":2.4,"chi":1,"gamma_ghz":0.1}]}"#;
        let err = Scenario::from_json(text).unwrap_err();
        assert!(err.to_string().contains("phase"), "{err}");
    }

    #[test]
    fn minimal_document() {
        let text = r#"{"freq_grid":{"start_ghz":2.4,"stop_ghz":2.5,"n_points":3},
            "tx":[{"x":0,"y":0,"f_res_ghz":2.4,"chi":1,"gamma_ghz":0.1}],
            "rx":[{"x":1,"y":0,"f_res_ghz":2.4,"chi":1,"gamma_ghz":0.1}]}"#;
        let sc = Scenario::from_json(text).unwrap();
        assert!(sc.validate().is_empty());
        assert!(sc.ris.is_empty() && sc.env.is_empty());
    }

    #[test]
    fn malformed_reports_location() {
        let err = Scenario::from_json("{\n \"tx\": [").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn json_round_trip(seed in any::<u64>(), n_env in 0usize..20, n_ris in 0usize..6) {
            let spec = RandomScenarioSpec { n_env, n_ris, n_dynamic: n_env.min(2), ..Default::default() };
            let sc = random_scenario(&spec, seed);
            let back = Scenario::from_json(&sc.to_json()).unwrap();
            prop_assert_eq!(back, sc);
        }
    }
}
