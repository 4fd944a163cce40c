use std::path::{Path, PathBuf};

use chaoslink::{NoiseModel, Protocol, Scenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtocolName {
    EF,
    DF,
}

impl From<ProtocolName> for Protocol {
    fn from(p: ProtocolName) -> Self {
        match p {
            ProtocolName::EF => Protocol::ErrorFree,
            ProtocolName::DF => Protocol::DecodeForward,
        }
    }
}

impl From<Protocol> for ProtocolName {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::ErrorFree => ProtocolName::EF,
            Protocol::DecodeForward => ProtocolName::DF,
        }
    }
}

/// On-disk scenario: the system parameters plus optional run controls.
///
/// Distances default to 1, `spreading_half_M` to 32 and `relay_antennas` to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(rename = "spreading_half_M", default = "default_m")]
    pub spreading_half_m: u32,
    #[serde(default = "one")]
    pub relay_antennas: u32,
    pub dest_antennas: u32,
    pub users_n: u32,
    #[serde(rename = "paths_L")]
    pub paths_l: u32,
    pub fading_m: f64,
    #[serde(default = "unit")]
    pub d_sr: f64,
    #[serde(default = "unit")]
    pub d_sd: f64,
    #[serde(default = "unit")]
    pub d_rd: f64,
    pub noise_a: f64,
    #[serde(default = "ef")]
    pub protocol: ProtocolName,
    pub snr_grid_db: Vec<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Exponential-sum parameters JSON; fitted on the fly when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn default_m() -> u32 {
    32
}

fn one() -> u32 {
    1
}

fn unit() -> f64 {
    1.0
}

fn ef() -> ProtocolName {
    ProtocolName::EF
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Usage(format!("scenario field `{path}`: {}", e.into_inner()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        if self.snr_grid_db.is_empty() {
            return Err(CliError::Usage("scenario field `snr_grid_db`: grid is empty".into()));
        }
        let noise = NoiseModel::new(self.noise_a).map_err(|e| CliError::Usage(format!("scenario field `noise_a`: {e}")))?;
        let sc = Scenario {
            spreading_half_m: self.spreading_half_m,
            relay_antennas: self.relay_antennas,
            dest_antennas: self.dest_antennas,
            users: self.users_n,
            paths: self.paths_l,
            fading_m: self.fading_m,
            d_sr: self.d_sr,
            d_sd: self.d_sd,
            d_rd: self.d_rd,
            noise,
            protocol: self.protocol.into(),
            snr_grid_db: self.snr_grid_db.clone(),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        Self {
            spreading_half_m: sc.spreading_half_m,
            relay_antennas: sc.relay_antennas,
            dest_antennas: sc.dest_antennas,
            users_n: sc.users,
            paths_l: sc.paths,
            fading_m: sc.fading_m,
            d_sr: sc.d_sr,
            d_sd: sc.d_sd,
            d_rd: sc.d_rd,
            noise_a: sc.noise.shape(),
            protocol: sc.protocol.into(),
            snr_grid_db: sc.snr_grid_db.clone(),
            trials: None,
            seed: None,
            tolerance: None,
            params: None,
            out: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"dest_antennas": 3, "users_n": 2, "paths_L": 2, "fading_m": 1,
        "noise_a": 2, "snr_grid_db": [0, 10, 20]}"#;

    #[test]
    fn defaults_follow_the_test_setup() {
        let f = ScenarioFile::parse(MINIMAL).unwrap();
        assert_eq!((f.spreading_half_m, f.relay_antennas), (32, 1));
        assert_eq!((f.d_sr, f.d_sd, f.d_rd), (1.0, 1.0, 1.0));
        assert_eq!(f.protocol, ProtocolName::EF);
        let sc = f.scenario().unwrap();
        assert_eq!(sc.dest_antennas, 3);
    }

    #[test]
    fn unknown_key_names_the_field() {
        let text = MINIMAL.replace("\"users_n\"", "\"users\"");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("users"), "{err}");
        let text = MINIMAL.replace("\"fading_m\": 1", "\"fading_m\": \"one\"");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("fading_m"), "{err}");
    }

    #[test]
    fn empty_grid_is_rejected() {
        let text = MINIMAL.replace("[0, 10, 20]", "[]");
        assert!(matches!(ScenarioFile::parse(&text).unwrap().scenario(), Err(CliError::Usage(_))));
    }

    #[test]
    fn round_trip() {
        let mut f = ScenarioFile::parse(MINIMAL).unwrap();
        f.seed = Some(u64::MAX);
        f.tolerance = Some(1e-13);
        let back = ScenarioFile::parse(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.scenario().unwrap(), f.scenario().unwrap());
        assert_eq!(ScenarioFile::from_scenario(&f.scenario().unwrap()).scenario().unwrap(), f.scenario().unwrap());
    }
}
