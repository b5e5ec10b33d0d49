use std::collections::BTreeMap;

use cube_spectral::VerificationReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Everything one invocation produced. Only `duration_ms` and the measured
/// values of wall-clock reports (names ending in `_seconds`) vary between
/// identical runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub seed: u64,
    pub version: String,
    pub duration_ms: u64,
    pub reports: Vec<VerificationReport>,
}

impl RunManifest {
    pub fn new(command: &str, params: BTreeMap<String, Value>, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            params,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_ms: 0,
            reports: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut m = RunManifest::new("verify", BTreeMap::from([("suite".to_string(), Value::from("core"))]), 7);
        m.duration_ms = 12;
        m.reports.push(VerificationReport::at_most("x", 0.1 + 0.2, 0.3, 1e-12).param("n", 4));
        m.reports.push(VerificationReport::failed("y", "boom"));
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back.reports[0], m.reports[0]);
        assert_eq!(back.command, m.command);
        assert_eq!(back.duration_ms, 12);
        assert!(!back.pass());
        assert!(back.reports[1].measured.is_nan());
    }
}
