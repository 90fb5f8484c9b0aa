use std::path::{Path, PathBuf};

use cmlab::analysis::Thresholds;
use cmlab::cma::{frequency_grid, DEFAULT_MODES};
use cmlab::geometry::SceneConfig;
use cmlab::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Uniform frequency grid in GHz, `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// One run: scene, sweep and analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    /// Port reference impedance (ohm).
    #[serde(default = "default_z0")]
    pub z0: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Analysis band (GHz) for coupling classification and slot comparison.
    #[serde(default = "default_band")]
    pub band: [f64; 2],
    /// Frequency (GHz) of field dumps and of current-maxima checks.
    #[serde(default = "default_field_freq")]
    pub field_freq_ghz: f64,
    pub scene: SceneConfig,
    pub grid: GridSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_modes() -> usize {
    DEFAULT_MODES
}

fn default_z0() -> f64 {
    50.0
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_band() -> [f64; 2] {
    [2.2, 2.6]
}

fn default_field_freq() -> f64 {
    2.4
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if !(g.step > 0.0) || !(g.start > 0.0) || !(g.stop >= g.start) || !g.stop.is_finite() {
            return Err(Error::InvalidInput(format!(
                "frequency grid needs 0 < start <= stop and step > 0 (got {}, {}, {})",
                g.start, g.stop, g.step
            )));
        }
        if self.n_modes == 0 {
            return Err(Error::InvalidInput("n_modes must be at least 1".into()));
        }
        if !(self.z0 > 0.0) || !self.z0.is_finite() {
            return Err(Error::InvalidInput(format!("z0 must be positive, got {}", self.z0)));
        }
        let [lo, hi] = self.band;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("band [{lo}, {hi}] GHz is not an interval")));
        }
        if !(self.field_freq_ghz > 0.0) || !self.field_freq_ghz.is_finite() {
            return Err(Error::InvalidInput(format!("field_freq_ghz must be positive, got {}", self.field_freq_ghz)));
        }
        self.thresholds.validate()
    }

    pub fn freqs(&self) -> Result<Vec<f64>> {
        frequency_grid(self.grid.start, self.grid.stop, self.grid.step)
    }

    /// SHA-256 of the canonical serialization, so formatting and comments in
    /// the source file do not change it.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cmlab::geometry::Preset;

    const MIMO4: &str = r#"
n_modes = 8
band = [2.3, 2.5]

[scene]
preset = "mimo4"
max_edge_mm = 6.0

[grid]
start = 1.8
stop = 3.0
step = 0.05

[thresholds]
null = 0.2
"#;

    #[test]
    fn parses_with_defaults() {
        let c = RunConfig::from_toml(MIMO4).unwrap();
        assert_eq!(c.n_modes, 8);
        assert_eq!(c.z0, 50.0);
        assert_eq!(c.scene.preset, Some(Preset::Mimo4));
        assert_eq!(c.thresholds.null, 0.2);
        assert_eq!(c.thresholds.reflection_db, -10.0);
        assert_eq!(c.freqs().unwrap().len(), 25);
    }

    #[test]
    fn round_trips_losslessly() {
        let mut c = RunConfig::from_toml(MIMO4).unwrap();
        c.thresholds.significance = 1.0 / 2f64.sqrt();
        c.grid.step = 0.1 / 3.0;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn hash_ignores_formatting_but_not_values() {
        let a = RunConfig::from_toml(MIMO4).unwrap();
        let spaced = MIMO4.replace("n_modes = 8", "# comment\nn_modes    =   8");
        assert_eq!(RunConfig::from_toml(&spaced).unwrap().hash(), a.hash());
        let other = RunConfig::from_toml(&MIMO4.replace("n_modes = 8", "n_modes = 7")).unwrap();
        assert_ne!(other.hash(), a.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_invalid() {
        assert!(RunConfig::from_toml(&MIMO4.replace("step = 0.05", "step = 0.0")).is_err());
        assert!(RunConfig::from_toml(&MIMO4.replace("stop = 3.0", "stop = 1.0")).is_err());
        assert!(RunConfig::from_toml(&MIMO4.replace("null = 0.2", "null = 2.0")).is_err());
        assert!(RunConfig::from_toml(&MIMO4.replace("n_modes = 8", "n_modes = 0")).is_err());
        assert!(matches!(RunConfig::from_toml(&format!("{MIMO4}\nbogus = 1\n")), Err(Error::Parse(_))));
        assert!(matches!(RunConfig::from_toml("n_modes = 3"), Err(Error::Parse(_))));
    }

    fn unit() -> impl proptest::strategy::Strategy<Value = f64> {
        use proptest::prelude::*;
        (1u32..=1000).prop_map(|k| k as f64 / 1000.0).boxed()
    }

    proptest::proptest! {
        #[test]
        fn any_valid_config_round_trips(
            n_modes in 1usize..20,
            z0 in 1.0f64..200.0,
            start in 0.1f64..2.0,
            span in 0.0f64..2.0,
            step in 0.001f64..0.5,
            lo in 1.0f64..2.0,
            width in 0.01f64..1.0,
            sig in unit(),
            null in unit(),
            window in unit(),
            reflection in -40.0f64..-0.1,
            explicit in proptest::bool::ANY,
            slot in (10.0f64..110.0, 10.0f64..50.0, 4.0f64..40.0, 2.0f64..8.0),
        ) {
            let scene = if explicit {
                SceneConfig {
                    preset: None,
                    max_edge_mm: 5.0,
                    chassis: Some(cmlab::geometry::ChassisSpec { length_mm: 120.0, width_mm: 60.0 }),
                    elements: Vec::new(),
                    slots: vec![cmlab::geometry::SlotRect {
                        center: [slot.0, slot.1],
                        length: slot.2,
                        width: slot.3,
                        axis: cmlab::geometry::SlotAxis::Y,
                    }],
                }
            } else {
                SceneConfig::preset(Preset::Mimo4Dgs, 6.0)
            };
            let c = RunConfig {
                n_modes,
                z0,
                band: [lo, lo + width],
                field_freq_ghz: lo,
                scene,
                grid: GridSpec { start, stop: start + span, step },
                thresholds: Thresholds {
                    significance: sig,
                    null,
                    center_window: window,
                    reflection_db: reflection,
                    ..Thresholds::default()
                },
                ..RunConfig::from_toml(MIMO4).unwrap()
            };
            let back = RunConfig::from_toml(&c.to_toml()).unwrap();
            proptest::prop_assert_eq!(&back, &c);
            proptest::prop_assert_eq!(back.hash(), c.hash());
        }
    }
}
