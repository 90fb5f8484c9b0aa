//! Isolation metrics, current-null maps, coupling-mode classification,
//! perturbation of chassis modes by attached elements, and slot (DGS)
//! comparisons.

pub mod coupling;
pub mod dgs;
pub mod isolation;
pub mod nullmap;
pub mod perturbation;
pub mod report;
pub mod study;

use serde::{Deserialize, Serialize};

use crate::cma::{DEFAULT_MIN_CORRELATION, SIGNIFICANCE_THRESHOLD};
use crate::error::{Error, Result};

pub use coupling::{classify_coupling_modes, Classification, CouplingEntry, CouplingReport};
pub use dgs::{dgs_effect, mode_changes, DgsEffect, IsolationChange, ModeChange, ReflectionShift};
pub use isolation::{isolation_db, reflection_db};
pub use nullmap::{center_window, current_null_map, write_null_map, NullMap};
pub use perturbation::{pair_modes, perturbation_report, ModePairing, Partner, PerturbationEntry, PerturbationReport};
pub use study::ModalStudy;

/// Analysis thresholds; every report records the values it used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Modal significance bounding a radiating band.
    pub significance: f64,
    /// Normalized chassis current below which a triangle is a null.
    pub null: f64,
    /// Area fraction of the chassis covered by the central window.
    pub center_window: f64,
    /// Lowest correlation accepted when tracking across frequency.
    pub min_correlation: f64,
    /// Lowest mean correlation accepted when pairing modes across scenes.
    pub min_pairing: f64,
    /// Increase in the element share of the top current decile that counts
    /// as the current maxima moving onto the elements.
    pub relocation: f64,
    /// Reflection level (dB) bounding a matched band.
    pub reflection_db: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            significance: SIGNIFICANCE_THRESHOLD,
            null: 0.1,
            center_window: 0.1,
            min_correlation: DEFAULT_MIN_CORRELATION,
            min_pairing: 0.5,
            relocation: 0.5,
            reflection_db: -10.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64, open_low: bool| {
            let ok = if open_low { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("threshold `{name}` must lie in the unit interval, got {v}")))
            }
        };
        unit("significance", self.significance, true)?;
        unit("null", self.null, true)?;
        unit("center_window", self.center_window, true)?;
        unit("min_correlation", self.min_correlation, false)?;
        unit("min_pairing", self.min_pairing, false)?;
        unit("relocation", self.relocation, false)?;
        if !(self.reflection_db < 0.0 && self.reflection_db.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "threshold `reflection_db` must be negative, got {}",
                self.reflection_db
            )));
        }
        Ok(())
    }
}

/// Total length of a set of disjoint intervals.
pub fn band_length(bands: &[(f64, f64)]) -> f64 {
    bands.iter().map(|(a, b)| b - a).sum()
}

/// Length of `before ∩ after` relative to `before`. An empty reference
/// overlaps fully with another empty set and not at all otherwise.
pub fn band_overlap(before: &[(f64, f64)], after: &[(f64, f64)]) -> f64 {
    let total = band_length(before);
    if total <= 0.0 {
        return if band_length(after) <= 0.0 { 1.0 } else { 0.0 };
    }
    let mut common = 0.0;
    for &(a0, a1) in before {
        for &(b0, b1) in after {
            common += (a1.min(b1) - a0.max(b0)).max(0.0);
        }
    }
    (common / total).clamp(0.0, 1.0)
}
