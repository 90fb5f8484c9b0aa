use std::fmt;

use serde::{Deserialize, Serialize};

use crate::analysis::nullmap::current_null_map;
use crate::analysis::study::ModalStudy;
use crate::analysis::Thresholds;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Significant and carrying current through the chassis centre.
    Coupling,
    /// Significant with a current null at the chassis centre.
    NonCoupling,
    /// Never reaches the significance threshold in the band.
    Insignificant,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Coupling => "coupling",
            Classification::NonCoupling => "non-coupling",
            Classification::Insignificant => "insignificant",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingEntry {
    pub id: usize,
    pub class: Classification,
    /// Largest MS over the band samples where the mode is present.
    pub max_ms: f64,
    /// Sample frequency of `max_ms`, where the current is examined.
    pub eval_freq_ghz: f64,
    /// Area-weighted mean normalized chassis current in the central window
    /// at `eval_freq_ghz`; `NaN` when the mode is absent from the band.
    pub center_level: f64,
    /// Largest normalized chassis current in the same window.
    pub center_max: f64,
    /// Position of the mode when the modes present at the band-centre sample
    /// are ranked by MS (1 = most significant).
    pub rank_at_center: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    pub band: (f64, f64),
    pub center_freq_ghz: f64,
    pub thresholds: Thresholds,
    pub entries: Vec<CouplingEntry>,
}

impl CouplingReport {
    pub fn entry(&self, id: usize) -> Option<&CouplingEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn ids(&self, class: Classification) -> Vec<usize> {
        self.entries.iter().filter(|e| e.class == class).map(|e| e.id).collect()
    }
}

/// Indices of grid samples inside `band` (inclusive, 1e-9 GHz slack).
pub fn band_samples(freqs: &[f64], band: (f64, f64)) -> Result<Vec<usize>> {
    let (lo, hi) = band;
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidInput(format!("band [{lo}, {hi}] GHz is not an interval")));
    }
    let (f0, f1) = (freqs[0], freqs[freqs.len() - 1]);
    if lo < f0 - 1e-9 || hi > f1 + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "band [{lo}, {hi}] GHz is outside the sweep [{f0}, {f1}] GHz"
        )));
    }
    let samples: Vec<usize> = (0..freqs.len())
        .filter(|&k| freqs[k] >= lo - 1e-9 && freqs[k] <= hi + 1e-9)
        .collect();
    if samples.is_empty() {
        return Err(Error::InvalidInput(format!("no sweep sample lies in [{lo}, {hi}] GHz")));
    }
    Ok(samples)
}

/// Classifies each tracked mode of `study` over `band`. Modes whose MS
/// stays below the significance threshold are insignificant; the others are
/// coupling unless their chassis current at the MS maximum has a centre null.
pub fn classify_coupling_modes(study: &ModalStudy, band: (f64, f64), th: &Thresholds) -> Result<CouplingReport> {
    th.validate()?;
    let freqs = study.freqs();
    let samples = band_samples(freqs, band)?;
    let mid = (band.0 + band.1) / 2.0;
    let center = *samples
        .iter()
        .min_by(|&&a, &&b| (freqs[a] - mid).abs().total_cmp(&(freqs[b] - mid).abs()))
        .expect("band has samples");
    let mut at_center: Vec<(usize, f64)> = study
        .tracked
        .tracks
        .iter()
        .filter_map(|t| t.points[center].map(|p| (t.id, p.significance)))
        .collect();
    at_center.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut entries = Vec::with_capacity(study.tracked.tracks.len());
    for t in &study.tracked.tracks {
        let mut best: Option<(usize, f64)> = None;
        for &k in &samples {
            if let Some(p) = t.points[k] {
                if best.is_none_or(|(_, m)| p.significance > m) {
                    best = Some((k, p.significance));
                }
            }
        }
        let rank_at_center = at_center.iter().position(|&(id, _)| id == t.id).map(|r| r + 1);
        let Some((k, max_ms)) = best else {
            entries.push(CouplingEntry {
                id: t.id,
                class: Classification::Insignificant,
                max_ms: 0.0,
                eval_freq_ghz: f64::NAN,
                center_level: f64::NAN,
                center_max: f64::NAN,
                rank_at_center,
            });
            continue;
        };
        let current = study.mode_current(t.id, k).expect("track is present at its maximum")?;
        let map = current_null_map(&study.mesh, &current, th.null, th.center_window)
            .map_err(|e| e.context(format!("mode {} at {} GHz", t.id, freqs[k])))?;
        let class = if max_ms < th.significance {
            Classification::Insignificant
        } else if map.center_level >= th.null {
            Classification::Coupling
        } else {
            Classification::NonCoupling
        };
        entries.push(CouplingEntry {
            id: t.id,
            class,
            max_ms,
            eval_freq_ghz: freqs[k],
            center_level: map.center_level,
            center_max: map.center_max,
            rank_at_center,
        });
    }
    Ok(CouplingReport { band, center_freq_ghz: freqs[center], thresholds: *th, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_rect_plate;

    fn plate_study(freqs: &[f64]) -> ModalStudy {
        let mesh = build_rect_plate(120.0, 60.0, 10.0).unwrap();
        ModalStudy::run(&mesh, freqs, 4, 0.7).unwrap()
    }

    #[test]
    fn weak_modes_are_insignificant() {
        let s = plate_study(&[0.3, 0.4]);
        let r = classify_coupling_modes(&s, (0.3, 0.4), &Thresholds::default()).unwrap();
        assert!(r.entries.iter().all(|e| e.max_ms < 0.2));
        assert_eq!(r.ids(Classification::Insignificant).len(), r.entries.len());
    }

    #[test]
    fn invariant_to_sign_and_scale() {
        let s = plate_study(&[2.2, 2.4, 2.6]);
        let th = Thresholds::default();
        let base = classify_coupling_modes(&s, (2.2, 2.6), &th).unwrap();
        let mut flipped = s.clone();
        for (k, set) in flipped.sweep.iter_mut().enumerate() {
            let factor = if k % 2 == 0 { -1.0 } else { 3.5 };
            for m in 0..set.len() {
                for i in 0..set.n() {
                    set.currents[(i, m)] *= factor;
                }
            }
        }
        let other = classify_coupling_modes(&flipped, (2.2, 2.6), &th).unwrap();
        for (a, b) in base.entries.iter().zip(&other.entries) {
            assert_eq!(a.class, b.class);
            assert!((a.center_level - b.center_level).abs() < 1e-12 || a.center_level.is_nan());
        }
    }

    #[test]
    fn threshold_logic() {
        let s = plate_study(&[2.2, 2.4, 2.6]);
        let strict = Thresholds { null: 1.0, ..Thresholds::default() };
        let r = classify_coupling_modes(&s, (2.2, 2.6), &strict).unwrap();
        // every significant mode now counts as centred on a null
        assert!(r.ids(Classification::Coupling).is_empty());
        assert!(!r.ids(Classification::NonCoupling).is_empty());
        assert!(classify_coupling_modes(&s, (2.0, 2.6), &strict).is_err());
    }
}
