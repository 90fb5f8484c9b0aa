use crate::analysis::coupling::{band_samples, Classification, CouplingReport};
use crate::analysis::isolation::{isolation_db, reflection_db};
use crate::analysis::perturbation::ModePairing;
use crate::analysis::{band_overlap, Thresholds};
use crate::cma::track::band_from_samples;
use crate::error::{Error, Result};
use crate::mom::ScatteringMatrix;

/// Worst in-band isolation of one port pair, before and after the slot.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationChange {
    pub ports: (u32, u32),
    pub worst_before_db: f64,
    pub worst_after_db: f64,
    /// `worst_before_db - worst_after_db`; positive means better isolation.
    pub improvement_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionShift {
    pub port: u32,
    pub before: Vec<(f64, f64)>,
    pub after: Vec<(f64, f64)>,
    /// Share of the original matched band still matched.
    pub overlap: f64,
    /// Movement of the centre of the widest matched band; `NaN` when either
    /// side has none.
    pub center_shift_ghz: f64,
}

/// Classification of a baseline chassis mode and of its partner in the
/// slotted scene.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeChange {
    pub baseline_id: usize,
    pub before: Classification,
    pub perturbed_id: Option<usize>,
    pub after: Option<Classification>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgsEffect {
    pub band: (f64, f64),
    pub thresholds: Thresholds,
    pub isolation: Vec<IsolationChange>,
    pub reflection: Vec<ReflectionShift>,
    pub modes: Vec<ModeChange>,
}

impl DgsEffect {
    pub fn pair(&self, i: u32, j: u32) -> Option<&IsolationChange> {
        let key = (i.min(j), i.max(j));
        self.isolation.iter().find(|c| c.ports == key)
    }

    pub fn port(&self, p: u32) -> Option<&ReflectionShift> {
        self.reflection.iter().find(|r| r.port == p)
    }

    /// Smallest reflection-band overlap over all ports.
    pub fn min_overlap(&self) -> f64 {
        self.reflection.iter().map(|r| r.overlap).fold(1.0, f64::min)
    }
}

fn check_sweep(s: &[ScatteringMatrix], freqs: &[f64], ports: &[u32], what: &str) -> Result<()> {
    if s.len() != freqs.len() || s.iter().zip(freqs).any(|(m, f)| (m.freq_ghz - f).abs() > 1e-9) {
        return Err(Error::InvalidInput(format!("{what} sweep is on a different frequency grid")));
    }
    if s.iter().any(|m| m.port_ids != ports) {
        return Err(Error::InvalidInput(format!("{what} sweep has a different port set")));
    }
    Ok(())
}

fn widest_center(bands: &[(f64, f64)]) -> Option<f64> {
    bands
        .iter()
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .map(|b| (b.0 + b.1) / 2.0)
}

/// Compares driven sweeps of a scene without and with its slot. The worst
/// isolation of each pair is taken over the samples in `band`; matched
/// bands are where `|S_ii|` stays at or below `th.reflection_db` over the
/// whole sweep.
pub fn dgs_effect(
    before: &[ScatteringMatrix],
    after: &[ScatteringMatrix],
    band: (f64, f64),
    th: &Thresholds,
) -> Result<DgsEffect> {
    th.validate()?;
    let first = before.first().ok_or_else(|| Error::InvalidInput("empty driven sweep".into()))?;
    let freqs: Vec<f64> = before.iter().map(|m| m.freq_ghz).collect();
    let ports = first.port_ids.clone();
    check_sweep(before, &freqs, &ports, "baseline")?;
    check_sweep(after, &freqs, &ports, "slotted")?;
    let samples = band_samples(&freqs, band)?;

    let worst = |sweep: &[ScatteringMatrix], i: u32, j: u32| -> Result<f64> {
        samples.iter().try_fold(f64::NEG_INFINITY, |w, &k| Ok(w.max(isolation_db(&sweep[k], i, j)?)))
    };
    let mut sorted = ports.clone();
    sorted.sort_unstable();
    let mut isolation = Vec::new();
    for (a, &i) in sorted.iter().enumerate() {
        for &j in &sorted[a + 1..] {
            let worst_before_db = worst(before, i, j)?;
            let worst_after_db = worst(after, i, j)?;
            isolation.push(IsolationChange {
                ports: (i, j),
                worst_before_db,
                worst_after_db,
                improvement_db: worst_before_db - worst_after_db,
            });
        }
    }

    let matched = |sweep: &[ScatteringMatrix], p: u32| -> Result<Vec<(f64, f64)>> {
        let level: Vec<f64> = sweep.iter().map(|m| reflection_db(m, p).map(|v| -v)).collect::<Result<_>>()?;
        Ok(band_from_samples(&freqs, &level, -th.reflection_db))
    };
    let mut reflection = Vec::new();
    for &p in &sorted {
        let b = matched(before, p)?;
        let a = matched(after, p)?;
        let center_shift_ghz = match (widest_center(&b), widest_center(&a)) {
            (Some(cb), Some(ca)) => ca - cb,
            _ => f64::NAN,
        };
        reflection.push(ReflectionShift { port: p, overlap: band_overlap(&b, &a), before: b, after: a, center_shift_ghz });
    }
    Ok(DgsEffect { band, thresholds: *th, isolation, reflection, modes: Vec::new() })
}

/// Follows each baseline mode's class into the slotted scene through `pairing`.
pub fn mode_changes(before: &CouplingReport, after: &CouplingReport, pairing: &ModePairing) -> Vec<ModeChange> {
    before
        .entries
        .iter()
        .map(|e| {
            let perturbed_id = pairing.partner(e.id);
            ModeChange {
                baseline_id: e.id,
                before: e.class,
                perturbed_id,
                after: perturbed_id.and_then(|id| after.entry(id)).map(|x| x.class),
            }
        })
        .collect()
}
