use std::collections::{BTreeSet, HashMap};

use crate::analysis::study::ModalStudy;
use crate::analysis::{band_overlap, Thresholds};
use crate::cma::track::{assign_min_cost, band_from_samples, radiating_band};
use crate::error::{Error, Result};
use crate::geometry::{Region, RwgBasisSet, TriangleMesh};
use crate::mom::current::{surface_current_real, SurfaceCurrent};

/// Per-sample partner of a baseline mode in the perturbed scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partner {
    pub track_id: usize,
    pub raw_index: usize,
    pub correlation: f64,
}

/// Tracked modes of two scenes matched through their shared chassis currents.
#[derive(Debug, Clone, PartialEq)]
pub struct ModePairing {
    /// `(baseline id, perturbed id, mean correlation)`, by baseline id. The
    /// perturbed id is the track that partners the baseline mode at the most
    /// samples.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Partner of every baseline track (in track order) at every sample.
    pub partners: Vec<Vec<Option<Partner>>>,
    /// Baseline ids without a partner at any sample.
    pub lost: Vec<usize>,
    /// Perturbed ids that never partner a baseline mode.
    pub new: Vec<usize>,
    /// Chassis basis functions present in both meshes.
    pub shared_functions: usize,
}

impl ModePairing {
    pub fn partner(&self, baseline_id: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == baseline_id).map(|p| p.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationEntry {
    pub baseline_id: usize,
    pub perturbed_id: usize,
    pub pairing_score: f64,
    pub baseline_band: Vec<(f64, f64)>,
    pub perturbed_band: Vec<(f64, f64)>,
    /// Share of the baseline radiating band kept by the perturbed mode.
    pub overlap: f64,
    /// Largest MS difference over samples where both modes are present.
    pub ms_deviation: f64,
    /// Element share of the top current decile, baseline and perturbed.
    pub baseline_element_share: f64,
    pub perturbed_element_share: f64,
    pub relocated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub eval_freq_ghz: f64,
    pub thresholds: Thresholds,
    pub entries: Vec<PerturbationEntry>,
    pub lost: Vec<usize>,
    pub new: Vec<usize>,
}

impl PerturbationReport {
    pub fn entry(&self, baseline_id: usize) -> Option<&PerturbationEntry> {
        self.entries.iter().find(|e| e.baseline_id == baseline_id)
    }

    /// True when any paired mode has its current maxima moved onto elements.
    pub fn relocation(&self) -> bool {
        self.entries.iter().any(|e| e.relocated)
    }
}

fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9)
}

fn check_grids(base: &ModalStudy, pert: &ModalStudy) -> Result<()> {
    if !same_grid(base.freqs(), pert.freqs()) {
        return Err(Error::InvalidInput("scenes were swept on different frequency grids".into()));
    }
    Ok(())
}

fn quantize(p: [f64; 3]) -> [i64; 3] {
    p.map(|v| (v * 1e6).round() as i64)
}

/// Key of a function living between two chassis triangles, plus the centroid
/// of its plus triangle, which fixes its orientation.
fn chassis_function(mesh: &TriangleMesh, basis: &RwgBasisSet, n: usize) -> Option<([[i64; 3]; 2], [i64; 3])> {
    let f = basis.functions()[n];
    let regions = mesh.regions();
    if regions[f.plus] != Region::Chassis || regions[f.minus] != Region::Chassis {
        return None;
    }
    let mut ends = [quantize(mesh.vertices()[f.edge.0]), quantize(mesh.vertices()[f.edge.1])];
    ends.sort();
    Some((ends, quantize(mesh.triangle_centroid(f.plus))))
}

/// `(baseline index, perturbed index, sign)` for every chassis function
/// present in both scenes.
fn shared_chassis_functions(base: &ModalStudy, pert: &ModalStudy) -> Vec<(usize, usize, f64)> {
    let mut lookup = HashMap::new();
    for n in 0..pert.basis.len() {
        if let Some((key, plus)) = chassis_function(&pert.mesh, &pert.basis, n) {
            lookup.insert(key, (n, plus));
        }
    }
    let mut shared = Vec::new();
    for n in 0..base.basis.len() {
        if let Some((key, plus)) = chassis_function(&base.mesh, &base.basis, n) {
            if let Some(&(m, pplus)) = lookup.get(&key) {
                shared.push((n, m, if pplus == plus { 1.0 } else { -1.0 }));
            }
        }
    }
    shared
}

/// Cosine similarity of every baseline mode with every perturbed mode at
/// one sample, over the coefficients of shared chassis functions.
fn restricted_correlation(base: &ModalStudy, pert: &ModalStudy, shared: &[(usize, usize, f64)], k: usize) -> Vec<Vec<f64>> {
    let (a, b) = (&base.sweep[k], &pert.sweep[k]);
    let norm_a: Vec<f64> = (0..a.len())
        .map(|m| shared.iter().map(|&(i, _, _)| a.currents[(i, m)].powi(2)).sum::<f64>().sqrt())
        .collect();
    let norm_b: Vec<f64> = (0..b.len())
        .map(|n| shared.iter().map(|&(_, j, _)| b.currents[(j, n)].powi(2)).sum::<f64>().sqrt())
        .collect();
    (0..a.len())
        .map(|m| {
            (0..b.len())
                .map(|n| {
                    let norm = norm_a[m] * norm_b[n];
                    if norm <= 0.0 {
                        return 0.0;
                    }
                    let dot: f64 = shared.iter().map(|&(i, j, s)| a.currents[(i, m)] * s * b.currents[(j, n)]).sum();
                    (dot.abs() / norm).min(1.0)
                })
                .collect()
        })
        .collect()
}

/// Pairs the modes of `base` with those of `pert` one sample at a time: the
/// raw modes present at a sample are matched by a maximum-similarity
/// assignment over the chassis functions the two meshes share, and matches
/// below `min_pairing` are dropped. Following partners sample by sample
/// keeps a chassis mode paired when its perturbed counterpart is split over
/// several tracks.
pub fn pair_modes(base: &ModalStudy, pert: &ModalStudy, min_pairing: f64) -> Result<ModePairing> {
    check_grids(base, pert)?;
    let shared = shared_chassis_functions(base, pert);
    if shared.is_empty() {
        return Err(Error::InvalidInput("the scenes share no chassis basis functions".into()));
    }
    let samples = base.freqs().len();
    let mut partners = vec![vec![None; samples]; base.tracked.tracks.len()];
    for k in 0..samples {
        let c = restricted_correlation(base, pert, &shared, k);
        let (na, nb) = (base.sweep[k].len(), pert.sweep[k].len());
        let size = na.max(nb);
        let cost: Vec<Vec<f64>> = (0..size)
            .map(|m| (0..size).map(|n| if m < na && n < nb { -c[m][n] } else { 0.0 }).collect())
            .collect();
        let assignment = assign_min_cost(&cost);
        for (a, t) in base.tracked.tracks.iter().enumerate() {
            let Some(p) = t.points[k] else { continue };
            let n = assignment[p.raw_index];
            if n >= nb || c[p.raw_index][n] < min_pairing {
                continue;
            }
            if let Some(tp) = pert.tracked.track_of(k, n) {
                partners[a][k] = Some(Partner { track_id: tp.id, raw_index: n, correlation: c[p.raw_index][n] });
            }
        }
    }

    let mut pairs = Vec::new();
    let mut lost = Vec::new();
    let mut used = BTreeSet::new();
    for (a, t) in base.tracked.tracks.iter().enumerate() {
        let mut tally: Vec<(usize, usize)> = Vec::new();
        let mut sum = 0.0;
        let mut count = 0;
        for p in partners[a].iter().flatten() {
            match tally.iter_mut().find(|e| e.0 == p.track_id) {
                Some(e) => e.1 += 1,
                None => tally.push((p.track_id, 1)),
            }
            used.insert(p.track_id);
            sum += p.correlation;
            count += 1;
        }
        match tally.iter().max_by(|x, y| x.1.cmp(&y.1).then(y.0.cmp(&x.0))) {
            Some(&(id, _)) => pairs.push((t.id, id, sum / count as f64)),
            None => lost.push(t.id),
        }
    }
    pairs.sort_by_key(|p| p.0);
    lost.sort_unstable();
    let mut new: Vec<usize> = pert.tracked.tracks.iter().map(|t| t.id).filter(|id| !used.contains(id)).collect();
    new.sort_unstable();
    Ok(ModePairing { pairs, partners, lost, new, shared_functions: shared.len() })
}

/// Share of element triangles among the tenth of triangles carrying the
/// largest current magnitude.
pub fn element_share_of_top_decile(mesh: &TriangleMesh, current: &SurfaceCurrent) -> f64 {
    let t = mesh.num_triangles();
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| current.magnitude[b].total_cmp(&current.magnitude[a]).then(a.cmp(&b)));
    let top = t.div_ceil(10).max(1);
    let on_elements = order[..top].iter().filter(|&&k| mesh.regions()[k].is_element()).count();
    on_elements as f64 / top as f64
}

/// Sample closest to `freq` for which `present` holds.
fn nearest_sample(freqs: &[f64], freq: f64, present: impl Fn(usize) -> bool) -> Option<usize> {
    (0..freqs.len())
        .filter(|&k| present(k))
        .min_by(|&a, &b| (freqs[a] - freq).abs().total_cmp(&(freqs[b] - freq).abs()).then(a.cmp(&b)))
}

fn element_share(study: &ModalStudy, sample: usize, raw_index: usize) -> Result<f64> {
    let current = surface_current_real(&study.mesh, &study.basis, &study.sweep[sample].current(raw_index))?;
    Ok(element_share_of_top_decile(&study.mesh, &current))
}

/// Band, MS and current-maxima changes of each paired mode, comparing the
/// baseline MS curve with that of its per-sample partners. The maxima count
/// as relocated when the element share of the top current decile, taken at
/// the paired sample nearest `eval_freq_ghz`, grows by at least
/// `th.relocation` over the baseline.
pub fn perturbation_report(
    base: &ModalStudy,
    pert: &ModalStudy,
    pairing: &ModePairing,
    th: &Thresholds,
    eval_freq_ghz: f64,
) -> Result<PerturbationReport> {
    th.validate()?;
    check_grids(base, pert)?;
    if pairing.partners.len() != base.tracked.tracks.len() {
        return Err(Error::InvalidInput("pairing was built for a different baseline".into()));
    }
    let freqs = base.freqs();
    let mut entries = Vec::with_capacity(pairing.pairs.len());
    for &(bid, pid, score) in &pairing.pairs {
        let a = base
            .tracked
            .tracks
            .iter()
            .position(|t| t.id == bid)
            .ok_or_else(|| Error::InvalidInput(format!("baseline has no tracked mode {bid}")))?;
        let tb = &base.tracked.tracks[a];
        let partners = &pairing.partners[a];
        if partners.len() != freqs.len() {
            return Err(Error::InvalidInput("pairing was built on a different frequency grid".into()));
        }
        let perturbed_ms: Vec<f64> = partners
            .iter()
            .enumerate()
            .map(|(k, p)| p.map_or(f64::NAN, |p| pert.sweep[k].significance[p.raw_index]))
            .collect();
        let baseline_band = radiating_band(tb, freqs, th.significance);
        let perturbed_band = band_from_samples(freqs, &perturbed_ms, th.significance);
        let overlap = band_overlap(&baseline_band, &perturbed_band);
        let ms_deviation = tb
            .points
            .iter()
            .zip(&perturbed_ms)
            .filter_map(|(p, m)| Some((p.as_ref()?.significance - m).abs()).filter(|d| !d.is_nan()))
            .fold(0.0, f64::max);
        let k = nearest_sample(freqs, eval_freq_ghz, |k| partners[k].is_some()).expect("paired modes have partners");
        let baseline_raw = tb.points[k].expect("partners exist only where the baseline is present").raw_index;
        let baseline_element_share = element_share(base, k, baseline_raw)?;
        let perturbed_element_share = element_share(pert, k, partners[k].expect("chosen sample").raw_index)?;
        entries.push(PerturbationEntry {
            baseline_id: bid,
            perturbed_id: pid,
            pairing_score: score,
            baseline_band,
            perturbed_band,
            overlap,
            ms_deviation,
            baseline_element_share,
            perturbed_element_share,
            relocated: perturbed_element_share - baseline_element_share >= th.relocation,
        });
    }
    Ok(PerturbationReport {
        eval_freq_ghz,
        thresholds: *th,
        entries,
        lost: pairing.lost.clone(),
        new: pairing.new.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_rect_plate;

    fn plate_study() -> ModalStudy {
        let mesh = build_rect_plate(120.0, 60.0, 15.0).unwrap();
        ModalStudy::run(&mesh, &[1.0, 1.5, 2.0, 2.5], 4, 0.7).unwrap()
    }

    #[test]
    fn identical_scenes_give_the_identity_report() {
        let a = plate_study();
        let pairing = pair_modes(&a, &a, 0.5).unwrap();
        assert_eq!(pairing.shared_functions, a.basis.len());
        assert!(pairing.lost.is_empty() && pairing.new.is_empty());
        for &(b, p, score) in &pairing.pairs {
            assert_eq!(b, p);
            assert!((score - 1.0).abs() < 1e-9);
        }
        let r = perturbation_report(&a, &a, &pairing, &Thresholds::default(), 2.0).unwrap();
        assert_eq!(r.entries.len(), a.tracked.tracks.len());
        for e in &r.entries {
            assert_eq!(e.overlap, 1.0);
            assert_eq!(e.ms_deviation, 0.0);
            assert!(!e.relocated);
            assert_eq!(e.baseline_band, e.perturbed_band);
        }
        assert!(!r.relocation());
    }

    #[test]
    fn silenced_modes_lose_their_band() {
        let a = plate_study();
        let mut quiet = a.clone();
        for s in &mut quiet.sweep {
            s.significance.iter_mut().for_each(|m| *m = 0.0);
        }
        let pairing = pair_modes(&a, &quiet, 0.5).unwrap();
        let r = perturbation_report(&a, &quiet, &pairing, &Thresholds::default(), 2.0).unwrap();
        let radiating = r.entries.iter().find(|e| !e.baseline_band.is_empty()).expect("a radiating plate mode");
        assert_eq!(radiating.overlap, 0.0);
        assert!(radiating.ms_deviation > 0.7);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = plate_study();
        let mesh = build_rect_plate(120.0, 60.0, 15.0).unwrap();
        let b = ModalStudy::run(&mesh, &[1.0, 1.5, 2.0], 4, 0.7).unwrap();
        assert!(matches!(pair_modes(&a, &b, 0.5), Err(Error::InvalidInput(_))));
        let pairing = pair_modes(&a, &a, 0.5).unwrap();
        assert!(matches!(
            perturbation_report(&a, &b, &pairing, &Thresholds::default(), 2.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn sign_of_shared_functions_follows_orientation() {
        let a = plate_study();
        let shared = shared_chassis_functions(&a, &a);
        assert!(shared.iter().all(|&(i, j, s)| i == j && s == 1.0));
    }
}
