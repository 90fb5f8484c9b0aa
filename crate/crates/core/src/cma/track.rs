use crate::cma::modes::ModeSet;
use crate::error::{Error, Result};

/// Default lower bound on the correlation of an accepted link.
pub const DEFAULT_MIN_CORRELATION: f64 = 0.7;

/// One tracked mode at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    /// Column of the mode in its ModeSet.
    pub raw_index: usize,
    pub lambda: f64,
    pub significance: f64,
    /// Correlation of the link from the previous sample, if any.
    pub link_correlation: Option<f64>,
}

/// A tracked mode over the frequency grid; `None` where it is absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    /// 1-based label after ordering.
    pub id: usize,
    pub points: Vec<Option<TrackPoint>>,
}

impl Track {
    pub fn first_sample(&self) -> Option<usize> {
        self.points.iter().position(Option::is_some)
    }

    /// MS per sample, `NaN` where the mode is absent.
    pub fn significance(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.map_or(f64::NAN, |p| p.significance)).collect()
    }

    pub fn lambda(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.map_or(f64::NAN, |p| p.lambda)).collect()
    }

    /// Sample index of the first local maximum of MS.
    pub fn first_peak(&self) -> Option<usize> {
        let ms = self.significance();
        let n = ms.len();
        (0..n).find(|&k| {
            if ms[k].is_nan() {
                return false;
            }
            let left = k == 0 || ms[k - 1].is_nan() || ms[k] >= ms[k - 1];
            let right = k + 1 == n || ms[k + 1].is_nan() || ms[k] >= ms[k + 1];
            left && right
        })
    }

    pub fn max_significance(&self) -> f64 {
        self.significance().into_iter().filter(|v| !v.is_nan()).fold(0.0, f64::max)
    }
}

/// Modes linked across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedModes {
    pub freqs: Vec<f64>,
    pub tracks: Vec<Track>,
    pub min_correlation: f64,
}

impl TrackedModes {
    pub fn track(&self, id: usize) -> Option<&Track> {
        self.tracks.iter().find(|t| t.id == id)
    }

    /// Track whose point at `sample` uses the given raw mode column.
    pub fn track_of(&self, sample: usize, raw_index: usize) -> Option<&Track> {
        self.tracks
            .iter()
            .find(|t| t.points[sample].is_some_and(|p| p.raw_index == raw_index))
    }

    /// Every accepted link correlation.
    pub fn link_correlations(&self) -> Vec<f64> {
        self.tracks
            .iter()
            .flat_map(|t| t.points.iter().filter_map(|p| p.and_then(|p| p.link_correlation)))
            .collect()
    }

    /// Index of the sample closest to `freq_ghz`.
    pub fn nearest_sample(&self, freq_ghz: f64) -> usize {
        let mut best = 0;
        for (k, f) in self.freqs.iter().enumerate() {
            if (f - freq_ghz).abs() < (self.freqs[best] - freq_ghz).abs() {
                best = k;
            }
        }
        best
    }
}

/// Minimum-cost assignment of every row to a distinct column (`rows <= cols`),
/// by the shortest augmenting path form of the Hungarian method.
pub fn assign_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "assignment needs rows <= cols");
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

/// Correlation between mode `m` of `a` and mode `n` of `b`: the geometric
/// mean of `|J_m^T R_a J_n|` and `|J_m^T R_b J_n|`. Each factor alone drifts
/// with the frequency scaling of `R`; their product does not.
pub fn correlation_matrix(a: &ModeSet, b: &ModeSet) -> Vec<Vec<f64>> {
    let fwd = a.r_currents.transpose() * &b.currents;
    let bwd = a.currents.transpose() * &b.r_currents;
    (0..a.len())
        .map(|m| (0..b.len()).map(|n| (fwd[(m, n)].abs() * bwd[(m, n)].abs()).sqrt()).collect())
        .collect()
}

/// Links modes of adjacent samples by maximum total correlation. Links
/// below `min_correlation` end the track, and the unmatched mode starts a
/// new one. Tracks are labelled 1.. in ascending frequency of their first
/// MS peak (ties by first appearance, then raw index).
pub fn track_modes(sweep: &[ModeSet], min_correlation: f64) -> Result<TrackedModes> {
    let Some(first) = sweep.first() else {
        return Err(Error::InvalidInput("cannot track an empty sweep".into()));
    };
    if !(0.0..=1.0).contains(&min_correlation) {
        return Err(Error::InvalidInput(format!("min_correlation must be in [0, 1], got {min_correlation}")));
    }
    if sweep.iter().any(|s| s.n() != first.n() || s.basis_id != first.basis_id) {
        return Err(Error::InvalidInput("mode sets do not share a basis".into()));
    }
    let samples = sweep.len();
    let point = |s: &ModeSet, k: usize, link| TrackPoint {
        raw_index: k,
        lambda: s.eigenvalues[k],
        significance: s.significance[k],
        link_correlation: link,
    };
    let mut tracks: Vec<Vec<Option<TrackPoint>>> = Vec::new();
    // track index owning each raw mode at the current sample
    let mut owner: Vec<usize> = Vec::new();
    for k in 0..first.len() {
        let mut pts = vec![None; samples];
        pts[0] = Some(point(first, k, None));
        tracks.push(pts);
        owner.push(k);
    }
    for i in 0..samples - 1 {
        let (a, b) = (&sweep[i], &sweep[i + 1]);
        let corr = correlation_matrix(a, b);
        let (rows, cols) = (a.len(), b.len());
        // pad to a square problem; dummy pairings carry zero correlation
        let size = rows.max(cols);
        let cost: Vec<Vec<f64>> = (0..size)
            .map(|m| (0..size).map(|n| if m < rows && n < cols { -corr[m][n] } else { 0.0 }).collect())
            .collect();
        let assignment = assign_min_cost(&cost);
        let mut next_owner = vec![usize::MAX; cols];
        for (m, &n) in assignment.iter().enumerate().take(rows) {
            if n < cols && corr[m][n] >= min_correlation {
                let t = owner[m];
                tracks[t][i + 1] = Some(point(b, n, Some(corr[m][n])));
                next_owner[n] = t;
            }
        }
        for (n, slot) in next_owner.iter_mut().enumerate() {
            if *slot == usize::MAX {
                let mut pts = vec![None; samples];
                pts[i + 1] = Some(point(b, n, None));
                tracks.push(pts);
                *slot = tracks.len() - 1;
            }
        }
        owner = next_owner;
    }

    let mut tracks: Vec<Track> = tracks.into_iter().map(|points| Track { id: 0, points }).collect();
    let key = |t: &Track| {
        let first = t.first_sample().expect("tracks are never empty");
        let raw = t.points[first].expect("first sample present").raw_index;
        (t.first_peak().expect("a present track has a peak"), first, raw)
    };
    tracks.sort_by_key(key);
    for (k, t) in tracks.iter_mut().enumerate() {
        t.id = k + 1;
    }
    Ok(TrackedModes {
        freqs: sweep.iter().map(|s| s.freq_ghz).collect(),
        tracks,
        min_correlation,
    })
}

/// Maximal frequency intervals where MS stays at or above `threshold`, with
/// crossings interpolated linearly between samples. Samples where the mode
/// is absent break a band.
pub fn radiating_band(track: &Track, freqs: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    band_from_samples(freqs, &track.significance(), threshold)
}

pub fn band_from_samples(freqs: &[f64], ms: &[f64], threshold: f64) -> Vec<(f64, f64)> {
    let mut bands = Vec::new();
    let n = freqs.len().min(ms.len());
    let above = |k: usize| !ms[k].is_nan() && ms[k] >= threshold;
    let cross = |k: usize| {
        // crossing between samples k and k + 1, both present
        let (f0, f1, m0, m1) = (freqs[k], freqs[k + 1], ms[k], ms[k + 1]);
        f0 + (threshold - m0) / (m1 - m0) * (f1 - f0)
    };
    let mut k = 0;
    while k < n {
        if !above(k) {
            k += 1;
            continue;
        }
        let start = if k > 0 && !ms[k - 1].is_nan() { cross(k - 1) } else { freqs[k] };
        let mut e = k;
        while e + 1 < n && above(e + 1) {
            e += 1;
        }
        let end = if e + 1 < n && !ms[e + 1].is_nan() { cross(e) } else { freqs[e] };
        bands.push((start, end));
        k = e + 1;
    }
    bands
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn synthetic(freq: f64, lambdas: &[f64], perm: &[usize]) -> ModeSet {
        let n = lambdas.len();
        let currents = Mat::from_fn(n, n, |i, j| if i == perm[j] { 1.0 } else { 0.0 });
        ModeSet {
            freq_ghz: freq,
            eigenvalues: lambdas.to_vec(),
            r_currents: currents.clone(),
            currents,
            significance: lambdas.iter().map(|&l| crate::cma::modal_significance(l)).collect(),
            residuals: vec![0.0; n],
            normalization: crate::cma::Normalization {
                epsilon: 0.0,
                orthonormality_error: 0.0,
                diagonalization_error: 0.0,
                imaginary_residue: 0.0,
                max_residual: 0.0,
            },
            basis_id: 0,
        }
    }

    #[test]
    fn hungarian_small() {
        let cost = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0], vec![3.0, 2.0, 2.0]];
        assert_eq!(assign_min_cost(&cost), vec![1, 0, 2]);
        let rect = vec![vec![1.0, 0.0, 5.0], vec![0.5, 9.0, 9.0]];
        assert_eq!(assign_min_cost(&rect), vec![1, 0]);
    }

    #[test]
    fn repeated_set_links_to_itself() {
        let s = synthetic(1.0, &[0.1, -0.5, 2.0], &[0, 1, 2]);
        let mut t = s.clone();
        t.freq_ghz = 1.1;
        let tracked = track_modes(&[s, t], 0.7).unwrap();
        assert_eq!(tracked.tracks.len(), 3);
        for tr in &tracked.tracks {
            let a = tr.points[0].unwrap();
            let b = tr.points[1].unwrap();
            assert_eq!(a.raw_index, b.raw_index);
            assert_eq!(b.link_correlation, Some(1.0));
        }
    }

    #[test]
    fn follows_currents_not_order() {
        // At the second sample the raw columns are permuted (lambda order
        // changed) but the currents are the same unit vectors.
        let a = synthetic(1.0, &[0.1, 0.5, 2.0], &[0, 1, 2]);
        let b = synthetic(1.1, &[0.2, 0.3, 2.5], &[1, 0, 2]);
        let tracked = track_modes(&[a, b], 0.7).unwrap();
        let t0 = tracked.track_of(0, 0).unwrap();
        assert_eq!(t0.points[1].unwrap().raw_index, 1);
        let t1 = tracked.track_of(0, 1).unwrap();
        assert_eq!(t1.points[1].unwrap().raw_index, 0);
    }

    #[test]
    fn weak_links_start_new_tracks() {
        let a = synthetic(1.0, &[0.1, 0.5], &[0, 1]);
        let mut b = synthetic(1.1, &[0.1, 0.5], &[0, 1]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        b.currents = Mat::from_fn(2, 2, |i, j| if j == 0 { h } else if i == 0 { -h } else { h });
        let tracked = track_modes(&[a, b], 0.9).unwrap();
        assert_eq!(tracked.tracks.len(), 4);
        assert!(tracked.link_correlations().is_empty());
    }

    #[test]
    fn ids_follow_first_peak() {
        // mode with lambda crossing zero at the second sample peaks first
        let a = synthetic(1.0, &[3.0, 1.0], &[0, 1]);
        let b = synthetic(2.0, &[2.0, 0.0], &[0, 1]);
        let c = synthetic(3.0, &[0.0, -1.0], &[0, 1]);
        let tracked = track_modes(&[a, b, c], 0.7).unwrap();
        assert_eq!(tracked.track(1).unwrap().points[0].unwrap().raw_index, 1);
        assert_eq!(tracked.track(2).unwrap().points[0].unwrap().raw_index, 0);
    }

    #[test]
    fn rejects_mismatched_basis() {
        let a = synthetic(1.0, &[0.1, 0.5], &[0, 1]);
        let b = synthetic(1.1, &[0.1, 0.5, 1.0], &[0, 1, 2]);
        assert!(matches!(track_modes(&[a, b], 0.7), Err(Error::InvalidInput(_))));
        assert!(track_modes(&[], 0.7).is_err());
    }

    #[test]
    fn band_interpolation() {
        let t = 0.70710678;
        let bands = band_from_samples(&[1.0, 2.0, 3.0, 4.0], &[0.5, 0.8, 0.9, 0.6], t);
        assert_eq!(bands.len(), 1);
        let (lo, hi) = bands[0];
        assert!((lo - (1.0 + (t - 0.5) / 0.3)).abs() < 1e-12);
        assert!((hi - (3.0 + (0.9 - t) / 0.3)).abs() < 1e-12);
        assert!(band_from_samples(&[1.0, 2.0], &[0.2, 0.3], t).is_empty());
        // significant at the grid edge: band starts at the first sample
        assert_eq!(band_from_samples(&[1.0, 2.0, 3.0], &[0.9, 0.8, 0.1], t)[0].0, 1.0);
    }
}
