use crate::cma::{sweep_problem, track_modes, ModeSet, TrackedModes};
use crate::error::{Error, Result};
use crate::geometry::{extract_rwg, RwgBasisSet, TriangleMesh};
use crate::mom::current::{surface_current_real, SurfaceCurrent};
use crate::mom::MomProblem;

/// Everything the mode-based analyses need about one scene: the mesh, its
/// basis, the per-frequency mode sets and their tracking.
#[derive(Debug, Clone)]
pub struct ModalStudy {
    pub mesh: TriangleMesh,
    pub basis: RwgBasisSet,
    pub sweep: Vec<ModeSet>,
    pub tracked: TrackedModes,
}

impl ModalStudy {
    pub fn run(mesh: &TriangleMesh, freqs: &[f64], n_modes: usize, min_correlation: f64) -> Result<Self> {
        let basis = extract_rwg(mesh)?;
        let problem = MomProblem::new(mesh, &basis)?;
        let sweep = sweep_problem(&problem, freqs, n_modes.min(basis.len()))?;
        Self::from_sweep(mesh.clone(), basis, sweep, min_correlation)
    }

    pub fn from_sweep(mesh: TriangleMesh, basis: RwgBasisSet, sweep: Vec<ModeSet>, min_correlation: f64) -> Result<Self> {
        if sweep.iter().any(|s| s.n() != basis.len()) {
            return Err(Error::InvalidInput("mode sets do not match the basis".into()));
        }
        let tracked = track_modes(&sweep, min_correlation)?;
        Ok(ModalStudy { mesh, basis, sweep, tracked })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.tracked.freqs
    }

    /// Eigencurrent coefficients of tracked mode `id` at `sample`.
    pub fn mode_coefficients(&self, id: usize, sample: usize) -> Option<Vec<f64>> {
        let p = self.tracked.track(id)?.points.get(sample).copied().flatten()?;
        Some(self.sweep[sample].current(p.raw_index))
    }

    /// Surface current of tracked mode `id` at `sample`.
    pub fn mode_current(&self, id: usize, sample: usize) -> Option<Result<SurfaceCurrent>> {
        self.mode_coefficients(id, sample)
            .map(|c| surface_current_real(&self.mesh, &self.basis, &c))
    }
}
