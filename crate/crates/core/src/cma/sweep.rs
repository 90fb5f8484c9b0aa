use rayon::prelude::*;

use crate::cma::modes::{solve_modes, ModeSet};
use crate::error::{Error, Result};
use crate::geometry::{RwgBasisSet, TriangleMesh};
use crate::mom::MomProblem;

/// Checks that a frequency grid is non-empty, positive and strictly ascending.
pub fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidInput("frequency grid is empty".into()));
    }
    if let Some(f) = freqs.iter().find(|f| !(**f > 0.0) || !f.is_finite()) {
        return Err(Error::InvalidInput(format!("frequency {f} GHz is not positive")));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("frequency grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Uniform grid `start, start + step, ...` up to `stop` inclusive.
pub fn frequency_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::InvalidInput(format!(
            "frequency grid needs start <= stop and step > 0 (got {start}, {stop}, {step})"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count).map(|k| {
        let f = start + step * k as f64;
        // kill accumulated binary noise so grids print cleanly
        (f * 1e9).round() / 1e9
    }).collect();
    check_grid(&grid)?;
    Ok(grid)
}

/// Characteristic modes at one frequency of a prepared problem.
pub fn modes_at(problem: &MomProblem, freq_ghz: f64, n_modes: usize) -> Result<ModeSet> {
    let wrap = |e: Error| e.context(format!("at {freq_ghz} GHz"));
    let z = problem.assemble(freq_ghz).map_err(wrap)?;
    let n = z.n();
    let r = faer::Mat::from_fn(n, n, |i, j| z.z[(i, j)].re);
    let x = faer::Mat::from_fn(n, n, |i, j| z.z[(i, j)].im);
    drop(z);
    let mut modes = solve_modes(&r, &x, n_modes.min(n)).map_err(wrap)?;
    modes.freq_ghz = freq_ghz;
    modes.basis_id = problem.basis_id();
    Ok(modes)
}

/// Assemble, split and solve at every grid frequency.
pub fn sweep_modes(mesh: &TriangleMesh, basis: &RwgBasisSet, freqs: &[f64], n_modes: usize) -> Result<Vec<ModeSet>> {
    check_grid(freqs)?;
    let problem = MomProblem::new(mesh, basis)?;
    sweep_problem(&problem, freqs, n_modes)
}

/// As [`sweep_modes`] on a prepared problem. Frequencies are solved in
/// parallel; each sample is independent, so the result does not depend on
/// the worker count.
pub fn sweep_problem(problem: &MomProblem, freqs: &[f64], n_modes: usize) -> Result<Vec<ModeSet>> {
    check_grid(freqs)?;
    if n_modes == 0 || n_modes > problem.n() {
        return Err(Error::InvalidInput(format!("n_modes must be in 1..={}, got {n_modes}", problem.n())));
    }
    freqs.par_iter().map(|&f| modes_at(problem, f, n_modes)).collect()
}
