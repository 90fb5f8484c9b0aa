use faer::linalg::solvers::Solve;
use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::geometry::RwgBasisSet;
use rayon::prelude::*;

use crate::mom::assembly::{ImpedanceMatrix, MomProblem};
use crate::mom::solve::{LuSolver, PortSpec};

/// Multiport S-parameters at one frequency, referenced to per-port `z0`.
#[derive(Debug, Clone)]
pub struct ScatteringMatrix {
    pub s: Mat<c64>,
    /// Short-circuit port admittance matrix (siemens).
    pub y: Mat<c64>,
    pub freq_ghz: f64,
    pub port_ids: Vec<u32>,
    pub z0: Vec<f64>,
}

impl ScatteringMatrix {
    pub fn ports(&self) -> usize {
        self.s.nrows()
    }

    /// Position of `port_id` in the matrix.
    pub fn index_of(&self, port_id: u32) -> Option<usize> {
        self.port_ids.iter().position(|&p| p == port_id)
    }

    /// `S_ij` addressed by port ids.
    pub fn get(&self, i: u32, j: u32) -> Option<c64> {
        Some(self.s[(self.index_of(i)?, self.index_of(j)?)])
    }

    /// Largest singular value of `S`.
    pub fn max_singular_value(&self) -> f64 {
        self.s
            .singular_values()
            .ok()
            .and_then(|v| v.first().copied())
            .unwrap_or(f64::NAN)
    }

    /// `max |S - S^T|`.
    pub fn reciprocity_error(&self) -> f64 {
        let p = self.ports();
        let mut e: f64 = 0.0;
        for i in 0..p {
            for j in 0..p {
                e = e.max((self.s[(i, j)] - self.s[(j, i)]).norm());
            }
        }
        e
    }

    /// Open-circuit port impedance matrix `Y^-1`.
    pub fn port_impedance(&self) -> Result<Mat<c64>> {
        let lu = LuSolver::new(&ImpedanceMatrix::from_matrix(self.y.clone(), self.freq_ghz)?)
            .map_err(|e| e.context("port admittance is singular"))?;
        let p = self.ports();
        let mut zp = Mat::<c64>::zeros(p, p);
        for j in 0..p {
            let mut e = vec![c64::new(0.0, 0.0); p];
            e[j] = c64::new(1.0, 0.0);
            let col = lu.solve(&e)?;
            for i in 0..p {
                zp[(i, j)] = col.current[i];
            }
        }
        Ok(zp)
    }
}

fn invert_small(a: &Mat<c64>) -> Mat<c64> {
    let mut inv = Mat::<c64>::identity(a.nrows(), a.ncols());
    a.partial_piv_lu().solve_in_place(inv.as_mut());
    inv
}

fn check_z0(z0: &[f64]) -> Result<()> {
    if let Some(bad) = z0.iter().find(|z| !(**z > 0.0) || !z.is_finite()) {
        return Err(Error::InvalidPort(format!("reference impedance must be positive, got {bad}")));
    }
    Ok(())
}

/// `S = (I - y)(I + y)^-1` with the normalised admittance `y = G^1/2 Y G^1/2`.
pub fn s_from_admittance(y: &Mat<c64>, z0: &[f64]) -> Result<Mat<c64>> {
    check_z0(z0)?;
    let p = y.nrows();
    let g: Vec<f64> = z0.iter().map(|z| z.sqrt()).collect();
    let yn = Mat::from_fn(p, p, |i, j| y[(i, j)] * (g[i] * g[j]));
    let eye = Mat::<c64>::identity(p, p);
    let minus = &eye - &yn;
    let plus = &eye + &yn;
    Ok(minus * invert_small(&plus))
}

/// `S = G^-1/2 (Zp - G)(Zp + G)^-1 G^1/2` with `G = diag(z0)`.
pub fn s_from_port_impedance(zp: &Mat<c64>, z0: &[f64]) -> Result<Mat<c64>> {
    check_z0(z0)?;
    let p = zp.nrows();
    let g = Mat::<c64>::from_fn(p, p, |i, j| c64::new(if i == j { z0[i] } else { 0.0 }, 0.0));
    let a = zp - &g;
    let b = zp + &g;
    let core = a * invert_small(&b);
    Ok(Mat::from_fn(p, p, |i, j| core[(i, j)] * (z0[j].sqrt() / z0[i].sqrt())))
}

/// One driven solve per port with 1 V across its gap and all other gaps
/// shorted. The port current is the feed coefficient times the edge length.
pub fn scattering_matrix(zm: &ImpedanceMatrix, basis: &RwgBasisSet, ports: &[PortSpec]) -> Result<ScatteringMatrix> {
    let lengths: Vec<f64> = basis.functions().iter().map(|f| f.length).collect();
    scattering_matrix_with_lengths(zm, &lengths, ports)
}

/// As [`scattering_matrix`], with the feed edge lengths (mm) of every basis
/// function given directly.
pub fn scattering_matrix_with_lengths(
    zm: &ImpedanceMatrix,
    basis_lengths_mm: &[f64],
    ports: &[PortSpec],
) -> Result<ScatteringMatrix> {
    if ports.is_empty() {
        return Err(Error::InvalidPort("scattering matrix needs at least one port".into()));
    }
    let n = zm.n();
    if basis_lengths_mm.len() != n {
        return Err(Error::InvalidInput(format!(
            "basis has {} functions but Z is {n}x{n}",
            basis_lengths_mm.len()
        )));
    }
    for (a, pa) in ports.iter().enumerate() {
        if pa.basis_index >= n {
            return Err(Error::InvalidPort(format!("port {} basis index {} out of range", pa.port_id, pa.basis_index)));
        }
        if ports[..a].iter().any(|pb| pb.basis_index == pa.basis_index) {
            return Err(Error::InvalidPort(format!("port {} shares its feed edge", pa.port_id)));
        }
        if ports[..a].iter().any(|pb| pb.port_id == pa.port_id) {
            return Err(Error::InvalidPort(format!("port id {} listed twice", pa.port_id)));
        }
    }
    let z0: Vec<f64> = ports.iter().map(|p| p.z0).collect();
    check_z0(&z0)?;
    let solver = LuSolver::new(zm)?;
    let p = ports.len();
    let lengths: Vec<f64> = ports.iter().map(|pt| basis_lengths_mm[pt.basis_index] * 1e-3).collect();
    let mut y = Mat::<c64>::zeros(p, p);
    for (j, pj) in ports.iter().enumerate() {
        let mut v = vec![c64::new(0.0, 0.0); n];
        v[pj.basis_index] = c64::new(lengths[j], 0.0);
        let sol = solver.solve(&v)?;
        for (i, pi) in ports.iter().enumerate() {
            y[(i, j)] = sol.current[pi.basis_index] * lengths[i];
        }
    }
    let s = s_from_admittance(&y, &z0)?;
    Ok(ScatteringMatrix {
        s,
        y,
        freq_ghz: zm.freq_ghz,
        port_ids: ports.iter().map(|pt| pt.port_id).collect(),
        z0,
    })
}

/// Scattering matrices over a frequency grid, solved in parallel.
pub fn sweep_sparams(
    problem: &MomProblem,
    basis: &RwgBasisSet,
    ports: &[PortSpec],
    freqs: &[f64],
) -> Result<Vec<ScatteringMatrix>> {
    if ports.is_empty() {
        return Err(Error::InvalidPort("driven sweep requires ports".into()));
    }
    freqs
        .par_iter()
        .map(|&f| {
            problem
                .assemble(f)
                .and_then(|zm| scattering_matrix(&zm, basis, ports))
                .map_err(|e| e.context(format!("at {f} GHz")))
        })
        .collect()
}
