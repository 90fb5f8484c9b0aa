use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, Side};

use crate::error::{Error, Result};
use crate::geometry::RwgBasisSet;
use crate::mom::assembly::ImpedanceMatrix;
use crate::mom::DEFAULT_Z0;

/// Condition estimates above this make a solve fail.
pub const MAX_CONDITION: f64 = 1e14;

/// Delta-gap port on one basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortSpec {
    pub port_id: u32,
    pub basis_index: usize,
    /// Reference impedance (ohms).
    pub z0: f64,
}

impl PortSpec {
    pub fn new(port_id: u32, basis_index: usize) -> Self {
        PortSpec { port_id, basis_index, z0: DEFAULT_Z0 }
    }

    /// All ports registered in `basis`, with the default reference impedance.
    pub fn from_basis(basis: &RwgBasisSet) -> Vec<PortSpec> {
        basis.ports().iter().map(|&(id, n)| PortSpec::new(id, n)).collect()
    }
}

/// Delta-gap excitation: `volts * edge length` (V m) on the feed function.
/// Positive voltage drives current from the plus into the minus triangle.
pub fn excitation_vector(basis: &RwgBasisSet, port: &PortSpec, volts: c64) -> Result<Vec<c64>> {
    let f = basis.get(port.basis_index).ok_or_else(|| {
        Error::InvalidPort(format!(
            "port {} refers to basis index {} but N = {}",
            port.port_id,
            port.basis_index,
            basis.len()
        ))
    })?;
    let mut v = vec![c64::new(0.0, 0.0); basis.len()];
    v[port.basis_index] = volts * (f.length * 1e-3);
    Ok(v)
}

/// Real and imaginary parts of `Z` together with the definiteness check on `R`.
#[derive(Debug, Clone)]
pub struct ReactanceSplit {
    pub r: Mat<f64>,
    pub x: Mat<f64>,
    pub min_eigenvalue: f64,
    /// `1e-8 * trace(R) / N`.
    pub tolerance: f64,
    /// Set when `R` has an eigenvalue below `-tolerance`.
    pub indefinite: bool,
}

pub fn split_reactance(zm: &ImpedanceMatrix) -> ReactanceSplit {
    let n = zm.n();
    let r = Mat::from_fn(n, n, |i, j| zm.z[(i, j)].re);
    let x = Mat::from_fn(n, n, |i, j| zm.z[(i, j)].im);
    let trace: f64 = (0..n).map(|i| r[(i, i)]).sum();
    let tolerance = 1e-8 * trace.abs() / n as f64;
    let min_eigenvalue = r
        .self_adjoint_eigenvalues(Side::Lower)
        .ok()
        .and_then(|ev| ev.first().copied())
        .unwrap_or(f64::NAN);
    let indefinite = !(min_eigenvalue >= -tolerance);
    ReactanceSplit { r, x, min_eigenvalue, tolerance, indefinite }
}

/// Result of one driven solve.
#[derive(Debug, Clone)]
pub struct DrivenSolution {
    pub current: Vec<c64>,
    /// `||Z I - V|| / ||V||` (zero when `V = 0`).
    pub residual: f64,
}

/// LU factorisation of `Z` with a 1-norm condition estimate.
pub struct LuSolver {
    z: Mat<c64>,
    lu: PartialPivLu<c64>,
    condition: f64,
}

fn norm1(a: &Mat<c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

impl LuSolver {
    pub fn new(zm: &ImpedanceMatrix) -> Result<Self> {
        let z = zm.z.clone();
        let n = z.nrows();
        if z.col_iter().flat_map(|c| c.iter()).any(|x| !x.re.is_finite() || !x.im.is_finite()) {
            return Err(Error::SolverFailure {
                reason: "matrix has non-finite entries".into(),
                condition: f64::INFINITY,
            });
        }
        let lu = z.partial_piv_lu();
        let mut solver = LuSolver { z, lu, condition: f64::INFINITY };
        let inv_norm = solver.inverse_norm1_estimate();
        let condition = norm1(&solver.z) * inv_norm;
        solver.condition = if condition.is_finite() { condition } else { f64::INFINITY };
        if !(solver.condition <= MAX_CONDITION) {
            return Err(Error::SolverFailure {
                reason: format!("impedance matrix ({n}x{n}) is numerically singular"),
                condition: solver.condition,
            });
        }
        Ok(solver)
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Hager's estimator of `||Z^-1||_1`, completed with Higham's
    /// alternating-sign test vector.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.n();
        let mut x = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut y = x.clone();
            self.lu.solve_in_place(y.as_mut());
            let y1: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
            if !y1.is_finite() {
                return f64::INFINITY;
            }
            estimate = f64::max(estimate, y1);
            let mut xi = Mat::<c64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a == 0.0 {
                    c64::new(1.0, 0.0)
                } else {
                    v / a
                }
            });
            self.lu.solve_adjoint_in_place(xi.as_mut());
            let (j, zmax) = (0..n)
                .map(|i| (i, xi[(i, 0)].norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let ztx: f64 = (0..n).map(|i| (xi[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = Mat::from_fn(n, 1, |i, _| c64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
        }
        let mut alt = Mat::<c64>::from_fn(n, 1, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            c64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
        });
        self.lu.solve_in_place(alt.as_mut());
        let alt1: f64 = (0..n).map(|i| alt[(i, 0)].norm()).sum();
        f64::max(estimate, 2.0 * alt1 / (3.0 * n as f64))
    }

    fn residual_vec(&self, current: &[c64], v: &[c64]) -> Vec<c64> {
        let n = self.n();
        let mut r = v.to_vec();
        for j in 0..n {
            let cj = current[j];
            if cj == c64::new(0.0, 0.0) {
                continue;
            }
            for i in 0..n {
                r[i] -= self.z[(i, j)] * cj;
            }
        }
        r
    }

    /// Solves `Z I = V`, with one step of iterative refinement if the first
    /// residual is above `1e-12`.
    pub fn solve(&self, v: &[c64]) -> Result<DrivenSolution> {
        let n = self.n();
        if v.len() != n {
            return Err(Error::InvalidInput(format!("excitation has length {} but N = {n}", v.len())));
        }
        let v_norm = vec_norm(v);
        if v_norm == 0.0 {
            return Ok(DrivenSolution { current: vec![c64::new(0.0, 0.0); n], residual: 0.0 });
        }
        let mut rhs = Mat::<c64>::from_fn(n, 1, |i, _| v[i]);
        self.lu.solve_in_place(rhs.as_mut());
        let mut current: Vec<c64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        let mut res = self.residual_vec(&current, v);
        let mut residual = vec_norm(&res) / v_norm;
        if residual > 1e-12 {
            let mut d = Mat::<c64>::from_fn(n, 1, |i, _| res[i]);
            self.lu.solve_in_place(d.as_mut());
            for i in 0..n {
                current[i] += d[(i, 0)];
            }
            res = self.residual_vec(&current, v);
            residual = vec_norm(&res) / v_norm;
        }
        if !(residual < 1e-10) {
            return Err(Error::SolverFailure {
                reason: format!("residual {residual:.3e} after refinement"),
                condition: self.condition,
            });
        }
        Ok(DrivenSolution { current, residual })
    }
}

/// Factorises `Z` and solves `Z I = V`.
pub fn driven_solve(zm: &ImpedanceMatrix, v: &[c64]) -> Result<DrivenSolution> {
    if v.len() != zm.n() {
        return Err(Error::InvalidInput(format!("excitation has length {} but N = {}", v.len(), zm.n())));
    }
    LuSolver::new(zm)?.solve(v)
}
