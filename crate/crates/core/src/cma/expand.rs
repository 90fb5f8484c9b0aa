use faer::{c64, Mat};

use crate::cma::modes::ModeSet;
use crate::error::{Error, Result};

/// Driven current written in the modal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalExpansion {
    /// Modal excitation `J_n^T V`.
    pub excitation: Vec<c64>,
    /// Weighting `alpha_n = V_n / (1 + j lambda_n)`.
    pub alpha: Vec<c64>,
    /// Reconstructed coefficients `sum alpha_n J_n`.
    pub current: Vec<c64>,
    /// `||J_hat - I|| / ||I||` against the reference, when one is given.
    pub residual: Option<f64>,
}

fn norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Expands the response to `v` over the modes of `modes`. When `reference`
/// holds the direct solve, the relative reconstruction error is recorded.
pub fn modal_expand(modes: &ModeSet, v: &[c64], reference: Option<&[c64]>) -> Result<ModalExpansion> {
    let n = modes.n();
    if v.len() != n {
        return Err(Error::InvalidInput(format!("excitation has length {}, basis has {n}", v.len())));
    }
    if reference.is_some_and(|r| r.len() != n) {
        return Err(Error::InvalidInput("reference current length does not match the basis".into()));
    }
    let j: &Mat<f64> = &modes.currents;
    let m = modes.len();
    let mut excitation = Vec::with_capacity(m);
    let mut alpha = Vec::with_capacity(m);
    for k in 0..m {
        let col = j.col(k);
        let mut vn = c64::new(0.0, 0.0);
        for i in 0..n {
            vn += v[i] * col[i];
        }
        excitation.push(vn);
        alpha.push(vn / c64::new(1.0, modes.eigenvalues[k]));
    }
    let mut current = vec![c64::new(0.0, 0.0); n];
    for (k, a) in alpha.iter().enumerate() {
        let col = j.col(k);
        for i in 0..n {
            current[i] += a * col[i];
        }
    }
    let residual = reference.map(|r| {
        let diff: Vec<c64> = current.iter().zip(r).map(|(a, b)| a - b).collect();
        let scale = norm(r);
        if scale == 0.0 { norm(&diff) } else { norm(&diff) / scale }
    });
    Ok(ModalExpansion { excitation, alpha, current, residual })
}
