use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Significance threshold `1/sqrt(2)` that bounds a radiating band.
pub const SIGNIFICANCE_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Default number of modes per frequency.
pub const DEFAULT_MODES: usize = 6;

/// `|1 / (1 + j lambda)|`.
pub fn modal_significance(lambda: f64) -> f64 {
    1.0 / 1f64.hypot(lambda)
}

/// `180 - atan(lambda)` in degrees.
pub fn characteristic_angle(lambda: f64) -> f64 {
    180.0 - lambda.atan().to_degrees()
}

/// How the eigenproblem was regularised and how well the returned modes
/// satisfy it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Diagonal shift added to `R` before the Cholesky factorisation.
    pub epsilon: f64,
    /// `max |J^T R J - I|` against the unshifted `R`.
    pub orthonormality_error: f64,
    /// `max |J^T X J - diag(lambda)| / max |lambda|`.
    pub diagonalization_error: f64,
    /// Largest `|Im mu| / max |mu|` over the eigenvalues `mu` of the
    /// projected pencil `(J^T R J)^-1 J^T X J`.
    pub imaginary_residue: f64,
    /// Largest relative residual `||X J - lambda R J|| / (||X J|| + |lambda| ||R J||)`.
    pub max_residual: f64,
}

/// Characteristic modes at one frequency, most significant first.
#[derive(Debug, Clone)]
pub struct ModeSet {
    pub freq_ghz: f64,
    pub eigenvalues: Vec<f64>,
    /// Eigencurrents as columns (N x M), normalised to `J^T R J = 1`.
    pub currents: Mat<f64>,
    /// `R J`, kept for correlations with other frequencies.
    pub r_currents: Mat<f64>,
    pub significance: Vec<f64>,
    pub residuals: Vec<f64>,
    pub normalization: Normalization,
    /// Fingerprint of the basis (0 for synthetic problems).
    pub basis_id: u64,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn n(&self) -> usize {
        self.currents.nrows()
    }

    pub fn current(&self, m: usize) -> Vec<f64> {
        self.currents.col(m).iter().copied().collect()
    }

    /// Number of modes with `MS >= threshold`.
    pub fn significant_count(&self, threshold: f64) -> usize {
        self.significance.iter().filter(|&&s| s >= threshold).count()
    }
}

fn max_abs_asymmetry(a: &Mat<f64>) -> f64 {
    let n = a.nrows();
    let mut e: f64 = 0.0;
    for j in 0..n {
        for i in j + 1..n {
            e = e.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    e
}

fn symmetrized(a: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

fn col_norm(a: &Mat<f64>, j: usize) -> f64 {
    a.col(j).iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `X J = lambda R J` for the `n_modes` eigenpairs of smallest
/// `|lambda|`.
///
/// `R + eps I` with `eps = 1e-10 tr(R) / N` is Cholesky factored, the
/// symmetric problem `L^-1 X L^-T y = lambda y` is solved densely and the
/// selected vectors are mapped back with `J = L^-T y`. The reduced matrix
/// grows like `|X| / eps`, so its small eigenvectors carry rounding noise
/// along non-radiating directions; a block of them seeds inverse iteration
/// with `X^-1 R` and Rayleigh-Ritz projections on the unshifted pencil until
/// the generalized residual settles. Requests for more modes than have a
/// resolvable R-norm, such as the full spectrum, fall back to a deflated
/// solve of the regularised pencil; the normalisation record then measures
/// how far the non-radiating modes sit from the unshifted pencil. Each
/// eigencurrent is signed so its largest entry is positive.
pub fn solve_modes(r: &Mat<f64>, x: &Mat<f64>, n_modes: usize) -> Result<ModeSet> {
    let n = r.nrows();
    if r.ncols() != n || x.nrows() != n || x.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "R is {}x{} and X is {}x{}; both must be square of the same size",
            r.nrows(),
            r.ncols(),
            x.nrows(),
            x.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("empty eigenproblem".into()));
    }
    if n_modes == 0 || n_modes > n {
        return Err(Error::InvalidInput(format!("n_modes must be in 1..={n}, got {n_modes}")));
    }
    let finite = |a: &Mat<f64>| a.col_iter().all(|c| c.iter().all(|v| v.is_finite()));
    if !finite(r) || !finite(x) {
        return Err(Error::InvalidInput("R or X has non-finite entries".into()));
    }
    let scale_r = r.col_iter().flat_map(|c| c.iter().map(|v| v.abs())).fold(0.0, f64::max);
    let scale_x = x.col_iter().flat_map(|c| c.iter().map(|v| v.abs())).fold(0.0, f64::max);
    if max_abs_asymmetry(r) > 1e-10 * scale_r.max(f64::MIN_POSITIVE)
        || max_abs_asymmetry(x) > 1e-10 * scale_x.max(f64::MIN_POSITIVE)
    {
        return Err(Error::InvalidInput("R and X must be symmetric".into()));
    }
    let r = symmetrized(r);
    let x = symmetrized(x);

    let trace: f64 = (0..n).map(|i| r[(i, i)]).sum();
    let epsilon = 1e-10 * trace / n as f64;
    if !(epsilon > 0.0) {
        return Err(Error::IndefiniteR(format!("trace(R) = {trace:.3e} is not positive")));
    }
    let mut shifted = r.clone();
    for i in 0..n {
        shifted[(i, i)] += epsilon;
    }
    let llt = shifted
        .llt(Side::Lower)
        .map_err(|_| Error::IndefiniteR(format!("Cholesky of R + {epsilon:.3e} I failed")))?;
    let l = llt.L();

    // C = L^-1 X L^-T, using the symmetry of X for the second solve.
    let mut w = x.clone();
    l.solve_lower_triangular_in_place(w.as_mut());
    let mut c = w.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let c = symmetrized(&c);
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::SolverFailure { reason: format!("symmetric eigensolver: {e:?}"), condition: f64::NAN })?;
    let s = evd.S().column_vector();
    let block = n.min(2 * n_modes + 8);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].abs().total_cmp(&s[b].abs()).then(s[a].total_cmp(&s[b])).then(a.cmp(&b)));
    order.truncate(block);
    let u = evd.U();
    let mut start = Mat::from_fn(n, block, |i, k| u[(i, order[k])]);
    l.transpose().solve_upper_triangular_in_place(start.as_mut());

    let (mut j, mut lambdas) = match rayleigh_ritz(&r, &x, &start) {
        Some(pair) => pair,
        None => (start, order.iter().map(|&k| s[k]).collect()),
    };
    refine(&r, &x, n_modes, &mut j, &mut lambdas);
    if lambdas.len() < n_modes {
        (j, lambdas) = deflated_modes(&r, &x, epsilon)?;
    }
    j = j.subcols(0, n_modes).to_owned();
    lambdas.truncate(n_modes);

    let m = n_modes;
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&p, &q| lambdas[p].abs().total_cmp(&lambdas[q].abs()).then(lambdas[p].total_cmp(&lambdas[q])).then(p.cmp(&q)));
    j = Mat::from_fn(n, m, |i, k| j[(i, idx[k])]);
    lambdas = idx.iter().map(|&k| lambdas[k]).collect();
    for k in 0..m {
        let val = j.col(k).iter().fold(0.0f64, |acc, &v| if v.abs() > acc.abs() { v } else { acc });
        if val < 0.0 {
            for i in 0..n {
                j[(i, k)] = -j[(i, k)];
            }
        }
    }

    let rj = &r * &j;
    let xj = &x * &j;
    let gram = j.transpose() * &rj;
    let proj_x = j.transpose() * &xj;
    let lam_max = lambdas.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let mut orthonormality_error: f64 = 0.0;
    let mut diagonalization_error: f64 = 0.0;
    for p in 0..m {
        for q in 0..m {
            let delta = if p == q { 1.0 } else { 0.0 };
            orthonormality_error = orthonormality_error.max((gram[(p, q)] - delta).abs());
            let target = if p == q { lambdas[p] } else { 0.0 };
            diagonalization_error = diagonalization_error.max((proj_x[(p, q)] - target).abs());
        }
    }
    if lam_max > 0.0 {
        diagonalization_error /= lam_max;
    }
    let residuals: Vec<f64> = (0..m)
        .map(|k| {
            let mut num = 0.0;
            for i in 0..n {
                let d = xj[(i, k)] - lambdas[k] * rj[(i, k)];
                num += d * d;
            }
            let den = col_norm(&xj, k) + lambdas[k].abs() * col_norm(&rj, k);
            if den == 0.0 {
                0.0
            } else {
                num.sqrt() / den
            }
        })
        .collect();
    let imaginary_residue = projected_imaginary_residue(&gram, &proj_x);
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(ModeSet {
        freq_ghz: 0.0,
        significance: lambdas.iter().map(|&l| modal_significance(l)).collect(),
        eigenvalues: lambdas,
        currents: j,
        r_currents: rj,
        residuals,
        normalization: Normalization {
            epsilon,
            orthonormality_error,
            diagonalization_error,
            imaginary_residue,
            max_residual,
        },
        basis_id: 0,
    })
}

/// Relative R-norm below which a Ritz direction is treated as non-radiating.
const RITZ_CUTOFF: f64 = 1e-13;
/// Largest generalized residual accepted without further refinement.
const REFINE_TOL: f64 = 1e-12;
const MAX_REFINE: usize = 60;

fn generalized_residual(r: &Mat<f64>, x: &Mat<f64>, j: &Mat<f64>, lambdas: &[f64], m: usize) -> f64 {
    let js = j.subcols(0, m);
    let rj = r * js;
    let xj = x * js;
    (0..m)
        .map(|k| {
            let num = (0..j.nrows()).map(|i| (xj[(i, k)] - lambdas[k] * rj[(i, k)]).powi(2)).sum::<f64>().sqrt();
            let den = col_norm(&xj, k) + lambdas[k].abs() * col_norm(&rj, k);
            if den == 0.0 { 0.0 } else { num / den }
        })
        .fold(0.0, f64::max)
}

/// Ritz pairs of the pencil on `span(s)`, sorted by `|lambda|`. Directions
/// with negligible R-norm inside the subspace are dropped.
fn rayleigh_ritz(r: &Mat<f64>, x: &Mat<f64>, s: &Mat<f64>) -> Option<(Mat<f64>, Vec<f64>)> {
    let mut s = s.clone();
    for k in 0..s.ncols() {
        let nk = col_norm(&s, k);
        if !(nk > 0.0 && nk.is_finite()) {
            return None;
        }
        for i in 0..s.nrows() {
            s[(i, k)] /= nk;
        }
    }
    let q = s.qr().compute_thin_Q();
    let a = symmetrized(&(q.transpose() * r * &q));
    let ea = a.self_adjoint_eigen(Side::Lower).ok()?;
    let d = ea.S().column_vector();
    let d_max = d.iter().copied().fold(0.0, f64::max);
    if !(d_max > 0.0) {
        return None;
    }
    let keep: Vec<usize> = (0..d.nrows()).filter(|&k| d[k] > RITZ_CUTOFF * d_max).collect();
    let va = ea.U();
    let w = q * Mat::from_fn(a.nrows(), keep.len(), |i, k| va[(i, keep[k])] / d[keep[k]].sqrt());
    let b = symmetrized(&(w.transpose() * x * &w));
    let eb = b.self_adjoint_eigen(Side::Lower).ok()?;
    let theta = eb.S().column_vector();
    let mut idx: Vec<usize> = (0..theta.nrows()).collect();
    idx.sort_by(|&p, &q| theta[p].abs().total_cmp(&theta[q].abs()).then(theta[p].total_cmp(&theta[q])).then(p.cmp(&q)));
    let y = eb.U();
    let y = Mat::from_fn(y.nrows(), idx.len(), |i, k| y[(i, idx[k])]);
    Some((w * y, idx.iter().map(|&k| theta[k]).collect()))
}

/// Block inverse iteration with `X^-1 R`, whose dominant eigenvalues
/// `1 / lambda` belong to the most significant modes, followed each step by
/// a Rayleigh-Ritz projection.
fn refine(r: &Mat<f64>, x: &Mat<f64>, m: usize, j: &mut Mat<f64>, lambdas: &mut Vec<f64>) {
    use faer::linalg::solvers::Solve;
    if lambdas.len() < m {
        return;
    }
    let lu = x.partial_piv_lu();
    let mut res = generalized_residual(r, x, j, lambdas, m);
    let mut best = res;
    let mut since_best = 0;
    for _ in 0..MAX_REFINE {
        if res < REFINE_TOL || since_best >= 5 {
            break;
        }
        let mut next = r * &*j;
        lu.solve_in_place(next.as_mut());
        if !next.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
            break;
        }
        let Some((jn, ln)) = rayleigh_ritz(r, x, &next) else { break };
        if ln.len() < m {
            break;
        }
        *j = jn;
        *lambdas = ln;
        res = generalized_residual(r, x, j, lambdas, m);
        if res < 0.9 * best {
            best = res;
            since_best = 0;
        } else {
            since_best += 1;
        }
    }
}

/// Every mode of the pencil `(X, R + eps I)`, sorted by `|lambda|`. The
/// eigenvectors of `R` with eigenvalue at or below `eps` are deflated: the
/// remaining modes come from the Schur complement of `X` on the resolved
/// block, and the deflated directions are the eigenvectors of `X` restricted
/// to the deflated block. Each mode is normalised to `J^T (R + eps I) J = 1`.
fn deflated_modes(r: &Mat<f64>, x: &Mat<f64>, epsilon: f64) -> Result<(Mat<f64>, Vec<f64>)> {
    use faer::linalg::solvers::Solve;
    let fail = |what: &str| Error::SolverFailure { reason: format!("deflated solve: {what}"), condition: f64::NAN };
    let n = r.nrows();
    let er = r.self_adjoint_eigen(Side::Lower).map_err(|_| fail("eigensolver on R"))?;
    let d = er.S().column_vector();
    let q = er.U();
    let kept: Vec<usize> = (0..n).filter(|&k| d[k] > epsilon).collect();
    let dropped: Vec<usize> = (0..n).filter(|&k| d[k] <= epsilon).collect();
    let (n1, n2) = (kept.len(), dropped.len());
    let q1 = Mat::from_fn(n, n1, |i, k| q[(i, kept[k])]);
    let q2 = Mat::from_fn(n, n2, |i, k| q[(i, dropped[k])]);
    let xq1 = x * &q1;
    let xq2 = x * &q2;
    let a11 = symmetrized(&(q1.transpose() * &xq1));
    let a12 = q1.transpose() * &xq2;
    let a22 = symmetrized(&(q2.transpose() * &xq2));
    // G = A22^-1 A21 eliminates the deflated block from the resolved modes.
    let g = if n2 > 0 { a22.partial_piv_lu().solve(a12.transpose()) } else { Mat::zeros(0, n1) };
    if !g.col_iter().all(|c| c.iter().all(|v| v.is_finite())) {
        return Err(fail("X is singular on the deflated block"));
    }
    let schur = symmetrized(&(&a11 - &a12 * &g));
    let scaled = Mat::from_fn(n1, n1, |i, k| schur[(i, k)] / (d[kept[i]] * d[kept[k]]).sqrt());
    let e1 = scaled.self_adjoint_eigen(Side::Lower).map_err(|_| fail("eigensolver on the Schur complement"))?;
    let y = Mat::from_fn(n1, n1, |i, k| e1.U()[(i, k)] / d[kept[i]].sqrt());
    let resolved = &q1 * &y - &q2 * (&g * &y);
    let e2 = a22.self_adjoint_eigen(Side::Lower).map_err(|_| fail("eigensolver on the deflated block"))?;
    let null = &q2 * e2.U();
    let mut w = Mat::from_fn(n, n, |i, k| if k < n1 { resolved[(i, k)] } else { null[(i, k - n1)] });
    let rw = r * &w;
    let xw = x * &w;
    let mut lambdas = Vec::with_capacity(n);
    for k in 0..n {
        let norm2 = col_norm(&w, k).powi(2);
        let dr = w.col(k).iter().zip(rw.col(k).iter()).map(|(a, b)| a * b).sum::<f64>() + epsilon * norm2;
        let dx = w.col(k).iter().zip(xw.col(k).iter()).map(|(a, b)| a * b).sum::<f64>();
        if !(dr > 0.0) {
            return Err(fail("mode without positive R-norm"));
        }
        let s = dr.sqrt();
        for i in 0..n {
            w[(i, k)] /= s;
        }
        lambdas.push(dx / dr);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&p, &q| lambdas[p].abs().total_cmp(&lambdas[q].abs()).then(lambdas[p].total_cmp(&lambdas[q])).then(p.cmp(&q)));
    let j = Mat::from_fn(n, n, |i, k| w[(i, idx[k])]);
    Ok((j, idx.iter().map(|&k| lambdas[k]).collect()))
}

/// Eigenvalues of `G^-1 P` for the small projected matrices, reporting the
/// largest imaginary part relative to the largest modulus.
fn projected_imaginary_residue(gram: &Mat<f64>, proj: &Mat<f64>) -> f64 {
    let m = gram.nrows();
    let mut sol = proj.clone();
    let lu = gram.partial_piv_lu();
    use faer::linalg::solvers::Solve;
    lu.solve_in_place(sol.as_mut());
    match sol.eigenvalues() {
        Ok(ev) => {
            let max = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let im = ev.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            if m == 0 || max == 0.0 {
                0.0
            } else {
                im / max
            }
        }
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Mat<f64> {
        Mat::from_fn(v.len(), v.len(), |i, j| if i == j { v[i] } else { 0.0 })
    }

    #[test]
    fn significance_values() {
        assert_eq!(modal_significance(0.0), 1.0);
        assert!((modal_significance(1.0) - 0.70710678).abs() < 1e-8);
        assert!((modal_significance(-1.0) - 0.70710678).abs() < 1e-8);
        assert!((modal_significance(100.0) - 0.0099995).abs() < 1e-7);
    }

    #[test]
    fn angle_values() {
        assert_eq!(characteristic_angle(0.0), 180.0);
        assert!((characteristic_angle(1.0) - 135.0).abs() < 1e-12);
        assert!((characteristic_angle(1e12) - 90.0).abs() < 1e-9);
        assert!((characteristic_angle(-1e12) - 270.0).abs() < 1e-9);
    }

    #[test]
    fn diagonal_pencil() {
        let modes = solve_modes(&diag(&[1.0, 1.0]), &diag(&[2.0, -3.0]), 2).unwrap();
        assert!((modes.eigenvalues[0] - 2.0).abs() < 1e-9);
        assert!((modes.eigenvalues[1] + 3.0).abs() < 1e-9);
        assert!((modes.currents[(0, 0)] - 1.0).abs() < 1e-9 && modes.currents[(1, 0)].abs() < 1e-9);
        assert!((modes.currents[(1, 1)] - 1.0).abs() < 1e-9 && modes.currents[(0, 1)].abs() < 1e-9);
    }

    #[test]
    fn full_spectrum_of_a_rank_deficient_resistance() {
        use faer::c64;
        use faer::linalg::solvers::Solve;
        let n = 6;
        let u = Mat::from_fn(n, 2, |i, k| ((i + 1) * (k + 2)) as f64 / 10.0 + if i == k { 1.0 } else { 0.0 });
        let r = &u * u.transpose();
        let x = Mat::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 / (1.0 + (i + j) as f64) });
        let modes = solve_modes(&r, &x, n).unwrap();
        assert_eq!(modes.len(), n);
        assert!(modes.eigenvalues[..2].iter().all(|l| l.abs() < 1e3));
        assert!(modes.eigenvalues[2..].iter().all(|l| l.abs() > 1e6));
        let z = Mat::from_fn(n, n, |i, j| c64::new(r[(i, j)], x[(i, j)]));
        let v: Vec<c64> = (0..n).map(|i| c64::new(1.0 / (1.0 + i as f64), 0.0)).collect();
        let direct = z.partial_piv_lu().solve(Mat::from_fn(n, 1, |i, _| v[i]));
        let direct: Vec<c64> = (0..n).map(|i| direct[(i, 0)]).collect();
        let e = crate::cma::modal_expand(&modes, &v, Some(&direct)).unwrap();
        assert!(e.residual.unwrap() < 1e-8, "{:?}", e.residual);
    }

    #[test]
    fn zero_reactance_is_resonant() {
        let r = Mat::from_fn(3, 3, |i, j| if i == j { 2.0 } else { 0.5 });
        let modes = solve_modes(&r, &Mat::zeros(3, 3), 3).unwrap();
        assert!(modes.eigenvalues.iter().all(|l| l.abs() < 1e-12));
        assert!(modes.significance.iter().all(|&s| s == 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let r = diag(&[1.0, 1.0]);
        assert!(matches!(solve_modes(&r, &r, 3), Err(Error::InvalidInput(_))));
        assert!(matches!(solve_modes(&r, &r, 0), Err(Error::InvalidInput(_))));
        let bad = diag(&[1.0, -1.0]);
        assert!(matches!(solve_modes(&bad, &r, 1), Err(Error::IndefiniteR(_))));
        assert!(matches!(solve_modes(&Mat::zeros(2, 2), &r, 1), Err(Error::IndefiniteR(_))));
    }
}
