use faer::c64;

use crate::error::{Error, Result};
use crate::geometry::{RwgBasisSet, TriangleMesh};

/// RWG expansion sampled at triangle centroids (A/m per unit coefficient).
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCurrent {
    pub vectors: Vec<[c64; 3]>,
    pub magnitude: Vec<f64>,
}

impl SurfaceCurrent {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

pub fn surface_current(mesh: &TriangleMesh, basis: &RwgBasisSet, coefficients: &[c64]) -> Result<SurfaceCurrent> {
    if coefficients.len() != basis.len() {
        return Err(Error::InvalidInput(format!(
            "coefficient vector has length {} but N = {}",
            coefficients.len(),
            basis.len()
        )));
    }
    let zero = c64::new(0.0, 0.0);
    let mut vectors = vec![[zero; 3]; mesh.num_triangles()];
    for (t, out) in vectors.iter_mut().enumerate() {
        let c = mesh.triangle_centroid(t);
        for slot in basis.local_functions(t).iter().flatten() {
            let n = slot.0;
            let f = basis.evaluate(mesh, n, t, c);
            for k in 0..3 {
                out[k] += coefficients[n] * f[k];
            }
        }
    }
    let magnitude = vectors
        .iter()
        .map(|v| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    Ok(SurfaceCurrent { vectors, magnitude })
}

/// Real coefficient vectors such as eigencurrents.
pub fn surface_current_real(mesh: &TriangleMesh, basis: &RwgBasisSet, coefficients: &[f64]) -> Result<SurfaceCurrent> {
    let c: Vec<c64> = coefficients.iter().map(|&x| c64::new(x, 0.0)).collect();
    surface_current(mesh, basis, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_rect_plate, extract_rwg};
    use crate::vec3;

    #[test]
    fn zero_and_linearity() {
        let mesh = build_rect_plate(30.0, 20.0, 10.0).unwrap();
        let basis = extract_rwg(&mesh).unwrap();
        let zero = surface_current(&mesh, &basis, &vec![c64::new(0.0, 0.0); basis.len()]).unwrap();
        assert!(zero.magnitude.iter().all(|&m| m == 0.0));
        let i: Vec<c64> = (0..basis.len()).map(|k| c64::new(k as f64 * 0.25 - 1.0, 0.5)).collect();
        let i2: Vec<c64> = i.iter().map(|x| x * 2.0).collect();
        let a = surface_current(&mesh, &basis, &i).unwrap();
        let b = surface_current(&mesh, &basis, &i2).unwrap();
        for (x, y) in a.magnitude.iter().zip(&b.magnitude) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn single_function_closed_form() {
        let mesh = build_rect_plate(20.0, 10.0, 10.0).unwrap();
        let basis = extract_rwg(&mesh).unwrap();
        for n in 0..basis.len() {
            let mut coeff = vec![c64::new(0.0, 0.0); basis.len()];
            coeff[n] = c64::new(1.0, 0.0);
            let j = surface_current(&mesh, &basis, &coeff).unwrap();
            let f = basis.functions()[n];
            let cp = mesh.triangle_centroid(f.plus);
            let expected = vec3::scale(vec3::sub(cp, mesh.vertices()[f.free_plus]), f.length / (2.0 * f.area_plus));
            for k in 0..3 {
                assert!((j.vectors[f.plus][k].re - expected[k]).abs() < 1e-14);
            }
            let cm = mesh.triangle_centroid(f.minus);
            let expected = vec3::scale(vec3::sub(mesh.vertices()[f.free_minus], cm), f.length / (2.0 * f.area_minus));
            for k in 0..3 {
                assert!((j.vectors[f.minus][k].re - expected[k]).abs() < 1e-14);
            }
            let others = (0..mesh.num_triangles()).filter(|&t| t != f.plus && t != f.minus);
            for t in others {
                assert_eq!(j.magnitude[t], 0.0);
            }
        }
    }
}
