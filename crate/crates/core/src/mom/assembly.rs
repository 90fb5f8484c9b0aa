use faer::{c64, Mat};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{RwgBasisSet, TriangleMesh};
use crate::mom::potential::static_integrals;
use crate::mom::quadrature::TriangleRule;
use crate::mom::{wavenumber, ETA0};
use crate::vec3::{self, Vec3};

/// Dense EFIE operator `Z = R + jX` at one frequency.
#[derive(Debug, Clone)]
pub struct ImpedanceMatrix {
    pub z: Mat<c64>,
    pub freq_ghz: f64,
    /// Fingerprint of the basis the matrix was assembled on.
    pub basis_id: u64,
}

impl ImpedanceMatrix {
    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    /// Wraps an arbitrary square matrix, mostly for tests and synthetic ports.
    pub fn from_matrix(z: Mat<c64>, freq_ghz: f64) -> Result<Self> {
        if z.nrows() != z.ncols() || z.nrows() == 0 {
            return Err(Error::InvalidInput(format!(
                "impedance matrix must be square and non-empty, got {}x{}",
                z.nrows(),
                z.ncols()
            )));
        }
        Ok(ImpedanceMatrix { z, freq_ghz, basis_id: 0 })
    }

    /// `max |Z - Z^T| / max |Z|`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let mut diff: f64 = 0.0;
        let mut max: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                diff = diff.max((self.z[(i, j)] - self.z[(j, i)]).norm());
                max = max.max(self.z[(i, j)].norm());
            }
        }
        if max == 0.0 {
            0.0
        } else {
            diff / max
        }
    }

    /// `Z <- (Z + Z^T) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n();
        for j in 0..n {
            for i in j + 1..n {
                let avg = (self.z[(i, j)] + self.z[(j, i)]) * 0.5;
                self.z[(i, j)] = avg;
                self.z[(j, i)] = avg;
            }
        }
    }
}

/// Quadrature used for every triangle in the Galerkin double integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureOrder {
    /// Seven points per triangle.
    #[default]
    Standard,
    /// Seven points on each of four subtriangles.
    Refined,
}

impl QuadratureOrder {
    fn levels(self) -> u32 {
        match self {
            QuadratureOrder::Standard => 0,
            QuadratureOrder::Refined => 1,
        }
    }

    /// Rule for the smooth kernel on every triangle.
    fn rule(self) -> TriangleRule {
        TriangleRule::seven_point().subdivided(self.levels())
    }

    /// Observation rule for the closed-form static part of near pairs, whose
    /// integrand has log-type edge singularities in its derivatives.
    fn static_rule(self) -> TriangleRule {
        TriangleRule::seven_point().subdivided(self.levels() + STATIC_LEVELS)
    }
}

/// Extra subdivision levels of the static observation rule.
const STATIC_LEVELS: u32 = 2;

/// Static moments of `1/R` over a near triangle pair, normalised by both areas:
/// the means of `1`, `r`, `r'` and `r . r'` times `1/R`.
#[derive(Debug, Clone, Copy)]
struct StaticMoments {
    m0: f64,
    mr: Vec3,
    ms: Vec3,
    mrs: f64,
}

#[derive(Debug, Clone)]
struct Tri {
    vertices: [Vec3; 3],
    points: Vec<Vec3>,
    /// `(basis index, sign * edge length)` per local free vertex, in meters.
    local: [Option<(usize, f64)>; 3],
}

/// Frequency-independent data for repeated assembly on one mesh.
#[derive(Debug, Clone)]
pub struct MomProblem {
    n: usize,
    basis_id: u64,
    weights: Vec<f64>,
    tris: Vec<Tri>,
    /// For each observation triangle `p`, the near source triangles `q >= p`
    /// in ascending order together with their static moments.
    near: Vec<Vec<(usize, StaticMoments)>>,
}

const MM: f64 = 1e-3;

/// Triangles closer than this many diameters get singularity extraction.
const NEAR_FACTOR: f64 = 2.0;

pub(crate) fn basis_fingerprint(basis: &RwgBasisSet) -> u64 {
    // FNV-1a over the edge list
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(basis.len() as u64);
    for f in basis.functions() {
        eat(f.edge.0 as u64);
        eat(f.edge.1 as u64);
        eat(f.plus as u64);
        eat(f.minus as u64);
    }
    h
}

impl MomProblem {
    pub fn new(mesh: &TriangleMesh, basis: &RwgBasisSet) -> Result<Self> {
        Self::with_quadrature(mesh, basis, QuadratureOrder::Standard)
    }

    pub fn with_quadrature(mesh: &TriangleMesh, basis: &RwgBasisSet, order: QuadratureOrder) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::UnsolvableMesh("basis is empty".into()));
        }
        if basis.num_triangles() != mesh.num_triangles() {
            return Err(Error::InvalidInput("basis was extracted from a different mesh".into()));
        }
        let rule = order.rule();
        let tris: Vec<Tri> = (0..mesh.num_triangles())
            .map(|t| {
                let [a, b, c] = mesh.triangle_points(t);
                let vertices = [vec3::scale(a, MM), vec3::scale(b, MM), vec3::scale(c, MM)];
                let mut local = [None; 3];
                for (k, slot) in basis.local_functions(t).iter().enumerate() {
                    if let Some((n, sign)) = *slot {
                        local[k] = Some((n, sign * basis.functions()[n].length * MM));
                    }
                }
                Tri {
                    points: rule.map(vertices),
                    vertices,
                    local,
                }
            })
            .collect();

        let centroids: Vec<Vec3> = tris
            .iter()
            .map(|t| vec3::centroid(t.vertices[0], t.vertices[1], t.vertices[2]))
            .collect();
        let diameters: Vec<f64> = tris
            .iter()
            .map(|t| {
                let v = &t.vertices;
                vec3::dist(v[0], v[1]).max(vec3::dist(v[1], v[2])).max(vec3::dist(v[2], v[0]))
            })
            .collect();
        let triangles = mesh.triangles();
        let weights = rule.weights.clone();
        let outer = order.static_rule();
        let near: Vec<Vec<(usize, StaticMoments)>> = (0..tris.len())
            .into_par_iter()
            .map(|p| {
                (p..tris.len())
                    .filter(|&q| {
                        let shares = triangles[p].iter().any(|v| triangles[q].contains(v));
                        shares || vec3::dist(centroids[p], centroids[q]) < NEAR_FACTOR * diameters[p].max(diameters[q])
                    })
                    .map(|q| (q, static_moments(&outer.map(tris[p].vertices), &outer.weights, &tris[q])))
                    .collect()
            })
            .collect();

        Ok(MomProblem {
            n: basis.len(),
            basis_id: basis_fingerprint(basis),
            weights,
            tris,
            near,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn basis_id(&self) -> u64 {
        self.basis_id
    }

    /// Number of triangle pairs handled with singularity extraction.
    pub fn near_pairs(&self) -> usize {
        self.near.iter().map(Vec::len).sum()
    }

    pub fn assemble(&self, freq_ghz: f64) -> Result<ImpedanceMatrix> {
        if !(freq_ghz > 0.0) || !freq_ghz.is_finite() {
            return Err(Error::InvalidInput(format!("frequency must be positive, got {freq_ghz} GHz")));
        }
        let k = wavenumber(freq_ghz);
        let c_vec = c64::new(0.0, k * ETA0 / (4.0 * std::f64::consts::PI));
        let c_scalar = c64::new(0.0, ETA0 / (4.0 * std::f64::consts::PI * k));
        let t = self.tris.len();
        let mut z = Mat::<c64>::zeros(self.n, self.n);

        // Bounded memory: blocks for a group of observation rows at a time.
        let rows_per_chunk = (1usize << 21).div_ceil(t.max(1)).max(1);
        let mut start = 0;
        while start < t {
            let end = (start + rows_per_chunk).min(t);
            let strips: Vec<Vec<[[c64; 3]; 3]>> = (start..end)
                .into_par_iter()
                .map(|p| self.row_strip(p, k, c_vec, c_scalar))
                .collect();
            for (p, strip) in (start..end).zip(strips) {
                for (offset, block) in strip.iter().enumerate() {
                    let q = p + offset;
                    self.scatter(&mut z, p, q, block);
                }
            }
            start = end;
        }
        let mut zm = ImpedanceMatrix {
            z,
            freq_ghz,
            basis_id: self.basis_id,
        };
        zm.symmetrize();
        Ok(zm)
    }

    fn scatter(&self, z: &mut Mat<c64>, p: usize, q: usize, block: &[[c64; 3]; 3]) {
        for (a, fa) in self.tris[p].local.iter().enumerate() {
            let Some((m, _)) = *fa else { continue };
            for (b, fb) in self.tris[q].local.iter().enumerate() {
                let Some((n, _)) = *fb else { continue };
                z[(m, n)] += block[a][b];
                if p != q {
                    z[(n, m)] += block[a][b];
                }
            }
        }
    }

    fn row_strip(&self, p: usize, k: f64, c_vec: c64, c_scalar: c64) -> Vec<[[c64; 3]; 3]> {
        let tp = &self.tris[p];
        let near = &self.near[p];
        let mut near_iter = near.iter().peekable();
        let mut out = Vec::with_capacity(self.tris.len() - p);
        for q in p..self.tris.len() {
            let tq = &self.tris[q];
            let stat = match near_iter.peek() {
                Some(&&(nq, s)) if nq == q => {
                    near_iter.next();
                    Some(s)
                }
                _ => None,
            };
            let mut m0 = c64::new(0.0, 0.0);
            let mut mr = [c64::new(0.0, 0.0); 3];
            let mut ms = [c64::new(0.0, 0.0); 3];
            let mut mrs = c64::new(0.0, 0.0);
            for (r, &wi) in tp.points.iter().zip(&self.weights) {
                let mut g0 = c64::new(0.0, 0.0);
                let mut gs = [c64::new(0.0, 0.0); 3];
                for (s, &wj) in tq.points.iter().zip(&self.weights) {
                    let dist = vec3::dist(*r, *s);
                    let g = if stat.is_some() {
                        smooth_kernel(k, dist)
                    } else {
                        let (sin, cos) = (k * dist).sin_cos();
                        c64::new(cos, -sin) / dist
                    } * wj;
                    g0 += g;
                    for c in 0..3 {
                        gs[c] += g * s[c];
                    }
                }
                let g0 = g0 * wi;
                m0 += g0;
                for c in 0..3 {
                    mr[c] += g0 * r[c];
                    ms[c] += gs[c] * wi;
                    mrs += gs[c] * (wi * r[c]);
                }
            }
            if let Some(s) = stat {
                m0 += s.m0;
                for c in 0..3 {
                    mr[c] += s.mr[c];
                    ms[c] += s.ms[c];
                }
                mrs += s.mrs;
            }

            let mut block = [[c64::new(0.0, 0.0); 3]; 3];
            for (a, fa) in tp.local.iter().enumerate() {
                let Some((_, la)) = *fa else { continue };
                let va = tp.vertices[a];
                for (b, fb) in tq.local.iter().enumerate() {
                    let Some((_, lb)) = *fb else { continue };
                    let vb = tq.vertices[b];
                    let mut iab = mrs + m0 * vec3::dot(va, vb);
                    for c in 0..3 {
                        iab -= mr[c] * vb[c] + ms[c] * va[c];
                    }
                    block[a][b] = (c_vec * iab * 0.25 - c_scalar * m0) * (la * lb);
                }
            }
            out.push(block);
        }
        out
    }
}

/// `(exp(-jkR) - 1) / R`, with its limit `-jk` at `R = 0`.
fn smooth_kernel(k: f64, r: f64) -> c64 {
    let x = k * r;
    if x < 1e-4 {
        // series through the quadratic term
        c64::new(-0.5 * k * x * (1.0 - x * x / 12.0), -k * (1.0 - x * x / 6.0))
    } else {
        let (sin, cos) = x.sin_cos();
        c64::new(cos - 1.0, -sin) / r
    }
}

fn static_moments(points: &[Vec3], weights: &[f64], tq: &Tri) -> StaticMoments {
    let area_q = vec3::triangle_area(tq.vertices[0], tq.vertices[1], tq.vertices[2]);
    let mut m = StaticMoments {
        m0: 0.0,
        mr: [0.0; 3],
        ms: [0.0; 3],
        mrs: 0.0,
    };
    for (r, &w) in points.iter().zip(weights) {
        let s = static_integrals(*r, tq.vertices);
        let ws = w / area_q;
        m.m0 += ws * s.scalar;
        for c in 0..3 {
            m.mr[c] += ws * s.scalar * r[c];
            m.ms[c] += ws * s.vector[c];
        }
        m.mrs += ws * vec3::dot(*r, s.vector);
    }
    m
}

/// Assembles `Z` for one frequency with the standard quadrature.
pub fn assemble_impedance(mesh: &TriangleMesh, basis: &RwgBasisSet, freq_ghz: f64) -> Result<ImpedanceMatrix> {
    MomProblem::new(mesh, basis)?.assemble(freq_ghz)
}
