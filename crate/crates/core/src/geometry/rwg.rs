use crate::error::{Error, Result};
use crate::geometry::mesh::{Edge, TriangleMesh};
use crate::vec3::{self, Vec3};

/// One RWG function on the triangle pair sharing `edge`.
///
/// On the plus triangle the function is `l / (2 A+) (r - free+)`; on the minus
/// triangle it is `l / (2 A-) (free- - r)`, so current flows from the plus
/// triangle into the minus triangle across the edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwgFunction {
    pub edge: Edge,
    pub plus: usize,
    pub minus: usize,
    /// Vertex of the plus triangle opposite the edge.
    pub free_plus: usize,
    /// Vertex of the minus triangle opposite the edge.
    pub free_minus: usize,
    /// Local index (0..3) of the free vertex within each triangle.
    pub local_plus: usize,
    pub local_minus: usize,
    pub length: f64,
    pub area_plus: f64,
    pub area_minus: f64,
}

/// Basis functions of a mesh, one per interior edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RwgBasisSet {
    functions: Vec<RwgFunction>,
    /// `(port_id, basis index)` sorted by port id.
    ports: Vec<(u32, usize)>,
    /// Per triangle and local vertex: `(basis index, sign)` of the function
    /// whose free vertex is that local vertex, if the opposite edge is interior.
    local: Vec<[Option<(usize, f64)>; 3]>,
}

impl RwgBasisSet {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[RwgFunction] {
        &self.functions
    }

    pub fn get(&self, n: usize) -> Option<&RwgFunction> {
        self.functions.get(n)
    }

    pub fn ports(&self) -> &[(u32, usize)] {
        &self.ports
    }

    /// Basis index of the feed edge of `port_id`.
    pub fn port_basis(&self, port_id: u32) -> Option<usize> {
        self.ports.iter().find(|p| p.0 == port_id).map(|p| p.1)
    }

    /// Index of the function living on `edge`.
    pub fn find_edge(&self, edge: Edge) -> Option<usize> {
        self.functions
            .binary_search_by(|f| f.edge.cmp(&edge))
            .ok()
    }

    /// Functions supported on triangle `t`, indexed by the local vertex
    /// opposite their edge.
    pub fn local_functions(&self, t: usize) -> &[Option<(usize, f64)>; 3] {
        &self.local[t]
    }

    pub fn num_triangles(&self) -> usize {
        self.local.len()
    }

    /// Value of function `n` at point `r` of triangle `t` (zero off support).
    pub fn evaluate(&self, mesh: &TriangleMesh, n: usize, t: usize, r: Vec3) -> Vec3 {
        let f = &self.functions[n];
        if t == f.plus {
            let rho = vec3::sub(r, mesh.vertices()[f.free_plus]);
            vec3::scale(rho, f.length / (2.0 * f.area_plus))
        } else if t == f.minus {
            let rho = vec3::sub(mesh.vertices()[f.free_minus], r);
            vec3::scale(rho, f.length / (2.0 * f.area_minus))
        } else {
            [0.0; 3]
        }
    }
}

/// One basis function per edge shared by exactly two triangles; the plus
/// triangle is the one with the lower index.
pub fn extract_rwg(mesh: &TriangleMesh) -> Result<RwgBasisSet> {
    let mut functions = Vec::new();
    let mut local = vec![[None; 3]; mesh.num_triangles()];
    for entry in mesh.edge_table() {
        if entry.faces.len() != 2 {
            continue;
        }
        let (plus, local_plus) = entry.faces[0];
        let (minus, local_minus) = entry.faces[1];
        let n = functions.len();
        let [a, b] = [mesh.vertices()[entry.edge.0], mesh.vertices()[entry.edge.1]];
        functions.push(RwgFunction {
            edge: entry.edge,
            plus,
            minus,
            free_plus: mesh.triangles()[plus][local_plus],
            free_minus: mesh.triangles()[minus][local_minus],
            local_plus,
            local_minus,
            length: vec3::dist(a, b),
            area_plus: mesh.triangle_area(plus),
            area_minus: mesh.triangle_area(minus),
        });
        local[plus][local_plus] = Some((n, 1.0));
        local[minus][local_minus] = Some((n, -1.0));
    }
    if functions.is_empty() {
        return Err(Error::UnsolvableMesh("mesh has no interior edges".into()));
    }
    let mut ports = Vec::new();
    for p in mesh.port_edges() {
        let n = functions
            .binary_search_by(|f: &RwgFunction| f.edge.cmp(&p.edge))
            .map_err(|_| {
                Error::PortUnrealizable(format!("port {} edge carries no basis function", p.port_id))
            })?;
        ports.push((p.port_id, n));
    }
    ports.sort_unstable();
    Ok(RwgBasisSet {
        functions,
        ports,
        local,
    })
}
