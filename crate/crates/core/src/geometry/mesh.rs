use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::vec3::{self, Vec3};

/// Minimum triangle area accepted by [`TriangleMesh::validate`] (mm²).
pub const MIN_TRIANGLE_AREA: f64 = 1e-9;
/// Two vertices closer than this (mm) are considered the same point.
pub const VERTEX_TOLERANCE: f64 = 1e-6;

/// Label attached to each triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Chassis,
    /// Antenna element, numbered from 1.
    Element(u32),
    Other,
}

impl Region {
    pub fn is_element(self) -> bool {
        matches!(self, Region::Element(_))
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::Chassis => write!(f, "chassis"),
            Region::Element(k) => write!(f, "element_{k}"),
            Region::Other => write!(f, "other"),
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chassis" => Ok(Region::Chassis),
            "other" => Ok(Region::Other),
            _ => s
                .strip_prefix("element_")
                .and_then(|k| k.parse().ok())
                .map(Region::Element)
                .ok_or_else(|| Error::Parse(format!("unknown region tag `{s}`"))),
        }
    }
}

/// An undirected mesh edge stored with sorted endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge(pub usize, pub usize);

impl Edge {
    pub fn new(a: usize, b: usize) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

/// Edge carrying a delta-gap port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortEdge {
    pub edge: Edge,
    pub port_id: u32,
}

/// Record of how a requested slot rectangle was snapped onto mesh lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotSnap {
    /// `[x_min, x_max, y_min, y_max]` as requested (mm).
    pub requested: [f64; 4],
    /// The same bounds after snapping to the nearest mesh lines.
    pub snapped: [f64; 4],
    pub removed_triangles: usize,
}

/// Triangles incident on one edge, with the local index of the vertex
/// opposite to the edge in each triangle.
#[derive(Debug, Clone)]
pub struct EdgeEntry {
    pub edge: Edge,
    pub faces: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeCensus {
    pub total: usize,
    pub interior: usize,
    pub boundary: usize,
    pub nonmanifold: usize,
}

/// Conducting surface: vertices in millimetres, triangles, region labels and
/// the port edges.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    port_edges: Vec<PortEdge>,
    snaps: Vec<SlotSnap>,
}

impl TriangleMesh {
    /// Builds a mesh and checks every invariant.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        port_edges: Vec<PortEdge>,
    ) -> Result<Self> {
        let mesh = Self::from_parts(vertices, triangles, regions, port_edges, Vec::new());
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        port_edges: Vec<PortEdge>,
        snaps: Vec<SlotSnap>,
    ) -> Self {
        TriangleMesh {
            vertices,
            triangles,
            regions,
            port_edges,
            snaps,
        }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn port_edges(&self) -> &[PortEdge] {
        &self.port_edges
    }

    pub fn snaps(&self) -> &[SlotSnap] {
        &self.snaps
    }

    pub(crate) fn push_snap(&mut self, snap: SlotSnap) {
        self.snaps.push(snap);
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        vec3::triangle_area(a, b, c)
    }

    pub fn triangle_centroid(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_points(t);
        vec3::centroid(a, b, c)
    }

    /// Distinct port ids in ascending order.
    pub fn port_ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.port_edges.iter().map(|p| p.port_id).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Axis-aligned bounding box `[x_min, x_max, y_min, y_max]` of the
    /// triangles carrying `region`.
    pub fn region_bbox(&self, region: Region) -> Option<[f64; 4]> {
        let mut bbox: Option<[f64; 4]> = None;
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.regions[t] != region {
                continue;
            }
            for &v in tri {
                let p = self.vertices[v];
                let b = bbox.get_or_insert([p[0], p[0], p[1], p[1]]);
                b[0] = b[0].min(p[0]);
                b[1] = b[1].max(p[0]);
                b[2] = b[2].min(p[1]);
                b[3] = b[3].max(p[1]);
            }
        }
        bbox
    }

    /// All edges with their incident triangles, sorted by vertex pair.
    pub fn edge_table(&self) -> Vec<EdgeEntry> {
        let mut half: Vec<(Edge, usize, usize)> = Vec::with_capacity(3 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            for local in 0..3 {
                let a = tri[(local + 1) % 3];
                let b = tri[(local + 2) % 3];
                half.push((Edge::new(a, b), t, local));
            }
        }
        half.sort_unstable();
        let mut table: Vec<EdgeEntry> = Vec::new();
        for (edge, t, local) in half {
            match table.last_mut() {
                Some(last) if last.edge == edge => last.faces.push((t, local)),
                _ => table.push(EdgeEntry {
                    edge,
                    faces: vec![(t, local)],
                }),
            }
        }
        table
    }

    pub fn edge_census(&self) -> EdgeCensus {
        let table = self.edge_table();
        let mut census = EdgeCensus {
            total: table.len(),
            interior: 0,
            boundary: 0,
            nonmanifold: 0,
        };
        for e in &table {
            match e.faces.len() {
                1 => census.boundary += 1,
                2 => census.interior += 1,
                _ => census.nonmanifold += 1,
            }
        }
        census
    }

    /// `V - E + F` computed from the vertices actually referenced.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                used[v] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        let e = self.edge_census().total as i64;
        v - e + self.triangles.len() as i64
    }

    /// Number of edge-connected components of the surface.
    pub fn connected_components(&self) -> usize {
        let mut dsu = DisjointSet::new(self.triangles.len());
        for e in self.edge_table() {
            for w in e.faces.windows(2) {
                dsu.union(w[0].0, w[1].0);
            }
        }
        dsu.count_roots()
    }

    /// Number of closed loops formed by boundary edges.
    pub fn boundary_loops(&self) -> usize {
        let table = self.edge_table();
        let mut dsu = DisjointSet::new(self.vertices.len());
        let mut touched = vec![false; self.vertices.len()];
        for e in table.iter().filter(|e| e.faces.len() == 1) {
            dsu.union(e.edge.0, e.edge.1);
            touched[e.edge.0] = true;
            touched[e.edge.1] = true;
        }
        (0..self.vertices.len())
            .filter(|&v| touched[v] && dsu.find(v) == v)
            .count()
    }

    /// Number of holes of a planar surface, from `loops = components + holes`.
    pub fn holes(&self) -> usize {
        self.boundary_loops()
            .saturating_sub(self.connected_components())
    }

    /// Checks every structural invariant of the mesh.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::EmptyMesh("mesh has no triangles".into()));
        }
        if self.regions.len() != self.triangles.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} region tags for {} triangles",
                self.regions.len(),
                self.triangles.len()
            )));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidGeometry(format!(
                    "triangle {t} references a vertex out of range"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidGeometry(format!("triangle {t} repeats a vertex")));
            }
            let area = self.triangle_area(t);
            if area <= MIN_TRIANGLE_AREA {
                return Err(Error::InvalidGeometry(format!(
                    "triangle {t} is degenerate (area {area:.3e} mm²)"
                )));
            }
        }
        if let Some((a, b)) = find_duplicate_vertex(&self.vertices, VERTEX_TOLERANCE) {
            return Err(Error::InvalidGeometry(format!(
                "vertices {a} and {b} coincide within {VERTEX_TOLERANCE} mm"
            )));
        }
        let table = self.edge_table();
        if let Some(e) = table.iter().find(|e| e.faces.len() > 2) {
            return Err(Error::InvalidGeometry(format!(
                "edge ({}, {}) is shared by {} triangles",
                e.edge.0,
                e.edge.1,
                e.faces.len()
            )));
        }
        self.check_hanging_vertices(&table)?;
        for port in &self.port_edges {
            let faces = table
                .binary_search_by(|e| e.edge.cmp(&port.edge))
                .map(|i| table[i].faces.len())
                .unwrap_or(0);
            if faces != 2 {
                return Err(Error::PortUnrealizable(format!(
                    "port {} edge ({}, {}) is not an interior edge",
                    port.port_id, port.edge.0, port.edge.1
                )));
            }
        }
        Ok(())
    }

    /// A vertex lying strictly inside a boundary edge means two triangles
    /// meet along a line without sharing vertices.
    fn check_hanging_vertices(&self, table: &[EdgeEntry]) -> Result<()> {
        let boundary: Vec<Edge> = table
            .iter()
            .filter(|e| e.faces.len() == 1)
            .map(|e| e.edge)
            .collect();
        let mut on_boundary = vec![false; self.vertices.len()];
        for e in &boundary {
            on_boundary[e.0] = true;
            on_boundary[e.1] = true;
        }
        let candidates: Vec<usize> = (0..self.vertices.len()).filter(|&v| on_boundary[v]).collect();
        for e in &boundary {
            let a = self.vertices[e.0];
            let b = self.vertices[e.1];
            let ab = vec3::sub(b, a);
            let len2 = vec3::dot(ab, ab);
            for &v in &candidates {
                if v == e.0 || v == e.1 {
                    continue;
                }
                let p = self.vertices[v];
                let s = vec3::dot(vec3::sub(p, a), ab) / len2;
                if s <= 1e-9 || s >= 1.0 - 1e-9 {
                    continue;
                }
                let foot = vec3::add(a, vec3::scale(ab, s));
                if vec3::dist(foot, p) < VERTEX_TOLERANCE {
                    return Err(Error::InvalidGeometry(format!(
                        "non-conforming mesh: vertex {v} lies inside edge ({}, {})",
                        e.0, e.1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Drops unreferenced vertices and renumbers the rest, keeping order.
    pub(crate) fn compact(&mut self) {
        let mut map = vec![usize::MAX; self.vertices.len()];
        for tri in &self.triangles {
            for &v in tri {
                map[v] = 0;
            }
        }
        let mut next = 0;
        let mut vertices = Vec::new();
        for (v, slot) in map.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = next;
                next += 1;
                vertices.push(self.vertices[v]);
            }
        }
        for tri in &mut self.triangles {
            for v in tri.iter_mut() {
                *v = map[*v];
            }
        }
        self.port_edges.retain(|p| map[p.edge.0] != usize::MAX && map[p.edge.1] != usize::MAX);
        for p in &mut self.port_edges {
            p.edge = Edge::new(map[p.edge.0], map[p.edge.1]);
        }
        self.vertices = vertices;
    }

    /// Writes the line-oriented `mesh v1` format. `comments` are emitted as
    /// `#` lines right after the header.
    pub fn write_text<W: Write>(&self, mut w: W, comments: &[String]) -> Result<()> {
        writeln!(w, "mesh v1")?;
        for c in comments {
            writeln!(w, "# {c}")?;
        }
        for s in &self.snaps {
            writeln!(
                w,
                "# slot-snap requested {} {} {} {} snapped {} {} {} {} removed {}",
                fmt_sig(s.requested[0]),
                fmt_sig(s.requested[1]),
                fmt_sig(s.requested[2]),
                fmt_sig(s.requested[3]),
                fmt_sig(s.snapped[0]),
                fmt_sig(s.snapped[1]),
                fmt_sig(s.snapped[2]),
                fmt_sig(s.snapped[3]),
                s.removed_triangles
            )?;
        }
        writeln!(w, "{}", self.vertices.len())?;
        for p in &self.vertices {
            writeln!(w, "{} {} {}", fmt_sig(p[0]), fmt_sig(p[1]), fmt_sig(p[2]))?;
        }
        writeln!(w, "{}", self.triangles.len())?;
        for (tri, region) in self.triangles.iter().zip(&self.regions) {
            writeln!(w, "{} {} {} {}", tri[0], tri[1], tri[2], region)?;
        }
        for p in &self.port_edges {
            writeln!(w, "port {} {} {}", p.port_id, p.edge.0, p.edge.1)?;
        }
        Ok(())
    }

    pub fn to_text(&self, comments: &[String]) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf, comments)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("mesh text is ASCII")
    }

    /// Parses the `mesh v1` format written by [`TriangleMesh::write_text`].
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r
            .lines()
            .map(|l| l.map_err(Error::from))
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('#')));
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .unwrap_or_else(|| Err(Error::Parse(format!("unexpected end of file, expected {what}"))))
        };
        let header = next("header")?;
        if header.trim() != "mesh v1" {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let nv: usize = parse_field(next("vertex count")?.trim(), "vertex count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = next("vertex")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::Parse(format!("bad vertex line `{line}`")));
            }
            vertices.push([
                parse_field(f[0], "x")?,
                parse_field(f[1], "y")?,
                parse_field(f[2], "z")?,
            ]);
        }
        let nt: usize = parse_field(next("triangle count")?.trim(), "triangle count")?;
        let mut triangles = Vec::with_capacity(nt);
        let mut regions = Vec::with_capacity(nt);
        for _ in 0..nt {
            let line = next("triangle")?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad triangle line `{line}`")));
            }
            triangles.push([
                parse_field(f[0], "i")?,
                parse_field(f[1], "j")?,
                parse_field(f[2], "k")?,
            ]);
            regions.push(f[3].parse()?);
        }
        let mut port_edges = Vec::new();
        for line in lines {
            let line = line?;
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 || f[0] != "port" {
                return Err(Error::Parse(format!("bad port line `{line}`")));
            }
            port_edges.push(PortEdge {
                port_id: parse_field(f[1], "port id")?,
                edge: Edge::new(parse_field(f[2], "v1")?, parse_field(f[3], "v2")?),
            });
        }
        TriangleMesh::new(vertices, triangles, regions, port_edges)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("cannot parse {what} from `{s}`")))
}

/// Formats a value with 9 significant digits, `%.9g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        trim_zeros(&s)
    } else {
        let s = format!("{x:.8e}");
        let (mantissa, e) = s.split_once('e').expect("exponent present");
        format!("{}e{}", trim_zeros(mantissa), e)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" {
            "0".to_string()
        } else {
            t.to_string()
        }
    } else {
        s.to_string()
    }
}

/// First pair of vertices closer than `tol`, found by sweeping along x.
pub(crate) fn find_duplicate_vertex(vertices: &[Vec3], tol: f64) -> Option<(usize, usize)> {
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a][0].total_cmp(&vertices[b][0]));
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            if vertices[b][0] - vertices[a][0] >= tol {
                break;
            }
            if vec3::dist(vertices[a], vertices[b]) < tol {
                return Some((a.min(b), a.max(b)));
            }
        }
    }
    None
}

pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count_roots(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}
