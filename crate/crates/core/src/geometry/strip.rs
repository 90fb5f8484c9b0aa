use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{Edge, PortEdge, Region, TriangleMesh, VERTEX_TOLERANCE};
use crate::vec3::{self, Vec3};

/// Printed strip element described by an axis-aligned centre-line polyline.
///
/// The strip is meshed one cell across (thin-strip model) and ends flush
/// with the first and last path points, so an end placed on the chassis
/// outline is welded to the chassis vertices there. Interior joints get a
/// `width x width` corner square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopElementSpec {
    #[serde(default)]
    pub anchor: [f64; 2],
    pub path: Vec<[f64; 2]>,
    pub width: f64,
    /// Segment whose transverse edge nearest its midpoint carries the port.
    pub feed_segment: usize,
    /// End segment whose free end must weld onto the board.
    #[serde(default)]
    pub short_segment: Option<usize>,
    /// Longitudinal cell size; defaults to the strip width.
    #[serde(default)]
    pub max_edge_mm: Option<f64>,
}

/// Axis-aligned rectangle meshed as an `nx x ny` grid.
#[derive(Debug, Clone, Copy)]
struct Piece {
    x: [f64; 2],
    y: [f64; 2],
    nx: usize,
    ny: usize,
}

impl Piece {
    fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let lerp = |r: [f64; 2], k: usize, n: usize| {
            if k == n {
                r[1]
            } else {
                r[0] + (r[1] - r[0]) * k as f64 / n as f64
            }
        };
        [lerp(self.x, i, self.nx), lerp(self.y, j, self.ny)]
    }

    fn overlap_area(&self, other: &Piece) -> f64 {
        let dx = self.x[1].min(other.x[1]) - self.x[0].max(other.x[0]);
        let dy = self.y[1].min(other.y[1]) - self.y[0].max(other.y[0]);
        dx.max(0.0) * dy.max(0.0)
    }

    fn contains_strictly(&self, p: Vec3) -> bool {
        p[0] > self.x[0] + 1e-9 && p[0] < self.x[1] - 1e-9 && p[1] > self.y[0] + 1e-9 && p[1] < self.y[1] - 1e-9
    }
}

/// Piece of segment `i` and, for the feed/short bookkeeping, the layout of
/// its stations along the segment.
struct SegmentPiece {
    piece: Piece,
    along_x: bool,
    /// True when stations run in the negative axis direction.
    reversed: bool,
    stations: usize,
}

impl SegmentPiece {
    /// Two end vertices `(i, j)` of the transverse edge at station `k`,
    /// counted from the segment start.
    fn station_edge(&self, k: usize) -> [(usize, usize); 2] {
        let k = if self.reversed { self.stations - k } else { k };
        if self.along_x {
            [(k, 0), (k, 1)]
        } else {
            [(0, k), (1, k)]
        }
    }

    fn station_offset(&self, k: usize, seg_len: f64, start_off: f64) -> f64 {
        let along = seg_len - start_off - self.end_off(seg_len, start_off);
        start_off + along * k as f64 / self.stations as f64
    }

    fn end_off(&self, seg_len: f64, start_off: f64) -> f64 {
        let len = if self.along_x {
            self.piece.x[1] - self.piece.x[0]
        } else {
            self.piece.y[1] - self.piece.y[0]
        };
        seg_len - start_off - len
    }
}

fn cells(len: f64, h: f64) -> usize {
    ((len / h) - 1e-9).ceil().max(1.0) as usize
}

fn layout(spec: &LoopElementSpec, h: f64) -> Result<(Vec<SegmentPiece>, Vec<Piece>, Vec<[f64; 2]>)> {
    let w = spec.width;
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::InvalidGeometry(format!("strip width must be positive, got {w}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidGeometry(format!("strip cell size must be positive, got {h}")));
    }
    if spec.path.len() < 2 {
        return Err(Error::InvalidGeometry("strip path needs at least two points".into()));
    }
    let pts: Vec<[f64; 2]> = spec
        .path
        .iter()
        .map(|p| [p[0] + spec.anchor[0], p[1] + spec.anchor[1]])
        .collect();
    let nseg = pts.len() - 1;
    if spec.feed_segment >= nseg {
        return Err(Error::PortUnrealizable(format!(
            "feed segment {} does not exist ({} segments)",
            spec.feed_segment, nseg
        )));
    }
    if let Some(s) = spec.short_segment {
        if s != 0 && s != nseg - 1 {
            return Err(Error::InvalidGeometry(format!(
                "short segment {s} is not an end segment"
            )));
        }
    }
    let across = 1;
    let half = w / 2.0;
    let mut segments = Vec::with_capacity(nseg);
    for i in 0..nseg {
        let (a, b) = (pts[i], pts[i + 1]);
        let dx = b[0] - a[0];
        let dy = b[1] - a[1];
        let along_x = dy.abs() < 1e-9;
        if !(along_x || dx.abs() < 1e-9) {
            return Err(Error::InvalidGeometry(format!("strip segment {i} is not axis-aligned")));
        }
        let len = dx.abs().max(dy.abs());
        let start_off = if i > 0 { half } else { 0.0 };
        let end_off = if i + 1 < nseg { half } else { 0.0 };
        let piece_len = len - start_off - end_off;
        if piece_len <= 1e-9 {
            return Err(Error::InvalidGeometry(format!(
                "strip segment {i} is too short for width {w}"
            )));
        }
        let sign = if along_x { dx.signum() } else { dy.signum() };
        let s0 = if along_x { a[0] } else { a[1] } + sign * start_off;
        let s1 = if along_x { b[0] } else { b[1] } - sign * end_off;
        let (lo, hi) = (s0.min(s1), s0.max(s1));
        let stations = cells(piece_len, h);
        let piece = if along_x {
            Piece { x: [lo, hi], y: [a[1] - half, a[1] + half], nx: stations, ny: across }
        } else {
            Piece { x: [a[0] - half, a[0] + half], y: [lo, hi], nx: across, ny: stations }
        };
        segments.push(SegmentPiece {
            piece,
            along_x,
            reversed: sign < 0.0,
            stations,
        });
    }
    let mut pieces: Vec<Piece> = segments.iter().map(|s| s.piece).collect();
    for p in &pts[1..nseg] {
        pieces.push(Piece {
            x: [p[0] - half, p[0] + half],
            y: [p[1] - half, p[1] + half],
            nx: across,
            ny: across,
        });
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if pieces[i].overlap_area(&pieces[j]) > 1e-9 {
                return Err(Error::InvalidGeometry("strip path intersects itself".into()));
            }
        }
    }
    Ok((segments, pieces, pts))
}

fn key(p: [f64; 2]) -> (i64, i64) {
    ((p[0] * 1e7).round() as i64, (p[1] * 1e7).round() as i64)
}

fn point_in_triangle(p: Vec3, tri: [Vec3; 3]) -> bool {
    let side = |a: Vec3, b: Vec3| (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    let s = [side(tri[0], tri[1]), side(tri[1], tri[2]), side(tri[2], tri[0])];
    s.iter().all(|&v| v > 1e-9) || s.iter().all(|&v| v < -1e-9)
}

/// Meshes `spec` on its own, e.g. as a free-standing strip dipole.
pub fn build_strip(spec: &LoopElementSpec, port_id: u32) -> Result<TriangleMesh> {
    let empty = TriangleMesh::from_parts(Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    add_strip_loop(&empty, spec, port_id)
}

/// Meshes `spec` and welds it onto `board`. The feed edge is registered as
/// port `port_id`; the new triangles are tagged as the next element region.
pub fn add_strip_loop(board: &TriangleMesh, spec: &LoopElementSpec, port_id: u32) -> Result<TriangleMesh> {
    let h = spec.max_edge_mm.unwrap_or(spec.width);
    let (segments, pieces, pts) = layout(spec, h)?;
    if board.port_ids().contains(&port_id) {
        return Err(Error::InvalidInput(format!("port id {port_id} is already in use")));
    }

    for t in 0..board.num_triangles() {
        let c = board.triangle_centroid(t);
        if pieces.iter().any(|p| p.contains_strictly(c)) {
            let what = match board.regions()[t] {
                Region::Element(k) => format!("element {k}"),
                r => r.to_string(),
            };
            return Err(Error::InvalidGeometry(format!("strip overlaps {what}")));
        }
    }

    let element = board
        .regions()
        .iter()
        .filter_map(|r| match r {
            Region::Element(k) => Some(*k),
            _ => None,
        })
        .max()
        .unwrap_or(0)
        + 1;

    let mut vertices: Vec<Vec3> = board.vertices().to_vec();
    let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
    for (i, v) in vertices.iter().enumerate() {
        if v[2].abs() < VERTEX_TOLERANCE {
            lookup.entry(key([v[0], v[1]])).or_insert(i);
        }
    }
    let board_vertices = vertices.len();
    let mut triangles = board.triangles().to_vec();
    let mut regions = board.regions().to_vec();
    let mut piece_ids: Vec<Vec<usize>> = Vec::with_capacity(pieces.len());
    for piece in &pieces {
        let mut ids = Vec::with_capacity((piece.nx + 1) * (piece.ny + 1));
        for j in 0..=piece.ny {
            for i in 0..=piece.nx {
                let p = piece.point(i, j);
                let id = *lookup.entry(key(p)).or_insert_with(|| {
                    vertices.push([p[0], p[1], 0.0]);
                    vertices.len() - 1
                });
                ids.push(id);
            }
        }
        let row = piece.nx + 1;
        for j in 0..piece.ny {
            for i in 0..piece.nx {
                let v00 = ids[j * row + i];
                let v10 = ids[j * row + i + 1];
                let v01 = ids[(j + 1) * row + i];
                let v11 = ids[(j + 1) * row + i + 1];
                for tri in [[v00, v10, v11], [v00, v11, v01]] {
                    let pts3 = [vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]];
                    let c = vec3::centroid(pts3[0], pts3[1], pts3[2]);
                    if (0..board.num_triangles()).any(|t| point_in_triangle(c, board.triangle_points(t))) {
                        return Err(Error::InvalidGeometry("strip overlaps the board".into()));
                    }
                    triangles.push(tri);
                    regions.push(Region::Element(element));
                }
            }
        }
        piece_ids.push(ids);
    }

    let vertex_of = |seg: usize, (i, j): (usize, usize)| {
        let piece = &pieces[seg];
        piece_ids[seg][j * (piece.nx + 1) + i]
    };

    let feed = &segments[spec.feed_segment];
    let seg_len = {
        let (a, b) = (pts[spec.feed_segment], pts[spec.feed_segment + 1]);
        (b[0] - a[0]).abs().max((b[1] - a[1]).abs())
    };
    let start_off = if spec.feed_segment > 0 { spec.width / 2.0 } else { 0.0 };
    let best = (0..=feed.stations)
        .min_by(|&a, &b| {
            let da = (feed.station_offset(a, seg_len, start_off) - seg_len / 2.0).abs();
            let db = (feed.station_offset(b, seg_len, start_off) - seg_len / 2.0).abs();
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .expect("at least one station");
    let [fa, fb] = feed.station_edge(best);
    let feed_edge = Edge::new(vertex_of(spec.feed_segment, fa), vertex_of(spec.feed_segment, fb));

    let mut port_edges = board.port_edges().to_vec();
    port_edges.push(PortEdge {
        edge: feed_edge,
        port_id,
    });
    let mesh = TriangleMesh::from_parts(vertices, triangles, regions, port_edges, board.snaps().to_vec());
    mesh.validate().map_err(|e| match e {
        Error::PortUnrealizable(_) => Error::PortUnrealizable(format!(
            "feed edge of port {port_id} is not interior after meshing"
        )),
        other => other,
    })?;

    if let Some(s) = spec.short_segment {
        let seg = &segments[s];
        let k = if s == 0 { 0 } else { seg.stations };
        let ends = seg.station_edge(k);
        let welded = ends.iter().all(|&ij| vertex_of(s, ij) < board_vertices);
        let interior = welded && {
            let edge = Edge::new(vertex_of(s, ends[0]), vertex_of(s, ends[1]));
            mesh.edge_table()
                .iter()
                .find(|e| e.edge == edge)
                .is_some_and(|e| e.faces.len() == 2)
        };
        if !interior {
            return Err(Error::InvalidGeometry(format!(
                "short end of element {element} does not weld onto the board"
            )));
        }
    }
    Ok(mesh)
}
