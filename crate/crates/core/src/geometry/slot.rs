use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{Region, SlotSnap, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SlotAxis {
    /// `length` runs along x.
    #[default]
    X,
    /// `length` runs along y.
    Y,
}

/// Rectangular opening cut out of the chassis plate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlotRect {
    pub center: [f64; 2],
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub axis: SlotAxis,
}

impl SlotRect {
    /// `[x_min, x_max, y_min, y_max]` before snapping.
    pub fn bounds(&self) -> [f64; 4] {
        let (hx, hy) = match self.axis {
            SlotAxis::X => (self.length / 2.0, self.width / 2.0),
            SlotAxis::Y => (self.width / 2.0, self.length / 2.0),
        };
        [self.center[0] - hx, self.center[0] + hx, self.center[1] - hy, self.center[1] + hy]
    }
}

fn mesh_lines(mesh: &TriangleMesh, axis: usize) -> Vec<f64> {
    let mut used = vec![false; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if mesh.regions()[t] == Region::Chassis {
            for &v in tri {
                used[v] = true;
            }
        }
    }
    let mut lines: Vec<f64> = mesh
        .vertices()
        .iter()
        .zip(&used)
        .filter(|(_, &u)| u)
        .map(|(p, _)| p[axis])
        .collect();
    lines.sort_by(f64::total_cmp);
    lines.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    lines
}

fn snap(value: f64, lines: &[f64]) -> f64 {
    lines
        .iter()
        .copied()
        .min_by(|a, b| (a - value).abs().total_cmp(&(b - value).abs()))
        .unwrap_or(value)
}

/// Removes the chassis triangles whose centroid falls inside `slot` after its
/// sides are snapped to the nearest mesh lines.
pub fn cut_rect_slot(mesh: &TriangleMesh, slot: &SlotRect) -> Result<TriangleMesh> {
    if !(slot.length > 0.0 && slot.width > 0.0) || !slot.center.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidGeometry(format!(
            "slot needs positive length and width (got {} x {})",
            slot.length, slot.width
        )));
    }
    let plate = mesh
        .region_bbox(Region::Chassis)
        .ok_or_else(|| Error::InvalidGeometry("no chassis region to cut".into()))?;
    let req = slot.bounds();
    let inside = req[0] > plate[0] && req[1] < plate[1] && req[2] > plate[2] && req[3] < plate[3];
    if !inside {
        return Err(Error::InvalidGeometry(format!(
            "slot [{:.3}, {:.3}] x [{:.3}, {:.3}] is not strictly inside the plate",
            req[0], req[1], req[2], req[3]
        )));
    }
    let xs = mesh_lines(mesh, 0);
    let ys = mesh_lines(mesh, 1);
    let snapped = [snap(req[0], &xs), snap(req[1], &xs), snap(req[2], &ys), snap(req[3], &ys)];
    if snapped[1] - snapped[0] < 1e-9 || snapped[3] - snapped[2] < 1e-9 {
        return Err(Error::InvalidGeometry(
            "slot is narrower than one mesh cell after snapping".into(),
        ));
    }

    let inside_slot = |t: usize| {
        let c = mesh.triangle_centroid(t);
        mesh.regions()[t] == Region::Chassis
            && c[0] > snapped[0]
            && c[0] < snapped[1]
            && c[1] > snapped[2]
            && c[1] < snapped[3]
    };
    let removed: Vec<bool> = (0..mesh.num_triangles()).map(inside_slot).collect();
    let removed_count = removed.iter().filter(|&&r| r).count();
    if removed_count == mesh.num_triangles() {
        return Err(Error::EmptyMesh("slot removes every triangle".into()));
    }
    let touches_edge = snapped[0] <= plate[0] + 1e-9
        || snapped[1] >= plate[1] - 1e-9
        || snapped[2] <= plate[2] + 1e-9
        || snapped[3] >= plate[3] - 1e-9;
    if touches_edge {
        return Err(Error::InvalidGeometry(
            "slot reaches the plate boundary after snapping".into(),
        ));
    }

    let table = mesh.edge_table();
    for port in mesh.port_edges() {
        if let Ok(i) = table.binary_search_by(|e| e.edge.cmp(&port.edge)) {
            if table[i].faces.iter().any(|&(t, _)| removed[t]) {
                return Err(Error::PortDestroyed {
                    port_id: port.port_id,
                });
            }
        }
    }

    let holes_before = mesh.holes();
    let mut triangles = Vec::with_capacity(mesh.num_triangles() - removed_count);
    let mut regions = Vec::with_capacity(triangles.capacity());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !removed[t] {
            triangles.push(*tri);
            regions.push(mesh.regions()[t]);
        }
    }
    let mut out = TriangleMesh::from_parts(
        mesh.vertices().to_vec(),
        triangles,
        regions,
        mesh.port_edges().to_vec(),
        mesh.snaps().to_vec(),
    );
    out.compact();
    out.push_snap(SlotSnap {
        requested: req,
        snapped,
        removed_triangles: removed_count,
    });
    out.validate()?;
    if out.holes() != holes_before + 1 {
        return Err(Error::InvalidGeometry(format!(
            "slot merges with an existing opening (holes {} -> {})",
            holes_before,
            out.holes()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::plate::build_rect_plate;

    #[test]
    fn removes_whole_cells() {
        let plate = build_rect_plate(120.0, 60.0, 2.0).unwrap();
        let slot = SlotRect {
            center: [60.0, 30.0],
            length: 40.0,
            width: 4.0,
            axis: SlotAxis::X,
        };
        let cut = cut_rect_slot(&plate, &slot).unwrap();
        // 20 x 2 cells of 2 mm
        assert_eq!(plate.num_triangles() - cut.num_triangles(), 20 * 2 * 2);
        assert_eq!(cut.holes(), 1);
        assert_eq!(cut.euler_characteristic(), 2 - 1 - 1);
        assert_eq!(cut.snaps().len(), 1);
    }

    #[test]
    fn snaps_to_nearest_lines() {
        let plate = build_rect_plate(120.0, 60.0, 10.0).unwrap();
        let slot = SlotRect {
            center: [60.0, 30.0],
            length: 38.0,
            width: 18.0,
            axis: SlotAxis::Y,
        };
        let cut = cut_rect_slot(&plate, &slot).unwrap();
        let snap = cut.snaps()[0];
        assert_eq!(snap.snapped, [50.0, 70.0, 10.0, 50.0]);
        assert_eq!(snap.removed_triangles, 2 * 4 * 2);
    }

    #[test]
    fn two_slots_make_two_holes() {
        let plate = build_rect_plate(120.0, 60.0, 5.0).unwrap();
        let a = SlotRect { center: [30.0, 30.0], length: 20.0, width: 10.0, axis: SlotAxis::X };
        let b = SlotRect { center: [90.0, 30.0], length: 20.0, width: 10.0, axis: SlotAxis::Y };
        let cut = cut_rect_slot(&cut_rect_slot(&plate, &a).unwrap(), &b).unwrap();
        assert_eq!(cut.holes(), 2);
        assert_eq!(cut.euler_characteristic(), 1 - 2);
    }

    #[test]
    fn slot_errors() {
        let plate = build_rect_plate(120.0, 60.0, 10.0).unwrap();
        let outside = SlotRect { center: [200.0, 30.0], length: 10.0, width: 4.0, axis: SlotAxis::X };
        assert!(matches!(cut_rect_slot(&plate, &outside), Err(Error::InvalidGeometry(_))));
        let thin = SlotRect { center: [60.0, 30.0], length: 40.0, width: 2.0, axis: SlotAxis::X };
        assert!(matches!(cut_rect_slot(&plate, &thin), Err(Error::InvalidGeometry(_))));
        let single = build_rect_plate(10.0, 10.0, 10.0).unwrap();
        let cover = SlotRect { center: [5.0, 5.0], length: 8.0, width: 8.0, axis: SlotAxis::X };
        assert!(matches!(cut_rect_slot(&single, &cover), Err(Error::EmptyMesh(_))));
    }
}
