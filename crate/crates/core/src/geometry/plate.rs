use crate::error::{Error, Result};
use crate::geometry::mesh::{Region, TriangleMesh};

/// Grid lines from `start` to `stop` that include every breakpoint and are
/// never more than `max_edge` apart. Each interval between consecutive
/// breakpoints is split uniformly.
pub fn grid_lines(start: f64, stop: f64, breakpoints: &[f64], max_edge: f64) -> Vec<f64> {
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > start + 1e-9 && b < stop - 1e-9)
        .collect();
    stops.push(stop);
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut lines = vec![start];
    let mut lo = start;
    for hi in stops {
        let n = ((hi - lo) / max_edge - 1e-9).ceil().max(1.0) as usize;
        for k in 1..=n {
            lines.push(if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 });
        }
        lo = hi;
    }
    lines
}

/// Structured rectangular plate in the `z = 0` plane with its lower-left
/// corner at the origin.
pub fn build_rect_plate(length_mm: f64, width_mm: f64, max_edge_mm: f64) -> Result<TriangleMesh> {
    check_dimensions(length_mm, width_mm, max_edge_mm)?;
    let xs = grid_lines(0.0, length_mm, &[], max_edge_mm);
    let ys = grid_lines(0.0, width_mm, &[], max_edge_mm);
    build_grid_plate(&xs, &ys, Region::Chassis)
}

pub(crate) fn check_dimensions(length_mm: f64, width_mm: f64, max_edge_mm: f64) -> Result<()> {
    let finite = [length_mm, width_mm, max_edge_mm].iter().all(|v| v.is_finite());
    if !finite || length_mm <= 0.0 || width_mm <= 0.0 || max_edge_mm <= 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "plate dimensions must be positive (length {length_mm}, width {width_mm}, cell {max_edge_mm})"
        )));
    }
    if max_edge_mm > length_mm.min(width_mm) + 1e-12 {
        return Err(Error::InvalidGeometry(format!(
            "cell size {max_edge_mm} mm exceeds the smaller plate side {} mm",
            length_mm.min(width_mm)
        )));
    }
    Ok(())
}

/// Tensor-product plate over the given grid lines. Each cell is split along
/// its lower-left to upper-right diagonal.
pub fn build_grid_plate(xs: &[f64], ys: &[f64], region: Region) -> Result<TriangleMesh> {
    if xs.len() < 2 || ys.len() < 2 {
        return Err(Error::InvalidGeometry("plate needs at least one cell".into()));
    }
    let nx = xs.len();
    let mut vertices = Vec::with_capacity(nx * ys.len());
    for &y in ys {
        for &x in xs {
            vertices.push([x, y, 0.0]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * (nx - 1) * (ys.len() - 1));
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let v00 = j * nx + i;
            let v10 = v00 + 1;
            let v01 = v00 + nx;
            let v11 = v01 + 1;
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    let regions = vec![region; triangles.len()];
    TriangleMesh::new(vertices, triangles, regions, Vec::new())
}
