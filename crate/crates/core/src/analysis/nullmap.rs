use std::io::Write;

use crate::error::{Error, Result};
use crate::geometry::{Region, TriangleMesh};
use crate::mom::current::SurfaceCurrent;
use crate::mom::io::write_field;

/// Normalized chassis current of one field and its low-current mask.
#[derive(Debug, Clone, PartialEq)]
pub struct NullMap {
    /// Chassis triangles, in mesh order.
    pub triangles: Vec<usize>,
    /// `|J| / max |J|` over the chassis, per entry of `triangles`.
    pub values: Vec<f64>,
    /// `values < threshold`.
    pub mask: Vec<bool>,
    pub threshold: f64,
    /// Positions in `triangles` of the central window.
    pub window: Vec<usize>,
    /// Area-weighted mean normalized value over the central window.
    pub center_level: f64,
    /// Largest normalized value inside the central window.
    pub center_max: f64,
    /// `center_level < threshold`: the window sits on a current null.
    pub center_null: bool,
    /// Every window triangle is masked.
    pub window_masked: bool,
}

impl NullMap {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Full-length columns for a field file; non-chassis triangles carry
    /// `NaN` and an unset mask.
    pub fn field_columns(&self, num_triangles: usize) -> (Vec<f64>, Vec<bool>) {
        let mut values = vec![f64::NAN; num_triangles];
        let mut mask = vec![false; num_triangles];
        for (k, &t) in self.triangles.iter().enumerate() {
            values[t] = self.values[k];
            mask[t] = self.mask[k];
        }
        (values, mask)
    }
}

/// Centred rectangle covering `fraction` of the chassis bounding box, with
/// the box's aspect ratio: `[x_min, x_max, y_min, y_max]`.
pub fn center_window(bbox: [f64; 4], fraction: f64) -> [f64; 4] {
    let s = fraction.sqrt();
    let (cx, cy) = ((bbox[0] + bbox[1]) / 2.0, (bbox[2] + bbox[3]) / 2.0);
    let (hx, hy) = (s * (bbox[1] - bbox[0]) / 2.0, s * (bbox[3] - bbox[2]) / 2.0);
    [cx - hx, cx + hx, cy - hy, cy + hy]
}

/// Null map of `current` over the chassis region. The central window holds
/// the chassis triangles whose centroid lies in [`center_window`]; on meshes
/// too coarse for that, the triangle nearest the centre stands in.
pub fn current_null_map(
    mesh: &TriangleMesh,
    current: &SurfaceCurrent,
    threshold: f64,
    window_fraction: f64,
) -> Result<NullMap> {
    if current.len() != mesh.num_triangles() {
        return Err(Error::InvalidInput("current does not match the mesh".into()));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("window fraction must be in (0, 1], got {window_fraction}")));
    }
    if !threshold.is_finite() {
        return Err(Error::InvalidInput(format!("null threshold must be finite, got {threshold}")));
    }
    let triangles: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| mesh.regions()[t] == Region::Chassis)
        .collect();
    let bbox = mesh
        .region_bbox(Region::Chassis)
        .ok_or_else(|| Error::InvalidInput("mesh has no chassis region".into()))?;
    let max = triangles.iter().map(|&t| current.magnitude[t]).fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::UndefinedNormalization("chassis current is zero everywhere".into()));
    }
    let values: Vec<f64> = triangles.iter().map(|&t| current.magnitude[t] / max).collect();
    let mask: Vec<bool> = values.iter().map(|&v| v < threshold).collect();
    let w = center_window(bbox, window_fraction);
    let centroid = |t: usize| mesh.triangle_centroid(t);
    let mut window: Vec<usize> = (0..triangles.len())
        .filter(|&k| {
            let c = centroid(triangles[k]);
            c[0] >= w[0] && c[0] <= w[1] && c[1] >= w[2] && c[1] <= w[3]
        })
        .collect();
    if window.is_empty() {
        let (cx, cy) = ((bbox[0] + bbox[1]) / 2.0, (bbox[2] + bbox[3]) / 2.0);
        let d = |k: usize| {
            let c = centroid(triangles[k]);
            (c[0] - cx).powi(2) + (c[1] - cy).powi(2)
        };
        let nearest = (0..triangles.len()).min_by(|&a, &b| d(a).total_cmp(&d(b))).expect("chassis is non-empty");
        window.push(nearest);
    }
    let area = |k: usize| mesh.triangle_area(triangles[k]);
    let window_area: f64 = window.iter().map(|&k| area(k)).sum();
    let center_level = window.iter().map(|&k| area(k) * values[k]).sum::<f64>() / window_area;
    let center_max = window.iter().map(|&k| values[k]).fold(0.0, f64::max);
    let window_masked = window.iter().all(|&k| mask[k]);
    Ok(NullMap {
        triangles,
        values,
        mask,
        threshold,
        window,
        center_level,
        center_max,
        center_null: center_level < threshold,
        window_masked,
    })
}

/// Field file with the normalized value and mask appended.
pub fn write_null_map<W: Write>(
    w: W,
    comments: &[String],
    mesh: &TriangleMesh,
    current: &SurfaceCurrent,
    map: &NullMap,
) -> Result<()> {
    let (values, mask) = map.field_columns(mesh.num_triangles());
    write_field(w, comments, mesh, current, Some((&values, &mask)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_rect_plate;
    use faer::c64;

    fn field(mesh: &TriangleMesh, f: impl Fn([f64; 3]) -> f64) -> SurfaceCurrent {
        let magnitude: Vec<f64> = (0..mesh.num_triangles()).map(|t| f(mesh.triangle_centroid(t))).collect();
        let vectors = magnitude.iter().map(|&m| [c64::new(m, 0.0), c64::new(0.0, 0.0), c64::new(0.0, 0.0)]).collect();
        SurfaceCurrent { vectors, magnitude }
    }

    #[test]
    fn uniform_current_has_no_nulls() {
        let mesh = build_rect_plate(120.0, 60.0, 10.0).unwrap();
        let map = current_null_map(&mesh, &field(&mesh, |_| 3.0), 0.1, 0.1).unwrap();
        assert_eq!(map.masked_count(), 0);
        assert!(!map.center_null);
        assert!(map.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_on_the_window_is_a_center_null() {
        let mesh = build_rect_plate(120.0, 60.0, 5.0).unwrap();
        let w = center_window([0.0, 120.0, 0.0, 60.0], 0.1);
        let inside = |c: [f64; 3]| c[0] >= w[0] && c[0] <= w[1] && c[1] >= w[2] && c[1] <= w[3];
        let map = current_null_map(&mesh, &field(&mesh, |c| if inside(c) { 0.0 } else { 1.0 }), 0.1, 0.1).unwrap();
        assert!(map.center_null);
        assert_eq!(map.center_level, 0.0);
        assert!(!map.window.is_empty());
    }

    #[test]
    fn line_null_through_the_centre() {
        // |J| grows quadratically away from x = 60
        let mesh = build_rect_plate(120.0, 60.0, 2.0).unwrap();
        let map = current_null_map(&mesh, &field(&mesh, |c| ((c[0] - 60.0) / 40.0).powi(2).min(1.0)), 0.1, 0.1).unwrap();
        assert!(map.center_null);
        assert!(!map.window_masked);
        assert!(map.center_max > 0.1 && map.center_level < map.center_max);
    }

    #[test]
    fn zero_field_is_undefined() {
        let mesh = build_rect_plate(20.0, 10.0, 5.0).unwrap();
        let err = current_null_map(&mesh, &field(&mesh, |_| 0.0), 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::UndefinedNormalization(_)));
    }

    #[test]
    fn window_area_fraction() {
        let w = center_window([0.0, 120.0, 0.0, 60.0], 0.1);
        let area = (w[1] - w[0]) * (w[3] - w[2]);
        assert!((area - 720.0).abs() < 1e-9);
        assert!(((w[0] + w[1]) / 2.0 - 60.0).abs() < 1e-12);
    }
}
