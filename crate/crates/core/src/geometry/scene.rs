//! Scene description and the canonical chassis/MIMO scene ladder.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::mesh::{Edge, TriangleMesh};
use crate::geometry::plate::{build_grid_plate, check_dimensions, grid_lines};
use crate::geometry::slot::{cut_rect_slot, SlotAxis, SlotRect};
use crate::geometry::strip::{add_strip_loop, LoopElementSpec};
use crate::geometry::mesh::Region;

/// Named scenes: bare chassis, one, two and four corner elements, and the
/// four-element board with the central slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Preset {
    #[serde(rename = "chassis", alias = "chassis-only")]
    Chassis,
    #[serde(rename = "mimo1")]
    Mimo1,
    #[serde(rename = "mimo2-short-edge")]
    Mimo2ShortEdge,
    #[serde(rename = "mimo4")]
    Mimo4,
    #[serde(rename = "mimo4-dgs")]
    Mimo4Dgs,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Chassis,
        Preset::Mimo1,
        Preset::Mimo2ShortEdge,
        Preset::Mimo4,
        Preset::Mimo4Dgs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Chassis => "chassis",
            Preset::Mimo1 => "mimo1",
            Preset::Mimo2ShortEdge => "mimo2-short-edge",
            Preset::Mimo4 => "mimo4",
            Preset::Mimo4Dgs => "mimo4-dgs",
        }
    }

    fn corners(self) -> &'static [Corner] {
        match self {
            Preset::Chassis => &[],
            Preset::Mimo1 => &[Corner::LowerLeft],
            Preset::Mimo2ShortEdge => &[Corner::LowerLeft, Corner::UpperLeft],
            Preset::Mimo4 | Preset::Mimo4Dgs => &Corner::ALL,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s || (s == "chassis-only" && *p == Preset::Chassis))
            .ok_or_else(|| Error::InvalidInput(format!("unknown scene preset `{s}`")))
    }
}

/// Chassis length along x and width along y (mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChassisSpec {
    pub length_mm: f64,
    pub width_mm: f64,
}

impl Default for ChassisSpec {
    fn default() -> Self {
        ChassisSpec {
            length_mm: CHASSIS_LENGTH,
            width_mm: CHASSIS_WIDTH,
        }
    }
}

fn default_max_edge() -> f64 {
    6.0
}

/// Scene configuration: either a preset or explicit geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(default = "default_max_edge")]
    pub max_edge_mm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chassis: Option<ChassisSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub elements: Vec<LoopElementSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<SlotRect>,
}

impl SceneConfig {
    pub fn preset(preset: Preset, max_edge_mm: f64) -> Self {
        SceneConfig {
            preset: Some(preset),
            max_edge_mm,
            chassis: None,
            elements: Vec::new(),
            slots: Vec::new(),
        }
    }

    /// Short label used in error messages and reports.
    pub fn label(&self) -> String {
        match self.preset {
            Some(p) => p.name().to_string(),
            None => "custom".to_string(),
        }
    }
}

/// A meshed scene and its ports in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub name: String,
    pub mesh: TriangleMesh,
    pub ports: Vec<(u32, Edge)>,
}

pub const CHASSIS_LENGTH: f64 = 120.0;
pub const CHASSIS_WIDTH: f64 = 60.0;

/// Dimensions of the canonical corner loop, drawn for the lower-left corner
/// and mirrored onto the others. The strip leaves the short edge `x = 0` at
/// the feed, wraps around the corner outside the chassis and is shorted onto
/// the long edge `y = 0`. The strip is about half a wavelength long near
/// 2.4 GHz, which puts a low-impedance loop resonance there in the PEC model.
pub mod canonical {
    /// Strip width (mm).
    pub const STRIP_WIDTH: f64 = 2.0;
    /// Distance from the chassis outline to the strip centre line (mm).
    pub const CLEARANCE: f64 = 6.0;
    /// Centre line of the feed leg (mm from y = 0).
    pub const FEED_Y: f64 = 20.0;
    /// Centre line of the shorting leg (mm from x = 0).
    pub const SHORT_X: f64 = 31.0;
    /// Central slot across the chassis.
    pub const SLOT_LENGTH: f64 = 56.0;
    pub const SLOT_WIDTH: f64 = 4.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corner {
    LowerLeft,
    UpperLeft,
    LowerRight,
    UpperRight,
}

impl Corner {
    /// Port numbering: 1 and 2 on the short edge `x = 0`, 3 and 4 on `x = L`;
    /// 1 and 3 share the long edge `y = 0`.
    const ALL: [Corner; 4] = [Corner::LowerLeft, Corner::UpperLeft, Corner::LowerRight, Corner::UpperRight];

    fn map(self, p: [f64; 2], chassis: ChassisSpec) -> [f64; 2] {
        let (mx, my) = match self {
            Corner::LowerLeft => (false, false),
            Corner::UpperLeft => (false, true),
            Corner::LowerRight => (true, false),
            Corner::UpperRight => (true, true),
        };
        [
            if mx { chassis.length_mm - p[0] } else { p[0] },
            if my { chassis.width_mm - p[1] } else { p[1] },
        ]
    }
}

fn canonical_element(corner: Corner, chassis: ChassisSpec, max_edge: f64) -> LoopElementSpec {
    use canonical::*;
    let local = [
        [0.0, FEED_Y],
        [-CLEARANCE, FEED_Y],
        [-CLEARANCE, -CLEARANCE],
        [SHORT_X, -CLEARANCE],
        [SHORT_X, 0.0],
    ];
    LoopElementSpec {
        anchor: [0.0, 0.0],
        path: local.iter().map(|&p| corner.map(p, chassis)).collect(),
        width: STRIP_WIDTH,
        feed_segment: 0,
        short_segment: Some(3),
        max_edge_mm: Some(max_edge.min(STRIP_WIDTH.max(max_edge / 2.0))),
    }
}

fn canonical_slot(chassis: ChassisSpec) -> SlotRect {
    SlotRect {
        center: [chassis.length_mm / 2.0, chassis.width_mm / 2.0],
        length: canonical::SLOT_LENGTH,
        width: canonical::SLOT_WIDTH,
        axis: SlotAxis::Y,
    }
}

/// Resolved geometry of a scene before meshing.
struct Layout {
    chassis: ChassisSpec,
    elements: Vec<LoopElementSpec>,
    slots: Vec<SlotRect>,
    x_breaks: Vec<f64>,
    y_breaks: Vec<f64>,
}

fn element_breaks(e: &LoopElementSpec, chassis: ChassisSpec, xb: &mut Vec<f64>, yb: &mut Vec<f64>) {
    let ends = [e.path[0], e.path[e.path.len() - 1]];
    let half = e.width / 2.0;
    for p in ends {
        let p = [p[0] + e.anchor[0], p[1] + e.anchor[1]];
        let on_x_edge = p[0].abs() < 1e-9 || (p[0] - chassis.length_mm).abs() < 1e-9;
        let on_y_edge = p[1].abs() < 1e-9 || (p[1] - chassis.width_mm).abs() < 1e-9;
        if on_x_edge {
            yb.extend([p[1] - half, p[1] + half]);
        }
        if on_y_edge {
            xb.extend([p[0] - half, p[0] + half]);
        }
    }
}

fn slot_breaks(s: &SlotRect, xb: &mut Vec<f64>, yb: &mut Vec<f64>) {
    let b = s.bounds();
    xb.extend([b[0], b[1]]);
    yb.extend([b[2], b[3]]);
}

fn resolve(config: &SceneConfig) -> Result<Layout> {
    let mut xb = Vec::new();
    let mut yb = Vec::new();
    match config.preset {
        Some(preset) => {
            if config.chassis.is_some() || !config.elements.is_empty() || !config.slots.is_empty() {
                return Err(Error::InvalidInput(
                    "a preset scene cannot also list chassis, elements or slots".into(),
                ));
            }
            let chassis = ChassisSpec::default();
            // All presets share one chassis grid so that chassis basis
            // functions line up across the scene ladder.
            for corner in Corner::ALL {
                element_breaks(&canonical_element(corner, chassis, config.max_edge_mm), chassis, &mut xb, &mut yb);
            }
            slot_breaks(&canonical_slot(chassis), &mut xb, &mut yb);
            let elements = preset
                .corners()
                .iter()
                .map(|&c| canonical_element(c, chassis, config.max_edge_mm))
                .collect();
            let slots = if preset == Preset::Mimo4Dgs {
                vec![canonical_slot(chassis)]
            } else {
                Vec::new()
            };
            Ok(Layout { chassis, elements, slots, x_breaks: xb, y_breaks: yb })
        }
        None => {
            let chassis = config.chassis.unwrap_or_default();
            let elements: Vec<LoopElementSpec> = config
                .elements
                .iter()
                .map(|e| LoopElementSpec {
                    max_edge_mm: e.max_edge_mm.or(Some(config.max_edge_mm.min(e.width.max(config.max_edge_mm / 2.0)))),
                    ..e.clone()
                })
                .collect();
            for e in &elements {
                if e.path.is_empty() {
                    return Err(Error::InvalidGeometry("element path is empty".into()));
                }
                element_breaks(e, chassis, &mut xb, &mut yb);
            }
            for s in &config.slots {
                slot_breaks(s, &mut xb, &mut yb);
            }
            Ok(Layout {
                chassis,
                elements,
                slots: config.slots.clone(),
                x_breaks: xb,
                y_breaks: yb,
            })
        }
    }
}

/// Builds the mesh of a scene. Identical configurations give identical
/// meshes; port `k` belongs to the `k`-th element.
pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    let name = config.label();
    let wrap = |e: Error| e.context(format!("scene {name}"));
    let layout = resolve(config).map_err(wrap)?;
    let chassis = layout.chassis;
    check_dimensions(chassis.length_mm, chassis.width_mm, config.max_edge_mm).map_err(wrap)?;
    let xs = grid_lines(0.0, chassis.length_mm, &layout.x_breaks, config.max_edge_mm);
    let ys = grid_lines(0.0, chassis.width_mm, &layout.y_breaks, config.max_edge_mm);
    let mut mesh = build_grid_plate(&xs, &ys, Region::Chassis).map_err(wrap)?;
    for (k, element) in layout.elements.iter().enumerate() {
        mesh = add_strip_loop(&mesh, element, k as u32 + 1)
            .map_err(|e| e.context(format!("element {}", k + 1)))
            .map_err(wrap)?;
    }
    for (k, slot) in layout.slots.iter().enumerate() {
        mesh = cut_rect_slot(&mesh, slot)
            .map_err(|e| e.context(format!("slot {}", k + 1)))
            .map_err(wrap)?;
    }
    let mut ports: Vec<(u32, Edge)> = mesh.port_edges().iter().map(|p| (p.port_id, p.edge)).collect();
    ports.sort_unstable_by_key(|p| p.0);
    Ok(Scene { name, mesh, ports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chassis_preset_has_no_ports() {
        let scene = build_scene(&SceneConfig::preset(Preset::Chassis, 6.0)).unwrap();
        assert!(scene.ports.is_empty());
        assert!(scene.mesh.regions().iter().all(|&r| r == Region::Chassis));
    }

    #[test]
    fn port_counts_follow_element_counts() {
        for (preset, ports) in [
            (Preset::Mimo1, 1),
            (Preset::Mimo2ShortEdge, 2),
            (Preset::Mimo4, 4),
            (Preset::Mimo4Dgs, 4),
        ] {
            let scene = build_scene(&SceneConfig::preset(preset, 6.0)).unwrap();
            assert_eq!(scene.ports.len(), ports, "{preset}");
            let ids: Vec<u32> = scene.ports.iter().map(|p| p.0).collect();
            assert_eq!(ids, (1..=ports as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn dgs_scene_has_one_more_hole() {
        let plain = build_scene(&SceneConfig::preset(Preset::Mimo4, 6.0)).unwrap();
        let dgs = build_scene(&SceneConfig::preset(Preset::Mimo4Dgs, 6.0)).unwrap();
        assert_eq!(dgs.mesh.holes(), plain.mesh.holes() + 1);
        assert!(dgs.mesh.num_triangles() < plain.mesh.num_triangles());
        assert_eq!(dgs.mesh.snaps().len(), 1);
    }

    #[test]
    fn short_edge_ports_sit_on_the_same_short_edge() {
        let scene = build_scene(&SceneConfig::preset(Preset::Mimo2ShortEdge, 6.0)).unwrap();
        let v = scene.mesh.vertices();
        let ys: Vec<f64> = scene
            .ports
            .iter()
            .map(|(_, e)| {
                assert!(v[e.0][0] <= 0.0 && v[e.1][0] <= 0.0);
                (v[e.0][1] + v[e.1][1]) / 2.0
            })
            .collect();
        // one element near each corner of the x = 0 edge
        assert!(ys[0] < CHASSIS_WIDTH / 2.0 && ys[1] > CHASSIS_WIDTH / 2.0);
    }

    #[test]
    fn deterministic() {
        let a = build_scene(&SceneConfig::preset(Preset::Mimo4Dgs, 6.0)).unwrap();
        let b = build_scene(&SceneConfig::preset(Preset::Mimo4Dgs, 6.0)).unwrap();
        assert_eq!(a.mesh.to_text(&[]), b.mesh.to_text(&[]));
    }

    #[test]
    fn preset_and_explicit_geometry_conflict() {
        let mut cfg = SceneConfig::preset(Preset::Mimo1, 6.0);
        cfg.slots.push(canonical_slot(ChassisSpec::default()));
        assert!(build_scene(&cfg).is_err());
    }

    #[test]
    fn explicit_chassis_only() {
        let cfg = SceneConfig {
            preset: None,
            max_edge_mm: 10.0,
            chassis: Some(ChassisSpec::default()),
            elements: vec![],
            slots: vec![],
        };
        let scene = build_scene(&cfg).unwrap();
        assert_eq!(scene.mesh.num_triangles(), 144);
    }
}
