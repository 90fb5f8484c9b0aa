use std::collections::HashMap;

use cmlab::geometry::{
    build_rect_plate, build_scene, cut_rect_slot, extract_rwg, ChassisSpec, LoopElementSpec, Preset,
    SceneConfig, SlotAxis, SlotRect, TriangleMesh,
};
use proptest::prelude::*;

/// Edge -> number of triangles using it, counted directly from the triangle list.
fn census(mesh: &TriangleMesh) -> HashMap<(usize, usize), usize> {
    let mut edges = HashMap::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    edges
}

fn euler(mesh: &TriangleMesh) -> i64 {
    mesh.num_vertices() as i64 - census(mesh).len() as i64 + mesh.num_triangles() as i64
}

fn corner_element(x: f64, y: f64) -> LoopElementSpec {
    LoopElementSpec {
        anchor: [0.0, 0.0],
        path: vec![[0.0, y], [-6.0, y], [-6.0, -6.0], [x, -6.0], [x, 0.0]],
        width: 2.0,
        feed_segment: 0,
        short_segment: Some(3),
        max_edge_mm: None,
    }
}

fn preset() -> impl Strategy<Value = Preset> {
    prop::sample::select(Preset::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_configs_mesh_identically(p in preset(), h in 6.0f64..16.0) {
        let config = SceneConfig::preset(p, h);
        let a = build_scene(&config).unwrap();
        let b = build_scene(&config.clone()).unwrap();
        prop_assert_eq!(a.mesh.vertices(), b.mesh.vertices());
        prop_assert_eq!(a.mesh.triangles(), b.mesh.triangles());
        prop_assert_eq!(a.mesh.to_text(&[]), b.mesh.to_text(&[]));
    }

    #[test]
    fn euler_tracks_slot_cuts(
        length in 60.0f64..160.0,
        width in 40.0f64..80.0,
        h in 4.0f64..10.0,
        slots in prop::collection::vec((0.2f64..0.8, 0.2f64..0.8, 1.0f64..3.0, 1.0f64..2.0, any::<bool>()), 0..3),
    ) {
        let mut mesh = build_rect_plate(length, width, h).unwrap();
        prop_assert_eq!(euler(&mesh), 1);
        for (fx, fy, sl, sw, along_y) in slots {
            let slot = SlotRect {
                center: [fx * length, fy * width],
                length: sl * h,
                width: sw * h,
                axis: if along_y { SlotAxis::Y } else { SlotAxis::X },
            };
            // overlapping or outline-touching cuts are allowed to fail
            if let Ok(cut) = cut_rect_slot(&mesh, &slot) {
                mesh = cut;
                let holes = mesh.holes() as i64;
                prop_assert_eq!(euler(&mesh), 1 - holes);
                prop_assert_eq!(mesh.euler_characteristic(), 1 - holes);
            }
        }
    }

    #[test]
    fn basis_count_matches_interior_edges(p in preset(), h in 6.0f64..16.0) {
        let mesh = build_scene(&SceneConfig::preset(p, h)).unwrap().mesh;
        let basis = extract_rwg(&mesh).unwrap();
        let edges = census(&mesh);
        let interior = edges.values().filter(|&&c| c == 2).count();
        prop_assert_eq!(basis.len(), interior);
        prop_assert_eq!(mesh.edge_census().interior, interior);
        for f in basis.functions() {
            prop_assert_eq!(edges[&(f.edge.0, f.edge.1)], 2);
            prop_assert!(f.plus != f.minus);
        }
    }

    #[test]
    fn ports_survive_into_the_basis(
        p in preset(),
        h in 6.0f64..16.0,
    ) {
        let scene = build_scene(&SceneConfig::preset(p, h)).unwrap();
        let basis = extract_rwg(&scene.mesh).unwrap();
        prop_assert_eq!(basis.ports().len(), scene.ports.len());
        for (id, edge) in &scene.ports {
            let n = basis.port_basis(*id).unwrap();
            prop_assert!(n < basis.len());
            prop_assert_eq!(basis.functions()[n].edge, *edge);
        }
    }

    #[test]
    fn custom_elements_keep_their_ports(
        fy in 14.0f64..26.0,
        sx in 24.0f64..40.0,
        h in 5.0f64..10.0,
    ) {
        let config = SceneConfig {
            preset: None,
            max_edge_mm: h,
            chassis: Some(ChassisSpec { length_mm: 120.0, width_mm: 60.0 }),
            elements: vec![corner_element(sx, fy)],
            slots: Vec::new(),
        };
        let scene = build_scene(&config).unwrap();
        let basis = extract_rwg(&scene.mesh).unwrap();
        prop_assert_eq!(scene.ports.len(), 1);
        let n = basis.port_basis(1).unwrap();
        prop_assert_eq!(basis.functions()[n].edge, scene.ports[0].1);
    }
}
