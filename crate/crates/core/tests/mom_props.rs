use cmlab::cma::frequency_grid;
use cmlab::geometry::{build_rect_plate, build_scene, build_strip, extract_rwg, LoopElementSpec, Preset, SceneConfig};
use cmlab::mom::{assemble_impedance, driven_solve, scattering_matrix, split_reactance, MomProblem, PortSpec};
use cmlab::c64;
use proptest::prelude::*;

fn norm(v: &[c64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn complex() -> impl Strategy<Value = c64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| c64::new(re, im))
}

/// Series resonance of a centre-fed strip dipole from the zero crossing of Im Zin.
fn dipole_resonance(length: f64, cell: f64) -> f64 {
    let spec = LoopElementSpec {
        anchor: [0.0, 0.0],
        path: vec![[0.0, 0.0], [length, 0.0]],
        width: 2.0,
        feed_segment: 0,
        short_segment: None,
        max_edge_mm: Some(cell),
    };
    let mesh = build_strip(&spec, 1).unwrap();
    let basis = extract_rwg(&mesh).unwrap();
    let problem = MomProblem::new(&mesh, &basis).unwrap();
    let ports = PortSpec::from_basis(&basis);
    let freqs = frequency_grid(1.9, 2.7, 0.02).unwrap();
    let zin: Vec<f64> = freqs
        .iter()
        .map(|&f| {
            let s = scattering_matrix(&problem.assemble(f).unwrap(), &basis, &ports).unwrap();
            (c64::new(1.0, 0.0) / s.y[(0, 0)]).im
        })
        .collect();
    let k = (0..zin.len() - 1).find(|&k| zin[k] < 0.0 && zin[k + 1] >= 0.0).expect("resonance in range");
    freqs[k] + (freqs[k + 1] - freqs[k]) * -zin[k] / (zin[k + 1] - zin[k])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn impedance_is_symmetric_with_psd_resistance(
        length in 20.0f64..70.0,
        width in 10.0f64..40.0,
        freq in 0.5f64..3.0,
    ) {
        let mesh = build_rect_plate(length, width, 8.0).unwrap();
        let basis = extract_rwg(&mesh).unwrap();
        prop_assume!(!basis.is_empty());
        let zm = assemble_impedance(&mesh, &basis, freq).unwrap();
        prop_assert_eq!(zm.asymmetry(), 0.0);
        let split = split_reactance(&zm);
        prop_assert!(!split.indefinite, "min eigenvalue {} tolerance {}", split.min_eigenvalue, split.tolerance);
    }

    #[test]
    fn driven_solve_is_linear(
        freq in 1.0f64..3.0,
        seed in prop::collection::vec((complex(), complex()), 64),
        a in complex(),
        b in complex(),
    ) {
        let mesh = build_rect_plate(60.0, 30.0, 7.5).unwrap();
        let basis = extract_rwg(&mesh).unwrap();
        let zm = assemble_impedance(&mesh, &basis, freq).unwrap();
        let n = zm.n();
        let v1: Vec<c64> = (0..n).map(|i| seed[i % seed.len()].0).collect();
        let v2: Vec<c64> = (0..n).map(|i| seed[(3 * i + 1) % seed.len()].1).collect();
        let mixed: Vec<c64> = v1.iter().zip(&v2).map(|(x, y)| a * x + b * y).collect();
        let i1 = driven_solve(&zm, &v1).unwrap().current;
        let i2 = driven_solve(&zm, &v2).unwrap().current;
        let im = driven_solve(&zm, &mixed).unwrap().current;
        let sum: Vec<c64> = i1.iter().zip(&i2).map(|(x, y)| a * x + b * y).collect();
        let diff: Vec<c64> = im.iter().zip(&sum).map(|(x, y)| x - y).collect();
        let scale = norm(&sum).max(norm(&im));
        prop_assume!(scale > 0.0);
        prop_assert!(norm(&diff) <= 1e-10 * scale, "relative error {}", norm(&diff) / scale);
    }

    #[test]
    fn multiport_scenes_are_reciprocal_and_passive(
        p in prop::sample::select(vec![Preset::Mimo2ShortEdge, Preset::Mimo4, Preset::Mimo4Dgs]),
        h in 10.0f64..16.0,
        freq in 1.0f64..3.0,
    ) {
        let scene = build_scene(&SceneConfig::preset(p, h)).unwrap();
        let basis = extract_rwg(&scene.mesh).unwrap();
        let zm = assemble_impedance(&scene.mesh, &basis, freq).unwrap();
        let s = scattering_matrix(&zm, &basis, &PortSpec::from_basis(&basis)).unwrap();
        prop_assert!(s.reciprocity_error() < 1e-6, "reciprocity error {}", s.reciprocity_error());
        prop_assert!(s.max_singular_value() <= 1.0 + 1e-3, "sigma max {}", s.max_singular_value());
    }
}

#[test]
fn halving_the_cell_moves_dipole_resonance_under_3_percent() {
    let coarse = dipole_resonance(62.5, 2.0);
    let fine = dipole_resonance(62.5, 1.0);
    let change = (fine - coarse).abs() / fine;
    assert!(change < 0.03, "{coarse:.4} GHz -> {fine:.4} GHz ({:.2}%)", 100.0 * change);
}
