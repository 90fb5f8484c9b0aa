//! Fixtures shared by the benchmarks.

use cmlab::geometry::{build_scene, extract_rwg, Preset, RwgBasisSet, SceneConfig, TriangleMesh};
use cmlab::mom::{MomProblem, PortSpec};

/// A meshed preset with its basis, precomputed problem and ports.
pub struct Fixture {
    pub mesh: TriangleMesh,
    pub basis: RwgBasisSet,
    pub problem: MomProblem,
    pub ports: Vec<PortSpec>,
}

impl Fixture {
    pub fn new(preset: Preset, max_edge_mm: f64) -> Self {
        let mesh = build_scene(&SceneConfig::preset(preset, max_edge_mm))
            .expect("preset scenes mesh")
            .mesh;
        let basis = extract_rwg(&mesh).expect("preset scenes have a basis");
        let problem = MomProblem::new(&mesh, &basis).expect("basis is non-empty");
        let ports = PortSpec::from_basis(&basis);
        Fixture { mesh, basis, problem, ports }
    }
}
