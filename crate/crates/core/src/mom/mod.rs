//! Free-space EFIE on RWG functions: assembly, driven solves and S-parameters.

pub mod assembly;
pub mod current;
pub mod io;
pub mod potential;
pub mod quadrature;
pub mod solve;
pub mod sparams;

pub use assembly::{assemble_impedance, ImpedanceMatrix, MomProblem, QuadratureOrder};
pub use current::{surface_current, SurfaceCurrent};
pub use solve::{driven_solve, excitation_vector, split_reactance, DrivenSolution, LuSolver, PortSpec, ReactanceSplit};
pub use sparams::{scattering_matrix, sweep_sparams, ScatteringMatrix};

/// Speed of light in mm GHz.
pub const C0_MM_GHZ: f64 = 299.792458;
/// Free-space wave impedance in ohms.
pub const ETA0: f64 = 376.730313668;
/// Default port reference impedance in ohms.
pub const DEFAULT_Z0: f64 = 50.0;

/// Free-space wavenumber in rad/m.
pub fn wavenumber(freq_ghz: f64) -> f64 {
    2.0 * std::f64::consts::PI * freq_ghz * 1e3 / C0_MM_GHZ
}
