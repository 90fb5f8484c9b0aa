//! Characteristic modes of the EFIE operator: the pencil `X J = lambda R J`,
//! frequency sweeps, tracking and modal expansion.

pub mod expand;
pub mod io;
pub mod modes;
pub mod sweep;
pub mod track;

pub use expand::{modal_expand, ModalExpansion};
pub use modes::{
    characteristic_angle, modal_significance, solve_modes, ModeSet, Normalization, DEFAULT_MODES,
    SIGNIFICANCE_THRESHOLD,
};
pub use sweep::{check_grid, frequency_grid, modes_at, sweep_modes, sweep_problem};
pub use track::{
    assign_min_cost, radiating_band, track_modes, Track, TrackPoint, TrackedModes, DEFAULT_MIN_CORRELATION,
};
