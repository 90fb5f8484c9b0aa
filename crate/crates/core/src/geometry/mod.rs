//! Meshes for the chassis, strip elements and slot cuts, and the RWG basis.

pub mod mesh;
pub mod plate;
pub mod rwg;
pub mod scene;
pub mod slot;
pub mod strip;

pub use mesh::{Edge, EdgeCensus, PortEdge, Region, SlotSnap, TriangleMesh};
pub use plate::{build_grid_plate, build_rect_plate, grid_lines};
pub use rwg::{extract_rwg, RwgBasisSet, RwgFunction};
pub use scene::{build_scene, ChassisSpec, Preset, Scene, SceneConfig};
pub use slot::{cut_rect_slot, SlotAxis, SlotRect};
pub use strip::{add_strip_loop, build_strip, LoopElementSpec};
