use std::io::Write;

use crate::cma::modes::{characteristic_angle, ModeSet};
use crate::cma::track::TrackedModes;
use crate::error::Result;
use crate::geometry::{RwgBasisSet, TriangleMesh};
use crate::geometry::mesh::fmt_sig;
use crate::mom::current::surface_current_real;
use crate::mom::io::write_field;

/// `freq_GHz,tracked_id,lambda,MS,char_angle_deg`, one row per sample and
/// tracked mode present there, ordered by frequency then id.
pub fn write_modes_csv<W: Write>(mut w: W, comments: &[String], tracked: &TrackedModes) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "freq_GHz,tracked_id,lambda,MS,char_angle_deg")?;
    for (k, f) in tracked.freqs.iter().enumerate() {
        for t in &tracked.tracks {
            if let Some(p) = t.points[k] {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    fmt_sig(*f),
                    t.id,
                    fmt_sig(p.lambda),
                    fmt_sig(p.significance),
                    fmt_sig(characteristic_angle(p.lambda))
                )?;
            }
        }
    }
    Ok(())
}

/// Field file for raw mode `m` of `modes`.
pub fn write_eigencurrent<W: Write>(
    w: W,
    comments: &[String],
    mesh: &TriangleMesh,
    basis: &RwgBasisSet,
    modes: &ModeSet,
    m: usize,
) -> Result<()> {
    let current = surface_current_real(mesh, basis, &modes.current(m))?;
    write_field(w, comments, mesh, &current, None)
}
