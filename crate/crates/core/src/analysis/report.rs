//! Human-readable text and machine CSV for the analysis reports.

use std::fmt;
use std::io::Write;

use crate::analysis::coupling::CouplingReport;
use crate::analysis::dgs::DgsEffect;
use crate::analysis::perturbation::PerturbationReport;
use crate::analysis::Thresholds;
use crate::error::Result;
use crate::geometry::mesh::fmt_sig;

/// `lo-hi;lo-hi` in GHz, empty for no band.
pub fn fmt_bands(bands: &[(f64, f64)]) -> String {
    bands
        .iter()
        .map(|(a, b)| format!("{}-{}", fmt_sig(*a), fmt_sig(*b)))
        .collect::<Vec<_>>()
        .join(";")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn ids(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Thresholds as `key=value` comment lines.
pub fn threshold_comments(th: &Thresholds) -> Vec<String> {
    vec![
        format!("significance={}", fmt_sig(th.significance)),
        format!("null={}", fmt_sig(th.null)),
        format!("center_window={}", fmt_sig(th.center_window)),
        format!("min_correlation={}", fmt_sig(th.min_correlation)),
        format!("min_pairing={}", fmt_sig(th.min_pairing)),
        format!("relocation={}", fmt_sig(th.relocation)),
        format!("reflection_db={}", fmt_sig(th.reflection_db)),
    ]
}

fn comment_lines<W: Write>(w: &mut W, comments: &[String], th: &Thresholds) -> Result<()> {
    for c in comments.iter().chain(&threshold_comments(th)) {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

impl fmt::Display for CouplingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "coupling classification over {}-{} GHz (rank taken at {} GHz)",
            fmt_sig(self.band.0),
            fmt_sig(self.band.1),
            fmt_sig(self.center_freq_ghz)
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "  mode {:>2} (rank {:>2}): {:<13} max MS {} at {} GHz, centre level {} (max {})",
                e.id,
                opt(e.rank_at_center),
                e.class.to_string(),
                fmt_sig(e.max_ms),
                fmt_sig(e.eval_freq_ghz),
                fmt_sig(e.center_level),
                fmt_sig(e.center_max)
            )?;
        }
        Ok(())
    }
}

/// `tracked_id,rank_at_center,class,max_MS,eval_freq_GHz,center_level,center_max`.
pub fn write_coupling_csv<W: Write>(mut w: W, comments: &[String], r: &CouplingReport) -> Result<()> {
    comment_lines(&mut w, comments, &r.thresholds)?;
    writeln!(w, "# band_GHz={}-{}", fmt_sig(r.band.0), fmt_sig(r.band.1))?;
    writeln!(w, "tracked_id,rank_at_center,class,max_MS,eval_freq_GHz,center_level,center_max")?;
    for e in &r.entries {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            e.id,
            opt(e.rank_at_center),
            e.class,
            fmt_sig(e.max_ms),
            fmt_sig(e.eval_freq_ghz),
            fmt_sig(e.center_level),
            fmt_sig(e.center_max)
        )?;
    }
    Ok(())
}

impl fmt::Display for PerturbationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "perturbation of tracked modes (currents at {} GHz)", fmt_sig(self.eval_freq_ghz))?;
        for e in &self.entries {
            writeln!(
                f,
                "  mode {:>2} -> {:>2} (score {}): band [{}] -> [{}], overlap {}, MS deviation {}, element share {} -> {}{}",
                e.baseline_id,
                e.perturbed_id,
                fmt_sig(e.pairing_score),
                fmt_bands(&e.baseline_band),
                fmt_bands(&e.perturbed_band),
                fmt_sig(e.overlap),
                fmt_sig(e.ms_deviation),
                fmt_sig(e.baseline_element_share),
                fmt_sig(e.perturbed_element_share),
                if e.relocated { ", maxima relocated" } else { "" }
            )?;
        }
        writeln!(f, "  lost: {}", ids(&self.lost))?;
        write!(f, "  new: {}", ids(&self.new))?;
        writeln!(f)
    }
}

/// One row per paired mode; unpaired ids are listed in the comments.
pub fn write_perturbation_csv<W: Write>(mut w: W, comments: &[String], r: &PerturbationReport) -> Result<()> {
    comment_lines(&mut w, comments, &r.thresholds)?;
    writeln!(w, "# eval_freq_GHz={}", fmt_sig(r.eval_freq_ghz))?;
    writeln!(w, "# lost={}", ids(&r.lost))?;
    writeln!(w, "# new={}", ids(&r.new))?;
    writeln!(
        w,
        "baseline_id,perturbed_id,pairing_score,baseline_band_GHz,perturbed_band_GHz,overlap,ms_deviation,baseline_element_share,perturbed_element_share,relocated"
    )?;
    for e in &r.entries {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            e.baseline_id,
            e.perturbed_id,
            fmt_sig(e.pairing_score),
            fmt_bands(&e.baseline_band),
            fmt_bands(&e.perturbed_band),
            fmt_sig(e.overlap),
            fmt_sig(e.ms_deviation),
            fmt_sig(e.baseline_element_share),
            fmt_sig(e.perturbed_element_share),
            e.relocated
        )?;
    }
    Ok(())
}

impl fmt::Display for DgsEffect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "slot effect over {}-{} GHz", fmt_sig(self.band.0), fmt_sig(self.band.1))?;
        for c in &self.isolation {
            writeln!(
                f,
                "  S{}{}: worst {} dB -> {} dB (improvement {} dB)",
                c.ports.0,
                c.ports.1,
                fmt_sig(c.worst_before_db),
                fmt_sig(c.worst_after_db),
                fmt_sig(c.improvement_db)
            )?;
        }
        for r in &self.reflection {
            writeln!(
                f,
                "  port {}: matched [{}] -> [{}], overlap {}, centre shift {} GHz",
                r.port,
                fmt_bands(&r.before),
                fmt_bands(&r.after),
                fmt_sig(r.overlap),
                fmt_sig(r.center_shift_ghz)
            )?;
        }
        for m in &self.modes {
            writeln!(
                f,
                "  mode {}: {} -> {} (as {})",
                m.baseline_id,
                m.before,
                opt(m.after),
                opt(m.perturbed_id)
            )?;
        }
        Ok(())
    }
}

/// `port_i,port_j,worst_before_dB,worst_after_dB,improvement_dB`.
pub fn write_dgs_isolation_csv<W: Write>(mut w: W, comments: &[String], d: &DgsEffect) -> Result<()> {
    comment_lines(&mut w, comments, &d.thresholds)?;
    writeln!(w, "# band_GHz={}-{}", fmt_sig(d.band.0), fmt_sig(d.band.1))?;
    writeln!(w, "port_i,port_j,worst_before_dB,worst_after_dB,improvement_dB")?;
    for c in &d.isolation {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.ports.0,
            c.ports.1,
            fmt_sig(c.worst_before_db),
            fmt_sig(c.worst_after_db),
            fmt_sig(c.improvement_db)
        )?;
    }
    Ok(())
}

/// `port,before_band_GHz,after_band_GHz,overlap,center_shift_GHz`.
pub fn write_dgs_reflection_csv<W: Write>(mut w: W, comments: &[String], d: &DgsEffect) -> Result<()> {
    comment_lines(&mut w, comments, &d.thresholds)?;
    writeln!(w, "port,before_band_GHz,after_band_GHz,overlap,center_shift_GHz")?;
    for r in &d.reflection {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.port,
            fmt_bands(&r.before),
            fmt_bands(&r.after),
            fmt_sig(r.overlap),
            fmt_sig(r.center_shift_ghz)
        )?;
    }
    Ok(())
}

/// `baseline_id,before,perturbed_id,after`.
pub fn write_mode_changes_csv<W: Write>(mut w: W, comments: &[String], d: &DgsEffect) -> Result<()> {
    comment_lines(&mut w, comments, &d.thresholds)?;
    writeln!(w, "baseline_id,before,perturbed_id,after")?;
    for m in &d.modes {
        writeln!(w, "{},{},{},{}", m.baseline_id, m.before, opt(m.perturbed_id), opt(m.after))?;
    }
    Ok(())
}
