use std::path::Path;

use cmlab::analysis::report::{
    fmt_bands, write_coupling_csv, write_dgs_isolation_csv, write_dgs_reflection_csv, write_mode_changes_csv,
    write_perturbation_csv,
};
use cmlab::analysis::{
    classify_coupling_modes, current_null_map, dgs_effect, mode_changes, pair_modes, perturbation_report,
    write_null_map, ModalStudy,
};
use cmlab::cma::io::{write_eigencurrent, write_modes_csv};
use cmlab::cma::radiating_band;
use cmlab::geometry::{build_scene, extract_rwg, RwgBasisSet, Scene};
use cmlab::mom::io::{write_field, write_sparams_csv};
use cmlab::mom::{driven_solve, excitation_vector, surface_current, sweep_sparams, MomProblem, PortSpec, ScatteringMatrix};
use cmlab::{c64, Error, Result};

use crate::config::RunConfig;
use crate::output::{header, OutDir};

/// Options shared by every subcommand.
pub struct Options<'a> {
    pub out: Option<&'a Path>,
    pub freq: Option<f64>,
}

fn out_dir(config: &RunConfig, opts: &Options) -> Result<OutDir> {
    OutDir::create(opts.out.unwrap_or(&config.out))
}

fn scene_of(config: &RunConfig) -> Result<(Scene, RwgBasisSet)> {
    let scene = build_scene(&config.scene)?;
    let basis = extract_rwg(&scene.mesh)?;
    Ok((scene, basis))
}

fn ports_of(config: &RunConfig, basis: &RwgBasisSet) -> Vec<PortSpec> {
    PortSpec::from_basis(basis)
        .into_iter()
        .map(|p| PortSpec { z0: config.z0, ..p })
        .collect()
}

pub fn mesh(config: &RunConfig, opts: &Options) -> Result<()> {
    let (scene, basis) = scene_of(config)?;
    let out = out_dir(config, opts)?;
    let comments = header(&[config]);
    out.write("mesh.txt", |w| scene.mesh.write_text(w, &comments))?;
    println!("scene {}", scene.name);
    println!("vertices {}", scene.mesh.num_vertices());
    println!("triangles {}", scene.mesh.num_triangles());
    println!("basis functions (N) {}", basis.len());
    println!("ports {}", scene.ports.len());
    Ok(())
}

fn study_of(config: &RunConfig) -> Result<ModalStudy> {
    let freqs = config.freqs()?;
    let (scene, _) = scene_of(config)?;
    ModalStudy::run(&scene.mesh, &freqs, config.n_modes, config.thresholds.min_correlation)
        .map_err(|e| e.context(format!("scene {}", scene.name)))
}

fn band_within(config: &RunConfig, freqs: &[f64]) -> bool {
    let [lo, hi] = config.band;
    lo >= freqs[0] - 1e-9 && hi <= freqs[freqs.len() - 1] + 1e-9 && freqs.iter().any(|&f| f >= lo - 1e-9 && f <= hi + 1e-9)
}

pub fn modes(config: &RunConfig, opts: &Options) -> Result<()> {
    let study = study_of(config)?;
    let out = out_dir(config, opts)?;
    let comments = header(&[config]);
    let freqs = study.freqs().to_vec();
    out.write("modes.csv", |w| write_modes_csv(w, &comments, &study.tracked))?;

    let th = &config.thresholds;
    println!("radiating bands (MS >= {:.4}):", th.significance);
    for t in &study.tracked.tracks {
        let band = radiating_band(t, &freqs, th.significance);
        let shown = if band.is_empty() { "none".to_string() } else { fmt_bands(&band) };
        println!("  mode {}: {shown} GHz", t.id);
    }

    let k = study.tracked.nearest_sample(opts.freq.unwrap_or(config.field_freq_ghz));
    let mut field_comments = comments.clone();
    field_comments.push(format!("freq_GHz {}", freqs[k]));
    for t in &study.tracked.tracks {
        let Some(p) = t.points[k] else { continue };
        let mut c = field_comments.clone();
        c.push(format!("tracked_id {} MS {}", t.id, p.significance));
        out.write(&format!("eigencurrent_mode{}.txt", t.id), |w| {
            write_eigencurrent(w, &c, &study.mesh, &study.basis, &study.sweep[k], p.raw_index)
        })?;
        let current = study.mode_current(t.id, k).expect("present at the sample")?;
        if let Ok(map) = current_null_map(&study.mesh, &current, th.null, th.center_window) {
            c.push(format!("center_level {} center_null {}", map.center_level, map.center_null));
            out.write(&format!("nullmap_mode{}.txt", t.id), |w| write_null_map(w, &c, &study.mesh, &current, &map))?;
        }
    }

    if band_within(config, &freqs) {
        let report = classify_coupling_modes(&study, (config.band[0], config.band[1]), th)?;
        print!("{report}");
        out.write("coupling.csv", |w| write_coupling_csv(w, &comments, &report))?;
        out.write_text("coupling.txt", &comments, &report.to_string())?;
    } else {
        println!("analysis band {:?} GHz lies outside the sweep; coupling classification skipped", config.band);
    }
    Ok(())
}

fn driven_sweep(config: &RunConfig) -> Result<(Scene, RwgBasisSet, MomProblem, Vec<PortSpec>, Vec<ScatteringMatrix>)> {
    let freqs = config.freqs()?;
    let (scene, basis) = scene_of(config)?;
    let ports = ports_of(config, &basis);
    if ports.is_empty() {
        return Err(Error::InvalidPort(format!("driven requires ports; scene {} has none", scene.name)));
    }
    let problem = MomProblem::new(&scene.mesh, &basis)?;
    let sweep = sweep_sparams(&problem, &basis, &ports, &freqs)?;
    Ok((scene, basis, problem, ports, sweep))
}

pub fn driven(config: &RunConfig, opts: &Options) -> Result<()> {
    let (scene, basis, problem, ports, sweep) = driven_sweep(config)?;
    let out = out_dir(config, opts)?;
    let comments = header(&[config]);
    out.write("sparams.csv", |w| write_sparams_csv(w, &comments, &sweep))?;
    let worst_reciprocity = sweep.iter().map(|s| s.reciprocity_error()).fold(0.0, f64::max);
    let worst_gain = sweep.iter().map(|s| s.max_singular_value()).fold(0.0, f64::max);
    println!("ports {}, samples {}", ports.len(), sweep.len());
    println!("max |S - S^T| {worst_reciprocity:.3e}, max singular value {worst_gain:.6}");

    if let Some(f) = opts.freq {
        let zm = problem.assemble(f).map_err(|e| e.context(format!("at {f} GHz")))?;
        for port in &ports {
            let v = excitation_vector(&basis, port, c64::new(1.0, 0.0))?;
            let sol = driven_solve(&zm, &v).map_err(|e| e.context(format!("port {} at {f} GHz", port.port_id)))?;
            let current = surface_current(&scene.mesh, &basis, &sol.current)?;
            let mut c = comments.clone();
            c.push(format!("freq_GHz {f} driven_port {} volts 1", port.port_id));
            out.write(&format!("current_port{}.txt", port.port_id), |w| write_field(w, &c, &scene.mesh, &current, None))?;
        }
    }
    Ok(())
}

pub fn compare(a: &RunConfig, b: &RunConfig, opts: &Options) -> Result<()> {
    if a.freqs()? != b.freqs()? {
        return Err(Error::InvalidInput("grid mismatch: both configs must sweep the same frequencies".into()));
    }
    let base = study_of(a)?;
    let pert = study_of(b)?;
    let th = &a.thresholds;
    let out = out_dir(a, opts)?;
    let comments = header(&[a, b]);

    let pairing = pair_modes(&base, &pert, th.min_pairing)?;
    let report = perturbation_report(&base, &pert, &pairing, th, opts.freq.unwrap_or(a.field_freq_ghz))?;
    print!("{report}");
    out.write("perturbation.csv", |w| write_perturbation_csv(w, &comments, &report))?;
    out.write_text("perturbation.txt", &comments, &report.to_string())?;

    let (sa, sb) = (scene_of(a)?.0, scene_of(b)?.0);
    let ids = |s: &Scene| s.ports.iter().map(|p| p.0).collect::<Vec<_>>();
    if sa.ports.is_empty() || ids(&sa) != ids(&sb) {
        println!(
            "port sets differ ({} vs {} ports); slot comparison skipped",
            sa.ports.len(),
            sb.ports.len()
        );
        return Ok(());
    }
    let before = driven_sweep(a)?.4;
    let after = driven_sweep(b)?.4;
    let band = (a.band[0], a.band[1]);
    let mut effect = dgs_effect(&before, &after, band, th)?;
    let freqs = base.freqs();
    if band_within(a, freqs) {
        let cb = classify_coupling_modes(&base, band, th)?;
        let ca = classify_coupling_modes(&pert, band, th)?;
        effect.modes = mode_changes(&cb, &ca, &pairing);
    }
    print!("{effect}");
    out.write("dgs_isolation.csv", |w| write_dgs_isolation_csv(w, &comments, &effect))?;
    out.write("dgs_reflection.csv", |w| write_dgs_reflection_csv(w, &comments, &effect))?;
    out.write("dgs_modes.csv", |w| write_mode_changes_csv(w, &comments, &effect))?;
    out.write_text("dgs.txt", &comments, &effect.to_string())?;
    Ok(())
}
