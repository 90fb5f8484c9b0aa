use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cmlab(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cmlab"));
    cmd.args(args);
    if let Some(n) = threads {
        cmd.env("CMLAB_THREADS", n.to_string());
    }
    cmd.output().expect("cmlab runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, name: &str, body: &str) -> String {
        let path = self.dir.path().join(name);
        fs::write(&path, body).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn scene_config(scene: &str, grid: (f64, f64, f64)) -> String {
    format!(
        "{scene}\n[grid]\nstart = {}\nstop = {}\nstep = {}\n",
        grid.0, grid.1, grid.2
    )
}

fn preset(name: &str, h: f64) -> String {
    format!("[scene]\npreset = \"{name}\"\nmax_edge_mm = {h}\n")
}

const BARE_10MM: &str = "[scene]\nmax_edge_mm = 10.0\n[scene.chassis]\nlength_mm = 120.0\nwidth_mm = 60.0\n";

/// Numeric CSV table (comments skipped): header and rows.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<f64> {
    let (header, rows) = table(path);
    let k = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn mesh_reports_counts_and_is_reproducible() {
    let ws = Workspace::new();
    let cfg = ws.config("bare.toml", &scene_config(BARE_10MM, (1.0, 1.0, 0.1)));
    let a = ws.out("a");
    let b = ws.out("b");
    let o = cmlab(&["mesh", "--config", &cfg, "--out", a.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("triangles 144"));
    assert!(stdout(&o).contains("basis functions (N) 198"));
    cmlab(&["mesh", "--config", &cfg, "--out", b.to_str().unwrap()], None);
    let text = fs::read(a.join("mesh.txt")).unwrap();
    assert_eq!(text, fs::read(b.join("mesh.txt")).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(text.starts_with("mesh v1\n# cmlab "));
    assert!(text.contains("config-sha256 "));
}

#[test]
fn invalid_slot_is_a_usage_error() {
    let ws = Workspace::new();
    let scene = format!("{BARE_10MM}[[scene.slots]]\ncenter = [60.0, 30.0]\nlength = 200.0\nwidth = 4.0\n");
    let cfg = ws.config("slot.toml", &scene_config(&scene, (1.0, 1.0, 0.1)));
    let o = cmlab(&["mesh", "--config", &cfg, "--out", ws.out("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("invalid-geometry"));
}

#[test]
fn config_errors_exit_with_two() {
    let ws = Workspace::new();
    let empty = ws.config("empty.toml", &scene_config(BARE_10MM, (1.0, 0.5, 0.1)));
    let o = cmlab(&["modes", "--config", &empty, "--out", ws.out("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let unknown = ws.config("unknown.toml", &format!("colour = 3\n{}", scene_config(BARE_10MM, (1.0, 1.0, 0.1))));
    assert_eq!(cmlab(&["mesh", "--config", &unknown], None).status.code(), Some(2));
    assert_eq!(cmlab(&["mesh", "--config", "/nonexistent/run.toml"], None).status.code(), Some(2));
    assert_eq!(cmlab(&["mesh"], None).status.code(), Some(2));
    let ok = ws.config("ok.toml", &scene_config(BARE_10MM, (1.0, 1.0, 0.1)));
    assert_eq!(cmlab(&["mesh", "--config", &ok, "--out", ws.out("t").to_str().unwrap()], Some(0)).status.code(), Some(2));
}

#[test]
fn modes_on_the_bare_chassis() {
    let ws = Workspace::new();
    let low = ws.config("low.toml", &scene_config(BARE_10MM, (0.5, 1.0, 0.05)));
    let out = ws.out("low");
    let o = cmlab(&["modes", "--config", &low, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let radiating = stdout(&o).lines().filter(|l| l.trim_start().starts_with("mode ") && !l.contains("none")).count();
    assert_eq!(radiating, 1, "{}", stdout(&o));
    let (header, rows) = table(&out.join("modes.csv"));
    assert_eq!(header, ["freq_GHz", "tracked_id", "lambda", "MS", "char_angle_deg"]);
    assert_eq!(rows.len(), 11 * 6);
    assert!(out.join("eigencurrent_mode1.txt").exists());
    assert!(out.join("nullmap_mode1.txt").exists());

    let single = ws.config("single.toml", &scene_config(BARE_10MM, (2.0, 2.0, 0.1)));
    let out = ws.out("single");
    let o = cmlab(&["modes", "--config", &single, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let significant = column(&out.join("modes.csv"), "MS").iter().filter(|&&m| m >= 1.0 / 2f64.sqrt()).count();
    assert!(significant >= 2);
}

#[test]
fn driven_requires_ports() {
    let ws = Workspace::new();
    let cfg = ws.config("bare.toml", &scene_config(BARE_10MM, (1.0, 1.0, 0.1)));
    let o = cmlab(&["driven", "--config", &cfg, "--out", ws.out("o").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("driven requires ports"));
}

#[test]
fn driven_two_port_scene_is_reciprocal() {
    let ws = Workspace::new();
    let cfg = ws.config("two.toml", &scene_config(&preset("mimo2-short-edge", 10.0), (2.3, 2.5, 0.1)));
    let out = ws.out("two");
    let o = cmlab(&["driven", "--config", &cfg, "--out", out.to_str().unwrap(), "--freq", "2.4"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = out.join("sparams.csv");
    let (header, _) = table(&csv);
    assert_eq!(&header[..5], ["freq_GHz", "S11_dB", "S11_phase_deg", "S21_dB", "S21_phase_deg"]);
    let (s12, s21) = (column(&csv, "S12_dB"), column(&csv, "S21_dB"));
    let (p12, p21) = (column(&csv, "S12_phase_deg"), column(&csv, "S21_phase_deg"));
    for k in 0..s12.len() {
        let a = 10f64.powf(s12[k] / 20.0);
        let b = 10f64.powf(s21[k] / 20.0);
        let d = (a * a + b * b - 2.0 * a * b * (p12[k] - p21[k]).to_radians().cos()).max(0.0).sqrt();
        assert!(d < 1e-6, "S12 and S21 differ by {d}");
    }
    assert!(out.join("current_port1.txt").exists() && out.join("current_port2.txt").exists());
}

#[test]
fn driven_four_port_isolation_is_negative() {
    let ws = Workspace::new();
    let cfg = ws.config("four.toml", &scene_config(&preset("mimo4", 10.0), (2.4, 2.4, 0.1)));
    let out = ws.out("four");
    let o = cmlab(&["driven", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let s31 = column(&out.join("sparams.csv"), "S31_dB");
    assert!(s31.iter().all(|v| v.is_finite() && *v < 0.0));
}

#[test]
fn compare_identical_scenes_is_the_identity() {
    let ws = Workspace::new();
    let cfg = ws.config("bare.toml", &scene_config(BARE_10MM, (0.8, 1.2, 0.1)));
    let out = ws.out("cmp");
    let o = cmlab(&["compare", "--config", &cfg, "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = out.join("perturbation.csv");
    assert!(column(&csv, "overlap").iter().all(|&v| v == 1.0));
    assert!(column(&csv, "ms_deviation").iter().all(|&v| v == 0.0));
    let (_, rows) = table(&csv);
    assert!(rows.iter().all(|r| r.last().unwrap() == "false"));
    assert!(stdout(&o).contains("slot comparison skipped"));
}

#[test]
fn compare_chassis_with_one_element() {
    let ws = Workspace::new();
    let grid = (0.8, 1.2, 0.1);
    let a = ws.config("chassis.toml", &scene_config(&preset("chassis", 10.0), grid));
    let b = ws.config("mimo1.toml", &scene_config(&preset("mimo1", 10.0), grid));
    let out = ws.out("cmp");
    let o = cmlab(&["compare", "--config", &a, "--config", &b, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&out.join("perturbation.csv"));
    let dev = header.iter().position(|h| h == "ms_deviation").unwrap();
    let mode1 = rows.iter().find(|r| r[0] == "1").expect("mode 1 paired");
    assert!(mode1[dev].parse::<f64>().unwrap() > 0.0);

    let c = ws.config("shifted.toml", &scene_config(&preset("mimo1", 10.0), (0.8, 1.3, 0.1)));
    let o = cmlab(&["compare", "--config", &a, "--config", &c, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid mismatch"));
}

#[test]
fn compare_slot_reports_every_pair() {
    let ws = Workspace::new();
    let grid = (2.3, 2.5, 0.1);
    let a = ws.config("mimo4.toml", &format!("band = [2.3, 2.5]\n{}", scene_config(&preset("mimo4", 10.0), grid)));
    let b = ws.config("dgs.toml", &format!("band = [2.3, 2.5]\n{}", scene_config(&preset("mimo4-dgs", 10.0), grid)));
    let out = ws.out("dgs");
    let o = cmlab(&["compare", "--config", &a, "--config", &b, "--out", out.to_str().unwrap()], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = out.join("dgs_isolation.csv");
    let (_, rows) = table(&csv);
    assert_eq!(rows.len(), 6);
    assert!(column(&csv, "improvement_dB").iter().all(|v| v.is_finite()));
    let (_, refl) = table(&out.join("dgs_reflection.csv"));
    assert_eq!(refl.len(), 4);
    assert!(out.join("dgs_modes.csv").exists() && out.join("dgs.txt").exists());
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let ws = Workspace::new();
    let cfg = ws.config("bare.toml", &scene_config(&preset("mimo1", 10.0), (2.2, 2.6, 0.1)));
    let runs: Vec<PathBuf> = [1usize, 3]
        .iter()
        .map(|&n| {
            let out = ws.out(&format!("t{n}"));
            let o = cmlab(&["modes", "--config", &cfg, "--out", out.to_str().unwrap()], Some(n));
            assert!(o.status.success(), "{}", stderr(&o));
            let o = cmlab(&["driven", "--config", &cfg, "--out", out.to_str().unwrap()], Some(n));
            assert!(o.status.success(), "{}", stderr(&o));
            out
        })
        .collect();
    for name in ["modes.csv", "coupling.csv", "sparams.csv", "eigencurrent_mode1.txt"] {
        assert_eq!(fs::read(runs[0].join(name)).unwrap(), fs::read(runs[1].join(name)).unwrap(), "{name}");
    }
}
