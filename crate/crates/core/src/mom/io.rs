//! Matrix dumps, S-parameter tables and current field files.

use std::io::{BufRead, Read, Write};

use faer::{c64, Mat};

use crate::error::{Error, Result};
use crate::geometry::mesh::fmt_sig;
use crate::geometry::TriangleMesh;
use crate::mom::assembly::ImpedanceMatrix;
use crate::mom::current::SurfaceCurrent;
use crate::mom::sparams::ScatteringMatrix;

/// Binary `zmat v1` dump: header line, `N` as u64, frequency as f64, then
/// `N^2` (re, im) pairs row-major, all little-endian.
pub fn write_zmat<W: Write>(mut w: W, zm: &ImpedanceMatrix) -> Result<()> {
    let n = zm.n();
    w.write_all(b"zmat v1\n")?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&zm.freq_ghz.to_le_bytes())?;
    for i in 0..n {
        for j in 0..n {
            let z = zm.z[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_zmat<R: Read>(mut r: R) -> Result<ImpedanceMatrix> {
    let mut header = [0u8; 8];
    r.read_exact(&mut header)?;
    if &header != b"zmat v1\n" {
        return Err(Error::Parse("missing `zmat v1` header".into()));
    }
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let freq_ghz = f64::from_le_bytes(word);
    let mut z = Mat::<c64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            r.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            r.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            z[(i, j)] = c64::new(re, im);
        }
    }
    ImpedanceMatrix::from_matrix(z, freq_ghz)
}

fn port_label(i: u32, j: u32) -> String {
    if i < 10 && j < 10 {
        format!("S{i}{j}")
    } else {
        format!("S{i}_{j}")
    }
}

/// Pairs `(i, j)` in column order: the driven port `j` is the outer loop,
/// so the table reads S11, S21, ..., S12, S22, ...
pub fn sparam_pairs(port_ids: &[u32]) -> Vec<(usize, usize)> {
    let p = port_ids.len();
    (0..p).flat_map(|j| (0..p).map(move |i| (i, j))).collect()
}

/// CSV with `#` comment lines, a header row, and one row per frequency.
pub fn write_sparams_csv<W: Write>(mut w: W, comments: &[String], sweep: &[ScatteringMatrix]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let Some(first) = sweep.first() else {
        writeln!(w, "freq_GHz")?;
        return Ok(());
    };
    let ids = &first.port_ids;
    let pairs = sparam_pairs(ids);
    let mut header = vec!["freq_GHz".to_string()];
    for &(i, j) in &pairs {
        let label = port_label(ids[i], ids[j]);
        header.push(format!("{label}_dB"));
        header.push(format!("{label}_phase_deg"));
    }
    writeln!(w, "{}", header.join(","))?;
    for s in sweep {
        if &s.port_ids != ids {
            return Err(Error::InvalidInput("port set changes within the sweep".into()));
        }
        let mut row = vec![fmt_sig(s.freq_ghz)];
        for &(i, j) in &pairs {
            let v = s.s[(i, j)];
            row.push(fmt_sig(20.0 * v.norm().log10()));
            row.push(fmt_sig(v.arg().to_degrees()));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Numeric table of an S-parameter CSV: header names and rows, comments skipped.
pub fn read_csv_table<R: BufRead>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut header = None;
    let mut rows = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if header.is_none() {
            header = Some(line.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>());
            continue;
        }
        let row = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((header.unwrap_or_default(), rows))
}

/// Per-triangle field file: `field v1`, `#` comments, count, then lines
/// `tri cx cy cz Jx_re Jx_im Jy_re Jy_im Jz_re Jz_im |J| region` with an
/// optional trailing `mask` column (0/1) and an optional normalised value
/// before it.
pub fn write_field<W: Write>(
    mut w: W,
    comments: &[String],
    mesh: &TriangleMesh,
    current: &SurfaceCurrent,
    extra: Option<(&[f64], &[bool])>,
) -> Result<()> {
    if current.len() != mesh.num_triangles() {
        return Err(Error::InvalidInput("field size does not match the mesh".into()));
    }
    writeln!(w, "field v1")?;
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let columns = if extra.is_some() {
        "tri cx cy cz Jx_re Jx_im Jy_re Jy_im Jz_re Jz_im mag region normalized mask"
    } else {
        "tri cx cy cz Jx_re Jx_im Jy_re Jy_im Jz_re Jz_im mag region"
    };
    writeln!(w, "# columns: {columns}")?;
    writeln!(w, "{}", mesh.num_triangles())?;
    for t in 0..mesh.num_triangles() {
        let c = mesh.triangle_centroid(t);
        let v = current.vectors[t];
        let mut line = format!(
            "{t} {} {} {} {} {} {} {} {} {} {} {}",
            fmt_sig(c[0]),
            fmt_sig(c[1]),
            fmt_sig(c[2]),
            fmt_sig(v[0].re),
            fmt_sig(v[0].im),
            fmt_sig(v[1].re),
            fmt_sig(v[1].im),
            fmt_sig(v[2].re),
            fmt_sig(v[2].im),
            fmt_sig(current.magnitude[t]),
            mesh.regions()[t]
        );
        if let Some((values, mask)) = extra {
            line.push_str(&format!(" {} {}", fmt_sig(values[t]), u8::from(mask[t])));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zmat_round_trip() {
        let z = Mat::from_fn(3, 3, |i, j| c64::new(i as f64 + 0.5, -(j as f64) * 1e-7));
        let zm = ImpedanceMatrix::from_matrix(z, 2.45).unwrap();
        let mut buf = Vec::new();
        write_zmat(&mut buf, &zm).unwrap();
        assert_eq!(buf.len(), 8 + 8 + 8 + 9 * 16);
        let back = read_zmat(buf.as_slice()).unwrap();
        assert_eq!(back.freq_ghz, 2.45);
        assert_eq!(back.z, zm.z);
    }

    #[test]
    fn sparam_columns() {
        let s = Mat::from_fn(2, 2, |i, j| c64::new(if i == j { 0.1 } else { 0.01 }, 0.0));
        let sm = ScatteringMatrix {
            s: s.clone(),
            y: s,
            freq_ghz: 2.4,
            port_ids: vec![1, 2],
            z0: vec![50.0, 50.0],
        };
        let mut buf = Vec::new();
        write_sparams_csv(&mut buf, &["hash x".into()], &[sm]).unwrap();
        let (header, rows) = read_csv_table(buf.as_slice()).unwrap();
        assert_eq!(
            header,
            [
                "freq_GHz", "S11_dB", "S11_phase_deg", "S21_dB", "S21_phase_deg", "S12_dB", "S12_phase_deg", "S22_dB",
                "S22_phase_deg"
            ]
        );
        assert_eq!(rows[0][0], 2.4);
        assert!((rows[0][1] + 20.0).abs() < 1e-9);
        assert!((rows[0][3] + 40.0).abs() < 1e-9);
    }
}
