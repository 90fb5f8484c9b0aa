use crate::error::{Error, Result};
use crate::mom::ScatteringMatrix;

/// `20 log10 |S_ij|` between two distinct ports, addressed by port id.
pub fn isolation_db(s: &ScatteringMatrix, i: u32, j: u32) -> Result<f64> {
    if i == j {
        return Err(Error::InvalidInput(format!("isolation needs two ports; S{i}{i} is a reflection")));
    }
    let v = s
        .get(i, j)
        .ok_or_else(|| Error::InvalidPort(format!("port pair ({i}, {j}) is not in the scattering matrix")))?;
    Ok(20.0 * v.norm().log10())
}

/// `20 log10 |S_ii|`.
pub fn reflection_db(s: &ScatteringMatrix, i: u32) -> Result<f64> {
    let v = s.get(i, i).ok_or_else(|| Error::InvalidPort(format!("port {i} is not in the scattering matrix")))?;
    Ok(20.0 * v.norm().log10())
}
