//! Atomic file output and the snapshot container.
//!
//! A snapshot is a text header of `key value` lines closed by `end`,
//! followed by `u` and then `ω` as row-major (x-major) little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use prandtl_core::{GridConfig, SpectralGrid, State};

use crate::CliError;

const MAGIC: &str = "prandtl-gevrey snapshot";

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Serializes a state.
pub fn encode_snapshot(state: &State) -> Vec<u8> {
    let cfg = state.grid.config();
    let header = format!(
        "{MAGIC}\nnx {}\nny {}\ny_max {:e}\nt {:e}\ngrading_c {:e}\nx_period {:e}\nfar_field {:e}\nend\n",
        cfg.nx, cfg.ny, cfg.y_max, state.t, cfg.grading, cfg.x_period, state.far_field
    );
    let mut out = header.into_bytes();
    for v in state.u.iter().chain(state.omega.iter()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a snapshot; `grading_c` and `x_period` fall back to `defaults` when absent.
pub fn decode_snapshot(bytes: &[u8], defaults: &GridConfig) -> Result<State, CliError> {
    let bad = |m: &str| CliError::Io(format!("malformed snapshot: {m}"));
    let mut pos = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("unterminated header"))?;
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| bad("header is not UTF-8"))?;
        pos += nl + 1;
        if line == "end" {
            break;
        }
        lines.push(line.to_string());
    }
    if lines.first().map(String::as_str) != Some(MAGIC) {
        return Err(bad("missing magic line"));
    }
    let mut cfg = defaults.clone();
    let (mut nx, mut ny, mut y_max, mut t, mut far) = (None, None, None, None, 0.0);
    for l in &lines[1..] {
        let (k, v) = l.split_once(' ').ok_or_else(|| bad(l))?;
        let f = || v.parse::<f64>().map_err(|_| bad(l));
        match k {
            "nx" => nx = Some(v.parse::<usize>().map_err(|_| bad(l))?),
            "ny" => ny = Some(v.parse::<usize>().map_err(|_| bad(l))?),
            "y_max" => y_max = Some(f()?),
            "t" => t = Some(f()?),
            "grading_c" => cfg.grading = f()?,
            "x_period" => cfg.x_period = f()?,
            "far_field" => far = f()?,
            _ => return Err(bad(&format!("unknown header key `{k}`"))),
        }
    }
    cfg.nx = nx.ok_or_else(|| bad("nx missing"))?;
    cfg.ny = ny.ok_or_else(|| bad("ny missing"))?;
    cfg.y_max = y_max.ok_or_else(|| bad("y_max missing"))?;
    let t = t.ok_or_else(|| bad("t missing"))?;
    let n = cfg.nx * cfg.ny;
    let body = &bytes[pos..];
    if body.len() != 16 * n {
        return Err(bad(&format!("expected {} data bytes, found {}", 16 * n, body.len())));
    }
    let vals: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let u = Array2::from_shape_vec((cfg.nx, cfg.ny), vals[..n].to_vec()).map_err(|e| bad(&e.to_string()))?;
    let w = Array2::from_shape_vec((cfg.nx, cfg.ny), vals[n..].to_vec()).map_err(|e| bad(&e.to_string()))?;
    let grid = Arc::new(SpectralGrid::new(&cfg)?);
    Ok(State::from_parts(grid, t, u, w, far)?)
}

/// Formats one CSV row with shortest round-trip floats.
pub fn csv_row(values: &[Option<f64>]) -> String {
    let cells: Vec<String> = values
        .iter()
        .map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default())
        .collect();
    cells.join(",")
}

/// A finite float as JSON, anything else as `null`.
pub fn json_num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(x).map_or(serde_json::Value::Null, serde_json::Value::Number)
}
