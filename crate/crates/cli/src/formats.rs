//! Text and binary file formats.
//!
//! * `AEROCSM v1 M <M> f <Hz> provenance <tag>` followed by `M` rows of
//!   `re im` pairs.
//! * `AEROTS v1 M <M> fs <Hz> N <n>` followed by little-endian `f64`
//!   samples, channel-major.
//! * `AEROMAP v1 method <tag> f <Hz|band:fc> nx <nx> ny <ny> spacing <m>
//!   origin <x> <y> <z> axes <a> <b> sentinels <n>` followed by `ny` rows
//!   of `nx` values.
//!
//! Floats are written with 17 significant digits so that every reader
//! returns the written value bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use aeromap_core::estimation::{CrossSpectralMatrix, TimeSeries};
use aeromap_core::imaging::SourceMap;
use aeromap_core::nalgebra::DMatrix;
use aeromap_core::scene::FocusGrid;
use aeromap_core::{Frequency, MediumParams, C64};

use crate::error::{CliError, CliResult};

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| CliError::Validation(format!("bad output path {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn malformed(what: &str, detail: impl std::fmt::Display) -> CliError {
    CliError::Format(format!("malformed {what} file: {detail}"))
}

/// Parses `MAGIC v1 key values...` where every key in `layout` appears
/// once, in order, followed by the stated number of values.
fn header_fields<'a>(line: &'a str, magic: &str, what: &str, layout: &[(&str, usize)]) -> CliResult<Vec<Vec<&'a str>>> {
    let mut words = line.split_whitespace();
    if words.next() != Some(magic) || words.next() != Some("v1") {
        return Err(malformed(what, format!("expected '{magic} v1' header")));
    }
    let mut out = Vec::with_capacity(layout.len());
    for &(key, arity) in layout {
        if words.next() != Some(key) {
            return Err(malformed(what, format!("expected key '{key}'")));
        }
        let values: Vec<&str> = words.by_ref().take(arity).collect();
        if values.len() != arity {
            return Err(malformed(what, format!("'{key}' expects {arity} value(s)")));
        }
        out.push(values);
    }
    if let Some(w) = words.next() {
        return Err(malformed(what, format!("unexpected header word '{w}'")));
    }
    Ok(out)
}

fn parse_value<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<T> {
    s.parse().map_err(|_| malformed(what, format!("bad value '{s}'")))
}

const CSM_LAYOUT: [(&str, usize); 3] = [("M", 1), ("f", 1), ("provenance", 1)];
const TS_LAYOUT: [(&str, usize); 3] = [("M", 1), ("fs", 1), ("N", 1)];
const MAP_LAYOUT: [(&str, usize); 8] =
    [("method", 1), ("f", 1), ("nx", 1), ("ny", 1), ("spacing", 1), ("origin", 3), ("axes", 2), ("sentinels", 1)];

pub fn csm_to_string(csm: &CrossSpectralMatrix) -> String {
    let m = csm.size();
    let mut out = format!("AEROCSM v1 M {m} f {} provenance {}\n", csm.freq.hz, csm.provenance);
    for i in 0..m {
        let row: Vec<String> = (0..m).map(|j| format!("{} {}", fmt(csm.entries[(i, j)].re), fmt(csm.entries[(i, j)].im))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Frequency in Hz recorded in a CSM header.
pub fn csm_header_frequency(first_line: &str) -> CliResult<f64> {
    let h = header_fields(first_line, "AEROCSM", "CSM", &CSM_LAYOUT)?;
    parse_value(h[1][0], "CSM")
}

pub fn csm_from_str(text: &str, medium: &MediumParams) -> CliResult<CrossSpectralMatrix> {
    let mut lines = text.lines();
    let h = header_fields(lines.next().unwrap_or(""), "AEROCSM", "CSM", &CSM_LAYOUT)?;
    let m: usize = parse_value(h[0][0], "CSM")?;
    let hz: f64 = parse_value(h[1][0], "CSM")?;
    let provenance = h[2][0].parse().map_err(|e| malformed("CSM", e))?;
    let mut entries = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        let line = lines.next().ok_or_else(|| malformed("CSM", format!("missing row {i}")))?;
        let v: Vec<f64> = line.split_whitespace().map(|t| parse_value(t, "CSM")).collect::<CliResult<_>>()?;
        if v.len() != 2 * m {
            return Err(malformed("CSM", format!("row {i} has {} numbers, expected {}", v.len(), 2 * m)));
        }
        for j in 0..m {
            entries[(i, j)] = C64::new(v[2 * j], v[2 * j + 1]);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(malformed("CSM", "trailing data"));
    }
    Ok(CrossSpectralMatrix::new(Frequency::new(hz, medium)?, entries, provenance)?)
}

pub fn write_csm(path: &Path, csm: &CrossSpectralMatrix) -> CliResult<()> {
    write_atomic(path, csm_to_string(csm).as_bytes())
}

pub fn read_csm(path: &Path, medium: &MediumParams) -> CliResult<CrossSpectralMatrix> {
    csm_from_str(&fs::read_to_string(path)?, medium)
}

pub fn timeseries_to_bytes(ts: &TimeSeries) -> Vec<u8> {
    let header = format!("AEROTS v1 M {} fs {} N {}\n", ts.channels(), ts.fs, ts.len());
    let mut out = header.into_bytes();
    out.reserve(8 * ts.channels() * ts.len());
    for ch in &ts.data {
        for v in ch {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn timeseries_from_bytes(bytes: &[u8]) -> CliResult<TimeSeries> {
    let end = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| malformed("time series", "no header line"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed("time series", "header is not UTF-8"))?;
    let h = header_fields(header, "AEROTS", "time series", &TS_LAYOUT)?;
    let m: usize = parse_value(h[0][0], "time series")?;
    let fs: f64 = parse_value(h[1][0], "time series")?;
    let n: usize = parse_value(h[2][0], "time series")?;
    let body = &bytes[end + 1..];
    if body.len() != 8 * m * n {
        return Err(malformed("time series", format!("{} data bytes, expected {}", body.len(), 8 * m * n)));
    }
    let data = (0..m)
        .map(|ch| {
            body[8 * ch * n..8 * (ch + 1) * n]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect()
        })
        .collect();
    Ok(TimeSeries::new(fs, data)?)
}

pub fn map_to_string(map: &SourceMap) -> String {
    let g = &map.grid;
    let mut out = format!(
        "AEROMAP v1 method {} f {} nx {} ny {} spacing {} origin {} {} {} axes {} {} sentinels {}\n",
        map.method, map.label, g.nx, g.ny, g.spacing, g.origin[0], g.origin[1], g.origin[2], g.axes[0], g.axes[1], map.sentinels
    );
    for row in map.values.chunks(g.nx) {
        let row: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn map_from_str(text: &str) -> CliResult<SourceMap> {
    const W: &str = "map";
    let mut lines = text.lines();
    let h = header_fields(lines.next().unwrap_or(""), "AEROMAP", W, &MAP_LAYOUT)?;
    let method = h[0][0].parse().map_err(|e| malformed(W, e))?;
    let label = h[1][0].parse().map_err(|e| malformed(W, e))?;
    let nx: usize = parse_value(h[2][0], W)?;
    let ny: usize = parse_value(h[3][0], W)?;
    let grid = FocusGrid {
        origin: [parse_value(h[5][0], W)?, parse_value(h[5][1], W)?, parse_value(h[5][2], W)?],
        axes: [parse_value(h[6][0], W)?, parse_value(h[6][1], W)?],
        nx,
        ny,
        spacing: parse_value(h[4][0], W)?,
    };
    let sentinels: usize = parse_value(h[7][0], W)?;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let line = lines.next().ok_or_else(|| malformed(W, format!("missing row {j}")))?;
        let row: Vec<f64> = line.split_whitespace().map(|t| parse_value(t, W)).collect::<CliResult<_>>()?;
        if row.len() != nx {
            return Err(malformed(W, format!("row {j} has {} values, expected {nx}", row.len())));
        }
        values.extend(row);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(malformed(W, "trailing data"));
    }
    Ok(SourceMap { grid, values, method, label, sentinels })
}

pub fn write_map(path: &Path, map: &SourceMap) -> CliResult<()> {
    write_atomic(path, map_to_string(map).as_bytes())
}

pub fn read_map(path: &Path) -> CliResult<SourceMap> {
    map_from_str(&fs::read_to_string(path)?)
}

/// Binary 16-bit graymap of a map normalised to `[0, 1]`; the first image
/// row is the grid row with the largest second coordinate.
pub fn map_to_pgm(map: &SourceMap) -> Vec<u8> {
    let (nx, ny) = (map.grid.nx, map.grid.ny);
    let mut out = format!("P5\n{nx} {ny}\n65535\n").into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v = map.values[j * nx + i];
            let level = if v.is_finite() { (v.clamp(0.0, 1.0) * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&level.to_be_bytes());
        }
    }
    out
}
