//! Field containers: a little-endian binary format and a plain-text format
//! for small hand-written cases.
//!
//! Binary layout: magic `ECFIELD1`, then `u32` dimension, output dimension,
//! polynomial degree `D` and grid flag; when a grid is present `f64` half-width,
//! `u32` size and `u32` mode (0 compact, 1 periodic). The payload holds the
//! coefficients of every monomial of degree ≤ `D` per component, followed by
//! the grid samples per component.

use super::grid::{BoundaryMode, GridField, GridSpec};
use super::poly::{monomial_count, PolynomialField};
use super::CompositeField;
use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"ECFIELD1";

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn write_binary(f: &CompositeField, w: &mut impl Write) -> Result<()> {
    let n = f.n();
    let deg = f.poly().degree();
    w.write_all(MAGIC)?;
    for v in [n as u32, f.out_dim() as u32, deg as u32, f.grid().is_some() as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    if let Some(g) = f.grid() {
        let s = g.spec();
        w.write_all(&s.half_width.to_le_bytes())?;
        w.write_all(&(s.m as u32).to_le_bytes())?;
        let mode = match s.mode {
            BoundaryMode::Compact => 0u32,
            BoundaryMode::Periodic => 1,
        };
        w.write_all(&mode.to_le_bytes())?;
    }
    let keep = monomial_count(n, deg);
    for c in 0..f.out_dim() {
        for v in &f.poly().component_coeffs(c)[..keep] {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    if let Some(g) = f.grid() {
        for c in g.comps() {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_binary(r: &mut impl Read) -> Result<CompositeField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(fmt_err("bad magic"));
    }
    let n = read_u32(r)? as usize;
    let out = read_u32(r)? as usize;
    let deg = read_u32(r)? as usize;
    let has_grid = read_u32(r)? != 0;
    if n != 2 && n != 3 {
        return Err(fmt_err(format!("unsupported dimension {n}")));
    }
    if deg > 2 {
        return Err(fmt_err(format!("polynomial degree {deg} above two")));
    }
    if out == 0 || out > 9 {
        return Err(fmt_err(format!("unsupported output dimension {out}")));
    }
    let spec = if has_grid {
        let l = read_f64(r)?;
        let m = read_u32(r)? as usize;
        let mode = match read_u32(r)? {
            0 => BoundaryMode::Compact,
            1 => BoundaryMode::Periodic,
            k => return Err(fmt_err(format!("unknown boundary mode {k}"))),
        };
        Some(GridSpec::new(n, l, m, mode)?)
    } else {
        None
    };
    let keep = monomial_count(n, deg);
    let full = monomial_count(n, 2);
    let mut coeffs = vec![0.0; out * full];
    for c in 0..out {
        for i in 0..keep {
            coeffs[c * full + i] = read_f64(r)?;
        }
    }
    let poly = PolynomialField::from_coeffs(n, out, coeffs)?;
    let grid = match spec {
        None => None,
        Some(spec) => {
            let mut comps = Vec::with_capacity(out);
            for _ in 0..out {
                let mut c = vec![0.0; spec.len()];
                for v in c.iter_mut() {
                    *v = read_f64(r)?;
                }
                comps.push(c);
            }
            Some(GridField::from_parts(spec, comps)?)
        }
    };
    CompositeField::new(poly, grid)
}

pub fn save(f: &CompositeField, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_binary(f, &mut buf)?;
    crate::fields::write_atomic(path, &buf)
}

/// Loads either container; text files are recognized by their first byte.
pub fn load(path: &Path) -> Result<CompositeField> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&mut bytes.as_slice())
    } else {
        let text = String::from_utf8(bytes).map_err(|_| fmt_err("neither binary nor UTF-8 text"))?;
        parse_text(&text)
    }
}

/// Plain-text container.
///
/// ```text
/// n = 2
/// out = 2
/// poly = 0 1 0 0 0 0 ; 0 0 -1 0 0 0
/// grid = 8.0 16 compact
/// data = <out * m^n numbers>
/// ```
///
/// `poly` lists each component's coefficients in the order
/// `1, x_1..x_n, x_i x_j (i ≤ j)`; trailing zeros may be omitted.
/// `grid` and `data` are optional and `data` may span several lines.
pub fn parse_text(text: &str) -> Result<CompositeField> {
    let mut n = None;
    let mut out = None;
    let mut poly_rows: Option<Vec<Vec<f64>>> = None;
    let mut spec = None;
    let mut data: Option<Vec<f64>> = None;
    let num = |s: &str| s.parse::<f64>().map_err(|_| fmt_err(format!("bad number `{s}`")));
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(d) = data.as_mut() {
            if !line.contains('=') {
                for tok in line.split_whitespace() {
                    d.push(num(tok)?);
                }
                continue;
            }
        }
        let (key, value) = line.split_once('=').ok_or_else(|| fmt_err(format!("expected key = value: `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "n" => n = Some(value.parse::<usize>().map_err(|_| fmt_err("bad n"))?),
            "out" => out = Some(value.parse::<usize>().map_err(|_| fmt_err("bad out"))?),
            "poly" => {
                let rows: Result<Vec<Vec<f64>>> = value
                    .split(';')
                    .map(|row| row.split_whitespace().map(num).collect())
                    .collect();
                poly_rows = Some(rows?);
            }
            "grid" => {
                let t: Vec<&str> = value.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(fmt_err("grid = <half-width> <m> <compact|periodic>"));
                }
                let mode = match t[2] {
                    "compact" => BoundaryMode::Compact,
                    "periodic" => BoundaryMode::Periodic,
                    other => return Err(fmt_err(format!("unknown mode `{other}`"))),
                };
                let m = t[1].parse::<usize>().map_err(|_| fmt_err("bad grid size"))?;
                spec = Some((num(t[0])?, m, mode));
            }
            "data" => {
                let mut d = Vec::new();
                for tok in value.split_whitespace() {
                    d.push(num(tok)?);
                }
                data = Some(d);
            }
            other => return Err(fmt_err(format!("unknown key `{other}`"))),
        }
    }
    let n = n.ok_or_else(|| fmt_err("missing n"))?;
    let out = out.ok_or_else(|| fmt_err("missing out"))?;
    if n != 2 && n != 3 {
        return Err(fmt_err(format!("unsupported dimension {n}")));
    }
    let full = monomial_count(n, 2);
    let mut coeffs = vec![0.0; out * full];
    if let Some(rows) = poly_rows {
        if rows.len() != out {
            return Err(fmt_err(format!("poly has {} rows, expected {out}", rows.len())));
        }
        for (c, row) in rows.iter().enumerate() {
            if row.len() > full {
                return Err(fmt_err("too many polynomial coefficients"));
            }
            coeffs[c * full..c * full + row.len()].copy_from_slice(row);
        }
    }
    let poly = PolynomialField::from_coeffs(n, out, coeffs)?;
    let grid = match spec {
        None => None,
        Some((l, m, mode)) => {
            let spec = GridSpec::new(n, l, m, mode)?;
            let d = data.unwrap_or_default();
            if d.len() != out * spec.len() {
                return Err(fmt_err(format!("data has {} values, expected {}", d.len(), out * spec.len())));
            }
            let comps = d.chunks(spec.len()).map(|c| c.to_vec()).collect();
            Some(GridField::new(spec, comps)?)
        }
    };
    CompositeField::new(poly, grid)
}

pub fn to_text(f: &CompositeField) -> String {
    let mut s = format!("n = {}\nout = {}\n", f.n(), f.out_dim());
    let rows: Vec<String> = (0..f.out_dim())
        .map(|c| {
            f.poly().component_coeffs(c).iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
        })
        .collect();
    s.push_str(&format!("poly = {}\n", rows.join(" ; ")));
    if let Some(g) = f.grid() {
        let sp = g.spec();
        let mode = match sp.mode {
            BoundaryMode::Compact => "compact",
            BoundaryMode::Periodic => "periodic",
        };
        s.push_str(&format!("grid = {:e} {} {}\ndata =\n", sp.half_width, sp.m, mode));
        for c in g.comps() {
            for row in c.chunks(sp.m) {
                s.push_str(&row.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" "));
                s.push('\n');
            }
        }
    }
    s
}
