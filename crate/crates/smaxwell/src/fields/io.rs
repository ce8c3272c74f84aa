//! Binary field dumps: one JSON header line, then `components * m^n`
//! little-endian f64 values in row-major site order, component-major.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use super::types::{OneForm, ScalarField};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    n: usize,
    m: usize,
    #[serde(rename = "L")]
    half_extent: f64,
    kind: String,
    components: usize,
}

pub enum FieldDump {
    Scalar(ScalarField),
    OneForm(OneForm),
}

pub fn write_scalar(w: &mut impl Write, field: &ScalarField) -> Result<()> {
    let g = field.grid();
    write_header(w, g, "scalar", 1)?;
    write_values(w, &field.values)?;
    Ok(())
}

pub fn write_one_form(w: &mut impl Write, field: &OneForm) -> Result<()> {
    let g = field.grid();
    write_header(w, g, "oneform", g.dim())?;
    for comp in &field.comps {
        write_values(w, comp)?;
    }
    Ok(())
}

pub fn read_dump(r: &mut impl Read) -> Result<FieldDump> {
    let mut reader = BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::MalformedDump(format!("bad header: {e}")))?;
    let grid = GridSpec::new(header.n, header.m, header.half_extent)
        .map_err(|e| Error::MalformedDump(format!("bad grid in header: {e}")))?;
    let expected = match header.kind.as_str() {
        "scalar" => 1,
        "oneform" => header.n,
        other => {
            return Err(Error::MalformedDump(format!("unknown kind {other:?}")));
        }
    };
    if header.components != expected {
        return Err(Error::MalformedDump(format!(
            "kind {:?} expects {} components, header says {}",
            header.kind, expected, header.components
        )));
    }
    let sites = grid.site_count();
    let mut comps = Vec::with_capacity(expected);
    for c in 0..expected {
        let mut values = vec![0.0f64; sites];
        let mut buf = [0u8; 8];
        for (i, v) in values.iter_mut().enumerate() {
            reader.read_exact(&mut buf).map_err(|_| {
                Error::MalformedDump(format!(
                    "truncated payload: component {c}, value {i} of {sites}"
                ))
            })?;
            *v = f64::from_le_bytes(buf);
        }
        comps.push(values);
    }
    let mut extra = [0u8; 1];
    if reader.read(&mut extra)? != 0 {
        return Err(Error::MalformedDump("trailing bytes after payload".into()));
    }
    Ok(match header.kind.as_str() {
        "scalar" => FieldDump::Scalar(ScalarField::from_values(grid, comps.pop().unwrap())),
        _ => FieldDump::OneForm(OneForm::from_comps(grid, comps)),
    })
}

pub fn write_scalar_file(path: &Path, field: &ScalarField) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_scalar(&mut f, field)
}

pub fn write_one_form_file(path: &Path, field: &OneForm) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_one_form(&mut f, field)
}

pub fn read_dump_file(path: &Path) -> Result<FieldDump> {
    let mut f = std::fs::File::open(path)?;
    read_dump(&mut f)
}

fn write_header(w: &mut impl Write, g: GridSpec, kind: &str, components: usize) -> Result<()> {
    let header = Header {
        n: g.dim(),
        m: g.sites_per_axis(),
        half_extent: g.half_extent(),
        kind: kind.to_string(),
        components,
    };
    let line = serde_json::to_string(&header).expect("header serialization");
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

fn write_values(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
