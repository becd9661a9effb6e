//! CSV files for Wigner grids (`x,p,w`) and readout curves (`tau_s,p_g,p_e`).
//!
//! Floats are written with 17 significant digits so values round-trip exactly.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::readout::ReadoutSample;
use crate::wigner::WignerGrid;

pub const WIGNER_HEADER: [&str; 3] = ["x", "p", "w"];
pub const READOUT_HEADER: [&str; 3] = ["tau_s", "p_g", "p_e"];

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_wigner<W: Write>(out: W, grid: &WignerGrid) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(WIGNER_HEADER)?;
    for (x, p, v) in grid.rows() {
        w.write_record([fmt(x), fmt(p), fmt(v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_readout<W: Write>(out: W, samples: &[ReadoutSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(READOUT_HEADER)?;
    for s in samples {
        w.write_record([fmt(s.tau), fmt(s.p_g), fmt(s.p_e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_wigner_file(path: &Path, grid: &WignerGrid) -> Result<()> {
    write_wigner(std::fs::File::create(path)?, grid)
}

pub fn write_readout_file(path: &Path, samples: &[ReadoutSample]) -> Result<()> {
    write_readout(std::fs::File::create(path)?, samples)
}

fn check_header(found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for (i, name) in expected.iter().enumerate() {
        match found.get(i) {
            Some(f) if f.trim() == *name => {}
            Some(f) => return Err(Error::Csv(format!("column {} should be '{name}', found '{f}'", i + 1))),
            None => return Err(Error::Csv(format!("missing column '{name}'"))),
        }
    }
    if found.len() > expected.len() {
        return Err(Error::Csv(format!("unexpected extra column '{}'", &found[expected.len()])));
    }
    Ok(())
}

fn parse_rows<R: Read>(input: R, header: &[&str]) -> Result<Vec<[f64; 3]>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(r.headers()?, header)?;
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let mut vals = [0.0; 3];
        for (j, v) in vals.iter_mut().enumerate() {
            let field = rec.get(j).ok_or_else(|| Error::Csv(format!("row {}: missing '{}'", i + 2, header[j])))?;
            *v = field
                .trim()
                .parse()
                .map_err(|_| Error::Csv(format!("row {}: '{}' is not a number: {field:?}", i + 2, header[j])))?;
        }
        rows.push(vals);
    }
    Ok(rows)
}

pub fn read_readout<R: Read>(input: R) -> Result<Vec<ReadoutSample>> {
    Ok(parse_rows(input, &READOUT_HEADER)?.into_iter().map(|[tau, p_g, p_e]| ReadoutSample { tau, p_g, p_e }).collect())
}

pub fn read_readout_file(path: &Path) -> Result<Vec<ReadoutSample>> {
    read_readout(std::fs::File::open(path)?)
}

/// (x, p, w) rows in file order.
pub fn read_wigner<R: Read>(input: R) -> Result<Vec<[f64; 3]>> {
    parse_rows(input, &WIGNER_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn readout_round_trip_is_exact() {
        let samples = vec![
            ReadoutSample { tau: 1.0 / 3.0 * 1e-7, p_g: 0.1 + 0.2, p_e: 1.0 - (0.1 + 0.2) },
            ReadoutSample {
                tau: 2.5e-6,
                p_g: std::f64::consts::FRAC_1_SQRT_2,
                p_e: 1.0 - std::f64::consts::FRAC_1_SQRT_2,
            },
        ];
        let mut buf = Vec::new();
        write_readout(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tau_s,p_g,p_e\n"));
        assert_eq!(read_readout(buf.as_slice()).unwrap(), samples);
    }

    #[test]
    fn header_mismatch_names_column() {
        let err = read_readout("tau,p_g,p_e\n1,0.5,0.5\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("tau_s"), "{err}");
        let err = read_readout("tau_s,p_g\n1,0.5\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("p_e"), "{err}");
        let err = read_readout("tau_s,p_g,p_e\n1,x,0.5\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
    }
}
