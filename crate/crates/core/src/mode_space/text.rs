//! Plain-text sparse matrix format.
//!
//! ```text
//! modespace 6 4
//! 0 0 1e0 0e0
//! 57 1 -7.0710678118654757e-1 0e0
//! ```
//!
//! The header names the port count `P` (ports are `1..=P`) and the OAM bound
//! `L`. Each following line is one nonzero entry `row col re im` in flat
//! indexing. A state is written as a single column (`col` is always 0). Lines
//! starting with `#` are comments.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{FieldState, ModeSpace, ScatteringOperator};
use crate::error::{Error, Result};

fn header(space: &ModeSpace) -> Result<String> {
    let p = space.ports().len() as u32;
    if space.ports().iter().copied().ne(1..=p) {
        return Err(Error::Domain(format!(
            "text format needs ports 1..={p}, got {:?}",
            space.ports()
        )));
    }
    Ok(format!("modespace {p} {}\n", space.oam_range()))
}

fn write_entries(out: &mut String, m: &DMatrix<Complex64>) {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z != Complex64::ZERO {
                let _ = writeln!(out, "{i} {j} {:e} {:e}", z.re, z.im);
            }
        }
    }
}

pub fn write_operator(op: &ScatteringOperator) -> Result<String> {
    let mut out = header(op.space())?;
    write_entries(&mut out, op.matrix());
    Ok(out)
}

pub fn write_state(s: &FieldState) -> Result<String> {
    let mut out = header(s.space())?;
    let col = DMatrix::from_column_slice(s.amplitudes().len(), 1, s.amplitudes().as_slice());
    write_entries(&mut out, &col);
    Ok(out)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parses the text format into its mode space and dense matrix.
pub fn read_matrix(text: &str) -> Result<(Arc<ModeSpace>, DMatrix<Complex64>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, h) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let fields: Vec<&str> = h.split_whitespace().collect();
    let (p, l) = match fields.as_slice() {
        ["modespace", p, l] => (
            p.parse::<u32>()
                .map_err(|e| parse_err(hline, e.to_string()))?,
            l.parse::<u32>()
                .map_err(|e| parse_err(hline, e.to_string()))?,
        ),
        _ => return Err(parse_err(hline, "expected `modespace P L`")),
    };
    let space =
        Arc::new(ModeSpace::with_port_count(p, l).map_err(|e| parse_err(hline, e.to_string()))?);
    let n = space.dimension();
    let mut m = DMatrix::zeros(n, n);
    for (ln, line) in lines {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(parse_err(ln, "expected `row col re im`"));
        }
        let row: usize = f[0].parse().map_err(|_| parse_err(ln, "bad row"))?;
        let col: usize = f[1].parse().map_err(|_| parse_err(ln, "bad col"))?;
        let re: f64 = f[2].parse().map_err(|_| parse_err(ln, "bad real part"))?;
        let im: f64 = f[3]
            .parse()
            .map_err(|_| parse_err(ln, "bad imaginary part"))?;
        if row >= n || col >= n {
            return Err(parse_err(
                ln,
                format!("index ({row}, {col}) outside dimension {n}"),
            ));
        }
        m[(row, col)] = Complex64::new(re, im);
    }
    Ok((space, m))
}

pub fn read_operator(text: &str, label: &str) -> Result<ScatteringOperator> {
    let (space, m) = read_matrix(text)?;
    let ports = space.ports().to_vec();
    ScatteringOperator::new(&space, m, ports.clone(), ports, label, false)
}

pub fn read_state(text: &str) -> Result<FieldState> {
    let (space, m) = read_matrix(text)?;
    if m.columns(1, m.ncols() - 1)
        .iter()
        .any(|z| *z != Complex64::ZERO)
    {
        return Err(Error::Domain(
            "state file has entries outside column 0".into(),
        ));
    }
    FieldState::from_amplitudes(
        &space,
        DVector::from_iterator(m.nrows(), m.column(0).iter().copied()),
    )
}
