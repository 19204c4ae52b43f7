//! Trace CSV: `iter,f,subgrad_norm,step_length,oracle_evals,status` followed
//! by `x_0..x_{d-1}` when every record carries its iterate. Floats are written
//! in shortest round-trip form, so parsing a written trace gives back the
//! same records bit for bit.

use std::io::{Read, Write};

use anyhow::{anyhow, bail, Context, Result};

use crate::trace::{IterationRecord, Status};
use crate::vector::Vector;

const FIXED_COLUMNS: [&str; 6] = [
    "iter",
    "f",
    "subgrad_norm",
    "step_length",
    "oracle_evals",
    "status",
];

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_trace<W: Write>(out: W, records: &[IterationRecord]) -> Result<()> {
    let dim = match records.first().and_then(|r| r.x.as_ref()) {
        Some(x)
            if records
                .iter()
                .all(|r| r.x.as_ref().is_some_and(|y| y.dim() == x.dim())) =>
        {
            x.dim()
        }
        _ => 0,
    };
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..dim).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            fmt(r.f_value),
            fmt(r.subgrad_norm),
            fmt(r.step_length),
            r.oracle_evals.to_string(),
            r.status.to_string(),
        ];
        if dim > 0 {
            row.extend(r.x.as_ref().unwrap().iter().map(|&v| fmt(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trace<R: Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(h, e)| h != e) {
        bail!(
            "unexpected trace header: {:?}",
            header.iter().collect::<Vec<_>>()
        );
    }
    let dim = header.len() - FIXED_COLUMNS.len();
    for (i, h) in header.iter().skip(FIXED_COLUMNS.len()).enumerate() {
        if h != format!("x_{i}") {
            bail!("unexpected iterate column `{h}`");
        }
    }
    let mut records = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .parse::<f64>()
                .with_context(|| format!("row {line}: bad number in column {}", FIXED_COLUMNS[i]))
        };
        let x = if dim > 0 {
            let xs = (0..dim)
                .map(|i| row[FIXED_COLUMNS.len() + i].parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .with_context(|| format!("row {line}: bad iterate entry"))?;
            Some(Vector::new(xs)?)
        } else {
            None
        };
        records.push(IterationRecord {
            n: row[0]
                .parse()
                .with_context(|| format!("row {line}: bad iteration index"))?,
            x,
            f_value: num(1)?,
            subgrad_norm: num(2)?,
            step_length: num(3)?,
            oracle_evals: row[4]
                .parse()
                .with_context(|| format!("row {line}: bad oracle count"))?,
            status: row[5]
                .parse::<Status>()
                .map_err(|e| anyhow!("row {line}: {e}"))?,
        });
    }
    Ok(records)
}
