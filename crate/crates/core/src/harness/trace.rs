//! Per-iteration trace CSV. The header is exactly the `IterationRecord`
//! field list; floats use the shortest round-trip decimal form and vectors
//! are `;`-joined.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::IterationRecord;

/// Bumped whenever `TRACE_COLUMNS` or the cell encoding changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

pub const TRACE_COLUMNS: [&str; 33] = [
    "k",
    "fevals",
    "gevals",
    "hevals",
    "x",
    "x_next",
    "f_true",
    "f_hat_true",
    "f_next_true",
    "grad_true_norm",
    "lambda_true",
    "f_est",
    "f_plus_est",
    "g_est_norm",
    "lambda_est",
    "fhat_est",
    "fhat_plus_est",
    "fhat_minus_est",
    "nc_curvature",
    "alpha_k",
    "beta_k",
    "alpha_next",
    "beta_next",
    "omega_g",
    "omega_h",
    "theta_g",
    "theta_h",
    "i_f",
    "i_g",
    "ihat_f",
    "i_h",
    "i_h_oracle",
    "sign_choice",
];

fn trace_header() -> &'static [&'static str] {
    &TRACE_COLUMNS
}

fn fmt_f(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f(*x)).collect::<Vec<_>>().join(";")
}

fn record_row(r: &IterationRecord) -> Vec<String> {
    let f = fmt_f;
    vec![
        r.k.to_string(),
        r.fevals.to_string(),
        r.gevals.to_string(),
        r.hevals.to_string(),
        fmt_vec(&r.x),
        fmt_vec(&r.x_next),
        f(r.f_true),
        f(r.f_hat_true),
        f(r.f_next_true),
        f(r.grad_true_norm),
        f(r.lambda_true),
        f(r.f_est),
        f(r.f_plus_est),
        f(r.g_est_norm),
        f(r.lambda_est),
        f(r.fhat_est),
        f(r.fhat_plus_est),
        f(r.fhat_minus_est),
        f(r.nc_curvature),
        f(r.alpha_k),
        f(r.beta_k),
        f(r.alpha_next),
        f(r.beta_next),
        r.omega_g.to_string(),
        r.omega_h.to_string(),
        r.theta_g.to_string(),
        r.theta_h.to_string(),
        r.i_f.to_string(),
        r.i_g.to_string(),
        r.ihat_f.to_string(),
        r.i_h.to_string(),
        r.i_h_oracle.to_string(),
        r.sign_choice.to_string(),
    ]
}

/// Serializes records to CSV bytes.
pub fn trace_to_bytes(records: &[IterationRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(trace_header()).map_err(csv_err)?;
    for r in records {
        w.write_record(record_row(r)).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Trace(e.to_string()))
}

pub fn write_trace(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let bytes = trace_to_bytes(records)?;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Trace(e.to_string())
}

struct Cells<'a> {
    row: &'a csv::StringRecord,
    line: u64,
    i: usize,
}

impl<'a> Cells<'a> {
    fn next_str(&mut self) -> Result<&'a str> {
        let s = self
            .row
            .get(self.i)
            .ok_or_else(|| Error::Trace(format!("line {}: missing column {}", self.line, trace_header()[self.i])))?;
        self.i += 1;
        Ok(s)
    }

    fn err(&self, s: &str) -> Error {
        Error::Trace(format!(
            "line {}: cannot parse {} = '{s}'",
            self.line,
            trace_header()[self.i - 1]
        ))
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let s = self.next_str()?;
        s.parse().map_err(|_| self.err(s))
    }

    fn vec(&mut self) -> Result<Vec<f64>> {
        let s = self.next_str()?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';').map(|t| t.parse().map_err(|_| self.err(s))).collect()
    }
}

fn parse_row(row: &csv::StringRecord, line: u64) -> Result<IterationRecord> {
    if row.len() != trace_header().len() {
        return Err(Error::Trace(format!(
            "line {line}: expected {} columns, found {}",
            trace_header().len(),
            row.len()
        )));
    }
    let mut c = Cells { row, line, i: 0 };
    Ok(IterationRecord {
        k: c.parse()?,
        fevals: c.parse()?,
        gevals: c.parse()?,
        hevals: c.parse()?,
        x: c.vec()?,
        x_next: c.vec()?,
        f_true: c.parse()?,
        f_hat_true: c.parse()?,
        f_next_true: c.parse()?,
        grad_true_norm: c.parse()?,
        lambda_true: c.parse()?,
        f_est: c.parse()?,
        f_plus_est: c.parse()?,
        g_est_norm: c.parse()?,
        lambda_est: c.parse()?,
        fhat_est: c.parse()?,
        fhat_plus_est: c.parse()?,
        fhat_minus_est: c.parse()?,
        nc_curvature: c.parse()?,
        alpha_k: c.parse()?,
        beta_k: c.parse()?,
        alpha_next: c.parse()?,
        beta_next: c.parse()?,
        omega_g: c.parse()?,
        omega_h: c.parse()?,
        theta_g: c.parse()?,
        theta_h: c.parse()?,
        i_f: c.parse()?,
        i_g: c.parse()?,
        ihat_f: c.parse()?,
        i_h: c.parse()?,
        i_h_oracle: c.parse()?,
        sign_choice: c.parse()?,
    })
}

pub fn trace_from_reader<R: std::io::Read>(reader: R) -> Result<Vec<IterationRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.iter().ne(trace_header().iter().copied()) {
        return Err(Error::Trace(format!(
            "trace header does not match schema version {TRACE_SCHEMA_VERSION}"
        )));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(csv_err)?;
        out.push(parse_row(&row, i as u64 + 2)?);
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<IterationRecord>> {
    let f = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    trace_from_reader(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::OracleConfig;
    use crate::problems::saddle_quartic;
    use crate::rng::OracleStreams;
    use crate::solver::{self, Method, SolverParams};

    fn records() -> Vec<IterationRecord> {
        let params = SolverParams {
            max_iters: 5,
            ..SolverParams::default()
        };
        solver::run(
            Method::Ss2NcG,
            &saddle_quartic(),
            &OracleConfig::coupled(1e-3),
            &params,
            &[0.0, 0.0],
            OracleStreams::new(1, 0),
        )
        .unwrap()
        .records
    }

    #[test]
    fn header_matches_record_fields() {
        assert_eq!(trace_header().len(), 33);
        let text = String::from_utf8(trace_to_bytes(&[]).unwrap()).unwrap();
        assert_eq!(text.trim_end(), trace_header().join(","));
    }

    #[test]
    fn nan_and_vectors_survive_a_round_trip() {
        let recs = records();
        assert!(recs.iter().any(|r| r.nc_curvature.is_nan() || r.fhat_est.is_nan()));
        let bytes = trace_to_bytes(&recs).unwrap();
        let back = trace_from_reader(&bytes[..]).unwrap();
        assert_eq!(trace_to_bytes(&back).unwrap(), bytes);
        assert_eq!(back[0].x, recs[0].x);
    }

    #[test]
    fn rejects_foreign_header_and_short_rows() {
        assert!(matches!(trace_from_reader(&b"a,b\n1,2\n"[..]), Err(Error::Trace(_))));
        let mut bytes = trace_to_bytes(&records()).unwrap();
        bytes.extend_from_slice(b"1,2,3\n");
        let err = trace_from_reader(&bytes[..]).unwrap_err().to_string();
        assert!(err.contains("fields") || err.contains("columns"), "{err}");
    }
}
