use serde::Serialize;
use std::io::Write;

use crate::Result;

/// One line of the flat CSV shared by every report kind.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CsvRow {
    #[serde(rename = "rho_or_R")]
    pub rho_or_r: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

pub fn write_csv<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["rho_or_R", "lhs", "rhs", "ratio"]).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> crate::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e.into(),
        other => crate::Error::InvalidParameter(format!("csv: {other:?}")),
    }
}
