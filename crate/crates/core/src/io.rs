//! File formats: dataset CSV plus JSON sidecar, and number formatting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, MixtureParams};

/// Version stamped into every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Formats a float with 17 significant digits so it parses back bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Metadata written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    #[serde(default = "current_schema")]
    pub schema_version: u32,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub theta_star: Vec<f64>,
    pub rho_star: f64,
}

impl From<&Dataset> for DatasetSidecar {
    fn from(data: &Dataset) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            n: data.n(),
            d: data.d(),
            seed: data.seed,
            theta_star: data.params.theta_star.clone(),
            rho_star: data.params.rho_star,
        }
    }
}

fn current_schema() -> u32 {
    SCHEMA_VERSION
}

/// `foo.csv` → `foo.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes rows under the header `x0,...,x{d-1}`.
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((0..data.d()).map(|j| format!("x{j}")))?;
    for row in data.rows() {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R, sidecar: &DatasetSidecar) -> Result<Dataset> {
    if sidecar.schema_version != SCHEMA_VERSION {
        return Err(Error::InvalidArgument(format!("unsupported schema_version {}", sidecar.schema_version)));
    }
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.len() != sidecar.d {
        return Err(Error::DimensionMismatch { expected: sidecar.d, got: header.len() });
    }
    for (j, name) in header.iter().enumerate() {
        if name.trim() != format!("x{j}") {
            return Err(Error::InvalidArgument(format!("unexpected column `{name}` at position {j}")));
        }
    }
    let mut samples = Vec::with_capacity(sidecar.n * sidecar.d);
    for rec in r.records() {
        let rec = rec?;
        for field in rec.iter() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("cannot parse `{field}` as a number")))?;
            samples.push(v);
        }
    }
    let params = MixtureParams::new(sidecar.theta_star.clone(), sidecar.rho_star)?;
    let data = Dataset::from_rows(samples, sidecar.d, sidecar.seed, params)?;
    if data.n() != sidecar.n {
        return Err(Error::InvalidArgument(format!(
            "sidecar declares n={} but the CSV holds {} rows",
            sidecar.n,
            data.n()
        )));
    }
    Ok(data)
}

/// Writes `path` (CSV) and its JSON sidecar.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset_csv(data, &mut w)?;
    w.flush()?;
    write_json(&DatasetSidecar::from(data), &sidecar_path(path))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let sidecar: DatasetSidecar = serde_json::from_reader(BufReader::new(File::open(sidecar_path(path))?))?;
    read_dataset_csv(BufReader::new(File::open(path)?), &sidecar)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
