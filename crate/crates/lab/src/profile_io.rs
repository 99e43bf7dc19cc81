//! Profile files: one line of JSON header followed by the row-major matrix,
//! either as little-endian `f64` bytes or as CSV rows.
//!
//! ```text
//! {"format":"rmt-profile","version":1,"n":3,"geometry":"custom","m":3.0,"encoding":"f64le"}
//! <n·n·8 bytes>
//! ```

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use faer::Mat;
use rmt_core::profile::{custom_profile, Geometry, VarianceProfile};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const FORMAT_TAG: &str = "rmt-profile";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    F64le,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileHeader {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub geometry: String,
    /// `M = 1/max s_ij` of the stored matrix; checked on load when the matrix
    /// is already doubly stochastic.
    #[serde(default)]
    pub m: Option<f64>,
    pub encoding: Encoding,
}

/// How a loaded matrix became a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Already symmetric doubly stochastic, used as stored.
    AsStored,
    /// Rescaled by symmetric Sinkhorn iteration.
    Sinkhorn,
}

#[derive(Debug, Clone)]
pub struct LoadedProfile {
    pub header: ProfileHeader,
    pub profile: VarianceProfile,
    pub normalization: Normalization,
}

fn format_err(path: &Path, message: impl Into<String>) -> LabError {
    LabError::ProfileFormat {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

pub fn write_profile(path: &Path, profile: &VarianceProfile, encoding: Encoding) -> Result<()> {
    let n = profile.n();
    let header = ProfileHeader {
        format: FORMAT_TAG.to_string(),
        version: FORMAT_VERSION,
        n,
        geometry: profile.geometry().name().to_string(),
        m: Some(profile.m_param()),
        encoding,
    };
    let mut out = serde_json::to_vec(&header)?;
    out.push(b'\n');
    let s = profile.s();
    match encoding {
        Encoding::F64le => {
            out.reserve(n * n * 8);
            for i in 0..n {
                for j in 0..n {
                    out.extend_from_slice(&s[(i, j)].to_le_bytes());
                }
            }
        }
        Encoding::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            for i in 0..n {
                // `{:?}` prints the shortest representation that round-trips.
                w.write_record((0..n).map(|j| format!("{:?}", s[(i, j)])))?;
            }
            out.extend(w.into_inner().map_err(|e| LabError::io(path, e.into_error()))?);
        }
    }
    let mut f = fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    f.write_all(&out).map_err(|e| LabError::io(path, e))?;
    Ok(())
}

pub fn read_profile(path: &Path) -> Result<LoadedProfile> {
    let bytes = fs::read(path).map_err(|e| LabError::io(path, e))?;
    let mut cursor = std::io::Cursor::new(&bytes[..]);
    let mut line = String::new();
    cursor
        .read_line(&mut line)
        .map_err(|_| format_err(path, "header line is not UTF-8"))?;
    let header: ProfileHeader = serde_json::from_str(line.trim_end())
        .map_err(|e| format_err(path, format!("bad header: {e}")))?;
    if header.format != FORMAT_TAG {
        return Err(format_err(path, format!("format tag `{}` is not `{FORMAT_TAG}`", header.format)));
    }
    if header.version != FORMAT_VERSION {
        return Err(format_err(path, format!("unsupported version {}", header.version)));
    }
    let n = header.n;
    if n == 0 {
        return Err(format_err(path, "n must be at least 1"));
    }
    let body = &bytes[cursor.position() as usize..];
    let values = match header.encoding {
        Encoding::F64le => decode_f64le(path, body, n)?,
        Encoding::Csv => decode_csv(path, body, n)?,
    };
    let raw = Mat::from_fn(n, n, |i, j| values[i * n + j]);
    let (profile, normalization) = match VarianceProfile::from_matrix(raw.clone(), Geometry::Custom) {
        Ok(p) => {
            if let Some(m) = header.m {
                let rel = (m - p.m_param()).abs() / p.m_param();
                if rel > 1e-9 {
                    return Err(format_err(
                        path,
                        format!("header M = {m} but the matrix has M = {}", p.m_param()),
                    ));
                }
            }
            (p, Normalization::AsStored)
        }
        Err(_) => (custom_profile(raw.as_ref())?, Normalization::Sinkhorn),
    };
    Ok(LoadedProfile {
        header,
        profile,
        normalization,
    })
}

fn decode_f64le(path: &Path, body: &[u8], n: usize) -> Result<Vec<f64>> {
    let expected = n
        .checked_mul(n)
        .and_then(|k| k.checked_mul(8))
        .ok_or_else(|| format_err(path, "n is too large"))?;
    if body.len() != expected {
        return Err(format_err(
            path,
            format!("expected {expected} bytes of f64le data, found {}", body.len()),
        ));
    }
    Ok(body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn decode_csv(path: &Path, body: &[u8], n: usize) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(body);
    let mut values = Vec::with_capacity(n * n);
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record?;
        if record.len() != n {
            return Err(format_err(
                path,
                format!("row {rows} has {} columns, expected {n}", record.len()),
            ));
        }
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| format_err(path, format!("row {rows}, column {j}: `{field}` is not a number")))?;
            values.push(v);
        }
        rows += 1;
    }
    if rows != n {
        return Err(format_err(path, format!("found {rows} rows, expected {n}")));
    }
    Ok(values)
}
