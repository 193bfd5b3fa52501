//! CSV formats for observations, cameras and survey results.

use std::fmt;
use std::io::{Read, Write};

use serde::Deserialize;
use thiserror::Error;

use super::{CameraMatrix, CameraSet, DiscRecord, Observation, SkippedDisc, SurveyResult};

pub const OBSERVATION_HEADER: [&str; 5] = ["marker_id", "disc_id", "frame", "x", "y"];
pub const CAMERA_HEADER: [&str; 13] = [
    "frame", "p11", "p12", "p13", "p14", "p21", "p22", "p23", "p24", "p31", "p32", "p33", "p34",
];
pub const RESULT_HEADER: &str = "marker_id,disc_id,X,Y,Z,reproj_error,n_obs";

/// Schema or parse violation. `line` is 1-based and counts the header.
#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: u64,
    pub message: String,
}

impl CsvError {
    fn new(line: u64, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }

    fn from_csv(err: csv::Error, fallback_line: u64) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(fallback_line);
        Self::new(line, err.to_string())
    }
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), CsvError> {
    let headers = rdr.headers().map_err(|e| CsvError::from_csv(e, 1))?;
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(CsvError::new(
            1,
            format!(
                "expected header {}, found {}",
                expected.join(","),
                got.join(",")
            ),
        ));
    }
    Ok(())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
}

#[derive(Deserialize)]
struct ObservationRow {
    marker_id: String,
    disc_id: u8,
    frame: u32,
    x: f64,
    y: f64,
}

/// Reads `marker_id,disc_id,frame,x,y` rows and groups them per disc in
/// first-appearance order.
pub fn read_observations<R: Read>(input: R) -> Result<Vec<DiscRecord>, CsvError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &OBSERVATION_HEADER)?;
    let mut records: Vec<DiscRecord> = Vec::new();
    for (i, row) in rdr.deserialize::<ObservationRow>().enumerate() {
        let row = row.map_err(|e| CsvError::from_csv(e, i as u64 + 2))?;
        let line = i as u64 + 2;
        if row.disc_id > 3 {
            return Err(CsvError::new(
                line,
                format!("disc_id {} outside 0..=3", row.disc_id),
            ));
        }
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(CsvError::new(line, "non-finite image coordinate"));
        }
        let obs = Observation {
            frame: row.frame,
            x: row.x,
            y: row.y,
        };
        match records
            .iter_mut()
            .find(|r| r.marker_id == row.marker_id && r.disc_id == row.disc_id)
        {
            Some(r) => r.observations.push(obs),
            None => records.push(DiscRecord {
                marker_id: row.marker_id,
                disc_id: row.disc_id,
                observations: vec![obs],
            }),
        }
    }
    Ok(records)
}

#[derive(Deserialize)]
struct CameraRow {
    frame: u32,
    p11: f64,
    p12: f64,
    p13: f64,
    p14: f64,
    p21: f64,
    p22: f64,
    p23: f64,
    p24: f64,
    p31: f64,
    p32: f64,
    p33: f64,
    p34: f64,
}

/// Reads `frame,p11,...,p34` rows (row-major 3x4 projection per frame).
pub fn read_cameras<R: Read>(input: R) -> Result<CameraSet, CsvError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &CAMERA_HEADER)?;
    let mut cams = CameraSet::new();
    for (i, row) in rdr.deserialize::<CameraRow>().enumerate() {
        let line = i as u64 + 2;
        let r = row.map_err(|e| CsvError::from_csv(e, line))?;
        let entries = [
            r.p11, r.p12, r.p13, r.p14, r.p21, r.p22, r.p23, r.p24, r.p31, r.p32, r.p33, r.p34,
        ];
        let cam = CameraMatrix::from_row_slice(&entries)
            .map_err(|e| CsvError::new(line, format!("frame {}: {e}", r.frame)))?;
        if cams.insert(r.frame, cam).is_some() {
            return Err(CsvError::new(line, format!("duplicate frame {}", r.frame)));
        }
    }
    Ok(cams)
}

/// Writes one `marker_id,disc_id,X,Y,Z,reproj_error,n_obs` row per surveyed
/// disc in key order.
pub fn write_results<W: Write>(mut out: W, result: &SurveyResult) -> std::io::Result<()> {
    writeln!(out, "{RESULT_HEADER}")?;
    for (key, disc) in &result.discs {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            key.marker_id,
            key.disc_id,
            disc.point.x,
            disc.point.y,
            disc.point.z,
            disc.reprojection_error,
            disc.n_obs
        )?;
    }
    Ok(())
}

impl fmt::Display for SkippedDisc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "skipped marker_id={} disc_id={} n_obs={}: {}",
            self.key.marker_id, self.key.disc_id, self.n_obs, self.reason
        )
    }
}
