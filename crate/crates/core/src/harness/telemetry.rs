use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::estimation::SixAxisReading;
use crate::vision::DeformationClass;
use crate::HarnessError;

/// One row of a run: plant state, every force channel and the vision output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    /// s.
    pub time: f64,
    /// mm.
    pub commanded_pos: f64,
    /// Encoder reading, mm.
    pub actual_pos: f64,
    /// mm/s.
    pub velocity: f64,
    /// Current readout including noise, A.
    pub current: f64,
    /// N.
    pub f_current: f64,
    pub f_sensor_raw: SixAxisReading,
    pub f_sensor_filtered: f64,
    pub f_fused: f64,
    pub deformation_class: Option<DeformationClass>,
    pub deformation_pct: Option<f64>,
    /// px².
    pub contour_area: Option<f64>,
}

/// Column order of telemetry CSV files.
pub const TELEMETRY_COLUMNS: [&str; 17] = [
    "time",
    "commanded_pos",
    "actual_pos",
    "velocity",
    "current",
    "f_current",
    "fx",
    "fy",
    "fz",
    "mx",
    "my",
    "mz",
    "f_sensor_filtered",
    "f_fused",
    "deformation_class",
    "deformation_pct",
    "contour_area",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TelemetrySample {
    fn row(self) -> [String; 17] {
        let w = &self.f_sensor_raw;
        [
            self.time.to_string(),
            self.commanded_pos.to_string(),
            self.actual_pos.to_string(),
            self.velocity.to_string(),
            self.current.to_string(),
            self.f_current.to_string(),
            w.fx.to_string(),
            w.fy.to_string(),
            w.fz.to_string(),
            w.mx.to_string(),
            w.my.to_string(),
            w.mz.to_string(),
            self.f_sensor_filtered.to_string(),
            self.f_fused.to_string(),
            self.deformation_class.map(|c| c.name().to_string()).unwrap_or_default(),
            opt(self.deformation_pct),
            opt(self.contour_area),
        ]
    }
}

/// Writes the header and one row per sample. Floats are printed in their
/// shortest round-trip form, so reading back is lossless.
pub fn write_telemetry<W: Write>(samples: &[TelemetrySample], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TELEMETRY_COLUMNS)?;
    for s in samples {
        w.write_record(s.row())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_telemetry_csv(samples: &[TelemetrySample], path: &Path) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io)?;
    write_telemetry(samples, BufWriter::new(file))
}

pub fn read_telemetry<R: Read>(input: R) -> Result<Vec<TelemetrySample>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let pos: HashMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut idx = [0usize; 17];
    for (slot, name) in idx.iter_mut().zip(TELEMETRY_COLUMNS) {
        *slot = *pos
            .get(name)
            .ok_or_else(|| HarnessError::MissingColumn(name.to_string()))?;
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let num = |k: usize| -> Result<f64, HarnessError> {
            field(k).parse().map_err(|_| {
                HarnessError::Schema(format!(
                    "row {}: `{}` is not a number in column {}",
                    line + 1,
                    field(k),
                    TELEMETRY_COLUMNS[k]
                ))
            })
        };
        let opt_num = |k: usize| -> Result<Option<f64>, HarnessError> {
            if field(k).is_empty() {
                Ok(None)
            } else {
                num(k).map(Some)
            }
        };
        let class = match field(14) {
            "" => None,
            name => Some(
                DeformationClass::ALL
                    .into_iter()
                    .find(|c| c.name() == name)
                    .ok_or_else(|| {
                        HarnessError::Schema(format!("row {}: unknown class `{name}`", line + 1))
                    })?,
            ),
        };
        let time = num(0)?;
        out.push(TelemetrySample {
            time,
            commanded_pos: num(1)?,
            actual_pos: num(2)?,
            velocity: num(3)?,
            current: num(4)?,
            f_current: num(5)?,
            f_sensor_raw: SixAxisReading {
                fx: num(6)?,
                fy: num(7)?,
                fz: num(8)?,
                mx: num(9)?,
                my: num(10)?,
                mz: num(11)?,
                time,
            },
            f_sensor_filtered: num(12)?,
            f_fused: num(13)?,
            deformation_class: class,
            deformation_pct: opt_num(15)?,
            contour_area: opt_num(16)?,
        });
    }
    Ok(out)
}

pub fn read_telemetry_csv(path: &Path) -> Result<Vec<TelemetrySample>, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_telemetry(BufReader::new(file))
}
