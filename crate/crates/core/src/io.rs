//! Label files and result serialization.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One equilibrium label. Homogeneous rows carry no phase compositions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub system_id: String,
    pub z: f64,
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub is_split: bool,
}

impl Label {
    fn validate(&self) -> Result<()> {
        if !(self.z > 0.0 && self.z < 1.0) {
            return Err(Error::CompositionOutOfRange { value: self.z });
        }
        if self.is_split {
            match (self.x_lo, self.x_hi) {
                (Some(lo), Some(hi)) => {
                    for v in [lo, hi] {
                        if !(v > 0.0 && v < 1.0) {
                            return Err(Error::CompositionOutOfRange { value: v });
                        }
                    }
                    if lo > hi {
                        return Err(Error::InvalidComposition(format!(
                            "system {}: x_lo {lo} exceeds x_hi {hi}",
                            self.system_id
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidComposition(format!(
                        "system {}: split row without phase compositions",
                        self.system_id
                    )))
                }
            }
        }
        Ok(())
    }
}

pub fn read_labels<R: Read>(reader: R) -> Result<Vec<Label>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let label: Label = row?;
        label.validate()?;
        out.push(label);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput("label file"));
    }
    Ok(out)
}

pub fn read_labels_file(path: &Path) -> Result<Vec<Label>> {
    read_labels(File::open(path)?)
}

pub fn write_labels<W: Write>(writer: W, labels: &[Label]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if labels.is_empty() {
        w.write_record(["system_id", "z", "x_lo", "x_hi", "is_split"])?;
    }
    for l in labels {
        w.serialize(l)?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
