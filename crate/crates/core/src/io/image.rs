use std::path::Path;

use crate::dsp::db;
use crate::radar::RangeAngleImage;

use super::{read_text, write_plain, IoError};

const CORNER: &str = "range_m\\angle_deg";

/// Range-angle power grid as text: `(N_r + 1) x (N_a + 1)` cells with the
/// angle axis in the first row, the range axis in the first column and
/// power in dB elsewhere. Aliased angle columns carry `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFile {
    pub range_m: Vec<f64>,
    pub angle_deg: Vec<f64>,
    pub power_db: Vec<Vec<f64>>,
}

impl ImageFile {
    pub fn from_image(img: &RangeAngleImage) -> Self {
        ImageFile {
            range_m: img.axes.range_m.clone(),
            angle_deg: img.axes.angle_deg.clone(),
            power_db: img.power.iter().map(|row| row.iter().map(|p| db(*p)).collect()).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from(CORNER);
        for a in &self.angle_deg {
            out.push(',');
            out.push_str(&a.to_string());
        }
        out.push('\n');
        for (r, row) in self.range_m.iter().zip(&self.power_db) {
            out.push_str(&r.to_string());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, IoError> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| IoError::Image("empty document".into()))?;
        let mut cells = head.split(',');
        if cells.next() != Some(CORNER) {
            return Err(IoError::Image(format!("first cell must be {CORNER:?}")));
        }
        let angle_deg = cells.map(|c| number(c, 0)).collect::<Result<Vec<_>, _>>()?;
        if angle_deg.is_empty() {
            return Err(IoError::Image("no angle columns".into()));
        }
        let (mut range_m, mut power_db) = (Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let row = line.split(',').map(|c| number(c, i + 1)).collect::<Result<Vec<_>, _>>()?;
            if row.len() != angle_deg.len() + 1 {
                return Err(IoError::Image(format!(
                    "line {}: {} cells, expected {}",
                    i + 2,
                    row.len(),
                    angle_deg.len() + 1
                )));
            }
            range_m.push(row[0]);
            power_db.push(row[1..].to_vec());
        }
        if range_m.is_empty() {
            return Err(IoError::Image("no range rows".into()));
        }
        Ok(ImageFile { range_m, angle_deg, power_db })
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_plain(path, self.to_text().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        Self::parse(&read_text(path)?)
    }
}

fn number(cell: &str, line: usize) -> Result<f64, IoError> {
    cell.parse().map_err(|_| IoError::Image(format!("line {}: {cell:?} is not a number", line + 1)))
}
