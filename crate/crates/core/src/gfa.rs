//! Grid-function array files: one JSON header line, a newline, then little-endian `f64` samples.
//! Complex arrays interleave real and imaginary parts.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicGrid, Side};

pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub version: u32,
    pub n: usize,
    pub shape: Vec<usize>,
    #[serde(rename = "L")]
    pub side_length: f64,
    pub dtype: String,
    pub complex: bool,
    pub layout: String,
}

impl Header {
    pub fn for_grid(grid: &PeriodicGrid, complex: bool) -> Self {
        Header {
            version: VERSION,
            n: grid.dim(),
            shape: vec![grid.samples_per_axis(); grid.dim()],
            side_length: grid.side_length(),
            dtype: "f64".into(),
            complex,
            layout: "row-major".into(),
        }
    }

    fn validate(&self) -> Result<PeriodicGrid> {
        if self.version != VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.dtype != "f64" || self.layout != "row-major" {
            return Err(Error::Format(format!("unsupported dtype/layout {}/{}", self.dtype, self.layout)));
        }
        if self.shape.len() != self.n || self.shape.iter().any(|&s| s != self.shape[0]) {
            return Err(Error::Format(format!("shape {:?} is not a cube of dimension {}", self.shape, self.n)));
        }
        PeriodicGrid::new(self.n, self.side_length, self.shape[0])
    }
}

/// Writes physical-side samples; the imaginary part is kept only when `complex` is set.
pub fn write<W: Write>(mut w: W, f: &GridFunction, complex: bool) -> Result<()> {
    let header = Header::for_grid(f.grid(), complex);
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    let per = if complex { 2 } else { 1 };
    let mut buf = Vec::with_capacity(line.len() + 1 + 8 * per * f.samples().len());
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    for z in f.samples() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        if complex {
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn read<R: BufRead>(mut r: R) -> Result<GridFunction> {
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::Format(e.to_string()))?;
    let header: Header = serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(e.to_string()))?;
    let grid = header.validate()?;
    let per = if header.complex { 2 } else { 1 };
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| Error::Format(e.to_string()))?;
    if raw.len() != 8 * per * grid.len() {
        return Err(Error::Format(format!(
            "payload has {} bytes, expected {}",
            raw.len(),
            8 * per * grid.len()
        )));
    }
    let vals: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let samples = if header.complex {
        vals.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()
    } else {
        vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    };
    GridFunction::new(grid, Side::Physical, samples)
}

pub fn write_file(path: &std::path::Path, f: &GridFunction, complex: bool) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    write(std::io::BufWriter::new(file), f, complex)
}

pub fn read_file(path: &std::path::Path) -> Result<GridFunction> {
    let file = std::fs::File::open(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    read(std::io::BufReader::new(file))
}
