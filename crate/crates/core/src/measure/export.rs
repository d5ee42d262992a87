use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CurvatureEvaluator, CurvatureField, QuadratureOptions};
use crate::error::{Error, Result};
use crate::kernel::RadialKernel;
use crate::setrep::io::encode_pgm;
use crate::setrep::VoxelSet;

/// One row per point: coordinates then the curvature value.
pub fn write_field_csv(field: &CurvatureField, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_field_csv_to(field, &mut f).map_err(|e| match e {
        Error::Domain(msg) => Error::format(path, msg),
        other => other,
    })
}

pub fn write_field_csv_to(field: &CurvatureField, out: &mut impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = field.points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..n).map(|a| format!("x{a}")).collect();
    header.push("curvature".into());
    let csv_err = |e: csv::Error| Error::domain(format!("writing curvature field: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for (p, v) in field.points.iter().zip(&field.values) {
        let mut row: Vec<String> = p.iter().map(|c| format!("{c:.17e}")).collect();
        row.push(format!("{v:.17e}"));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::domain(format!("writing curvature field: {e}")))
}

/// How to recover curvature values from heatmap pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapMapping {
    /// `value = offset + scale * pixel`
    pub offset: f64,
    pub scale: f64,
    pub min: f64,
    pub max: f64,
    pub h: f64,
    /// World coordinates of the lower-left corner of the image.
    pub origin: Vec<f64>,
    pub width: usize,
    pub height: usize,
    pub kernel: String,
    pub horizon: f64,
}

/// Curvature at every stored cell center of a planar set, as an 8-bit image.
#[derive(Debug, Clone)]
pub struct Heatmap {
    /// Row-major, top row first.
    pub values: Vec<f64>,
    pub pixels: Vec<u8>,
    pub mapping: HeatmapMapping,
}

impl Heatmap {
    /// Writes the PGM and a JSON sidecar with the same stem.
    pub fn save(&self, path: &Path) -> Result<()> {
        let m = &self.mapping;
        std::fs::write(path, encode_pgm(m.width, m.height, &self.pixels)).map_err(|e| Error::io(path, e))?;
        let side = path.with_extension("json");
        std::fs::write(&side, serde_json::to_string_pretty(m)?).map_err(|e| Error::io(&side, e))
    }
}

pub fn curvature_heatmap(set: &VoxelSet, kernel: &RadialKernel, opts: QuadratureOptions) -> Result<Heatmap> {
    if set.dim() != 2 {
        return Err(Error::domain("heatmaps are only produced for planar sets"));
    }
    let ev = CurvatureEvaluator::new(set, kernel, opts)?;
    let lo = set.lo();
    let [width, _, height] = set.ext();
    let mut cells = Vec::with_capacity(width * height);
    for row in 0..height {
        let k = lo[2] + (height - 1 - row) as i64;
        for i in 0..width {
            cells.push([lo[0] + i as i64, 0, k]);
        }
    }
    let values = ev.cells(&cells);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if max > min { (max - min) / 255.0 } else { 1.0 };
    let pixels = values
        .iter()
        .map(|v| ((v - min) / scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    let info = set.grid_info();
    Ok(Heatmap {
        values,
        pixels,
        mapping: HeatmapMapping {
            offset: min,
            scale,
            min,
            max,
            h: set.h(),
            origin: info.origin,
            width,
            height,
            kernel: kernel.family_name().to_string(),
            horizon: kernel.horizon(),
        },
    })
}
