//! File formats: binary PBM/PGM images, raw `u8` volumes with a JSON sidecar,
//! and shape expressions as JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::shape::ShapeSpec;
use super::voxel::VoxelSet;
use crate::error::{Error, Result};

/// Pixel-to-grid mapping for image and volume import.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportOptions {
    pub h: f64,
    /// World position of the lower-left corner of the first pixel/voxel.
    #[serde(default)]
    pub origin: Option<Vec<f64>>,
    /// Occupied iff value >= threshold. PBM bits map 1 to 255 and 0 to 0.
    #[serde(default = "default_threshold")]
    pub threshold: u16,
}

fn default_threshold() -> u16 {
    128
}

impl ImportOptions {
    pub fn new(h: f64) -> Self {
        Self {
            h,
            origin: None,
            threshold: default_threshold(),
        }
    }
}

/// Decoded grayscale image, row 0 at the top.
#[derive(Debug, Clone, PartialEq)]
pub struct Gray {
    pub width: usize,
    pub height: usize,
    pub max: u16,
    pub pixels: Vec<u16>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn token(&mut self) -> Option<&'a [u8]> {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
                continue;
            }
            break;
        }
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.bytes[start..self.pos])
    }

    fn number(&mut self) -> Option<usize> {
        std::str::from_utf8(self.token()?).ok()?.parse().ok()
    }
}

/// Parses binary PBM (`P4`) or PGM (`P5`) data.
pub fn decode_pnm(bytes: &[u8], path: &Path) -> Result<Gray> {
    let bad = |m: &str| Error::format(path, m.to_string());
    let mut hd = Header { bytes, pos: 0 };
    let magic = hd.token().ok_or_else(|| bad("empty file"))?;
    let width = hd.number().ok_or_else(|| bad("missing width"))?;
    let height = hd.number().ok_or_else(|| bad("missing height"))?;
    match magic {
        b"P4" => {
            let data = &bytes[(hd.pos + 1).min(bytes.len())..];
            let stride = width.div_ceil(8);
            if data.len() < stride * height {
                return Err(bad("truncated bitmap"));
            }
            let mut pixels = Vec::with_capacity(width * height);
            for row in 0..height {
                for col in 0..width {
                    let byte = data[row * stride + col / 8];
                    let bit = byte >> (7 - col % 8) & 1;
                    pixels.push(if bit == 1 { 255 } else { 0 });
                }
            }
            Ok(Gray {
                width,
                height,
                max: 255,
                pixels,
            })
        }
        b"P5" => {
            let max = hd.number().ok_or_else(|| bad("missing maxval"))?;
            if max == 0 || max > 65535 {
                return Err(bad("maxval out of range"));
            }
            let data = &bytes[(hd.pos + 1).min(bytes.len())..];
            let n = width * height;
            let pixels: Vec<u16> = if max < 256 {
                if data.len() < n {
                    return Err(bad("truncated graymap"));
                }
                data[..n].iter().map(|&b| b as u16).collect()
            } else {
                if data.len() < 2 * n {
                    return Err(bad("truncated graymap"));
                }
                data[..2 * n]
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]))
                    .collect()
            };
            Ok(Gray {
                width,
                height,
                max: max as u16,
                pixels,
            })
        }
        _ => Err(bad("expected a binary PBM (P4) or PGM (P5) file")),
    }
}

/// Loads a 2D set from a PBM/PGM image. Image rows run top to bottom; the
/// bottom row becomes the lowest layer along the distinguished axis.
pub fn load_image(path: &Path, opts: &ImportOptions) -> Result<VoxelSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode_pnm(&bytes, path)?;
    image_to_set(&img, opts)
}

pub fn image_to_set(img: &Gray, opts: &ImportOptions) -> Result<VoxelSet> {
    let origin = opts.origin.clone().unwrap_or_else(|| vec![0.0, 0.0]);
    let mut set = VoxelSet::empty(2, opts.h, &origin, &[0, 0], &[img.width, img.height])?;
    for row in 0..img.height {
        for col in 0..img.width {
            if img.pixels[row * img.width + col] >= opts.threshold {
                set.set([col as i64, 0, (img.height - 1 - row) as i64], true)?;
            }
        }
    }
    Ok(set)
}

fn stored_extent_2d(set: &VoxelSet) -> Result<(usize, usize)> {
    if set.dim() != 2 {
        return Err(Error::domain("image export needs a 2D set"));
    }
    let e = set.ext();
    Ok((e[0], e[2]))
}

/// Binary PBM of the stored grid (bit 1 = occupied).
pub fn encode_pbm(set: &VoxelSet) -> Result<Vec<u8>> {
    let (w, hgt) = stored_extent_2d(set)?;
    let lo = set.lo();
    let stride = w.div_ceil(8);
    let mut out = format!("P4\n{w} {hgt}\n").into_bytes();
    let mut data = vec![0u8; stride * hgt];
    for row in 0..hgt {
        for col in 0..w {
            let g = [lo[0] + col as i64, 0, lo[2] + (hgt - 1 - row) as i64];
            if set.get(g) {
                data[row * stride + col / 8] |= 1 << (7 - col % 8);
            }
        }
    }
    out.extend(data);
    Ok(out)
}

pub fn save_pbm(set: &VoxelSet, path: &Path) -> Result<()> {
    fs::write(path, encode_pbm(set)?).map_err(|e| Error::io(path, e))
}

/// Binary 8-bit PGM from rows listed top to bottom.
pub fn encode_pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Sidecar describing a raw `u8` volume, x varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeSidecar {
    pub dims: [usize; 3],
    pub h: f64,
    pub origin: [f64; 3],
    #[serde(default = "default_threshold")]
    pub threshold: u16,
}

/// `volume.raw` pairs with `volume.json` unless a sidecar path is given.
pub fn sidecar_path(volume: &Path) -> PathBuf {
    volume.with_extension("json")
}

pub fn load_volume(path: &Path, sidecar: Option<&Path>) -> Result<VoxelSet> {
    let sc_path = sidecar.map(Path::to_path_buf).unwrap_or_else(|| sidecar_path(path));
    let text = fs::read_to_string(&sc_path).map_err(|e| Error::io(&sc_path, e))?;
    let sc: VolumeSidecar =
        serde_json::from_str(&text).map_err(|e| Error::format(&sc_path, e.to_string()))?;
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let [nx, ny, nz] = sc.dims;
    if data.len() != nx * ny * nz {
        return Err(Error::format(
            path,
            format!("expected {} bytes, found {}", nx * ny * nz, data.len()),
        ));
    }
    let mut set = VoxelSet::empty(3, sc.h, &sc.origin, &[0, 0, 0], &sc.dims)?;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if data[x + nx * (y + ny * z)] as u16 >= sc.threshold {
                    set.set([x as i64, y as i64, z as i64], true)?;
                }
            }
        }
    }
    Ok(set)
}

pub fn save_volume(set: &VoxelSet, path: &Path) -> Result<()> {
    if set.dim() != 3 {
        return Err(Error::domain("raw volume export needs a 3D set"));
    }
    let [nx, ny, nz] = set.ext();
    let lo = set.lo();
    let mut data = vec![0u8; nx * ny * nz];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                if set.get([lo[0] + x as i64, lo[1] + y as i64, lo[2] + z as i64]) {
                    data[x + nx * (y + ny * z)] = 255;
                }
            }
        }
    }
    let o = set.origin_slots();
    let h = set.h();
    let sc = VolumeSidecar {
        dims: [nx, ny, nz],
        h,
        origin: [
            o[0] + lo[0] as f64 * h,
            o[1] + lo[1] as f64 * h,
            o[2] + lo[2] as f64 * h,
        ],
        threshold: default_threshold(),
    };
    fs::write(path, data).map_err(|e| Error::io(path, e))?;
    let sc_path = sidecar_path(path);
    fs::write(&sc_path, serde_json::to_string_pretty(&sc)?).map_err(|e| Error::io(&sc_path, e))
}

pub fn load_shape(path: &Path) -> Result<ShapeSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

pub fn save_shape(spec: &ShapeSpec, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(spec)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::RasterOptions;

    #[test]
    fn pbm_roundtrip() {
        let disk = ShapeSpec::ball(&[0.3, -0.2], 0.6)
            .rasterize(&RasterOptions::new(0.05, 0.1), None)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("disk.pbm");
        save_pbm(&disk, &p).unwrap();
        let o = disk.grid_info().origin;
        let mut opts = ImportOptions::new(0.05);
        opts.origin = Some(o);
        let back = load_image(&p, &opts).unwrap();
        assert_eq!(back.occupied_count(), disk.occupied_count());
        for g in disk.occupied_cells() {
            let c = disk.cell_center(g);
            let lo = disk.lo();
            let bg = [g[0] - lo[0], 0, g[2] - lo[2]];
            assert!(back.get(bg));
            let bc = back.cell_center(bg);
            assert!((bc[0] - c[0]).abs() < 1e-12 && (bc[1] - c[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn pgm_threshold_and_orientation() {
        // 3x2 image; top row bright on the left
        let mut bytes = b"P5\n# comment\n3 2\n255\n".to_vec();
        bytes.extend([200, 10, 128, 0, 127, 255]);
        let img = decode_pnm(&bytes, Path::new("mem")).unwrap();
        let set = image_to_set(&img, &ImportOptions::new(1.0)).unwrap();
        let cells: Vec<_> = set.occupied_cells().collect();
        assert_eq!(cells, vec![[0, 0, 1], [2, 0, 0], [2, 0, 1]]);
        let mut o = ImportOptions::new(1.0);
        o.threshold = 10;
        assert_eq!(image_to_set(&img, &o).unwrap().occupied_count(), 5);
    }

    #[test]
    fn rejects_ascii_and_truncated() {
        assert!(decode_pnm(b"P2\n1 1\n255\n0\n", Path::new("x")).is_err());
        assert!(decode_pnm(b"P5\n4 4\n255\n\x00\x01", Path::new("x")).is_err());
        assert!(decode_pnm(b"", Path::new("x")).is_err());
    }

    #[test]
    fn volume_roundtrip() {
        let ball = ShapeSpec::ball(&[0.0, 0.1, 0.2], 0.4)
            .rasterize(&RasterOptions::new(0.1, 0.1), None)
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ball.raw");
        save_volume(&ball, &p).unwrap();
        let back = load_volume(&p, None).unwrap();
        assert_eq!(back.occupied_count(), ball.occupied_count());
        assert_eq!(back.ext(), ball.ext());
        std::fs::write(&p, [0u8; 3]).unwrap();
        assert!(load_volume(&p, None).is_err());
    }

    #[test]
    fn shape_file_roundtrip() {
        let s = ShapeSpec::union(vec![
            ShapeSpec::ball(&[0.0, 0.0], 1.0),
            ShapeSpec::cuboid(&[0.0, 0.0], &[2.0, 0.5]),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.json");
        save_shape(&s, &p).unwrap();
        assert_eq!(load_shape(&p).unwrap(), s);
        assert!(load_shape(&dir.path().join("missing.json")).is_err());
    }
}
