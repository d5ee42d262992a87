//! Run configuration: a TOML file whose values are overridden by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::Deserialize;

use ordcurv::measure::check_padding;
use ordcurv::setrep::io::{load_image, load_shape, load_volume, ImportOptions};
use ordcurv::{KernelFamily, QuadratureOptions, RadialKernel, RasterOptions, VoxelSet};

use crate::Failure;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub input: InputConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputConfig {
    pub shape: Option<PathBuf>,
    pub image: Option<PathBuf>,
    pub volume: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
    pub threshold: Option<u16>,
    pub origin: Option<Vec<f64>>,
    pub dim: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: Option<String>,
    pub r: Option<f64>,
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub normalized: bool,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub h: Option<f64>,
    pub padding: Option<f64>,
    #[serde(default)]
    pub supersample: bool,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    pub partial_volume: Option<bool>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub order: Option<f64>,
    pub symmetry: Option<f64>,
    pub h_list: Option<Vec<f64>>,
    pub t_cells: Option<Vec<i64>>,
    pub expected_plane: Option<f64>,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub heatmap: Option<PathBuf>,
    pub format: Option<String>,
}

/// Flags shared by every analysis command; each one overrides the config.
#[derive(Debug, Default, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,
    /// ShapeSpec JSON input.
    #[arg(long, conflicts_with_all = ["image", "volume"])]
    pub shape: Option<PathBuf>,
    /// PGM/PBM image input.
    #[arg(long, conflicts_with = "volume")]
    pub image: Option<PathBuf>,
    /// Raw uint8 volume with a JSON sidecar.
    #[arg(long)]
    pub volume: Option<PathBuf>,
    /// characteristic_ball (charball), tent, smooth_bump (bump) or table.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Kernel horizon.
    #[arg(long)]
    pub r: Option<f64>,
    /// Profile table CSV for the table kernel.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub padding: Option<f64>,
    #[arg(long)]
    pub supersample: bool,
    #[arg(long)]
    pub threshold: Option<u16>,
    /// Report destination (stdout when absent).
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    /// json or table.
    #[arg(long)]
    pub format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

impl RunConfig {
    /// Reads the config named by `args` (if any), resolves its paths against
    /// the config's directory, then applies the flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self, Failure> {
        let mut cfg = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
                let mut cfg: RunConfig = toml::from_str(&text)
                    .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.rebase(base);
                cfg
            }
            None => RunConfig::default(),
        };
        let set_path = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                *slot = v.clone();
            }
        };
        if args.shape.is_some() || args.image.is_some() || args.volume.is_some() {
            cfg.input.shape = args.shape.clone();
            cfg.input.image = args.image.clone();
            cfg.input.volume = args.volume.clone();
        }
        if args.kernel.is_some() {
            cfg.kernel.family = args.kernel.clone();
        }
        cfg.kernel.r = args.r.or(cfg.kernel.r);
        set_path(&mut cfg.kernel.table, &args.table);
        cfg.grid.h = args.h.or(cfg.grid.h);
        cfg.grid.padding = args.padding.or(cfg.grid.padding);
        cfg.grid.supersample |= args.supersample;
        cfg.input.threshold = args.threshold.or(cfg.input.threshold);
        set_path(&mut cfg.output.report, &args.output);
        if args.format.is_some() {
            cfg.output.format = args.format.clone();
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(q) = p {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        fix(&mut self.input.shape);
        fix(&mut self.input.image);
        fix(&mut self.input.volume);
        fix(&mut self.input.sidecar);
        fix(&mut self.kernel.table);
        fix(&mut self.output.report);
        fix(&mut self.output.csv);
        fix(&mut self.output.heatmap);
    }

    pub fn format(&self) -> Result<Format, Failure> {
        match self.output.format.as_deref() {
            None | Some("json") => Ok(Format::Json),
            Some("table") | Some("text") => Ok(Format::Table),
            Some(other) => Err(Failure::usage(format!("unknown format {other:?}; use json or table"))),
        }
    }

    pub fn quadrature(&self) -> QuadratureOptions {
        let d = QuadratureOptions::default();
        QuadratureOptions {
            partial_volume: self.quadrature.partial_volume.unwrap_or(d.partial_volume),
            normalize: self.quadrature.normalize.unwrap_or(d.normalize),
        }
    }

    pub fn has_kernel(&self) -> bool {
        self.kernel.family.is_some()
    }

    pub fn kernel(&self, dim: usize) -> Result<RadialKernel, Failure> {
        let name = self
            .kernel
            .family
            .as_deref()
            .ok_or_else(|| Failure::usage("no kernel given; use --kernel and --r or a [kernel] block"))?;
        let k = if matches!(name, "table" | "custom_profile_table") {
            let path = self
                .kernel
                .table
                .as_ref()
                .ok_or_else(|| Failure::usage("the table kernel needs --table <csv>"))?;
            RadialKernel::from_table_csv(path, dim)?
        } else {
            let family = match name {
                "characteristic_ball" | "charball" | "indicator" => KernelFamily::CharacteristicBall,
                "tent" => KernelFamily::Tent,
                "smooth_bump" | "bump" => KernelFamily::SmoothBump,
                other => return Err(Failure::usage(format!("unknown kernel family {other:?}"))),
            };
            let r = self
                .kernel
                .r
                .ok_or_else(|| Failure::usage("no horizon given; use --r or kernel.r"))?;
            RadialKernel::new(family, r, dim)?
        };
        Ok(if self.kernel.normalized { k.normalized() } else { k })
    }

    /// Loads the input set. With a kernel horizon `margin`, refuses inputs
    /// whose grids leave less than `margin` of empty space around the set.
    pub fn load_set(&self, margin: Option<f64>) -> Result<VoxelSet, Failure> {
        let i = &self.input;
        let set = if let Some(path) = &i.shape {
            let spec = load_shape(path)?;
            let h = self.grid.h.ok_or_else(|| Failure::usage("shape input needs a cell size (--h)"))?;
            let padding = match (self.grid.padding, margin) {
                (Some(p), Some(r)) if p < r => {
                    return Err(Failure::usage(format!(
                        "padding {p} is smaller than the kernel horizon {r}; horizons would be truncated"
                    )))
                }
                (Some(p), _) => p,
                (None, Some(r)) => r + h,
                (None, None) => h,
            };
            let opts = RasterOptions {
                h,
                padding,
                supersample: self.grid.supersample,
            };
            spec.rasterize(&opts, i.dim)?
        } else if let Some(path) = &i.image {
            let h = self.grid.h.ok_or_else(|| Failure::usage("image input needs a cell size (--h)"))?;
            let mut opts = ImportOptions::new(h);
            opts.origin = i.origin.clone();
            if let Some(t) = i.threshold {
                opts.threshold = t;
            }
            load_image(path, &opts)?
        } else if let Some(path) = &i.volume {
            load_volume(path, i.sidecar.as_deref())?
        } else {
            return Err(Failure::usage("no input given; use --shape, --image or --volume"));
        };
        if let Some(r) = margin {
            check_padding(&set, r)?;
        }
        Ok(set)
    }

    /// Dimension of the input without rasterizing it, where cheap.
    pub fn input_dim(&self) -> Result<usize, Failure> {
        if let Some(path) = &self.input.shape {
            return Ok(load_shape(path)?.dim()?.or(self.input.dim).unwrap_or(2));
        }
        Ok(if self.input.volume.is_some() { 3 } else { 2 })
    }

    /// Set and kernel for commands that need both.
    pub fn load_with_kernel(&self) -> Result<(VoxelSet, RadialKernel), Failure> {
        let kernel = self.kernel(self.input_dim()?)?;
        let set = self.load_set(Some(kernel.horizon()))?;
        Ok((set, kernel))
    }
}
