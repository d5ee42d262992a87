use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use ordcurv::fibers::{
    check_domain_hypotheses, check_ordered_curvature, classify_boundary, decompose, default_order_tolerance,
    nondegeneracy_quotient, record_curvatures, write_classification_csv, DomainReport, NondegeneracyReport,
    OrderedCurvatureReport,
};
use ordcurv::harness::corpus::full_corpus;
use ordcurv::harness::{
    run_matrix, verify_main_theorem, verify_pairwise_equal_curvature, verify_translation_derivative,
    VerificationMatrix,
};
use ordcurv::measure::{curvature_field, curvature_heatmap, perimeter_with, write_field_csv_to};
use ordcurv::moving_plane::{analyze_symmetry, Verdict};
use ordcurv::setrep::io::{load_shape, save_shape};
use ordcurv::{RadialKernel, VerificationReport, VoxelSet};

use crate::config::{Format, RunConfig};
use crate::{Command, Failure};

pub fn run(cmd: Command) -> Result<bool, Failure> {
    match cmd {
        Command::Curvature {
            common,
            points,
            csv,
            heatmap,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            curvature(&cfg, points, csv.or(cfg.output.csv.clone()), heatmap.or(cfg.output.heatmap.clone()))
        }
        Command::Perimeter { common } => perimeter(&RunConfig::resolve(&common)?),
        Command::Classify {
            common,
            csv,
            with_curvature,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            classify(&cfg, csv.or(cfg.output.csv.clone()), with_curvature)
        }
        Command::Check {
            common,
            order_tol,
            pairs,
            seed,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            check(&cfg, order_tol.or(cfg.tolerances.order), pairs, seed)
        }
        Command::Symmetry { common, tolerance } => {
            let cfg = RunConfig::resolve(&common)?;
            symmetry(&cfg, tolerance.or(cfg.tolerances.symmetry))
        }
        Command::Verify {
            common,
            matrix,
            h_list,
            t_cells,
            expected_plane,
        } => {
            let mut cfg = RunConfig::resolve(&common)?;
            cfg.tolerances.h_list = h_list.or(cfg.tolerances.h_list);
            cfg.tolerances.t_cells = t_cells.or(cfg.tolerances.t_cells);
            cfg.tolerances.expected_plane = expected_plane.or(cfg.tolerances.expected_plane);
            match matrix {
                Some(m) => verify_matrix(&cfg, &m),
                None => verify(&cfg),
            }
        }
        Command::Corpus { out } => corpus(&out),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    write_to(cfg.output.report.as_deref(), text.as_bytes())
}

fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

fn to_json(v: &impl Serialize) -> Result<String, Failure> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Failure::usage(e.to_string()))
}

fn emit_report(cfg: &RunConfig, report: &VerificationReport) -> Result<bool, Failure> {
    let text = match cfg.format()? {
        Format::Json => report.to_json() + "\n",
        Format::Table => report.to_table(),
    };
    emit(cfg, &text)?;
    Ok(report.passed)
}

fn read_points(path: &Path, dim: usize) -> Result<Vec<Vec<f64>>, Failure> {
    let bad = |msg: String| Failure::usage(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut points = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(p) if p.len() == dim => points.push(p),
            Ok(p) => return Err(bad(format!("row {}: expected {dim} coordinates, found {}", line + 1, p.len()))),
            Err(_) if line == 0 => continue,
            Err(_) => return Err(bad(format!("row {}: non-numeric entry", line + 1))),
        }
    }
    Ok(points)
}

fn curvature(
    cfg: &RunConfig,
    points: Option<PathBuf>,
    csv: Option<PathBuf>,
    heatmap: Option<PathBuf>,
) -> Result<bool, Failure> {
    let (set, kernel) = cfg.load_with_kernel()?;
    let pts = match &points {
        Some(p) => read_points(p, set.dim())?,
        None => set.boundary_cells().into_iter().map(|g| set.cell_center(g)).collect(),
    };
    let field = curvature_field(&set, &kernel, pts, cfg.quadrature())?;
    let mut buf = Vec::new();
    write_field_csv_to(&field, &mut buf)?;
    write_to(csv.as_deref(), &buf)?;
    if let Some(path) = heatmap {
        curvature_heatmap(&set, &kernel, cfg.quadrature())?.save(&path)?;
    }
    Ok(true)
}

fn perimeter(cfg: &RunConfig) -> Result<bool, Failure> {
    let (set, kernel) = cfg.load_with_kernel()?;
    let p = perimeter_with(&set, &kernel, cfg.quadrature())?;
    let text = match cfg.format()? {
        Format::Json => to_json(&json!({
            "perimeter": p,
            "kernel": kernel.family_name(),
            "horizon": kernel.horizon(),
            "volume": set.volume(),
            "grid": set.grid_info(),
        }))?,
        Format::Table => format!("perimeter {p:.17e}\n"),
    };
    emit(cfg, &text)?;
    Ok(true)
}

fn classify(cfg: &RunConfig, csv: Option<PathBuf>, with_curvature: bool) -> Result<bool, Failure> {
    let (set, kernel) = if with_curvature || cfg.has_kernel() {
        let (s, k) = cfg.load_with_kernel()?;
        (s, Some(k))
    } else {
        (cfg.load_set(None)?, None)
    };
    let records = classify_boundary(&set, &decompose(&set))?;
    let values = match (&kernel, with_curvature) {
        (Some(k), true) => Some(record_curvatures(&set, k, &records, cfg.quadrature())?),
        _ => None,
    };
    let mut buf = Vec::new();
    write_classification_csv(set.dim(), &records, values.as_deref(), &mut buf)?;
    write_to(csv.as_deref(), &buf)?;
    Ok(true)
}

#[derive(Serialize)]
struct HypothesisReport {
    ordered: OrderedCurvatureReport,
    domain: DomainReport,
    nondegeneracy: Option<NondegeneracyReport>,
    passed: bool,
}

fn hypotheses(
    set: &VoxelSet,
    kernel: &RadialKernel,
    order_tol: Option<f64>,
    pairs: usize,
    seed: u64,
) -> Result<HypothesisReport, Failure> {
    let tol = match order_tol {
        Some(t) => t,
        None => default_order_tolerance(set, kernel)?,
    };
    let ordered = check_ordered_curvature(set, kernel, tol)?;
    let domain = check_domain_hypotheses(set, kernel)?;
    let nondegeneracy = if pairs > 0 && set.boundary_cells().len() >= 2 {
        Some(nondegeneracy_quotient(set, kernel, pairs, seed)?)
    } else {
        None
    };
    let passed = ordered.passed && domain.passed && nondegeneracy.as_ref().is_none_or(|q| q.value > 0.0);
    Ok(HypothesisReport {
        ordered,
        domain,
        nondegeneracy,
        passed,
    })
}

fn check(cfg: &RunConfig, order_tol: Option<f64>, pairs: usize, seed: u64) -> Result<bool, Failure> {
    let (set, kernel) = cfg.load_with_kernel()?;
    let rep = hypotheses(&set, &kernel, order_tol, pairs, seed)?;
    let text = match cfg.format()? {
        Format::Json => to_json(&rep)?,
        Format::Table => {
            let mut s = String::new();
            let o = &rep.ordered;
            let d = &rep.domain;
            let _ = writeln!(s, "ordered curvature  max violation {:.6e}  tol {:.6e}  {}", o.max_violation, o.tol, verdict(o.passed));
            let _ = writeln!(s, "diameter gate      diam {:.6e}  2r {:.6e}  {}", d.diameter, 2.0 * d.horizon, verdict(d.diameter_gate));
            let _ = writeln!(s, "connected          {} component(s)  {}", d.components, verdict(d.connected));
            if let Some(sh) = &d.shell {
                let _ = writeln!(s, "horizon shell      min count {}  {}", sh.min_count, verdict(sh.passed));
            }
            if let Some(q) = &rep.nondegeneracy {
                let _ = writeln!(s, "nondegeneracy      quotient {:.6e}  {}", q.value, verdict(q.value > 0.0));
            }
            let _ = writeln!(s, "verdict: {}", verdict(rep.passed));
            s
        }
    };
    emit(cfg, &text)?;
    Ok(rep.passed)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn symmetry(cfg: &RunConfig, tolerance: Option<f64>) -> Result<bool, Failure> {
    let (set, kernel) = if cfg.has_kernel() {
        let (s, k) = cfg.load_with_kernel()?;
        (s, Some(k))
    } else {
        (cfg.load_set(None)?, None)
    };
    let mut rep = analyze_symmetry(&set)?;
    if let Some(t) = tolerance {
        rep.tolerance = t;
        rep.verdict = if rep.event != ordcurv::moving_plane::StoppingEvent::SweepExhausted && rep.defect <= t {
            Verdict::Symmetric
        } else {
            Verdict::Asymmetric
        };
    }
    if let Some(k) = &kernel {
        let h = hypotheses(&set, k, cfg.tolerances.order, 0, 0)?;
        rep.hypothesis_checks = Some(serde_json::to_value(&h).map_err(|e| Failure::usage(e.to_string()))?);
    }
    let text = match cfg.format()? {
        Format::Json => to_json(&rep)?,
        Format::Table => format!(
            "lambda0 {:.17e}\nevent {:?}\ndefect {:.6e}\ntolerance {:.6e}\nverdict: {:?}\n",
            rep.lambda0, rep.event, rep.defect, rep.tolerance, rep.verdict
        ),
    };
    emit(cfg, &text)?;
    Ok(rep.verdict == Verdict::Symmetric)
}

fn verify(cfg: &RunConfig) -> Result<bool, Failure> {
    let (set, kernel) = cfg.load_with_kernel()?;
    let h = set.h();
    let mut report = VerificationReport::new("verify");
    report.extend(verify_pairwise_equal_curvature(&set, &kernel)?);
    let t_cells = cfg.tolerances.t_cells.clone().unwrap_or_else(|| vec![4, 2, 1]);
    let ts: Vec<f64> = t_cells
        .iter()
        .map(|&k| k as f64 * h)
        .filter(|&t| t <= kernel.horizon() / 4.0)
        .collect();
    if ts.is_empty() {
        report.not_applicable("translation_derivative", "", "no translation step fits within r/4");
    } else {
        report.extend(verify_translation_derivative(&set, &kernel, &ts)?);
    }
    match &cfg.input.shape {
        Some(path) => {
            let spec = load_shape(path)?;
            let h_list = cfg.tolerances.h_list.clone().unwrap_or_else(|| vec![h, h / 2.0]);
            let padding = cfg.grid.padding.unwrap_or(kernel.horizon() + h);
            report.extend(verify_main_theorem(
                &spec,
                &kernel,
                &h_list,
                padding,
                cfg.tolerances.expected_plane,
            )?);
        }
        None => report.not_applicable("symmetry", "", "the symmetry suite refines analytic shapes only"),
    }
    emit_report(cfg, &report)
}

fn verify_matrix(cfg: &RunConfig, which: &str) -> Result<bool, Failure> {
    let matrix = if which == "standard" {
        VerificationMatrix::standard()
    } else {
        let text = std::fs::read_to_string(which).map_err(|e| Failure::usage(format!("cannot read {which}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("invalid matrix {which}: {e}")))?
    };
    for k in &matrix.kernels {
        if matrix.padding < k.horizon() {
            return Err(Failure::usage(format!(
                "matrix padding {} is smaller than the kernel horizon {}",
                matrix.padding,
                k.horizon()
            )));
        }
    }
    emit_report(cfg, &run_matrix(&matrix)?)
}

fn corpus(out: &Path) -> Result<bool, Failure> {
    std::fs::create_dir_all(out).map_err(|e| Failure::usage(format!("cannot create {}: {e}", out.display())))?;
    for (name, spec) in full_corpus() {
        save_shape(&spec, &out.join(format!("{name}.json")))?;
    }
    Ok(true)
}
