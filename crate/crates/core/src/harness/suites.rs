use serde::{Deserialize, Serialize};

use super::VerificationReport;
use crate::error::{Error, Result};
use crate::fibers::{
    check_domain_hypotheses, check_ordered_curvature, classify_boundary, decompose, record_curvatures, PointClass,
};
use crate::kernel::RadialKernel;
use crate::measure::{
    curvature_modulus, perimeter_decomposition, ModulusReport, PerimeterDecomposition, QuadratureOptions,
};
use crate::moving_plane::{analyze_symmetry, Verdict};
use crate::setrep::{RasterOptions, ShapeSpec, VoxelSet};

const MODULUS_SAMPLES: usize = 256;

/// Curvature differences between the two ends of every multi-cell fiber
/// interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointGaps {
    pub pairs: usize,
    pub max_gap: f64,
    /// `(bottom, top)` of the pair attaining `max_gap`.
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
    /// `sum |H(top) - H(bottom)| h^(n-1)`
    pub gap_integral: f64,
    /// `sum (H(top) - H(bottom)) h^(n-1)`
    pub signed_integral: f64,
    /// `h^(n-1)` times the number of fiber intervals: the projection measure
    /// counted once per interval above each column.
    pub interval_measure: f64,
}

pub fn endpoint_gaps(set: &VoxelSet, kernel: &RadialKernel) -> Result<EndpointGaps> {
    let decomp = decompose(set);
    let recs = classify_boundary(set, &decomp)?;
    let vals = record_curvatures(set, kernel, &recs, QuadratureOptions::default())?;
    let dh = set.h().powi(set.dim() as i32 - 1);
    let mut out = EndpointGaps {
        pairs: 0,
        max_gap: 0.0,
        worst: None,
        gap_integral: 0.0,
        signed_integral: 0.0,
        interval_measure: decomp.columns.iter().map(|c| c.intervals.len()).sum::<usize>() as f64 * dh,
    };
    let mut abs_sum = crate::accum::ExactSum::new();
    let mut signed_sum = crate::accum::ExactSum::new();
    let mut bottom: Option<usize> = None;
    for (i, r) in recs.iter().enumerate() {
        match r.class {
            PointClass::Bottom => bottom = Some(i),
            PointClass::Top => {
                let b = bottom.take().expect("records list each bottom before its top");
                let d = vals[i] - vals[b];
                out.pairs += 1;
                abs_sum.add(d.abs());
                signed_sum.add(d);
                if d.abs() > out.max_gap || out.worst.is_none() {
                    out.max_gap = out.max_gap.max(d.abs());
                    out.worst = Some((recs[b].position.clone(), r.position.clone()));
                }
            }
            _ => {}
        }
    }
    out.gap_integral = abs_sum.value() * dh;
    out.signed_integral = signed_sum.value() * dh;
    Ok(out)
}

fn describe(set: &VoxelSet, kernel: &RadialKernel) -> String {
    format!("{} r={} h={}", kernel.family_name(), kernel.horizon(), set.h())
}

fn modulus(set: &VoxelSet, kernel: &RadialKernel) -> Result<ModulusReport> {
    curvature_modulus(set, kernel, MODULUS_SAMPLES, QuadratureOptions::default())
}

/// Paired endpoints of every fiber interval must carry equal curvature, up to
/// `C_Lip h` with `C_Lip` the modulus measured on the input.
pub fn verify_pairwise_equal_curvature(set: &VoxelSet, kernel: &RadialKernel) -> Result<VerificationReport> {
    let mut rep = VerificationReport::new("pairwise_equal_curvature");
    let inputs = describe(set, kernel);
    let m = modulus(set, kernel)?;
    let tol = m.value * set.h();
    let gaps = endpoint_gaps(set, kernel)?;
    let note = gaps
        .worst
        .as_ref()
        .map(|(b, t)| format!("{} pairs; worst bottom {b:?} top {t:?}", gaps.pairs));
    rep.check("endpoint_gap_max", &inputs, gaps.max_gap, tol, note);
    rep.check(
        "endpoint_gap_integral",
        &inputs,
        gaps.gap_integral,
        tol * gaps.interval_measure,
        None,
    );
    rep.check(
        "curvature_modulus",
        &inputs,
        m.value,
        m.bound + m.allowance,
        Some(format!("analytic {:.6e} + grid allowance {:.6e}", m.bound, m.allowance)),
    );
    Ok(rep)
}

/// Five-term identity for every `t`, decay of the kernel interaction terms
/// divided by `t`, and agreement of the curvature rate with the endpoint
/// statistic.
pub fn verify_translation_derivative(
    set: &VoxelSet,
    kernel: &RadialKernel,
    t_list: &[f64],
) -> Result<VerificationReport> {
    let r = kernel.horizon();
    for &t in t_list {
        if !(t > 0.0 && t <= r / 4.0) {
            return Err(Error::domain(format!("t = {t} must lie in (0, r/4] = (0, {}]", r / 4.0)));
        }
        set.cells_for_length(t)?;
    }
    let mut rep = VerificationReport::new("translation_derivative");
    let base = describe(set, kernel);
    let gaps = endpoint_gaps(set, kernel)?;
    let m = modulus(set, kernel)?;
    let mut ts: Vec<f64> = t_list.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    let mut decomps: Vec<PerimeterDecomposition> = Vec::new();
    for &t in &ts {
        let d = perimeter_decomposition(set, kernel, t, QuadratureOptions::default())?;
        let inputs = format!("{base} t={t}");
        rep.check(
            "five_term_identity",
            &inputs,
            d.residual() / d.scale().max(f64::MIN_POSITIVE),
            1e-10,
            None,
        );
        let rate = (d.curvature_added - d.curvature_removed) / t;
        rep.check(
            "curvature_rate_vs_endpoints",
            &inputs,
            (rate - gaps.signed_integral).abs(),
            m.value * (t + set.h()) * gaps.interval_measure,
            Some(format!("rate {rate:.6e}, endpoint statistic {:.6e}", gaps.signed_integral)),
        );
        decomps.push(d);
    }
    let interaction = |d: &PerimeterDecomposition| (d.cross.abs() + d.removed_self + d.added_self) / d.t;
    for w in decomps.windows(2) {
        let (big, small) = (&w[0], &w[1]);
        let ratio = interaction(small) / interaction(big);
        rep.check(
            "interaction_rate_decreases",
            format!("{base} t={} -> {}", big.t, small.t),
            ratio,
            1.0,
            Some(format!(
                "(|2K(E,F)| + K(F,F) + K(E,E)) / t: {:.6e} -> {:.6e}",
                interaction(big),
                interaction(small)
            )),
        );
    }
    Ok(rep)
}

/// Analytic symmetry plane orthogonal to the last axis, for expressions whose
/// parts all share one.
pub fn symmetry_plane(spec: &ShapeSpec) -> Option<f64> {
    let n = spec.dim().ok()??;
    plane_of(spec, n - 1)
}

fn plane_of(spec: &ShapeSpec, axis: usize) -> Option<f64> {
    let same = |parts: &[&ShapeSpec]| {
        let planes: Option<Vec<f64>> = parts.iter().map(|p| plane_of(p, axis)).collect();
        let planes = planes?;
        let first = *planes.first()?;
        planes.iter().all(|&p| p == first).then_some(first)
    };
    match spec {
        ShapeSpec::Ball { center, .. } | ShapeSpec::Ellipsoid { center, .. } => center.get(axis).copied(),
        ShapeSpec::Box { lo, hi } => Some(0.5 * (lo.get(axis)? + hi.get(axis)?)),
        ShapeSpec::Union(parts) | ShapeSpec::Intersection(parts) => same(&parts.iter().collect::<Vec<_>>()),
        ShapeSpec::Difference(a, b) => same(&[a, b]),
        ShapeSpec::Translate { offset, shape } => Some(plane_of(shape, axis)? + offset.get(axis)?),
        ShapeSpec::Reflect { axis: a, at, shape } => {
            let p = plane_of(shape, axis)?;
            Some(if *a == axis { 2.0 * at - p } else { p })
        }
        ShapeSpec::Empty | ShapeSpec::HalfSpace { .. } => None,
    }
}

/// For each `h`: rasterize, gate on the domain and ordered-curvature
/// hypotheses, sweep, and compare with the expected plane; then compare
/// critical planes across consecutive resolutions.
pub fn verify_main_theorem(
    spec: &ShapeSpec,
    kernel: &RadialKernel,
    h_list: &[f64],
    padding: f64,
    expected_plane: Option<f64>,
) -> Result<VerificationReport> {
    if padding < kernel.horizon() {
        return Err(Error::Padding(format!(
            "padding {padding} is smaller than the horizon {}",
            kernel.horizon()
        )));
    }
    let mut rep = VerificationReport::new("main_theorem");
    let expected = expected_plane.or_else(|| symmetry_plane(spec));
    let mut sets = Vec::with_capacity(h_list.len());
    let mut unmet: Vec<String> = Vec::new();
    for &h in h_list {
        let set = spec.rasterize(&RasterOptions::new(h, padding), Some(kernel.dim()))?;
        let domain = check_domain_hypotheses(&set, kernel)?;
        if !domain.connected {
            unmet.push(format!("h={h}: {} components", domain.components));
        }
        if !domain.diameter_gate {
            unmet.push(format!("h={h}: diameter {} <= 2r", domain.diameter));
        }
        if domain.shell.as_ref().is_some_and(|s| !s.passed) {
            unmet.push(format!("h={h}: empty horizon shell"));
        }
        if domain.passed {
            let m = modulus(&set, kernel)?;
            let ordered = check_ordered_curvature(&set, kernel, 4.0 * m.value * h)?;
            if !ordered.passed {
                unmet.push(format!(
                    "h={h}: ordered curvature violated by {:.6e} > tol {:.6e}",
                    ordered.max_violation, ordered.tol
                ));
            }
        }
        sets.push((h, set));
    }
    // The hypotheses belong to the continuum set, so a violation seen at any
    // resolution rules the input out at all of them.
    if !unmet.is_empty() {
        for (_, set) in &sets {
            rep.not_applicable("symmetry", describe(set, kernel), format!("hypotheses unmet: {}", unmet.join("; ")));
        }
        return Ok(rep);
    }
    let mut planes: Vec<(f64, f64)> = Vec::new();
    for (h, set) in sets {
        let inputs = describe(&set, kernel);
        let sym = analyze_symmetry(&set)?;
        rep.check(
            "symmetry_defect",
            &inputs,
            sym.defect,
            sym.tolerance,
            Some(format!("lambda0 {} ({:?}, {:?})", sym.lambda0, sym.event, sym.verdict)),
        );
        if sym.verdict == Verdict::Asymmetric {
            rep.check("verdict_symmetric", &inputs, 1.0, 0.0, Some(format!("{:?}", sym.event)));
        }
        if let Some(p) = expected {
            rep.check("lambda0_vs_plane", &inputs, (sym.lambda0 - p).abs(), h, Some(format!("plane {p}")));
        }
        planes.push((h, sym.lambda0));
    }
    planes.sort_by(|a, b| b.0.total_cmp(&a.0));
    for w in planes.windows(2) {
        let ((hc, lc), (hf, lf)) = (w[0], w[1]);
        rep.check(
            "lambda0_stability",
            format!("{} r={} h={hc} -> {hf}", kernel.family_name(), kernel.horizon()),
            (lc - lf).abs(),
            2.0 * hc,
            None,
        );
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub name: String,
    pub spec: ShapeSpec,
    #[serde(default)]
    pub expected_plane: Option<f64>,
}

/// Inputs x kernels x resolutions run by [`run_matrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationMatrix {
    pub inputs: Vec<MatrixEntry>,
    pub kernels: Vec<RadialKernel>,
    pub h_list: Vec<f64>,
    pub padding: f64,
    /// Translation steps in cells for the derivative suite.
    pub t_cells: Vec<i64>,
}

impl VerificationMatrix {
    /// Shipped corpus, the three built-in kernels at `r = 0.4`, `h = 1/64, 1/128`.
    pub fn standard() -> Self {
        let mut inputs: Vec<MatrixEntry> = super::corpus::symmetric_corpus()
            .into_iter()
            .map(|(name, spec)| MatrixEntry {
                name,
                spec,
                expected_plane: None,
            })
            .collect();
        inputs.extend(super::corpus::violating_blobs().into_iter().map(|(name, spec)| MatrixEntry {
            name,
            spec,
            expected_plane: None,
        }));
        Self {
            inputs,
            kernels: vec![
                RadialKernel::characteristic_ball(0.4, 2).expect("valid kernel"),
                RadialKernel::tent(0.4, 2).expect("valid kernel"),
                RadialKernel::smooth_bump(0.4, 2).expect("valid kernel"),
            ],
            h_list: vec![1.0 / 64.0, 1.0 / 128.0],
            padding: 0.5,
            t_cells: vec![4, 2, 1],
        }
    }
}

/// Runs every suite on every matrix cell. Pairwise and translation suites
/// are only run where the domain hypotheses hold; elsewhere they are marked
/// not applicable.
pub fn run_matrix(matrix: &VerificationMatrix) -> Result<VerificationReport> {
    let mut all = VerificationReport::new("matrix");
    for entry in &matrix.inputs {
        for kernel in &matrix.kernels {
            for &h in &matrix.h_list {
                let set = entry.spec.rasterize(&RasterOptions::new(h, matrix.padding), Some(kernel.dim()))?;
                let tag = |mut r: VerificationReport| {
                    for rec in &mut r.records {
                        rec.inputs = format!("{} {}", entry.name, rec.inputs);
                    }
                    r
                };
                all.extend(tag(verify_pairwise_equal_curvature(&set, kernel)?));
                let ts: Vec<f64> = matrix
                    .t_cells
                    .iter()
                    .map(|&k| k as f64 * h)
                    .filter(|&t| t <= kernel.horizon() / 4.0)
                    .collect();
                if !ts.is_empty() {
                    all.extend(tag(verify_translation_derivative(&set, kernel, &ts)?));
                }
            }
            let main = verify_main_theorem(&entry.spec, kernel, &matrix.h_list, matrix.padding, entry.expected_plane)?;
            let mut main = main;
            for rec in &mut main.records {
                rec.inputs = format!("{} {}", entry.name, rec.inputs);
            }
            all.extend(main);
        }
    }
    Ok(all)
}
