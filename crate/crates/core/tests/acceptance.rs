use std::f64::consts::PI;
use std::time::Instant;

use ordcurv::fibers::{check_domain_hypotheses, nondegeneracy_quotient};
use ordcurv::harness::corpus::{full_corpus, symmetric_corpus, violating_blobs};
use ordcurv::harness::{endpoint_gaps, run_matrix, verify_main_theorem, Status, VerificationMatrix};
use ordcurv::measure::{
    curvature_at, curvature_modulus, perimeter, perimeter_decomposition, CurvatureEvaluator,
};
use ordcurv::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 0.4;

fn kernels() -> Vec<RadialKernel> {
    vec![
        RadialKernel::characteristic_ball(R, 2).unwrap(),
        RadialKernel::tent(R, 2).unwrap(),
        RadialKernel::smooth_bump(R, 2).unwrap(),
    ]
}

fn raster(spec: &ShapeSpec, h: f64) -> VoxelSet {
    spec.rasterize(&RasterOptions::new(h, 0.5), Some(2)).unwrap()
}

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
}

fn lens(big: f64, small: f64, d: f64) -> f64 {
    let (r, rr) = (small, big);
    r * r * ((d * d + r * r - rr * rr) / (2.0 * d * r)).acos()
        + rr * rr * ((d * d + rr * rr - r * r) / (2.0 * d * rr)).acos()
        - 0.5 * ((-d + r + rr) * (d + r - rr) * (d - r + rr) * (d + r + rr)).sqrt()
}

#[test]
fn criterion_1_half_space_face() {
    let h = 1.0 / 256.0;
    let slab = ShapeSpec::cuboid(&[-1.0, -1.0], &[1.0, 0.0]);
    let set = raster(&slab, h);
    let k = RadialKernel::characteristic_ball(R, 2).unwrap();
    let t = Instant::now();
    let v = curvature_at(&set, &k, &[0.0, 0.0]).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = v.abs() <= 4.0 * R * h && secs < 1.0;
    report(1, ok, format!("|H| = {:.3e} <= {:.3e}, {secs:.3}s", v.abs(), 4.0 * R * h));
    assert!(ok);
}

#[test]
fn criterion_2_lens_oracle() {
    let exact = PI * 0.25 - 2.0 * lens(1.0, 0.5, 1.0);
    let k = RadialKernel::characteristic_ball(0.5, 2).unwrap();
    let err = |h: f64| {
        let set = ShapeSpec::ball(&[0.0, 0.0], 1.0)
            .rasterize(&RasterOptions::new(h, 0.6), None)
            .unwrap();
        let v = CurvatureEvaluator::new(&set, &k, QuadratureOptions::default())
            .unwrap()
            .at(&[1.0, 0.0])
            .unwrap();
        ((v - exact) / exact).abs()
    };
    let (e256, e512) = (err(1.0 / 256.0), err(1.0 / 512.0));
    let ratio = e256 / e512;
    let ok = (exact - 0.0839).abs() < 5e-4 && e256 <= 0.02 && (1.4..=2.6).contains(&ratio);
    report(
        2,
        ok,
        format!("exact {exact:.6}, rel err {e256:.3e} at 1/256, {e512:.3e} at 1/512, ratio {ratio:.2}"),
    );
    assert!(ok);
}

fn random_shape(rng: &mut ChaCha8Rng) -> ShapeSpec {
    let mut parts = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let c = [rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4)];
        parts.push(match rng.random_range(0..3) {
            0 => ShapeSpec::ball(&c, rng.random_range(0.15..0.5)),
            1 => ShapeSpec::ellipsoid(&c, &[rng.random_range(0.15..0.5), rng.random_range(0.15..0.5)]),
            _ => {
                let w = [rng.random_range(0.1..0.4), rng.random_range(0.1..0.4)];
                ShapeSpec::cuboid(&[c[0] - w[0], c[1] - w[1]], &[c[0] + w[0], c[1] + w[1]])
            }
        });
    }
    ShapeSpec::union(parts)
}

#[test]
fn criterion_3_exact_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 4];
    let mut failures = Vec::new();
    for case in 0..100 {
        let spec = random_shape(&mut rng);
        let h = [1.0 / 32.0, 1.0 / 48.0, 1.0 / 64.0][rng.random_range(0..3)];
        let r = rng.random_range(0.2..0.45);
        let k = match rng.random_range(0..3) {
            0 => RadialKernel::characteristic_ball(r, 2),
            1 => RadialKernel::tent(r, 2),
            _ => RadialKernel::smooth_bump(r, 2),
        }
        .unwrap();
        let set = raster(&spec, h);
        let lo = set.occupied_bounds().unwrap().0[2];
        let lambda = set.plane_position(2 * lo + rng.random_range(0..40));
        let mirrored = set.reflect(lambda).unwrap();
        let involution = mirrored.reflect(lambda).unwrap().same_cells(&set);

        let m = rng.random_range(1..12);
        let moved = set.shifted_cells(m);
        let x = [rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6)];
        let h0 = curvature_at(&set, &k, &x).unwrap();
        let h_moved = curvature_at(&moved, &k, &[x[0], x[1] + m as f64 * h]).unwrap();
        let h_mirror = curvature_at(&mirrored, &k, &[x[0], 2.0 * lambda - x[1]]).unwrap();
        let scale = k.total_mass();
        let eq = ((h_moved - h0).abs() / scale).max((h_mirror - h0).abs() / scale);

        let p0 = perimeter(&set, &k).unwrap();
        let p1 = perimeter(&moved, &k).unwrap();
        let pinv = (p1 - p0).abs() / p0;

        let t = rng.random_range(1..=((r / 4.0 / h).floor() as i64).max(1)) as f64 * h;
        let d = perimeter_decomposition(&set, &k, t, QuadratureOptions::default()).unwrap();
        let five = d.residual() / d.scale();

        worst = [worst[0], worst[1].max(eq), worst[2].max(pinv), worst[3].max(five)];
        if !involution || eq > 1e-10 || pinv > 1e-10 || five > 1e-10 {
            failures.push(format!("case {case}: inv {involution} eq {eq:.2e} perim {pinv:.2e} five {five:.2e}"));
        }
    }
    let ok = failures.is_empty();
    report(
        3,
        ok,
        format!(
            "100 cases; max equivariance {:.2e}, perimeter drift {:.2e}, five-term residual {:.2e}",
            worst[1], worst[2], worst[3]
        ),
    );
    assert!(ok, "{failures:#?}");
}

fn boundary_spread(set: &VoxelSet, k: &RadialKernel) -> f64 {
    let ev = CurvatureEvaluator::new(set, k, QuadratureOptions::default()).unwrap();
    let v = ev.cells(&set.boundary_cells());
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    let min = v.iter().cloned().fold(f64::MAX, f64::min);
    max - min
}

#[test]
fn criterion_4_constant_curvature_on_spheres() {
    let one = ShapeSpec::ball(&[0.0, 0.0], 0.5);
    let two = ShapeSpec::union(vec![ShapeSpec::ball(&[-0.75, 0.0], 0.5), ShapeSpec::ball(&[0.75, 0.0], 0.5)]);
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, spec) in [("disk", &one), ("two disks", &two)] {
        for k in kernels() {
            let c: Vec<f64> = [64.0, 128.0, 256.0]
                .iter()
                .map(|&n| boundary_spread(&raster(spec, 1.0 / n), &k) * n)
                .collect();
            let hi = c.iter().cloned().fold(f64::MIN, f64::max);
            let lo = c.iter().cloned().fold(f64::MAX, f64::min);
            let stable = hi <= 2.0 && hi / lo <= 1.5;
            ok &= stable;
            lines.push(format!("{name} {}: spread/h {c:.3?}", k.family_name()));
        }
    }
    report(4, ok, format!("C <= 2, max/min <= 1.5; {}", lines.join("; ")));
    assert!(ok);
}

#[test]
fn criterion_5_endpoint_gaps() {
    let h = 1.0 / 128.0;
    let mut ok = true;
    let mut lines = Vec::new();
    let mut eval = |name: &str, spec: &ShapeSpec, violating: bool| {
        let set = raster(spec, h);
        for k in kernels() {
            let c = curvature_modulus(&set, &k, 256, QuadratureOptions::default()).unwrap().value;
            let g = endpoint_gaps(&set, &k).unwrap();
            let ratio = g.max_gap / (c * h);
            let good = if violating { ratio > 10.0 } else { ratio <= 1.0 };
            ok &= good;
            lines.push(format!(
                "{} {name} {}: gap/(C h) = {ratio:.2}",
                if good { "ok" } else { "BAD" },
                k.family_name()
            ));
        }
    };
    for (name, spec) in symmetric_corpus() {
        eval(&name, &spec, false);
    }
    for (name, spec) in violating_blobs() {
        eval(&name, &spec, true);
    }
    report(5, ok, format!("symmetric <= 1, blobs > 10; {}", lines.join("; ")));
    assert!(ok, "{lines:#?}");
}

#[test]
fn criterion_6_moving_plane_end_to_end() {
    let t = Instant::now();
    let mut ok = true;
    let mut applicable = Vec::new();
    for (name, spec) in full_corpus() {
        for k in kernels() {
            let rep = verify_main_theorem(&spec, &k, &[1.0 / 128.0, 1.0 / 256.0], 0.5, None).unwrap();
            if rep.records.iter().any(|r| r.status != Status::NotApplicable) {
                applicable.push(format!("{name} {}", k.family_name()));
            }
            if !rep.passed {
                println!("{}", rep.to_table());
            }
            ok &= rep.passed;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < 120.0 && applicable.len() >= 6;
    report(6, ok, format!("{secs:.1}s; applicable: {}", applicable.join(", ")));
    assert!(ok);
}

#[test]
fn criterion_7_lipschitz_bound() {
    let h = 1.0 / 128.0;
    let mut ok = true;
    let mut worst = 0.0f64;
    for (name, spec) in full_corpus() {
        let set = raster(&spec, h);
        for k in kernels() {
            let m = curvature_modulus(&set, &k, 256, QuadratureOptions::default()).unwrap();
            worst = worst.max(m.value / (m.bound + m.allowance));
            if !m.within_bound() {
                ok = false;
                println!("{name} {}: {} > {} + {}", k.family_name(), m.value, m.bound, m.allowance);
            }
        }
    }
    report(7, ok, format!("max modulus / (bound + allowance) = {worst:.3}"));
    assert!(ok);
}

#[test]
fn criterion_8_nondegeneracy_and_diameter_gate() {
    let h = 1.0 / 128.0;
    let mut ok = true;
    let mut lines = Vec::new();
    let disk = raster(&ShapeSpec::ball(&[0.0, 0.0], 0.5), h);
    for k in kernels() {
        let q = nondegeneracy_quotient(&disk, &k, 200, 7).unwrap();
        ok &= q.value > 0.0;
        lines.push(format!("{} quotient {:.3e}", k.family_name(), q.value));
    }
    let k = RadialKernel::tent(R, 2).unwrap();
    for (radius, accept) in [(0.25, false), (0.39, false), (0.45, true), (0.6, true)] {
        let d = check_domain_hypotheses(&raster(&ShapeSpec::ball(&[0.0, 0.0], radius), h), &k).unwrap();
        ok &= d.diameter_gate == accept;
        lines.push(format!("diam {:.3} gate {}", d.diameter, d.diameter_gate));
    }
    report(8, ok, lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_9_determinism_across_threads() {
    let matrix = VerificationMatrix::standard();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_matrix(&matrix).unwrap().to_json())
    };
    let one = run(1);
    let ok = [4, 8].iter().all(|&n| run(n) == one);
    report(9, ok, format!("{} report bytes, threads 1/4/8", one.len()));
    assert!(ok);
}
