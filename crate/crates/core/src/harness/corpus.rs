//! Reference inputs: shapes symmetric about a horizontal plane and seeded
//! blobs that are not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::setrep::ShapeSpec;

/// Seeds of the shipped violating blobs.
pub const BLOB_SEEDS: [u64; 3] = [1, 2, 3];

pub fn symmetric_corpus() -> Vec<(String, ShapeSpec)> {
    vec![
        ("disk".into(), ShapeSpec::ball(&[0.3, 0.9], 0.5)),
        (
            "annulus".into(),
            ShapeSpec::difference(ShapeSpec::ball(&[0.0, 0.0], 1.0), ShapeSpec::ball(&[0.0, 0.0], 0.5)),
        ),
        ("ellipse".into(), ShapeSpec::ellipsoid(&[0.1, -0.3], &[0.8, 0.45])),
        (
            "stacked_balls".into(),
            ShapeSpec::union(vec![ShapeSpec::ball(&[0.0, 0.0], 0.4), ShapeSpec::ball(&[0.0, 1.3], 0.4)]),
        ),
    ]
}

/// A disk of radius 0.6 with two to four smaller disks attached to its lower
/// half. The upper boundary stays round while the lower one is bumpy, so
/// paired fiber endpoints see different curvature.
pub fn violating_blob(seed: u64) -> ShapeSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(2..=4);
    let mut parts = vec![ShapeSpec::ball(&[0.0, 0.0], 0.6)];
    for _ in 0..count {
        let angle = rng.random_range(1.15 * std::f64::consts::PI..1.85 * std::f64::consts::PI);
        let radius = rng.random_range(0.15..0.25);
        let dist = 0.6 + 0.4 * radius;
        let round = |v: f64| (v * 1e6).round() / 1e6;
        parts.push(ShapeSpec::ball(
            &[round(dist * angle.cos()), round(dist * angle.sin())],
            round(radius),
        ));
    }
    ShapeSpec::union(parts)
}

pub fn violating_blobs() -> Vec<(String, ShapeSpec)> {
    BLOB_SEEDS
        .iter()
        .map(|&s| (format!("blob_{s}"), violating_blob(s)))
        .collect()
}

/// Every corpus shape by file stem.
pub fn full_corpus() -> Vec<(String, ShapeSpec)> {
    let mut all = symmetric_corpus();
    all.extend(violating_blobs());
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setrep::io::load_shape;
    use std::path::Path;

    #[test]
    fn blobs_are_reproducible() {
        assert_eq!(violating_blob(7), violating_blob(7));
        assert_ne!(violating_blob(1), violating_blob(2));
    }

    #[test]
    fn shipped_files_match_generator() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
        for (name, spec) in full_corpus() {
            let file = dir.join(format!("{name}.json"));
            assert_eq!(load_shape(&file).unwrap(), spec, "{name}");
        }
    }
}
