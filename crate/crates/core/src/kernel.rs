//! Radial, compactly supported interaction kernels.
//!
//! A kernel is `J(z) = scale * mu(|z|)` with `mu` vanishing for `|z| >= r` and
//! non-increasing on `(0, r]`. Four profile families are available; the
//! characteristic function of the ball is the indicator kernel, the others are
//! strictly decreasing with `mu(r) = 0`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Profile family of a [`RadialKernel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum KernelFamily {
    /// `mu = 1` on `[0, r)`.
    CharacteristicBall,
    /// `mu(rho) = 1 - rho / r`.
    Tent,
    /// `mu(rho) = (1 - (rho / r)^2)^2`.
    SmoothBump,
    /// Piecewise-linear interpolation of sampled `(rho, mu)` pairs.
    CustomProfileTable { rho: Vec<f64>, mu: Vec<f64> },
}

/// Which boundedness assumption the profile satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelClass {
    /// `J` is a multiple of the indicator of `B_r`.
    Indicator,
    /// `mu(r) = 0` and `mu` strictly decreasing on `(0, r)`.
    StrictlyDecreasing,
    /// Only radially non-increasing (custom tables with flat stretches).
    Monotone,
}

/// Supremum of `|grad J|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientBound {
    Finite(f64),
    /// The gradient is a surface measure (indicator kernels).
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialKernel {
    #[serde(flatten)]
    family: KernelFamily,
    r: f64,
    dim: usize,
    #[serde(default = "one")]
    scale: f64,
}

fn one() -> f64 {
    1.0
}

impl RadialKernel {
    pub fn new(family: KernelFamily, r: f64, dim: usize) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "horizon must be finite and positive, got {r}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidKernel("dimension must be at least 1".into()));
        }
        if let KernelFamily::CustomProfileTable { rho, mu } = &family {
            validate_table(rho, mu)?;
            let last = *rho.last().unwrap();
            if (last - r).abs() > 1e-12 * r.max(1.0) {
                return Err(Error::InvalidKernel(format!(
                    "profile table ends at rho = {last} but the horizon is {r}"
                )));
            }
        }
        Ok(Self {
            family,
            r,
            dim,
            scale: 1.0,
        })
    }

    pub fn characteristic_ball(r: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::CharacteristicBall, r, dim)
    }

    pub fn tent(r: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Tent, r, dim)
    }

    pub fn smooth_bump(r: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::SmoothBump, r, dim)
    }

    /// Custom profile; the horizon is the last tabulated radius.
    pub fn from_table(rho: Vec<f64>, mu: Vec<f64>, dim: usize) -> Result<Self> {
        validate_table(&rho, &mu)?;
        let r = *rho.last().unwrap();
        Self::new(KernelFamily::CustomProfileTable { rho, mu }, r, dim)
    }

    /// Reads a headerless or `rho,mu`-headed CSV of profile samples.
    pub fn from_table_csv(path: &Path, dim: usize) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_path(path)
            .map_err(|e| Error::format(path, e.to_string()))?;
        let (mut rho, mut mu) = (Vec::new(), Vec::new());
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::format(path, e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::format(
                    path,
                    format!("row {}: expected 2 fields, found {}", line + 1, record.len()),
                ));
            }
            let parse = |s: &str| s.parse::<f64>();
            match (parse(&record[0]), parse(&record[1])) {
                (Ok(a), Ok(b)) => {
                    rho.push(a);
                    mu.push(b);
                }
                _ if line == 0 => continue, // header
                _ => {
                    return Err(Error::format(
                        path,
                        format!("row {}: non-numeric entry", line + 1),
                    ))
                }
            }
        }
        Self::from_table(rho, mu, dim)
    }

    /// Same profile rescaled to unit total mass.
    pub fn normalized(&self) -> Self {
        let mut k = self.clone();
        k.scale = 1.0;
        k.scale = 1.0 / k.total_mass();
        k
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::CharacteristicBall => "characteristic_ball",
            KernelFamily::Tent => "tent",
            KernelFamily::SmoothBump => "smooth_bump",
            KernelFamily::CustomProfileTable { .. } => "custom_profile_table",
        }
    }

    pub fn horizon(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn class(&self) -> KernelClass {
        match &self.family {
            KernelFamily::CharacteristicBall => KernelClass::Indicator,
            KernelFamily::Tent | KernelFamily::SmoothBump => KernelClass::StrictlyDecreasing,
            KernelFamily::CustomProfileTable { mu, .. } => {
                if mu.windows(2).all(|w| w[1] < w[0]) {
                    KernelClass::StrictlyDecreasing
                } else {
                    KernelClass::Monotone
                }
            }
        }
    }

    /// `J(z)`; zero outside the open ball of radius `r`.
    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim {
            return Err(Error::domain(format!(
                "point has {} coordinates, kernel dimension is {}",
                z.len(),
                self.dim
            )));
        }
        if z.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("non-finite kernel argument"));
        }
        let rho = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        Ok(self.radial(rho))
    }

    /// Profile value `scale * mu(rho)` for `rho >= 0`.
    #[inline]
    pub fn radial(&self, rho: f64) -> f64 {
        if rho >= self.r {
            return 0.0;
        }
        self.scale * self.profile(rho)
    }

    #[inline]
    fn profile(&self, rho: f64) -> f64 {
        let s = rho / self.r;
        match &self.family {
            KernelFamily::CharacteristicBall => 1.0,
            KernelFamily::Tent => 1.0 - s,
            KernelFamily::SmoothBump => {
                let q = 1.0 - s * s;
                q * q
            }
            KernelFamily::CustomProfileTable { rho: xs, mu } => interpolate(xs, mu, rho),
        }
    }

    /// `scale * mu'(rho)` on `(0, r)`; `None` for the indicator kernel.
    pub fn radial_derivative(&self, rho: f64) -> Option<f64> {
        if rho >= self.r {
            return Some(0.0);
        }
        let r = self.r;
        let d = match &self.family {
            KernelFamily::CharacteristicBall => return None,
            KernelFamily::Tent => -1.0 / r,
            KernelFamily::SmoothBump => 2.0 * (1.0 - rho * rho / (r * r)) * (-2.0 * rho / (r * r)),
            KernelFamily::CustomProfileTable { rho: xs, mu } => {
                let i = segment(xs, rho);
                (mu[i + 1] - mu[i]) / (xs[i + 1] - xs[i])
            }
        };
        Some(self.scale * d)
    }

    /// `int_{R^n} J`.
    pub fn total_mass(&self) -> f64 {
        self.ball_mass_unchecked(self.r)
    }

    /// `int_{B_rho} J`; saturates at the horizon.
    pub fn ball_mass(&self, rho: f64) -> Result<f64> {
        if rho.is_nan() || rho < 0.0 {
            return Err(Error::domain(format!("negative radius {rho}")));
        }
        Ok(self.ball_mass_unchecked(rho.min(self.r)))
    }

    fn ball_mass_unchecked(&self, rho: f64) -> f64 {
        let n = self.dim as i32;
        let nf = n as f64;
        let area = nf * unit_ball_volume(self.dim);
        let r = self.r;
        // int_0^rho mu(s) s^{n-1} ds
        let radial = match &self.family {
            KernelFamily::CharacteristicBall => rho.powi(n) / nf,
            KernelFamily::Tent => rho.powi(n) / nf - rho.powi(n + 1) / ((nf + 1.0) * r),
            KernelFamily::SmoothBump => {
                rho.powi(n) / nf - 2.0 * rho.powi(n + 2) / ((nf + 2.0) * r * r)
                    + rho.powi(n + 4) / ((nf + 4.0) * r.powi(4))
            }
            KernelFamily::CustomProfileTable { rho: xs, .. } => {
                let f = |s: f64| self.profile(s) * s.powi(n - 1);
                let mut total = 0.0;
                for w in xs.windows(2) {
                    let (a, b) = (w[0], w[1].min(rho));
                    if b <= a {
                        break;
                    }
                    total += adaptive_simpson(&f, a, b, 1e-10);
                }
                total
            }
        };
        self.scale * area * radial
    }

    /// `sup |grad J|`.
    pub fn gradient_sup(&self) -> GradientBound {
        let r = self.r;
        let g = match &self.family {
            KernelFamily::CharacteristicBall => return GradientBound::Unbounded,
            KernelFamily::Tent => 1.0 / r,
            // attained at rho = r / sqrt(3)
            KernelFamily::SmoothBump => 8.0 / (3.0 * 3f64.sqrt() * r),
            KernelFamily::CustomProfileTable { rho, mu } => rho
                .windows(2)
                .zip(mu.windows(2))
                .map(|(x, y)| ((y[1] - y[0]) / (x[1] - x[0])).abs())
                .fold(0.0, f64::max),
        };
        GradientBound::Finite(self.scale * g)
    }
}

fn validate_table(rho: &[f64], mu: &[f64]) -> Result<()> {
    let bad = |m: &str| Err(Error::InvalidKernel(format!("profile table: {m}")));
    if rho.len() != mu.len() {
        return bad("rho and mu have different lengths");
    }
    if rho.len() < 2 {
        return bad("need at least two samples");
    }
    if rho.iter().chain(mu).any(|v| !v.is_finite()) {
        return bad("non-finite entry");
    }
    if rho[0] != 0.0 {
        return bad("first radius must be 0");
    }
    if rho.windows(2).any(|w| w[1] <= w[0]) {
        return bad("radii must be strictly increasing");
    }
    if mu.iter().any(|&m| m < 0.0) {
        return bad("negative profile value");
    }
    if let Some(i) = mu.windows(2).position(|w| w[1] > w[0]) {
        return bad(&format!(
            "profile increases between rho = {} and rho = {}",
            rho[i],
            rho[i + 1]
        ));
    }
    if *mu.last().unwrap() != 0.0 {
        return bad("final profile value must be 0");
    }
    if mu[0] <= 0.0 {
        return bad("profile must be positive at the origin");
    }
    Ok(())
}

fn segment(xs: &[f64], x: f64) -> usize {
    match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(i) => i.min(xs.len() - 2),
        Err(i) => i.saturating_sub(1).min(xs.len() - 2),
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = segment(xs, x);
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + t * (ys[i + 1] - ys[i])
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = rel_tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn all_kernels(dim: usize) -> Vec<RadialKernel> {
        vec![
            RadialKernel::characteristic_ball(0.7, dim).unwrap(),
            RadialKernel::tent(0.7, dim).unwrap(),
            RadialKernel::smooth_bump(0.7, dim).unwrap(),
            RadialKernel::from_table(vec![0.0, 0.2, 0.5, 0.7], vec![2.0, 1.5, 1.5, 0.0], dim)
                .unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        let ball = RadialKernel::characteristic_ball(1.0, 2).unwrap();
        assert_eq!(ball.eval(&[0.3, 0.4]).unwrap(), 1.0);
        assert_eq!(ball.eval(&[0.9, 1.2]).unwrap(), 0.0);
        assert_eq!(ball.eval(&[1.0, 0.0]).unwrap(), 0.0);
        let tent = RadialKernel::tent(1.0, 2).unwrap();
        assert_relative_eq!(tent.eval(&[0.3, 0.4]).unwrap(), 0.5, epsilon = 1e-15);
        assert!(ball.eval(&[f64::NAN, 0.0]).is_err());
        assert!(ball.eval(&[0.0]).is_err());
    }

    #[test]
    fn total_mass_examples() {
        let k = RadialKernel::characteristic_ball(1.0, 2).unwrap();
        assert_relative_eq!(k.total_mass(), PI, max_relative = 1e-15);
        let k = RadialKernel::tent(1.0, 2).unwrap();
        assert_relative_eq!(k.total_mass(), PI / 3.0, max_relative = 1e-15);
        let k = RadialKernel::characteristic_ball(2.0, 3).unwrap();
        assert_relative_eq!(k.total_mass(), 4.0 / 3.0 * PI * 8.0, max_relative = 1e-15);
    }

    #[test]
    fn ball_mass_examples() {
        let k = RadialKernel::characteristic_ball(1.0, 2).unwrap();
        assert_relative_eq!(k.ball_mass(0.5).unwrap(), PI / 4.0, max_relative = 1e-15);
        let t = RadialKernel::tent(1.0, 2).unwrap();
        assert_relative_eq!(t.ball_mass(1.0).unwrap(), PI / 3.0, max_relative = 1e-15);
        for k in all_kernels(2).iter().chain(&all_kernels(3)) {
            assert_eq!(k.ball_mass(0.0).unwrap(), 0.0);
            assert_relative_eq!(
                k.ball_mass(k.horizon()).unwrap(),
                k.total_mass(),
                max_relative = 1e-12
            );
            assert_eq!(k.ball_mass(5.0).unwrap(), k.total_mass());
        }
        assert!(k.ball_mass(-0.1).is_err());
    }

    #[test]
    fn table_mass_matches_polynomial_family() {
        // a densely tabulated tent is exactly piecewise linear
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
        let table = RadialKernel::from_table(xs, ys, 3).unwrap();
        let tent = RadialKernel::tent(1.0, 3).unwrap();
        assert_relative_eq!(table.total_mass(), tent.total_mass(), max_relative = 1e-10);
        assert_relative_eq!(
            table.ball_mass(0.37).unwrap(),
            tent.ball_mass(0.37).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn gradient_sup_examples() {
        let t = RadialKernel::tent(2.0, 2).unwrap();
        assert_eq!(t.gradient_sup(), GradientBound::Finite(0.5));
        let b = RadialKernel::characteristic_ball(1.0, 2).unwrap();
        assert_eq!(b.gradient_sup(), GradientBound::Unbounded);

        // dense-grid maximization of |mu'| for the bump
        let bump = RadialKernel::smooth_bump(1.0, 2).unwrap();
        let oracle = (1..200_000)
            .map(|i| i as f64 / 200_000.0)
            .map(|rho| (2.0 * (1.0 - rho * rho) * 2.0 * rho).abs())
            .fold(0.0, f64::max);
        let GradientBound::Finite(g) = bump.gradient_sup() else {
            panic!("bump gradient is finite")
        };
        assert_relative_eq!(g, oracle, max_relative = 1e-9);
        assert_relative_eq!(g, 8.0 / (3.0 * 3f64.sqrt()), max_relative = 1e-15);
    }

    #[test]
    fn table_validation() {
        assert!(RadialKernel::from_table(vec![0.0, 1.0], vec![1.0, 0.0], 2).is_ok());
        // increasing profile violates radial monotonicity
        assert!(RadialKernel::from_table(vec![0.0, 0.5, 1.0], vec![1.0, 1.2, 0.0], 2).is_err());
        assert!(RadialKernel::from_table(vec![0.0, 1.0], vec![1.0, 0.1], 2).is_err());
        assert!(RadialKernel::from_table(vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], 2).is_err());
        assert!(RadialKernel::from_table(vec![0.1, 1.0], vec![1.0, 0.0], 2).is_err());
        assert!(RadialKernel::tent(0.0, 2).is_err());
        assert!(RadialKernel::tent(f64::INFINITY, 2).is_err());
    }

    #[test]
    fn table_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profile.csv");
        std::fs::write(&path, "rho,mu\n0,1\n0.25,0.5\n0.5,0\n").unwrap();
        let k = RadialKernel::from_table_csv(&path, 2).unwrap();
        assert_eq!(k.horizon(), 0.5);
        assert_relative_eq!(k.eval(&[0.125, 0.0]).unwrap(), 0.75);
        std::fs::write(&path, "0,1\n0.5,0.2\n").unwrap();
        assert!(RadialKernel::from_table_csv(&path, 2).is_err());
    }

    #[test]
    fn normalization_on_request() {
        for k in all_kernels(2) {
            assert_eq!(k.scale(), 1.0);
            let n = k.normalized();
            assert_relative_eq!(n.total_mass(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn classes() {
        let ks = all_kernels(2);
        assert_eq!(ks[0].class(), KernelClass::Indicator);
        assert_eq!(ks[1].class(), KernelClass::StrictlyDecreasing);
        assert_eq!(ks[2].class(), KernelClass::StrictlyDecreasing);
        assert_eq!(ks[3].class(), KernelClass::Monotone);
    }

    #[test]
    fn ball_mass_non_decreasing_and_profile_monotone() {
        for k in all_kernels(2).into_iter().chain(all_kernels(3)) {
            let mut prev_mass = 0.0;
            let mut prev_val = f64::INFINITY;
            for i in 1..=2000 {
                let rho = k.horizon() * i as f64 / 2000.0;
                let m = k.ball_mass(rho).unwrap();
                assert!(m >= prev_mass);
                prev_mass = m;
                let v = k.radial(rho);
                assert!(v <= prev_val);
                prev_val = v;
            }
        }
    }

    #[test]
    fn finite_difference_derivative() {
        for k in [
            RadialKernel::tent(0.8, 2).unwrap(),
            RadialKernel::smooth_bump(0.8, 2).unwrap(),
        ] {
            for i in 1..40 {
                let rho = 0.8 * i as f64 / 40.0;
                let step = 1e-4;
                let fd = (k.radial(rho + step) - k.radial(rho - step)) / (2.0 * step);
                let exact = k.radial_derivative(rho).unwrap();
                // central differences are O(step^2); bump has |mu'''| <= 24 / r^3
                assert!((fd - exact).abs() < 100.0 * step * step, "rho {rho}: {fd} vs {exact}");
            }
        }
    }

    proptest! {
        #[test]
        fn rotation_invariant(angle in 0.0..(2.0 * PI), x in -1.0f64..1.0, y in -1.0f64..1.0,
                              a in 0.0..PI, b in 0.0..(2.0 * PI), z in -1.0f64..1.0) {
            for k in all_kernels(2) {
                let (s, c) = angle.sin_cos();
                let v = k.eval(&[x, y]).unwrap();
                let w = k.eval(&[c * x - s * y, s * x + c * y]).unwrap();
                if ((x * x + y * y).sqrt() - k.horizon()).abs() > 1e-9 {
                    prop_assert!((v - w).abs() <= 1e-12);
                }
            }
            // 3D: rotate about z by b, then about x by a
            for k in all_kernels(3) {
                let p = [x, y, z];
                let (sb, cb) = b.sin_cos();
                let q = [cb * p[0] - sb * p[1], sb * p[0] + cb * p[1], p[2]];
                let (sa, ca) = a.sin_cos();
                let q = [q[0], ca * q[1] - sa * q[2], sa * q[1] + ca * q[2]];
                let v = k.eval(&p).unwrap();
                let w = k.eval(&q).unwrap();
                let rho = (x * x + y * y + z * z).sqrt();
                // only the indicator can jump; away from the sphere the values agree to round-off
                if (rho - k.horizon()).abs() > 1e-9 {
                    prop_assert!((v - w).abs() <= 1e-12);
                }
            }
        }
    }
}
