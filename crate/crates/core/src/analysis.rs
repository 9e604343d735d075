//! Closed-form rotation numbers, growth points, the scalar-monodromy
//! condition, constriction scans and the quantization audit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{lift_field, poincare_matrix, rotation_number_of, FlowConfig};
use crate::mat2::C64;
use crate::params::{GheSystemParams, TorusParams};
use crate::su11::scalar_distance;

/// Default threshold below which a local minimum of `d(M)` is reported.
pub const SCAN_THRESHOLD: f64 = 1e-2;
/// Lyapunov exponents above this mark a cell as phase-locked.
pub const LOCK_LYAPUNOV: f64 = 1e-3;
/// Largest allowed distance from an integer for a locked rotation number.
pub const LOCK_INTEGER_TOL: f64 = 1e-6;

fn check_omega_delta(omega: f64, delta: f64) -> Result<()> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::domain(format!("omega = {omega} must be positive")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::domain(format!("delta = {delta} must lie in [0, 1)")));
    }
    Ok(())
}

/// Rotation number of the unforced flow (`A = D = 0`).
pub fn closed_form_rho(omega: f64, delta: f64, bias: f64) -> Result<f64> {
    check_omega_delta(omega, delta)?;
    if !bias.is_finite() {
        return Err(Error::domain("B must be finite"));
    }
    if bias.abs() <= 1.0 {
        return Ok(0.0);
    }
    let mag = (bias * bias - 1.0).sqrt() / (omega * (1.0 - delta * delta).sqrt());
    Ok(mag.copysign(bias))
}

/// `(1 - √(1 - δ²))/δ`, the singular point inside the unit disk.
pub fn z_minus(delta: f64) -> f64 {
    (1.0 - (1.0 - delta * delta).sqrt()) / delta
}

/// `(1 + √(1 - δ²))/δ`, the singular point outside the unit disk.
pub fn z_plus(delta: f64) -> f64 {
    (1.0 + (1.0 - delta * delta).sqrt()) / delta
}

/// `μ1,2 = (-B ± √(B² - 1)) / (2ω√(1 - δ²))`.
pub fn mu_pair(omega: f64, delta: f64, bias: f64) -> Result<(f64, f64)> {
    check_omega_delta(omega, delta)?;
    if delta == 0.0 {
        return Err(Error::domain("delta must be positive"));
    }
    if !(bias > 1.0) || !bias.is_finite() {
        return Err(Error::domain(format!("B = {bias} must exceed 1")));
    }
    let den = 2.0 * omega * (1.0 - delta * delta).sqrt();
    let r = (bias * bias - 1.0).sqrt();
    Ok(((-bias + r) / den, (-bias - r) / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthPoint {
    pub n: u32,
    #[serde(rename = "B")]
    pub bias: f64,
}

/// `B_n = √(ω²(1 - δ²)n² + 1)` for `n = 0..=n_max`.
pub fn growth_points(omega: f64, delta: f64, n_max: u32) -> Result<Vec<GrowthPoint>> {
    check_omega_delta(omega, delta)?;
    let k = omega * omega * (1.0 - delta * delta);
    Ok((0..=n_max)
        .map(|n| {
            let nf = n as f64;
            GrowthPoint {
                n,
                bias: (k * nf * nf + 1.0).sqrt(),
            }
        })
        .collect())
}

/// `B = √(1 + ω²(1 - δ²)(D - n)²)`, necessary for a trivial Poincaré map at `A = 0`.
pub fn scalar_monodromy_condition(omega: f64, delta: f64, drift: f64, n: i64) -> Option<f64> {
    if !(0.0..1.0).contains(&delta) || !omega.is_finite() || !drift.is_finite() {
        return None;
    }
    let s = drift - n as f64;
    Some((1.0 + omega * omega * (1.0 - delta * delta) * s * s).sqrt())
}

/// Eigenvalue differences `(λ0, λα)` of the residues at `0` and `α`.
pub fn residue_eigen_differences(p: &GheSystemParams) -> (C64, C64) {
    let r1 = p.residues().r1;
    let tr = r1.trace();
    let disc = tr * tr - r1.det() * 4.0;
    (p.nu, C64::new(disc.re, disc.im + 0.0).sqrt())
}

/// `d(M)` for the Poincaré matrix of `t`.
pub fn monodromy_distance(t: &TorusParams, cfg: &FlowConfig) -> Result<f64> {
    let m = poincare_matrix(&lift_field(t)?, cfg)?;
    scalar_distance(&m.to_mat2())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSample {
    #[serde(rename = "B")]
    pub bias: f64,
    #[serde(rename = "A")]
    pub amp: f64,
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub samples: Vec<ScanSample>,
    /// Strict interior local minima with `d` below the threshold.
    pub minima: Vec<ScanSample>,
    pub threshold: f64,
    /// Every strict interior local minimum, refined between its two neighbours.
    pub refined: Vec<ScanSample>,
}

impl ScanReport {
    /// Smallest sampled `d`.
    pub fn min_distance(&self) -> f64 {
        self.samples.iter().map(|s| s.d).fold(f64::INFINITY, f64::min)
    }

    /// Smallest `d` over samples and refined minima.
    pub fn min_refined_distance(&self) -> f64 {
        self.refined.iter().map(|s| s.d).fold(self.min_distance(), f64::min)
    }

    /// Refined minima below the threshold.
    pub fn candidates(&self) -> impl Iterator<Item = &ScanSample> {
        self.refined.iter().filter(|s| s.d < self.threshold)
    }
}

const GOLDEN_ITERS: usize = 60;

/// Golden-section search for a minimum of `d` on `[lo, hi]`.
fn refine_minimum(
    base: &TorusParams,
    bias: f64,
    lo: f64,
    hi: f64,
    best: ScanSample,
    cfg: &FlowConfig,
) -> Result<ScanSample> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let eval = |a: f64| monodromy_distance(&base.with_bias_amp(bias, a), cfg);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (eval(x1)?, eval(x2)?);
    let mut out = best;
    for _ in 0..GOLDEN_ITERS {
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f < out.d {
                out = ScanSample { bias, amp: x, d: f };
            }
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = eval(x2)?;
        }
    }
    Ok(out)
}

/// Samples `d(M)` along the vertical segment `B = bias`, `A ∈ [a_min, a_max]`.
///
/// Runs on the current rayon pool; the report is ordered by sample index.
pub fn scan_scalar_distance(
    base: &TorusParams,
    bias: f64,
    a_range: (f64, f64),
    n_a: usize,
    threshold: f64,
    cfg: &FlowConfig,
) -> Result<ScanReport> {
    base.validate()?;
    if n_a < 2 {
        return Err(Error::domain("a scan needs at least two samples"));
    }
    let (a_min, a_max) = a_range;
    if !(a_min < a_max) || !a_min.is_finite() || !a_max.is_finite() {
        return Err(Error::domain("A range must satisfy A_min < A_max"));
    }
    let step = (a_max - a_min) / (n_a - 1) as f64;
    let samples = (0..n_a)
        .into_par_iter()
        .map(|j| {
            let amp = a_min + j as f64 * step;
            let d = monodromy_distance(&base.with_bias_amp(bias, amp), cfg)?;
            Ok(ScanSample { bias, amp, d })
        })
        .collect::<Result<Vec<_>>>()?;
    let local: Vec<[ScanSample; 3]> = samples
        .windows(3)
        .filter(|w| w[1].d < w[0].d && w[1].d < w[2].d)
        .map(|w| [w[0], w[1], w[2]])
        .collect();
    let minima = local.iter().map(|w| w[1]).filter(|s| s.d < threshold).collect();
    let refined = local
        .par_iter()
        .map(|w| refine_minimum(base, bias, w[0].amp, w[2].amp, w[1], cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanReport {
        samples,
        minima,
        threshold,
        refined,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditViolation {
    #[serde(rename = "B")]
    pub bias: f64,
    #[serde(rename = "A")]
    pub amp: f64,
    pub rho: f64,
    pub lyapunov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    pub locked: usize,
    pub failures: usize,
    pub violations: Vec<AuditViolation>,
}

/// Checks `Λ > 1e-3 ⇒ dist(ρ, ℤ) < 1e-6` on each sample.
///
/// Integration failures are counted, not treated as violations.
pub fn quantization_audit(samples: &[TorusParams], cfg: &FlowConfig) -> AuditReport {
    let results: Vec<_> = samples
        .par_iter()
        .map(|t| rotation_number_of(t, cfg).map(|r| (t, r)))
        .collect();
    let mut report = AuditReport {
        samples: samples.len(),
        locked: 0,
        failures: 0,
        violations: Vec::new(),
    };
    for r in results {
        match r {
            Err(_) => report.failures += 1,
            Ok((t, r)) if r.lyapunov > LOCK_LYAPUNOV => {
                report.locked += 1;
                if (r.rho - r.rho.round()).abs() >= LOCK_INTEGER_TOL {
                    report.violations.push(AuditViolation {
                        bias: t.bias,
                        amp: t.amp,
                        rho: r.rho,
                        lyapunov: r.lyapunov,
                    });
                }
            }
            Ok(_) => {}
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::c;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        assert_abs_diff_eq!(closed_form_rho(1.0, 0.6, 2f64.sqrt()).unwrap(), 1.25, epsilon = 1e-14);
        assert_abs_diff_eq!(closed_form_rho(1.0, 0.0, 2f64.sqrt()).unwrap(), 1.0, epsilon = 1e-14);
        assert_eq!(closed_form_rho(1.0, 0.6, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(closed_form_rho(1.0, 0.6, -(2f64.sqrt())).unwrap(), -1.25, epsilon = 1e-14);
        assert!(closed_form_rho(1.0, 1.0, 2.0).is_err());
        assert!(closed_form_rho(0.0, 0.5, 2.0).is_err());
        assert!(closed_form_rho(-1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn mu_pair_examples() {
        let (m1, m2) = mu_pair(1.0, 0.6, 2f64.sqrt()).unwrap();
        assert_abs_diff_eq!(m1 - m2, 1.25, epsilon = 1e-12);
        assert_abs_diff_eq!(m1, -0.2588835, epsilon = 1e-7);
        assert_abs_diff_eq!(z_minus(0.6), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z_plus(0.6), 3.0, epsilon = 1e-15);
        assert!(mu_pair(1.0, 0.6, 1.0).is_err());
    }

    #[test]
    fn growth_examples() {
        let g = growth_points(1.0, 0.6, 1).unwrap();
        assert_eq!(g[0], GrowthPoint { n: 0, bias: 1.0 });
        assert_abs_diff_eq!(g[1].bias, 1.64f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(growth_points(2.0, 0.0, 1).unwrap()[1].bias, 5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn monodromy_condition_examples() {
        assert_abs_diff_eq!(scalar_monodromy_condition(1.0, 0.6, 0.5, 0).unwrap(), 1.0770330, epsilon = 1e-7);
        assert_eq!(scalar_monodromy_condition(1.3, 0.2, 2.0, 2), Some(1.0));
        assert_abs_diff_eq!(scalar_monodromy_condition(1.0, 0.0, 0.0, 2).unwrap(), 5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(scalar_monodromy_condition(1.0, 1.0, 0.0, 2), None);
    }

    #[test]
    fn residue_eigen_examples() {
        let p = GheSystemParams::new(3.0, 0.625, 0.625, c(0.0, 0.0)).unwrap();
        let (l0, la) = residue_eigen_differences(&p);
        assert_eq!(l0, c(0.0, 0.0));
        assert_abs_diff_eq!((la - c(0.0, 1.0825318)).norm(), 0.0, epsilon = 1e-7);
        let p1 = p.with_diagonal(c(1.0, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!((residue_eigen_differences(&p1).1 - la).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn growth_point_has_trivial_monodromy() {
        let t = TorusParams::new(1.0, 0.6, 0.0, 1.64f64.sqrt(), 0.0).unwrap();
        assert!(monodromy_distance(&t, &FlowConfig::default()).unwrap() < 1e-6);
    }

    #[test]
    fn scan_minima_are_strict_local_minima() {
        let base = TorusParams::new(1.0, 0.0, 0.0, 1.0, 0.0).unwrap();
        let r = scan_scalar_distance(&base, 1.0, (0.5, 6.0), 64, 1.0, &FlowConfig::default()).unwrap();
        assert_eq!(r.samples.len(), 64);
        for m in &r.minima {
            let j = r.samples.iter().position(|s| s.amp == m.amp).unwrap();
            assert!(j > 0 && j < 63);
            assert!(m.d < r.samples[j - 1].d && m.d < r.samples[j + 1].d);
        }
        assert_eq!(r.refined.len(), r.minima.len());
        for (m, f) in r.minima.iter().zip(&r.refined) {
            assert!(f.d <= m.d);
        }
        assert!(scan_scalar_distance(&base, 1.0, (0.5, 6.0), 1, 1.0, &FlowConfig::default()).is_err());
    }

    #[test]
    fn audit_examples() {
        let cfg = FlowConfig::default();
        let locked = TorusParams::new(1.0, 0.6, 0.0, 0.5, 0.0).unwrap();
        let elliptic = TorusParams::new(1.0, 0.6, 0.0, 2f64.sqrt(), 0.0).unwrap();
        let r = quantization_audit(&[locked, elliptic], &cfg);
        assert_eq!(r.samples, 2);
        assert_eq!(r.locked, 1);
        assert_eq!(r.failures, 0);
        assert!(r.violations.is_empty());
    }

    proptest! {
        #[test]
        fn growth_points_are_integer_rotation_numbers(omega in 0.1f64..5.0, delta in 0.0f64..0.99, n in 0u32..20) {
            let g = growth_points(omega, delta, n).unwrap();
            for p in &g {
                let rho = closed_form_rho(omega, delta, p.bias).unwrap();
                prop_assert!((rho - p.n as f64).abs() < 1e-12 * (1.0 + p.n as f64));
                let k = omega * omega * (1.0 - delta * delta);
                prop_assert!((p.bias * p.bias - (k * (p.n * p.n) as f64 + 1.0)).abs() < 1e-12 * p.bias * p.bias);
            }
        }

        #[test]
        fn mu_difference_is_rotation_number(omega in 0.1f64..5.0, delta in 0.01f64..0.99, bias in 1.001f64..10.0) {
            let (m1, m2) = mu_pair(omega, delta, bias).unwrap();
            let rho = closed_form_rho(omega, delta, bias).unwrap();
            prop_assert!((m1 - m2 - rho).abs() < 1e-12 * (1.0 + rho));
        }
    }
}
