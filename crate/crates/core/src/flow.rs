//! Torus flows `dθ/dτ = u(τ) cos θ + v(τ)`, their exact Möbius Poincaré maps,
//! rotation numbers and Lyapunov exponents.
//!
//! The flow is the restriction to `|Φ| = 1` of the projectivization of the
//! traceless linear system
//!
//! ```text
//! Y' = (i/2) [[-v, -u], [u, v]] Y,     Φ = Y2 / Y1 = e^{iθ},
//! ```
//!
//! whose coefficient matrix lies in su(1,1). Its time-2π fundamental matrix
//! is therefore an SU(1,1) matrix, and the Poincaré map of the flow is its
//! Möbius action.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64, I};
use crate::ode::Dopri5;
use crate::params::TorusParams;
use crate::su11::{MapClass, MapKind, Su11Matrix};

/// Periods used for the first rotation-number estimate of an elliptic map.
pub const ELLIPTIC_PERIODS: u32 = 64;
/// Cap on the period doubling of the elliptic estimate.
pub const ELLIPTIC_PERIODS_MAX: u32 = 4096;
/// Largest allowed distance from an integer of a locked winding.
pub const WINDING_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Drsj,
    Rsj,
    Custom,
}

/// A 2π-periodic vector field of the form `u(τ) cos θ + v(τ)`.
pub trait CosineField: Sync {
    fn u(&self, tau: f64) -> f64;
    fn v(&self, tau: f64) -> f64;

    fn uv(&self, tau: f64) -> (f64, f64) {
        (self.u(tau), self.v(tau))
    }

    fn provenance(&self) -> Provenance {
        Provenance::Custom
    }

    /// `dθ/dτ`.
    fn rhs(&self, tau: f64, theta: f64) -> f64 {
        let (u, v) = self.uv(tau);
        u * theta.cos() + v
    }
}

/// The deformed RSJ field; the plain RSJ model when `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrsjField {
    pub params: TorusParams,
}

impl CosineField for DrsjField {
    fn u(&self, tau: f64) -> f64 {
        self.uv(tau).0
    }

    fn v(&self, tau: f64) -> f64 {
        self.uv(tau).1
    }

    #[inline]
    fn uv(&self, tau: f64) -> (f64, f64) {
        let p = &self.params;
        let (s, c) = tau.sin_cos();
        let u = 1.0 / (p.omega * (1.0 - p.delta * c));
        (u, u * (p.bias + p.amp * s) + p.drift)
    }

    fn provenance(&self) -> Provenance {
        if self.params.delta == 0.0 && self.params.drift == 0.0 {
            Provenance::Rsj
        } else {
            Provenance::Drsj
        }
    }
}

/// A field given by two closures.
pub struct CustomField<U, V> {
    pub u: U,
    pub v: V,
}

impl<U, V> CosineField for CustomField<U, V>
where
    U: Fn(f64) -> f64 + Sync,
    V: Fn(f64) -> f64 + Sync,
{
    fn u(&self, tau: f64) -> f64 {
        (self.u)(tau)
    }

    fn v(&self, tau: f64) -> f64 {
        (self.v)(tau)
    }
}

pub fn lift_field(t: &TorusParams) -> Result<DrsjField> {
    t.validate()?;
    Ok(DrsjField { params: *t })
}

/// Integrator settings shared by the matrix and scalar integrations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            rtol: 1e-10,
            atol: 1e-10,
            max_step: PI / 16.0,
        }
    }
}

impl FlowConfig {
    pub fn with_tol(tol: f64) -> Self {
        FlowConfig {
            rtol: tol,
            atol: tol,
            ..Default::default()
        }
    }

    fn solver(&self) -> Dopri5 {
        Dopri5::new(self.rtol, self.atol, self.max_step)
    }
}

/// The su(1,1) coefficient matrix `(i/2) [[-v, -u], [u, v]]` at `tau`.
pub fn linear_lift_rhs<F: CosineField + ?Sized>(f: &F, tau: f64) -> Mat2 {
    let (u, v) = f.uv(tau);
    Mat2::from_real(-v, -u, u, v) * (I * 0.5)
}

/// Fundamental matrix of the lifted linear system over one period.
pub fn poincare_matrix<F: CosineField + ?Sized>(f: &F, cfg: &FlowConfig) -> Result<Su11Matrix> {
    let m = fundamental_matrix(f, cfg)?;
    Su11Matrix::project(&m)
}

fn fundamental_matrix<F: CosineField + ?Sized>(f: &F, cfg: &FlowConfig) -> Result<Mat2> {
    // State: (re, im) of Y11, Y12, Y21, Y22.
    let y0 = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
    let rhs = |tau: f64, y: &[f64; 8]| -> [f64; 8] {
        let (u, v) = f.uv(tau);
        let (hu, hv) = (0.5 * u, 0.5 * v);
        // Row 1 of C is (i/2)(-v, -u); row 2 is (i/2)(u, v). Multiplication by i maps (x, y) to (-y, x).
        let mut out = [0.0; 8];
        for col in 0..2 {
            let (r1, i1) = (y[2 * col], y[2 * col + 1]);
            let (r2, i2) = (y[4 + 2 * col], y[4 + 2 * col + 1]);
            // s1 = -hv*Y1j - hu*Y2j; out1 = i*s1
            let s1r = -hv * r1 - hu * r2;
            let s1i = -hv * i1 - hu * i2;
            out[2 * col] = -s1i;
            out[2 * col + 1] = s1r;
            let s2r = hu * r1 + hv * r2;
            let s2i = hu * i1 + hv * i2;
            out[4 + 2 * col] = -s2i;
            out[4 + 2 * col + 1] = s2r;
        }
        out
    };
    let y = cfg.solver().integrate(rhs, 0.0, TAU, y0)?;
    Ok(Mat2::new(
        C64::new(y[0], y[1]),
        C64::new(y[2], y[3]),
        C64::new(y[4], y[5]),
        C64::new(y[6], y[7]),
    ))
}

/// Lifted angle after `periods` periods of the scalar flow started at `theta0`.
pub fn integrate_lift<F: CosineField + ?Sized>(
    f: &F,
    theta0: f64,
    periods: u32,
    cfg: &FlowConfig,
) -> Result<f64> {
    let y = cfg.solver().integrate(
        |tau, th: &[f64; 1]| [f.rhs(tau, th[0])],
        0.0,
        TAU * periods as f64,
        [theta0],
    )?;
    Ok(y[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ResultFlags {
    /// The fractional part was snapped to the multiplier argument.
    pub snapped: bool,
    /// The elliptic estimate never came within 0.25 of a candidate.
    pub adaptive_n_exhausted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareResult {
    pub matrix: Su11Matrix,
    pub class: MapClass,
    /// Rotation number; an exact integer for non-elliptic maps.
    pub rho: f64,
    /// Largest Lyapunov exponent per unit τ; positive only for hyperbolic maps.
    pub lyapunov: f64,
    pub winding_periods: u32,
    pub flags: ResultFlags,
}

/// Rotation number and Lyapunov exponent of the flow.
///
/// For hyperbolic, parabolic and identity maps the rotation number is the
/// integer winding of the lift over one period, started at a fixed point on
/// the circle. For elliptic maps the fractional part is `β/2π`, `β` the
/// argument of the multiplier at the fixed point inside the disk, and the
/// integer part comes from a long-run average of the lift.
pub fn rotation_number<F: CosineField + ?Sized>(f: &F, cfg: &FlowConfig) -> Result<PoincareResult> {
    let matrix = poincare_matrix(f, cfg)?;
    let class = matrix.classify();
    let mut flags = ResultFlags::default();

    if class.kind != MapKind::Elliptic {
        let theta_star = if class.kind == MapKind::Identity {
            0.0
        } else {
            let pts = matrix.fixed_points()?;
            pts[0].point.finite().map(|z| z.arg()).unwrap_or(0.0)
        };
        let theta1 = integrate_lift(f, theta_star, 1, cfg)?;
        let winding = (theta1 - theta_star) / TAU;
        let rho = winding.round();
        if (winding - rho).abs() >= WINDING_TOL {
            return Err(Error::Accuracy(format!(
                "{} map winds {winding} periods from its fixed point",
                class.kind
            )));
        }
        return Ok(PoincareResult {
            matrix,
            class,
            rho,
            lyapunov: matrix.lyapunov_exponent(),
            winding_periods: 1,
            flags,
        });
    }

    let pts = matrix.fixed_points()?;
    let beta = pts[0].multiplier.arg();
    let frac = beta / TAU;
    flags.snapped = true;
    let mut periods = ELLIPTIC_PERIODS;
    loop {
        let theta = integrate_lift(f, 0.0, periods, cfg)?;
        let estimate = theta / (TAU * periods as f64);
        let rho = (estimate - frac).round() + frac;
        if (rho - estimate).abs() <= 0.25 || periods >= ELLIPTIC_PERIODS_MAX {
            flags.adaptive_n_exhausted = (rho - estimate).abs() > 0.25;
            return Ok(PoincareResult {
                matrix,
                class,
                rho,
                lyapunov: 0.0,
                winding_periods: periods,
                flags,
            });
        }
        periods *= 2;
    }
}

/// Largest disagreement between the scalar flow map and the Möbius action of
/// the Poincaré matrix over `samples` equally spaced initial angles.
pub fn flow_map_consistency<F: CosineField + ?Sized>(
    f: &F,
    samples: usize,
    cfg: &FlowConfig,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    let m = poincare_matrix(f, cfg)?;
    let mut worst: f64 = 0.0;
    for k in 0..samples {
        let theta0 = TAU * (k as f64 + 0.5) / samples as f64;
        let theta1 = integrate_lift(f, theta0, 1, cfg)?;
        let scalar = C64::from_polar(1.0, theta1);
        let dist = match m.act(C64::from_polar(1.0, theta0)).finite() {
            Some(w) => (scalar - w).norm(),
            None => f64::INFINITY,
        };
        worst = worst.max(dist);
    }
    Ok(worst)
}

/// Convenience wrapper for the dRSJ flow.
pub fn rotation_number_of(t: &TorusParams, cfg: &FlowConfig) -> Result<PoincareResult> {
    rotation_number(&lift_field(t)?, cfg)
}
