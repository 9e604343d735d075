//! Heun equations satisfied by the second component of the torus-type
//! linear systems.
//!
//! For the Fuchsian system the equation is the general Heun equation
//!
//! ```text
//! z(z - 1/α)(z - α) E'' + (p(z - α)(z - 1/α) + q z(z - 1/α) + s z(z - α)) E' + (u z + d) E = 0,
//! ```
//!
//! and for the confluent system the renormalized confluent Heun equation
//!
//! ```text
//! z(z - 1)² E'' + (p z(z - 1) + q z + s) E' + (u z + d) E = 0.
//! ```
//!
//! Equivalence is checked pointwise. Writing `Y' = A(z) Y`, the component
//! `E = Y2` has `E' = (row 2 of A)·Y` and `E'' = (row 2 of A' + A²)·Y`, so the
//! Heun operator applied to `E` is a linear functional `L(z)·Y`. The system is
//! equivalent to the equation exactly when `L` vanishes identically, which is
//! tested on sample points without integrating anything.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64};
use crate::params::{CheSystemParams, GheSystemParams, TorusParams};

/// Minimum distance of a sample from a Fuchsian singular point of the GHE.
pub const GHE_SAMPLE_MARGIN: f64 = 0.05;
/// Minimum distance of a sample from a singular point of the confluent system.
pub const CHE_SAMPLE_MARGIN: f64 = 0.1;
/// Samples closer than this to the real axis count as lying on a branch cut.
const CUT_MARGIN: f64 = 1e-9;
/// `g² = 4b²` is treated as a double root within this relative tolerance.
const DOUBLE_ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootSign {
    Plus,
    Minus,
}

impl RootSign {
    fn sign(self) -> f64 {
        match self {
            RootSign::Plus => 1.0,
            RootSign::Minus => -1.0,
        }
    }
}

/// Which solution of `ψ(ν + c - ψ) = b²` accompanies a given `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PsiBranch {
    /// `ψ = conj φ`.
    Conj,
    /// `ψ = ν + c - conj φ`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeunGeneralCoeffs {
    pub alpha: f64,
    pub p: C64,
    pub q: C64,
    pub s: C64,
    pub u: C64,
    pub d: C64,
}

impl HeunGeneralCoeffs {
    /// Polynomial coefficients `(P2, P1, P0)` of `E'', E', E` at `z`.
    pub fn polys(&self, z: C64) -> [C64; 3] {
        let (a, ai) = (self.alpha, self.alpha.recip());
        let p2 = z * (z - ai) * (z - a);
        let p1 = self.p * (z - a) * (z - ai) + self.q * z * (z - ai) + self.s * z * (z - a);
        let p0 = self.u * z + self.d;
        [p2, p1, p0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeunConfluentCoeffs {
    pub p: C64,
    pub q: C64,
    pub s: C64,
    pub u: C64,
    pub d: C64,
}

impl HeunConfluentCoeffs {
    pub fn polys(&self, z: C64) -> [C64; 3] {
        let zm = z - 1.0;
        [z * zm * zm, self.p * z * zm + self.q * z + self.s, self.u * z + self.d]
    }
}

/// Double confluent Heun data reachable from the torus parameters alone.
///
/// `lam` and `ell` need the parameters `ℓ, a` of the underlying linear system,
/// which are not expressed through `(B, A, ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcheCoeffs {
    pub mu: f64,
    pub lam: Option<f64>,
    pub ell: Option<C64>,
}

/// Diagonal parameters `(φ, ψ)` making the Fuchsian system equivalent to a Heun equation.
pub fn ghe_solve_diagonal(
    alpha: f64,
    b: f64,
    c: f64,
    nu: C64,
    root: RootSign,
    branch: PsiBranch,
) -> Result<(C64, C64)> {
    GheSystemParams::new(alpha, b, c, nu)?;
    let w = nu.conj() + c;
    let disc = w * w - 4.0 * b * b;
    // `+ 0.0` clears a negative zero so the principal root is taken.
    let disc = C64::new(disc.re, disc.im + 0.0);
    let phi = (w + disc.sqrt() * root.sign()) * 0.5;
    let psi = match branch {
        PsiBranch::Conj => phi.conj(),
        PsiBranch::Complement => nu + c - phi.conj(),
    };
    Ok((phi, psi))
}

/// The Heun-compatible system for one of the four `(root, branch)` choices.
pub fn ghe_branch(
    alpha: f64,
    b: f64,
    c: f64,
    nu: C64,
    root: RootSign,
    branch: PsiBranch,
) -> Result<GheSystemParams> {
    let (phi, psi) = ghe_solve_diagonal(alpha, b, c, nu, root, branch)?;
    Ok(GheSystemParams::new(alpha, b, c, nu)?.with_diagonal(phi, psi))
}

pub fn ghe_coefficients(p: &GheSystemParams) -> Result<HeunGeneralCoeffs> {
    p.validate()?;
    if !p.heun_compatible() {
        return Err(Error::domain(
            "diagonal parameters do not make the system equivalent to a Heun equation",
        ));
    }
    let (c, nu, phi, psi) = (p.c, p.nu, p.phi, p.psi);
    let nb = nu.conj();
    Ok(HeunGeneralCoeffs {
        alpha: p.alpha,
        p: -nu,
        q: nb + c + 1.0 - phi * 2.0,
        s: nu + c + 1.0 - psi * 2.0,
        u: (nb + c - phi - psi) * (c + 1.0 - phi - psi),
        d: nu * ((nb + c - phi) / p.alpha - psi * p.alpha),
    })
}

fn check_margin(z: C64, singular: &[C64], margin: f64) -> Result<()> {
    for s in singular {
        if (z - s).norm() < margin {
            return Err(Error::domain(format!(
                "sample {z} lies within {margin} of the singular point {s}"
            )));
        }
    }
    if !z.is_finite() {
        return Err(Error::domain("non-finite sample"));
    }
    Ok(())
}

fn norm2(v: [C64; 2]) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

/// `max ‖L(z)‖ / scale(z)` over the samples, where `L(z)` is the row vector
/// obtained by applying the Heun operator to `E = Y2`.
fn operator_functional_residual(
    samples: &[C64],
    mut system: impl FnMut(C64) -> (Mat2, Mat2),
    mut polys: impl FnMut(C64) -> [C64; 3],
) -> f64 {
    let mut worst: f64 = 0.0;
    for &z in samples {
        let (a, da) = system(z);
        let second = (da + a * a).row(1);
        let first = a.row(1);
        let [p2, p1, p0] = polys(z);
        let l = [
            p2 * second[0] + p1 * first[0],
            p2 * second[1] + p1 * first[1] + p0,
        ];
        let scale = p2.norm() * norm2(second) + p1.norm() * norm2(first) + p0.norm();
        if scale > 0.0 {
            worst = worst.max(norm2(l) / scale);
        }
    }
    worst
}

/// Pointwise residual of the Fuchsian system against a general Heun equation.
///
/// Vanishes to rounding when `h` is the equation of `p`.
pub fn ghe_equivalence_residual(p: &GheSystemParams, h: &HeunGeneralCoeffs, z_samples: &[C64]) -> Result<f64> {
    p.validate()?;
    let (a, ai) = (p.alpha, p.alpha.recip());
    let sing = [C64::new(0.0, 0.0), C64::new(a, 0.0), C64::new(ai, 0.0)];
    for &z in z_samples {
        check_margin(z, &sing, GHE_SAMPLE_MARGIN)?;
    }
    let r = p.residues();
    Ok(operator_functional_residual(
        z_samples,
        |z| {
            let (w0, w1, w2) = (z.inv(), (z - a).inv(), (z - ai).inv());
            let sys = r.k * w0 + r.r1 * w1 + r.r2 * w2;
            let dsys = -(r.k * (w0 * w0) + r.r1 * (w1 * w1) + r.r2 * (w2 * w2));
            (sys, dsys)
        },
        |z| h.polys(z),
    ))
}

/// Outcome of solving for the confluent diagonal parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheDiagonal {
    Pair { a1: C64, a2: C64 },
    /// `b = ±g/2` with real `ν`: `a2 = g/2` and any `a1` works.
    OneParameterFamily { a2: C64 },
    /// `b = ±g/2` with non-real `ν`.
    NoSolution,
}

/// Solves `b² = a2(g - a2)`, `a2(ν - conj ν) + a1(2a2 - g) = 0`.
pub fn che_solve_diagonal(b: f64, g: f64, nu: C64, root: RootSign) -> Result<CheDiagonal> {
    CheSystemParams::new(b, g, nu)?;
    let dnu = nu - nu.conj();
    let disc = g * g - 4.0 * b * b;
    if disc.abs() <= DOUBLE_ROOT_TOL * (g * g + 4.0 * b * b) {
        let a2 = C64::new(g / 2.0, 0.0);
        // g(ν - conj ν)/2 = 0 ⇔ Im ν = 0 since g = ±2b ≠ 0.
        return Ok(if (dnu * (g / 2.0)).norm() <= DOUBLE_ROOT_TOL * (1.0 + g.abs()) {
            CheDiagonal::OneParameterFamily { a2 }
        } else {
            CheDiagonal::NoSolution
        });
    }
    let sq = C64::new(disc, 0.0).sqrt() * root.sign();
    let a2 = (sq + g) * 0.5;
    // 2a2 - g = ±sqrt(disc)
    let a1 = -a2 * dnu / sq;
    Ok(CheDiagonal::Pair { a1, a2 })
}

pub fn che_coefficients(p: &CheSystemParams) -> Result<HeunConfluentCoeffs> {
    p.validate()?;
    if !p.heun_compatible() {
        return Err(Error::domain(
            "diagonal parameters do not make the system equivalent to a confluent Heun equation",
        ));
    }
    let (g, nu, a1, a2) = (p.g, p.nu, p.a1, p.a2);
    let nb = nu.conj();
    Ok(HeunConfluentCoeffs {
        p: nb + 2.0 - nu * 2.0 - a1 * 2.0,
        q: nu + g - a2 * 2.0,
        s: -nu,
        u: (a1 + nu - 1.0) * (a1 + nu - nb),
        d: nu * (a2 - g - a1 - nu + nb),
    })
}

/// Pointwise residual of the confluent system against a confluent Heun equation.
pub fn che_equivalence_residual(p: &CheSystemParams, h: &HeunConfluentCoeffs, z_samples: &[C64]) -> Result<f64> {
    p.validate()?;
    let sing = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    for &z in z_samples {
        check_margin(z, &sing, CHE_SAMPLE_MARGIN)?;
    }
    let m = p.matrices();
    Ok(operator_functional_residual(
        z_samples,
        |z| {
            let w0 = z.inv();
            let w1 = (z - 1.0).inv();
            let w2 = w1 * w1;
            let sys = m.a * w0 + m.b * w2 + m.c * w1;
            let dsys = -(m.a * (w0 * w0) + m.b * (w2 * w1 * 2.0) + m.c * w2);
            (sys, dsys)
        },
        |z| h.polys(z),
    ))
}

/// Test functions for the operator conjugation identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFn {
    One,
    Z,
    ZSquared,
    Exp,
}

impl TestFn {
    pub const STANDARD: [TestFn; 4] = [TestFn::One, TestFn::Z, TestFn::ZSquared, TestFn::Exp];

    /// `(f, f', f'')` at `z`.
    pub fn jet(self, z: C64) -> [C64; 3] {
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        match self {
            TestFn::One => [one, zero, zero],
            TestFn::Z => [z, one, zero],
            TestFn::ZSquared => [z * z, z * 2.0, C64::new(2.0, 0.0)],
            TestFn::Exp => {
                let e = z.exp();
                [e, e, e]
            }
        }
    }
}

/// A gauge factor `g` described by its value and logarithmic derivative data.
struct GaugeJet {
    g: C64,
    /// `g'/g`
    log_d: C64,
    /// `(g'/g)'`
    log_dd: C64,
}

/// Largest relative violation of `Op1[g f] = g · Op0[f]`.
fn conjugation_residual(
    samples: &[C64],
    test_fns: &[TestFn],
    mut gauge: impl FnMut(C64) -> GaugeJet,
    mut op0: impl FnMut(C64) -> [C64; 3],
    mut op1: impl FnMut(C64) -> [C64; 3],
) -> f64 {
    let mut worst: f64 = 0.0;
    for &z in samples {
        let GaugeJet { g, log_d, log_dd } = gauge(z);
        let dg = g * log_d;
        let ddg = g * (log_d * log_d + log_dd);
        let [q2, q1, q0] = op0(z);
        let [r2, r1, r0] = op1(z);
        for tf in test_fns {
            let [f, df, ddf] = tf.jet(z);
            let h = g * f;
            let dh = dg * f + g * df;
            let ddh = ddg * f + dg * df * 2.0 + g * ddf;
            let lhs_terms = [r2 * ddh, r1 * dh, r0 * h];
            let rhs_terms = [g * q2 * ddf, g * q1 * df, g * q0 * f];
            let lhs: C64 = lhs_terms.iter().sum();
            let rhs: C64 = rhs_terms.iter().sum();
            let scale: f64 = lhs_terms.iter().chain(rhs_terms.iter()).map(|t| t.norm()).sum();
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).norm() / scale);
            }
        }
    }
    worst
}

fn check_cut(z: C64, right_end: f64) -> Result<()> {
    if z.im.abs() < CUT_MARGIN && z.re <= right_end {
        return Err(Error::domain(format!("sample {z} lies on the branch cut of the gauge factor")));
    }
    Ok(())
}

/// Exponents of the gauge factor `(z - α)^{e_alpha} (z - 1/α)^{e_inv}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GheGaugeExponents {
    pub e_alpha: C64,
    pub e_inv: C64,
}

/// Residual of the gauge identity between the Heun equations of two
/// compatible branches of the same system.
pub fn ghe_gauge_residual(
    branch0: &GheSystemParams,
    branch1: &GheSystemParams,
    test_fns: &[TestFn],
    z_samples: &[C64],
) -> Result<f64> {
    if (branch0.alpha, branch0.b, branch0.c, branch0.nu) != (branch1.alpha, branch1.b, branch1.c, branch1.nu) {
        return Err(Error::domain("gauge-related branches must share (alpha, b, c, nu)"));
    }
    let exps = GheGaugeExponents {
        e_alpha: branch1.phi - branch0.phi,
        e_inv: branch1.psi - branch0.psi,
    };
    ghe_gauge_residual_with(branch0, branch1, exps, test_fns, z_samples)
}

/// As [`ghe_gauge_residual`] with explicitly chosen exponents.
pub fn ghe_gauge_residual_with(
    branch0: &GheSystemParams,
    branch1: &GheSystemParams,
    exps: GheGaugeExponents,
    test_fns: &[TestFn],
    z_samples: &[C64],
) -> Result<f64> {
    let h0 = ghe_coefficients(branch0)?;
    let h1 = ghe_coefficients(branch1)?;
    let (a, ai) = (branch0.alpha, branch0.alpha.recip());
    let sing = [C64::new(0.0, 0.0), C64::new(a, 0.0), C64::new(ai, 0.0)];
    for &z in z_samples {
        check_margin(z, &sing, GHE_SAMPLE_MARGIN)?;
        check_cut(z, a)?;
    }
    Ok(conjugation_residual(
        z_samples,
        test_fns,
        |z| {
            let (w1, w2) = ((z - a).inv(), (z - ai).inv());
            GaugeJet {
                g: (exps.e_alpha * (z - a).ln() + exps.e_inv * (z - ai).ln()).exp(),
                log_d: exps.e_alpha * w1 + exps.e_inv * w2,
                log_dd: -(exps.e_alpha * w1 * w1 + exps.e_inv * w2 * w2),
            }
        },
        |z| h0.polys(z),
        |z| h1.polys(z),
    ))
}

/// Parameters of the confluent gauge factor `(z - 1)^{power} e^{essential/(z - 1)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheGaugeExponents {
    pub power: C64,
    pub essential: C64,
}

pub fn che_gauge_residual(
    branch0: &CheSystemParams,
    branch1: &CheSystemParams,
    test_fns: &[TestFn],
    z_samples: &[C64],
) -> Result<f64> {
    if (branch0.b, branch0.g, branch0.nu) != (branch1.b, branch1.g, branch1.nu) {
        return Err(Error::domain("gauge-related branches must share (b, g, nu)"));
    }
    let exps = CheGaugeExponents {
        power: branch1.a1 - branch0.a1,
        essential: branch0.a2 - branch1.a2,
    };
    che_gauge_residual_with(branch0, branch1, exps, test_fns, z_samples)
}

pub fn che_gauge_residual_with(
    branch0: &CheSystemParams,
    branch1: &CheSystemParams,
    exps: CheGaugeExponents,
    test_fns: &[TestFn],
    z_samples: &[C64],
) -> Result<f64> {
    let h0 = che_coefficients(branch0)?;
    let h1 = che_coefficients(branch1)?;
    let sing = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    for &z in z_samples {
        check_margin(z, &sing, CHE_SAMPLE_MARGIN)?;
        check_cut(z, 1.0)?;
    }
    Ok(conjugation_residual(
        z_samples,
        test_fns,
        |z| {
            let w = (z - 1.0).inv();
            GaugeJet {
                g: (exps.power * (z - 1.0).ln() + exps.essential * w).exp(),
                log_d: exps.power * w - exps.essential * w * w,
                log_dd: -exps.power * w * w + exps.essential * w * w * w * 2.0,
            }
        },
        |z| h0.polys(z),
        |z| h1.polys(z),
    ))
}

/// `μ = A/(2ω)` for the RSJ model; `λ = (a² - 4μ²)/4` when `a` is supplied.
pub fn dche_coefficients(t: &TorusParams, ell_and_a: Option<(C64, f64)>) -> Result<DcheCoeffs> {
    t.validate()?;
    if t.delta != 0.0 {
        return Err(Error::domain("the double confluent description needs delta = 0"));
    }
    let mu = t.amp / (2.0 * t.omega);
    let s = 2.0 * mu;
    Ok(DcheCoeffs {
        mu,
        lam: ell_and_a.map(|(_, a)| (a * a - s * s) / 4.0),
        ell: ell_and_a.map(|(ell, _)| ell),
    })
}

/// `n` points on the circle `|z| = radius`, offset from the real axis.
pub fn circle_samples(radius: f64, n: usize) -> Vec<C64> {
    (0..n)
        .map(|k| C64::from_polar(radius, std::f64::consts::TAU * (k as f64 + 0.37) / n as f64))
        .collect()
}
