//! Parameter spaces of the torus flows and of the linear systems whose
//! projectivizations they are, with the maps between them.
//!
//! The torus flow is
//!
//! ```text
//! dθ/dτ = (cos θ + B + A sin τ) / (ω (1 - δ cos τ)) + D
//! ```
//!
//! and the Fuchsian system with singular points `0, α, 1/α, ∞` is
//!
//! ```text
//! Y' = ( diag(ν, 0)/z + [[φ, b], [-b, φ - conj ν - c]]/(z - α)
//!                     + [[ψ - ν - c, -b], [b, ψ]]/(z - 1/α) ) Y.
//! ```
//!
//! The α>1 representative of `{α, 1/α}` is used throughout, so the unit disk
//! contains the singular points `0` and `1/α`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64};

/// Tolerance of the Heun-compatibility and torus-type predicates.
pub const COMPAT_TOL: f64 = 1e-10;

/// The five real parameters `(ω, δ, D, B, A)` of the deformed RSJ flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusParams {
    pub omega: f64,
    pub delta: f64,
    /// `D`, the constant drift.
    pub drift: f64,
    /// `B`, the constant bias.
    pub bias: f64,
    /// `A`, the amplitude of the `sin τ` forcing.
    pub amp: f64,
}

impl TorusParams {
    pub fn new(omega: f64, delta: f64, drift: f64, bias: f64, amp: f64) -> Result<Self> {
        let p = TorusParams {
            omega,
            delta,
            drift,
            bias,
            amp,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if ![self.omega, self.delta, self.drift, self.bias, self.amp]
            .iter()
            .all(|x| x.is_finite())
        {
            return Err(Error::domain("torus parameters must be finite"));
        }
        if self.omega == 0.0 {
            return Err(Error::domain("omega must be nonzero"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::domain(format!("delta = {} is outside [0, 1)", self.delta)));
        }
        Ok(())
    }

    pub fn with_bias_amp(&self, bias: f64, amp: f64) -> Self {
        TorusParams { bias, amp, ..*self }
    }
}

/// Parameters of the confluent flow, where the deformation has reached `δ = 1`.
///
/// This is deliberately not a [`TorusParams`]: the confluent vector field is
/// singular on `τ = 0` and the flow engine does not accept it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfluentTorusParams {
    pub omega: f64,
    pub drift: f64,
    pub bias: f64,
    pub amp: f64,
}

/// Normalized Fuchsian system with diagonal residue at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GheSystemParams {
    pub alpha: f64,
    pub b: f64,
    pub c: f64,
    pub nu: C64,
    pub phi: C64,
    pub psi: C64,
}

impl GheSystemParams {
    /// System with zero diagonal parameters `φ = ψ = 0`.
    pub fn new(alpha: f64, b: f64, c: f64, nu: C64) -> Result<Self> {
        let p = GheSystemParams {
            alpha,
            b,
            c,
            nu,
            phi: C64::new(0.0, 0.0),
            psi: C64::new(0.0, 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_diagonal(self, phi: C64, psi: C64) -> Self {
        GheSystemParams { phi, psi, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha = {} must exceed 1", self.alpha)));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(Error::domain(format!("b = {} must be positive", self.b)));
        }
        Ok(())
    }

    /// Whether the diagonal parameters satisfy
    /// `b² = φ(conj ν + c - φ) = ψ(ν + c - ψ)` with `ψ ∈ {conj φ, ν + c - conj φ}`.
    pub fn heun_compatible(&self) -> bool {
        let b2 = self.b * self.b;
        let nb = self.nu.conj();
        let quad = (self.phi * (nb + self.c - self.phi) - b2).norm();
        if !(quad < COMPAT_TOL * (1.0 + b2)) {
            return false;
        }
        let tol = COMPAT_TOL * (1.0 + self.psi.norm());
        (self.psi - self.phi.conj()).norm() < tol
            || (self.psi - (self.nu + self.c - self.phi.conj())).norm() < tol
    }

    /// Residue matrices at `0`, `α` and `1/α`.
    pub fn residues(&self) -> FuchsianTriple {
        let (b, c, nu, phi, psi) = (self.b, self.c, self.nu, self.phi, self.psi);
        let bc = C64::new(b, 0.0);
        FuchsianTriple {
            k: Mat2::diag(nu, C64::new(0.0, 0.0)),
            r1: Mat2::new(phi, bc, -bc, phi - nu.conj() - c),
            r2: Mat2::new(psi - nu - c, -bc, bc, psi),
        }
    }
}

/// Normalized confluent system with Fuchsian points `0, ∞` and an irregular point at `1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheSystemParams {
    pub b: f64,
    pub g: f64,
    pub nu: C64,
    pub a1: C64,
    pub a2: C64,
}

impl CheSystemParams {
    pub fn new(b: f64, g: f64, nu: C64) -> Result<Self> {
        let p = CheSystemParams {
            b,
            g,
            nu,
            a1: C64::new(0.0, 0.0),
            a2: C64::new(0.0, 0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_diagonal(self, a1: C64, a2: C64) -> Self {
        CheSystemParams { a1, a2, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0.0 || !self.b.is_finite() {
            return Err(Error::domain("b must be finite and nonzero"));
        }
        if !self.g.is_finite() {
            return Err(Error::domain("g must be finite"));
        }
        Ok(())
    }

    /// Whether `b² = a2(g - a2)` and `a2(ν - conj ν) + a1(2 a2 - g) = 0`.
    pub fn heun_compatible(&self) -> bool {
        let b2 = self.b * self.b;
        let first = (self.a2 * (self.g - self.a2) - b2).norm();
        let dnu = self.nu - self.nu.conj();
        let lhs2 = self.a2 * dnu;
        let rhs2 = self.a1 * (self.a2 * 2.0 - self.g);
        let second = (lhs2 + rhs2).norm();
        first < COMPAT_TOL * (1.0 + b2) && second < COMPAT_TOL * (1.0 + lhs2.norm() + rhs2.norm())
    }

    /// Residue at `0`, rank-2 part and residue at `1`.
    pub fn matrices(&self) -> ConfluentTriple {
        let bc = C64::new(self.b, 0.0);
        let z = C64::new(0.0, 0.0);
        ConfluentTriple {
            a: Mat2::diag(self.nu, z),
            b: Mat2::new(self.a2, bc, -bc, self.a2 - self.g),
            c: Mat2::diag(self.a1, self.a1 + self.nu - self.nu.conj()),
        }
    }
}

/// `Y' = (K/z + R1/(z - α) + R2/(z - 1/α)) Y` with arbitrary residues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuchsianTriple {
    pub k: Mat2,
    pub r1: Mat2,
    pub r2: Mat2,
}

/// `Y' = (A/z + B/(z - 1)² + C/(z - 1)) Y` with arbitrary coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfluentTriple {
    pub a: Mat2,
    pub b: Mat2,
    pub c: Mat2,
}

pub fn ghe_to_torus(p: &GheSystemParams) -> Result<TorusParams> {
    p.validate()?;
    let (alpha, b) = (p.alpha, p.b);
    let sum = alpha + alpha.recip();
    let diff = alpha - alpha.recip();
    Ok(TorusParams {
        omega: sum / (2.0 * b * diff),
        delta: 2.0 / sum,
        drift: -p.nu.re,
        bias: (p.c + p.nu.re) / (2.0 * b),
        amp: p.nu.im / (b * diff),
    })
}

/// Inverse of [`ghe_to_torus`] on the chart `α > 1, b > 0`, with `φ = ψ = 0`.
pub fn torus_to_ghe(t: &TorusParams) -> Result<GheSystemParams> {
    t.validate()?;
    if t.delta == 0.0 {
        return Err(Error::domain("delta = 0 has no Fuchsian chart (alpha = infinity)"));
    }
    if t.omega < 0.0 {
        return Err(Error::domain("omega < 0 has no chart with b > 0"));
    }
    let alpha = (1.0 + (1.0 - t.delta * t.delta).sqrt()) / t.delta;
    let diff = alpha - alpha.recip();
    let b = (alpha + alpha.recip()) / (2.0 * t.omega * diff);
    let nu = C64::new(-t.drift, t.amp * b * diff);
    let c = 2.0 * b * t.bias - nu.re;
    GheSystemParams::new(alpha, b, c, nu)
}

pub fn che_to_torus(p: &CheSystemParams) -> Result<ConfluentTorusParams> {
    p.validate()?;
    Ok(ConfluentTorusParams {
        omega: 1.0 / p.b,
        bias: p.g / (2.0 * p.b),
        amp: p.nu.im / p.b,
        drift: -p.nu.re,
    })
}

/// Inverse of [`che_to_torus`]; the diagonal parameters are left at zero.
pub fn torus_to_che(omega: f64, bias: f64, amp: f64, drift: f64) -> Result<CheSystemParams> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(Error::domain("omega must be finite and nonzero"));
    }
    CheSystemParams::new(1.0 / omega, 2.0 * bias / omega, C64::new(-drift, amp / omega))
}

/// Whether the Riccati equation of the Fuchsian system preserves `|Φ| = 1` over `|z| = 1`.
pub fn is_torus_dynamical_fuchsian(f: &FuchsianTriple) -> bool {
    let first = f.r2 - f.r1.conj().swap_tt();
    let second = f.k + f.k.conj().swap_tt() + f.r1 + f.r2;
    first.is_scalar_within(COMPAT_TOL) && second.is_scalar_within(COMPAT_TOL)
}

/// Confluent analogue of [`is_torus_dynamical_fuchsian`].
pub fn is_torus_dynamical_confluent(t: &ConfluentTriple) -> bool {
    let first = t.a + t.a.conj().swap_tt() + t.c.conj().swap_tt();
    let second = t.b + t.b.conj().swap_tt();
    let third = t.c - t.c.conj().swap_tt();
    [first, second, third]
        .iter()
        .all(|m| m.is_scalar_within(COMPAT_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::c;
    use approx::assert_relative_eq;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn ghe_to_torus_examples() {
        let t = ghe_to_torus(&GheSystemParams::new(3.0, 0.625, 0.625, c(0.0, 0.0)).unwrap()).unwrap();
        assert!(close(t.omega, 1.0) && close(t.delta, 0.6));
        assert!(close(t.drift, 0.0) && close(t.bias, 0.5) && close(t.amp, 0.0));

        let t = ghe_to_torus(&GheSystemParams::new(2.0, 1.0, 0.0, c(0.0, 0.0)).unwrap()).unwrap();
        assert!(close(t.omega, 5.0 / 6.0) && close(t.delta, 0.8) && close(t.bias, 0.0));

        let p = GheSystemParams::new(3.0, 0.625, 0.625, c(0.0, 5.0 / 3.0)).unwrap();
        let t = ghe_to_torus(&p).unwrap();
        assert!(close(t.amp, 1.0) && close(t.drift, 0.0) && close(t.bias, 0.5));
        let back = torus_to_ghe(&t).unwrap();
        assert_relative_eq!(back.nu.im, 5.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn ghe_domain_errors() {
        assert!(GheSystemParams::new(1.0, 1.0, 0.0, c(0.0, 0.0)).is_err());
        assert!(GheSystemParams::new(0.5, 1.0, 0.0, c(0.0, 0.0)).is_err());
        assert!(GheSystemParams::new(2.0, 0.0, 0.0, c(0.0, 0.0)).is_err());
        assert!(GheSystemParams::new(2.0, -1.0, 0.0, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn torus_to_ghe_examples() {
        let g = torus_to_ghe(&TorusParams::new(1.0, 0.6, 0.0, 0.5, 0.0).unwrap()).unwrap();
        assert!(close(g.alpha, 3.0) && close(g.b, 0.625) && close(g.c, 0.625));
        assert_eq!(g.nu.norm(), 0.0);

        let g = torus_to_ghe(&TorusParams::new(1.0, 0.8, 0.0, 0.0, 0.0).unwrap()).unwrap();
        assert!(close(g.alpha, 2.0) && close(g.b, 2.5 / 3.0));

        let g = torus_to_ghe(&TorusParams::new(1.0, 0.6, 0.25, 0.5, 0.0).unwrap()).unwrap();
        assert!(close(g.nu.re, -0.25) && close(g.c, 0.875));
    }

    #[test]
    fn torus_to_ghe_rejects() {
        assert!(torus_to_ghe(&TorusParams::new(1.0, 0.0, 0.0, 0.5, 0.0).unwrap()).is_err());
        assert!(torus_to_ghe(&TorusParams::new(-1.0, 0.5, 0.0, 0.5, 0.0).unwrap()).is_err());
        assert!(TorusParams::new(1.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(TorusParams::new(0.0, 0.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn che_conversions() {
        let t = che_to_torus(&CheSystemParams::new(1.0, 1.0, c(0.0, 0.0)).unwrap()).unwrap();
        assert_eq!((t.omega, t.bias, t.amp, t.drift), (1.0, 0.5, 0.0, -0.0));
        let t = che_to_torus(&CheSystemParams::new(2.0, 0.0, c(0.0, 1.0)).unwrap()).unwrap();
        assert_eq!((t.omega, t.bias, t.amp), (0.5, 0.0, 0.5));
        assert!(close(t.drift, 0.0));
        let t = che_to_torus(&CheSystemParams::new(1.0, 1.0, c(-0.3, 0.0)).unwrap()).unwrap();
        assert_eq!((t.drift, t.amp), (0.3, 0.0));
        assert!(CheSystemParams::new(0.0, 1.0, c(0.0, 0.0)).is_err());

        let p = torus_to_che(1.0, 0.5, 0.0, 0.0).unwrap();
        assert_eq!((p.b, p.g), (1.0, 1.0));
        assert!(p.nu.norm() == 0.0);
        let p = torus_to_che(0.5, 0.0, 0.5, 0.0).unwrap();
        assert_eq!((p.b, p.g, p.nu.im), (2.0, 0.0, 1.0));
        let p = torus_to_che(1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!((p.b, p.g), (1.0, 0.0));
        assert!(torus_to_che(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn fuchsian_predicate() {
        let p = GheSystemParams::new(3.0, 0.625, 0.625, c(0.0, 1.0)).unwrap();
        assert!(is_torus_dynamical_fuchsian(&p.residues()));
        let z = FuchsianTriple { k: Mat2::zero(), r1: Mat2::zero(), r2: Mat2::zero() };
        assert!(is_torus_dynamical_fuchsian(&z));
        let mut bad = p.residues();
        bad.r1.0[0][1] += 0.1;
        assert!(!is_torus_dynamical_fuchsian(&bad));
    }

    #[test]
    fn confluent_predicate() {
        let p = CheSystemParams::new(1.0, 1.0, c(0.0, 1.0)).unwrap();
        assert!(is_torus_dynamical_confluent(&p.matrices()));
        let z = ConfluentTriple { a: Mat2::zero(), b: Mat2::zero(), c: Mat2::zero() };
        assert!(is_torus_dynamical_confluent(&z));

        let mut t = p.matrices();
        t.b = t.b + Mat2::diag(c(0.1, 0.0), c(0.1, 0.0));
        assert!(is_torus_dynamical_confluent(&t));
        // A real diagonal shift of one entry is still absorbed: B + conj(B)^tt
        // changes by 0.1·Id. An imaginary one is not.
        let mut t = p.matrices();
        t.b = t.b + Mat2::diag(c(0.1, 0.0), c(0.0, 0.0));
        assert!(is_torus_dynamical_confluent(&t));
        let mut t = p.matrices();
        t.b = t.b + Mat2::diag(c(0.0, 0.1), c(0.0, 0.0));
        assert!(!is_torus_dynamical_confluent(&t));
    }

    #[test]
    fn compatibility_flags() {
        let p = GheSystemParams::new(3.0, 0.625, 0.625, c(0.0, 0.0)).unwrap();
        assert!(!p.heun_compatible());
        let phi = c(0.3125, (1.5625f64 - 0.390625).sqrt() / 2.0);
        assert!(p.with_diagonal(phi, phi.conj()).heun_compatible());
        assert!(p.with_diagonal(phi, 0.625 - phi.conj()).heun_compatible());
        assert!(!p.with_diagonal(phi, phi + 0.1).heun_compatible());
        assert!(!p.with_diagonal(phi + 0.1, phi.conj()).heun_compatible());
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn ghe() -> impl Strategy<Value = GheSystemParams> {
        (1.01f64..20.0, 0.01f64..5.0, -5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0)
            .prop_map(|(alpha, b, c, re, im)| GheSystemParams::new(alpha, b, c, C64::new(re, im)).unwrap())
    }

    proptest! {
        #[test]
        fn ghe_round_trip(p in ghe()) {
            let t = ghe_to_torus(&p).unwrap();
            prop_assert!(t.delta > 0.0 && t.delta < 1.0);
            let q = torus_to_ghe(&t).unwrap();
            let rel = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + y.abs());
            prop_assert!(rel(q.alpha, p.alpha) && rel(q.b, p.b) && rel(q.c, p.c));
            prop_assert!(rel(q.nu.re, p.nu.re) && rel(q.nu.im, p.nu.im));
        }

        #[test]
        fn delta_decreasing_in_alpha(a in 1.001f64..50.0, da in 0.001f64..5.0) {
            let t0 = ghe_to_torus(&GheSystemParams::new(a, 1.0, 0.0, C64::new(0.0, 0.0)).unwrap()).unwrap();
            let t1 = ghe_to_torus(&GheSystemParams::new(a + da, 1.0, 0.0, C64::new(0.0, 0.0)).unwrap()).unwrap();
            prop_assert!(t1.delta < t0.delta);
        }

        #[test]
        fn normal_forms_are_torus_type(p in ghe(), g in -5.0f64..5.0, a1r in -3.0f64..3.0, a1i in -3.0f64..3.0, a2r in -3.0f64..3.0, a2i in -3.0f64..3.0) {
            let phi = C64::new(a1r, a1i);
            let psi = C64::new(a2r, a2i);
            prop_assert!(is_torus_dynamical_fuchsian(&p.with_diagonal(phi, psi).residues()));
            let q = CheSystemParams::new(p.b, g, p.nu).unwrap().with_diagonal(phi, psi);
            prop_assert!(is_torus_dynamical_confluent(&q.matrices()));
        }
    }
}
