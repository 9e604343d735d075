//! Möbius automorphisms of the unit disk represented by SU(1,1) matrices.
//!
//! A matrix `[[a, b], [conj(b), conj(a)]]` with `|a|² - |b|² = 1` acts on the
//! projective line by
//!
//! ```text
//! Φ ↦ (M21 + M22 Φ) / (M11 + M12 Φ)
//! ```
//!
//! which is the action induced on `Φ = Y2 / Y1` by `Y ↦ M Y`. Every function
//! in this crate uses this convention.

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{Mat2, C64};

/// Tolerance separating elliptic, parabolic and hyperbolic maps on `|Re a| - 1`.
pub const CLASSIFY_TOL: f64 = 1e-9;

/// Largest determinant defect accepted when projecting an integrated matrix.
pub const PROJECTION_MAX_DEFECT: f64 = 1e-6;

/// Denominators below this are treated as a pole of the Möbius map.
const POLE_EPS: f64 = 1e-300;

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtPoint {
    Finite(C64),
    Infinity,
}

impl ExtPoint {
    pub fn finite(self) -> Option<C64> {
        match self {
            ExtPoint::Finite(z) => Some(z),
            ExtPoint::Infinity => None,
        }
    }

    pub fn modulus(self) -> f64 {
        match self {
            ExtPoint::Finite(z) => z.norm(),
            ExtPoint::Infinity => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Elliptic,
    Parabolic,
    Hyperbolic,
    Identity,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::Elliptic => "elliptic",
            MapKind::Parabolic => "parabolic",
            MapKind::Hyperbolic => "hyperbolic",
            MapKind::Identity => "identity",
        }
    }
}

impl fmt::Display for MapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapClass {
    pub kind: MapKind,
    /// `Re a`, half the trace.
    pub trace_half: f64,
}

/// A fixed point of the Möbius action together with the derivative there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub point: ExtPoint,
    pub multiplier: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11Matrix {
    pub a: C64,
    pub b: C64,
}

impl Su11Matrix {
    /// Builds `[[a, b], [conj b, conj a]]`, checking `|a|² - |b|² = 1` to 1e-9.
    pub fn new(a: C64, b: C64) -> Result<Self> {
        let m = Su11Matrix { a, b };
        let defect = m.det_defect();
        if !(defect < 1e-9) {
            return Err(Error::domain(format!(
                "|a|^2 - |b|^2 deviates from 1 by {defect:e}"
            )));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Su11Matrix {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
        }
    }

    /// `diag(e^{iφ}, e^{-iφ})`.
    pub fn rotation(phi: f64) -> Self {
        Su11Matrix {
            a: C64::from_polar(1.0, phi),
            b: C64::new(0.0, 0.0),
        }
    }

    /// `[[cosh t, sinh t], [sinh t, cosh t]]`.
    pub fn boost(t: f64) -> Self {
        Su11Matrix {
            a: C64::new(t.cosh(), 0.0),
            b: C64::new(t.sinh(), 0.0),
        }
    }

    /// Projects a numerically integrated fundamental matrix onto SU(1,1).
    ///
    /// The matrix is divided by the principal square root of its determinant
    /// and then symmetrized. Defects of `PROJECTION_MAX_DEFECT` or more are
    /// reported as accuracy errors instead of being projected away.
    pub fn project(m: &Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::Accuracy("non-finite fundamental matrix".into()));
        }
        let det = m.det();
        let det_defect = (det - 1.0).norm();
        if det_defect >= PROJECTION_MAX_DEFECT {
            return Err(Error::Accuracy(format!(
                "determinant defect {det_defect:e} exceeds {PROJECTION_MAX_DEFECT:e}"
            )));
        }
        let n = m.scale(det.sqrt().inv());
        let scale = 1.0 + n.frobenius();
        let shape_defect =
            (n.get(0, 0) - n.get(1, 1).conj()).norm() + (n.get(0, 1) - n.get(1, 0).conj()).norm();
        if shape_defect >= PROJECTION_MAX_DEFECT * scale {
            return Err(Error::Accuracy(format!(
                "matrix leaves SU(1,1) by {shape_defect:e}"
            )));
        }
        let a = (n.get(0, 0) + n.get(1, 1).conj()) * 0.5;
        let b = (n.get(0, 1) + n.get(1, 0).conj()) * 0.5;
        let norm = a.norm_sqr() - b.norm_sqr();
        if !(norm > 0.0) {
            return Err(Error::Accuracy("projected matrix has |a| <= |b|".into()));
        }
        let s = norm.sqrt();
        Ok(Su11Matrix { a: a / s, b: b / s })
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(self.a, self.b, self.b.conj(), self.a.conj())
    }

    /// `||a|² - |b|² - 1|`.
    pub fn det_defect(&self) -> f64 {
        (self.a.norm_sqr() - self.b.norm_sqr() - 1.0).abs()
    }

    pub fn inverse(&self) -> Self {
        Su11Matrix {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Image of `phi` under the Möbius action.
    pub fn act(&self, phi: C64) -> ExtPoint {
        let den = self.a + self.b * phi;
        if den.norm() < POLE_EPS {
            return ExtPoint::Infinity;
        }
        ExtPoint::Finite((self.b.conj() + self.a.conj() * phi) / den)
    }

    /// Derivative of the Möbius action at a finite point.
    pub fn derivative(&self, phi: C64) -> C64 {
        let den = self.a + self.b * phi;
        (den * den).inv()
    }

    pub fn classify(&self) -> MapClass {
        let trace_half = self.a.re;
        let m = self.to_mat2();
        let id = Mat2::identity();
        let kind = if (m - id).frobenius() < CLASSIFY_TOL || (m + id).frobenius() < CLASSIFY_TOL {
            MapKind::Identity
        } else {
            let t = trace_half.abs();
            if t < 1.0 - CLASSIFY_TOL {
                MapKind::Elliptic
            } else if t > 1.0 + CLASSIFY_TOL {
                MapKind::Hyperbolic
            } else {
                MapKind::Parabolic
            }
        };
        MapClass { kind, trace_half }
    }

    /// Both fixed points of the action with their multipliers.
    ///
    /// Hyperbolic and parabolic maps have their fixed points on the unit
    /// circle; these are normalized to modulus one and their multipliers are
    /// returned as positive reals. Elliptic maps have one fixed point inside
    /// the disk and its mirror image outside; the inside one comes first.
    pub fn fixed_points(&self) -> Result<[FixedPoint; 2]> {
        let class = self.classify();
        if class.kind == MapKind::Identity {
            return Err(Error::domain("fixed points of the identity map are not isolated"));
        }
        // b Φ² + (a - conj a) Φ - conj b = 0; the discriminant is 4(Re a² - 1).
        let (a, b) = (self.a, self.b);
        let p = a - a.conj();
        let disc = C64::new(4.0 * (a.re * a.re - 1.0), 0.0);
        let mut s = disc.sqrt();
        if (p.conj() * s).re < 0.0 {
            s = -s;
        }
        let q = -(p + s) * 0.5;
        if q.norm() == 0.0 {
            return Err(Error::domain("degenerate fixed-point equation"));
        }
        let r2 = ExtPoint::Finite(-b.conj() / q);
        let r1 = if b.norm() == 0.0 {
            ExtPoint::Infinity
        } else {
            ExtPoint::Finite(q / b)
        };

        let fp = |pt: ExtPoint| -> FixedPoint {
            let multiplier = match pt {
                ExtPoint::Finite(z) => self.derivative(z),
                // In the chart w = 1/Φ the map is w ↦ (a w + b)/(conj b w + conj a).
                ExtPoint::Infinity => (a.conj() * a.conj()).inv(),
            };
            FixedPoint { point: pt, multiplier }
        };

        match class.kind {
            MapKind::Elliptic => {
                let (inside, outside) = if r1.modulus() < r2.modulus() {
                    (r1, r2)
                } else {
                    (r2, r1)
                };
                Ok([fp(inside), fp(outside)])
            }
            _ => {
                let on_circle = |pt: ExtPoint| -> FixedPoint {
                    let z = match pt {
                        ExtPoint::Finite(z) if z.norm() > 0.0 => z / z.norm(),
                        // A circle fixed point is never 0 or ∞ for |Re a| ≥ 1.
                        _ => C64::new(1.0, 0.0),
                    };
                    let multiplier = if class.kind == MapKind::Parabolic {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(self.derivative(z).norm(), 0.0)
                    };
                    FixedPoint {
                        point: ExtPoint::Finite(z),
                        multiplier,
                    }
                };
                let mut pts = [on_circle(r1), on_circle(r2)];
                // Attracting point first.
                if pts[0].multiplier.re > pts[1].multiplier.re {
                    pts.swap(0, 1);
                }
                Ok(pts)
            }
        }
    }

    /// Largest Lyapunov exponent of the circle map per unit of τ (one period is 2π).
    pub fn lyapunov_exponent(&self) -> f64 {
        if self.classify().kind != MapKind::Hyperbolic {
            return 0.0;
        }
        match self.fixed_points() {
            Ok(pts) => pts
                .iter()
                .map(|f| f.multiplier.norm().ln().abs())
                .fold(0.0, f64::max)
                / (2.0 * PI),
            Err(_) => 0.0,
        }
    }
}

impl Mul for Su11Matrix {
    type Output = Su11Matrix;
    fn mul(self, o: Su11Matrix) -> Su11Matrix {
        Su11Matrix {
            a: self.a * o.a + self.b * o.b.conj(),
            b: self.a * o.b + self.b * o.a.conj(),
        }
    }
}

/// Normalized Frobenius distance from `m` to the nearest scalar matrix.
///
/// Zero exactly when the Möbius action of `m` is the identity; at most √2.
pub fn scalar_distance(m: &Mat2) -> Result<f64> {
    let norm = m.frobenius();
    if !(norm > 0.0) {
        return Err(Error::domain("scalar distance of the zero matrix"));
    }
    Ok(m.traceless_part().frobenius() / norm)
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;

    fn su11() -> impl Strategy<Value = Su11Matrix> {
        (-3.0f64..3.0, -PI..PI, -PI..PI).prop_map(|(t, x, y)| {
            // Boost conjugated and composed with rotations covers the group.
            Su11Matrix::rotation(x) * Su11Matrix::boost(t) * Su11Matrix::rotation(y)
        })
    }

    proptest! {
        #[test]
        fn closure(m in su11(), n in su11()) {
            prop_assert!((m * n).det_defect() < 1e-9 * (1.0 + (m * n).a.norm_sqr()));
        }

        #[test]
        fn preserves_unit_circle(m in su11()) {
            for k in 0..16 {
                let phi = C64::from_polar(1.0, 2.0 * PI * (k as f64 + 0.1) / 16.0);
                if let ExtPoint::Finite(w) = m.act(phi) {
                    prop_assert!((w.norm() - 1.0).abs() < 1e-10);
                }
            }
        }

        #[test]
        fn multiplier_reciprocity(t in 0.05f64..3.0, x in -PI..PI) {
            let m = Su11Matrix::rotation(x) * Su11Matrix::boost(t) * Su11Matrix::rotation(-x);
            let pts = m.fixed_points().unwrap();
            let prod = pts[0].multiplier * pts[1].multiplier;
            prop_assert!((prod - 1.0).norm() < 1e-9);
        }

        #[test]
        fn scalar_distance_scale_invariant(m in su11(), r in 0.1f64..10.0, arg in -PI..PI) {
            let s = C64::from_polar(r, arg);
            let d0 = scalar_distance(&m.to_mat2()).unwrap();
            let d1 = scalar_distance(&(m.to_mat2() * s)).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
