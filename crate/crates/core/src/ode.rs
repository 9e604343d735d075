//! Embedded Dormand–Prince 5(4) integrator for small fixed-size real systems.

use crate::error::{Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Error coefficients: 5th order minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64, h_max: f64) -> Self {
        Dopri5 {
            rtol,
            atol,
            h_max,
            max_steps: 1_000_000,
        }
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1 > t0` and returns `y(t1)`.
    pub fn integrate<const N: usize, F>(&self, mut f: F, t0: f64, t1: f64, y0: [f64; N]) -> Result<[f64; N]>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        debug_assert!(t1 >= t0);
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let h_min = 1e-14 * span.max(1.0);
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.initial_step(&mut f, t, &y, &k1, span);
        let mut last_rejected = false;

        for _ in 0..self.max_steps {
            if t >= t1 {
                return Ok(y);
            }
            let finishing = t + h >= t1;
            if finishing {
                h = t1 - t;
            }

            let mut tmp = [0.0; N];
            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = f(t + C2 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = f(t + C3 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = f(t + C4 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = f(t + C5 * h, &tmp);
            for i in 0..N {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if finishing { t1 } else { t + h };
            let k6 = f(t_new, &tmp);
            let mut y_new = [0.0; N];
            for i in 0..N {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            let k7 = f(t_new, &y_new);

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration {
                    tau: t,
                    reason: "non-finite error estimate".into(),
                });
            }

            if err <= 1.0 {
                t = t_new;
                y = y_new;
                k1 = k7;
                let mut fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                if last_rejected {
                    fac = fac.min(1.0);
                }
                h = (h * fac).min(self.h_max);
                last_rejected = false;
            } else {
                h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0);
                last_rejected = true;
                if h < h_min {
                    return Err(Error::Integration {
                        tau: t,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
            }
        }
        Err(Error::Integration {
            tau: t,
            reason: format!("more than {} steps", self.max_steps),
        })
    }

    // Hairer–Nørsett–Wanner starting step heuristic.
    fn initial_step<const N: usize, F>(&self, f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], span: f64) -> f64
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let sc = |i: usize| self.atol + self.rtol * y[i].abs();
        let rms = |v: &dyn Fn(usize) -> f64| ((0..N).map(|i| v(i) * v(i)).sum::<f64>() / N as f64).sqrt();
        let d0 = rms(&|i| y[i] / sc(i));
        let d1 = rms(&|i| k1[i] / sc(i));
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(self.h_max).min(span);
        let mut y1 = [0.0; N];
        for i in 0..N {
            y1[i] = y[i] + h0 * k1[i];
        }
        let k2 = f(t + h0, &y1);
        let d2 = rms(&|i| (k2[i] - k1[i]) / sc(i)) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(self.h_max).min(span)
    }
}
