//! Command-line front end.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::analysis::{growth_points, closed_form_rho, quantization_audit, scan_scalar_distance, SCAN_THRESHOLD};
use crate::error::{Error, Result};
use crate::flow::{rotation_number_of, FlowConfig};
use crate::format::to_json;
use crate::heun::{
    che_coefficients, che_equivalence_residual, che_solve_diagonal, circle_samples, ghe_branch, ghe_coefficients,
    ghe_equivalence_residual, CheDiagonal, PsiBranch, RootSign,
};
use crate::mat2::C64;
use crate::params::{CheSystemParams, TorusParams};
use crate::portrait::{sweep, write_csv, write_pgm, Channel, Rect};
use crate::rng::SampleRng;
use crate::su11::scalar_distance;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => EXIT_VALIDATION,
        Error::Integration { .. } | Error::Accuracy(_) => EXIT_NUMERICAL,
        Error::Io { .. } => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "torus-heun", version, about = "Rotation numbers, phase-lock portraits and Heun equations of deformed RSJ flows")]
pub struct Cli {
    /// Relative tolerance of the integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rtol: f64,
    /// Absolute tolerance of the integrator.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub atol: f64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Torus {
    #[arg(long, allow_negative_numbers = true)]
    pub omega: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: f64,
    /// Constant drift D.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub bigd: f64,
}

#[derive(Debug, Args)]
pub struct Point {
    #[command(flatten)]
    pub torus: Torus,
    #[arg(long, allow_negative_numbers = true)]
    pub b: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RootArg {
    #[value(name = "+", alias = "plus")]
    Plus,
    #[value(name = "-", alias = "minus")]
    Minus,
}

impl From<RootArg> for RootSign {
    fn from(r: RootArg) -> Self {
        match r {
            RootArg::Plus => RootSign::Plus,
            RootArg::Minus => RootSign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Conj,
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Rho,
    Lyapunov,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation number and Lyapunov exponent at one parameter point.
    Rotnum(Point),
    /// Raster of the rotation number over a rectangle of the (B, A) plane.
    Portrait {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, allow_negative_numbers = true)]
        bmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        bmax: f64,
        #[arg(long, allow_negative_numbers = true)]
        amin: f64,
        #[arg(long, allow_negative_numbers = true)]
        amax: f64,
        #[arg(long)]
        nb: usize,
        #[arg(long)]
        na: usize,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Optional greymap output path.
        #[arg(long)]
        pgm: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ChannelArg::Rho)]
        channel: ChannelArg,
        /// `lo,hi`; defaults to the range of the channel.
        #[arg(long, allow_hyphen_values = true)]
        clip: Option<String>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Points on the A = 0 axis where phase-lock areas start.
    Growth {
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long)]
        nmax: u32,
    },
    /// Exact rotation number of the unforced flow.
    ClosedForm {
        #[arg(long, allow_negative_numbers = true)]
        omega: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
    },
    /// Scalar distance of the Poincaré matrix along a vertical segment.
    Scan {
        #[command(flatten)]
        torus: Torus,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        amin: f64,
        #[arg(long, allow_negative_numbers = true)]
        amax: f64,
        #[arg(long)]
        na: usize,
        #[arg(long, default_value_t = SCAN_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Heun equations of the torus-type linear systems.
    #[command(subcommand)]
    Heun(HeunCommand),
    /// Poincaré matrix at one parameter point.
    Monodromy(Point),
    /// Checks that locked samples have integer rotation numbers.
    AuditQuantization {
        #[command(flatten)]
        torus: Torus,
        /// `bmin,bmax,amin,amax`
        #[arg(long, allow_hyphen_values = true, default_value = "-4,4,-4,4")]
        rect: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum HeunCommand {
    /// General Heun equation of the Fuchsian system.
    Ghe {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        c: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu_re: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu_im: f64,
        #[arg(long, value_enum, allow_hyphen_values = true, default_value = "+")]
        root: RootArg,
        #[arg(long, value_enum, default_value_t = BranchArg::Conj)]
        branch: BranchArg,
        /// Append the pointwise equivalence residual.
        #[arg(long)]
        verify: bool,
    },
    /// Confluent Heun equation of the confluent system.
    Che {
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
        #[arg(long, allow_negative_numbers = true)]
        g: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu_re: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu_im: f64,
        #[arg(long, value_enum, allow_hyphen_values = true, default_value = "+")]
        root: RootArg,
        #[arg(long)]
        verify: bool,
    },
}

fn cz(z: C64) -> Value {
    json!({"re": z.re, "im": z.im})
}

fn parse_list(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let vals: std::result::Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
    match vals {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::domain(format!("{what} must be {n} comma-separated finite numbers, got {s:?}"))),
    }
}

fn workers_or_default(w: Option<usize>) -> Result<usize> {
    match w {
        Some(0) => Err(Error::domain("--workers must be positive")),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

impl Torus {
    fn params(&self, bias: f64, amp: f64) -> Result<TorusParams> {
        TorusParams::new(self.omega, self.delta, self.bigd, bias, amp)
    }
}

impl Cli {
    fn config(&self) -> Result<FlowConfig> {
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("--{name} must be positive")));
            }
        }
        Ok(FlowConfig {
            rtol: self.rtol,
            atol: self.atol,
            ..FlowConfig::default()
        })
    }
}

/// Executes a parsed command and returns the text for stdout.
pub fn execute(cli: &Cli) -> Result<String> {
    let cfg = cli.config()?;
    let out = match &cli.command {
        Command::Rotnum(p) => {
            let t = p.torus.params(p.b, p.a)?;
            let r = rotation_number_of(&t, &cfg)?;
            json!({
                "rho": r.rho,
                "lyapunov": r.lyapunov,
                "class": r.class.kind.as_str(),
                "winding_periods": r.winding_periods,
            })
        }
        Command::Portrait {
            torus,
            bmin,
            bmax,
            amin,
            amax,
            nb,
            na,
            out,
            pgm,
            channel,
            clip,
            workers,
        } => {
            let base = torus.params(0.0, 0.0)?;
            let rect = Rect::new(*bmin, *bmax, *amin, *amax)?;
            if *nb == 0 || *na == 0 {
                return Err(Error::domain("--nb and --na must be positive"));
            }
            let clip = clip.as_deref().map(|s| parse_list(s, 2, "--clip")).transpose()?;
            if let Some(c) = &clip {
                if !(c[0] < c[1]) {
                    return Err(Error::domain("--clip must satisfy lo < hi"));
                }
            }
            let workers = workers_or_default(*workers)?;
            let grid = sweep(&base, rect, *nb, *na, workers, &cfg)?;
            write_csv(&grid, out)?;
            if let Some(path) = pgm {
                let ch = match channel {
                    ChannelArg::Rho => Channel::Rho,
                    ChannelArg::Lyapunov => Channel::Lyapunov,
                };
                let (lo, hi) = match &clip {
                    Some(c) => (c[0], c[1]),
                    None => {
                        let data = if ch == Channel::Rho { &grid.rho } else { &grid.lyapunov };
                        let finite = data.iter().copied().filter(|x| x.is_finite());
                        let lo = finite.clone().fold(f64::INFINITY, f64::min);
                        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
                        if lo < hi {
                            (lo, hi)
                        } else if lo.is_finite() {
                            (lo, lo + 1.0)
                        } else {
                            (0.0, 1.0)
                        }
                    }
                };
                write_pgm(&grid, ch, path, (lo, hi))?;
            }
            json!({
                "cells": grid.n_b * grid.n_a,
                "failures": grid.meta.failures,
                "quantization_violations": grid.meta.quantization_violations,
            })
        }
        Command::Growth { omega, delta, nmax } => serde_json::to_value(growth_points(*omega, *delta, *nmax)?)
            .map_err(|e| Error::domain(e.to_string()))?,
        Command::ClosedForm { omega, delta, b } => json!({"rho": closed_form_rho(*omega, *delta, *b)?}),
        Command::Scan {
            torus,
            b,
            amin,
            amax,
            na,
            threshold,
            workers,
        } => {
            let base = torus.params(*b, 0.0)?;
            if !(*threshold > 0.0) {
                return Err(Error::domain("--threshold must be positive"));
            }
            let workers = workers_or_default(*workers)?;
            let report = pool(workers)?.install(|| scan_scalar_distance(&base, *b, (*amin, *amax), *na, *threshold, &cfg))?;
            serde_json::to_value(report).map_err(|e| Error::domain(e.to_string()))?
        }
        Command::Heun(h) => heun(h)?,
        Command::Monodromy(p) => {
            let t = p.torus.params(p.b, p.a)?;
            let m = crate::flow::poincare_matrix(&crate::flow::lift_field(&t)?, &cfg)?;
            let full = m.to_mat2();
            json!({
                "matrix": [[cz(full.get(0, 0)), cz(full.get(0, 1))], [cz(full.get(1, 0)), cz(full.get(1, 1))]],
                "scalar_distance": scalar_distance(&full)?,
                "class": m.classify().kind.as_str(),
            })
        }
        Command::AuditQuantization {
            torus,
            rect,
            samples,
            seed,
            workers,
        } => {
            torus.params(0.0, 0.0)?;
            let r = parse_list(rect, 4, "--rect")?;
            let rect = Rect::new(r[0], r[1], r[2], r[3])?;
            let workers = workers_or_default(*workers)?;
            let points = audit_samples(torus, rect, *samples, *seed)?;
            let report = pool(workers)?.install(|| quantization_audit(&points, &cfg));
            serde_json::to_value(report).map_err(|e| Error::domain(e.to_string()))?
        }
    };
    Ok(to_json(&out))
}

/// `n` seeded uniform points in `rect`, drawing `B` then `A` for each.
pub fn audit_samples(torus: &Torus, rect: Rect, n: usize, seed: u64) -> Result<Vec<TorusParams>> {
    let mut rng = SampleRng::new(seed);
    (0..n)
        .map(|_| {
            let b = rng.range(rect.b_min, rect.b_max);
            let a = rng.range(rect.a_min, rect.a_max);
            torus.params(b, a)
        })
        .collect()
}

fn heun(h: &HeunCommand) -> Result<Value> {
    match h {
        HeunCommand::Ghe {
            alpha,
            b,
            c,
            nu_re,
            nu_im,
            root,
            branch,
            verify,
        } => {
            let branch = match branch {
                BranchArg::Conj => PsiBranch::Conj,
                BranchArg::Complement => PsiBranch::Complement,
            };
            let p = ghe_branch(*alpha, *b, *c, C64::new(*nu_re, *nu_im), (*root).into(), branch)?;
            let h = ghe_coefficients(&p)?;
            let mut v = json!({
                "phi": cz(p.phi),
                "psi": cz(p.psi),
                "alpha": h.alpha,
                "p": cz(h.p),
                "q": cz(h.q),
                "s": cz(h.s),
                "u": cz(h.u),
                "d": cz(h.d),
            });
            if *verify {
                v["residual"] = json!(ghe_equivalence_residual(&p, &h, &circle_samples(1.0, 16))?);
            }
            Ok(v)
        }
        HeunCommand::Che {
            b,
            g,
            nu_re,
            nu_im,
            root,
            verify,
        } => {
            let nu = C64::new(*nu_re, *nu_im);
            match che_solve_diagonal(*b, *g, nu, (*root).into())? {
                CheDiagonal::NoSolution => Ok(json!({"case": "no-solution"})),
                CheDiagonal::OneParameterFamily { a2 } => Ok(json!({"case": "one-parameter-family", "a2": cz(a2)})),
                CheDiagonal::Pair { a1, a2 } => {
                    let p = CheSystemParams::new(*b, *g, nu)?.with_diagonal(a1, a2);
                    let h = che_coefficients(&p)?;
                    let mut v = json!({
                        "case": "pair",
                        "a1": cz(a1),
                        "a2": cz(a2),
                        "p": cz(h.p),
                        "q": cz(h.q),
                        "s": cz(h.s),
                        "u": cz(h.u),
                        "d": cz(h.d),
                    });
                    if *verify {
                        v["residual"] = json!(che_equivalence_residual(&p, &h, &circle_samples(2.0, 16))?);
                    }
                    Ok(v)
                }
            }
        }
    }
}

/// Parses `args` (program name first), runs, and returns `(exit code, stdout, stderr)`.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            return if e.use_stderr() {
                (code, String::new(), text)
            } else {
                (code, text, String::new())
            };
        }
    };
    match execute(&cli) {
        Ok(s) => (EXIT_OK, s + "\n", String::new()),
        Err(e) => (exit_code(&e), String::new(), format!("error: {e}\n")),
    }
}
