//! Rotation number and Lyapunov exponent rasters over rectangles of the `(B, A)` plane.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::analysis::{LOCK_INTEGER_TOL, LOCK_LYAPUNOV};
use crate::error::{Error, Result};
use crate::flow::{rotation_number_of, FlowConfig};
use crate::format::fmt_real;
use crate::params::TorusParams;
use crate::su11::MapKind;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub b_min: f64,
    pub b_max: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl Rect {
    pub fn new(b_min: f64, b_max: f64, a_min: f64, a_max: f64) -> Result<Self> {
        let r = Rect {
            b_min,
            b_max,
            a_min,
            a_max,
        };
        if ![b_min, b_max, a_min, a_max].iter().all(|x| x.is_finite()) {
            return Err(Error::domain("rectangle bounds must be finite"));
        }
        if b_min > b_max || a_min > a_max {
            return Err(Error::domain("rectangle bounds must satisfy min <= max"));
        }
        Ok(r)
    }
}

/// Inclusive grid coordinate `k` of `n` on `[lo, hi]`; a single point sits at `lo`.
pub fn grid_coord(lo: f64, hi: f64, n: usize, k: usize) -> f64 {
    if n <= 1 {
        lo
    } else if k + 1 == n {
        hi
    } else {
        lo + k as f64 * (hi - lo) / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortraitMeta {
    pub omega: f64,
    pub delta: f64,
    pub drift: f64,
    pub config: FlowConfig,
    pub failures: usize,
    pub quantization_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortraitGrid {
    pub rect: Rect,
    pub n_b: usize,
    pub n_a: usize,
    /// Row-major over `(i, j)`, `i` indexing `B`.
    pub rho: Vec<f64>,
    pub lyapunov: Vec<f64>,
    /// `None` for cells whose integration failed.
    pub class: Vec<Option<MapKind>>,
    pub meta: PortraitMeta,
}

impl PortraitGrid {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_a + j
    }

    pub fn bias(&self, i: usize) -> f64 {
        grid_coord(self.rect.b_min, self.rect.b_max, self.n_b, i)
    }

    pub fn amp(&self, j: usize) -> f64 {
        grid_coord(self.rect.a_min, self.rect.a_max, self.n_a, j)
    }

    pub fn rho_at(&self, i: usize, j: usize) -> f64 {
        self.rho[self.index(i, j)]
    }

    pub fn lyapunov_at(&self, i: usize, j: usize) -> f64 {
        self.lyapunov[self.index(i, j)]
    }

    /// Cells with `Λ > 1e-3` whose rotation number is not an integer.
    pub fn quantization_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n_b {
            for j in 0..self.n_a {
                let (r, l) = (self.rho_at(i, j), self.lyapunov_at(i, j));
                if l > LOCK_LYAPUNOV && (r - r.round()).abs() >= LOCK_INTEGER_TOL {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn nan_cells(&self) -> usize {
        self.rho.iter().filter(|r| r.is_nan()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Rho,
    Lyapunov,
}

/// Computes every cell with `workers` threads.
///
/// Cells are independent and assembled by index, so the result does not
/// depend on `workers`. Failed cells hold NaN and are counted in the metadata.
pub fn sweep(
    base: &TorusParams,
    rect: Rect,
    n_b: usize,
    n_a: usize,
    workers: usize,
    cfg: &FlowConfig,
) -> Result<PortraitGrid> {
    base.validate()?;
    if n_b == 0 || n_a == 0 {
        return Err(Error::domain("grid dimensions must be positive"));
    }
    if workers == 0 {
        return Err(Error::domain("workers must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))?;
    let rows: Vec<Vec<Option<(f64, f64, MapKind)>>> = pool.install(|| {
        (0..n_b)
            .into_par_iter()
            .map(|i| {
                let bias = grid_coord(rect.b_min, rect.b_max, n_b, i);
                (0..n_a)
                    .map(|j| {
                        let amp = grid_coord(rect.a_min, rect.a_max, n_a, j);
                        rotation_number_of(&base.with_bias_amp(bias, amp), cfg)
                            .ok()
                            .map(|r| (r.rho, r.lyapunov, r.class.kind))
                    })
                    .collect()
            })
            .collect()
    });

    let cells = n_b * n_a;
    let mut grid = PortraitGrid {
        rect,
        n_b,
        n_a,
        rho: Vec::with_capacity(cells),
        lyapunov: Vec::with_capacity(cells),
        class: Vec::with_capacity(cells),
        meta: PortraitMeta {
            omega: base.omega,
            delta: base.delta,
            drift: base.drift,
            config: *cfg,
            failures: 0,
            quantization_violations: 0,
        },
    };
    for cell in rows.into_iter().flatten() {
        match cell {
            Some((r, l, k)) => {
                grid.rho.push(r);
                grid.lyapunov.push(l);
                grid.class.push(Some(k));
            }
            None => {
                grid.rho.push(f64::NAN);
                grid.lyapunov.push(f64::NAN);
                grid.class.push(None);
                grid.meta.failures += 1;
            }
        }
    }
    grid.meta.quantization_violations = grid.quantization_violations().len();
    Ok(grid)
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// CSV text of the grid: header `B,A,rho,lyapunov,class`, `i` outer, `j` inner.
pub fn csv_string(g: &PortraitGrid) -> String {
    let mut s = String::from("B,A,rho,lyapunov,class\n");
    for i in 0..g.n_b {
        for j in 0..g.n_a {
            let k = g.index(i, j);
            let class = g.class[k].map(MapKind::as_str).unwrap_or("nan");
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_real(g.bias(i)),
                fmt_real(g.amp(j)),
                fmt_real(g.rho[k]),
                fmt_real(g.lyapunov[k]),
                class
            ));
        }
    }
    s
}

pub fn write_csv(g: &PortraitGrid, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(g)).map_err(io_err(path))
}

/// Binary greymap bytes; the top image row is `A_max`.
pub fn pgm_bytes(g: &PortraitGrid, channel: Channel, clip: (f64, f64)) -> Result<Vec<u8>> {
    let (lo, hi) = clip;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain("clip range must satisfy lo < hi"));
    }
    let data = match channel {
        Channel::Rho => &g.rho,
        Channel::Lyapunov => &g.lyapunov,
    };
    let mut out = format!("P5\n{} {}\n255\n", g.n_b, g.n_a).into_bytes();
    for row in 0..g.n_a {
        let j = g.n_a - 1 - row;
        for i in 0..g.n_b {
            let v = data[g.index(i, j)];
            let px = if v.is_nan() {
                0
            } else {
                ((v.clamp(lo, hi) - lo) / (hi - lo) * 255.0).round() as u8
            };
            out.push(px);
        }
    }
    Ok(out)
}

pub fn write_pgm(g: &PortraitGrid, channel: Channel, path: &Path, clip: (f64, f64)) -> Result<()> {
    let bytes = pgm_bytes(g, channel, clip)?;
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::closed_form_rho;
    use approx::assert_abs_diff_eq;

    fn base(delta: f64) -> TorusParams {
        TorusParams::new(1.0, delta, 0.0, 0.0, 0.0).unwrap()
    }

    #[test]
    fn bottom_row_matches_closed_form() {
        let g = sweep(&base(0.6), Rect::new(0.0, 2.0, 0.0, 0.0).unwrap(), 3, 3, 2, &FlowConfig::default()).unwrap();
        for i in 0..3 {
            let exact = closed_form_rho(1.0, 0.6, g.bias(i)).unwrap();
            assert_abs_diff_eq!(g.rho_at(i, 0), exact, epsilon = 1e-8);
        }
        assert_eq!(g.meta.failures, 0);
    }

    #[test]
    fn single_cell_is_locked() {
        let g = sweep(&base(0.6), Rect::new(0.5, 0.5, 0.0, 0.0).unwrap(), 1, 1, 1, &FlowConfig::default()).unwrap();
        assert_eq!(g.rho, vec![0.0]);
        assert!(g.lyapunov[0] > 0.0);
        assert_eq!(g.class[0], Some(MapKind::Hyperbolic));
    }

    #[test]
    fn workers_do_not_change_output() {
        let r = Rect::new(0.0, 3.0, 0.0, 3.0).unwrap();
        let cfg = FlowConfig::default();
        let one = sweep(&base(0.3), r, 16, 16, 1, &cfg).unwrap();
        let eight = sweep(&base(0.3), r, 16, 16, 8, &cfg).unwrap();
        assert_eq!(csv_string(&one), csv_string(&eight));
        assert_eq!(one.rho.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), eight.rho.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn csv_layout() {
        let mut g = sweep(&base(0.6), Rect::new(0.5, 0.5, 0.0, 1.0).unwrap(), 1, 2, 1, &FlowConfig::default()).unwrap();
        let s = csv_string(&g);
        assert_eq!(s.lines().count(), 3);
        assert!(s.ends_with('\n') && !s.contains('\r'));
        assert!(s.starts_with("B,A,rho,lyapunov,class\n0.5,0,0,"));
        for line in s.lines().skip(1) {
            let class = line.rsplit(',').next().unwrap();
            assert!(["elliptic", "parabolic", "hyperbolic", "identity"].contains(&class));
        }
        g.rho[1] = f64::NAN;
        g.lyapunov[1] = f64::NAN;
        g.class[1] = None;
        assert!(csv_string(&g).lines().nth(2).unwrap().ends_with(",nan,nan,nan"));
    }

    #[test]
    fn pgm_layout() {
        let mut g = sweep(&base(0.6), Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), 2, 2, 1, &FlowConfig::default()).unwrap();
        g.rho = vec![0.0, 1.0, 0.0, 1.0];
        let bytes = pgm_bytes(&g, Channel::Rho, (0.0, 1.0)).unwrap();
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(&bytes[header.len()..], &[255, 255, 0, 0]);
        g.rho = vec![0.4; 4];
        let bytes = pgm_bytes(&g, Channel::Rho, (0.0, 1.0)).unwrap();
        assert!(bytes[header.len()..].iter().all(|&b| b == 102));
        assert!(pgm_bytes(&g, Channel::Rho, (1.0, 1.0)).is_err());
    }

    #[test]
    fn lyapunov_channel_marks_the_tongue() {
        let g = sweep(&base(0.6), Rect::new(0.0, 2.0, 0.0, 0.0).unwrap(), 3, 1, 1, &FlowConfig::default()).unwrap();
        let bytes = pgm_bytes(&g, Channel::Lyapunov, (0.0, 0.1)).unwrap();
        let px = &bytes[bytes.len() - 3..];
        assert!(px[0] > 0);
        assert_eq!(px[2], 0);
    }

    #[test]
    fn files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let g = sweep(&base(0.6), Rect::new(0.0, 2.0, 0.0, 1.0).unwrap(), 2, 2, 1, &FlowConfig::default()).unwrap();
        let csv = dir.path().join("g.csv");
        write_csv(&g, &csv).unwrap();
        assert_eq!(std::fs::read_to_string(&csv).unwrap(), csv_string(&g));
        let pgm = dir.path().join("g.pgm");
        write_pgm(&g, Channel::Rho, &pgm, (0.0, 2.0)).unwrap();
        assert_eq!(std::fs::read(&pgm).unwrap().len(), b"P5\n2 2\n255\n".len() + 4);
        let missing = dir.path().join("no/such/dir.csv");
        assert!(matches!(write_csv(&g, &missing), Err(Error::Io { .. })));
    }
}
