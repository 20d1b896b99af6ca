use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::randsvd::PowerConfig;
use crate::sketch::{sketch_matrix, Algo, SketchConfig};
use crate::sparse::SparseBuffer;

use super::metrics::Evaluator;
use super::synthetic::SyntheticSpec;

/// One measured (algorithm, parameter cell) result. Undefined metrics are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub algo: Algo,
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub z: usize,
    pub k: usize,
    pub proj_err: Option<f64>,
    pub cov_err: Option<f64>,
    /// NaN when the time is unknown, written as NA.
    pub wall_seconds: f64,
    pub seed: u64,
}

/// Sketches `a` and returns the sketch with the wall time of that call alone.
pub fn timed_sketch(
    algo: Algo,
    a: &SparseBuffer,
    cfg: &SketchConfig,
) -> Result<(DenseMatrix, f64)> {
    let start = Instant::now();
    let b = sketch_matrix(algo, a, cfg)?;
    Ok((b, start.elapsed().as_secs_f64()))
}

/// Maps an undefined metric to `None` and keeps every other error.
pub fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Sketches the matrix held by `eval` and scores the result. `z` is
/// recorded as given; metrics are skipped when `with_metrics` is false.
pub fn timed_run(
    algo: Algo,
    eval: &mut Evaluator<'_>,
    z: usize,
    cfg: &SketchConfig,
    k: usize,
    with_metrics: bool,
) -> Result<MetricsRow> {
    let a = eval.matrix();
    let (b, wall_seconds) = timed_sketch(algo, a, cfg)?;
    let (proj_err, cov_err) = if with_metrics {
        (defined(eval.proj_err(&b, k))?, defined(eval.cov_err(&b))?)
    } else {
        (None, None)
    };
    let a = eval.matrix();
    Ok(MetricsRow {
        algo,
        n: a.rows(),
        d: a.cols(),
        ell: cfg.ell,
        z,
        k,
        proj_err,
        cov_err,
        wall_seconds,
        seed: cfg.seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sweep {
    N,
    D,
    Ell,
    Nnz,
}

impl Sweep {
    pub fn tag(self) -> &'static str {
        match self {
            Sweep::N => "n",
            Sweep::D => "d",
            Sweep::Ell => "ell",
            Sweep::Nnz => "nnz",
        }
    }

    /// Unscaled grid of the swept parameter.
    pub fn grid(self) -> &'static [usize] {
        match self {
            Sweep::N => &[10_000, 20_000, 30_000, 40_000, 50_000, 60_000],
            Sweep::D => &[1_000, 2_000, 3_000, 4_000, 5_000, 6_000],
            Sweep::Ell => &[5, 10, 20, 30, 50, 70, 100],
            Sweep::Nnz => &[5, 10, 20, 50, 100, 200, 300, 500],
        }
    }
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Sweep {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Sweep::N),
            "d" => Ok(Sweep::D),
            "ell" => Ok(Sweep::Ell),
            "nnz" | "z" => Ok(Sweep::Nnz),
            other => Err(Error::invalid(format!(
                "unknown sweep '{other}' (expected n, d, ell or nnz)"
            ))),
        }
    }
}

/// Problem size of one bench cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub d: usize,
    pub ell: usize,
    pub z: usize,
}

impl Cell {
    pub const DEFAULTS: Cell = Cell {
        n: 10_000,
        d: 1_000,
        ell: 50,
        z: 100,
    };

    /// Scales n, d and z by `scale` (rounded, at least 1). ℓ is kept but
    /// clamped to d, and z to d.
    pub fn scaled(self, scale: f64) -> Cell {
        let s = |v: usize| ((v as f64 * scale).round() as usize).max(1);
        let d = s(self.d);
        Cell {
            n: s(self.n),
            d,
            ell: self.ell.min(d),
            z: s(self.z).min(d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPlan {
    pub sweep: Sweep,
    pub scale: f64,
    pub k: usize,
    pub seed: u64,
    pub delta: f64,
    pub power: PowerConfig,
    /// Timed runs per cell; the fastest is reported.
    pub repeats: usize,
    pub with_metrics: bool,
}

impl BenchPlan {
    pub fn new(sweep: Sweep) -> Self {
        BenchPlan {
            sweep,
            scale: 1.0,
            k: 10,
            seed: 0,
            delta: 0.1,
            power: PowerConfig::default(),
            repeats: 1,
            with_metrics: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "scale must be positive, got {}",
                self.scale
            )));
        }
        if self.repeats == 0 {
            return Err(Error::invalid("repeats must be at least 1"));
        }
        self.power.validate()
    }

    /// Cells of the sweep, the other parameters at their defaults.
    pub fn cells(&self) -> Vec<Cell> {
        self.sweep
            .grid()
            .iter()
            .map(|&v| {
                let mut c = Cell::DEFAULTS;
                match self.sweep {
                    Sweep::N => c.n = v,
                    Sweep::D => c.d = v,
                    Sweep::Ell => c.ell = v,
                    Sweep::Nnz => c.z = v,
                }
                c.scaled(self.scale)
            })
            .collect()
    }
}

/// Runs FD and SFD on every cell of the plan, one cell at a time so the
/// timings do not compete for cores. Repeats are taken in round-robin passes
/// over the whole grid, so a burst of machine load cannot land on every run
/// of a single cell.
pub fn run_sweep(plan: &BenchPlan) -> Result<Vec<MetricsRow>> {
    plan.validate()?;
    let cells = plan.cells();
    let config = |cell: &Cell| {
        SketchConfig::new(cell.ell, cell.d)
            .with_seed(plan.seed)
            .with_delta(plan.delta)
            .with_power(plan.power)
    };
    let matrix = |cell: &Cell| SyntheticSpec::new(cell.n, cell.d, cell.z, plan.seed).generate();
    let mut out = Vec::with_capacity(2 * cells.len());
    for cell in &cells {
        let a = matrix(cell)?;
        let mut eval = Evaluator::new(&a);
        for algo in [Algo::Fd, Algo::Sfd] {
            out.push(timed_run(
                algo,
                &mut eval,
                cell.z,
                &config(cell),
                plan.k,
                plan.with_metrics,
            )?);
        }
    }
    for _ in 1..plan.repeats {
        for (i, cell) in cells.iter().enumerate() {
            let a = matrix(cell)?;
            for (j, algo) in [Algo::Fd, Algo::Sfd].into_iter().enumerate() {
                let (_, t) = timed_sketch(algo, &a, &config(cell))?;
                let best = &mut out[2 * i + j].wall_seconds;
                *best = best.min(t);
            }
        }
    }
    Ok(out)
}

/// Runtime shape of an nnz sweep: SFD should grow with z, FD stay flat.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendReport {
    /// Spearman rank correlation of SFD wall time against z.
    pub sfd_spearman: f64,
    /// SFD time at the largest z over the time at the smallest.
    pub sfd_growth: f64,
    /// Largest |t / median(t) − 1| over the FD cells.
    pub fd_max_deviation: f64,
}

impl TrendReport {
    pub const MIN_SPEARMAN: f64 = 0.8;
    pub const MAX_FD_DEVIATION: f64 = 0.2;

    pub fn passes(&self) -> bool {
        self.sfd_spearman >= Self::MIN_SPEARMAN
            && self.sfd_growth > 1.0
            && self.fd_max_deviation <= Self::MAX_FD_DEVIATION
    }
}

pub fn nnz_trend(rows: &[MetricsRow]) -> Result<TrendReport> {
    let series = |algo| {
        let mut v: Vec<(usize, f64)> = rows
            .iter()
            .filter(|r| r.algo == algo)
            .map(|r| (r.z, r.wall_seconds))
            .collect();
        v.sort_by_key(|p| p.0);
        v
    };
    let (sfd, fd) = (series(Algo::Sfd), series(Algo::Fd));
    if sfd.len() < 3 || fd.len() < 3 {
        return Err(Error::invalid(
            "trend check needs at least 3 cells per algorithm",
        ));
    }
    let zs: Vec<f64> = sfd.iter().map(|p| p.0 as f64).collect();
    let ts: Vec<f64> = sfd.iter().map(|p| p.1).collect();
    let fd_t: Vec<f64> = fd.iter().map(|p| p.1).collect();
    let med = median(&fd_t);
    Ok(TrendReport {
        sfd_spearman: spearman(&zs, &ts),
        sfd_growth: ts[ts.len() - 1] / ts[0],
        fd_max_deviation: fd_t
            .iter()
            .map(|t| (t / med - 1.0).abs())
            .fold(0.0, f64::max),
    })
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            r[o] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}
