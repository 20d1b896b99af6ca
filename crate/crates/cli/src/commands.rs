use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sfd_core::bench::{
    defined, nnz_trend, run_sweep, BenchPlan, Evaluator, MetricsRow, Sweep, SyntheticSpec,
};
use sfd_core::io::{
    read_sketch, write_metrics, write_mtx, write_plain, write_sketch, Format, ForwardOnly,
    RowReader,
};
use sfd_core::{execution_mode, AnySketcher, Error, SketchConfig, Sketcher};

use crate::args::{BenchArgs, Command, EvalArgs, GenerateArgs, ReplayArgs, SketchArgs};

/// Failure of a command, carrying the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| io_err(path, e))
}

/// Everything needed to reproduce one run, written next to its output.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub execution_mode: String,
    #[serde(flatten)]
    pub command: Command,
    /// Measurements of this run; not inputs to a replay.
    pub report: Value,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest(output: &Path, command: &Command, report: Value) -> Result<(), Failure> {
    let m = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        execution_mode: execution_mode().to_string(),
        command: command.clone(),
        report,
    };
    let path = manifest_path(output);
    let w = create(&path)?;
    serde_json::to_writer_pretty(w, &m).map_err(|e| io_err(&path, e))
}

fn read_manifest(path: &Path) -> Result<RunManifest, Failure> {
    serde_json::from_reader(BufReader::new(open(path)?)).map_err(|e| io_err(path, e))
}

pub fn run(command: Command) -> Result<(), Failure> {
    match &command {
        Command::Sketch(a) => sketch(a, &command),
        Command::Generate(a) => generate(a, &command),
        Command::Eval(a) => eval(a, &command),
        Command::Bench(a) => bench(a, &command),
        Command::Replay(a) => replay(a),
    }
}

fn sketch(args: &SketchArgs, command: &Command) -> Result<(), Failure> {
    let start = Instant::now();
    let mut source = ForwardOnly::new(open(&args.input)?);
    let (b, rows, nnz, stats) = {
        let mut reader = RowReader::open(BufReader::new(&mut source), args.dim)?;
        let d = reader.cols();
        if args.ell > d {
            return Err(Failure::Usage(format!(
                "--ell {} exceeds the {d} input columns",
                args.ell
            )));
        }
        let cfg = SketchConfig::new(args.ell, d)
            .with_seed(args.seed)
            .with_delta(args.delta)
            .with_power(args.power.config());
        cfg.validate()?;
        let mut s = AnySketcher::new(args.algo, &cfg)?;
        let (mut rows, mut nnz) = (0usize, 0usize);
        while let Some(r) = reader.next_row()? {
            rows += 1;
            nnz += r.nnz();
            s.append(&r)?;
        }
        let stats = s.sfd_stats();
        (s.finalize()?, rows, nnz, stats)
    };
    let wall = start.elapsed().as_secs_f64();
    write_sketch(create(&args.output)?, &b)?;
    write_manifest(
        &args.output,
        command,
        json!({
            "rows": rows,
            "cols": b.cols(),
            "nnz": nnz,
            "input_bytes": source.bytes_read(),
            "wall_seconds": wall,
            "sfd": stats,
        }),
    )
}

fn generate(args: &GenerateArgs, command: &Command) -> Result<(), Failure> {
    let spec = SyntheticSpec::new(args.n, args.d, args.z, args.seed);
    let rows = spec.rows()?;
    let w = create(&args.output)?;
    match args.format {
        Format::Plain => write_plain(w, args.n, args.d, rows)?,
        Format::Mtx => write_mtx(w, args.n, args.d, args.n * args.z, rows)?,
    }
    write_manifest(
        &args.output,
        command,
        json!({ "nnz": args.n * args.z, "head_cols": spec.head_cols() }),
    )
}

fn eval(args: &EvalArgs, command: &Command) -> Result<(), Failure> {
    let recorded = manifest_path(&args.sketch);
    let recorded = if recorded.exists() {
        Some(read_manifest(&recorded)?)
    } else {
        None
    };
    let (algo, seed, wall) = match recorded.as_ref().map(|m| (&m.command, &m.report)) {
        Some((Command::Sketch(s), report)) => (
            args.algo.unwrap_or(s.algo),
            s.seed,
            report["wall_seconds"].as_f64().unwrap_or(f64::NAN),
        ),
        _ => {
            let algo = args.algo.ok_or_else(|| {
                Failure::Usage("the sketch has no manifest; pass --algo to label the result".into())
            })?;
            (algo, 0, f64::NAN)
        }
    };
    let a = RowReader::open(BufReader::new(open(&args.matrix)?), args.dim)?.read_all()?;
    let b = read_sketch(open(&args.sketch)?)?;
    if b.cols() != a.cols() {
        return Err(Failure::Usage(format!(
            "sketch has {} columns but the matrix has {}",
            b.cols(),
            a.cols()
        )));
    }
    let mut evaluator = Evaluator::new(&a);
    let row = MetricsRow {
        algo,
        n: a.rows(),
        d: a.cols(),
        ell: b.rows(),
        z: if a.rows() == 0 {
            0
        } else {
            (a.nnz() as f64 / a.rows() as f64).round() as usize
        },
        k: args.k,
        proj_err: defined(evaluator.proj_err(&b, args.k))?,
        cov_err: defined(evaluator.cov_err(&b))?,
        wall_seconds: wall,
        seed,
    };
    write_metrics(create(&args.output)?, std::slice::from_ref(&row))?;
    write_manifest(&args.output, command, json!({ "nnz": a.nnz() }))
}

fn bench(args: &BenchArgs, command: &Command) -> Result<(), Failure> {
    if args.check_trend && args.sweep != Sweep::Nnz {
        return Err(Failure::Usage(
            "--check-trend applies to --sweep nnz only".into(),
        ));
    }
    let plan = BenchPlan {
        sweep: args.sweep,
        scale: args.scale,
        k: args.k,
        seed: args.seed,
        delta: args.delta,
        power: args.power.config(),
        repeats: args.repeats,
        with_metrics: !args.no_metrics,
    };
    let rows = run_sweep(&plan)?;
    write_metrics(create(&args.out_csv)?, &rows)?;
    let trend = if args.sweep == Sweep::Nnz {
        Some(nnz_trend(&rows)?)
    } else {
        None
    };
    write_manifest(
        &args.out_csv,
        command,
        json!({ "cells": rows.len(), "trend": trend }),
    )?;
    if let Some(t) = trend {
        eprintln!(
            "sfd spearman {:.2}, growth {:.2}x; fd max deviation {:.1}%",
            t.sfd_spearman,
            t.sfd_growth,
            100.0 * t.fd_max_deviation
        );
        if args.check_trend && !t.passes() {
            return Err(Failure::Numerical("runtime trend check failed".into()));
        }
    }
    Ok(())
}

fn replay(args: &ReplayArgs) -> Result<(), Failure> {
    let mut command = read_manifest(&args.manifest)?.command;
    if let Some(out) = &args.output {
        match &mut command {
            Command::Sketch(a) => a.output = out.clone(),
            Command::Generate(a) => a.output = out.clone(),
            Command::Eval(a) => a.output = out.clone(),
            Command::Bench(a) => a.out_csv = out.clone(),
            Command::Replay(_) => unreachable!("replays are never recorded"),
        }
    }
    run(command)
}
