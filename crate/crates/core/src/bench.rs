//! Sweep harness: one full training run per sweep point, one CSV row per run.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::dataplane::{self, Split};
use crate::ddp::{self, ExecMode, LrScaling, TrainConfig};
use crate::error::{Error, Result};
use crate::hybridnet::{self, HybridModel};
use crate::latency::{self, BackendProfile, FeasibilityReport};
use crate::varcircuit::CircuitSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Qubits,
    Epochs,
    Workers,
    Latency,
}

impl Sweep {
    pub fn name(&self) -> &'static str {
        match self {
            Sweep::Qubits => "qubits",
            Sweep::Epochs => "epochs",
            Sweep::Workers => "workers",
            Sweep::Latency => "latency",
        }
    }
}

impl FromStr for Sweep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qubits" => Ok(Sweep::Qubits),
            "epochs" => Ok(Sweep::Epochs),
            "workers" => Ok(Sweep::Workers),
            "latency" => Ok(Sweep::Latency),
            other => Err(Error::Config(format!("unknown sweep {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv(PathBuf),
    Synthetic {
        n: usize,
        dim: usize,
        classes: usize,
        margin: f64,
    },
}

impl DataSource {
    /// Parses the `n,D,C,margin` form.
    pub fn parse_synthetic(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || Error::Config(format!("synthetic spec {s:?} is not n,D,C,margin"));
        let [n, dim, classes, margin] = parts.as_slice() else {
            return Err(bad());
        };
        Ok(DataSource::Synthetic {
            n: n.parse().map_err(|_| bad())?,
            dim: dim.parse().map_err(|_| bad())?,
            classes: classes.parse().map_err(|_| bad())?,
            margin: margin.parse().map_err(|_| bad())?,
        })
    }
}

/// Parses `3,5,8` or inclusive ranges such as `3..10`, or a mix of both.
pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = |p: &str| Error::Config(format!("cannot parse {p:?} in list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad(part))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad(part))?;
            if b < a {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if out.is_empty() {
        return Err(Error::Config(format!("empty list {s:?}")));
    }
    Ok(out)
}

/// The fixed configuration around which a sweep varies one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub qubits: usize,
    pub depth: usize,
    pub epochs: usize,
    pub workers: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub lr_scaling: LrScaling,
    pub seed: u64,
    pub data: DataSource,
    pub holdout: f64,
    pub exec: ExecMode,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            qubits: 4,
            depth: 6,
            epochs: 30,
            workers: 1,
            batch_size: 4,
            lr: 0.0004,
            momentum: 0.9,
            lr_scaling: LrScaling::Linear,
            seed: 0,
            data: DataSource::Synthetic {
                n: 245,
                dim: 512,
                classes: 2,
                margin: 3.0,
            },
            holdout: 0.2,
            exec: ExecMode::Threaded,
        }
    }
}

impl BenchConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            base_lr: self.lr,
            momentum: self.momentum,
            workers: self.workers,
            seed: self.seed,
            lr_scaling: self.lr_scaling,
            exec: self.exec,
            ..TrainConfig::default()
        }
    }
}

/// Loads or generates the dataset and splits off the validation set.
pub fn prepare_data(cfg: &BenchConfig) -> Result<Split> {
    let data = match &cfg.data {
        DataSource::Csv(path) => dataplane::load_csv(path)?,
        DataSource::Synthetic {
            n,
            dim,
            classes,
            margin,
        } => dataplane::generate_synthetic(*n, *dim, *classes, *margin, cfg.seed)?,
    };
    data.split_holdout(cfg.holdout, cfg.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Ok,
    Failed(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sweep: String,
    pub qubits: usize,
    pub depth: usize,
    pub epochs: usize,
    pub workers: usize,
    pub batch: usize,
    pub eff_lr: f64,
    /// Total dataset size (train + validation).
    pub n: usize,
    pub seconds: f64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub seed: u64,
    pub status: RunStatus,
}

impl RunRecord {
    pub const CSV_HEADER: &'static str =
        "sweep,qubits,depth,epochs,workers,batch,eff_lr,n,seconds,train_acc,val_acc,seed,status";

    pub fn csv_row(&self) -> String {
        let status = match self.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed(class) => format!("failed:{class}"),
        };
        format!(
            "{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{},{}",
            self.sweep,
            self.qubits,
            self.depth,
            self.epochs,
            self.workers,
            self.batch,
            self.eff_lr,
            self.n,
            self.seconds,
            self.train_acc,
            self.val_acc,
            self.seed,
            status
        )
    }
}

fn train_point(cfg: &BenchConfig, split: &Split) -> Result<(f64, f64, f64)> {
    let spec = CircuitSpec::new(cfg.qubits, cfg.depth)?;
    let num_classes = split
        .train
        .num_classes()
        .max(split.validation.num_classes());
    let model = HybridModel::init(spec, split.train.feature_dim(), num_classes, cfg.seed)?;
    let report = ddp::train_distributed(
        &model,
        &split.train,
        Some(&split.validation),
        &cfg.train_config(),
    )?;
    let train_acc = hybridnet::evaluate(&report.model, &split.train)?;
    let val_acc = report.final_metrics().val_accuracy.unwrap_or(f64::NAN);
    Ok((report.wall_seconds, train_acc, val_acc))
}

/// One training run. Failures become a failure-marked record.
pub fn run_point(sweep: &str, cfg: &BenchConfig, split: &Split) -> RunRecord {
    let mut rec = RunRecord {
        sweep: sweep.to_string(),
        qubits: cfg.qubits,
        depth: cfg.depth,
        epochs: cfg.epochs,
        workers: cfg.workers,
        batch: cfg.batch_size,
        eff_lr: ddp::scale_lr(cfg.lr, cfg.workers, cfg.lr_scaling),
        n: split.train.len() + split.validation.len(),
        seconds: f64::NAN,
        train_acc: f64::NAN,
        val_acc: f64::NAN,
        seed: cfg.seed,
        status: RunStatus::Ok,
    };
    match train_point(cfg, split) {
        Ok((seconds, train_acc, val_acc)) => {
            rec.seconds = seconds;
            rec.train_acc = train_acc;
            rec.val_acc = val_acc;
        }
        Err(e) => rec.status = RunStatus::Failed(e.class()),
    }
    rec
}

pub fn sweep_qubits(qubits: &[usize], base: &BenchConfig, split: &Split) -> Vec<RunRecord> {
    qubits
        .iter()
        .map(|&q| {
            run_point(
                "qubits",
                &BenchConfig {
                    qubits: q,
                    ..base.clone()
                },
                split,
            )
        })
        .collect()
}

pub fn sweep_epochs(epochs: &[usize], base: &BenchConfig, split: &Split) -> Vec<RunRecord> {
    epochs
        .iter()
        .map(|&e| {
            run_point(
                "epochs",
                &BenchConfig {
                    epochs: e,
                    ..base.clone()
                },
                split,
            )
        })
        .collect()
}

pub fn sweep_workers(workers: &[usize], base: &BenchConfig, split: &Split) -> Vec<RunRecord> {
    let hw = std::thread::available_parallelism().map_or(1, |n| n.get());
    workers
        .iter()
        .map(|&w| {
            if w > hw {
                eprintln!("warning: {w} workers exceed the {hw} available hardware threads");
            }
            run_point(
                "workers",
                &BenchConfig {
                    workers: w,
                    ..base.clone()
                },
                split,
            )
        })
        .collect()
}

pub fn bench_latency(
    n_train: u64,
    spec: CircuitSpec,
    epochs: u64,
    profiles: &[BackendProfile],
    budget_seconds: f64,
) -> Result<Vec<FeasibilityReport>> {
    profiles
        .iter()
        .map(|p| latency::feasibility_report(n_train, spec, epochs, p, budget_seconds))
        .collect()
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RunRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

pub fn latency_csv(reports: &[FeasibilityReport]) -> String {
    let mut out = String::from(FeasibilityReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        writeln!(out, "{}", r.csv_row()).unwrap();
    }
    out
}

/// Output file for one invocation. A path ending in `.csv` is used as is;
/// anything else is a directory that receives `<sweep>_<unix millis>.csv`.
pub fn output_path(out: Option<&Path>, sweep: Sweep) -> PathBuf {
    if let Some(p) = out {
        if p.extension().is_some_and(|e| e == "csv") {
            return p.to_path_buf();
        }
    }
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis());
    out.unwrap_or(Path::new("."))
        .join(format!("{}_{stamp}.csv", sweep.name()))
}

/// Writes `<csv stem>.holdout.txt` next to the CSV listing validation indices.
pub fn write_holdout(csv_path: &Path, split: &Split) -> Result<PathBuf> {
    let path = csv_path.with_extension("holdout.txt");
    let list: Vec<String> = split
        .validation_indices
        .iter()
        .map(usize::to_string)
        .collect();
    fs::write(&path, list.join(",") + "\n")?;
    Ok(path)
}
