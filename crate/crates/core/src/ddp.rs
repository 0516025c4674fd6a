//! Synchronous data-parallel training.
//!
//! Every worker owns a replica of the model and a shard of each epoch. Per
//! step, workers compute the mean gradient of their local batch, the
//! gradients are averaged by a pairwise tree over ascending worker ids, and
//! every replica applies the same SGD update. Workers run either as scoped
//! threads synchronised by two barriers per step, or as logical workers on
//! the calling thread; both produce identical numbers.

use std::fmt;
use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use crate::dataplane::{self, Dataset};
use crate::error::{Error, Result};
use crate::hybridnet::{self, HybridModel, Sgd};
use crate::varcircuit::{circuit_eval_count, Circuit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrScaling {
    /// `lr = base_lr · N`
    Linear,
    /// `lr = base_lr`
    Unscaled,
}

impl FromStr for LrScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(LrScaling::Linear),
            "none" => Ok(LrScaling::Unscaled),
            other => Err(Error::Config(format!(
                "unknown lr scaling {other:?} (expected linear or none)"
            ))),
        }
    }
}

impl fmt::Display for LrScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrScaling::Linear => "linear",
            LrScaling::Unscaled => "none",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    /// One OS thread per worker.
    Threaded,
    /// All logical workers on the calling thread.
    Serial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Per-worker batch size.
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub workers: usize,
    pub seed: u64,
    pub lr_scaling: LrScaling,
    /// Multiply the learning rate by 0.1 every 10 epochs.
    pub step_decay: bool,
    pub exec: ExecMode,
    /// Compare every replica against worker 0 after each optimizer step.
    pub verify_replicas: bool,
    pub barrier_timeout: Duration,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 4,
            base_lr: 0.0004,
            momentum: 0.9,
            workers: 1,
            seed: 0,
            lr_scaling: LrScaling::Linear,
            step_decay: false,
            exec: ExecMode::Threaded,
            verify_replicas: false,
            barrier_timeout: Duration::from_secs(600),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return Err(Error::Config(format!(
                "base learning rate must be positive, got {}",
                self.base_lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum {} not in [0, 1)",
                self.momentum
            )));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let lr = scale_lr(self.base_lr, self.workers, self.lr_scaling);
        if self.step_decay {
            lr * 0.1f64.powi((epoch / 10) as i32)
        } else {
            lr
        }
    }
}

pub fn effective_batch_size(per_worker_batch: usize, workers: usize) -> usize {
    per_worker_batch * workers
}

pub fn scale_lr(base_lr: f64, workers: usize, mode: LrScaling) -> f64 {
    match mode {
        LrScaling::Linear => base_lr * workers as f64,
        LrScaling::Unscaled => base_lr,
    }
}

/// Elementwise mean across workers, summed by a pairwise tree over ascending
/// worker ids: (0+1), (2+3), ... then pairs of those, an odd tail carried up
/// unchanged. The sum is divided by N once at the end.
pub fn allreduce_mean<V: AsRef<[f64]>>(per_worker: &[V]) -> Result<Vec<f64>> {
    let Some(first) = per_worker.first() else {
        return Err(Error::Sync("allreduce over zero workers".into()));
    };
    let len = first.as_ref().len();
    if let Some(w) = per_worker.iter().position(|g| g.as_ref().len() != len) {
        return Err(Error::Sync(format!(
            "worker {w} contributed {} values, worker 0 contributed {len}",
            per_worker[w].as_ref().len()
        )));
    }
    let mut level: Vec<Vec<f64>> = per_worker
        .chunks(2)
        .map(|pair| match pair {
            [a, b] => a
                .as_ref()
                .iter()
                .zip(b.as_ref())
                .map(|(x, y)| x + y)
                .collect(),
            [a] => a.as_ref().to_vec(),
            _ => unreachable!(),
        })
        .collect();
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    *x += y;
                }
            }
            next.push(a);
        }
        level = next;
    }
    let mut out = level.pop().expect("at least one worker");
    let n = per_worker.len() as f64;
    for v in &mut out {
        *v /= n;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Running accuracy over the epoch's training batches.
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: HybridModel,
    pub metrics: Vec<EpochMetrics>,
    /// Circuit evaluations spent on training gradients (validation excluded).
    pub circuit_evals: u64,
    pub steps: usize,
    /// Largest |replica_w − replica_0| seen; 0 when replicas stayed identical.
    pub max_replica_divergence: f64,
    pub wall_seconds: f64,
}

impl TrainReport {
    pub fn final_metrics(&self) -> &EpochMetrics {
        self.metrics.last().expect("at least one epoch")
    }
}

#[derive(Debug, Clone)]
struct Contribution {
    grads: Vec<f64>,
    loss_sum: f64,
    correct: usize,
    samples: usize,
    evals: u64,
}

#[derive(Debug, Clone)]
struct Reduced {
    grads: Vec<f64>,
    loss_sum: f64,
    correct: usize,
    samples: usize,
    evals: u64,
}

fn contribute(
    model: &HybridModel,
    circuit: &mut Circuit,
    data: &Dataset,
    batch: &[usize],
) -> Result<Contribution> {
    let before = circuit_eval_count();
    let b = model.batch_gradient(circuit, data, batch)?;
    Ok(Contribution {
        grads: b.grads.into_vec(),
        loss_sum: b.loss_sum,
        correct: b.correct,
        samples: b.samples,
        evals: circuit_eval_count() - before,
    })
}

fn reduce(contribs: &[Contribution]) -> Result<Reduced> {
    let grads = allreduce_mean(
        &contribs
            .iter()
            .map(|c| c.grads.as_slice())
            .collect::<Vec<_>>(),
    )?;
    Ok(Reduced {
        grads,
        loss_sum: contribs.iter().map(|c| c.loss_sum).sum(),
        correct: contribs.iter().map(|c| c.correct).sum(),
        samples: contribs.iter().map(|c| c.samples).sum(),
        evals: contribs.iter().map(|c| c.evals).sum(),
    })
}

fn worker_batches(n: usize, config: &TrainConfig, epoch: usize) -> Result<Vec<Vec<Vec<usize>>>> {
    (0..config.workers)
        .map(|w| {
            let s = dataplane::shard(n, config.workers, w, epoch as u64, config.seed)?;
            Ok(dataplane::batches(&s, config.batch_size)
                .map(<[usize]>::to_vec)
                .collect())
        })
        .collect()
}

#[derive(Default)]
struct EpochTally {
    loss_sum: f64,
    correct: usize,
    samples: usize,
}

impl EpochTally {
    fn add(&mut self, r: &Reduced) {
        self.loss_sum += r.loss_sum;
        self.correct += r.correct;
        self.samples += r.samples;
    }

    fn finish(
        self,
        model: &HybridModel,
        epoch: usize,
        validation: Option<&Dataset>,
        started: Instant,
    ) -> Result<EpochMetrics> {
        let val_accuracy = validation
            .map(|v| hybridnet::evaluate(model, v))
            .transpose()?;
        Ok(EpochMetrics {
            epoch,
            mean_loss: self.loss_sum / self.samples as f64,
            train_accuracy: self.correct as f64 / self.samples as f64,
            val_accuracy,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Trains `model` on `train` with `config.workers` data-parallel workers.
///
/// Validation accuracy, when a validation set is given, is measured on
/// worker 0's replica over the whole set after every epoch.
pub fn train_distributed(
    model: &HybridModel,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    model.check_dataset(train)?;
    if let Some(v) = validation {
        model.check_dataset(v)?;
    }
    if config.workers > train.len() {
        return Err(Error::Config(format!(
            "{} workers exceed the {} training samples",
            config.workers,
            train.len()
        )));
    }
    match config.exec {
        ExecMode::Serial => train_serial(model, train, validation, config),
        ExecMode::Threaded => train_threaded(model, train, validation, config),
    }
}

fn train_serial(
    model: &HybridModel,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let started = Instant::now();
    let mut model = model.clone();
    let mut circuit = Circuit::new(model.spec())?;
    let mut opt = Sgd::new(model.num_params(), config.momentum);
    let mut metrics = Vec::with_capacity(config.epochs);
    let (mut evals, mut steps) = (0, 0);

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        let lr = config.lr_at(epoch);
        let plan = worker_batches(train.len(), config, epoch)?;
        let mut tally = EpochTally::default();
        for step in 0..plan[0].len() {
            let contribs = plan
                .iter()
                .map(|b| contribute(&model, &mut circuit, train, &b[step]))
                .collect::<Result<Vec<_>>>()?;
            let reduced = reduce(&contribs)?;
            opt.step(model.params_mut(), &reduced.grads, lr)?;
            tally.add(&reduced);
            evals += reduced.evals;
            steps += 1;
        }
        metrics.push(tally.finish(&model, epoch, validation, epoch_start)?);
    }

    Ok(TrainReport {
        model,
        metrics,
        circuit_evals: evals,
        steps,
        max_replica_divergence: 0.0,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Reusable barrier with a timeout and an abort path, so one failed worker
/// releases the others instead of leaving them blocked.
struct TimedBarrier {
    workers: usize,
    timeout: Duration,
    state: Mutex<BarrierState>,
    cv: Condvar,
}

struct BarrierState {
    arrived: Vec<bool>,
    count: usize,
    generation: u64,
    failure: Option<(usize, String)>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|p| p.into_inner())
}

impl TimedBarrier {
    fn new(workers: usize, timeout: Duration) -> Self {
        Self {
            workers,
            timeout,
            state: Mutex::new(BarrierState {
                arrived: vec![false; workers],
                count: 0,
                generation: 0,
                failure: None,
            }),
            cv: Condvar::new(),
        }
    }

    fn failed(state: &BarrierState) -> Option<Error> {
        state
            .failure
            .as_ref()
            .map(|(worker, reason)| Error::Worker {
                worker: *worker,
                reason: reason.clone(),
            })
    }

    fn abort(&self, worker: usize, reason: String) {
        let mut s = lock(&self.state);
        s.failure.get_or_insert((worker, reason));
        self.cv.notify_all();
    }

    fn wait(&self, worker: usize) -> Result<()> {
        let mut s = lock(&self.state);
        if let Some(e) = Self::failed(&s) {
            return Err(e);
        }
        s.arrived[worker] = true;
        s.count += 1;
        if s.count == self.workers {
            s.count = 0;
            s.arrived.fill(false);
            s.generation += 1;
            self.cv.notify_all();
            return Ok(());
        }
        let generation = s.generation;
        let deadline = Instant::now() + self.timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                let missing = s.arrived.iter().position(|a| !a).unwrap_or(worker);
                s.failure.get_or_insert((
                    missing,
                    format!("did not reach the barrier within {:?}", self.timeout),
                ));
                self.cv.notify_all();
                return Err(Self::failed(&s).expect("failure just recorded"));
            }
            s = self
                .cv
                .wait_timeout(s, deadline - now)
                .unwrap_or_else(|p| p.into_inner())
                .0;
            if let Some(e) = Self::failed(&s) {
                return Err(e);
            }
            if s.generation != generation {
                return Ok(());
            }
        }
    }
}

struct Shared {
    barrier: TimedBarrier,
    slots: Mutex<Vec<Option<std::result::Result<Contribution, String>>>>,
    reduced: Mutex<Option<Arc<Reduced>>>,
    replicas: Mutex<Vec<Vec<f64>>>,
    divergence: Mutex<f64>,
}

struct WorkerOutcome {
    model: HybridModel,
    metrics: Vec<EpochMetrics>,
    evals: u64,
    steps: usize,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "worker panicked".to_string()
    }
}

fn run_worker(
    id: usize,
    shared: &Shared,
    model: &HybridModel,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<WorkerOutcome> {
    let mut model = model.clone();
    let mut circuit = Circuit::new(model.spec())?;
    let mut opt = Sgd::new(model.num_params(), config.momentum);
    let mut metrics = Vec::new();
    let (mut evals, mut steps) = (0, 0);

    for epoch in 0..config.epochs {
        let epoch_start = Instant::now();
        let lr = config.lr_at(epoch);
        let shard = dataplane::shard(train.len(), config.workers, id, epoch as u64, config.seed)?;
        let mut tally = EpochTally::default();

        for batch in dataplane::batches(&shard, config.batch_size) {
            let local = panic::catch_unwind(AssertUnwindSafe(|| {
                contribute(&model, &mut circuit, train, batch)
            }))
            .map_err(panic_message)
            .and_then(|r| r.map_err(|e| e.to_string()));
            lock(&shared.slots)[id] = Some(local);
            shared.barrier.wait(id)?;

            if id == 0 {
                let mut slots = lock(&shared.slots);
                let mut contribs = Vec::with_capacity(config.workers);
                for (w, slot) in slots.iter_mut().enumerate() {
                    match slot.take() {
                        Some(Ok(c)) => contribs.push(c),
                        Some(Err(reason)) => {
                            shared.barrier.abort(w, reason);
                            break;
                        }
                        None => {
                            shared.barrier.abort(w, "no gradient contribution".into());
                            break;
                        }
                    }
                }
                if contribs.len() == config.workers {
                    match reduce(&contribs) {
                        Ok(r) => *lock(&shared.reduced) = Some(Arc::new(r)),
                        Err(e) => shared.barrier.abort(0, e.to_string()),
                    }
                }
            }
            shared.barrier.wait(id)?;

            let reduced = lock(&shared.reduced)
                .clone()
                .ok_or_else(|| Error::Sync("reduced gradient missing".into()))?;
            opt.step(model.params_mut(), &reduced.grads, lr)?;
            tally.add(&reduced);
            if id == 0 {
                evals += reduced.evals;
            }
            steps += 1;

            if config.verify_replicas {
                {
                    let mut replicas = lock(&shared.replicas);
                    replicas[id].clear();
                    replicas[id].extend_from_slice(model.params());
                }
                shared.barrier.wait(id)?;
                if id == 0 {
                    let replicas = lock(&shared.replicas);
                    let worst = replicas
                        .iter()
                        .map(|r| max_abs_diff(r, &replicas[0]))
                        .fold(0.0, f64::max);
                    let mut d = lock(&shared.divergence);
                    *d = d.max(worst);
                }
                shared.barrier.wait(id)?;
            }
        }

        if id == 0 {
            metrics.push(tally.finish(&model, epoch, validation, epoch_start)?);
        }
    }

    Ok(WorkerOutcome {
        model,
        metrics,
        evals,
        steps,
    })
}

fn train_threaded(
    model: &HybridModel,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<TrainReport> {
    let started = Instant::now();
    let n = config.workers;
    let shared = Shared {
        barrier: TimedBarrier::new(n, config.barrier_timeout),
        slots: Mutex::new(vec![None; n]),
        reduced: Mutex::new(None),
        replicas: Mutex::new(vec![Vec::new(); n]),
        divergence: Mutex::new(0.0),
    };

    let outcomes: Vec<Result<WorkerOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..n)
            .map(|id| {
                let shared = &shared;
                scope.spawn(move || {
                    let out = panic::catch_unwind(AssertUnwindSafe(|| {
                        run_worker(id, shared, model, train, validation, config)
                    }))
                    .unwrap_or_else(|p| {
                        Err(Error::Worker {
                            worker: id,
                            reason: panic_message(p),
                        })
                    });
                    if let Err(e) = &out {
                        shared.barrier.abort(id, e.to_string());
                    }
                    out
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(id, h)| {
                h.join().unwrap_or_else(|p| {
                    Err(Error::Worker {
                        worker: id,
                        reason: panic_message(p),
                    })
                })
            })
            .collect()
    });

    // Surface the originating error; the other workers only saw its echo.
    let failure = lock(&shared.barrier.state).failure.clone();
    if let Some((worker, reason)) = failure {
        let mut outcomes = outcomes;
        if let Err(e) = outcomes.swap_remove(worker) {
            if !matches!(e, Error::Worker { .. }) {
                return Err(e);
            }
        }
        return Err(Error::Worker { worker, reason });
    }
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut divergence = *lock(&shared.divergence);
    for o in &outcomes[1..] {
        divergence = divergence.max(max_abs_diff(o.model.params(), outcomes[0].model.params()));
    }
    let first = outcomes.into_iter().next().expect("at least one worker");
    Ok(TrainReport {
        model: first.model,
        metrics: first.metrics,
        circuit_evals: first.evals,
        steps: first.steps,
        max_replica_divergence: divergence,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}
