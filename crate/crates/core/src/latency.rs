//! Wall-time projection for running the training loop against a remote
//! quantum backend, one job per circuit evaluation.

use std::fmt;

use crate::error::{Error, Result};
use crate::varcircuit::{circuit_evals_per_sample, CircuitSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct BackendProfile {
    pub name: String,
    /// Mean execution plus round-trip time per job, seconds.
    pub mean_job_latency: f64,
    /// Queue wait per job, seconds.
    pub queue_overhead: f64,
    /// Jobs accepted before the backend starts failing submissions.
    pub job_cap: Option<u64>,
}

impl BackendProfile {
    pub fn new(
        name: impl Into<String>,
        mean_job_latency: f64,
        queue_overhead: f64,
        job_cap: Option<u64>,
    ) -> Result<Self> {
        for (what, v) in [
            ("job latency", mean_job_latency),
            ("queue overhead", queue_overhead),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{what} must be finite and >= 0, got {v}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            mean_job_latency,
            queue_overhead,
            job_cap,
        })
    }

    /// Remote queued simulator with an effective 1.3 s per job.
    pub fn remote_queued() -> Self {
        Self::new("remote_queued", 1.3, 0.0, None).expect("valid constants")
    }

    /// In-process simulator at 1 ms per evaluation.
    pub fn local_simulator() -> Self {
        Self::new("local_simulator", 0.001, 0.0, None).expect("valid constants")
    }

    pub fn seconds_per_job(&self) -> f64 {
        self.mean_job_latency + self.queue_overhead
    }
}

/// Jobs submitted in one training epoch: every training sample costs one
/// forward plus the parameter-shift evaluations.
pub fn jobs_per_epoch(n_train: u64, spec: CircuitSpec) -> u64 {
    n_train * circuit_evals_per_sample(spec)
}

pub fn epoch_wall_seconds(jobs: u64, profile: &BackendProfile) -> f64 {
    jobs as f64 * profile.seconds_per_job()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub profile: BackendProfile,
    pub n_train: u64,
    pub spec: CircuitSpec,
    pub epochs: u64,
    pub jobs_per_epoch: u64,
    pub total_jobs: u64,
    pub epoch_seconds: f64,
    pub projected_seconds: f64,
    pub budget_seconds: f64,
    pub feasible: bool,
    /// 1-based epoch in which the job cap is exceeded.
    pub first_failure_epoch: Option<u64>,
}

pub fn feasibility_report(
    n_train: u64,
    spec: CircuitSpec,
    epochs: u64,
    profile: &BackendProfile,
    budget_seconds: f64,
) -> Result<FeasibilityReport> {
    if budget_seconds.is_nan() || budget_seconds <= 0.0 {
        return Err(Error::Config(format!(
            "budget must be positive, got {budget_seconds}"
        )));
    }
    if n_train == 0 {
        return Err(Error::Config("n_train must be at least 1".into()));
    }
    let per_epoch = jobs_per_epoch(n_train, spec);
    let total_jobs = per_epoch * epochs;
    let epoch_seconds = epoch_wall_seconds(per_epoch, profile);
    let projected_seconds = epochs as f64 * epoch_seconds;
    let first_failure_epoch = match profile.job_cap {
        Some(cap) if cap < total_jobs => Some(cap / per_epoch + 1),
        _ => None,
    };
    Ok(FeasibilityReport {
        profile: profile.clone(),
        n_train,
        spec,
        epochs,
        jobs_per_epoch: per_epoch,
        total_jobs,
        epoch_seconds,
        projected_seconds,
        budget_seconds,
        feasible: projected_seconds <= budget_seconds && first_failure_epoch.is_none(),
        first_failure_epoch,
    })
}

impl FeasibilityReport {
    pub const CSV_HEADER: &'static str = "profile,latency_s,queue_s,job_cap,n_train,qubits,depth,epochs,jobs_per_epoch,total_jobs,epoch_seconds,projected_seconds,budget_seconds,feasible,first_failure_epoch";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{:.3},{:.3},{},{},{}",
            self.profile.name,
            self.profile.mean_job_latency,
            self.profile.queue_overhead,
            opt(self.profile.job_cap),
            self.n_train,
            self.spec.qubits(),
            self.spec.depth(),
            self.epochs,
            self.jobs_per_epoch,
            self.total_jobs,
            self.epoch_seconds,
            self.projected_seconds,
            self.budget_seconds,
            self.feasible,
            opt(self.first_failure_epoch),
        )
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "backend        {}", self.profile.name)?;
        writeln!(
            f,
            "per-job        {:.4} s latency + {:.4} s queue",
            self.profile.mean_job_latency, self.profile.queue_overhead
        )?;
        writeln!(
            f,
            "workload       n_train={} q={} d={} epochs={}",
            self.n_train,
            self.spec.qubits(),
            self.spec.depth(),
            self.epochs
        )?;
        writeln!(f, "jobs/epoch     {}", self.jobs_per_epoch)?;
        writeln!(
            f,
            "epoch time     {:.1} s ({:.2} h)",
            self.epoch_seconds,
            self.epoch_seconds / 3600.0
        )?;
        writeln!(
            f,
            "projected      {:.1} s ({:.2} h) against budget {:.1} s",
            self.projected_seconds,
            self.projected_seconds / 3600.0,
            self.budget_seconds
        )?;
        if let Some(e) = self.first_failure_epoch {
            writeln!(f, "job cap        exceeded during epoch {e}")?;
        }
        write!(
            f,
            "feasible       {}",
            if self.feasible { "yes" } else { "no" }
        )
    }
}
