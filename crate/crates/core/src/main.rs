use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hyqn::bench::{self, BenchConfig, DataSource, Sweep};
use hyqn::latency::BackendProfile;
use hyqn::{CircuitSpec, ExecMode, LrScaling, Result};

/// Parameter sweeps for the dressed quantum circuit classifier.
#[derive(Debug, Parser)]
#[command(name = "hyqn-bench", version)]
struct Args {
    /// Which axis to sweep: qubits, epochs, workers or latency.
    #[arg(long)]
    sweep: Sweep,

    /// Qubit counts, e.g. `3..10` or `3,4,6`. The first value is used when
    /// not sweeping qubits.
    #[arg(long, default_value = "4")]
    qubits: String,

    #[arg(long, default_value_t = 6)]
    depth: usize,

    /// Epoch count or list of epoch counts.
    #[arg(long, default_value = "30")]
    epochs: String,

    /// Worker count or list of worker counts.
    #[arg(long, default_value = "1")]
    workers: String,

    /// Per-worker batch size.
    #[arg(long, default_value_t = 4)]
    batch_size: usize,

    /// Base learning rate before worker scaling.
    #[arg(long, default_value_t = 0.0004)]
    lr: f64,

    #[arg(long, default_value_t = 0.9)]
    momentum: f64,

    /// linear or none.
    #[arg(long, default_value = "linear")]
    lr_scaling: LrScaling,

    /// Headerless CSV dataset: label first, then features.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,

    /// Synthetic dataset as n,D,C,margin.
    #[arg(long, default_value = "245,512,2,3")]
    synthetic: String,

    /// Fraction of samples held out for validation.
    #[arg(long, default_value_t = 0.2)]
    holdout: f64,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Run all workers on one thread instead of one thread per worker.
    #[arg(long)]
    serial: bool,

    /// Output CSV file, or a directory for `<sweep>_<timestamp>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Latency sweep: training set size used for the job count.
    #[arg(long, default_value_t = 244)]
    n_train: u64,

    /// Latency sweep: seconds per job for each remote profile.
    #[arg(long, default_value = "1.3")]
    latency: String,

    /// Latency sweep: queue seconds added to every job.
    #[arg(long, default_value_t = 0.0)]
    queue: f64,

    /// Latency sweep: jobs accepted before submissions fail.
    #[arg(long)]
    job_cap: Option<u64>,

    /// Latency sweep: wall-clock budget in hours.
    #[arg(long, default_value_t = 24.0)]
    budget_hours: f64,
}

fn first(list: &[usize]) -> usize {
    list[0]
}

fn run(args: Args) -> Result<()> {
    let qubits = bench::parse_list(&args.qubits)?;
    let epochs = bench::parse_list(&args.epochs)?;
    let workers = bench::parse_list(&args.workers)?;
    let out = bench::output_path(args.out.as_deref(), args.sweep);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }

    if args.sweep == Sweep::Latency {
        let mut profiles = Vec::new();
        for (i, lat) in args.latency.split(',').enumerate() {
            let lat: f64 = lat
                .trim()
                .parse()
                .map_err(|_| hyqn::Error::Config(format!("bad latency {lat:?}")))?;
            profiles.push(BackendProfile::new(
                format!("remote_{i}"),
                lat,
                args.queue,
                args.job_cap,
            )?);
        }
        profiles.push(BackendProfile::local_simulator());
        let spec = CircuitSpec::new(first(&qubits), args.depth)?;
        let reports = bench::bench_latency(
            args.n_train,
            spec,
            first(&epochs) as u64,
            &profiles,
            args.budget_hours * 3600.0,
        )?;
        for r in &reports {
            println!("{r}\n");
        }
        fs::write(&out, bench::latency_csv(&reports))?;
        eprintln!("wrote {}", out.display());
        return Ok(());
    }

    let data = match &args.dataset {
        Some(p) => DataSource::Csv(p.clone()),
        None => DataSource::parse_synthetic(&args.synthetic)?,
    };
    let cfg = BenchConfig {
        qubits: first(&qubits),
        depth: args.depth,
        epochs: first(&epochs),
        workers: first(&workers),
        batch_size: args.batch_size,
        lr: args.lr,
        momentum: args.momentum,
        lr_scaling: args.lr_scaling,
        seed: args.seed,
        data,
        holdout: args.holdout,
        exec: if args.serial {
            ExecMode::Serial
        } else {
            ExecMode::Threaded
        },
    };
    let split = bench::prepare_data(&cfg)?;
    let records = match args.sweep {
        Sweep::Qubits => bench::sweep_qubits(&qubits, &cfg, &split),
        Sweep::Epochs => bench::sweep_epochs(&epochs, &cfg, &split),
        Sweep::Workers => bench::sweep_workers(&workers, &cfg, &split),
        Sweep::Latency => unreachable!(),
    };
    let csv = bench::records_csv(&records);
    print!("{csv}");
    fs::write(&out, csv)?;
    let holdout = bench::write_holdout(&out, &split)?;
    eprintln!(
        "wrote {} (validation indices in {})",
        out.display(),
        holdout.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
