use std::path::Path;
use std::process::Command;

fn bench(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hyqn-bench"))
        .args(args)
        .output()
        .unwrap()
}

fn csv_lines(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

const SMALL: &[&str] = &[
    "--synthetic",
    "60,8,2,3",
    "--epochs",
    "2",
    "--depth",
    "2",
    "--seed",
    "4",
];

#[test]
fn qubit_sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let mut args = vec![
        "--sweep",
        "qubits",
        "--qubits",
        "2..4",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    let o = bench(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = csv_lines(&out);
    assert_eq!(
        lines[0],
        "sweep,qubits,depth,epochs,workers,batch,eff_lr,n,seconds,train_acc,val_acc,seed,status"
    );
    assert_eq!(lines.len(), 4);
    for (line, q) in lines[1..].iter().zip(2..) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[0], "qubits");
        assert_eq!(f[1], q.to_string());
        assert_eq!(f[7], "60");
        assert_eq!(f[12], "ok");
    }
    assert!(dir.path().join("q.holdout.txt").exists());
}

#[test]
fn oversized_qubit_count_yields_a_failure_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.csv");
    let mut args = vec![
        "--sweep",
        "qubits",
        "--qubits",
        "25",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(SMALL);
    assert!(bench(&args).status.success());
    let lines = csv_lines(&out);
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with("failed:config"), "{}", lines[1]);
}

#[test]
fn worker_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cols = |name: &str| {
        let out = dir.path().join(name);
        let mut args = vec![
            "--sweep",
            "workers",
            "--workers",
            "1,2,4",
            "--out",
            out.to_str().unwrap(),
        ];
        args.extend_from_slice(SMALL);
        assert!(bench(&args).status.success());
        csv_lines(&out)
            .iter()
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                format!("{},{},{}", f[4], f[9], f[10])
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(cols("a.csv"), cols("b.csv"));
}

#[test]
fn directory_output_gets_a_timestamped_name() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "--sweep",
        "epochs",
        "--epochs",
        "1,2",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    args.extend_from_slice(&SMALL[..2]);
    assert!(bench(&args).status.success());
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert!(
        names
            .iter()
            .any(|n| n.starts_with("epochs_") && n.ends_with(".csv")),
        "{names:?}"
    );
}

#[test]
fn latency_sweep_reports_infeasible_remote_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("lat.csv");
    let o = bench(&[
        "--sweep",
        "latency",
        "--latency",
        "1.3,5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("13908"), "{text}");
    let lines = csv_lines(&out);
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("local_simulator"));
}

#[test]
fn bad_flags_fail_cleanly() {
    assert!(!bench(&["--sweep", "bogus"]).status.success());
    let o = bench(&["--sweep", "qubits", "--dataset", "/nonexistent.csv"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}
