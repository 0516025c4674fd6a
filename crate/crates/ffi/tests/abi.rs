use std::ffi::{CStr, CString};
use std::ptr;

use hyqn_ffi::*;

fn last_error() -> String {
    let p = hyqn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn statevector_bell_pair() {
    unsafe {
        let mut sv = ptr::null_mut();
        assert_eq!(hyqn_statevector_new(2, &mut sv), HyqnStatus::Ok);
        assert_eq!(hyqn_statevector_apply_h(sv, 0), HyqnStatus::Ok);
        assert_eq!(hyqn_statevector_apply_cnot(sv, 0, 1), HyqnStatus::Ok);
        let mut z = 1.0;
        assert_eq!(hyqn_statevector_expect_z(sv, 1, &mut z), HyqnStatus::Ok);
        assert!(z.abs() < 1e-15);
        assert_eq!(
            hyqn_statevector_apply_ry(sv, 0, f64::NAN),
            HyqnStatus::Numeric
        );
        assert_eq!(hyqn_statevector_apply_cnot(sv, 1, 1), HyqnStatus::Index);
        assert!(!last_error().is_empty());
        hyqn_statevector_free(sv);
        hyqn_statevector_free(ptr::null_mut());
    }
}

#[test]
fn too_many_qubits_is_a_config_error() {
    unsafe {
        let mut sv = ptr::null_mut();
        assert_eq!(hyqn_statevector_new(25, &mut sv), HyqnStatus::Config);
        assert!(sv.is_null());
    }
}

#[test]
fn null_handles_are_reported() {
    unsafe {
        assert_eq!(
            hyqn_statevector_apply_h(ptr::null_mut(), 0),
            HyqnStatus::NullPointer
        );
        assert!(last_error().contains("NULL"));
        assert_eq!(hyqn_model_num_params(ptr::null()), 0);
        assert_eq!(hyqn_dataset_len(ptr::null()), 0);
        assert_eq!(
            hyqn_model_new(2, 1, 3, 2, 0, ptr::null_mut()),
            HyqnStatus::NullPointer
        );
    }
}

#[test]
fn train_save_load_round_trip() {
    unsafe {
        let mut data = ptr::null_mut();
        assert_eq!(
            hyqn_dataset_synthetic(100, 8, 2, 3.0, 1, &mut data),
            HyqnStatus::Ok
        );
        let (mut train, mut val) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(
            hyqn_dataset_split(data, 0.2, 1, &mut train, &mut val),
            HyqnStatus::Ok
        );
        assert_eq!((hyqn_dataset_len(train), hyqn_dataset_len(val)), (80, 20));
        assert_eq!(hyqn_dataset_feature_dim(train), 8);
        assert_eq!(hyqn_dataset_num_classes(train), 2);

        let mut model = ptr::null_mut();
        assert_eq!(hyqn_model_new(3, 2, 8, 2, 1, &mut model), HyqnStatus::Ok);
        let mut cfg = hyqn_train_config_default();
        assert_eq!(cfg.epochs, 30);
        assert!(cfg.linear_lr_scaling);
        cfg.epochs = 3;
        cfg.workers = 2;
        cfg.base_lr = 0.01;
        let mut summary = HyqnTrainSummary::default();
        assert_eq!(
            hyqn_train(model, train, val, &cfg, &mut summary),
            HyqnStatus::Ok
        );
        assert_eq!(summary.circuit_evals, 3 * 80 * (1 + 2 * (6 + 3)));
        assert!(summary.val_accuracy >= 0.0 && summary.val_accuracy <= 1.0);

        let n = hyqn_model_num_params(model);
        let mut params = vec![0.0; n];
        assert_eq!(
            hyqn_model_params(model, params.as_mut_ptr(), n),
            HyqnStatus::Ok
        );
        assert_eq!(
            hyqn_model_params(model, params.as_mut_ptr(), n - 1),
            HyqnStatus::BufferTooSmall
        );

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().join("m.hyqn").to_str().unwrap()).unwrap();
        assert_eq!(hyqn_model_save(model, path.as_ptr()), HyqnStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(hyqn_model_load(path.as_ptr(), &mut loaded), HyqnStatus::Ok);
        let mut back = vec![0.0; n];
        assert_eq!(
            hyqn_model_params(loaded, back.as_mut_ptr(), n),
            HyqnStatus::Ok
        );
        assert_eq!(back, params);

        let x = [0.5; 8];
        let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
        assert_eq!(
            hyqn_model_forward(model, x.as_ptr(), 8, a.as_mut_ptr(), 2),
            HyqnStatus::Ok
        );
        assert_eq!(
            hyqn_model_forward(loaded, x.as_ptr(), 8, b.as_mut_ptr(), 2),
            HyqnStatus::Ok
        );
        assert_eq!(a, b);
        assert_eq!(
            hyqn_model_forward(model, x.as_ptr(), 7, a.as_mut_ptr(), 2),
            HyqnStatus::Config
        );
        let mut class = 9;
        assert_eq!(
            hyqn_model_predict(model, x.as_ptr(), 8, &mut class),
            HyqnStatus::Ok
        );
        assert!(class < 2);
        let mut acc = -1.0;
        assert_eq!(hyqn_model_evaluate(model, val, &mut acc), HyqnStatus::Ok);
        assert_eq!(acc, summary.val_accuracy);

        let missing = CString::new("/nonexistent/m.hyqn").unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(hyqn_model_load(missing.as_ptr(), &mut none), HyqnStatus::Io);

        for m in [model, loaded] {
            hyqn_model_free(m);
        }
        for d in [data, train, val] {
            hyqn_dataset_free(d);
        }
    }
}

#[test]
fn csv_errors_map_to_status_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.csv");
    std::fs::write(&file, "0,1.0\n1,oops\n").unwrap();
    let path = CString::new(file.to_str().unwrap()).unwrap();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(
            hyqn_dataset_load_csv(path.as_ptr(), &mut d),
            HyqnStatus::Parse
        );
    }
    assert!(last_error().contains('2'));
}

#[test]
fn latency_projection() {
    unsafe {
        let mut jobs = 0;
        assert_eq!(hyqn_jobs_per_epoch(244, 4, 6, &mut jobs), HyqnStatus::Ok);
        assert_eq!(jobs, 13_908);
        let mut secs = 0.0;
        assert_eq!(
            hyqn_projected_seconds(244, 4, 6, 1, 1.3, 0.0, &mut secs),
            HyqnStatus::Ok
        );
        assert!((secs - 18_080.4).abs() < 1e-6);
        assert_eq!(
            hyqn_projected_seconds(244, 4, 6, 1, -1.0, 0.0, &mut secs),
            HyqnStatus::Config
        );
    }
}
