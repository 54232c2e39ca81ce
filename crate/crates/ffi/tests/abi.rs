use std::ffi::{CStr, CString};
use std::ptr;

use roughloop_ffi::*;

#[test]
fn path_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(rl_path_brownian(3, 6, 42, 0, &mut p), RlStatus::Ok);
        let n = rl_path_len(p);
        assert_eq!(n, 3 * 65);
        let mut buf = vec![0.0; n];
        assert_eq!(rl_path_values(p, buf.as_mut_ptr(), n), RlStatus::Ok);
        assert_eq!(&buf[..3], &[0.0; 3]);

        let mut q = ptr::null_mut();
        assert_eq!(rl_path_from_values(3, 6, buf.as_ptr(), n, &mut q), RlStatus::Ok);
        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(rl_besov_norm(p, 18, 0.35, &mut a), RlStatus::Ok);
        assert_eq!(rl_besov_norm(q, 18, 0.35, &mut b), RlStatus::Ok);
        assert_eq!(a, b);

        let mut d = 1.0;
        assert_eq!(rl_lift_ibp_defect(p, &mut d), RlStatus::Ok);
        assert!(d < 1e-12);
        assert_eq!(rl_so3_endpoint_distance(p, &mut d), RlStatus::Ok);
        assert!((0.0..=std::f64::consts::PI).contains(&d));
        rl_path_free(p);
        rl_path_free(q);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        let v = [1.0, 2.0, 3.0];
        assert_eq!(rl_path_from_values(1, 1, v.as_ptr(), 3, &mut p), RlStatus::Shape);
        let msg = CStr::from_ptr(rl_last_error()).to_str().unwrap();
        assert!(msg.contains("origin"), "{msg}");
        assert_eq!(rl_path_from_values(1, 2, v.as_ptr(), 3, &mut p), RlStatus::Shape);
        assert_eq!(rl_path_brownian(0, 4, 1, 0, &mut p), RlStatus::InvalidParams);
        assert_eq!(rl_path_brownian(1, 4, 1, 0, ptr::null_mut()), RlStatus::NullPointer);
        assert_eq!(rl_path_len(ptr::null()), 0);
        rl_path_free(ptr::null_mut());

        let mut small = ptr::null_mut();
        assert_eq!(rl_path_brownian(1, 2, 1, 0, &mut small), RlStatus::Ok);
        let mut out = 0.0;
        assert_eq!(rl_besov_norm(small, 17, 0.3, &mut out), RlStatus::InvalidParams);
        let mut buf = [0.0; 2];
        assert_eq!(rl_path_values(small, buf.as_mut_ptr(), 2), RlStatus::InvalidParams);
        rl_path_free(small);
    }
}

#[test]
fn config_and_run() {
    unsafe {
        let mut c = ptr::null_mut();
        let bad = CString::new("experiment = nope\n").unwrap();
        assert_eq!(rl_config_parse(bad.as_ptr(), &mut c), RlStatus::UnknownExperiment);
        let bad = CString::new("experiment = small-ball\n[besov]\nm = 17\n").unwrap();
        assert_eq!(rl_config_parse(bad.as_ptr(), &mut c), RlStatus::Config);

        let text = CString::new(
            "experiment = stokes-audit\nseed = 5\nn_seeds = 2\n[params]\nn_surface = 1\n",
        )
        .unwrap();
        assert_eq!(rl_config_parse(text.as_ptr(), &mut c), RlStatus::Ok);
        let mut docs = Vec::new();
        for workers in [1, 4] {
            let (mut s, mut pass) = (ptr::null_mut(), 0);
            assert_eq!(rl_run_csv(c, workers, true, &mut s, &mut pass), RlStatus::Ok);
            assert_eq!(pass, 1);
            docs.push(CStr::from_ptr(s).to_str().unwrap().to_string());
            rl_string_free(s);
        }
        assert_eq!(docs[0], docs[1]);
        assert!(docs[0].starts_with("experiment,params,statistic"));
        rl_config_free(c);
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = std::env::temp_dir().join("roughloop_header_check.c");
    std::fs::write(&src, "#include \"roughloop.h\"\nint main(void) { return rl_last_error() != 0; }\n").unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "generated header failed to compile"),
        Err(e) => eprintln!("no C compiler available, skipping: {e}"),
    }
}
