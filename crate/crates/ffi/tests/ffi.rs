use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use vertcartel_ffi::*;

fn last_error() -> String {
    let p = vc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct R1 {
    market: *mut VcMarket,
    eq: *mut VcEquilibrium,
}

impl R1 {
    fn new() -> Self {
        let (v, c) = ([1.0, 2.0], [0.5, 1.0]);
        let mut market = ptr::null_mut();
        let mut eq = ptr::null_mut();
        unsafe {
            assert_eq!(
                vc_market_new(v.as_ptr(), c.as_ptr(), 2, 1.0, 2.0, &mut market),
                VcStatus::Ok
            );
            assert_eq!(vc_solve(market, &mut eq), VcStatus::Ok);
        }
        R1 { market, eq }
    }
}

impl Drop for R1 {
    fn drop(&mut self) {
        unsafe {
            vc_equilibrium_free(self.eq);
            vc_market_free(self.market);
        }
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[test]
fn reference_market_through_handles() {
    let r = R1::new();
    let mut buf = [0.0; 4];
    let mut len = 0;
    unsafe {
        assert_eq!(
            vc_equilibrium_prices(r.eq, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[2.0 / 3.0, 11.0 / 6.0]));
        assert_eq!(
            vc_equilibrium_margins(r.eq, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[1.0 / 6.0, 5.0 / 6.0]));
        assert_eq!(
            vc_equilibrium_profits(r.eq, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[1.0 / 36.0, 25.0 / 36.0]));
        assert_eq!(
            vc_equilibrium_thresholds(r.eq, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[7.0 / 6.0]));
        assert_eq!(
            vc_equilibrium_shares(r.eq, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[1.0 / 6.0, 5.0 / 6.0]));

        let mut n = 0;
        assert_eq!(vc_market_n(r.market, &mut n), VcStatus::Ok);
        assert_eq!(n, 2);
        let mut cap = 0.0;
        assert_eq!(
            vc_max_collusive_bottom_price(r.market, &mut cap),
            VcStatus::Ok
        );
        assert_eq!(cap, 1.0);

        let mut coll = ptr::null_mut();
        assert_eq!(vc_collude(r.market, r.eq, 1.0, &mut coll), VcStatus::Ok);
        assert_eq!(
            vc_collusion_prices(coll, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[1.0, 13.0 / 6.0]));
        assert_eq!(
            vc_collusion_deviation_prices(coll, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[5.0 / 6.0, 2.0]));
        assert_eq!(
            vc_collusion_critical_deltas(coll, buf.as_mut_ptr(), 4, &mut len),
            VcStatus::Ok
        );
        assert!(close(&buf[..len], &[1.0 / 3.0, 1.0 / 11.0]));
        let mut binding = -1;
        assert_eq!(vc_collusion_binding_firm(coll, &mut binding), VcStatus::Ok);
        assert_eq!(binding, 0);
        let mut omega = 0.0;
        assert_eq!(vc_collusion_icc(coll, 0, 0.5, &mut omega), VcStatus::Ok);
        assert!((omega - 1.0 / 72.0).abs() < 1e-12);
        vc_collusion_free(coll);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let r = R1::new();
    unsafe {
        let (v, c) = ([2.0, 1.0], [0.5, 1.0]);
        let mut m = ptr::null_mut();
        assert_eq!(
            vc_market_new(v.as_ptr(), c.as_ptr(), 2, 1.0, 2.0, &mut m),
            VcStatus::Model
        );
        assert!(m.is_null());
        assert!(
            last_error().starts_with("QualityOrderViolation"),
            "{}",
            last_error()
        );

        assert_eq!(
            vc_market_new(ptr::null(), c.as_ptr(), 2, 1.0, 2.0, &mut m),
            VcStatus::NullPointer
        );
        assert!(last_error().contains("qualities"));

        let mut coll = ptr::null_mut();
        assert_eq!(vc_collude(r.market, r.eq, 1.5, &mut coll), VcStatus::Model);
        assert!(last_error().starts_with("P1cOutOfRange"));

        let mut one = [0.0; 1];
        let mut len = 0;
        assert_eq!(
            vc_equilibrium_prices(r.eq, one.as_mut_ptr(), 1, &mut len),
            VcStatus::BufferTooSmall
        );
        assert_eq!(len, 2);
        assert_eq!(
            vc_equilibrium_prices(r.eq, ptr::null_mut(), 0, &mut len),
            VcStatus::BufferTooSmall
        );
        assert_eq!(len, 2);

        assert_eq!(vc_collude(r.market, r.eq, 1.0, &mut coll), VcStatus::Ok);
        let mut omega = 0.0;
        assert_eq!(vc_collusion_icc(coll, 5, 0.5, &mut omega), VcStatus::Model);
        assert!(last_error().starts_with("IndexOutOfRange"));
        assert_eq!(vc_collusion_icc(coll, 0, 1.0, &mut omega), VcStatus::Model);
        assert!(last_error().starts_with("InvalidDiscountFactor"));
        vc_collusion_free(coll);

        vc_market_free(ptr::null_mut());
        vc_string_free(ptr::null_mut());
    }
}

fn scenario(name: &str) -> CString {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(name);
    CString::new(std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scenarios_run_with_cli_exit_codes() {
    for (name, code) in [
        ("r1_collude.json", 0),
        ("descending_quality.json", 2),
        ("verify_proposition1.json", 3),
    ] {
        let json = scenario(name);
        let mut out = ptr::null_mut();
        let mut exit = -1;
        unsafe {
            assert_eq!(
                vc_run_scenario(json.as_ptr(), VcFormat::Json, &mut out, &mut exit),
                VcStatus::Ok
            );
            let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
            vc_string_free(out);
            assert_eq!(exit, code, "{name}");
            let value: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(value["status"]["exit_code"], code);
        }
    }

    let json = scenario("r1_solve.json");
    let mut out = ptr::null_mut();
    let mut exit = -1;
    unsafe {
        assert_eq!(
            vc_run_scenario(json.as_ptr(), VcFormat::Csv, &mut out, &mut exit),
            VcStatus::Ok
        );
        assert!(CStr::from_ptr(out).to_str().unwrap().starts_with("firm,"));
        vc_string_free(out);

        let unknown = scenario("verify_unknown.json");
        assert_eq!(
            vc_run_scenario(unknown.as_ptr(), VcFormat::Json, &mut out, &mut exit),
            VcStatus::Schema
        );
        assert!(last_error().starts_with("UnknownVerifier"));
        let broken = CString::new("{\"model\": \"core\"").unwrap();
        assert_eq!(
            vc_run_scenario(broken.as_ptr(), VcFormat::Json, &mut out, &mut exit),
            VcStatus::Schema
        );
        let bytes = [0xffu8, 0xfe, 0];
        assert_eq!(
            vc_run_scenario(bytes.as_ptr().cast(), VcFormat::Json, &mut out, &mut exit),
            VcStatus::InvalidUtf8
        );
    }
}

#[test]
fn verifiers_by_name() {
    let name = CString::new("solver_crosscheck").unwrap();
    let mut out = ptr::null_mut();
    let mut passed = 0;
    unsafe {
        assert_eq!(
            vc_verify(name.as_ptr(), 20, 7, 0.0, &mut out, &mut passed),
            VcStatus::Ok
        );
        let summary: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        vc_string_free(out);
        assert_eq!(passed, 1);
        assert_eq!(summary["count"], 20);
        assert_eq!(summary["tolerance"], 1e-10);

        let bad = CString::new("nope").unwrap();
        assert_eq!(
            vc_verify(bad.as_ptr(), 1, 0, 0.0, &mut out, &mut passed),
            VcStatus::Schema
        );
        assert!(last_error().contains("solver_crosscheck"));
    }
}

/// `<target>/<profile>`, where cargo also places the static library.
fn target_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libvertcartel_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("vertcartel_r1_c");
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-I"])
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("examples/r1.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C example failed to build");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("nash 0.666667 1.833333"), "{text}");
    assert!(text.contains("critical 0.333333 0.090909"), "{text}");
    assert!(text.contains("binding 0"), "{text}");
    assert!(text.contains("rejected 4 QualityOrderViolation"), "{text}");
}

fn which_cc() -> Result<String, ()> {
    for cc in ["cc", "gcc", "clang"] {
        if Command::new(cc)
            .arg("--version")
            .output()
            .is_ok_and(|o| o.status.success())
        {
            return Ok(cc.to_string());
        }
    }
    Err(())
}
