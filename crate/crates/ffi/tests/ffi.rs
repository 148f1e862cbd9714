use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use stl_agim_ffi::*;

fn parse(text: &str) -> *mut StlFormula {
    let text = CString::new(text).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { stl_formula_parse(text.as_ptr(), &mut f) }, StlStatus::Ok);
    f
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(stl_last_error()) }.to_string_lossy().into_owned()
}

/// Ramp `x(t) = t - 0.5` on [0, 1] in 11 samples.
fn ramp() -> *mut StlTrace {
    let name = CString::new("x").unwrap();
    let names = [name.as_ptr()];
    let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let values: Vec<f64> = times.iter().map(|t| t - 0.5).collect();
    let mut tr = ptr::null_mut();
    let status = unsafe { stl_trace_new(names.as_ptr(), 1, times.as_ptr(), times.len(), values.as_ptr(), &mut tr) };
    assert_eq!(status, StlStatus::Ok);
    tr
}

fn normalized(tr: *const StlTrace) -> *mut StlTrace {
    let mut out = ptr::null_mut();
    let status = unsafe { stl_trace_normalize(tr, ptr::null(), ptr::null(), ptr::null(), 0, &mut out) };
    assert_eq!(status, StlStatus::Ok);
    out
}

#[test]
fn evaluates_ramp_with_both_semantics() {
    let g = parse("G[0,1] (x >= 0)");
    let f = parse("F[0,1] (x >= 0)");
    let raw = ramp();
    let tr = normalized(raw);
    let (mut rho_g, mut rho_f, mut eta_g, mut eta_f) = (0.0, 0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(stl_rho(g, tr, 0.0, &mut rho_g), StlStatus::Ok);
        assert_eq!(stl_rho(f, tr, 0.0, &mut rho_f), StlStatus::Ok);
        assert_eq!(stl_eta(g, tr, 0.0, 0.0, &mut eta_g), StlStatus::Ok);
        assert_eq!(stl_eta(f, tr, 0.0, 1e-3, &mut eta_f), StlStatus::Ok);
    }
    assert!((rho_g + 0.5).abs() < 1e-12);
    assert!((rho_f - 0.5).abs() < 1e-12);
    // Predicate scores are halved: clipped means of (t - 0.5)/2 over [0, 1].
    assert!((eta_g + 0.0625).abs() < 1e-12, "{eta_g}");
    assert!((eta_f - 0.0625).abs() < 1e-12, "{eta_f}");
    unsafe {
        stl_trace_free(tr);
        stl_trace_free(raw);
        stl_formula_free(g);
        stl_formula_free(f);
    }
}

#[test]
fn normalizes_formula_and_trace_together() {
    let f = parse("G[0,1] (x <= 0.25)");
    let raw = ramp();
    let name = CString::new("x").unwrap();
    let names = [name.as_ptr()];
    let (lo, hi) = ([-1.0], [1.0]);
    let (mut nf, mut nt) = (ptr::null_mut(), ptr::null_mut());
    let mut score = 0.0;
    unsafe {
        assert_eq!(stl_formula_normalize(f, names.as_ptr(), lo.as_ptr(), hi.as_ptr(), 1, &mut nf), StlStatus::Ok);
        assert_eq!(stl_trace_normalize(raw, names.as_ptr(), lo.as_ptr(), hi.as_ptr(), 1, &mut nt), StlStatus::Ok);
        assert_eq!(stl_rho(nf, nt, 0.0, &mut score), StlStatus::Ok);
        stl_formula_free(nf);
        stl_trace_free(nt);
        stl_trace_free(raw);
        stl_formula_free(f);
    }
    assert!((score + 0.25).abs() < 1e-12);
}

#[test]
fn reports_errors_with_codes_and_messages() {
    let text = CString::new("G[2,1] (x >= 0)").unwrap();
    let mut f = ptr::null_mut();
    let status = unsafe { stl_formula_parse(text.as_ptr(), &mut f) };
    assert!(matches!(status, StlStatus::Syntax | StlStatus::InvalidInterval), "{status:?}");
    assert!(f.is_null());
    assert!(!last_error().is_empty());

    let mut out = 0.0;
    assert_eq!(unsafe { stl_formula_horizon(ptr::null(), &mut out) }, StlStatus::NullPointer);
    assert!(last_error().contains("formula"));

    let long = parse("G[0,5] (x >= 0)");
    let raw = ramp();
    let tr = normalized(raw);
    assert_eq!(unsafe { stl_rho(long, tr, 0.0, &mut out) }, StlStatus::OutOfDomain);
    let until = parse("(x >= 0) U[0,1] (x <= 0)");
    assert_eq!(unsafe { stl_eta(until, tr, 0.0, 0.0, &mut out) }, StlStatus::Unsupported);
    let unknown = parse("y >= 0");
    assert_eq!(unsafe { stl_rho(unknown, tr, 0.0, &mut out) }, StlStatus::UnknownVariable);
    // AGIM needs a normalized trace.
    let ok = parse("x >= 0");
    assert_eq!(unsafe { stl_eta(ok, raw, 0.0, 0.0, &mut out) }, StlStatus::NotNormalized);
    unsafe {
        for f in [long, until, unknown, ok] {
            stl_formula_free(f);
        }
        stl_trace_free(tr);
        stl_trace_free(raw);
        stl_formula_free(ptr::null_mut());
        stl_trace_free(ptr::null_mut());
        stl_string_free(ptr::null_mut());
    }
}

#[test]
fn rejects_bad_traces_and_paths() {
    let name = CString::new("x").unwrap();
    let names = [name.as_ptr()];
    let times = [0.0, 0.0];
    let values = [1.0, 2.0];
    let mut tr = ptr::null_mut();
    let status = unsafe { stl_trace_new(names.as_ptr(), 1, times.as_ptr(), 2, values.as_ptr(), &mut tr) };
    assert_eq!(status, StlStatus::InvalidTrace);
    let status = unsafe { stl_trace_new(names.as_ptr(), 1, times.as_ptr(), 2, ptr::null(), &mut tr) };
    assert_eq!(status, StlStatus::NullPointer);
    let bad = [0xffu8, 0];
    let status = unsafe { stl_formula_parse(bad.as_ptr() as *const c_char, &mut ptr::null_mut()) };
    assert_eq!(status, StlStatus::InvalidUtf8);
    let path = CString::new("/nonexistent/trace.csv").unwrap();
    assert_eq!(unsafe { stl_trace_from_csv(path.as_ptr(), &mut tr) }, StlStatus::Io);
}

#[test]
fn round_trips_text_and_csv() {
    let f = parse("F[0,1]   ( x >= 0.5 ) & !(y <= 0)");
    let text = unsafe { stl_formula_to_string(f) };
    let printed = unsafe { CStr::from_ptr(text) }.to_str().unwrap().to_owned();
    let again = parse(&printed);
    let text2 = unsafe { stl_formula_to_string(again) };
    assert_eq!(printed, unsafe { CStr::from_ptr(text2) }.to_str().unwrap());
    let mut h = 0.0;
    assert_eq!(unsafe { stl_formula_horizon(f, &mut h) }, StlStatus::Ok);
    assert_eq!(h, 1.0);

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "time,x,y\n0,0.5,0.1\n1,0.75,-0.2\n").unwrap();
    let path = CString::new(csv.to_str().unwrap()).unwrap();
    let mut tr = ptr::null_mut();
    let mut len = 0;
    unsafe {
        assert_eq!(stl_trace_from_csv(path.as_ptr(), &mut tr), StlStatus::Ok);
        assert_eq!(stl_trace_len(tr, &mut len), StlStatus::Ok);
        stl_string_free(text);
        stl_string_free(text2);
        stl_formula_free(f);
        stl_formula_free(again);
        stl_trace_free(tr);
    }
    assert_eq!(len, 2);
}

#[test]
fn header_declares_the_api_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stl_agim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "stl_formula_parse",
        "stl_formula_free",
        "stl_formula_normalize",
        "stl_trace_new",
        "stl_trace_from_csv",
        "stl_trace_normalize",
        "stl_eta",
        "stl_rho",
        "stl_last_error",
        "STL_STATUS_OK = 0",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"stl_agim.h\"\n\
         int main(void) {\n\
           StlFormula *f = NULL; double h = 0;\n\
           if (stl_formula_parse(\"G[0,1] (x >= 0)\", &f) != STL_STATUS_OK) return 1;\n\
           stl_formula_horizon(f, &h); stl_formula_free(f); return h == 1.0 ? 0 : 2;\n\
         }\n",
    )
    .unwrap();
    let Ok(output) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .output()
    else {
        eprintln!("no C compiler available; skipped compile check");
        return;
    };
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
}
