use std::path::{Path, PathBuf};
use std::process::Command;

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/trizero.h")
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "trz_locus",
        "trz_params_get",
        "trz_params_free",
        "trz_normal_form_parse",
        "trz_normal_form_coefficient",
        "trz_normal_form_max_diff",
        "trz_normal_form_to_string",
        "trz_normal_form_free",
        "trz_series_parse",
        "trz_series_to_string",
        "trz_series_free",
        "trz_realize",
        "trz_reduce",
        "trz_string_free",
        "trz_last_error",
    ] {
        assert!(h.contains(&format!("{name}(")), "{name} missing");
    }
    assert!(h.contains("typedef struct TrzParams TrzParams;"));
    assert!(h.contains("TRZ_STATUS_OK = 0"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipped");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"trizero.h\"\nint main(void) { TrzParams *p = 0; TrzStatus s = trz_locus(1.0, 0.0, &p); trz_params_free(p); return s; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-c", "-o"])
        .arg(dir.path().join("use.o"))
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
