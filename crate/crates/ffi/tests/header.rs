use std::path::Path;
use std::process::Command;

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/gwb_roe.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["gwb_grid_new", "gwb_last_error_message", "GWB_STATUS_OK", "GwbIntertwiner", "GwbDecayFit"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("probe.c");
    std::fs::write(&src, "#include \"gwb_roe.h\"\nint main(void) { GwbGrid *g = 0; return (int)gwb_grid_len(g); }\n").unwrap();
    let Ok(status) = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
