use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include "weylscan.h"
#include <stdio.h>

int main(void) {
    WsComplex v;
    if (ws_kloosterman(1, 1, 7, &v) != WS_STATUS_OK) {
        fprintf(stderr, "%s\n", ws_last_error());
        return 1;
    }
    WsLFunction *f = NULL;
    WsScan *s = NULL;
    WsScanRecord r;
    if (ws_lfunction_delta(1000, &f) == WS_STATUS_OK &&
        ws_scan_run(f, 10.0, 11.0, 0.5, &s) == WS_STATUS_OK &&
        ws_scan_record(s, ws_scan_len(s) - 1, &r) == WS_STATUS_OK) {
        printf("%f %d\n", r.t, (int)r.accepted);
    }
    ws_scan_free(s);
    ws_lfunction_free(f);
    WsRun *run = NULL;
    if (ws_run("kloosterman", "c_max = 5", &run) == WS_STATUS_OK) {
        WsVerdictCounts c = ws_run_counts(run);
        printf("%zu %s\n", c.fail, ws_version());
    }
    ws_run_free(run);
    return 0;
}
"#;

fn compiler() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok())
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let Some(cc) = compiler() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("weylscan.h").exists());
    let dir = std::env::temp_dir().join(format!("weylscan-header-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("probe.c");
    std::fs::write(&src, PROGRAM).unwrap();
    for lang in ["c", "c++"] {
        let out = Command::new(cc)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang])
            .arg("-I")
            .arg(&include)
            .arg(&src)
            .output()
            .unwrap();
        assert!(out.status.success(), "{lang}: {}", String::from_utf8_lossy(&out.stderr));
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
