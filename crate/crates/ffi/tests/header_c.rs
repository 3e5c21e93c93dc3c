use std::process::Command;

const PROGRAM: &str = r#"
#include "snse.h"
#include <stdio.h>

int main(void) {
    SnseParams p = snse_params_default();
    p.lmax = 6;
    p.scheme = SNSE_SCHEME_PICARD;
    SnseSolver *s = NULL;
    SnseStatus st = snse_solver_new(&p, &s);
    if (st != SNSE_STATUS_OK) {
        char msg[256];
        snse_last_error_message(msg, sizeof msg);
        fprintf(stderr, "%s\n", msg);
        return 1;
    }
    SnseNorms n;
    st = snse_solver_step(s, 3);
    st = snse_solver_norms(s, &n);
    size_t k = snse_solver_coeff_count(s);
    snse_solver_free(s);
    return (int)st + (int)(k == 0) + (int)snse_run_config(NULL) - SNSE_STATUS_NULL_POINTER;
}
"#;

#[test]
fn header_compiles_as_c() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler found; skipping");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let out = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
