//! The generated header must be valid C and C++.

use std::process::Command;

const PROGRAM: &str = r#"
#include "polykt.h"
int main(void) {
    PktConfig cfg = pkt_config_default();
    PktConstraints *c = NULL;
    PktEstimator *e = NULL;
    double p[2];
    if (pkt_constraints_full(2, &c) != PKT_STATUS_OK) return 1;
    if (pkt_estimator_new(c, &cfg, 0, &e) != PKT_STATUS_OK) return 1;
    pkt_estimator_update(e, 1);
    pkt_estimator_predict(e, p, NULL, 2);
    pkt_estimator_free(e);
    pkt_constraints_free(c);
    return 0;
}
"#;

fn check(compiler: &str, lang: &str) {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    let status = Command::new(compiler)
        .args(["-x", lang, "-fsyntax-only", "-Wall", "-Werror", "-I", include])
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{compiler} rejected the header"),
        Err(e) => eprintln!("SKIP: {compiler} unavailable ({e})"),
    }
}

#[test]
fn header_is_valid_c() {
    check("cc", "c");
}

#[test]
fn header_is_valid_cpp() {
    check("c++", "c++");
}
