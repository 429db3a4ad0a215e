mod common;

use mhd_hdg::verification::{run_level, ErrorReport};
use mhd_hdg::OseenOptions;

fn check(k: usize) {
    let case = common::patch_case(k);
    let lv = run_level(&case, k, 2, OseenOptions { tol: 1e-13, max_iter: 60, ..Default::default() }, &mut |_| {}).unwrap();
    eprintln!("k={k} iterations {}", lv.iterations());
    let v = lv.report.values();
    for (i, name) in ErrorReport::COLUMNS.iter().enumerate() {
        eprintln!("k={k} {name} = {:.3e}", v[i]);
    }
    for (i, name) in ErrorReport::COLUMNS[..ErrorReport::ERROR_COLUMNS].iter().enumerate() {
        assert!(v[i] <= 1e-9, "k={k}: {name} = {:.3e}", v[i]);
    }
}

#[test]
fn patch_k1() {
    check(1);
}

#[test]
fn patch_k2() {
    check(2);
}
