use airy_layer::acceptance::{self, CriterionResult, Tolerances};
use std::collections::BTreeMap;
use std::io::Write;

fn tol() -> Tolerances {
    Tolerances::new(1.0, &BTreeMap::new())
}

fn jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn report(r: CriterionResult) {
    let _ = writeln!(std::io::stderr(), "{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn a01_halfline_ground_state() {
    report(acceptance::a1(&tol()));
}

#[test]
fn a02_linear_potential_eigenvalue() {
    report(acceptance::a2(&tol()));
}

#[test]
fn a03_two_term_expansion() {
    report(acceptance::a3(&tol()));
}

#[test]
fn a04_quasimode_residual_slopes() {
    report(acceptance::a4(&tol()));
}

#[test]
fn a05_disk_leading_real_part() {
    report(acceptance::a5(&tol()));
}

#[test]
fn a06_disk_subleading_coefficient() {
    report(acceptance::a6(&tol()));
}

#[test]
fn a07_tensor_lattice() {
    report(acceptance::a7(&tol()));
}

#[test]
fn a08_semigroup_laws() {
    report(acceptance::a8(&tol()));
}

#[test]
fn a09_tensor_resolvent_constants() {
    report(acceptance::a9(&tol(), jobs()));
}

#[test]
fn a10_spectral_margin() {
    report(acceptance::a10(&tol()));
}

#[test]
fn a11_property_suite() {
    report(acceptance::a11(&tol()));
}
