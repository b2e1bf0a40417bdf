//! Stage boundary values checked against hand-derived closed forms of the
//! third-order scheme for the three model problems.

mod support;

use support::oracles::{burgers1d_deviation, heat1d_deviation, heat2d_deviation, stage_one_deviation, Deviation};

const TOL: f64 = 1e-12;
const STATES: usize = 128;

fn check(name: &str, d: Deviation) {
    assert!(d.compared > 0, "{name}: nothing compared");
    assert!(d.max <= TOL, "{name}: deviation {:e} over {} values", d.max, d.compared);
}

#[test]
fn heat1d_stages_match_closed_forms() {
    check("heat1d", heat1d_deviation(STATES, 11));
}

#[test]
fn burgers1d_stages_match_closed_forms() {
    check("burgers1d", burgers1d_deviation(STATES, 12));
}

#[test]
fn heat2d_stages_match_closed_forms() {
    check("heat2d", heat2d_deviation(STATES, 13));
}

#[test]
fn anchored_and_staged_agree_at_stage_one() {
    check("stage one", stage_one_deviation(STATES, 14));
}
