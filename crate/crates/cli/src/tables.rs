//! CSV layouts. Column names are frozen in `schema/columns.json`.

use effhorizon::bounds::{BoundReport, Count};
use effhorizon::learners::Empirical;

pub const RUN_COLUMNS: [&str; 4] = ["seed", "success", "timesteps", "return"];

pub const BOUND_COLUMNS: [&str; 7] = [
    "bound_worst_case",
    "bound_ucb",
    "bound_covering",
    "bound_epw",
    "bound_thm4",
    "bound_tight",
    "bound_goal",
];

pub const EMPIRICAL_COLUMNS: [&str; 3] = ["empirical_gorp", "empirical_window", "empirical_rmax"];

pub const META_COLUMNS: [&str; 9] = ["name", "S", "A", "T", "min_k", "w", "thm4_h", "tight_h", "goal_h"];

pub fn suite_header() -> Vec<&'static str> {
    META_COLUMNS.iter().chain(&BOUND_COLUMNS).chain(&EMPIRICAL_COLUMNS).copied().collect()
}

pub fn bounds_header() -> Vec<&'static str> {
    META_COLUMNS.iter().chain(&BOUND_COLUMNS).copied().collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn count(c: Option<Count>) -> String {
    opt(c.map(|c| c.log10))
}

/// Metadata and bound cells, in `bounds_header` order; log10 timesteps.
pub fn bound_cells(r: &BoundReport) -> Vec<String> {
    vec![
        r.name.clone(),
        r.num_states.to_string(),
        r.num_actions.to_string(),
        r.horizon.to_string(),
        opt(r.meta.min_k),
        r.meta.w.to_string(),
        opt(r.meta.thm4_h),
        opt(r.meta.tight_h),
        opt(r.meta.goal_h),
        count(Some(r.worst_case)),
        count(Some(r.ucb)),
        count(r.covering_length_tl),
        count(Some(r.epw_bound)),
        count(r.thm4_bound),
        count(r.tight_bound),
        count(r.goal_bound),
    ]
}

/// Empty cell for a learner that did not converge within budget.
pub fn empirical_cell(e: Option<Empirical>) -> String {
    opt(e.and_then(|e| e.log10()))
}
