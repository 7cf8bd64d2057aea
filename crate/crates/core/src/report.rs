//! Search results shared by the evolutionary search and the tree-search baseline.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::encoding::{route_record, FitnessRecord, Route};

#[derive(Clone, Debug, PartialEq)]
pub struct ArchivedRoute {
    pub route: Route,
    pub fit: FitnessRecord,
}

/// Feasible routes in discovery order, deduplicated by the ranks they use.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Archive {
    seen: HashSet<Vec<usize>>,
    routes: Vec<ArchivedRoute>,
}

impl Archive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores the route if it is feasible and new. Returns whether it was stored.
    pub fn offer(&mut self, route: &Route, fit: &FitnessRecord) -> bool {
        if !route.is_feasible() || !self.seen.insert(route.ranks_used()) {
            return false;
        }
        self.routes.push(ArchivedRoute {
            route: route.clone(),
            fit: *fit,
        });
        true
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn routes(&self) -> &[ArchivedRoute] {
        &self.routes
    }

    pub fn into_routes(self) -> Vec<ArchivedRoute> {
        self.routes
    }

    pub fn contains_ranks(&self, ranks: &[usize]) -> bool {
        self.seen.contains(ranks)
    }
}

/// Gene matrices of one logged iteration: the current population and the
/// offspring sampled from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub population: Vec<Vec<f64>>,
    pub offspring: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub algo: String,
    pub seed: u64,
    pub archive: Vec<ArchivedRoute>,
    pub expander_calls: u64,
    pub iterations_run: usize,
    pub best_f_series: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
}

impl SearchReport {
    pub fn best_archived_f(&self) -> Option<f64> {
        self.archive.iter().map(|r| r.fit.f).reduce(f64::max)
    }

    pub fn contains_ranks(&self, ranks: &[usize]) -> bool {
        self.archive.iter().any(|r| r.route.ranks_used() == ranks)
    }

    /// `algo<TAB>seed<TAB>expander_calls<TAB>iterations<TAB>archive_size<TAB>wall_ms`
    pub fn metrics_line(&self, wall_ms: u128) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.algo,
            self.seed,
            self.expander_calls,
            self.iterations_run,
            self.archive.len(),
            wall_ms
        )
    }

    pub fn best_f_csv(&self) -> String {
        let values: Vec<String> = self.best_f_series.iter().map(f64::to_string).collect();
        let mut out = values.join(",");
        out.push('\n');
        out
    }

    pub fn routes_text(&self) -> String {
        let mut out = String::new();
        for r in &self.archive {
            let _ = writeln!(out, "{}", route_record(&r.route, &r.fit));
        }
        out
    }
}

/// Rows are individuals, columns genes, tab-separated.
pub fn matrix_text(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", cells.join("\t"));
    }
    out
}
