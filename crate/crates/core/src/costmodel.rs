//! The family of linear cost functions defining per-link utilization cost,
//! and the total-network-cost objective shared by every solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::Network;

/// One linear piece: `value(u) = slope * u - intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearCostFunction {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearCostFunction {
    pub fn value(&self, utilization: f64) -> f64 {
        self.slope * utilization - self.intercept
    }
}

#[derive(Debug, Error)]
pub enum CostModelError {
    #[error("cost function set must be non-empty")]
    Empty,
    #[error("cost function set must contain the zero function")]
    MissingZeroFunction,
    #[error("cost function slopes must be non-negative")]
    NegativeSlope,
    #[error("invalid cost set JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// An ordered set of linear cost functions. The link cost of a utilization is
/// the maximum over all pieces; the set always contains the zero function, so
/// the cost is non-negative, non-decreasing, and convex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostFunctionSet {
    functions: Vec<LinearCostFunction>,
}

impl CostFunctionSet {
    pub fn new(functions: Vec<LinearCostFunction>) -> Result<Self, CostModelError> {
        if functions.is_empty() {
            return Err(CostModelError::Empty);
        }
        if functions.iter().any(|f| f.slope < 0.0) {
            return Err(CostModelError::NegativeSlope);
        }
        if !functions
            .iter()
            .any(|f| f.slope == 0.0 && f.intercept == 0.0)
        {
            return Err(CostModelError::MissingZeroFunction);
        }
        Ok(CostFunctionSet { functions })
    }

    /// The default piecewise curve: zero cost below 60% utilization, then four
    /// secant pieces of `f(u) = (e^{10(u-0.6)} - 1) / (e^4 - 1)` over the
    /// breakpoints 0.6, 0.7, 0.8, 0.9, 1.0. Each piece interpolates the curve
    /// exactly at its breakpoints, so the max-of-lines evaluation reproduces
    /// f at every breakpoint (1.0 at full utilization) and extrapolates the
    /// steepest piece beyond it.
    pub fn default_set() -> Self {
        let f = |u: f64| ((10.0 * (u - 0.6)).exp() - 1.0) / (4.0f64.exp() - 1.0);
        let mut functions = vec![LinearCostFunction {
            slope: 0.0,
            intercept: 0.0,
        }];
        let breakpoints = [0.6, 0.7, 0.8, 0.9, 1.0];
        for w in breakpoints.windows(2) {
            let (u0, u1) = (w[0], w[1]);
            let slope = (f(u1) - f(u0)) / (u1 - u0);
            let intercept = slope * u0 - f(u0);
            functions.push(LinearCostFunction { slope, intercept });
        }
        CostFunctionSet { functions }
    }

    pub fn functions(&self) -> &[LinearCostFunction] {
        &self.functions
    }

    /// Max over all pieces at the given utilization. Utilizations above 1.0
    /// are allowed and extrapolate along the steepest piece.
    pub fn link_cost(&self, utilization: f64) -> f64 {
        self.functions
            .iter()
            .map(|f| f.value(utilization))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&JsonCostSet::from(self)).expect("cost set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CostModelError> {
        let parsed: JsonCostSet = serde_json::from_str(text)?;
        CostFunctionSet::new(
            parsed
                .0
                .into_iter()
                .map(|r| LinearCostFunction {
                    slope: r.a,
                    intercept: r.b,
                })
                .collect(),
        )
    }
}

/// Wire form: a list of `{a, b}` records.
#[derive(Serialize, Deserialize)]
struct JsonCostSet(Vec<JsonPiece>);

#[derive(Serialize, Deserialize)]
struct JsonPiece {
    a: f64,
    b: f64,
}

impl From<&CostFunctionSet> for JsonCostSet {
    fn from(set: &CostFunctionSet) -> Self {
        JsonCostSet(
            set.functions
                .iter()
                .map(|f| JsonPiece {
                    a: f.slope,
                    b: f.intercept,
                })
                .collect(),
        )
    }
}

/// Sum of per-link costs for the given per-link loads (indexed by link, Mbps;
/// zero-load links contribute nothing by the zero-function invariant).
/// Summation happens in ascending value order so the result is independent of
/// link ordering.
pub fn total_network_cost(net: &Network, set: &CostFunctionSet, loads: &[f64]) -> f64 {
    debug_assert_eq!(loads.len(), net.link_count());
    let mut costs: Vec<f64> = Vec::new();
    for (idx, &load) in loads.iter().enumerate() {
        if load == 0.0 {
            continue;
        }
        let cost = set.link_cost(load / net.links()[idx].capacity);
        if cost != 0.0 {
            costs.push(cost);
        }
    }
    costs.sort_by(f64::total_cmp);
    costs.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Network;
    use approx::assert_relative_eq;

    fn curve(u: f64) -> f64 {
        ((10.0 * (u - 0.6)).exp() - 1.0) / (4.0f64.exp() - 1.0)
    }

    #[test]
    fn zero_below_sixty_percent() {
        let set = CostFunctionSet::default_set();
        assert_eq!(set.link_cost(0.0), 0.0);
        assert_eq!(set.link_cost(0.5), 0.0);
        assert_eq!(set.link_cost(0.59), 0.0);
        assert_eq!(set.link_cost(0.6), 0.0);
    }

    #[test]
    fn matches_curve_at_breakpoints() {
        let set = CostFunctionSet::default_set();
        // frozen from the secant construction: f(0.7) = (e - 1) / (e^4 - 1)
        assert_relative_eq!(set.link_cost(0.7), 0.03205860328008, max_relative = 1e-10);
        assert_relative_eq!(set.link_cost(0.7), curve(0.7), max_relative = 1e-12);
        assert_relative_eq!(set.link_cost(0.8), curve(0.8), max_relative = 1e-12);
        assert_relative_eq!(set.link_cost(0.9), curve(0.9), max_relative = 1e-12);
        assert_relative_eq!(set.link_cost(1.0), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn secants_dominate_curve_between_breakpoints() {
        let set = CostFunctionSet::default_set();
        for i in 0..=40 {
            let u = 0.6 + i as f64 * 0.01;
            assert!(set.link_cost(u) + 1e-12 >= curve(u), "u={u}");
        }
    }

    #[test]
    fn zero_only_set_is_zero_everywhere() {
        let set = CostFunctionSet::new(vec![LinearCostFunction {
            slope: 0.0,
            intercept: 0.0,
        }])
        .unwrap();
        for u in [0.0, 0.3, 1.0, 2.5] {
            assert_eq!(set.link_cost(u), 0.0);
        }
    }

    #[test]
    fn rejects_missing_zero_function() {
        let err = CostFunctionSet::new(vec![LinearCostFunction {
            slope: 1.0,
            intercept: 0.0,
        }]);
        assert!(matches!(err, Err(CostModelError::MissingZeroFunction)));
    }

    #[test]
    fn json_roundtrip() {
        let set = CostFunctionSet::default_set();
        let parsed = CostFunctionSet::from_json(&set.to_json()).unwrap();
        assert_eq!(set, parsed);
    }

    fn one_link_net() -> Network {
        Network::from_parts(
            vec!["A".into(), "B".into()],
            vec![("ab".into(), "A".into(), "B".into(), 100.0)],
        )
        .unwrap()
    }

    #[test]
    fn total_cost_examples() {
        let net = one_link_net();
        let set = CostFunctionSet::default_set();
        assert_eq!(total_network_cost(&net, &set, &[0.0]), 0.0);
        assert_eq!(total_network_cost(&net, &set, &[50.0]), 0.0);
        assert_relative_eq!(
            total_network_cost(&net, &set, &[100.0]),
            1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn monotone_and_convex() {
        let set = CostFunctionSet::default_set();
        let mut prev = 0.0;
        for i in 0..=130 {
            let u = i as f64 * 0.01;
            let c = set.link_cost(u);
            assert!(c + 1e-15 >= prev, "monotone at u={u}");
            prev = c;
        }
        // midpoint under chord
        for (a, b) in [(0.0, 1.0), (0.5, 0.9), (0.6, 1.2), (0.55, 0.75)] {
            let mid = set.link_cost((a + b) / 2.0);
            let chord = (set.link_cost(a) + set.link_cost(b)) / 2.0;
            assert!(mid <= chord + 1e-12, "convex on [{a},{b}]");
        }
    }

    #[test]
    fn max_of_lines_matches_smallest_feasible_bound() {
        // the max-of-pieces evaluation equals the least value dominating all pieces
        let set = CostFunctionSet::default_set();
        for u in [0.0, 0.3, 0.65, 0.82, 1.0, 1.1] {
            let k = set.link_cost(u);
            for f in set.functions() {
                assert!(k >= f.value(u) - 1e-15);
            }
            let max_piece = set
                .functions()
                .iter()
                .map(|f| f.value(u))
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(k, max_piece);
        }
    }
}
