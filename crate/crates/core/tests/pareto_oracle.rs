// SPDX-License-Identifier: Apache-2.0

mod common;

use hlsbench::metrics::{pareto_frontier, ParetoPoint};
use proptest::prelude::*;

use common::brute_force_frontier;

fn point(i: usize, (latency_ns, area, power_mw): (u8, u8, u8)) -> ParetoPoint {
    ParetoPoint {
        point_id: format!("p{i:03}"),
        latency_ns: f64::from(latency_ns),
        area: f64::from(area),
        power_mw: f64::from(power_mw),
    }
}

#[test]
fn hand_checked_example() {
    let pts = vec![
        ParetoPoint { point_id: "a".into(), latency_ns: 10.0, area: 100.0, power_mw: 1.0 },
        ParetoPoint { point_id: "b".into(), latency_ns: 20.0, area: 50.0, power_mw: 1.0 },
        ParetoPoint { point_id: "c".into(), latency_ns: 30.0, area: 200.0, power_mw: 2.0 },
    ];
    assert_eq!(pareto_frontier(&pts), vec!["a", "b"]);
    assert_eq!(brute_force_frontier(&pts), vec!["a", "b"]);
}

proptest! {
    #[test]
    fn matches_brute_force(objs in prop::collection::vec((0u8..12, 0u8..12, 0u8..12), 1..200)) {
        let pts: Vec<ParetoPoint> = objs.into_iter().enumerate().map(|(i, o)| point(i, o)).collect();
        prop_assert_eq!(pareto_frontier(&pts), brute_force_frontier(&pts));
    }
}
