//! Scenario k-projection coverage of a labeled catalog, and the greedy
//! suggestion loop: repeatedly ask for the scenario whose labeling most
//! improves pairwise coverage until the catalog is fully covered.
//!
//! ```text
//! cargo run --example scenario_coverage
//! ```

use nndep::coverage::{
    scenario_kproj_coverage, suggest_scenario, Scenario, ScenarioCatalog, ScenarioDimension,
};

fn main() -> nndep::Result<()> {
    let catalog = ScenarioCatalog {
        dimensions: vec![
            ScenarioDimension {
                name: "weather".into(),
                values: vec!["clear".into(), "rain".into(), "snow".into()],
            },
            ScenarioDimension {
                name: "time".into(),
                values: vec!["day".into(), "night".into()],
            },
            ScenarioDimension {
                name: "traffic".into(),
                values: vec!["light".into(), "heavy".into()],
            },
        ],
    };

    // the scenarios a hypothetical dataset already labels
    let mut scenarios = vec![
        catalog.parse_scenario("clear,day,light")?,
        catalog.parse_scenario("clear,day,heavy")?,
        catalog.parse_scenario("rain,night,heavy")?,
    ];

    let k = 2;
    loop {
        let report = scenario_kproj_coverage(&catalog, &scenarios, k)?;
        println!(
            "{} scenarios -> pairwise coverage {} / {} = {}",
            scenarios.len(),
            report.covered,
            report.total,
            report.display_ratio()
        );
        if report.covered == report.total {
            break;
        }
        let (suggestion, gain) = suggest_scenario(&catalog, &scenarios, k)?;
        let named: Vec<String> = catalog
            .scenario_names(&suggestion)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        println!("  label next: {} (+{gain} pairs)", named.join(","));
        scenarios.push(Scenario {
            assignment: suggestion.assignment,
        });
    }
    println!("catalog fully covered at k={k}");
    Ok(())
}
