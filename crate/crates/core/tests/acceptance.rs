//! Runs every numbered criterion at full size and prints one line each.

use eqldp::experiments::{run_criterion, Level, CRITERIA};
use eqldp::privacy_energy::EnergySettings;

#[test]
fn acceptance_criteria() {
    let settings = EnergySettings::default();
    let mut failed = Vec::new();
    println!();
    for &(id, _) in CRITERIA.iter() {
        let outcome = run_criterion(id, Level::Full, &settings);
        println!("{outcome}");
        if !outcome.pass {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
