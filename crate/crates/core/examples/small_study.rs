//! Simulate a small unsupervised cohort and print the Q1-Q4 report.
//!
//! `cargo run --release --example small_study -- [seed]`

use space_core::studysim::{analyze_questions, report_text, simulate_cohort, CohortConfig, Question};

fn main() {
    let seed = std::env::args().nth(1).map_or(7, |s| s.parse().expect("seed must be an integer"));
    let mut config = CohortConfig::default();
    config.seed = seed;
    config.n_per_cell = 8;
    config.supervised = None;
    let dataset = simulate_cohort(&config).expect("simulation");
    let report = analyze_questions(&dataset, &Question::ALL[..4]).expect("analysis");
    print!("{}", report_text(&report));
}
