//! Regenerates the bundled 9 x 9 study fixture.
//!
//! ```text
//! cargo run -p lagscan-core --example write_study_fixture -- fixtures/study
//! cargo run -p lagscan-core --example write_study_fixture -- --search
//! ```

use std::path::PathBuf;

use lagscan_core::synth::{
    find_study_seeds, study_fixture, study_oracle_cells, study_planted_cells, write_study_fixture,
    STUDY_SEEDS,
};

fn main() {
    let arg = std::env::args().nth(1);
    if arg.as_deref() == Some("--search") {
        match find_study_seeds(0, 10_000, 10_000) {
            Some(seeds) => println!("{seeds:?}"),
            None => {
                eprintln!("no seeds found");
                std::process::exit(1);
            }
        }
        return;
    }
    let dir = PathBuf::from(arg.unwrap_or_else(|| "fixtures/study".to_string()));
    let fixture = study_fixture(&STUDY_SEEDS);
    assert_eq!(
        study_oracle_cells(&fixture),
        Some(study_planted_cells()),
        "frozen seeds no longer reproduce the planted cells"
    );
    let config = write_study_fixture(&fixture, &dir).expect("fixture written");
    println!("{}", config.display());
}
