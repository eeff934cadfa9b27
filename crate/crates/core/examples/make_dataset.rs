//! Writes a synthetic daily-count dataset drawn around the built-in study
//! configuration, for exercising the CLI end to end:
//!
//!     cargo run --release --example make_dataset -- data/synthetic.csv [seed]

use revax_core::io::{save_observations, StudyConfig};
use revax_core::model::ModelTag;
use revax_core::predictive::synthesize_observations;

/// Day from which the reinfection series are recorded.
const REINFECTION_RECORD_START: usize = 60;

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "data/synthetic.csv".into());
    let seed: u64 = args
        .next()
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(20_200_228);

    let config = StudyConfig::default_for(ModelTag::M1);
    let obs = synthesize_observations(
        &config.fit_context(),
        &config.params,
        seed,
        REINFECTION_RECORD_START,
    )
    .expect("default configuration integrates");
    save_observations(&obs, &path).expect("dataset written");
    println!("wrote {} days to {path}", obs.n_days());
}
