//! Runs one grid model end to end through the library API on the synthetic
//! fixture: load config, train per seed, score the test split.
//!
//! cargo run --release --example experiment -- E1

use knowattn::eval::{run_experiment, ExperimentConfig, ModelId};
use knowattn::synthetic::{write_fixture, CONFIG_FILE};

fn main() -> knowattn::Result<()> {
    let model: ModelId = std::env::args().nth(1).as_deref().unwrap_or("L3").parse()?;
    let dir = std::env::temp_dir().join("knowattn-experiment");
    write_fixture(&dir)?;
    let mut cfg = ExperimentConfig::load(&dir.join(CONFIG_FILE))?;
    cfg.model = model;
    println!("{model}: {}", model.description());
    let report = run_experiment(cfg)?;
    for s in &report.seeds {
        println!("seed {}: cosine {:.4} components {:?}", s.seed, s.cosine, s.components);
    }
    println!("mean {:.4}", report.mean_cosine);
    Ok(())
}
