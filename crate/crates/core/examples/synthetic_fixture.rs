//! Writes the synthetic corpus, its resources and an experiment config to a
//! directory, ready for `knowattn reproduce <MODEL> --config <dir>/config.toml`.
//!
//! cargo run --example synthetic_fixture -- /tmp/knowattn-fixture

use std::path::PathBuf;

fn main() -> knowattn::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("knowattn-fixture"));
    knowattn::synthetic::write_fixture(&dir)?;
    println!("wrote fixture to {}", dir.display());
    Ok(())
}
