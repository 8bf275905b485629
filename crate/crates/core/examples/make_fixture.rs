//! Regenerates the bundled synthetic fixture.
//!
//! `cargo run -p dcpl-core --example make_fixture -- fixtures/synthetic20`

use std::path::PathBuf;

use dcpl_core::synthetic::{generate, SyntheticConfig};

fn main() -> dcpl_core::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/synthetic20".into()));
    std::fs::create_dir_all(&dir).map_err(|e| dcpl_core::DcplError::io(&dir, e))?;
    let d = generate(&SyntheticConfig::default())?;
    d.log.save(dir.join("events.jsonl"))?;
    d.net.save(dir.join("network.csv"))?;
    d.model.save(dir.join("truth.json"))?;
    println!("{} users, {} edges, {} events -> {}", d.net.n_users(), d.net.edges().count(), d.log.len(), dir.display());
    Ok(())
}
