//! Saves generator weights and config, reloads them, and checks that the
//! reloaded generator renders the same bytes.

use creps::generator::{Generator, GeneratorConfig, GeneratorWeights};
use creps::persistence::{load_config, load_container, save_config, save_container};
use creps::renderer::{render, Latent, RenderRequest};

fn main() -> creps::Result<()> {
    let dir = std::env::temp_dir().join("creps_weights_roundtrip");
    std::fs::create_dir_all(&dir).map_err(|e| creps::Error::InvalidArgument(e.to_string()))?;
    let (cfg_path, w_path) = (dir.join("config.json"), dir.join("weights.crw"));

    let gen = Generator::init(GeneratorConfig::small(), 11)?;
    save_config(gen.config(), &cfg_path)?;
    save_container(&gen.weights().to_entries(), &w_path)?;

    let config = load_config(&cfg_path)?;
    let weights = GeneratorWeights::from_entries(&config, load_container(&w_path)?)?;
    let back = Generator::new(config, weights)?;

    let req = RenderRequest::new(Latent::Seed(0), 32, 32);
    println!("entries: {}", gen.weights().to_entries().len());
    println!("same render after reload: {}", render(&gen, &req)? == render(&back, &req)?);
    Ok(())
}
