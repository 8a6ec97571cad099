//! Renders a large image tile by tile and checks it against the monolithic
//! render. Peak memory depends on the tile, not on the image.

use creps::bench::count_activations;
use creps::generator::{Generator, GeneratorConfig};
use creps::renderer::{render, render_tiled, Latent, RenderRequest};

fn main() -> creps::Result<()> {
    let config = GeneratorConfig::default();
    let gen = Generator::init(config.clone(), 0)?;
    let req = RenderRequest::new(Latent::Seed(2), 192, 160);
    let tile = 64;

    let whole = count_activations(&config, config.mode, req.height, req.width).peak;
    let per_tile = count_activations(&config, config.mode, tile, tile).peak;
    println!("peak activations: monolithic {whole}, per {tile}x{tile} tile {per_tile}");

    let tiled = render_tiled(&gen, &req.clone().with_tile(tile))?;
    let mono = render(&gen, &req)?;
    println!("tiled == monolithic: {}", tiled == mono);

    let mut small_budget = req.clone();
    small_budget.memory_budget = per_tile * 4;
    match render(&gen, &small_budget) {
        Err(e) => println!("monolithic under a one-tile budget: {e}"),
        Ok(_) => println!("monolithic render unexpectedly fit the budget"),
    }
    println!("tiled under the same budget: {}", render_tiled(&gen, &small_budget.with_tile(tile)).is_ok());
    Ok(())
}
