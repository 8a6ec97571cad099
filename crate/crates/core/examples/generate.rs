//! Renders one image from randomly initialized weights.
//!
//! ```text
//! cargo run --release --example generate -- out.ppm 256
//! ```

use std::time::Instant;

use creps::generator::{Generator, GeneratorConfig};
use creps::renderer::{render, write_image, Latent, RenderRequest};

fn main() -> creps::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "generate.ppm".into());
    let size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);

    let gen = Generator::init(GeneratorConfig::default(), 0)?;
    println!("parameters: {}", gen.weights().param_count());
    let start = Instant::now();
    let img = render(&gen, &RenderRequest::new(Latent::Seed(0), size, size))?;
    println!("{size}x{size} in {:.2} s", start.elapsed().as_secs_f64());
    write_image(&img, &out)?;
    println!("wrote {out}");
    Ok(())
}
