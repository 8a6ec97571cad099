//! Analytic activation counts next to the measured allocation high-water
//! mark, then a short timing table.
//!
//! ```text
//! cargo run --release --example memory_bench
//! ```

use creps::bench::{alloc, count_activations, run_bench, BenchPlan, TrackingAllocator};
use creps::generator::{Generator, GeneratorConfig, Mode};
use creps::renderer::{stylize, synthesize_grid, Latent};
use creps::coords::Transform;

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

fn main() -> creps::Result<()> {
    let config = GeneratorConfig::default();
    let gen = Generator::init(config.clone(), 0)?;
    println!("{:<7} {:>5} {:>12} {:>14} {:>14} {:>8}", "mode", "H", "trunk", "peak (elems)", "measured", "ratio");
    for mode in [Mode::Biline, Mode::Dense] {
        let g = gen.with_mode(mode);
        let styled = stylize(&g, &Latent::Seed(0))?;
        // warm up the thread pool so its allocations are not attributed
        synthesize_grid(&styled, mode, 8, 8, &Transform::IDENTITY)?;
        for h in [64, 128, 256] {
            let count = count_activations(&config, mode, h, h);
            let (out, bytes) = alloc::measure_peak(|| synthesize_grid(&styled, mode, h, h, &Transform::IDENTITY));
            out?;
            let measured = bytes as f64 / 4.0;
            println!(
                "{:<7} {:>5} {:>12} {:>14} {:>14.0} {:>8.4}",
                format!("{mode:?}").to_lowercase(),
                h,
                count.trunk,
                count.peak,
                measured,
                measured / count.peak as f64
            );
        }
    }
    let plan = BenchPlan {
        resolutions: vec![(128, 128), (256, 256)],
        ..BenchPlan::default()
    };
    print!("\n{}", run_bench(&config, &plan)?.table());
    Ok(())
}
