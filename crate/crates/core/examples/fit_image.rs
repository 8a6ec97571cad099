//! Fits the bundled 128x128 photo with thick bi-lines of several
//! thicknesses and compares each fit with the rank-D optimum.
//!
//! ```text
//! cargo run --release --example fit_image -- [image.ppm|png]
//! ```

use creps::fitter::{fit_biline, image_oracle_mse, FitConfig};
use creps::renderer::read_image;

fn main() -> creps::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/assets/astronaut_128.ppm").into());
    let img = read_image(&path)?;
    println!("{path}: {}x{}", img.height, img.width);
    println!("{:>3} {:>12} {:>12} {:>9}", "D", "fit mse", "optimum", "storage");
    let mut first = None;
    for d in [1, 2, 4, 8, 16, 32] {
        let cfg = FitConfig {
            thickness: d,
            ..FitConfig::default()
        };
        let fit = fit_biline(&img, &cfg)?;
        let oracle = image_oracle_mse(&img, d)?;
        println!(
            "{d:>3} {:>12.4e} {oracle:>12.4e} {:>8.1}%",
            fit.final_mse,
            100.0 * fit.compression_ratio
        );
        first.get_or_insert(fit.final_mse);
        if d == 8 {
            println!("    mse(D=1) / mse(D=8) = {:.2}", first.unwrap() / fit.final_mse);
        }
    }
    Ok(())
}
