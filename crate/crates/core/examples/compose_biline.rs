//! Builds a small thick bi-line feature, composes it, and shows the storage
//! saving and the rank limit of the composed map.

use creps::biline::{compose, compose_pixel, storage_ratio, BilineFeature};
use creps::fitter::singular_values;

fn main() -> creps::Result<()> {
    let (c, h, w, d) = (2, 12, 10, 3);
    let row: Vec<f64> = (0..c * h * d).map(|k| ((k * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let col: Vec<f64> = (0..c * w * d).map(|k| ((k * 5 % 13) as f64 - 6.0) / 6.0).collect();
    let b = BilineFeature::new(c, h, w, d, row, col)?;

    let f = compose(&b);
    println!("composed map: {}x{}x{}", f.channels, f.height, f.width);
    println!("pixel (3, 4): {:?}", compose_pixel(&b, 3, 4)?);
    println!(
        "stored elements: {} vs dense {} (ratio {:.3})",
        b.len(),
        c * h * w,
        storage_ratio(d, h, w)
    );

    let sv = singular_values(f.plane(0), h, w);
    println!("channel 0 singular values (rank <= {d}):");
    for (k, s) in sv.iter().enumerate() {
        println!("  sigma_{:<2} = {s:.3e}", k + 1);
    }
    Ok(())
}
