//! Zooms and pans by transforming coordinates instead of resampling pixels.
//!
//! The center crop of a 64x64 render is reproduced exactly by a 32x32 render
//! at scale 1/2, and a pan by a whole number of pixels shifts the content by
//! exactly that many pixels.

use creps::coords::Transform;
use creps::generator::{Generator, GeneratorConfig};
use creps::renderer::{render, write_image, Image8, Latent, RenderRequest};

fn crop(img: &Image8, i0: usize, j0: usize, h: usize, w: usize) -> Image8 {
    let mut out = Image8::blank(h, w);
    for i in 0..h {
        for j in 0..w {
            out.set_pixel(i, j, img.pixel(i0 + i, j0 + j));
        }
    }
    out
}

fn main() -> creps::Result<()> {
    let gen = Generator::init(GeneratorConfig::small(), 1)?;
    let latent = Latent::Seed(4);

    let wide = render(&gen, &RenderRequest::new(latent.clone(), 64, 64))?;
    let zoomed = render(
        &gen,
        &RenderRequest::new(latent.clone(), 32, 32).with_transform(Transform::new(0.0, 0.0, 0.5)?),
    )?;
    println!("zoomed 32x32 == center crop of 64x64: {}", zoomed == crop(&wide, 16, 16, 32, 32));

    // one pixel of a 64-wide grid is 2/64 in normalized units
    let pan = Transform::new(0.0, 8.0 * 2.0 / 64.0, 1.0)?;
    let panned = render(&gen, &RenderRequest::new(latent.clone(), 64, 64).with_transform(pan))?;
    println!(
        "pan by 8 columns matches shifted crop: {}",
        crop(&panned, 0, 0, 64, 56) == crop(&wide, 0, 8, 64, 56)
    );

    let out = Image8::new(64, 64, zoomed_up(&zoomed))?;
    write_image(&wide, "zoom_wide.ppm")?;
    write_image(&out, "zoom_center_x2.ppm")?;
    println!("wrote zoom_wide.ppm and zoom_center_x2.ppm");
    Ok(())
}

/// Nearest-neighbour upscale for side-by-side viewing.
fn zoomed_up(img: &Image8) -> Vec<u8> {
    let mut big = Image8::blank(img.height * 2, img.width * 2);
    for i in 0..big.height {
        for j in 0..big.width {
            big.set_pixel(i, j, img.pixel(i / 2, j / 2));
        }
    }
    big.pixels
}
