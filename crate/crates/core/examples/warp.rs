//! Rotation and elastic warps by diagonal sampling, checked against the
//! per-pixel reference.

use creps::coords::{make_coord_field, smooth_displacement, FieldKind};
use creps::generator::{Generator, GeneratorConfig};
use creps::renderer::{render_pixelwise, render_warped, write_image, Latent};

fn main() -> creps::Result<()> {
    let gen = Generator::init(GeneratorConfig::small(), 0)?;
    let latent = Latent::Seed(7);
    let size = 48;

    for angle in [0.0f64, 15.0, 45.0] {
        let field = make_coord_field(&FieldKind::Rotation(angle.to_radians()), size, size)?;
        let img = render_warped(&gen, &latent, &field)?;
        let name = format!("warp_rot{angle:.0}.ppm");
        write_image(&img, &name)?;
        println!("wrote {name}");
    }

    let (d_row, d_col) = smooth_displacement(size, size, 0.15, 3);
    let field = make_coord_field(&FieldKind::Elastic { d_row, d_col }, size, size)?;
    let img = render_warped(&gen, &latent, &field)?;
    write_image(&img, "warp_elastic.ppm")?;
    println!("wrote warp_elastic.ppm");

    let small = make_coord_field(&FieldKind::Rotation(0.4), 16, 16)?;
    let same = render_warped(&gen, &latent, &small)? == render_pixelwise(&gen, &latent, &small)?;
    println!("16x16 rotation: diagonal sampling == per-pixel reference: {same}");
    Ok(())
}
