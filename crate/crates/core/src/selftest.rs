//! Quick oracle checks run by `creps selftest`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::biline::{compose, compose_subset, BilineFeature};
use crate::coords::{make_coord_field, smooth_displacement, CoordField, FieldKind, Transform};
use crate::error::Result;
use crate::fitter::{gradient_check, init_embeddings, FitConfig};
use crate::generator::{Generator, GeneratorConfig};
use crate::renderer::{render, render_pixelwise, render_tiled, render_warped, Latent, RenderRequest};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_biline(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize, d: usize) -> BilineFeature<f64> {
    let row = (0..c * h * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let col = (0..c * w * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    BilineFeature::new(c, h, w, d, row, col).expect("consistent shapes")
}

fn compose_brute_force() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let b = random_biline(&mut rng, 3, 9, 7, 4);
        let f = compose(&b);
        for c in 0..3 {
            for i in 0..9 {
                for j in 0..7 {
                    let mut s = 0.0;
                    for d in 0..4 {
                        s += b.row_half[(c * 9 + i) * 4 + d] * b.col_half[(c * 7 + j) * 4 + d];
                    }
                    worst = worst.max((s - f.get(c, i, j)).abs());
                }
            }
        }
    }
    Ok(Check {
        name: "compose brute force",
        passed: worst <= 1e-12,
        detail: format!("max |diff| = {worst:.3e}"),
    })
}

fn gradient() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let img: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..1.0)).collect();
    let cfg = FitConfig {
        thickness: 2,
        ..FitConfig::default()
    };
    let (r, c) = init_embeddings(8, 8, &cfg, &mut rng);
    let err = gradient_check(&img, 8, 8, 2, &r, &c);
    Ok(Check {
        name: "gradient check",
        passed: err <= 1e-4,
        detail: format!("max relative error = {err:.3e}"),
    })
}

fn subset_purity() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = random_biline(&mut rng, 2, 12, 10, 3);
    let full = compose(&b);
    let rows = [0, 3, 3, 11];
    let cols = [9, 1, 4];
    let sub = compose_subset(&b, &rows, &cols)?;
    let same = sub == full.select(&rows, &cols);
    Ok(Check {
        name: "subset purity",
        passed: same,
        detail: if same { "bit-identical".into() } else { "mismatch".into() },
    })
}

fn generator() -> Result<Generator<f32>> {
    Generator::init(GeneratorConfig::small(), 0)
}

fn tiling() -> Result<Check> {
    let g = generator()?;
    let req = RenderRequest::new(Latent::Seed(0), 24, 24);
    let mono = render(&g, &req)?;
    let tiled = render_tiled(&g, &req.with_tile(7))?;
    Ok(Check {
        name: "tiling equality",
        passed: mono == tiled,
        detail: "24x24, 7x7 tiles".into(),
    })
}

fn warp_vs_pixelwise() -> Result<Check> {
    let g = generator()?;
    let latent = Latent::Seed(1);
    let rot = make_coord_field(&FieldKind::Rotation(0.7), 12, 12)?;
    let (d_row, d_col) = smooth_displacement(12, 12, 0.2, 3);
    let elastic = make_coord_field(&FieldKind::Elastic { d_row, d_col }, 12, 12)?;
    let mut ok = true;
    for field in [rot, elastic] {
        ok &= render_warped(&g, &latent, &field)? == render_pixelwise(&g, &latent, &field)?;
    }
    let grid = CoordField::grid(12, 12, &Transform::IDENTITY)?;
    ok &= render_warped(&g, &latent, &grid)? == render(&g, &RenderRequest::new(latent, 12, 12))?;
    Ok(Check {
        name: "warp vs pixelwise",
        passed: ok,
        detail: "rotation, elastic and identity fields, 12x12".into(),
    })
}

type CheckFn = fn() -> Result<Check>;

/// Runs every check; errors inside a check count as failures.
pub fn run_selftest() -> Vec<Check> {
    let checks: [(&'static str, CheckFn); 5] = [
        ("compose brute force", compose_brute_force),
        ("gradient check", gradient),
        ("subset purity", subset_purity),
        ("tiling equality", tiling),
        ("warp vs pixelwise", warp_vs_pixelwise),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            })
        })
        .collect()
}
