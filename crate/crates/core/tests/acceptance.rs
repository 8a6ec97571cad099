//! Acceptance suite: twelve criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the criteria execute serially and
//! the tracking allocator sees only one synthesis at a time.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use creps::bench::{alloc, count_activations, TrackingAllocator};
use creps::biline::{compose, BilineFeature, FeatureMap};
use creps::coords::{grid_coords, make_coord_field, Axis, CoordField, FieldKind, Transform};
use creps::error::ContainerError;
use creps::fitter::{fit_biline, fit_channel, loss_and_grad, FitConfig};
use creps::generator::{Generator, GeneratorConfig, Mode};
use creps::persistence::{
    decode_container, decode_coord_field, encode_container, encode_coord_field, load_config, save_container, Entry,
    CONTAINER_MAGIC,
};
use creps::renderer::{
    decode_ppm, encode_ppm, read_image, render, render_pixelwise, render_tiled, render_warped, stylize, Latent,
    RenderRequest,
};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn random_biline(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize, d: usize) -> BilineFeature<f64> {
    let row = (0..c * h * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let col = (0..c * w * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    BilineFeature::new(c, h, w, d, row, col).unwrap()
}

/// Singular values via nalgebra, descending.
fn nalgebra_singular_values(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(rows, cols, data);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn nalgebra_oracle_mse(data: &[f64], rows: usize, cols: usize, rank: usize) -> f64 {
    let sv = nalgebra_singular_values(data, rows, cols);
    sv[rank..].iter().map(|s| s * s).sum::<f64>() / (rows * cols) as f64
}

fn c1_composition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let c = rng.random_range(1..=4);
        let h = rng.random_range(1..=16);
        let d = rng.random_range(1..=8);
        let b = random_biline(&mut rng, c, h, h, d);
        let f = compose(&b);
        for ch in 0..c {
            for i in 0..h {
                for j in 0..h {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += b.row_half[(ch * h + i) * d + k] * b.col_half[(ch * h + j) * d + k];
                    }
                    worst = worst.max((s - f.data[(ch * h + i) * h + j]).abs());
                }
            }
        }
    }
    ensure(worst <= 1e-12, format!("max |diff| {worst:.3e} > 1e-12"))?;
    Ok(format!("50 instances, max |diff| = {worst:.2e}"))
}

fn c2_rank_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let h = rng.random_range(4..=16);
        let w = rng.random_range(4..=16);
        let d = rng.random_range(1..h.min(w));
        let f = compose(&random_biline(&mut rng, 1, h, w, d));
        let sv = nalgebra_singular_values(&f.data, h, w);
        worst = worst.max(sv[d] / sv[0]);
    }
    ensure(worst <= 1e-10, format!("sigma_(D+1)/sigma_1 = {worst:.3e} > 1e-10"))?;
    Ok(format!("30 instances, max sigma_(D+1)/sigma_1 = {worst:.2e}"))
}

fn c3_eckart_young() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let img: Vec<f64> = (0..256).map(|_| rng.random_range(0.0..1.0)).collect();
    let oracle = nalgebra_oracle_mse(&img, 16, 16, 4);
    let cfg = FitConfig {
        thickness: 4,
        iterations: 5000,
        ..FitConfig::default()
    };
    let fit = fit_channel(&img, 16, 16, &cfg, 0).map_err(err)?;
    ensure(
        fit.final_mse <= 1.05 * oracle,
        format!("fit {:.6e} > 1.05 x oracle {oracle:.6e}", fit.final_mse),
    )?;
    Ok(format!(
        "fit {:.6e} vs oracle {oracle:.6e} (x{:.4})",
        fit.final_mse,
        fit.final_mse / oracle
    ))
}

fn bundled_image() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/astronaut_128.ppm")
}

fn c4_thickness_trend() -> Outcome {
    let img = read_image(bundled_image()).map_err(err)?;
    ensure(img.height == 128 && img.width == 128, "bundled image is not 128x128")?;
    let mut mse = Vec::new();
    for d in [1, 8, 32] {
        let cfg = FitConfig {
            thickness: d,
            ..FitConfig::default()
        };
        mse.push(fit_biline(&img, &cfg).map_err(err)?.final_mse);
    }
    let ratio = mse[0] / mse[1];
    ensure(ratio >= 3.0, format!("mse(D=1)/mse(D=8) = {ratio:.3} < 3"))?;
    ensure(mse[1] > mse[2], format!("mse(D=8) {:.3e} <= mse(D=32) {:.3e}", mse[1], mse[2]))?;
    Ok(format!(
        "mse D=1 {:.4e}, D=8 {:.4e}, D=32 {:.4e}; D1/D8 = {ratio:.2}",
        mse[0], mse[1], mse[2]
    ))
}

fn c5_gradient() -> Outcome {
    let (h, w, d) = (8, 8, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let img: Vec<f64> = (0..h * w).map(|_| rng.random_range(0.0..1.0)).collect();
    let row: Vec<f64> = (0..h * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let col: Vec<f64> = (0..w * d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mse = |r: &[f64], c: &[f64]| {
        let mut s = 0.0;
        for i in 0..h {
            for j in 0..w {
                let f: f64 = (0..d).map(|k| r[i * d + k] * c[j * d + k]).sum();
                s += (f - img[i * w + j]).powi(2);
            }
        }
        s / (h * w) as f64
    };
    let (_, g_row, g_col) = loss_and_grad(&img, h, w, d, &row, &col);
    let step = 1e-5;
    let mut worst = 0.0f64;
    for which in 0..2 {
        let n = if which == 0 { row.len() } else { col.len() };
        for k in 0..n {
            let (mut rp, mut rm, mut cp, mut cm) = (row.clone(), row.clone(), col.clone(), col.clone());
            if which == 0 {
                rp[k] += step;
                rm[k] -= step;
            } else {
                cp[k] += step;
                cm[k] -= step;
            }
            let fd = (mse(&rp, &cp) - mse(&rm, &cm)) / (2.0 * step);
            let ga = if which == 0 { g_row[k] } else { g_col[k] };
            worst = worst.max((ga - fd).abs() / 1f64.max(ga.abs()).max(fd.abs()));
        }
    }
    ensure(worst <= 1e-4, format!("max relative error {worst:.3e} > 1e-4"))?;
    Ok(format!("max relative error = {worst:.2e}"))
}

fn desk_generator() -> Generator<f32> {
    Generator::init(GeneratorConfig::default(), 0).unwrap()
}

fn c6_pixel_purity() -> Outcome {
    let gen = desk_generator();
    let styled = stylize(&gen, &Latent::Seed(6)).map_err(err)?;
    let e_r = grid_coords(32, &Transform::IDENTITY, Axis::Row).map_err(err)?;
    let e_c = grid_coords(32, &Transform::IDENTITY, Axis::Column).map_err(err)?;
    let full = styled.synthesize(&e_r, &e_c).map_err(err)?;
    let even: Vec<usize> = (0..32).step_by(2).collect();
    let sub = styled
        .synthesize(&e_r.select(&even).map_err(err)?, &e_c.select(&even).map_err(err)?)
        .map_err(err)?;
    let mut worst = 0.0f32;
    for c in 0..3 {
        for (a, &i) in even.iter().enumerate() {
            for (b, &j) in even.iter().enumerate() {
                worst = worst.max((sub.get(c, a, b) - full.get(c, i, j)).abs());
            }
        }
    }
    ensure(worst <= 1e-5, format!("max |diff| {worst:.3e} > 1e-5"))?;
    Ok(format!("16x16 even subset of 32x32, max |diff| = {worst:.2e}"))
}

fn c7_tiling() -> Outcome {
    let gen = desk_generator();
    let dir = tempfile::tempdir().map_err(err)?;
    let req = RenderRequest::new(Latent::Seed(7), 64, 64);
    let (a, b) = (dir.path().join("mono.ppm"), dir.path().join("tiled.ppm"));
    creps::renderer::write_image(&render(&gen, &req).map_err(err)?, &a).map_err(err)?;
    creps::renderer::write_image(&render_tiled(&gen, &req.with_tile(16)).map_err(err)?, &b).map_err(err)?;
    let (x, y) = (std::fs::read(&a).map_err(err)?, std::fs::read(&b).map_err(err)?);
    ensure(x == y, "tiled PPM differs from monolithic PPM")?;
    Ok(format!("64x64 vs 16x16 tiles, {} identical bytes", x.len()))
}

fn c8_warp_oracle() -> Outcome {
    let gen = desk_generator();
    let latent = Latent::Seed(8);
    let rot = make_coord_field(&FieldKind::Rotation(0.5), 16, 16).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let cols = (0..256).map(|_| rng.random_range(-1.0..1.0)).collect();
    let random = CoordField::new(16, 16, rows, cols).map_err(err)?;
    for (name, field) in [("rotation", rot), ("random", random)] {
        let warped = render_warped(&gen, &latent, &field).map_err(err)?;
        let oracle = render_pixelwise(&gen, &latent, &field).map_err(err)?;
        ensure(warped == oracle, format!("{name} field: warped differs from pixelwise"))?;
    }
    Ok("rotation and random 16x16 fields byte-identical".into())
}

fn c9_translation_crop() -> Outcome {
    let gen = desk_generator();
    let styled = stylize(&gen, &Latent::Seed(9)).map_err(err)?;
    // scale 1/2 with shifts (-1/4, +1/4) lands exactly on the 32-grid at
    // rows 4..20 and columns 12..28
    let t = Transform::new(-0.25, 0.25, 0.5).map_err(err)?;
    let e_r = grid_coords(16, &t, Axis::Row).map_err(err)?;
    let e_c = grid_coords(16, &t, Axis::Column).map_err(err)?;
    let big_r = grid_coords(32, &Transform::IDENTITY, Axis::Row).map_err(err)?;
    let big_c = grid_coords(32, &Transform::IDENTITY, Axis::Column).map_err(err)?;
    let rows: Vec<usize> = (4..20).collect();
    let cols: Vec<usize> = (12..28).collect();
    ensure(
        big_r.select(&rows).map_err(err)?.values == e_r.values && big_c.select(&cols).map_err(err)?.values == e_c.values,
        "shifted grid does not coincide with the 32-grid subset",
    )?;
    let shifted = styled.synthesize(&e_r, &e_c).map_err(err)?;
    let big = styled.synthesize(&big_r, &big_c).map_err(err)?;
    let crop: FeatureMap<f32> = big.select(&rows, &cols);
    let worst = shifted.max_abs_diff(&crop);
    ensure(worst <= 1e-5, format!("max |diff| {worst:.3e} > 1e-5"))?;
    Ok(format!("crop rows 4..20, cols 12..28, max |diff| = {worst:.2e}"))
}

fn c10_memory() -> Outcome {
    let cfg = GeneratorConfig::default();
    let d = cfg.thickness as u64;
    for h in [32u64, 64, 128, 256, 512] {
        let b = count_activations(&cfg, Mode::Biline, h as usize, h as usize).trunk;
        let n = count_activations(&cfg, Mode::Dense, h as usize, h as usize).trunk;
        // dense / biline = H / (2D), compared in integers
        ensure(n * 2 * d == b * h, format!("H={h}: dense/biline = {n}/{b}, expected {h}/{}", 2 * d))?;
    }
    for mode in [Mode::Biline, Mode::Dense] {
        let a = count_activations(&cfg, mode, 256, 256).trunk;
        let b = count_activations(&cfg, mode, 512, 512).trunk;
        let k = if mode == Mode::Biline { 2 } else { 4 };
        ensure(b == k * a, format!("{mode:?}: trunk 512/256 = {b}/{a}, expected x{k}"))?;
    }
    ensure(alloc::is_installed(), "tracking allocator not installed")?;
    let gen = desk_generator();
    let mut notes = Vec::new();
    for mode in [Mode::Biline, Mode::Dense] {
        let g = gen.with_mode(mode);
        let styled = stylize(&g, &Latent::Seed(10)).map_err(err)?;
        let warm = CoordField::grid(8, 8, &Transform::IDENTITY).map_err(err)?;
        let (e_r, e_c) = (
            grid_coords(256, &Transform::IDENTITY, Axis::Row).map_err(err)?,
            grid_coords(256, &Transform::IDENTITY, Axis::Column).map_err(err)?,
        );
        let field = CoordField::outer(&e_r, &e_c);
        let run = |f: &CoordField, r, c| match mode {
            Mode::Biline => styled.synthesize(r, c),
            Mode::Dense => styled.synthesize_dense(f),
        };
        let (wr, wc) = (
            grid_coords(8, &Transform::IDENTITY, Axis::Row).map_err(err)?,
            grid_coords(8, &Transform::IDENTITY, Axis::Column).map_err(err)?,
        );
        run(&warm, &wr, &wc).map_err(err)?;
        let (out, bytes) = alloc::measure_peak(|| run(&field, &e_r, &e_c));
        out.map_err(err)?;
        let analytic = count_activations(&cfg, mode, 256, 256).peak as f64 * 4.0;
        let rel = bytes as f64 / analytic;
        ensure(
            (0.9..=1.1).contains(&rel),
            format!("{mode:?}: measured {bytes} B vs analytic {analytic} B (x{rel:.4})"),
        )?;
        notes.push(format!("{mode:?} measured/analytic = {rel:.4}"));
    }
    let b = count_activations(&cfg, Mode::Biline, 256, 256).trunk;
    let n = count_activations(&cfg, Mode::Dense, 256, 256).trunk;
    Ok(format!("trunk dense/biline at 256 = {}; {}", n / b, notes.join(", ")))
}

fn creps_bin(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_creps"))
        .args(args)
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(format!(
            "creps {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let img = p("input.ppm");
    creps_bin(&["generate", "--seed", "3", "--res", "24x20", "--out", &img])?;
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("generate", vec!["generate", "--seed", "0", "--res", "48x40", "--scale", "1.5", "--shift-x", "0.1"]
            .into_iter().map(String::from).collect()),
        ("tile", vec!["tile", "--seed", "0", "--res", "48x40", "--scale", "1.5", "--shift-x", "0.1", "--tile", "16"]
            .into_iter().map(String::from).collect()),
        ("warp-rotate", vec!["warp", "--seed", "0", "--mode", "rotate", "--angle", "30", "--res", "24x24"]
            .into_iter().map(String::from).collect()),
        ("warp-elastic", vec!["warp", "--seed", "0", "--mode", "elastic", "--amplitude", "0.2", "--res", "24x24"]
            .into_iter().map(String::from).collect()),
        ("fit", vec!["fit", "--image", img.as_str(), "--thickness", "4", "--iters", "300"]
            .into_iter().map(String::from).collect()),
    ];
    let mut tiled_vs_generate = Vec::new();
    for (name, base) in &runs {
        let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
        for (k, threads) in ["1", "max", "4", "max"].iter().enumerate() {
            let mut args = vec!["--threads".to_string(), threads.to_string()];
            args.extend(base.iter().cloned());
            let files: Vec<String> = if *name == "fit" {
                let (e, t) = (p(&format!("{name}{k}.crw")), p(&format!("{name}{k}.csv")));
                args.extend(["--out-embeddings".into(), e.clone(), "--out-trace".into(), t.clone()]);
                vec![e, t]
            } else {
                let o = p(&format!("{name}{k}.ppm"));
                args.extend(["--out".into(), o.clone()]);
                vec![o]
            };
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            creps_bin(&refs)?;
            outputs.push(files.iter().map(|f| std::fs::read(f).map_err(err)).collect::<Result<_, _>>()?);
        }
        ensure(
            outputs.windows(2).all(|w| w[0] == w[1]),
            format!("{name}: outputs differ across thread counts or runs"),
        )?;
        if *name == "generate" || *name == "tile" {
            tiled_vs_generate.push(outputs[0][0].clone());
        }
    }
    ensure(tiled_vs_generate[0] == tiled_vs_generate[1], "tile output differs from generate")?;
    Ok(format!(
        "generate/tile/warp/fit identical for --threads 1, 4, max and repeated runs ({} cores)",
        std::thread::available_parallelism().map_or(1, |n| n.get())
    ))
}

fn c12_formats() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let entries = vec![
        Entry::new("a.weight", vec![2, 3], (0..6).map(|_| rng.random::<f32>()).collect()),
        Entry::new("b", vec![4], (0..4).map(|_| rng.random::<f32>()).collect()),
        Entry::new("scalar", vec![], vec![1.5]),
    ];
    let bytes = encode_container(&entries).map_err(err)?;
    let back = decode_container(&bytes).map_err(err)?;
    ensure(back == entries, "container entries changed in round trip")?;
    ensure(encode_container(&back).map_err(err)? == bytes, "container bytes changed in round trip")?;
    let dir = tempfile::tempdir().map_err(err)?;
    let path = dir.path().join("w.crw");
    save_container(&entries, &path).map_err(err)?;
    ensure(std::fs::read(&path).map_err(err)? == bytes, "saved container bytes differ")?;

    let gen = Generator::init(GeneratorConfig::small(), 1).map_err(err)?;
    let wbytes = encode_container(&gen.weights().to_entries()).map_err(err)?;
    ensure(
        encode_container(&decode_container(&wbytes).map_err(err)?).map_err(err)? == wbytes,
        "generator weights round trip",
    )?;

    let code = |r: creps::Result<Vec<Entry>>| r.err().map(|e| e.code()).unwrap_or("ok");
    let mut bad_magic = bytes.clone();
    bad_magic[..8].copy_from_slice(b"CREPSW99");
    ensure(code(decode_container(&bad_magic)) == "E_BAD_MAGIC", "bad magic code")?;
    ensure(
        code(decode_container(&bytes[..bytes.len() - 3])) == "E_TRUNCATED",
        "truncated code",
    )?;
    let mut trailing = bytes.clone();
    trailing.push(0);
    ensure(code(decode_container(&trailing)) == "E_TRAILING_BYTES", "trailing bytes code")?;
    let dup = vec![entries[1].clone(), entries[1].clone()];
    ensure(
        matches!(encode_container(&dup), Err(creps::Error::Container(ContainerError::DuplicateName(_)))),
        "duplicate on encode",
    )?;
    let mismatch = vec![Entry {
        name: "m".into(),
        dims: vec![2, 3],
        data: vec![0.0; 5],
    }];
    ensure(
        encode_container(&mismatch).err().map(|e| e.code()) == Some("E_LENGTH_MISMATCH"),
        "length mismatch code on encode",
    )?;
    // hand-built file carrying a duplicate name past the encoder
    let raw = |items: &[(&str, Vec<u32>)]| {
        let mut v = CONTAINER_MAGIC.to_vec();
        v.extend_from_slice(&(items.len() as u32).to_le_bytes());
        for (name, dims) in items {
            v.extend_from_slice(&(name.len() as u16).to_le_bytes());
            v.extend_from_slice(name.as_bytes());
            v.push(dims.len() as u8);
            for d in dims {
                v.extend_from_slice(&d.to_le_bytes());
            }
            let n: u32 = dims.iter().product();
            v.extend(std::iter::repeat_n(0u8, 4 * n as usize));
        }
        v
    };
    let reference = encode_container(&[Entry::new("b", vec![4], vec![0.0; 4])]).map_err(err)?;
    ensure(raw(&[("b", vec![4])]) == reference, "hand-built container layout disagrees with encoder")?;
    ensure(
        code(decode_container(&raw(&[("x", vec![2]), ("x", vec![2])]))) == "E_DUPLICATE_NAME",
        "duplicate name code on decode",
    )?;

    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, "{}").map_err(err)?;
    let cfg = load_config(&cfg_path).map_err(err)?;
    ensure(
        cfg == GeneratorConfig::default() && cfg.num_blocks == 6 && cfg.thickness == 8 && cfg.hidden_channels == 128,
        "empty config does not give defaults",
    )?;
    std::fs::write(&cfg_path, r#"{"thickness": 0}"#).map_err(err)?;
    let e = load_config(&cfg_path).unwrap_err();
    ensure(e.to_string().contains("thickness") && e.code() == "E_INVALID_CONFIG", "zero thickness")?;
    std::fs::write(&cfg_path, r#"{"thicknes": 4}"#).map_err(err)?;
    ensure(load_config(&cfg_path).unwrap_err().code() == "E_CONFIG_PARSE", "unknown key")?;
    let json = GeneratorConfig::small().to_json();
    ensure(
        GeneratorConfig::from_json(&json).map_err(err)? == GeneratorConfig::small(),
        "config round trip",
    )?;

    let field = make_coord_field(&FieldKind::Rotation(0.3), 5, 7).map_err(err)?;
    let fb = encode_coord_field(&field);
    let decoded = decode_coord_field(&fb).map_err(err)?;
    let as_f32 = |v: &[f64]| v.iter().map(|&x| x as f32 as f64).collect::<Vec<_>>();
    ensure(
        decoded.rows == as_f32(&field.rows) && decoded.cols == as_f32(&field.cols),
        "coord field values are not the 32-bit originals",
    )?;
    ensure(encode_coord_field(&decoded) == fb, "coord field bytes changed in round trip")?;
    let mut fbad = fb.clone();
    fbad[0] = b'X';
    ensure(decode_coord_field(&fbad).is_err(), "coord field bad magic accepted")?;
    ensure(decode_coord_field(&fb[..fb.len() - 1]).is_err(), "truncated coord field accepted")?;

    let img = render(&gen, &RenderRequest::new(Latent::Seed(0), 4, 4)).map_err(err)?;
    let ppm = encode_ppm(&img);
    ensure(ppm.starts_with(b"P6\n4 4\n255\n") && ppm.len() == 11 + 48, "PPM header layout")?;
    ensure(decode_ppm(&ppm).map_err(err)? == img, "PPM round trip")?;
    ensure(
        decode_ppm(b"P3\n1 1\n255\n0 0 0\n").err().map(|e| e.code()) == Some("E_FORMAT"),
        "P3 not rejected with a format error",
    )?;
    Ok("round trips byte-identical; container, config, field and PPM error codes as designated".into())
}

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "composition oracle", budget: Duration::from_secs(1), run: c1_composition },
        Criterion { id: 2, name: "rank bound", budget: Duration::from_secs(1), run: c2_rank_bound },
        Criterion { id: 3, name: "Eckart-Young fitting", budget: Duration::from_secs(10), run: c3_eckart_young },
        Criterion { id: 4, name: "thickness trend on natural image", budget: Duration::from_secs(120), run: c4_thickness_trend },
        Criterion { id: 5, name: "gradient check", budget: Duration::from_secs(1), run: c5_gradient },
        Criterion { id: 6, name: "pixel purity", budget: Duration::from_secs(5), run: c6_pixel_purity },
        Criterion { id: 7, name: "tiling equality", budget: Duration::from_secs(10), run: c7_tiling },
        Criterion { id: 8, name: "warp oracle", budget: Duration::from_secs(120), run: c8_warp_oracle },
        Criterion { id: 9, name: "translation-crop equivalence", budget: Duration::from_secs(5), run: c9_translation_crop },
        Criterion { id: 10, name: "memory scaling", budget: Duration::from_secs(30), run: c10_memory },
        Criterion { id: 11, name: "determinism", budget: Duration::from_secs(60), run: c11_determinism },
        Criterion { id: 12, name: "format robustness", budget: Duration::from_secs(1), run: c12_formats },
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!(
                "{detail}; runtime {:.2} s over the {:.0} s budget",
                elapsed.as_secs_f64(),
                c.budget.as_secs_f64()
            )),
            other => other,
        };
        match outcome {
            Ok(detail) => println!(
                "PASS criterion {:>2} {} [{:.2} s]: {detail}",
                c.id,
                c.name,
                elapsed.as_secs_f64()
            ),
            Err(why) => {
                failed += 1;
                println!(
                    "FAIL criterion {:>2} {} [{:.2} s]: {why}",
                    c.id,
                    c.name,
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
