use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ArgMatches;
use ndarray::{Array2, Axis as NdAxis};

use tgd::denoise::{self, DenoiseConfig, StepDecay};
use tgd::edge2d::{self, baseline, DirectionalOps, EdgeResult};
use tgd::edge3d::{self, FrameSequence, Ops3d, Thresholds3d};
use tgd::io::{self, BitDepth};
use tgd::metrics::{self, MetricReport, NoiseKind, NoiseLevel, NoiseSpec};
use tgd::operators::{self, Axis, KernelProfile, Order};
use tgd::synth::{self, MovingSquare, Pendulum};
use tgd::{Image, Mask};

use crate::args::{Denoise, Edge2d, Edge3d, MakeOp, Method, Metrics, PhantomKind, Synth};
use crate::manifest::Manifest;
use crate::UsageError;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn radius_of(size: usize) -> anyhow::Result<usize> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(usage(format!("operator size must be odd and >= 3, got {size}")));
    }
    Ok(size / 2)
}

/// Absolute form of a path that may not exist yet.
fn resolved(path: &Path) -> PathBuf {
    if let Ok(p) = path.canonicalize() {
        return p;
    }
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let base = parent.canonicalize().unwrap_or_else(|_| parent.to_path_buf());
    base.join(path.file_name().unwrap_or_default())
}

/// Refuses outputs that would replace (or live inside) an input.
fn guard(outputs: &[&Path], inputs: &[&Path]) -> anyhow::Result<()> {
    for out in outputs {
        let o = resolved(out);
        for inp in inputs {
            let i = resolved(inp);
            if o == i || (i.is_dir() && o.starts_with(&i)) {
                return Err(usage(format!("output {} would overwrite input {}", out.display(), inp.display())));
            }
        }
    }
    Ok(())
}

fn file_manifest(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.txt");
    output.with_file_name(name)
}

fn ensure_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

fn ensure_dir(path: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

fn stem_of(path: &Path, explicit: &Option<String>) -> String {
    explicit
        .clone()
        .unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into()))
}

fn depth_for(image: &Image) -> BitDepth {
    if image.iter().any(|&v| v > 255.0) {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    }
}

fn write_image(path: &Path, image: &Image) -> anyhow::Result<()> {
    let depth = depth_for(image);
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => io::write_png(path, image, depth)?,
        _ => io::write_pgm(path, image, depth)?,
    }
    Ok(())
}

pub fn make_op(a: &MakeOp, m: &ArgMatches) -> anyhow::Result<()> {
    let op = if let Some(name) = &a.preset {
        operators::preset(name)?
    } else {
        let mut profile = KernelProfile::new(a.kind, radius_of(a.size)?);
        if let Some(shape) = a.shape {
            profile = profile.with_shape(shape)?;
        }
        match a.rank {
            1 => {
                let op = match a.order {
                    Order::First => operators::build_first_order_1d(&profile)?,
                    Order::Second => operators::build_second_order_1d(&profile)?,
                };
                match a.axis {
                    Some(axis) => op.along(axis)?,
                    None => op,
                }
            }
            2 if a.lot => operators::build_lot_2d(&profile)?,
            2 => operators::build_directional_2d(&profile, a.order, a.angle, a.construction)?,
            _ => {
                if a.order != Order::First {
                    return Err(usage("rank-3 operators are first order; use rank 1 with --axis t for d2t"));
                }
                operators::build_first_order_3d(&profile, a.axis.unwrap_or(Axis::X))?
            }
        }
    };
    ensure_parent(&a.output)?;
    io::write_operator(&a.output, &op)?;
    Manifest::new("make-op", m).write(&file_manifest(&a.output))
}

pub fn synth(a: &Synth, m: &ArgMatches) -> anyhow::Result<()> {
    let mut manifest = Manifest::new("synth", m);
    if let Some(kind) = a.phantom {
        synth_phantom(a, kind)?;
        let target = if matches!(kind, PhantomKind::Square | PhantomKind::Pendulum) {
            a.output.join("manifest.txt")
        } else {
            file_manifest(&a.output)
        };
        return manifest.write(&target);
    }
    let signal = a.signal.ok_or_else(|| usage("synth needs --signal or --phantom"))?;
    let range = synth::parse_range(&a.n).map_err(|e| usage(e.to_string()))?;
    let clean = synth::synth_signal(signal, range);
    let level = match (a.sigma, a.snr) {
        (Some(s), _) => Some(NoiseLevel::Sigma(s)),
        (None, Some(db)) => Some(NoiseLevel::TargetSnrDb(db)),
        (None, None) => None,
    };
    let values = match (a.noise, level) {
        (None, None) => clean.clone(),
        (kind, Some(level)) => {
            let spec = NoiseSpec { kind: kind.unwrap_or(NoiseKind::Gaussian), level, seed: a.seed };
            metrics::add_noise(clean.as_slice().expect("contiguous"), &spec)?.0
        }
        (Some(_), None) => return Err(usage("--noise needs --sigma or --snr")),
    };
    ensure_parent(&a.output)?;
    io::write_signal_csv(&a.output, values.as_slice().expect("contiguous"), a.header)?;
    if let Some(path) = &a.clean {
        guard(&[path.as_path()], &[a.output.as_path()])?;
        ensure_parent(path)?;
        io::write_signal_csv(path, clean.as_slice().expect("contiguous"), a.header)?;
    }
    manifest.applied(&[("samples", clean.len() as f64)]);
    manifest.write(&file_manifest(&a.output))
}

fn synth_phantom(a: &Synth, kind: PhantomKind) -> anyhow::Result<()> {
    let (h, w) = (a.height, a.width);
    let single = match kind {
        PhantomKind::Step => Some(synth::step(h, w, a.col, a.low, a.high)?),
        PhantomKind::Ramp => {
            let width = a.edge_width.round() as usize;
            Some(synth::ramp(h, w, a.col, width, a.low, a.high)?)
        }
        PhantomKind::Sigmoid => Some(synth::sigmoid_edge(h, w, a.col, a.edge_width, a.low, a.high)?),
        PhantomKind::Stroke => {
            let thickness = a.edge_width.round() as usize;
            Some(synth::text_stroke(h, w, a.col, thickness, a.low, a.high)?)
        }
        PhantomKind::Square | PhantomKind::Pendulum => None,
    };
    if let Some(p) = single {
        ensure_parent(&a.output)?;
        write_image(&a.output, &p.image)?;
        let stem = stem_of(&a.output, &None);
        io::write_mask_pgm(&a.output.with_file_name(format!("{stem}_truth.pgm")), &p.edges)?;
        return Ok(());
    }
    let seq = if kind == PhantomKind::Square {
        let spec = MovingSquare { height: h, width: w, frames: a.frames, velocity: a.velocity, level: a.high, ..Default::default() };
        synth::moving_square(&spec)?
    } else {
        let spec = Pendulum { height: h, width: w, frames: a.frames, level: a.high, ..Default::default() };
        synth::pendulum(&spec)?
    };
    ensure_dir(&a.output)?;
    for (t, frame) in seq.frames.axis_iter(NdAxis(0)).enumerate() {
        write_image(&a.output.join(format!("frame_{t:04}.pgm")), &frame.to_owned())?;
    }
    // Kept beside the directory so the directory holds frames only.
    let mut name = a.output.file_name().unwrap_or_default().to_os_string();
    name.push("_motion.pgm");
    io::write_mask_pgm(&a.output.with_file_name(name), &seq.motion)?;
    Ok(())
}

fn trimmed(v: &[f64], trim: usize) -> anyhow::Result<&[f64]> {
    if 2 * trim >= v.len() {
        return Err(usage(format!("--trim {trim} leaves nothing of {} samples", v.len())));
    }
    Ok(&v[trim..v.len() - trim])
}

pub fn denoise(a: &Denoise, m: &ArgMatches) -> anyhow::Result<()> {
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(a.clean.as_deref());
    let mut outputs = vec![a.output.as_path()];
    outputs.extend(a.report.as_deref());
    outputs.extend(a.history.as_deref());
    guard(&outputs, &inputs)?;

    let x = io::read_signal_csv(&a.input)?;
    let r = radius_of(a.size)?;
    let profile = KernelProfile::new(a.kind, r);
    let cfg = DenoiseConfig {
        lambda_1st: a.lambda_1st,
        lambda_2nd: a.lambda_2nd,
        lambda_offset: a.lambda_offset,
        p: a.p,
        squared: a.squared,
        first_ops: vec![operators::build_first_order_1d(&profile)?],
        second_ops: vec![operators::build_second_order_1d(&profile)?],
        epochs: a.epochs,
        lr: a.lr,
        decay: StepDecay { every: a.decay_every, factor: a.decay_factor },
        seed: a.seed,
    };
    let out = denoise::denoise(x.as_slice().expect("contiguous"), &cfg)?;
    let y = out.y.as_slice().expect("contiguous");

    let mut manifest = Manifest::new("denoise", m);
    manifest.input(&a.input)?;
    ensure_parent(&a.output)?;
    io::write_signal_csv(&a.output, y, false)?;
    if let Some(path) = &a.history {
        ensure_parent(path)?;
        io::write_history_csv(path, &out.history)?;
    }
    let t = &out.final_terms;
    manifest.applied(&[("final_L_1st", t.first), ("final_L_2nd", t.second), ("final_L_offset", t.offset)]);
    if let Some(clean_path) = &a.clean {
        manifest.input(clean_path)?;
        let clean = io::read_signal_csv(clean_path)?;
        if clean.len() != y.len() {
            return Err(tgd::Error::Shape(format!(
                "{} has {} samples, {} has {}",
                clean_path.display(),
                clean.len(),
                a.input.display(),
                y.len()
            ))
            .into());
        }
        let report = MetricReport::compute(
            trimmed(clean.as_slice().expect("contiguous"), a.trim)?,
            trimmed(y, a.trim)?,
            a.max,
            a.l,
        )?;
        println!("{report}");
        if let Some(path) = &a.report {
            ensure_parent(path)?;
            fs::write(path, format!("{}\n{}\n", MetricReport::CSV_HEADER, report.to_csv_line()))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    manifest.write(&file_manifest(&a.output))
}

fn orientation_rgb(edges: &Mask, orientation: &Image) -> anyhow::Result<ndarray::Array3<u8>> {
    // Hue follows the axial angle over the full colour circle.
    let theta = orientation.mapv(|d| d - std::f64::consts::FRAC_PI_2);
    let none = Array2::from_elem(edges.dim(), false);
    Ok(edge3d::hsv_to_rgb8(&edge3d::hsv_merge(&theta, &none, edges)?))
}

pub fn edge2d(a: &Edge2d, m: &ArgMatches) -> anyhow::Result<()> {
    guard(&[a.output.as_path()], &[a.input.as_path()])?;
    let image = io::read_image(&a.input)?;
    let r = radius_of(a.size)?;
    let profile = KernelProfile::new(a.kind, r);
    let result: EdgeResult = match a.method {
        Method::Tgd1 => {
            let ops = DirectionalOps::build(&profile, Order::First, a.construction)?;
            edge2d::detect_edges_first_order(&image, &ops, a.low_thr, a.high_thr)?
        }
        Method::Lot => {
            let ops = DirectionalOps::build(&profile, Order::Second, a.construction)?;
            let lot = operators::build_lot_2d(&profile)?;
            edge2d::detect_edges_lot(&image, &ops, &lot, a.lot_thr)?
        }
        Method::CannyBaseline => baseline::canny(&image, a.size, a.low_thr, a.high_thr)?,
        Method::LogBaseline => baseline::log(&image, a.size, a.lot_thr)?,
    };
    ensure_dir(&a.output)?;
    let stem = stem_of(&a.input, &a.stem);
    io::write_mask_pgm(&a.output.join(format!("{stem}_edges.pgm")), &result.edges)?;
    io::write_orientation_csv(&a.output.join(format!("{stem}_orientation.csv")), &result.edges, &result.orientation)?;
    io::write_rgb_png(
        &a.output.join(format!("{stem}_orientation.png")),
        &orientation_rgb(&result.edges, &result.orientation)?,
    )?;
    let mut manifest = Manifest::new("edge2d", m);
    manifest.input(&a.input)?;
    manifest.applied(&result.applied);
    manifest.applied(&[("edge_pixels", result.edges.iter().filter(|&&e| e).count() as f64)]);
    manifest.write(&a.output.join("manifest.txt"))
}

fn write_3d(dir: &Path, stem: &str, r: &edge3d::Edge3DResult) -> anyhow::Result<()> {
    io::write_mask_pgm(&dir.join(format!("{stem}_static.pgm")), &r.static_edges)?;
    io::write_mask_pgm(&dir.join(format!("{stem}_kinetic.pgm")), &r.kinetic)?;
    io::write_rgb_png(&dir.join(format!("{stem}_merge.png")), &edge3d::hsv_to_rgb8(&r.merge))?;
    io::write_tgdf(&dir.join(format!("{stem}_dt.tgdf")), &r.dt.clone().into_dyn())?;
    io::write_tgdf(&dir.join(format!("{stem}_d2t.tgdf")), &r.d2t.clone().into_dyn())?;
    Ok(())
}

pub fn edge3d(a: &Edge3d, m: &ArgMatches) -> anyhow::Result<()> {
    guard(&[a.output.as_path()], &[a.input.as_path()])?;
    let frames = io::read_frames(&a.input)?;
    let seq = edge3d::scale_time(&frames, a.repeat, a.stride)?;
    let ops = Ops3d::standard(radius_of(a.spatial_size)?, radius_of(a.temporal_size)?)?;
    let thr = Thresholds3d { thr1: a.thr1, thr2: a.thr2, low: a.low_thr, high: a.high_thr };
    let stem = stem_of(&a.input, &a.stem);
    ensure_dir(&a.output)?;
    let mut manifest = Manifest::new("edge3d", m);
    manifest.input(&a.input)?;
    manifest.applied(&[("frames", frames.len_of(NdAxis(0)) as f64), ("window_frames", seq.len() as f64)]);
    if a.window == 0 {
        let r = edge3d::detect_3d(&seq, &ops, &thr)?;
        write_3d(&a.output, &stem, &r)?;
        manifest.applied(&r.applied);
    } else {
        let all = seq.frames();
        let n = all.len_of(NdAxis(0));
        if a.window > n {
            return Err(tgd::Error::Shape(format!("window of {} frames exceeds the {n} available", a.window)).into());
        }
        for start in 0..=n - a.window {
            let part = all.slice(ndarray::s![start..start + a.window, .., ..]).to_owned();
            let win = FrameSequence::new(part)?;
            let r = edge3d::detect_3d(&win, &ops, &thr)?;
            write_3d(&a.output, &format!("{stem}_t{:04}", start + win.centre()), &r)?;
        }
        manifest.applied(&[("windows", (n - a.window + 1) as f64)]);
    }
    manifest.write(&a.output.join("manifest.txt"))
}

fn read_values(path: &Path) -> anyhow::Result<Vec<f64>> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    Ok(if ext == "csv" || ext == "txt" {
        io::read_signal_csv(path)?.to_vec()
    } else {
        io::read_image(path)?.iter().copied().collect()
    })
}

pub fn metrics(a: &Metrics, m: &ArgMatches) -> anyhow::Result<()> {
    if let Some(out) = &a.output {
        guard(&[out.as_path()], &[a.reference.as_path(), a.test.as_path()])?;
    }
    let x = read_values(&a.reference)?;
    let y = read_values(&a.test)?;
    if x.len() != y.len() {
        return Err(tgd::Error::Shape(format!(
            "{} has {} values, {} has {}",
            a.reference.display(),
            x.len(),
            a.test.display(),
            y.len()
        ))
        .into());
    }
    let report = MetricReport::compute(trimmed(&x, a.trim)?, trimmed(&y, a.trim)?, a.max, a.l)?;
    println!("{report}");
    if let Some(out) = &a.output {
        ensure_parent(out)?;
        fs::write(out, format!("{}\n{}\n", MetricReport::CSV_HEADER, report.to_csv_line()))
            .with_context(|| format!("writing {}", out.display()))?;
        let mut manifest = Manifest::new("metrics", m);
        manifest.input(&a.reference)?;
        manifest.input(&a.test)?;
        manifest.write(&file_manifest(out))?;
    }
    Ok(())
}
