//! Static and kinetic edges on a frame sequence.
//!
//! Everything is evaluated on the centre frame of the window: spatial
//! derivatives come from rank-3 operators, temporal ones from rank-1
//! operators along `t` applied per pixel. Static edges are the 2D
//! suppression/hysteresis stages on `hypot(dx, dy)`; kinetic edges are pixels
//! where `|dt|` or `|d2t|` exceeds its threshold.

use std::f64::consts::FRAC_PI_2;

use ndarray::{s, Array3, Axis as NdAxis, Zip};

use crate::conv::{convolve_plane, flush_rounding, peak_abs, Padding};
use crate::edge2d::{edges_from_gradient, gradient_angle};
use crate::operators::{
    build_first_order_1d, build_first_order_3d, build_second_order_1d, Axis, KernelProfile, Operator, Order, Tag,
};
use crate::threshold::Threshold;
use crate::{Error, Image, Mask, Result, Volume};

/// A `[t, y, x]` frame stack with its time-scaling bookkeeping.
#[derive(Clone, Debug)]
pub struct FrameSequence {
    frames: Volume,
    effective_count: usize,
    repeat: usize,
    stride: usize,
}

impl FrameSequence {
    pub fn new(frames: Volume) -> Result<Self> {
        scale_time(&frames, 1, 1)
    }

    pub fn frames(&self) -> &Volume {
        &self.frames
    }

    pub fn effective_count(&self) -> usize {
        self.effective_count
    }

    pub fn repeat(&self) -> usize {
        self.repeat
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.frames.len_of(NdAxis(0))
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn centre(&self) -> usize {
        self.len() / 2
    }

    /// Frames in reverse time order.
    pub fn reversed(&self) -> Self {
        Self {
            frames: self.frames.slice(s![..;-1, .., ..]).to_owned(),
            ..self.clone()
        }
    }
}

/// Keeps every `stride`-th frame and repeats each `repeat` times.
pub fn scale_time(frames: &Volume, repeat: usize, stride: usize) -> Result<FrameSequence> {
    if repeat == 0 || stride == 0 {
        return Err(Error::Config(format!("repeat and stride must be >= 1, got {repeat} and {stride}")));
    }
    let kept: Vec<usize> = (0..frames.len_of(NdAxis(0))).step_by(stride).collect();
    if kept.is_empty() {
        return Err(Error::Config("frame sequence is empty".into()));
    }
    let (_, h, w) = frames.dim();
    let mut out = Array3::zeros((kept.len() * repeat, h, w));
    for (i, &t) in kept.iter().enumerate() {
        for k in 0..repeat {
            out.index_axis_mut(NdAxis(0), i * repeat + k).assign(&frames.index_axis(NdAxis(0), t));
        }
    }
    Ok(FrameSequence { frames: out, effective_count: kept.len(), repeat, stride })
}

/// The four operators of the 3D pipeline.
#[derive(Clone, Debug)]
pub struct Ops3d {
    pub tx: Operator,
    pub ty: Operator,
    pub tt: Operator,
    pub rt: Operator,
}

impl Ops3d {
    /// Gaussian orthogonal spatial operators of radius `spatial`, linear
    /// temporal operators of radius `temporal`.
    pub fn standard(spatial: usize, temporal: usize) -> Result<Self> {
        let sp = KernelProfile::gaussian(spatial);
        let tp = KernelProfile::linear(temporal);
        Self::new(
            build_first_order_3d(&sp, Axis::X)?,
            build_first_order_3d(&sp, Axis::Y)?,
            build_first_order_1d(&tp)?.along(Axis::T)?,
            build_second_order_1d(&tp)?.along(Axis::T)?,
        )
    }

    pub fn new(tx: Operator, ty: Operator, tt: Operator, rt: Operator) -> Result<Self> {
        if tx.rank() != 3 || ty.rank() != 3 {
            return Err(Error::InvalidOperator("spatial operators must be rank 3".into()));
        }
        for (op, order) in [(&tt, Order::First), (&rt, Order::Second)] {
            if op.rank() != 1 || op.order() != order || op.tag() != Some(Tag::Axis(Axis::T)) {
                return Err(Error::InvalidOperator(format!(
                    "temporal operators must be rank-1 {order} order along t"
                )));
            }
        }
        Ok(Self { tx, ty, tt, rt })
    }

    fn max_time_extent(&self) -> usize {
        [self.tx.extent()[0], self.ty.extent()[0], self.tt.extent()[0], self.rt.extent()[0]]
            .into_iter()
            .max()
            .expect("four operators")
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds3d {
    pub thr1: Threshold,
    pub thr2: Threshold,
    pub low: Threshold,
    pub high: Threshold,
}

impl Default for Thresholds3d {
    fn default() -> Self {
        Self {
            thr1: Threshold::Percentile(95.0),
            thr2: Threshold::Percentile(95.0),
            low: Threshold::Percentile(70.0),
            high: Threshold::Percentile(90.0),
        }
    }
}

/// HSV triples `[row, col, (hue_degrees, saturation, value)]`.
pub type HsvImage = Array3<f64>;

#[derive(Clone, Debug)]
pub struct Edge3DResult {
    pub static_edges: Mask,
    pub kinetic: Mask,
    pub theta: Image,
    pub merge: HsvImage,
    pub dx: Image,
    pub dy: Image,
    pub dt: Image,
    pub d2t: Image,
    pub applied: Vec<(&'static str, f64)>,
}

pub fn detect_3d(seq: &FrameSequence, ops: &Ops3d, thr: &Thresholds3d) -> Result<Edge3DResult> {
    let frames = seq.frames();
    let (t_len, h, w) = frames.dim();
    if t_len < ops.max_time_extent() {
        return Err(Error::Shape(format!(
            "{t_len} frames are fewer than the {}-frame operator window",
            ops.max_time_extent()
        )));
    }
    if h < ops.tx.extent()[1] || w < ops.tx.extent()[2] {
        return Err(Error::Shape(format!("frames {h}x{w} are smaller than the spatial operator")));
    }
    let c = seq.centre();
    let peak = peak_abs(frames);
    let respond = |op: &Operator| -> Result<Image> {
        let mut out = convolve_plane(frames, op, Padding::Replicate, c)?;
        flush_rounding(&mut out, peak, op);
        Ok(out)
    };
    let dx = respond(&ops.tx)?;
    let dy = respond(&ops.ty)?;
    let dt = respond(&ops.tt)?;
    let d2t = respond(&ops.rt)?;

    let grad = Zip::from(&dx).and(&dy).map_collect(|&a, &b| a.hypot(b));
    let theta = Zip::from(&dx).and(&dy).map_collect(|&a, &b| gradient_angle(a, b));
    let stat = edges_from_gradient(&grad, &theta, thr.low, thr.high)?;

    let t1 = thr.thr1.resolve(dt.iter().map(|v| v.abs()));
    let t2 = thr.thr2.resolve(d2t.iter().map(|v| v.abs()));
    let kinetic = Zip::from(&dt).and(&d2t).map_collect(|&a, &b| a.abs() > t1 || b.abs() > t2);
    let merge = hsv_merge(&theta, &kinetic, &stat.edges)?;

    let mut applied = stat.applied;
    applied.extend([("thr1", t1), ("thr2", t2)]);
    Ok(Edge3DResult { static_edges: stat.edges, kinetic, theta, merge, dx, dy, dt, d2t, applied })
}

/// Static pixels: hue from `theta`, full saturation. Kinetic-only pixels:
/// white. Both: static hue at half saturation. Background: black.
pub fn hsv_merge(theta: &Image, kinetic: &Mask, static_edges: &Mask) -> Result<HsvImage> {
    if theta.dim() != kinetic.dim() || theta.dim() != static_edges.dim() {
        return Err(Error::Shape("merge inputs differ in shape".into()));
    }
    let (h, w) = theta.dim();
    let mut out = Array3::zeros((h, w, 3));
    for ((r, c), &t) in theta.indexed_iter() {
        let (s, m) = (static_edges[[r, c]], kinetic[[r, c]]);
        let hue = (t + FRAC_PI_2) / std::f64::consts::PI * 360.0;
        let px = match (s, m) {
            (true, false) => [hue, 1.0, 1.0],
            (true, true) => [hue, 0.5, 1.0],
            (false, true) => [0.0, 0.0, 1.0],
            (false, false) => [0.0, 0.0, 0.0],
        };
        for (k, v) in px.into_iter().enumerate() {
            out[[r, c, k]] = v;
        }
    }
    Ok(out)
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(360.0) / 60.0;
    let c = v * s;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r, g, b) = match h as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r + m, g + m, b + m]
}

/// 8-bit RGB rendering of an HSV image.
pub fn hsv_to_rgb8(hsv: &HsvImage) -> Array3<u8> {
    let (h, w, _) = hsv.dim();
    let mut out = Array3::zeros((h, w, 3));
    for r in 0..h {
        for c in 0..w {
            let rgb = hsv_to_rgb(hsv[[r, c, 0]], hsv[[r, c, 1]], hsv[[r, c, 2]]);
            for k in 0..3 {
                out[[r, c, k]] = (rgb[k] * 255.0).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    out
}

/// Intersection over union of two masks; two empty masks score 1.
pub fn iou(a: &Mask, b: &Mask) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    Zip::from(a).and(b).for_each(|&x, &y| {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    });
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Broadcasts one image into a `frames`-long constant sequence.
pub fn constant_sequence(image: &Image, frames: usize) -> Volume {
    let (h, w) = image.dim();
    let mut v = Array3::zeros((frames, h, w));
    for mut f in v.outer_iter_mut() {
        f.assign(image);
    }
    v
}
