//! Two-dimensional edge detection.
//!
//! First order: four directional responses, magnitude, non-maximum
//! suppression along the quantised gradient angle, then double-threshold
//! hysteresis. Second order: LoT response, small-magnitude zeroing, zero
//! crossings, and an orientation taken from the strongest of four directional
//! second-order responses.
//!
//! Angles follow image coordinates: `x` is the column index, `y` the row
//! index (pointing down). `theta = atan(dy/dx)` lies in `(-pi/2, pi/2]`.
//! Orientation maps store the axial angle in `(0, pi]`, so that a vertical
//! edge (`theta = 0`) is recorded as `pi` and `D != 0` exactly on edges.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array2, Zip};

use crate::conv::{convolve, flush_rounding, peak_abs, Padding};
use crate::operators::{build_directional_2d, Angle, Construction, KernelProfile, Operator, Order, Tag};
use crate::threshold::Threshold;
use crate::{Error, Image, Mask, Result};

/// Operators for 0°, 45°, 90° and 135°, in that order.
#[derive(Clone, Debug)]
pub struct DirectionalOps {
    ops: [Operator; 4],
}

impl DirectionalOps {
    pub fn new(ops: [Operator; 4]) -> Result<Self> {
        let order = ops[0].order();
        for (op, angle) in ops.iter().zip(Angle::ALL) {
            if op.rank() != 2 {
                return Err(Error::InvalidOperator(format!("{}° operator is not rank 2", angle.degrees())));
            }
            if op.order() != order || op.extent() != ops[0].extent() {
                return Err(Error::InvalidOperator(
                    "directional operators must share order and extent".into(),
                ));
            }
        }
        Ok(Self { ops })
    }

    pub fn build(profile: &KernelProfile, order: Order, method: Construction) -> Result<Self> {
        let ops = Angle::ALL.map(|a| build_directional_2d(profile, order, a, method));
        let [a, b, c, d] = ops;
        Self::new([a?, b?, c?, d?])
    }

    pub fn get(&self, angle: Angle) -> &Operator {
        &self.ops[angle as usize]
    }

    pub fn order(&self) -> Order {
        self.ops[0].order()
    }
}

#[derive(Clone, Debug)]
pub struct GradientField {
    pub dx: Image,
    pub dy: Image,
    pub d45: Image,
    pub d135: Image,
    pub grad: Image,
    pub theta: Image,
}

/// `atan(dy/dx)` in `(-pi/2, pi/2]`; `0` when both vanish.
pub fn gradient_angle(dx: f64, dy: f64) -> f64 {
    if dx == 0.0 {
        if dy == 0.0 {
            0.0
        } else {
            FRAC_PI_2
        }
    } else {
        (dy / dx).atan()
    }
}

/// Replicate-padded response with rounding residue flushed to zero, so flat
/// regions produce exact zeros rather than spurious tiny extrema.
fn respond(image: &Image, op: &Operator) -> Result<Image> {
    let mut out = convolve(image, op, Padding::Replicate)?;
    flush_rounding(&mut out, peak_abs(image), op);
    Ok(out)
}

fn check_fits(image: &Image, op: &Operator) -> Result<()> {
    let (h, w) = image.dim();
    if h < op.extent()[0] || w < op.extent()[1] {
        return Err(Error::Shape(format!(
            "image {h}x{w} is smaller than the {}x{} operator",
            op.extent()[0],
            op.extent()[1]
        )));
    }
    Ok(())
}

pub fn gradient_field(image: &Image, ops: &DirectionalOps) -> Result<GradientField> {
    if ops.order() != Order::First {
        return Err(Error::InvalidOperator("gradient field needs first-order operators".into()));
    }
    check_fits(image, ops.get(Angle::Deg0))?;
    let [dx, d45, dy, d135] = Angle::ALL.map(|a| respond(image, ops.get(a)));
    let (dx, d45, dy, d135) = (dx?, d45?, dy?, d135?);
    let grad = Zip::from(&dx)
        .and(&dy)
        .and(&d45)
        .and(&d135)
        .map_collect(|&a, &b, &c, &d| 0.5 * ((a * a + b * b).sqrt() + (c * c + d * d).sqrt()));
    let theta = Zip::from(&dx).and(&dy).map_collect(|&a, &b| gradient_angle(a, b));
    Ok(GradientField { dx, dy, d45, d135, grad, theta })
}

/// Quantises `theta` to the nearest canonical angle (bins of ±22.5°).
pub fn quantize_angle(theta: f64) -> Angle {
    let deg = theta.to_degrees();
    if deg.abs() < 22.5 {
        Angle::Deg0
    } else if (22.5..67.5).contains(&deg) {
        Angle::Deg45
    } else if deg > -67.5 && deg <= -22.5 {
        Angle::Deg135
    } else {
        Angle::Deg90
    }
}

/// `(drow, dcol)` of the forward neighbour along the gradient direction.
fn step_along(angle: Angle) -> (isize, isize) {
    match angle {
        Angle::Deg0 => (0, 1),
        Angle::Deg45 => (1, 1),
        Angle::Deg90 => (1, 0),
        Angle::Deg135 => (-1, 1),
    }
}

/// Keeps `grad` where it is `>=` both in-bounds neighbours along the
/// quantised angle, zero elsewhere.
pub fn suppress(grad: &Image, theta: &Image) -> Result<Image> {
    if grad.dim() != theta.dim() {
        return Err(Error::Shape("grad and theta differ in shape".into()));
    }
    let (h, w) = grad.dim();
    let at = |r: isize, c: isize| {
        (r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w).then(|| grad[[r as usize, c as usize]])
    };
    Ok(Array2::from_shape_fn((h, w), |(r, c)| {
        let g = grad[[r, c]];
        let (dr, dc) = step_along(quantize_angle(theta[[r, c]]));
        let (ri, ci) = (r as isize, c as isize);
        let ahead = at(ri + dr, ci + dc).is_none_or(|n| g >= n);
        let behind = at(ri - dr, ci - dc).is_none_or(|n| g >= n);
        if ahead && behind {
            g
        } else {
            0.0
        }
    }))
}

pub fn non_max_suppression(gf: &GradientField) -> Image {
    suppress(&gf.grad, &gf.theta).expect("field components share a shape")
}

/// Double-threshold selection with 8-connected propagation from strong
/// pixels. Only strictly positive values are candidates.
pub fn hysteresis(nms: &Image, low: f64, high: f64) -> Result<Mask> {
    if !(low >= 0.0 && low <= high) {
        return Err(Error::Config(format!(
            "thresholds need 0 <= low <= high, got low {low}, high {high}"
        )));
    }
    let (h, w) = nms.dim();
    let candidate = |v: f64| v > 0.0 && v >= low;
    let mut edges = Array2::from_elem((h, w), false);
    let mut queue = VecDeque::new();
    for ((r, c), &v) in nms.indexed_iter() {
        if candidate(v) && v >= high {
            edges[[r, c]] = true;
            queue.push_back((r, c));
        }
    }
    while let Some((r, c)) = queue.pop_front() {
        for dr in -1isize..=1 {
            for dc in -1isize..=1 {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nr as usize >= h || nc as usize >= w {
                    continue;
                }
                let (nr, nc) = (nr as usize, nc as usize);
                if !edges[[nr, nc]] && candidate(nms[[nr, nc]]) {
                    edges[[nr, nc]] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
    }
    Ok(edges)
}

/// Maps an angle to the axial range `(0, pi]`.
pub fn axial(theta: f64) -> f64 {
    if theta <= 0.0 {
        theta + PI
    } else {
        theta
    }
}

#[derive(Clone, Debug)]
pub struct EdgeResult {
    pub edges: Mask,
    /// Axial edge-normal angle in `(0, pi]` on edges, `0` elsewhere.
    pub orientation: Image,
    /// Thresholds actually applied, after percentile resolution.
    pub applied: Vec<(&'static str, f64)>,
}

fn orientation_map(edges: &Mask, theta: &Image) -> Image {
    Zip::from(edges)
        .and(theta)
        .map_collect(|&e, &t| if e { axial(t) } else { 0.0 })
}

/// Resolves low/high thresholds over the positive suppressed magnitudes.
pub fn resolve_pair(nms: &Image, low: Threshold, high: Threshold) -> (f64, f64) {
    let positives = || nms.iter().copied().filter(|&v| v > 0.0);
    (low.resolve(positives()), high.resolve(positives()))
}

/// NMS and hysteresis on a precomputed magnitude/angle pair.
pub fn edges_from_gradient(grad: &Image, theta: &Image, low: Threshold, high: Threshold) -> Result<EdgeResult> {
    let nms = suppress(grad, theta)?;
    let (lo, hi) = resolve_pair(&nms, low, high);
    let edges = hysteresis(&nms, lo, hi)?;
    let orientation = orientation_map(&edges, theta);
    Ok(EdgeResult { edges, orientation, applied: vec![("low_thr", lo), ("high_thr", hi)] })
}

/// First-order TGD edge detection.
pub fn detect_edges_first_order(
    image: &Image,
    ops: &DirectionalOps,
    low: Threshold,
    high: Threshold,
) -> Result<EdgeResult> {
    let gf = gradient_field(image, ops)?;
    edges_from_gradient(&gf.grad, &gf.theta, low, high)
}

/// Detection with only an x and a y operator: magnitude `hypot(dx, dy)`.
pub fn detect_edges_two_direction(
    image: &Image,
    x_op: &Operator,
    y_op: &Operator,
    low: Threshold,
    high: Threshold,
) -> Result<EdgeResult> {
    check_fits(image, x_op)?;
    let dx = respond(image, x_op)?;
    let dy = respond(image, y_op)?;
    let grad = Zip::from(&dx).and(&dy).map_collect(|&a, &b| a.hypot(b));
    let theta = Zip::from(&dx).and(&dy).map_collect(|&a, &b| gradient_angle(a, b));
    edges_from_gradient(&grad, &theta, low, high)
}

/// Zero crossings of a second-order response.
///
/// A pixel is marked when it is exactly zero between a strictly positive and
/// a strictly negative 4-neighbour, or when it is positive and has a negative
/// 4-neighbour. The second rule marks the bright side of every sign change,
/// which on a dark stroke is the stroke itself.
pub fn find_zero_crossings(response: &Image) -> Mask {
    let (h, w) = response.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let v = response[[r, c]];
        let mut pos = false;
        let mut neg = false;
        let neighbours = [
            (r > 0).then(|| response[[r - 1, c]]),
            (r + 1 < h).then(|| response[[r + 1, c]]),
            (c > 0).then(|| response[[r, c - 1]]),
            (c + 1 < w).then(|| response[[r, c + 1]]),
        ];
        for n in neighbours.into_iter().flatten() {
            pos |= n > 0.0;
            neg |= n < 0.0;
        }
        (v == 0.0 && pos && neg) || (v > 0.0 && neg)
    })
}

/// Angle (radians) of the strongest signed directional response; ties go to
/// the lowest angle.
fn argmax_angle(responses: [f64; 4]) -> f64 {
    let mut best = 0;
    for i in 1..4 {
        if responses[i] > responses[best] {
            best = i;
        }
    }
    Angle::ALL[best].radians()
}

/// LoT edge detection. `directional` are second-order operators used only
/// for orientation.
pub fn detect_edges_lot(
    image: &Image,
    directional: &DirectionalOps,
    lot: &Operator,
    lot_thr: Threshold,
) -> Result<EdgeResult> {
    if directional.order() != Order::Second {
        return Err(Error::InvalidOperator("orientation needs second-order operators".into()));
    }
    let (response, thr) = thresholded_response(image, lot, lot_thr)?;
    let edges = find_zero_crossings(&response);
    let [r0, r45, r90, r135] = Angle::ALL.map(|a| respond(image, directional.get(a)));
    let (r0, r45, r90, r135) = (r0?, r45?, r90?, r135?);
    let mut orientation = Array2::zeros(image.dim());
    for ((r, c), &e) in edges.indexed_iter() {
        if e {
            let idx = [r, c];
            orientation[idx] = axial(argmax_angle([r0[idx], r45[idx], r90[idx], r135[idx]]));
        }
    }
    Ok(EdgeResult { edges, orientation, applied: vec![("lot_thr", thr)] })
}

/// Second-order response with `|G| < thr` set to zero.
fn thresholded_response(image: &Image, op: &Operator, thr: Threshold) -> Result<(Image, f64)> {
    check_fits(image, op)?;
    let mut g = respond(image, op)?;
    let t = thr.resolve(g.iter().map(|v| v.abs()));
    g.mapv_inplace(|v| if v.abs() < t { 0.0 } else { v });
    Ok((g, t))
}

/// Classical kernels sharing the suppression, hysteresis and zero-crossing
/// stages above.
pub mod baseline {
    use super::*;
    use crate::operators::Provenance;

    /// Gaussian sigma for a kernel of `size` taps, `0.3((size-1)/2 - 1) + 0.8`.
    pub fn sigma_for_size(size: usize) -> f64 {
        0.3 * ((size as f64 - 1.0) / 2.0 - 1.0) + 0.8
    }

    fn odd_size(size: usize) -> Result<usize> {
        if size < 3 || size.is_multiple_of(2) {
            return Err(Error::InvalidOperator(format!("baseline size must be odd and >= 3, got {size}")));
        }
        Ok(size / 2)
    }

    /// Normalised 2D Gaussian of `size x size` taps.
    pub fn gaussian_kernel(size: usize) -> Result<Operator> {
        let r = odd_size(size)? as i64;
        let s = sigma_for_size(size);
        let mut w = Array2::from_shape_fn((size, size), |(i, j)| {
            let (v, u) = (i as i64 - r, j as i64 - r);
            (-((u * u + v * v) as f64) / (2.0 * s * s)).exp()
        });
        let total = w.sum();
        w.mapv_inplace(|x| x / total);
        Ok(Operator::from_weights(w.into_dyn(), Order::Second)?.with_provenance(Provenance::Baseline))
    }

    /// Sobel pair with the crate's sign convention (rising edge positive).
    pub fn sobel() -> (Operator, Operator) {
        let x = ndarray::arr2(&[[1.0, 0.0, -1.0], [2.0, 0.0, -2.0], [1.0, 0.0, -1.0]]);
        let y = x.t().to_owned();
        let mk = |w: Array2<f64>, a| {
            Operator::from_weights(w.into_dyn(), Order::First)
                .expect("sobel is valid")
                .with_tag(Tag::Angle(a))
                .with_provenance(Provenance::Baseline)
        };
        (mk(x, Angle::Deg0), mk(y, Angle::Deg90))
    }

    /// Sampled Laplacian of Gaussian, mean-corrected to zero sum and scaled
    /// so its minimum is `-2`.
    pub fn log_operator(size: usize) -> Result<Operator> {
        let r = odd_size(size)? as i64;
        let s = sigma_for_size(size);
        let s2 = s * s;
        let mut w = Array2::from_shape_fn((size, size), |(i, j)| {
            let (v, u) = (i as i64 - r, j as i64 - r);
            let rho2 = (u * u + v * v) as f64;
            (rho2 - 2.0 * s2) / (s2 * s2) * (-rho2 / (2.0 * s2)).exp()
        });
        let mean = w.mean().expect("nonempty");
        w.mapv_inplace(|x| x - mean);
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        w.mapv_inplace(|x| x * (-2.0 / min));
        Ok(Operator::from_weights(w.into_dyn(), Order::Second)?
            .with_tag(Tag::Laplacian)
            .with_provenance(Provenance::Baseline))
    }

    /// Gaussian smoothing of `size` taps followed by Sobel derivatives,
    /// `hypot` magnitude, NMS and hysteresis.
    pub fn canny(image: &Image, size: usize, low: Threshold, high: Threshold) -> Result<EdgeResult> {
        let g = gaussian_kernel(size)?;
        check_fits(image, &g)?;
        let smoothed = convolve(image, &g, Padding::Replicate)?;
        let (sx, sy) = sobel();
        detect_edges_two_direction(&smoothed, &sx, &sy, low, high)
    }

    /// LoG zero crossings, orientation from the smoothed Sobel angle.
    pub fn log(image: &Image, size: usize, thr: Threshold) -> Result<EdgeResult> {
        let op = log_operator(size)?;
        let (response, t) = thresholded_response(image, &op, thr)?;
        let edges = find_zero_crossings(&response);
        let smoothed = convolve(image, &gaussian_kernel(size)?, Padding::Replicate)?;
        let (sx, sy) = sobel();
        let dx = respond(&smoothed, &sx)?;
        let dy = respond(&smoothed, &sy)?;
        let theta = Zip::from(&dx).and(&dy).map_collect(|&a, &b| gradient_angle(a, b));
        let orientation = orientation_map(&edges, &theta);
        Ok(EdgeResult { edges, orientation, applied: vec![("lot_thr", t)] })
    }
}
