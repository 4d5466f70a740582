//! Dense true convolution of rank-1/2/3 arrays with [`Operator`]s.
//!
//! `out[p] = sum_q op[q] * in[p - q]`, with `q` measured from the operator
//! centre. Accumulation is in `f64` with a fixed tap order per output element,
//! so results are bitwise identical regardless of how rows are scheduled over
//! threads. Non-finite inputs propagate through every tap with a nonzero
//! weight; they are not trapped.

use std::ops::Range;
use std::str::FromStr;

use ndarray::{Array, Array2, ArrayBase, Data, Dimension, IxDyn};
use rayon::prelude::*;

use crate::operators::{Axis, Operator, Tag};
use crate::{Error, Image, Result, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Padding {
    /// Edge samples repeated outward.
    #[default]
    Replicate,
    /// Mirror about the edge sample, which is not repeated (`c b | a b c | b a`).
    Reflect,
    Zero,
    /// No padding; the output shrinks by `2 * radius` per convolved axis.
    Valid,
}

impl FromStr for Padding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "replicate" => Ok(Self::Replicate),
            "reflect" => Ok(Self::Reflect),
            "zero" => Ok(Self::Zero),
            "valid" => Ok(Self::Valid),
            other => Err(Error::Config(format!("unknown padding `{other}`"))),
        }
    }
}

/// Kernel extents lined up with the input axes, lifted to rank 3.
fn placement(input_rank: usize, op: &Operator) -> Result<[usize; 3]> {
    if !(1..=3).contains(&input_rank) {
        return Err(Error::Shape(format!(
            "input rank must be 1, 2 or 3, got {input_rank}"
        )));
    }
    let op_rank = op.rank();
    if op_rank > input_rank {
        return Err(Error::Shape(format!(
            "rank-{op_rank} operator cannot be applied to a rank-{input_rank} array"
        )));
    }
    let lift = 3 - input_rank;
    let mut ext = [1usize; 3];
    if op_rank == 1 && input_rank > 1 {
        let pos = match op.tag() {
            Some(Tag::Axis(Axis::Y)) => {
                if input_rank < 2 {
                    return Err(Error::Shape("y-axis operator needs rank >= 2".into()));
                }
                input_rank - 2
            }
            Some(Tag::Axis(Axis::T)) => {
                if input_rank < 3 {
                    return Err(Error::Shape("t-axis operator needs a rank-3 input".into()));
                }
                0
            }
            _ => input_rank - 1,
        };
        ext[lift + pos] = op.extent()[0];
    } else {
        // Equal ranks, or a rank-2 operator acting on each frame of a volume.
        let start = 3 - op_rank;
        ext[start..].copy_from_slice(op.extent());
    }
    Ok(ext)
}

fn lift_shape(shape: &[usize]) -> [usize; 3] {
    let mut out = [1usize; 3];
    out[3 - shape.len()..].copy_from_slice(shape);
    out
}

fn pad_index(i: i64, n: usize, padding: Padding) -> Option<usize> {
    let n_i = n as i64;
    if (0..n_i).contains(&i) {
        return Some(i as usize);
    }
    match padding {
        Padding::Replicate => Some(i.clamp(0, n_i - 1) as usize),
        Padding::Zero => None,
        Padding::Reflect => {
            if n == 1 {
                return Some(0);
            }
            let period = 2 * (n_i - 1);
            let m = i.rem_euclid(period);
            Some(if m < n_i { m } else { period - m } as usize)
        }
        Padding::Valid => unreachable!("valid mode never reads outside the input"),
    }
}

/// Per-axis lookup: for output index `o` and kernel index `k`, the source
/// index in the input (or `None` for a zero-padded sample).
struct AxisTable {
    out_len: usize,
    taps: usize,
    src: Vec<Option<usize>>,
}

impl AxisTable {
    fn new(n: usize, taps: usize, padding: Padding) -> Result<Self> {
        let c = (taps / 2) as i64;
        let (out_len, base) = match padding {
            Padding::Valid => {
                if n < taps {
                    return Err(Error::Shape(format!(
                        "extent {n} is smaller than the operator extent {taps} in valid mode"
                    )));
                }
                (n - taps + 1, c)
            }
            _ => (n, 0),
        };
        let mut src = Vec::with_capacity(out_len * taps);
        for o in 0..out_len as i64 {
            for k in 0..taps as i64 {
                let i = o + base - (k - c);
                src.push(if padding == Padding::Valid {
                    Some(i as usize)
                } else {
                    pad_index(i, n, padding)
                });
            }
        }
        Ok(Self { out_len, taps, src })
    }

    fn get(&self, o: usize, k: usize) -> Option<usize> {
        self.src[o * self.taps + k]
    }
}

struct Lifted<'a> {
    data: &'a [f64],
    shape: [usize; 3],
}

/// Core engine. `plane` restricts the output to one index of axis 0.
fn convolve_lifted(
    input: Lifted<'_>,
    kernel_ext: [usize; 3],
    weights: &[f64],
    padding: Padding,
    plane: Option<usize>,
) -> Result<(Vec<f64>, [usize; 3])> {
    let tables = [
        AxisTable::new(input.shape[0], kernel_ext[0], if kernel_ext[0] == 1 { Padding::Replicate } else { padding })?,
        AxisTable::new(input.shape[1], kernel_ext[1], if kernel_ext[1] == 1 { Padding::Replicate } else { padding })?,
        AxisTable::new(input.shape[2], kernel_ext[2], if kernel_ext[2] == 1 { Padding::Replicate } else { padding })?,
    ];
    let taps: Vec<(usize, usize, usize, f64)> = (0..kernel_ext[0])
        .flat_map(|a| (0..kernel_ext[1]).flat_map(move |b| (0..kernel_ext[2]).map(move |c| (a, b, c))))
        .zip(weights.iter().copied())
        .filter(|&(_, w)| w != 0.0)
        .map(|((a, b, c), w)| (a, b, c, w))
        .collect();

    let planes: Vec<usize> = match plane {
        Some(p) => {
            if p >= tables[0].out_len {
                return Err(Error::Shape(format!(
                    "plane {p} outside output extent {}",
                    tables[0].out_len
                )));
            }
            vec![p]
        }
        None => (0..tables[0].out_len).collect(),
    };
    let (n1, n2) = (tables[1].out_len, tables[2].out_len);
    let [_, s1, s2] = input.shape;
    let data = input.data;
    let mut out = vec![0.0; planes.len() * n1 * n2];
    if n2 > 0 {
        out.par_chunks_mut(n2).enumerate().for_each(|(row, dst)| {
            let o0 = planes[row / n1.max(1)];
            let o1 = row % n1.max(1);
            for (o2, slot) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for &(a, b, c, w) in &taps {
                    let (Some(i0), Some(i1), Some(i2)) =
                        (tables[0].get(o0, a), tables[1].get(o1, b), tables[2].get(o2, c))
                    else {
                        continue;
                    };
                    acc += w * data[(i0 * s1 + i1) * s2 + i2];
                }
                *slot = acc;
            }
        });
    }
    Ok((out, [planes.len(), n1, n2]))
}

/// Convolves `input` with `op` under the given boundary policy.
///
/// A rank-1 operator applied to a higher-rank array acts along its axis tag
/// (`x` = last axis, `y` = second to last, `t` = first of a volume; untagged
/// means `x`). A rank-2 operator applied to a volume acts on every frame.
pub fn convolve<S, D>(input: &ArrayBase<S, D>, op: &Operator, padding: Padding) -> Result<Array<f64, D>>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    let kernel_ext = placement(input.ndim(), op)?;
    let owned = input.as_standard_layout();
    let data = owned.as_slice().expect("standard layout is contiguous");
    let shape = lift_shape(input.shape());
    let weights: Vec<f64> = op.weights().iter().copied().collect();
    let (out, out_shape) = convolve_lifted(Lifted { data, shape }, kernel_ext, &weights, padding, None)?;
    let rank = input.ndim();
    let dims = &out_shape[3 - rank..];
    Array::from_shape_vec(IxDyn(dims), out)
        .expect("output length matches shape")
        .into_dimensionality::<D>()
        .map_err(|e| Error::Shape(e.to_string()))
}

/// Evaluates the convolution of a volume only on output frame `t`.
///
/// Equivalent to `convolve(volume, op, padding)` sliced at `t`.
pub fn convolve_plane(volume: &Volume, op: &Operator, padding: Padding, t: usize) -> Result<Image> {
    let kernel_ext = placement(3, op)?;
    let owned = volume.as_standard_layout();
    let data = owned.as_slice().expect("standard layout is contiguous");
    let shape = lift_shape(volume.shape());
    let weights: Vec<f64> = op.weights().iter().copied().collect();
    let (out, out_shape) = convolve_lifted(Lifted { data, shape }, kernel_ext, &weights, padding, Some(t))?;
    Ok(Array2::from_shape_vec((out_shape[1], out_shape[2]), out).expect("output length matches shape"))
}

/// Index window per input axis where no padded sample influences the output.
/// Empty (start == end) when the axis is shorter than the operator.
pub fn valid_region(input_extent: &[usize], op: &Operator) -> Result<Vec<Range<usize>>> {
    let kernel_ext = placement(input_extent.len(), op)?;
    let lift = 3 - input_extent.len();
    Ok(input_extent
        .iter()
        .enumerate()
        .map(|(axis, &n)| {
            let r = kernel_ext[lift + axis] / 2;
            if n < 2 * r + 1 {
                r.min(n)..r.min(n)
            } else {
                r..n - r
            }
        })
        .collect())
}

/// Upper bound on the rounding error of one output element when no input
/// sample exceeds `peak` in magnitude: `taps * eps * sum|w| * peak`.
pub fn rounding_bound(peak: f64, op: &Operator) -> f64 {
    let taps = op.weights().len() as f64;
    let l1: f64 = op.weights().iter().map(|w| w.abs()).sum();
    taps * f64::EPSILON * l1 * peak
}

/// Sets responses that are indistinguishable from rounding noise to zero.
pub fn flush_rounding<D: Dimension>(out: &mut Array<f64, D>, peak: f64, op: &Operator) {
    let bound = rounding_bound(peak, op);
    out.mapv_inplace(|v| if v.abs() <= bound { 0.0 } else { v });
}

/// Largest finite magnitude in `values`.
pub fn peak_abs<'a>(values: impl IntoIterator<Item = &'a f64>) -> f64 {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(0.0, |m, v| m.max(v.abs()))
}

/// Rank-1 valid convolution on plain slices; the denoiser's hot path.
pub fn convolve_1d_valid(x: &[f64], w: &[f64]) -> Vec<f64> {
    let taps = w.len();
    if x.len() < taps {
        return Vec::new();
    }
    let last = taps - 1;
    (0..x.len() - last)
        .map(|k| {
            let mut acc = 0.0;
            for (q, &wq) in w.iter().enumerate() {
                acc += wq * x[k + last - q];
            }
            acc
        })
        .collect()
}

/// Adjoint of [`convolve_1d_valid`]: accumulates `w`-weighted copies of `g`
/// back onto an input-length buffer.
pub fn convolve_1d_valid_adjoint(g: &[f64], w: &[f64], out: &mut [f64]) {
    let last = w.len() - 1;
    debug_assert_eq!(out.len(), g.len() + last);
    for (k, &gk) in g.iter().enumerate() {
        if gk == 0.0 {
            continue;
        }
        for (q, &wq) in w.iter().enumerate() {
            out[k + last - q] += wq * gk;
        }
    }
}
