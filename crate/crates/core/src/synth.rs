//! Test signals and synthetic phantoms with exact ground truth.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use ndarray::{Array2, Array3};

use crate::{Error, Image, Mask, Result, Signal, Volume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    /// `20 sin(n/40) + n^2/20000`
    X1,
    /// `atan((n - 500)/40) + n^2/20000`
    X2,
}

impl SignalKind {
    pub fn eval(self, n: f64) -> f64 {
        let drift = n * n / 20000.0;
        match self {
            Self::X1 => 20.0 * (n / 40.0).sin() + drift,
            Self::X2 => ((n - 500.0) / 40.0).atan() + drift,
        }
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "X1" | "x1" => Ok(Self::X1),
            "X2" | "x2" => Ok(Self::X2),
            other => Err(Error::Config(format!("unknown signal `{other}` (X1 or X2)"))),
        }
    }
}

impl fmt::Display for SignalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::X1 => "X1",
            Self::X2 => "X2",
        })
    }
}

/// Samples `which` at every integer in `range` (inclusive).
pub fn synth_signal(which: SignalKind, range: RangeInclusive<i64>) -> Signal {
    range.map(|n| which.eval(n as f64)).collect()
}

/// Parses `a..b` or `a..=b` as an inclusive integer range.
pub fn parse_range(s: &str) -> Result<RangeInclusive<i64>> {
    let bad = || Error::Config(format!("bad range `{s}` (expected a..b)"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let a: i64 = a.trim().parse().map_err(|_| bad())?;
    let b: i64 = b.trim().parse().map_err(|_| bad())?;
    if b < a {
        return Err(bad());
    }
    Ok(a..=b)
}

/// A synthetic image and the pixels that are edges by construction.
#[derive(Clone, Debug)]
pub struct Phantom {
    pub image: Image,
    pub edges: Mask,
}

/// A synthetic frame stack and the pixels that change at some point in it.
#[derive(Clone, Debug)]
pub struct PhantomSequence {
    pub frames: Volume,
    pub motion: Mask,
}

fn check_dims(h: usize, w: usize) -> Result<()> {
    if h == 0 || w == 0 {
        return Err(Error::Config(format!("degenerate phantom size {h}x{w}")));
    }
    Ok(())
}

fn column_edge(h: usize, w: usize, col: usize) -> Mask {
    Array2::from_shape_fn((h, w), |(_, c)| c == col)
}

/// Vertical step at column `col`: `lo` to the left, `hi` to the right.
/// Column `col` itself holds the midpoint, so the profile is odd about it.
pub fn step(h: usize, w: usize, col: usize, lo: f64, hi: f64) -> Result<Phantom> {
    check_dims(h, w)?;
    if col >= w {
        return Err(Error::Config(format!("edge column {col} outside width {w}")));
    }
    let mid = 0.5 * (lo + hi);
    let image = Array2::from_shape_fn((h, w), |(_, c)| match c.cmp(&col) {
        std::cmp::Ordering::Less => lo,
        std::cmp::Ordering::Equal => mid,
        std::cmp::Ordering::Greater => hi,
    });
    Ok(Phantom { image, edges: column_edge(h, w, col) })
}

/// Linear ramp from `lo` to `hi` across `width` columns centred on `col`
/// (`width` odd).
pub fn ramp(h: usize, w: usize, col: usize, width: usize, lo: f64, hi: f64) -> Result<Phantom> {
    check_dims(h, w)?;
    if width.is_multiple_of(2) || col < width / 2 || col + width / 2 >= w {
        return Err(Error::Config(format!(
            "ramp of width {width} at column {col} does not fit width {w}"
        )));
    }
    let half = (width / 2) as f64;
    let image = Array2::from_shape_fn((h, w), |(_, c)| {
        let d = c as f64 - col as f64;
        let t = ((d + half + 1.0) / (width as f64 + 1.0)).clamp(0.0, 1.0);
        lo + (hi - lo) * t
    });
    Ok(Phantom { image, edges: column_edge(h, w, col) })
}

/// Logistic edge `lo + (hi - lo) / (1 + exp(-(c - col)/width))`, symmetric
/// about column `col`.
pub fn sigmoid_edge(h: usize, w: usize, col: usize, width: f64, lo: f64, hi: f64) -> Result<Phantom> {
    check_dims(h, w)?;
    if !(width > 0.0) || col >= w {
        return Err(Error::Config(format!(
            "sigmoid edge needs width > 0 and column < {w}"
        )));
    }
    let image = Array2::from_shape_fn((h, w), |(_, c)| {
        let d = c as f64 - col as f64;
        lo + (hi - lo) / (1.0 + (-d / width).exp())
    });
    Ok(Phantom { image, edges: column_edge(h, w, col) })
}

/// Dark vertical stroke `thickness` pixels wide starting at column `col`, on
/// a bright background. The ground-truth edges are the stroke pixels.
pub fn text_stroke(
    h: usize,
    w: usize,
    col: usize,
    thickness: usize,
    stroke: f64,
    background: f64,
) -> Result<Phantom> {
    check_dims(h, w)?;
    if thickness == 0 || col + thickness > w {
        return Err(Error::Config(format!(
            "stroke [{col}, {}) does not fit width {w}",
            col + thickness
        )));
    }
    let inside = |c: usize| (col..col + thickness).contains(&c);
    let image = Array2::from_shape_fn((h, w), |(_, c)| if inside(c) { stroke } else { background });
    let edges = Array2::from_shape_fn((h, w), |(_, c)| inside(c));
    Ok(Phantom { image, edges })
}

/// Geometry of the moving-square phantom.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovingSquare {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub side: usize,
    /// Top-left corner in frame 0, `(row, col)`.
    pub origin: (usize, usize),
    /// Horizontal displacement per frame, in pixels (may be negative).
    pub velocity: i64,
    pub level: f64,
}

impl Default for MovingSquare {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            frames: 5,
            side: 16,
            origin: (24, 20),
            velocity: 2,
            level: 255.0,
        }
    }
}

/// Bright square translating horizontally over a black background. The
/// motion mask is the union of all square positions minus their
/// intersection: every pixel whose value changes at some frame.
pub fn moving_square(spec: &MovingSquare) -> Result<PhantomSequence> {
    let MovingSquare { height: h, width: w, frames, side, origin, velocity, level } = *spec;
    check_dims(h, w)?;
    if frames == 0 || side == 0 {
        return Err(Error::Config("moving square needs frames >= 1 and side >= 1".into()));
    }
    let last_shift = velocity * (frames as i64 - 1);
    let min_col = origin.1 as i64 + last_shift.min(0);
    let max_col = origin.1 as i64 + last_shift.max(0) + side as i64;
    if origin.0 + side > h || min_col < 0 || max_col > w as i64 {
        return Err(Error::Config("moving square leaves the frame".into()));
    }
    let covers = |t: usize, r: usize, c: usize| {
        let left = origin.1 as i64 + velocity * t as i64;
        (origin.0..origin.0 + side).contains(&r) && (left..left + side as i64).contains(&(c as i64))
    };
    let frames_v = Array3::from_shape_fn((frames, h, w), |(t, r, c)| if covers(t, r, c) { level } else { 0.0 });
    let motion = Array2::from_shape_fn((h, w), |(r, c)| {
        let hits = (0..frames).filter(|&t| covers(t, r, c)).count();
        hits > 0 && hits < frames
    });
    Ok(PhantomSequence { frames: frames_v, motion })
}

/// Geometry of the pendulum phantom: a bright disc on a string swinging
/// about a pivot near the top of the frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pendulum {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub length: f64,
    pub bob_radius: f64,
    /// Peak swing angle in radians.
    pub amplitude: f64,
    /// Frames per full swing.
    pub period: f64,
    pub level: f64,
}

impl Default for Pendulum {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            frames: 5,
            length: 40.0,
            bob_radius: 6.0,
            amplitude: 0.5,
            period: 20.0,
            level: 255.0,
        }
    }
}

pub fn pendulum(spec: &Pendulum) -> Result<PhantomSequence> {
    let Pendulum { height: h, width: w, frames, length, bob_radius, amplitude, period, level } = *spec;
    check_dims(h, w)?;
    if frames == 0 || !(period > 0.0) || !(bob_radius > 0.0) {
        return Err(Error::Config("pendulum needs frames >= 1, period > 0, radius > 0".into()));
    }
    let pivot = (4.0, (w as f64 - 1.0) / 2.0);
    let centre = |t: usize| {
        let phi = amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).cos();
        (pivot.0 + length * phi.cos(), pivot.1 + length * phi.sin())
    };
    let centres: Vec<(f64, f64)> = (0..frames).map(centre).collect();
    let inside = |t: usize, r: usize, c: usize| {
        let (cr, cc) = centres[t];
        let (dr, dc) = (r as f64 - cr, c as f64 - cc);
        dr * dr + dc * dc <= bob_radius * bob_radius
    };
    let frames_v = Array3::from_shape_fn((frames, h, w), |(t, r, c)| if inside(t, r, c) { level } else { 0.0 });
    let motion = Array2::from_shape_fn((h, w), |(r, c)| {
        let hits = (0..frames).filter(|&t| inside(t, r, c)).count();
        hits > 0 && hits < frames
    });
    Ok(PhantomSequence { frames: frames_v, motion })
}
