//! Discrete TGD operators.
//!
//! Every operator is a dense weight grid with odd extent per axis. Offsets are
//! measured from the centre; for rank-2 grids the index is `[r + v, r + u]`
//! where `u` runs along columns (x, rightwards) and `v` along rows (y,
//! downwards). Rank-3 grids are indexed `[t, y, x]`.
//!
//! Sign convention: weights are laid out so that *true* convolution (kernel
//! flipped, see [`crate::conv`]) of an intensity rising along the operator's
//! direction gives a positive first-order response. Concretely a first-order
//! 1D operator is positive on the left half and negative on the right.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, Array3, ArrayD, Axis as NdAxis, IxDyn};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    Gaussian,
    Exponential,
    Linear,
}

impl FromStr for ProfileKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Self::Gaussian),
            "exponential" | "exp" => Ok(Self::Exponential),
            "linear" => Ok(Self::Linear),
            other => Err(Error::Config(format!(
                "unknown profile `{other}` (expected gaussian, exponential or linear)"
            ))),
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaussian => "gaussian",
            Self::Exponential => "exponential",
            Self::Linear => "linear",
        })
    }
}

/// A positive, monotonically decaying kernel function sampled at integer
/// offsets `0..=radius`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelProfile {
    kind: ProfileKind,
    radius: usize,
    shape: f64,
}

impl KernelProfile {
    /// Profile with the default shape parameter: Gaussian `sigma = r/3`,
    /// exponential `alpha = 3/r`. Linear ignores the shape.
    pub fn new(kind: ProfileKind, radius: usize) -> Self {
        let r = radius.max(1) as f64;
        let shape = match kind {
            ProfileKind::Gaussian => r / 3.0,
            ProfileKind::Exponential => 3.0 / r,
            ProfileKind::Linear => 1.0,
        };
        Self {
            kind,
            radius,
            shape,
        }
    }

    pub fn gaussian(radius: usize) -> Self {
        Self::new(ProfileKind::Gaussian, radius)
    }

    pub fn exponential(radius: usize) -> Self {
        Self::new(ProfileKind::Exponential, radius)
    }

    pub fn linear(radius: usize) -> Self {
        Self::new(ProfileKind::Linear, radius)
    }

    /// Overrides the Gaussian sigma or exponential decay rate.
    pub fn with_shape(mut self, shape: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::Config(format!(
                "profile shape parameter must be positive and finite, got {shape}"
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn kind(&self) -> ProfileKind {
        self.kind
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Kernel value at integer offset `d`.
    pub fn value(&self, d: i64) -> Result<f64> {
        if d.unsigned_abs() as usize > self.radius {
            return Err(Error::OutOfRange {
                offset: d,
                radius: self.radius,
            });
        }
        Ok(self.eval(d.unsigned_abs() as usize))
    }

    fn eval(&self, d: usize) -> f64 {
        let d = d as f64;
        match self.kind {
            ProfileKind::Gaussian => (-(d * d) / (2.0 * self.shape * self.shape)).exp(),
            ProfileKind::Exponential => (-self.shape * d).exp(),
            ProfileKind::Linear => self.radius as f64 + 1.0 - d,
        }
    }

    /// `k(1..=r)` as a vector indexed from 0.
    fn tail(&self) -> Vec<f64> {
        (1..=self.radius).map(|d| self.eval(d)).collect()
    }

    /// Symmetric smoothing profile `s(j) = k(|j|) / sum k`, `j = -r..=r`.
    fn smoothing(&self) -> Vec<f64> {
        let r = self.radius as i64;
        let raw: Vec<f64> = (-r..=r).map(|j| self.eval(j.unsigned_abs() as usize)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }

    fn require_radius(&self) -> Result<usize> {
        if self.radius == 0 {
            return Err(Error::InvalidOperator(
                "operator radius must be at least 1".into(),
            ));
        }
        Ok(self.radius)
    }
}

/// Free-function form of [`KernelProfile::value`].
pub fn profile_value(profile: &KernelProfile, d: i64) -> Result<f64> {
    profile.value(d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Order {
    First,
    Second,
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::First => "first",
            Self::Second => "second",
        })
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "1" => Ok(Self::First),
            "second" | "2" => Ok(Self::Second),
            other => Err(Error::Config(format!("unknown order `{other}`"))),
        }
    }
}

/// One of the four canonical directions, measured from +x towards +y (down).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Angle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl Angle {
    pub const ALL: [Angle; 4] = [Angle::Deg0, Angle::Deg45, Angle::Deg90, Angle::Deg135];

    pub fn degrees(self) -> u32 {
        match self {
            Self::Deg0 => 0,
            Self::Deg45 => 45,
            Self::Deg90 => 90,
            Self::Deg135 => 135,
        }
    }

    pub fn radians(self) -> f64 {
        f64::from(self.degrees()).to_radians()
    }

    pub fn from_degrees(deg: i64) -> Result<Self> {
        match deg {
            0 => Ok(Self::Deg0),
            45 => Ok(Self::Deg45),
            90 => Ok(Self::Deg90),
            135 => Ok(Self::Deg135),
            other => Err(Error::UnsupportedDirection(format!("{other} degrees"))),
        }
    }

    /// Integer projection `(cu, cv)` and scale such that the projection of
    /// offset `(u, v)` onto the unit direction is `(cu*u + cv*v) * scale`.
    fn projection(self) -> (i64, i64, f64) {
        match self {
            Self::Deg0 => (1, 0, 1.0),
            Self::Deg45 => (1, 1, std::f64::consts::FRAC_1_SQRT_2),
            Self::Deg90 => (0, 1, 1.0),
            Self::Deg135 => (-1, 1, std::f64::consts::FRAC_1_SQRT_2),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim_end_matches(['\'', '°']);
        let deg: i64 = trimmed
            .parse()
            .map_err(|_| Error::UnsupportedDirection(s.to_string()))?;
        Self::from_degrees(deg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    T,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Self::X),
            "y" | "Y" => Ok(Self::Y),
            "t" | "T" => Ok(Self::T),
            other => Err(Error::UnsupportedDirection(format!("axis `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Angle(Angle),
    Axis(Axis),
    Laplacian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Constructed,
    Preset,
    /// Classical kernels (Gaussian derivative, LoG) kept for comparison.
    Baseline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Construction {
    Rotational,
    Orthogonal,
}

impl FromStr for Construction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rotational" => Ok(Self::Rotational),
            "orthogonal" => Ok(Self::Orthogonal),
            other => Err(Error::Config(format!("unknown construction `{other}`"))),
        }
    }
}

/// A discrete difference stencil.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    weights: ArrayD<f64>,
    order: Order,
    tag: Option<Tag>,
    provenance: Provenance,
}

impl Operator {
    /// Wraps an arbitrary weight grid. Rank must be 1..=3 with odd extents.
    pub fn from_weights(weights: ArrayD<f64>, order: Order) -> Result<Self> {
        let rank = weights.ndim();
        if !(1..=3).contains(&rank) {
            return Err(Error::InvalidOperator(format!(
                "rank must be 1, 2 or 3, got {rank}"
            )));
        }
        if let Some(e) = weights.shape().iter().find(|&&e| e % 2 == 0) {
            return Err(Error::InvalidOperator(format!(
                "extents must be odd, got {e} in {:?}",
                weights.shape()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidOperator("weights must be finite".into()));
        }
        Ok(Self {
            weights,
            order,
            tag: None,
            provenance: Provenance::Constructed,
        })
    }

    pub(crate) fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tag = Some(tag);
        self
    }

    /// Tags a rank-1 operator with the axis it acts along when applied to a
    /// higher-rank array.
    pub fn along(self, axis: Axis) -> Result<Self> {
        if self.rank() != 1 {
            return Err(Error::InvalidOperator(format!(
                "only rank-1 operators take an axis tag, got rank {}",
                self.rank()
            )));
        }
        Ok(self.with_tag(Tag::Axis(axis)))
    }

    pub fn weights(&self) -> &ArrayD<f64> {
        &self.weights
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn tag(&self) -> Option<Tag> {
        self.tag
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn rank(&self) -> usize {
        self.weights.ndim()
    }

    pub fn extent(&self) -> &[usize] {
        self.weights.shape()
    }

    /// Largest half-width over all axes.
    pub fn radius(&self) -> usize {
        self.extent().iter().map(|e| e / 2).max().unwrap_or(0)
    }

    pub fn sum(&self) -> f64 {
        self.weights.sum()
    }

    /// Weight at `offset` from the centre, `None` outside the support.
    pub fn at(&self, offset: &[i64]) -> Option<f64> {
        if offset.len() != self.rank() {
            return None;
        }
        let mut idx = Vec::with_capacity(offset.len());
        for (&o, &e) in offset.iter().zip(self.extent()) {
            let i = o + (e / 2) as i64;
            if i < 0 || i >= e as i64 {
                return None;
            }
            idx.push(i as usize);
        }
        Some(self.weights[IxDyn(&idx)])
    }

    /// Quarter turn of a rank-2 operator, mapping direction +x onto +y.
    pub fn rotate90(&self) -> Result<Self> {
        if self.rank() != 2 {
            return Err(Error::InvalidOperator(
                "rotate90 needs a rank-2 operator".into(),
            ));
        }
        let (h, w) = (self.extent()[0], self.extent()[1]);
        if h != w {
            return Err(Error::InvalidOperator(
                "rotate90 needs a square operator".into(),
            ));
        }
        let n = h - 1;
        let src = &self.weights;
        let rotated = Array2::from_shape_fn((h, w), |(i, j)| src[[n - j, i]]);
        let tag = self.tag.map(|t| match t {
            Tag::Angle(a) => Tag::Angle(match a {
                Angle::Deg0 => Angle::Deg90,
                Angle::Deg45 => Angle::Deg135,
                Angle::Deg90 => Angle::Deg0,
                Angle::Deg135 => Angle::Deg45,
            }),
            other => other,
        });
        Ok(Self {
            weights: rotated.into_dyn(),
            order: self.order,
            tag,
            provenance: self.provenance,
        })
    }
}

fn first_order_taps(profile: &KernelProfile) -> Result<Vec<f64>> {
    let r = profile.require_radius()?;
    let tail = profile.tail();
    let total: f64 = tail.iter().sum();
    let mut w = vec![0.0; 2 * r + 1];
    for (i, k) in tail.iter().enumerate() {
        let v = k / total;
        w[r - 1 - i] = v;
        w[r + 1 + i] = -v;
    }
    Ok(w)
}

fn second_order_taps(profile: &KernelProfile) -> Result<Vec<f64>> {
    let r = profile.require_radius()?;
    let tail = profile.tail();
    let total: f64 = tail.iter().sum();
    let mut w = vec![0.0; 2 * r + 1];
    for (i, k) in tail.iter().enumerate() {
        let v = k / total;
        w[r - 1 - i] = v;
        w[r + 1 + i] = v;
    }
    w[r] = -2.0;
    Ok(w)
}

/// First-order 1D operator: `w(-i) = k(i)`, `w(i) = -k(i)`, `w(0) = 0`,
/// scaled so the positive half sums to one.
pub fn build_first_order_1d(profile: &KernelProfile) -> Result<Operator> {
    let taps = first_order_taps(profile)?;
    Operator::from_weights(Array1::from(taps).into_dyn(), Order::First)
}

/// Second-order 1D operator: `w(±i) = k(i)`, centre `-2 sum k`, scaled so the
/// centre is `-2`.
pub fn build_second_order_1d(profile: &KernelProfile) -> Result<Operator> {
    let taps = second_order_taps(profile)?;
    Operator::from_weights(Array1::from(taps).into_dyn(), Order::Second)
}

/// Directional 2D operator for one of the four canonical angles.
pub fn build_directional_2d(
    profile: &KernelProfile,
    order: Order,
    angle: Angle,
    method: Construction,
) -> Result<Operator> {
    let base = match (method, angle) {
        (Construction::Rotational, Angle::Deg0 | Angle::Deg90) => {
            rotational(profile, order, Angle::Deg0)?
        }
        (Construction::Rotational, Angle::Deg45 | Angle::Deg135) => {
            rotational(profile, order, Angle::Deg45)?
        }
        (Construction::Orthogonal, Angle::Deg0 | Angle::Deg90) => orthogonal_axis(profile, order)?,
        (Construction::Orthogonal, Angle::Deg45 | Angle::Deg135) => {
            orthogonal_diagonal(profile, order)?
        }
    };
    let base = Operator::from_weights(base.into_dyn(), order)?;
    let base = base.with_tag(Tag::Angle(match angle {
        Angle::Deg0 | Angle::Deg90 => Angle::Deg0,
        Angle::Deg45 | Angle::Deg135 => Angle::Deg45,
    }));
    // 90° and 135° are exact index rotations of 0° and 45°.
    match angle {
        Angle::Deg0 | Angle::Deg45 => Ok(base),
        Angle::Deg90 | Angle::Deg135 => base.rotate90(),
    }
}

/// Radial profile on the nearest integer ring times the cosine of the angle
/// to the operator direction.
fn rotational(profile: &KernelProfile, order: Order, angle: Angle) -> Result<Array2<f64>> {
    let r = profile.require_radius()?;
    let ri = r as i64;
    let n = 2 * r + 1;
    let (cu, cv, scale) = angle.projection();
    let mut w = Array2::<f64>::zeros((n, n));
    for v in -ri..=ri {
        for u in -ri..=ri {
            if u == 0 && v == 0 {
                continue;
            }
            let rho = ((u * u + v * v) as f64).sqrt();
            let ring = rho.round() as usize;
            if ring > r {
                continue;
            }
            let proj = (cu * u + cv * v) as f64 * scale;
            let cos = proj / rho;
            let k = profile.eval(ring);
            w[[(v + ri) as usize, (u + ri) as usize]] = match order {
                Order::First => -(k * cos),
                Order::Second => k * cos.abs(),
            };
        }
    }
    match order {
        Order::First => normalize_first(&mut w),
        Order::Second => normalize_second_center(&mut w, r),
    }
    Ok(w)
}

/// Separable `t(u) * s(v)` (first order) or `R(u) * s(v)` (second order).
fn orthogonal_axis(profile: &KernelProfile, order: Order) -> Result<Array2<f64>> {
    let taps = match order {
        Order::First => first_order_taps(profile)?,
        Order::Second => second_order_taps(profile)?,
    };
    let smooth = profile.smoothing();
    let n = taps.len();
    Ok(Array2::from_shape_fn((n, n), |(i, j)| taps[j] * smooth[i]))
}

/// The axis-aligned operator placed on the diagonal lattice:
/// `(a, b) -> (u, v) = (a - b, a + b)`, trimmed to the square support.
fn orthogonal_diagonal(profile: &KernelProfile, order: Order) -> Result<Array2<f64>> {
    let axis = orthogonal_axis(profile, order)?;
    let r = profile.radius() as i64;
    let n = axis.nrows();
    let mut w = Array2::<f64>::zeros((n, n));
    for b in -r..=r {
        for a in -r..=r {
            let (u, v) = (a - b, a + b);
            if u.abs() > r || v.abs() > r {
                continue;
            }
            w[[(v + r) as usize, (u + r) as usize]] = axis[[(b + r) as usize, (a + r) as usize]];
        }
    }
    match order {
        Order::First => normalize_first(&mut w),
        Order::Second => {
            // Trimming only removes positive weights; scale the remaining
            // positives back up to balance the (untouched) negative part.
            let neg: f64 = w.iter().filter(|&&x| x < 0.0).sum();
            let pos: f64 = w.iter().filter(|&&x| x > 0.0).sum();
            let gain = -neg / pos;
            w.mapv_inplace(|x| if x > 0.0 { x * gain } else { x });
        }
    }
    Ok(w)
}

fn normalize_first<D: ndarray::Dimension>(w: &mut ndarray::Array<f64, D>) {
    let pos: f64 = w.iter().filter(|&&x| x > 0.0).sum();
    if pos > 0.0 {
        w.mapv_inplace(|x| x / pos);
    }
}

/// Sets the centre to minus the off-centre total, then scales to centre -2.
fn normalize_second_center(w: &mut Array2<f64>, r: usize) {
    w[[r, r]] = 0.0;
    let pos: f64 = w.sum();
    let gain = 2.0 / pos;
    w.mapv_inplace(|x| x * gain);
    w[[r, r]] = -2.0;
}

/// Laplace-of-TGD operator: radial profile on integer rings, negative only at
/// the centre, normalised so the centre is `-2`.
pub fn build_lot_2d(profile: &KernelProfile) -> Result<Operator> {
    let r = profile.require_radius()?;
    let ri = r as i64;
    let n = 2 * r + 1;
    let mut w = Array2::<f64>::zeros((n, n));
    for v in -ri..=ri {
        for u in -ri..=ri {
            if u == 0 && v == 0 {
                continue;
            }
            let ring = ((u * u + v * v) as f64).sqrt().round() as usize;
            if ring <= r {
                w[[(v + ri) as usize, (u + ri) as usize]] = profile.eval(ring);
            }
        }
    }
    normalize_second_center(&mut w, r);
    Ok(Operator::from_weights(w.into_dyn(), Order::Second)?.with_tag(Tag::Laplacian))
}

/// Separable 3D first-order operator on a `[t, y, x]` grid: the 1D first-order
/// operator along `axis`, the normalised smoothing profile along the others.
pub fn build_first_order_3d(profile: &KernelProfile, axis: Axis) -> Result<Operator> {
    let taps = first_order_taps(profile)?;
    let smooth = profile.smoothing();
    let n = taps.len();
    let w = Array3::from_shape_fn((n, n, n), |(t, y, x)| match axis {
        Axis::X => taps[x] * smooth[y] * smooth[t],
        Axis::Y => taps[y] * smooth[x] * smooth[t],
        Axis::T => taps[t] * smooth[y] * smooth[x],
    });
    Ok(Operator::from_weights(w.into_dyn(), Order::First)?.with_tag(Tag::Axis(axis)))
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 2] = ["T_Gaussian_15", "R_Gaussian_15"];

/// The two fixed 15-tap Gaussian operators, weights verbatim.
///
/// `R_Gaussian_15` sums to `-4/178`, not zero; it is kept as published.
pub fn preset(name: &str) -> Result<Operator> {
    const T: [i32; 15] = [1, 3, 8, 18, 32, 50, 64, 0, -64, -50, -32, -18, -8, -3, -1];
    const R: [i32; 15] = [1, 3, 8, 18, 32, 50, 64, -356, 64, 50, 32, 18, 8, 3, 1];
    let (taps, scale, order) = match name {
        "T_Gaussian_15" => (&T, 131.0, Order::First),
        "R_Gaussian_15" => (&R, 178.0, Order::Second),
        other => return Err(Error::NotFound(other.to_string())),
    };
    let w: Array1<f64> = taps.iter().map(|&n| f64::from(n) / scale).collect();
    Ok(Operator::from_weights(w.into_dyn(), order)?.with_provenance(Provenance::Preset))
}

/// Sum of the weights over the leading axis; collapses a rank-3 operator onto
/// its spatial plane.
pub fn collapse_time(op: &Operator) -> Result<Operator> {
    if op.rank() != 3 {
        return Err(Error::InvalidOperator(
            "collapse_time needs a rank-3 operator".into(),
        ));
    }
    let collapsed = op.weights().sum_axis(NdAxis(0));
    Operator::from_weights(collapsed, op.order())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn taps(op: &Operator) -> Vec<f64> {
        op.weights().iter().copied().collect()
    }

    #[test]
    fn linear_profile_values() {
        let p = KernelProfile::linear(2);
        assert_eq!(p.value(0).unwrap(), 3.0);
        assert_eq!(p.value(2).unwrap(), 1.0);
        assert_eq!(p.value(-2).unwrap(), 1.0);
    }

    #[test]
    fn gaussian_profile_is_one_at_centre() {
        let p = KernelProfile::gaussian(3).with_shape(1.0).unwrap();
        assert_eq!(p.value(0).unwrap(), 1.0);
    }

    #[test]
    fn profile_out_of_range() {
        let p = KernelProfile::linear(2);
        assert!(matches!(p.value(3), Err(Error::OutOfRange { offset: 3, radius: 2 })));
    }

    #[test]
    fn bad_shape_rejected() {
        assert!(KernelProfile::gaussian(3).with_shape(0.0).is_err());
        assert!(KernelProfile::gaussian(3).with_shape(f64::NAN).is_err());
    }

    #[test]
    fn first_order_linear_r2() {
        let op = build_first_order_1d(&KernelProfile::linear(2)).unwrap();
        let expected = [1.0 / 3.0, 2.0 / 3.0, 0.0, -2.0 / 3.0, -1.0 / 3.0];
        for (w, e) in taps(&op).iter().zip(expected) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(op.sum(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn second_order_linear_r2() {
        let op = build_second_order_1d(&KernelProfile::linear(2)).unwrap();
        let expected = [1.0 / 3.0, 2.0 / 3.0, -2.0, 2.0 / 3.0, 1.0 / 3.0];
        for (w, e) in taps(&op).iter().zip(expected) {
            assert_abs_diff_eq!(*w, e, epsilon = 1e-15);
        }
        let negatives: Vec<_> = taps(&op).iter().enumerate().filter(|(_, &w)| w < 0.0).map(|(i, _)| i).collect();
        assert_eq!(negatives, vec![2]);
    }

    #[test]
    fn radius_zero_is_invalid() {
        let p = KernelProfile::linear(0);
        assert!(matches!(build_first_order_1d(&p), Err(Error::InvalidOperator(_))));
        assert!(matches!(build_second_order_1d(&p), Err(Error::InvalidOperator(_))));
        assert!(matches!(build_lot_2d(&p), Err(Error::InvalidOperator(_))));
    }

    #[test]
    fn presets_verbatim() {
        let t = preset("T_Gaussian_15").unwrap();
        let expected = [1, 3, 8, 18, 32, 50, 64, 0, -64, -50, -32, -18, -8, -3, -1];
        for (w, n) in taps(&t).iter().zip(expected) {
            assert_eq!(*w, f64::from(n) / 131.0);
        }
        assert_eq!(t.provenance(), Provenance::Preset);
        assert_eq!(t.order(), Order::First);

        let r = preset("R_Gaussian_15").unwrap();
        assert_eq!(r.extent(), &[15]);
        assert_eq!(r.at(&[0]), Some(-356.0 / 178.0));
        assert_abs_diff_eq!(r.sum(), -4.0 / 178.0, epsilon = 1e-15);
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(preset("bogus"), Err(Error::NotFound(_))));
    }

    #[test]
    fn orthogonal_first_linear_r1() {
        let op = build_directional_2d(
            &KernelProfile::linear(1),
            Order::First,
            Angle::Deg0,
            Construction::Orthogonal,
        )
        .unwrap();
        let s = [0.25, 0.5, 0.25];
        let t = [1.0, 0.0, -1.0];
        for v in 0..3 {
            for u in 0..3 {
                assert_abs_diff_eq!(op.weights()[[v, u]], t[u] * s[v], epsilon = 1e-15);
            }
        }
        assert_abs_diff_eq!(op.sum(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn orthogonal_first_diagonal_linear_r1() {
        let op = build_directional_2d(
            &KernelProfile::linear(1),
            Order::First,
            Angle::Deg45,
            Construction::Orthogonal,
        )
        .unwrap();
        // Only the (±1, ±1) diagonal survives the trim; renormalised to ±1.
        assert_eq!(op.at(&[-1, -1]), Some(1.0));
        assert_eq!(op.at(&[1, 1]), Some(-1.0));
        assert_eq!(op.weights().iter().filter(|w| **w != 0.0).count(), 2);
    }

    #[test]
    fn lot_linear_r1() {
        let op = build_lot_2d(&KernelProfile::linear(1)).unwrap();
        for v in -1..=1i64 {
            for u in -1..=1i64 {
                let w = op.at(&[v, u]).unwrap();
                if u == 0 && v == 0 {
                    assert_eq!(w, -2.0);
                } else {
                    assert_abs_diff_eq!(w, 0.25, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn rotational_sign_layout() {
        let op = build_directional_2d(
            &KernelProfile::gaussian(7),
            Order::First,
            Angle::Deg0,
            Construction::Rotational,
        )
        .unwrap();
        for v in -7..=7i64 {
            for u in -7..=7i64 {
                let w = op.at(&[v, u]).unwrap();
                let ring = (((u * u + v * v) as f64).sqrt()).round() as i64;
                if u == 0 || ring > 7 {
                    assert_eq!(w, 0.0, "({u},{v})");
                } else if u < 0 {
                    assert!(w > 0.0, "({u},{v})");
                } else {
                    assert!(w < 0.0, "({u},{v})");
                }
            }
        }
    }

    #[test]
    fn rotation_maps_directions() {
        let p = KernelProfile::exponential(4);
        for method in [Construction::Rotational, Construction::Orthogonal] {
            for order in [Order::First, Order::Second] {
                let d0 = build_directional_2d(&p, order, Angle::Deg0, method).unwrap();
                let d45 = build_directional_2d(&p, order, Angle::Deg45, method).unwrap();
                let d90 = build_directional_2d(&p, order, Angle::Deg90, method).unwrap();
                let d135 = build_directional_2d(&p, order, Angle::Deg135, method).unwrap();
                assert_eq!(d0.rotate90().unwrap().weights(), d90.weights());
                assert_eq!(d45.rotate90().unwrap().weights(), d135.weights());
                assert_eq!(d90.tag(), Some(Tag::Angle(Angle::Deg90)));
            }
        }
    }

    #[test]
    fn axis_permutation_3d() {
        let p = KernelProfile::gaussian(2);
        let x = build_first_order_3d(&p, Axis::X).unwrap();
        let y = build_first_order_3d(&p, Axis::Y).unwrap();
        let xw = x.weights().view().permuted_axes(IxDyn(&[0, 2, 1]));
        assert_eq!(xw, y.weights().view());
    }

    #[test]
    fn linear_3d_is_separable_product() {
        let op = build_first_order_3d(&KernelProfile::linear(1), Axis::X).unwrap();
        let t = [1.0, 0.0, -1.0];
        let s = [0.25, 0.5, 0.25];
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    assert_abs_diff_eq!(op.weights()[[a, b, c]], t[c] * s[b] * s[a], epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn angle_parsing() {
        assert_eq!("45'".parse::<Angle>().unwrap(), Angle::Deg45);
        assert_eq!("135".parse::<Angle>().unwrap(), Angle::Deg135);
        assert!(matches!("30".parse::<Angle>(), Err(Error::UnsupportedDirection(_))));
    }

    #[test]
    fn along_requires_rank_one() {
        let op = build_lot_2d(&KernelProfile::gaussian(2)).unwrap();
        assert!(op.along(Axis::T).is_err());
    }
}
