//! Absolute or percentile thresholds.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// A threshold given either as an absolute value or as a percentile of some
/// population of values (`p90`), resolved at detection time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Threshold {
    Absolute(f64),
    Percentile(f64),
}

impl Threshold {
    /// Resolves against `values` using the nearest-rank percentile.
    /// An empty population resolves a percentile to `+inf`.
    pub fn resolve(&self, values: impl IntoIterator<Item = f64>) -> f64 {
        match *self {
            Threshold::Absolute(v) => v,
            Threshold::Percentile(p) => {
                let mut sorted: Vec<f64> = values.into_iter().filter(|v| !v.is_nan()).collect();
                percentile_of(&mut sorted, p).unwrap_or(f64::INFINITY)
            }
        }
    }
}

/// Nearest-rank percentile: the value at sorted index `ceil(p/100 * n) - 1`.
pub fn percentile_of(values: &mut [f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    Some(values[rank.clamp(1, n) - 1])
}

impl FromStr for Threshold {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(p) = s.strip_prefix('p') {
            let p: f64 = p
                .parse()
                .map_err(|_| Error::Config(format!("bad percentile threshold `{s}`")))?;
            if !(0.0..=100.0).contains(&p) {
                return Err(Error::Config(format!("percentile out of range in `{s}`")));
            }
            return Ok(Threshold::Percentile(p));
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("bad threshold `{s}`")))?;
        if !(v >= 0.0) {
            return Err(Error::Config(format!("threshold must be non-negative, got `{s}`")));
        }
        Ok(Threshold::Absolute(v))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Absolute(v) => write!(f, "{v}"),
            Threshold::Percentile(p) => write!(f, "p{p}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("p90".parse::<Threshold>().unwrap(), Threshold::Percentile(90.0));
        assert_eq!("12.5".parse::<Threshold>().unwrap(), Threshold::Absolute(12.5));
        assert!("p120".parse::<Threshold>().is_err());
        assert!("-1".parse::<Threshold>().is_err());
        assert!("abc".parse::<Threshold>().is_err());
    }

    #[test]
    fn nearest_rank() {
        let values = (1..=10).map(f64::from);
        assert_eq!(Threshold::Percentile(90.0).resolve(values.clone()), 9.0);
        assert_eq!(Threshold::Percentile(50.0).resolve(values.clone()), 5.0);
        assert_eq!(Threshold::Percentile(0.0).resolve(values.clone()), 1.0);
        assert_eq!(Threshold::Percentile(100.0).resolve(values), 10.0);
        assert_eq!(Threshold::Percentile(50.0).resolve(std::iter::empty()), f64::INFINITY);
    }
}
