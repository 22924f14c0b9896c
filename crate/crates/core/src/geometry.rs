//! Axis-aligned boxes with open or periodic boundary.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point in `d`-dimensional space. Serializes as a bare JSON array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// The box `[0, L_1] x ... x [0, L_d]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RegionRepr", into = "RegionRepr")]
pub struct Region {
    sides: Vec<f64>,
    boundary: Boundary,
}

#[derive(Serialize, Deserialize)]
struct RegionRepr {
    sides: Vec<f64>,
    #[serde(default)]
    boundary: Boundary,
}

impl TryFrom<RegionRepr> for Region {
    type Error = Error;

    fn try_from(r: RegionRepr) -> Result<Self> {
        Region::new(r.sides, r.boundary)
    }
}

impl From<Region> for RegionRepr {
    fn from(r: Region) -> Self {
        RegionRepr {
            sides: r.sides,
            boundary: r.boundary,
        }
    }
}

impl Region {
    pub fn new(sides: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if sides.is_empty() {
            return Err(invalid("sides", "a region needs at least one dimension"));
        }
        if let Some(bad) = sides.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(invalid("sides", format!("side length {bad} is not positive")));
        }
        Ok(Region { sides, boundary })
    }

    /// Open box `[0, side]^dim`.
    pub fn cube(dim: usize, side: f64) -> Result<Self> {
        Region::new(vec![side; dim], Boundary::Open)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn volume(&self) -> f64 {
        self.sides.iter().product()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim() && p.0.iter().zip(&self.sides).all(|(x, l)| (0.0..=*l).contains(x))
    }

    /// Whether `other`, interpreted as the box `[lo, lo + sides]`, lies
    /// inside this region.
    pub fn contains_box(&self, lo: &Point, sides: &[f64]) -> bool {
        lo.dim() == self.dim()
            && sides.len() == self.dim()
            && lo
                .0
                .iter()
                .zip(sides)
                .zip(&self.sides)
                .all(|((a, s), l)| *a >= 0.0 && *s >= 0.0 && a + s <= *l)
    }

    fn check_dim(&self, p: &Point) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: p.dim(),
            });
        }
        Ok(())
    }

    /// Euclidean distance, with minimum-image convention for periodic boxes.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_dim(p)?;
        self.check_dim(q)?;
        Ok(self.distance_unchecked(&p.0, &q.0))
    }

    /// Distance between raw coordinate slices of the region's dimension.
    #[inline]
    pub fn distance_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        self.distance_sq_unchecked(p, q).sqrt()
    }

    #[inline]
    pub(crate) fn distance_sq_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.boundary {
            Boundary::Open => p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(),
            Boundary::Periodic => p
                .iter()
                .zip(q)
                .zip(&self.sides)
                .map(|((a, b), l)| {
                    let d = (a - b).abs();
                    let d = d.min(l - d).max(0.0);
                    d * d
                })
                .sum(),
        }
    }

    /// Uniform point; each coordinate independent on `[0, L_i)`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point(self.sides.iter().map(|l| rng.random::<f64>() * l).collect())
    }
}
