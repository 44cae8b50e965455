//! Points of the slit tangent bundle and deterministic sample sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Smallest admissible Euclidean norm of the fibre coordinate.
pub const SLIT_EPS: f64 = 1e-8;

/// A point `(x, y)` of `T_0 M` in induced coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, Error> {
        if x.len() != y.len() {
            return Err(Error::InvalidPoint(format!("base has {} coordinates but fibre has {}", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::InvalidPoint(format!("dimension {} < 2", x.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < SLIT_EPS {
            return Err(Error::InvalidPoint(format!("|y| = {norm:e} is below the slit threshold {SLIT_EPS:e}")));
        }
        Ok(PhasePoint { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn fibre_norm(&self) -> f64 {
        self.y.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// The point `(x, lambda * y)`.
    pub fn scaled(&self, lambda: f64) -> PhasePoint {
        PhasePoint { x: self.x.clone(), y: self.y.iter().map(|v| v * lambda).collect() }
    }

    /// Coordinates as one vector `(x, y)`.
    pub fn stacked(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn from_stacked(z: &[f64]) -> PhasePoint {
        let n = z.len() / 2;
        PhasePoint { x: z[..n].to_vec(), y: z[n..].to_vec() }
    }
}

/// Where base points may live.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Everywhere,
    /// Open Euclidean ball around the origin.
    Ball {
        radius: f64,
    },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Everywhere => true,
            Region::Ball { radius } => x.iter().map(|v| v * v).sum::<f64>() < radius * radius,
        }
    }
}

/// A sampling box in `x` plus the region where the metric is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x_min: Vec<f64>,
    pub x_max: Vec<f64>,
    pub region: Region,
}

impl Domain {
    pub fn cube(dim: usize, half_width: f64) -> Domain {
        Domain { x_min: vec![-half_width; dim], x_max: vec![half_width; dim], region: Region::Everywhere }
    }

    pub fn within_ball(mut self, radius: f64) -> Domain {
        self.region = Region::Ball { radius };
        self
    }

    pub fn dim(&self) -> usize {
        self.x_min.len()
    }

    /// Deterministic quasi-random sample of `count` slit points.
    pub fn sample(&self, count: usize, seed: u64) -> SampleSet {
        SampleSet::halton(self, count, seed)
    }
}

/// Fibre scale range used by the sampler.
pub const FIBRE_SCALE: (f64, f64) = (0.5, 2.0);

const PRIMES: [u32; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut k: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while k > 0 {
        r += (k % b) as f64 * f;
        k /= b;
        f *= inv;
    }
    r
}

/// Quasi-random points: Halton sequence with a seeded Cranley-Patterson
/// shift. `x` fills the sampling box, `y` is a direction on the sphere
/// scaled by a factor in [`FIBRE_SCALE`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub seed: u64,
    pub points: Vec<PhasePoint>,
}

impl SampleSet {
    pub fn halton(domain: &Domain, count: usize, seed: u64) -> SampleSet {
        let n = domain.dim();
        let coords = 2 * n + 1;
        assert!(coords <= PRIMES.len(), "dimension {n} too large for the sampler");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..coords).map(|_| rng.gen::<f64>()).collect();
        let mut points = Vec::with_capacity(count);
        let mut k: u64 = 1;
        while points.len() < count {
            let u: Vec<f64> = (0..coords).map(|d| (radical_inverse(k, PRIMES[d]) + shift[d]).fract()).collect();
            k += 1;
            let x: Vec<f64> = (0..n).map(|i| domain.x_min[i] + u[i] * (domain.x_max[i] - domain.x_min[i])).collect();
            if !domain.region.contains(&x) {
                continue;
            }
            let dir: Vec<f64> = (0..n).map(|i| 2.0 * u[n + i] - 1.0).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 0.1 {
                continue;
            }
            let lambda = FIBRE_SCALE.0 + u[2 * n] * (FIBRE_SCALE.1 - FIBRE_SCALE.0);
            let y = dir.iter().map(|v| v / norm * lambda).collect();
            points.push(PhasePoint { x, y });
        }
        SampleSet { seed, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PhasePoint> {
        self.points.iter()
    }
}

impl std::ops::Deref for SampleSet {
    type Target = [PhasePoint];
    fn deref(&self) -> &[PhasePoint] {
        &self.points
    }
}
