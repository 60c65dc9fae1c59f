//! Spatial datasets: synthetic generation and the `x,y,z` CSV format.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cholesky::cholesky_jittered;
use crate::covariance::{build_cov_matrix, check_distinct, CovarianceParams, Point};
use crate::error::{GeoError, Result};
use crate::scalar::Scalar;

/// Relative diagonal jitter (times σ²) applied when factorizing during synthesis.
pub const SYNTHESIS_JITTER: f64 = 1e-8;

/// Locations with one measurement each.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoDataset<T> {
    locations: Vec<Point<T>>,
    measurements: Vec<T>,
}

impl<T: Scalar> GeoDataset<T> {
    pub fn new(locations: Vec<Point<T>>, measurements: Vec<T>) -> Result<Self> {
        if locations.len() != measurements.len() {
            return Err(GeoError::DimensionMismatch(format!(
                "{} locations but {} measurements",
                locations.len(),
                measurements.len()
            )));
        }
        check_distinct(&locations)?;
        Ok(Self { locations, measurements })
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn locations(&self) -> &[Point<T>] {
        &self.locations
    }

    pub fn measurements(&self) -> &[T] {
        &self.measurements
    }

    /// Reads the `x,y,z` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| GeoError::Io(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y", "z"] {
            return Err(GeoError::Io(format!(
                "expected header x,y,z, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut locations = Vec::new();
        let mut measurements = Vec::new();
        for (line, rec) in rdr.deserialize::<CsvRow>().enumerate() {
            let rec = rec.map_err(|e| GeoError::Io(format!("row {}: {e}", line + 1)))?;
            locations.push(Point::new(T::lit(rec.x), T::lit(rec.y)));
            measurements.push(T::lit(rec.z));
        }
        Self::new(locations, measurements)
    }

    /// Writes the `x,y,z` CSV format with round-trip precision.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (p, z) in self.locations.iter().zip(&self.measurements) {
            w.serialize(CsvRow { x: p.x.to_f64_lossy(), y: p.y.to_f64_lossy(), z: z.to_f64_lossy() })
                .map_err(|e| GeoError::Io(e.to_string()))?;
        }
        if self.is_empty() {
            w.write_record(["x", "y", "z"]).map_err(|e| GeoError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| GeoError::Io(e.to_string()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    x: f64,
    y: f64,
    z: f64,
}

/// `n` distinct points drawn uniformly from the unit square.
pub fn uniform_locations<T: Scalar>(n: usize, rng: &mut impl Rng) -> Vec<Point<T>> {
    let mut out: Vec<Point<T>> = Vec::with_capacity(n);
    while out.len() < n {
        let p = Point::new(T::lit(rng.random::<f64>()), T::lit(rng.random::<f64>()));
        // Collisions are astronomically unlikely in f64 but not in f32.
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Sorts points along a Morton (Z-order) curve over the unit square.
///
/// Neighbouring indices then tend to be neighbouring points, which is what
/// makes off-diagonal covariance tiles numerically low-rank.
pub fn sort_morton<T: Scalar>(points: &mut [Point<T>]) {
    fn key<T: Scalar>(p: &Point<T>) -> u64 {
        let scale = f64::from(u32::MAX);
        let q = |v: T| (v.to_f64_lossy().clamp(0.0, 1.0) * scale) as u32;
        spread(q(p.x)) | (spread(q(p.y)) << 1)
    }
    fn spread(v: u32) -> u64 {
        let mut x = u64::from(v);
        x = (x | (x << 16)) & 0x0000_ffff_0000_ffff;
        x = (x | (x << 8)) & 0x00ff_00ff_00ff_00ff;
        x = (x | (x << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
        x = (x | (x << 2)) & 0x3333_3333_3333_3333;
        x = (x | (x << 1)) & 0x5555_5555_5555_5555;
        x
    }
    points.sort_by_cached_key(key);
}

/// `Z = L·e` for the given locations and standard-normal draws `e`.
///
/// Σ is factorized with [`SYNTHESIS_JITTER`]`·σ²` added to its diagonal.
pub fn synthesize_measurements<T: Scalar>(
    locations: &[Point<T>],
    params: &CovarianceParams<T>,
    noise: &[T],
) -> Result<Vec<T>> {
    if noise.len() != locations.len() {
        return Err(GeoError::DimensionMismatch(format!(
            "{} locations but {} noise draws",
            locations.len(),
            noise.len()
        )));
    }
    let sigma = build_cov_matrix(locations, params)?;
    let factor = cholesky_jittered(sigma.as_matrix(), T::lit(SYNTHESIS_JITTER) * params.sigma_sq)?;
    Ok(factor.mul_lower(noise))
}

/// Seeded synthetic Gaussian field: uniform locations, then `Z = L·e`.
///
/// Locations are returned in Morton order (see [`sort_morton`]). The
/// generator is ChaCha8, so a seed reproduces the same dataset on every
/// platform.
pub fn generate_synthetic<T: Scalar>(n: usize, params: &CovarianceParams<T>, seed: u64) -> Result<GeoDataset<T>> {
    if n == 0 {
        return Err(GeoError::Domain("n must be at least 1".into()));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut locations = uniform_locations(n, &mut rng);
    sort_morton(&mut locations);
    let noise: Vec<T> = (0..n).map(|_| T::lit(rng.sample::<f64, _>(StandardNormal))).collect();
    let z = synthesize_measurements(&locations, params, &noise)?;
    GeoDataset::new(locations, z)
}
