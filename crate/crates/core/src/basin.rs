//! Basin membership by orbit iteration, the exhaustion index, and rasters
//! of real 2-D slices through ℂ².

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autoseq::{verify_uniform_bounds, MapSequence, SequenceSpec};
use crate::error::{Error, Result};
use crate::point::{self, Point};

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DIVERGENCE_CEILING: f64 = 1e8;
pub const FALLBACK_RADIUS: f64 = 0.5;
/// Raster value for pixels whose orbit never entered the ball.
pub const NON_MEMBER: i64 = -1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitResult {
    pub member: bool,
    pub entry_index: Option<usize>,
    pub final_norm: f64,
    pub iterations_used: usize,
    /// Orbit crossed the divergence ceiling or overflowed.
    pub diverged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitOptions {
    pub max_iter: usize,
    pub radius: f64,
    pub ceiling: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self { max_iter: DEFAULT_MAX_ITER, radius: FALLBACK_RADIUS, ceiling: DIVERGENCE_CEILING }
    }
}

impl OrbitOptions {
    pub fn new(max_iter: usize, radius: f64) -> Self {
        Self { max_iter, radius, ..Self::default() }
    }
}

/// Iterate `f_{t-1} ∘ ⋯ ∘ f_0(p)` until it enters the ball of the given
/// radius, crosses the ceiling, or `max_iter` maps have been applied.
pub fn orbit(seq: &impl MapSequence, p: &Point, opts: &OrbitOptions) -> OrbitResult {
    let mut x = *p;
    let mut nrm = point::norm(&x);
    if nrm < opts.radius {
        return OrbitResult {
            member: true,
            entry_index: Some(0),
            final_norm: nrm,
            iterations_used: 0,
            diverged: false,
        };
    }
    for t in 0..opts.max_iter {
        x = seq.apply(t, &x);
        nrm = point::norm(&x);
        if !nrm.is_finite() || nrm > opts.ceiling {
            return OrbitResult {
                member: false,
                entry_index: None,
                final_norm: nrm,
                iterations_used: t + 1,
                diverged: true,
            };
        }
        if nrm < opts.radius {
            return OrbitResult {
                member: true,
                entry_index: Some(t + 1),
                final_norm: nrm,
                iterations_used: t + 1,
                diverged: false,
            };
        }
    }
    OrbitResult { member: false, entry_index: None, final_norm: nrm, iterations_used: opts.max_iter, diverged: false }
}

/// `Some(n)` with `p ∈ U_m` exactly for `m >= n`.
pub fn exhaustion_index(seq: &impl MapSequence, p: &Point, opts: &OrbitOptions) -> Option<usize> {
    orbit(seq, p, opts).entry_index
}

/// The composed images `x_0 = p, x_1, …, x_steps`.
pub fn orbit_trace(seq: &impl MapSequence, p: &Point, steps: usize) -> Vec<Point> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*p);
    for t in 0..steps {
        let next = seq.apply(t, &out[t]);
        out.push(next);
    }
    out
}

/// Membership radius: the largest sampled radius without uniform-bound
/// violations over the first `n_check` steps, else [`FALLBACK_RADIUS`].
pub fn default_radius(spec: &SequenceSpec, n_check: usize) -> f64 {
    let n = spec.period().map_or(n_check, |p| p - 1);
    verify_uniform_bounds(spec, n, 64).largest_clean_radius.unwrap_or(FALLBACK_RADIUS)
}

/// Affine embedding of a real `width × height` grid into ℂ².
///
/// Pixel `(x, y)` maps to `origin + u·dir_u + v·dir_v`, with `u, v` at pixel
/// centers, `u` increasing to the right and `v` increasing upwards.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub origin: [f64; 4],
    pub dir_u: [f64; 4],
    pub dir_v: [f64; 4],
    pub half_width_u: f64,
    pub half_width_v: f64,
    pub width: usize,
    pub height: usize,
}

impl Slice {
    /// The real slice `{(x + i y, 0)}` over `|x|, |y| <= half_width`.
    pub fn first_axis(half_width: f64, width: usize, height: usize) -> Self {
        Self {
            origin: [0.0; 4],
            dir_u: [1.0, 0.0, 0.0, 0.0],
            dir_v: [0.0, 1.0, 0.0, 0.0],
            half_width_u: half_width,
            half_width_v: half_width,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dot = |a: &[f64; 4], b: &[f64; 4]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let gram =
            dot(&self.dir_u, &self.dir_u) * dot(&self.dir_v, &self.dir_v) - dot(&self.dir_u, &self.dir_v).powi(2);
        if !(gram > 1e-24) {
            return Err(Error::InvalidSpec("slice directions are linearly dependent".into()));
        }
        if !(self.half_width_u > 0.0 && self.half_width_v > 0.0) {
            return Err(Error::InvalidSpec("slice half-widths must be positive".into()));
        }
        Ok(())
    }

    pub fn pixel(&self, x: usize, y: usize) -> Point {
        let u = self.half_width_u * (2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0);
        let v = self.half_width_v * (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64);
        let mut r = [0.0; 4];
        for (k, slot) in r.iter_mut().enumerate() {
            *slot = self.origin[k] + u * self.dir_u[k] + v * self.dir_v[k];
        }
        point::from_reals(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinRaster {
    pub slice: Slice,
    pub width: usize,
    pub height: usize,
    /// Row-major entry indices, [`NON_MEMBER`] for non-members.
    pub data: Vec<i64>,
}

impl BasinRaster {
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.data[y * self.width + x]
    }

    pub fn member_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != NON_MEMBER).count()
    }

    /// Binary PGM; members show `min(entry, 254)`, non-members 255.
    pub fn write_pgm(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> =
            self.data.iter().map(|&v| if v == NON_MEMBER { 255 } else { v.clamp(0, 254) as u8 }).collect();
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "x,y,entry_index")?;
        for y in 0..self.height {
            for x in 0..self.width {
                writeln!(out, "{x},{y},{}", self.get(x, y))?;
            }
        }
        Ok(())
    }

    /// Writes `raster.pgm`, `raster.csv` and the `raster.json` sidecar.
    pub fn write_all(&self, dir: &Path, spec_hash: &str, opts: &OrbitOptions) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut pgm = std::io::BufWriter::new(std::fs::File::create(dir.join("raster.pgm"))?);
        self.write_pgm(&mut pgm)?;
        pgm.flush()?;
        let mut csv = std::io::BufWriter::new(std::fs::File::create(dir.join("raster.csv"))?);
        self.write_csv(&mut csv)?;
        csv.flush()?;
        let sidecar = RasterSidecar {
            slice: self.slice.clone(),
            spec_hash: spec_hash.to_string(),
            max_iter: opts.max_iter,
            radius: opts.radius,
            ceiling: opts.ceiling,
            members: self.member_count(),
            non_member_sentinel: NON_MEMBER,
        };
        std::fs::write(dir.join("raster.json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RasterSidecar {
    pub slice: Slice,
    pub spec_hash: String,
    pub max_iter: usize,
    pub radius: f64,
    pub ceiling: f64,
    pub members: usize,
    pub non_member_sentinel: i64,
}

/// Per-pixel exhaustion index over the slice grid.
pub fn raster(seq: &impl MapSequence, slice: &Slice, opts: &OrbitOptions) -> Result<BasinRaster> {
    slice.validate()?;
    let (w, h) = (slice.width, slice.height);
    let data = (0..w * h)
        .into_par_iter()
        .map(|idx| {
            let p = slice.pixel(idx % w, idx / w);
            exhaustion_index(seq, &p, opts).map_or(NON_MEMBER, |e| e as i64)
        })
        .collect();
    Ok(BasinRaster { slice: slice.clone(), width: w, height: h, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autoseq::Sequence;
    use crate::poly::PolyMap2;
    use num_complex::Complex64;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn linear_spec() -> SequenceSpec {
        SequenceSpec::constant(&PolyMap2::diagonal(c(0.5), c(1.0 / 3.0)), 2, 0.3, 0.6)
    }

    #[test]
    fn origin_is_member_immediately() {
        let r = orbit(&linear_spec(), &point::ORIGIN, &OrbitOptions::new(10, 1.0));
        assert!(r.member);
        assert_eq!(r.entry_index, Some(0));
    }

    #[test]
    fn hand_iterated_linear_orbit() {
        let opts = OrbitOptions::new(100, 1.0);
        let p = [c(8.0), c(0.0)];
        let r = orbit(&linear_spec(), &p, &opts);
        assert_eq!(r.entry_index, Some(4));
        assert_eq!(r.final_norm, 0.5);
        assert_eq!(exhaustion_index(&linear_spec(), &p, &opts), Some(4));
        assert_eq!(exhaustion_index(&linear_spec(), &[c(0.3), c(0.0)], &opts), Some(0));
    }

    #[test]
    fn escaping_point_hits_ceiling() {
        // (z/2 + z², w/2): z = 10 squares away
        let m = PolyMap2::from_terms(&[(1, 0, c(0.5)), (2, 0, c(1.0))], &[(0, 1, c(0.5))]);
        let spec = SequenceSpec::constant(&m, 2, 0.3, 0.6);
        let r = orbit(&spec, &[c(10.0), c(0.0)], &OrbitOptions::new(1000, 0.5));
        assert!(!r.member && r.diverged);
        assert!(r.iterations_used < 10);
        assert_eq!(exhaustion_index(&spec, &[c(10.0), c(0.0)], &OrbitOptions::new(1000, 0.5)), None);
    }

    #[test]
    fn exhausted_iterations_mean_non_member() {
        let spec = SequenceSpec::constant(&PolyMap2::diagonal(c(0.99), c(0.99)), 2, 0.3, 0.995);
        let r = orbit(&spec, &[c(100.0), c(0.0)], &OrbitOptions::new(5, 1.0));
        assert!(!r.member && !r.diverged);
        assert_eq!(r.iterations_used, 5);
    }

    #[test]
    fn empty_raster() {
        let slice = Slice::first_axis(1.0, 0, 0);
        let r = raster(&linear_spec(), &slice, &OrbitOptions::new(10, 1.0)).unwrap();
        assert!(r.data.is_empty());
    }

    #[test]
    fn dependent_slice_is_rejected() {
        let mut slice = Slice::first_axis(1.0, 4, 4);
        slice.dir_v = [2.0, 0.0, 0.0, 0.0];
        assert!(raster(&linear_spec(), &slice, &OrbitOptions::default()).is_err());
    }

    #[test]
    fn raster_matches_orbit_calls() {
        let spec = SequenceSpec::short_square(0.5, 0.01, 0.9);
        let seq = Sequence::new(&spec, 200);
        let slice = Slice::first_axis(2.0, 24, 24);
        let opts = OrbitOptions::new(200, 0.5);
        let r = raster(&seq, &slice, &opts).unwrap();
        for y in 0..24 {
            for x in 0..24 {
                let e = exhaustion_index(&spec, &slice.pixel(x, y), &opts).map_or(NON_MEMBER, |e| e as i64);
                assert_eq!(r.get(x, y), e);
            }
        }
        assert!(r.member_count() > 0 && r.member_count() < 24 * 24);
    }

    #[test]
    fn pgm_header_and_size() {
        let slice = Slice::first_axis(1.0, 3, 2);
        let r = BasinRaster { slice, width: 3, height: 2, data: vec![0, 1, 300, -1, 5, 254] };
        let mut buf = Vec::new();
        r.write_pgm(&mut buf).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[0, 1, 254, 255, 5, 254]);
    }
}
