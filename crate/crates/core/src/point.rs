//! Points of ℂ² and a few helpers shared by the evaluators.

use num_complex::Complex64;

pub type Point = [Complex64; 2];

pub const ORIGIN: Point = [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];

#[inline]
pub fn norm(p: &Point) -> f64 {
    (p[0].norm_sqr() + p[1].norm_sqr()).sqrt()
}

#[inline]
pub fn dist(p: &Point, q: &Point) -> f64 {
    norm(&[p[0] - q[0], p[1] - q[1]])
}

#[inline]
pub fn is_finite(p: &Point) -> bool {
    p[0].re.is_finite() && p[0].im.is_finite() && p[1].re.is_finite() && p[1].im.is_finite()
}

/// Build a point from `re1, im1, re2, im2`.
pub fn from_reals(v: [f64; 4]) -> Point {
    [Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])]
}

pub fn to_reals(p: &Point) -> [f64; 4] {
    [p[0].re, p[0].im, p[1].re, p[1].im]
}

/// Parse `"re1,im1,re2,im2"`.
pub fn parse(s: &str) -> Option<Point> {
    let parts: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().ok()?;
    if parts.len() != 4 {
        return None;
    }
    Some(from_reals([parts[0], parts[1], parts[2], parts[3]]))
}

/// Deterministic quasi-random points on the unit sphere S³ ⊂ ℂ².
///
/// Uses a Halton sequence in bases 2, 3, 5 pushed through Hopf
/// coordinates, so `|z|²` is uniform on [0, 1] and both phases are uniform.
pub fn sphere_samples(count: usize) -> Vec<Point> {
    (0..count)
        .map(|s| {
            let idx = s as u64 + 1;
            let u = halton(idx, 2);
            let phi1 = 2.0 * std::f64::consts::PI * halton(idx, 3);
            let phi2 = 2.0 * std::f64::consts::PI * halton(idx, 5);
            let rz = u.sqrt();
            let rw = (1.0 - u).max(0.0).sqrt();
            [Complex64::from_polar(rz, phi1), Complex64::from_polar(rw, phi2)]
        })
        .collect()
}

/// Quasi-random points of the closed unit ball (radius drawn with the r⁴ law).
pub fn ball_samples(count: usize) -> Vec<Point> {
    sphere_samples(count)
        .into_iter()
        .enumerate()
        .map(|(s, p)| {
            let r = halton(s as u64 + 1, 7).powf(0.25);
            [p[0] * r, p[1] * r]
        })
        .collect()
}

pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// `count` equally spaced points on the circle of the given radius.
pub fn circle(count: usize, radius: f64) -> impl Iterator<Item = Complex64> {
    (0..count).map(move |s| Complex64::from_polar(radius, 2.0 * std::f64::consts::PI * s as f64 / count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_samples_are_unit() {
        for p in sphere_samples(100) {
            assert!((norm(&p) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn parse_round_trip() {
        let p = parse("0.01, 0, -2, 3.5").unwrap();
        assert_eq!(to_reals(&p), [0.01, 0.0, -2.0, 3.5]);
        assert!(parse("1,2,3").is_none());
    }
}
