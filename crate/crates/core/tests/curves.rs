mod common;

use basinforge::autoseq::Sequence;
use basinforge::basin::{self, OrbitOptions};
use basinforge::curves::{
    entire_curve, entire_map, extend_ball, extend_disk, psh_bound, psh_chain, BallMapSeries, DiskMapSeries,
    ExtendOptions,
};
use basinforge::point::{self, Point};
use basinforge::{PolyMap2, SequenceSpec};
use common::{c, example_spec, mixed_spec};

fn members(spec: &SequenceSpec, pts: &[Point]) -> usize {
    let seq = Sequence::new(spec, 64);
    let opts = OrbitOptions::new(20_000, 0.05);
    pts.iter().filter(|p| basin::orbit(&seq, p, &opts).member).count()
}

#[test]
fn example_disk_extension_is_certified() {
    let spec = example_spec();
    let seq = Sequence::new(&spec, 8);
    let f = DiskMapSeries::polynomial(&[point::ORIGIN, [c(0.3), c(0.0)], [c(0.0), c(0.2)]], 1.0);
    let opts = ExtendOptions::for_spec(&spec, 0.5, 1e-3).unwrap();
    let (g, rec) = extend_disk(&seq, &f, &opts).unwrap();
    assert!(rec.sampled_sup < 1e-3, "{rec:?}");
    let sup = point::circle(720, 0.5)
        .map(|z| point::dist(&f.eval(&seq, &z).unwrap(), &g.eval(&seq, &z).unwrap()))
        .fold(0.0, f64::max);
    assert!(sup < 1e-3);
    assert!(point::dist(&g.eval(&seq, &c(0.0)).unwrap(), &point::ORIGIN) <= 1e-12);
    let d = g.derivative_at_zero(&seq).unwrap()[0];
    assert!(point::dist(&d, &[c(0.3), c(0.0)]) <= 1e-12);
}

#[test]
fn mixed_disk_extension_truncates_for_real() {
    let spec = mixed_spec();
    let seq = Sequence::new(&spec, 8);
    let f = DiskMapSeries::polynomial(&[[c(0.01), c(0.01)], [c(0.04), c(0.03)]], 1.0);
    let opts = ExtendOptions::for_spec(&spec, 0.5, 1e-4).unwrap();
    let (g, rec) = extend_disk(&seq, &f, &opts).unwrap();
    assert!(rec.sampled_sup < 1e-4 && rec.tail_sup > 0.0, "{rec:?}");
    let pts: Vec<Point> = point::circle(200, g.radius * 0.999).map(|z| g.eval(&seq, &z).unwrap()).collect();
    assert_eq!(members(&spec, &pts), 200);
}

#[test]
fn entire_curve_to_radius_four() {
    let spec = example_spec();
    let p = [c(0.01), c(0.01)];
    let v = [c(1.0), c(0.0)];
    let curve = entire_curve(&spec, p, v, 4.0, 1e-3, 0.5).unwrap();
    assert!(curve.map.radius >= 4.0 && !curve.rounds.is_empty());
    let seq = Sequence::new(&spec, 8);
    assert!(point::dist(&curve.map.eval(&seq, &c(0.0)).unwrap(), &p) <= 1e-10);
    assert!(point::dist(&curve.map.derivative_at_zero(&seq).unwrap()[0], &v) <= 1e-10);
    let pts: Vec<Point> =
        point::ball_samples(200).iter().map(|s| curve.map.eval(&seq, &(s[0] * 4.0)).unwrap()).collect();
    assert_eq!(members(&spec, &pts), 200);
}

#[test]
fn entire_curve_on_mixed_spec() {
    // past radius 1 the curve reaches norms no forward orbit check can follow
    let spec = mixed_spec();
    let curve = entire_curve(&spec, [c(0.01), c(0.01)], [c(1.0), c(0.5)], 1.0, 1e-3, 0.5).unwrap();
    let seq = Sequence::new(&spec, 8);
    let pts: Vec<Point> = point::ball_samples(200).iter().map(|s| curve.map.eval(&seq, &s[0]).unwrap()).collect();
    assert_eq!(members(&spec, &pts), 200);
}

#[test]
fn zero_rounds_when_target_is_small() {
    let spec = example_spec();
    let curve = entire_curve(&spec, point::ORIGIN, [c(1.0), c(0.0)], 1e-3, 1e-3, 0.5).unwrap();
    assert!(curve.rounds.is_empty());
    assert_eq!(curve.map.depth, 0);
}

#[test]
fn linear_entire_map_is_affine() {
    let spec = SequenceSpec::constant(&PolyMap2::diagonal(c(0.5), c(0.4)), 2, 0.3, 0.6);
    let p = [c(0.1), c(0.0)];
    let m = entire_map(&spec, p, 2.0, 1e-3, 0.5).unwrap();
    let seq = Sequence::new(&spec, 8);
    for s in point::ball_samples(50) {
        let x = [s[0] * 2.0, s[1] * 2.0];
        let y = m.map.eval(&seq, &x).unwrap();
        assert!(point::dist(&y, &[p[0] + x[0], p[1] + x[1]]) < 1e-10);
    }
    let zero = entire_map(&spec, point::ORIGIN, 0.5, 1e-3, 0.5).unwrap();
    assert_eq!(zero.map.eval(&seq, &point::ORIGIN).unwrap(), point::ORIGIN);
}

#[test]
fn one_round_matches_the_exhaustion_chart() {
    for spec in [example_spec(), mixed_spec()] {
        let seq = Sequence::new(&spec, 8);
        let opts = ExtendOptions::for_spec(&spec, 0.9, 1e-2).unwrap();
        let chart = BallMapSeries::exhaustion(1, opts.ball_radius);
        let (g, rec) = extend_ball(&seq, &chart, &opts).unwrap();
        let sup = point::ball_samples(500)
            .iter()
            .map(|x| point::dist(&g.eval(&seq, x).unwrap(), &chart.eval(&seq, x).unwrap()))
            .fold(0.0, f64::max);
        assert!(sup <= 1e-2, "{sup} {rec:?}");
    }
}

#[test]
fn psh_chain_increases_to_the_bound() {
    let b = psh_bound(0.13, 0.5).unwrap();
    let mut prev = 0.0;
    for n in [11, 20, 100, 1000, 10_000, 1_000_000] {
        let v = psh_chain(0.13, 0.5, n, 10).unwrap();
        assert!(v > prev && v < b);
        prev = v;
    }
    // the gap at n is exactly (k/n)·bound
    assert!((b - prev - 1e-5 * b).abs() <= 1e-12);
}
