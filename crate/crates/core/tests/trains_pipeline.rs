mod common;

use basinforge::autoseq::{MapSequence, Sequence};
use basinforge::basin::{self, OrbitOptions};
use basinforge::normalform::{phi_n, rosay_rudin};
use basinforge::point::{self, Point};
use basinforge::trains::{
    self, biholo_trajectory, build_chain, check_directing, check_partition, select_trains_from_steps, sparse_check,
    DirectedSequence, TrainPartition,
};
use basinforge::{JetMap2, PolyMap2, SequenceSpec};
use common::{brute_force_partition, c};
use num_complex::Complex64;

#[test]
fn periodic_plus_minus_sequence_matches_brute_force() {
    let mut steps = Vec::new();
    while steps.len() < 2000 {
        steps.extend(std::iter::repeat(1.6).take(3));
        steps.extend(std::iter::repeat(-1.6).take(20));
        steps.extend(std::iter::repeat(1.6).take(50));
    }
    for k in [2, 3] {
        let part = select_trains_from_steps(&steps, k);
        assert_eq!(part.trains, brute_force_partition(&steps, k));
        assert!(check_partition(&part, &steps, 0.1f64.ln()).is_empty());
    }
    let part = select_trains_from_steps(&steps, 2);
    assert_eq!((part.trains[1].start, part.trains[1].tilde_end, part.trains[1].end), (0, 2, 3));
}

#[test]
fn random_specs_match_brute_force() {
    for seed in 0..12 {
        let spec = SequenceSpec::random_diagonal(seed, 2, 0.13, 0.5);
        let steps = spec.sigma_steps(2000).unwrap();
        let part = select_trains_from_steps(&steps, 2);
        assert_eq!(part.trains, brute_force_partition(&steps, 2), "seed {seed}");
        let bad = check_partition(&part, &steps, 0.13f64.ln());
        assert!(bad.is_empty(), "seed {seed}: {:?}", bad.first());
    }
}

#[test]
fn pipeline_contracts_on_random_specs() {
    for seed in 0..6 {
        let spec = SequenceSpec::random_diagonal(seed, 2, 0.13, 0.5);
        let chain = build_chain(&spec, 3000).unwrap();
        let original = trains::prepare(&spec, chain.horizon).unwrap();
        let rep = check_directing(&chain.directing, &original.steps, &chain.partition, spec.c, spec.d);
        assert!(rep.is_clean(), "seed {seed}: {rep:?}");
        assert!(chain.conjugacy.max_residual() <= 1e-10);
        let (sups, bounds) = chain.shear_bounds();
        assert!(sups[0] <= bounds[0] * (1.0 + 1e-12) && sups[1] <= bounds[1] * (1.0 + 1e-12));
        let back = trains::TrainChain::from_json(&chain.to_json().unwrap()).unwrap();
        assert!(back == chain, "json roundtrip changed the chain");
    }
}

#[test]
fn sparse_sums_nondecreasing_with_lower_bounds() {
    let spec = SequenceSpec::random_diagonal(3, 2, 0.13, 0.5);
    let steps = spec.sigma_steps(10_000).unwrap();
    let part = select_trains_from_steps(&steps, 2);
    let rep = sparse_check(&part, 10, (0.5f64 / 0.13).ln());
    assert!(rep.meaningful);
    for w in rep.partial_sums.windows(2) {
        assert!(w[1] >= w[0]);
    }
    for (len, lb) in rep.tilde_lengths.iter().zip(&rep.tilde_lower_bounds) {
        assert!(*len as f64 >= *lb);
    }
}

#[test]
fn linear_diagonal_biholo_is_l0() {
    let spec = SequenceSpec::alternating(
        vec![PolyMap2::diagonal(c(0.45), c(0.2)), PolyMap2::diagonal(c(0.15), c(0.4))],
        2,
        0.13,
        0.5,
    );
    let chain = build_chain(&spec, 120).unwrap();
    let seq = Sequence::new(&spec, 200);
    let p = [Complex64::new(0.3, -0.1), c(0.2)];
    let tr = biholo_trajectory(&seq, &chain, &p, 100, &OrbitOptions::new(1000, 0.5)).unwrap();
    let expect = trains::l0(&chain, &p);
    for v in &tr.values {
        assert!(point::dist(v, &expect) < 1e-12 * point::norm(&expect));
    }
    let zero = biholo_trajectory(&seq, &chain, &point::ORIGIN, 50, &OrbitOptions::default()).unwrap();
    assert!(zero.values.iter().all(|v| point::norm(v) == 0.0));
}

#[test]
fn autonomous_limit_matches_normal_form() {
    let (a, b, cw) = (0.5, 0.35, 1.0);
    let m = PolyMap2::from_terms(&[(1, 0, c(a)), (0, 2, c(cw))], &[(0, 1, c(b))]);
    let spec = SequenceSpec::constant(&m, 2, 0.3, 0.5);
    let chain = build_chain(&spec, 260).unwrap();
    let f = JetMap2::from_terms(2, &[(1, 0, c(a)), (0, 2, c(cw))], &[(0, 1, c(b))]).unwrap();
    let nf = rosay_rudin(&f, 2).unwrap();
    let seq = Sequence::new(&spec, 1);
    for p in point::ball_samples(20) {
        let p = [p[0] * 0.1, p[1] * 0.1];
        let tr = biholo_trajectory(&seq, &chain, &p, 200, &OrbitOptions::default()).unwrap();
        assert!(tr.converged(1e-8), "{:?}", tr.last_increment());
        let auto = trains::l0(&chain, &phi_n(&nf, 200, &p).unwrap());
        assert!(point::dist(&tr.values[200], &auto) < 1e-8);
    }
}

#[test]
fn random_spec_increments_decay() {
    let spec = SequenceSpec::random_diagonal(7, 2, 0.13, 0.5);
    let chain = build_chain(&spec, 220).unwrap();
    let seq = Sequence::new(&spec, 400);
    let opts = OrbitOptions::new(400, 0.5);
    let mut checked = 0;
    for p in point::ball_samples(60) {
        if basin::exhaustion_index(&seq, &p, &opts).is_none() {
            continue;
        }
        let tr = biholo_trajectory(&seq, &chain, &p, 200, &opts).unwrap();
        assert!(tr.converged(1e-8) && tr.monotone_from.is_some(), "{p:?}: {}", tr.last_increment());
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn directing_preserves_sampled_membership() {
    let spec = SequenceSpec::random_diagonal(11, 2, 0.13, 0.5);
    let chain = build_chain(&spec, 400).unwrap();
    let seq = Sequence::new(&spec, 400);
    let directed = DirectedSequence { seq: &seq, chain: &chain.directing };
    let opts = OrbitOptions::new(300, 1e-6);
    let mut members = 0;
    for p in point::ball_samples(100) {
        let p: Point = [p[0] * 3.0, p[1] * 3.0];
        let a = basin::orbit(&seq, &p, &opts).member;
        let b = basin::orbit(&directed, &trains::l0(&chain, &p), &opts).member;
        assert_eq!(a, b, "{p:?}");
        members += a as usize;
    }
    assert!(members > 0 && members < 100, "{members}");
    let _ = directed.apply(0, &point::ORIGIN);
}

#[test]
fn gap_precondition_is_enforced() {
    let spec = SequenceSpec::random_diagonal(0, 2, 0.1, 0.5);
    assert!(build_chain(&spec, 10).is_err());
    let part = TrainPartition::from_boundaries(2, 10, &[0]);
    assert_eq!(part.trains.len(), 1);
}
