use std::f64::consts::PI;

use proptest::prelude::*;
use vortexlab_core::geometry::TorusGeometry;
use vortexlab_core::solvers::SolveOptions;
use vortexlab_core::stability::{
    correspondence_smoke_test, pair_is_stable, slope, tau_walls, tau_walls_bounded, triple_is_stable, Condition, SplitModel, Verdict,
};
use vortexlab_core::Error;

fn model(d: &[i64], s: &[usize]) -> SplitModel {
    SplitModel::new(d.to_vec(), s.to_vec(), 1.0).unwrap()
}

#[test]
fn slopes() {
    assert_eq!(slope(&[3]).unwrap(), 3.0);
    assert_eq!(slope(&[1, 2]).unwrap(), 1.5);
    assert_eq!(slope(&[0, 0, 0]).unwrap(), 0.0);
    assert!(matches!(slope(&[]), Err(Error::EmptySubobject)));
}

#[test]
fn pair_examples() {
    assert_eq!(pair_is_stable(&model(&[0], &[0]), 4.0 * PI).unwrap(), Verdict::Stable);
    assert_eq!(
        pair_is_stable(&model(&[2, 0], &[1]), 4.0 * PI).unwrap(),
        Verdict::Unstable { witness: vec![0], condition: Condition::Subobject }
    );
    assert!(pair_is_stable(&model(&[2, 0], &[1]), 8.0 * PI).unwrap().is_wall());
}

#[test]
fn quotient_condition_is_checked() {
    // φ in the degree-2 summand: quotient {0} has slope 0 < τ̂.
    let v = pair_is_stable(&model(&[2, 0], &[0]), 4.0 * PI * 1.5).unwrap();
    assert_eq!(v, Verdict::Unstable { witness: vec![0], condition: Condition::Subobject });
    let v = pair_is_stable(&model(&[1, 1], &[0]), 4.0 * PI * 1.5).unwrap();
    assert_eq!(v, Verdict::Unstable { witness: vec![0], condition: Condition::Quotient });
}

#[test]
fn triple_reduces_to_pair() {
    let m = model(&[2, 0], &[1]);
    for tau in [1.0, 4.0 * PI, 30.0] {
        assert_eq!(triple_is_stable(&m, 0, 1, tau).unwrap(), pair_is_stable(&m, tau).unwrap());
    }
    assert_eq!(triple_is_stable(&model(&[1], &[0]), 1, 1, 2.0).unwrap(), pair_is_stable(&model(&[0], &[0]), 2.0).unwrap());
    assert!(matches!(triple_is_stable(&m, 0, 2, 1.0), Err(Error::RankTwoSecondFactor(2))));
}

#[test]
fn wall_examples() {
    let w = tau_walls(&model(&[2, 0], &[1])).unwrap();
    let expect = [0.0, 4.0 * PI, 8.0 * PI];
    assert_eq!(w.walls.len(), 3);
    for (a, b) in w.walls.iter().zip(expect) {
        assert!((a - b).abs() < 1e-12);
    }
    assert_eq!(w.provenance, vec![(0, 1), (1, 1), (2, 1)]);
    let single = tau_walls(&model(&[3], &[0])).unwrap();
    assert_eq!(single.walls, vec![12.0 * PI]);
    let b = tau_walls_bounded(2, 0..=2, 1.0);
    assert_eq!(b.provenance, vec![(0, 1), (1, 2), (1, 1), (2, 1)]);
}

#[test]
fn smoke_test_on_line_bundle() {
    let geom = TorusGeometry::build(&[1.0], &[64], 1.0).unwrap();
    let opts = SolveOptions::default();
    let m = model(&[1], &[0]);
    let above = correspondence_smoke_test(&m, 1.1 * 4.0 * PI, &geom, &opts).unwrap();
    assert!(above.verdict.is_stable() && above.solver_converged && above.consistent);
    let below = correspondence_smoke_test(&m, 0.9 * 4.0 * PI, &geom, &opts).unwrap();
    assert!(!below.verdict.is_stable() && !below.solver_converged && below.consistent);
    let wall = correspondence_smoke_test(&m, 4.0 * PI, &geom, &opts).unwrap();
    assert!(wall.verdict.is_wall() && wall.consistent);
}

#[test]
fn smoke_test_on_split_rank_two() {
    let geom = TorusGeometry::build(&[1.0], &[32], 1.0).unwrap();
    let opts = SolveOptions::default();
    // Split models with one-summand support are never stable; on the wall d₂ = τ̂ they solve.
    let off = correspondence_smoke_test(&model(&[0, 1], &[0]), 1.3 * 4.0 * PI, &geom, &opts).unwrap();
    assert!(!off.verdict.is_stable() && !off.solver_converged && off.consistent);
    let on = correspondence_smoke_test(&model(&[0, 1], &[0]), 4.0 * PI, &geom, &opts).unwrap();
    assert!(on.verdict.is_wall() && on.solver_converged && on.consistent);
}

fn verdict_kind(v: &Verdict) -> u8 {
    match v {
        Verdict::Stable => 0,
        Verdict::Unstable { .. } => 1,
        Verdict::Wall { .. } => 2,
    }
}

proptest! {
    #[test]
    fn permuting_summands_preserves_verdict(degs in prop::collection::vec(-3i64..4, 1..5), sup in 0usize..4, th in -4.0f64..5.0, rot in 0usize..4) {
        let n = degs.len();
        let support = vec![sup % n];
        let m = model(&degs, &support);
        let mut d2 = degs.clone();
        d2.rotate_left(rot % n);
        let s2 = vec![(sup % n + n - rot % n) % n];
        let tau = th * 4.0 * PI;
        prop_assert_eq!(verdict_kind(&pair_is_stable(&m, tau).unwrap()), verdict_kind(&pair_is_stable(&model(&d2, &s2), tau).unwrap()));
    }

    #[test]
    fn twisting_shifts_tau_hat(degs in prop::collection::vec(-3i64..4, 1..5), sup in 0usize..4, th in -4.0f64..5.0, c in -3i64..4) {
        let n = degs.len();
        let m = model(&degs, &[sup % n]);
        let twisted = model(&degs.iter().map(|d| d + c).collect::<Vec<_>>(), &[sup % n]);
        let a = pair_is_stable(&m, th * 4.0 * PI).unwrap();
        let b = pair_is_stable(&twisted, (th + c as f64) * 4.0 * PI).unwrap();
        prop_assert_eq!(verdict_kind(&a), verdict_kind(&b));
    }

    #[test]
    fn walls_partition_the_line(degs in prop::collection::vec(-3i64..4, 1..5), sup in 0usize..4) {
        let n = degs.len();
        let m = model(&degs, &[sup % n]);
        let w = tau_walls(&m).unwrap();
        for &t in &w.walls {
            prop_assert!(!pair_is_stable(&m, t).unwrap().is_stable());
        }
        let mut pts = vec![w.walls[0] - 10.0];
        pts.extend(w.walls.iter().copied());
        pts.push(w.walls[w.walls.len() - 1] + 10.0);
        for win in pts.windows(2) {
            let (lo, hi) = (win[0], win[1]);
            let kinds: Vec<u8> = (1..8).map(|j| verdict_kind(&pair_is_stable(&m, lo + (hi - lo) * j as f64 / 8.0).unwrap())).collect();
            prop_assert!(kinds.iter().all(|k| *k == kinds[0] && *k != 2));
        }
        // Wall verdicts only occur at walls.
        for j in 0..200 {
            let t = -20.0 * PI + j as f64 * 0.37;
            if pair_is_stable(&m, t).unwrap().is_wall() {
                prop_assert!(w.walls.iter().any(|x| (x - t).abs() < 1e-9));
            }
        }
    }
}
