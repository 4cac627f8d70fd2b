mod common;

use num_bigint::BigInt;
use toppling::digraph::SandpileDigraph;
use toppling::lattice::recurrent_representative;
use toppling::parking::{
    column_pairing, enumerate_parking, enumerate_parking_for, is_dhar_allowed,
    is_parking_bruteforce, is_parking_greedy, is_r_allowed, is_r_allowed_bruteforce,
    parking_counterexample, parking_to_recurrent, recurrent_to_parking, GreedyOutcome, TieBreak,
};
use toppling::sandpile::{avalanche, enumerate_recurrent, is_recurrent, stabilize};
use toppling::{validate_toppling, Budgets, IntMatrix, RateVector, ToppleMatrix, TopplePolicy};

use common::{
    cfg, cfgs, example, example_rate, ints, naive_is_parking, naive_stabilize, stable_box,
};

const EXAMPLE_ROWS: [[i64; 2]; 2] = [[2, -1], [-3, 4]];

fn example_rows() -> Vec<Vec<i64>> {
    EXAMPLE_ROWS.iter().map(|r| r.to_vec()).collect()
}

#[test]
fn validation_report() {
    let report = validate_toppling(example().matrix());
    assert!(report.is_toppling);
    assert_eq!(report.det, BigInt::from(5));
    assert_eq!(
        report.row_certificate.unwrap().rates(),
        ints(&[7, 3]).as_slice()
    );
    assert_eq!(report.column_certificate.unwrap(), ints(&[5, 5]));

    let bad = IntMatrix::from_i64_rows(&[[1, 2], [2, 1]]).unwrap();
    let report = validate_toppling(&bad);
    assert!(!report.is_toppling);
    assert!(!report.violations.is_empty());
}

#[test]
fn pairings() {
    let m = example();
    assert_eq!(
        column_pairing(&m, &ints(&[2, 1]), 0).unwrap(),
        BigInt::from(1)
    );
    assert_eq!(
        column_pairing(&m, &ints(&[2, 1]), 1).unwrap(),
        BigInt::from(2)
    );
    assert_eq!(
        column_pairing(&m, &ints(&[0, 1]), 1).unwrap(),
        BigInt::from(4)
    );
}

#[test]
fn parking_set_matches_definition() {
    let m = example();
    let r = example_rate(&m);
    let rows = example_rows();
    let want: Vec<_> = stable_box(&rows)
        .into_iter()
        .filter(|f| naive_is_parking(&rows, &[2, 1], f))
        .map(|f| cfg(&f))
        .collect();
    assert_eq!(want, cfgs(&[&[0, 0], &[0, 1], &[0, 2], &[1, 0], &[1, 1]]));
    assert_eq!(
        enumerate_parking_for(&m, &r, &Budgets::default()).unwrap(),
        want
    );
    assert_eq!(enumerate_parking(&m, &Budgets::default()).unwrap(), want);
}

#[test]
fn parking_witnesses() {
    let m = example();
    let r = example_rate(&m);
    let b = Budgets::default();
    assert!(is_parking_bruteforce(&m, &r, &cfg(&[1, 1]), &b).unwrap());
    assert!(!is_parking_bruteforce(&m, &r, &cfg(&[1, 2]), &b).unwrap());
    let chi = parking_counterexample(&m, &r, &cfg(&[0, 3]), &b)
        .unwrap()
        .unwrap();
    assert_eq!(chi.as_slice(), ints(&[1, 1]).as_slice());

    let trace = is_parking_greedy(&m, &r, &cfg(&[1, 1]), TieBreak::Lowest, &b).unwrap();
    assert_eq!(
        trace,
        GreedyOutcome::Parked {
            sequence: vec![1, 0, 0]
        }
    );
    match is_parking_greedy(&m, &r, &cfg(&[1, 2]), TieBreak::Lowest, &b).unwrap() {
        GreedyOutcome::Stalled { step, .. } => assert_eq!(step, 1),
        other => panic!("expected a stall, got {other:?}"),
    }
}

#[test]
fn classical_parking_functions() {
    let k3 = ToppleMatrix::from_i64_rows(&[[2, -1], [-1, 2]]).unwrap();
    let want = cfgs(&[&[0, 0], &[0, 1], &[1, 0]]);
    assert_eq!(enumerate_parking(&k3, &Budgets::default()).unwrap(), want);
    let one = ToppleMatrix::from_i64_rows(&[[1]]).unwrap();
    assert_eq!(
        enumerate_parking(&one, &Budgets::default()).unwrap(),
        cfgs(&[&[0]])
    );
}

#[test]
fn recurrent_set_matches_oracle() {
    let m = example();
    let r = example_rate(&m);
    let rows = example_rows();
    let want: Vec<_> = stable_box(&rows)
        .into_iter()
        .filter(|u| naive_stabilize(&rows, &[u[0] + 5, u[1] + 5]).0 == *u)
        .map(|u| cfg(&u))
        .collect();
    assert_eq!(want, cfgs(&[&[0, 2], &[0, 3], &[1, 1], &[1, 2], &[1, 3]]));
    assert_eq!(
        enumerate_recurrent(&m, &r, &Budgets::default()).unwrap(),
        want
    );
}

#[test]
fn stabilization_traces() {
    let m = example();
    let b = Budgets::default();
    let rows = example_rows();
    for (start, end, counts) in [
        ([2, 5], [1, 3], [2u64, 1]),
        ([5, 5], [1, 2], [5, 2]),
        ([1, 3], [1, 3], [0, 0]),
    ] {
        assert_eq!(
            naive_stabilize(&rows, &start),
            (end.to_vec(), counts.to_vec())
        );
        let (v, record) = stabilize(&m, &cfg(&start), TopplePolicy::LowestIndex, &b).unwrap();
        assert_eq!(v, cfg(&end));
        assert_eq!(record.representation(), counts);
    }
}

#[test]
fn avalanche_and_recurrence() {
    let m = example();
    let r = example_rate(&m);
    let b = Budgets::default();
    let rows = example_rows();
    assert_eq!(naive_stabilize(&rows, &[2, 3]).0, vec![1, 1]);
    assert_eq!(avalanche(&m, &cfg(&[1, 3]), 0, &b).unwrap(), cfg(&[1, 1]));
    assert!(is_recurrent(&m, &r, &cfg(&[1, 3]), &b).unwrap());
    assert!(!is_recurrent(&m, &r, &cfg(&[0, 0]), &b).unwrap());
    assert!(!is_recurrent(&m, &r, &cfg(&[2, 0]), &b).unwrap());
}

#[test]
fn reflection() {
    let m = example();
    for (f, u) in [([0, 0], [1, 3]), ([1, 1], [0, 2]), ([1, 0], [0, 3])] {
        assert_eq!(parking_to_recurrent(&m, &cfg(&f)).unwrap(), cfg(&u));
        assert_eq!(recurrent_to_parking(&m, &cfg(&u)).unwrap(), cfg(&f));
    }
    assert!(parking_to_recurrent(&m, &cfg(&[2, 0])).is_err());
}

#[test]
fn allowed_tests() {
    let m = example();
    let r = example_rate(&m);
    let b = Budgets::default();
    for (u, want) in [([1, 3], true), ([0, 0], false), ([1, 1], true)] {
        assert_eq!(is_r_allowed(&m, &r, &cfg(&u), &b).unwrap(), want);
        assert_eq!(is_r_allowed_bruteforce(&m, &r, &cfg(&u), &b).unwrap(), want);
    }
    assert!(is_dhar_allowed(&m, &cfg(&[1, 3]), &b).unwrap());
    assert!(!is_dhar_allowed(&m, &cfg(&[0, 0]), &b).unwrap());
    let one = ToppleMatrix::from_i64_rows(&[[3]]).unwrap();
    assert!(is_dhar_allowed(&one, &cfg(&[0]), &b).unwrap());
}

#[test]
fn representatives() {
    let m = example();
    let r = example_rate(&m);
    let b = Budgets::default();
    assert_eq!(
        recurrent_representative(&m, &r, &ints(&[5, 5]), &b).unwrap(),
        cfg(&[1, 2])
    );
    assert_eq!(
        recurrent_representative(&m, &r, &ints(&[-1, -1]), &b).unwrap(),
        cfg(&[1, 3])
    );
}

#[test]
fn digraph_counts() {
    let m = example();
    let b = Budgets::default();
    let d = SandpileDigraph::build(&m, &example_rate(&m));
    assert_eq!(d.count_arborescences(0, &b).unwrap(), BigInt::from(10));
    let canonical = SandpileDigraph::build(&m, &m.canonical_rate());
    assert_eq!(
        canonical.count_arborescences(0, &b).unwrap(),
        BigInt::from(7 * 3 * 5)
    );
    let diag = ToppleMatrix::from_i64_rows(&[[3, 0], [0, 5]]).unwrap();
    let one = RateVector::from_i64(&diag, &[1, 1]).unwrap();
    assert_eq!(
        SandpileDigraph::build(&diag, &one)
            .count_arborescences(0, &b)
            .unwrap(),
        BigInt::from(15)
    );
}

#[test]
fn recurrent_loads_topple_exactly_the_rate() {
    let m = example();
    let b = Budgets::default();
    for r in [example_rate(&m), m.canonical_rate()] {
        for u in enumerate_recurrent(&m, &r, &b).unwrap() {
            let loaded: Vec<BigInt> = u
                .as_slice()
                .iter()
                .zip(r.load())
                .map(|(a, c)| a + c)
                .collect();
            let loaded = toppling::Configuration::new(loaded).unwrap();
            let (v, record) = stabilize(&m, &loaded, TopplePolicy::LowestIndex, &b).unwrap();
            assert_eq!(v, u);
            let counts: Vec<BigInt> = record
                .representation()
                .iter()
                .map(|&k| BigInt::from(k))
                .collect();
            assert_eq!(counts.as_slice(), r.rates());
        }
    }
}
