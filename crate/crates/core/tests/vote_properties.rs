mod support;

use dpvote::mean::quantize;
use dpvote::vote::{dpvote_with, peeling_with, sign_probabilities, tally};
use dpvote::{dpvote, NoiseScale, PrivacyBudget, RandomStream, Sign, SignMatrix, VoteCounts};
use proptest::prelude::*;

use support::min_flips;

fn counts() -> impl Strategy<Value = VoteCounts> {
    (0usize..30, 0usize..30, 0usize..30)
        .prop_filter("need at least one vote", |(a, b, c)| a + b + c > 0)
        .prop_map(|(a, b, c)| VoteCounts::new(a, b, c))
}

fn sign() -> impl Strategy<Value = Sign> {
    prop_oneof![Just(Sign::Pos), Just(Sign::Zero), Just(Sign::Neg)]
}

fn matrix(max_p: usize, max_m: usize) -> impl Strategy<Value = SignMatrix> {
    (1..=max_p, 1..=max_m).prop_flat_map(|(p, m)| {
        proptest::collection::vec(proptest::collection::vec(sign(), m), p)
            .prop_map(|rows| SignMatrix::from_rows(&rows).unwrap())
    })
}

proptest! {
    #[test]
    fn quantize_is_odd(x in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let pos = quantize(x, lambda).unwrap();
        let neg = quantize(-x, lambda).unwrap();
        prop_assert_eq!(pos.as_i8(), -neg.as_i8());
    }

    #[test]
    fn quantize_is_monotone(a in -10.0f64..10.0, b in -10.0f64..10.0, lambda in 0.0f64..5.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo, lambda).unwrap().as_i8() <= quantize(hi, lambda).unwrap().as_i8());
    }

    #[test]
    fn tally_stays_in_the_alphabet(row in proptest::collection::vec(-1i8..=1, 1..40)) {
        let c = tally(&row).unwrap();
        prop_assert_eq!(c.m(), row.len());
        prop_assert!(Sign::ALL.contains(&c.majority()));
    }

    #[test]
    fn tally_rejects_foreign_symbols(mut row in proptest::collection::vec(-1i8..=1, 1..10), bad in 2i8..100) {
        row[0] = bad;
        prop_assert!(tally(&row).is_err());
    }

    // the score is not itself the flip distance; this pins the exact relation
    #[test]
    fn stability_determines_flip_distance(c in counts()) {
        let f = c.stability();
        let expected = if c.majority().is_zero() { (1 + f.abs() + 1) / 2 } else { (f.abs() + 1) / 2 };
        prop_assert_eq!(min_flips(c) as i64, expected);
        prop_assert_eq!(f > 0, !c.majority().is_zero());
    }

    #[test]
    fn utility_moves_by_at_most_two(c in counts(), from in 0usize..3, to in 0usize..3) {
        let mut v = [c.n_plus, c.n_zero, c.n_minus];
        prop_assume!(from != to && v[from] > 0);
        v[from] -= 1;
        v[to] += 1;
        let next = VoteCounts::new(v[0], v[2], v[1]);
        for s in Sign::ALL {
            prop_assert!((c.utility(s) - next.utility(s)).abs() <= 2);
        }
    }

    #[test]
    fn stability_moves_by_at_most_two(c in counts(), from in 0usize..3, to in 0usize..3) {
        let mut v = [c.n_plus, c.n_zero, c.n_minus];
        prop_assume!(from != to && v[from] > 0);
        v[from] -= 1;
        v[to] += 1;
        let next = VoteCounts::new(v[0], v[2], v[1]);
        prop_assert!((c.stability() - next.stability()).abs() <= 2);
    }

    #[test]
    fn sign_probabilities_are_a_distribution(c in counts(), eps_prime in 0.0f64..50.0) {
        let probs = sign_probabilities(c, eps_prime);
        prop_assert!(probs.iter().all(|q| q.is_finite() && *q >= 0.0));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // higher utility never gets lower probability
        for (i, a) in Sign::ALL.iter().enumerate() {
            for (j, b) in Sign::ALL.iter().enumerate() {
                if c.utility(*a) > c.utility(*b) {
                    prop_assert!(probs[i] >= probs[j]);
                }
            }
        }
    }

    #[test]
    fn dpvote_output_is_well_formed(q in matrix(12, 9), s in 1usize..6, seed in any::<u64>()) {
        let s = s.min(q.p());
        let budget = PrivacyBudget::new(0.8, 0.05, s).unwrap();
        let out = dpvote(&q, &budget, &mut RandomStream::new(seed)).unwrap();
        prop_assert_eq!(out.p(), q.p());
        prop_assert_eq!(out.candidates().len(), s);
        let mut sorted = out.candidates().to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        prop_assert_eq!(sorted.len(), s);
        for (l, sign) in out.signs().iter().enumerate() {
            if !out.candidates().contains(&l) {
                prop_assert!(sign.is_zero());
            }
            prop_assert_eq!(out.selected().contains(&l), !sign.is_zero());
        }
    }

    #[test]
    fn noiseless_dpvote_is_the_majority_on_the_top_rows(q in matrix(10, 9), s in 1usize..5) {
        let s = s.min(q.p());
        let budget = PrivacyBudget::new(1.0, 0.1, s).unwrap();
        let mut stream = RandomStream::new(0);
        let peeled = peeling_with(&q, &budget.halved(), NoiseScale::NOISELESS, &mut stream).unwrap();
        let mut ranked: Vec<usize> = (0..q.p()).collect();
        ranked.sort_by_key(|&l| (std::cmp::Reverse(q.counts(l).stability()), l));
        prop_assert_eq!(&peeled[..], &ranked[..s]);
        let out = dpvote_with(&q, &budget, NoiseScale::NOISELESS, &mut stream).unwrap();
        for &l in out.candidates() {
            let c = q.counts(l);
            // uniform over ties; a unique best utility is always reported
            let best = Sign::ALL.iter().map(|&x| c.utility(x)).max().unwrap();
            prop_assert_eq!(c.utility(out.signs()[l]), best);
        }
    }
}
