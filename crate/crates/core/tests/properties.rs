//! Invariants of ranking, selection, overlap, BLEU and the language models
//! over generated inputs.

use std::collections::HashSet;

use curricula::corpus::{build_vocab, Corpus, DomainTag, Side};
use curricula::curriculum::{
    dynamic_window_positions, hybrid_candidates, select_dynamic_window, select_static_window,
};
use curricula::eval::{corpus_bleu, overlap_fraction, Smoothing};
use curricula::lm::train_ngram;
use curricula::scorers::{frac_count, rank, top_fraction, Direction, Method, Ranking, ScoreRecord};
use proptest::prelude::*;

fn records(values: &[f64]) -> Vec<ScoreRecord> {
    values.iter().enumerate().map(|(i, &v)| ScoreRecord { pair_id: 10 * i + 1, value: v, method: Method::Prediction }).collect()
}

fn ranking(values: &[f64]) -> Ranking {
    rank(&records(values), Direction::HigherIsBetter).unwrap()
}

/// Values on a coarse grid so ties are common.
fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0..8i32).prop_map(|v| v as f64 / 4.0), 1..300)
}

proptest! {
    #[test]
    fn ranking_is_a_sorted_permutation(values in scores(), lower in any::<bool>()) {
        let dir = if lower { Direction::LowerIsBetter } else { Direction::HigherIsBetter };
        let r = rank(&records(&values), dir).unwrap();
        let mut ids = r.order.clone();
        ids.sort_unstable();
        let want: Vec<usize> = (0..values.len()).map(|i| 10 * i + 1).collect();
        prop_assert_eq!(ids, want);
        for w in r.order.windows(2).zip(r.values.windows(2)) {
            let ((a, b), (va, vb)) = ((w.0[0], w.0[1]), (w.1[0], w.1[1]));
            let ordered = match dir {
                Direction::HigherIsBetter => va > vb,
                Direction::LowerIsBetter => va < vb,
            };
            prop_assert!(ordered || (va == vb && a < b));
        }
    }

    #[test]
    fn top_fraction_is_a_nested_prefix(values in scores(), p in 1..100usize, q in 1..100usize) {
        let r = ranking(&values);
        let (p, q) = (p.min(q) as f64 / 100.0, p.max(q) as f64 / 100.0);
        let (small, large) = (top_fraction(&r, p).unwrap(), top_fraction(&r, q).unwrap());
        prop_assert_eq!(small.len(), frac_count(p, values.len()).max(1));
        prop_assert!(large.starts_with(&small));
    }

    #[test]
    fn static_window_drops_both_ends(values in scores(), e in 0..50usize, h in 0..50usize) {
        let r = ranking(&values);
        let n = values.len();
        let (e, h) = (e as f64 / 100.0, h as f64 / 100.0);
        match select_static_window(&r, e, h) {
            Ok(sel) => {
                let (ke, kh) = (frac_count(e, n), frac_count(h, n));
                prop_assert_eq!(sel.len(), n - ke - kh);
                prop_assert_eq!(&sel[..], &r.order[ke..n - kh]);
            }
            Err(_) => prop_assert!(frac_count(e, n) + frac_count(h, n) >= n),
        }
    }

    #[test]
    fn dynamic_window_stays_in_band(n in 1..2000usize, lo in 0..10usize, width in 1..10usize, lam in 1..100usize) {
        let (lo, hi) = (lo as f64 / 10.0, (lo + width).min(10) as f64 / 10.0);
        let lam = lam as f64 / 100.0 * (hi - lo);
        if let Ok(range) = dynamic_window_positions(n, lam, [lo, hi]) {
            prop_assert_eq!(range.len(), frac_count(lam, n));
            prop_assert!(range.start >= frac_count(lo, n) && range.end <= frac_count(hi, n));
        }
    }

    #[test]
    fn dynamic_selection_matches_positions(values in scores(), lam in 5..40usize) {
        let r = ranking(&values);
        let lam = lam as f64 / 100.0;
        if let Ok(sel) = select_dynamic_window(&r, lam, [0.1, 0.6]) {
            let range = dynamic_window_positions(values.len(), lam, [0.1, 0.6]).unwrap();
            prop_assert_eq!(&sel[..], &r.order[range]);
        }
    }

    #[test]
    fn hybrid_lies_in_every_top_set(a in scores(), seed in any::<u64>(), p in 10..100usize) {
        let n = a.len();
        let shuffled = |k: u64| -> Vec<f64> { (0..n).map(|i| ((i as u64 * 2654435761 + seed + k) % 97) as f64).collect() };
        let rs = [ranking(&a), ranking(&shuffled(1)), ranking(&shuffled(2))];
        let p = p as f64 / 100.0;
        let refs: Vec<&Ranking> = rs.iter().collect();
        if let Ok(ids) = hybrid_candidates(&refs, p) {
            prop_assert!(ids.windows(2).all(|w| w[0] < w[1]));
            for r in &rs {
                let top: HashSet<usize> = top_fraction(r, p).unwrap().into_iter().collect();
                prop_assert!(ids.iter().all(|id| top.contains(id)));
            }
        }
    }

    #[test]
    fn overlap_is_symmetric_and_bounded(a in scores(), b_seed in any::<u64>(), p in 1..100usize) {
        let b: Vec<f64> = (0..a.len()).map(|i| ((i as u64).wrapping_mul(b_seed | 1) % 13) as f64).collect();
        let (ra, rb) = (ranking(&a), ranking(&b));
        let p = p as f64 / 100.0;
        let ab = overlap_fraction(&ra, &rb, p).unwrap();
        prop_assert_eq!(ab, overlap_fraction(&rb, &ra, p).unwrap());
        prop_assert!((0.0..=100.0).contains(&ab));
        prop_assert_eq!(overlap_fraction(&ra, &ra, p).unwrap(), 100.0);
    }

    #[test]
    fn bleu_is_bounded_and_perfect_on_identity(
        sents in prop::collection::vec(prop::collection::vec("[a-f]", 4..12), 1..20),
        hyp_words in prop::collection::vec(prop::collection::vec("[a-h]", 1..12), 20),
        add_one in any::<bool>(),
    ) {
        let smoothing = if add_one { Smoothing::AddOne } else { Smoothing::None };
        prop_assert_eq!(corpus_bleu(&sents, &sents, smoothing).unwrap().score, 100.0);
        let hyps = &hyp_words[..sents.len()];
        let s = corpus_bleu(hyps, &sents, smoothing).unwrap().score;
        prop_assert!((0.0..=100.0).contains(&s));
    }

    #[test]
    fn language_models_normalize_after_any_history(
        lines in prop::collection::vec("[a-e]( [a-e]){0,6}", 1..30),
        order in 1..5usize,
        history in prop::collection::vec(0u32..12, 0..4),
    ) {
        let c = Corpus::from_lines("lm", lines.iter().map(|l| (l.as_str(), "x")));
        let v = build_vocab(&c, Side::Source, 1).unwrap();
        let lm = train_ngram(&c, Side::Source, order, &v, 0.75, DomainTag::General).unwrap();
        let history: Vec<u32> = history.into_iter().map(|h| h % v.len() as u32).collect();
        let total: f64 = lm.support().map(|w| lm.prob(&history, w)).sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "sum {}", total);
    }
}
