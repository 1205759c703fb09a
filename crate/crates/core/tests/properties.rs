use std::collections::{BTreeMap, BTreeSet};

use booldr_core::embed::hashed_bow_embed;
use booldr_core::eval::{mrr_at_k, neg_recall_at_k};
use booldr_core::genpipe::{
    check_labels, run_pipeline, synth_corpus, GeneratorSpec, PipelineSpec, StopRule, SynthSpec,
};
use booldr_core::index::dot;
use booldr_core::model::{compute_stats, load_judgments, save_judgments};
use booldr_core::query::{
    evaluate_expr, evaluate_untruncated, merge_and, merge_not, merge_or, parse_boolean_query,
    BooleanExpr, MergePolicy, NotMode,
};
use booldr_core::{
    build_index, Corpus, EmbedderSpec, Judgment, Passage, QuestionType, RankedList, Similarity,
};
use proptest::prelude::*;

fn atom_text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 ?,.()\"\\\\]{1,12}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

fn expr_tree() -> impl Strategy<Value = BooleanExpr> {
    atom_text()
        .prop_map(BooleanExpr::atom)
        .prop_recursive(4, 32, 2, |inner| {
            (0..3u8, inner.clone(), inner).prop_map(|(op, l, r)| match op {
                0 => BooleanExpr::and(l, r),
                1 => BooleanExpr::or(l, r),
                _ => BooleanExpr::not(l, r),
            })
        })
}

/// Quantized scores over a small id space so ties and overlaps are common.
fn ranked_list() -> impl Strategy<Value = RankedList> {
    prop::collection::btree_map(0..30u32, -8..=8i32, 0..20).prop_map(|m| {
        RankedList::from_pairs(
            m.into_iter()
                .map(|(d, s)| (format!("d{d:02}"), s as f64 * 0.25)),
        )
        .unwrap()
    })
}

fn id_set(max: usize) -> impl Strategy<Value = BTreeSet<String>> {
    prop::collection::btree_set((0..30u32).prop_map(|d| format!("d{d:02}")), 0..max)
}

proptest! {
    #[test]
    fn parse_render_round_trip(e in expr_tree()) {
        prop_assert!(e.depth() <= 5);
        prop_assert_eq!(parse_boolean_query(&e.render()).unwrap(), e);
    }

    #[test]
    fn and_or_commute(a in ranked_list(), b in ranked_list()) {
        prop_assert_eq!(merge_and(&a, &b), merge_and(&b, &a));
        prop_assert_eq!(merge_or(&a, &b), merge_or(&b, &a));
    }

    #[test]
    fn or_idempotent_and_annihilates(x in ranked_list()) {
        prop_assert_eq!(merge_or(&x, &x), x.clone());
        prop_assert!(merge_and(&x, &RankedList::empty()).is_empty());
        prop_assert!(merge_not(&x, &x, NotMode::Hard).is_empty());
        prop_assert_eq!(merge_not(&x, &RankedList::empty(), NotMode::Hard), x);
    }

    #[test]
    fn hard_not_excludes_right_operand(a in ranked_list(), b in ranked_list()) {
        let out = merge_not(&a, &b, NotMode::Hard);
        for d in out.iter() {
            prop_assert!(!b.contains(&d.doc_id));
            prop_assert_eq!(a.score_of(&d.doc_id), Some(d.score));
        }
        prop_assert_eq!(out.len(), a.ids().filter(|id| !b.contains(id)).count());
    }

    #[test]
    fn metrics_monotone_in_k(x in ranked_list(), pos in id_set(4), neg in id_set(4), k in 1..25usize) {
        prop_assert!(mrr_at_k(&x, &pos, k) <= mrr_at_k(&x, &pos, k + 1));
        if let (Some(a), Some(b)) = (neg_recall_at_k(&x, &neg, k), neg_recall_at_k(&x, &neg, k + 1)) {
            prop_assert!(a <= b);
        }
    }

    #[test]
    fn metrics_ignore_affine_rescaling(
        x in ranked_list(),
        pos in id_set(4),
        neg in id_set(4),
        k in 1..25usize,
        scale_exp in 0..4i32,
        shift in -5..5i32,
    ) {
        let scale = 2f64.powi(scale_exp);
        let y = RankedList::from_pairs(x.iter().map(|d| (d.doc_id.clone(), d.score * scale + shift as f64))).unwrap();
        prop_assert_eq!(x.ids().collect::<Vec<_>>(), y.ids().collect::<Vec<_>>());
        prop_assert_eq!(mrr_at_k(&x, &pos, k), mrr_at_k(&y, &pos, k));
        prop_assert_eq!(neg_recall_at_k(&x, &neg, k), neg_recall_at_k(&y, &neg, k));
    }

    #[test]
    fn hashed_bow_is_additive_and_order_free(
        a in prop::collection::vec("[a-z]{1,4}", 0..8),
        b in prop::collection::vec("[a-z]{1,4}", 0..8),
        seed in any::<u64>(),
    ) {
        let (sa, sb) = (a.join(" "), b.join(" "));
        let joined = hashed_bow_embed(&format!("{sa} {sb}"), 32, seed);
        let (ea, eb) = (hashed_bow_embed(&sa, 32, seed), hashed_bow_embed(&sb, 32, seed));
        for i in 0..32 {
            prop_assert_eq!(joined.values()[i], ea.values()[i] + eb.values()[i]);
        }
        let mut rev = a.clone();
        rev.reverse();
        prop_assert_eq!(hashed_bow_embed(&rev.join(" "), 32, seed), ea);
    }

    #[test]
    fn dot_is_symmetric(v in prop::collection::vec((-100i32..100, -100i32..100), 1..64)) {
        let a: Vec<f32> = v.iter().map(|p| p.0 as f32 / 7.0).collect();
        let b: Vec<f32> = v.iter().map(|p| p.1 as f32 / 3.0).collect();
        prop_assert_eq!(dot(&a, &b), dot(&b, &a));
    }

    #[test]
    fn stats_ignore_order(
        raw in prop::collection::vec((0..5usize, id_set(3), id_set(3)), 1..20),
        perm_seed in any::<u64>(),
    ) {
        let types = [QuestionType::And, QuestionType::Or, QuestionType::Not, QuestionType::Simple, QuestionType::Disjunctive];
        let judgments: Vec<Judgment> = raw
            .into_iter()
            .enumerate()
            .map(|(i, (t, mut pos, neg))| {
                pos.insert("p-extra".into());
                let neg: BTreeSet<String> = neg.difference(&pos).cloned().collect();
                Judgment::new(format!("q{i}"), format!("what {i}?"), types[t], pos, neg).unwrap()
            })
            .collect();
        let mut shuffled = judgments.clone();
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(perm_seed));
        let stats = compute_stats(&judgments);
        prop_assert_eq!(&stats, &compute_stats(&shuffled));
        for s in stats.per_type.values() {
            prop_assert!(s.avg_positives >= 1.0);
        }

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.jsonl");
        save_judgments(&path, &judgments).unwrap();
        prop_assert_eq!(load_judgments(&path).unwrap(), judgments);
    }
}

fn small_corpus(words: &[Vec<u8>]) -> Corpus {
    const VOCAB: [&str; 10] = [
        "ash", "birch", "cedar", "dune", "elm", "fir", "gale", "hazel", "iris", "jade",
    ];
    Corpus::new(
        words
            .iter()
            .enumerate()
            .map(|(i, ws)| {
                let text: Vec<&str> = ws
                    .iter()
                    .map(|w| VOCAB[*w as usize % VOCAB.len()])
                    .collect();
                Passage::new(format!("p{i:03}"), text.join(" "))
            })
            .collect(),
    )
    .unwrap()
}

fn vocab_expr() -> impl Strategy<Value = BooleanExpr> {
    prop::sample::select(vec![
        "ash",
        "birch cedar",
        "dune",
        "elm fir",
        "gale",
        "hazel iris jade",
    ])
    .prop_map(BooleanExpr::atom)
    .prop_recursive(2, 8, 2, |inner| {
        (0..3u8, inner.clone(), inner).prop_map(|(op, l, r)| match op {
            0 => BooleanExpr::and(l, r),
            1 => BooleanExpr::or(l, r),
            _ => BooleanExpr::not(l, r),
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_k_is_prefix_of_full_sort(
        words in prop::collection::vec(prop::collection::vec(0u8..10, 1..5), 1..40),
        q in prop::collection::vec(0u8..10, 1..4),
        k in 1..45usize,
    ) {
        let corpus = small_corpus(&words);
        let idx = build_index(&corpus, &EmbedderSpec::hashed_bow(16, 1), Similarity::Cosine).unwrap();
        let query = small_corpus(&[q]).passages()[0].text.clone();
        let full = idx.top_k(&query, corpus.len()).unwrap();
        let top = idx.top_k(&query, k).unwrap();
        prop_assert_eq!(top.items(), full.top(k));
        let next = idx.top_k(&query, k + 1).unwrap();
        prop_assert_eq!(&next.items()[..top.len()], top.items());
    }

    #[test]
    fn hard_not_guarantee_holds_through_evaluation(
        words in prop::collection::vec(prop::collection::vec(0u8..10, 1..5), 1..40),
        kept in vocab_expr(),
        negated in vocab_expr(),
        final_k in 1..8usize,
    ) {
        let corpus = small_corpus(&words);
        let idx = build_index(&corpus, &EmbedderSpec::hashed_bow(16, 1), Similarity::Cosine).unwrap();
        let policy = MergePolicy::default().with_final_k(final_k);
        let expr = BooleanExpr::not(kept, negated.clone());
        let out = evaluate_expr(&idx, &expr, &policy).unwrap();
        let excluded = evaluate_untruncated(&idx, &negated, &policy).unwrap();
        for d in out.iter() {
            prop_assert!(!excluded.contains(&d.doc_id));
        }
        prop_assert_eq!(evaluate_expr(&idx, &expr, &policy).unwrap(), out);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn template_pipeline_labels_hold(seed in any::<u64>(), topics in 3..8usize, per_topic in 2..6usize) {
        let synth = synth_corpus(&SynthSpec { n_topics: topics, passages_per_topic: per_topic, seed, ..SynthSpec::default() });
        let spec = PipelineSpec {
            embedder: EmbedderSpec::hashed_bow(64, 0),
            rank: 16,
            stop: StopRule::TargetCount(topics),
            generator: GeneratorSpec { include_atomic: true, ..GeneratorSpec::template(seed, 4) },
            ..PipelineSpec::default()
        };
        let out = run_pipeline(&synth.corpus, &spec, None).unwrap();
        prop_assert!(!out.questions.is_empty());
        let mut kinds = BTreeMap::new();
        for q in &out.questions {
            prop_assert!(check_labels(q).is_ok(), "{:?}", q);
            *kinds.entry(q.qtype).or_insert(0usize) += 1;
            let n = q.candidate_ids.len();
            let (p, m) = (q.positives.len(), q.negatives.len());
            let want = match q.qtype {
                QuestionType::Simple => (1, 0),
                QuestionType::Disjunctive => (n, 0),
                QuestionType::And => (1, n - 1),
                QuestionType::Or => (2, n - 2),
                QuestionType::Not => (n - 1, 1),
            };
            prop_assert_eq!((p, m), want);
        }
        prop_assert!(kinds.contains_key(&QuestionType::And));
        for j in &out.judgments {
            prop_assert!(j.positives.is_disjoint(&j.negatives));
            prop_assert!(j.validate_against(&synth.corpus).is_ok());
        }
    }
}
