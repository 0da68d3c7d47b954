use chronotask_core::causality::CausalLabel;
use chronotask_core::evaluation::{canonicalize_label, parse_tce_answer, score_tce_ap, score_tce_ts, CanonicalTce, Counts};
use proptest::prelude::*;

fn literal() -> impl Strategy<Value = String> {
    (prop::sample::select(vec!["a", "b", "c", "r", "in_0"]), any::<bool>())
        .prop_map(|(n, pos)| if pos { n.to_string() } else { format!("!{n}") })
}

fn step() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(literal(), 0..4).prop_map(|lits| {
        if lits.is_empty() {
            vec!["no constraints".to_string()]
        } else {
            vec![lits.join(" and ")]
        }
    })
}

fn label() -> impl Strategy<Value = CausalLabel> {
    prop::collection::vec(step(), 1..6).prop_map(|steps| {
        let map = steps.into_iter().enumerate().map(|(i, s)| (i as u32, s)).collect();
        CausalLabel([("XX g".to_string(), map)].into_iter().collect())
    })
}

fn shuffle_case(label: &CausalLabel) -> CanonicalTce {
    // Reverse literal order, upper-case the connective and pad with blanks.
    let mut v = serde_json::to_value(label).unwrap();
    for steps in v.as_object_mut().unwrap().values_mut() {
        for list in steps.as_object_mut().unwrap().values_mut() {
            let s = list[0].as_str().unwrap().to_string();
            let mut parts: Vec<&str> = s.split(" and ").collect();
            parts.reverse();
            list[0] = serde_json::Value::String(format!("  {}  ", parts.join(" AND ")));
        }
    }
    parse_tce_answer(&v).unwrap()
}

proptest! {
    #[test]
    fn self_scores_are_perfect(l in label()) {
        let c = canonicalize_label(&l);
        let ap = score_tce_ap(&c, &c);
        let ts = score_tce_ts(&c, &c);
        prop_assert_eq!(ap.metrics().f1, 1.0);
        prop_assert_eq!(ts.metrics().f1, 1.0);
        prop_assert_eq!(ts.tp as usize, l.0["XX g"].len());
    }

    #[test]
    fn canonicalization_forgives_layout(l in label()) {
        let c = canonicalize_label(&l);
        prop_assert_eq!(shuffle_case(&l), c.clone());
        let again = canonicalize_label(&CausalLabel(
            c.iter()
                .map(|(e, steps)| (e.clone(), steps.iter().map(|(k, v)| (*k, vec![v.join(" and ")])).collect()))
                .collect(),
        ));
        prop_assert_eq!(again, c);
    }

    #[test]
    fn metrics_are_bounded(p in label(), g in label()) {
        let (p, g) = (canonicalize_label(&p), canonicalize_label(&g));
        for counts in [score_tce_ap(&p, &g), score_tce_ts(&p, &g)] {
            let m = counts.metrics();
            for x in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
            prop_assert_eq!(m.f1 == 1.0, counts.fp == 0 && counts.fn_ == 0 && counts.tp > 0);
            if counts.tp == 0 {
                prop_assert_eq!(m.f1, 0.0);
            }
        }
    }

    #[test]
    fn counts_add_over_disjoint_effects(p in label(), g in label(), q in label(), h in label()) {
        let rename = |l: &CausalLabel, name: &str| CausalLabel(l.0.values().map(|v| (name.to_string(), v.clone())).collect());
        let (p2, h2) = (rename(&q, "XX h"), rename(&h, "XX h"));
        let mut both_p = p.clone();
        both_p.0.extend(p2.0.clone());
        let mut both_g = g.clone();
        both_g.0.extend(h2.0.clone());
        let c = |l: &CausalLabel| canonicalize_label(l);
        let sum: Counts = score_tce_ap(&c(&p), &c(&g)) + score_tce_ap(&c(&p2), &c(&h2));
        prop_assert_eq!(score_tce_ap(&c(&both_p), &c(&both_g)), sum);
        let sum_ts = score_tce_ts(&c(&p), &c(&g)) + score_tce_ts(&c(&p2), &c(&h2));
        prop_assert_eq!(score_tce_ts(&c(&both_p), &c(&both_g)), sum_ts);
    }
}
