use std::collections::BTreeSet;

use chronotask_core::evaluation::{reference_completion, score_completion};
use chronotask_core::taskgen::{
    build_prompt, default_shot, generate_dataset, recompute_ground_truth, Corpus, Dataset, Difficulty, Feature,
    GenConfig, TaskBody,
};

fn config() -> GenConfig {
    GenConfig { master_seed: 2024, tte_count: 60, tce_count: 60, ..GenConfig::default() }
}

#[test]
fn every_task_recomputes_and_self_scores() {
    let d = generate_dataset(&Corpus::builtin(), &config()).unwrap();
    for task in d.tte.iter().chain(&d.tce) {
        assert_eq!(recompute_ground_truth(task).unwrap(), task.body, "{}", task.id);
        let report = score_completion(task, "replay", &reference_completion(task));
        assert!(!report.parse_failed);
        assert_eq!((report.ap_metrics.f1, report.ts_metrics.f1), (1.0, 1.0), "{}", task.id);
        let prompt = build_prompt(task, default_shot(task.kind()));
        assert!(prompt.contains(task.automaton_text.trim_end()));
    }
}

#[test]
fn jsonl_round_trips() {
    let d = generate_dataset(&Corpus::builtin(), &config()).unwrap();
    let text = Dataset::to_jsonl(&d.tce);
    let back: Vec<chronotask_core::taskgen::Task> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back, d.tce);
}

#[test]
fn hard_split_is_sound() {
    let d = generate_dataset(&Corpus::builtin(), &config()).unwrap();
    let n = 6;
    for (tasks, features) in [(&d.tte, &Feature::TRACE[..]), (&d.tce, &Feature::ALL[..])] {
        let mut top: BTreeSet<&str> = BTreeSet::new();
        for &f in features {
            let mut ranked: Vec<_> = tasks.iter().collect();
            ranked.sort_by(|a, b| b.features.get(f).cmp(&a.features.get(f)).then(a.id.cmp(&b.id)));
            top.extend(ranked.iter().take(n).map(|t| t.id.as_str()));
        }
        let hard: BTreeSet<&str> = tasks.iter().filter(|t| t.difficulty == Difficulty::Hard).map(|t| t.id.as_str()).collect();
        assert_eq!(hard, top);
    }
}

#[test]
fn negatives_follow_the_rate() {
    let d = generate_dataset(&Corpus::builtin(), &GenConfig { negative_rate: 0.0, ..config() }).unwrap();
    assert!(d.tte.iter().all(|t| matches!(&t.body, TaskBody::Tte { ground_truth, .. } if ground_truth.accepted)));
    let d = generate_dataset(&Corpus::builtin(), &GenConfig { negative_rate: 1.0, ..config() }).unwrap();
    assert!(d.tte.iter().all(|t| matches!(&t.body, TaskBody::Tte { ground_truth, .. } if !ground_truth.accepted)));
}
