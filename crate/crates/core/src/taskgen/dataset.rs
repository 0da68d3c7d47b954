use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automata::{parse_hoa, Automaton, HoaError};
use crate::fixtures;
use crate::rng;

use super::{build_tce_task, build_tte_task, split_difficulty_by, EffectPolicy, Feature, Task, TaskError};

/// Attempts (fresh seeds) per task before generation gives up.
const ATTEMPTS: usize = 256;

/// Stream offset separating causality tasks from trace-acceptance tasks.
const TCE_STREAMS: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct GenConfig {
    pub master_seed: u64,
    pub trace_length: usize,
    /// Probability that a trace-acceptance task gets a rejected mutant.
    pub negative_rate: f64,
    pub effect_policy: EffectPolicy,
    pub max_effect_depth: usize,
    /// Top-n per feature for the hard split; 10% of each family when unset.
    pub hard_top_n: Option<usize>,
    pub tte_count: usize,
    pub tce_count: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            master_seed: 0,
            trace_length: 10,
            negative_rate: 0.5,
            effect_policy: EffectPolicy::LatestOutput,
            max_effect_depth: 8,
            hard_top_n: None,
            tte_count: 400,
            tce_count: 400,
        }
    }
}

/// Named automata to draw tasks from, sorted by name.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub automata: Vec<(String, Automaton)>,
}

impl Corpus {
    pub fn new(mut automata: Vec<(String, Automaton)>) -> Self {
        automata.sort_by(|a, b| a.0.cmp(&b.0));
        Corpus { automata }
    }

    pub fn builtin() -> Self {
        load_corpus(fixtures::ALL.iter().map(|(n, t)| (n.to_string(), t.to_string()))).expect("fixtures parse")
    }
}

/// Parses `(name, HOA text)` pairs into a corpus.
pub fn load_corpus(texts: impl IntoIterator<Item = (String, String)>) -> Result<Corpus, (String, HoaError)> {
    let automata = texts
        .into_iter()
        .map(|(name, text)| parse_hoa(&text).map(|a| (name.clone(), a)).map_err(|e| (name, e)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Corpus::new(automata))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub tte: Vec<Task>,
    pub tce: Vec<Task>,
}

impl Dataset {
    /// One compact JSON record per line.
    pub fn to_jsonl(tasks: &[Task]) -> String {
        tasks.iter().map(|t| serde_json::to_string(t).expect("tasks always serialize") + "\n").collect()
    }
}

fn build_family(
    corpus: &[(String, Automaton)],
    count: usize,
    prefix: &str,
    stream_offset: u64,
    cfg: &GenConfig,
    build: impl Fn(&Automaton, u64) -> Result<Task, TaskError> + Sync,
) -> Result<Vec<Task>, TaskError> {
    if count > 0 && corpus.is_empty() {
        return Err(TaskError::NoOutputs);
    }
    (0..count)
        .into_par_iter()
        .map(|i| {
            let id = format!("{prefix}-{i:05}");
            let (name, a) = &corpus[i % corpus.len()];
            let mut stream = rng::stream(cfg.master_seed, stream_offset + i as u64);
            let mut last = None;
            for _ in 0..ATTEMPTS {
                match build(a, rng::next_seed(&mut stream)) {
                    Ok(mut task) => {
                        task.id = id;
                        task.source = name.clone();
                        return Ok(task);
                    }
                    Err(e) => last = Some(e),
                }
            }
            Err(TaskError::Exhausted { id, attempts: ATTEMPTS, last: Box::new(last.expect("at least one attempt")) })
        })
        .collect()
}

fn top_n(cfg: &GenConfig, count: usize) -> usize {
    cfg.hard_top_n.unwrap_or(count.div_ceil(10))
}

fn mark(tasks: Vec<Task>, n: usize, features: &[Feature]) -> Vec<Task> {
    let (normal, hard) = split_difficulty_by(&tasks, n, features);
    let mut all: Vec<Task> = normal.into_iter().chain(hard).collect();
    all.sort_by(|a, b| a.id.cmp(&b.id));
    all
}

/// Builds both task families. Task `i` of a family uses automaton
/// `i mod |corpus|` (causality tasks only draw from automata with outputs)
/// and seeds drawn from its own stream of the master seed, so the result
/// depends only on `(corpus, cfg)`.
pub fn generate_dataset(corpus: &Corpus, cfg: &GenConfig) -> Result<Dataset, TaskError> {
    let tte = build_family(&corpus.automata, cfg.tte_count, "tte", 0, cfg, |a, seed| {
        build_tte_task(a, seed, cfg.trace_length, cfg.negative_rate)
    })?;
    let controllers: Vec<(String, Automaton)> =
        corpus.automata.iter().filter(|(_, a)| a.outputs().next().is_some()).cloned().collect();
    let tce = build_family(&controllers, cfg.tce_count, "tce", TCE_STREAMS, cfg, |a, seed| {
        build_tce_task(a, seed, cfg.trace_length, cfg.effect_policy, cfg.max_effect_depth)
    })?;
    Ok(Dataset {
        tte: mark(tte, top_n(cfg, cfg.tte_count), &Feature::TRACE),
        tce: mark(tce, top_n(cfg, cfg.tce_count), &Feature::ALL),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taskgen::{recompute_ground_truth, Difficulty};

    fn small() -> GenConfig {
        GenConfig { tte_count: 30, tce_count: 30, master_seed: 11, ..GenConfig::default() }
    }

    #[test]
    fn generation_is_reproducible() {
        let corpus = Corpus::builtin();
        let a = generate_dataset(&corpus, &small()).unwrap();
        let b = generate_dataset(&corpus, &small()).unwrap();
        assert_eq!(Dataset::to_jsonl(&a.tte), Dataset::to_jsonl(&b.tte));
        assert_eq!(Dataset::to_jsonl(&a.tce), Dataset::to_jsonl(&b.tce));
        let other = generate_dataset(&corpus, &GenConfig { master_seed: 12, ..small() }).unwrap();
        assert_ne!(Dataset::to_jsonl(&a.tce), Dataset::to_jsonl(&other.tce));
    }

    #[test]
    fn generated_tasks_recompute() {
        let d = generate_dataset(&Corpus::builtin(), &small()).unwrap();
        assert_eq!(d.tte.len(), 30);
        assert_eq!(d.tce.len(), 30);
        assert!(d.tce.iter().all(|t| t.source != "mod3_dfa"));
        for t in d.tte.iter().chain(&d.tce) {
            assert_eq!(recompute_ground_truth(t).unwrap(), t.body, "{}", t.id);
        }
        let hard = d.tce.iter().filter(|t| t.difficulty == Difficulty::Hard).count();
        assert!((3..=15).contains(&hard));
        assert_eq!(d.tte[0].id, "tte-00000");
    }

    #[test]
    fn config_keys() {
        let cfg: GenConfig = serde_json::from_str(
            r#"{"masterSeed": 5, "traceLength": 12, "negativeRate": 0.25, "effectPolicy": {"fixed-depth": 3}, "maxEffectDepth": 6, "hardTopN": 4}"#,
        )
        .unwrap();
        assert_eq!(cfg.effect_policy, EffectPolicy::FixedDepth(3));
        assert_eq!(cfg.hard_top_n, Some(4));
        assert_eq!(cfg.tte_count, 400);
        let latest: GenConfig = serde_json::from_str(r#"{"effectPolicy": "latest-output"}"#).unwrap();
        assert_eq!(latest.effect_policy, EffectPolicy::LatestOutput);
        assert!(serde_json::from_str::<GenConfig>(r#"{"seed": 1}"#).is_err());
    }
}
