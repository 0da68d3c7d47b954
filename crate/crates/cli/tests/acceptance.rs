//! End-to-end acceptance checks. Prints one PASS/FAIL line per check and
//! exits non-zero when any of them fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use chronotask_core::automata::parse_hoa;
use chronotask_core::causality::{build_cause_table, but_for_constraints, minimal_causes, parse_effect, CausalLabel};
use chronotask_core::evaluation::{
    canonicalize_label, parse_tce_answer, reference_completion, score_completion, score_tce_ap, score_tce_ts, Counts,
};
use chronotask_core::execution::{check_trace, mutate_trace, parse_semicolon, random_trace, ExecError};
use chronotask_core::fixtures;
use chronotask_core::taskgen::{
    build_prompt, default_shot, generate_dataset, split_difficulty, Corpus, Difficulty, DifficultyFeatures, GenConfig,
    Task, TaskBody,
};
use chronotask_runner::mock::{MockReply, MockServer};
use serde_json::{json, Value};

type Check = Result<String, String>;
type Criterion<'a> = (&'static str, Duration, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chronotask(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_chronotask")).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("chronotask {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read_tasks(path: &Path) -> Vec<Task> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn causality_golden() -> Check {
    let a = parse_hoa(fixtures::GRANT_CONTROLLER).map_err(|e| e.to_string())?;
    let t = parse_semicolon("!g&!r;!g&r;!g&!r;g&r", &a.aps).map_err(|e| e.to_string())?;
    let e = parse_effect("XXX g", &a.aps).map_err(|e| e.to_string())?;
    let gt = but_for_constraints(&a, &t, &e).map_err(|e| e.to_string())?;
    let label = CausalLabel::from(&gt);
    let got = serde_json::to_string(&label.0["XXX g"]).unwrap();
    let want = r#"{"0":["no constraints"],"1":["no constraints"],"2":["no constraints"],"3":["r"]}"#;
    ensure(got == want, format!("got {got}"))?;
    let canonical = parse_tce_answer(&serde_json::from_str(&label.to_json_pretty()).unwrap());
    let frozen = parse_tce_answer(&json!({"XXX g": serde_json::from_str::<Value>(want).unwrap()}));
    ensure(canonical.is_some() && canonical == frozen, "canonical forms differ")?;
    Ok(got)
}

fn oracle_equivalence() -> Check {
    let (mut checked, mut with_literals) = (0, 0);
    let mut seed = 0;
    while checked < 250 {
        let this = seed;
        seed += 1;
        let Some(inst) = common::random_instance(this, 8, 2, 6) else { continue };
        let (a, t, e) = (&inst.automaton, &inst.trace, &inst.effect);
        let direct = but_for_constraints(a, t, e).map_err(|err| format!("seed {this}: {err}"))?;
        let table = build_cause_table(a, e).map_err(|err| format!("seed {this}: {err}"))?;
        let inputs: Vec<_> = t.steps.iter().map(|s| s.assignment).collect();
        let from_table = minimal_causes(&table, &inputs).map_err(|err| format!("seed {this}: {err}"))?;
        ensure(from_table == direct, format!("seed {this}: table and direct causes differ"))?;
        ensure(direct.steps == common::naive_causes(a, t, e), format!("seed {this}: brute force differs"))?;
        checked += 1;
        with_literals += usize::from(direct.literal_count() > 0);
    }
    Ok(format!("{checked} instances, {with_literals} with causal literals"))
}

fn generator_checker() -> Check {
    let automata: Vec<_> = fixtures::ALL.iter().map(|(n, text)| (*n, parse_hoa(text).unwrap())).collect();
    let (mut accepted, mut rejected, mut incorrigible) = (0, 0, 0);
    let mut seed = 0u64;
    while accepted < 1000 || rejected < 1000 {
        let (name, a) = &automata[seed as usize % automata.len()];
        let t = random_trace(a, 1 + (seed as usize % 15), seed).map_err(|e| format!("{name}: {e}"))?;
        ensure(check_trace(a, &t).accepted(), format!("{name} seed {seed}: walk rejected"))?;
        accepted += 1;
        match mutate_trace(a, &t, seed ^ 0x5eed) {
            Ok(m) => {
                ensure(!check_trace(a, &m).accepted(), format!("{name} seed {seed}: mutant accepted"))?;
                rejected += 1;
            }
            Err(ExecError::Incorrigible) => incorrigible += 1,
            Err(e) => return Err(format!("{name} seed {seed}: {e}")),
        }
        seed += 1;
    }
    Ok(format!(
        "{accepted} walks accepted, {rejected} mutants rejected ({incorrigible} incorrigible) over {} fixtures",
        automata.len()
    ))
}

fn metric_fixture() -> Check {
    let label = |v: Value| parse_tce_answer(&v).unwrap();
    let gt = label(json!({"e": {"0": ["a and b"], "1": ["b and c"], "2": ["c"]}}));
    let pred = label(json!({"e": {"0": ["a and c"], "1": ["b"], "2": ["c and d"]}}));
    let ts = score_tce_ts(&pred, &gt).metrics();
    ensure(ts.f1 == 0.0, format!("F1(TS) = {}", ts.f1))?;
    let ap = score_tce_ap(&pred, &gt);
    ensure(ap == Counts::new(3, 2, 2), format!("AP counts {ap:?}"))?;
    let m = ap.metrics();
    ensure(m.precision == 0.6 && m.recall == 0.6, format!("P={} R={}", m.precision, m.recall))?;

    let grant: CausalLabel = serde_json::from_value(
        json!({"XXX g": {"0": ["no constraints"], "1": ["no constraints"], "2": ["no constraints"], "3": ["r"]}}),
    )
    .unwrap();
    let grant = canonicalize_label(&grant);
    ensure(score_tce_ap(&grant, &grant).metrics().f1 == 1.0, "grant self-score")?;
    let d = generate_dataset(&Corpus::builtin(), &GenConfig { tte_count: 100, tce_count: 100, master_seed: 3, ..Default::default() })
        .map_err(|e| e.to_string())?;
    for task in d.tte.iter().chain(&d.tce) {
        let r = score_completion(task, "self", &reference_completion(task));
        ensure(r.ap_metrics.f1 == 1.0 && r.ts_metrics.f1 == 1.0, format!("{} self-scores below 1", task.id))?;
    }
    Ok("F1(TS)=0, P(AP)=R(AP)=3/5, self-score 1 on 200 tasks".into())
}

fn dataset_determinism(scratch: &Path) -> Check {
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let out = scratch.join(run);
        chronotask(&["gen", "--out", out.to_str().unwrap(), "--seed", "20240"])?;
        files.push((fs::read(out.join("tte.jsonl")).unwrap(), fs::read(out.join("tce.jsonl")).unwrap()));
    }
    ensure(files[0] == files[1], "dataset files differ between runs")?;
    let count = |bytes: &[u8]| bytes.iter().filter(|&&b| b == b'\n').count();
    let (tte, tce) = (count(&files[0].0), count(&files[0].1));
    ensure(tte == 400 && tce == 400, format!("{tte} tte and {tce} tce tasks"))?;
    Ok(format!("{tte} tte + {tce} tce tasks, byte-identical"))
}

fn difficulty_split() -> Check {
    let d = generate_dataset(&Corpus::builtin(), &GenConfig { tte_count: 0, tce_count: 20, ..Default::default() })
        .map_err(|e| e.to_string())?;
    // Task i gets features [i, 19-i, 7i mod 20, 3i mod 20, 10]; with n = 2 the
    // top ids are {19,18}, {0,1}, {17,14}, {13,6} and, all tied, {0,1}.
    let tasks: Vec<Task> = d
        .tce
        .into_iter()
        .enumerate()
        .map(|(i, mut t)| {
            t.features = DifficultyFeatures {
                effect_depth: i,
                hoa_states: 19 - i,
                transition_count: 7 * i % 20,
                causal_inputs_count: 3 * i % 20,
                unique_inputs_in_trace: 10,
            };
            t
        })
        .collect();
    let (normal, hard) = split_difficulty(&tasks, 2);
    let got: BTreeSet<String> = hard.iter().map(|t| t.id.clone()).collect();
    let want: BTreeSet<String> = [0, 1, 6, 13, 14, 17, 18, 19].iter().map(|i| format!("tce-{i:05}")).collect();
    ensure(got == want, format!("hard ids {got:?}"))?;
    ensure(normal.len() + hard.len() == 20, "tasks lost")?;
    ensure(hard.iter().all(|t| t.difficulty == Difficulty::Hard), "hard tasks not marked")?;
    ensure(normal.iter().all(|t| t.difficulty == Difficulty::Normal), "normal tasks not marked")?;
    Ok(format!("{} hard of {}", hard.len(), tasks.len()))
}

fn no_constraints_answer(task: &Task) -> String {
    let TaskBody::Tce { ground_truth, .. } = &task.body else { return String::new() };
    let label: serde_json::Map<String, Value> = ground_truth
        .0
        .iter()
        .map(|(effect, steps)| {
            let steps: serde_json::Map<String, Value> =
                steps.keys().map(|s| (s.to_string(), json!(["no constraints"]))).collect();
            (effect.clone(), Value::Object(steps))
        })
        .collect();
    format!("### JSON Ground Truth ###:\n{}\n", Value::Object(label))
}

/// Serves `answer(task)` for each task's prompt, runs the whole dataset
/// through the `run` and `score` commands and returns the run directory.
fn mock_run(scratch: &Path, name: &str, datasets: &[&Path], answer: fn(&Task) -> String) -> Result<std::path::PathBuf, String> {
    let tasks: Vec<Task> = datasets.iter().flat_map(|d| read_tasks(d)).collect();
    let replies: HashMap<String, String> =
        tasks.iter().map(|t| (build_prompt(t, default_shot(t.kind())), answer(t))).collect();
    let replies = Arc::new(replies);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let server = runtime.block_on(MockServer::start(Duration::ZERO, move |prompt| {
        MockReply::Text(replies.get(prompt).cloned().unwrap_or_default())
    }));
    let endpoint = scratch.join(format!("{name}-endpoint.json"));
    let cfg = json!({"baseUrl": server.base_url, "modelName": name, "maxParallel": 16, "backoffMs": 10});
    fs::write(&endpoint, cfg.to_string()).unwrap();
    let run_dir = scratch.join(name);
    let mut args = vec!["run", "--endpoint-config", endpoint.to_str().unwrap(), "--out-run-dir", run_dir.to_str().unwrap()];
    let mut score = vec!["score", "--run-dir", run_dir.to_str().unwrap()];
    for d in datasets {
        for a in [&mut args, &mut score] {
            a.extend(["--dataset", d.to_str().unwrap()]);
        }
    }
    chronotask(&args)?;
    ensure(server.requests() == tasks.len(), format!("{} requests for {} tasks", server.requests(), tasks.len()))?;
    chronotask(&score)?;
    Ok(run_dir)
}

fn mock_end_to_end(scratch: &Path) -> Check {
    let data = scratch.join("data");
    chronotask(&["gen", "--out", data.to_str().unwrap(), "--seed", "77"])?;
    let (tte, tce) = (data.join("tte.jsonl"), data.join("tce.jsonl"));

    let replay = mock_run(scratch, "replay", &[&tte, &tce], reference_completion)?;
    let rows: Vec<Value> = serde_json::from_str(&fs::read_to_string(replay.join("summary.json")).unwrap()).unwrap();
    let n: u64 = rows.iter().map(|r| r["n"].as_u64().unwrap()).sum();
    ensure(n == 800, format!("{n} tasks scored"))?;
    for r in &rows {
        ensure(r["f1Ap"] == 1.0 && r["f1Ts"] == 1.0, format!("replay row {r}"))?;
    }

    let blank = mock_run(scratch, "blank", &[&tce], no_constraints_answer)?;
    let tasks: HashMap<String, Task> = read_tasks(&tce).into_iter().map(|t| (t.id.clone(), t)).collect();
    let mut with_literals = 0;
    for line in fs::read_to_string(blank.join("scores.jsonl")).unwrap().lines() {
        let r: Value = serde_json::from_str(line).unwrap();
        let task = &tasks[r["taskId"].as_str().unwrap()];
        let TaskBody::Tce { ground_truth, .. } = &task.body else { unreachable!() };
        if ground_truth.literal_count() > 0 {
            with_literals += 1;
            let recall = r["apMetrics"]["recall"].as_f64().unwrap();
            ensure(recall < 1.0, format!("{}: recall {recall}", task.id))?;
        }
    }
    ensure(with_literals > 0, "no task has causal literals")?;
    Ok(format!("replay F1(AP)=F1(TS)=1 on {n} tasks; blank recall < 1 on {with_literals} tasks with causes"))
}

fn main() {
    let scratch = tempfile::tempdir().expect("scratch directory");
    let s = scratch.path();
    let checks: Vec<Criterion> = vec![
        ("causality golden", Duration::from_secs(1), Box::new(causality_golden)),
        ("oracle equivalence", Duration::from_secs(60), Box::new(oracle_equivalence)),
        ("generator/checker agreement", Duration::from_secs(30), Box::new(generator_checker)),
        ("metric fixture", Duration::MAX, Box::new(metric_fixture)),
        ("dataset determinism", Duration::from_secs(300), Box::new(move || dataset_determinism(&s.join("det")))),
        ("difficulty split", Duration::MAX, Box::new(difficulty_split)),
        ("mock end-to-end", Duration::MAX, Box::new(move || mock_end_to_end(&s.join("mock")))),
    ];
    let mut failed = 0;
    for (name, limit, check) in checks {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        let result = result.and_then(|msg| {
            if took > limit {
                Err(format!("took {took:.2?}, limit {limit:?}"))
            } else {
                Ok(msg)
            }
        });
        match result {
            Ok(msg) => println!("PASS {name} ({took:.2?}): {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL {name} ({took:.2?}): {msg}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
