//! `chronotask`: generate, run and score trace-acceptance and causality tasks.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chronotask_core::automata::{parse_hoa, random_controller, render_hoa_with, Automaton, ControllerShape, LeafStyle};
use chronotask_core::causality::{build_cause_table, but_for_constraints, minimal_causes, parse_effect, CausalLabel};
use chronotask_core::evaluation::{aggregate, score_completion, summary_csv, GroupKey, ScoreReport};
use chronotask_core::execution::{check_trace, parse_trace_string, transition_records};
use chronotask_core::taskgen::{
    build_prompt, default_shot, generate_dataset, load_corpus, split_difficulty_by, Corpus, Dataset, Feature,
    GenConfig, Task, TaskKind,
};
use chronotask_runner::{read_transcripts, run_suite, EndpointConfig};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "chronotask", version, about = "Temporal reasoning tasks from HOA controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate trace-acceptance and causality datasets.
    Gen {
        /// Directory of `.hoa` files; the built-in fixtures when omitted.
        #[arg(long)]
        spec_dir: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Tasks per family (overrides the config file).
        #[arg(long)]
        count: Option<usize>,
        /// Master seed (overrides the config file).
        #[arg(long)]
        seed: Option<u64>,
        /// JSON file with generation settings.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Recompute the hard/normal split of a dataset file in place.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        top_n: usize,
        /// Write here instead of overwriting the dataset.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query an endpoint with every task of one or more dataset files.
    Run {
        #[arg(long, required = true, num_args = 1..)]
        dataset: Vec<PathBuf>,
        #[arg(long)]
        endpoint_config: PathBuf,
        #[arg(long)]
        out_run_dir: PathBuf,
        /// Continue a run, skipping tasks that already have a transcript.
        #[arg(long)]
        resume: bool,
    },
    /// Score a run's transcripts and write per-task scores and a summary.
    Score {
        #[arg(long, required = true, num_args = 1..)]
        dataset: Vec<PathBuf>,
        #[arg(long)]
        run_dir: PathBuf,
        /// Output directory; the run directory when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "model,task")]
        group_by: Vec<String>,
    },
    /// Check a trace against an automaton.
    Check {
        #[arg(long)]
        automaton: PathBuf,
        /// Trace text, or a file holding it.
        #[arg(long)]
        trace: String,
    },
    /// Compute the causes of an effect on a trace.
    Causes {
        #[arg(long)]
        automaton: PathBuf,
        #[arg(long)]
        trace: String,
        /// Effect such as `XXX g`; may be repeated.
        #[arg(long, required = true)]
        effect: Vec<String>,
        /// Also read the causes off the exhaustive table and compare.
        #[arg(long)]
        table: bool,
    },
    /// Print the prompt of one task.
    Prompt {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        id: String,
    },
    /// Write random input-deterministic controllers as HOA files.
    SynthRandom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        states: usize,
        #[arg(long, default_value_t = 2)]
        inputs: usize,
        #[arg(long, default_value_t = 2)]
        outputs: usize,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_automaton(path: &Path) -> Result<Automaton> {
    parse_hoa(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn trace_text(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        read(path)
    } else {
        Ok(arg.to_string())
    }
}

fn read_tasks(path: &Path) -> Result<Vec<Task>> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn corpus_from_dir(dir: &Path) -> Result<Corpus> {
    let mut texts = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "hoa") {
            let name = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            texts.push((name, read(&path)?));
        }
    }
    if texts.is_empty() {
        bail!("no .hoa files in {}", dir.display());
    }
    load_corpus(texts).map_err(|(name, e)| anyhow::anyhow!("{name}.hoa: {e}"))
}

fn gen(spec_dir: Option<&Path>, out: &Path, count: Option<usize>, seed: Option<u64>, config: Option<&Path>) -> Result<()> {
    let mut cfg: GenConfig = match config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => GenConfig::default(),
    };
    if let Some(n) = count {
        cfg.tte_count = n;
        cfg.tce_count = n;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let corpus = match spec_dir {
        Some(dir) => corpus_from_dir(dir)?,
        None => Corpus::builtin(),
    };
    let dataset = generate_dataset(&corpus, &cfg)?;
    fs::create_dir_all(out)?;
    write(&out.join("tte.jsonl"), &Dataset::to_jsonl(&dataset.tte))?;
    write(&out.join("tce.jsonl"), &Dataset::to_jsonl(&dataset.tce))?;
    write(&out.join("config.json"), &(serde_json::to_string_pretty(&cfg)? + "\n"))?;
    println!("wrote {} trace-acceptance and {} causality tasks to {}", dataset.tte.len(), dataset.tce.len(), out.display());
    Ok(())
}

fn split(dataset: &Path, top_n: usize, out: Option<&Path>) -> Result<()> {
    let tasks = read_tasks(dataset)?;
    let mut result = Vec::with_capacity(tasks.len());
    for (kind, features) in [(TaskKind::Tte, &Feature::TRACE[..]), (TaskKind::Tce, &Feature::ALL[..])] {
        let family: Vec<Task> = tasks.iter().filter(|t| t.kind() == kind).cloned().collect();
        if family.is_empty() {
            continue;
        }
        let (normal, hard) = split_difficulty_by(&family, top_n, features);
        println!("{kind:?}: {} hard, {} normal", hard.len(), normal.len());
        result.extend(normal.into_iter().chain(hard));
    }
    let order: HashMap<&str, usize> = tasks.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    result.sort_by_key(|t| order[t.id.as_str()]);
    write(out.unwrap_or(dataset), &Dataset::to_jsonl(&result))
}

fn run(datasets: &[PathBuf], endpoint: &Path, run_dir: &Path, resume: bool) -> Result<()> {
    let cfg: EndpointConfig = serde_json::from_str(&read(endpoint)?).context("parsing the endpoint config")?;
    let mut tasks = Vec::new();
    for d in datasets {
        tasks.extend(read_tasks(d)?);
    }
    let runtime = tokio::runtime::Runtime::new()?;
    let outcome = runtime.block_on(run_suite(&cfg, &tasks, run_dir, resume))?;
    println!(
        "run {}: {} sent, {} already done, {} failed",
        outcome.run_id,
        outcome.sent,
        outcome.skipped,
        outcome.failures.len()
    );
    for (id, err) in &outcome.failures {
        eprintln!("{id}: {err}");
    }
    Ok(())
}

fn group_keys(names: &[String]) -> Result<Vec<GroupKey>> {
    names
        .iter()
        .filter(|n| !n.is_empty())
        .map(|n| serde_json::from_value(serde_json::Value::String(n.trim().to_lowercase())).with_context(|| format!("unknown group key `{n}`")))
        .collect()
}

fn score(datasets: &[PathBuf], run_dir: &Path, out: Option<&Path>, group_by: &[String]) -> Result<()> {
    let keys = group_keys(group_by)?;
    let transcripts = read_transcripts(run_dir)?;
    let model = transcripts.first().map(|t| t.model.clone()).unwrap_or_default();
    let completions: HashMap<&str, &str> = transcripts.iter().map(|t| (t.task_id.as_str(), t.completion.as_str())).collect();
    let mut reports: Vec<ScoreReport> = Vec::new();
    for d in datasets {
        for task in read_tasks(d)? {
            // Tasks without a transcript score as unanswered.
            let completion = completions.get(task.id.as_str()).copied().unwrap_or("");
            reports.push(score_completion(&task, &model, completion));
        }
    }
    let out = out.unwrap_or(run_dir);
    fs::create_dir_all(out)?;
    let lines: String = reports.iter().map(|r| serde_json::to_string(r).expect("reports serialize") + "\n").collect();
    write(&out.join("scores.jsonl"), &lines)?;
    let rows = aggregate(&reports, &keys);
    let csv = summary_csv(&rows, &keys);
    write(&out.join("summary.csv"), &csv)?;
    write(&out.join("summary.json"), &(serde_json::to_string_pretty(&rows)? + "\n"))?;
    print!("{csv}");
    Ok(())
}

fn check(automaton: &Path, trace: &str) -> Result<()> {
    let a = read_automaton(automaton)?;
    let t = parse_trace_string(&trace_text(trace)?, &a.aps)?;
    let verdict = check_trace(&a, &t);
    match &verdict.first_violation {
        None => println!("accepted ({} steps)", t.len()),
        Some((step, v)) => println!("rejected at step {step}: {}", serde_json::to_string(v)?),
    }
    for r in transition_records(&a, &t) {
        println!("{}", serde_json::to_string(&r)?);
    }
    if !verdict.accepted() {
        std::process::exit(1);
    }
    Ok(())
}

fn causes(automaton: &Path, trace: &str, effects: &[String], table: bool) -> Result<()> {
    let a = read_automaton(automaton)?;
    let t = parse_trace_string(&trace_text(trace)?, &a.aps)?;
    let mut label = CausalLabel::default();
    for text in effects {
        let e = parse_effect(text, &a.aps)?;
        let gt = but_for_constraints(&a, &t, &e)?;
        if table {
            let ct = build_cause_table(&a, &e)?;
            let inputs: Vec<_> = t.steps.iter().map(|s| s.assignment).collect();
            if minimal_causes(&ct, &inputs)? != gt {
                bail!("cause table disagrees with direct re-simulation for `{text}`");
            }
        }
        label.insert(&gt);
    }
    println!("{}", label.to_json_pretty());
    Ok(())
}

fn prompt(dataset: &Path, id: &str) -> Result<()> {
    let tasks = read_tasks(dataset)?;
    let task = tasks.iter().find(|t| t.id == id).with_context(|| format!("no task `{id}`"))?;
    print!("{}", build_prompt(task, default_shot(task.kind())));
    Ok(())
}

fn synth_random(out: &Path, count: usize, seed: u64, shape: ControllerShape) -> Result<()> {
    if shape.states == 0 || shape.inputs + shape.outputs > 16 {
        bail!("need at least one state and at most 16 APs");
    }
    fs::create_dir_all(out)?;
    let mut rng = chronotask_core::rng::seeded(seed);
    for i in 0..count {
        let a = random_controller(shape, chronotask_core::rng::next_seed(&mut rng));
        write(&out.join(format!("random_{i:03}.hoa")), &render_hoa_with(&a, LeafStyle::Name))?;
    }
    println!("wrote {count} controllers to {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen { spec_dir, out, count, seed, config } => {
            gen(spec_dir.as_deref(), &out, count, seed, config.as_deref())
        }
        Command::Split { dataset, top_n, out } => split(&dataset, top_n, out.as_deref()),
        Command::Run { dataset, endpoint_config, out_run_dir, resume } => {
            run(&dataset, &endpoint_config, &out_run_dir, resume)
        }
        Command::Score { dataset, run_dir, out, group_by } => score(&dataset, &run_dir, out.as_deref(), &group_by),
        Command::Check { automaton, trace } => check(&automaton, &trace),
        Command::Causes { automaton, trace, effect, table } => causes(&automaton, &trace, &effect, table),
        Command::Prompt { dataset, id } => prompt(&dataset, &id),
        Command::SynthRandom { out, count, seed, states, inputs, outputs } => {
            synth_random(&out, count, seed, ControllerShape { states, inputs, outputs })
        }
    }
}
