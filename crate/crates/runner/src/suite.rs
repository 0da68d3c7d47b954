use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use chronotask_core::taskgen::{build_prompt, default_shot, Task};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, Semaphore};
use tokio::task::JoinSet;

use crate::{Client, EndpointConfig, RunnerError, Usage};

pub const TRANSCRIPTS_FILE: &str = "transcripts.jsonl";
pub const ERRORS_FILE: &str = "errors.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transcript {
    pub run_id: String,
    pub task_id: String,
    pub prompt: String,
    pub completion: String,
    pub latency_ms: u64,
    pub usage: Option<Usage>,
    pub base_url: String,
    pub model: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct FailureRecord {
    run_id: String,
    task_id: String,
    error: String,
    timestamp: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuiteOutcome {
    pub run_id: String,
    pub sent: usize,
    /// Tasks skipped because the run already holds their transcript.
    pub skipped: usize,
    /// `(task id, error)` for tasks that got no transcript.
    pub failures: Vec<(String, String)>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, RunnerError> {
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let lines: Vec<String> = BufReader::new(file).lines().collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(record) => out.push(record),
            // Cut-off records from interrupted runs stay in the append-only log; skip them.
            Err(e) if e.is_eof() => log::warn!("{}:{}: ignoring truncated record", path.display(), i + 1),
            Err(source) => return Err(RunnerError::Record { path: path.to_path_buf(), line: i + 1, source }),
        }
    }
    Ok(out)
}

/// Transcripts recorded in a run directory, in file order.
pub fn read_transcripts(run_dir: &Path) -> Result<Vec<Transcript>, RunnerError> {
    read_records(&run_dir.join(TRANSCRIPTS_FILE))
}

/// Opens a JSONL file for appending, first terminating a cut-off last line.
fn open_append(path: &Path) -> Result<fs::File, RunnerError> {
    let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
    let len = file.metadata()?.len();
    if len > 0 {
        let mut last = [0u8];
        file.seek(SeekFrom::Start(len - 1))?;
        file.read_exact(&mut last)?;
        if last[0] != b'\n' {
            file.write_all(b"\n")?;
        }
    }
    Ok(file)
}

enum Record {
    Done(Transcript),
    Failed(FailureRecord),
}

/// Runs every task of `tasks` without a transcript in `run_dir`, at most
/// `max_parallel` requests at a time. Each transcript is appended as soon as
/// it arrives, by a single writer. Without `resume`, a directory that already
/// holds transcripts is refused rather than extended.
pub async fn run_suite(
    cfg: &EndpointConfig,
    tasks: &[Task],
    run_dir: &Path,
    resume: bool,
) -> Result<SuiteOutcome, RunnerError> {
    fs::create_dir_all(run_dir)?;
    let run_id = run_dir
        .canonicalize()?
        .file_name()
        .map_or_else(|| "run".to_string(), |n| n.to_string_lossy().into_owned());
    let transcripts_path = run_dir.join(TRANSCRIPTS_FILE);
    let done: HashSet<String> = read_transcripts(run_dir)?.into_iter().map(|t| t.task_id).collect();
    if !done.is_empty() && !resume {
        return Err(RunnerError::RunExists(run_dir.to_path_buf()));
    }
    let pending: Vec<&Task> = tasks.iter().filter(|t| !done.contains(&t.id)).collect();
    let mut outcome = SuiteOutcome { run_id: run_id.clone(), skipped: tasks.len() - pending.len(), ..Default::default() };
    if pending.is_empty() {
        return Ok(outcome);
    }

    let client = Client::new(cfg.clone())?;
    let mut transcripts = open_append(&transcripts_path)?;
    let mut errors = open_append(&run_dir.join(ERRORS_FILE))?;
    let (tx, mut rx) = mpsc::unbounded_channel::<Record>();
    let writer = tokio::task::spawn_blocking(move || -> Result<Vec<(String, String)>, RunnerError> {
        let mut failures = Vec::new();
        while let Some(record) = rx.blocking_recv() {
            match record {
                Record::Done(t) => {
                    let line = serde_json::to_string(&t).expect("transcripts serialize") + "\n";
                    transcripts.write_all(line.as_bytes())?;
                    transcripts.flush()?;
                }
                Record::Failed(f) => {
                    let line = serde_json::to_string(&f).expect("failures serialize") + "\n";
                    errors.write_all(line.as_bytes())?;
                    errors.flush()?;
                    failures.push((f.task_id, f.error));
                }
            }
        }
        Ok(failures)
    });

    let permits = Arc::new(Semaphore::new(cfg.max_parallel.max(1)));
    let mut jobs = JoinSet::new();
    for task in pending {
        let permit = permits.clone().acquire_owned().await.expect("semaphore stays open");
        let (client, tx, run_id) = (client.clone(), tx.clone(), run_id.clone());
        let task_id = task.id.clone();
        let prompt = build_prompt(task, default_shot(task.kind()));
        jobs.spawn(async move {
            let record = match client.complete(&prompt).await {
                Ok(c) => Record::Done(Transcript {
                    run_id,
                    task_id,
                    prompt,
                    completion: c.text,
                    latency_ms: c.latency.as_millis() as u64,
                    usage: c.usage,
                    base_url: client.config().base_url.clone(),
                    model: client.config().model_name.clone(),
                    timestamp: now(),
                }),
                Err(e) => Record::Failed(FailureRecord { run_id, task_id, error: e.to_string(), timestamp: now() }),
            };
            let _ = tx.send(record);
            drop(permit);
        });
        outcome.sent += 1;
    }
    drop(tx);
    while let Some(joined) = jobs.join_next().await {
        joined.expect("request task panicked");
    }
    outcome.failures = writer.await.expect("writer panicked")?;
    outcome.failures.sort();
    Ok(outcome)
}
