//! Sends benchmark prompts to a chat-completion endpoint and keeps an
//! append-only transcript log per run directory.

mod client;
mod config;
#[cfg(feature = "mock")]
pub mod mock;
mod suite;

pub use client::{Client, Completion, Usage};
pub use config::EndpointConfig;
pub use suite::{read_transcripts, run_suite, SuiteOutcome, Transcript, ERRORS_FILE, TRANSCRIPTS_FILE};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error("environment variable `{0}` holding the API key is not set")]
    MissingKey(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint answered {status}: {body}")]
    Status { status: u16, body: String },
    #[error("endpoint returned no completion text")]
    EmptyCompletion,
    #[error("malformed endpoint response: {0}")]
    Malformed(String),
    #[error("{0} already holds transcripts; resume the run or pick a new directory")]
    RunExists(std::path::PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {source}")]
    Record { path: std::path::PathBuf, line: usize, source: serde_json::Error },
}
