use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{request_digest, BackendError, ChatBackend, CostMeter};
use crate::prompt_kit::Message;

/// One line of a transcript file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub step: u64,
    pub request_digest: String,
    pub response: String,
    pub prompt_tokens: u64,
    pub output_tokens: u64,
    pub wall_time_s: f64,
}

impl TranscriptEntry {
    pub fn meter(&self) -> CostMeter {
        CostMeter::new(self.prompt_tokens, self.output_tokens, self.wall_time_s)
    }
}

/// Appends one entry as a JSON line.
pub fn record(path: &Path, entry: &TranscriptEntry) -> Result<(), BackendError> {
    let io = |e: std::io::Error| BackendError::Io(format!("{}: {e}", path.display()));
    let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    let mut line = serde_json::to_string(entry).expect("entry serialises");
    line.push('\n');
    file.write_all(line.as_bytes()).map_err(io)
}

pub fn load_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, BackendError> {
    let file = File::open(path).map_err(|_| BackendError::TranscriptMissing(path.display().to_string()))?;
    let mut entries = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| BackendError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry =
            serde_json::from_str(&line).map_err(|e| BackendError::Io(format!("{}:{}: {e}", path.display(), n + 1)))?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Serves recorded responses in order, ignoring the request content.
pub struct ReplayBackend {
    entries: std::vec::IntoIter<TranscriptEntry>,
}

impl ReplayBackend {
    pub fn open(path: &Path) -> Result<Self, BackendError> {
        Ok(Self::from_entries(load_transcript(path)?))
    }

    pub fn from_entries(entries: Vec<TranscriptEntry>) -> Self {
        Self { entries: entries.into_iter() }
    }
}

impl ChatBackend for ReplayBackend {
    fn chat(&mut self, _: &[Message]) -> Result<(String, CostMeter), BackendError> {
        let entry = self.entries.next().ok_or(BackendError::TranscriptExhausted)?;
        let meter = entry.meter();
        Ok((entry.response, meter))
    }
}

/// Wraps another backend and appends every successful exchange to a transcript.
pub struct RecordingBackend<B> {
    inner: B,
    path: PathBuf,
    step: u64,
}

impl<B: ChatBackend> RecordingBackend<B> {
    pub fn new(inner: B, path: impl Into<PathBuf>) -> Self {
        Self { inner, path: path.into(), step: 0 }
    }
}

impl<B: ChatBackend> ChatBackend for RecordingBackend<B> {
    fn chat(&mut self, messages: &[Message]) -> Result<(String, CostMeter), BackendError> {
        let (response, meter) = self.inner.chat(messages)?;
        record(
            &self.path,
            &TranscriptEntry {
                step: self.step,
                request_digest: request_digest(messages),
                response: response.clone(),
                prompt_tokens: meter.prompt_tokens,
                output_tokens: meter.output_tokens,
                wall_time_s: meter.wall_time_s,
            },
        )?;
        self.step += 1;
        Ok((response, meter))
    }
}

impl ChatBackend for Box<dyn ChatBackend> {
    fn chat(&mut self, messages: &[Message]) -> Result<(String, CostMeter), BackendError> {
        (**self).chat(messages)
    }
}
