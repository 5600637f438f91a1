use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub label: String,
    /// Words sent by each worker to the master.
    pub up_words: Vec<usize>,
    /// Words sent by the master to each worker.
    pub down_words: Vec<usize>,
}

impl RoundRecord {
    pub fn total(&self) -> usize {
        self.up_words.iter().sum::<usize>() + self.down_words.iter().sum::<usize>()
    }
}

/// Per-round, per-link word counts. A word is one scalar or one index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommLedger {
    pub rounds: Vec<RoundRecord>,
}

impl CommLedger {
    pub fn total_words(&self) -> usize {
        self.rounds.iter().map(RoundRecord::total).sum()
    }

    pub fn up_words(&self) -> usize {
        self.rounds.iter().flat_map(|r| &r.up_words).sum()
    }

    pub fn down_words(&self) -> usize {
        self.rounds.iter().flat_map(|r| &r.down_words).sum()
    }

    /// Total over rounds whose label starts with `prefix`.
    pub fn words_with_prefix(&self, prefix: &str) -> usize {
        self.rounds.iter().filter(|r| r.label.starts_with(prefix)).map(RoundRecord::total).sum()
    }

    pub fn round(&self, label: &str) -> Option<&RoundRecord> {
        self.rounds.iter().find(|r| r.label == label)
    }

    pub fn extend(&mut self, other: CommLedger) {
        self.rounds.extend(other.rounds);
    }

    /// One JSON object per round, newline-terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let rounds = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<std::result::Result<_, _>>()?;
        Ok(CommLedger { rounds })
    }
}
