//! Token cost accounting.

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Default fine-tuning price in currency units per 1000 tokens.
pub const FINETUNE_RATE_PER_1K: f64 = 0.0080;

/// `tokens / 1000 × rate`.
pub fn estimate_cost<T: Float>(tokens: u64, rate_per_1k: T) -> T {
    let tokens = T::from(tokens).expect("token count fits the scalar type");
    let thousand = T::from(1000.0).expect("1000 is representable");
    tokens / thousand * rate_per_1k
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEntry<T> {
    pub label: String,
    pub tokens: u64,
    pub cost: T,
}

/// Append-only list of priced token counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger<T> {
    rate_per_1k: T,
    entries: Vec<CostEntry<T>>,
}

impl Default for CostLedger<f64> {
    fn default() -> Self {
        CostLedger::new(FINETUNE_RATE_PER_1K)
    }
}

impl<T: Float> CostLedger<T> {
    pub fn new(rate_per_1k: T) -> Self {
        CostLedger {
            rate_per_1k,
            entries: Vec::new(),
        }
    }

    pub fn rate(&self) -> T {
        self.rate_per_1k
    }

    /// Prices `tokens` at the ledger rate and appends the entry.
    pub fn record(&mut self, label: impl Into<String>, tokens: u64) -> T {
        let cost = estimate_cost(tokens, self.rate_per_1k);
        self.entries.push(CostEntry {
            label: label.into(),
            tokens,
            cost,
        });
        cost
    }

    pub fn entries(&self) -> &[CostEntry<T>] {
        &self.entries
    }

    pub fn total_tokens(&self) -> u64 {
        self.entries.iter().map(|e| e.tokens).sum()
    }

    pub fn total_cost(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| acc + e.cost)
    }
}
