//! Per-image payload budget, whole-payload erasures and latency accounting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{check_prob, Payload};
use crate::error::{Error, Result};
use crate::seed;

/// How the payload size is compared against the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetComparison {
    /// Within budget iff `size < budget`.
    #[default]
    Strict,
    /// Within budget iff `size <= budget`.
    Inclusive,
}

/// What happens to a payload that exceeds the budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetPolicy {
    /// Deliver it and flag the violation.
    #[default]
    Flag,
    /// Drop it.
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelConfig {
    /// Maximum payload size per image in bits.
    pub budget_bits: u64,
    /// Link rate, used only for latency reporting.
    pub rate_bps: f64,
    pub erasure_prob: f64,
    pub comparison: BudgetComparison,
    pub policy: BudgetPolicy,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            budget_bits: u64::MAX,
            rate_bps: 1e6,
            erasure_prob: 0.0,
            comparison: BudgetComparison::Strict,
            policy: BudgetPolicy::Flag,
        }
    }
}

impl ChannelConfig {
    pub fn with_budget(budget_bits: u64) -> Self {
        Self {
            budget_bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget_bits == 0 {
            return Err(Error::param("budget_bits", "must be at least 1"));
        }
        if !(self.rate_bps.is_finite() && self.rate_bps > 0.0) {
            return Err(Error::param(
                "rate_bps",
                format!("{} must be positive", self.rate_bps),
            ));
        }
        check_prob("erasure_prob", self.erasure_prob)
    }

    pub fn within_budget(&self, size_bits: u64) -> bool {
        match self.comparison {
            BudgetComparison::Strict => size_bits < self.budget_bits,
            BudgetComparison::Inclusive => size_bits <= self.budget_bits,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeliveryResult {
    pub delivered: bool,
    pub violated_budget: bool,
    pub erased: bool,
    pub latency_s: f64,
    pub payload_bits: u64,
}

/// Sends a payload across the link.
pub fn transmit(payload: &Payload, cfg: &ChannelConfig, seed: u64) -> DeliveryResult {
    transmit_bits(payload.size_bits(), cfg, seed)
}

/// Channel behaviour depends on the payload size only.
pub fn transmit_bits(size_bits: u64, cfg: &ChannelConfig, seed: u64) -> DeliveryResult {
    let violated_budget = !cfg.within_budget(size_bits);
    let erased = seed::rng(seed).random::<f64>() < cfg.erasure_prob;
    let dropped = violated_budget && cfg.policy == BudgetPolicy::Drop;
    DeliveryResult {
        delivered: !erased && !dropped,
        violated_budget,
        erased,
        latency_s: size_bits as f64 / cfg.rate_bps,
        payload_bits: size_bits,
    }
}
