//! Constrained codec selection.
//!
//! Every candidate is evaluated on the calibration dataset. Among those
//! whose mean gain and mean error meet the constraints, the one with the
//! lowest mean weighted error wins; ties go to the lower mean error, then to
//! the lexicographically smaller name. Candidate order never matters.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::goal::GoalEvaluator;
use crate::metrics::ConstraintSpec;
use crate::pipeline::{evaluate_config, CodecConfig, EvaluationSummary, PipelineOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SelectionOutcome {
    Selected {
        config: String,
    },
    /// No candidate is feasible. Names are ranked by total constraint
    /// violation, smallest first, then by name.
    Infeasible {
        ranking: Vec<String>,
    },
}

impl SelectionOutcome {
    pub fn selected(&self) -> Option<&str> {
        match self {
            SelectionOutcome::Selected { config } => Some(config),
            SelectionOutcome::Infeasible { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub constraints: ConstraintSpec,
    pub outcome: SelectionOutcome,
    /// Every candidate's summary, sorted by name, verdicts filled in.
    pub summaries: Vec<EvaluationSummary>,
}

impl SelectionReport {
    pub fn summary(&self, name: &str) -> Option<&EvaluationSummary> {
        self.summaries.iter().find(|s| s.config == name)
    }
}

fn preference(a: &EvaluationSummary, b: &EvaluationSummary) -> Ordering {
    a.mean_weighted_error
        .total_cmp(&b.mean_weighted_error)
        .then(a.mean_error.total_cmp(&b.mean_error))
        .then_with(|| a.config.cmp(&b.config))
}

/// Applies the selection rule to already computed summaries.
pub fn choose(summaries: &[EvaluationSummary], spec: &ConstraintSpec) -> Result<SelectionOutcome> {
    if summaries.is_empty() {
        return Err(Error::EmptyConfigSet);
    }
    let feasible = summaries
        .iter()
        .filter(|s| spec.check(s.mean_gain, s.mean_error).is_feasible())
        .min_by(|a, b| preference(a, b));
    if let Some(best) = feasible {
        return Ok(SelectionOutcome::Selected {
            config: best.config.clone(),
        });
    }
    let mut ranked: Vec<(f64, &str)> = summaries
        .iter()
        .map(|s| (spec.violation(s.mean_gain, s.mean_error), s.config.as_str()))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(SelectionOutcome::Infeasible {
        ranking: ranked.into_iter().map(|(_, n)| n.to_owned()).collect(),
    })
}

/// Evaluates every candidate and selects one.
pub fn select(
    configs: &[CodecConfig],
    dataset: &Dataset,
    evaluator: &dyn GoalEvaluator,
    channel: &ChannelConfig,
    options: PipelineOptions,
    spec: &ConstraintSpec,
    seed: u64,
) -> Result<SelectionReport> {
    if configs.is_empty() {
        return Err(Error::EmptyConfigSet);
    }
    spec.validate()?;
    let mut names = HashSet::new();
    for c in configs {
        if !names.insert(c.name.as_str()) {
            return Err(Error::DuplicateConfigName(c.name.clone()));
        }
    }
    let mut summaries = configs
        .iter()
        .map(|c| {
            evaluate_config(c, dataset, evaluator, channel, options, seed)
                .map(|s| s.with_verdict(spec))
        })
        .collect::<Result<Vec<_>>>()?;
    summaries.sort_by(|a, b| a.config.cmp(&b.config));
    let outcome = choose(&summaries, spec)?;
    Ok(SelectionReport {
        constraints: *spec,
        outcome,
        summaries,
    })
}
