use std::collections::BTreeMap;

use log::warn;
use serde::{Deserialize, Serialize};

use super::{EpisodeResult, EvalError, GoalResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub tasks: usize,
    pub successes: usize,
    pub sr: f64,
    pub spl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Sub-task success rate.
    pub sr: f64,
    pub spl: f64,
    /// Mean path length over successful sub-tasks; `None` without successes.
    pub acd: Option<f64>,
    /// Fraction of episodes whose every evaluated sub-task succeeded.
    pub episode_sr: f64,
    pub tasks: usize,
    pub successes: usize,
    pub episodes: usize,
    /// Sub-tasks left out because their goal was unreachable.
    pub excluded: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_category: BTreeMap<String, CategoryStats>,
}

/// `S · l / max(p, l)`; a zero-length success counts fully.
pub fn spl_term(g: &GoalResult, l: f64) -> f64 {
    if !g.success {
        return 0.0;
    }
    let m = g.path_length.max(l);
    if m > 0.0 {
        l / m
    } else {
        1.0
    }
}

pub fn compute_metrics(results: &[EpisodeResult]) -> Result<Report, EvalError> {
    let mut tasks = 0usize;
    let mut successes = 0usize;
    let mut spl_sum = 0.0;
    let mut acd_sum = 0.0;
    let mut excluded = 0usize;
    let mut episodes = 0usize;
    let mut episodes_ok = 0usize;
    let mut cats: BTreeMap<String, (usize, usize, f64)> = BTreeMap::new();

    for ep in results {
        let mut counted = 0;
        let mut all_ok = true;
        for (gi, g) in ep.goals.iter().enumerate() {
            let Some(l) = g.shortest else {
                warn!("{} goal {gi}: unreachable, excluded", ep.episode_id);
                excluded += 1;
                continue;
            };
            counted += 1;
            tasks += 1;
            let term = spl_term(g, l);
            spl_sum += term;
            let c = cats.entry(g.goal.report_category()).or_default();
            c.0 += 1;
            c.2 += term;
            if g.success {
                successes += 1;
                acd_sum += g.path_length;
                c.1 += 1;
            } else {
                all_ok = false;
            }
        }
        if counted > 0 {
            episodes += 1;
            if all_ok {
                episodes_ok += 1;
            }
        }
    }
    if tasks == 0 {
        return Err(EvalError::EmptyInput);
    }
    let n = tasks as f64;
    Ok(Report {
        sr: successes as f64 / n,
        spl: spl_sum / n,
        acd: (successes > 0).then(|| acd_sum / successes as f64),
        episode_sr: episodes_ok as f64 / episodes as f64,
        tasks,
        successes,
        episodes,
        excluded,
        per_category: cats
            .into_iter()
            .map(|(k, (t, s, spl))| {
                (
                    k,
                    CategoryStats {
                        tasks: t,
                        successes: s,
                        sr: s as f64 / t as f64,
                        spl: spl / t as f64,
                    },
                )
            })
            .collect(),
    })
}
