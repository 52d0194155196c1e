//! Exact distribution evolution for small populations.
//!
//! Tracks the full probability vector over all 2^M opinion configurations
//! and pushes it through the one-slot kernel, so terminal expectations
//! carry no sampling error. In sampling mode the kernel uses the identity
//! E[observed fraction] = global fraction (the observed Yes-count is
//! binomial around the global fraction and enters the flip probability
//! linearly), which also makes the result independent of the sample-size
//! distribution by construction; `one_step_delta_distribution` checks that
//! same identity the long way, term by term.

use serde::Serialize;

use crate::dynamics::{DynamicsParams, InteractionMode};
use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::opinion::OpinionVector;
use crate::schedule::{enumerate_all, first_slots, last_slots, Horizon, InfluenceSchedule};

const MAX_EXACT_NODES: usize = 14;

/// Dense probability vector over the 2^M opinion configurations; index i's
/// bit j is individual j's opinion.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDistribution {
    node_count: usize,
    probs: Vec<f64>,
}

impl StateDistribution {
    fn check_size(node_count: usize) -> Result<()> {
        if node_count > MAX_EXACT_NODES {
            return Err(Error::StateSpaceTooLarge {
                nodes: node_count,
                cap: MAX_EXACT_NODES,
            });
        }
        Ok(())
    }

    /// All mass on one configuration.
    pub fn point(state: &OpinionVector) -> Result<Self> {
        Self::check_size(state.len())?;
        let mut probs = vec![0.0; 1 << state.len()];
        probs[state.to_bitmask()] = 1.0;
        Ok(StateDistribution {
            node_count: state.len(),
            probs,
        })
    }

    /// Uniform over all configurations with exactly `yes` Yes opinions
    /// (the law of a symmetric random initial state).
    pub fn uniform_with_yes_count(node_count: usize, yes: usize) -> Result<Self> {
        Self::check_size(node_count)?;
        if yes > node_count {
            return Err(Error::InvalidOpinionVector {
                reason: format!("{yes} Yes opinions among {node_count} individuals"),
            });
        }
        let mut probs = vec![0.0; 1 << node_count];
        let matching: Vec<usize> = (0..probs.len())
            .filter(|s| s.count_ones() as usize == yes)
            .collect();
        let p = 1.0 / matching.len() as f64;
        for s in matching {
            probs[s] = p;
        }
        Ok(StateDistribution { node_count, probs })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_of(&self, state: &OpinionVector) -> f64 {
        self.probs[state.to_bitmask()]
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// E[global Yes-fraction].
    pub fn expected_fraction(&self) -> f64 {
        let m = self.node_count as f64;
        self.probs
            .iter()
            .enumerate()
            .map(|(s, p)| p * s.count_ones() as f64 / m)
            .sum()
    }
}

/// Per-state flip probability of node i, marginal over any sampling.
fn flip_prob_exact(
    state_mask: usize,
    i: usize,
    node_count: usize,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
) -> f64 {
    let yes = state_mask >> i & 1 == 1;
    if influenced {
        return if yes { params.p_inf } else { params.q_inf };
    }
    let f = match mode {
        InteractionMode::RandomSample(_) => (state_mask.count_ones() as f64) / node_count as f64,
        InteractionMode::GraphNeighborhood(g) => {
            let neighbors = g.neighbors(NodeId(i));
            if neighbors.is_empty() {
                return 0.0;
            }
            let yes_n = neighbors
                .iter()
                .filter(|&&j| state_mask >> j & 1 == 1)
                .count();
            yes_n as f64 / neighbors.len() as f64
        }
    };
    if yes {
        params.p * (1.0 - f)
    } else {
        params.q * f
    }
}

/// One slot of the exact kernel: pick each node with probability 1/M,
/// apply its flip probability, and redistribute the mass.
pub fn evolve_exact(
    dist: &StateDistribution,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
) -> Result<StateDistribution> {
    let m = dist.node_count;
    StateDistribution::check_size(m)?;
    if params.node_count != m {
        return Err(Error::InvalidTrialConfig {
            reason: format!(
                "params expect {} individuals, distribution has {m}",
                params.node_count
            ),
        });
    }
    if let Some(g) = mode.graph() {
        if g.node_count() != m {
            return Err(Error::InvalidTrialConfig {
                reason: format!("graph has {} nodes, distribution has {m}", g.node_count()),
            });
        }
    }
    let per_node = 1.0 / m as f64;
    let mut next = vec![0.0; dist.probs.len()];
    for (mask, &mass) in dist.probs.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        let mut stay = 0.0;
        for i in 0..m {
            let flip = flip_prob_exact(mask, i, m, mode, influenced, params);
            stay += per_node * (1.0 - flip);
            if flip > 0.0 {
                next[mask ^ (1 << i)] += mass * per_node * flip;
            }
        }
        next[mask] += mass * stay;
    }
    Ok(StateDistribution {
        node_count: m,
        probs: next,
    })
}

/// E[terminal Yes-fraction] after T slots with the schedule's influenced
/// flags applied exactly.
pub fn expected_terminal(
    initial: &StateDistribution,
    mode: &InteractionMode,
    params: &DynamicsParams,
    h: &Horizon,
    sched: &InfluenceSchedule,
) -> Result<f64> {
    let flags = sched.flags(h.t_total());
    let mut dist = initial.clone();
    for slot in 1..=h.t_total() {
        dist = evolve_exact(&dist, mode, flags[slot as usize], params)?;
    }
    Ok(dist.expected_fraction())
}

/// Which endpoint strategy the drift coefficients favor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrichotomyPrediction {
    FirstSlotsOptimal,
    LastSlotsOptimal,
    AllSchedulesTie,
}

impl TrichotomyPrediction {
    pub fn from_params(params: &DynamicsParams) -> Self {
        if params.p < params.q {
            TrichotomyPrediction::FirstSlotsOptimal
        } else if params.p > params.q {
            TrichotomyPrediction::LastSlotsOptimal
        } else {
            TrichotomyPrediction::AllSchedulesTie
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleValue {
    pub schedule: String,
    pub expected_terminal: f64,
}

/// Exhaustive evaluation of every budget-saturating schedule.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    pub values: Vec<ScheduleValue>,
    /// Schedules within the tie tolerance of the best value.
    pub argmax: Vec<String>,
    pub argmin: Vec<String>,
    pub max_value: f64,
    pub min_value: f64,
    pub prediction: TrichotomyPrediction,
    /// Whether the exhaustive values bear the prediction out: the favored
    /// endpoint schedule attains the maximum (or, for a tie prediction,
    /// max - min <= 1e-10).
    pub prediction_holds: bool,
}

const ARGMAX_TIE_TOL: f64 = 1e-12;
const EQUALITY_TOL: f64 = 1e-10;

impl OrderingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Evaluates expected_terminal for every schedule of exactly budget slots
/// and checks the prediction implied by sign(q - p).
pub fn verify_ordering(
    mode: &InteractionMode,
    params: &DynamicsParams,
    h: &Horizon,
    initial: &StateDistribution,
) -> Result<OrderingReport> {
    let mut values = Vec::new();
    for sched in enumerate_all(h)? {
        let v = expected_terminal(initial, mode, params, h, &sched)?;
        values.push((sched, v));
    }
    let max_value = values.iter().map(|&(_, v)| v).fold(f64::MIN, f64::max);
    let min_value = values.iter().map(|&(_, v)| v).fold(f64::MAX, f64::min);
    let argmax: Vec<String> = values
        .iter()
        .filter(|&&(_, v)| v >= max_value - ARGMAX_TIE_TOL)
        .map(|(s, _)| s.to_string())
        .collect();
    let argmin: Vec<String> = values
        .iter()
        .filter(|&&(_, v)| v <= min_value + ARGMAX_TIE_TOL)
        .map(|(s, _)| s.to_string())
        .collect();
    let prediction = TrichotomyPrediction::from_params(params);
    let prediction_holds = match prediction {
        TrichotomyPrediction::FirstSlotsOptimal => argmax.contains(&first_slots(h).to_string()),
        TrichotomyPrediction::LastSlotsOptimal => argmax.contains(&last_slots(h).to_string()),
        TrichotomyPrediction::AllSchedulesTie => max_value - min_value <= EQUALITY_TOL,
    };
    Ok(OrderingReport {
        values: values
            .into_iter()
            .map(|(s, v)| ScheduleValue {
                schedule: s.to_string(),
                expected_terminal: v,
            })
            .collect(),
        argmax,
        argmin,
        max_value,
        min_value,
        prediction,
        prediction_holds,
    })
}
