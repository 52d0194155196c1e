//! One-slot transitions of the opinion Markov process.
//!
//! Each slot, one individual is chosen uniformly at random. Without
//! influence the chosen individual flips against its current opinion with
//! probability proportional to the contrary fraction in a collection of
//! observed opinions: Yes flips No with probability p * (1 - f), No flips
//! Yes with probability q * f, where f is the observed Yes-fraction. The
//! collection is either k opinions sampled uniformly with replacement from
//! the whole population (k itself random), or the chosen individual's graph
//! neighborhood. In an influenced slot the flip probabilities are replaced
//! outright by (p_inf, q_inf).

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{GraphTopology, NodeId};
use crate::opinion::OpinionVector;

/// Flip-rate coefficients. `p` and `p_inf` drive Yes -> No, `q` and `q_inf`
/// drive No -> Yes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsParams {
    pub p: f64,
    pub q: f64,
    pub p_inf: f64,
    pub q_inf: f64,
    pub node_count: usize,
}

impl DynamicsParams {
    pub fn new(p: f64, q: f64, p_inf: f64, q_inf: f64, node_count: usize) -> Result<Self> {
        for (name, value) in [("p", p), ("q", q), ("p_inf", p_inf), ("q_inf", q_inf)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { name, value });
            }
        }
        if node_count < 2 {
            return Err(Error::InvalidTrialConfig {
                reason: format!("need at least 2 individuals, got {node_count}"),
            });
        }
        Ok(DynamicsParams {
            p,
            q,
            p_inf,
            q_inf,
            node_count,
        })
    }

    /// Influence must strictly help Yes: p_inf < p and q_inf > q.
    pub fn require_effective(&self) -> Result<()> {
        if self.p_inf >= self.p {
            return Err(Error::IneffectiveInfluence {
                reason: format!("p_inf = {} must be < p = {}", self.p_inf, self.p),
            });
        }
        if self.q_inf <= self.q {
            return Err(Error::IneffectiveInfluence {
                reason: format!("q_inf = {} must be > q = {}", self.q_inf, self.q),
            });
        }
        Ok(())
    }
}

/// Distribution of the number of opinions sampled per selection event.
/// Finite support, every k >= 1.
#[derive(Debug, Clone, PartialEq)]
pub struct KDistribution {
    support: Vec<(u32, f64)>,
}

impl KDistribution {
    pub fn new(support: Vec<(u32, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidKDistribution {
                reason: "empty support".into(),
            });
        }
        let mut total = 0.0;
        for &(k, prob) in &support {
            if k == 0 {
                return Err(Error::InvalidKDistribution {
                    reason: "k values must be at least 1".into(),
                });
            }
            if prob <= 0.0 {
                return Err(Error::InvalidKDistribution {
                    reason: format!("probability {prob} for k={k} must be positive"),
                });
            }
            total += prob;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidKDistribution {
                reason: format!("probabilities sum to {total}, expected 1"),
            });
        }
        if support
            .iter()
            .map(|&(k, _)| k)
            .collect::<std::collections::HashSet<_>>()
            .len()
            != support.len()
        {
            return Err(Error::InvalidKDistribution {
                reason: "duplicate k values".into(),
            });
        }
        Ok(KDistribution { support })
    }

    /// Point mass on a single sample size.
    pub fn fixed(k: u32) -> Self {
        KDistribution::new(vec![(k, 1.0)]).expect("k >= 1 point mass is always valid")
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn max_k(&self) -> u32 {
        self.support.iter().map(|&(k, _)| k).max().unwrap()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for &(k, prob) in &self.support {
            acc += prob;
            if u < acc {
                return k;
            }
        }
        self.support.last().unwrap().0
    }
}

/// How the chosen individual collects the opinions it reacts to.
#[derive(Debug, Clone)]
pub enum InteractionMode {
    /// Sample K opinions uniformly with replacement from everyone.
    RandomSample(KDistribution),
    /// Observe graph neighbors only.
    GraphNeighborhood(GraphTopology),
}

impl InteractionMode {
    pub fn graph(&self) -> Option<&GraphTopology> {
        match self {
            InteractionMode::GraphNeighborhood(g) => Some(g),
            InteractionMode::RandomSample(_) => None,
        }
    }
}

/// Result of one slot.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub chosen: NodeId,
    /// Change in Yes-count: -1, 0, or +1.
    pub delta: i8,
    pub next_state: OpinionVector,
}

/// The (Yes->No, No->Yes) probabilities the chosen individual faces this
/// slot. Draws sampling randomness from `rng` in RandomSample mode.
/// Isolated nodes observe nothing and never flip unaided.
pub fn flip_probabilities<R: Rng>(
    s: &OpinionVector,
    chosen: NodeId,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
    rng: &mut R,
) -> (f64, f64) {
    if influenced {
        return (params.p_inf, params.q_inf);
    }
    let f = match mode {
        InteractionMode::RandomSample(kdist) => {
            let k = kdist.sample(rng);
            s.sampled_fraction(k as usize, rng)
                .expect("k >= 1 by KDistribution invariant")
                .get()
        }
        InteractionMode::GraphNeighborhood(g) => match s.neighborhood_fraction(g, chosen) {
            Some(f) => f.get(),
            None => return (0.0, 0.0),
        },
    };
    (params.p * (1.0 - f), params.q * f)
}

/// Advances `s` by one slot with the individual to update already chosen.
/// Draw order: flip uniform first, then any sampling draws.
pub fn step_with_chosen<R: Rng>(
    s: &mut OpinionVector,
    chosen: NodeId,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
    rng: &mut R,
) -> i8 {
    let u: f64 = rng.random();
    let (p_t, q_t) = flip_probabilities(s, chosen, mode, influenced, params, rng);
    let i = chosen.index();
    if s.get(i) {
        if u < p_t {
            s.set(i, false);
            return -1;
        }
    } else if u < q_t {
        s.set(i, true);
        return 1;
    }
    0
}

/// Advances `s` by one slot in place: chooses an individual uniformly, then
/// applies the flip rule. Returns who was chosen and the Yes-count change.
pub fn step_in_place<R: Rng>(
    s: &mut OpinionVector,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
    rng: &mut R,
) -> (NodeId, i8) {
    debug_assert_eq!(s.len(), params.node_count);
    let chosen = NodeId(rng.random_range(0..s.len()));
    let delta = step_with_chosen(s, chosen, mode, influenced, params, rng);
    (chosen, delta)
}

/// Non-mutating variant of `step_in_place` returning the full outcome.
pub fn step<R: Rng>(
    s: &OpinionVector,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
    rng: &mut R,
) -> StepOutcome {
    let mut next_state = s.clone();
    let (chosen, delta) = step_in_place(&mut next_state, mode, influenced, params, rng);
    StepOutcome {
        chosen,
        delta,
        next_state,
    }
}

/// Exact distribution of the one-slot Yes-count change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaPmf {
    pub down: f64,
    pub stay: f64,
    pub up: f64,
}

impl DeltaPmf {
    pub fn total(&self) -> f64 {
        self.down + self.stay + self.up
    }

    /// Expected Yes-count change.
    pub fn mean(&self) -> f64 {
        self.up - self.down
    }
}

pub const MAX_ENUMERATED_K: u32 = 20;

/// Exact pmf of the one-slot change, by enumeration over the chosen node
/// and (in sampling mode) all sample outcomes. No randomness involved.
///
/// In sampling mode the Yes-count among k draws is Binomial(k, beta), so
/// marginalizing gives P(+1) = q * beta * (1 - beta) and
/// P(-1) = p * beta * (1 - beta) for every sample-size distribution; the
/// enumeration here recomputes that sum term by term rather than shortcut
/// through the identity, so the identity stays independently checkable.
pub fn one_step_delta_distribution(
    s: &OpinionVector,
    mode: &InteractionMode,
    influenced: bool,
    params: &DynamicsParams,
) -> Result<DeltaPmf> {
    let m = s.len();
    let per_node = 1.0 / m as f64;
    let mut down = 0.0;
    let mut up = 0.0;

    if influenced {
        for i in 0..m {
            if s.get(i) {
                down += per_node * params.p_inf;
            } else {
                up += per_node * params.q_inf;
            }
        }
        return Ok(DeltaPmf {
            down,
            stay: 1.0 - down - up,
            up,
        });
    }

    match mode {
        InteractionMode::RandomSample(kdist) => {
            if kdist.max_k() > MAX_ENUMERATED_K {
                return Err(Error::SampleEnumerationTooLarge {
                    max_k: kdist.max_k(),
                    cap: MAX_ENUMERATED_K,
                });
            }
            let beta = s.global_fraction().get();
            // E[observed fraction] and E[1 - observed fraction] under each
            // k, weighted by the k-distribution.
            let mut mean_f = 0.0;
            for &(k, k_prob) in kdist.support() {
                for yes in 0..=k {
                    let f = yes as f64 / k as f64;
                    mean_f += k_prob * binomial_pmf(k, yes, beta) * f;
                }
            }
            for i in 0..m {
                if s.get(i) {
                    down += per_node * params.p * (1.0 - mean_f);
                } else {
                    up += per_node * params.q * mean_f;
                }
            }
        }
        InteractionMode::GraphNeighborhood(g) => {
            for i in 0..m {
                // isolated nodes (None) never flip unaided
                if let Some(f) = s.neighborhood_fraction(g, NodeId(i)) {
                    if s.get(i) {
                        down += per_node * params.p * (1.0 - f.get());
                    } else {
                        up += per_node * params.q * f.get();
                    }
                }
            }
        }
    }
    Ok(DeltaPmf {
        down,
        stay: 1.0 - down - up,
        up,
    })
}

fn binomial_pmf(k: u32, yes: u32, beta: f64) -> f64 {
    debug_assert!(yes <= k);
    let mut coeff = 1.0;
    for i in 0..yes {
        coeff = coeff * (k - i) as f64 / (i + 1) as f64;
    }
    coeff * beta.powi(yes as i32) * (1.0 - beta).powi((k - yes) as i32)
}
