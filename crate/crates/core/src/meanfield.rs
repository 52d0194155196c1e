//! Deterministic mean-field approximation of the slot dynamics.
//!
//! With time measured in slots, the Yes-fraction beta drifts by
//!
//!   free slot:        d beta / dt = ((q - p) / M) * beta * (1 - beta)
//!   influenced slot:  d beta / dt = (q_inf - (q_inf + p_inf) * beta) / M
//!
//! The 1/M stays inside the drift, so T/M is the effective horizon. Both
//! pieces integrate in closed form (logistic and affine relaxation); a
//! schedule solution is the slot-by-slot composition of the two flows. A
//! fixed-step RK4 integrator of the same piecewise field is kept as an
//! independent cross-check of every closed form.

use crate::error::{Error, Result};
use crate::schedule::{Horizon, InfluenceSchedule};
use crate::trajectory::Trajectory;

/// Drift coefficients plus the population size that sets the time scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeParams {
    pub p: f64,
    pub q: f64,
    pub p_inf: f64,
    pub q_inf: f64,
    pub m: usize,
    pub beta0: f64,
}

impl OdeParams {
    pub fn new(p: f64, q: f64, p_inf: f64, q_inf: f64, m: usize, beta0: f64) -> Result<Self> {
        for (name, value) in [
            ("p", p),
            ("q", q),
            ("p_inf", p_inf),
            ("q_inf", q_inf),
            ("beta0", beta0),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityOutOfRange { name, value });
            }
        }
        if m == 0 {
            return Err(Error::InvalidTrialConfig {
                reason: "time-scale divisor m must be positive".into(),
            });
        }
        Ok(OdeParams {
            p,
            q,
            p_inf,
            q_inf,
            m,
            beta0,
        })
    }
}

/// Maximal same-mode runs of a schedule, in slot order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub slots: u32,
    pub influenced: bool,
}

/// A schedule flattened to alternating free/influenced segments whose
/// lengths sum to T.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewisePlan {
    segments: Vec<Segment>,
}

impl PiecewisePlan {
    pub fn from_schedule(h: &Horizon, sched: &InfluenceSchedule) -> Self {
        let flags = sched.flags(h.t_total());
        let mut segments: Vec<Segment> = Vec::new();
        for slot in 1..=h.t_total() {
            let influenced = flags[slot as usize];
            match segments.last_mut() {
                Some(seg) if seg.influenced == influenced => seg.slots += 1,
                _ => segments.push(Segment {
                    slots: 1,
                    influenced,
                }),
            }
        }
        PiecewisePlan { segments }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_slots(&self) -> u32 {
        self.segments.iter().map(|s| s.slots).sum()
    }
}

/// Logistic flow of the free drift for `t` slots.
pub fn solve_free(beta0: f64, p: f64, q: f64, m: usize, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let c = (q - p) / m as f64;
    let x = c * t;
    if x == 0.0 || beta0 == 0.0 || beta0 == 1.0 {
        return beta0;
    }
    // Two algebraically equal forms; pick the one whose exponential decays
    // so neither overflows for large |x|.
    if x >= 0.0 {
        beta0 / (beta0 + (1.0 - beta0) * (-x).exp())
    } else {
        beta0 * x.exp() / (1.0 - beta0 + beta0 * x.exp())
    }
}

/// Affine relaxation toward q_inf / (q_inf + p_inf) for `t` influenced
/// slots. Zero total rate leaves beta unchanged.
pub fn solve_influenced(beta0: f64, p_inf: f64, q_inf: f64, m: usize, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    let rate = p_inf + q_inf;
    if rate == 0.0 {
        return beta0;
    }
    let target = q_inf / rate;
    target + (beta0 - target) * (-rate * t / m as f64).exp()
}

/// Closed-form schedule solution: beta at every slot boundary, composing
/// the free and influenced flows slot by slot.
pub fn solve_schedule(params: &OdeParams, h: &Horizon, sched: &InfluenceSchedule) -> Trajectory {
    let flags = sched.flags(h.t_total());
    let mut betas = Vec::with_capacity(h.t_total() as usize + 1);
    let mut influenced = Vec::with_capacity(h.t_total() as usize);
    let mut beta = params.beta0;
    betas.push(beta);
    for slot in 1..=h.t_total() {
        let inf = flags[slot as usize];
        beta = if inf {
            solve_influenced(beta, params.p_inf, params.q_inf, params.m, 1.0)
        } else {
            solve_free(beta, params.p, params.q, params.m, 1.0)
        };
        betas.push(beta);
        influenced.push(inf);
    }
    Trajectory::new(betas, influenced)
}

pub const MAX_RK4_DT: f64 = 0.1;

fn rk4_segment(mut beta: f64, drift: impl Fn(f64) -> f64, length: f64, dt: f64) -> f64 {
    if length <= 0.0 {
        return beta;
    }
    let steps = (length / dt).ceil().max(1.0) as u64;
    let h = length / steps as f64;
    for _ in 0..steps {
        let k1 = drift(beta);
        let k2 = drift(beta + 0.5 * h * k1);
        let k3 = drift(beta + 0.5 * h * k2);
        let k4 = drift(beta + h * k3);
        beta += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    beta
}

fn free_drift(params: &OdeParams) -> impl Fn(f64) -> f64 + '_ {
    let c = (params.q - params.p) / params.m as f64;
    move |beta| c * beta * (1.0 - beta)
}

fn influenced_drift(params: &OdeParams) -> impl Fn(f64) -> f64 + '_ {
    let m = params.m as f64;
    move |beta| (params.q_inf - (params.q_inf + params.p_inf) * beta) / m
}

/// Numerical solution of the same piecewise field. Integration never steps
/// across a slot boundary, so mode switches are exact.
pub fn rk4_schedule(
    params: &OdeParams,
    h: &Horizon,
    sched: &InfluenceSchedule,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt <= MAX_RK4_DT) {
        return Err(Error::StepTooLarge {
            dt,
            max: MAX_RK4_DT,
        });
    }
    let flags = sched.flags(h.t_total());
    let mut betas = Vec::with_capacity(h.t_total() as usize + 1);
    let mut influenced = Vec::with_capacity(h.t_total() as usize);
    let mut beta = params.beta0;
    betas.push(beta);
    for slot in 1..=h.t_total() {
        let inf = flags[slot as usize];
        beta = if inf {
            rk4_segment(beta, influenced_drift(params), 1.0, dt)
        } else {
            rk4_segment(beta, free_drift(params), 1.0, dt)
        };
        betas.push(beta);
        influenced.push(inf);
    }
    Ok(Trajectory::new(betas, influenced))
}

// Hub-and-spoke closed forms.
//
// Spokes observe only the hub, so while the hub holds Yes the spoke
// No-fraction decays at rate q/M (q_inf/M in influenced slots), and once
// the hub flips to No the spoke Yes-fraction decays at rate p/M. With the
// hub chosen exactly once, at time t_h, and initially Yes, the hub flips
// there with probability p * delta(t_h) (no flip if the slot is influenced
// with p_inf = 0). The three forms below mix the kept/flipped branches for
// the three orderings of the influence window [t_i, t_i + bT] against t_h.
// They presuppose p_inf = 0; for general p_inf use `hub_spoke_rk4`.

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ProbabilityOutOfRange { name, value });
    }
    Ok(())
}

/// Window entirely before the hub slot: bT < t_h <= T. Where the window
/// sits before t_h does not matter, only that its q_inf-decay is complete
/// by then.
#[allow(clippy::too_many_arguments)]
pub fn hub_spoke_case_a(
    delta0: f64,
    p: f64,
    q: f64,
    q_inf: f64,
    m: usize,
    t_total: f64,
    b: f64,
    t_h: f64,
) -> Result<f64> {
    check_unit("delta0", delta0)?;
    check_unit("b", b)?;
    let bt = b * t_total;
    if !(bt < t_h && t_h <= t_total) {
        return Err(Error::HubWindowOrdering {
            reason: format!("need bT < t_h <= T, got bT={bt}, t_h={t_h}, T={t_total}"),
        });
    }
    let mf = m as f64;
    let delta_th = delta0 * (-q / mf * (t_h - bt) - q_inf * b * t_total / mf).exp();
    let beta_th = 1.0 - delta_th;
    let flip = p * delta_th;
    let flipped_branch = beta_th * (-p / mf * (t_total - t_h)).exp();
    let kept_branch = 1.0 - delta_th * (-q / mf * (t_total - t_h)).exp();
    Ok(flip * flipped_branch + (1.0 - flip) * kept_branch)
}

/// Window covering the hub slot. The hub slot is influenced with
/// p_inf = 0, so the hub never flips and the spoke No-fraction just decays
/// at q outside the window and q_inf inside it.
pub fn hub_spoke_case_b(
    delta0: f64,
    q: f64,
    q_inf: f64,
    m: usize,
    t_total: f64,
    b: f64,
) -> Result<f64> {
    check_unit("delta0", delta0)?;
    check_unit("b", b)?;
    let mf = m as f64;
    Ok(1.0 - delta0 * (-(t_total / mf) * (q * (1.0 - b) + q_inf * b)).exp())
}

/// Hub slot before the window: 0 <= t_h < t_i and t_i + bT <= T.
///
/// Kept branch (hub stays Yes): same value as the covering case. Flipped
/// branch: Yes-fraction decays at p from t_h to t_i, the window pulls the
/// No-fraction down by exp(-q_inf bT / M), and the remaining tail decays at
/// p again. The tail factor applies to the whole post-window fraction:
///   [1 - (1 - beta(t_h) e^{-p (t_i - t_h)/M}) e^{-q_inf bT/M}] e^{-p (T - t_i - bT)/M}
#[allow(clippy::too_many_arguments)]
pub fn hub_spoke_case_c(
    delta0: f64,
    p: f64,
    q: f64,
    q_inf: f64,
    m: usize,
    t_total: f64,
    b: f64,
    t_h: f64,
    t_i: f64,
) -> Result<f64> {
    check_unit("delta0", delta0)?;
    check_unit("b", b)?;
    let bt = b * t_total;
    if !(0.0 <= t_h && t_h < t_i && t_i + bt <= t_total) {
        return Err(Error::HubWindowOrdering {
            reason: format!(
                "need 0 <= t_h < t_i and t_i + bT <= T, got t_h={t_h}, t_i={t_i}, bT={bt}, T={t_total}"
            ),
        });
    }
    let mf = m as f64;
    let delta_th = delta0 * (-q * t_h / mf).exp();
    let beta_th = 1.0 - delta_th;
    let flip = p * delta_th;
    let kept_branch = 1.0 - delta0 * (-(t_total / mf) * (q * (1.0 - b) + q_inf * b)).exp();
    let beta_ti = beta_th * (-p / mf * (t_i - t_h)).exp();
    let beta_after_window = 1.0 - (1.0 - beta_ti) * (-q_inf * bt / mf).exp();
    let flipped_branch = beta_after_window * (-p / mf * (t_total - t_i - bt)).exp();
    Ok(flip * flipped_branch + (1.0 - flip) * kept_branch)
}

/// RK4 on the reduced hub-and-spoke dynamics with a single hub selection at
/// t_h and influence window [t_i, t_i + bT]. Handles general p_inf; the
/// hub's flip probability at t_h is p * delta(t_h) in a free slot and p_inf
/// in an influenced one. Returns the branch mixture's terminal
/// Yes-fraction.
#[allow(clippy::too_many_arguments)]
pub fn hub_spoke_rk4(
    delta0: f64,
    p: f64,
    q: f64,
    p_inf: f64,
    q_inf: f64,
    m: usize,
    t_total: f64,
    b: f64,
    t_h: f64,
    t_i: f64,
    dt: f64,
) -> Result<f64> {
    check_unit("delta0", delta0)?;
    check_unit("b", b)?;
    if !(dt > 0.0 && dt <= MAX_RK4_DT) {
        return Err(Error::StepTooLarge {
            dt,
            max: MAX_RK4_DT,
        });
    }
    let bt = b * t_total;
    if !(0.0 <= t_h && t_h <= t_total && 0.0 <= t_i && t_i + bt <= t_total) {
        return Err(Error::HubWindowOrdering {
            reason: format!(
                "hub slot {t_h} or window [{t_i}, {}] outside [0, {t_total}]",
                t_i + bt
            ),
        });
    }
    let mf = m as f64;
    let window = t_i..=(t_i + bt);
    // Integrate one branch (hub opinion fixed) from `from` to `to`,
    // splitting at window edges so every RK4 step sees a single mode.
    let advance = |mut beta: f64, from: f64, to: f64, hub_yes: bool| -> f64 {
        let mut cuts = vec![from, to];
        for &edge in &[t_i, t_i + bt] {
            if from < edge && edge < to {
                cuts.push(edge);
            }
        }
        cuts.sort_by(f64::total_cmp);
        for pair in cuts.windows(2) {
            let mid = 0.5 * (pair[0] + pair[1]);
            let len = pair[1] - pair[0];
            beta = if window.contains(&mid) {
                rk4_segment(beta, |x| (q_inf - (q_inf + p_inf) * x) / mf, len, dt)
            } else if hub_yes {
                rk4_segment(beta, |x| q * (1.0 - x) / mf, len, dt)
            } else {
                rk4_segment(beta, |x| -p * x / mf, len, dt)
            };
        }
        beta
    };
    let beta_th = advance(1.0 - delta0, 0.0, t_h, true);
    let flip = if window.contains(&t_h) {
        p_inf
    } else {
        p * (1.0 - beta_th)
    };
    let kept = advance(beta_th, t_h, t_total, true);
    let flipped = advance(beta_th, t_h, t_total, false);
    Ok(flip * flipped + (1.0 - flip) * kept)
}
