//! Experiment configuration: a permissive TOML surface validated into a
//! fully resolved, self-contained description. Validation reports every
//! violation at once, each tagged with the offending field path, so a
//! config can be fixed in one pass.

use std::fmt;

use serde::{Deserialize, Serialize};

use opinion_dynamics::{
    consecutive, first_slots, last_slots, GraphKind, GraphSpec, Horizon, InfluenceSchedule,
    KDistribution,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Figure2,
    Figure5,
    TrichotomySweep,
    OracleVerify,
    Custom,
}

impl ExperimentKind {
    fn parse(text: &str) -> Option<Self> {
        match text {
            "figure2" => Some(ExperimentKind::Figure2),
            "figure5" => Some(ExperimentKind::Figure5),
            "trichotomy-sweep" => Some(ExperimentKind::TrichotomySweep),
            "oracle-verify" => Some(ExperimentKind::OracleVerify),
            "custom" => Some(ExperimentKind::Custom),
            _ => None,
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            ExperimentKind::Figure2 => "figure2",
            ExperimentKind::Figure5 => "figure5",
            ExperimentKind::TrichotomySweep => "trichotomy_sweep",
            ExperimentKind::OracleVerify => "oracle_verify",
            ExperimentKind::Custom => "custom",
        }
    }
}

/// One validation failure, pointing at the config field it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

// Raw TOML surface. Everything optional; kind-specific defaults are filled
// during validation.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    seed: Option<u64>,
    n_trials: Option<u64>,
    beta0: Option<f64>,
    nodes: Option<u64>,
    out_dir: Option<String>,
    horizon: Option<RawHorizon>,
    dynamics: Option<RawDynamics>,
    grid: Option<RawGrid>,
    graph: Option<RawGraph>,
    sampling: Option<RawSampling>,
    schedules: Option<RawSchedules>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHorizon {
    t: Option<u32>,
    b: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamics {
    p: Option<f64>,
    q: Option<f64>,
    p_inf: Option<f64>,
    q_inf: Option<f64>,
    effective: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    pairs: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGraph {
    kind: Option<String>,
    d: Option<u64>,
    edge_prob: Option<f64>,
    m_attach: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSampling {
    k: Option<u32>,
    support: Option<Vec<(u32, f64)>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedules {
    named: Option<Vec<String>>,
    explicit: Option<Vec<String>>,
}

/// Extra axes for the trichotomy sweep.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    ps: Option<Vec<f64>>,
    qs: Option<Vec<f64>>,
    budgets: Option<Vec<f64>>,
    horizons: Option<Vec<u32>>,
}

/// Fully resolved experiment description. Self-contained: re-running a
/// manifest that embeds this struct reproduces the outputs byte for byte,
/// independent of future changes to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub n_trials: usize,
    pub beta0: f64,
    pub nodes: usize,
    pub t_total: u32,
    pub b: f64,
    pub p_inf: f64,
    pub q_inf: f64,
    pub effective: bool,
    /// (p, q) cells evaluated by the experiment.
    pub pairs: Vec<(f64, f64)>,
    /// Graph topologies for graph-mode kinds; empty otherwise.
    pub graphs: Vec<GraphSpec>,
    /// Sample-size distribution for sampling-mode kinds.
    pub sampling: Option<Vec<(u32, f64)>>,
    /// Schedule identifiers: "first", "last", "window:<start>", or an
    /// explicit comma-separated slot list.
    pub schedules: Vec<String>,
    /// Budget fractions swept by trichotomy runs; [b] elsewhere.
    pub budgets: Vec<f64>,
    /// Horizons swept by trichotomy runs; [t_total] elsewhere.
    pub horizons: Vec<u32>,
}

/// Resolves a named or explicit schedule identifier against a horizon.
pub fn resolve_schedule(id: &str, h: &Horizon) -> Result<InfluenceSchedule, String> {
    match id {
        "first" => Ok(first_slots(h)),
        "last" => Ok(last_slots(h)),
        _ => {
            if let Some(start) = id.strip_prefix("window:") {
                let t_start: u32 = start
                    .parse()
                    .map_err(|_| format!("window start {start:?} is not a slot number"))?;
                consecutive(h, t_start).map_err(|e| e.to_string())
            } else {
                let sched: InfluenceSchedule = id.parse().map_err(|e| format!("{e}"))?;
                InfluenceSchedule::new(sched.slots(), h).map_err(|e| e.to_string())
            }
        }
    }
}

struct Validator {
    diags: Vec<Diagnostic>,
}

impl Validator {
    fn push(&mut self, field: &str, message: impl Into<String>) {
        self.diags.push(Diagnostic::new(field, message));
    }

    fn unit_interval(&mut self, field: &str, value: f64) {
        if !(0.0..=1.0).contains(&value) || !value.is_finite() {
            self.push(field, format!("must lie in [0,1], got {value}"));
        }
    }

    fn reject_section(&mut self, present: bool, field: &str, kind: &str) {
        if present {
            self.push(field, format!("not used by kind {kind}; remove it"));
        }
    }
}

const DEFAULT_SEED: u64 = 42;

/// Parses and validates a TOML config, reporting all violations at once.
pub fn validate_config(text: &str) -> Result<ResolvedConfig, Vec<Diagnostic>> {
    let raw: RawConfig = toml::from_str(text)
        .map_err(|e| vec![Diagnostic::new("<config>", e.message().to_string())])?;
    resolve(raw)
}

fn resolve(raw: RawConfig) -> Result<ResolvedConfig, Vec<Diagnostic>> {
    let mut v = Validator { diags: Vec::new() };

    let kind = match raw.kind.as_deref() {
        None => {
            v.push(
                "kind",
                "required; one of figure2, figure5, trichotomy-sweep, oracle-verify, custom",
            );
            return Err(v.diags);
        }
        Some(text) => match ExperimentKind::parse(text) {
            Some(k) => k,
            None => {
                v.push(
                    "kind",
                    format!(
                        "unknown kind {text:?}; expected figure2, figure5, trichotomy-sweep, \
                         oracle-verify, or custom"
                    ),
                );
                return Err(v.diags);
            }
        },
    };

    let seed = raw.seed.unwrap_or(DEFAULT_SEED);
    let dyn_raw = raw.dynamics.unwrap_or_default();
    let horizon_raw = raw.horizon.unwrap_or_default();
    let effective = dyn_raw.effective.unwrap_or(true);

    // Kind-specific defaults.
    let (default_nodes, default_t, default_b, default_q_inf, default_trials): (
        u64,
        u32,
        f64,
        f64,
        u64,
    ) = match kind {
        ExperimentKind::Figure2 => (100, 500, 0.2, 0.75, 5000),
        ExperimentKind::Figure5 => (500, 500, 0.2, 0.75, 5000),
        ExperimentKind::TrichotomySweep => (100, 500, 0.2, 0.9, 1),
        ExperimentKind::OracleVerify => (4, 6, 1.0 / 3.0, 0.9, 1),
        ExperimentKind::Custom => (0, 500, 0.2, 0.75, 1000),
    };

    let nodes = raw.nodes.unwrap_or(default_nodes) as usize;
    let t_total = horizon_raw.t.unwrap_or(default_t);
    let b = horizon_raw.b.unwrap_or(default_b);
    let p_inf = dyn_raw.p_inf.unwrap_or(0.0);
    let q_inf = dyn_raw.q_inf.unwrap_or(default_q_inf);
    let n_trials = raw.n_trials.unwrap_or(default_trials) as usize;
    let beta0 = raw.beta0.unwrap_or(0.5);

    if t_total < 1 {
        v.push("horizon.t", "must be at least 1");
    }
    v.unit_interval("horizon.b", b);
    v.unit_interval("dynamics.p_inf", p_inf);
    v.unit_interval("dynamics.q_inf", q_inf);
    v.unit_interval("beta0", beta0);
    if n_trials == 0 {
        v.push("n_trials", "must be at least 1");
    }

    // (p, q) cells.
    let grid_pairs = raw.grid.as_ref().and_then(|g| g.pairs.clone());
    let single_pair = match (dyn_raw.p, dyn_raw.q) {
        (Some(p), Some(q)) => Some((p, q)),
        (None, None) => None,
        (Some(_), None) => {
            v.push("dynamics.q", "dynamics.p given without dynamics.q");
            None
        }
        (None, Some(_)) => {
            v.push("dynamics.p", "dynamics.q given without dynamics.p");
            None
        }
    };

    let pairs: Vec<(f64, f64)> = match kind {
        ExperimentKind::Figure2 | ExperimentKind::Figure5 => {
            if single_pair.is_some() {
                v.push(
                    "dynamics.p",
                    format!(
                        "kind {} sweeps (p, q) over grid.pairs; drop dynamics.p/q",
                        kind.slug()
                    ),
                );
            }
            grid_pairs
                .map(|ps| ps.into_iter().map(|[p, q]| (p, q)).collect())
                .unwrap_or_else(|| vec![(0.3, 0.6), (0.5, 0.5), (0.6, 0.3)])
        }
        ExperimentKind::TrichotomySweep => {
            v.reject_section(grid_pairs.is_some(), "grid", kind.slug());
            let sweep = raw.sweep.as_ref();
            let ps = sweep
                .and_then(|s| s.ps.clone())
                .unwrap_or_else(|| vec![0.2, 0.5, 0.8]);
            let qs = sweep
                .and_then(|s| s.qs.clone())
                .unwrap_or_else(|| vec![0.2, 0.5, 0.8]);
            ps.iter()
                .flat_map(|&p| qs.iter().map(move |&q| (p, q)))
                .collect()
        }
        ExperimentKind::OracleVerify => grid_pairs
            .map(|ps| ps.into_iter().map(|[p, q]| (p, q)).collect())
            .unwrap_or_else(|| vec![(0.2, 0.8), (0.8, 0.2), (0.5, 0.5)]),
        ExperimentKind::Custom => match (single_pair, grid_pairs) {
            (Some(_), Some(_)) => {
                v.push(
                    "grid.pairs",
                    "give either dynamics.p/q or grid.pairs, not both",
                );
                Vec::new()
            }
            (Some(pair), None) => vec![pair],
            (None, Some(ps)) => ps.into_iter().map(|[p, q]| (p, q)).collect(),
            (None, None) => {
                v.push("dynamics.p", "custom runs need dynamics.p/q or grid.pairs");
                Vec::new()
            }
        },
    };

    for (i, &(p, q)) in pairs.iter().enumerate() {
        v.unit_interval(&format!("pairs[{i}].p"), p);
        v.unit_interval(&format!("pairs[{i}].q"), q);
        if effective {
            if p_inf >= p {
                v.push(
                    "dynamics.p_inf",
                    format!("effective influence needs p_inf < p, got p_inf={p_inf} vs p={p}"),
                );
            }
            if q_inf <= q {
                v.push(
                    "dynamics.q_inf",
                    format!("effective influence needs q_inf > q, got q_inf={q_inf} vs q={q}"),
                );
            }
        }
    }

    // Interaction mode.
    let mut graphs: Vec<GraphSpec> = Vec::new();
    let mut sampling: Option<Vec<(u32, f64)>> = None;
    match kind {
        ExperimentKind::Figure2 => {
            v.reject_section(raw.graph.is_some(), "graph", kind.slug());
            v.reject_section(raw.sampling.is_some(), "sampling", kind.slug());
            graphs.push(GraphSpec {
                kind: GraphKind::BarabasiAlbert { m_attach: 2 },
                node_count: nodes,
                seed,
            });
            graphs.push(GraphSpec {
                kind: GraphKind::ErdosRenyi { edge_prob: 0.05 },
                node_count: nodes,
                seed: seed.wrapping_add(1),
            });
        }
        ExperimentKind::Figure5 => {
            v.reject_section(raw.graph.is_some(), "graph", kind.slug());
            v.reject_section(raw.sampling.is_some(), "sampling", kind.slug());
            graphs.push(GraphSpec {
                kind: GraphKind::HubSpoke,
                node_count: nodes,
                seed,
            });
        }
        ExperimentKind::TrichotomySweep => {
            v.reject_section(raw.graph.is_some(), "graph", kind.slug());
            v.reject_section(raw.sampling.is_some(), "sampling", kind.slug());
        }
        ExperimentKind::OracleVerify => {
            v.reject_section(raw.graph.is_some(), "graph", kind.slug());
            sampling = Some(resolve_sampling(raw.sampling.unwrap_or_default(), &mut v));
            if nodes > 14 {
                v.push(
                    "nodes",
                    format!("exact evolution caps at 14 individuals, got {nodes}"),
                );
            }
        }
        ExperimentKind::Custom => match (&raw.graph, &raw.sampling) {
            (Some(_), Some(_)) => {
                v.push("graph", "give either graph or sampling, not both");
            }
            (Some(g), None) => {
                if let Some(spec) = resolve_graph(g, nodes, seed, &mut v) {
                    graphs.push(spec);
                }
            }
            (None, Some(_)) => {
                sampling = Some(resolve_sampling(raw.sampling.unwrap_or_default(), &mut v));
            }
            (None, None) => {
                v.push("graph", "custom runs need a graph or sampling section");
            }
        },
    }

    if nodes < 2 {
        v.push("nodes", format!("need at least 2 individuals, got {nodes}"));
    }

    // Schedules.
    let schedules: Vec<String> = match kind {
        ExperimentKind::Figure2 | ExperimentKind::Figure5 => {
            v.reject_section(raw.schedules.is_some(), "schedules", kind.slug());
            vec!["first".into(), "last".into()]
        }
        ExperimentKind::TrichotomySweep | ExperimentKind::OracleVerify => {
            v.reject_section(raw.schedules.is_some(), "schedules", kind.slug());
            Vec::new()
        }
        ExperimentKind::Custom => {
            let s = raw.schedules.unwrap_or_default();
            let mut ids: Vec<String> = Vec::new();
            ids.extend(
                s.named
                    .unwrap_or_else(|| vec!["first".into(), "last".into()]),
            );
            ids.extend(s.explicit.unwrap_or_default());
            if ids.is_empty() {
                v.push("schedules", "needs at least one named or explicit schedule");
            }
            // Check resolvability now so typos surface as diagnostics.
            if let Ok(h) = Horizon::new(t_total.max(1), b.clamp(0.0, 1.0)) {
                for (i, id) in ids.iter().enumerate() {
                    if let Err(e) = resolve_schedule(id, &h) {
                        v.push(&format!("schedules[{i}]"), e);
                    }
                }
            }
            ids
        }
    };

    // Sweep axes (trichotomy only).
    let (budgets, horizons) = if kind == ExperimentKind::TrichotomySweep {
        let sweep = raw.sweep.unwrap_or_default();
        let budgets = sweep.budgets.unwrap_or_else(|| vec![0.1, 0.2, 0.5]);
        let horizons = sweep.horizons.unwrap_or_else(|| vec![200, 500]);
        for (i, &bb) in budgets.iter().enumerate() {
            v.unit_interval(&format!("sweep.budgets[{i}]"), bb);
        }
        for (i, &t) in horizons.iter().enumerate() {
            if t < 1 {
                v.push(&format!("sweep.horizons[{i}]"), "must be at least 1");
            }
        }
        if budgets.is_empty() {
            v.push("sweep.budgets", "needs at least one budget");
        }
        if horizons.is_empty() {
            v.push("sweep.horizons", "needs at least one horizon");
        }
        (budgets, horizons)
    } else {
        v.reject_section(raw.sweep.is_some(), "sweep", kind.slug());
        (vec![b], vec![t_total])
    };

    if !v.diags.is_empty() {
        return Err(v.diags);
    }
    Ok(ResolvedConfig {
        kind,
        seed,
        n_trials,
        beta0,
        nodes,
        t_total,
        b,
        p_inf,
        q_inf,
        effective,
        pairs,
        graphs,
        sampling,
        schedules,
        budgets,
        horizons,
    })
}

fn resolve_graph(
    g: &RawGraph,
    nodes: usize,
    default_seed: u64,
    v: &mut Validator,
) -> Option<GraphSpec> {
    let seed = g.seed.unwrap_or(default_seed);
    let kind = match g.kind.as_deref() {
        None => {
            v.push(
                "graph.kind",
                "required; one of complete, d-regular, erdos-renyi, barabasi-albert, hub-spoke",
            );
            return None;
        }
        Some("complete") => GraphKind::Complete,
        Some("hub-spoke") => GraphKind::HubSpoke,
        Some("d-regular") => {
            let d = match g.d {
                Some(d) => d as usize,
                None => {
                    v.push("graph.d", "required for d-regular");
                    return None;
                }
            };
            if d < 1 || d >= nodes {
                v.push(
                    "graph.d",
                    format!("need 1 <= d < nodes, got d={d}, nodes={nodes}"),
                );
            }
            if (d * nodes) % 2 == 1 {
                v.push(
                    "graph.d",
                    format!("d * nodes must be even, got {d} * {nodes}"),
                );
            }
            GraphKind::DRegular { d }
        }
        Some("erdos-renyi") => {
            let edge_prob = g.edge_prob.unwrap_or_else(|| {
                v.push("graph.edge_prob", "required for erdos-renyi");
                0.0
            });
            v.unit_interval("graph.edge_prob", edge_prob);
            GraphKind::ErdosRenyi { edge_prob }
        }
        Some("barabasi-albert") => {
            let m_attach = match g.m_attach {
                Some(m) => m as usize,
                None => {
                    v.push("graph.m_attach", "required for barabasi-albert");
                    return None;
                }
            };
            if m_attach < 1 || m_attach >= nodes {
                v.push(
                    "graph.m_attach",
                    format!("need 1 <= m_attach < nodes, got m_attach={m_attach}, nodes={nodes}"),
                );
            }
            GraphKind::BarabasiAlbert { m_attach }
        }
        Some(other) => {
            v.push("graph.kind", format!("unknown graph kind {other:?}"));
            return None;
        }
    };
    // Mismatched per-kind knobs are almost always a config mix-up.
    match kind {
        GraphKind::DRegular { .. } => {
            if g.edge_prob.is_some() || g.m_attach.is_some() {
                v.push("graph", "d-regular uses only graph.d");
            }
        }
        GraphKind::ErdosRenyi { .. } => {
            if g.d.is_some() || g.m_attach.is_some() {
                v.push("graph", "erdos-renyi uses only graph.edge_prob");
            }
        }
        GraphKind::BarabasiAlbert { .. } => {
            if g.d.is_some() || g.edge_prob.is_some() {
                v.push("graph", "barabasi-albert uses only graph.m_attach");
            }
        }
        GraphKind::Complete | GraphKind::HubSpoke => {
            if g.d.is_some() || g.edge_prob.is_some() || g.m_attach.is_some() {
                v.push("graph", "this graph kind takes no extra parameters");
            }
        }
    }
    Some(GraphSpec {
        kind,
        node_count: nodes,
        seed,
    })
}

fn resolve_sampling(s: RawSampling, v: &mut Validator) -> Vec<(u32, f64)> {
    let support = match (s.k, s.support) {
        (Some(_), Some(_)) => {
            v.push(
                "sampling",
                "give either sampling.k or sampling.support, not both",
            );
            return Vec::new();
        }
        (Some(k), None) => vec![(k, 1.0)],
        (None, Some(support)) => support,
        (None, None) => vec![(1, 1.0)],
    };
    if let Err(e) = KDistribution::new(support.clone()) {
        v.push("sampling.support", e.to_string());
    }
    support
}

/// The out_dir field is consumed by the binary before resolution; it is not
/// part of the semantic config (outputs are byte-identical wherever they
/// land).
pub fn extract_out_dir(text: &str) -> Option<String> {
    toml::from_str::<RawConfig>(text)
        .ok()
        .and_then(|raw| raw.out_dir)
}
