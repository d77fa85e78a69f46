//! Experiment configuration: the JSON schema, defaults, validation, and
//! construction of the environment model and starting point.
//!
//! Validation happens in two layers. `load_config` checks everything that
//! can be checked from the file alone (grid shape, replica counts, weight
//! sums) and reports precise, field-named errors. `prepare` then builds
//! the model and resolves the starting point, which pins down the number
//! of types and lets it validate `type_index` and the start direction.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mbpre_core::env::{scenarios, EigenvalueState, FractionalLinear};
use mbpre_core::{EnvironmentComponent, EnvironmentModel, OffspringLaw, ProjectivePoint, Real};
use serde::{Deserialize, Serialize};

/// Generation grid used when the config does not name one: powers of two
/// from 64 to 4096.
pub fn default_n_grid() -> Vec<usize> {
    (6..=12).map(|k| 1usize << k).collect()
}

fn default_replicas() -> u64 {
    10_000
}

fn default_type_index() -> usize {
    1
}

fn default_a() -> Real {
    1.0
}

/// One experiment, as read from the configuration file. Every knob has a
/// default except the scenario and the command, so a minimal config is
/// just those two fields.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Which subcommand this file drives; must match the one invoked.
    pub command: String,
    /// The environment model to build.
    pub scenario: ScenarioSpec,
    /// Generation (or walk-length) grid, strictly increasing.
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    /// Monte Carlo replicas per estimate.
    #[serde(default = "default_replicas")]
    pub replicas: u64,
    /// Base RNG seed; replica `r` always draws from stream `r` of it.
    #[serde(default)]
    pub seed: u64,
    /// 1-based starting type for survival runs.
    #[serde(default = "default_type_index")]
    pub type_index: usize,
    /// Starting point of the projective walk: direction and level.
    #[serde(default)]
    pub start: StartSpec,
    /// Output directory; defaults to `out`.
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Survival estimator: `gf` (generating functions, the default) or
    /// `population` (particle simulation with a cap).
    #[serde(default)]
    pub estimator: Option<String>,
    /// Population cap for the particle estimator.
    #[serde(default)]
    pub cap: Option<u64>,
    /// Sweep of starting levels for `tau` and `harmonic`; overrides
    /// `start.a` when present.
    #[serde(default)]
    pub a_values: Option<Vec<Real>>,
    /// Replicas for the variance normalization in `tau` (defaults to
    /// `replicas`).
    #[serde(default)]
    pub sigma_replicas: Option<u64>,
    /// Exponent grid for the moment conditions in `conditions`.
    #[serde(default)]
    pub eps_grid: Option<Vec<Real>>,
    /// Threshold grid for the uniform-expansion condition in `conditions`.
    #[serde(default)]
    pub delta_grid: Option<Vec<Real>>,
    /// Walk length for the Lyapunov row in `conditions`.
    #[serde(default)]
    pub lyapunov_n: Option<usize>,
    /// Worker threads for the replica pool; omitted means all cores.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Also dump every offspring law as a plain-text table.
    #[serde(default)]
    pub dump_laws: bool,
}

/// Starting point of the projective walk.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StartSpec {
    /// Starting direction on the simplex.
    #[serde(default)]
    pub x: XSpec,
    /// Starting level of the associated walk.
    #[serde(default = "default_a")]
    pub a: Real,
}

impl Default for StartSpec {
    fn default() -> Self {
        Self {
            x: XSpec::default(),
            a: default_a(),
        }
    }
}

/// Start-direction spec: a name (`"uniform"` or `"eigenvector"`), a
/// 1-based vertex (`{"unit": 2}`), or explicit nonnegative weights
/// (normalized automatically).
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum XSpec {
    Named(String),
    Unit { unit: usize },
    Weights(Vec<Real>),
}

impl Default for XSpec {
    fn default() -> Self {
        XSpec::Named("uniform".into())
    }
}

/// Scenario families the runner can build, tagged by `kind`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSpec {
    /// Single type, one state, geometric offspring with the given mean.
    DeterministicGeometric { mean: Real },
    /// Single type, mean `exp(±delta)` with equal probability.
    ScalarSymmetric { delta: Real },
    /// Two types, deterministic pairing that doubles and swaps.
    PairedDoubling,
    /// Each particle reproduces itself exactly.
    IdentityReproduction,
    /// All mean matrices share a left eigenvector with fixed eigenvalue.
    DeterministicRowSums { rho: Real, spread: Real },
    /// Two-type critical mixture with mixing strength `gamma`.
    TwoTypeCritical { gamma: Real },
    /// Symmetric two-type critical mixture (eigenvalues `exp(±gamma)`).
    TwoTypeSymmetricCritical { gamma: Real },
    /// Mean matrices sharing the left eigenvector `v` with random
    /// eigenvalues.
    CommonLeftEigenvector {
        v: Vec<Real>,
        states: Vec<EigenStateSpec>,
    },
    /// Weighted states of per-type fractional-linear offspring laws.
    FractionalLinear { states: Vec<FlStateSpec> },
    /// Weighted states of explicit finite offspring laws.
    FiniteMixture { states: Vec<FiniteStateSpec> },
}

/// One eigenvalue state for `common_left_eigenvector`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct EigenStateSpec {
    pub rho: Real,
    #[serde(default)]
    pub spread: Real,
    pub weight: Real,
}

/// One environment state built from fractional-linear laws, one per type.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlStateSpec {
    pub weight: Real,
    pub laws: Vec<FlLawSpec>,
}

/// Fractional-linear parameters for one parent type.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FlLawSpec {
    pub stall: Real,
    pub geom: Real,
    pub mixer: Vec<Real>,
}

/// One environment state built from explicit finite laws, one per type.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteStateSpec {
    pub weight: Real,
    pub laws: Vec<FiniteLawSpec>,
}

/// Finite offspring law for one parent type.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteLawSpec {
    pub support: Vec<SupportPointSpec>,
}

/// One support point: the offspring vector and its probability.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SupportPointSpec {
    pub z: Vec<u32>,
    pub prob: Real,
}

impl ScenarioSpec {
    /// Builds the environment model, or a field-named validation error.
    pub fn build(&self) -> Result<EnvironmentModel<Real>, String> {
        let built = match self {
            ScenarioSpec::DeterministicGeometric { mean } => {
                scenarios::deterministic_geometric(*mean)
            }
            ScenarioSpec::ScalarSymmetric { delta } => scenarios::scalar_symmetric(*delta),
            ScenarioSpec::PairedDoubling => scenarios::paired_doubling(),
            ScenarioSpec::IdentityReproduction => scenarios::identity_reproduction(),
            ScenarioSpec::DeterministicRowSums { rho, spread } => {
                scenarios::deterministic_row_sums(*rho, *spread)
            }
            ScenarioSpec::TwoTypeCritical { gamma } => scenarios::two_type_critical(*gamma),
            ScenarioSpec::TwoTypeSymmetricCritical { gamma } => {
                scenarios::two_type_symmetric_critical(*gamma)
            }
            ScenarioSpec::CommonLeftEigenvector { v, states } => {
                check_weights(states.iter().map(|s| s.weight))?;
                let states = states
                    .iter()
                    .map(|s| EigenvalueState {
                        rho: s.rho,
                        spread: s.spread,
                        weight: s.weight,
                    })
                    .collect();
                EnvironmentModel::common_left_eigenvector(v.clone(), states)
            }
            ScenarioSpec::FractionalLinear { states } => {
                check_weights(states.iter().map(|s| s.weight))?;
                let mut built = Vec::with_capacity(states.len());
                for state in states {
                    let mut params = Vec::with_capacity(state.laws.len());
                    for law in &state.laws {
                        params.push(
                            FractionalLinear::new(law.stall, law.geom, law.mixer.clone())
                                .map_err(|e| format!("config field 'scenario.states.laws': {e}"))?,
                        );
                    }
                    built.push((params, state.weight));
                }
                EnvironmentModel::fractional_linear(built)
            }
            ScenarioSpec::FiniteMixture { states } => {
                check_weights(states.iter().map(|s| s.weight))?;
                let types = states.first().map_or(0, |s| s.laws.len());
                let mut built = Vec::with_capacity(states.len());
                for state in states {
                    let mut laws = Vec::with_capacity(state.laws.len());
                    for law in &state.laws {
                        let support = law
                            .support
                            .iter()
                            .map(|pt| (pt.z.clone(), pt.prob))
                            .collect();
                        laws.push(
                            OffspringLaw::new(types, support)
                                .map_err(|e| format!("config field 'scenario.states.laws': {e}"))?,
                        );
                    }
                    let component = EnvironmentComponent::from_laws(laws)
                        .map_err(|e| format!("config field 'scenario.states.laws': {e}"))?;
                    built.push((component, state.weight));
                }
                EnvironmentModel::finite_mixture(built)
            }
        };
        built.map_err(|e| format!("config field 'scenario': {e}"))
    }
}

fn check_weights(weights: impl Iterator<Item = Real>) -> Result<(), String> {
    let mut total = 0.0;
    let mut count = 0usize;
    for w in weights {
        if !(w > 0.0) || !w.is_finite() {
            return Err(format!(
                "config field 'scenario.states.weight': weights must be positive and finite, got {w}"
            ));
        }
        total += w;
        count += 1;
    }
    if count == 0 {
        return Err("config field 'scenario.states': at least one state is required".into());
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!(
            "config field 'scenario.states.weight': state weights sum to {total}, expected 1"
        ));
    }
    Ok(())
}

/// All subcommand names, in CLI order.
pub const COMMANDS: [&str; 6] = [
    "survival",
    "tau",
    "harmonic",
    "lyapunov",
    "conditions",
    "verify",
];

impl ExperimentConfig {
    /// Checks everything that does not need the model built.
    pub fn validate(&self, invoked: &str) -> Result<(), String> {
        if !COMMANDS.contains(&self.command.as_str()) {
            return Err(format!(
                "config field 'command': unknown command '{}', expected one of {}",
                self.command,
                COMMANDS.join(" | ")
            ));
        }
        if self.command != invoked {
            return Err(format!(
                "config field 'command': file says '{}' but the '{invoked}' subcommand was invoked",
                self.command
            ));
        }
        if self.n_grid.is_empty() {
            return Err("config field 'n_grid': grid must be nonempty".into());
        }
        if self.n_grid[0] == 0 {
            return Err("config field 'n_grid': grid entries must be >= 1".into());
        }
        for pair in self.n_grid.windows(2) {
            if pair[1] <= pair[0] {
                return Err(format!(
                    "config field 'n_grid': grid must be strictly increasing, got {} after {}",
                    pair[1], pair[0]
                ));
            }
        }
        if self.replicas == 0 {
            return Err("config field 'replicas': at least one replica is required".into());
        }
        if self.type_index == 0 {
            return Err(
                "config field 'type_index': types are numbered from 1, got 0".into()
            );
        }
        if let Some(estimator) = &self.estimator {
            if estimator != "gf" && estimator != "population" {
                return Err(format!(
                    "config field 'estimator': expected 'gf' or 'population', got '{estimator}'"
                ));
            }
        }
        if let Some(cap) = self.cap {
            if cap == 0 {
                return Err("config field 'cap': population cap must be >= 1".into());
            }
        }
        if let Some(sigma) = self.sigma_replicas {
            if sigma == 0 {
                return Err("config field 'sigma_replicas': at least one replica is required".into());
            }
        }
        if let Some(workers) = self.workers {
            if workers == 0 {
                return Err("config field 'workers': worker count must be >= 1".into());
            }
        }
        if matches!(self.command.as_str(), "tau" | "harmonic") {
            for &a in self.start_levels() {
                if !(a > 0.0) || !a.is_finite() {
                    let field = if self.a_values.is_some() {
                        "a_values"
                    } else {
                        "start.a"
                    };
                    return Err(format!(
                        "config field '{field}': starting levels must be positive and finite, got {a}"
                    ));
                }
            }
        }
        for (name, grid) in [("eps_grid", &self.eps_grid), ("delta_grid", &self.delta_grid)] {
            if let Some(grid) = grid {
                if grid.is_empty() {
                    return Err(format!("config field '{name}': grid must be nonempty"));
                }
                if grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                    return Err(format!(
                        "config field '{name}': entries must be positive and finite"
                    ));
                }
            }
        }
        if let Some(n) = self.lyapunov_n {
            if n == 0 {
                return Err("config field 'lyapunov_n': walk length must be >= 1".into());
            }
        }
        Ok(())
    }

    /// The starting levels a `tau` or `harmonic` run sweeps over.
    pub fn start_levels(&self) -> &[Real] {
        match &self.a_values {
            Some(values) if !values.is_empty() => values,
            _ => std::slice::from_ref(&self.start.a),
        }
    }
}

/// A validated experiment with the model built and the start resolved.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub model: EnvironmentModel<Real>,
    pub x: ProjectivePoint<Real>,
    /// Stable identifier of the start direction for CSV rows.
    pub x_id: String,
    /// 0-based starting type.
    pub parent_type: usize,
}

/// Reads and validates a configuration file for the invoked subcommand.
pub fn load_config(path: &Path, invoked: &str) -> Result<ExperimentConfig, String> {
    let text = fs::read_to_string(path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
    config.validate(invoked)?;
    Ok(config)
}

/// Builds the model and resolves the start for an already-loaded config.
pub fn prepare(config: ExperimentConfig) -> Result<Prepared, String> {
    let model = config.scenario.build()?;
    let p = model.types();
    if config.type_index > p {
        return Err(format!(
            "config field 'type_index': type index out of range: i = {} but the scenario has p = {p} types",
            config.type_index
        ));
    }
    let (x, x_id) = resolve_start(&config.start.x, &model)?;
    let parent_type = config.type_index - 1;
    Ok(Prepared {
        config,
        model,
        x,
        x_id,
        parent_type,
    })
}

fn resolve_start(
    spec: &XSpec,
    model: &EnvironmentModel<Real>,
) -> Result<(ProjectivePoint<Real>, String), String> {
    let p = model.types();
    match spec {
        XSpec::Named(name) => match name.as_str() {
            "uniform" => Ok((ProjectivePoint::uniform(p), "uniform".into())),
            "eigenvector" => match model.left_eigenvector() {
                Some(v) => {
                    let x = ProjectivePoint::from_unnormalized(v)
                        .map_err(|e| format!("config field 'start.x': {e}"))?;
                    Ok((x, "eigenvector".into()))
                }
                None => Err(
                    "config field 'start.x': this scenario has no common left eigenvector; \
                     use 'uniform', a unit index, or explicit weights"
                        .into(),
                ),
            },
            other => Err(format!(
                "config field 'start.x': unknown direction '{other}', expected 'uniform', \
                 'eigenvector', {{\"unit\": i}}, or a weight vector"
            )),
        },
        XSpec::Unit { unit } => {
            if *unit == 0 || *unit > p {
                return Err(format!(
                    "config field 'start.x': unit index {unit} out of range for {p} types \
                     (types are numbered from 1)"
                ));
            }
            let x = ProjectivePoint::unit(p, unit - 1)
                .map_err(|e| format!("config field 'start.x': {e}"))?;
            Ok((x, format!("unit{unit}")))
        }
        XSpec::Weights(weights) => {
            if weights.len() != p {
                return Err(format!(
                    "config field 'start.x': got {} weights but the scenario has {p} types",
                    weights.len()
                ));
            }
            let x = ProjectivePoint::from_unnormalized(weights)
                .map_err(|e| format!("config field 'start.x': {e}"))?;
            Ok((x, "custom".into()))
        }
    }
}

/// Renders the law of every state and type as plain-text tables.
pub fn law_tables(model: &EnvironmentModel<Real>) -> String {
    let mut out = String::new();
    for m in 0..model.states().len() {
        let component = model.component(m);
        for i in 0..component.types() {
            let _ = writeln!(
                out,
                "# state {} (weight {}) parent type {}",
                m + 1,
                model.weight(m),
                i + 1
            );
            out.push_str(&component.law(i).table());
            out.push('\n');
        }
    }
    out
}
