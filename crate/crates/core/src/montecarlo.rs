//! Monte Carlo size and power experiments for the two-sample test.
//!
//! Replication `r` draws its two samples from seeds mixed statelessly from
//! the master seed, `r` and the sample index, so work units can run in any
//! order. Valid replications are accepted in index order, which makes every
//! report independent of scheduling and of the chunking used internally.

use std::fmt;
use std::str::FromStr;

use crate::distances::{distances, DistanceKind, EvalMethod, DEFAULT_RENYI_BETA};
use crate::error::{Error, Result};
pub use crate::exec::Execution;
use crate::exec::map_range;
use crate::estimation::{censor_accept, fit_ml};
use crate::model::{sample_g0, G0Params};
use crate::testing::{p_value, statistic_from_distance, DEGREES_OF_FREEDOM};

pub const DEFAULT_WINDOW: usize = 49;
pub const DEFAULT_LEVELS: [f64; 2] = [0.01, 0.05];
pub const DEFAULT_MAX_REPS: usize = 5500;
pub const DEFAULT_TARGET_VALID: usize = 2000;

const CHUNK: usize = 256;
const REL_EQ_TOL: f64 = 1e-9;

/// Relation between the two parameter vectors of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// θ₁ = θ₂.
    Null,
    /// α₁ = α₂ and γ₁ ≠ γ₂.
    EqualAlpha,
    /// Equal means: γ₁ = κγ₂ with κ = (1+α₁)/(1+α₂).
    EqualMu,
    /// α₁ < α₂ and γ₁/γ₂ > κ.
    BothDifferIii,
    /// α₁ < α₂ and γ₁/γ₂ < κ.
    BothDifferIv,
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::Null => "null",
            Scenario::EqualAlpha => "equal-alpha",
            Scenario::EqualMu => "equal-mu",
            Scenario::BothDifferIii => "both-differ-iii",
            Scenario::BothDifferIv => "both-differ-iv",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "null" | "i0" => Scenario::Null,
            "equal-alpha" | "i" => Scenario::EqualAlpha,
            "equal-mu" | "ii" => Scenario::EqualMu,
            "both-differ-iii" | "iii" => Scenario::BothDifferIii,
            "both-differ-iv" | "iv" => Scenario::BothDifferIv,
            _ => return Err(Error::Domain(format!("unknown scenario '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub params1: G0Params,
    pub params2: G0Params,
    /// Sample size N of each of the two samples.
    pub window: usize,
    pub levels: Vec<f64>,
    /// Cap on attempted replications.
    pub max_reps: usize,
    /// Stop once this many valid replications are collected. `None` runs all `max_reps`.
    pub target_valid: Option<usize>,
    pub seed: u64,
}

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_EQ_TOL * a.abs().max(b.abs())
}

impl ScenarioSpec {
    /// A spec with default window, levels and replication counts. Validated.
    pub fn new(scenario: Scenario, params1: G0Params, params2: G0Params, seed: u64) -> Result<Self> {
        let spec = ScenarioSpec {
            scenario,
            params1,
            params2,
            window: DEFAULT_WINDOW,
            levels: DEFAULT_LEVELS.to_vec(),
            max_reps: DEFAULT_MAX_REPS,
            target_valid: Some(DEFAULT_TARGET_VALID),
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn null(params: G0Params, seed: u64) -> Result<Self> {
        Self::new(Scenario::Null, params, params, seed)
    }

    /// α₁ = α₂ = `alpha`, γ₁ = −(1+α) (unit mean when α < −1) and γ₂ = `ratio`·γ₁.
    pub fn equal_alpha(alpha: f64, ratio: f64, looks: f64, seed: u64) -> Result<Self> {
        let g1 = -(1.0 + alpha);
        let p1 = G0Params::new(alpha, g1, looks)?;
        let p2 = G0Params::new(alpha, ratio * g1, looks)?;
        Self::new(Scenario::EqualAlpha, p1, p2, seed)
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_reps(mut self, max_reps: usize, target_valid: Option<usize>) -> Self {
        self.max_reps = max_reps;
        self.target_valid = target_valid;
        self
    }

    /// κ = (1+α₁)/(1+α₂).
    pub fn kappa(&self) -> f64 {
        (1.0 + self.params1.alpha()) / (1.0 + self.params2.alpha())
    }

    pub fn validate(&self) -> Result<()> {
        let (p1, p2) = (&self.params1, &self.params2);
        if p1.looks() != p2.looks() {
            return Err(Error::Domain("both laws must share the number of looks".into()));
        }
        if self.window < 3 {
            return Err(Error::Domain(format!("window must be at least 3, got {}", self.window)));
        }
        if self.max_reps == 0 {
            return Err(Error::Domain("max_reps must be positive".into()));
        }
        if self.target_valid == Some(0) {
            return Err(Error::Domain("target_valid must be positive".into()));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Domain("levels must be nonempty and lie in (0, 1)".into()));
        }
        let (a1, a2, g1, g2) = (p1.alpha(), p2.alpha(), p1.gamma(), p2.gamma());
        let kappa = self.kappa();
        let ok = match self.scenario {
            Scenario::Null => p1 == p2,
            Scenario::EqualAlpha => a1 == a2 && g1 != g2,
            Scenario::EqualMu => a1 != a2 && rel_eq(g1, kappa * g2),
            Scenario::BothDifferIii => a1 < a2 && g1 / g2 > kappa,
            Scenario::BothDifferIv => a1 < a2 && g1 / g2 < kappa,
        };
        if !ok {
            return Err(Error::Domain(format!(
                "parameters ({a1}, {g1}) and ({a2}, {g2}) do not satisfy scenario {}",
                self.scenario
            )));
        }
        Ok(())
    }
}

/// Rejection count and rate for one (kind, level) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCell {
    pub kind: DistanceKind,
    pub level: f64,
    pub rejections: usize,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCReport {
    pub spec: ScenarioSpec,
    /// Kind-major, then level in spec order.
    pub cells: Vec<RateCell>,
    pub valid_reps: usize,
    pub attempted_reps: usize,
    /// Attempts discarded because a fit failed, did not converge or was censored.
    pub censored_reps: usize,
    /// Attempts discarded because some distance could not be evaluated.
    pub numerical_failures: usize,
}

impl MCReport {
    pub fn cell(&self, kind: DistanceKind, level: f64) -> Option<&RateCell> {
        self.cells.iter().find(|c| c.kind == kind && c.level == level)
    }

    /// Rejection rate as a fraction, if the cell exists.
    pub fn rate(&self, kind: DistanceKind, level: f64) -> Option<f64> {
        self.cell(kind, level).map(|c| c.rejection_rate)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RepOutcome {
    Censored,
    NumericalFailure,
    /// Rejection flags, kind-major then level.
    Valid(Vec<bool>),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of sample `index` (0 or 1) in replication `rep`.
pub fn replication_seed(master: u64, rep: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(rep)).wrapping_add(index))
}

fn replicate(spec: &ScenarioSpec, kinds: &[DistanceKind], rep: usize) -> RepOutcome {
    let mut fits = Vec::with_capacity(2);
    for (i, p) in [&spec.params1, &spec.params2].into_iter().enumerate() {
        let fit = sample_g0(p, spec.window, replication_seed(spec.seed, rep as u64, i as u64)).and_then(|s| fit_ml(&s));
        match fit {
            Ok(f) if f.converged && censor_accept(&f, p.alpha()) => fits.push(f),
            _ => return RepOutcome::Censored,
        }
    }
    let (n, m) = (spec.window, spec.window);
    let ds = distances(kinds, &fits[0].params, &fits[1].params, EvalMethod::Auto);
    let mut flags = Vec::with_capacity(kinds.len() * spec.levels.len());
    for (&kind, d) in kinds.iter().zip(ds) {
        let Ok(d) = d else {
            return RepOutcome::NumericalFailure;
        };
        let s = statistic_from_distance(kind, d, m, n);
        let Ok(p) = p_value(s, DEGREES_OF_FREEDOM) else {
            return RepOutcome::NumericalFailure;
        };
        flags.extend(spec.levels.iter().map(|&level| p <= level));
    }
    RepOutcome::Valid(flags)
}

/// Runs the experiment described by `spec` for every kind on shared replications.
pub fn run_experiment(spec: &ScenarioSpec, kinds: &[DistanceKind], exec: Execution) -> Result<MCReport> {
    spec.validate()?;
    if kinds.is_empty() {
        return Err(Error::Domain("at least one distance kind is required".into()));
    }
    let width = kinds.len() * spec.levels.len();
    let mut counts = vec![0usize; width];
    let (mut valid, mut attempted, mut censored, mut failures) = (0, 0, 0, 0);
    let target = spec.target_valid.unwrap_or(usize::MAX);
    let mut next = 0;
    'outer: while next < spec.max_reps && valid < target {
        let end = (next + CHUNK).min(spec.max_reps);
        for outcome in map_range(next..end, exec, |r| replicate(spec, kinds, r)) {
            attempted += 1;
            match outcome {
                RepOutcome::Censored => censored += 1,
                RepOutcome::NumericalFailure => failures += 1,
                RepOutcome::Valid(flags) => {
                    valid += 1;
                    for (c, f) in counts.iter_mut().zip(flags) {
                        *c += f as usize;
                    }
                    if valid == target {
                        break 'outer;
                    }
                }
            }
        }
        next = end;
    }
    if valid == 0 {
        return Err(Error::Degenerate(format!(
            "no valid replications out of {attempted} attempts ({censored} censored, {failures} numerical failures)"
        )));
    }
    let mut cells = Vec::with_capacity(width);
    let mut it = counts.into_iter();
    for &kind in kinds {
        for &level in &spec.levels {
            let rejections = it.next().expect("one count per cell");
            cells.push(RateCell {
                kind,
                level,
                rejections,
                rejection_rate: rejections as f64 / valid as f64,
            });
        }
    }
    Ok(MCReport {
        spec: spec.clone(),
        cells,
        valid_reps: valid,
        attempted_reps: attempted,
        censored_reps: censored,
        numerical_failures: failures,
    })
}

/// Replication settings shared by the cells of a preset or study.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub levels: Vec<f64>,
    pub max_reps: usize,
    pub target_valid: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            levels: DEFAULT_LEVELS.to_vec(),
            max_reps: DEFAULT_MAX_REPS,
            target_valid: Some(DEFAULT_TARGET_VALID),
            seed: 0,
        }
    }
}

impl RunConfig {
    fn apply(&self, spec: ScenarioSpec) -> ScenarioSpec {
        spec.with_levels(self.levels.clone()).with_reps(self.max_reps, self.target_valid)
    }
}

/// The kinds reported by the sample-size study.
pub const SAMPLE_SIZE_KINDS: [DistanceKind; 4] = [
    DistanceKind::KullbackLeibler,
    DistanceKind::Triangular,
    DistanceKind::Bhattacharyya,
    DistanceKind::ArithmeticGeometric,
];

/// Power of the equal-α tests (γ₂/γ₁ = `ratio`) as the window size grows.
///
/// Every size uses the same master seed, so the first replications of each
/// size share their random streams.
pub fn run_sample_size_study(
    alpha: f64,
    looks: f64,
    ratio: f64,
    sizes: &[usize],
    config: &RunConfig,
    exec: Execution,
) -> Result<Vec<MCReport>> {
    if sizes.is_empty() {
        return Err(Error::Domain("at least one sample size is required".into()));
    }
    sizes
        .iter()
        .map(|&n| {
            let spec = config.apply(ScenarioSpec::equal_alpha(alpha, ratio, looks, config.seed)?.with_window(n));
            run_experiment(&spec, &SAMPLE_SIZE_KINDS, exec)
        })
        .collect()
}

pub const PRESET_ALPHAS: [f64; 4] = [-1.5, -3.0, -5.0, -8.0];
pub const PRESET_LOOKS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];
pub const PRESET_NULL_MEANS: [f64; 2] = [1.0, 10.0];
pub const PRESET_RATIOS: [f64; 3] = [2.0, 2.5, 5.0];
pub const PRESET_SIZES: [usize; 3] = [49, 81, 121];

/// Null cells: (α, γ = −(1+α)μ, L) over the preset grids.
pub fn size_table_cells(seed: u64) -> Result<Vec<ScenarioSpec>> {
    let mut out = Vec::new();
    for &a in &PRESET_ALPHAS {
        for &mu in &PRESET_NULL_MEANS {
            for &l in &PRESET_LOOKS {
                out.push(ScenarioSpec::null(G0Params::from_mean(a, mu, l)?, seed)?);
            }
        }
    }
    Ok(out)
}

/// Equal-α power cells over α, γ₂/γ₁ and L.
pub fn power_table_cells(seed: u64) -> Result<Vec<ScenarioSpec>> {
    let mut out = Vec::new();
    for &a in &PRESET_ALPHAS {
        for &ratio in &PRESET_RATIOS {
            for &l in &PRESET_LOOKS {
                out.push(ScenarioSpec::equal_alpha(a, ratio, l, seed)?);
            }
        }
    }
    Ok(out)
}

/// All eight kinds with the Rényi order used by the presets.
pub fn preset_kinds() -> [DistanceKind; 8] {
    DistanceKind::all(DEFAULT_RENYI_BETA)
}

/// Runs each spec with `config` applied and collects the reports.
pub fn run_cells(specs: &[ScenarioSpec], kinds: &[DistanceKind], config: &RunConfig, exec: Execution) -> Result<Vec<MCReport>> {
    specs
        .iter()
        .map(|s| {
            let mut spec = config.apply(s.clone());
            spec.seed = config.seed;
            run_experiment(&spec, kinds, exec)
        })
        .collect()
}

pub const CSV_HEADER: &str =
    "scenario,alpha1,gamma1,alpha2,gamma2,L,N,kind,level,rejection_rate,valid_reps,attempted_reps";

/// One CSV row per (kind, level) cell of each report, with header.
pub fn reports_csv(reports: &[MCReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let s = &r.spec;
        for c in &r.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                s.scenario,
                s.params1.alpha(),
                s.params1.gamma(),
                s.params2.alpha(),
                s.params2.gamma(),
                s.params1.looks(),
                s.window,
                c.kind,
                c.level,
                c.rejection_rate,
                r.valid_reps,
                r.attempted_reps
            ));
        }
    }
    out
}
