//! Experiment configuration: TOML schema, defaults and validation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use metapop::fclt::{check_fclt_admissible, InfectionNoise, MigrationNoise};
use metapop::migration::Grid;
use metapop::model::{
    validate_spec, DurationLaw, JointDurationLaw, LawSet, ModelSpec, PopulationState, RateSchedule, Variant, E, R,
};

use crate::error::{HarnessError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    laws: RawLaws,
    init: RawInit,
    run: RawRun,
    fclt: Option<RawFclt>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "L")]
    l: usize,
    lambda: Vec<RawRate>,
    kappa: Option<Vec<Vec<f64>>>,
    gamma: Option<f64>,
    #[serde(rename = "nu_S")]
    nu_s: Option<Vec<Vec<f64>>>,
    #[serde(rename = "nu_E")]
    nu_e: Option<Vec<Vec<f64>>>,
    #[serde(rename = "nu_I")]
    nu_i: Option<Vec<Vec<f64>>>,
    #[serde(rename = "nu_R")]
    nu_r: Option<Vec<Vec<f64>>>,
    variant: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawRate {
    Constant(f64),
    Schedule(RawSchedule),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
enum RawLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Uniform { low: f64, high: f64 },
    Deterministic { value: f64 },
    Empirical { samples: Vec<f64>, weights: Option<Vec<f64>> },
    /// Stationary-excess law of the matching newly-infected law (initial laws only).
    Equilibrium,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawLaws {
    G: Option<RawLaw>,
    F: RawLaw,
    G0: Option<RawLaw>,
    F0: Option<RawLaw>,
    joint_mode: Option<String>,
    joint_params: Option<RawJointParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJointParams {
    rho: Option<f64>,
    pairs: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    counts: Option<Vec<[u64; 4]>>,
    fractions: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawRun {
    mode: String,
    N: Option<Vec<u64>>,
    M: Option<usize>,
    P: Option<usize>,
    dt: f64,
    T: f64,
    checkpoints: Option<Vec<f64>>,
    base_seed: Option<u64>,
    out_dir: Option<String>,
    output_dt: Option<f64>,
    event_logs: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFclt {
    infection_noise: Option<String>,
    migration_noise: Option<String>,
    strict_paper_indices: Option<bool>,
    keep_paths: Option<usize>,
    initial_variances: Option<Vec<[f64; 4]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    z_threshold: Option<f64>,
    ci_level: Option<f64>,
    slope_window: Option<[f64; 2]>,
    fclt_compartments: Option<Vec<String>>,
    mean_rule_all_n: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Fluid,
    Fclt,
    VerifyFlln,
    VerifyFclt,
    Kernels,
}

impl Mode {
    pub const ALL: [Mode; 6] = [Mode::Simulate, Mode::Fluid, Mode::Fclt, Mode::VerifyFlln, Mode::VerifyFclt, Mode::Kernels];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Fluid => "fluid",
            Mode::Fclt => "fclt",
            Mode::VerifyFlln => "verify-flln",
            Mode::VerifyFclt => "verify-fclt",
            Mode::Kernels => "kernels",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == s)
    }

    fn needs_fclt(self) -> bool {
        matches!(self, Mode::Fclt | Mode::VerifyFclt)
    }
}

/// Initial condition as given: exact counts, or fractions scaled to each N.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Counts(PopulationState),
    /// Fractions by internal slot.
    Fractions(Vec<[f64; 4]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcltSettings {
    pub infection_noise: InfectionNoise,
    pub migration_noise: MigrationNoise,
    pub strict_paper_indices: bool,
    pub keep_paths: usize,
    /// Per patch and internal slot.
    pub initial_variances: Option<Vec<[f64; 4]>>,
}

/// Verdict constants; every report records the values used.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Tolerances {
    pub z_threshold: f64,
    pub ci_level: f64,
    pub slope_window: [f64; 2],
    pub fclt_compartments: Vec<String>,
    /// Internal slots of `fclt_compartments`.
    #[serde(skip)]
    pub fclt_slots: Vec<usize>,
    /// Apply the FLLN mean rule at every N instead of the largest only.
    pub mean_rule_all_n: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            z_threshold: 3.0,
            ci_level: 0.95,
            slope_window: [-0.65, -0.35],
            fclt_compartments: vec![],
            fclt_slots: vec![],
            mean_rule_all_n: false,
        }
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub model: ModelSpec,
    pub laws: LawSet,
    pub init: InitSpec,
    pub mode: Mode,
    pub n_list: Vec<u64>,
    pub replicates: usize,
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub output_dt: f64,
    pub checkpoints: Vec<f64>,
    pub base_seed: u64,
    pub out_dir: PathBuf,
    pub fclt: FcltSettings,
    pub tolerances: Tolerances,
    /// Keys that were filled with defaults, with the value used.
    pub defaults: Vec<String>,
    /// Command-line values that replaced configured ones.
    pub overrides: Vec<String>,
    /// Hex SHA-256 of the configuration text.
    pub config_hash: String,
    pub event_logs: bool,
}

/// Command-line replacements, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub replicates: Option<usize>,
    pub output_dt: Option<f64>,
}

impl ExperimentSpec {
    pub fn grid(&self) -> Grid {
        Grid::new(self.dt, self.horizon).expect("grid checked at parse time")
    }

    /// Grid indices of the checkpoints on the solver grid.
    pub fn checkpoint_indices(&self) -> Vec<usize> {
        let g = self.grid();
        self.checkpoints.iter().map(|&t| g.index_of(t).expect("checked at parse time")).collect()
    }

    /// Initial fractions by internal slot for population size `n`.
    pub fn fractions_for(&self, n: u64) -> Vec<[f64; 4]> {
        let counts = self.counts_for(n);
        let total = counts.total as f64;
        counts.counts.iter().map(|c| c.map(|v| v as f64 / total)).collect()
    }

    /// Initial counts for population size `n` (largest-remainder rounding of fractions).
    pub fn counts_for(&self, n: u64) -> PopulationState {
        match &self.init {
            InitSpec::Counts(c) => c.clone(),
            InitSpec::Fractions(f) => round_fractions(f, n),
        }
    }

    /// The exact configured fractions (not rounded to any N).
    pub fn fractions(&self) -> Vec<[f64; 4]> {
        match &self.init {
            InitSpec::Counts(c) => {
                let total = c.total as f64;
                c.counts.iter().map(|x| x.map(|v| v as f64 / total)).collect()
            }
            InitSpec::Fractions(f) => f.clone(),
        }
    }
}

/// Rounds fractions to integer counts summing to `n`, giving leftover units to the
/// largest remainders (ties by position).
pub fn round_fractions(f: &[[f64; 4]], n: u64) -> PopulationState {
    let mut counts: Vec<[u64; 4]> = vec![[0; 4]; f.len()];
    let mut rem = Vec::new();
    let mut used = 0u64;
    for (i, row) in f.iter().enumerate() {
        for c in 0..4 {
            let x = row[c] * n as f64;
            let fl = x.floor();
            counts[i][c] = fl as u64;
            used += fl as u64;
            if row[c] > 0.0 {
                rem.push((x - fl, i, c));
            }
        }
    }
    rem.sort_by(|a, b| b.0.total_cmp(&a.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    for &(_, i, c) in rem.iter().take(n.saturating_sub(used) as usize) {
        counts[i][c] += 1;
    }
    PopulationState::new(counts)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

fn validation(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

fn forward(e: metapop::Error) -> HarnessError {
    match e {
        metapop::Error::FcltInadmissible(_) => HarnessError::Model(e),
        other => validation(format!("{}: {other}", other.code())),
    }
}

/// Reads, parses and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    parse_config_with(path, &Overrides::default())
}

pub fn parse_config_with(path: &Path, over: &Overrides) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_config_str_with(&text, over)
}

/// Same as [`parse_config`] on in-memory text.
pub fn parse_config_str(text: &str) -> Result<ExperimentSpec> {
    parse_config_str_with(text, &Overrides::default())
}

pub fn parse_config_str_with(text: &str, over: &Overrides) -> Result<ExperimentSpec> {
    if let Err(e) = text.parse::<toml::Table>() {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        return Err(HarnessError::Parse { line, column, message: e.message().to_string() });
    }
    let de = toml::Deserializer::new(text);
    let mut raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        HarnessError::Schema { path, message: e.into_inner().message().to_string() }
    })?;
    let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
    let overrides = apply(&mut raw, over);
    let mut spec = build(raw, hash)?;
    spec.overrides = overrides;
    Ok(spec)
}

fn apply(raw: &mut RawConfig, over: &Overrides) -> Vec<String> {
    let mut notes = Vec::new();
    let run = &mut raw.run;
    if let Some(m) = over.mode {
        if run.mode != m.name() {
            notes.push(format!("run.mode = {} (was {})", m.name(), run.mode));
            run.mode = m.name().into();
        }
    }
    if let Some(s) = over.seed {
        notes.push(format!("run.base_seed = {s}"));
        run.base_seed = Some(s);
    }
    if let Some(d) = &over.out_dir {
        notes.push(format!("run.out_dir = {}", d.display()));
        run.out_dir = Some(d.display().to_string());
    }
    if let Some(m) = over.replicates {
        notes.push(format!("run.M = {m}"));
        run.M = Some(m);
    }
    if let Some(dt) = over.output_dt {
        notes.push(format!("run.output_dt = {dt}"));
        run.output_dt = Some(dt);
    }
    notes
}

fn law(raw: &RawLaw, key: &str) -> Result<DurationLaw> {
    let l = match raw {
        RawLaw::Exponential { rate } => DurationLaw::exponential(*rate),
        RawLaw::Gamma { shape, rate } => DurationLaw::gamma(*shape, *rate),
        RawLaw::Lognormal { mu, sigma } => DurationLaw::lognormal(*mu, *sigma),
        RawLaw::Uniform { low, high } => DurationLaw::uniform(*low, *high),
        RawLaw::Deterministic { value } => DurationLaw::deterministic(*value),
        RawLaw::Empirical { samples, weights } => DurationLaw::empirical(samples, weights.as_deref()),
        RawLaw::Equilibrium => return Err(validation(format!("laws.{key}: `equilibrium` is only allowed for G0 and F0"))),
    };
    l.map_err(|e| validation(format!("laws.{key}: {e}")))
}

fn initial_law(raw: Option<&RawLaw>, base: &DurationLaw, key: &str, defaults: &mut Vec<String>) -> Result<DurationLaw> {
    match raw {
        None | Some(RawLaw::Equilibrium) => {
            if raw.is_none() {
                defaults.push(format!("laws.{key} = equilibrium"));
            }
            DurationLaw::equilibrium(base).map_err(|e| validation(format!("laws.{key}: {e}")))
        }
        Some(r) => law(r, key),
    }
}

fn joint(
    mode: &str,
    params: Option<&RawJointParams>,
    exposed: DurationLaw,
    infectious: DurationLaw,
) -> Result<JointDurationLaw> {
    let rho = params.and_then(|p| p.rho);
    match mode {
        "product" => Ok(JointDurationLaw::product(exposed, infectious)),
        "comonotone" => Ok(JointDurationLaw::comonotone(exposed, infectious)),
        "gaussian-copula" => {
            let rho = rho.ok_or_else(|| validation("laws.joint_params.rho is required for gaussian-copula"))?;
            JointDurationLaw::gaussian_copula(exposed, infectious, rho).map_err(|e| validation(format!("laws.joint_params: {e}")))
        }
        other => Err(validation(format!(
            "laws.joint_mode: unknown mode `{other}` (product, comonotone, gaussian-copula, empirical-pairs)"
        ))),
    }
}

fn build(raw: RawConfig, config_hash: String) -> Result<ExperimentSpec> {
    let mut defaults = Vec::new();
    let m = &raw.model;
    let variant = match &m.variant {
        Some(v) => Variant::parse(v).ok_or_else(|| validation(format!("model.variant: unknown variant `{v}`")))?,
        None => {
            defaults.push("model.variant = SEIR".into());
            Variant::Seir
        }
    };
    let l = m.l;
    if l == 0 {
        return Err(validation("model.L must be at least 1"));
    }
    let kappa = m.kappa.clone().unwrap_or_else(|| {
        defaults.push("model.kappa = identity".into());
        (0..l).map(|i| (0..l).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
    });
    let zeros = vec![vec![0.0; l]; l];
    let mut matrix = |v: &Option<Vec<Vec<f64>>>, key: &str| -> Vec<Vec<f64>> {
        v.clone().unwrap_or_else(|| {
            defaults.push(format!("model.{key} = 0"));
            zeros.clone()
        })
    };
    let nu_s = matrix(&m.nu_s, "nu_S");
    let nu_e = matrix(&m.nu_e, "nu_E");
    let nu_i = matrix(&m.nu_i, "nu_I");
    let nu_r = matrix(&m.nu_r, "nu_R");
    let gamma = m.gamma.unwrap_or_else(|| {
        defaults.push("model.gamma = 0".into());
        0.0
    });
    let mut lambda = Vec::with_capacity(m.lambda.len());
    for (i, r) in m.lambda.iter().enumerate() {
        lambda.push(match r {
            RawRate::Constant(v) => RateSchedule::constant(*v),
            RawRate::Schedule(s) => RateSchedule::piecewise(s.breaks.clone(), s.values.clone())
                .map_err(|e| validation(format!("model.lambda[{i}]: {e}")))?,
        });
    }
    let mut spec = ModelSpec::isolated(l, 0.0, gamma, variant);
    spec.lambda = lambda;
    spec.kappa = kappa;
    spec.nu_s = nu_s;
    spec.nu_e = nu_e;
    spec.nu_i = nu_i;
    spec.nu_r = nu_r;
    let spec = validate_spec(spec).map_err(forward)?;

    // laws: G is the first stage (exposed; infectious for SIRS), F the second
    let lw = &raw.laws;
    let f = law(&lw.F, "F")?;
    let f0 = initial_law(lw.F0.as_ref(), &f, "F0", &mut defaults)?;
    let laws = if variant.uses_first_stage() {
        let g = law(lw.G.as_ref().ok_or_else(|| validation("laws.G is required for this variant"))?, "G")?;
        let g0 = initial_law(lw.G0.as_ref(), &g, "G0", &mut defaults)?;
        let mode = lw.joint_mode.clone().unwrap_or_else(|| {
            defaults.push("laws.joint_mode = product".into());
            "product".into()
        });
        if mode == "empirical-pairs" {
            let pairs = lw
                .joint_params
                .as_ref()
                .and_then(|p| p.pairs.clone())
                .ok_or_else(|| validation("laws.joint_params.pairs is required for empirical-pairs"))?;
            let h = JointDurationLaw::from_pairs(pairs.into_iter().map(|p| (p[0], p[1])).collect())
                .map_err(|e| validation(format!("laws.joint_params.pairs: {e}")))?;
            let h0 = JointDurationLaw::product(g0, h.infectious.clone());
            LawSet::new(h, h0, f0)
        } else {
            let h = joint(&mode, lw.joint_params.as_ref(), g, f.clone())?;
            let h0 = joint(&mode, lw.joint_params.as_ref(), g0, f)?;
            LawSet::new(h, h0, f0)
        }
    } else {
        if lw.G.is_some() || lw.G0.is_some() || lw.joint_mode.is_some() {
            defaults.push(format!("laws.G, laws.G0, laws.joint_mode ignored for {}", variant.name()));
        }
        LawSet::without_exposed(f, f0)
    };

    let run = &raw.run;
    let mode = Mode::parse(&run.mode).ok_or_else(|| {
        let names: Vec<&str> = Mode::ALL.iter().map(|m| m.name()).collect();
        validation(format!("run.mode: unknown mode `{}` (one of {})", run.mode, names.join(", ")))
    })?;

    let init = match (&raw.init.counts, &raw.init.fractions) {
        (Some(_), Some(_)) => return Err(validation("init: give either counts or fractions, not both")),
        (None, None) => return Err(validation("init: counts or fractions required")),
        (Some(c), None) => {
            check_user_rows(variant, c.iter().map(|r| r.map(|v| v as f64)).collect(), l)?;
            InitSpec::Counts(PopulationState::new(c.iter().map(|r| variant.to_slots(*r)).collect()))
        }
        (None, Some(f)) => {
            check_user_rows(variant, f.clone(), l)?;
            let total: f64 = f.iter().flatten().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(validation(format!("init.fractions sum to {total}, expected 1")));
            }
            InitSpec::Fractions(f.iter().map(|r| variant.to_slots(*r)).collect())
        }
    };

    let n_list = match (&run.N, &init) {
        (Some(n), InitSpec::Counts(c)) => {
            if n.iter().any(|&x| x != c.total) {
                return Err(validation(format!("run.N must equal the count total {} when init.counts is given", c.total)));
            }
            n.clone()
        }
        (Some(n), _) => n.clone(),
        (None, InitSpec::Counts(c)) => {
            defaults.push(format!("run.N = [{}]", c.total));
            vec![c.total]
        }
        (None, _) => {
            if matches!(mode, Mode::Simulate | Mode::VerifyFlln | Mode::VerifyFclt) {
                return Err(validation("run.N is required when init is given as fractions"));
            }
            vec![]
        }
    };
    if n_list.iter().any(|&n| n < 1) {
        return Err(validation("run.N entries must be at least 1"));
    }
    if mode == Mode::VerifyFlln && n_list.len() < 2 {
        defaults.push("slope fit skipped: run.N has fewer than two sizes".into());
    }

    let grid = Grid::new(run.dt, run.T).map_err(|e| validation(format!("run.dt/run.T: {e}")))?;
    let output_dt = run.output_dt.unwrap_or_else(|| {
        defaults.push(format!("run.output_dt = {}", run.dt));
        run.dt
    });
    let out_grid = Grid::new(output_dt, run.T).map_err(|e| validation(format!("run.output_dt: {e}")))?;
    let checkpoints = match &run.checkpoints {
        Some(c) => c.clone(),
        None => {
            let n = 5.min(grid.len - 1).max(1);
            let ks: Vec<usize> = (1..=n).map(|j| ((j * (grid.len - 1)) as f64 / n as f64).round() as usize).collect();
            let c: Vec<f64> = ks.iter().map(|&k| grid.time(k)).collect();
            defaults.push(format!("run.checkpoints = {c:?}"));
            c
        }
    };
    for &t in &checkpoints {
        grid.index_of(t).map_err(|_| validation(format!("run.checkpoints: {t} is not on the dt grid")))?;
        if matches!(mode, Mode::Simulate | Mode::VerifyFlln | Mode::VerifyFclt) {
            out_grid
                .index_of(t)
                .map_err(|_| validation(format!("run.checkpoints: {t} is not on the output_dt grid")))?;
        }
    }
    let replicates = run.M.unwrap_or_else(|| {
        defaults.push("run.M = 100".into());
        100
    });
    let paths = run.P.unwrap_or_else(|| {
        defaults.push("run.P = 1000".into());
        1000
    });
    let base_seed = run.base_seed.unwrap_or_else(|| {
        defaults.push("run.base_seed = 1".into());
        1
    });
    let out_dir = PathBuf::from(run.out_dir.clone().unwrap_or_else(|| {
        defaults.push("run.out_dir = out".into());
        "out".into()
    }));

    let fc = raw.fclt.as_ref();
    let noise = |v: Option<&String>, key: &str| -> Result<bool> {
        match v.map(|s| s.as_str()) {
            None | Some("coupled") => Ok(true),
            Some("independent") => Ok(false),
            Some(o) => Err(validation(format!("fclt.{key}: unknown value `{o}` (coupled, independent)"))),
        }
    };
    let fclt = FcltSettings {
        infection_noise: if noise(fc.and_then(|f| f.infection_noise.as_ref()), "infection_noise")? {
            InfectionNoise::Coupled
        } else {
            InfectionNoise::Independent
        },
        migration_noise: if noise(fc.and_then(|f| f.migration_noise.as_ref()), "migration_noise")? {
            MigrationNoise::Coupled
        } else {
            MigrationNoise::Independent
        },
        strict_paper_indices: fc.and_then(|f| f.strict_paper_indices).unwrap_or(true),
        keep_paths: fc.and_then(|f| f.keep_paths).unwrap_or(10),
        initial_variances: match fc.and_then(|f| f.initial_variances.clone()) {
            None => None,
            Some(v) => {
                if v.len() != l {
                    return Err(validation(format!("fclt.initial_variances: {} rows, model has {l} patches", v.len())));
                }
                Some(v.into_iter().map(|r| variant.to_slots(r)).collect())
            }
        },
    };
    if let Some(v) = &fclt.initial_variances {
        if v.iter().any(|r| r.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || r[R] != 0.0) {
            return Err(validation("fclt.initial_variances: entries must be finite, >= 0, and 0 for the terminal compartment"));
        }
    }

    let vr = raw.verify.as_ref();
    let mut tolerances = Tolerances::default();
    if let Some(v) = vr {
        if let Some(z) = v.z_threshold {
            tolerances.z_threshold = z;
        }
        if let Some(c) = v.ci_level {
            if !(c > 0.0 && c < 1.0) {
                return Err(validation("verify.ci_level must lie in (0, 1)"));
            }
            tolerances.ci_level = c;
        }
        if let Some(w) = v.slope_window {
            tolerances.slope_window = w;
        }
        if let Some(a) = v.mean_rule_all_n {
            tolerances.mean_rule_all_n = a;
        }
    }
    let names = vr.and_then(|v| v.fclt_compartments.clone()).unwrap_or_else(|| vec!["I".into()]);
    for name in &names {
        let slot = (0..4)
            .find(|&s| slot_name(variant, s) == Some(name.as_str()))
            .ok_or_else(|| validation(format!("verify.fclt_compartments: `{name}` is not a compartment of {}", variant.name())))?;
        tolerances.fclt_slots.push(slot);
        tolerances.fclt_compartments.push(name.clone());
    }

    if mode.needs_fclt() {
        check_fclt_admissible(&spec).map_err(HarnessError::Model)?;
    }

    Ok(ExperimentSpec {
        model: spec,
        laws,
        init,
        mode,
        n_list,
        replicates,
        paths,
        dt: run.dt,
        horizon: run.T,
        output_dt,
        checkpoints,
        base_seed,
        out_dir,
        fclt,
        tolerances,
        defaults,
        overrides: Vec::new(),
        config_hash,
        event_logs: run.event_logs.unwrap_or(false),
    })
}

/// User-facing name of an internal slot, `None` if the variant leaves it empty.
pub fn slot_name(variant: Variant, slot: usize) -> Option<&'static str> {
    let used = match slot {
        E => variant.uses_first_stage(),
        R => !variant.terminal_to_susceptible(),
        _ => slot < 4,
    };
    used.then(|| variant.slot_name(slot))
}

fn check_user_rows(variant: Variant, rows: Vec<[f64; 4]>, l: usize) -> Result<()> {
    if rows.len() != l {
        return Err(validation(format!("init: {} rows given, model has {l} patches", rows.len())));
    }
    for (i, r) in rows.iter().enumerate() {
        if !variant.has_exposed() && r[1] != 0.0 {
            return Err(validation(format!("init row {}: E must be 0 for {}", i + 1, variant.name())));
        }
        if variant == Variant::Sis && r[3] != 0.0 {
            return Err(validation(format!("init row {}: R must be 0 for SIS", i + 1)));
        }
        if r.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(validation(format!("init row {}: entries must be finite and >= 0", i + 1)));
        }
    }
    Ok(())
}
