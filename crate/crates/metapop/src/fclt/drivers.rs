//! Gaussian drivers of the fluctuation system: analytic covariances and path sampling.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use rayon::prelude::*;

use super::cohort::{CohortKernels, StageMasses};
use super::linearization::check_fclt_admissible;
use crate::error::{Error, Result};
use crate::fluid::FluidTrajectory;
use crate::migration::{
    discretize, flatten, CrossKernel, Grid, KernelMethod, KernelSeries, TransitionKernelTable,
};
use crate::model::{LawSet, ModelSpec, Variant, E, I, R, S};
use crate::seed::{stream_rng, TAG_FCLT_PATH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DriverFamily {
    /// Compensated infections, a Brownian motion run on the clock `∫ λ Ῡ`.
    Infection,
    MigrationS,
    MigrationE,
    MigrationI,
    MigrationR,
    /// Initially exposed leaving the exposed stage, by origin and landing patch.
    InitialExposed,
    /// Initially infectious leaving the infectious stage.
    InitialInfectious,
    /// Initially exposed completing both stages.
    InitialExposedInfectious,
    /// Newly infected leaving the exposed stage.
    ExposedFlow,
    /// Newly infected completing both stages.
    InfectiousFlow,
}

impl DriverFamily {
    pub const ALL: [DriverFamily; 10] = [
        DriverFamily::Infection,
        DriverFamily::MigrationS,
        DriverFamily::MigrationE,
        DriverFamily::MigrationI,
        DriverFamily::MigrationR,
        DriverFamily::InitialExposed,
        DriverFamily::InitialInfectious,
        DriverFamily::InitialExposedInfectious,
        DriverFamily::ExposedFlow,
        DriverFamily::InfectiousFlow,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DriverFamily::Infection => "M_A",
            DriverFamily::MigrationS => "M_S",
            DriverFamily::MigrationE => "M_E",
            DriverFamily::MigrationI => "M_I",
            DriverFamily::MigrationR => "M_R",
            DriverFamily::InitialExposed => "E0",
            DriverFamily::InitialInfectious => "I01",
            DriverFamily::InitialExposedInfectious => "I02",
            DriverFamily::ExposedFlow => "E_FLOW",
            DriverFamily::InfectiousFlow => "I_FLOW",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        DriverFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Internal slot whose migrations this family compensates.
    pub fn migration_slot(self) -> Option<usize> {
        match self {
            DriverFamily::MigrationS => Some(S),
            DriverFamily::MigrationE => Some(E),
            DriverFamily::MigrationI => Some(I),
            DriverFamily::MigrationR => Some(R),
            _ => None,
        }
    }
}

/// One scalar driver process. For migration families `(from, to)` is the move;
/// for landing families it is (origin, landing patch); `Infection` uses `from` only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Driver {
    pub family: DriverFamily,
    pub from: usize,
    pub to: usize,
}

impl Driver {
    pub fn new(family: DriverFamily, from: usize, to: usize) -> Self {
        let to = if family == DriverFamily::Infection { from } else { to };
        Driver { family, from, to }
    }

    pub fn infection(patch: usize) -> Self {
        Driver::new(DriverFamily::Infection, patch, patch)
    }
}

/// How the infection martingale relates to the landing flows of the same origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfectionNoise {
    /// Infection martingale and flows share one random measure (jointly Gaussian).
    Coupled,
    /// Infection martingale independent of the flows.
    Independent,
}

impl InfectionNoise {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "coupled" => Some(InfectionNoise::Coupled),
            "independent" => Some(InfectionNoise::Independent),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            InfectionNoise::Coupled => "coupled",
            InfectionNoise::Independent => "independent",
        }
    }
}

/// How the exposed and infectious migration martingales relate to the landing flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MigrationNoise {
    /// Split by cohort and sampled jointly with that cohort's landings.
    Coupled,
    /// Time-changed Brownian motions independent of everything else.
    Independent,
}

impl MigrationNoise {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "coupled" => Some(MigrationNoise::Coupled),
            "independent" => Some(MigrationNoise::Independent),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MigrationNoise::Coupled => "coupled",
            MigrationNoise::Independent => "independent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseModel {
    pub infection: InfectionNoise,
    pub migration: MigrationNoise,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { infection: InfectionNoise::Coupled, migration: MigrationNoise::Coupled }
    }
}

impl NoiseModel {
    pub fn new(infection: InfectionNoise, migration: MigrationNoise) -> Self {
        NoiseModel { infection, migration }
    }
}

/// Independent groups of individuals (or standalone Brownian motions).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Cohort {
    /// Infected after time zero in the given origin (Poisson in time).
    New(usize),
    Exposed0(usize),
    Infectious0(usize),
    /// Infection martingale sampled on its own.
    Infection(usize),
    /// Migration martingale sampled on its own: (slot, from, to).
    Moves(usize, usize, usize),
}

/// Per-individual observable of a cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Obs {
    Infected,
    Landed(usize),
    Done(usize),
    Moved { infectious: bool, from: usize, to: usize },
    Clock,
}

type Component = (Cohort, Obs);

/// A group of jointly Gaussian scalar processes, independent of every other block.
#[derive(Debug, Clone)]
pub struct Block {
    pub name: String,
    components: Vec<Component>,
}

impl Block {
    pub fn dimension(&self) -> usize {
        self.components.len()
    }
}

/// Analytic covariance evaluator of every driver family on the kernel grid.
#[derive(Debug, Clone)]
pub struct DriverPanel<'a> {
    pub grid: Grid,
    pub patches: usize,
    pub variant: Variant,
    /// Noise model in effect (migration falls back to independent when unsupported).
    pub noise: NoiseModel,
    /// Why the requested migration coupling was not used, if it was not.
    pub migration_note: Option<String>,
    table: &'a TransitionKernelTable,
    cross: &'a CrossKernel,
    cross0: &'a CrossKernel,
    /// Mass of `dĀ_l` carried by the left and right node of cell c, `[c * L + l]`.
    half: Vec<(f64, f64)>,
    cum_infection: Vec<f64>,
    /// `ν_{from,to} ∫_0^{t_k} x̄_{slot,from}`, `[((slot * K) + k) * L + from) * L + to]`.
    clocks: Vec<f64>,
    exposed0: Vec<f64>,
    infectious0: Vec<f64>,
    moves_e: Vec<(usize, usize)>,
    moves_i: Vec<(usize, usize)>,
    new_kernels: Vec<Option<CohortKernels>>,
    exposed0_kernels: Vec<Option<CohortKernels>>,
    infectious0_kernels: Vec<Option<CohortKernels>>,
}

impl<'a> DriverPanel<'a> {
    pub fn new(
        spec: &ModelSpec,
        fluid: &FluidTrajectory,
        table: &'a TransitionKernelTable,
        laws: &LawSet,
        noise: NoiseModel,
    ) -> Result<Self> {
        check_fclt_admissible(spec)?;
        let l = spec.patches;
        if fluid.patches != l || table.patches() != l {
            return Err(Error::GridMismatch("patch count differs between spec, fluid and kernels".into()));
        }
        if !fluid.grid.same_as(&table.grid) {
            return Err(Error::GridMismatch(format!(
                "fluid grid (dt {}, {} points) differs from kernel grid (dt {}, {} points)",
                fluid.grid.dt, fluid.grid.len, table.grid.dt, table.grid.len
            )));
        }
        let cross = table.cross().ok_or(Error::CrossNotTabulated)?;
        let cross0 = table.cross0().ok_or(Error::CrossNotTabulated)?;
        let grid = fluid.grid;
        let len = grid.len;

        let mut half = vec![(0.0, 0.0); len * l];
        let mut cum_infection = vec![0.0; len * l];
        for c in 1..len {
            for p in 0..l {
                let (w0, w1) = spec.lambda[p].cell_weights(grid.time(c - 1), grid.time(c));
                let m = (w0 * fluid.upsilon(c - 1, p), w1 * fluid.upsilon(c, p));
                half[c * l + p] = m;
                cum_infection[c * l + p] = cum_infection[(c - 1) * l + p] + m.0 + m.1;
            }
        }

        let mut clocks = vec![0.0; 4 * len * l * l];
        for slot in [S, E, I, R] {
            let nu = spec.slot_rate_matrix(slot);
            for k in 1..len {
                for from in 0..l {
                    let area = 0.5 * grid.dt * (fluid.state(k - 1, from)[slot] + fluid.state(k, from)[slot]);
                    for to in 0..l {
                        let rate = if to == from { 0.0 } else { nu[from][to] };
                        let at = ((slot * len + k) * l + from) * l + to;
                        let before = ((slot * len + k - 1) * l + from) * l + to;
                        clocks[at] = clocks[before] + rate * area;
                    }
                }
            }
        }
        let moves = |slot: usize| -> Vec<(usize, usize)> {
            let nu = spec.slot_rate_matrix(slot);
            (0..l)
                .flat_map(|a| (0..l).map(move |b| (a, b)))
                .filter(|&(a, b)| a != b && nu[a][b] > 0.0)
                .collect()
        };
        let exposed0: Vec<f64> = (0..l).map(|p| fluid.state(0, p)[E]).collect();
        let infectious0: Vec<f64> = (0..l).map(|p| fluid.state(0, p)[I]).collect();

        let mut noise = noise;
        let mut migration_note = None;
        if noise.migration == MigrationNoise::Coupled {
            let quadrature = table.phi_method == KernelMethod::Quadrature
                && table.phi0_method == KernelMethod::Quadrature;
            if !(laws.infection.is_product() && laws.initial_exposed.is_product() && quadrature) {
                migration_note = Some(
                    "migration noise sampled independently: coupling needs product duration laws \
                     with quadrature kernels"
                        .to_string(),
                );
                noise.migration = MigrationNoise::Independent;
            }
        }
        let (mut new_kernels, mut exposed0_kernels, mut infectious0_kernels) = (vec![], vec![], vec![]);
        if noise.migration == MigrationNoise::Coupled {
            let pf = flatten(&table.p);
            let qf = flatten(&table.q);
            let stage = |law, name| -> Result<StageMasses> {
                Ok(StageMasses::from_discretized(&discretize(law, &grid, name)?))
            };
            let g = stage(&laws.infection.exposed, "G")?;
            let f = stage(&laws.infection.infectious, "F")?;
            let g0 = stage(&laws.initial_exposed.exposed, "G0")?;
            let f_late = stage(&laws.initial_exposed.infectious, "F")?;
            let f0 = stage(&laws.initial_infectious, "F0")?;
            let now = StageMasses::immediate(len);
            let jobs: Vec<(usize, usize)> = (0..l).flat_map(|o| (0..3).map(move |c| (c, o))).collect();
            let built: Vec<Option<CohortKernels>> = jobs
                .par_iter()
                .map(|&(c, o)| {
                    let (mass, first, second) = match c {
                        0 => (cum_infection[(len - 1) * l + o], &g, &f),
                        1 => (exposed0[o], &g0, &f_late),
                        _ => (infectious0[o], &now, &f0),
                    };
                    (mass > 0.0).then(|| CohortKernels::build(o, l, len, &pf, &qf, first, second))
                })
                .collect();
            for ((c, _), k) in jobs.into_iter().zip(built) {
                match c {
                    0 => new_kernels.push(k),
                    1 => exposed0_kernels.push(k),
                    _ => infectious0_kernels.push(k),
                }
            }
        }

        Ok(DriverPanel {
            grid,
            patches: l,
            variant: spec.variant,
            noise,
            migration_note,
            table,
            cross,
            cross0,
            half,
            cum_infection,
            clocks,
            exposed0,
            infectious0,
            moves_e: moves(E),
            moves_i: moves(I),
            new_kernels,
            exposed0_kernels,
            infectious0_kernels,
        })
    }

    /// `Ā_l(t_k)` as carried by the node masses.
    pub fn cumulative_infection(&self, k: usize, l: usize) -> f64 {
        self.cum_infection[k * self.patches + l]
    }

    fn slot_clock(&self, slot: usize, from: usize, to: usize, k: usize) -> f64 {
        let l = self.patches;
        self.clocks[((slot * self.grid.len + k) * l + from) * l + to]
    }

    /// Time change of a family run as a Brownian motion, at `t_k`.
    pub fn clock(&self, d: Driver, k: usize) -> f64 {
        match d.family {
            DriverFamily::Infection => self.cumulative_infection(k, d.from),
            f => match f.migration_slot() {
                Some(slot) => self.slot_clock(slot, d.from, d.to, k),
                None => f64::NAN,
            },
        }
    }

    fn infection_coupled(&self) -> bool {
        self.noise.infection == InfectionNoise::Coupled
    }

    fn migration_coupled(&self) -> bool {
        self.noise.migration == MigrationNoise::Coupled
    }

    fn in_range(&self, d: Driver) -> bool {
        d.from < self.patches && d.to < self.patches
    }

    /// Cohort components whose sum is the driver.
    fn components(&self, d: Driver) -> Vec<Component> {
        use DriverFamily::*;
        let (a, b) = (d.from, d.to);
        match d.family {
            Infection if self.infection_coupled() => vec![(Cohort::New(a), Obs::Infected)],
            Infection => vec![(Cohort::Infection(a), Obs::Infected)],
            ExposedFlow if !self.variant.uses_first_stage() => {
                if a == b {
                    self.components(Driver::infection(a))
                } else {
                    vec![]
                }
            }
            ExposedFlow => vec![(Cohort::New(a), Obs::Landed(b))],
            InfectiousFlow => vec![(Cohort::New(a), Obs::Done(b))],
            InitialExposed => vec![(Cohort::Exposed0(a), Obs::Landed(b))],
            InitialExposedInfectious => vec![(Cohort::Exposed0(a), Obs::Done(b))],
            InitialInfectious => vec![(Cohort::Infectious0(a), Obs::Done(b))],
            f => {
                let slot = f.migration_slot().expect("migration family");
                if a == b {
                    return vec![];
                }
                if self.migration_coupled() && (slot == E || slot == I) {
                    let infectious = slot == I;
                    let obs = Obs::Moved { infectious, from: a, to: b };
                    let mut out = Vec::new();
                    for o in 0..self.patches {
                        out.push((Cohort::New(o), obs));
                        out.push((Cohort::Exposed0(o), obs));
                        if infectious {
                            out.push((Cohort::Infectious0(o), obs));
                        }
                    }
                    out
                } else {
                    vec![(Cohort::Moves(slot, a, b), Obs::Clock)]
                }
            }
        }
    }

    /// Drivers a sampled component adds into.
    fn targets(&self, (c, o): Component) -> Vec<Driver> {
        use DriverFamily::*;
        match (c, o) {
            (Cohort::New(l) | Cohort::Infection(l), Obs::Infected) => {
                let mut v = vec![Driver::infection(l)];
                if !self.variant.uses_first_stage() {
                    v.push(Driver::new(ExposedFlow, l, l));
                }
                v
            }
            (Cohort::New(l), Obs::Landed(i)) => vec![Driver::new(ExposedFlow, l, i)],
            (Cohort::New(l), Obs::Done(i)) => vec![Driver::new(InfectiousFlow, l, i)],
            (Cohort::Exposed0(l), Obs::Landed(i)) => vec![Driver::new(InitialExposed, l, i)],
            (Cohort::Exposed0(l), Obs::Done(i)) => vec![Driver::new(InitialExposedInfectious, l, i)],
            (Cohort::Infectious0(l), Obs::Done(i)) => vec![Driver::new(InitialInfectious, l, i)],
            (_, Obs::Moved { infectious, from, to }) => {
                vec![Driver::new(if infectious { MigrationI } else { MigrationE }, from, to)]
            }
            (Cohort::Moves(slot, from, to), Obs::Clock) => {
                let f = [MigrationS, MigrationE, MigrationI, MigrationR][slot];
                vec![Driver::new(f, from, to)]
            }
            _ => vec![],
        }
    }

    fn cohort_kernels(&self, c: Cohort) -> Option<&CohortKernels> {
        match c {
            Cohort::New(l) => self.new_kernels.get(l)?.as_ref(),
            Cohort::Exposed0(l) => self.exposed0_kernels.get(l)?.as_ref(),
            Cohort::Infectious0(l) => self.infectious0_kernels.get(l)?.as_ref(),
            _ => None,
        }
    }

    /// Landing series of a cohort: (first stage, both stages).
    fn series(&self, c: Cohort) -> (Option<&KernelSeries>, &KernelSeries, Option<&CrossKernel>) {
        match c {
            Cohort::Exposed0(_) => (Some(&self.table.pg0), &self.table.phi0, Some(self.cross0)),
            Cohort::Infectious0(_) => (None, &self.table.qf0, None),
            _ => (Some(&self.table.pg), &self.table.phi, Some(self.cross)),
        }
    }

    /// `E[x(j)]` for one individual of the cohort.
    fn mean(&self, c: Cohort, x: Obs, j: usize, l: usize) -> f64 {
        let (first, both, _) = self.series(c);
        match x {
            Obs::Infected => 1.0,
            Obs::Landed(i) => first.map_or(0.0, |s| s.value(j, l, i)),
            Obs::Done(i) => both.value(j, l, i),
            _ => 0.0,
        }
    }

    /// `E[x(j) y(j')]` for one individual of the cohort, started at lag 0 in patch `l`.
    fn moment(&self, c: Cohort, x: Obs, j: usize, y: Obs, jp: usize, l: usize) -> f64 {
        let (x, j, y, jp) = if y < x { (y, jp, x, j) } else { (x, j, y, jp) };
        let (first, both, cross) = self.series(c);
        let kern = || self.cohort_kernels(c);
        match (x, y) {
            (Obs::Infected, Obs::Infected) => 1.0,
            (Obs::Infected, Obs::Landed(i)) => first.map_or(0.0, |s| s.value(jp, l, i)),
            (Obs::Infected, Obs::Done(i)) => both.value(jp, l, i),
            (Obs::Landed(i), Obs::Landed(i2)) if i == i2 => first.map_or(0.0, |s| s.value(j.min(jp), l, i)),
            (Obs::Landed(i), Obs::Done(i2)) => cross.map_or(0.0, |x| x.get(j, jp, l, i, i2)),
            (Obs::Landed(i), Obs::Moved { infectious: false, from, to }) => {
                kern().map_or(0.0, |k| k.exposed_mig_landing((from, to), i, jp, j))
            }
            (Obs::Done(i), Obs::Done(i2)) if i == i2 => both.value(j.min(jp), l, i),
            (Obs::Done(i), Obs::Moved { infectious, from, to }) => {
                kern().map_or(0.0, |k| k.mig_done(infectious, (from, to), i, jp, j))
            }
            (
                Obs::Moved { infectious, from, to },
                Obs::Moved { infectious: inf2, from: f2, to: t2 },
            ) if infectious == inf2 => kern().map_or(0.0, |k| k.mig_mig(infectious, (from, to), (f2, t2), j, jp)),
            _ => 0.0,
        }
    }

    fn component_covariance(&self, a: Component, ka: usize, b: Component, kb: usize) -> f64 {
        let ((a, ka), (b, kb)) = if (b, kb) < (a, ka) { ((b, kb), (a, ka)) } else { ((a, ka), (b, kb)) };
        if a.0 != b.0 {
            return 0.0;
        }
        let m = ka.min(kb);
        if m == 0 {
            return 0.0;
        }
        match a.0 {
            Cohort::Infection(l) => self.cumulative_infection(m, l),
            Cohort::Moves(slot, from, to) => {
                if a == b {
                    self.slot_clock(slot, from, to, m)
                } else {
                    0.0
                }
            }
            Cohort::New(l) => {
                let mut acc = 0.0;
                for c in 1..=m {
                    let (w0, w1) = self.half[c * self.patches + l];
                    if w0 != 0.0 {
                        acc += w0 * self.moment(a.0, a.1, ka - c + 1, b.1, kb - c + 1, l);
                    }
                    if w1 != 0.0 {
                        acc += w1 * self.moment(a.0, a.1, ka - c, b.1, kb - c, l);
                    }
                }
                acc
            }
            Cohort::Exposed0(l) | Cohort::Infectious0(l) => {
                let mass = if matches!(a.0, Cohort::Exposed0(_)) { self.exposed0[l] } else { self.infectious0[l] };
                if mass == 0.0 {
                    return 0.0;
                }
                mass * (self.moment(a.0, a.1, ka, b.1, kb, l)
                    - self.mean(a.0, a.1, ka, l) * self.mean(a.0, b.1, kb, l))
            }
        }
    }

    /// `Cov(a(t_ka), b(t_kb))` at grid indices. Symmetric by construction.
    pub fn covariance(&self, a: Driver, ka: usize, b: Driver, kb: usize) -> f64 {
        let ((a, ka), (b, kb)) = if (b, kb) < (a, ka) { ((b, kb), (a, ka)) } else { ((a, ka), (b, kb)) };
        let cb = self.components(b);
        let mut acc = 0.0;
        for x in self.components(a) {
            for &y in &cb {
                acc += self.component_covariance(x, ka, y, kb);
            }
        }
        acc
    }

    /// Same as [`DriverPanel::covariance`] at grid times, with family names and bounds checked.
    pub fn covariance_at(
        &self,
        family: &str,
        (l, i): (usize, usize),
        family2: &str,
        (l2, i2): (usize, usize),
        t: f64,
        t2: f64,
    ) -> Result<f64> {
        let ka = self.grid.index_of(t)?;
        let kb = self.grid.index_of(t2)?;
        let a = Driver::new(DriverFamily::parse(family)?, l, i);
        let b = Driver::new(DriverFamily::parse(family2)?, l2, i2);
        if !self.in_range(a) || !self.in_range(b) {
            return Err(Error::GridMismatch(format!(
                "patch index out of range for {} patches",
                self.patches
            )));
        }
        Ok(self.covariance(a, ka, b, kb))
    }

    /// Every scalar driver of the model, in sampling-independent canonical order.
    pub fn drivers(&self) -> Vec<Driver> {
        let l = self.patches;
        let mut out = Vec::new();
        for f in DriverFamily::ALL {
            for a in 0..l {
                if f == DriverFamily::Infection {
                    out.push(Driver::infection(a));
                    continue;
                }
                for b in 0..l {
                    if f.migration_slot().is_some() && a == b {
                        continue;
                    }
                    out.push(Driver::new(f, a, b));
                }
            }
        }
        out
    }

    /// Mutually independent groups of sampled components.
    pub fn blocks(&self) -> Vec<Block> {
        let l = self.patches;
        let first_stage = self.variant.uses_first_stage();
        let moved = |infectious: bool| -> Vec<Obs> {
            if !self.migration_coupled() {
                return vec![];
            }
            let pairs = if infectious { &self.moves_i } else { &self.moves_e };
            pairs.iter().map(|&(from, to)| Obs::Moved { infectious, from, to }).collect()
        };
        let mut out = Vec::new();
        for o in 0..l {
            let mut new = Vec::new();
            if self.infection_coupled() {
                new.push(Obs::Infected);
            } else {
                out.push(Block {
                    name: format!("M_A[{}]", o + 1),
                    components: vec![(Cohort::Infection(o), Obs::Infected)],
                });
            }
            if first_stage {
                new.extend((0..l).map(Obs::Landed));
            }
            new.extend((0..l).map(Obs::Done));
            new.extend(moved(false));
            new.extend(moved(true));
            out.push(Block {
                name: format!("new[{}]", o + 1),
                components: new.into_iter().map(|x| (Cohort::New(o), x)).collect(),
            });

            let mut e0: Vec<Obs> = if first_stage { (0..l).map(Obs::Landed).collect() } else { vec![] };
            e0.extend((0..l).map(Obs::Done));
            e0.extend(moved(false));
            e0.extend(moved(true));
            out.push(Block {
                name: format!("exposed0[{}]", o + 1),
                components: e0.into_iter().map(|x| (Cohort::Exposed0(o), x)).collect(),
            });

            let mut i0: Vec<Obs> = (0..l).map(Obs::Done).collect();
            i0.extend(moved(true));
            out.push(Block {
                name: format!("infectious0[{}]", o + 1),
                components: i0.into_iter().map(|x| (Cohort::Infectious0(o), x)).collect(),
            });
        }
        for slot in [S, E, I, R] {
            if self.migration_coupled() && (slot == E || slot == I) {
                continue;
            }
            let f = [DriverFamily::MigrationS, DriverFamily::MigrationE, DriverFamily::MigrationI, DriverFamily::MigrationR][slot];
            for a in 0..l {
                for b in 0..l {
                    if a != b {
                        out.push(Block {
                            name: format!("{}[{},{}]", f.name(), a + 1, b + 1),
                            components: vec![(Cohort::Moves(slot, a, b), Obs::Clock)],
                        });
                    }
                }
            }
        }
        out
    }

    /// Stacked covariance of a block at grid indices `times` (component-major).
    pub fn block_covariance(&self, block: &Block, times: &[usize]) -> DMatrix<f64> {
        let comps = &block.components;
        let n = comps.len() * times.len();
        let mut m = DMatrix::zeros(n, n);
        let at = |r: usize| (comps[r / times.len()], times[r % times.len()]);
        for r in 0..n {
            let (a, ka) = at(r);
            for c in 0..=r {
                let (b, kb) = at(c);
                let v = self.component_covariance(a, ka, b, kb);
                m[(r, c)] = v;
                m[(c, r)] = v;
            }
        }
        m
    }

    fn component_clock(&self, (c, _): Component, k: usize) -> f64 {
        match c {
            Cohort::Infection(l) => self.cumulative_infection(k, l),
            Cohort::Moves(slot, from, to) => self.slot_clock(slot, from, to, k),
            _ => f64::NAN,
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Jitter levels tried before giving up, as multiples of the trace.
const JITTER: [f64; 5] = [0.0, 1e-16, 1e-14, 1e-12, 1e-10];

/// Lower Cholesky factor of the nonzero-variance rows of a block, packed by row.
#[derive(Debug, Clone)]
struct Factor {
    rows: Vec<usize>,
    packed: Vec<f64>,
}

impl Factor {
    fn sample<Rg: Rng + ?Sized>(&self, rng: &mut Rg, z: &mut Vec<f64>, out: &mut [f64]) {
        let n = self.rows.len();
        z.clear();
        z.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let mut start = 0;
        for (r, &dest) in self.rows.iter().enumerate() {
            let row = &self.packed[start..start + r + 1];
            out[dest] = row.iter().zip(&z[..=r]).map(|(a, b)| a * b).sum();
            start += r + 1;
        }
    }
}

/// Summary of one factorized block.
#[derive(Debug, Clone)]
pub struct BlockInfo {
    pub name: String,
    pub dimension: usize,
    pub trace: f64,
    pub jitter: f64,
}

enum Sampler {
    /// Independent increments with the given variances.
    Brownian { targets: Vec<Driver>, increments: Vec<f64> },
    Gaussian { targets: Vec<Vec<Driver>>, factor: Factor },
}

/// Factorized blocks, ready to draw joint driver paths.
pub struct DriverSampler {
    pub grid: Grid,
    pub patches: usize,
    samplers: Vec<Sampler>,
    pub info: Vec<BlockInfo>,
}

impl DriverSampler {
    pub fn new(panel: &DriverPanel) -> Result<Self> {
        let len = panel.grid.len;
        let times: Vec<usize> = (1..len).collect();
        let mut samplers = Vec::new();
        let mut info = Vec::new();
        for block in panel.blocks() {
            if block.components.is_empty() {
                continue;
            }
            let first = block.components[0];
            if matches!(first.0, Cohort::Infection(_) | Cohort::Moves(..)) {
                let increments: Vec<f64> = (0..len)
                    .map(|k| {
                        if k == 0 {
                            0.0
                        } else {
                            (panel.component_clock(first, k) - panel.component_clock(first, k - 1)).max(0.0)
                        }
                    })
                    .collect();
                if increments.iter().any(|v| *v > 0.0) {
                    samplers.push(Sampler::Brownian { targets: panel.targets(first), increments });
                }
                continue;
            }
            let cov = panel.block_covariance(&block, &times);
            let max_diag = (0..cov.nrows()).map(|r| cov[(r, r)]).fold(0.0, f64::max);
            if max_diag <= 0.0 {
                continue;
            }
            let rows: Vec<usize> = (0..cov.nrows())
                .filter(|&r| cov[(r, r)] > 1e-15 * max_diag)
                .collect();
            let sub = DMatrix::from_fn(rows.len(), rows.len(), |a, b| cov[(rows[a], rows[b])]);
            let trace = sub.trace();
            let mut factored = None;
            for eps in JITTER {
                let mut m = sub.clone();
                for r in 0..m.nrows() {
                    m[(r, r)] += eps * trace;
                }
                if let Some(ch) = m.cholesky() {
                    factored = Some((ch.l(), eps * trace));
                    break;
                }
            }
            let Some((lower, jitter)) = factored else {
                return Err(Error::NotPsd { block: block.name, min_eigenvalue: min_eigenvalue(&sub) });
            };
            let n = rows.len();
            let mut packed = Vec::with_capacity(n * (n + 1) / 2);
            for r in 0..n {
                for c in 0..=r {
                    packed.push(lower[(r, c)]);
                }
            }
            // map factor rows back to (component, time) slots of the block buffer
            let dest: Vec<usize> = rows
                .iter()
                .map(|&r| (r / times.len()) * len + times[r % times.len()])
                .collect();
            info.push(BlockInfo { name: block.name.clone(), dimension: n, trace, jitter });
            let targets = block.components.iter().map(|&c| panel.targets(c)).collect();
            samplers.push(Sampler::Gaussian { targets, factor: Factor { rows: dest, packed } });
        }
        Ok(DriverSampler { grid: panel.grid, patches: panel.patches, samplers, info })
    }

    /// Joint driver path number `path` of the stream rooted at `seed`.
    pub fn sample(&self, seed: u64, path: u64) -> DriverPath {
        let mut rng = stream_rng(seed, TAG_FCLT_PATH, path);
        let len = self.grid.len;
        let mut out = DriverPath::zeros(self.patches, len);
        let mut z = Vec::new();
        let mut buf = Vec::new();
        for s in &self.samplers {
            match s {
                Sampler::Brownian { targets, increments } => {
                    buf.clear();
                    buf.resize(len, 0.0);
                    let mut acc = 0.0;
                    for k in 1..len {
                        let g: f64 = rng.sample(StandardNormal);
                        acc += increments[k].sqrt() * g;
                        buf[k] = acc;
                    }
                    for d in targets {
                        add(out.series_mut(*d), &buf);
                    }
                }
                Sampler::Gaussian { targets, factor } => {
                    buf.clear();
                    buf.resize(targets.len() * len, 0.0);
                    factor.sample(&mut rng, &mut z, &mut buf);
                    for (j, ds) in targets.iter().enumerate() {
                        for d in ds {
                            add(out.series_mut(*d), &buf[j * len..(j + 1) * len]);
                        }
                    }
                }
            }
        }
        out
    }
}

fn add(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}


/// Convenience: factorize the panel and draw paths `0..count`.
pub fn sample_drivers(panel: &DriverPanel, seed: u64, count: usize) -> Result<Vec<DriverPath>> {
    let sampler = DriverSampler::new(panel)?;
    Ok((0..count as u64).map(|p| sampler.sample(seed, p)).collect())
}

/// Values of every scalar driver on the grid for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverPath {
    l: usize,
    len: usize,
    values: Vec<f64>,
}

impl DriverPath {
    pub fn zeros(l: usize, len: usize) -> Self {
        DriverPath { l, len, values: vec![0.0; DriverFamily::ALL.len() * l * l * len] }
    }

    fn offset(&self, d: Driver) -> usize {
        ((d.family.index() * self.l + d.from) * self.l + d.to) * self.len
    }

    pub fn series(&self, d: Driver) -> &[f64] {
        let o = self.offset(Driver::new(d.family, d.from, d.to));
        &self.values[o..o + self.len]
    }

    pub fn series_mut(&mut self, d: Driver) -> &mut [f64] {
        let o = self.offset(Driver::new(d.family, d.from, d.to));
        &mut self.values[o..o + self.len]
    }

    #[inline]
    pub fn get(&self, d: Driver, k: usize) -> f64 {
        self.values[self.offset(d) + k]
    }

    pub fn patches(&self) -> usize {
        self.l
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}
