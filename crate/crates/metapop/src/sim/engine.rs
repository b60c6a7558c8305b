use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::log::{Event, EventKind, EventLog};
use super::panel::TrajectoryPanel;
use crate::error::{Error, Result};
use crate::migration::Grid;
use crate::model::{upsilon_values, LawSet, ModelSpec, PopulationState, E, I, R, S};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Spacing of the output grid.
    pub output_dt: f64,
    pub record_log: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { output_dt: 1.0, record_log: false }
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub panel: TrajectoryPanel,
    pub log: Option<EventLog>,
    pub final_state: PopulationState,
    pub event_count: u64,
}

const NO_ORIGIN: u16 = u16::MAX;

#[derive(Debug, Clone, Copy)]
struct Individual {
    patch: u16,
    slot: u8,
    origin: u16,
    bucket_pos: u32,
    /// Second-stage duration drawn together with the first.
    pending: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Due(f64, u32);

impl Eq for Due {}

impl PartialOrd for Due {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Due {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Swap-remove buckets of individual ids per (slot, patch).
struct Buckets {
    l: usize,
    ids: Vec<Vec<u32>>,
}

impl Buckets {
    fn insert(&mut self, people: &mut [Individual], id: u32) {
        let p = &mut people[id as usize];
        let b = &mut self.ids[p.slot as usize * self.l + p.patch as usize];
        p.bucket_pos = b.len() as u32;
        b.push(id);
    }

    fn remove(&mut self, people: &mut [Individual], id: u32) {
        let p = people[id as usize];
        let b = &mut self.ids[p.slot as usize * self.l + p.patch as usize];
        let pos = p.bucket_pos as usize;
        b.swap_remove(pos);
        if pos < b.len() {
            people[b[pos] as usize].bucket_pos = pos as u32;
        }
    }

    fn pick<G: Rng>(&self, slot: usize, patch: usize, rng: &mut G) -> u32 {
        let b = &self.ids[slot * self.l + patch];
        b[rng.gen_range(0..b.len())]
    }
}

struct MigrationClock {
    slot: usize,
    from: usize,
    to: usize,
    rate: f64,
}

struct Sim<'a> {
    spec: &'a ModelSpec,
    laws: &'a LawSet,
    l: usize,
    people: Vec<Individual>,
    buckets: Buckets,
    counts: Vec<[u64; 4]>,
    heap: BinaryHeap<Reverse<Due>>,
    infections: Vec<u64>,
    progress: Vec<u64>,
    terminal: Vec<u64>,
    log: Option<EventLog>,
    events: u64,
}

impl Sim<'_> {
    fn schedule(&mut self, id: u32, at: f64) -> Result<()> {
        if !at.is_finite() {
            return Err(Error::ScheduleOverflow { id: id as usize });
        }
        self.heap.push(Reverse(Due(at, id)));
        Ok(())
    }

    /// Moves an individual and records the event.
    fn relocate(&mut self, t: f64, kind: EventKind, id: u32, slot: usize, patch: usize) {
        let before = self.people[id as usize];
        self.buckets.remove(&mut self.people, id);
        self.counts[before.patch as usize][before.slot as usize] -= 1;
        self.counts[patch][slot] += 1;
        {
            let p = &mut self.people[id as usize];
            p.slot = slot as u8;
            p.patch = patch as u16;
        }
        self.buckets.insert(&mut self.people, id);
        self.events += 1;
        if let Some(log) = self.log.as_mut() {
            log.events.push(Event {
                time: t,
                kind,
                id,
                src: before.slot,
                dst: slot as u8,
                from: before.patch,
                to: patch as u16,
            });
        }
    }

    fn infect<G: Rng>(&mut self, t: f64, patch: usize, rng: &mut G) -> Result<()> {
        let id = self.buckets.pick(S, patch, rng);
        let (eta, zeta) = self.laws.infection.sample(rng);
        self.infections[patch] += 1;
        self.people[id as usize].origin = patch as u16;
        if self.spec.variant.uses_first_stage() {
            self.people[id as usize].pending = zeta;
            self.relocate(t, EventKind::Infect, id, E, patch);
            self.schedule(id, t + eta)
        } else {
            self.relocate(t, EventKind::Infect, id, I, patch);
            self.schedule(id, t + zeta)
        }
    }

    fn scheduled(&mut self, t: f64, id: u32) -> Result<()> {
        let p = self.people[id as usize];
        let (patch, origin) = (p.patch as usize, p.origin);
        let l = self.l;
        if p.slot as usize == E {
            if origin != NO_ORIGIN {
                self.progress[origin as usize * l + patch] += 1;
            }
            self.relocate(t, EventKind::Progress, id, I, patch);
            self.schedule(id, t + p.pending)
        } else {
            if origin != NO_ORIGIN {
                self.terminal[origin as usize * l + patch] += 1;
            }
            let dst = if self.spec.variant.terminal_to_susceptible() { S } else { R };
            self.relocate(t, EventKind::Terminal, id, dst, patch);
            self.people[id as usize].origin = NO_ORIGIN;
            Ok(())
        }
    }
}

fn check_initial(spec: &ModelSpec, init: &PopulationState) -> Result<()> {
    if init.patches() != spec.patches {
        return Err(Error::BadInit(format!("{} patches given, model has {}", init.patches(), spec.patches)));
    }
    if !init.is_balanced() {
        return Err(Error::BadInit("counts do not sum to the stated total".into()));
    }
    if init.total == 0 {
        return Err(Error::EmptyPopulation);
    }
    if init.total > u32::MAX as u64 {
        return Err(Error::BadInit("population too large".into()));
    }
    for (i, c) in init.counts.iter().enumerate() {
        if !spec.variant.uses_first_stage() && c[E] != 0 {
            return Err(Error::BadInit(format!("patch {i}: exposed count must be 0 for {}", spec.variant.name())));
        }
        if spec.variant.terminal_to_susceptible() && c[R] != 0 {
            return Err(Error::BadInit(format!("patch {i}: no terminal compartment in {}", spec.variant.name())));
        }
    }
    Ok(())
}

/// Exact event-driven simulation on `[0, horizon]`.
///
/// Between events every Markovian rate (infection and migration) is constant, so the
/// next Markovian event is drawn from competing exponential clocks and raced against
/// the earliest scheduled stage completion; a tie goes to the scheduled event.
/// Breakpoints of the infection-rate schedules restart the clocks.
pub fn simulate(
    spec: &ModelSpec,
    laws: &LawSet,
    init: &PopulationState,
    horizon: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimOutput> {
    check_initial(spec, init)?;
    let grid = Grid::new(opts.output_dt, horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = spec.patches;
    let n = init.total;

    let mut people = Vec::with_capacity(n as usize);
    let mut buckets = Buckets { l, ids: vec![Vec::new(); 4 * l] };
    let mut initial_due = Vec::new();
    for (i, c) in init.counts.iter().enumerate() {
        for slot in [S, E, I, R] {
            for _ in 0..c[slot] {
                let id = people.len() as u32;
                people.push(Individual { patch: i as u16, slot: slot as u8, origin: NO_ORIGIN, bucket_pos: 0, pending: 0.0 });
                buckets.insert(&mut people, id);
                if slot == E {
                    let (eta, zeta) = laws.initial_exposed.sample(&mut rng);
                    people[id as usize].pending = zeta;
                    initial_due.push((id, eta));
                } else if slot == I {
                    initial_due.push((id, laws.initial_infectious.sample(&mut rng)));
                }
            }
        }
    }

    let clocks: Vec<MigrationClock> = [S, E, I, R]
        .iter()
        .filter_map(|&slot| spec.slot_rates(slot).map(|m| (slot, m)))
        .flat_map(|(slot, m)| {
            (0..l).flat_map(move |from| {
                (0..l)
                    .filter(move |&to| to != from && m[from][to] > 0.0)
                    .map(move |to| MigrationClock { slot, from, to, rate: m[from][to] })
            })
        })
        .collect();

    let mut sim = Sim {
        spec,
        laws,
        l,
        people,
        buckets,
        counts: init.counts.clone(),
        heap: BinaryHeap::new(),
        infections: vec![0; l],
        progress: vec![0; l * l],
        terminal: vec![0; l * l],
        log: opts.record_log.then(|| EventLog::new(spec.variant, init.clone(), horizon)),
        events: 0,
    };
    for (id, d) in initial_due {
        sim.schedule(id, d)?;
    }

    let mut panel = TrajectoryPanel::with_capacity(grid, l, spec.variant, n);
    let mut rates = vec![0.0; l + clocks.len()];
    let mut xf = vec![[0.0; 4]; l];
    let mut t = 0.0;
    loop {
        for (i, c) in sim.counts.iter().enumerate() {
            xf[i] = c.map(|v| v as f64);
        }
        let ups = upsilon_values(&xf, n as f64, spec);
        let mut total = 0.0;
        for i in 0..l {
            rates[i] = spec.lambda[i].at(t) * ups[i];
            total += rates[i];
        }
        for (m, c) in clocks.iter().enumerate() {
            let r = c.rate * sim.counts[c.from][c.slot] as f64;
            rates[l + m] = r;
            total += r;
        }
        let t_markov = if total > 0.0 {
            let z: f64 = Exp1.sample(&mut rng);
            t + z / total
        } else {
            f64::INFINITY
        };
        let t_due = sim.heap.peek().map_or(f64::INFINITY, |d| d.0 .0);
        let t_break = spec.lambda.iter().filter_map(|s| s.next_break(t)).fold(f64::INFINITY, f64::min);
        let t_next = t_markov.min(t_due).min(t_break);

        while panel.recorded() < grid.len && (grid.time(panel.recorded()) < t_next || t_next > horizon) {
            panel.push(&sim.counts, &sim.infections, &sim.progress, &sim.terminal);
        }
        if t_next > horizon {
            break;
        }
        if t_due <= t_markov && t_due <= t_break {
            let Reverse(Due(at, id)) = sim.heap.pop().expect("peeked");
            t = at;
            sim.scheduled(t, id)?;
        } else if t_break < t_markov {
            t = t_break;
        } else {
            t = t_markov;
            let mut u = rng.gen::<f64>() * total;
            let mut pick = rates.len() - 1;
            for (m, r) in rates.iter().enumerate() {
                if u < *r {
                    pick = m;
                    break;
                }
                u -= r;
            }
            // guard against rounding landing on a zero-rate clock
            while rates[pick] == 0.0 {
                pick -= 1;
            }
            if pick < l {
                sim.infect(t, pick, &mut rng)?;
            } else {
                let c = &clocks[pick - l];
                let id = sim.buckets.pick(c.slot, c.from, &mut rng);
                sim.relocate(t, EventKind::Migrate, id, c.slot, c.to);
            }
        }
    }
    let mut final_state = PopulationState::new(sim.counts.clone());
    final_state.time = horizon;
    Ok(SimOutput { panel, log: sim.log, final_state, event_count: sim.events })
}
