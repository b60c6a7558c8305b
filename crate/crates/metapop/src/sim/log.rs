use std::io::{self, Read, Write};

use crate::error::{Error, Result};
use crate::model::{PopulationState, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Infect,
    /// End of the first stage (E→I).
    Progress,
    /// End of the infectious stage (I→R, or I→S for SIS/SIRS).
    Terminal,
    Migrate,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Infect => "INFECT",
            EventKind::Progress => "E_TO_I",
            EventKind::Terminal => "TERMINAL",
            EventKind::Migrate => "MIGRATE",
        }
    }

    fn code(self) -> u8 {
        match self {
            EventKind::Infect => 0,
            EventKind::Progress => 1,
            EventKind::Terminal => 2,
            EventKind::Migrate => 3,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => EventKind::Infect,
            1 => EventKind::Progress,
            2 => EventKind::Terminal,
            3 => EventKind::Migrate,
            _ => return None,
        })
    }
}

/// One state change: individual `id` moves from (`src` slot, `from` patch) to (`dst`, `to`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub id: u32,
    pub src: u8,
    pub dst: u8,
    pub from: u16,
    pub to: u16,
}

const RECORD_BYTES: usize = 20;
const MAGIC: &[u8; 8] = b"EPILOG01";

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub variant: Variant,
    pub initial: PopulationState,
    pub horizon: f64,
    pub events: Vec<Event>,
}

impl EventLog {
    pub fn new(variant: Variant, initial: PopulationState, horizon: f64) -> Self {
        EventLog { variant, initial, horizon, events: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Applies every event to the initial state, calling `check` after each one.
    pub fn replay_with<F: FnMut(&Event, &PopulationState)>(&self, mut check: F) -> Result<PopulationState> {
        let mut st = self.initial.clone();
        let mut last = f64::NEG_INFINITY;
        for (n, ev) in self.events.iter().enumerate() {
            if ev.time < last {
                return Err(Error::CorruptLog(format!("event {n} goes back in time")));
            }
            last = ev.time;
            let (from, to) = (ev.from as usize, ev.to as usize);
            let (src, dst) = (ev.src as usize, ev.dst as usize);
            if from >= st.patches() || to >= st.patches() || src >= 4 || dst >= 4 {
                return Err(Error::CorruptLog(format!("event {n} refers to an unknown patch or slot")));
            }
            let c = &mut st.counts[from][src];
            *c = c.checked_sub(1).ok_or_else(|| Error::CorruptLog(format!("event {n} empties slot {src}")))?;
            st.counts[to][dst] += 1;
            st.time = ev.time;
            check(ev, &st);
        }
        Ok(st)
    }

    pub fn replay(&self) -> Result<PopulationState> {
        self.replay_with(|_, _| {})
    }

    /// Epochs of INFECT events in `patch`.
    pub fn infection_times(&self, patch: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Infect && e.to as usize == patch)
            .map(|e| e.time)
            .collect()
    }

    /// CSV with one row per event; slot columns use the variant's compartment names.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["time", "kind", "id", "from_compartment", "to_compartment", "from_patch", "to_patch"])?;
        for ev in &self.events {
            out.write_record([
                format!("{:.17e}", ev.time),
                ev.kind.name().to_string(),
                ev.id.to_string(),
                self.variant.slot_name(ev.src as usize).to_string(),
                self.variant.slot_name(ev.dst as usize).to_string(),
                (ev.from + 1).to_string(),
                (ev.to + 1).to_string(),
            ])?;
        }
        Ok(out.flush()?)
    }

    /// Compact little-endian encoding: header, initial counts, fixed 20-byte records.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&[variant_code(self.variant)])?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&(self.initial.patches() as u32).to_le_bytes())?;
        for c in &self.initial.counts {
            for v in c {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.write_all(&(self.events.len() as u64).to_le_bytes())?;
        let mut rec = [0u8; RECORD_BYTES];
        for ev in &self.events {
            rec[0..8].copy_from_slice(&ev.time.to_le_bytes());
            rec[8..12].copy_from_slice(&ev.id.to_le_bytes());
            rec[12..14].copy_from_slice(&ev.from.to_le_bytes());
            rec[14..16].copy_from_slice(&ev.to.to_le_bytes());
            rec[16] = ev.kind.code();
            rec[17] = ev.src;
            rec[18] = ev.dst;
            rec[19] = 0;
            w.write_all(&rec)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> io::Result<EventLog> {
        let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("not an event log"));
        }
        let mut b1 = [0u8; 1];
        r.read_exact(&mut b1)?;
        let variant = variant_from_code(b1[0]).ok_or_else(|| bad("unknown variant"))?;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let l = u32::from_le_bytes(b4) as usize;
        let mut counts = Vec::with_capacity(l);
        for _ in 0..l {
            let mut c = [0u64; 4];
            for v in &mut c {
                r.read_exact(&mut b8)?;
                *v = u64::from_le_bytes(b8);
            }
            counts.push(c);
        }
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut events = Vec::with_capacity(n);
        let mut rec = [0u8; RECORD_BYTES];
        for _ in 0..n {
            r.read_exact(&mut rec)?;
            let kind = EventKind::from_code(rec[16]).ok_or_else(|| bad("unknown event kind"))?;
            events.push(Event {
                time: f64::from_le_bytes(rec[0..8].try_into().unwrap()),
                id: u32::from_le_bytes(rec[8..12].try_into().unwrap()),
                from: u16::from_le_bytes(rec[12..14].try_into().unwrap()),
                to: u16::from_le_bytes(rec[14..16].try_into().unwrap()),
                kind,
                src: rec[17],
                dst: rec[18],
            });
        }
        Ok(EventLog { variant, initial: PopulationState::new(counts), horizon, events })
    }
}

fn variant_code(v: Variant) -> u8 {
    match v {
        Variant::Seir => 0,
        Variant::Sir => 1,
        Variant::Sis => 2,
        Variant::Sirs => 3,
    }
}

fn variant_from_code(c: u8) -> Option<Variant> {
    Some(match c {
        0 => Variant::Seir,
        1 => Variant::Sir,
        2 => Variant::Sis,
        3 => Variant::Sirs,
        _ => return None,
    })
}
