use crate::error::{Error, Result, Violation, ViolationKind};

/// Slot indices of the internal four-compartment state.
pub const S: usize = 0;
pub const E: usize = 1;
pub const I: usize = 2;
pub const R: usize = 3;

pub const SLOT_NAMES: [&str; 4] = ["S", "E", "I", "R"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Seir,
    Sir,
    Sis,
    Sirs,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s.to_ascii_uppercase().as_str() {
            "SEIR" => Some(Variant::Seir),
            "SIR" => Some(Variant::Sir),
            "SIS" => Some(Variant::Sis),
            "SIRS" => Some(Variant::Sirs),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Seir => "SEIR",
            Variant::Sir => "SIR",
            Variant::Sis => "SIS",
            Variant::Sirs => "SIRS",
        }
    }

    /// Whether the internal E slot holds anyone. For SIRS it holds the infectious.
    pub fn uses_first_stage(self) -> bool {
        matches!(self, Variant::Seir | Variant::Sirs)
    }

    /// Whether the user-facing model has a latent (exposed) compartment.
    pub fn has_exposed(self) -> bool {
        self == Variant::Seir
    }

    /// Internal slot whose occupants transmit.
    pub fn infectious_slot(self) -> usize {
        match self {
            Variant::Sirs => E,
            _ => I,
        }
    }

    /// Whether completing the second stage returns individuals to S.
    pub fn terminal_to_susceptible(self) -> bool {
        matches!(self, Variant::Sis | Variant::Sirs)
    }

    /// User-facing compartment name of an internal slot.
    pub fn slot_name(self, slot: usize) -> &'static str {
        match (self, slot) {
            (Variant::Sirs, E) => "I",
            (Variant::Sirs, I) => "R",
            _ => SLOT_NAMES[slot.min(3)],
        }
    }

    /// Map user-facing (S, E, I, R) values onto internal slots.
    pub fn to_slots<T: Copy + Default>(self, user: [T; 4]) -> [T; 4] {
        match self {
            Variant::Sirs => [user[0], user[2], user[3], T::default()],
            _ => user,
        }
    }

    /// Inverse of [`Variant::to_slots`]; unused user compartments come back as default.
    pub fn to_user<T: Copy + Default>(self, slots: [T; 4]) -> [T; 4] {
        match self {
            Variant::Sirs => [slots[0], T::default(), slots[1], slots[2]],
            _ => slots,
        }
    }
}

/// Piecewise-constant, right-continuous rate: `values[j]` on `[breaks[j-1], breaks[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl RateSchedule {
    pub fn constant(v: f64) -> Self {
        RateSchedule {
            breaks: Vec::new(),
            values: vec![v],
        }
    }

    /// `breaks` strictly increasing and positive, `values.len() == breaks.len() + 1`.
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidSpec(vec![Violation {
                kind: ViolationKind::DimMismatch,
                field: "lambda".into(),
                message: format!("{} values for {} breakpoints", values.len(), breaks.len()),
            }]));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0])
            || breaks.iter().any(|b| !(*b > 0.0) || !b.is_finite())
        {
            return Err(Error::InvalidSpec(vec![Violation {
                kind: ViolationKind::DimMismatch,
                field: "lambda".into(),
                message: "breakpoints must be positive, finite and strictly increasing".into(),
            }]));
        }
        Ok(RateSchedule { breaks, values })
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, t: f64) -> f64 {
        let j = self.breaks.partition_point(|b| *b <= t);
        self.values[j]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_constant(&self) -> bool {
        self.breaks.is_empty()
    }

    /// First breakpoint strictly after `t`.
    pub fn next_break(&self, t: f64) -> Option<f64> {
        let j = self.breaks.partition_point(|b| *b <= t);
        self.breaks.get(j).copied()
    }

    /// Weights `(w0, w1)` with `∫_a^b rate(s) y(s) ds = w0 y(a) + w1 y(b)` for `y` linear on `[a, b]`.
    pub fn cell_weights(&self, a: f64, b: f64) -> (f64, f64) {
        let h = b - a;
        if h <= 0.0 {
            return (0.0, 0.0);
        }
        let mut w0 = 0.0;
        let mut w1 = 0.0;
        let mut lo = a;
        while lo < b {
            let v = self.at(lo);
            let hi = self.next_break(lo).map_or(b, |x| x.min(b));
            w0 += v * ((b - lo).powi(2) - (b - hi).powi(2)) / (2.0 * h);
            w1 += v * ((hi - a).powi(2) - (lo - a).powi(2)) / (2.0 * h);
            lo = hi;
        }
        (w0, w1)
    }
}

/// Model parameters. Matrices are row-major `L x L`; `nu_*[l][i]` is the rate of moving l → i.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub patches: usize,
    pub lambda: Vec<RateSchedule>,
    pub kappa: Vec<Vec<f64>>,
    pub gamma: f64,
    pub nu_s: Vec<Vec<f64>>,
    pub nu_e: Vec<Vec<f64>>,
    pub nu_i: Vec<Vec<f64>>,
    pub nu_r: Vec<Vec<f64>>,
    pub variant: Variant,
    /// Fields present in the input but unused by the variant; filled by validation.
    pub ignored: Vec<String>,
}

impl ModelSpec {
    /// Spec with no migration and no distance infection.
    pub fn isolated(patches: usize, lambda: f64, gamma: f64, variant: Variant) -> Self {
        let zero = vec![vec![0.0; patches]; patches];
        let mut kappa = zero.clone();
        for (i, row) in kappa.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        ModelSpec {
            patches,
            lambda: vec![RateSchedule::constant(lambda); patches],
            kappa,
            gamma,
            nu_s: zero.clone(),
            nu_e: zero.clone(),
            nu_i: zero.clone(),
            nu_r: zero,
            variant,
            ignored: Vec::new(),
        }
    }

    /// Migration rates of the occupants of an internal slot.
    pub fn slot_rates(&self, slot: usize) -> Option<&Vec<Vec<f64>>> {
        match (self.variant, slot) {
            (_, S) => Some(&self.nu_s),
            (Variant::Seir, E) => Some(&self.nu_e),
            (Variant::Seir, I) | (Variant::Sir, I) | (Variant::Sis, I) => Some(&self.nu_i),
            (Variant::Seir, R) | (Variant::Sir, R) => Some(&self.nu_r),
            (Variant::Sirs, E) => Some(&self.nu_i),
            (Variant::Sirs, I) => Some(&self.nu_r),
            _ => None,
        }
    }

    /// Rate matrix for a slot, zero when the slot is unused.
    pub fn slot_rate_matrix(&self, slot: usize) -> Vec<Vec<f64>> {
        self.slot_rates(slot)
            .cloned()
            .unwrap_or_else(|| vec![vec![0.0; self.patches]; self.patches])
    }

    pub fn kappa_bar(&self, i: usize) -> f64 {
        self.kappa[i].iter().sum()
    }

    pub fn has_distance_infection(&self) -> bool {
        (0..self.patches).any(|i| (0..self.patches).any(|j| j != i && self.kappa[i][j] > 0.0))
    }

    /// Entrywise max over slots of the total outgoing migration rate of patch i.
    pub fn max_out_rate(&self, i: usize) -> f64 {
        let mut nu_bar = 0.0;
        for l in 0..self.patches {
            if l == i {
                continue;
            }
            let m = (0..4)
                .filter_map(|slot| self.slot_rates(slot))
                .map(|n| n[i][l])
                .fold(0.0, f64::max);
            nu_bar += m;
        }
        nu_bar
    }
}

fn check_matrix(name: &str, m: &[Vec<f64>], l: usize, out: &mut Vec<Violation>) -> bool {
    if m.len() != l || m.iter().any(|r| r.len() != l) {
        out.push(Violation {
            kind: ViolationKind::DimMismatch,
            field: name.into(),
            message: format!("expected {l}x{l}"),
        });
        return false;
    }
    true
}

/// Checks every model constraint, returning the spec (with migration diagonals
/// zeroed and unused fields recorded) or the full list of violations.
pub fn validate_spec(mut spec: ModelSpec) -> Result<ModelSpec> {
    let mut v = Vec::new();
    let l = spec.patches;
    if l == 0 {
        v.push(Violation {
            kind: ViolationKind::DimMismatch,
            field: "L".into(),
            message: "at least one patch required".into(),
        });
        return Err(Error::InvalidSpec(v));
    }
    if spec.lambda.len() != l {
        v.push(Violation {
            kind: ViolationKind::DimMismatch,
            field: "lambda".into(),
            message: format!("expected {l} entries, got {}", spec.lambda.len()),
        });
    }
    for (i, s) in spec.lambda.iter().enumerate() {
        for x in s.values() {
            if !x.is_finite() {
                v.push(Violation {
                    kind: ViolationKind::NonFinite,
                    field: format!("lambda[{i}]"),
                    message: "must be finite".into(),
                });
            } else if *x < 0.0 {
                v.push(Violation {
                    kind: ViolationKind::NegativeRate,
                    field: format!("lambda[{i}]"),
                    message: format!("{x} < 0"),
                });
            }
        }
    }
    if !(0.0..=1.0).contains(&spec.gamma) {
        v.push(Violation {
            kind: ViolationKind::GammaRange,
            field: "gamma".into(),
            message: format!("{} not in [0, 1]", spec.gamma),
        });
    }
    if check_matrix("kappa", &spec.kappa, l, &mut v) {
        for i in 0..l {
            for j in 0..l {
                let k = spec.kappa[i][j];
                let field = format!("kappa[{i}][{j}]");
                if !k.is_finite() {
                    v.push(Violation {
                        kind: ViolationKind::NonFinite,
                        field,
                        message: "must be finite".into(),
                    });
                } else if i == j && k != 1.0 {
                    v.push(Violation {
                        kind: ViolationKind::KappaDiagonal,
                        field,
                        message: format!("{k} != 1"),
                    });
                } else if k < 0.0 {
                    v.push(Violation {
                        kind: ViolationKind::NegativeRate,
                        field,
                        message: format!("{k} < 0"),
                    });
                }
            }
        }
    }
    let exposed_unused = !spec.variant.has_exposed();
    let mut ignored = Vec::new();
    for (name, m) in [
        ("nu_S", &mut spec.nu_s),
        ("nu_E", &mut spec.nu_e),
        ("nu_I", &mut spec.nu_i),
        ("nu_R", &mut spec.nu_r),
    ] {
        if m.is_empty() {
            *m = vec![vec![0.0; l]; l];
        }
        if !check_matrix(name, m, l, &mut v) {
            continue;
        }
        for i in 0..l {
            m[i][i] = 0.0;
            for j in 0..l {
                let x = m[i][j];
                let field = format!("{name}[{i}][{j}]");
                if !x.is_finite() {
                    v.push(Violation {
                        kind: ViolationKind::NonFinite,
                        field,
                        message: "must be finite".into(),
                    });
                } else if x < 0.0 {
                    v.push(Violation {
                        kind: ViolationKind::NegativeRate,
                        field,
                        message: format!("{x} < 0"),
                    });
                }
            }
        }
        if name == "nu_E" && exposed_unused && m.iter().flatten().any(|x| *x != 0.0) {
            ignored.push(format!("nu_E (unused by {})", spec.variant.name()));
        }
    }
    if !v.is_empty() {
        return Err(Error::InvalidSpec(v));
    }
    if spec.variant == Variant::Sis && spec.nu_r.iter().flatten().any(|x| *x != 0.0) {
        ignored.push("nu_R (unused by SIS)".into());
    }
    spec.ignored.extend(ignored);
    spec.ignored.dedup();
    Ok(spec)
}

/// `max_i λ_i κ̄_i` with `κ̄_i = Σ_ℓ κ_iℓ`; the schedule maximum is used for time-varying rates.
pub fn upsilon_bound(spec: &ModelSpec) -> f64 {
    (0..spec.patches)
        .map(|i| spec.lambda[i].max() * spec.kappa_bar(i))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_patch() -> ModelSpec {
        let mut s = ModelSpec::isolated(2, 1.0, 0.5, Variant::Seir);
        s.kappa = vec![vec![1.0, 0.3], vec![0.2, 1.0]];
        s
    }

    #[test]
    fn accepts_valid_spec() {
        assert!(validate_spec(two_patch()).is_ok());
    }

    #[test]
    fn rejects_kappa_diagonal() {
        let mut s = two_patch();
        s.kappa[0][0] = 0.9;
        let err = validate_spec(s).unwrap_err();
        assert_eq!(err.code(), "KAPPA_DIAGONAL");
    }

    #[test]
    fn rejects_gamma_out_of_range() {
        let mut s = two_patch();
        s.gamma = 1.2;
        assert_eq!(validate_spec(s).unwrap_err().code(), "GAMMA_RANGE");
    }

    #[test]
    fn reports_every_violation() {
        let mut s = two_patch();
        s.gamma = -0.1;
        s.nu_s[0][1] = -1.0;
        s.kappa = vec![vec![1.0]];
        match validate_spec(s).unwrap_err() {
            Error::InvalidSpec(v) => {
                let kinds: Vec<_> = v.iter().map(|x| x.kind).collect();
                assert!(kinds.contains(&ViolationKind::GammaRange));
                assert!(kinds.contains(&ViolationKind::NegativeRate));
                assert!(kinds.contains(&ViolationKind::DimMismatch));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn bound_examples() {
        let mut s = ModelSpec::isolated(2, 1.0, 0.0, Variant::Seir);
        s.lambda = vec![RateSchedule::constant(2.0), RateSchedule::constant(3.0)];
        s.kappa = vec![vec![1.0, 0.5], vec![0.25, 1.0]];
        assert!((upsilon_bound(&s) - 3.75).abs() < 1e-15);
        s.kappa = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(upsilon_bound(&s), 3.0);
        s.lambda = vec![RateSchedule::constant(0.0); 2];
        assert_eq!(upsilon_bound(&s), 0.0);
    }

    #[test]
    fn sir_flags_exposed_migration() {
        let mut s = ModelSpec::isolated(2, 1.0, 0.0, Variant::Sir);
        s.nu_e[0][1] = 0.4;
        let s = validate_spec(s).unwrap();
        assert_eq!(s.ignored.len(), 1);
    }

    #[test]
    fn schedule_cell_weights_integrate_linear_functions() {
        let r = RateSchedule::piecewise(vec![0.25], vec![2.0, 4.0]).unwrap();
        let (w0, w1) = r.cell_weights(0.0, 1.0);
        // y(s) = 1 - s  ->  ∫ rate (1-s) ds
        let exact = 2.0 * (0.25 - 0.25f64.powi(2) / 2.0)
            + 4.0 * ((1.0 - 0.5) - (0.25 - 0.25f64.powi(2) / 2.0));
        assert!((w0 - exact).abs() < 1e-14);
        assert!((w0 + w1 - (2.0 * 0.25 + 4.0 * 0.75)).abs() < 1e-14);
        assert_eq!(r.at(0.25), 4.0);
        assert_eq!(r.at(0.2), 2.0);
    }

    #[test]
    fn sirs_slot_mapping_round_trips() {
        let v = Variant::Sirs;
        let slots = v.to_slots([5u64, 0, 3, 2]);
        assert_eq!(slots, [5, 3, 2, 0]);
        assert_eq!(v.to_user(slots), [5, 0, 3, 2]);
    }
}
