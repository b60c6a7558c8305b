use super::spec::ModelSpec;

/// Integer compartment counts per patch, indexed by internal slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    pub counts: Vec<[u64; 4]>,
    pub total: u64,
    pub time: f64,
}

impl PopulationState {
    pub fn new(counts: Vec<[u64; 4]>) -> Self {
        let total = counts.iter().flatten().sum();
        PopulationState {
            counts,
            total,
            time: 0.0,
        }
    }

    pub fn patches(&self) -> usize {
        self.counts.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.counts.iter().flatten().sum::<u64>() == self.total
    }

    pub fn patch_total(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }
}

/// Υ_i = S_i Σ_ℓ κ_iℓ X_ℓ / (N^{1-γ} U_i^γ) with X the infectious slot; 0/0 = 0.
///
/// Works for counts (`total = N`) and for fractions (`total = 1`).
pub fn upsilon_values(x: &[[f64; 4]], total: f64, spec: &ModelSpec) -> Vec<f64> {
    let inf = spec.variant.infectious_slot();
    let g = spec.gamma;
    (0..spec.patches)
        .map(|i| {
            let pressure: f64 = (0..spec.patches)
                .map(|l| spec.kappa[i][l] * x[l][inf])
                .sum();
            let s = x[i][0];
            if s == 0.0 || pressure == 0.0 {
                return 0.0;
            }
            let u: f64 = x[i].iter().sum();
            if u <= 0.0 {
                return 0.0;
            }
            s * pressure / (total.powf(1.0 - g) * u.powf(g))
        })
        .collect()
}

/// Infection functional of an integer state (before λ scaling).
pub fn upsilon(state: &PopulationState, spec: &ModelSpec) -> Vec<f64> {
    let x: Vec<[f64; 4]> = state.counts.iter().map(|c| c.map(|v| v as f64)).collect();
    upsilon_values(&x, state.total as f64, spec)
}
