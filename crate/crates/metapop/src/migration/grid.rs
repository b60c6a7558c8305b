use crate::error::{Error, Result};

/// Relative tolerance for treating a time as a grid point.
const ON_GRID_TOL: f64 = 1e-9;

/// Uniform time grid `t_k = k dt`, `k = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dt: f64,
    pub len: usize,
}

impl Grid {
    /// Grid over `[0, horizon]`; the horizon must be a multiple of `dt`.
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::GridMismatch(format!(
                "step must be positive, got {dt}"
            )));
        }
        if !(horizon >= dt) {
            return Err(Error::GridMismatch(format!(
                "horizon {horizon} shorter than step {dt}"
            )));
        }
        let n = (horizon / dt).round();
        if (n * dt - horizon).abs() > ON_GRID_TOL * horizon.max(1.0) {
            return Err(Error::GridMismatch(format!(
                "horizon {horizon} is not a multiple of {dt}"
            )));
        }
        Ok(Grid {
            dt,
            len: n as usize + 1,
        })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }

    /// Grid index of `t`, or `OFF_GRID`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        if t < -ON_GRID_TOL * self.dt {
            return Err(Error::NegativeTime(t));
        }
        let k = (t / self.dt).round();
        if (k * self.dt - t).abs() > ON_GRID_TOL * t.abs().max(self.dt) || k as usize >= self.len {
            return Err(Error::OffGrid(t));
        }
        Ok(k as usize)
    }

    /// Index of a duration as a multiple of `dt`, if aligned.
    pub fn steps_of(&self, d: f64) -> Option<usize> {
        let k = (d / self.dt).round();
        ((k * self.dt - d).abs() <= ON_GRID_TOL * d.abs().max(self.dt) && k >= 0.0)
            .then_some(k as usize)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len == other.len && (self.dt - other.dt).abs() <= 1e-12 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let g = Grid::new(0.1, 2.0).unwrap();
        assert_eq!(g.len, 21);
        assert_eq!(g.index_of(0.3).unwrap(), 3);
        assert_eq!(g.index_of(0.35).unwrap_err().code(), "OFF_GRID");
        assert_eq!(g.index_of(2.1).unwrap_err().code(), "OFF_GRID");
        assert!(Grid::new(0.3, 1.0).is_err());
    }
}
