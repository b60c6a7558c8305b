use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Neglected Poisson tail in uniformization.
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;

/// CTMC generator: off-diagonal rates, rows summing to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    q: DMatrix<f64>,
}

impl GeneratorMatrix {
    /// Builds `Q` from a rate matrix; diagonal entries of `rates` are ignored.
    pub fn from_rates(rates: &[Vec<f64>]) -> Result<Self> {
        let l = rates.len();
        let mut q = DMatrix::zeros(l, l);
        for (i, row) in rates.iter().enumerate() {
            if row.len() != l {
                return Err(Error::InvalidLaw(format!(
                    "rate row {i} has length {} != {l}",
                    row.len()
                )));
            }
            for (j, &r) in row.iter().enumerate() {
                if i == j {
                    continue;
                }
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidLaw(format!(
                        "rate [{i}][{j}] = {r} is not a nonnegative number"
                    )));
                }
                q[(i, j)] = r;
            }
            let out: f64 = (0..l).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -out;
        }
        Ok(GeneratorMatrix { q })
    }

    pub fn zero(l: usize) -> Self {
        GeneratorMatrix {
            q: DMatrix::zeros(l, l),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// Largest total exit rate.
    pub fn uniformization_rate(&self) -> f64 {
        (0..self.dim()).map(|i| -self.q[(i, i)]).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.uniformization_rate() == 0.0
    }
}

/// `exp(Q t)` by uniformization. Poisson weights are evaluated in log space and the
/// series is cut once the remaining tail is below [`UNIFORMIZATION_TAIL`]; the
/// neglected mass is then returned to each row proportionally.
pub fn transition_matrix(q: &GeneratorMatrix, t: f64) -> Result<DMatrix<f64>> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let l = q.dim();
    let rate = q.uniformization_rate();
    if rate == 0.0 || t == 0.0 {
        return Ok(DMatrix::identity(l, l));
    }
    let mut step = q.matrix() / rate;
    for i in 0..l {
        step[(i, i)] = (1.0 + step[(i, i)]).max(0.0);
    }
    let m = rate * t;
    let ln_m = m.ln();
    let mut power = DMatrix::<f64>::identity(l, l);
    let mut out = DMatrix::<f64>::zeros(l, l);
    let mut n = 0usize;
    loop {
        let w = (-m + n as f64 * ln_m - ln_gamma(n as f64 + 1.0)).exp();
        out += &power * w;
        // For n + 2 > m the tail after n is bounded by a geometric series.
        let next = w * m / (n as f64 + 1.0);
        let ratio = m / (n as f64 + 2.0);
        if (n as f64) > m && ratio < 1.0 && next / (1.0 - ratio) < UNIFORMIZATION_TAIL {
            break;
        }
        power = &power * &step;
        n += 1;
    }
    for i in 0..l {
        let s: f64 = out.row(i).sum();
        if s > 0.0 {
            for j in 0..l {
                out[(i, j)] = (out[(i, j)] / s).clamp(0.0, 1.0);
            }
        }
    }
    Ok(out)
}

/// `exp(Q t_k)` for `t_k = k dt`, `k < len`, by repeated multiplication with `exp(Q dt)`.
pub fn transition_matrices_on_grid(
    q: &GeneratorMatrix,
    dt: f64,
    len: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let l = q.dim();
    if q.is_zero() {
        return Ok(vec![DMatrix::identity(l, l); len]);
    }
    let step = transition_matrix(q, dt)?;
    let mut out = Vec::with_capacity(len);
    let mut cur = DMatrix::identity(l, l);
    for _ in 0..len {
        out.push(cur.clone());
        cur = &cur * &step;
    }
    Ok(out)
}
