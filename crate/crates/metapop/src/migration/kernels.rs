//! Gridded transition functions and the convolution kernels PG0, PG, QF0, Φ⁰, Φ, X⁰, X.
//!
//! Every law is replaced by a discrete measure on the grid: atoms stay where they
//! are (they must be grid aligned) and the continuous mass of each cell
//! `(t_{m-1}, t_m]` is split in half between its two endpoints. A node at
//! position `t_m` coming from cell `m + 1` still counts as "η in cell m + 1" for
//! the event `η <= t_a`. All kernels are exact probabilities under that measure,
//! so sums such as `Σ_i X(t, t) = Φ(t)` hold to rounding and the Gram matrices
//! built from them stay positive semidefinite.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::generator::{transition_matrices_on_grid, transition_matrix, GeneratorMatrix};
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::model::{DurationLaw, JointDurationLaw, LawSet, ModelSpec, E, I};
use crate::seed;

/// Cumulative kernel values `K_{a,b}(t_k)` with their atomic increments.
#[derive(Debug, Clone)]
pub struct KernelSeries {
    l: usize,
    len: usize,
    values: Vec<f64>,
    atoms: Vec<f64>,
    stderr: Option<Vec<f64>>,
}

impl KernelSeries {
    fn zeros(l: usize, len: usize) -> Self {
        KernelSeries {
            l,
            len,
            values: vec![0.0; len * l * l],
            atoms: vec![0.0; len * l * l],
            stderr: None,
        }
    }

    #[inline]
    fn idx(&self, k: usize, a: usize, b: usize) -> usize {
        (k * self.l + a) * self.l + b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn patches(&self) -> usize {
        self.l
    }

    #[inline]
    pub fn value(&self, k: usize, a: usize, b: usize) -> f64 {
        self.values[self.idx(k, a, b)]
    }

    /// Point mass of the kernel's Stieltjes measure at `t_k`.
    #[inline]
    pub fn atom(&self, k: usize, a: usize, b: usize) -> f64 {
        self.atoms[self.idx(k, a, b)]
    }

    /// Monte Carlo standard error, if the series was estimated by sampling.
    pub fn stderr(&self, k: usize, a: usize, b: usize) -> Option<f64> {
        self.stderr.as_ref().map(|s| s[self.idx(k, a, b)])
    }

    /// Non-atomic part of the increment over `(t_{k-1}, t_k]`.
    #[inline]
    pub fn continuous_increment(&self, k: usize, a: usize, b: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.value(k, a, b) - self.value(k - 1, a, b) - self.atom(k, a, b)
    }

    pub fn matrix(&self, k: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.l, self.l, |a, b| self.value(k, a, b))
    }

    /// Linear interpolation at an arbitrary lag (clamped to the tabulated range).
    pub fn interpolate(&self, dt: f64, lag: f64, a: usize, b: usize) -> f64 {
        if lag < 0.0 {
            return 0.0;
        }
        let x = lag / dt;
        let k = x.floor() as usize;
        if k + 1 >= self.len {
            return self.value(self.len - 1, a, b);
        }
        let w = x - k as f64;
        (1.0 - w) * self.value(k, a, b) + w * self.value(k + 1, a, b)
    }
}

/// `X_{l,i,i'}(t_a, t_b)` for `a <= b`.
#[derive(Debug, Clone)]
pub struct CrossKernel {
    l: usize,
    len: usize,
    data: Vec<f64>,
    stderr: Option<Vec<f64>>,
}

impl CrossKernel {
    fn zeros(l: usize, len: usize) -> Self {
        CrossKernel {
            l,
            len,
            data: vec![0.0; len * (len + 1) / 2 * l * l * l],
            stderr: None,
        }
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, l: usize, i: usize, j: usize) -> usize {
        ((b * (b + 1) / 2 + a) * self.l * self.l * self.l) + (l * self.l + i) * self.l + j
    }

    /// Value at grid indices; `a > b` is read as `(b, b)` since η + ζ <= t_b forces η <= t_b.
    #[inline]
    pub fn get(&self, a: usize, b: usize, l: usize, i: usize, j: usize) -> f64 {
        let a = a.min(b);
        self.data[self.idx(a, b, l, i, j)]
    }

    pub fn stderr(&self, a: usize, b: usize, l: usize, i: usize, j: usize) -> Option<f64> {
        let a = a.min(b);
        self.stderr.as_ref().map(|s| s[self.idx(a, b, l, i, j)])
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonteCarlo {
    Disabled,
    /// Used only for joint laws without a conditional CDF.
    Fallback {
        samples: usize,
        seed: u64,
    },
    /// Used for every joint law.
    Always {
        samples: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    /// Tabulate the cross kernels X, X⁰ (needed for FCLT covariances).
    pub cross: bool,
    pub monte_carlo: MonteCarlo,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            cross: false,
            monte_carlo: MonteCarlo::Fallback {
                samples: 1_000_000,
                seed: seed::KERNEL_MC_SEED,
            },
        }
    }
}

impl KernelOptions {
    pub fn with_cross() -> Self {
        KernelOptions {
            cross: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Quadrature,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone)]
pub struct TransitionKernelTable {
    pub grid: Grid,
    patches: usize,
    /// Exposed-chain transition matrices p(t_k).
    pub p: Vec<DMatrix<f64>>,
    /// Infectious-chain transition matrices q(t_k).
    pub q: Vec<DMatrix<f64>>,
    pub pg0: KernelSeries,
    pub pg: KernelSeries,
    pub qf0: KernelSeries,
    pub phi0: KernelSeries,
    pub phi: KernelSeries,
    pub phi_method: KernelMethod,
    pub phi0_method: KernelMethod,
    cross: Option<CrossKernel>,
    cross0: Option<CrossKernel>,
}

impl TransitionKernelTable {
    pub fn patches(&self) -> usize {
        self.patches
    }

    pub fn cross(&self) -> Option<&CrossKernel> {
        self.cross.as_ref()
    }

    pub fn cross0(&self) -> Option<&CrossKernel> {
        self.cross0.as_ref()
    }

    /// `∫_0^t p_{l,i}(u) ∫_0^{t'-u} q_{i,i'}(v) H(du, dv)` at grid times `t <= t'`.
    pub fn phi_cross(&self, l: usize, i: usize, i2: usize, t: f64, t2: f64) -> Result<f64> {
        let a = self.grid.index_of(t)?;
        let b = self.grid.index_of(t2)?;
        let x = self.cross.as_ref().ok_or(Error::CrossNotTabulated)?;
        Ok(x.get(a, b, l, i, i2))
    }

    /// Same as [`TransitionKernelTable::phi_cross`] for the initial law H0.
    pub fn phi0_cross(&self, l: usize, i: usize, i2: usize, t: f64, t2: f64) -> Result<f64> {
        let a = self.grid.index_of(t)?;
        let b = self.grid.index_of(t2)?;
        let x = self.cross0.as_ref().ok_or(Error::CrossNotTabulated)?;
        Ok(x.get(a, b, l, i, i2))
    }
}

/// Grid version of a law: atoms at grid points and continuous cell masses.
#[derive(Debug, Clone)]
pub(crate) struct Discretized {
    pub atom: Vec<f64>,
    pub cont: Vec<f64>,
}

pub(crate) fn discretize(law: &DurationLaw, grid: &Grid, name: &str) -> Result<Discretized> {
    let k = grid.len;
    let mut atom = vec![0.0; k];
    let mut cont = vec![0.0; k];
    if law.is_atomic() {
        for (at, w) in law.atoms() {
            if at > grid.horizon() + 0.5 * grid.dt {
                continue;
            }
            let m = grid.steps_of(at).ok_or_else(|| Error::AtomOffGrid {
                law: name.to_string(),
                at,
            })?;
            if m < k {
                atom[m] += w;
            }
        }
    } else {
        let mut prev = law.cdf(0.0);
        atom[0] = prev;
        for (m, c) in cont.iter_mut().enumerate().skip(1) {
            let cur = law.cdf(grid.time(m));
            *c = (cur - prev).max(0.0);
            prev = cur;
        }
    }
    Ok(Discretized { atom, cont })
}

fn discretize_conditional(h: &JointDurationLaw, u: f64, grid: &Grid) -> Discretized {
    let k = grid.len;
    let mut atom = vec![0.0; k];
    let mut cont = vec![0.0; k];
    let cdf = |v: f64| h.conditional_cdf(v, u).unwrap_or(0.0);
    if h.infectious.is_atomic() {
        let eps = 1e-7 * grid.dt;
        let mut prev = cdf(eps);
        atom[0] = prev;
        for (m, a) in atom.iter_mut().enumerate().skip(1) {
            let cur = cdf(grid.time(m) + eps);
            *a = (cur - prev).max(0.0);
            prev = cur;
        }
    } else {
        let mut prev = cdf(0.0);
        atom[0] = prev;
        for (m, c) in cont.iter_mut().enumerate().skip(1) {
            let cur = cdf(grid.time(m));
            *c = (cur - prev).max(0.0);
            prev = cur;
        }
    }
    Discretized { atom, cont }
}

/// Flat row-major copies of a matrix sequence.
pub(crate) fn flatten(ms: &[DMatrix<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ms.len() * ms.first().map_or(0, |m| m.len()));
    for m in ms {
        for a in 0..m.nrows() {
            for b in 0..m.ncols() {
                out.push(m[(a, b)]);
            }
        }
    }
    out
}

/// `Σ_{n<=x} [c_n (q_{n-1} + q_n)/2 + a_n q_n]` and its atoms `a_x q_x`, flat with stride L².
struct MarginalSeries {
    values: Vec<f64>,
    atoms: Vec<f64>,
}

fn marginal_series(chain: &[f64], law: &Discretized, l: usize, len: usize) -> MarginalSeries {
    let l2 = l * l;
    let mut values = vec![0.0; len * l2];
    let mut atoms = vec![0.0; len * l2];
    for x in 0..len {
        let (a, c) = (law.atom[x], law.cont[x]);
        for e in 0..l2 {
            let prev = if x == 0 {
                0.0
            } else {
                values[(x - 1) * l2 + e]
            };
            let mut v = prev + a * chain[x * l2 + e];
            if x > 0 && c != 0.0 {
                v += 0.5 * c * (chain[(x - 1) * l2 + e] + chain[x * l2 + e]);
            }
            values[x * l2 + e] = v;
            atoms[x * l2 + e] = a * chain[x * l2 + e];
        }
    }
    MarginalSeries { values, atoms }
}

fn to_series(m: MarginalSeries, l: usize, len: usize) -> KernelSeries {
    KernelSeries {
        l,
        len,
        values: m.values,
        atoms: m.atoms,
        stderr: None,
    }
}

/// out[a][c] += w * Σ_b x[a][b] y[b][c]
#[inline]
fn mul_acc(out: &mut [f64], x: &[f64], y: &[f64], l: usize) {
    for a in 0..l {
        for b in 0..l {
            let xa = x[a * l + b];
            if xa == 0.0 {
                continue;
            }
            for c in 0..l {
                out[a * l + c] += xa * y[b * l + c];
            }
        }
    }
}

/// Builds Φ (and optionally X) for a joint law by quadrature over the exposed nodes.
fn quadrature_phi(
    p: &[f64],
    q: &[f64],
    h: &JointDurationLaw,
    grid: &Grid,
    l: usize,
    want_cross: bool,
    name: &str,
) -> Result<(KernelSeries, Option<CrossKernel>)> {
    let len = grid.len;
    let l2 = l * l;
    let g = discretize(&h.exposed, grid, name)?;
    let product = h.is_product();
    let shared = if product {
        Some(marginal_series(
            q,
            &discretize(&h.infectious, grid, name)?,
            l,
            len,
        ))
    } else {
        None
    };
    let mut phi = KernelSeries::zeros(l, len);
    let mut cross = want_cross.then(|| CrossKernel::zeros(l, len));
    // increments D(pos, b) stored at row pos + 1, and endpoint terms E(a, b)
    let mut cross_inc = want_cross.then(|| CrossKernel::zeros(l, len));

    let mut a_mat = vec![0.0; l2];
    let mut b_mat = vec![0.0; l2];
    let mut atom_mat = vec![0.0; l2];
    for pos in 0..len {
        let w_same = g.atom[pos] + if pos > 0 { 0.5 * g.cont[pos] } else { 0.0 };
        let w_next = if pos + 1 < len {
            0.5 * g.cont[pos + 1]
        } else {
            0.0
        };
        if w_same == 0.0 && w_next == 0.0 {
            continue;
        }
        let pp = &p[pos * l2..(pos + 1) * l2];
        for e in 0..l2 {
            a_mat[e] = (w_same + w_next) * pp[e];
            b_mat[e] = w_same * pp[e];
            atom_mat[e] = g.atom[pos] * pp[e];
        }
        let local;
        let qf = match &shared {
            Some(s) => s,
            None => {
                let d = discretize_conditional(h, grid.time(pos), grid);
                local = marginal_series(q, &d, l, len - pos);
                &local
            }
        };
        let has_atom = g.atom[pos] != 0.0;
        let span = len - pos;
        mul_acc(
            &mut phi.values[pos * l2..(pos + 1) * l2],
            &b_mat,
            &qf.values[..l2],
            l,
        );
        if l == 1 {
            let w = a_mat[0];
            let out = &mut phi.values[pos + 1..len];
            for (o, v) in out.iter_mut().zip(&qf.values[1..span]) {
                *o += w * v;
            }
        } else {
            let out = &mut phi.values[(pos + 1) * l2..len * l2];
            for (o, qv) in out
                .chunks_exact_mut(l2)
                .zip(qf.values[l2..span * l2].chunks_exact(l2))
            {
                mul_acc(o, &a_mat, qv, l);
            }
        }
        if has_atom {
            for x in 0..span {
                let b = pos + x;
                let qa = &qf.atoms[x * l2..(x + 1) * l2];
                mul_acc(&mut phi.atoms[b * l2..(b + 1) * l2], &atom_mat, qa, l);
            }
        }
        if let (Some(cx), Some(ci)) = (cross.as_mut(), cross_inc.as_mut()) {
            for x in 0..span {
                let b = pos + x;
                let qv = &qf.values[x * l2..(x + 1) * l2];
                for lo in 0..l {
                    for i in 0..l {
                        let bw = b_mat[lo * l + i];
                        let aw = a_mat[lo * l + i];
                        for j in 0..l {
                            let qij = qv[i * l + j];
                            let ie = cx.idx(pos, b, lo, i, j);
                            cx.data[ie] += bw * qij;
                            if x >= 1 {
                                let ii = ci.idx(pos + 1, b, lo, i, j);
                                ci.data[ii] += aw * qij;
                            }
                        }
                    }
                }
            }
        }
    }
    if let (Some(cx), Some(ci)) = (cross.as_mut(), cross_inc.as_ref()) {
        let l3 = l * l * l;
        for b in 0..len {
            let mut run = vec![0.0; l3];
            for a in 0..=b {
                let base = cx.idx(a, b, 0, 0, 0);
                for e in 0..l3 {
                    run[e] += ci.data[base + e];
                    cx.data[base + e] += run[e];
                }
            }
        }
    }
    Ok((phi, cross))
}

/// Cell index of a duration: 0 for 0, m for (t_{m-1}, t_m].
#[inline]
fn cell_of(x: f64, dt: f64) -> usize {
    if x <= 0.0 {
        0
    } else {
        let c = (x / dt).ceil();
        // guard against x = m dt landing in cell m + 1 through rounding
        let c = if (c - 1.0) * dt >= x { c - 1.0 } else { c };
        c as usize
    }
}

/// Transition matrix at an arbitrary time from the gridded one.
fn matrix_at(
    gen: &GeneratorMatrix,
    grid_mats: &[DMatrix<f64>],
    dt: f64,
    t: f64,
) -> Result<DMatrix<f64>> {
    if gen.is_zero() {
        return Ok(DMatrix::identity(gen.dim(), gen.dim()));
    }
    let k = ((t / dt).floor() as usize).min(grid_mats.len() - 1);
    let rem = (t - k as f64 * dt).max(0.0);
    Ok(&grid_mats[k] * transition_matrix(gen, rem)?)
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo_phi(
    gens: (&GeneratorMatrix, &GeneratorMatrix),
    mats: (&[DMatrix<f64>], &[DMatrix<f64>]),
    h: &JointDurationLaw,
    grid: &Grid,
    l: usize,
    want_cross: bool,
    samples: usize,
    seed: u64,
) -> Result<(KernelSeries, Option<CrossKernel>)> {
    let len = grid.len;
    let l2 = l * l;
    let l3 = l2 * l;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::stream_seed(seed, seed::TAG_KERNEL_MC, 0));
    let mut hist = vec![0.0; len * l2];
    let mut hist2 = vec![0.0; len * l2];
    let mut chist = want_cross.then(|| vec![0.0; len * (len + 1) / 2 * l3]);
    let mut chist2 = want_cross.then(|| vec![0.0; len * (len + 1) / 2 * l3]);
    let horizon = grid.horizon();
    for _ in 0..samples {
        let (eta, zeta) = h.sample(&mut rng);
        if eta > horizon {
            continue;
        }
        let ce = cell_of(eta, grid.dt);
        let ct = cell_of(eta + zeta, grid.dt);
        if ct >= len {
            continue;
        }
        let pe = matrix_at(gens.0, mats.0, grid.dt, eta)?;
        let qz = matrix_at(gens.1, mats.1, grid.dt, zeta)?;
        let pq = &pe * &qz;
        for a in 0..l {
            for b in 0..l {
                let v = pq[(a, b)];
                hist[ct * l2 + a * l + b] += v;
                hist2[ct * l2 + a * l + b] += v * v;
            }
        }
        if let (Some(c1), Some(c2)) = (chist.as_mut(), chist2.as_mut()) {
            let base = (ct * (ct + 1) / 2 + ce) * l3;
            for a in 0..l {
                for i in 0..l {
                    for j in 0..l {
                        let v = pe[(a, i)] * qz[(i, j)];
                        c1[base + (a * l + i) * l + j] += v;
                        c2[base + (a * l + i) * l + j] += v * v;
                    }
                }
            }
        }
    }
    let n = samples as f64;
    let mut phi = KernelSeries::zeros(l, len);
    let mut se = vec![0.0; len * l2];
    let mut run = vec![0.0; l2];
    let mut run2 = vec![0.0; l2];
    for k in 0..len {
        for e in 0..l2 {
            run[e] += hist[k * l2 + e];
            run2[e] += hist2[k * l2 + e];
            let m = run[e] / n;
            phi.values[k * l2 + e] = m;
            se[k * l2 + e] = ((run2[e] / n - m * m).max(0.0) / n).sqrt();
        }
    }
    phi.stderr = Some(se);
    let cross = match (chist, chist2) {
        (Some(c1), Some(c2)) => {
            let mut cx = CrossKernel::zeros(l, len);
            let mut cse = vec![0.0; cx.data.len()];
            // 2-D cumulative sums over (cell of η <= a, cell of η + ζ <= b)
            let mut colsum = vec![0.0; len * l3];
            let mut colsum2 = vec![0.0; len * l3];
            for b in 0..len {
                for a in 0..=b {
                    let base = (b * (b + 1) / 2 + a) * l3;
                    for e in 0..l3 {
                        colsum[a * l3 + e] += c1[base + e];
                        colsum2[a * l3 + e] += c2[base + e];
                    }
                }
                let mut r1 = vec![0.0; l3];
                let mut r2 = vec![0.0; l3];
                for a in 0..=b {
                    let base = (b * (b + 1) / 2 + a) * l3;
                    for e in 0..l3 {
                        r1[e] += colsum[a * l3 + e];
                        r2[e] += colsum2[a * l3 + e];
                        let m = r1[e] / n;
                        cx.data[base + e] = m;
                        cse[base + e] = ((r2[e] / n - m * m).max(0.0) / n).sqrt();
                    }
                }
            }
            cx.stderr = Some(cse);
            Some(cx)
        }
        _ => None,
    };
    Ok((phi, cross))
}

/// Precomputes every kernel on `grid` for the model's exposed and infectious chains.
pub fn build_kernel_table(
    spec: &ModelSpec,
    laws: &LawSet,
    grid: Grid,
    opts: &KernelOptions,
) -> Result<TransitionKernelTable> {
    let l = spec.patches;
    let gen_e = GeneratorMatrix::from_rates(&spec.slot_rate_matrix(E))?;
    let gen_i = GeneratorMatrix::from_rates(&spec.slot_rate_matrix(I))?;
    let p = transition_matrices_on_grid(&gen_e, grid.dt, grid.len)?;
    let q = transition_matrices_on_grid(&gen_i, grid.dt, grid.len)?;
    let pf = flatten(&p);
    let qf = flatten(&q);

    let pg = to_series(
        marginal_series(
            &pf,
            &discretize(&laws.infection.exposed, &grid, "G")?,
            l,
            grid.len,
        ),
        l,
        grid.len,
    );
    let pg0 = to_series(
        marginal_series(
            &pf,
            &discretize(&laws.initial_exposed.exposed, &grid, "G0")?,
            l,
            grid.len,
        ),
        l,
        grid.len,
    );
    let qf0 = to_series(
        marginal_series(
            &qf,
            &discretize(&laws.initial_infectious, &grid, "F0")?,
            l,
            grid.len,
        ),
        l,
        grid.len,
    );

    let build = |h: &JointDurationLaw,
                 name: &str|
     -> Result<(KernelSeries, Option<CrossKernel>, KernelMethod)> {
        let mc = match opts.monte_carlo {
            MonteCarlo::Always { samples, seed } => Some((samples, seed)),
            MonteCarlo::Fallback { samples, seed } if !h.has_conditional() => Some((samples, seed)),
            MonteCarlo::Disabled if !h.has_conditional() => {
                return Err(Error::UnsupportedJoint(h.mode_name().to_string()))
            }
            _ => None,
        };
        match mc {
            Some((samples, seed)) => {
                let (phi, cross) = monte_carlo_phi(
                    (&gen_e, &gen_i),
                    (&p, &q),
                    h,
                    &grid,
                    l,
                    opts.cross,
                    samples,
                    seed,
                )?;
                Ok((phi, cross, KernelMethod::MonteCarlo { samples }))
            }
            None => {
                let (phi, cross) = quadrature_phi(&pf, &qf, h, &grid, l, opts.cross, name)?;
                Ok((phi, cross, KernelMethod::Quadrature))
            }
        }
    };
    let (phi, cross, phi_method) = build(&laws.infection, "H")?;
    let (phi0, cross0, phi0_method) = build(&laws.initial_exposed, "H0")?;

    Ok(TransitionKernelTable {
        grid,
        patches: l,
        p,
        q,
        pg0,
        pg,
        qf0,
        phi0,
        phi,
        phi_method,
        phi0_method,
        cross,
        cross0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn cell_boundaries() {
        assert_eq!(cell_of(0.0, 0.1), 0);
        assert_eq!(cell_of(0.05, 0.1), 1);
        assert_eq!(cell_of(0.1, 0.1), 1);
        assert_eq!(cell_of(0.3, 0.1), 3);
    }

    #[test]
    fn deterministic_pair_is_indicator() {
        let spec = ModelSpec::isolated(1, 1.0, 0.0, Variant::Seir);
        let g = DurationLaw::deterministic(0.3).unwrap();
        let f = DurationLaw::deterministic(0.5).unwrap();
        let laws = LawSet::with_equilibrium_initial(g, f).unwrap();
        let grid = Grid::new(0.1, 2.0).unwrap();
        let t = build_kernel_table(&spec, &laws, grid, &KernelOptions::with_cross()).unwrap();
        for k in 0..grid.len {
            let want = if k >= 8 { 1.0 } else { 0.0 };
            assert_eq!(t.phi.value(k, 0, 0), want, "k={k}");
            assert_eq!(t.phi.atom(k, 0, 0), if k == 8 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn off_grid_atom_rejected() {
        let spec = ModelSpec::isolated(1, 1.0, 0.0, Variant::Seir);
        let laws = LawSet::with_equilibrium_initial(
            DurationLaw::deterministic(0.25).unwrap(),
            DurationLaw::deterministic(0.5).unwrap(),
        )
        .unwrap();
        let grid = Grid::new(0.1, 2.0).unwrap();
        let e = build_kernel_table(&spec, &laws, grid, &KernelOptions::default()).unwrap_err();
        assert_eq!(e.code(), "OFF_GRID");
    }

    #[test]
    fn pairs_without_monte_carlo_unsupported() {
        let spec = ModelSpec::isolated(1, 1.0, 0.0, Variant::Seir);
        let h = JointDurationLaw::from_pairs(vec![(1.0, 2.0), (0.5, 1.5)]).unwrap();
        let laws = LawSet::new(h.clone(), h, DurationLaw::exponential(1.0).unwrap());
        let grid = Grid::new(0.1, 1.0).unwrap();
        let opts = KernelOptions {
            cross: false,
            monte_carlo: MonteCarlo::Disabled,
        };
        assert_eq!(
            build_kernel_table(&spec, &laws, grid, &opts)
                .unwrap_err()
                .code(),
            "UNSUPPORTED_JOINT"
        );
    }
}
