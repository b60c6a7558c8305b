//! Moments of the migration martingales of one cohort of individuals.
//!
//! The kernel tables describe each individual by a discrete model: a stage stops
//! at grid node `s` (its position is read there) and is recorded as finished at
//! `s` or `s + 1`; the patch moves as a Markov chain with one-step matrix `p(Δt)`.
//! Within that model the martingale of a→b moves made during a stage is
//! `Σ_n 1{X_n = a} (1{X_{n+1} = b} - p_ab)` over the steps spent in the stage, and
//! its moments with the landing indicators are exact sums, so every covariance
//! block built from them is a Gram matrix.

use crate::migration::Discretized;

/// Stop/exit masses of one stage: `same[s]` stops at s and exits at s,
/// `next[s]` stops at s and exits at s + 1.
#[derive(Debug, Clone)]
pub(crate) struct StageMasses {
    same: Vec<f64>,
    next: Vec<f64>,
}

impl StageMasses {
    pub(crate) fn from_discretized(d: &Discretized) -> Self {
        let len = d.atom.len();
        let same = (0..len)
            .map(|s| d.atom[s] + if s > 0 { 0.5 * d.cont[s] } else { 0.0 })
            .collect();
        let next = (0..len)
            .map(|s| if s + 1 < len { 0.5 * d.cont[s + 1] } else { 0.0 })
            .collect();
        StageMasses { same, next }
    }

    /// A stage of zero length.
    pub(crate) fn immediate(len: usize) -> Self {
        let mut same = vec![0.0; len];
        same[0] = 1.0;
        StageMasses { same, next: vec![0.0; len] }
    }

    fn stop(&self, s: usize) -> f64 {
        self.same[s] + self.next[s]
    }

    /// Mass stopping at s with exit no later than `bound`.
    #[inline]
    fn stop_by(&self, s: usize, bound: usize) -> f64 {
        if s > bound {
            0.0
        } else if s == bound {
            self.same[s]
        } else {
            self.same[s] + self.next[s]
        }
    }
}

/// Per-individual moments for a cohort that starts in patch `origin` at lag 0.
#[derive(Debug, Clone)]
pub(crate) struct CohortKernels {
    l: usize,
    len: usize,
    p1: Vec<f64>,
    q1: Vec<f64>,
    occ_e: Vec<f64>,
    occ_i: Vec<f64>,
    /// `E[m^E_ab(j) 1{exposed exit <= j', lands i}]`, `[((a L + b) L + i) K + j) K + j']`.
    e_land: Vec<f64>,
    /// `E[m^E_ab(j) 1{infectious exit <= j', lands i}]`.
    e_done: Vec<f64>,
    /// `E[m^I_ab(j) 1{infectious exit <= j', lands i}]`.
    i_done: Vec<f64>,
}

impl CohortKernels {
    /// `p`, `q` are the exposed and infectious chains on the grid (flattened).
    pub(crate) fn build(
        origin: usize,
        l: usize,
        len: usize,
        p: &[f64],
        q: &[f64],
        exposed: &StageMasses,
        infectious: &StageMasses,
    ) -> Self {
        let l2 = l * l;
        let pm = |n: usize, x: usize, y: usize| p[n * l2 + x * l + y];
        let qm = |n: usize, x: usize, y: usize| q[n * l2 + x * l + y];
        let p1: Vec<f64> = if len > 1 { p[l2..2 * l2].to_vec() } else { vec![0.0; l2] };
        let q1: Vec<f64> = if len > 1 { q[l2..2 * l2].to_vec() } else { vec![0.0; l2] };

        // survival of each stage beyond step n
        let mut surv_e = vec![0.0; len];
        let mut surv_i = vec![0.0; len];
        let (mut ce, mut ci) = (0.0, 0.0);
        for n in 0..len {
            ce += exposed.stop(n);
            ci += infectious.stop(n);
            surv_e[n] = (1.0 - ce).max(0.0);
            surv_i[n] = (1.0 - ci).max(0.0);
        }

        let mut occ_e = vec![0.0; l * len];
        for a in 0..l {
            for j in 1..len {
                occ_e[a * len + j] = occ_e[a * len + j - 1] + pm(j - 1, origin, a) * surv_e[j - 1];
            }
        }
        // w[x][a][r] = Σ_{n<r} q_xa(n) P(infectious stop > n)
        let mut w = vec![0.0; l * l * len];
        for x in 0..l {
            for a in 0..l {
                let base = (x * l + a) * len;
                for r in 1..len {
                    w[base + r] = w[base + r - 1] + qm(r - 1, x, a) * surv_i[r - 1];
                }
            }
        }
        let mut occ_i = vec![0.0; l * len];
        for s in 0..len {
            let m = exposed.stop(s);
            if m == 0.0 {
                continue;
            }
            for x in 0..l {
                let px = m * pm(s, origin, x);
                if px == 0.0 {
                    continue;
                }
                for a in 0..l {
                    let base = (x * l + a) * len;
                    for j in s + 1..len {
                        occ_i[a * len + j] += px * w[base + j - s];
                    }
                }
            }
        }

        // infectious landing CDF from each start patch: qf[x][i][r]
        let mut qf = vec![0.0; l * l * len];
        for x in 0..l {
            for i in 0..l {
                let base = (x * l + i) * len;
                let mut acc = 0.0;
                for r in 0..len {
                    acc += infectious.same[r] * qm(r, x, i);
                    if r > 0 {
                        acc += infectious.next[r - 1] * qm(r - 1, x, i);
                    }
                    qf[base + r] = acc;
                }
            }
        }

        let kk = len * len;
        let mut e_land = vec![0.0; l * l * l * kk];
        let mut e_done = vec![0.0; l * l * l * kk];
        let mut i_done = vec![0.0; l * l * l * kk];
        let tri = |s: usize, tau: usize| s * (s + 1) / 2 + tau;
        for a in 0..l {
            for b in 0..l {
                let pab = p1[a * l + b];
                if a != b && pab > 0.0 {
                    // bvec[tri(s, tau) * L + x] = Σ_{n<tau} p_oa(n) p_ab (p_bx(s-n-1) - p_ax(s-n)), tau <= s
                    let mut bvec = vec![0.0; len * (len + 1) / 2 * l];
                    for s in 1..len {
                        for tau in 1..=s {
                            let n = tau - 1;
                            let c = pm(n, origin, a) * pab;
                            for x in 0..l {
                                let prev = bvec[tri(s, tau - 1) * l + x];
                                bvec[tri(s, tau) * l + x] = prev + c * (pm(s - n - 1, b, x) - pm(s - n, a, x));
                            }
                        }
                    }
                    for i in 0..l {
                        let base = ((a * l + b) * l + i) * kk;
                        for j in 0..len {
                            let mut acc = 0.0;
                            for jp in 0..len {
                                acc += exposed.same[jp] * bvec[tri(jp, j.min(jp)) * l + i];
                                if jp > 0 {
                                    acc += exposed.next[jp - 1] * bvec[tri(jp - 1, j.min(jp - 1)) * l + i];
                                }
                                e_land[base + j * len + jp] = acc;
                                let mut d = 0.0;
                                for s in 0..=jp {
                                    let m = exposed.stop_by(s, jp);
                                    if m == 0.0 {
                                        continue;
                                    }
                                    let bs = &bvec[tri(s, j.min(s)) * l..tri(s, j.min(s)) * l + l];
                                    let r = jp - s;
                                    let mut v = 0.0;
                                    for x in 0..l {
                                        v += bs[x] * qf[(x * l + i) * len + r];
                                    }
                                    d += m * v;
                                }
                                e_done[base + j * len + jp] = d;
                            }
                        }
                    }
                }
                let qab = q1[a * l + b];
                if a != b && qab > 0.0 {
                    for i in 0..l {
                        // rr[x][r][r'] = Σ_{(σ, e): e <= r'} mass C_{x,σ}(min(r, σ))
                        let mut rr = vec![0.0; l * kk];
                        for x in 0..l {
                            // C_{x,σ}(τ) for τ <= σ
                            let mut cvec = vec![0.0; len * (len + 1) / 2];
                            for sg in 1..len {
                                for tau in 1..=sg {
                                    let n = tau - 1;
                                    cvec[tri(sg, tau)] = cvec[tri(sg, tau - 1)]
                                        + qm(n, x, a) * qab * (qm(sg - n - 1, b, i) - qm(sg - n, a, i));
                                }
                            }
                            for r in 0..len {
                                let mut acc = 0.0;
                                for rp in 0..len {
                                    acc += infectious.same[rp] * cvec[tri(rp, r.min(rp))];
                                    if rp > 0 {
                                        acc += infectious.next[rp - 1] * cvec[tri(rp - 1, r.min(rp - 1))];
                                    }
                                    rr[(x * len + r) * len + rp] = acc;
                                }
                            }
                        }
                        let base = ((a * l + b) * l + i) * kk;
                        for j in 0..len {
                            for jp in 0..len {
                                let mut v = 0.0;
                                for s in 0..=j.min(jp) {
                                    let m = exposed.stop_by(s, jp);
                                    if m == 0.0 {
                                        continue;
                                    }
                                    let mut inner = 0.0;
                                    for x in 0..l {
                                        inner += pm(s, origin, x) * rr[(x * len + (j - s)) * len + (jp - s)];
                                    }
                                    v += m * inner;
                                }
                                i_done[base + j * len + jp] = v;
                            }
                        }
                    }
                }
            }
        }
        CohortKernels { l, len, p1, q1, occ_e, occ_i, e_land, e_done, i_done }
    }

    /// `E[m_ab(j) m_cd(j')]` for the exposed (`infectious = false`) or infectious stage.
    pub(crate) fn mig_mig(&self, infectious: bool, (a, b): (usize, usize), (c, d): (usize, usize), j: usize, jp: usize) -> f64 {
        if a != c {
            return 0.0;
        }
        let (occ, one) = if infectious { (&self.occ_i, &self.q1) } else { (&self.occ_e, &self.p1) };
        let pab = one[a * self.l + b];
        let pad = one[a * self.l + d];
        let jm = j.min(jp);
        occ[a * self.len + jm] * (if b == d { pab } else { 0.0 } - pab * pad)
    }

    #[inline]
    fn at(&self, a: usize, b: usize, i: usize, j: usize, jp: usize) -> usize {
        (((a * self.l + b) * self.l + i) * self.len + j) * self.len + jp
    }

    /// `E[m^E_ab(j) 1{exposed exit <= j', lands i}]`.
    pub(crate) fn exposed_mig_landing(&self, (a, b): (usize, usize), i: usize, j: usize, jp: usize) -> f64 {
        self.e_land[self.at(a, b, i, j, jp)]
    }

    /// `E[m_ab(j) 1{infectious exit <= j', lands i}]` for either stage's martingale.
    pub(crate) fn mig_done(&self, infectious: bool, (a, b): (usize, usize), i: usize, j: usize, jp: usize) -> f64 {
        let t = if infectious { &self.i_done } else { &self.e_done };
        t[self.at(a, b, i, j, jp)]
    }
}
