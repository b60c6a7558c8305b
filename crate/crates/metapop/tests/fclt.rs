use metapop::fclt::{
    infection_map, linearization, min_eigenvalue, sample_drivers, solve_fluctuations, Driver, DriverFamily,
    DriverPanel, DriverPath, DriverSampler, FcltOptions, FluctuationSystem, InfectionNoise, InitialFluctuation, MigrationNoise, NoiseModel,
};
use metapop::fluid::{solve_fluid, FluidOptions, FluidTrajectory};
use metapop::migration::{build_kernel_table, Grid, KernelOptions, TransitionKernelTable};
use metapop::model::{validate_spec, DurationLaw, LawSet, ModelSpec, Variant, E, I, R, S};

fn two_patch() -> ModelSpec {
    let mut spec = ModelSpec::isolated(2, 1.5, 0.5, Variant::Seir);
    spec.kappa[0][1] = 0.3;
    spec.kappa[1][0] = 0.2;
    spec.nu_s = vec![vec![0.0, 0.1], vec![0.05, 0.0]];
    spec.nu_e = vec![vec![0.0, 0.2], vec![0.1, 0.0]];
    spec.nu_i = vec![vec![0.0, 0.05], vec![0.15, 0.0]];
    spec.nu_r = vec![vec![0.0, 0.3], vec![0.1, 0.0]];
    validate_spec(spec).unwrap()
}

const X0: [[f64; 4]; 2] = [[0.58, 0.01, 0.01, 0.0], [0.4, 0.0, 0.0, 0.0]];

fn laws() -> LawSet {
    LawSet::with_equilibrium_initial(DurationLaw::gamma(2.0, 1.0).unwrap(), DurationLaw::uniform(1.0, 4.0).unwrap())
        .unwrap()
}

fn setup(spec: &ModelSpec, laws: &LawSet, init: &[[f64; 4]], dt: f64, horizon: f64) -> (TransitionKernelTable, FluidTrajectory) {
    let table = build_kernel_table(spec, laws, Grid::new(dt, horizon).unwrap(), &KernelOptions::with_cross()).unwrap();
    let fluid = solve_fluid(spec, &table, init, horizon, &FluidOptions::default()).unwrap();
    (table, fluid)
}

fn pressure_without_self(spec: &ModelSpec, x: &[[f64; 4]], i: usize) -> f64 {
    let inf = spec.variant.infectious_slot();
    (0..spec.patches).filter(|j| *j != i).map(|j| spec.kappa[i][j] * x[j][inf]).sum()
}

fn close_rel(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-3)
}

#[test]
fn linearization_matches_finite_differences() {
    for gamma in [0.0, 0.5, 1.0] {
        let mut spec = two_patch();
        spec.gamma = gamma;
        if gamma == 1.0 {
            spec.kappa[0][1] = 0.0;
            spec.kappa[1][0] = 0.0;
        }
        let (_, fluid) = setup(&spec, &laws(), &X0, 0.1, 8.0);
        let field = linearization(&fluid, &spec).unwrap();
        let h = 1e-6;
        for k in 0..fluid.len() {
            let x: Vec<[f64; 4]> = (0..2).map(|i| fluid.state(k, i)).collect();
            for i in 0..2 {
                let psi = |y: &[[f64; 4]]| {
                    infection_map(y[i], pressure_without_self(&spec, y, i), spec.gamma, I)
                };
                let c = field.slot(k, i);
                for slot in [S, E, I, R] {
                    let mut up = x.clone();
                    let mut dn = x.clone();
                    up[i][slot] += h;
                    dn[i][slot] -= h;
                    let fd = (psi(&up) - psi(&dn)) / (2.0 * h);
                    assert!(close_rel(c[slot], fd, 1e-6), "gamma {gamma} k {k} i {i} slot {slot}: {} vs {fd}", c[slot]);
                }
                let j = 1 - i;
                let mut up = x.clone();
                let mut dn = x.clone();
                up[j][I] += h;
                dn[j][I] -= h;
                let fd = (psi(&up) - psi(&dn)) / (2.0 * h);
                assert!(close_rel(field.distance(k, i) * spec.kappa[i][j], fd, 1e-6));
                assert!(c[S] >= 0.0 && c[E] <= 0.0 && c[R] <= 0.0);
                let d = field.distance(k, i);
                assert!((0.0..=1.0).contains(&d));
                if gamma == 0.0 {
                    assert_eq!(c[E], 0.0);
                    assert_eq!(c[R], 0.0);
                }
            }
        }
    }
}

#[test]
fn single_patch_linearization_uses_own_pressure() {
    let spec = ModelSpec::isolated(1, 2.0, 0.7, Variant::Seir);
    let x0 = [[0.9, 0.05, 0.05, 0.0]];
    let (_, fluid) = setup(&spec, &laws(), &x0, 0.1, 4.0);
    let field = linearization(&fluid, &spec).unwrap();
    for k in [0, 10, 40] {
        let [s, e, i, r] = fluid.state(k, 0);
        let u = s + e + i + r;
        let c = field.slot(k, 0);
        let g = 0.7;
        assert!((c[S] - ((1.0 - g) * s + e + i + r) * i / u.powf(1.0 + g)).abs() < 1e-14);
        assert!((c[I] - (s * u - g * s * i) / u.powf(1.0 + g)).abs() < 1e-14);
        assert!((c[E] + g * s * i / u.powf(1.0 + g)).abs() < 1e-14);
    }
}

#[test]
fn refuses_gamma_one_with_distance_infection() {
    let mut spec = two_patch();
    spec.gamma = 1.0;
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.1, 2.0);
    assert_eq!(linearization(&fluid, &spec).unwrap_err().code(), "FCLT_INADMISSIBLE");
    assert_eq!(
        DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap_err().code(),
        "FCLT_INADMISSIBLE"
    );
}

#[test]
fn covariance_evaluator_contract() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.1, 6.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let drivers = panel.drivers();
    let ks = [0usize, 7, 20, 60];
    for &a in &drivers {
        for &b in &drivers {
            for &ka in &ks {
                for &kb in &ks {
                    let v = panel.covariance(a, ka, b, kb);
                    assert_eq!(v.to_bits(), panel.covariance(b, kb, a, ka).to_bits());
                    if ka == 0 || kb == 0 {
                        assert_eq!(v, 0.0);
                    }
                    let moves = |d: Driver| matches!(d.family, DriverFamily::MigrationE | DriverFamily::MigrationI);
                    if a.from != b.from && !moves(a) && !moves(b) {
                        assert_eq!(v, 0.0, "{a:?} {b:?}");
                    }
                }
            }
        }
    }
    // initially infectious cohort: Ī_l(0) g (1 - g)
    let g = table.qf0.value(20, 0, 1);
    let v = panel.covariance_at("I01", (0, 1), "I01", (0, 1), 2.0, 2.0).unwrap();
    assert!((v - 0.01 * g * (1.0 - g)).abs() < 1e-15);
    assert_eq!(panel.covariance_at("I01", (0, 1), "I01", (1, 1), 2.0, 2.0).unwrap(), 0.0);
    assert_eq!(panel.covariance_at("I01", (0, 0), "I01", (0, 0), 2.05, 2.0).unwrap_err().code(), "OFF_GRID");
    assert_eq!(panel.covariance_at("BETA", (0, 0), "I01", (0, 0), 2.0, 2.0).unwrap_err().code(), "UNKNOWN_FAMILY");
    // infection clock increments are λ ∫ Ῡ
    for k in 1..fluid.len() {
        let d = panel.clock(Driver::infection(1), k);
        assert!((d - fluid.cumulative_infection(k, 1)).abs() < 1e-12);
    }
    // no initial exposed in patch 2: its cohort is degenerate
    let e0 = Driver::new(DriverFamily::InitialExposed, 1, 0);
    assert_eq!(panel.covariance(e0, 30, e0, 30), 0.0);
}

#[test]
fn assembled_blocks_are_positive_semidefinite() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.2, 8.0);
    for infection in [InfectionNoise::Coupled, InfectionNoise::Independent] {
        for migration in [MigrationNoise::Coupled, MigrationNoise::Independent] {
        let noise = NoiseModel::new(infection, migration);
        let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), noise).unwrap();
        assert_eq!(panel.noise, noise);
        let times: Vec<usize> = (0..fluid.len()).collect();
        for block in panel.blocks() {
            let m = panel.block_covariance(&block, &times);
            let tr = m.trace();
            assert!(min_eigenvalue(&m) >= -1e-8 * tr.max(1e-300), "{}", block.name);
        }
        let sampler = DriverSampler::new(&panel).unwrap();
        for b in &sampler.info {
            assert!(b.jitter <= 1e-10 * b.trace);
        }
        }
    }
}

#[test]
fn sampled_drivers_reproduce_covariances() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.2, 6.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let p = 3000;
    let paths = sample_drivers(&panel, 11, p).unwrap();
    let cells = [
        (Driver::infection(0), 10, Driver::new(DriverFamily::ExposedFlow, 0, 0), 20),
        (Driver::new(DriverFamily::ExposedFlow, 0, 1), 15, Driver::new(DriverFamily::InfectiousFlow, 0, 1), 25),
        (Driver::new(DriverFamily::InitialExposed, 0, 0), 10, Driver::new(DriverFamily::InitialExposedInfectious, 0, 0), 20),
        (Driver::new(DriverFamily::InitialInfectious, 0, 0), 5, Driver::new(DriverFamily::InitialInfectious, 0, 1), 5),
        (Driver::new(DriverFamily::MigrationS, 0, 1), 30, Driver::new(DriverFamily::MigrationS, 0, 1), 30),
        (Driver::infection(1), 30, Driver::infection(1), 30),
        (Driver::infection(0), 30, Driver::infection(1), 30),
        (Driver::new(DriverFamily::MigrationE, 0, 1), 20, Driver::new(DriverFamily::ExposedFlow, 0, 1), 25),
        (Driver::new(DriverFamily::MigrationI, 1, 0), 25, Driver::new(DriverFamily::InfectiousFlow, 0, 0), 25),
        (Driver::new(DriverFamily::MigrationI, 0, 1), 10, Driver::new(DriverFamily::InitialInfectious, 0, 1), 20),
        (Driver::new(DriverFamily::MigrationE, 0, 1), 10, Driver::new(DriverFamily::InitialExposedInfectious, 0, 1), 20),
        (Driver::new(DriverFamily::MigrationE, 0, 1), 30, Driver::new(DriverFamily::MigrationE, 0, 1), 30),
    ];
    for (a, ka, b, kb) in cells {
        let xs: Vec<f64> = paths.iter().map(|d| d.get(a, ka)).collect();
        let ys: Vec<f64> = paths.iter().map(|d| d.get(b, kb)).collect();
        let mx = xs.iter().sum::<f64>() / p as f64;
        let my = ys.iter().sum::<f64>() / p as f64;
        let prods: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).collect();
        let c = prods.iter().sum::<f64>() / (p - 1) as f64;
        let sd = (prods.iter().map(|v| (v - c).powi(2)).sum::<f64>() / (p - 1) as f64).sqrt();
        let want = panel.covariance(a, ka, b, kb);
        assert!((c - want).abs() <= 4.0 * sd / (p as f64).sqrt() + 1e-15, "{a:?} {b:?}: {c} vs {want}");
    }
    // sampling is a pure function of (seed, path)
    let sampler = DriverSampler::new(&panel).unwrap();
    assert_eq!(sampler.sample(11, 7), paths[7]);
    assert_ne!(sampler.sample(12, 7), paths[7]);
}

#[test]
fn zero_drivers_give_zero_paths() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.1, 5.0);
    let field = linearization(&fluid, &spec).unwrap();
    let system = FluctuationSystem::new(&spec, &field, &table, true).unwrap();
    let sol = system.solve(&DriverPath::zeros(2, fluid.len()), &[0.0; 8]);
    for k in 0..fluid.len() {
        for i in 0..2 {
            assert!(sol.components(k, i).iter().all(|v| *v == 0.0));
        }
    }
}

#[test]
fn fluctuations_conserve_mass_and_start_at_zero() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.1, 6.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let sampler = DriverSampler::new(&panel).unwrap();
    let field = linearization(&fluid, &spec).unwrap();
    let system = FluctuationSystem::new(&spec, &field, &table, true).unwrap();
    for p in 0..20 {
        let d = sampler.sample(3, p);
        let sol = system.solve(&d, &[0.0; 8]);
        assert!(sol.residual <= 1e-9);
        for i in 0..2 {
            assert!(sol.state(0, i).iter().all(|v| *v == 0.0));
        }
        for k in 0..fluid.len() {
            let total: f64 = (0..2).map(|i| sol.state(k, i).iter().sum::<f64>()).sum();
            assert!(total.abs() < 1e-11, "k {k}: {total}");
        }
    }
}

#[test]
fn sir_has_no_exposed_fluctuation() {
    let mut spec = ModelSpec::isolated(2, 1.2, 0.3, Variant::Sir);
    spec.kappa[0][1] = 0.2;
    spec.nu_s = vec![vec![0.0, 0.1], vec![0.1, 0.0]];
    spec.nu_i = vec![vec![0.0, 0.1], vec![0.1, 0.0]];
    let spec = validate_spec(spec).unwrap();
    let f = DurationLaw::gamma(2.0, 1.0).unwrap();
    let laws = LawSet::without_exposed(f.clone(), DurationLaw::equilibrium(&f).unwrap());
    let init = [[0.55, 0.0, 0.05, 0.0], [0.4, 0.0, 0.0, 0.0]];
    let (table, fluid) = setup(&spec, &laws, &init, 0.1, 5.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws, NoiseModel::default()).unwrap();
    let sampler = DriverSampler::new(&panel).unwrap();
    let field = linearization(&fluid, &spec).unwrap();
    let opts = FcltOptions { checkpoints: vec![10, 30, 50], keep_paths: 3, ..Default::default() };
    let ens = solve_fluctuations(&spec, &field, &table, &sampler, &opts, 5, 200).unwrap();
    assert!(ens.max_residual <= 1e-9);
    for p in 0..3 {
        for v in ens.kept_path(p).unwrap() {
            assert!(v[E].abs() < 1e-12);
        }
    }
    assert!(ens.variance(2, 0, I) > 0.0);
}

#[test]
fn ensemble_is_deterministic_and_centred() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.2, 6.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let sampler = DriverSampler::new(&panel).unwrap();
    let field = linearization(&fluid, &spec).unwrap();
    let opts = FcltOptions { checkpoints: vec![10, 20, 30], ..Default::default() };
    let a = solve_fluctuations(&spec, &field, &table, &sampler, &opts, 9, 1000).unwrap();
    let b = solve_fluctuations(&spec, &field, &table, &sampler, &opts, 9, 1000).unwrap();
    for c in 0..3 {
        for i in 0..2 {
            for comp in 0..5 {
                assert_eq!(a.mean(c, i, comp).to_bits(), b.mean(c, i, comp).to_bits());
                let se = (a.variance(c, i, comp) / 1000.0).sqrt();
                assert!(a.mean(c, i, comp).abs() <= 4.0 * se + 1e-12);
            }
        }
    }
}

#[test]
fn gaussian_initial_fluctuations_are_used() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.2, 2.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let sampler = DriverSampler::new(&panel).unwrap();
    let field = linearization(&fluid, &spec).unwrap();
    let opts = FcltOptions {
        checkpoints: vec![0],
        initial: InitialFluctuation::Gaussian { variances: vec![[0.2, 0.1, 0.05, 0.0], [0.3, 0.0, 0.0, 0.0]] },
        ..Default::default()
    };
    let ens = solve_fluctuations(&spec, &field, &table, &sampler, &opts, 1, 4000).unwrap();
    for (i, c, v) in [(0, S, 0.2), (0, E, 0.1), (0, I, 0.05), (1, S, 0.3)] {
        let got = ens.variance(0, i, c);
        assert!((got - v).abs() < 4.0 * v * (2.0f64 / 4000.0).sqrt(), "{i} {c}: {got}");
    }
    assert_eq!(ens.variance(0, 1, E), 0.0);
    let bad = FcltOptions {
        initial: InitialFluctuation::Gaussian { variances: vec![[0.0, 0.0, 0.0, 1.0], [0.0; 4]] },
        ..opts.clone()
    };
    assert_eq!(solve_fluctuations(&spec, &field, &table, &sampler, &bad, 1, 2).unwrap_err().code(), "BAD_INIT");
}

/// λ = 0: the susceptible fluctuation is a linear migration system driven by the
/// migration martingales, whose covariance solves a Lyapunov equation.
#[test]
fn no_infection_matches_lyapunov_oracle() {
    let mut spec = ModelSpec::isolated(2, 0.0, 0.5, Variant::Seir);
    spec.nu_s = vec![vec![0.0, 0.4], vec![0.3, 0.0]];
    let spec = validate_spec(spec).unwrap();
    let init = [[0.6, 0.0, 0.02, 0.0], [0.38, 0.0, 0.0, 0.0]];
    let (table, fluid) = setup(&spec, &laws(), &init, 0.05, 4.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let sampler = DriverSampler::new(&panel).unwrap();
    let field = linearization(&fluid, &spec).unwrap();
    let checkpoints = vec![20, 40, 80];
    let opts = FcltOptions { checkpoints: checkpoints.clone(), ..Default::default() };
    let p = 4000;
    let ens = solve_fluctuations(&spec, &field, &table, &sampler, &opts, 21, p).unwrap();

    // RK4 on (S̄, Σ) with A = generator transpose
    let (a12, a21) = (0.4, 0.3);
    let deriv = |s: [f64; 2], c: [f64; 3]| {
        let ds = [-a12 * s[0] + a21 * s[1], a12 * s[0] - a21 * s[1]];
        let a = [[-a12, a21], [a12, -a21]];
        let sig = [[c[0], c[1]], [c[1], c[2]]];
        let b = a12 * s[0] + a21 * s[1];
        let mut out = [0.0; 3];
        for (n, (r, q)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let mut v = 0.0;
            for m in 0..2 {
                v += a[r][m] * sig[m][q] + sig[r][m] * a[q][m];
            }
            out[n] = v + if r == q { b } else { -b };
        }
        (ds, out)
    };
    let h = 1e-3;
    let mut s = [0.6, 0.38];
    let mut c = [0.0; 3];
    let mut t = 0.0;
    for (ci, &k) in checkpoints.iter().enumerate() {
        let target = k as f64 * 0.05;
        while t < target - 1e-12 {
            let (k1s, k1c) = deriv(s, c);
            let st = |ks: [f64; 2], kc: [f64; 3], f: f64| {
                ([s[0] + f * ks[0], s[1] + f * ks[1]], [c[0] + f * kc[0], c[1] + f * kc[1], c[2] + f * kc[2]])
            };
            let (s2, c2) = st(k1s, k1c, h / 2.0);
            let (k2s, k2c) = deriv(s2, c2);
            let (s3, c3) = st(k2s, k2c, h / 2.0);
            let (k3s, k3c) = deriv(s3, c3);
            let (s4, c4) = st(k3s, k3c, h);
            let (k4s, k4c) = deriv(s4, c4);
            for j in 0..2 {
                s[j] += h / 6.0 * (k1s[j] + 2.0 * k2s[j] + 2.0 * k3s[j] + k4s[j]);
            }
            for j in 0..3 {
                c[j] += h / 6.0 * (k1c[j] + 2.0 * k2c[j] + 2.0 * k3c[j] + k4c[j]);
            }
            t += h;
        }
        let v0 = ens.variance(ci, 0, S);
        let v1 = ens.variance(ci, 1, S);
        let cv = ens.covariance((ci, 0, S), (ci, 1, S));
        let se = |v: f64| 4.0 * v * (2.0 / p as f64).sqrt();
        assert!((v0 - c[0]).abs() < se(c[0]), "t {target}: {v0} vs {}", c[0]);
        assert!((v1 - c[2]).abs() < se(c[2]), "t {target}: {v1} vs {}", c[2]);
        assert!((cv - c[1]).abs() < 4.0 * (c[0] * c[2] + c[1] * c[1]).sqrt() / (p as f64).sqrt());
    }
}

/// Two-state chain with rates `a` (1 -> 2) and `b` (2 -> 1).
fn two_state(a: f64, b: f64, t: f64) -> [[f64; 2]; 2] {
    let e = (-(a + b) * t).exp();
    let s = a + b;
    [[(b + a * e) / s, a * (1.0 - e) / s], [b * (1.0 - e) / s, (a + b * e) / s]]
}

/// `E[m_ab(t) 1{τ <= t', X(τ) = i}]` for a chain started in patch 1 with stage length density `dens`.
fn move_landing_moment(rates: (f64, f64), (a, b): (usize, usize), i: usize, t: f64, t2: f64, dens: impl Fn(f64) -> f64) -> f64 {
    let nu = if a == 0 { rates.0 } else { rates.1 };
    let n = 600;
    let du = t / n as f64;
    let mut acc = 0.0;
    for iu in 0..n {
        let u = (iu as f64 + 0.5) * du;
        let occ = two_state(rates.0, rates.1, u)[0][a];
        if u >= t2 {
            continue;
        }
        let dv = (t2 - u) / n as f64;
        let mut inner = 0.0;
        for iv in 0..n {
            let v = u + (iv as f64 + 0.5) * dv;
            let q = two_state(rates.0, rates.1, v - u);
            inner += (q[b][i] - q[a][i]) * dens(v) * dv;
        }
        acc += occ * inner * du;
    }
    nu * acc
}

#[test]
fn move_landing_covariances_match_continuous_formulas() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.02, 5.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    let g0 = |v: f64| (1.0 + v) * (-v).exp() / 2.0;
    let f0 = |v: f64| {
        let surv = if v < 1.0 { 1.0 } else if v < 4.0 { (4.0 - v) / 3.0 } else { 0.0 };
        surv / 2.5
    };
    for (a, b) in [(0, 1), (1, 0)] {
        for i in 0..2 {
            for (t, t2) in [(1.0, 2.0), (3.0, 2.0), (4.0, 4.0)] {
                let got = panel.covariance_at("M_E", (a, b), "E0", (0, i), t, t2).unwrap();
                let want = 0.01 * move_landing_moment((0.2, 0.1), (a, b), i, t, t2, g0);
                assert!((got - want).abs() <= 0.03 * want.abs() + 2e-6, "E {a}{b} {i} {t} {t2}: {got} vs {want}");
                let got = panel.covariance_at("M_I", (a, b), "I01", (0, i), t, t2).unwrap();
                let want = 0.01 * move_landing_moment((0.05, 0.15), (a, b), i, t, t2, f0);
                assert!((got - want).abs() <= 0.03 * want.abs() + 2e-6, "I {a}{b} {i} {t} {t2}: {got} vs {want}");
            }
        }
    }
    // the independent reading drops these terms
    let ind = NoiseModel::new(InfectionNoise::Coupled, MigrationNoise::Independent);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), ind).unwrap();
    assert_eq!(panel.covariance_at("M_E", (0, 1), "E0", (0, 1), 3.0, 2.0).unwrap(), 0.0);
}

#[test]
fn cohort_move_variances_track_the_fluid_clock() {
    let spec = two_patch();
    let (table, fluid) = setup(&spec, &laws(), &X0, 0.02, 6.0);
    let panel = DriverPanel::new(&spec, &fluid, &table, &laws(), NoiseModel::default()).unwrap();
    for fam in [DriverFamily::MigrationE, DriverFamily::MigrationI] {
        for (a, b) in [(0, 1), (1, 0)] {
            let d = Driver::new(fam, a, b);
            for k in [50, 150, 300] {
                let v = panel.covariance(d, k, d, k);
                let clock = panel.clock(d, k);
                assert!((v - clock).abs() <= 0.02 * clock + 1e-7, "{d:?} {k}: {v} vs {clock}");
            }
        }
    }
}
