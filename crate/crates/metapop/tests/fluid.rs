use metapop::fluid::{
    richardson_allowance, solve_fluid, solve_fluid_delay, FluidOptions, FluidTrajectory, PicardStart,
};
use metapop::migration::{build_kernel_table, Grid, KernelOptions};
use metapop::model::{validate_spec, DurationLaw, LawSet, ModelSpec, Variant};

fn seir_rk4(lambda: f64, sigma: f64, mu: f64, x0: [f64; 4], dt: f64, n: usize) -> Vec<[f64; 4]> {
    let f = |x: [f64; 4]| {
        let inf = lambda * x[0] * x[2];
        [-inf, inf - sigma * x[1], sigma * x[1] - mu * x[2], mu * x[2]]
    };
    let h = dt / 8.0;
    let mut x = x0;
    let mut out = vec![x0];
    for _ in 0..n {
        for _ in 0..8 {
            let k1 = f(x);
            let shift = |k: [f64; 4], c: f64| [x[0] + c * k[0], x[1] + c * k[1], x[2] + c * k[2], x[3] + c * k[3]];
            let k2 = f(shift(k1, h / 2.0));
            let k3 = f(shift(k2, h / 2.0));
            let k4 = f(shift(k3, h));
            for j in 0..4 {
                x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        out.push(x);
    }
    out
}

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

fn gamma_lognormal_solution(dt: f64, horizon: f64) -> FluidTrajectory {
    let spec = two_patch();
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::gamma(2.0, 1.0).unwrap(),
        DurationLaw::uniform(1.0, 4.0).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(dt, horizon).unwrap(), &KernelOptions::default()).unwrap();
    solve_fluid(&spec, &table, &X0, horizon, &FluidOptions::default()).unwrap()
}

#[test]
fn exponential_periods_reduce_to_the_ode() {
    let dt = 0.01;
    let spec = ModelSpec::isolated(1, 2.0, 0.5, Variant::Seir);
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::exponential(1.0).unwrap(),
        DurationLaw::exponential(0.5).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(dt, 10.0).unwrap(), &KernelOptions::default()).unwrap();
    let x0 = [0.99, 0.005, 0.005, 0.0];
    let fl = solve_fluid(&spec, &table, &[x0], 10.0, &FluidOptions::default()).unwrap();
    let ode = seir_rk4(2.0, 1.0, 0.5, x0, dt, 1000);
    for (k, want) in ode.iter().enumerate() {
        let got = fl.state(k, 0);
        for c in 0..4 {
            assert!((got[c] - want[c]).abs() < 1e-5, "k={k} c={c}");
        }
    }
}

#[test]
fn sir_reduces_to_the_ode() {
    let dt = 0.01;
    let spec = ModelSpec::isolated(1, 1.2, 0.0, Variant::Sir);
    let f = DurationLaw::exponential(0.4).unwrap();
    let laws = LawSet::without_exposed(f.clone(), f);
    let table = build_kernel_table(&spec, &laws, Grid::new(dt, 10.0).unwrap(), &KernelOptions::default()).unwrap();
    let x0 = [0.95, 0.0, 0.05, 0.0];
    let fl = solve_fluid(&spec, &table, &[x0], 10.0, &FluidOptions::default()).unwrap();
    // SIR as SEIR with an instantaneous exposed phase
    let (mut s, mut i) = (0.95f64, 0.05f64);
    let h = dt / 100.0;
    for k in 1..=1000 {
        for _ in 0..100 {
            let ds = |s: f64, i: f64| (-1.2 * s * i, 1.2 * s * i - 0.4 * i);
            let (a1, b1) = ds(s, i);
            let (a2, b2) = ds(s + h / 2.0 * a1, i + h / 2.0 * b1);
            let (a3, b3) = ds(s + h / 2.0 * a2, i + h / 2.0 * b2);
            let (a4, b4) = ds(s + h * a3, i + h * b3);
            s += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
            i += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        }
        let got = fl.user_state(k, 0);
        assert!((got[0] - s).abs() < 1e-5 && (got[2] - i).abs() < 1e-5, "k={k}");
        assert_eq!(got[1], 0.0);
    }
}

#[test]
fn sis_returns_recovered_to_susceptible() {
    let dt = 0.01;
    let spec = ModelSpec::isolated(1, 2.0, 0.0, Variant::Sis);
    let f = DurationLaw::exponential(1.0).unwrap();
    let laws = LawSet::without_exposed(f.clone(), f);
    let table = build_kernel_table(&spec, &laws, Grid::new(dt, 40.0).unwrap(), &KernelOptions::default()).unwrap();
    let fl = solve_fluid(&spec, &table, &[[0.99, 0.0, 0.01, 0.0]], 40.0, &FluidOptions::default()).unwrap();
    // endemic equilibrium I* = 1 - 1/R0
    let last = fl.user_state(fl.len() - 1, 0);
    assert!((last[2] - 0.5).abs() < 1e-3, "{last:?}");
    assert_eq!(last[3], 0.0);
}

#[test]
fn mass_is_conserved_and_patch_mass_bound_holds() {
    let fl = gamma_lognormal_solution(0.02, 20.0);
    let spec = two_patch();
    for k in 0..fl.len() {
        assert!((fl.total_mass(k) - 1.0).abs() < 1e-9);
        let t = fl.time(k);
        for (i, row) in X0.iter().enumerate() {
            let u0: f64 = row.iter().sum();
            assert!(fl.patch_mass(k, i) >= u0 * (-spec.max_out_rate(i) * t).exp() - 1e-9);
        }
    }
    assert!(fl.diagnostics.is_empty(), "{:?}", fl.diagnostics);
}

#[test]
fn no_transmission_means_no_new_infections() {
    let mut spec = two_patch();
    for s in &mut spec.lambda {
        *s = metapop::model::RateSchedule::constant(0.0);
    }
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::gamma(2.0, 1.0).unwrap(),
        DurationLaw::uniform(1.0, 4.0).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(0.05, 10.0).unwrap(), &KernelOptions::default()).unwrap();
    let fl = solve_fluid(&spec, &table, &X0, 10.0, &FluidOptions::default()).unwrap();
    for k in 0..fl.len() {
        assert!((fl.cumulative_infection(k, 0)).abs() == 0.0);
        let s: f64 = (0..2).map(|i| fl.state(k, i)[0]).sum();
        assert!((s - 0.98).abs() < 1e-12);
    }
}

#[test]
fn picard_start_does_not_change_the_solution() {
    let spec = two_patch();
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::gamma(2.0, 1.0).unwrap(),
        DurationLaw::uniform(1.0, 4.0).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(0.05, 10.0).unwrap(), &KernelOptions::default()).unwrap();
    let a = solve_fluid(&spec, &table, &X0, 10.0, &FluidOptions::default()).unwrap();
    let zero = FluidOptions { start: PicardStart::Zero, ..FluidOptions::default() };
    let b = solve_fluid(&spec, &table, &X0, 10.0, &zero).unwrap();
    for k in 0..a.len() {
        for i in 0..2 {
            for c in 0..4 {
                assert!((a.state(k, i)[c] - b.state(k, i)[c]).abs() < 1e-11);
            }
        }
    }
}

#[test]
fn second_order_in_the_step() {
    let coarse = gamma_lognormal_solution(0.04, 8.0);
    let fine = gamma_lognormal_solution(0.02, 8.0);
    let finer = gamma_lognormal_solution(0.01, 8.0);
    let e1 = richardson_allowance(&coarse, &fine).unwrap();
    let e2 = richardson_allowance(&fine, &finer).unwrap();
    let order = (e1 / e2).log2();
    assert!(order > 1.6 && order < 2.4, "observed order {order}");
}

#[test]
fn delay_and_volterra_solvers_agree() {
    let spec = two_patch();
    let dt = 0.01;
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::deterministic(2.0).unwrap(),
        DurationLaw::deterministic(3.0).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(dt, 15.0).unwrap(), &KernelOptions::default()).unwrap();
    let a = solve_fluid(&spec, &table, &X0, 15.0, &FluidOptions::default()).unwrap();
    let b = solve_fluid_delay(&spec, 2.0, 3.0, &X0, dt, 15.0, &FluidOptions::default()).unwrap();
    for k in 0..a.len() {
        for i in 0..2 {
            for c in 0..4 {
                assert!((a.state(k, i)[c] - b.state(k, i)[c]).abs() < 1e-3, "k={k}");
            }
        }
    }
}

#[test]
fn input_errors() {
    let spec = two_patch();
    let opts = FluidOptions::default();
    let err = solve_fluid_delay(&spec, 2.005, 3.0, &X0, 0.01, 10.0, &opts).unwrap_err();
    assert_eq!(err.code(), "DELAY_OFF_GRID");
    let bad = [[0.5, 0.0, 0.0, 0.0], [0.4, 0.0, 0.0, 0.0]];
    assert_eq!(solve_fluid_delay(&spec, 2.0, 3.0, &bad, 0.01, 10.0, &opts).unwrap_err().code(), "BAD_INIT");
    let laws = LawSet::with_equilibrium_initial(
        DurationLaw::exponential(1.0).unwrap(),
        DurationLaw::exponential(1.0).unwrap(),
    )
    .unwrap();
    let table = build_kernel_table(&spec, &laws, Grid::new(0.1, 5.0).unwrap(), &KernelOptions::default()).unwrap();
    assert_eq!(solve_fluid(&spec, &table, &X0, 6.0, &opts).unwrap_err().code(), "GRID_MISMATCH");
    assert_eq!(solve_fluid(&spec, &table, &X0, 2.05, &opts).unwrap_err().code(), "GRID_MISMATCH");
}
