use std::sync::Arc;

use bsde_core::problems::{
    build_problem, oracle_value, HjbProblem, OracleSettings, Problem, ProblemParams, SemilinearProblem,
};
use bsde_core::regression::BasisSpec;
use bsde_core::solver::{
    convergence_study, simulate_and_solve_hjb, simulate_and_solve_semilinear, BackwardSolution, SolverOptions,
    StudyConfig,
};

fn semilinear(name: &str, params: &ProblemParams) -> SemilinearProblem {
    match build_problem(name, params).unwrap() {
        Problem::Semilinear(p) => p,
        Problem::Hjb(_) => panic!("{name} is not semilinear"),
    }
}

fn hjb(name: &str) -> HjbProblem {
    match build_problem(name, &ProblemParams::default()).unwrap() {
        Problem::Hjb(p) => p,
        Problem::Semilinear(_) => panic!("{name} is not an HJB problem"),
    }
}

fn cubic() -> Arc<BasisSpec> {
    Arc::new(BasisSpec::state_monomials(1, 3).unwrap())
}

#[test]
fn heat_value_is_the_gaussian_second_moment() {
    let p = semilinear("heat", &ProblemParams::default());
    let (_, s) = simulate_and_solve_semilinear(&p, 20, 100_000, 7, &cubic(), &SolverOptions::default()).unwrap();
    assert!((0.97..=1.03).contains(&s.y0()), "{}", s.y0());
    assert!(s.y0_se() > 0.0 && s.y0_se() < 0.01);
}

#[test]
fn heat_error_decays_at_half_order() {
    let p = semilinear("heat", &ProblemParams::default());
    let config = StudyConfig {
        n_list: vec![8, 16, 32, 64],
        n_paths: 100_000,
        seeds: vec![11],
        basis: cubic(),
        options: SolverOptions::default(),
        z_substeps: 8,
    };
    let table = convergence_study(&p, &config).unwrap();
    assert_eq!(table.points.len(), 4);
    assert!(table.points.windows(2).all(|w| w[0].n < w[1].n));
    let slope = table.slope.unwrap();
    assert!((0.35..=0.65).contains(&slope), "{slope}");
}

#[test]
fn linear_bsde_matches_discounting() {
    let params = ProblemParams {
        delta: 1.0,
        gamma: 0.0,
        h_const: 1.0,
        ..Default::default()
    };
    let p = semilinear("linear-bsde", &params);
    let (_, s) = simulate_and_solve_semilinear(&p, 64, 100_000, 3, &cubic(), &SolverOptions::default()).unwrap();
    let e = std::f64::consts::E;
    assert!((s.y0() - e).abs() <= 3.0 * s.y0_se() + 0.02 * e, "{}", s.y0());
}

#[test]
fn manufactured_sine_recovers_its_value() {
    let p = semilinear("manufactured-sine", &ProblemParams::default());
    let basis = Arc::new(BasisSpec::state_monomials(p.state_dim, 4).unwrap());
    let (_, s) = simulate_and_solve_semilinear(&p, 16, 50_000, 5, &basis, &SolverOptions::default()).unwrap();
    let exact = p.reference.as_ref().unwrap().value(0.0, &p.x0);
    assert!((exact - 0.5f64.sin()).abs() < 1e-15);
    assert!((s.y0() - exact).abs() < 0.05, "{} vs {exact}", s.y0());
}

#[test]
fn uncertain_volatility_reaches_the_upper_volatility() {
    let p = hjb("uncertain-vol");
    let basis = Arc::new(BasisSpec::for_control_set(1, 3, &p.control_set, 2).unwrap());
    let grid = p.control_set.grid(17).unwrap();
    let (_, s) = simulate_and_solve_hjb(&p, 20, 100_000, 7, &basis, &grid, &SolverOptions::default()).unwrap();
    assert!((0.93..=1.05).contains(&s.y0()), "{}", s.y0());
}

#[test]
fn tiny_control_problem_agrees_with_enumeration() {
    let p = hjb("hjb-tiny");
    let basis = Arc::new(BasisSpec::for_control_set(1, 3, &p.control_set, 1).unwrap());
    let grid = p.control_set.grid(2).unwrap();
    let (_, s) = simulate_and_solve_hjb(&p, 3, 100_000, 5, &basis, &grid, &SolverOptions::default()).unwrap();
    let settings = OracleSettings {
        n: 3,
        n_inner: 100_000,
        seed: 105,
    };
    let oracle = oracle_value("hjb-tiny", &ProblemParams::default(), &settings).unwrap();
    let combined = (s.y0_se().powi(2) + oracle.tolerance.powi(2)).sqrt();
    assert!(
        (s.y0() - oracle.value).abs() <= 3.0 * combined,
        "{} vs {}",
        s.y0(),
        oracle.value
    );
}

#[test]
fn larger_data_gives_larger_value() {
    let base = semilinear("linear-bsde", &ProblemParams::default());
    for (i, bump) in [0.0, 0.05, 0.5].into_iter().enumerate() {
        let mut upper = base.clone();
        let (h, f) = (base.terminal.clone(), base.driver.clone());
        upper.terminal = Arc::new(move |x| h(x) + bump * x[0].abs());
        upper.driver = Arc::new(move |x, y, z| f(x, y, z) + bump * x[0].cos().powi(2));
        let seed = 40 + i as u64;
        let options = SolverOptions::default();
        let (_, lo) = simulate_and_solve_semilinear(&base, 10, 20_000, seed, &cubic(), &options).unwrap();
        let (_, hi) = simulate_and_solve_semilinear(&upper, 10, 20_000, seed, &cubic(), &options).unwrap();
        let combined = (lo.y0_se().powi(2) + hi.y0_se().powi(2)).sqrt();
        assert!(lo.y0() <= hi.y0() + 3.0 * combined);
        if bump == 0.0 {
            assert_eq!(lo.y0().to_bits(), hi.y0().to_bits());
        }
    }
}

fn solve_in_pool(threads: usize) -> (BackwardSolution, BackwardSolution) {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let heat = semilinear("heat", &ProblemParams::default());
        let (_, a) = simulate_and_solve_semilinear(&heat, 12, 20_000, 9, &cubic(), &SolverOptions::default()).unwrap();
        let uv = hjb("uncertain-vol");
        let basis = Arc::new(BasisSpec::for_control_set(1, 3, &uv.control_set, 2).unwrap());
        let grid = uv.control_set.grid(9).unwrap();
        let (_, b) = simulate_and_solve_hjb(&uv, 8, 20_000, 9, &basis, &grid, &SolverOptions::default()).unwrap();
        (a, b)
    })
}

fn fingerprint(s: &BackwardSolution) -> Vec<u64> {
    let mut out = vec![s.y0().to_bits(), s.y0_se().to_bits(), s.y0_regression().to_bits()];
    for p in (0..s.n_paths()).step_by(97) {
        for i in 0..s.n_steps() {
            out.push(s.y(p, i).to_bits());
            out.extend(s.z(p, i).iter().map(|z| z.to_bits()));
        }
    }
    out
}

#[test]
fn results_do_not_depend_on_the_worker_count() {
    let (a1, b1) = solve_in_pool(1);
    let (a4, b4) = solve_in_pool(4);
    assert_eq!(fingerprint(&a1), fingerprint(&a4));
    assert_eq!(fingerprint(&b1), fingerprint(&b4));
}
