//! The `check` subcommand: the cross-module invariant suite, printing one
//! pass/fail line per group.

use fbm_approx::analytic::{
    discretize_kernel, minimizer_set_check, to_continuous_scale, ProductKernel,
};
use fbm_approx::discrete::{build_model, h_profile, simulate_mc};
use fbm_approx::solver::{brute_force_min, solve, SolveOptions};
use fbm_approx::structure::{analyze, DEFAULT_SUPPORT_THRESHOLD};
use fbm_approx::KernelParams;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

pub struct CheckRunner {
    failures: usize,
}

impl CheckRunner {
    pub fn new() -> Self {
        Self { failures: 0 }
    }

    fn report(&mut self, name: &str, ok: bool, detail: String) {
        if ok {
            println!("PASS {name}: {detail}");
        } else {
            self.failures += 1;
            println!("FAIL {name}: {detail}");
        }
    }

    pub fn failures(&self) -> usize {
        self.failures
    }
}

/// Run every check group; returns the number of failures.
pub fn run_all(seed: u64) -> usize {
    let mut r = CheckRunner::new();
    model_invariants(&mut r);
    increment_identity(&mut r);
    kernel_properties(&mut r);
    analytic_case(&mut r);
    small_instances(&mut r, seed);
    monte_carlo(&mut r, seed);
    structure(&mut r);
    r.failures()
}

fn model_invariants(r: &mut CheckRunner) {
    let mut worst_fact = 0.0f64;
    let mut worst_var = 0.0f64;
    for (h, n) in [(0.6, 50), (0.75, 100), (0.9, 100), (0.99, 50)] {
        match build_model(h, n) {
            Ok(m) => {
                worst_fact = worst_fact.max(m.factorization_residual());
                worst_var = worst_var.max(m.variance_identity_residual());
            }
            Err(e) => {
                r.report("model-invariants", false, format!("build H={h}, N={n}: {e}"));
                return;
            }
        }
    }
    r.report(
        "model-invariants",
        worst_fact <= 1e-10 && worst_var <= 1e-8,
        format!("factorization residual {worst_fact:.2e}, variance identity {worst_var:.2e}"),
    );
}

fn increment_identity(r: &mut CheckRunner) {
    let mut worst = 0.0f64;
    for h in [0.6, 0.75, 0.9] {
        let p = KernelParams::new(h).expect("valid Hurst");
        for t in [0.25, 0.5, 0.75] {
            match p.increment_identity_residual(t) {
                Ok(res) => worst = worst.max(res.abs()),
                Err(e) => {
                    r.report("increment-identity", false, format!("H={h}, t={t}: {e}"));
                    return;
                }
            }
        }
    }
    r.report("increment-identity", worst <= 1e-6, format!("worst residual {worst:.2e}"));
}

fn kernel_properties(r: &mut CheckRunner) {
    let p = KernelParams::new(0.75).expect("valid Hurst");
    // Self-similarity spot checks.
    let mut worst_ss = 0.0f64;
    for (c, t, s) in [(0.5, 1.0, 0.4), (0.8, 0.9, 0.3), (0.33, 1.0, 0.7)] {
        let lhs = p.eval_k(c * t, c * s).unwrap();
        let rhs = c.powf(p.alpha()) * p.eval_k(t, s).unwrap();
        worst_ss = worst_ss.max((lhs - rhs).abs());
    }
    // Normalization spot checks.
    let mut worst_norm = 0.0f64;
    for t in [0.3, 0.7, 1.0] {
        let v = p.row_norm_sq(t).unwrap();
        worst_norm = worst_norm.max((v - t.powf(1.5)).abs());
    }
    r.report(
        "kernel-properties",
        worst_ss <= 2.0 * p.quad_tol() && worst_norm <= 1e-6,
        format!("self-similarity {worst_ss:.2e}, normalization {worst_norm:.2e}"),
    );
}

fn analytic_case(r: &mut CheckRunner) {
    let pk = ProductKernel::standard();
    let n = 600;
    let k = discretize_kernel(|t, s| pk.eval(t, s).unwrap(), n).expect("valid N");
    match solve(&k, &SolveOptions::default()) {
        Ok(res) => {
            let diff = (res.primal - 1.0 / 6.0).abs();
            let member = minimizer_set_check(&to_continuous_scale(&res.a));
            r.report(
                "analytic-case",
                diff <= 0.01 && member,
                format!("|F* - 1/6| = {diff:.2e}, minimizer-set member: {member}"),
            );
        }
        Err(e) => r.report("analytic-case", false, format!("solve failed: {e}")),
    }
}

fn small_instances(r: &mut CheckRunner, seed: u64) {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let h = 0.55 + 0.4 * rng.random::<f64>();
        let n = 1 + trial % 3;
        let m = build_model(h, n).expect("valid model");
        let res = match solve(m.kernel(), &SolveOptions::default()) {
            Ok(res) => res,
            Err(e) => {
                r.report("small-instance-oracle", false, format!("solve failed: {e}"));
                return;
            }
        };
        let oracle = brute_force_min(m.kernel(), m.kernel().max_abs() + 0.1, 41).unwrap();
        worst = worst.max((res.primal - oracle).abs());
    }
    r.report("small-instance-oracle", worst <= 1e-4, format!("worst |diff| {worst:.2e}"));
}

fn monte_carlo(r: &mut CheckRunner, seed: u64) {
    let paths = 40_000;
    let m = build_model(0.75, 100).expect("valid model");
    let res = match solve(m.kernel(), &SolveOptions::default()) {
        Ok(res) => res,
        Err(e) => {
            r.report("monte-carlo", false, format!("solve failed: {e}"));
            return;
        }
    };
    let est = simulate_mc(m.kernel(), &res.a, paths, seed).unwrap();
    let h = h_profile(m.kernel(), &res.a).unwrap();
    let mut worst_z = 0.0f64;
    for (e, ht) in est.iter().zip(&h) {
        let se = ht * (2.0 / paths as f64).sqrt();
        if se > 0.0 {
            worst_z = worst_z.max((e - ht).abs() / se);
        }
    }
    r.report("monte-carlo", worst_z <= 3.0, format!("worst |z| = {worst_z:.2} over {paths} paths"));
}

fn structure(r: &mut CheckRunner) {
    let m = build_model(0.75, 200).expect("valid model");
    let res = match solve(m.kernel(), &SolveOptions::default()) {
        Ok(res) => res,
        Err(e) => {
            r.report("structure", false, format!("solve failed: {e}"));
            return;
        }
    };
    match analyze(m.kernel(), &res, DEFAULT_SUPPORT_THRESHOLD) {
        Ok(rep) => {
            let allowance = 10.0 * res.gap_tol * res.primal.max(1.0);
            let ok = rep.atom_at_end > DEFAULT_SUPPORT_THRESHOLD
                && rep.tail_residual <= allowance
                && rep.endpoint_gap <= allowance
                && res.primal - rep.lower_bound > res.gap_tol;
            r.report(
                "structure",
                ok,
                format!(
                    "atom {:.3}, tail {:.2e}, endpoint gap {:.2e}, F* - bound {:.2e}",
                    rep.atom_at_end,
                    rep.tail_residual,
                    rep.endpoint_gap,
                    res.primal - rep.lower_bound
                ),
            );
        }
        Err(e) => r.report("structure", false, format!("analysis failed: {e}")),
    }
}
