use super::*;
use crate::problems::{quadratic, rosenbrock_2d, saddle_quartic};

fn exact_params() -> SolverParams {
    SolverParams {
        max_iters: 50,
        halt_at_stopping_time: false,
        ..SolverParams::default()
    }
}

fn streams(seed: u64) -> OracleStreams {
    OracleStreams::new(seed, 0)
}

#[test]
fn quadratic_first_descent_doubles_alpha() {
    let p = quadratic(&[1.0, 1.0]);
    let params = SolverParams {
        max_iters: 1,
        ..exact_params()
    };
    let r = run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[1.0, 0.0], streams(1)).unwrap();
    let rec = &r.records[0];
    assert!(rec.theta_g);
    assert_eq!(rec.alpha_next, 2.0);
    assert_eq!(rec.x_next, vec![0.0, 0.0]);
    assert!(!rec.omega_h);
    assert_eq!(rec.beta_next, 1.0);
}

#[test]
fn saddle_origin_takes_nc_step_with_plus_tie() {
    let p = saddle_quartic();
    let params = SolverParams {
        c_g: 0.5,
        epsbar_g: 1e-3,
        c_h: 1.0,
        epsbar_h: 1e-3,
        max_iters: 1,
        ..exact_params()
    };
    let r = run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[0.0, 0.0], streams(2)).unwrap();
    let rec = &r.records[0];
    assert!(!rec.omega_g);
    assert_eq!(rec.alpha_next, rec.alpha_k);
    assert_eq!(rec.lambda_est, -1.0);
    assert!(rec.omega_h && rec.theta_h);
    assert_eq!(rec.fhat_plus_est, rec.fhat_minus_est);
    assert_eq!(rec.sign_choice, 1);
    assert!(rec.f_next_true < 0.0);
    assert_eq!(rec.x_next, vec![1.0, 0.0]);
    assert_eq!(rec.beta_next, 2.0);
}

#[test]
fn failed_descent_shrinks_alpha_by_tau() {
    let p = quadratic(&[100.0]);
    let params = SolverParams {
        alpha0: 0.25,
        max_iters: 1,
        ..exact_params()
    };
    let r = run_ss_g(&p, &OracleConfig::exact(), &params, &[1.0], streams(3)).unwrap();
    let rec = &r.records[0];
    assert!(rec.omega_g && !rec.theta_g);
    assert_eq!(rec.alpha_next, 0.125);
    assert_eq!(rec.x_next, vec![1.0]);
}

#[test]
fn ss_g_stagnates_at_saddle() {
    let p = saddle_quartic();
    let params = SolverParams {
        max_iters: 200,
        ..exact_params()
    };
    let r = run_ss_g(&p, &OracleConfig::exact(), &params, &[0.0, 0.0], streams(4)).unwrap();
    assert_eq!(r.records.len(), 200);
    assert!(r.records.iter().all(|rec| rec.f_next_true == 0.0));
    assert_eq!(r.heval_count, 0);
}

#[test]
fn ss_g_matches_two_step_on_convex_quadratic() {
    let p = quadratic(&[1.0, 3.0]);
    let params = exact_params();
    let a = run_ss_g(&p, &OracleConfig::exact(), &params, &[0.7, -0.4], streams(5)).unwrap();
    let b = run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[0.7, -0.4], streams(5)).unwrap();
    let xa: Vec<_> = a.records.iter().map(|r| r.x_next.clone()).collect();
    let xb: Vec<_> = b.records.iter().map(|r| r.x_next.clone()).collect();
    assert_eq!(xa, xb);
}

#[test]
fn capped_cg_converges_on_quadratic() {
    let p = quadratic(&[1.0, 4.0, 0.5]);
    let params = SolverParams {
        max_iters: 30,
        epsbar_g: 1e-8,
        ..SolverParams::default()
    };
    for x0 in [[0.6, -0.5, 0.3], [-0.1, 0.2, -0.9], [0.0, 0.0, 1.0]] {
        let r = run_ss_nc_cg(&p, &OracleConfig::exact(), &params, &x0, streams(6), 1e-3).unwrap();
        assert_eq!(r.status, RunStatus::HitStoppingTime);
        assert!(r.records.len() <= 30);
        assert_eq!(r.heval_count, r.records.len() as u64);
    }
}

#[test]
fn capped_cg_escapes_saddle_region() {
    let p = saddle_quartic();
    let params = SolverParams {
        max_iters: 1,
        ..exact_params()
    };
    let r = run_ss_nc_cg(&p, &OracleConfig::exact(), &params, &[1e-3, 0.5], streams(7), 1e-3).unwrap();
    assert!(r.records[0].omega_h);
    assert!(!r.records[0].omega_g);
}

#[test]
fn replay_reproduces_noisy_runs() {
    let p = rosenbrock_2d();
    let ocfg = OracleConfig::coupled(1e-3);
    let params = SolverParams {
        e_f_ratio: Some(2.0),
        max_iters: 300,
        ..exact_params()
    };
    for method in [Method::Ss2NcG, Method::SsG, Method::SsNcCg] {
        let r = run(method, &p, &ocfg, &params, &[-1.2, 1.0], streams(8)).unwrap();
        replay_step_sizes(&r.records, &params, method).unwrap();
        for rec in &r.records {
            assert!(!rec.theta_g || rec.omega_g);
            assert!(!rec.theta_h || rec.omega_h);
        }
    }
}

#[test]
fn deterministic_runs_are_monotone() {
    let p = rosenbrock_2d();
    let params = SolverParams {
        max_iters: 2000,
        ..exact_params()
    };
    let r = run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[-1.2, 1.0], streams(9)).unwrap();
    for rec in &r.records {
        assert!(rec.f_hat_true <= rec.f_true);
        assert!(rec.f_next_true <= rec.f_hat_true);
    }
}

#[test]
fn divergence_reports_partial_result() {
    let p = quadratic(&[-1.0]);
    let params = SolverParams {
        max_iters: 10_000,
        epsbar_h: 0.0,
        ..exact_params()
    };
    match run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[1.0], streams(10)) {
        Err(Error::Divergence { partial, .. }) => assert!(!partial.records.is_empty()),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn rejects_mismatched_start() {
    let p = rosenbrock_2d();
    let err = run_ss_g(&p, &OracleConfig::exact(), &exact_params(), &[0.0], streams(0)).unwrap_err();
    assert!(matches!(err, Error::InvalidDimension(_)));
}

#[test]
fn halts_after_stopping_iteration() {
    let p = quadratic(&[1.0, 1.0]);
    let params = SolverParams {
        epsbar_g: 1e-12,
        halt_at_stopping_time: true,
        ..exact_params()
    };
    let r = run_ss2_nc_g(&p, &OracleConfig::exact(), &params, &[1.0, 0.0], streams(11)).unwrap();
    assert_eq!(r.stopping_time, Some(1));
    assert_eq!(r.records.len(), 2);
    assert_eq!(r.status, RunStatus::HitStoppingTime);
}
