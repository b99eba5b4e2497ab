use motzkin_core::sweep::{fit_scaling, run_sweep, select, Model, SweepPlan};

#[test]
fn volume_law_slope_is_log_two() {
    let plan = SweepPlan::parse("grid = 2,2\nn = 1:300").unwrap();
    let rows = run_sweep(&plan).unwrap().rows;
    let fit = fit_scaling(&select(&rows, 2, 2.0, 100, 300), Model::Linear).unwrap();
    assert!((fit.coefficient / 2f64.ln() - 1.0).abs() < 0.05, "{fit:?}");
}

#[test]
fn small_t_entropy_is_flat() {
    let plan = SweepPlan::parse("grid = 2,0.5\nn = 1:1000").unwrap();
    let rows = run_sweep(&plan).unwrap().rows;
    let fit = fit_scaling(&select(&rows, 2, 0.5, 500, 1000), Model::Constant).unwrap();
    assert!(fit.residual < 1e-4, "{fit:?}");
    assert_eq!(fit.n_range, (500, 1000));
}

#[test]
fn rows_respect_basic_bounds() {
    let plan = SweepPlan::parse("grid = 1,0.5; 1,1; 1,2; 2,0.5; 2,1; 2,2\nn = 1:200:7\njobs = 3").unwrap();
    let res = run_sweep(&plan).unwrap();
    assert_eq!(res.bounds.len(), 6);
    for r in &res.rows {
        assert!(r.is_ok());
        assert!(r.entropy.unwrap() >= 0.0);
        assert!(r.mstar.unwrap() <= r.n);
    }
}
