use eflux::fd::{compare_path, compare_with_hopf_lax, convergence_order, evolve, Boundary, FdConfig, PathWindow, Scheme};
use eflux::flux::Flux;
use eflux::hopf::DensePath;
use eflux::process::ProcessSpec;

fn bump(y: f64) -> f64 {
    0.5 * (-y * y).exp()
}

fn bump_integral(y: f64) -> f64 {
    0.25 * std::f64::consts::PI.sqrt() * libm::erf(y)
}

#[test]
fn smooth_burgers_agrees_with_hopf_lax_at_first_order() {
    let hs = [0.04f64, 0.02, 0.01];
    let mut errs = Vec::new();
    for &h in &hs {
        let cells = (8.0 / h).round() as usize;
        let path = DensePath::from_fn(-4.0, 4.0, cells, bump_integral, bump);
        let cfg = FdConfig::new(h);
        let c = compare_path(&Flux::burgers(), &path, &[1.0], (-2.0, 3.0), &cfg).unwrap();
        errs.push(c[0].l1);
    }
    let order = convergence_order(&hs, &errs).unwrap();
    println!("errors {errs:?} order {order}");
    assert!(order >= 0.8, "order {order}, errors {errs:?}");
}

#[test]
fn rarefaction_fan() {
    let dx = 0.01;
    let n = 600;
    let lo = -3.0;
    let w0: Vec<f64> = (0..n).map(|i| if lo + (i as f64 + 0.5) * dx < 0.0 { -1.0 } else { 1.0 }).collect();
    let t = 1.0;
    let mut errs = Vec::new();
    for scheme in [Scheme::LaxFriedrichs, Scheme::EngquistOsher] {
        let r = evolve(&Flux::burgers(), &w0, t, &FdConfig { scheme, ..FdConfig::new(dx) }).unwrap();
        let err: f64 = r
            .w
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let x = lo + (i as f64 + 0.5) * dx;
                (v - (x / t).clamp(-1.0, 1.0)).abs() * dx
            })
            .sum();
        errs.push(err);
        assert!(r.tv_history.windows(2).all(|p| p[1] <= p[0] + 1e-12));
    }
    println!("rarefaction L1 {errs:?}");
    assert!(errs.iter().all(|&e| e < 0.1));
}

#[test]
fn ensemble_tv_and_variance_trends() {
    let spec = ProcessSpec::brownian_motion().integrated(true).with_domain(-3.0, 3.0);
    let cfg = FdConfig { boundary: Boundary::Outflow, ..FdConfig::new(0.02) };
    let rows = compare_with_hopf_lax(
        &Flux::burgers(),
        &spec,
        &[0.25, 0.5, 0.75, 1.0],
        PathWindow { lo: -3.0, hi: 3.0 },
        (-1.0, 1.0),
        &cfg,
        200,
        17,
    )
    .unwrap();
    for r in &rows {
        println!("{r:?}");
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    assert!(last.tv_fd <= first.tv_fd && last.tv_hl <= first.tv_hl);
    assert!(rows.windows(2).all(|p| p[1].var_fd_at_zero >= p[0].var_fd_at_zero));
    assert!(rows.windows(2).all(|p| p[1].var_hl_at_zero >= p[0].var_hl_at_zero));
    // smoothing: the scheme carries less variation than the exact solution
    assert!(rows.iter().all(|r| r.tv_fd < r.tv_hl));
}
