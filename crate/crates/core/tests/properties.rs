use eflux::fd::{evolve, Boundary, FdConfig, Scheme};
use eflux::flux::Flux;
use eflux::hopf::{scan_x, solve_path, SamplePath, VariationalGrid};
use eflux::mc::{run_trials, stream, Moments};
use eflux::probability::{candidate_probabilities, segment_probabilities_mc, CandidateSet};
use eflux::process::{CovarianceModel, ProcessSpec};
use proptest::prelude::*;

fn spec() -> ProcessSpec {
    ProcessSpec::brownian_motion().integrated(true).with_domain(-3.0, 3.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimizer_is_monotone_and_confined(seed in any::<u64>(), t in 0.1f64..1.0) {
        let p = scan_x(&Flux::AbsoluteValue, &spec(), t, (-1.0, 1.0), 0.02, &mut stream(seed, 0)).unwrap();
        for w in p.rows.windows(2) {
            prop_assert!(w[1].y_star >= w[0].y_star);
        }
        for r in &p.rows {
            prop_assert!(r.y_star >= r.x - t - 1e-9 && r.y_star <= r.x + t + 1e-9);
        }
    }

    #[test]
    fn covariance_model_is_symmetric_and_positive(n in 2usize..12, lo in -2.0f64..0.0) {
        let pts: Vec<f64> = (0..n).map(|i| lo + 0.3 * (i + 1) as f64).collect();
        let m = CovarianceModel::build(&spec(), &pts).unwrap();
        let s = m.sigma();
        prop_assert!((s - s.transpose()).abs().max() == 0.0);
        prop_assert!(m.eigenvalues().iter().all(|&l| l + m.jitter() > 0.0));
        let u = m.eigenvectors();
        let err = (u.transpose() * u - nalgebra::DMatrix::identity(n, n)).abs().max();
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn candidate_probabilities_sum_to_one(x in -0.5f64..0.5, t in 0.1f64..0.6, n in 1usize..3) {
        let grid = VariationalGrid::build(&Flux::AbsoluteValue, x, t, &[n]).unwrap();
        let set = CandidateSet::from_grid(&grid, &spec()).unwrap();
        let p = candidate_probabilities(&set).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        prop_assert!(p.iter().all(|&v| v >= -1e-12));
    }

    #[test]
    fn monotone_scheme_is_tvd_and_conservative(
        w0 in prop::collection::vec(-2.0f64..2.0, 8..80),
        cfl in 0.1f64..1.0,
        eo in any::<bool>(),
        burgers in any::<bool>(),
    ) {
        let flux = if burgers { Flux::burgers() } else { Flux::AbsoluteValue };
        let scheme = if eo { Scheme::EngquistOsher } else { Scheme::LaxFriedrichs };
        let cfg = FdConfig { dx: 0.05, cfl, scheme, boundary: Boundary::Periodic };
        let r = evolve(&flux, &w0, 0.3, &cfg).unwrap();
        for p in r.tv_history.windows(2) {
            prop_assert!(p[1] <= p[0] * (1.0 + 1e-12) + 1e-12);
        }
        let m0 = r.mass_history[0];
        let scale = w0.iter().map(|v| v.abs()).sum::<f64>() * cfg.dx + 1e-300;
        for m in &r.mass_history {
            prop_assert!((m - m0).abs() <= 1e-12 * scale.max(1.0));
        }
    }
}

#[test]
fn trials_do_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let grid = VariationalGrid::build(&Flux::AbsoluteValue, 0.3, 0.4, &[3]).unwrap();
            let p = segment_probabilities_mc(&grid, &spec(), 5000, 21).unwrap();
            let m = run_trials(
                3000,
                5,
                Moments::default,
                |m, _, rng| m.push(rand::Rng::random::<f64>(rng)),
                |a, b| a.merge(b),
            );
            (p.p, p.expected_w, m.mean().to_bits(), m.variance().to_bits())
        })
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(7));
}

#[test]
fn solve_path_matches_brute_force_objective() {
    let grid = VariationalGrid::build(&Flux::AbsoluteValue, 0.1, 0.5, &[50]).unwrap();
    for k in 0..50 {
        let path = SamplePath::sample(&grid, &spec(), &mut stream(8, k)).unwrap();
        let r = solve_path(&grid, &path).unwrap();
        let obj = path.objective(&grid);
        let min = obj.iter().copied().fold(f64::INFINITY, f64::min);
        let greatest = obj.iter().rposition(|&v| v == min).unwrap();
        assert_eq!(r.index, greatest);
        assert_eq!(r.q_value, min);
    }
}
