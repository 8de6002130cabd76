use eflux::flux::Flux;
use eflux::hopf::{scan_x_with, solve_path, solve_power_law, DensePath, Location, MinimizerResult, SamplePath, VariationalGrid};
use eflux::mc::stream;
use eflux::probability::{
    convergence_study, expected_solution, minimum_cdf, minimum_cdf_mc, scaling_fit, segment_probabilities_mc,
    segment_probabilities_quadrature, shock_density_mc, shock_density_quadrature, spectrum_report, variance_law,
    CandidateSet, CdfTarget, DenseWindow, Normalization, SPECTRUM_REFERENCE,
};
use eflux::{fd, Result as EngineResult};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::*;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::Subcommand)]
pub enum Command {
    /// Dense sample of the initial data g and g'.
    SamplePath,
    /// Greatest minimizer and solution value at (x, t), one row per sampled path.
    Solve,
    /// Solution profile along x for one path, with shocks flagged.
    Scan,
    /// Probability that the minimizer lies on each segment or vertex.
    SegmentProbs,
    /// Distribution function of a segment minimum or vertex value.
    Cdf,
    /// Rates of minimizer class transitions per unit x.
    ShockDensity,
    /// Spectrum of the inverse integrated-walk covariance.
    Spectrum,
    /// Variance of the power-law solution against its minimizer identity.
    VarianceLaw,
    /// Case probabilities under dyadic refinement of Brownian motion.
    Converge,
    /// Finite-difference scheme against the variational solution.
    FdCompare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SamplePath => "sample-path",
            Command::Solve => "solve",
            Command::Scan => "scan",
            Command::SegmentProbs => "segment-probs",
            Command::Cdf => "cdf",
            Command::ShockDensity => "shock-density",
            Command::Spectrum => "spectrum",
            Command::VarianceLaw => "variance-law",
            Command::Converge => "converge",
            Command::FdCompare => "fd-compare",
        }
    }

    pub const ALL: [Command; 10] = [
        Command::SamplePath,
        Command::Solve,
        Command::Scan,
        Command::SegmentProbs,
        Command::Cdf,
        Command::ShockDensity,
        Command::Spectrum,
        Command::VarianceLaw,
        Command::Converge,
        Command::FdCompare,
    ];
}

/// What gnuplot should draw: 1-based columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub x: usize,
    pub ys: Vec<usize>,
    pub style: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Map<String, Value>,
    pub plot: Plot,
}

fn f(v: f64) -> String {
    format!("{v}")
}

fn opt_index(i: Option<usize>) -> String {
    i.map(|i| (i + 1).to_string()).unwrap_or_default()
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Output, CliError> {
    match cmd {
        Command::SamplePath => sample_path(cfg),
        Command::Solve => solve(cfg),
        Command::Scan => scan(cfg),
        Command::SegmentProbs => segment_probs(cfg),
        Command::Cdf => cdf(cfg),
        Command::ShockDensity => shock_density(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::VarianceLaw => variance(cfg),
        Command::Converge => converge(cfg),
        Command::FdCompare => fd_compare(cfg),
    }
}

fn grid(cfg: &RunConfig, flux: &Flux) -> EngineResult<VariationalGrid> {
    let g = &cfg.grid;
    if g.counts.is_empty() {
        VariationalGrid::uniform(flux, g.x, g.t, g.per_segment)
    } else {
        VariationalGrid::build(flux, g.x, g.t, &g.counts)
    }
}

fn sample_path(cfg: &RunConfig) -> Result<Output, CliError> {
    let src = cfg.process.source()?;
    let w = &cfg.sample_path;
    let path = DensePath::sample(src.as_ref(), w.lo, w.hi, w.cells, &mut stream(cfg.seed, 0))?;
    let rows = (0..path.len()).map(|k| vec![f(path.point(k)), f(path.g[k]), f(path.gprime[k])]).collect();
    Ok(Output {
        header: vec!["y", "g", "gprime"],
        rows,
        summary: Map::new(),
        plot: Plot { x: 1, ys: vec![2, 3], style: "lines" },
    })
}

fn solve(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let (x, t) = (cfg.grid.x, cfg.grid.t);
    let results: Vec<MinimizerResult> = match flux {
        Flux::PowerLaw { j } => {
            let w = &cfg.sample_path;
            (0..cfg.trials)
                .into_par_iter()
                .map(|k| {
                    let path = DensePath::sample(src.as_ref(), w.lo, w.hi, w.cells, &mut stream(cfg.seed, k))?;
                    solve_power_law(j, &path, x, t)
                })
                .collect::<EngineResult<_>>()?
        }
        _ => {
            let grid = grid(cfg, &flux)?;
            (0..cfg.trials)
                .into_par_iter()
                .map(|k| solve_path(&grid, &SamplePath::sample(&grid, src.as_ref(), &mut stream(cfg.seed, k))?))
                .collect::<EngineResult<_>>()?
        }
    };
    let mean = results.iter().map(|r| r.w).sum::<f64>() / results.len().max(1) as f64;
    let rows = results
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                k.to_string(),
                f(r.y_star),
                f(r.w),
                f(r.w_left),
                r.location.class().to_string(),
                opt_index(r.location.index()),
                f(r.q_value),
            ]
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("mean_w".into(), json!(mean));
    Ok(Output {
        header: vec!["trial", "y_star", "w", "w_left", "location_class", "location_index", "q_value"],
        rows,
        summary,
        plot: Plot { x: 2, ys: vec![3], style: "points" },
    })
}

fn scan(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let s = &cfg.scan;
    let step = s.step.unwrap_or(s.dx);
    let profile = scan_x_with(
        &flux,
        src.as_ref(),
        s.t,
        (s.x_range[0], s.x_range[1]),
        s.dx,
        step,
        &mut stream(cfg.seed, 0),
    )?;
    let rows = profile
        .rows
        .iter()
        .map(|r| {
            let segment = match r.location {
                Location::SegmentInterior(i) => Some(i),
                _ => None,
            };
            vec![
                f(r.x),
                f(r.w),
                r.location.class().to_string(),
                opt_index(segment),
                u8::from(r.shock).to_string(),
                r.region.map(|g| g.label().to_string()).unwrap_or_default(),
                f(r.y_star),
            ]
        })
        .collect();
    let width = s.x_range[1] - s.x_range[0];
    let mut summary = Map::new();
    summary.insert("shock_count".into(), json!(profile.shock_count()));
    summary.insert("shock_density".into(), json!(profile.shock_count() as f64 / width));
    summary.insert("shock_positions".into(), json!(profile.shock_positions()));
    Ok(Output {
        header: vec!["x", "w", "location_class", "segment_index", "shock_flag", "region_transition", "y_star"],
        rows,
        summary,
        plot: Plot { x: 1, ys: vec![2], style: "steps" },
    })
}

fn slot_label(slot: usize, segments: usize) -> (&'static str, usize) {
    if slot < segments {
        ("segment", slot + 1)
    } else {
        ("vertex", slot - segments + 1)
    }
}

fn segment_probs(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let grid = grid(cfg, &flux)?;
    let probs = match cfg.segment_probs.method {
        MethodConfig::MonteCarlo => segment_probabilities_mc(&grid, src.as_ref(), cfg.trials, cfg.seed)?,
        MethodConfig::Quadrature => segment_probabilities_quadrature(&CandidateSet::from_grid(&grid, src.as_ref())?)?,
    };
    let n = probs.segments;
    let rows = (0..probs.p.len())
        .map(|slot| {
            let (class, index) = slot_label(slot, n);
            let (value, term, term_err) = if slot < n {
                (f(grid.segment_values()[slot]), String::new(), String::new())
            } else {
                (String::new(), f(probs.vertex_terms[slot - n]), f(probs.vertex_term_errors[slot - n]))
            };
            vec![class.to_string(), index.to_string(), f(probs.p[slot]), f(probs.std_error[slot]), value, term, term_err]
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("total".into(), json!(probs.total()));
    summary.insert("expected_w".into(), json!(probs.expected_w));
    summary.insert("expected_w_error".into(), json!(probs.expected_w_error));
    summary.insert("expected_solution".into(), json!(expected_solution(&probs, &flux)?));
    Ok(Output {
        header: vec!["class", "index", "probability", "std_error", "segment_value", "vertex_term", "vertex_term_error"],
        rows,
        summary,
        plot: Plot { x: 0, ys: vec![3], style: "boxes" },
    })
}

fn cdf(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let grid = grid(cfg, &flux)?;
    let set = CandidateSet::from_grid(&grid, src.as_ref())?;
    let c = &cfg.cdf;
    if c.index == 0 {
        return Err(CliError::Config("cdf.index is 1-based".into()));
    }
    let target = match c.target {
        TargetKind::Segment => CdfTarget::SegmentMinimum(c.index - 1),
        TargetKind::Vertex => CdfTarget::Vertex(c.index - 1),
    };
    if c.points < 2 {
        return Err(CliError::Config("cdf.points must be at least 2".into()));
    }
    let s: Vec<f64> = (0..c.points)
        .map(|i| c.s_range[0] + (c.s_range[1] - c.s_range[0]) * i as f64 / (c.points - 1) as f64)
        .collect();
    let curve = match c.method {
        MethodConfig::Quadrature => minimum_cdf(&set, target, &s)?,
        MethodConfig::MonteCarlo => minimum_cdf_mc(&set, target, &s, cfg.trials, cfg.seed)?,
    };
    let rows = curve.s.iter().zip(&curve.values).map(|(&s, &v)| vec![f(s), f(v)]).collect();
    Ok(Output { header: vec!["s", "cdf"], rows, summary: Map::new(), plot: Plot { x: 1, ys: vec![2], style: "lines" } })
}

fn shock_density(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let grid = grid(cfg, &flux)?;
    let s = &cfg.shock_density;
    if s.keep.contains(&0) {
        return Err(CliError::Config("shock_density.keep is 1-based".into()));
    }
    let keep: Vec<usize> = s.keep.iter().map(|k| k - 1).collect();
    let keep = (!keep.is_empty()).then_some(keep.as_slice());
    let r = match s.method {
        ShockMethodConfig::Quadrature => {
            let set = CandidateSet::from_grid(&grid, src.as_ref())?;
            let set = match keep {
                Some(k) => set.restrict(k)?,
                None => set,
            };
            shock_density_quadrature(&set)?
        }
        ShockMethodConfig::FiniteDifference => {
            shock_density_mc(&grid, src.as_ref(), keep, &s.dxs, cfg.trials, cfg.seed)?
        }
    };
    let n = r.segments;
    let k = r.rates.nrows();
    let mut rows = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let (fc, fi) = slot_label(a, n);
            let (tc, ti) = slot_label(b, n);
            rows.push(vec![
                fc.to_string(),
                fi.to_string(),
                tc.to_string(),
                ti.to_string(),
                f(r.rates[(a, b)]),
                f(r.std_error[(a, b)]),
            ]);
        }
    }
    let mut summary = Map::new();
    summary.insert("total_density".into(), json!(r.total_density));
    summary.insert("total_error".into(), json!(r.total_error));
    Ok(Output {
        header: vec!["from_class", "from_index", "to_class", "to_index", "rate", "std_error"],
        rows,
        summary,
        plot: Plot { x: 0, ys: vec![5], style: "boxes" },
    })
}

fn spectrum(cfg: &RunConfig) -> Result<Output, CliError> {
    let mut rows = Vec::new();
    for &n in &cfg.spectrum.n {
        for (label, norm) in [("literal", Normalization::Literal), ("unit-spacing", Normalization::UnitSpacing)] {
            let r = spectrum_report(n, norm)?;
            rows.push(vec![
                n.to_string(),
                label.to_string(),
                f(r.median_diag),
                f(r.concentration),
                f(r.eigen_ratio),
                u8::from(r.matches_reference).to_string(),
            ]);
        }
    }
    let mut summary = Map::new();
    summary.insert("reference".into(), json!(SPECTRUM_REFERENCE));
    Ok(Output {
        header: vec!["n", "normalization", "median_diag", "concentration", "eigen_ratio", "matches_reference"],
        rows,
        summary,
        plot: Plot { x: 1, ys: vec![3], style: "points" },
    })
}

fn variance(cfg: &RunConfig) -> Result<Output, CliError> {
    let src = cfg.process.source()?;
    let v = &cfg.variance_law;
    let points: Vec<(f64, f64)> = v.points.iter().map(|p| (p[0], p[1])).collect();
    let window = DenseWindow { lo: v.window.lo, hi: v.window.hi, cells: v.window.cells };
    let out = variance_law(v.j, src.as_ref(), &points, window, cfg.trials, cfg.seed)?;
    let rows = out
        .iter()
        .map(|r| {
            vec![
                f(r.x),
                f(r.t),
                f(r.var_w),
                f(r.var_w_error),
                f(r.var_identity),
                f(r.residual),
                f(r.mean_w),
                f(r.mean_y_star),
                f(r.var_y_star),
                f(r.mean_displacement),
            ]
        })
        .collect();
    let fit = scaling_fit(&out);
    let mut summary = Map::new();
    summary.insert("fit_p".into(), json!(fit.p));
    summary.insert("fit_time_exponent".into(), json!(fit.q));
    summary.insert("max_residual".into(), json!(out.iter().map(|r| r.residual).fold(0.0, f64::max)));
    Ok(Output {
        header: vec![
            "x",
            "t",
            "var_w",
            "var_w_error",
            "var_identity",
            "residual",
            "mean_w",
            "mean_y_star",
            "var_y_star",
            "mean_displacement",
        ],
        rows,
        summary,
        plot: Plot { x: 2, ys: vec![3], style: "linespoints" },
    })
}

fn converge(cfg: &RunConfig) -> Result<Output, CliError> {
    let c = &cfg.converge;
    let s = convergence_study(c.x, c.t, &c.levels, cfg.trials, cfg.seed, c.alpha)?;
    let rows = s
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (d, e) = s.steps.get(i).map(|st| (f(st.difference), f(st.difference_error))).unwrap_or_default();
            vec![r.level.to_string(), f(r.p_left), f(r.p_interior), f(r.p_right), d, e]
        })
        .collect();
    let mut summary = Map::new();
    summary.insert("cauchy_trend".into(), json!(s.cauchy_trend));
    summary.insert(
        "tail".into(),
        json!({
            "level": s.tail.level,
            "reference_level": s.tail.reference_level,
            "alpha": s.tail.alpha,
            "empirical": s.tail.empirical,
            "bound": s.tail.bound,
        }),
    );
    Ok(Output {
        header: vec!["level", "p_left", "p_interior", "p_right", "cauchy_difference", "cauchy_error"],
        rows,
        summary,
        plot: Plot { x: 1, ys: vec![2, 3, 4], style: "linespoints" },
    })
}

fn fd_compare(cfg: &RunConfig) -> Result<Output, CliError> {
    let flux = cfg.flux.build()?;
    let src = cfg.process.source()?;
    let c = &cfg.fd_compare;
    let fcfg = fd::FdConfig {
        dx: c.dx,
        cfl: c.cfl,
        scheme: match c.scheme {
            SchemeConfig::LaxFriedrichs => fd::Scheme::LaxFriedrichs,
            SchemeConfig::EngquistOsher => fd::Scheme::EngquistOsher,
        },
        boundary: match c.boundary {
            BoundaryConfig::Periodic => fd::Boundary::Periodic,
            BoundaryConfig::Outflow => fd::Boundary::Outflow,
        },
    };
    let out = fd::compare_with_hopf_lax(
        &flux,
        src.as_ref(),
        &c.ts,
        fd::PathWindow { lo: c.window[0], hi: c.window[1] },
        (c.observe[0], c.observe[1]),
        &fcfg,
        cfg.trials,
        cfg.seed,
    )?;
    let rows = out
        .iter()
        .map(|r| {
            vec![
                f(r.t),
                f(r.l1),
                f(r.l1_error),
                f(r.tv_fd),
                f(r.tv_fd_error),
                f(r.tv_hl),
                f(r.tv_hl_error),
                f(r.var_fd_at_zero),
                f(r.var_hl_at_zero),
            ]
        })
        .collect();
    Ok(Output {
        header: vec![
            "t",
            "l1",
            "l1_error",
            "tv_fd",
            "tv_fd_error",
            "tv_hl",
            "tv_hl_error",
            "var_fd_at_zero",
            "var_hl_at_zero",
        ],
        rows,
        summary: Map::new(),
        plot: Plot { x: 1, ys: vec![4, 6], style: "linespoints" },
    })
}
