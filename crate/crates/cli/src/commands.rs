//! Command implementations: each builds a [`RunReport`] from the core
//! library, timing its phases, and optionally spills tabular sections to
//! CSV files.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};

use qfock::basis::{enumerate_words, level_dim, multiset_class, Config};
use qfock::gram::{gram_by_inversions, gram_levels, q_inner, BlockCache, INVERSION_ROUTE_LEVEL_CAP};
use qfock::linalg;
use qfock::operators::{
    commutant_residual, fixed_point_residual, intertwining_defect, m_matrix, qcr_defect_for,
    r_family, r_family_by_iteration, t_matrix, u_family,
};
use qfock::spectral::{
    alpha_blockwise_cached, alpha_bounds, convergence_report, theta_condition_margin,
    theta_condition_root,
};

use crate::report::{
    bench_to_csv, spectrum_to_csv, sweep_to_csv, BenchMode, BoundSection, Check, ConfigEcho,
    RunReport, SpectrumRow, SweepRow,
};

/// Deformation parameter the benchmark runs at.
const BENCH_Q: f64 = 0.5;

/// Refuse level matrices beyond this many dense entries unless --force.
const ENTRY_GUARDRAIL: f64 = 1e8;

pub struct UsageError(pub String);

type CmdResult = Result<RunReport, UsageError>;

fn usage<E: std::fmt::Display>(e: E) -> UsageError {
    UsageError(e.to_string())
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Json,
    Csv,
}

#[derive(Args)]
pub struct OutputArgs {
    /// Report format: json prints everything on stdout, csv moves tabular
    /// sections to files in --dir.
    #[arg(long, value_enum, default_value = "json")]
    pub out: OutFormat,
    /// Directory for CSV files.
    #[arg(long, default_value = ".")]
    pub dir: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long = "nmax")]
    pub n_max: usize,
    /// Relative tolerance for the identity checks.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Override the dense-size guardrail.
    #[arg(long)]
    pub force: bool,
}

#[derive(Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long = "nmax")]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub force: bool,
}

#[derive(Args)]
pub struct BoundArgs {
    /// Number of series terms kept in the bound condition.
    #[arg(long)]
    pub terms: usize,
    /// Bisection tolerance for the root.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "q-min", allow_negative_numbers = true)]
    pub q_min: f64,
    #[arg(long = "q-max", allow_negative_numbers = true)]
    pub q_max: f64,
    /// Number of grid points, endpoints included; 1 degenerates to q-min.
    #[arg(long)]
    pub steps: usize,
    #[arg(long = "nmax")]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub force: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum BlocksMode {
    On,
    Off,
}

#[derive(Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "nmax")]
    pub n_max: usize,
    /// Run the multiset-block mode in addition to the dense mode.
    #[arg(long, value_enum, default_value = "on")]
    pub blocks: BlocksMode,
    /// Repetitions per mode; the fastest run is reported.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long)]
    pub force: bool,
}

fn guardrail(d: usize, n_max: usize, force: bool) -> Result<(), UsageError> {
    let entries = (d as f64).powi(2 * n_max as i32);
    if entries > ENTRY_GUARDRAIL && !force {
        return Err(UsageError(format!(
            "level {n_max} needs {entries:.1e} dense entries (> {ENTRY_GUARDRAIL:.0e}); pass --force to proceed"
        )));
    }
    Ok(())
}

struct Timing {
    phases: BTreeMap<String, f64>,
}

impl Timing {
    fn new() -> Timing {
        Timing {
            phases: BTreeMap::new(),
        }
    }

    fn scope<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.phases
            .insert(phase.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

fn rel(defect: f64, scale: f64) -> f64 {
    defect / scale.max(1.0)
}

pub fn run_verify(args: VerifyArgs) -> CmdResult {
    let cfg = Config::with_tol(args.d, args.q, args.n_max, args.tol).map_err(usage)?;
    guardrail(cfg.d, cfg.n_max, args.force)?;
    let (d, q, n_max, tol) = (cfg.d, cfg.q, cfg.n_max, cfg.tol);
    let mut timing = Timing::new();
    let mut checks = Vec::new();

    let grams = timing.scope("gram_build", || gram_levels(d, n_max, q));

    timing.scope("gram_checks", || {
        let cap = n_max.min(INVERSION_ROUTE_LEVEL_CAP);
        let mut route_defect = 0.0f64;
        for (n, gram) in grams.iter().enumerate().take(cap + 1) {
            let oracle = gram_by_inversions(d, n, q);
            route_defect = route_defect.max(rel(
                linalg::max_abs_diff(gram.matrix(), oracle.matrix()),
                linalg::max_abs(gram.matrix()),
            ));
        }
        checks.push(Check::at_most("gram_route_equivalence", route_defect, tol));

        let mut entry_defect = 0.0f64;
        for (n, gram) in grams.iter().enumerate().take(n_max.min(4) + 1) {
            let words = enumerate_words(d, n);
            let scale = linalg::max_abs(gram.matrix());
            for (i, u) in words.iter().enumerate() {
                for (j, w) in words.iter().enumerate() {
                    entry_defect =
                        entry_defect.max(rel((gram.matrix()[(i, j)] - q_inner(u, w, q)).abs(), scale));
                }
            }
        }
        checks.push(Check::at_most("gram_entry_equivalence", entry_defect, tol));

        let mut least_ratio = f64::INFINITY;
        for gram in &grams {
            let eigs = linalg::sym_eigenvalues(gram.matrix());
            least_ratio = least_ratio.min(eigs[0] / eigs[eigs.len() - 1]);
        }
        checks.push(Check::at_least("gram_positive_definite", least_ratio, tol));

        let mut zero_defect = 0.0f64;
        for (n, gram) in grams.iter().enumerate().take(n_max.min(4) + 1) {
            let words = enumerate_words(d, n);
            for (i, u) in words.iter().enumerate() {
                for (j, w) in words.iter().enumerate() {
                    if multiset_class(u, d) != multiset_class(w, d) {
                        zero_defect = zero_defect.max(gram.matrix()[(i, j)].abs());
                    }
                }
            }
        }
        checks.push(Check::at_most("block_structural_zeros", zero_defect, 0.0));
    });

    timing.scope("unitary_checks", || {
        let fam = u_family(d, n_max, q);
        let mut defect = 0.0f64;
        for (n, gram) in grams.iter().enumerate() {
            let utu = fam.matrix(n).transpose() * fam.matrix(n);
            defect = defect.max(rel(
                linalg::max_abs_diff(&utu, gram.matrix()),
                linalg::max_abs(gram.matrix()),
            ));
        }
        checks.push(Check::at_most("unitarity", defect, tol));
    });

    timing.scope("factorization_checks", || {
        let scale = 1.0 / (1.0 - q.abs());
        let mut residual = 0.0f64;
        for n in 2..=n_max {
            residual = residual.max(rel(
                qfock::symgroup::factorization_residual(d, n, q),
                scale,
            ));
        }
        checks.push(Check::at_most("cycle_sum_factorization", residual, tol));
    });

    timing.scope("r_checks", || {
        let fam = r_family(d, n_max, q);
        let oracle = r_family_by_iteration(d, n_max, q);
        let scale = 1.0 / (1.0 - q.abs());
        let mut route = 0.0f64;
        for n in 0..=n_max {
            route = route.max(rel(
                linalg::max_abs_diff(fam.matrix(n), oracle.matrix(n)),
                scale,
            ));
        }
        checks.push(Check::at_most("r_route_agreement", route, tol.max(1e-9)));
        checks.push(Check::at_most(
            "fixed_point_residual",
            rel(fixed_point_residual(&fam), scale),
            tol,
        ));
        checks.push(Check::at_most(
            "commutant_relations",
            rel(commutant_residual(&fam), scale),
            tol,
        ));
        if n_max >= 2 {
            checks.push(Check::at_most(
                "q_commutation",
                rel(qcr_defect_for(&fam), scale),
                tol,
            ));
        }
        checks.push(Check::at_most(
            "intertwining",
            intertwining_defect(d, n_max, q),
            tol,
        ));
    });

    timing.scope("exact_checks", || {
        let mut shift_defect = 0.0f64;
        for n in 2..=4usize {
            let lifted = linalg::kron_identity_right(t_matrix(d, n).matrix(), d);
            shift_defect =
                shift_defect.max(linalg::max_abs_diff(&lifted, t_matrix(d, n + 1).matrix()));
        }
        checks.push(Check::at_most("t_shift_identity", shift_defect, 0.0));
    });

    let mut report = RunReport::new(
        "verify",
        ConfigEcho {
            d: Some(d),
            q: Some(q),
            n_max: Some(n_max),
            tol,
        },
    );
    report.checks = checks;
    report.timing = timing.phases;
    Ok(report)
}

pub fn run_spectrum(args: SpectrumArgs) -> CmdResult {
    let cfg = Config::with_tol(args.d, args.q, args.n_max, args.tol).map_err(usage)?;
    guardrail(cfg.d, cfg.n_max, args.force)?;
    let (d, q, n_max, tol) = (cfg.d, cfg.q, cfg.n_max, cfg.tol);
    let mut timing = Timing::new();

    let rows = timing.scope("spectral", || {
        if n_max >= 2 {
            let rep = convergence_report(d, n_max, q);
            (1..=n_max)
                .map(|n| SpectrumRow {
                    n,
                    alpha: rep.alpha_at(n),
                    lower_bound: rep.lower_bound,
                    upper_bound: rep.upper_bound,
                    contraction_factor: rep.contraction_factors.get(n - 1).copied(),
                    iterate_distance: rep.iterate_distances.get(n - 1).copied(),
                })
                .collect::<Vec<_>>()
        } else {
            let (lower_bound, upper_bound) = alpha_bounds(q, 1e-16);
            vec![SpectrumRow {
                n: 1,
                alpha: qfock::spectral::alpha(d, 1, q),
                lower_bound,
                upper_bound,
                contraction_factor: None,
                iterate_distance: None,
            }]
        }
    });

    let mut checks = Vec::new();
    let worst_excess = rows
        .iter()
        .map(|r| (r.lower_bound - r.alpha).max(r.alpha - r.upper_bound))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most("alpha_within_bounds", worst_excess.max(0.0), tol));
    checks.push(Check::at_most(
        "alpha_level1_is_one",
        (rows[0].alpha - 1.0).abs(),
        1e-12,
    ));

    let mut report = RunReport::new(
        "spectrum",
        ConfigEcho {
            d: Some(d),
            q: Some(q),
            n_max: Some(n_max),
            tol,
        },
    );
    report.checks = checks;
    report.timing = timing.phases;
    report.spectrum = Some(rows);
    if args.output.out == OutFormat::Csv {
        spectrum_to_csv(&mut report, &args.output.dir).map_err(usage)?;
    }
    Ok(report)
}

pub fn run_bound(args: BoundArgs) -> CmdResult {
    if args.terms < 2 {
        return Err(UsageError(format!(
            "the bound condition needs at least 2 series terms (got {})",
            args.terms
        )));
    }
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(UsageError(format!("tolerance must be positive (got {})", args.tol)));
    }
    let mut timing = Timing::new();
    let root = timing.scope("bisection", || theta_condition_root(args.terms, args.tol));

    let mut checks = Vec::new();
    let probe = 4.0 * args.tol.max(1e-14);
    let straddle = theta_condition_margin(root + probe, args.terms)
        .max(-theta_condition_margin(root - probe, args.terms));
    checks.push(Check::at_most("root_straddles_sign_change", straddle, 0.0));
    checks.push(Check::at_most(
        "margin_at_root",
        theta_condition_margin(root, args.terms).abs(),
        1e-8,
    ));

    let mut report = RunReport::new(
        "bound",
        ConfigEcho {
            d: None,
            q: None,
            n_max: None,
            tol: args.tol,
        },
    );
    report.checks = checks;
    report.timing = timing.phases;
    report.bound = Some(BoundSection {
        terms: args.terms,
        root,
        margin_at_root: theta_condition_margin(root, args.terms),
    });
    Ok(report)
}

pub fn run_sweep(args: SweepArgs) -> CmdResult {
    if args.steps < 1 {
        return Err(UsageError("steps must be at least 1".to_string()));
    }
    if args.n_max < 2 {
        return Err(UsageError("sweep needs --nmax at least 2".to_string()));
    }
    let grid: Vec<f64> = if args.steps == 1 {
        vec![args.q_min]
    } else {
        (0..args.steps)
            .map(|k| {
                args.q_min
                    + (args.q_max - args.q_min) * (k as f64) / ((args.steps - 1) as f64)
            })
            .collect()
    };
    for &q in &grid {
        Config::with_tol(args.d, q, args.n_max, args.tol).map_err(usage)?;
    }
    guardrail(args.d, args.n_max, args.force)?;

    let mut timing = Timing::new();
    let rows = timing.scope("sweep", || {
        grid.iter()
            .map(|&q| {
                let rep = convergence_report(args.d, args.n_max, q);
                SweepRow {
                    q,
                    n_max: args.n_max,
                    min_alpha: rep.min_alpha(),
                    threshold: rep.threshold,
                    margin: rep.margin,
                    verdict: rep.verdict,
                    trend: rep.trend,
                    lower_bound: rep.lower_bound,
                    upper_bound: rep.upper_bound,
                }
            })
            .collect::<Vec<_>>()
    });

    let mut checks = Vec::new();
    let worst_excess = rows
        .iter()
        .map(|r| (r.lower_bound - r.min_alpha).max(0.0))
        .fold(0.0f64, f64::max);
    checks.push(Check::at_most("bounds_containment", worst_excess, args.tol));
    checks.push(Check::at_least(
        "reports_emitted",
        rows.len() as f64,
        args.steps as f64,
    ));

    let mut report = RunReport::new(
        "sweep",
        ConfigEcho {
            d: Some(args.d),
            q: None,
            n_max: Some(args.n_max),
            tol: args.tol,
        },
    );
    report.checks = checks;
    report.timing = timing.phases;
    report.sweep = Some(rows);
    if args.output.out == OutFormat::Csv {
        sweep_to_csv(&mut report, &args.output.dir).map_err(usage)?;
    }
    Ok(report)
}

fn dense_alphas(d: usize, n_max: usize, q: f64) -> Vec<f64> {
    let grams = gram_levels(d, n_max, q);
    (1..=n_max)
        .map(|n| {
            let (gs, gsi) = linalg::sqrt_pair(grams[n].matrix());
            let m = m_matrix(d, n, q);
            let s = linalg::symmetrize(&(gs * m.matrix() * gsi));
            linalg::smallest_eigenvalue(&s)
        })
        .collect()
}

pub fn run_bench(args: BenchArgs) -> CmdResult {
    let cfg = Config::new(args.d, BENCH_Q, args.n_max).map_err(usage)?;
    guardrail(cfg.d, cfg.n_max, args.force)?;
    if args.repeat < 1 {
        return Err(UsageError("repeat must be at least 1".to_string()));
    }
    let (d, n_max) = (cfg.d, cfg.n_max);
    let mut timing = Timing::new();
    let mut modes = Vec::new();

    let dense = timing.scope("dense_mode", || {
        let mut best = f64::INFINITY;
        let mut alphas = Vec::new();
        for _ in 0..args.repeat {
            let start = Instant::now();
            alphas = dense_alphas(d, n_max, BENCH_Q);
            best = best.min(start.elapsed().as_secs_f64());
        }
        // the dense route materializes the Gram and cycle-sum matrix of
        // every level it touches
        let entries: u64 = (1..=n_max).map(|m| 2 * (level_dim(d, m) as u64).pow(2)).sum();
        BenchMode {
            mode: "dense".to_string(),
            wall_seconds: best,
            peak_dim: level_dim(d, n_max),
            entries_touched: entries,
            alphas,
        }
    });

    let blocks = if args.blocks == BlocksMode::On {
        Some(timing.scope("blocks_mode", || {
            let mut best = f64::INFINITY;
            let mut alphas = Vec::new();
            let mut peak = 0usize;
            let mut entries = 0u64;
            for _ in 0..args.repeat {
                let start = Instant::now();
                let mut cache = BlockCache::new(d, BENCH_Q);
                alphas = (1..=n_max)
                    .map(|n| alpha_blockwise_cached(&mut cache, n))
                    .collect();
                best = best.min(start.elapsed().as_secs_f64());
                peak = cache.peak_dim();
                entries = cache.entries_touched();
            }
            BenchMode {
                mode: "blocks".to_string(),
                wall_seconds: best,
                peak_dim: peak,
                entries_touched: entries,
                alphas,
            }
        }))
    } else {
        None
    };

    let mut checks = Vec::new();
    let min_alpha = dense.alphas.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("alpha_positive", min_alpha, 0.0));
    if let Some(blocks) = &blocks {
        let worst = dense
            .alphas
            .iter()
            .zip(&blocks.alphas)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        checks.push(Check::at_most("alpha_blocks_equals_dense", worst, 1e-10));
        checks.push(Check::strictly_below(
            "blocks_fewer_entries",
            blocks.entries_touched as f64,
            dense.entries_touched as f64,
        ));
    }

    modes.push(dense);
    modes.extend(blocks);

    let mut report = RunReport::new(
        "bench",
        ConfigEcho {
            d: Some(d),
            q: Some(BENCH_Q),
            n_max: Some(n_max),
            tol: cfg.tol,
        },
    );
    report.checks = checks;
    report.timing = timing.phases;
    report.bench = Some(modes);
    if args.output.out == OutFormat::Csv {
        bench_to_csv(&mut report, &args.output.dir).map_err(usage)?;
    }
    Ok(report)
}
