//! `hammerstein` command-line tool.
//!
//! Exit codes: 0 when a certificate passes, a solve converges or a sweep
//! completes; 1 when a certificate fails, a solve finds nothing (or only the
//! trivial solution when an annulus was requested), a sweep produces a
//! conflict cell, or validation warns; 2 on usage or input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hammerstein::bounds::{
    falsify_linear_growth, BoundSet, LinearGrowthWitness, SamplingConfig, DEFAULT_FALSIFY_BUDGET,
};
use hammerstein::certificate::{
    check_existence, check_nonexistence, ExistenceCertificate, NonexistenceCertificate,
    WitnessStatus,
};
use hammerstein::problem::{load_problem, CheckStatus, Params, ProblemSpec};
use hammerstein::record::{write_records, ToRecord};
use hammerstein::solver::{multistart_solve, verify_solution, SolveOptions, SolveResult};
use hammerstein::sweep::{self, run_sweep, Axis, Classification, SweepBox};
use hammerstein::{Execution, Grid};

#[derive(Parser, Debug)]
#[command(
    name = "hammerstein",
    version,
    about = "Certificates and fixed points for perturbed Hammerstein equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Problem file.
    #[arg(long, global = true)]
    problem: Option<PathBuf>,

    /// Seed for every randomized procedure.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Grid intervals.
    #[arg(long, global = true, default_value_t = hammerstein::grid::DEFAULT_N)]
    n: usize,

    /// Estimate bounds the problem file does not declare (heuristic).
    #[arg(long, global = true)]
    sample_bounds: bool,

    /// Disable data-parallel loops.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamOverrides {
    /// Override lambda from the problem file.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta1: Option<f64>,
    #[arg(long)]
    eta2: Option<f64>,
}

#[derive(Args, Debug, Clone, Copy)]
struct WitnessArgs {
    /// Override tau from the problem file.
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    xi1: Option<f64>,
    #[arg(long)]
    xi2: Option<f64>,
    /// Use the witness without searching for counterexamples.
    #[arg(long)]
    skip_falsify: bool,
    /// Falsification boxes 2^-budget ..= 2^budget.
    #[arg(long, default_value_t = DEFAULT_FALSIFY_BUDGET)]
    budget: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the two-radius existence test.
    CertifyExistence {
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        #[command(flatten)]
        params: ParamOverrides,
        /// Write a key=value record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the linear-growth non-existence test.
    CertifyNonexistence {
        #[command(flatten)]
        params: ParamOverrides,
        #[command(flatten)]
        witness: WitnessArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search for fixed points by Picard iteration from several starts.
    Solve {
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "R")]
        big_r: Option<f64>,
        #[arg(long, default_value_t = 16)]
        starts: usize,
        #[arg(long, default_value_t = hammerstein::solver::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = hammerstein::solver::DEFAULT_MAX_ITER)]
        max_iter: usize,
        #[command(flatten)]
        params: ParamOverrides,
        /// Write the selected solution as a t,u,du table.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a lattice of (lambda, eta1, eta2) values.
    Sweep {
        /// a:b:k, k points from a to b.
        #[arg(long)]
        lambda: Axis,
        #[arg(long)]
        eta1: Axis,
        #[arg(long)]
        eta2: Axis,
        #[arg(long)]
        r: f64,
        #[arg(long = "R")]
        big_r: f64,
        /// Also run the non-existence test with the problem file's witness.
        #[arg(long)]
        witness: bool,
        #[arg(long)]
        skip_falsify: bool,
        /// Write CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the sampled hypothesis checks.
    Validate,
}

/// Input or usage problem; maps to exit code 2.
struct Fatal(String);

impl From<hammerstein::Error> for Fatal {
    fn from(e: hammerstein::Error) -> Self {
        Fatal(e.to_string())
    }
}

type Run = Result<bool, Fatal>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execution(cli: &Cli) -> Execution {
    if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn load(cli: &Cli) -> Result<ProblemSpec, Fatal> {
    let path = cli
        .problem
        .as_ref()
        .ok_or_else(|| Fatal("--problem is required".into()))?;
    let grid = Grid::new(cli.n).map_err(|e| Fatal(format!("--n: {e}")))?;
    load_problem(path, grid).map_err(|e| match e {
        hammerstein::Error::Io { .. } => e.into(),
        e => Fatal(format!("{}: {e}", path.display())),
    })
}

fn with_overrides(spec: ProblemSpec, o: &ParamOverrides) -> Result<ProblemSpec, Fatal> {
    let p = spec.params();
    let params = Params::new(
        o.lambda.unwrap_or(p.lambda),
        o.eta1.unwrap_or(p.eta1),
        o.eta2.unwrap_or(p.eta2),
    );
    Ok(spec.with_params(params)?)
}

fn check_radii(r: f64, big_r: f64) -> Result<(), Fatal> {
    if r > 0.0 && r < big_r && big_r.is_finite() {
        Ok(())
    } else {
        Err(Fatal(format!("need 0 < r < R, got r = {r}, R = {big_r}")))
    }
}

fn bound_set(cli: &Cli, spec: &ProblemSpec) -> BoundSet {
    if cli.sample_bounds {
        BoundSet::with_sampling(
            spec,
            SamplingConfig {
                seed: cli.seed,
                execution: execution(cli),
                ..SamplingConfig::default()
            },
        )
    } else {
        BoundSet::declared(spec)
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Fatal> {
    fs::write(path, text).map_err(|e| Fatal(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::CertifyExistence {
            r,
            big_r,
            params,
            out,
        } => {
            check_radii(*r, *big_r)?;
            let spec = with_overrides(load(cli)?, params)?;
            let cert = existence(cli, &spec, *r, *big_r)?;
            print_existence(&cert);
            if let Some(path) = out {
                write_file(path, &write_records(&[cert.to_record()]))?;
            }
            Ok(cert.verdict.passed())
        }
        Command::CertifyNonexistence {
            params,
            witness,
            out,
        } => {
            let spec = with_overrides(load(cli)?, params)?;
            let cert = nonexistence(cli, &spec, witness)?;
            print_nonexistence(&cert);
            if let Some(path) = out {
                write_file(path, &write_records(&[cert.to_record()]))?;
            }
            Ok(cert.passed)
        }
        Command::Solve {
            r,
            big_r,
            starts,
            tol,
            max_iter,
            params,
            out,
        } => {
            let annulus = match (r, big_r) {
                (Some(r), Some(big_r)) => {
                    check_radii(*r, *big_r)?;
                    Some((*r, *big_r))
                }
                (None, None) => None,
                _ => return Err(Fatal("--r and --R go together".into())),
            };
            if tol.is_nan() || *tol <= 0.0 {
                return Err(Fatal(format!("--tol must be positive, got {tol}")));
            }
            if *starts == 0 {
                return Err(Fatal("--starts must be at least 1".into()));
            }
            let spec = with_overrides(load(cli)?, params)?;
            solve(
                cli,
                &spec,
                annulus,
                *starts,
                SolveOptions {
                    tol: *tol,
                    max_iter: *max_iter,
                    ..Default::default()
                },
                out.as_deref(),
            )
        }
        Command::Sweep {
            lambda,
            eta1,
            eta2,
            r,
            big_r,
            witness,
            skip_falsify,
            out,
        } => {
            check_radii(*r, *big_r)?;
            let spec = load(cli)?;
            let cube = SweepBox {
                lambda: *lambda,
                eta1: *eta1,
                eta2: *eta2,
            };
            run_sweep_command(
                cli,
                &spec,
                &cube,
                (*r, *big_r),
                *witness,
                *skip_falsify,
                out.as_deref(),
            )
        }
        Command::Validate => {
            let spec = load(cli)?;
            let mut ok = true;
            println!("{:<6} {:<40} {:<6} detail", "hyp", "check", "status");
            for c in spec.checks() {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Warn => {
                        ok = false;
                        "warn"
                    }
                };
                println!(
                    "{:<6} {:<40} {:<6} {}",
                    c.hypothesis, c.name, status, c.detail
                );
            }
            let issues = BoundSet::declared(&spec)
                .check_invariants(&[0.01, 0.05, 0.1, 0.5, 1.0, 2.0, 5.0])?;
            for issue in &issues {
                println!("{:<6} {:<40} {:<6} {issue}", "-", "declared bounds", "warn");
            }
            ok &= issues.is_empty();
            println!(
                "result: {}",
                if ok { "all checks pass" } else { "warnings" }
            );
            Ok(ok)
        }
    }
}

fn existence(
    cli: &Cli,
    spec: &ProblemSpec,
    r: f64,
    big_r: f64,
) -> Result<ExistenceCertificate, Fatal> {
    Ok(check_existence(spec, &bound_set(cli, spec), r, big_r)?)
}

fn print_existence(c: &ExistenceCertificate) {
    let p = c.params;
    println!(
        "existence test at lambda = {}, eta1 = {}, eta2 = {}",
        p.lambda, p.eta1, p.eta2
    );
    println!("  r = {}, R = {}", c.r, c.big_r);
    println!(
        "  value branch       {:.9} <= R  (margin {:.3e})",
        c.lhs_value_branch,
        c.big_r - c.lhs_value_branch
    );
    println!(
        "  derivative branch  {:.9} <= R  (margin {:.3e})",
        c.lhs_deriv_branch,
        c.big_r - c.lhs_deriv_branch
    );
    println!(
        "  max branch         {:.9}",
        c.lhs_value_branch.max(c.lhs_deriv_branch)
    );
    println!(
        "  inner side         {:.9} >= r  (margin {:.3e})",
        c.lhs_idx0,
        c.margin_inner()
    );
    println!("  rigor              {}", c.rigor);
    if let Some(seed) = c.seed {
        println!("  seed               {seed}");
    }
    println!("verdict: {}", c.verdict);
}

fn nonexistence(
    cli: &Cli,
    spec: &ProblemSpec,
    args: &WitnessArgs,
) -> Result<NonexistenceCertificate, Fatal> {
    let base = spec.witness().copied();
    let tau = args.tau.or(base.map(|w| w.tau));
    let xi1 = args.xi1.or(base.map(|w| w.xi[0]));
    let xi2 = args.xi2.or(base.map(|w| w.xi[1]));
    let (Some(tau), Some(xi1), Some(xi2)) = (tau, xi1, xi2) else {
        return Err(Fatal(
            "no linear-growth witness: declare tau, xi1, xi2 under [bounds] or pass --tau/--xi1/--xi2".into(),
        ));
    };
    let w = LinearGrowthWitness::new(tau, [xi1, xi2])?;
    let status = witness_status(cli, spec, &w, args.skip_falsify, args.budget)?;
    Ok(check_nonexistence(spec, &w, status))
}

fn witness_status(
    cli: &Cli,
    spec: &ProblemSpec,
    w: &LinearGrowthWitness,
    skip: bool,
    budget: usize,
) -> Result<WitnessStatus, Fatal> {
    if skip {
        return Ok(WitnessStatus::Skipped);
    }
    let f = falsify_linear_growth(spec, w, budget, cli.seed, execution(cli))?;
    Ok(WitnessStatus::from_falsification(&f))
}

fn print_nonexistence(c: &NonexistenceCertificate) {
    let p = c.params;
    println!(
        "non-existence test at lambda = {}, eta1 = {}, eta2 = {}",
        p.lambda, p.eta1, p.eta2
    );
    println!(
        "  witness  tau = {}, xi1 = {}, xi2 = {}",
        c.witness.tau, c.witness.xi[0], c.witness.xi[1]
    );
    match &c.witness_status {
        WitnessStatus::Consistent => println!("  falsification found no counterexample"),
        WitnessStatus::Skipped => println!("  falsification skipped"),
        WitnessStatus::Refuted(why) => println!("  witness refuted: {why}"),
    }
    println!("  lhs {} < 1  (margin {:.3e})", c.lhs, c.margin());
    println!("verdict: {}", if c.passed { "pass" } else { "fail" });
}

fn solve(
    cli: &Cli,
    spec: &ProblemSpec,
    annulus: Option<(f64, f64)>,
    starts: usize,
    opts: SolveOptions,
    out: Option<&Path>,
) -> Run {
    let results = multistart_solve(spec, starts, cli.seed, &opts, execution(cli))?;
    println!("{} start(s), {} distinct result(s)", starts, results.len());
    println!(
        "{:<8} {:<15} {:>10} {:>14} {:>12}  start",
        "#", "status", "iters", "norm", "residual"
    );
    for (i, r) in results.iter().enumerate() {
        println!(
            "{:<8} {:<15} {:>10} {:>14.9} {:>12.3e}  {}",
            i,
            r.status.as_str(),
            r.iterations,
            r.norm,
            r.residual,
            r.start
        );
    }
    let converged: Vec<&SolveResult> = results.iter().filter(|r| r.converged()).collect();
    let chosen = match annulus {
        Some((r, big_r)) => converged.iter().copied().find(|s| s.in_annulus(r, big_r)),
        None => converged
            .iter()
            .copied()
            .max_by(|a, b| a.norm.total_cmp(&b.norm)),
    };
    let ok = match (annulus, chosen) {
        (_, Some(sol)) => {
            let (r, big_r) = annulus.unwrap_or((0.0, f64::INFINITY));
            let v = verify_solution(spec, &sol.u, r, big_r)?;
            println!("selected solution: norm {:.9}", sol.norm);
            println!(
                "  residual {:.3e}, cone {}, consistency defect {:.3e}, in annulus {}",
                v.residual.unwrap_or(f64::NAN),
                if v.cone_ok() { "ok" } else { "violated" },
                v.consistency_defect,
                v.in_annulus
            );
            if let Some(path) = out {
                let mut text = format!(
                    "# status={} norm={} residual={}\nt,u,du\n",
                    sol.status, sol.norm, sol.residual
                );
                for (j, t) in sol.u.grid().nodes().enumerate() {
                    text.push_str(&format!(
                        "{t},{},{}\n",
                        sol.u.values()[j],
                        sol.u.dvalues()[j]
                    ));
                }
                write_file(path, &text)?;
            }
            true
        }
        (Some((r, big_r)), None) => {
            println!("no converged solution with {r} <= norm <= {big_r}");
            match check_existence(spec, &bound_set(cli, spec), r, big_r) {
                Ok(c) if c.verdict.passed() => println!(
                    "note: the existence test passes ({}); a solution exists but Picard iteration did not find it",
                    c.verdict
                ),
                Ok(c) => println!("existence test: {}", c.verdict),
                Err(e) => println!("existence test not evaluated: {e}"),
            }
            false
        }
        (None, None) => {
            println!("no start converged");
            false
        }
    };
    Ok(ok)
}

fn run_sweep_command(
    cli: &Cli,
    spec: &ProblemSpec,
    cube: &SweepBox,
    (r, big_r): (f64, f64),
    use_witness: bool,
    skip_falsify: bool,
    out: Option<&Path>,
) -> Run {
    let witness = if use_witness {
        let w = *spec
            .witness()
            .ok_or_else(|| Fatal("--witness needs tau, xi1, xi2 under [bounds]".into()))?;
        let status = witness_status(cli, spec, &w, skip_falsify, DEFAULT_FALSIFY_BUDGET)?;
        Some((w, status))
    } else {
        None
    };
    let bounds = bound_set(cli, spec);
    let cells = run_sweep(
        spec,
        cube,
        &bounds,
        witness.as_ref().map(|(w, s)| (w, s)),
        r,
        big_r,
        execution(cli),
    )?;
    let mut csv = Vec::new();
    sweep::write_csv(&mut csv, &cells).map_err(|e| Fatal(e.to_string()))?;
    let csv = String::from_utf8(csv).map_err(|e| Fatal(e.to_string()))?;
    let conflicts = sweep::count(&cells, Classification::Conflict);
    match out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("{} cells written to {}", cells.len(), path.display());
            for class in [
                Classification::Existence,
                Classification::Nonexistence,
                Classification::BothFail,
                Classification::Conflict,
            ] {
                println!("  {:<13} {}", class.as_str(), sweep::count(&cells, class));
            }
        }
        None => print!("{csv}"),
    }
    if let Some((_, WitnessStatus::Refuted(why))) = &witness {
        eprintln!("warning: witness refuted ({why}); no cell is classified non-existence");
    }
    if conflicts > 0 {
        eprintln!("error: {conflicts} conflict cell(s): both tests pass, so the declared bounds are inconsistent");
    }
    Ok(conflicts == 0)
}
