use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use gbsim::checks::{convergence_suite, opcheck_suite, CheckResult};
use gbsim::config::RunConfig;
use gbsim::kernels::{kernel_closed_form, kernel_k};
use gbsim::moc::{
    certify, certify_pair, lambda_select, search_parameters, CertificateReport, CertifyOptions, MocConstants, Modulus,
};
use gbsim::runner;

#[derive(Parser)]
#[command(name = "gbsim", version, about = "Fractionally dissipated dislocation dynamics on the periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation described by a `key = value` config file.
    Simulate {
        config: PathBuf,
        /// Override output.dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the modulus-of-continuity inequality on a log grid.
    Certify(CertifyArgs),
    /// Tabulate the fractional heat kernel at unit time.
    Kernel {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiplier, kernel, cross-oracle and Bernstein checks.
    Opcheck,
    /// Time-order, spatial refinement, Picard and reduction studies.
    Convergence,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    alpha: f64,
    /// Second exponent; certifies the pair with a single modulus.
    #[arg(long)]
    beta: Option<f64>,
    /// Modulus scale. Without it the built-in grid is searched.
    #[arg(long)]
    delta: Option<f64>,
    /// Log coefficient of the critical modulus, default delta / 10.
    #[arg(long)]
    gamma: Option<f64>,
    /// `||theta0||` in the mixed L^inf L^1 norm.
    #[arg(long, default_value_t = 1.0)]
    norm: f64,
    /// `||grad rho0||_inf`.
    #[arg(long, default_value_t = 1.0)]
    grad: f64,
    #[arg(long, default_value_t = 256)]
    n_samples: usize,
    #[arg(long)]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    /// Dissipation constant for `--alpha`; `--beta` keeps its default.
    #[arg(long)]
    balpha: Option<f64>,
    /// Report CSV path.
    #[arg(long, default_value = "certificate.csv")]
    out: PathBuf,
}

fn constants(alpha: f64, a: &CertifyArgs, own_b: bool) -> anyhow::Result<MocConstants> {
    let mut c = MocConstants::defaults(alpha)?;
    if let Some(v) = a.a1 {
        c.a1 = v;
    }
    if let Some(v) = a.a2 {
        c.a2 = v;
    }
    if own_b {
        if let Some(v) = a.balpha {
            c.b_alpha = v;
        }
    }
    c.validate()?;
    Ok(c)
}

fn modulus_for(alpha: f64, delta: f64, gamma: Option<f64>) -> anyhow::Result<Modulus> {
    Ok(if alpha == 1.0 { Modulus::moc1(delta, gamma.unwrap_or(delta / 10.0))? } else { Modulus::moc_alpha(delta)? })
}

fn write_report(path: &Path, r: &CertificateReport) -> anyhow::Result<()> {
    std::fs::write(path, r.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    println!("report: {}", path.display());
    Ok(())
}

fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}_{tag}{ext}"))
}

fn run_certify(a: &CertifyArgs) -> anyhow::Result<bool> {
    let opts = CertifyOptions { n_samples: a.n_samples, ..Default::default() };
    if let Some(beta) = a.beta {
        let Some(delta) = a.delta else { bail!("--beta needs --delta") };
        let (lo, hi) = if a.alpha <= beta { (a.alpha, beta) } else { (beta, a.alpha) };
        let m = Modulus::moc_alpha(delta)?;
        let lam = lambda_select(a.norm, a.grad, lo, &m)?.lambda.max(lambda_select(a.norm, a.grad, hi, &m)?.lambda);
        let consts = [constants(lo, a, lo == a.alpha)?, constants(hi, a, hi == a.alpha && lo != hi)?];
        let pr = certify_pair(a.alpha, beta, &m, lam, a.norm, consts, &opts)?;
        print!("{}", pr.reports.0.summary());
        print!("{}", pr.reports.1.summary());
        for n in &pr.notes {
            println!("note: {n}");
        }
        write_report(&suffixed(&a.out, "alpha"), &pr.reports.0)?;
        write_report(&suffixed(&a.out, "beta"), &pr.reports.1)?;
        println!("pair pass={}", pr.pass());
        return Ok(pr.pass());
    }
    let c = constants(a.alpha, a, true)?;
    let report = match a.delta {
        Some(delta) => {
            let m = modulus_for(a.alpha, delta, a.gamma)?;
            let lam = lambda_select(a.norm, a.grad, a.alpha, &m)?;
            certify(a.alpha, &m, lam.lambda, a.norm, &c, &opts)?
        }
        None => {
            let found = search_parameters(a.alpha, a.norm, a.grad, &c, &opts)?;
            for cand in &found {
                println!(
                    "tried {} lambda={:.6e} worst={:.3e} pass={}",
                    cand.modulus,
                    cand.lambda.lambda,
                    cand.report.worst(),
                    cand.report.pass
                );
            }
            let best = found
                .iter()
                .find(|c| c.report.pass)
                .or_else(|| found.iter().min_by(|x, y| x.report.worst().total_cmp(&y.report.worst())))
                .context("empty search grid")?;
            best.report.clone()
        }
    };
    print!("{}", report.summary());
    write_report(&a.out, &report)?;
    Ok(report.pass)
}

fn run_kernel(alpha: f64, r_max: f64, points: usize, out: Option<PathBuf>) -> anyhow::Result<bool> {
    if points < 2 || r_max.is_nan() || r_max <= 0.0 {
        bail!("need --points >= 2 and --r-max > 0");
    }
    let radii: Vec<f64> = (0..points).map(|i| r_max * i as f64 / (points - 1) as f64).collect();
    let table = kernel_k(alpha, &radii)?;
    let mut csv = String::from("radius,value,closed_form,abs_error\n");
    for (r, v) in table.radii.iter().zip(&table.values) {
        match kernel_closed_form(alpha, *r) {
            Some(c) => csv.push_str(&format!("{r:.17e},{v:.17e},{c:.17e},{:.17e}\n", (v - c).abs())),
            None => csv.push_str(&format!("{r:.17e},{v:.17e},,\n")),
        }
    }
    match out {
        Some(p) => std::fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn report_checks(results: &[CheckResult]) -> bool {
    for r in results {
        println!("{}", r.line());
    }
    results.iter().all(|r| r.passed)
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Simulate { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = RunConfig::parse(&text)?;
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            let outcome = runner::run(&cfg, true)?;
            println!(
                "steps={} t={} records={} aborted={} output={}",
                outcome.steps,
                outcome.final_state.t(),
                outcome.records.len(),
                outcome.aborted,
                cfg.output_dir.display()
            );
            Ok(!outcome.aborted)
        }
        Command::Certify(a) => run_certify(&a),
        Command::Kernel { alpha, r_max, points, out } => run_kernel(alpha, r_max, points, out),
        Command::Opcheck => Ok(report_checks(&opcheck_suite()?)),
        Command::Convergence => Ok(report_checks(&convergence_suite()?)),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
