use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use kmbias::io::{
    read_curve_file, read_dataset_file, write_dataset_file, write_km_curve_file, write_limit_curve_file,
    write_summary_file, write_text_file, CurveFile,
};
use kmbias::oracles::{km_limit_median_scenario1, uniform_grid};
use kmbias::plot::{figure_spec, render_svg, FigureId, PlotCurve, PlotSpec};
use kmbias::reference::DEFAULT_REPRODUCTION_N;
use kmbias::reproduce::{reproduce_table, TableId};
use kmbias::scenarios::{summarize_curve, DEFAULT_LAMBDA};
use kmbias::{
    admin_fraction_s2, admin_fraction_s3, censoring_breakdown, dropout_sensitivity, fit_km,
    km_limit_scenario1, median_survival, run_scenario, survival_at, CensoringPolicy, DropoutSpec, KmCurve,
    ScenarioConfig, ScenarioId, SimulationSummary,
};

#[derive(Parser)]
#[command(name = "kmbias", version, about = "Monte Carlo study of Kaplan-Meier bias under dependent dropout")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and summarise it.
    Simulate(SimulateArgs),
    /// Re-run every row of a reference table and compare.
    Reproduce(ReproduceArgs),
    /// Render KM or limit curves as SVG.
    Plot(PlotArgs),
    /// Fit a dataset with and without its dropouts.
    Analyze(AnalyzeArgs),
    /// Closed-form and quadrature reference values.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario configuration file (`key = value` lines); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    scenario: Option<u8>,
    #[arg(long)]
    n: Option<u64>,
    /// Dropout proportion.
    #[arg(long)]
    p: Option<f64>,
    /// `uniform` or `beta:A,B`.
    #[arg(long)]
    dropout: Option<DropoutSpec>,
    /// Failure rate [default: ln 2].
    #[arg(long)]
    lambda: Option<f64>,
    /// Study length, in ams.
    #[arg(long)]
    t_study: Option<f64>,
    /// Recruitment window, in ams.
    #[arg(long)]
    t_recruitment: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_summary: Option<PathBuf>,
    #[arg(long)]
    out_curve: Option<PathBuf>,
    /// Write the simulated records as CSV.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(long)]
    table: TableId,
    #[arg(long, default_value_t = DEFAULT_REPRODUCTION_N)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Long-format CSV with a pass flag per metric and per row.
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// `label=path` of a KM or limit curve CSV; repeatable.
    #[arg(long = "curve")]
    curves: Vec<String>,
    /// Simulate a published figure: 1a, 1b, 1c, 2 or 3.
    #[arg(long)]
    figure: Option<FigureId>,
    /// Sample size for `--figure`.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    title: Option<String>,
    /// Output SVG; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Dataset CSV with a `time,status` header.
    path: PathBuf,
    /// Time at which to report both fits; repeatable.
    #[arg(long, default_values_t = [1.0])]
    at: Vec<f64>,
    #[arg(long)]
    out_curve: Option<PathBuf>,
    #[arg(long)]
    out_curve_excluded: Option<PathBuf>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Fraction administratively censored in scenario 2.
    S2 {
        #[arg(long)]
        t_study: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
    },
    /// Fraction administratively censored in scenario 3.
    S3 {
        #[arg(long)]
        t_study: f64,
        #[arg(long)]
        t_recruitment: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
    },
    /// Large-sample limit of the KM curve in scenario 1.
    Limit {
        #[arg(long)]
        dropout: DropoutSpec,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = DEFAULT_LAMBDA)]
        lambda: f64,
        /// Grid end, in ams.
        #[arg(long, default_value_t = 4.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long)]
        out_curve: Option<PathBuf>,
    },
}

/// Usage errors exit with 2, everything else with 1.
enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<kmbias::Error> for Failure {
    fn from(e: kmbias::Error) -> Self {
        match e {
            kmbias::Error::Config(c) => Failure::Usage(c.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

impl From<kmbias::FormatError> for Failure {
    fn from(e: kmbias::FormatError) -> Self {
        Failure::Runtime(e.into())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Plot(a) => plot(a),
        Command::Analyze(a) => analyze(a),
        Command::Oracle(o) => oracle(o),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn build_config(a: &SimulateArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            text.parse::<ScenarioConfig>()
                .map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => {
            let number = a.scenario.ok_or_else(|| usage("`--scenario` is required without `--config`"))?;
            ScenarioConfig {
                scenario: ScenarioId::from_number(number).expect("range checked by the parser"),
                n: 1_000_000,
                p: None,
                dropout: None,
                lambda: DEFAULT_LAMBDA,
                t_study: None,
                t_recruitment: None,
                seed: 42,
            }
        }
    };
    if let Some(number) = a.scenario {
        cfg.scenario = ScenarioId::from_number(number).expect("range checked by the parser");
    }
    cfg.n = a.n.unwrap_or(cfg.n);
    cfg.p = a.p.or(cfg.p);
    cfg.dropout = a.dropout.or(cfg.dropout);
    cfg.lambda = a.lambda.unwrap_or(cfg.lambda);
    cfg.t_study = a.t_study.or(cfg.t_study);
    cfg.t_recruitment = a.t_recruitment.or(cfg.t_recruitment);
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn fmt_summary(cfg: &ScenarioConfig, s: &SimulationSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}, n = {}, seed = {}", cfg.scenario.number(), s.n, cfg.seed);
    let _ = writeln!(out, "% censored      {:.2}", s.pct_censored_total);
    let _ = writeln!(out, "  dropout       {:.2}", s.pct_dropout);
    let _ = writeln!(out, "  administrative {:.2}", s.pct_administrative);
    let _ = writeln!(out, "% failures      {:.2}", s.pct_failures);
    let mark = if s.s_at_ams_extrapolated { " (beyond last observed time)" } else { "" };
    let _ = writeln!(out, "S(ams)          {:.4}{mark}", s.s_at_ams);
    match s.ms_over_ams {
        Some(m) => {
            let _ = writeln!(out, "ms/ams          {m:.4}");
        }
        None => {
            let _ = writeln!(out, "ms/ams          - (curve stays above 0.5)");
        }
    }
    out
}

fn simulate(a: SimulateArgs) -> Result<ExitCode, Failure> {
    let cfg = build_config(&a)?;
    let data = run_scenario(&cfg).map_err(kmbias::Error::from)?;
    let curve = fit_km(&data, CensoringPolicy::AllCensoredEqual).map_err(kmbias::Error::from)?;
    let summary = summarize_curve(&data, &curve, cfg.lambda).map_err(kmbias::Error::from)?;
    print!("{}", fmt_summary(&cfg, &summary));
    if let Some(path) = &a.out_summary {
        write_summary_file(path, &summary)?;
    }
    if let Some(path) = &a.out_curve {
        write_km_curve_file(path, &curve)?;
    }
    if let Some(path) = &a.dump {
        write_dataset_file(path, &data)?;
    }
    if let Some(path) = &a.svg {
        let ams = cfg.ams();
        let mut spec = PlotSpec::new(format!("Scenario {}, n = {}", cfg.scenario.number(), cfg.n))
            .with_curve(PlotCurve::km("KM estimate", &curve));
        spec.x_range = (0.0, 4.0 * ams);
        spec.ams_guide = ams;
        write_text_file(path, &render_svg(&spec).map_err(kmbias::Error::from)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn reproduce(a: ReproduceArgs) -> Result<ExitCode, Failure> {
    let report = reproduce_table(a.table, a.n, a.seed)?;
    print!("{}", report.to_markdown());
    if let Some(path) = &a.out_csv {
        write_text_file(path, &report.to_csv())?;
    }
    Ok(if report.overall_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn load_curve(arg: &str) -> Result<PlotCurve, Failure> {
    let (label, path) = match arg.split_once('=') {
        Some((label, path)) if !label.is_empty() => (label.to_string(), PathBuf::from(path)),
        _ => {
            let path = PathBuf::from(arg);
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
            (stem.unwrap_or_else(|| arg.to_string()), path)
        }
    };
    Ok(match read_curve_file(&path)? {
        CurveFile::Km(c) => PlotCurve::km(label, &c),
        CurveFile::Limit(c) => PlotCurve::limit(label, &c),
    })
}

fn plot(a: PlotArgs) -> Result<ExitCode, Failure> {
    if a.figure.is_none() && a.curves.is_empty() {
        return Err(usage("give at least one `--curve label=path` or a `--figure`"));
    }
    let mut spec = match a.figure {
        Some(fig) => figure_spec(fig, a.n, a.seed)?,
        None => PlotSpec::new("Kaplan-Meier estimates"),
    };
    for arg in &a.curves {
        spec.curves.push(load_curve(arg)?);
    }
    if let Some(title) = a.title {
        spec.title = title;
    }
    let svg = render_svg(&spec).map_err(|e| usage(e.to_string()))?;
    match &a.out {
        Some(path) => write_text_file(path, &svg)?,
        None => print!("{svg}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn describe_fit(name: &str, c: &KmCurve) -> String {
    let median = median_survival(c).map_or_else(|| "-".to_string(), |m| format!("{m:.4}"));
    format!(
        "{name:<18} at risk {:>9}  steps {:>9}  last time {:>10.4}  final S {:.4}  median {median}",
        c.n_total(),
        c.len(),
        c.last_observed(),
        c.final_survival()
    )
}

fn analyze(a: AnalyzeArgs) -> Result<ExitCode, Failure> {
    if let Some(bad) = a.at.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(usage(format!("invalid value for `--at`: {bad} is not a non-negative time")));
    }
    let data = read_dataset_file(&a.path)?;
    let breakdown = censoring_breakdown(&data).map_err(kmbias::Error::from)?;
    let c = breakdown.counts;
    println!("{}: {} records", a.path.display(), data.len());
    println!("failures        {:>9}  {:6.2}%", c.failures, breakdown.pct_failures);
    println!("dropout         {:>9}  {:6.2}%", c.dropout, breakdown.pct_dropout);
    println!("administrative  {:>9}  {:6.2}%", c.administrative, breakdown.pct_administrative);

    // Gaps are reported at the requested times and on a 200-point grid
    // over the span both fits observe.
    let all = fit_km(&data, CensoringPolicy::AllCensoredEqual).map_err(kmbias::Error::from)?;
    let span = match fit_km(&data, CensoringPolicy::ExcludeDropouts) {
        Ok(excl) => all.last_observed().min(excl.last_observed()),
        Err(_) => all.last_observed(),
    };
    let grid = uniform_grid(span, 200);
    let mut times = a.at.clone();
    times.extend(&grid);
    let report = match dropout_sensitivity(&data, &times) {
        Ok(r) => r,
        Err(kmbias::EstimationError::OnlyDropouts) => {
            println!("{}", describe_fit("all subjects", &all));
            println!("dropout excluded: no records remain");
            return write_analyze_curves(&a, &all, None);
        }
        Err(e) => return Err(kmbias::Error::from(e).into()),
    };
    println!("{}", describe_fit("all subjects", &report.curve_all));
    println!("{}", describe_fit("dropout excluded", &report.curve_no_dropout));
    for g in &report.gaps[..a.at.len()] {
        let flag = |c: &KmCurve| {
            if survival_at(c, g.time).is_ok_and(|e| e.extrapolated) {
                "*"
            } else {
                ""
            }
        };
        println!(
            "S({}) all subjects {:.4}{}  dropout excluded {:.4}{}  gap {:.4}",
            g.time,
            g.all_subjects,
            flag(&report.curve_all),
            g.no_dropout,
            flag(&report.curve_no_dropout),
            g.gap
        );
    }
    if let Some(worst) = report.gaps.iter().max_by(|x, y| x.gap.total_cmp(&y.gap)) {
        println!("max |gap| {:.4} at t = {:.4}", report.max_abs_gap, worst.time);
    }
    write_analyze_curves(&a, &report.curve_all, Some(&report.curve_no_dropout))
}

fn write_analyze_curves(a: &AnalyzeArgs, all: &KmCurve, excl: Option<&KmCurve>) -> Result<ExitCode, Failure> {
    if let Some(path) = &a.out_curve {
        write_km_curve_file(path, all)?;
    }
    if let (Some(path), Some(c)) = (&a.out_curve_excluded, excl) {
        write_km_curve_file(path, c)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(o: OracleCommand) -> Result<ExitCode, Failure> {
    let domain = |e: kmbias::DomainError| usage(e.to_string());
    let ams = |lambda: f64| std::f64::consts::LN_2 / lambda;
    match o {
        OracleCommand::S2 { t_study, lambda } => {
            let f = admin_fraction_s2(lambda, t_study * ams(lambda)).map_err(domain)?;
            println!("{f:.6}");
        }
        OracleCommand::S3 {
            t_study,
            t_recruitment,
            lambda,
        } => {
            let a = ams(lambda);
            let f = admin_fraction_s3(lambda, t_study * a, t_recruitment * a).map_err(domain)?;
            println!("{f:.6}");
        }
        OracleCommand::Limit {
            dropout,
            p,
            lambda,
            t_max,
            points,
            out_curve,
        } => {
            if !(t_max.is_finite() && t_max > 0.0) || points < 2 {
                return Err(usage("`--t-max` must be positive and `--points` at least 2"));
            }
            let a = ams(lambda);
            let mut grid = uniform_grid(t_max * a, points);
            // include 1 ams so S(ams) is exact rather than interpolated
            if let Err(i) = grid.binary_search_by(|t| t.total_cmp(&a)) {
                if a < t_max * a {
                    grid.insert(i, a);
                }
            }
            let curve = km_limit_scenario1(&dropout, p, lambda, &grid).map_err(domain)?;
            let at_ams = grid.iter().position(|&t| t == a).map(|i| curve.survival[i]);
            let median = km_limit_median_scenario1(&dropout, p, lambda).map_err(domain)?;
            if let Some(s) = at_ams {
                println!("S(ams)   {s:.4}");
            }
            println!("ms/ams   {:.4}", median / a);
            if let Some(path) = &out_curve {
                write_limit_curve_file(path, &curve)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
