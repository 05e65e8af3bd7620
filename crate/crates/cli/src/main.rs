mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asymdist::estimation::{fit_fixed_p, hill_climb_p};
use asymdist::hmm::{
    fit_pipeline, forward_backward, state_entropy_report, transition_entropy, EmConfig, HmmModel,
    HISTOGRAM_BINS,
};
use asymdist::ingest::{
    load_quotes_csv, log_roi_series, synthetic_model, synthetic_quotes, Calendar, DatedObservations,
};
use asymdist::regression::{self, linspace, replicate_study, simulate, StudyConfig};
use asymdist::{
    Asymmetric, AsymmetricDensity, Family, FitResult, HillClimbConfig, SampleSet, Symmetry,
};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use output::{sig6, write_atomic, CliError, CliResult};

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "asymdist",
    version,
    about = "Asymmetric Laplace and normal distributions: evaluation, fitting, regression and HMMs"
)]
struct Cli {
    /// Seed for every random draw
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Print machine-readable JSON with full precision
    #[arg(long, global = true)]
    json: bool,
    /// Directory for report files
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate, sample or fit a single distribution
    #[command(subcommand)]
    Dist(DistCmd),
    /// Linear regression with asymmetric-normal noise
    #[command(subcommand)]
    Regress(RegressCmd),
    /// Hidden Markov models on daily log-returns
    #[command(subcommand)]
    Hmm(HmmCmd),
    /// Convert a `date,adj_close` quote file into a `date,log_roi` series
    Ingest(IngestArgs),
    /// Generate weekday-only synthetic quotes from the bundled 5-regime model
    Synth(SynthArgs),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct DistParams {
    #[arg(long)]
    family: Family,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// Scale of the normal family
    #[arg(long)]
    sigma: Option<f64>,
    /// Rate of the Laplace family
    #[arg(long)]
    lambda: Option<f64>,
    /// Probability mass left of `mu`
    #[arg(long, default_value_t = 0.5)]
    p: f64,
}

#[derive(Subcommand)]
enum DistCmd {
    /// Print pdf and cdf at each `--x`, quantiles at each `--q`
    #[command(allow_negative_numbers = true)]
    Eval {
        #[command(flatten)]
        params: DistParams,
        #[arg(long)]
        x: Vec<f64>,
        #[arg(long)]
        q: Vec<f64>,
    },
    /// Draw samples
    #[command(allow_negative_numbers = true)]
    Sample {
        #[command(flatten)]
        params: DistParams,
        #[arg(long)]
        n: usize,
        /// Write a `value` CSV into the output directory instead of printing
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maximum-likelihood fit to a `value` CSV
    Fit {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        input: PathBuf,
        /// Hold p fixed instead of hill-climbing it
        #[arg(long)]
        fix_p: Option<f64>,
    },
}

#[derive(Subcommand)]
enum RegressCmd {
    /// Simulate `y = slope x + intercept + eps` on equidistant x in [-1, 1]
    #[command(allow_negative_numbers = true)]
    Simulate {
        #[arg(long)]
        slope: f64,
        #[arg(long)]
        intercept: f64,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 101)]
        n: usize,
        /// Write an `x,y` CSV into the output directory instead of printing
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a line to an `x,y` CSV
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "asymmetric")]
        family: Symmetry,
    },
    /// Replicated simulation study; writes study.csv and study_summary.json
    Study {
        /// `start:end:step` or a comma-separated list
        #[arg(long, default_value = "0.1:0.9:0.1")]
        p_grid: String,
        #[arg(long, default_value_t = 100)]
        runs: usize,
    },
}

#[derive(Args)]
struct EmArgs {
    /// Iteration cap per EM phase
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Relative log-likelihood change treated as converged
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl EmArgs {
    fn config(&self) -> EmConfig {
        EmConfig {
            max_iters: self.max_iters,
            tol: self.tol,
            ..EmConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum HmmCmd {
    /// Ingest quotes, initialise from a mixture and run Baum-Welch
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "asymmetric")]
        family: Symmetry,
        /// Model file name inside the output directory
        #[arg(long, default_value = "model.json")]
        model_out: PathBuf,
        #[command(flatten)]
        em: EmArgs,
    },
    /// Entropy tables, histogram and QQ quantiles for a fitted model
    Report {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Fit both families for a range of K; writes ll_table.csv
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 5)]
        k_max: usize,
        #[command(flatten)]
        em: EmArgs,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "log_roi.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value = "1990-01-01")]
    start: NaiveDate,
    #[arg(long, default_value = "2019-12-31")]
    end: NaiveDate,
    #[arg(long, default_value = "quotes.csv")]
    out: PathBuf,
}

struct Ctx {
    seed: u64,
    json: bool,
    output_dir: PathBuf,
}

impl Ctx {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn out_path(&self, name: &Path) -> PathBuf {
        self.output_dir.join(name)
    }

    fn print_json<T: Serialize>(&self, value: &T) -> CliResult<()> {
        println!("{}", serde_json::to_string_pretty(value)?);
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        json: cli.json,
        output_dir: cli.output_dir,
    };
    let result = match cli.command {
        Command::Dist(c) => cmd_dist(&ctx, c),
        Command::Regress(c) => cmd_regress(&ctx, c),
        Command::Hmm(c) => cmd_hmm(&ctx, c),
        Command::Ingest(a) => cmd_ingest(&ctx, a),
        Command::Synth(a) => cmd_synth(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn build_dist(p: &DistParams) -> CliResult<Asymmetric> {
    let scale = match (p.family, p.sigma, p.lambda) {
        (Family::Normal, Some(s), None) => s,
        (Family::Laplace, None, Some(l)) => l,
        (Family::Normal, _, _) => {
            return Err(CliError::usage(
                "the normal family takes --sigma (and not --lambda)",
            ))
        }
        (Family::Laplace, _, _) => {
            return Err(CliError::usage(
                "the Laplace family takes --lambda (and not --sigma)",
            ))
        }
    };
    Ok(Asymmetric::new(p.family, p.mu, scale, p.p)?)
}

fn read_column(path: &Path, name: &str) -> CliResult<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let idx = rdr
        .headers()?
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::usage(format!("{}: missing `{name}` column", path.display())))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let v: f64 = rec.get(idx).and_then(|s| s.parse().ok()).ok_or_else(|| {
            CliError::usage(format!("{} line {line}: bad number", path.display()))
        })?;
        out.push(v);
    }
    Ok(out)
}

fn write_values_csv(
    w: &mut dyn Write,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> CliResult<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for r in rows {
        csv.write_record(&r)?;
    }
    csv.flush()?;
    Ok(())
}

fn cmd_dist(ctx: &Ctx, cmd: DistCmd) -> CliResult<()> {
    match cmd {
        DistCmd::Eval { params, x, q } => {
            let d = build_dist(&params)?;
            if x.is_empty() && q.is_empty() {
                return Err(CliError::usage("give at least one --x or --q"));
            }
            let mut points = Vec::new();
            for &xi in &x {
                points.push(
                    json!({"x": xi, "pdf": d.pdf(xi)?, "ln_pdf": d.ln_pdf(xi)?, "cdf": d.cdf(xi)?}),
                );
            }
            let mut quantiles = Vec::new();
            for &qi in &q {
                quantiles.push(json!({"q": qi, "quantile": d.quantile(qi)?}));
            }
            if ctx.json {
                ctx.print_json(
                    &json!({"distribution": d, "points": points, "quantiles": quantiles}),
                )?;
            } else {
                for &xi in &x {
                    println!(
                        "x={} pdf={} cdf={}",
                        sig6(xi),
                        sig6(d.pdf(xi)?),
                        sig6(d.cdf(xi)?)
                    );
                }
                for &qi in &q {
                    println!("q={} quantile={}", sig6(qi), sig6(d.quantile(qi)?));
                }
            }
        }
        DistCmd::Sample { params, n, out } => {
            let d = build_dist(&params)?;
            let values = d.sample(&mut ctx.rng(), n);
            match out {
                Some(name) => {
                    let path = ctx.out_path(&name);
                    write_atomic(&path, |w| {
                        write_values_csv(w, &["value"], values.iter().map(|v| vec![v.to_string()]))
                    })?;
                    if ctx.json {
                        ctx.print_json(&json!({"written": path, "n": n}))?;
                    } else {
                        println!("wrote {} samples to {}", n, path.display());
                    }
                }
                None if ctx.json => ctx.print_json(&json!({"values": values}))?,
                None => values.iter().for_each(|v| println!("{}", sig6(*v))),
            }
        }
        DistCmd::Fit {
            family,
            input,
            fix_p,
        } => {
            let samples = SampleSet::new(read_column(&input, "value")?)?;
            let fit = match fix_p {
                Some(p) => fit_fixed_p(&samples, family, p)?,
                None => hill_climb_p(&samples, family, &HillClimbConfig::default())?.fit,
            };
            if ctx.json {
                ctx.print_json(&fit)?;
            } else {
                print_fit(&fit);
            }
        }
    }
    Ok(())
}

fn print_fit(fit: &FitResult) {
    let d = &fit.dist;
    let scale_name = match d.family() {
        Family::Laplace => "lambda",
        Family::Normal => "sigma",
    };
    println!("family {}", d.family());
    println!("mu {}", sig6(d.mu()));
    println!("{scale_name} {}", sig6(d.scale()));
    println!("p {}", sig6(d.p()));
    println!("log_likelihood {}", sig6(fit.log_likelihood));
    println!("partition_index {}", fit.partition_index);
}

fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::usage(format!("bad p grid `{text}`"));
    let tidy = |v: f64| (v * 1e12).round() / 1e12;
    if let Some((a, rest)) = text.split_once(':') {
        let (b, step) = rest.split_once(':').ok_or_else(bad)?;
        let (a, b, step): (f64, f64, f64) = (
            a.parse().map_err(|_| bad())?,
            b.parse().map_err(|_| bad())?,
            step.parse().map_err(|_| bad())?,
        );
        if !(step > 0.0) || b < a {
            return Err(bad());
        }
        let count = ((b - a) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| tidy(a + i as f64 * step)).collect())
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect()
    }
}

fn cmd_regress(ctx: &Ctx, cmd: RegressCmd) -> CliResult<()> {
    match cmd {
        RegressCmd::Simulate {
            slope,
            intercept,
            sigma,
            p,
            n,
            out,
        } => {
            let xs = linspace(-1.0, 1.0, n);
            let data = simulate(&[slope, intercept], sigma, p, &xs, &mut ctx.rng())?;
            match out {
                Some(name) => {
                    let path = ctx.out_path(&name);
                    write_atomic(&path, |w| {
                        write_values_csv(
                            w,
                            &["x", "y"],
                            data.iter().map(|(x, y)| vec![x.to_string(), y.to_string()]),
                        )
                    })?;
                    if ctx.json {
                        ctx.print_json(&json!({"written": path, "n": n}))?;
                    } else {
                        println!("wrote {} points to {}", n, path.display());
                    }
                }
                None if ctx.json => ctx.print_json(&json!({"points": data}))?,
                None => data
                    .iter()
                    .for_each(|(x, y)| println!("{} {}", sig6(*x), sig6(*y))),
            }
        }
        RegressCmd::Fit { input, family } => {
            let xs = read_column(&input, "x")?;
            let ys = read_column(&input, "y")?;
            let data: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
            let fit = regression::fit(&data, family)?;
            if ctx.json {
                ctx.print_json(&fit)?;
            } else {
                let m = &fit.model;
                println!("slope {}", sig6(m.beta[0]));
                println!("intercept {}", sig6(m.beta[1]));
                println!("sigma {}", sig6(m.noise.sigma()));
                println!("p {}", sig6(m.noise.p()));
                println!("log_likelihood {}", sig6(fit.log_likelihood));
                println!("rounds {} converged {}", fit.rounds, fit.converged);
            }
        }
        RegressCmd::Study { p_grid, runs } => {
            let cfg = StudyConfig::new(parse_grid(&p_grid)?, runs, ctx.seed);
            let report = replicate_study(&cfg)?;
            let summary = report.summary();
            let csv_path = ctx.out_path(Path::new("study.csv"));
            let json_path = ctx.out_path(Path::new("study_summary.json"));
            write_atomic(&csv_path, |w| Ok(report.write_csv(w)?))?;
            write_atomic(&json_path, |w| {
                serde_json::to_writer_pretty(&mut *w, &json!({"config": cfg, "summary": summary}))?;
                writeln!(w)?;
                Ok(())
            })?;
            if ctx.json {
                ctx.print_json(&summary)?;
            } else {
                println!(
                    "p_true mean_p_hat p_hat_2.5% p_hat_97.5% mean_ll_sym mean_ll_asym asym>=sym"
                );
                for s in &summary {
                    println!(
                        "{} {} {} {} {} {} {}",
                        sig6(s.p_true),
                        sig6(s.mean_p_hat),
                        sig6(s.p_hat_interval[0]),
                        sig6(s.p_hat_interval[1]),
                        sig6(s.mean_ll_sym),
                        sig6(s.mean_ll_asym),
                        sig6(s.asym_ge_sym_fraction)
                    );
                }
                println!("wrote {} and {}", csv_path.display(), json_path.display());
            }
        }
    }
    Ok(())
}

fn load_observations(input: &Path) -> CliResult<DatedObservations> {
    let quotes = load_quotes_csv(input)?;
    Ok(log_roi_series(&quotes, Calendar::Daily)?)
}

fn cmd_hmm(ctx: &Ctx, cmd: HmmCmd) -> CliResult<()> {
    match cmd {
        HmmCmd::Fit {
            input,
            k,
            family,
            model_out,
            em,
        } => {
            let obs = load_observations(&input)?;
            let fit = fit_pipeline(&obs.series, k, family, &mut ctx.rng(), &em.config())?.fit;
            let model_path = ctx.out_path(&model_out);
            write_atomic(&model_path, |w| {
                serde_json::to_writer_pretty(&mut *w, &fit.model)?;
                writeln!(w)?;
                Ok(())
            })?;
            let trace_path = ctx.out_path(Path::new("trace.csv"));
            write_atomic(&trace_path, |w| {
                write_values_csv(
                    w,
                    &["iteration", "phase", "log_likelihood"],
                    fit.trace.iter().map(|s| {
                        vec![
                            s.iteration.to_string(),
                            s.phase.to_string(),
                            s.log_likelihood.to_string(),
                        ]
                    }),
                )
            })?;
            if ctx.json {
                ctx.print_json(&json!({
                    "K": k,
                    "family": family,
                    "log_likelihood": fit.log_likelihood,
                    "converged": fit.converged,
                    "iterations": fit.trace.len(),
                    "model": fit.model,
                }))?;
            } else {
                println!("K {k} family {family}");
                println!("log_likelihood {}", sig6(fit.log_likelihood));
                println!("iterations {} converged {}", fit.trace.len(), fit.converged);
                for (i, e) in fit.model.emissions().iter().enumerate() {
                    println!(
                        "state {i} mu {} sigma {} p {}",
                        sig6(e.mu()),
                        sig6(e.sigma()),
                        sig6(e.p())
                    );
                }
                println!(
                    "wrote {} and {}",
                    model_path.display(),
                    trace_path.display()
                );
            }
        }
        HmmCmd::Report { model, input } => {
            let text = std::fs::read_to_string(&model)?;
            let model: HmmModel = serde_json::from_str(&text)?;
            let model = model.sorted_by_mu();
            let obs = load_observations(&input)?;
            let summary = forward_backward(&model, &obs.series);
            let k = model.k();
            let entropy = transition_entropy(&model);
            let observed = state_entropy_report(&summary, k, false);
            let all = state_entropy_report(&summary, k, true);

            let entropy_path = ctx.out_path(Path::new("entropy.csv"));
            write_atomic(&entropy_path, |w| {
                write_values_csv(
                    w,
                    &["state", "entropy_bits"],
                    entropy
                        .iter()
                        .enumerate()
                        .map(|(i, h)| vec![i.to_string(), h.to_string()]),
                )
            })?;
            let hist_path = ctx.out_path(Path::new("histogram.csv"));
            write_atomic(&hist_path, |w| {
                write_values_csv(
                    w,
                    &["bin_lower", "bin_upper", "count_observed", "count_all"],
                    (0..HISTOGRAM_BINS).map(|b| {
                        vec![
                            (b as f64 / HISTOGRAM_BINS as f64).to_string(),
                            ((b + 1) as f64 / HISTOGRAM_BINS as f64).to_string(),
                            observed.histogram[b].to_string(),
                            all.histogram[b].to_string(),
                        ]
                    }),
                )
            })?;
            let qq_path = ctx.out_path(Path::new("qq.csv"));
            write_atomic(&qq_path, |w| {
                write_values_csv(
                    w,
                    &["percentile", "observed", "all"],
                    observed
                        .quantiles
                        .iter()
                        .zip(&all.quantiles)
                        .map(|((q, a), (_, b))| vec![q.to_string(), a.to_string(), b.to_string()]),
                )
            })?;
            if ctx.json {
                ctx.print_json(&json!({
                    "log_likelihood": summary.log_likelihood,
                    "transition_entropy_bits": entropy,
                    "histogram_observed": observed.histogram,
                    "histogram_all": all.histogram,
                }))?;
            } else {
                println!("log_likelihood {}", sig6(summary.log_likelihood));
                println!("state entropy_bits");
                for (i, h) in entropy.iter().enumerate() {
                    println!("{i} {}", sig6(*h));
                }
                println!(
                    "wrote {}, {} and {}",
                    entropy_path.display(),
                    hist_path.display(),
                    qq_path.display()
                );
            }
        }
        HmmCmd::Compare {
            input,
            k_min,
            k_max,
            em,
        } => {
            if k_min < 2 || k_max < k_min {
                return Err(CliError::usage("need 2 <= k-min <= k-max"));
            }
            let obs = load_observations(&input)?;
            let cfg = em.config();
            let mut rows = Vec::new();
            for k in k_min..=k_max {
                let sym =
                    fit_pipeline(&obs.series, k, Symmetry::Symmetric, &mut ctx.rng(), &cfg)?.fit;
                let asym =
                    fit_pipeline(&obs.series, k, Symmetry::Asymmetric, &mut ctx.rng(), &cfg)?.fit;
                rows.push((k, sym.log_likelihood, asym.log_likelihood));
            }
            let path = ctx.out_path(Path::new("ll_table.csv"));
            write_atomic(&path, |w| {
                write_values_csv(
                    w,
                    &["K", "ll_sym", "ll_asym"],
                    rows.iter()
                        .map(|(k, s, a)| vec![k.to_string(), s.to_string(), a.to_string()]),
                )
            })?;
            if ctx.json {
                let table: Vec<_> = rows
                    .iter()
                    .map(|(k, s, a)| json!({"K": k, "ll_sym": s, "ll_asym": a}))
                    .collect();
                ctx.print_json(&table)?;
            } else {
                println!("K ll_sym ll_asym");
                for (k, s, a) in &rows {
                    println!("{k} {} {}", sig6(*s), sig6(*a));
                }
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn cmd_ingest(ctx: &Ctx, args: IngestArgs) -> CliResult<()> {
    let obs = load_observations(&args.input)?;
    let path = ctx.out_path(&args.out);
    write_atomic(&path, |w| Ok(obs.write_csv(w)?))?;
    let n = obs.series.len();
    let present = obs.series.observed_count();
    if ctx.json {
        ctx.print_json(&json!({"written": path, "slots": n, "observed": present}))?;
    } else {
        println!("wrote {} ({n} slots, {present} observed)", path.display());
    }
    Ok(())
}

fn cmd_synth(ctx: &Ctx, args: SynthArgs) -> CliResult<()> {
    let quotes = synthetic_quotes(args.start, args.end, &synthetic_model(), &mut ctx.rng())?;
    let path = ctx.out_path(&args.out);
    write_atomic(&path, |w| Ok(quotes.write_csv(w)?))?;
    if ctx.json {
        ctx.print_json(&json!({"written": path, "quotes": quotes.len()}))?;
    } else {
        println!("wrote {} quotes to {}", quotes.len(), path.display());
    }
    Ok(())
}
