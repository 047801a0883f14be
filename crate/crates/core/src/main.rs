use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use noisy_commit::capacity::{
    broadcast_capacity_with, entropy_set_function, sum_rate_capacity_with, CapacityResult, Collusion, Constraint,
    InputDistribution, OptimizerConfig,
};
use noisy_commit::channel::{injectivity_check, non_redundancy_check, ChannelFile, ChannelKind};
use noisy_commit::infotheory::{Pmf, Subset};
use noisy_commit::protocol::{
    binding_attack, broadcast_trials, calibrated_eps, honest_trials, trial_seed, AttackReport, BindingStrategy,
    BroadcastProtocol, MacProtocol, ProtocolParams,
};
use noisy_commit::{Error, Result, VERSION};

#[derive(Parser)]
#[command(name = "noisy-commit", version, about = "Commitment over noisy multiple-access and broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Non-redundancy of a channel. Exit 0 if non-redundant, 1 if redundant.
    Check {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Commitment capacity and the region constraints at the optimum, as CSV.
    Capacity(CapacityArgs),
    /// Monte Carlo runs of the commit/reveal scheme, as CSV.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    /// Colluding bidders, joint input laws.
    Colluding,
    /// Non-colluding bidders, product input laws.
    Product,
    /// One bidder, several verifiers.
    Broadcast,
}

#[derive(Args)]
struct CapacityArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Colluding)]
    mode: Mode,
    /// Seed for the optimizer restarts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Colluding)]
    mode: Mode,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = ProtocolParams::DEFAULT_MU)]
    mu: f64,
    #[arg(long, default_value_t = ProtocolParams::DEFAULT_ETA)]
    eta: f64,
    /// Typicality tolerance; calibrated from the channel and n when omitted.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = ProtocolParams::DEFAULT_SECURITY)]
    security: u32,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Binding attack on bidder 1: resample, resample-retained or
    /// flip:K[:challenge|straddle|retained|anywhere]. In broadcast mode the
    /// only attack is `dishonest`.
    #[arg(long)]
    attack: Option<String>,
    /// Broadcast mode: comma-separated 1-based verifiers still present at
    /// reveal. Defaults to all.
    #[arg(long, value_delimiter = ',')]
    available: Option<Vec<usize>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Fully resolved run configuration, embedded in every output file.
#[derive(Serialize)]
struct ExperimentConfig {
    subcommand: &'static str,
    channel: String,
    mode: Mode,
    #[serde(skip_serializing_if = "Option::is_none")]
    params: Option<ProtocolParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trials: Option<usize>,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    attack: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    available: Option<Vec<usize>>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Check { channel } => check(&channel),
        Command::Capacity(args) => capacity(&args).map(|()| ExitCode::SUCCESS),
        Command::Simulate(args) => simulate(&args).map(|()| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn load(path: &Path) -> Result<ChannelKind> {
    let located = |e: Error| {
        let msg = match e {
            Error::Parse(m) => m,
            other => other.to_string(),
        };
        Error::Parse(format!("{}: {msg}", path.display()))
    };
    ChannelFile::read(path).and_then(|f| f.to_channel()).map_err(located)
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros dropped.
fn fmt_float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let fixed = format!("{x:.*}", (14 - exp) as usize);
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_pmf(p: &Pmf) -> String {
    p.probs().iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(";")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn check(path: &Path) -> Result<ExitCode> {
    let kind = load(path)?;
    let w = kind.flat();
    let report = non_redundancy_check(w);
    let injective = injectivity_check(w);
    println!("inputs: {}", w.input_size());
    println!("outputs: {}", w.output_size());
    println!("non-redundant: {}", report.non_redundant);
    println!("margin: {}", fmt_float(report.margin_eta));
    println!("injective-sufficient: {injective}");
    let per_input: Vec<String> = report.per_input.iter().map(|v| fmt_float(*v)).collect();
    println!("per-input margins: {}", per_input.join(","));
    if let Some(wit) = &report.witness {
        println!("witness: input {} = mixture {}", wit.input, fmt_pmf(&wit.mixture));
    }
    Ok(if report.non_redundant { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn emit(out: Option<&Path>, config: &ExperimentConfig, extra: &[String], body: Vec<u8>) -> Result<()> {
    let mut text = Vec::new();
    writeln!(text, "# noisy-commit {VERSION}")?;
    writeln!(text, "# config {}", serde_json::to_string(config)?)?;
    for line in extra {
        writeln!(text, "# {line}")?;
    }
    text.extend(body);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(&text)?,
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn capacity(args: &CapacityArgs) -> Result<()> {
    let kind = load(&args.channel)?;
    let config = OptimizerConfig { seed: args.seed, ..OptimizerConfig::default() };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kind", "subset", "value", "argmax", "grid_value", "warning"]).map_err(csv_error)?;
    let row = |w: &mut csv::Writer<Vec<u8>>, fields: [&str; 6]| w.write_record(fields).map_err(csv_error);
    let headline = |w: &mut csv::Writer<Vec<u8>>, label: &str, subset: &str, r: &CapacityResult| {
        let argmax = match &r.factors {
            Some(fs) => fs.iter().map(fmt_pmf).collect::<Vec<_>>().join("|"),
            None => fmt_pmf(&r.argmax),
        };
        let grid = r.grid_value.map(fmt_float).unwrap_or_default();
        row(w, [label, subset, &fmt_float(r.value), &argmax, &grid, &r.warnings.join(" | ")])
    };
    match args.mode {
        Mode::Colluding | Mode::Product => {
            let m = kind
                .as_mac()
                .ok_or_else(|| Error::InvalidParameter("this mode needs a channel with a single output".into()))?;
            let collusion = if args.mode == Mode::Colluding { Collusion::Colluding } else { Collusion::NonColluding };
            let r = sum_rate_capacity_with(&m, collusion, &config);
            let full = Subset::full(m.users());
            headline(&mut w, "sum_rate", &full.to_string(), &r)?;
            let input = match &r.factors {
                Some(fs) => InputDistribution::product(fs)?,
                None => InputDistribution::joint(m.input_sizes().to_vec(), r.argmax.clone())?,
            };
            let f = entropy_set_function(&m, &input)?;
            for t in Subset::nonempty(m.users()) {
                row(&mut w, ["constraint", &t.to_string(), &fmt_float(f.get(t)), "", "", ""])?;
            }
        }
        Mode::Broadcast => {
            let bc = kind
                .as_broadcast()
                .ok_or_else(|| Error::InvalidParameter("broadcast mode needs a channel with a single input".into()))?;
            let r = broadcast_capacity_with(&bc, &config)?;
            headline(&mut w, "capacity", "", &r)?;
            for b in 0..bc.receivers() {
                let h = noisy_commit::capacity::equivocation(&bc.marginal(b)?, &r.argmax)?;
                row(&mut w, ["constraint", &format!("Y{}", b + 1), &fmt_float(h), "", "", ""])?;
            }
        }
    }
    let body = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let cfg = ExperimentConfig {
        subcommand: "capacity",
        channel: args.channel.display().to_string(),
        mode: args.mode,
        params: None,
        rates: None,
        trials: None,
        seed: args.seed,
        attack: None,
        available: None,
    };
    emit(args.out.as_deref(), &cfg, &[], body)
}

fn params_for(args: &SimulateArgs, eps: f64) -> Result<ProtocolParams> {
    let params = ProtocolParams { n: args.n, mu: args.mu, eta: args.eta, eps, security: args.security };
    params.validate()?;
    Ok(params)
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    if let Some(eps) = args.eps {
        params_for(args, eps)?;
    }
    let kind = load(&args.channel)?;
    let mut notes = Vec::new();
    let (report, attacked, params, rates, available) = match args.mode {
        Mode::Colluding | Mode::Product => {
            if args.available.is_some() {
                return Err(Error::InvalidParameter("--available only applies to broadcast mode".into()));
            }
            let strategy = args.attack.as_deref().map(str::parse::<BindingStrategy>).transpose()?;
            let m = kind
                .as_mac()
                .ok_or_else(|| Error::InvalidParameter("this mode needs a channel with a single output".into()))?;
            let (collusion, constraint) = match args.mode {
                Mode::Colluding => (Collusion::Colluding, Constraint::Joint),
                _ => (Collusion::NonColluding, Constraint::Product),
            };
            let input = InputDistribution::uniform(m.input_sizes().to_vec(), constraint)?;
            let eps = match args.eps {
                Some(e) => e,
                None => calibrated_eps(&MacProtocol::typicality_targets(&m, &input, collusion)?, args.n)?,
            };
            let params = params_for(args, eps)?;
            let (protocol, sel) = MacProtocol::with_selected_rates(m, input, collusion, params)?;
            for d in &sel.diagnostics {
                eprintln!("warning: {d}");
                notes.push(format!("warning {d}"));
            }
            let report = match strategy {
                Some(s) => binding_attack(&protocol, s, args.trials, args.seed)?,
                None => honest_trials(&protocol, args.trials, args.seed)?,
            };
            (report, strategy.is_some(), params, protocol.rates().to_vec(), None)
        }
        Mode::Broadcast => {
            let dishonest = match args.attack.as_deref() {
                None => false,
                Some("dishonest") => true,
                Some(other) => {
                    return Err(Error::InvalidParameter(format!("broadcast mode supports only 'dishonest', not '{other}'")))
                }
            };
            let bc = kind
                .as_broadcast()
                .ok_or_else(|| Error::InvalidParameter("broadcast mode needs a channel with a single input".into()))?;
            let available: Vec<usize> = match &args.available {
                Some(list) => list
                    .iter()
                    .map(|b| {
                        if *b == 0 || *b > bc.receivers() {
                            Err(Error::InvalidParameter(format!("verifier {b} out of range 1..={}", bc.receivers())))
                        } else {
                            Ok(b - 1)
                        }
                    })
                    .collect::<Result<_>>()?,
                None => (0..bc.receivers()).collect(),
            };
            let input = Pmf::uniform(bc.input_size())?;
            let eps = match args.eps {
                Some(e) => e,
                None => calibrated_eps(&BroadcastProtocol::typicality_targets(&bc, &input)?, args.n)?,
            };
            let params = params_for(args, eps)?;
            let protocol = BroadcastProtocol::with_selected_rate(bc, input, params)?;
            let report = broadcast_trials(&protocol, args.trials, args.seed, &available, dishonest)?;
            let shown = available.iter().map(|b| b + 1).collect();
            (report, dishonest, params, vec![protocol.rate()], Some(shown))
        }
    };

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "row",
        "trial",
        "seed",
        "accepted",
        "typical",
        "tag_ok",
        "pad_ok",
        "attack_success",
        "concealment_statistic",
        "rate",
        "wilson_low",
        "wilson_high",
    ])
    .map_err(csv_error)?;
    for (t, o) in report.outcomes.iter().enumerate() {
        let success = if attacked { flag(o.success) } else { "" };
        w.write_record([
            "trial",
            &t.to_string(),
            &trial_seed(args.seed, t as u64).to_string(),
            flag(o.accepted),
            flag(o.typical),
            flag(o.tag_ok),
            flag(o.pad_ok),
            success,
            &o.statistic.to_string(),
            "",
            "",
            "",
        ])
        .map_err(csv_error)?;
    }
    if report.trials > 0 {
        write_summary(&mut w, "summary:accepted", &acceptance(&report))?;
        if attacked {
            write_summary(&mut w, "summary:attack_success", &report)?;
        }
    }
    let body = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let cfg = ExperimentConfig {
        subcommand: "simulate",
        channel: args.channel.display().to_string(),
        mode: args.mode,
        params: Some(params),
        rates: Some(rates),
        trials: Some(args.trials),
        seed: args.seed,
        attack: args.attack.clone(),
        available,
    };
    emit(args.out.as_deref(), &cfg, &notes, body)
}

/// The same outcomes, counting acceptance rather than attack success.
fn acceptance(report: &AttackReport) -> AttackReport {
    let accepted = report.outcomes.iter().filter(|o| o.accepted).count();
    let (lo, hi) = noisy_commit::protocol::wilson_interval(accepted, report.trials);
    AttackReport {
        strategy: report.strategy.clone(),
        trials: report.trials,
        successes: accepted,
        rate: accepted as f64 / report.trials as f64,
        wilson_low: lo,
        wilson_high: hi,
        outcomes: Vec::new(),
    }
}

fn write_summary(w: &mut csv::Writer<Vec<u8>>, label: &str, r: &AttackReport) -> Result<()> {
    w.write_record([
        label,
        "",
        "",
        "",
        "",
        "",
        "",
        "",
        &r.successes.to_string(),
        &fmt_float(r.rate),
        &fmt_float(r.wilson_low),
        &fmt_float(r.wilson_high),
    ])
    .map_err(csv_error)
}
