//! `augmech` command line: benchmark evaluation, mechanism runs, ratio
//! experiments, truthfulness/feasibility sweeps, error-tolerance curves,
//! and the lower-bound tables. All runs are reproducible from `--seed`;
//! worker count comes from `AUGMECH_THREADS`.

use augmech::baseline::{expected_revenue_exact, realize, MechanismRef};
use augmech::benchmarks::BenchmarkKind;
use augmech::env::opt_value;
use augmech::errortol::GammaDensity;
use augmech::harness::{
    self, build_mechanism, estimate_ratio, feasibility_violations, figure_curves,
    lower_bound_formulas, mc_verify_benchmark_mean, truthfulness_violations, write_ratio_csv,
    DeviationGrid, EnvChoice, InstanceGenerator, PredictionModel, ValueGen,
};
use augmech::rat::{format_rat, parse_rat, to_f64, Rat};
use augmech::schema::Instance;
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "augmech", version, about = "Learning-augmented competitive auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a revenue benchmark on an instance file.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Run a mechanism on an instance: expected revenue and one realization.
    Run(RunArgs),
    /// Estimate empirical competitive ratios over generated instances.
    Ratio(RatioArgs),
    /// Grid deviation test over generated instances.
    Truthfulness(SweepArgs),
    /// Ex-post feasibility of every realization over generated instances.
    Feasibility(SweepArgs),
    /// Error-tolerance revenue-bound curves over an eta grid.
    Figure(FigureArgs),
    /// Lower-bound closed forms with Monte-Carlo cross-checks.
    Lowerbound(LowerboundArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        benchmark: String,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "dga-augmented")]
    mech: String,
    #[arg(long)]
    blackbox: Option<String>,
    /// Wrap the mechanism in the error-tolerant modifier at this confidence.
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 10000)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Online mode: run the sampling auction over random arrival orders.
    #[arg(long, default_value_t = false)]
    online: bool,
    /// Arrival orders to average over in online mode.
    #[arg(long, default_value_t = 1000)]
    orders: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long, default_value = "dga-augmented")]
    mech: String,
    #[arg(long)]
    blackbox: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, default_value = "f2")]
    benchmark: String,
    /// Value generator: equal-revenue | uniform | two-gap | cond-square.
    #[arg(long, default_value = "equal-revenue")]
    values: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Scale parameter N for two-gap / cond-square generators.
    #[arg(long, default_value_t = 100.0)]
    nparam: f64,
    /// Prediction model: perfect | k-wrong | eta | arbitrary.
    #[arg(long, default_value = "k-wrong")]
    pred: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "2")]
    eta: String,
    /// Environment: digital | supply | cap.
    #[arg(long, default_value = "digital")]
    env: String,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Inner Monte-Carlo draws when randomness is not enumerable.
    #[arg(long, default_value_t = 512)]
    inner: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output path; extension selects csv (per-instance rows) or json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "dga-augmented")]
    mech: String,
    #[arg(long)]
    blackbox: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value = "digital")]
    env: String,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct FigureArgs {
    /// Density of the confidence level; only `exp` is built in.
    #[arg(long = "gamma-density", default_value = "exp")]
    gamma_density: String,
    #[arg(long, default_value_t = 4.42)]
    beta: f64,
    /// Grid `start:end:step`.
    #[arg(long = "eta-grid", default_value = "1:5:0.05")]
    eta_grid: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LowerboundArgs {
    /// Robustness ratio entering the revenue upper bound.
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Comma-separated N values; defaults to a log grid up to 1e12.
    #[arg(long)]
    n_list: Option<String>,
    /// Monte-Carlo samples for the benchmark-mean cross-check (0 disables).
    #[arg(long, default_value_t = 100000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    harness::init_thread_pool();
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Bench { command: BenchCommand::Eval { instance, benchmark } } => {
            let inst = Instance::from_json(&std::fs::read_to_string(instance)?)?;
            let kind = BenchmarkKind::parse(&benchmark)?;
            let value = kind.eval(&inst.values, &inst.env)?;
            println!("{} = {} ({})", kind.label(), format_rat(&value.value), to_f64(&value.value));
            Ok(())
        }
        Command::Run(args) => run_cmd(args),
        Command::Ratio(args) => ratio_cmd(args),
        Command::Truthfulness(args) => sweep_cmd(args, true),
        Command::Feasibility(args) => sweep_cmd(args, false),
        Command::Figure(args) => figure_cmd(args),
        Command::Lowerbound(args) => lowerbound_cmd(args),
    }
}

fn parse_gamma(s: &Option<String>) -> Result<Option<Rat>, Box<dyn std::error::Error>> {
    Ok(match s {
        None => None,
        Some(g) => Some(parse_rat(g)?),
    })
}

fn write_out(out: &Option<PathBuf>, text: &str) -> std::io::Result<()> {
    match out {
        None => {
            print!("{text}");
            std::io::stdout().flush()
        }
        Some(path) => std::fs::write(path, text),
    }
}

fn run_cmd(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let inst = Instance::from_json(&std::fs::read_to_string(&args.instance)?)?;
    let ctx = inst.context()?;
    let bids = inst.values.values().to_vec();

    let mech: MechanismRef = if args.online {
        augmech::online::default_osap(augmech::online::ArrivalOrder::Random, inst.n())?
    } else {
        let factory =
            build_mechanism(&args.mech, args.blackbox.clone(), parse_gamma(&args.gamma)?)?;
        factory(&inst)?
    };

    let exact = expected_revenue_exact(mech.as_ref(), &bids, &ctx);
    let mut rng = harness::seeded_rng(args.seed, 0);
    let (mean, draws) = if exact.is_some() {
        (None, 0)
    } else {
        let trials = if args.online { args.orders } else { args.trials };
        let mut total = 0.0;
        for _ in 0..trials {
            let r = mech.sample(&ctx, &mut rng);
            total += to_f64(&realize(r.as_ref(), &bids, &ctx).revenue);
        }
        (Some(total / trials.max(1) as f64), trials)
    };
    let one_realization = {
        let r = mech.sample(&ctx, &mut harness::seeded_rng(args.seed, 1));
        let out = realize(r.as_ref(), &bids, &ctx);
        serde_json::json!({
            "x": out.x.entries().iter().map(format_rat).collect::<Vec<_>>(),
            "payments": out.payments.iter().map(format_rat).collect::<Vec<_>>(),
            "revenue": format_rat(&out.revenue),
        })
    };
    let summary = serde_json::json!({
        "mechanism": mech.name(),
        "n": inst.n(),
        "seed": args.seed,
        "opt": format_rat(&opt_value(inst.values.values(), &inst.env)?),
        "expected_revenue_exact": exact.as_ref().map(format_rat),
        "expected_revenue_sampled": mean,
        "sample_draws": draws,
        "realization": one_realization,
    });
    write_out(&args.out, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    Ok(())
}

fn value_gen(args: &RatioArgs) -> Result<ValueGen, Box<dyn std::error::Error>> {
    Ok(match args.values.as_str() {
        "equal-revenue" => ValueGen::EqualRevenue { n: args.n },
        "uniform" => ValueGen::UniformRational { n: args.n, max_num: 60, max_den: 6 },
        "two-gap" => ValueGen::TwoBidderGap { n_param: args.nparam },
        "cond-square" => ValueGen::ConditionedSquare { n_param: args.nparam },
        other => return Err(format!("unknown value generator {other:?}").into()),
    })
}

fn pred_model(
    pred: &str,
    k: usize,
    eta: &str,
) -> Result<PredictionModel, Box<dyn std::error::Error>> {
    Ok(match pred {
        "perfect" => PredictionModel::Perfect,
        "k-wrong" => PredictionModel::KWrong { k },
        "eta" => PredictionModel::EtaControlled { eta: parse_rat(eta)? },
        "arbitrary" => PredictionModel::Arbitrary { max_num: 60, max_den: 6 },
        other => return Err(format!("unknown prediction model {other:?}").into()),
    })
}

fn env_choice(env: &str, l: usize) -> Result<EnvChoice, Box<dyn std::error::Error>> {
    Ok(match env {
        "digital" => EnvChoice::Digital,
        "supply" => EnvChoice::Supply(l),
        "cap" => EnvChoice::RandomCap,
        other => return Err(format!("unknown environment {other:?}").into()),
    })
}

fn ratio_cmd(args: RatioArgs) -> Result<(), Box<dyn std::error::Error>> {
    let factory = build_mechanism(&args.mech, args.blackbox.clone(), parse_gamma(&args.gamma)?)?;
    let generator = InstanceGenerator {
        values: value_gen(&args)?,
        prediction: pred_model(&args.pred, args.k, &args.eta)?,
        env: env_choice(&args.env, args.l)?,
    };
    let benchmark = BenchmarkKind::parse(&args.benchmark)?;
    let report = estimate_ratio(
        &args.mech,
        &factory,
        &generator,
        benchmark,
        args.trials,
        args.inner,
        args.seed,
    )?;
    let is_csv = args
        .out
        .as_ref()
        .map(|p| p.extension().is_some_and(|e| e == "csv"))
        .unwrap_or(false);
    if is_csv {
        let mut buf = Vec::new();
        write_ratio_csv(&report.rows, &mut buf)?;
        write_out(&args.out, std::str::from_utf8(&buf)?)?;
    } else {
        let mut summary = serde_json::to_value(&report)?;
        // Per-instance rows stay in the CSV path; the JSON summary is compact.
        summary.as_object_mut().and_then(|m| m.remove("rows"));
        write_out(&args.out, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
    }
    Ok(())
}

fn sweep_cmd(args: SweepArgs, truthfulness: bool) -> Result<(), Box<dyn std::error::Error>> {
    let factory = build_mechanism(&args.mech, args.blackbox.clone(), parse_gamma(&args.gamma)?)?;
    let env = env_choice(&args.env, args.l)?;
    let mut total_violations = 0usize;
    for t in 0..args.instances {
        let mut rng = harness::seeded_rng(args.seed, 5000 + t as u64);
        let generator = InstanceGenerator {
            values: ValueGen::UniformRational { n: args.n, max_num: 60, max_den: 6 },
            prediction: PredictionModel::KWrong { k: t % (args.n + 1) },
            env,
        };
        let inst = generator.generate(&mut rng)?;
        let mech = factory(&inst)?;
        if truthfulness {
            let v = truthfulness_violations(
                mech.as_ref(),
                &inst,
                &DeviationGrid::default(),
                args.seed,
            )?;
            total_violations += v.len();
        } else {
            let bids = inst.values.values().to_vec();
            total_violations +=
                feasibility_violations(mech.as_ref(), &inst, &bids, 256, args.seed)?;
        }
    }
    let label = if truthfulness { "truthfulness" } else { "feasibility" };
    println!(
        "{label}: {} violations over {} instances (mech = {})",
        total_violations, args.instances, args.mech
    );
    if total_violations > 0 {
        std::process::exit(1);
    }
    Ok(())
}

fn figure_cmd(args: FigureArgs) -> Result<(), Box<dyn std::error::Error>> {
    if args.gamma_density != "exp" {
        return Err(format!("unknown density {:?}", args.gamma_density).into());
    }
    let parts: Vec<&str> = args.eta_grid.split(':').collect();
    if parts.len() != 3 {
        return Err("eta grid must be start:end:step".into());
    }
    let (start, end, step): (f64, f64, f64) =
        (parts[0].parse()?, parts[1].parse()?, parts[2].parse()?);
    if !(start >= 1.0 && end >= start && step > 0.0) {
        return Err("eta grid must satisfy 1 <= start <= end, step > 0".into());
    }
    let mut grid = Vec::new();
    let mut eta = start;
    while eta <= end + 1e-12 {
        grid.push(eta);
        eta += step;
    }
    let rows = figure_curves(&GammaDensity::ExpShifted, args.beta, &grid)?;
    let mut text = String::from("eta,opt_ratio,f_ratio\n");
    for (eta, opt_ratio, f_ratio) in rows {
        text.push_str(&format!("{eta:.6},{opt_ratio:.6},{f_ratio:.6}\n"));
    }
    write_out(&args.out, &text)?;
    Ok(())
}

fn lowerbound_cmd(args: LowerboundArgs) -> Result<(), Box<dyn std::error::Error>> {
    let ns: Vec<f64> = match &args.n_list {
        Some(list) => list
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()?,
        None => vec![4.0, 100.0, 1e4, 1e6, 1e8, 1e10, 1e12],
    };
    let mut text = String::from("N,benchmark_mean,revenue_upper,ratio_bound,limit_bound,mc_mean\n");
    for (i, &n) in ns.iter().enumerate() {
        let eval = lower_bound_formulas(n, args.alpha)?;
        let mc = if args.samples > 0 && n <= 1e6 {
            let mut rng = harness::seeded_rng(args.seed, i as u64);
            format!("{:.6}", mc_verify_benchmark_mean(n, args.samples, &mut rng))
        } else {
            String::from("")
        };
        text.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.9},{}\n",
            n, eval.benchmark_mean, eval.revenue_upper, eval.ratio_bound, eval.limit_bound, mc
        ));
    }
    write_out(&args.out, &text)?;
    Ok(())
}
