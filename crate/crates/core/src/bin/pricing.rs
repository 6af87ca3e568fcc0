use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use combinatorial_pricing::construct::{
    cost_epsilon_equilibrium, cost_equilibrium_conditions, epsilon_transfer, local_search_welfare, pareto_equilibrium,
    submodular_prediction,
};
use combinatorial_pricing::dynamics::{
    best_response_dynamics, nonexistence_certificate, rule_replay, CertificateOutcome, DynamicsOutcome, Schedule,
};
use combinatorial_pricing::monopolist::{
    brute_force_monopolist, exact_sampler_expectation, repeated_sample, revenue_guarantee, symmetrize,
};
use combinatorial_pricing::report::{envelope, to_pretty_json, write_equilibrium_csv, write_scan_csv};
use combinatorial_pricing::scan::{grid_equilibrium_scan, DEFAULT_BUDGET};
use combinatorial_pricing::{
    check_equilibrium, classify, decide, DecisionMap, DecisionMapSpec, MapKind, PriceVector, Scenario, Subset, Value,
};

#[derive(Parser)]
#[command(name = "pricing", version, about = "Exact equilibria of combinatorial pricing games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Valuation class membership with violation witnesses.
    Classify(Common),
    /// Demanded sets and the rule's choice at the scenario prices.
    Demand(Common),
    /// Verify the scenario prices as an exact or epsilon equilibrium.
    CheckEq(Common),
    /// Construct a full-trade equilibrium (and the submodular prediction).
    FindEq(Common),
    /// Move an equilibrium of the maximal rule to every rule.
    Transfer(Common),
    /// Epsilon equilibrium under service costs, with the set conditions.
    CostEq(Common),
    /// Sequential best-response dynamics from the scenario prices.
    Dynamics(Common),
    /// Replay the scenario's affine price-update rules.
    Replay(Common),
    /// Grid certificate that no epsilon equilibrium exists.
    CertifyNonexistence(Common),
    /// Revenue-maximizing single seller of all items.
    Monopolist {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Mode::Brute)]
        mode: Mode,
    },
    /// All epsilon equilibria on a price grid.
    GridScan(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Brute,
    Sample,
    Expectation,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// JSON report destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV destination for commands that produce rows.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<Value>,
    #[arg(long)]
    step: Option<Value>,
    #[arg(long)]
    cap: Option<Value>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<u32>,
    #[arg(long)]
    max_steps: Option<u32>,
}

struct Run {
    report: serde_json::Value,
    negative: bool,
}

type Failure = Box<dyn std::error::Error>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn open(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<bool, Failure> {
    let (name, common, mode) = match command {
        Command::Classify(c) => ("classify", c, None),
        Command::Demand(c) => ("demand", c, None),
        Command::CheckEq(c) => ("check-eq", c, None),
        Command::FindEq(c) => ("find-eq", c, None),
        Command::Transfer(c) => ("transfer", c, None),
        Command::CostEq(c) => ("cost-eq", c, None),
        Command::Dynamics(c) => ("dynamics", c, None),
        Command::Replay(c) => ("replay", c, None),
        Command::CertifyNonexistence(c) => ("certify-nonexistence", c, None),
        Command::Monopolist { common, mode } => ("monopolist", common, Some(mode)),
        Command::GridScan(c) => ("grid-scan", c, None),
    };
    let s = Scenario::load(&common.scenario)?;
    let params = Params::merge(&s, &common);
    let csv = |write: &dyn Fn(&mut dyn Write) -> combinatorial_pricing::Result<()>| -> Result<(), Failure> {
        if common.csv.is_some() {
            let mut out = open(&common.csv)?;
            write(&mut out)?;
            out.flush()?;
        }
        Ok(())
    };
    let run = match name {
        "classify" => Run { report: json!(classify(&s.valuation()?)), negative: false },
        "demand" => {
            let v = s.valuation()?;
            let r = decide(&v, &prices(&s)?, &s.map_spec().resolve(v.n())?)?;
            Run { report: json!(r), negative: false }
        }
        "check-eq" => {
            let r = check_equilibrium(&s.game()?, &prices(&s)?, &params.epsilon)?;
            csv(&|w| write_equilibrium_csv(w, std::slice::from_ref(&r)))?;
            Run { negative: !r.passes(), report: json!(r) }
        }
        "find-eq" => {
            let v = s.valuation()?;
            let order = s.order.clone().unwrap_or_else(|| (0..v.n()).collect());
            let p = pareto_equilibrium(&v, &order)?;
            let g = combinatorial_pricing::GameSpec::new(v.clone(), DecisionMap::new(MapKind::MaximalLex, v.n()))?;
            let r = check_equilibrium(&g, &p, &Value::zero())?;
            let prediction = submodular_prediction(&v).ok();
            csv(&|w| write_equilibrium_csv(w, std::slice::from_ref(&r)))?;
            Run {
                negative: !r.is_exact(),
                report: json!({ "order": order, "prices": p, "check": r, "submodular_prediction": prediction }),
            }
        }
        "transfer" => {
            let v = s.valuation()?;
            let spec = s.map_spec();
            let maximal = DecisionMapSpec { kind: MapKind::MaximalLex, order: spec.order.clone() }.resolve(v.n())?;
            let epsilon = positive(&params.epsilon)?;
            let shifted = epsilon_transfer(&v, &prices(&s)?, &maximal, &epsilon)?;
            let mut checks = Vec::new();
            for kind in [MapKind::MaximalLex, MapKind::LexFirst, MapKind::GsGreedy] {
                let map = DecisionMapSpec { kind, order: spec.order.clone() }.resolve(v.n())?;
                let g = combinatorial_pricing::GameSpec::new(v.clone(), map)?;
                match check_equilibrium(&g, &shifted, &epsilon) {
                    Ok(r) => checks.push(json!({ "map": kind, "report": r })),
                    Err(e) => checks.push(json!({ "map": kind, "error": e.to_string() })),
                }
            }
            Run { report: json!({ "prices": shifted, "epsilon": epsilon, "checks": checks }), negative: false }
        }
        "cost-eq" => {
            let g = s.game()?;
            let v = s.valuation()?;
            let r = cost_epsilon_equilibrium(&g, &positive(&params.epsilon)?)?;
            let conditions = cost_equilibrium_conditions(&g, &r.prices)?;
            let search = local_search_welfare(&v, g.cost_vector(), r.chosen)?;
            csv(&|w| write_equilibrium_csv(w, std::slice::from_ref(&r.report)))?;
            Run {
                negative: !r.report.passes(),
                report: json!({ "equilibrium": r, "conditions": conditions, "local_search": search }),
            }
        }
        "dynamics" => {
            let g = s.game()?;
            let p0 = s.prices.clone().unwrap_or_else(|| PriceVector::zeros(g.n()));
            let schedule = s.schedule.clone().unwrap_or(Schedule::RoundRobin);
            let delta = s.delta.clone().unwrap_or_else(|| params.step.clone());
            let t = best_response_dynamics(&g, &p0, &schedule, &positive(&delta)?, params.max_steps)?;
            csv(&|w| t.write_csv(w))?;
            Run { negative: !matches!(t.outcome, DynamicsOutcome::Converged { .. }), report: json!(t) }
        }
        "replay" => {
            let p0 = prices(&s)?;
            let r = rule_replay(&s.rules, &p0, params.max_steps)?;
            csv(&|w| r.trace.write_csv(w))?;
            Run { report: json!(r), negative: false }
        }
        "certify-nonexistence" => {
            let g = s.game()?;
            let cap = params.cap(&s)?;
            let c = nonexistence_certificate(&g, &params.epsilon, &params.step, &cap, DEFAULT_BUDGET)?;
            Run { negative: matches!(c, CertificateOutcome::CounterFound { .. }), report: json!(c) }
        }
        "monopolist" => {
            let v = s.valuation()?;
            let report = match mode.unwrap_or(Mode::Brute) {
                Mode::Brute => json!({ "mode": "brute", "result": brute_force_monopolist(&v) }),
                Mode::Sample => {
                    let r = repeated_sample(&v, params.samples, params.seed)?;
                    json!({ "mode": "sample", "seed": params.seed, "rounds": params.samples, "result": r })
                }
                Mode::Expectation => json!({
                    "mode": "expectation",
                    "expectation": exact_sampler_expectation(&v)?,
                    "guarantee": revenue_guarantee(&v),
                    "symmetrization": symmetrize(&v)?,
                }),
            };
            Run { report, negative: false }
        }
        "grid-scan" => {
            let g = s.game()?;
            let cap = params.cap(&s)?;
            let r = grid_equilibrium_scan(&g, &params.step, &params.epsilon, &cap, DEFAULT_BUDGET)?;
            csv(&|w| write_scan_csv(w, &r))?;
            Run { negative: r.hits.is_empty(), report: json!(r) }
        }
        _ => unreachable!("every subcommand is named above"),
    };
    let mut out = open(&common.out)?;
    out.write_all(to_pretty_json(&envelope(name, &s.name, &run.report)).as_bytes())?;
    out.flush()?;
    Ok(run.negative)
}

struct Params {
    epsilon: Value,
    step: Value,
    cap: Option<Value>,
    seed: u64,
    samples: u32,
    max_steps: usize,
}

impl Params {
    fn merge(s: &Scenario, c: &Common) -> Params {
        Params {
            epsilon: c.epsilon.clone().or(s.epsilon.clone()).unwrap_or_default(),
            step: c.step.clone().or(s.step.clone()).unwrap_or(Value::ratio(1, 20)),
            cap: c.cap.clone().or(s.cap.clone()),
            seed: c.seed.or(s.seed).unwrap_or(0),
            samples: c.samples.or(s.samples).unwrap_or(10),
            max_steps: c.max_steps.or(s.max_steps).unwrap_or(10_000) as usize,
        }
    }

    /// Explicit cap, else the largest buyer value `v(N)`.
    fn cap(&self, s: &Scenario) -> Result<Value, Failure> {
        if let Some(c) = &self.cap {
            return Ok(c.clone());
        }
        let g = s.game()?;
        Ok(g.buyers().iter().map(|b| b.valuation.value(Subset::full(g.n())).clone()).max().unwrap_or_default())
    }
}

fn prices(s: &Scenario) -> Result<PriceVector, Failure> {
    s.prices.clone().ok_or_else(|| "scenario has no `prices`".into())
}

fn positive(x: &Value) -> Result<Value, Failure> {
    if x.is_positive() {
        Ok(x.clone())
    } else {
        Err(format!("this command needs a positive epsilon/delta, got {x}").into())
    }
}
