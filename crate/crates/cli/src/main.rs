use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dor_core::deck::{merge, score};
use dor_core::fit::{fit, Family, FitItem, FitRequest, NormalizationMode, RegressionResult, ScalingMode};
use dor_core::objective::ObjectiveSpec;
use dor_core::plan::Plan;
use dor_core::session::{plan_table, FitSpec, MergeDirective, NamedPlan, RankInput, Session, SessionError};
use dor_core::spacetime::{assemble, optimize, ObjectiveRef, ScenarioSpec, SpaceTimeError};
use dor_core::{CardRanking, PlanningInstance, ScoreTable};
use dor_lp::Status;
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "dor", version, about = "Space-time facility planning with deck-of-cards ordinal regression")]
struct Cli {
    /// Accepted for reproducible scripts; the solver is deterministic and
    /// ignores it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Print JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one scenario and print the plan.
    Solve(SolveArgs),
    /// Score a card ranking, or merge two rankings and score the result.
    Score(ScoreArgs),
    /// Fit a value function to scored items.
    Fit(FitArgs),
    /// Work with a persisted decision session.
    Session {
        /// Event log of the session.
        #[arg(long)]
        log: PathBuf,
        #[command(subcommand)]
        command: SessionCommand,
    },
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Scenario file; flags below override its fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    budget: Option<String>,
    /// Comma separated weights for a weighted-sum objective.
    #[arg(long, value_delimiter = ',', conflicts_with = "objective")]
    weights: Option<Vec<f64>>,
    /// Named objective from the instance.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long, value_enum)]
    synergy: Option<Toggle>,
    /// Write the assembled MILP in LP format.
    #[arg(long)]
    lp_dump: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct ScoreArgs {
    /// Ranking file, or a file with a `ranking` field.
    #[arg(required_unless_present = "merge")]
    ranking: Option<PathBuf>,
    /// Lower and upper ranking files.
    #[arg(long, num_args = 2, value_names = ["LOWER", "UPPER"], requires = "bridge", conflicts_with = "ranking")]
    merge: Option<Vec<PathBuf>>,
    /// Blank cards between the two rankings.
    #[arg(long)]
    bridge: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    #[value(alias = "weighted-sum")]
    Ws,
    Piecewise,
    Choquet,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Family {
        match f {
            FamilyArg::Ws => Family::WeightedSum,
            FamilyArg::Piecewise => Family::Piecewise,
            FamilyArg::Choquet => Family::Choquet,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Multiplicative,
    Affine,
}

impl From<ModeArg> for ScalingMode {
    fn from(m: ModeArg) -> ScalingMode {
        match m {
            ModeArg::Multiplicative => ScalingMode::Multiplicative,
            ModeArg::Affine => ScalingMode::Affine,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    None,
    MinMax,
}

impl From<NormalizeArg> for NormalizationMode {
    fn from(n: NormalizeArg) -> NormalizationMode {
        match n {
            NormalizeArg::None => NormalizationMode::None,
            NormalizeArg::MinMax => NormalizationMode::MinMax,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Items file: `items`, plus `ranking` or `scores` unless `--scores` is
    /// given, plus `breakpoints` and `total` for the piecewise family.
    items: PathBuf,
    /// Scores file, a JSON object from item id to score.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "multiplicative")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "none")]
    normalize: NormalizeArg,
}

#[derive(Subcommand)]
enum SessionCommand {
    /// Start a session from an instance file.
    Init { instance: PathBuf },
    /// Optimize a scenario grid into a new iteration.
    Generate {
        /// JSON array of scenarios.
        scenarios: PathBuf,
    },
    /// Add externally designed plans as a new iteration.
    Import {
        /// JSON object from plan id to plan.
        plans: PathBuf,
    },
    /// Choose the plans shown to the decision maker.
    Curate {
        #[arg(long)]
        iteration: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        keep: Vec<String>,
    },
    /// Record a card ranking of plans.
    Rank {
        #[arg(long)]
        iteration: usize,
        #[arg(long)]
        name: String,
        #[arg(long, required_unless_present = "merge")]
        ranking: Option<PathBuf>,
        /// Names of the lower and upper rankings already recorded.
        #[arg(long, num_args = 2, value_names = ["LOWER", "UPPER"], requires = "bridge", conflicts_with = "ranking")]
        merge: Option<Vec<String>>,
        #[arg(long)]
        bridge: Option<u32>,
    },
    /// Fit a value function to a recorded ranking.
    Fit {
        #[arg(long)]
        iteration: usize,
        #[arg(long)]
        ranking: String,
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_enum, default_value = "multiplicative")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "none")]
        normalize: NormalizeArg,
        /// Add the synergy flag as a standalone criterion.
        #[arg(long)]
        syn: bool,
        /// Objective name for later scenarios; `w<ranking>` by default.
        #[arg(long)]
        objective: Option<String>,
    },
    /// Attach a note to an iteration or plan.
    Comment {
        #[arg(long)]
        iteration: usize,
        #[arg(long)]
        plan: Option<String>,
        text: String,
    },
    /// Accept a plan and close the session.
    Accept { plan: String },
    /// Print an iteration's plans.
    Export {
        #[arg(long)]
        iteration: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: ExportFormat,
    },
    /// Print the session state.
    Show,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Csv,
    Json,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    /// No plan: infeasible scenario, empty plan or empty session.
    Empty(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Empty(_) => 3,
            Failure::Input(_) => 4,
        }
    }
}

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

impl From<SpaceTimeError> for Failure {
    fn from(e: SpaceTimeError) -> Failure {
        input(e)
    }
}

impl From<SessionError> for Failure {
    fn from(e: SessionError) -> Failure {
        input(e)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<PlanningInstance, Failure> {
    PlanningInstance::from_json(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(seed) = cli.seed {
        log::debug!("--seed {seed} ignored: the solver is deterministic");
    }
    let result = match cli.command {
        Command::Solve(args) => solve(args, cli.json),
        Command::Score(args) => score_cmd(args, cli.json),
        Command::Fit(args) => fit_cmd(args, cli.json),
        Command::Session { log, command } => session_cmd(&log, command, cli.json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Empty(m) | Failure::Input(m)) = &f;
            eprintln!("dor: {m}");
            ExitCode::from(f.code())
        }
    }
}

fn solve(args: SolveArgs, json: bool) -> Result<(), Failure> {
    let inst = load_instance(&args.instance)?;
    let mut sc: ScenarioSpec = match &args.scenario {
        Some(p) => read_json(p)?,
        None => ScenarioSpec::new("cli", "", ObjectiveRef::Named(String::new()), true),
    };
    if let Some(b) = args.budget {
        sc.budget = b;
    }
    if let Some(w) = args.weights {
        sc.objective = ObjectiveRef::Inline(ObjectiveSpec::weighted_sum(w));
    } else if let Some(o) = args.objective {
        sc.objective = ObjectiveRef::Named(o);
    }
    if let Some(t) = args.synergy {
        sc.synergy = matches!(t, Toggle::On);
    }
    if sc.budget.is_empty() {
        return Err(Failure::Input("a budget is required (--budget or a scenario file)".into()));
    }
    if matches!(&sc.objective, ObjectiveRef::Named(n) if n.is_empty()) {
        return Err(Failure::Input("an objective is required (--weights, --objective or a scenario file)".into()));
    }
    if let Some(path) = &args.lp_dump {
        let (lp, _) = assemble(&inst, &sc)?;
        dor_lp::lp_format::write_lp_file(&lp, path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let out = optimize(&inst, &sc)?;
    let (Some(plan), Some(value)) = (out.plan, out.value) else {
        return Err(Failure::Empty(format!("scenario '{}': {}", sc.id, out.status.as_str())));
    };
    if json {
        print_json(&serde_json::json!({
            "scenario": sc.id,
            "status": out.status.as_str(),
            "value": value,
            "nodes": out.report.nodes,
            "plan": plan,
        }));
    } else {
        print!("{}", plan_table(&inst, [(sc.id.as_str(), &plan)]));
        println!("value {value:.6} ({} nodes)", out.report.nodes);
    }
    if out.status != Status::Optimal {
        log::warn!("stopped with status {}", out.status.as_str());
    }
    if plan.assignments.is_empty() {
        return Err(Failure::Empty("no facility can be opened".into()));
    }
    Ok(())
}

/// A bare ranking or any document with a `ranking` field.
fn load_ranking(path: &Path) -> Result<CardRanking, Failure> {
    let v: serde_json::Value = read_json(path)?;
    let v = match v.get("ranking") {
        Some(r) => r.clone(),
        None => v,
    };
    serde_json::from_value(v).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn print_scores(scores: &ScoreTable, json: bool) {
    if json {
        print_json(scores);
        return;
    }
    let mut rows: Vec<_> = scores.iter().collect();
    rows.sort_by_key(|&(id, s)| (*s, id.clone()));
    println!("item,score");
    for (id, s) in rows {
        println!("{id},{s}");
    }
}

fn score_cmd(args: ScoreArgs, json: bool) -> Result<(), Failure> {
    let ranking = match (&args.ranking, &args.merge) {
        (Some(p), _) => load_ranking(p)?,
        (None, Some(files)) => {
            let lower = load_ranking(&files[0])?;
            let upper = load_ranking(&files[1])?;
            merge(&lower, &upper, args.bridge.unwrap_or(0)).map_err(input)?
        }
        (None, None) => unreachable!("clap requires one of them"),
    };
    let scores = score(&ranking).map_err(input)?;
    print_scores(&scores, json);
    Ok(())
}

#[derive(Deserialize)]
struct FitInput {
    items: Vec<FitItem>,
    #[serde(default)]
    ranking: Option<CardRanking>,
    #[serde(default)]
    scores: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    breakpoints: Vec<Vec<f64>>,
    #[serde(default)]
    total: Option<f64>,
}

fn print_fit(result: &RegressionResult, json: bool) {
    if json {
        print_json(result);
    } else {
        print!("{}", result.to_csv());
        println!("total error {:.6}, k {:.6}", result.total_error, result.k);
    }
}

fn fit_cmd(args: FitArgs, json: bool) -> Result<(), Failure> {
    let file: FitInput = read_json(&args.items)?;
    let scores = match (&args.scores, &file.scores, &file.ranking) {
        (Some(p), _, _) => read_json(p)?,
        (None, Some(s), _) => s.clone(),
        (None, None, Some(r)) => score(r).map_err(input)?.into_iter().map(|(k, v)| (k, v as f64)).collect(),
        (None, None, None) => return Err(Failure::Input("no scores: pass --scores or include a ranking".into())),
    };
    let family = Family::from(args.family);
    let mut req = FitRequest::new(family, file.items, scores);
    req.mode = args.mode.into();
    req.normalization = args.normalize.into();
    if family == Family::Piecewise {
        req.breakpoints = file.breakpoints;
        if let Some(t) = file.total {
            req.total = t;
        }
    }
    let result = fit(&req).map_err(input)?;
    print_fit(&result, json);
    Ok(())
}

fn session_cmd(log: &Path, command: SessionCommand, json: bool) -> Result<(), Failure> {
    if let SessionCommand::Init { instance } = &command {
        let inst = load_instance(instance)?;
        Session::create(log, inst)?;
        println!("created {}", log.display());
        return Ok(());
    }
    let mut s = Session::open(log)?;
    match command {
        SessionCommand::Init { .. } => unreachable!(),
        SessionCommand::Generate { scenarios } => {
            let scenarios: Vec<ScenarioSpec> = read_json(&scenarios)?;
            let it = s.generate(scenarios)?;
            for (sc, status) in &it.infeasible {
                eprintln!("scenario {sc}: {status}");
            }
            let number = it.number;
            let empty = it.plans.is_empty();
            print_iteration(&s, number, json)?;
            if empty {
                return Err(Failure::Empty(format!("iteration {number}: no feasible scenario")));
            }
        }
        SessionCommand::Import { plans } => {
            let plans: BTreeMap<String, Plan> = read_json(&plans)?;
            let plans = plans.into_iter().map(|(id, plan)| NamedPlan { id, plan }).collect();
            let number = s.import(plans)?.number;
            print_iteration(&s, number, json)?;
        }
        SessionCommand::Curate { iteration, keep } => s.curate(iteration, keep)?,
        SessionCommand::Rank {
            iteration,
            name,
            ranking,
            merge,
            bridge,
        } => {
            let input = RankInput {
                name,
                ranking: ranking.as_deref().map(load_ranking).transpose()?,
                merge: merge.map(|m| MergeDirective {
                    lower: m[0].clone(),
                    upper: m[1].clone(),
                    bridge: bridge.unwrap_or(0),
                }),
            };
            let scores = s.rank(iteration, input)?;
            print_scores(&scores, json);
        }
        SessionCommand::Fit {
            iteration,
            ranking,
            family,
            mode,
            normalize,
            syn,
            objective,
        } => {
            let mut spec = FitSpec::new(ranking, family.into());
            spec.mode = mode.into();
            spec.normalization = normalize.into();
            spec.syn = syn;
            spec.objective = objective;
            let result = s.fit(iteration, spec)?;
            print_fit(&result, json);
        }
        SessionCommand::Comment { iteration, plan, text } => s.comment(iteration, plan, text)?,
        SessionCommand::Accept { plan } => {
            if s.iterations.iter().all(|it| it.plans.is_empty()) {
                return Err(Failure::Empty("the session has no plans to accept".into()));
            }
            s.accept(&plan)?;
            println!("accepted {plan}");
        }
        SessionCommand::Export { iteration, format } => match format {
            ExportFormat::Csv => print!("{}", s.export_csv(iteration)?),
            ExportFormat::Json => {
                let it = s.iteration(iteration)?;
                print_json(&it.presented());
            }
        },
        SessionCommand::Show => show(&s, json),
    }
    Ok(())
}

fn print_iteration(s: &Session, number: usize, json: bool) -> Result<(), Failure> {
    let it = s.iteration(number)?;
    if json {
        print_json(&it.plans);
    } else {
        println!("iteration {number}");
        print!("{}", s.export_csv(number)?);
    }
    Ok(())
}

fn show(s: &Session, json: bool) {
    let summary = serde_json::json!({
        "status": s.status,
        "accepted": s.accepted,
        "objectives": s.objectives.keys().collect::<Vec<_>>(),
        "iterations": s.iterations.iter().map(|it| serde_json::json!({
            "number": it.number,
            "plans": it.plans.iter().map(|p| &p.id).collect::<Vec<_>>(),
            "rankings": it.rankings.keys().collect::<Vec<_>>(),
            "fits": it.fits.iter().map(|(k, r)| (k.clone(), r.total_error)).collect::<BTreeMap<_, _>>(),
            "infeasible": it.infeasible,
        })).collect::<Vec<_>>(),
    });
    if json {
        print_json(&summary);
        return;
    }
    println!("status {:?}", s.status);
    if let Some(a) = &s.accepted {
        println!("accepted {a}");
    }
    for it in &s.iterations {
        let ids: Vec<&str> = it.plans.iter().map(|p| p.id.as_str()).collect();
        println!("iteration {}: {}", it.number, ids.join(" "));
        for (name, r) in &it.fits {
            println!("  {name}: total error {:.6}", r.total_error);
        }
    }
}
