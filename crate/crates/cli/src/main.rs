mod render;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use envredesign::bench::{random_grid, running_example, GeneratedTask, MAX_BLOCK_DENSITY};
use envredesign::metrics::{DistanceView, MetricKind, MetricValue};
use envredesign::pddl;
use envredesign::planner::{HStarCache, DEFAULT_NODE_LIMIT};
use envredesign::redesign::{
    ger_search_with_library, ModificationScope, RedesignTask, StopCondition,
};
use envredesign::report::{Report, ReportContext, TaskFiles};
use envredesign::topq::{Bound, DEFAULT_PLAN_CAP};

use render::{render, Sidecar, MAX_DIAGRAMS};

/// Exit code when the search was interrupted before improving on m0.
const EXIT_NO_IMPROVEMENT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "envredesign",
    version,
    about = "Redesign planning environments by removing actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for the best set of action removals for a metric.
    Run(RunArgs),
    /// Write grid benchmark tasks.
    Benchgen {
        #[command(subcommand)]
        kind: BenchKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Original,
    Redesigned,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScopeArg {
    /// Library actions for prefix metrics, all actions for distance metrics.
    Pruned,
    /// All ground actions.
    All,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
    /// One goal conjunction per line; the first line is the true goal.
    #[arg(long)]
    goals: PathBuf,
    /// gt, pt, gp, pp, min-avg-d, max-avg-d, min-max-d or max-min-d
    #[arg(long)]
    metric: String,
    /// Sub-optimality bound b >= 1, e.g. 1.0, 1.5 or 3/2.
    #[arg(long, default_value = "1.0")]
    bound: String,
    /// Per-goal plan cap.
    #[arg(long, default_value_t = DEFAULT_PLAN_CAP)]
    cap: usize,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 900.0)]
    time_limit: f64,
    /// Design budget: most actions that may be removed.
    #[arg(long)]
    max_removals: Option<usize>,
    /// Stop after expanding this many search nodes.
    #[arg(long)]
    node_limit: Option<u64>,
    /// Stop once the metric reaches this value (integer or fraction).
    #[arg(long)]
    target: Option<String>,
    /// Expansion cap for each planner query.
    #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
    planner_node_limit: usize,
    /// Report path; standard output when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Never re-enumerate goals whose cached plans were all removed.
    #[arg(long)]
    literal_library: bool,
    /// Environment in which distance metrics measure goal distances.
    #[arg(long, value_enum, default_value = "original")]
    distance_view: ViewArg,
    /// Which actions may be removed.
    #[arg(long, value_enum, default_value = "pruned")]
    scope: ScopeArg,
    /// Print ASCII diagrams of the solutions (grid tasks only).
    #[arg(long)]
    render: bool,
    /// Cell coordinate map; defaults to grid.map beside the problem file.
    #[arg(long)]
    sidecar: Option<PathBuf>,
    /// Worker threads for library building and sibling evaluation.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum BenchKind {
    /// The 5x5 grid with start (2,0) and goals (0,4), (4,4).
    RunningExample {
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
    },
    /// A seeded random grid.
    Random {
        /// Square grid side; overridden by --width/--height.
        #[arg(long)]
        size: Option<u32>,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
        #[arg(long, default_value_t = 2)]
        goals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of blocked cells, at most 0.4.
        #[arg(long, default_value_t = 0.0)]
        density: f64,
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let start = Instant::now();
    let metric: MetricKind = args.metric.parse()?;
    let bound: Bound = args.bound.parse()?;
    if args.cap == 0 {
        bail!("--cap must be at least 1");
    }
    if !(args.time_limit >= 0.0 && args.time_limit.is_finite()) {
        bail!("--time-limit must be a non-negative number of seconds");
    }
    let target = args
        .target
        .as_deref()
        .map(str::parse::<MetricValue>)
        .transpose()
        .map_err(anyhow::Error::msg)?;

    let domain_text = read(&args.domain)?;
    let problem_text = read(&args.problem)?;
    let goals_text = read(&args.goals)?;
    let domain = pddl::parse_domain(&domain_text)
        .with_context(|| format!("in {}", args.domain.display()))?;
    let problem = pddl::parse_problem(&problem_text, &domain)
        .with_context(|| format!("in {}", args.problem.display()))?;
    let goals = pddl::parse_goals(&goals_text, &domain, &problem)
        .with_context(|| format!("in {}", args.goals.display()))?;
    let env = pddl::ground(&domain, &problem, &goals)?;

    let threads = args.threads.max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .ok();

    let mut task = RedesignTask::new(env, metric, bound, args.cap)?;
    task.eval.literal_library = args.literal_library;
    task.eval.distance_view = match args.distance_view {
        ViewArg::Original => DistanceView::Original,
        ViewArg::Redesigned => DistanceView::Redesigned,
    };
    task.scope = match args.scope {
        ScopeArg::Pruned => ModificationScope::Pruned,
        ScopeArg::All => ModificationScope::AllActions,
    };
    task.node_limit = args.planner_node_limit;
    task.parallel = threads > 1;

    let stop = StopCondition {
        time_limit: Some(Duration::from_secs_f64(args.time_limit)),
        node_limit: args.node_limit,
        max_removals: args.max_removals,
        target,
    };
    let cache = HStarCache::new(task.node_limit);
    let lib = task.build_library(&cache)?;
    for g in lib.per_goal.iter().filter(|g| g.truncated) {
        eprintln!(
            "warning: goal {} has more than {} plans; library truncated",
            g.goal, lib.cap
        );
    }
    let outcome = ger_search_with_library(&task, &lib, &cache, &stop, start)?;
    if outcome.stats.degenerate > 0 {
        eprintln!(
            "warning: {} node(s) had fewer than two goals or plans and were valued 0",
            outcome.stats.degenerate
        );
    }

    let ctx = ReportContext {
        files: TaskFiles {
            domain: Some(args.domain.display().to_string()),
            problem: Some(args.problem.display().to_string()),
            goals: Some(args.goals.display().to_string()),
        },
        max_removals: args.max_removals,
        cache_hits: cache.hits(),
        cache_misses: cache.misses(),
    };
    let report = Report::new(&task, &lib, &outcome, ctx);
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.output {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => print!("{json}"),
    }

    eprintln!(
        "{}: m0 = {}, m+ = {} with {} removal(s), {} solution(s), stop: {}",
        metric,
        outcome.m0,
        outcome.m_plus,
        report.result.removals,
        outcome.solutions.len(),
        outcome.stop_reason.as_str()
    );

    if args.render {
        let sidecar_path = args
            .sidecar
            .clone()
            .unwrap_or_else(|| args.problem.with_file_name("grid.map"));
        match fs::read_to_string(&sidecar_path) {
            Ok(text) => {
                let sidecar = Sidecar::parse(&text)
                    .with_context(|| format!("in {}", sidecar_path.display()))?;
                for (i, names) in outcome.solution_names.iter().take(MAX_DIAGRAMS).enumerate() {
                    eprintln!(
                        "solution {} of {}: {}",
                        i + 1,
                        outcome.solutions.len(),
                        names.join(" ")
                    );
                    eprint!("{}", render(&task.env, &sidecar, names));
                }
            }
            Err(_) => eprintln!(
                "no sidecar: {} not found; nothing rendered",
                sidecar_path.display()
            ),
        }
    }

    Ok(
        if !outcome.improved() && outcome.stop_reason.is_interrupted() {
            ExitCode::from(EXIT_NO_IMPROVEMENT)
        } else {
            ExitCode::SUCCESS
        },
    )
}

fn write_task(dir: &Path, task: &GeneratedTask) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (name, text) in [
        ("domain.pddl", &task.domain),
        ("problem.pddl", &task.problem),
        ("goals.txt", &task.goals),
        ("grid.map", &task.sidecar),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn benchgen(kind: BenchKind) -> Result<ExitCode> {
    let (spec, dir) = match kind {
        BenchKind::RunningExample { output } => (running_example(), output),
        BenchKind::Random {
            size,
            width,
            height,
            goals,
            seed,
            density,
            output,
        } => {
            let (Some(w), Some(h)) = (width.or(size), height.or(size)) else {
                bail!("give --size or both --width and --height");
            };
            if density > MAX_BLOCK_DENSITY {
                bail!("--density {density} exceeds {MAX_BLOCK_DENSITY}");
            }
            (random_grid(w, h, goals, density, seed)?, output)
        }
    };
    write_task(&dir, &spec.generate()?)?;
    eprintln!(
        "wrote domain.pddl, problem.pddl, goals.txt, grid.map to {}",
        dir.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Benchgen { kind } => benchgen(kind),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
