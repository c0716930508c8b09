//! `weakha`: reachability, schedulability and LTL checks for weak hybrid automata.

mod commands;
mod report;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};
use weakha::stats::Stats;
use weakha::wsha::SearchOptions;

use commands::{start, target, Start};
use report::Report;

#[derive(Parser)]
#[command(name = "weakha", version, about = "Decision procedures for weak hybrid automata")]
struct Cli {
    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the run-type search.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Init {
    /// Model file.
    file: PathBuf,
    /// Start mode; defaults to the model's first initial mode.
    #[arg(long)]
    init_mode: Option<String>,
    /// Start valuation such as `x=1/2,y=0`.
    #[arg(long)]
    init_val: String,
}

#[derive(Subcommand)]
enum Command {
    /// Check well-formedness, weakness and the CMS property.
    Validate { file: PathBuf },
    /// Decide whether a target polyhedron is reachable.
    Reach {
        #[command(flatten)]
        init: Init,
        /// Target constraints such as `x >= 1, y = 0`.
        #[arg(long)]
        target: String,
    },
    /// Decide whether a non-Zeno run exists.
    Sched {
        #[command(flatten)]
        init: Init,
    },
    /// Check an LTL formula on every non-Zeno run.
    Ltl {
        #[command(flatten)]
        init: Init,
        #[arg(long, required_unless_present = "formula_file", conflicts_with = "formula_file")]
        formula: Option<String>,
        /// Read the formula from a file.
        #[arg(long)]
        formula_file: Option<PathBuf>,
    },
    /// Print the region graph of a one-variable automaton.
    Regions {
        file: PathBuf,
        /// Print Graphviz DOT instead of a report.
        #[arg(long)]
        dot: bool,
        /// Extra constant for the start value.
        #[arg(long)]
        init_val: Option<String>,
        /// Extra constants for the target endpoints.
        #[arg(long)]
        target: Option<String>,
    },
    /// Bounded symbolic reachability up to a number of discrete steps.
    Simulate {
        #[command(flatten)]
        init: Init,
        /// Start set as constraints; overrides `--init-val` as the start region.
        #[arg(long)]
        init_poly: Option<String>,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        target: String,
    },
    /// Generate models from the reduction constructions.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Replay the witness of a saved JSON report.
    Verify {
        file: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Subset-sum reduction to reachability.
    SubsetSum {
        /// Comma-separated integers.
        #[arg(long)]
        set: String,
        #[arg(long)]
        k: i64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Counter machine encoding.
    CounterMachine {
        program: PathBuf,
        /// Use the clock CMS encoding instead of the SHA encoding.
        #[arg(long)]
        clock_cms: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// The two-dimensional robot example.
    Robot {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn init(i: &Init) -> Result<Start, String> {
    start(commands::load(&i.file)?, i.init_mode.as_deref(), &i.init_val)
}

fn run(cli: &Cli, stats: &mut Stats) -> Result<Report, String> {
    let opts = SearchOptions { jobs: cli.jobs.max(1), ..SearchOptions::default() };
    match &cli.command {
        Command::Validate { file } => commands::validate(file),
        Command::Reach { init: i, target: t } => {
            let s = init(i)?;
            let tgt = target(&s.h, t)?;
            commands::reach(&s, &tgt, opts, stats)
        }
        Command::Sched { init: i } => commands::sched(&init(i)?, opts, stats),
        Command::Ltl { init: i, formula, formula_file } => {
            let text = match (formula, formula_file) {
                (Some(f), _) => f.clone(),
                (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::ltl(&init(i)?, text.trim(), opts, stats)
        }
        Command::Regions { file, init_val, target, .. } => {
            commands::regions(file, init_val.as_deref(), target.as_deref()).map(|(r, _)| r)
        }
        Command::Simulate { init: i, init_poly, depth, target: t } => {
            let s = init(i)?;
            let tgt = target(&s.h, t)?;
            commands::simulate(&s, init_poly.as_deref(), &tgt, *depth, stats)
        }
        Command::Gen { kind } => match kind {
            GenKind::SubsetSum { set, k, output } => commands::gen_subset_sum_cmd(set, *k, output.as_deref()),
            GenKind::CounterMachine { program, clock_cms, output } => {
                commands::gen_counter_machine_cmd(program, *clock_cms, output.as_deref())
            }
            GenKind::Robot { output } => commands::gen_robot_cmd(output.as_deref()),
        },
        Command::Verify { file, witness } => commands::verify(file, witness),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 3 } else { 0 });
        }
    };
    if let Command::Regions { file, dot: true, init_val, target } = &cli.command {
        match commands::regions(file, init_val.as_deref(), target.as_deref()) {
            Ok((_, dot)) => {
                print!("{dot}");
                return;
            }
            Err(e) => {
                eprintln!("error: {e}");
                std::process::exit(3);
            }
        }
    }
    let began = Instant::now();
    let mut stats = Stats::default();
    let report = match run(&cli, &mut stats) {
        Ok(r) => r.stats(&stats),
        Err(e) => Report::error(e),
    }
    .timed(began.elapsed());
    if cli.json {
        println!("{}", report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    std::process::exit(report.verdict.exit_code());
}
