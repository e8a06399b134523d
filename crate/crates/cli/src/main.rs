use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lcs_core::curriculum::Curriculum;
use lcs_core::engine::EngineConfig;
use lcs_core::layered::{curve_csv, render_report, run_curriculum, solution_lines, solution_tree, validate_function};
use lcs_core::problem::{dataset_line, Domain, Problem, ProblemKind, Sampler};
use lcs_core::toolbox::Toolbox;

#[derive(Parser)]
#[command(name = "lcs", version, about = "Layered classifier-system training with code-fragment actions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every layer of a curriculum and write the toolbox, curves and report.
    Train {
        curriculum: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, env = "LCS_OUT_DIR", default_value = "lcs-out")]
        out: PathBuf,
        /// Runs per layer, overriding the curriculum file.
        #[arg(long)]
        runs: Option<u32>,
        /// Existing toolbox whose functions later layers may use.
        #[arg(long)]
        toolbox: Option<PathBuf>,
    },
    /// Check a learned function against fresh instances at one scale.
    Validate {
        toolbox: PathBuf,
        /// Domain (mux, carry, parity, majority) or layer name/tag.
        problem: String,
        #[arg(long)]
        scale: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print `instance<TAB>target` lines for a problem.
    GenData {
        problem: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        scale: Option<usize>,
    },
    /// Print the rules of a learned function and its expanded tree.
    ShowSolution { toolbox: PathBuf, tag: String },
}

/// Failure with an exit code: 1 for unsuccessful learning or validation, 2 for bad input.
struct Exit(u8, String);

fn bad(message: impl Into<String>) -> Exit {
    Exit(2, message.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { curriculum, seed, out, runs, toolbox } => {
            train(&curriculum, seed, &out, runs, toolbox.as_deref())
        }
        Command::Validate { toolbox, problem, scale, count, seed } => {
            validate(&toolbox, &problem, scale, count, seed)
        }
        Command::GenData { problem, count, seed, scale } => gen_data(&problem, count, seed, scale),
        Command::ShowSolution { toolbox, tag } => show_solution(&toolbox, &tag),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit(code, message)) => {
            if !message.is_empty() {
                eprintln!("error: {message}");
            }
            ExitCode::from(code)
        }
    }
}

fn load_toolbox(path: &Path) -> Result<Toolbox, Exit> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
    Toolbox::load(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
}

fn parse_problem(name: &str) -> Result<ProblemKind, Exit> {
    name.parse::<ProblemKind>().map_err(|e| bad(e.to_string()))
}

fn problem_at(kind: ProblemKind, scale: Option<usize>) -> Result<Problem, Exit> {
    match scale {
        Some(n) => Problem::at_scale(kind, n).map_err(|e| bad(e.to_string())),
        None => Ok(Problem::training(kind)),
    }
}

fn train(curriculum: &Path, seed: u64, out: &Path, runs: Option<u32>, base: Option<&Path>) -> Result<(), Exit> {
    let text = fs::read_to_string(curriculum).map_err(|e| bad(format!("{}: {e}", curriculum.display())))?;
    let base = match base {
        Some(path) => load_toolbox(path)?,
        None => Toolbox::axioms(),
    };
    let mut plan = Curriculum::parse(&text, &base.learned_tags()).map_err(|e| match e.unmet_tag() {
        Some(tag) => bad(format!("{}: unmet prerequisite {tag} ({e})", curriculum.display())),
        None => bad(format!("{}: {e}", curriculum.display())),
    })?;
    if let Some(runs) = runs {
        plan = plan.with_runs(runs);
    }

    let started = Instant::now();
    let result = run_curriculum(&plan, seed, base.registry.clone(), &EngineConfig::default(), |layer, run| {
        eprintln!(
            "{} seed {}: {} trials, accuracy {:.4}, {} ({:.1}s elapsed)",
            layer.kind.tag(),
            run.seed,
            run.trials,
            run.final_accuracy,
            match &run.ruleset {
                Ok(rules) => format!("{} rules", rules.len()),
                Err(e) => e.to_string(),
            },
            started.elapsed().as_secs_f64()
        );
    });
    let toolbox = Toolbox::from_result(&result, &base);
    write_outputs(out, &result, &toolbox).map_err(|e| Exit(2, format!("{e:#}")))?;
    eprintln!("wall-clock {:.1}s", started.elapsed().as_secs_f64());
    match result.failed_layer {
        None => Ok(()),
        Some(i) => Err(Exit(
            1,
            format!("layer {} ({}) did not compact in any run", i, result.layers[i].layer.kind.tag()),
        )),
    }
}

fn write_outputs(out: &Path, result: &lcs_core::layered::CurriculumResult, toolbox: &Toolbox) -> Result<()> {
    let curves = out.join("curves");
    fs::create_dir_all(&curves).with_context(|| format!("creating {}", curves.display()))?;
    for report in &result.layers {
        let tag = report.layer.kind.tag();
        let shown = report.chosen_run().or(report.runs.first());
        if let Some(run) = shown {
            fs::write(curves.join(format!("{tag}.csv")), curve_csv(&run.curve))?;
        }
        if report.runs.len() > 1 {
            for (i, run) in report.runs.iter().enumerate() {
                fs::write(curves.join(format!("{tag}.run{i}.csv")), curve_csv(&run.curve))?;
            }
        }
    }
    fs::write(out.join("toolbox.txt"), toolbox.save())?;
    let mut solutions = String::new();
    for report in result.layers.iter().filter(|r| r.chosen.is_some()) {
        solutions.push_str(&render_solution(toolbox, report.layer.kind.tag()));
        solutions.push('\n');
    }
    fs::write(out.join("solutions.txt"), solutions)?;
    fs::write(out.join("report.txt"), render_report(result))?;
    Ok(())
}

fn render_solution(toolbox: &Toolbox, tag: &str) -> String {
    let mut text = format!("[{tag}]\n");
    for line in solution_lines(&toolbox.registry, tag) {
        text.push_str(&line);
        text.push('\n');
    }
    if let Some(tree) = solution_tree(&toolbox.registry, tag) {
        text.push_str(&tree);
        if !tree.ends_with('\n') {
            text.push('\n');
        }
    }
    text
}

fn validate(path: &Path, problem: &str, scale: Option<usize>, count: usize, seed: u64) -> Result<(), Exit> {
    let kind = parse_problem(problem)?;
    let toolbox = load_toolbox(path)?;
    if toolbox.registry.spec(kind.tag()).is_none_or(|s| !s.is_learned()) {
        return Err(bad(format!("{} has no learned function {}", path.display(), kind.tag())));
    }
    let scale = scale.or_else(|| {
        Domain::ALL
            .into_iter()
            .find(|d| d.final_problem() == kind)
            .map(|d| d.validation_rows()[0].0)
    });
    let problem = problem_at(kind, scale)?;
    let accuracy = validate_function(&toolbox.registry, kind.tag(), problem, count, seed);
    println!("{accuracy:.4}");
    if accuracy >= 1.0 {
        Ok(())
    } else {
        Err(Exit(1, String::new()))
    }
}

fn gen_data(problem: &str, count: usize, seed: u64, scale: Option<usize>) -> Result<(), Exit> {
    let kind = parse_problem(problem)?;
    let mut sampler = Sampler::new(problem_at(kind, scale)?, seed);
    let mut out = String::new();
    for _ in 0..count {
        let (instance, target) = sampler.next_pair();
        out.push_str(&dataset_line(&instance, &target));
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn show_solution(path: &Path, tag: &str) -> Result<(), Exit> {
    let toolbox = load_toolbox(path)?;
    if toolbox.registry.spec(tag).is_none_or(|s| !s.is_learned()) {
        return Err(bad(format!("{} has no learned function {tag}", path.display())));
    }
    print!("{}", render_solution(&toolbox, tag));
    Ok(())
}
