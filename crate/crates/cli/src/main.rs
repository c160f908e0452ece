use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ite_core::bench::{self, Family, Impl};
use ite_core::lang::{self, Outcome, RunError, RunOptions, Show};
use ite_core::oracle::{self, GenOptions, Instance};
use ite_core::{maxk, parallel, GlobalKind, KLimit};

const EXIT_UNSAT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(name = "ite", version, about = "Constraint solving with constructive logical operators")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Post a query, propagate, optionally label, and print the answer.
    Solve {
        file: PathBuf,
        /// Stratification budget, overriding the query's kflag.
        #[arg(long)]
        k: Option<KLimit>,
        #[arg(long, value_parser = parse_duration)]
        timeout: Option<Duration>,
        /// `none`, `all`, or a comma-separated variable list to label.
        #[arg(long, default_value = "none")]
        label: String,
        /// `visible`, `all`, or a comma-separated variable list to print.
        #[arg(long, default_value = "visible")]
        show: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a benchmark family across implementations and write CSV.
    Bench {
        #[arg(long)]
        family: Family,
        /// Sizes as `lo..hi:step`.
        #[arg(long, default_value = "20..200:20", value_parser = bench::parse_sizes)]
        n: ::std::vec::Vec<usize>,
        /// Comma-separated: `cd`, `cd(K)`, `cd(A..B)`, `reified`.
        #[arg(long, default_value = "cd,cd(2),cd(3),cd(4),reified", value_parser = bench::parse_impls)]
        impls: ::std::vec::Vec<Impl>,
        #[arg(long, default_value = "60s", value_parser = parse_duration)]
        timeout: Duration,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "ITE_SEED", default_value_t = 0)]
        seed: u64,
        /// Cases run at once; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Cross-check propagation and labeling against brute-force enumeration.
    OracleCheck {
        /// `random`, a global constraint name, or `file`.
        #[arg(long, default_value = "random")]
        family: String,
        /// Largest list length for global families.
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, env = "ITE_SEED", default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        cases: usize,
        /// Query file, for `--family file`.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Find the budget beyond which propagation prunes nothing more.
    MaximalK {
        file: PathBuf,
        #[arg(long, default_value_t = 8)]
        kmax: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    let d = match s.parse::<f64>() {
        Ok(secs) if secs.is_finite() && secs >= 0.0 => Duration::from_secs_f64(secs),
        Ok(_) => return Err(format!("bad duration `{s}`")),
        Err(_) => humantime::parse_duration(s).map_err(|e| format!("bad duration `{s}`: {e}"))?,
    };
    if d.is_zero() {
        return Err("duration must be positive".into());
    }
    Ok(d)
}

fn selection(s: &str) -> Option<Show> {
    match s {
        "none" => None,
        "all" => Some(Show::All),
        "visible" => Some(Show::Visible),
        list => Some(Show::Vars(list.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect())),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::Solved => "solved",
        Outcome::Suspended => "suspended",
        Outcome::Unsat => "unsat",
        Outcome::Timeout => "timeout",
    }
}

fn solve(file: &Path, opts: RunOptions, format: Format) -> anyhow::Result<ExitCode> {
    let src = read(file)?;
    let answer = match parallel::with_big_stack(|| lang::run(&src, &opts)) {
        Ok(a) => a,
        Err(RunError::Parse(e)) => {
            eprintln!("{}", e.render(&src, &file.display().to_string()));
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        Err(RunError::Usage(m)) => {
            eprintln!("error: {m}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        Err(e) => bail!(e),
    };
    match format {
        Format::Text => println!("{}", answer.text),
        Format::Json => {
            let domains: serde_json::Map<String, serde_json::Value> =
                answer.domains.iter().map(|(n, d)| (n.clone(), json!(lang::format_domain(d)))).collect();
            let v = json!({
                "outcome": outcome_name(answer.outcome),
                "k": answer.k.to_string(),
                "answer": answer.text,
                "domains": domains,
                "stats": {
                    "prop_runs": answer.stats.prop_runs,
                    "speculations": answer.stats.speculations,
                    "nodes": answer.stats.nodes,
                },
            });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
    }
    Ok(match answer.outcome {
        Outcome::Solved | Outcome::Suspended => ExitCode::SUCCESS,
        Outcome::Unsat => ExitCode::from(EXIT_UNSAT),
        Outcome::Timeout => ExitCode::from(EXIT_TIMEOUT),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_bench(
    family: Family,
    sizes: &[usize],
    impls: &[Impl],
    timeout: Duration,
    out: Option<&Path>,
    seed: u64,
    jobs: usize,
) -> anyhow::Result<ExitCode> {
    let cases = bench::cases(family, sizes, impls, timeout, seed);
    let records = bench::run_cases(&cases, jobs);
    let mut text = String::from(bench::CSV_HEADER);
    text.push('\n');
    for r in &records {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle_file(path: &Path) -> anyhow::Result<ExitCode> {
    let src = read(path)?;
    let q = match lang::parse(&src) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("{}", e.render(&src, &path.display().to_string()));
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let inst = match oracle::instance_from_query(&q) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let sols = oracle::solutions(&inst)?;
    let proj = oracle::projections(&sols, inst.doms.len());
    println!("solutions={}", sols.len());
    for (name, p) in q.names.iter().zip(&proj) {
        println!("{name} in {}", lang::format_domain(p));
    }
    let check = parallel::with_big_stack(|| oracle::check_instance(&inst, &oracle::DEFAULT_KS))?;
    for c in &check.per_k {
        println!(
            "k={} sound={} gaps={} labeling={}",
            c.k,
            c.unsound.is_empty(),
            c.gaps,
            if c.labeling_ok { "match" } else { "mismatch" }
        );
    }
    Ok(if check.sound() && check.labeling_ok() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_UNSAT) })
}

fn oracle_check(
    family: &str,
    n: usize,
    seed: u64,
    cases: usize,
    file: Option<&Path>,
    jobs: usize,
) -> anyhow::Result<ExitCode> {
    let instances: Vec<Instance> = match family {
        "file" => {
            let Some(p) = file else {
                eprintln!("error: --family file needs --file");
                return Ok(ExitCode::from(EXIT_USAGE));
            };
            return oracle_file(p);
        }
        "random" => oracle::random_instances(seed, cases, &GenOptions::default()),
        name => match GlobalKind::from_name(name) {
            Some(kind) => oracle::global_instances(kind, n),
            None => {
                eprintln!("error: unknown family `{name}`");
                return Ok(ExitCode::from(EXIT_USAGE));
            }
        },
    };
    let report = match oracle::sweep(&instances, &oracle::DEFAULT_KS, jobs) {
        Ok(r) => r,
        Err(oracle::OracleError::TooLarge(s)) => {
            eprintln!("error: instance has {s} assignments, more than {}", oracle::MAX_ASSIGNMENTS);
            return Ok(ExitCode::from(EXIT_USAGE));
        }
        Err(e) => bail!(e),
    };
    println!("family={family} seed={seed} {report}");
    for &i in report.unsound.iter().chain(&report.labeling).take(5) {
        let inst = &instances[i];
        let names: Vec<String> = (0..inst.doms.len()).map(|j| format!("V{j}")).collect();
        let doms: Vec<String> = inst.doms.iter().map(lang::format_domain).collect();
        eprintln!("case {i}: {} with {}", lang::print_ctr(&inst.ctr, &names), doms.join(", "));
    }
    Ok(if report.ok() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_UNSAT) })
}

fn maximal_k(file: &Path, kmax: u32) -> anyhow::Result<ExitCode> {
    let src = read(file)?;
    let q = match lang::parse(&src) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("{}", e.render(&src, &file.display().to_string()));
            return Ok(ExitCode::from(EXIT_USAGE));
        }
    };
    let r = parallel::with_big_stack(|| maxk::maximal_k(&q, kmax))?;
    match r.k {
        Some(k) => println!("maximal k: {k}"),
        None => println!("maximal k: >= {kmax}"),
    }
    println!("heuristic (constructive nesting depth): {}", r.heuristic);
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Solve { file, k, timeout, label, show, format } => {
            let show = selection(&show).unwrap_or_default();
            let opts = RunOptions { k, timeout, label: selection(&label), show };
            solve(&file, opts, format)
        }
        Cmd::Bench { family, n, impls, timeout, out, seed, jobs } => {
            run_bench(family, &n, &impls, timeout, out.as_deref(), seed, jobs)
        }
        Cmd::OracleCheck { family, n, seed, cases, file, jobs } => {
            oracle_check(&family, n, seed, cases, file.as_deref(), jobs)
        }
        Cmd::MaximalK { file, kmax } => maximal_k(&file, kmax),
    };
    r.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_USAGE)
    })
}
