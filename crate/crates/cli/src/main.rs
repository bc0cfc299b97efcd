use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ballotcraft::audit::{
    check_anonymity, check_local_strategy_proofness, check_strategy_proofness, check_tops_only, check_unanimity, AuditReport,
    FromTops, DEFAULT_BUDGET,
};
use ballotcraft::decompose::decompose_anonymous;
use ballotcraft::domains::{
    gen_complete, gen_hybrid, gen_multiple_single_peaked, gen_semi_single_peaked, gen_single_peaked, is_regular, Domain,
};
use ballotcraft::rational::format_decimal;
use ballotcraft::rules::{check_per_capita, eval_pfbr, BallotsFile, Pfbr, ProbabilisticBallots};
use ballotcraft::structure::{full_graph, recover_thresholds};
use ballotcraft::{Alternative, Error, TopProfile};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "ballotcraft", version, about = "Hybrid domains and probabilistic fixed ballot rules")]
struct Cli {
    /// Worker threads for audits (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and inspect preference domains.
    #[command(subcommand)]
    Domain(DomainCmd),
    /// Evaluate, audit and decompose ballot rules.
    #[command(subcommand)]
    Rule(RuleCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Complete,
    SinglePeaked,
    Hybrid,
    SemiSinglePeaked,
    Multiple,
}

#[derive(Subcommand)]
enum DomainCmd {
    /// Write a generated domain.
    Gen {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long, required_unless_present = "axes")]
        m: Option<usize>,
        #[arg(long)]
        klo: Option<usize>,
        #[arg(long)]
        khi: Option<usize>,
        /// Threshold alternative for semi-single-peaked domains.
        #[arg(long)]
        threshold: Option<usize>,
        /// Axes for multiple single-peaked domains, e.g. "1,2,3,4;1,3,2,4".
        #[arg(long)]
        axes: Option<String>,
    },
    /// Richness, diversity and no-restoration.
    Check { file: PathBuf },
    /// Recover hybrid thresholds.
    Thresholds {
        file: PathBuf,
        /// Print the strong-connectedness graph in DOT format instead.
        #[arg(long)]
        dot: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Sp,
    Localsp,
    Unanimity,
    Topsonly,
    Anon,
}

#[derive(Subcommand)]
enum RuleCmd {
    /// Social lottery at a profile of peaks.
    Eval {
        #[arg(long)]
        ballots: PathBuf,
        /// Peaks as 1-based indices, e.g. 2,4.
        #[arg(long, value_delimiter = ',', required = true)]
        tops: Vec<usize>,
        /// Also print decimal approximations.
        #[arg(long)]
        decimal: bool,
    },
    /// Audit properties over a domain.
    Audit {
        #[arg(long)]
        ballots: PathBuf,
        #[arg(long)]
        domain: PathBuf,
        /// Number of voters; defaults to the ballots' electorate.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "sp")]
        checks: Vec<Check>,
        /// Dominance-check budget for full-profile scans.
        #[arg(long, env = "BALLOTCRAFT_BUDGET")]
        budget: Option<u128>,
    },
    /// Decompose anonymous ballots into fixed ballot rules.
    Decompose {
        #[arg(long)]
        ballots: PathBuf,
        /// Thresholds klo,khi; defaults to those in the ballots file.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<usize>>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExceeded { .. } | Error::EnumerationOverflow { .. } | Error::SizeCap(_) => 2,
            Error::NotRegular(_) => 1,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn malformed(message: impl Into<String>) -> Failure {
    Failure { code: 3, message: message.into() }
}

/// Result document plus exit code (0 or 1).
type Outcome = Result<(String, u8), Failure>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

fn read_ballots(path: &Path) -> Result<(ProbabilisticBallots, Option<(usize, usize)>), Failure> {
    let file: BallotsFile = read_json(path)?;
    Ok((file.to_probabilistic()?, file.thresholds()))
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn pair(v: &[usize], what: &str) -> Result<(usize, usize), Failure> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(malformed(format!("{what} takes two values"))),
    }
}

fn domain_cmd(cmd: DomainCmd) -> Outcome {
    match cmd {
        DomainCmd::Gen { family, m, klo, khi, threshold, axes } => {
            let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| malformed(format!("--{flag} is required")));
            let d = match family {
                Family::Complete => gen_complete(need(m, "m")?)?,
                Family::SinglePeaked => gen_single_peaked(need(m, "m")?)?,
                Family::Hybrid => gen_hybrid(need(m, "m")?, need(klo, "klo")?, need(khi, "khi")?)?,
                Family::SemiSinglePeaked => gen_semi_single_peaked(need(m, "m")?, Alternative::new(need(threshold, "threshold")?))?,
                Family::Multiple => {
                    let text = axes.ok_or_else(|| malformed("--axes is required"))?;
                    let orders = text
                        .split(';')
                        .map(|axis| axis.split(',').map(|k| k.trim().parse::<usize>()).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| malformed(format!("--axes: {e}")))?;
                    gen_multiple_single_peaked(&orders)?
                }
            };
            eprintln!("{} preferences", d.len());
            Ok((pretty(&d), 0))
        }
        DomainCmd::Check { file } => {
            let d: Domain = read_json(&file)?;
            let report = is_regular(&d);
            let code = if report.is_regular() { 0 } else { 1 };
            Ok((pretty(&report), code))
        }
        DomainCmd::Thresholds { file, dot } => {
            let d: Domain = read_json(&file)?;
            if dot {
                return Ok((full_graph(&d).to_dot(), 0));
            }
            Ok((pretty(&recover_thresholds(&d)?), 0))
        }
    }
}

fn run_check(check: Check, rule: &Pfbr, d: &Domain, n: usize, budget: u128) -> Result<AuditReport, Error> {
    match check {
        Check::Sp => check_strategy_proofness(rule, d, n),
        Check::Localsp => check_local_strategy_proofness(rule, d, n),
        Check::Unanimity => check_unanimity(rule, d, n),
        Check::Topsonly => check_tops_only(&FromTops(rule), d, n, budget),
        Check::Anon => check_anonymity(rule, d, n),
    }
}

fn rule_cmd(cmd: RuleCmd) -> Outcome {
    match cmd {
        RuleCmd::Eval { ballots, tops, decimal } => {
            let (b, _) = read_ballots(&ballots)?;
            let tops = TopProfile::from_indices(&tops)?;
            let lottery = eval_pfbr(&b, &tops)?;
            let mut doc = json!({ "tops": tops.to_string(), "lottery": lottery });
            if decimal {
                let approx: Vec<String> = lottery.probs().iter().map(|p| format_decimal(p, 6)).collect();
                doc["approximate_decimal"] = json!(approx);
            }
            Ok((pretty(&doc), 0))
        }
        RuleCmd::Audit { ballots, domain, n, checks, budget } => {
            let (b, _) = read_ballots(&ballots)?;
            let d: Domain = read_json(&domain)?;
            let n = n.unwrap_or(b.n());
            let rule = Pfbr::new(b)?;
            let budget = budget.unwrap_or(DEFAULT_BUDGET);
            let reports = checks.iter().map(|&c| run_check(c, &rule, &d, n, budget)).collect::<Result<Vec<_>, _>>()?;
            let passed = reports.iter().all(AuditReport::passed);
            let doc = json!({ "passed": passed, "reports": reports });
            Ok((pretty(&doc), if passed { 0 } else { 1 }))
        }
        RuleCmd::Decompose { ballots, thresholds } => {
            let (b, from_file) = read_ballots(&ballots)?;
            let (klo, khi) = match thresholds {
                Some(v) => pair(&v, "--thresholds")?,
                None => from_file.ok_or_else(|| malformed("no thresholds given"))?,
            };
            match decompose_anonymous(&b, klo, khi) {
                Ok(result) => {
                    let doc = json!({ "status": "decomposed", "components": result.components, "trace": result.trace });
                    Ok((pretty(&doc), 0))
                }
                Err(e @ Error::NotPerCapitaMonotone(_)) => {
                    let (_, witness) = check_per_capita(&b, klo, khi)?;
                    let doc = json!({ "status": "rejected", "reason": e.to_string(), "witness": witness });
                    Ok((pretty(&doc), 1))
                }
                Err(e @ (Error::NotAnonymous | Error::NotCrd)) => {
                    let doc = json!({ "status": "rejected", "reason": e.to_string(), "witness": Value::Null });
                    Ok((pretty(&doc), 1))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("{}", json!({ "error": e.to_string() }));
            return ExitCode::from(3);
        }
    }
    let outcome = match cli.command {
        Command::Domain(cmd) => domain_cmd(cmd),
        Command::Rule(cmd) => rule_cmd(cmd),
    };
    match outcome {
        Ok((text, code)) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("{}", json!({ "error": e.to_string() }));
                return ExitCode::from(3);
            }
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("{}", json!({ "error": f.message }));
            ExitCode::from(f.code)
        }
    }
}
