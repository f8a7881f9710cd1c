//! Subcommand definitions and execution.
//!
//! Exit-code contract (applied in `main`): 0 success, 1 usage or parse
//! error, 2 validation failure, 3 monotonicity or inequality violation
//! detected.

use crate::report::{
    compare_rows, fmt_sig12, report_rows, write_rows, CheckRow, OutputFormat, ReportRow, TrialRow,
};
use crate::scenario::{LoadError, LoadedScenario};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use std::path::PathBuf;
use sweeplab_core::ineq::{self, Direction};
use sweeplab_core::lattice::enumerate_partitions;
use sweeplab_core::model::Schedule;
use sweeplab_core::ratio::rat;
use sweeplab_core::rules::{self, Tally, WinRuleSpec};
use sweeplab_core::sweep::{self, Method, SweepError, DEFAULT_ENUMERATION_CAP};
use sweeplab_core::turnout::TurnoutError;

const DEFAULT_SAMPLES: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(
    name = "sweeplab",
    version,
    about = "Single-party sweep probabilities under polling schedules: \
             exact enumeration, Monte Carlo, rule validation, and \
             inequality trials"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    #[default]
    Csv,
    Records,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> OutputFormat {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Records => OutputFormat::Records,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Exact,
    Mc,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    pub scenario: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo sweep report for the scenario's schedules.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Sample count (default: analysis section, else 100000).
        #[arg(long)]
        samples: Option<u64>,
        /// Master seed (default: analysis section, else 0).
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate only these schedules (repeatable).
        #[arg(long = "schedule")]
        schedules: Vec<String>,
    },
    /// Exact sweep report by full enumeration of the turnout measure.
    Enumerate {
        #[command(flatten)]
        common: CommonArgs,
        /// Enumeration cap override (default: analysis section, else 2^24).
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long = "schedule")]
        schedules: Vec<String>,
    },
    /// Compare two named schedules and audit coarsening monotonicity.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// First schedule (default: first analysis schedule).
        #[arg(long)]
        schedule_a: Option<String>,
        /// Second schedule (default: second analysis schedule).
        #[arg(long)]
        schedule_b: Option<String>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Exact sweep audit over every uniform partition of the election set.
    LatticeScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Validate the scenario, its win rules, and win-function alignment.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
        /// Tally-entry bound for the exhaustive rule scans.
        #[arg(long, default_value_t = 12)]
        bound: u64,
        /// Skip the alignment scan above this electorate size.
        #[arg(long, default_value_t = 12)]
        alignment_max_voters: u32,
    },
    /// Randomized exact trials for the coarsening and correlation
    /// inequalities and the coin-merge identity.
    Ineq {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Voter-set bound for generated functions.
        #[arg(long, default_value_t = 3)]
        max_voters: u32,
        /// Election bound for generated tuples.
        #[arg(long, default_value_t = 3)]
        max_elections: u32,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Packaged demonstration scenarios.
    Demo {
        #[command(subcommand)]
        demo: DemoCommand,
    },
}

#[derive(Subcommand, Debug)]
pub enum DemoCommand {
    /// Two parties, `per-side` supporters each, p = 1/2, two FPTP
    /// elections; Monte Carlo sweep report for the simultaneous and the
    /// separate schedule.
    Onoe {
        #[arg(long, default_value_t = 5000)]
        per_side: u64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
}

/// Errors classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Exit 1: bad flags, unreadable files, malformed documents.
    Usage(String),
    /// Exit 2: the scenario or one of its rules failed validation.
    Validation(String),
    /// Exit 3: a monotonicity or inequality violation was detected.
    Violation(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Violation(m) => {
                write!(f, "{m}")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Violation(_) => 3,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> CliError {
        match e {
            LoadError::Parse(m) => CliError::Usage(m),
            LoadError::Validation(m) => CliError::Validation(m),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> CliError {
        match &e {
            SweepError::ZeroSamples => CliError::Usage(e.to_string()),
            SweepError::Turnout(TurnoutError::SupportTooLarge { .. }) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            common,
            samples,
            seed,
            schedules,
        } => {
            let loaded = crate::scenario::load_path(&common.scenario)?;
            let samples = samples.or(loaded.analysis.samples).unwrap_or(DEFAULT_SAMPLES);
            let seed = seed.or(loaded.analysis.seed).unwrap_or(0);
            let targets = pick_schedules(&loaded, &schedules)?;
            let mut rows: Vec<ReportRow> = Vec::new();
            for (name, schedule) in &targets {
                let report = sweep::mc_sweep_report(&loaded.scenario, schedule, samples, seed)?;
                rows.extend(report_rows(&loaded.name, name, &report));
            }
            write_rows(out, common.format.into(), &rows)?;
            Ok(())
        }
        Command::Enumerate {
            common,
            cap,
            schedules,
        } => {
            let loaded = crate::scenario::load_path(&common.scenario)?;
            let cap = cap
                .or(loaded.analysis.cap)
                .unwrap_or(DEFAULT_ENUMERATION_CAP);
            let targets = pick_schedules(&loaded, &schedules)?;
            let mut rows: Vec<ReportRow> = Vec::new();
            for (name, schedule) in &targets {
                let report = sweep::exact_sweep_report(&loaded.scenario, schedule, cap)?;
                rows.extend(report_rows(&loaded.name, name, &report));
            }
            write_rows(out, common.format.into(), &rows)?;
            Ok(())
        }
        Command::Compare {
            common,
            schedule_a,
            schedule_b,
            method,
            samples,
            seed,
            cap,
        } => {
            let loaded = crate::scenario::load_path(&common.scenario)?;
            let (name_a, name_b) = match (schedule_a, schedule_b) {
                (Some(a), Some(b)) => (a, b),
                (a, b) => {
                    let selected = loaded.selected_schedules()?;
                    if selected.len() < 2 {
                        return Err(CliError::Usage(
                            "compare needs two schedules (flags or analysis section)".into(),
                        ));
                    }
                    (
                        a.unwrap_or_else(|| selected[0].0.clone()),
                        b.unwrap_or_else(|| selected[1].0.clone()),
                    )
                }
            };
            let sched_a = loaded
                .schedule(&name_a)
                .ok_or_else(|| CliError::Usage(format!("unknown schedule `{name_a}`")))?
                .clone();
            let sched_b = loaded
                .schedule(&name_b)
                .ok_or_else(|| CliError::Usage(format!("unknown schedule `{name_b}`")))?
                .clone();
            let method = resolve_method(method, &loaded, samples, seed, cap)?;
            let cmp = sweep::compare_schedules(&loaded.scenario, &sched_a, &sched_b, &method)?;
            let rows = compare_rows(&loaded.name, &name_a, &name_b, &cmp);
            write_rows(out, common.format.into(), &rows)?;
            if !cmp.violations.is_empty() {
                let detail = cmp
                    .violations
                    .iter()
                    .map(|v| {
                        format!(
                            "{} short by {}",
                            cmp.report_a.contenders[v.contender],
                            v.exact_shortfall
                                .as_ref()
                                .map(|e| e.to_string())
                                .unwrap_or_else(|| fmt_sig12(v.shortfall))
                        )
                    })
                    .collect::<Vec<_>>()
                    .join("; ");
                return Err(CliError::Violation(format!(
                    "coarsening monotonicity violated: {detail}"
                )));
            }
            Ok(())
        }
        Command::LatticeScan { common, cap } => {
            let loaded = crate::scenario::load_path(&common.scenario)?;
            let cap = cap
                .or(loaded.analysis.cap)
                .unwrap_or(DEFAULT_ENUMERATION_CAP);
            lattice_scan(&loaded, cap, common.format.into(), out)
        }
        Command::Validate {
            common,
            bound,
            alignment_max_voters,
        } => {
            let loaded = crate::scenario::load_path(&common.scenario)?;
            validate_command(&loaded, bound, alignment_max_voters, common.format.into(), out)
        }
        Command::Ineq {
            trials,
            seed,
            max_voters,
            max_elections,
            format,
        } => ineq_command(trials, seed, max_voters, max_elections, format.into(), out),
        Command::Demo { demo } => match demo {
            DemoCommand::Onoe {
                per_side,
                samples,
                seed,
                format,
            } => {
                if per_side == 0 {
                    return Err(CliError::Usage("per-side must be at least 1".into()));
                }
                let (scenario, simultaneous, separate) = crate::demo::onoe_scenario(per_side);
                let mut rows: Vec<ReportRow> = Vec::new();
                for (name, schedule) in
                    [("simultaneous", &simultaneous), ("separate", &separate)]
                {
                    let report = sweep::mc_sweep_report(&scenario, schedule, samples, seed)?;
                    rows.extend(report_rows("onoe", name, &report));
                }
                write_rows(out, format.into(), &rows)?;
                Ok(())
            }
        },
    }
}

fn pick_schedules(
    loaded: &LoadedScenario,
    flags: &[String],
) -> Result<Vec<(String, Schedule)>, CliError> {
    if flags.is_empty() {
        return Ok(loaded.selected_schedules()?);
    }
    flags
        .iter()
        .map(|n| {
            loaded
                .schedule(n)
                .map(|s| (n.clone(), s.clone()))
                .ok_or_else(|| CliError::Usage(format!("unknown schedule `{n}`")))
        })
        .collect()
}

fn resolve_method(
    flag: Option<MethodArg>,
    loaded: &LoadedScenario,
    samples: Option<u64>,
    seed: Option<u64>,
    cap: Option<u64>,
) -> Result<Method, CliError> {
    let from_analysis = match loaded.analysis.method.as_deref() {
        Some("exact") => Some(MethodArg::Exact),
        Some("mc") => Some(MethodArg::Mc),
        Some(other) => {
            return Err(CliError::Validation(format!(
                "analysis: method must be `exact` or `mc`, got `{other}`"
            )))
        }
        None => None,
    };
    let method = flag.or(from_analysis).unwrap_or(MethodArg::Exact);
    Ok(match method {
        MethodArg::Exact => Method::Exact {
            cap: cap
                .or(loaded.analysis.cap)
                .unwrap_or(DEFAULT_ENUMERATION_CAP),
        },
        MethodArg::Mc => Method::MonteCarlo {
            samples: samples.or(loaded.analysis.samples).unwrap_or(DEFAULT_SAMPLES),
            seed: seed.or(loaded.analysis.seed).unwrap_or(0),
        },
    })
}

fn lattice_scan(
    loaded: &LoadedScenario,
    cap: u64,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let n = loaded.scenario.num_elections();
    if n > 6 {
        return Err(CliError::Usage(format!(
            "lattice-scan supports up to 6 elections, scenario has {n}"
        )));
    }
    let partitions =
        enumerate_partitions(n).map_err(|e| CliError::Usage(e.to_string()))?;
    let m = loaded.scenario.num_voters() as usize;
    let mut rows: Vec<ReportRow> = Vec::new();
    let mut values: Vec<Vec<BigRational>> = Vec::new();
    for partition in &partitions {
        let schedule = Schedule::uniform(partition.clone(), m);
        let report = sweep::exact_sweep_report(&loaded.scenario, &schedule, cap)?;
        rows.extend(report_rows(
            &loaded.name,
            &loaded.partition_label(partition),
            &report,
        ));
        values.push(
            report
                .per_contender
                .iter()
                .map(|e| e.exact.clone().expect("exact report"))
                .collect(),
        );
    }
    write_rows(out, format, &rows)?;

    let names = rules::WinContext::new(&loaded.scenario)
        .map_err(|e| CliError::Validation(e.to_string()))?
        .contender_names()
        .to_vec();
    let mut audited = 0usize;
    let mut violations = Vec::new();
    for (i, coarse) in partitions.iter().enumerate() {
        for (j, fine) in partitions.iter().enumerate() {
            if i == j || !coarse.is_coarser_than(fine).unwrap_or(false) {
                continue;
            }
            audited += 1;
            for (c, name) in names.iter().enumerate() {
                if values[i][c] < values[j][c] {
                    violations.push(format!(
                        "{name}: {} < {} for coarser {} vs finer {}",
                        values[i][c],
                        values[j][c],
                        loaded.partition_label(coarse),
                        loaded.partition_label(fine),
                    ));
                }
            }
        }
    }
    eprintln!(
        "lattice-scan: {} partitions, {audited} comparable pairs audited, {} violations",
        partitions.len(),
        violations.len()
    );
    if violations.is_empty() {
        Ok(())
    } else {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        Err(CliError::Violation(format!(
            "{} coarsening monotonicity violations (unvalidated rule or engine defect)",
            violations.len()
        )))
    }
}

fn rule_label(rule: &WinRuleSpec) -> String {
    match rule {
        WinRuleSpec::Fptp => "fptp".into(),
        WinRuleSpec::PartyListPr {
            seats,
            rounding,
            win,
        } => {
            let r = match rounding {
                rules::RoundingMethod::HighestAverageDHondt => "dhondt",
                rules::RoundingMethod::LargestRemainderHare => "hare",
            };
            let w = match win {
                rules::PrWinMode::MostSeats => "most_seats",
                rules::PrWinMode::StrictMajority => "strict_majority",
            };
            format!("pr {r} {w} {seats} seats")
        }
    }
}

fn validate_command(
    loaded: &LoadedScenario,
    bound: u64,
    alignment_max_voters: u32,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut rows: Vec<CheckRow> = Vec::new();
    let mut failed = false;

    let violations = loaded.scenario.validate();
    rows.push(CheckRow {
        check: "scenario".into(),
        target: loaded.name.clone(),
        result: if violations.is_empty() { "pass" } else { "fail" }.into(),
        detail: violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; "),
    });
    failed |= !violations.is_empty();

    let ctx = rules::WinContext::new(&loaded.scenario)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let slots = ctx.num_ballot_contenders();
    let group_of = ctx.contender_of_ballot().to_vec();
    let pooled = loaded.scenario.alliances.is_some();
    // keep the scan size sane: (bound+1)^slots tallies
    let mut bound = bound;
    while (bound + 1).pow(slots as u32) > 5_000_000 && bound > 1 {
        bound -= 1;
    }
    for election in &loaded.scenario.elections {
        let rule = election.rule.clone();
        let target = format!(
            "election {} ({}{})",
            loaded.election_names[election.id as usize],
            rule_label(&rule),
            if pooled { ", alliance level" } else { "" }
        );
        let eval = |t: &Tally| ctx.pooled_win_probs(&rule, t);
        let excl = rules::validate_exclusivity(&eval, slots, bound);
        rows.push(check_row("exclusivity", &target, &excl, bound));
        failed |= !excl.passed;
        let mono = rules::validate_monotonicity_grouped(&eval, slots, &group_of, bound);
        rows.push(check_row("monotonicity", &target, &mono, bound));
        failed |= !mono.passed;
    }

    let m = loaded.scenario.num_voters();
    let contender_names = ctx.contender_names().to_vec();
    drop(ctx);
    for (c, name) in contender_names.iter().enumerate() {
        let target = format!("contender {name}");
        if m > alignment_max_voters.min(rules::ALIGNMENT_MAX_VOTERS) {
            rows.push(CheckRow {
                check: "alignment".into(),
                target,
                result: "skipped".into(),
                detail: format!(
                    "electorate of {m} exceeds the exhaustive-scan bound of {}",
                    alignment_max_voters.min(rules::ALIGNMENT_MAX_VOTERS)
                ),
            });
            continue;
        }
        match rules::check_alignment(&loaded.scenario, c, alignment_max_voters) {
            Ok(None) => rows.push(CheckRow {
                check: "alignment".into(),
                target,
                result: "pass".into(),
                detail: String::new(),
            }),
            Ok(Some(witness)) => {
                failed = true;
                rows.push(CheckRow {
                    check: "alignment".into(),
                    target,
                    result: "fail".into(),
                    detail: witness.to_string(),
                });
            }
            Err(e) => {
                failed = true;
                rows.push(CheckRow {
                    check: "alignment".into(),
                    target,
                    result: "fail".into(),
                    detail: e.to_string(),
                });
            }
        }
    }

    write_rows(out, format, &rows)?;
    if failed {
        Err(CliError::Validation(
            "validation failed; see report rows".into(),
        ))
    } else {
        Ok(())
    }
}

fn check_row(check: &str, target: &str, result: &rules::RuleCheck, bound: u64) -> CheckRow {
    CheckRow {
        check: check.into(),
        target: target.into(),
        result: if result.passed { "pass" } else { "fail" }.into(),
        detail: match &result.counterexample {
            None => format!("exhaustive scan, entries <= {bound}"),
            Some(ce) => format!("tally {}: {}", ce.tally, ce.detail),
        },
    }
}

fn ineq_command(
    trials: u64,
    seed: u64,
    max_voters: u32,
    max_elections: u32,
    format: OutputFormat,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    let max_voters = max_voters.clamp(1, 10);
    let max_elections = max_elections.clamp(1, 6);
    let mut rows: Vec<TrialRow> = Vec::new();
    let mut total_failures = 0u64;

    // coarsening inequality over all comparable uniform partition pairs
    {
        let mut rng = stream(seed, 0);
        let mut cases = 0u64;
        let mut failures = 0u64;
        let mut min_margin: Option<BigRational> = None;
        for _ in 0..trials {
            let m = rng.random_range(1..=max_voters);
            let n = rng.random_range(1..=max_elections);
            let directions: Vec<Direction> = (0..m)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        Direction::Increasing
                    } else {
                        Direction::Decreasing
                    }
                })
                .collect();
            let tuple = ineq::random_aligned_tuple(m, n, &directions, &mut rng)
                .expect("generator bounds respected");
            let probs: Vec<BigRational> =
                (0..m).map(|_| rat(rng.random_range(0..=6), 6)).collect();
            let partitions = enumerate_partitions(n).expect("n <= 6");
            for coarse in &partitions {
                for fine in &partitions {
                    if !coarse.is_coarser_than(fine).unwrap() {
                        continue;
                    }
                    let outcome = ineq::verify_theorem_d(
                        &tuple,
                        &Schedule::uniform(fine.clone(), m as usize),
                        &Schedule::uniform(coarse.clone(), m as usize),
                        &probs,
                    )
                    .expect("comparable aligned inputs");
                    cases += 1;
                    if !outcome.holds {
                        failures += 1;
                    }
                    min_margin = Some(match min_margin.take() {
                        None => outcome.margin,
                        Some(prev) => prev.min(outcome.margin),
                    });
                }
            }
        }
        total_failures += failures;
        rows.push(TrialRow {
            check: "coarsening_margin".into(),
            trials: trials.to_string(),
            cases: cases.to_string(),
            failures: failures.to_string(),
            min_margin: min_margin.map(|m| m.to_string()).unwrap_or_default(),
            result: if failures == 0 { "pass" } else { "fail" }.into(),
        });
    }

    // increasing-pair covariance, with constant-shift invariance
    {
        let mut rng = stream(seed, 1);
        let mut cases = 0u64;
        let mut failures = 0u64;
        let mut min_cov: Option<BigRational> = None;
        for _ in 0..trials {
            let m = rng.random_range(1..=max_voters.min(4));
            let directions = vec![Direction::Increasing; m as usize];
            let tuple = ineq::random_aligned_tuple(m, 2, &directions, &mut rng)
                .expect("generator bounds respected");
            let probs: Vec<BigRational> =
                (0..m).map(|_| rat(rng.random_range(0..=6), 6)).collect();
            let f1 = &tuple.functions()[0];
            let f2 = &tuple.functions()[1];
            let cov = ineq::harris_covariance(f1, f2, &probs).expect("increasing inputs");
            cases += 1;
            if cov < BigRational::from_integer(0.into()) {
                failures += 1;
            }
            let shift = rat(rng.random_range(1..=5), 2);
            let shifted = ineq::harris_covariance(&f1.plus_constant(&shift), f2, &probs)
                .expect("still increasing");
            cases += 1;
            if shifted != cov {
                failures += 1;
            }
            min_cov = Some(match min_cov.take() {
                None => cov,
                Some(prev) => prev.min(cov),
            });
        }
        total_failures += failures;
        rows.push(TrialRow {
            check: "increasing_covariance".into(),
            trials: trials.to_string(),
            cases: cases.to_string(),
            failures: failures.to_string(),
            min_margin: min_cov.map(|m| m.to_string()).unwrap_or_default(),
            result: if failures == 0 { "pass" } else { "fail" }.into(),
        });
    }

    // single-vs-double coin identity on random rationals
    {
        let mut rng = stream(seed, 2);
        let mut failures = 0u64;
        for _ in 0..trials {
            let mut r = |lo: i64, hi: i64| rat(rng.random_range(lo..=hi), rng.random_range(1..=6));
            let (a1, a2, b1, b2, c) = (r(-6, 6), r(-6, 6), r(-6, 6), r(-6, 6), r(-6, 6));
            let p = rat(rng.random_range(0..=6), 6);
            let outcome = ineq::proof_identity_check(&a1, &a2, &b1, &b2, &c, &p);
            if !outcome.holds {
                failures += 1;
            }
        }
        total_failures += failures;
        rows.push(TrialRow {
            check: "coin_merge_identity".into(),
            trials: trials.to_string(),
            cases: trials.to_string(),
            failures: failures.to_string(),
            min_margin: "0".into(),
            result: if failures == 0 { "pass" } else { "fail" }.into(),
        });
    }

    write_rows(out, format, &rows)?;
    if total_failures > 0 {
        Err(CliError::Violation(format!(
            "{total_failures} inequality violations detected"
        )))
    } else {
        Ok(())
    }
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
