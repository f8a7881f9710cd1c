//! Sweep probabilities: the chance that one contender wins every election.
//!
//! Conditional on a turnout, the sweep probability for contender `s` is the
//! product over elections of the per-election win probabilities — residual
//! tie coins are independent across elections by modeling choice. The
//! unconditional value is the expectation of that product under the turnout
//! measure, computed either exactly (full enumeration, rational arithmetic)
//! or by Monte Carlo.
//!
//! Monte Carlo determinism: sample `i` draws from its own ChaCha8 stream
//! keyed by `(master_seed, i)`, samples are accumulated in fixed-size
//! chunks, and chunk partials reduce in index order — so reports are
//! bit-identical for a given (scenario, schedule, samples, seed) no matter
//! how many worker threads run.

use crate::lattice;
use crate::model::{Scenario, Schedule, Violation};
use crate::ratio::to_f64;
use crate::rules::{RuleError, WinContext};
use crate::turnout::{self, sample_rng, Turnout, TurnoutError, TurnoutSampler};
use num::rational::BigRational;
use num::{One, Zero};
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

/// Default cap on the number of enumerated coin outcomes.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 24;

/// Fixed Monte Carlo batch size; part of the reproducibility contract.
const MC_CHUNK: u64 = 4096;

const Z_95: f64 = 1.96;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Turnout(#[from] TurnoutError),
    #[error(transparent)]
    Schedule(#[from] lattice::ChainError),
    #[error("invalid schedule: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSchedule(Vec<Violation>),
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("mixture weights must be nonnegative and sum to exactly 1")]
    BadMixtureWeights,
    #[error("mixture scenarios must share voter, election, and contender counts")]
    MixtureShapeMismatch,
    #[error("mixture must contain at least one scenario")]
    EmptyMixture,
}

/// How to evaluate sweep probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact { cap: u64 },
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodKind {
    Exact,
    MonteCarlo,
}

impl std::fmt::Display for MethodKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MethodKind::Exact => write!(f, "exact"),
            MethodKind::MonteCarlo => write!(f, "mc"),
        }
    }
}

/// One estimated probability: a float value always, the exact rational when
/// the method was exact, and standard error / CI half-width when it was
/// Monte Carlo.
#[derive(Clone, Debug)]
pub struct SweepEstimate {
    pub value: f64,
    pub exact: Option<BigRational>,
    pub std_error: Option<f64>,
    /// 95% half-width: normal approximation, replaced by a Wilson interval
    /// when the normal band would leave [0, 1] (sweeps are often rare).
    pub ci_half_width: Option<f64>,
}

impl SweepEstimate {
    fn exact(value: BigRational) -> SweepEstimate {
        SweepEstimate {
            value: to_f64(&value),
            exact: Some(value),
            std_error: None,
            ci_half_width: None,
        }
    }

    fn monte_carlo(mean: f64, samples: u64, sum_sq: f64, sum: f64) -> SweepEstimate {
        let n = samples as f64;
        let variance = if samples > 1 {
            ((sum_sq - sum * sum / n) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let se = (variance / n).sqrt();
        let normal_hw = Z_95 * se;
        let hw = if mean - normal_hw < 0.0 || mean + normal_hw > 1.0 {
            wilson_half_width(mean, n)
        } else {
            normal_hw
        };
        SweepEstimate {
            value: mean,
            exact: None,
            std_error: Some(se),
            ci_half_width: Some(hw),
        }
    }
}

fn wilson_half_width(p_hat: f64, n: f64) -> f64 {
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    Z_95 * ((p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()) / denom
}

/// Per-contender sweep probabilities plus the any-contender total (sweep
/// events of different contenders are disjoint, so the total is the sum).
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub contenders: Vec<String>,
    pub per_contender: Vec<SweepEstimate>,
    pub any_contender: SweepEstimate,
    pub method: MethodKind,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
}

fn checked_context<'a>(
    scenario: &'a Scenario,
    schedule: &Schedule,
) -> Result<WinContext<'a>, SweepError> {
    let ctx = WinContext::new(scenario)?;
    let schedule_violations = scenario.validate_schedule(schedule);
    if !schedule_violations.is_empty() {
        return Err(SweepError::InvalidSchedule(schedule_violations));
    }
    Ok(ctx)
}

/// Sweep probability for `contender` conditional on a fixed turnout: the
/// product over elections of that election's win probability.
pub fn sweep_prob_given_turnout(
    scenario: &Scenario,
    turnout: &Turnout,
    contender: usize,
) -> Result<BigRational, SweepError> {
    let ctx = WinContext::new(scenario)?;
    let mut prob = BigRational::one();
    for l in 0..scenario.num_elections() {
        prob *= ctx.win_prob(l, contender, turnout.voters_for(l))?;
        if prob.is_zero() {
            break;
        }
    }
    Ok(prob)
}

/// Exact per-contender sweep probabilities by full enumeration of the
/// turnout measure. Refuses supports above `cap`.
pub fn exact_sweep_probabilities(
    scenario: &Scenario,
    schedule: &Schedule,
    cap: u64,
) -> Result<Vec<BigRational>, SweepError> {
    let ctx = checked_context(scenario, schedule)?;
    let support = turnout::support_size(schedule).unwrap_or(u128::MAX);
    if support > cap as u128 {
        return Err(TurnoutError::SupportTooLarge {
            support,
            cap: cap as u128,
        }
        .into());
    }
    let probs: Vec<BigRational> = scenario
        .voters
        .iter()
        .map(|v| v.turnout_prob.clone())
        .collect();
    let n = scenario.num_elections() as usize;
    let k = ctx.num_contenders();
    let m = scenario.num_voters();
    // per-election memo: attending-voter mask -> per-contender win probs
    let mut memo: Vec<HashMap<u64, Vec<BigRational>>> = vec![HashMap::new(); n];
    let mut totals = vec![BigRational::zero(); k];
    let mut scratch = vec![BigRational::one(); k];
    turnout::fold_outcomes(schedule, &probs, |masks, outcome_prob| {
        for c in scratch.iter_mut() {
            *c = BigRational::one();
        }
        for (l, &mask) in masks.iter().enumerate() {
            let wins = memo[l].entry(mask).or_insert_with(|| {
                let set = crate::bitset::VoterSet::from_u64(m, mask);
                ctx.win_probs(l as u32, &set)
                    .expect("validated context evaluates every subset")
            });
            for (c, w) in scratch.iter_mut().zip(wins.iter()) {
                *c *= w;
            }
        }
        for (total, c) in totals.iter_mut().zip(&scratch) {
            *total += &*c * outcome_prob;
        }
    })?;
    Ok(totals)
}

/// Exact sweep probability for a single contender.
pub fn exact_sweep_probability(
    scenario: &Scenario,
    schedule: &Schedule,
    contender: usize,
    cap: u64,
) -> Result<BigRational, SweepError> {
    let ctx = checked_context(scenario, schedule)?;
    if contender >= ctx.num_contenders() {
        return Err(RuleError::BadContender(contender).into());
    }
    Ok(exact_sweep_probabilities(scenario, schedule, cap)?.swap_remove(contender))
}

/// Exact sweep report: per-contender values and the any-contender sum.
pub fn exact_sweep_report(
    scenario: &Scenario,
    schedule: &Schedule,
    cap: u64,
) -> Result<SweepReport, SweepError> {
    let ctx = checked_context(scenario, schedule)?;
    let values = exact_sweep_probabilities(scenario, schedule, cap)?;
    let any: BigRational = values.iter().cloned().sum();
    Ok(SweepReport {
        contenders: ctx.contender_names().to_vec(),
        per_contender: values.into_iter().map(SweepEstimate::exact).collect(),
        any_contender: SweepEstimate::exact(any),
        method: MethodKind::Exact,
        samples: None,
        seed: None,
    })
}

struct ChunkPartial {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    any_sum: f64,
    any_sum_sq: f64,
}

/// Monte Carlo sweep report over `samples` draws from `master_seed`.
pub fn mc_sweep_report(
    scenario: &Scenario,
    schedule: &Schedule,
    samples: u64,
    master_seed: u64,
) -> Result<SweepReport, SweepError> {
    if samples == 0 {
        return Err(SweepError::ZeroSamples);
    }
    let ctx = checked_context(scenario, schedule)?;
    let sampler = TurnoutSampler::new(schedule, &scenario.voters)?;
    let k = ctx.num_contenders();
    let n = scenario.num_elections();
    let m = scenario.num_voters();

    let num_chunks = samples.div_ceil(MC_CHUNK);
    let partials: Vec<ChunkPartial> = (0..num_chunks)
        .into_par_iter()
        .map(|chunk| {
            let first = chunk * MC_CHUNK;
            let last = (first + MC_CHUNK).min(samples);
            let mut acc = ChunkPartial {
                sum: vec![0.0; k],
                sum_sq: vec![0.0; k],
                any_sum: 0.0,
                any_sum_sq: 0.0,
            };
            let mut turnout = Turnout::empty(m, n);
            let mut product = vec![0.0f64; k];
            for index in first..last {
                let mut rng = sample_rng(master_seed, index);
                sampler.sample_into(&mut rng, &mut turnout);
                for p in product.iter_mut() {
                    *p = 1.0;
                }
                for l in 0..n {
                    let wins = ctx
                        .win_probs_f64(l, turnout.voters_for(l))
                        .expect("validated context evaluates every subset");
                    for (p, w) in product.iter_mut().zip(wins) {
                        *p *= w;
                    }
                }
                let mut any = 0.0;
                for (c, p) in product.iter().enumerate() {
                    acc.sum[c] += p;
                    acc.sum_sq[c] += p * p;
                    any += p;
                }
                acc.any_sum += any;
                acc.any_sum_sq += any * any;
            }
            acc
        })
        .collect();

    // reduce in chunk order: f64 addition order is fixed
    let mut sum = vec![0.0; k];
    let mut sum_sq = vec![0.0; k];
    let mut any_sum = 0.0;
    let mut any_sum_sq = 0.0;
    for p in &partials {
        for c in 0..k {
            sum[c] += p.sum[c];
            sum_sq[c] += p.sum_sq[c];
        }
        any_sum += p.any_sum;
        any_sum_sq += p.any_sum_sq;
    }

    let nf = samples as f64;
    let per_contender = (0..k)
        .map(|c| SweepEstimate::monte_carlo(sum[c] / nf, samples, sum_sq[c], sum[c]))
        .collect();
    let any_contender = SweepEstimate::monte_carlo(any_sum / nf, samples, any_sum_sq, any_sum);
    Ok(SweepReport {
        contenders: ctx.contender_names().to_vec(),
        per_contender,
        any_contender,
        method: MethodKind::MonteCarlo,
        samples: Some(samples),
        seed: Some(master_seed),
    })
}

/// Evaluate with either method.
pub fn sweep_report(
    scenario: &Scenario,
    schedule: &Schedule,
    method: &Method,
) -> Result<SweepReport, SweepError> {
    match *method {
        Method::Exact { cap } => exact_sweep_report(scenario, schedule, cap),
        Method::MonteCarlo { samples, seed } => mc_sweep_report(scenario, schedule, samples, seed),
    }
}

/// How two schedules relate in the coarsening order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarsenessRelation {
    Equal,
    FirstCoarser,
    SecondCoarser,
    Incomparable,
}

impl std::fmt::Display for CoarsenessRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoarsenessRelation::Equal => write!(f, "equal"),
            CoarsenessRelation::FirstCoarser => write!(f, "first_coarser"),
            CoarsenessRelation::SecondCoarser => write!(f, "second_coarser"),
            CoarsenessRelation::Incomparable => write!(f, "incomparable"),
        }
    }
}

/// A contender whose sweep probability moved the wrong way between
/// comparable schedules: strictly lower under the coarser one. With exact
/// evaluation any nonzero shortfall is a defect (of the implementation or
/// of an unvalidated rule); with Monte Carlo only disjoint confidence
/// intervals are flagged.
#[derive(Clone, Debug)]
pub struct MonotonicityViolation {
    pub contender: usize,
    pub shortfall: f64,
    pub exact_shortfall: Option<BigRational>,
}

/// Side-by-side evaluation of two schedules with the same method (and the
/// same seed, so Monte Carlo comparisons share random numbers).
#[derive(Clone, Debug)]
pub struct ScheduleComparison {
    pub relation: CoarsenessRelation,
    pub report_a: SweepReport,
    pub report_b: SweepReport,
    /// Per contender: report_a value minus report_b value.
    pub deltas: Vec<f64>,
    pub exact_deltas: Option<Vec<BigRational>>,
    pub violations: Vec<MonotonicityViolation>,
}

pub fn compare_schedules(
    scenario: &Scenario,
    schedule_a: &Schedule,
    schedule_b: &Schedule,
    method: &Method,
) -> Result<ScheduleComparison, SweepError> {
    let a_coarser = lattice::is_coarser_staggered(schedule_a, schedule_b)?;
    let b_coarser = lattice::is_coarser_staggered(schedule_b, schedule_a)?;
    let relation = match (a_coarser, b_coarser) {
        (true, true) => CoarsenessRelation::Equal,
        (true, false) => CoarsenessRelation::FirstCoarser,
        (false, true) => CoarsenessRelation::SecondCoarser,
        (false, false) => CoarsenessRelation::Incomparable,
    };
    let report_a = sweep_report(scenario, schedule_a, method)?;
    let report_b = sweep_report(scenario, schedule_b, method)?;
    let k = report_a.per_contender.len();
    let deltas: Vec<f64> = (0..k)
        .map(|c| report_a.per_contender[c].value - report_b.per_contender[c].value)
        .collect();
    let exact_deltas = match (&report_a.per_contender[0].exact, &report_b.per_contender[0].exact) {
        (Some(_), Some(_)) => Some(
            (0..k)
                .map(|c| {
                    report_a.per_contender[c].exact.clone().unwrap()
                        - report_b.per_contender[c].exact.clone().unwrap()
                })
                .collect(),
        ),
        _ => None,
    };

    let mut violations = Vec::new();
    let (coarse, fine) = match relation {
        CoarsenessRelation::FirstCoarser => (&report_a, &report_b),
        CoarsenessRelation::SecondCoarser => (&report_b, &report_a),
        _ => {
            return Ok(ScheduleComparison {
                relation,
                report_a,
                report_b,
                deltas,
                exact_deltas,
                violations,
            })
        }
    };
    for c in 0..k {
        let cv = &coarse.per_contender[c];
        let fv = &fine.per_contender[c];
        match (&cv.exact, &fv.exact) {
            (Some(ce), Some(fe)) => {
                if ce < fe {
                    violations.push(MonotonicityViolation {
                        contender: c,
                        shortfall: to_f64(fe) - to_f64(ce),
                        exact_shortfall: Some(fe - ce),
                    });
                }
            }
            _ => {
                // Monte Carlo: flag only when the intervals are disjoint
                let chw = cv.ci_half_width.unwrap_or(0.0);
                let fhw = fv.ci_half_width.unwrap_or(0.0);
                if cv.value + chw < fv.value - fhw {
                    violations.push(MonotonicityViolation {
                        contender: c,
                        shortfall: fv.value - cv.value,
                        exact_shortfall: None,
                    });
                }
            }
        }
    }
    Ok(ScheduleComparison {
        relation,
        report_a,
        report_b,
        deltas,
        exact_deltas,
        violations,
    })
}

/// Per-contender sweep probabilities of a mixture of scenarios (nature
/// picks the type assignment before the schedule is announced). Weights
/// must be nonnegative and sum to exactly one; all branches must share the
/// electorate and election shape.
pub fn mixture_sweep_probabilities(
    branches: &[(BigRational, Scenario)],
    schedule: &Schedule,
    method: &Method,
) -> Result<Vec<f64>, SweepError> {
    let exact = mixture_exact_or_float(branches, schedule, method)?;
    Ok(exact)
}

fn mixture_exact_or_float(
    branches: &[(BigRational, Scenario)],
    schedule: &Schedule,
    method: &Method,
) -> Result<Vec<f64>, SweepError> {
    let first = branches.first().ok_or(SweepError::EmptyMixture)?;
    let weight_total: BigRational = branches.iter().map(|(w, _)| w.clone()).sum();
    if weight_total != BigRational::one()
        || branches.iter().any(|(w, _)| *w < BigRational::zero())
    {
        return Err(SweepError::BadMixtureWeights);
    }
    let shape = |s: &Scenario| (s.num_voters(), s.num_elections());
    let k0 = WinContext::new(&first.1)?.num_contenders();
    for (_, s) in branches {
        if shape(s) != shape(&first.1) || WinContext::new(s)?.num_contenders() != k0 {
            return Err(SweepError::MixtureShapeMismatch);
        }
    }
    let mut acc = vec![0.0f64; k0];
    for (w, scenario) in branches {
        let report = sweep_report(scenario, schedule, method)?;
        let wf = to_f64(w);
        for (a, est) in acc.iter_mut().zip(&report.per_contender) {
            *a += wf * est.value;
        }
    }
    Ok(acc)
}

/// Exact mixture evaluation: weighted average of exact per-contender
/// values, kept rational end to end.
pub fn mixture_exact_sweep_probabilities(
    branches: &[(BigRational, Scenario)],
    schedule: &Schedule,
    cap: u64,
) -> Result<Vec<BigRational>, SweepError> {
    let first = branches.first().ok_or(SweepError::EmptyMixture)?;
    let weight_total: BigRational = branches.iter().map(|(w, _)| w.clone()).sum();
    if weight_total != BigRational::one()
        || branches.iter().any(|(w, _)| *w < BigRational::zero())
    {
        return Err(SweepError::BadMixtureWeights);
    }
    let k0 = WinContext::new(&first.1)?.num_contenders();
    let mut acc = vec![BigRational::zero(); k0];
    for (w, scenario) in branches {
        if scenario.num_voters() != first.1.num_voters()
            || scenario.num_elections() != first.1.num_elections()
            || WinContext::new(scenario)?.num_contenders() != k0
        {
            return Err(SweepError::MixtureShapeMismatch);
        }
        let values = exact_sweep_probabilities(scenario, schedule, cap)?;
        for (a, v) in acc.iter_mut().zip(values) {
            *a += w * v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Partition;
    use crate::model::{ElectionSpec, PartyId, Voter};
    use crate::ratio::{rat, rat_int};
    use crate::rules::WinRuleSpec;

    /// 1 voter preferring A, p = 1/2, two FPTP elections, two parties.
    fn micro() -> Scenario {
        Scenario::new(
            vec!["A".into(), "B".into()],
            vec![Voter::new(0, PartyId(0), rat(1, 2))],
            vec![
                ElectionSpec::new(0, WinRuleSpec::Fptp),
                ElectionSpec::new(1, WinRuleSpec::Fptp),
            ],
        )
    }

    fn simultaneous() -> Schedule {
        Schedule::uniform(Partition::single_block(2), 1)
    }

    fn separate() -> Schedule {
        Schedule::uniform(Partition::singletons(2), 1)
    }

    #[test]
    fn micro_example_exact_values() {
        let s = micro();
        let sim = exact_sweep_probabilities(&s, &simultaneous(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(sim, vec![rat(5, 8), rat(1, 8)]);
        let sep = exact_sweep_probabilities(&s, &separate(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(sep, vec![rat(9, 16), rat(1, 16)]);
    }

    /// Independent route: brute force over all subsets of H x L using the
    /// point-mass probability and per-turnout win products.
    fn brute_force_sweeps(s: &Scenario, sch: &Schedule) -> Vec<BigRational> {
        let m = s.num_voters();
        let n = s.num_elections();
        let k = WinContext::new(s).unwrap().num_contenders();
        let mut totals = vec![rat_int(0); k];
        let cells: Vec<(u32, u32)> = (0..m).flat_map(|v| (0..n).map(move |l| (v, l))).collect();
        for subset in 0u64..(1 << cells.len()) {
            let pairs = cells
                .iter()
                .enumerate()
                .filter(|(i, _)| subset >> i & 1 == 1)
                .map(|(_, &c)| c);
            let t = Turnout::from_pairs(m, n, pairs);
            let mu = turnout::turnout_probability(&t, sch, &s.voters).unwrap();
            if mu.is_zero() {
                continue;
            }
            for (c, total) in totals.iter_mut().enumerate() {
                *total += &mu * sweep_prob_given_turnout(s, &t, c).unwrap();
            }
        }
        totals
    }

    #[test]
    fn exact_engine_matches_brute_force_oracle() {
        let s = micro();
        for sch in [simultaneous(), separate()] {
            assert_eq!(
                exact_sweep_probabilities(&s, &sch, DEFAULT_ENUMERATION_CAP).unwrap(),
                brute_force_sweeps(&s, &sch)
            );
        }
        // a staggered two-voter case
        let s2 = Scenario::new(
            vec!["A".into(), "B".into()],
            vec![
                Voter::new(0, PartyId(0), rat(2, 3)),
                Voter::new(1, PartyId(1), rat(1, 4)),
            ],
            vec![
                ElectionSpec::new(0, WinRuleSpec::Fptp),
                ElectionSpec::new(1, WinRuleSpec::Fptp),
            ],
        );
        let sch = Schedule::staggered(vec![
            Partition::single_block(2),
            Partition::singletons(2),
        ]);
        assert_eq!(
            exact_sweep_probabilities(&s2, &sch, DEFAULT_ENUMERATION_CAP).unwrap(),
            brute_force_sweeps(&s2, &sch)
        );
    }

    #[test]
    fn deterministic_turnout_makes_schedules_indistinguishable() {
        for p in [rat_int(0), rat_int(1)] {
            let mut s = micro();
            s.voters[0].turnout_prob = p;
            let a = exact_sweep_probabilities(&s, &simultaneous(), DEFAULT_ENUMERATION_CAP)
                .unwrap();
            let b = exact_sweep_probabilities(&s, &separate(), DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn empty_turnout_two_fptp_elections_quarter_each() {
        let s = micro();
        let empty = Turnout::empty(1, 2);
        assert_eq!(
            sweep_prob_given_turnout(&s, &empty, 0).unwrap(),
            rat(1, 4)
        );
        assert_eq!(
            sweep_prob_given_turnout(&s, &empty, 1).unwrap(),
            rat(1, 4)
        );
        // unanimity sweeps with certainty
        let full = Turnout::from_pairs(1, 2, [(0, 0), (0, 1)]);
        assert_eq!(sweep_prob_given_turnout(&s, &full, 0).unwrap(), rat_int(1));
    }

    #[test]
    fn cap_exceeded_directs_to_monte_carlo() {
        let s = micro();
        let err = exact_sweep_probabilities(&s, &separate(), 2).unwrap_err();
        assert!(err.to_string().contains("Monte Carlo"));
    }

    #[test]
    fn mc_agrees_with_exact_on_the_micro_example() {
        let s = micro();
        let report = mc_sweep_report(&s, &simultaneous(), 100_000, 11).unwrap();
        assert!((report.per_contender[0].value - 0.625).abs() < 0.01);
        assert!((report.per_contender[1].value - 0.125).abs() < 0.01);
        let any = report.any_contender.value;
        let total: f64 = report.per_contender.iter().map(|e| e.value).sum();
        assert!((any - total).abs() < 1e-12);
    }

    #[test]
    fn mc_zero_turnout_has_zero_variance() {
        let mut s = micro();
        s.voters[0].turnout_prob = rat_int(0);
        let report = mc_sweep_report(&s, &separate(), 1000, 5).unwrap();
        assert_eq!(report.per_contender[0].value, 0.25);
        assert_eq!(report.per_contender[0].std_error, Some(0.0));
    }

    #[test]
    fn mc_is_invariant_across_worker_counts() {
        let s = micro();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool8 = rayon::ThreadPoolBuilder::new().num_threads(8).build().unwrap();
        let r1 = pool1.install(|| mc_sweep_report(&s, &separate(), 20_000, 99).unwrap());
        let r8 = pool8.install(|| mc_sweep_report(&s, &separate(), 20_000, 99).unwrap());
        for (a, b) in r1.per_contender.iter().zip(&r8.per_contender) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            assert_eq!(
                a.ci_half_width.unwrap().to_bits(),
                b.ci_half_width.unwrap().to_bits()
            );
        }
        assert_eq!(
            r1.any_contender.value.to_bits(),
            r8.any_contender.value.to_bits()
        );
    }

    #[test]
    fn zero_samples_rejected() {
        let s = micro();
        assert!(matches!(
            mc_sweep_report(&s, &separate(), 0, 1),
            Err(SweepError::ZeroSamples)
        ));
    }

    #[test]
    fn comparison_on_the_micro_example() {
        let s = micro();
        let cmp = compare_schedules(
            &s,
            &simultaneous(),
            &separate(),
            &Method::Exact {
                cap: DEFAULT_ENUMERATION_CAP,
            },
        )
        .unwrap();
        assert_eq!(cmp.relation, CoarsenessRelation::FirstCoarser);
        assert!(cmp.violations.is_empty());
        let deltas = cmp.exact_deltas.unwrap();
        assert_eq!(deltas[0], rat(1, 16)); // 5/8 - 9/16
        assert_eq!(deltas[1], rat(1, 16)); // 1/8 - 1/16
    }

    #[test]
    fn comparison_identical_and_incomparable() {
        let s = micro();
        let cmp = compare_schedules(
            &s,
            &separate(),
            &separate(),
            &Method::Exact {
                cap: DEFAULT_ENUMERATION_CAP,
            },
        )
        .unwrap();
        assert_eq!(cmp.relation, CoarsenessRelation::Equal);
        assert!(cmp.deltas.iter().all(|d| *d == 0.0));

        // three elections: {0,1}{2} vs {0}{1,2} are incomparable
        let s3 = Scenario::new(
            vec!["A".into(), "B".into()],
            vec![Voter::new(0, PartyId(0), rat(1, 2))],
            (0..3)
                .map(|i| ElectionSpec::new(i, WinRuleSpec::Fptp))
                .collect(),
        );
        let a = Schedule::uniform(Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap(), 1);
        let b = Schedule::uniform(Partition::new(3, vec![vec![0], vec![1, 2]]).unwrap(), 1);
        let cmp = compare_schedules(
            &s3,
            &a,
            &b,
            &Method::Exact {
                cap: DEFAULT_ENUMERATION_CAP,
            },
        )
        .unwrap();
        assert_eq!(cmp.relation, CoarsenessRelation::Incomparable);
        assert!(cmp.violations.is_empty());
    }

    #[test]
    fn single_election_is_schedule_independent() {
        let s = Scenario::new(
            vec!["A".into(), "B".into()],
            vec![
                Voter::new(0, PartyId(0), rat(1, 3)),
                Voter::new(1, PartyId(1), rat(4, 5)),
            ],
            vec![ElectionSpec::new(0, WinRuleSpec::Fptp)],
        );
        let only = Schedule::uniform(Partition::single_block(1), 2);
        let values = exact_sweep_probabilities(&s, &only, DEFAULT_ENUMERATION_CAP).unwrap();
        // every partition of a singleton set is the same partition; just
        // confirm the values are a probability vector
        let total: BigRational = values.iter().cloned().sum();
        assert!(total <= rat_int(1));
    }

    #[test]
    fn mixture_degenerate_and_convexity() {
        let s = micro();
        let sch = simultaneous();
        let single = vec![(rat_int(1), s.clone())];
        let exact = mixture_exact_sweep_probabilities(&single, &sch, DEFAULT_ENUMERATION_CAP)
            .unwrap();
        assert_eq!(exact, vec![rat(5, 8), rat(1, 8)]);

        let halves = vec![(rat(1, 2), s.clone()), (rat(1, 2), s.clone())];
        let exact2 = mixture_exact_sweep_probabilities(&halves, &sch, DEFAULT_ENUMERATION_CAP)
            .unwrap();
        assert_eq!(exact2, vec![rat(5, 8), rat(1, 8)]);

        // two different type assignments: average of the branch values
        let mut flipped = s.clone();
        flipped.voters[0].preferred_party = PartyId(1);
        let mix = vec![(rat(1, 2), s.clone()), (rat(1, 2), flipped.clone())];
        let got = mixture_exact_sweep_probabilities(&mix, &sch, DEFAULT_ENUMERATION_CAP).unwrap();
        let a = exact_sweep_probabilities(&s, &sch, DEFAULT_ENUMERATION_CAP).unwrap();
        let b = exact_sweep_probabilities(&flipped, &sch, DEFAULT_ENUMERATION_CAP).unwrap();
        for c in 0..2 {
            assert_eq!(got[c], (a[c].clone() + b[c].clone()) * rat(1, 2));
        }

        let bad = vec![(rat(1, 3), s.clone()), (rat(1, 3), s.clone())];
        assert!(matches!(
            mixture_exact_sweep_probabilities(&bad, &sch, DEFAULT_ENUMERATION_CAP),
            Err(SweepError::BadMixtureWeights)
        ));
    }
}
