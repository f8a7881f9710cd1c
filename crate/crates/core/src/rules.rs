//! Win rules: from per-election tallies to per-party win probabilities.
//!
//! Built-in systems: first-past-the-post, and party-list proportional
//! representation with D'Hondt (highest averages) or Hare largest-remainder
//! rounding, judged either by most seats or by strict seat majority.
//!
//! Two conditions matter for everything downstream, and both have
//! brute-force validators here:
//! - exclusivity: each election is won by at most one party (win
//!   probabilities sum to at most 1),
//! - vote monotonicity: an extra vote for a party cannot decrease its own
//!   win probability nor increase a rival's.
//!
//! Alliances: a pre-poll alliance fields one joint candidate, so its
//! members merge at tally time; a post-poll alliance contends separately
//! and pools elected candidates (for FPTP: per-election win events) after
//! the fact. Alliance types are fixed by construction — one kind per
//! alliance across all elections and schedules.

use crate::bitset::VoterSet;
use crate::model::{Scenario, Violation};
use crate::ratio::{rat_int, to_f64};
use num::rational::BigRational;
use num::{BigInt, One, Zero};
use thiserror::Error;

/// Votes per contender in one election, counting only eligible voters who
/// turned out.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tally(pub Vec<u64>);

impl Tally {
    pub fn num_contenders(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundingMethod {
    /// Highest averages with divisors 1, 2, 3, ...
    HighestAverageDHondt,
    /// Hare quota (total/seats), floor allocation, remainders descending.
    LargestRemainderHare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrWinMode {
    /// The party with the most seats wins; seat ties go to a fair coin.
    MostSeats,
    /// A party wins only with a strict majority of the seats; otherwise
    /// the election is a non-win for everyone.
    StrictMajority,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WinRuleSpec {
    /// Most votes wins; ties decided by a fair coin among the tied parties.
    Fptp,
    PartyListPr {
        seats: u64,
        rounding: RoundingMethod,
        win: PrWinMode,
    },
}

impl WinRuleSpec {
    pub(crate) fn validate_fields(&self) -> Vec<String> {
        match self {
            WinRuleSpec::Fptp => Vec::new(),
            WinRuleSpec::PartyListPr { seats, .. } if *seats >= 1 => Vec::new(),
            WinRuleSpec::PartyListPr { seats, .. } => {
                vec![format!("PR seat count must be at least 1, got {seats}")]
            }
        }
    }
}

/// Win probabilities for a plurality contest: the strict maximum wins
/// outright; a k-way tie (including the all-zero tally, a tie among all
/// contenders) gives each tied party 1/k.
pub fn fptp_win_probs(tally: &Tally) -> Vec<BigRational> {
    let max = tally.0.iter().copied().max().unwrap_or(0);
    let tied = tally.0.iter().filter(|&&v| v == max).count() as i64;
    tally
        .0
        .iter()
        .map(|&v| {
            if v == max {
                BigRational::new(BigInt::from(1), BigInt::from(tied))
            } else {
                BigRational::zero()
            }
        })
        .collect()
}

/// Deterministic seat apportionment. Quotient and remainder ties go to the
/// lower contender index; on an all-zero tally every contender is tied, so
/// seats fall to the tie order (D'Hondt: re-evaluated per seat; Hare:
/// remainder passes with one seat per contender per pass).
pub fn allocate_seats(tally: &Tally, seats: u64, method: RoundingMethod) -> Vec<u64> {
    match method {
        RoundingMethod::HighestAverageDHondt => dhondt(tally, seats),
        RoundingMethod::LargestRemainderHare => hare_largest_remainder(tally, seats),
    }
}

fn dhondt(tally: &Tally, seats: u64) -> Vec<u64> {
    let k = tally.0.len();
    let mut out = vec![0u64; k];
    for _ in 0..seats {
        // maximize v_s / (seats_s + 1); compare by cross-multiplication
        let mut best = 0usize;
        for s in 1..k {
            let lhs = tally.0[s] as u128 * (out[best] as u128 + 1);
            let rhs = tally.0[best] as u128 * (out[s] as u128 + 1);
            if lhs > rhs {
                best = s;
            }
        }
        out[best] += 1;
    }
    out
}

fn hare_largest_remainder(tally: &Tally, seats: u64) -> Vec<u64> {
    let k = tally.0.len();
    let total = tally.total();
    if total == 0 {
        // every remainder ties at zero; deal passes in contender order
        let mut out = vec![0u64; k];
        for i in 0..seats {
            out[(i % k as u64) as usize] += 1;
        }
        return out;
    }
    // floor(v * seats / total), remainders compared as v*seats mod total
    let mut out: Vec<u64> = tally
        .0
        .iter()
        .map(|&v| ((v as u128 * seats as u128) / total as u128) as u64)
        .collect();
    let mut rest = seats - out.iter().sum::<u64>();
    let remainders: Vec<u128> = tally
        .0
        .iter()
        .map(|&v| (v as u128 * seats as u128) % total as u128)
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| remainders[b].cmp(&remainders[a]).then(a.cmp(&b)));
    // one seat per contender per pass; more than one pass only in
    // degenerate cases (seats far exceeding contenders)
    while rest > 0 {
        for &i in order.iter().take(rest.min(k as u64) as usize) {
            out[i] += 1;
        }
        rest -= rest.min(k as u64);
    }
    out
}

/// Win probabilities from a seat vector.
pub fn pr_win_probs(seats: &[u64], mode: PrWinMode, total_seats: u64) -> Vec<BigRational> {
    match mode {
        PrWinMode::MostSeats => fptp_win_probs(&Tally(seats.to_vec())),
        PrWinMode::StrictMajority => seats
            .iter()
            .map(|&s| {
                if 2 * s > total_seats {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect(),
    }
}

/// Apply a win rule to a tally.
pub fn rule_win_probs(tally: &Tally, rule: &WinRuleSpec) -> Vec<BigRational> {
    match rule {
        WinRuleSpec::Fptp => fptp_win_probs(tally),
        WinRuleSpec::PartyListPr {
            seats,
            rounding,
            win,
        } => {
            let allocation = allocate_seats(tally, *seats, *rounding);
            pr_win_probs(&allocation, *win, *seats)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AllianceKind {
    /// Members jointly field one candidate in every election.
    PrePoll,
    /// Members contend separately and pool elected candidates afterwards.
    PostPoll,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alliance {
    pub name: String,
    pub members: Vec<u32>,
    pub kind: AllianceKind,
}

/// A partition of the parties into alliances, each with a fixed kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AllianceStructure {
    pub groups: Vec<Alliance>,
}

impl AllianceStructure {
    /// Every party its own (pre-poll) alliance.
    pub fn trivial(party_names: &[String]) -> AllianceStructure {
        AllianceStructure {
            groups: party_names
                .iter()
                .enumerate()
                .map(|(i, name)| Alliance {
                    name: name.clone(),
                    members: vec![i as u32],
                    kind: AllianceKind::PrePoll,
                })
                .collect(),
        }
    }

    /// Check the groups partition the party set.
    pub fn validate(&self, num_parties: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = vec![false; num_parties];
        for g in &self.groups {
            let entity = format!("alliance {}", g.name);
            if g.members.is_empty() {
                out.push(Violation {
                    entity: entity.clone(),
                    message: "alliance has no members".into(),
                });
            }
            for &m in &g.members {
                if m as usize >= num_parties {
                    out.push(Violation {
                        entity: entity.clone(),
                        message: format!("member party {m} out of range"),
                    });
                } else if seen[m as usize] {
                    out.push(Violation {
                        entity: entity.clone(),
                        message: format!("party {m} belongs to more than one alliance"),
                    });
                } else {
                    seen[m as usize] = true;
                }
            }
        }
        for (p, s) in seen.iter().enumerate() {
            if !s {
                out.push(Violation {
                    entity: "alliances".into(),
                    message: format!("party {p} belongs to no alliance"),
                });
            }
        }
        out
    }
}

/// Attach an alliance structure to a scenario: downstream evaluation then
/// treats each alliance as a single contender. The trivial structure leaves
/// win probabilities unchanged (up to contender relabeling).
pub fn alliance_transform(
    scenario: &Scenario,
    alliances: AllianceStructure,
) -> Result<Scenario, Vec<Violation>> {
    let violations = alliances.validate(scenario.num_parties());
    if !violations.is_empty() {
        return Err(violations);
    }
    let mut out = scenario.clone();
    out.alliances = Some(alliances);
    Ok(out)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("invalid scenario: {}", format_violations(.0))]
    InvalidScenario(Vec<Violation>),
    #[error("election {0} out of range")]
    BadElection(u32),
    #[error("contender {0} out of range")]
    BadContender(usize),
    #[error("voter set universe {got} does not match the electorate size {want}")]
    UniverseMismatch { got: u32, want: u32 },
    #[error("alignment check supports at most {max} voters, got {got}")]
    TooManyVotersForAlignment { got: u32, max: u32 },
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// How parties map onto ballot-level contenders (pre-poll alliances merge
/// here) and how ballot contenders pool into final contenders (post-poll
/// alliances merge here). Without alliances both maps are the identity.
#[derive(Clone, Debug)]
struct ContenderMap {
    ballot_of_party: Vec<usize>,
    pool_of_ballot: Vec<usize>,
    names: Vec<String>,
}

impl ContenderMap {
    fn build(scenario: &Scenario) -> ContenderMap {
        match &scenario.alliances {
            None => {
                let k = scenario.num_parties();
                ContenderMap {
                    ballot_of_party: (0..k).collect(),
                    pool_of_ballot: (0..k).collect(),
                    names: scenario.parties.clone(),
                }
            }
            Some(structure) => {
                let k = scenario.num_parties();
                let mut ballot_of_party = vec![usize::MAX; k];
                let mut pool_of_ballot = Vec::new();
                let mut names = Vec::new();
                for (ai, alliance) in structure.groups.iter().enumerate() {
                    names.push(alliance.name.clone());
                    match alliance.kind {
                        AllianceKind::PrePoll => {
                            let slot = pool_of_ballot.len();
                            pool_of_ballot.push(ai);
                            for &member in &alliance.members {
                                ballot_of_party[member as usize] = slot;
                            }
                        }
                        AllianceKind::PostPoll => {
                            for &member in &alliance.members {
                                let slot = pool_of_ballot.len();
                                pool_of_ballot.push(ai);
                                ballot_of_party[member as usize] = slot;
                            }
                        }
                    }
                }
                ContenderMap {
                    ballot_of_party,
                    pool_of_ballot,
                    names,
                }
            }
        }
    }

    fn num_ballot(&self) -> usize {
        self.pool_of_ballot.len()
    }

    fn num_final(&self) -> usize {
        self.names.len()
    }
}

/// Prepared evaluation context for one scenario: validates the scenario,
/// resolves alliances into contender maps, and precomputes the per-ballot
/// voter masks that make tallying a popcount.
pub struct WinContext<'a> {
    scenario: &'a Scenario,
    map: ContenderMap,
    ballot_masks: Vec<VoterSet>,
    eligibility: Vec<VoterSet>,
}

impl<'a> WinContext<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<WinContext<'a>, RuleError> {
        let violations = scenario.validate();
        if !violations.is_empty() {
            return Err(RuleError::InvalidScenario(violations));
        }
        let map = ContenderMap::build(scenario);
        let m = scenario.num_voters();
        let mut ballot_masks = vec![VoterSet::empty(m); map.num_ballot()];
        for voter in &scenario.voters {
            let slot = map.ballot_of_party[voter.preferred_party.0 as usize];
            ballot_masks[slot].insert(voter.id);
        }
        let eligibility = scenario
            .elections
            .iter()
            .map(|e| e.eligibility.clone().unwrap_or_else(|| VoterSet::full(m)))
            .collect();
        Ok(WinContext {
            scenario,
            map,
            ballot_masks,
            eligibility,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        self.scenario
    }

    /// Number of final contenders (alliances if present, else parties).
    pub fn num_contenders(&self) -> usize {
        self.map.num_final()
    }

    pub fn contender_names(&self) -> &[String] {
        &self.map.names
    }

    /// The final contender a party's votes accrue to.
    pub fn contender_of_party(&self, party: u32) -> usize {
        self.map.pool_of_ballot[self.map.ballot_of_party[party as usize]]
    }

    /// Ballot-level tally of an election given the attending voter set:
    /// eligible attendees counted toward their preferred ballot contender.
    pub fn tally(&self, election: u32, attending: &VoterSet) -> Result<Tally, RuleError> {
        let l = election as usize;
        if l >= self.scenario.elections.len() {
            return Err(RuleError::BadElection(election));
        }
        if attending.universe() != self.scenario.num_voters() {
            return Err(RuleError::UniverseMismatch {
                got: attending.universe(),
                want: self.scenario.num_voters(),
            });
        }
        let elig = &self.eligibility[l];
        Ok(Tally(
            self.ballot_masks
                .iter()
                .map(|mask| attending.count_and2(mask, elig) as u64)
                .collect(),
        ))
    }

    /// Per-final-contender win probabilities for one election given the
    /// attending voter set. This is the election's win-probability function,
    /// pure and total on subsets of the electorate.
    pub fn win_probs(&self, election: u32, attending: &VoterSet) -> Result<Vec<BigRational>, RuleError> {
        let tally = self.tally(election, attending)?;
        let rule = &self.scenario.elections[election as usize].rule;
        Ok(self.pool(rule, &tally))
    }

    /// Number of ballot-level contenders (pre-poll alliances merged,
    /// post-poll members separate).
    pub fn num_ballot_contenders(&self) -> usize {
        self.map.num_ballot()
    }

    /// For each ballot contender, the final contender its results pool
    /// into. Identity when there are no alliances.
    pub fn contender_of_ballot(&self) -> &[usize] {
        &self.map.pool_of_ballot
    }

    /// Apply `rule` to a ballot-level tally and pool the outcome into
    /// final-contender win probabilities. This is the win function the
    /// rule validators scan when alliances are present.
    pub fn pooled_win_probs(&self, rule: &WinRuleSpec, tally: &Tally) -> Vec<BigRational> {
        self.pool(rule, tally)
    }

    fn pool(&self, rule: &WinRuleSpec, tally: &Tally) -> Vec<BigRational> {
        let nf = self.map.num_final();
        match rule {
            WinRuleSpec::Fptp => {
                // per-election win events of ballot contenders are disjoint,
                // so a post-poll alliance's win probability is the sum over
                // its members
                let ballot = fptp_win_probs(tally);
                let mut out = vec![BigRational::zero(); nf];
                for (b, p) in ballot.into_iter().enumerate() {
                    out[self.map.pool_of_ballot[b]] += p;
                }
                out
            }
            WinRuleSpec::PartyListPr {
                seats,
                rounding,
                win,
            } => {
                let per_ballot = allocate_seats(tally, *seats, *rounding);
                let mut pooled = vec![0u64; nf];
                for (b, s) in per_ballot.into_iter().enumerate() {
                    pooled[self.map.pool_of_ballot[b]] += s;
                }
                pr_win_probs(&pooled, *win, *seats)
            }
        }
    }

    /// Single-contender convenience view of [`WinContext::win_probs`].
    pub fn win_prob(
        &self,
        election: u32,
        contender: usize,
        attending: &VoterSet,
    ) -> Result<BigRational, RuleError> {
        if contender >= self.num_contenders() {
            return Err(RuleError::BadContender(contender));
        }
        Ok(self.win_probs(election, attending)?.swap_remove(contender))
    }

    pub fn win_probs_f64(&self, election: u32, attending: &VoterSet) -> Result<Vec<f64>, RuleError> {
        Ok(self
            .win_probs(election, attending)?
            .iter()
            .map(to_f64)
            .collect())
    }
}

/// Result of a brute-force rule scan: either a pass, or the first
/// counterexample in scan order.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleCheck {
    pub passed: bool,
    pub counterexample: Option<RuleCounterexample>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleCounterexample {
    pub tally: Tally,
    /// The party receiving the extra vote (monotonicity checks only).
    pub party: Option<usize>,
    pub detail: String,
}

impl RuleCheck {
    fn pass() -> RuleCheck {
        RuleCheck {
            passed: true,
            counterexample: None,
        }
    }

    fn fail(tally: Tally, party: Option<usize>, detail: String) -> RuleCheck {
        RuleCheck {
            passed: false,
            counterexample: Some(RuleCounterexample {
                tally,
                party,
                detail,
            }),
        }
    }
}

fn tallies_up_to(num_parties: usize, bound: u64) -> impl Iterator<Item = Tally> {
    let mut current = vec![0u64; num_parties];
    let mut done = false;
    std::iter::from_fn(move || {
        if done {
            return None;
        }
        let item = Tally(current.clone());
        let mut i = num_parties;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            if current[i] < bound {
                current[i] += 1;
                for c in current[i + 1..].iter_mut() {
                    *c = 0;
                }
                break;
            }
            current[i] = 0;
        }
        Some(item)
    })
}

/// Exclusivity (at most one winner): win probabilities stay within `[0, 1]`
/// and sum to at most 1 on every tally with entries up to `bound`.
pub fn validate_exclusivity(
    rule: &dyn Fn(&Tally) -> Vec<BigRational>,
    num_parties: usize,
    bound: u64,
) -> RuleCheck {
    for tally in tallies_up_to(num_parties, bound) {
        let probs = rule(&tally);
        for (s, p) in probs.iter().enumerate() {
            if *p < BigRational::zero() || *p > BigRational::one() {
                return RuleCheck::fail(
                    tally.clone(),
                    Some(s),
                    format!("win probability {p} for party {s} outside [0, 1]"),
                );
            }
        }
        let total: BigRational = probs.iter().cloned().sum();
        if total > BigRational::one() {
            return RuleCheck::fail(
                tally,
                None,
                format!("win probabilities sum to {total} > 1"),
            );
        }
    }
    RuleCheck::pass()
}

/// Vote monotonicity: for every tally with entries up to `bound` and every
/// party `s`, an extra vote for `s` does not decrease `s`'s win probability
/// and does not increase any rival's.
pub fn validate_monotonicity(
    rule: &dyn Fn(&Tally) -> Vec<BigRational>,
    num_parties: usize,
    bound: u64,
) -> RuleCheck {
    let identity: Vec<usize> = (0..num_parties).collect();
    validate_monotonicity_grouped(rule, num_parties, &identity, bound)
}

/// Monotonicity with tally slots pooled into groups: an extra vote for
/// slot `s` must not decrease the win probability of `s`'s group and must
/// not increase any other group's. This is the alliance-level form of the
/// condition (slots are ballot contenders, groups are alliances); with the
/// identity grouping it reduces to plain vote monotonicity.
pub fn validate_monotonicity_grouped(
    rule: &dyn Fn(&Tally) -> Vec<BigRational>,
    num_slots: usize,
    group_of: &[usize],
    bound: u64,
) -> RuleCheck {
    assert_eq!(group_of.len(), num_slots);
    let num_groups = group_of.iter().copied().max().map_or(0, |g| g + 1);
    for tally in tallies_up_to(num_slots, bound) {
        let before = rule(&tally);
        debug_assert_eq!(before.len(), num_groups);
        for s in 0..num_slots {
            let own = group_of[s];
            let mut bumped = tally.clone();
            bumped.0[s] += 1;
            let after = rule(&bumped);
            if after[own] < before[own] {
                return RuleCheck::fail(
                    tally,
                    Some(s),
                    format!(
                        "extra vote for contender {s} dropped its side's win \
                         probability from {} to {}",
                        before[own], after[own]
                    ),
                );
            }
            for r in 0..num_groups {
                if r != own && after[r] > before[r] {
                    return RuleCheck::fail(
                        tally,
                        Some(s),
                        format!(
                            "extra vote for contender {s} raised rival {r}'s win \
                             probability from {} to {}",
                            before[r], after[r]
                        ),
                    );
                }
            }
        }
    }
    RuleCheck::pass()
}

/// A witness that some election's win-probability function moves the wrong
/// way when voter `voter` joins the subset `others`.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentWitness {
    pub voter: u32,
    pub election: u32,
    pub others: VoterSet,
    pub expected_increasing: bool,
    pub without: BigRational,
    pub with: BigRational,
}

impl std::fmt::Display for AlignmentWitness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "voter {} joining {} moves election {}'s win probability from {} to {} \
             (expected {})",
            self.voter,
            self.others,
            self.election,
            self.without,
            self.with,
            if self.expected_increasing {
                "non-decreasing"
            } else {
                "non-increasing"
            }
        )
    }
}

pub const ALIGNMENT_MAX_VOTERS: u32 = 12;

/// Exhaustively verify that the tuple of win-probability functions for
/// `contender` is aligned: non-decreasing at every supporter of the
/// contender and non-increasing at every other voter, across all elections
/// and all voter subsets. Returns `Ok(None)` when aligned, or the first
/// witness otherwise.
pub fn check_alignment(
    scenario: &Scenario,
    contender: usize,
    max_voters: u32,
) -> Result<Option<AlignmentWitness>, RuleError> {
    let ctx = WinContext::new(scenario)?;
    if contender >= ctx.num_contenders() {
        return Err(RuleError::BadContender(contender));
    }
    let m = scenario.num_voters();
    let cap = max_voters.min(ALIGNMENT_MAX_VOTERS);
    if m > cap {
        return Err(RuleError::TooManyVotersForAlignment { got: m, max: cap });
    }
    let n = scenario.num_elections();
    // cache f_l(S) for all subsets, all elections, the focal contender
    let mut table = vec![vec![BigRational::zero(); 1usize << m]; n as usize];
    for mask in 0u64..(1u64 << m) {
        let set = VoterSet::from_u64(m, mask);
        for l in 0..n {
            table[l as usize][mask as usize] = ctx.win_prob(l, contender, &set)?;
        }
    }
    for voter in 0..m {
        let expected_increasing =
            ctx.contender_of_party(scenario.voters[voter as usize].preferred_party.0) == contender;
        let bit = 1u64 << voter;
        for others in 0u64..(1u64 << m) {
            if others & bit != 0 {
                continue;
            }
            for l in 0..n {
                let without = &table[l as usize][others as usize];
                let with = &table[l as usize][(others | bit) as usize];
                let ok = if expected_increasing {
                    with >= without
                } else {
                    with <= without
                };
                if !ok {
                    return Ok(Some(AlignmentWitness {
                        voter,
                        election: l,
                        others: VoterSet::from_u64(m, others),
                        expected_increasing,
                        without: without.clone(),
                        with: with.clone(),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Shorthand: `1/k` as an exact rational.
pub fn tie_share(k: usize) -> BigRational {
    rat_int(1) / rat_int(k as i64)
}
