//! Domain types: parties, voters, elections, schedules, and scenario
//! assembly with global validation.
//!
//! Every value is immutable after construction and freely shareable across
//! threads. Voter and election ids are dense 0-based integers so that
//! downstream code can use bitmask representations; display names live in
//! the scenario file layer, not here.

use crate::bitset::VoterSet;
use crate::lattice::{Partition, PartitionError};
use crate::rules::{AllianceStructure, WinRuleSpec};
use num::rational::BigRational;
use num::{One, Zero};

/// Dense party index, `0 .. num_parties`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PartyId(pub u32);

/// A voter: a fixed party preference plus a fixed turnout probability.
/// The pair is the voter's type; neither changes with the schedule.
#[derive(Clone, Debug, PartialEq)]
pub struct Voter {
    pub id: u32,
    pub preferred_party: PartyId,
    pub turnout_prob: BigRational,
}

impl Voter {
    pub fn new(id: u32, preferred_party: PartyId, turnout_prob: BigRational) -> Voter {
        Voter {
            id,
            preferred_party,
            turnout_prob,
        }
    }
}

/// One election: its win rule and, optionally, the subset of voters whose
/// ballots count. Ineligible voters may still be scheduled and may cast
/// ballots; those ballots are discarded at tally time.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectionSpec {
    pub id: u32,
    pub rule: WinRuleSpec,
    pub eligibility: Option<VoterSet>,
}

impl ElectionSpec {
    pub fn new(id: u32, rule: WinRuleSpec) -> ElectionSpec {
        ElectionSpec {
            id,
            rule,
            eligibility: None,
        }
    }

    pub fn with_eligibility(mut self, eligibility: VoterSet) -> ElectionSpec {
        self.eligibility = Some(eligibility);
        self
    }
}

/// A polling schedule: one partition of the election set per voter.
/// Uniform schedules are the special case of identical partitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Schedule {
    per_voter: Vec<Partition>,
}

impl Schedule {
    /// Every voter shares the same partition.
    pub fn uniform(partition: Partition, num_voters: usize) -> Schedule {
        Schedule {
            per_voter: vec![partition; num_voters],
        }
    }

    /// One partition per voter, indexed by voter id.
    pub fn staggered(per_voter: Vec<Partition>) -> Schedule {
        assert!(!per_voter.is_empty(), "schedule needs at least one voter");
        Schedule { per_voter }
    }

    /// Build from raw per-voter block lists, canonicalizing each partition.
    /// This is the ingestion path for schedule data from files; malformed
    /// partitions (overlapping or non-covering blocks) are rejected.
    pub fn from_raw_blocks(
        num_elections: u32,
        raw: Vec<Vec<Vec<u32>>>,
    ) -> Result<Schedule, PartitionError> {
        let per_voter = raw
            .into_iter()
            .map(|blocks| Partition::new(num_elections, blocks))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Schedule::staggered(per_voter))
    }

    pub fn num_voters(&self) -> usize {
        self.per_voter.len()
    }

    pub fn num_elections(&self) -> u32 {
        self.per_voter[0].ground_size()
    }

    pub fn partition_for(&self, voter: u32) -> &Partition {
        &self.per_voter[voter as usize]
    }

    pub fn partitions(&self) -> &[Partition] {
        &self.per_voter
    }

    pub fn is_uniform(&self) -> bool {
        self.per_voter.windows(2).all(|w| w[0] == w[1])
    }

    /// Total number of turnout coins: the sum of block counts over voters.
    pub fn total_blocks(&self) -> usize {
        self.per_voter.iter().map(|p| p.num_blocks()).sum()
    }
}

/// One invariant violation found during validation. Violations are data,
/// not failures: callers decide whether to proceed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// The offending entity, e.g. `voter 3` or `election 1`.
    pub entity: String,
    pub message: String,
}

impl Violation {
    fn new(entity: impl Into<String>, message: impl Into<String>) -> Violation {
        Violation {
            entity: entity.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

/// A complete scenario: the party list, the electorate, the elections, and
/// an optional alliance structure under which sweeps are evaluated at
/// alliance level.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub parties: Vec<String>,
    pub voters: Vec<Voter>,
    pub elections: Vec<ElectionSpec>,
    pub alliances: Option<AllianceStructure>,
}

impl Scenario {
    pub fn new(
        parties: Vec<String>,
        voters: Vec<Voter>,
        elections: Vec<ElectionSpec>,
    ) -> Scenario {
        Scenario {
            parties,
            voters,
            elections,
            alliances: None,
        }
    }

    pub fn num_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn num_voters(&self) -> u32 {
        self.voters.len() as u32
    }

    pub fn num_elections(&self) -> u32 {
        self.elections.len() as u32
    }

    /// Every invariant violation in deterministic order: scenario-level
    /// checks, then voters by id, then elections by id, then alliances.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.parties.is_empty() {
            out.push(Violation::new("scenario", "at least one party is required"));
        }
        if self.voters.is_empty() {
            out.push(Violation::new("scenario", "at least one voter is required"));
        }
        if self.elections.is_empty() {
            out.push(Violation::new(
                "scenario",
                "at least one election is required",
            ));
        }
        if self.elections.len() > 64 {
            out.push(Violation::new(
                "scenario",
                format!(
                    "at most 64 elections are supported, got {}",
                    self.elections.len()
                ),
            ));
        }
        let m = self.voters.len() as u32;
        for (idx, v) in self.voters.iter().enumerate() {
            let entity = format!("voter {}", v.id);
            if v.id != idx as u32 {
                out.push(Violation::new(
                    &entity,
                    format!("ids must be dense and ascending; expected {idx}"),
                ));
            }
            if v.preferred_party.0 as usize >= self.parties.len() {
                out.push(Violation::new(
                    &entity,
                    format!(
                        "preferred_party {} out of range (have {} parties)",
                        v.preferred_party.0,
                        self.parties.len()
                    ),
                ));
            }
            if v.turnout_prob < BigRational::zero() || v.turnout_prob > BigRational::one() {
                out.push(Violation::new(
                    &entity,
                    format!("turnout_prob {} outside [0, 1]", v.turnout_prob),
                ));
            }
        }
        for (idx, e) in self.elections.iter().enumerate() {
            let entity = format!("election {}", e.id);
            if e.id != idx as u32 {
                out.push(Violation::new(
                    &entity,
                    format!("ids must be dense and ascending; expected {idx}"),
                ));
            }
            if let Some(elig) = &e.eligibility {
                if elig.universe() != m {
                    out.push(Violation::new(
                        &entity,
                        format!(
                            "eligibility universe {} does not match voter count {m}",
                            elig.universe()
                        ),
                    ));
                }
            }
            out.extend(
                e.rule
                    .validate_fields()
                    .into_iter()
                    .map(|msg| Violation::new(&entity, msg)),
            );
        }
        if let Some(a) = &self.alliances {
            out.extend(a.validate(self.parties.len()));
        }
        out
    }

    /// Validate a schedule against this scenario's shape.
    pub fn validate_schedule(&self, schedule: &Schedule) -> Vec<Violation> {
        let mut out = Vec::new();
        if schedule.num_voters() != self.voters.len() {
            out.push(Violation::new(
                "schedule",
                format!(
                    "covers {} voters but the scenario has {}",
                    schedule.num_voters(),
                    self.voters.len()
                ),
            ));
        }
        for (voter, p) in schedule.partitions().iter().enumerate() {
            if p.ground_size() != self.num_elections() {
                out.push(Violation::new(
                    format!("voter {voter}"),
                    format!(
                        "partition covers {} elections but the scenario has {}",
                        p.ground_size(),
                        self.num_elections()
                    ),
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    pub(crate) fn two_party_scenario() -> Scenario {
        Scenario::new(
            vec!["A".into(), "B".into()],
            vec![
                Voter::new(0, PartyId(0), rat(1, 2)),
                Voter::new(1, PartyId(1), rat(1, 3)),
            ],
            vec![
                ElectionSpec::new(0, WinRuleSpec::Fptp),
                ElectionSpec::new(1, WinRuleSpec::Fptp),
            ],
        )
    }

    #[test]
    fn well_formed_scenario_validates_clean() {
        assert_eq!(two_party_scenario().validate(), Vec::new());
    }

    #[test]
    fn turnout_prob_out_of_range_names_the_voter() {
        let mut s = two_party_scenario();
        s.voters[1].turnout_prob = rat(13, 10);
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "voter 1");
        assert!(v[0].message.contains("turnout_prob"));
    }

    #[test]
    fn bad_party_reference_and_sparse_ids_reported() {
        let mut s = two_party_scenario();
        s.voters[0].preferred_party = PartyId(9);
        s.voters[1].id = 5;
        let v = s.validate();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].entity, "voter 0");
        assert_eq!(v[1].entity, "voter 5");
    }

    #[test]
    fn eligibility_universe_must_match() {
        let mut s = two_party_scenario();
        s.elections[0].eligibility = Some(VoterSet::empty(5));
        let v = s.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "election 0");
    }

    #[test]
    fn schedule_shape_checked_against_scenario() {
        let s = two_party_scenario();
        let good = Schedule::uniform(Partition::single_block(2), 2);
        assert!(s.validate_schedule(&good).is_empty());
        let wrong_voters = Schedule::uniform(Partition::single_block(2), 3);
        assert!(!s.validate_schedule(&wrong_voters).is_empty());
        let wrong_elections = Schedule::uniform(Partition::single_block(3), 2);
        assert!(!s.validate_schedule(&wrong_elections).is_empty());
    }

    #[test]
    fn raw_schedule_ingestion_canonicalizes_and_rejects_malformed() {
        let sch = Schedule::from_raw_blocks(3, vec![vec![vec![2, 1], vec![0]]]).unwrap();
        assert_eq!(sch.partition_for(0).blocks(), &[vec![0], vec![1, 2]]);
        assert!(Schedule::from_raw_blocks(3, vec![vec![vec![0, 1], vec![1, 2]]]).is_err());
    }
}
