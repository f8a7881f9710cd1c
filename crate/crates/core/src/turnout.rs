//! The turnout measure: one independent Bernoulli(`p_h`) coin per voter per
//! partition block. Heads means the voter attends every election of that
//! block.
//!
//! Three access paths share the same coin ordering (ascending voter id,
//! then block order within the voter's partition):
//! - [`sample_turnout`] / [`TurnoutSampler`] draw one random turnout,
//! - [`enumerate_turnouts`] streams every positive-probability turnout with
//!   its exact rational probability,
//! - [`fold_outcomes`] is the allocation-light internal fold the exact
//!   engines are built on.
//!
//! Reproducibility contract: Monte Carlo sample `i` uses the generator
//! [`sample_rng`]`(master_seed, i)` — a ChaCha8 stream selected by sample
//! index — so the multiset of samples is independent of how work is split
//! across threads.

use crate::bitset::VoterSet;
use crate::model::{Schedule, Voter};
use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TurnoutError {
    #[error("schedule covers {schedule} voters but {voters} were supplied")]
    VoterMismatch { schedule: usize, voters: usize },
    #[error(
        "turnout support has {support} outcomes, above the cap of {cap}; \
         use Monte Carlo estimation instead"
    )]
    SupportTooLarge { support: u128, cap: u128 },
    #[error("exact enumeration supports at most 64 voters, got {0}")]
    TooManyVoters(usize),
}

/// A voter turnout: the subset of (voter, election) pairs that occurred.
/// Stored per election as voter bitmasks; the per-voter view is computed on
/// demand.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Turnout {
    num_voters: u32,
    by_election: Vec<VoterSet>,
}

impl Turnout {
    pub fn empty(num_voters: u32, num_elections: u32) -> Turnout {
        Turnout {
            num_voters,
            by_election: vec![VoterSet::empty(num_voters); num_elections as usize],
        }
    }

    pub fn from_pairs(
        num_voters: u32,
        num_elections: u32,
        pairs: impl IntoIterator<Item = (u32, u32)>,
    ) -> Turnout {
        let mut t = Turnout::empty(num_voters, num_elections);
        for (voter, election) in pairs {
            t.insert(voter, election);
        }
        t
    }

    pub fn num_voters(&self) -> u32 {
        self.num_voters
    }

    pub fn num_elections(&self) -> u32 {
        self.by_election.len() as u32
    }

    pub fn insert(&mut self, voter: u32, election: u32) {
        self.by_election[election as usize].insert(voter);
    }

    pub fn contains(&self, voter: u32, election: u32) -> bool {
        self.by_election[election as usize].contains(voter)
    }

    /// The set of voters who attended election `l` (the `H_l` view).
    pub fn voters_for(&self, election: u32) -> &VoterSet {
        &self.by_election[election as usize]
    }

    /// All per-election voter sets `(H_1, .., H_n)`.
    pub fn by_election(&self) -> &[VoterSet] {
        &self.by_election
    }

    /// The per-voter view `(L_1, .., L_m)`: for each voter, the set of
    /// elections attended. Inverse of [`Turnout::from_by_voter`].
    pub fn by_voter(&self) -> Vec<BTreeSet<u32>> {
        let mut out = vec![BTreeSet::new(); self.num_voters as usize];
        for (l, set) in self.by_election.iter().enumerate() {
            for v in set.iter() {
                out[v as usize].insert(l as u32);
            }
        }
        out
    }

    /// Rebuild from the per-voter view.
    pub fn from_by_voter(num_elections: u32, per_voter: &[BTreeSet<u32>]) -> Turnout {
        let mut t = Turnout::empty(per_voter.len() as u32, num_elections);
        for (voter, elections) in per_voter.iter().enumerate() {
            for &l in elections {
                t.insert(voter as u32, l);
            }
        }
        t
    }

    fn clear(&mut self) {
        for set in self.by_election.iter_mut() {
            set.clear();
        }
    }
}

/// A turnout paired with its exact probability under the measure.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTurnout {
    pub turnout: Turnout,
    pub probability: BigRational,
}

/// The generator for Monte Carlo sample `sample_index` under `master_seed`.
pub fn sample_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

/// Prepared sampler for repeated draws from one (schedule, electorate)
/// pair. Slots are stored as flat arrays (one entry per coin, in draw
/// order) and each coin consumes exactly one `u64` from the generator,
/// compared against a 64-bit threshold — exact for dyadic probabilities
/// and within 2^-64 otherwise.
#[derive(Clone, Debug)]
pub struct TurnoutSampler {
    num_voters: u32,
    num_elections: u32,
    slot_voter: Vec<u32>,
    /// Heads iff the drawn word is below the threshold; `u64::MAX` with
    /// `always_heads` marks p = 1 (a full draw is still consumed).
    slot_threshold: Vec<u64>,
    slot_always_heads: Vec<bool>,
    /// (offset, len) into `block_elections` for each slot.
    slot_span: Vec<(u32, u32)>,
    block_elections: Vec<u32>,
}

fn coin_threshold(p: &num::BigRational) -> (u64, bool) {
    use num::bigint::BigInt;
    use num::ToPrimitive;
    if p >= &BigRational::one() {
        return (u64::MAX, true);
    }
    if p <= &BigRational::zero() {
        return (0, false);
    }
    // floor(p * 2^64)
    let scaled = p.numer() * (BigInt::from(1u8) << 64u32) / p.denom();
    (scaled.to_u64().unwrap_or(u64::MAX), false)
}

impl TurnoutSampler {
    pub fn new(schedule: &Schedule, voters: &[Voter]) -> Result<TurnoutSampler, TurnoutError> {
        if schedule.num_voters() != voters.len() {
            return Err(TurnoutError::VoterMismatch {
                schedule: schedule.num_voters(),
                voters: voters.len(),
            });
        }
        let total = schedule.total_blocks();
        let mut sampler = TurnoutSampler {
            num_voters: voters.len() as u32,
            num_elections: schedule.num_elections(),
            slot_voter: Vec::with_capacity(total),
            slot_threshold: Vec::with_capacity(total),
            slot_always_heads: Vec::with_capacity(total),
            slot_span: Vec::with_capacity(total),
            block_elections: Vec::new(),
        };
        for voter in voters {
            let (threshold, always) = coin_threshold(&voter.turnout_prob);
            for block in schedule.partition_for(voter.id).blocks() {
                sampler.slot_voter.push(voter.id);
                sampler.slot_threshold.push(threshold);
                sampler.slot_always_heads.push(always);
                sampler
                    .slot_span
                    .push((sampler.block_elections.len() as u32, block.len() as u32));
                sampler.block_elections.extend_from_slice(block);
            }
        }
        Ok(sampler)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Turnout {
        let mut t = Turnout::empty(self.num_voters, self.num_elections);
        self.sample_into(rng, &mut t);
        t
    }

    /// Draw into an existing turnout, reusing its storage. Coins are
    /// consumed in slot order: ascending voter id, then block order.
    pub fn sample_into(&self, rng: &mut impl Rng, out: &mut Turnout) {
        debug_assert_eq!(out.num_voters, self.num_voters);
        debug_assert_eq!(out.num_elections(), self.num_elections);
        out.clear();
        for i in 0..self.slot_voter.len() {
            let word: u64 = rng.random();
            if word < self.slot_threshold[i] || self.slot_always_heads[i] {
                let voter = self.slot_voter[i];
                let (offset, len) = self.slot_span[i];
                for k in offset..offset + len {
                    out.insert(voter, self.block_elections[k as usize]);
                }
            }
        }
    }
}

/// Draw one turnout. Convenience wrapper over [`TurnoutSampler`].
pub fn sample_turnout(
    schedule: &Schedule,
    voters: &[Voter],
    rng: &mut impl Rng,
) -> Result<Turnout, TurnoutError> {
    Ok(TurnoutSampler::new(schedule, voters)?.sample(rng))
}

/// Number of coin outcomes: the product of `2^(block count)` over voters.
/// `None` on overflow (far beyond any enumerable size).
pub fn support_size(schedule: &Schedule) -> Option<u128> {
    let mut total: u128 = 1;
    for p in schedule.partitions() {
        total = total.checked_shl(p.num_blocks() as u32)?;
    }
    Some(total)
}

/// The point-mass probability of `turnout` under the measure: a product of
/// `p_h` / `(1 - p_h)` factors per block, or zero if the turnout splits any
/// block (attends some but not all of its elections).
pub fn turnout_probability(
    turnout: &Turnout,
    schedule: &Schedule,
    voters: &[Voter],
) -> Result<BigRational, TurnoutError> {
    if schedule.num_voters() != voters.len() {
        return Err(TurnoutError::VoterMismatch {
            schedule: schedule.num_voters(),
            voters: voters.len(),
        });
    }
    let mut prob = BigRational::one();
    for voter in voters {
        let p = &voter.turnout_prob;
        let q = BigRational::one() - p;
        for block in schedule.partition_for(voter.id).blocks() {
            let attended = block
                .iter()
                .filter(|&&l| turnout.contains(voter.id, l))
                .count();
            if attended == block.len() {
                prob *= p;
            } else if attended == 0 {
                prob *= &q;
            } else {
                return Ok(BigRational::zero());
            }
        }
    }
    Ok(prob)
}

/// Exact-probability slot used by enumeration and folding.
struct ExactSlot {
    voter: u32,
    /// Probability of heads; `None` when the coin is forced (p in {0, 1}).
    heads: BigRational,
    tails: BigRational,
    elections: Vec<u32>,
}

fn exact_slots(schedule: &Schedule, probs: &[BigRational]) -> Vec<ExactSlot> {
    let mut slots = Vec::with_capacity(schedule.total_blocks());
    for (voter, p) in probs.iter().enumerate() {
        for block in schedule.partition_for(voter as u32).blocks() {
            slots.push(ExactSlot {
                voter: voter as u32,
                heads: p.clone(),
                tails: BigRational::one() - p,
                elections: block.clone(),
            });
        }
    }
    slots
}

/// Fold over every positive-probability coin outcome. The callback receives
/// the per-election voter masks and the outcome's exact probability.
///
/// This is the internal engine for exact expectations: no per-outcome
/// allocations beyond what the callback does. Requires at most 64 voters
/// (masks are single words); callers enforce a support cap first.
pub(crate) fn fold_outcomes<F>(
    schedule: &Schedule,
    probs: &[BigRational],
    mut visit: F,
) -> Result<(), TurnoutError>
where
    F: FnMut(&[u64], &BigRational),
{
    if schedule.num_voters() != probs.len() {
        return Err(TurnoutError::VoterMismatch {
            schedule: schedule.num_voters(),
            voters: probs.len(),
        });
    }
    if probs.len() > 64 {
        return Err(TurnoutError::TooManyVoters(probs.len()));
    }
    let slots = exact_slots(schedule, probs);
    let mut masks = vec![0u64; schedule.num_elections() as usize];
    recurse(&slots, 0, &BigRational::one(), &mut masks, &mut visit);
    return Ok(());

    fn recurse<F: FnMut(&[u64], &BigRational)>(
        slots: &[ExactSlot],
        idx: usize,
        prob: &BigRational,
        masks: &mut Vec<u64>,
        visit: &mut F,
    ) {
        if idx == slots.len() {
            visit(masks, prob);
            return;
        }
        let slot = &slots[idx];
        if !slot.tails.is_zero() {
            let p = prob * &slot.tails;
            recurse(slots, idx + 1, &p, masks, visit);
        }
        if !slot.heads.is_zero() {
            let bit = 1u64 << slot.voter;
            for &l in &slot.elections {
                masks[l as usize] |= bit;
            }
            let p = prob * &slot.heads;
            recurse(slots, idx + 1, &p, masks, visit);
            for &l in &slot.elections {
                masks[l as usize] &= !bit;
            }
        }
    }
}

/// Streaming enumeration of every positive-probability turnout with its
/// exact probability. Probabilities sum to exactly one.
pub fn enumerate_turnouts(
    schedule: &Schedule,
    voters: &[Voter],
    cap: u64,
) -> Result<TurnoutIter, TurnoutError> {
    if schedule.num_voters() != voters.len() {
        return Err(TurnoutError::VoterMismatch {
            schedule: schedule.num_voters(),
            voters: voters.len(),
        });
    }
    let support = support_size(schedule).unwrap_or(u128::MAX);
    if support > cap as u128 {
        return Err(TurnoutError::SupportTooLarge {
            support,
            cap: cap as u128,
        });
    }
    let probs: Vec<BigRational> = voters.iter().map(|v| v.turnout_prob.clone()).collect();
    let slots = exact_slots(schedule, &probs);
    // first admissible coin vector: tails wherever allowed, else heads
    let coins: Vec<bool> = slots.iter().map(|s| s.tails.is_zero()).collect();
    let mut prefix = Vec::with_capacity(slots.len() + 1);
    prefix.push(BigRational::one());
    for (i, c) in coins.iter().enumerate() {
        let factor = if *c { &slots[i].heads } else { &slots[i].tails };
        let last = prefix.last().unwrap().clone();
        prefix.push(last * factor);
    }
    Ok(TurnoutIter {
        num_voters: voters.len() as u32,
        num_elections: schedule.num_elections(),
        slots,
        coins,
        prefix,
        done: false,
    })
}

/// Iterator over weighted turnouts; see [`enumerate_turnouts`].
pub struct TurnoutIter {
    num_voters: u32,
    num_elections: u32,
    slots: Vec<ExactSlot>,
    coins: Vec<bool>,
    /// prefix[i] = probability of the first i coins in the current vector.
    prefix: Vec<BigRational>,
    done: bool,
}

impl TurnoutIter {
    fn current(&self) -> WeightedTurnout {
        let mut t = Turnout::empty(self.num_voters, self.num_elections);
        for (slot, &heads) in self.slots.iter().zip(&self.coins) {
            if heads {
                for &l in &slot.elections {
                    t.insert(slot.voter, l);
                }
            }
        }
        WeightedTurnout {
            turnout: t,
            probability: self.prefix.last().unwrap().clone(),
        }
    }

    /// Advance the coin odometer (tails < heads, last slot least
    /// significant), skipping forced coins. Returns false when exhausted.
    fn advance(&mut self) -> bool {
        let mut i = self.slots.len();
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            let slot = &self.slots[i];
            let free = !slot.heads.is_zero() && !slot.tails.is_zero();
            if free && !self.coins[i] {
                self.coins[i] = true;
                break;
            }
            // reset to this slot's lowest admissible value and carry on
            self.coins[i] = slot.tails.is_zero();
        }
        for k in i..self.slots.len() {
            let slot = &self.slots[k];
            let factor = if self.coins[k] { &slot.heads } else { &slot.tails };
            self.prefix[k + 1] = &self.prefix[k] * factor;
        }
        true
    }
}

impl Iterator for TurnoutIter {
    type Item = WeightedTurnout;

    fn next(&mut self) -> Option<WeightedTurnout> {
        if self.done {
            return None;
        }
        let item = self.current();
        if !self.advance() {
            self.done = true;
        }
        Some(item)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Partition;
    use crate::model::PartyId;
    use crate::ratio::{rat, rat_int};

    fn voter(id: u32, p: BigRational) -> Voter {
        Voter::new(id, PartyId(0), p)
    }

    fn uniform(n: u32, blocks: &[&[u32]], m: usize) -> Schedule {
        Schedule::uniform(
            Partition::new(n, blocks.iter().map(|b| b.to_vec()).collect()).unwrap(),
            m,
        )
    }

    #[test]
    fn degenerate_probabilities_force_the_turnout() {
        let sch = uniform(2, &[&[0], &[1]], 2);
        let all_in = vec![voter(0, rat_int(1)), voter(1, rat_int(1))];
        let all_out = vec![voter(0, rat_int(0)), voter(1, rat_int(0))];
        let mut rng = sample_rng(7, 0);
        let t = sample_turnout(&sch, &all_in, &mut rng).unwrap();
        assert_eq!(t.voters_for(0).len(), 2);
        assert_eq!(t.voters_for(1).len(), 2);
        let t = sample_turnout(&sch, &all_out, &mut rng).unwrap();
        assert!(t.voters_for(0).is_empty() && t.voters_for(1).is_empty());
    }

    #[test]
    fn block_coupling_within_a_sample() {
        let sch = uniform(2, &[&[0, 1]], 1);
        let voters = vec![voter(0, rat(1, 2))];
        for i in 0..10_000u64 {
            let mut rng = sample_rng(42, i);
            let t = sample_turnout(&sch, &voters, &mut rng).unwrap();
            assert_eq!(t.contains(0, 0), t.contains(0, 1), "sample {i}");
        }
    }

    #[test]
    fn enumeration_single_coin() {
        let sch = uniform(2, &[&[0, 1]], 1);
        let voters = vec![voter(0, rat(1, 2))];
        let all: Vec<_> = enumerate_turnouts(&sch, &voters, 1 << 24).unwrap().collect();
        assert_eq!(all.len(), 2);
        for wt in &all {
            assert_eq!(wt.probability, rat(1, 2));
        }
    }

    #[test]
    fn enumeration_two_coins() {
        let sch = uniform(2, &[&[0], &[1]], 1);
        let voters = vec![voter(0, rat(1, 2))];
        let all: Vec<_> = enumerate_turnouts(&sch, &voters, 1 << 24).unwrap().collect();
        assert_eq!(all.len(), 4);
        for wt in &all {
            assert_eq!(wt.probability, rat(1, 4));
        }
    }

    #[test]
    fn enumeration_probabilities_sum_to_one_exactly() {
        let sch = uniform(2, &[&[0], &[1]], 2);
        let voters = vec![voter(0, rat(1, 2)), voter(1, rat(1, 3))];
        let all: Vec<_> = enumerate_turnouts(&sch, &voters, 1 << 24).unwrap().collect();
        assert_eq!(all.len(), 16);
        let total: BigRational = all.iter().map(|wt| wt.probability.clone()).sum();
        assert_eq!(total, rat_int(1));
        // no duplicates
        let set: std::collections::HashSet<_> =
            all.iter().map(|wt| wt.turnout.clone()).collect();
        assert_eq!(set.len(), all.len());
    }

    #[test]
    fn enumeration_skips_zero_probability_outcomes() {
        let sch = uniform(2, &[&[0], &[1]], 2);
        let voters = vec![voter(0, rat_int(1)), voter(1, rat(1, 2))];
        let all: Vec<_> = enumerate_turnouts(&sch, &voters, 1 << 24).unwrap().collect();
        assert_eq!(all.len(), 4);
        let total: BigRational = all.iter().map(|wt| wt.probability.clone()).sum();
        assert_eq!(total, rat_int(1));
        for wt in &all {
            assert!(wt.turnout.contains(0, 0) && wt.turnout.contains(0, 1));
            assert!(!wt.probability.is_zero());
        }
    }

    #[test]
    fn support_cap_is_enforced() {
        let sch = uniform(2, &[&[0], &[1]], 13);
        let voters: Vec<_> = (0..13).map(|i| voter(i, rat(1, 2))).collect();
        // 2^26 outcomes > 2^24 cap
        match enumerate_turnouts(&sch, &voters, 1 << 24) {
            Err(TurnoutError::SupportTooLarge { support, cap }) => {
                assert_eq!(support, 1 << 26);
                assert_eq!(cap, 1 << 24);
            }
            other => panic!("expected SupportTooLarge, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn point_mass_probabilities() {
        let voters = vec![voter(0, rat(1, 2))];
        let merged = uniform(2, &[&[0, 1]], 1);
        let both = Turnout::from_pairs(1, 2, [(0, 0), (0, 1)]);
        assert_eq!(turnout_probability(&both, &merged, &voters).unwrap(), rat(1, 2));
        let split = Turnout::from_pairs(1, 2, [(0, 0)]);
        assert_eq!(
            turnout_probability(&split, &merged, &voters).unwrap(),
            rat_int(0)
        );
        let sep = uniform(2, &[&[0], &[1]], 1);
        let voters3 = vec![voter(0, rat(1, 3))];
        assert_eq!(
            turnout_probability(&split, &sep, &voters3).unwrap(),
            rat(2, 9)
        );
    }

    #[test]
    fn view_conversions_are_mutually_inverse() {
        let t = Turnout::from_pairs(3, 2, [(0, 1), (2, 1)]);
        let per_voter = t.by_voter();
        assert_eq!(t.voters_for(1).iter().collect::<Vec<_>>(), vec![0, 2]);
        assert!(t.voters_for(0).is_empty());
        assert_eq!(Turnout::from_by_voter(2, &per_voter), t);

        let empty = Turnout::empty(3, 2);
        assert!(empty.by_voter().iter().all(|s| s.is_empty()));
        let full = Turnout::from_pairs(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)]);
        assert_eq!(full.voters_for(0).len(), 2);
        assert_eq!(Turnout::from_by_voter(2, &full.by_voter()), full);
    }

    #[test]
    fn sampled_turnouts_never_split_blocks() {
        let sch = Schedule::staggered(vec![
            Partition::new(3, vec![vec![0, 1], vec![2]]).unwrap(),
            Partition::new(3, vec![vec![0, 2], vec![1]]).unwrap(),
        ]);
        let voters = vec![voter(0, rat(1, 3)), voter(1, rat(2, 3))];
        for i in 0..500 {
            let mut rng = sample_rng(3, i);
            let t = sample_turnout(&sch, &voters, &mut rng).unwrap();
            let p = turnout_probability(&t, &sch, &voters).unwrap();
            assert!(!p.is_zero(), "sample {i} split a block");
        }
    }

    #[test]
    fn fold_matches_enumeration() {
        let sch = Schedule::staggered(vec![
            Partition::new(2, vec![vec![0, 1]]).unwrap(),
            Partition::new(2, vec![vec![0], vec![1]]).unwrap(),
        ]);
        let voters = vec![voter(0, rat(1, 2)), voter(1, rat(1, 5))];
        let probs: Vec<_> = voters.iter().map(|v| v.turnout_prob.clone()).collect();
        let mut folded: Vec<(Vec<u64>, BigRational)> = Vec::new();
        fold_outcomes(&sch, &probs, |masks, prob| {
            folded.push((masks.to_vec(), prob.clone()));
        })
        .unwrap();
        let listed: Vec<_> = enumerate_turnouts(&sch, &voters, 1 << 24).unwrap().collect();
        assert_eq!(folded.len(), listed.len());
        let mut folded_set: Vec<_> = folded
            .iter()
            .map(|(m, p)| (m.clone(), p.clone()))
            .collect();
        folded_set.sort();
        let mut listed_set: Vec<_> = listed
            .iter()
            .map(|wt| {
                let masks: Vec<u64> = wt
                    .turnout
                    .by_election()
                    .iter()
                    .map(|s| s.as_u64().unwrap())
                    .collect();
                (masks, wt.probability.clone())
            })
            .collect();
        listed_set.sort();
        assert_eq!(folded_set, listed_set);
    }
}
