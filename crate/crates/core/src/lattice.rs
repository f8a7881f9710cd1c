//! The partition-coarsening order on polling schedules.
//!
//! A partition of the election set groups elections that share a poll date.
//! Partition `A` is coarser than `B` when every block of `B` lies inside a
//! block of `A`; for staggered schedules the relation is required per voter.
//! Coarsening chains decompose any comparable pair into elementary
//! two-block merges, which is the induction step the exact-monotonicity
//! machinery relies on.

use crate::model::Schedule;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("election {0} appears in more than one block")]
    Overlap(u32),
    #[error("election {0} is not covered by any block")]
    Missing(u32),
    #[error("election {0} is out of range for ground set of size {1}")]
    OutOfRange(u32, u32),
    #[error("empty block at index {0}")]
    EmptyBlock(usize),
    #[error("empty ground set")]
    EmptyGroundSet,
    #[error("ground sets differ: {0} vs {1}")]
    GroundSetMismatch(u32, u32),
    #[error("invalid block index {index} (partition has {blocks} blocks)")]
    BadBlockIndex { index: usize, blocks: usize },
    #[error("cannot merge a block with itself (index {0})")]
    SelfMerge(usize),
    #[error("partition enumeration supports up to 8 elections, got {0}")]
    TooManyElections(u32),
}

/// A partition of the election set `{0, .., n-1}` in canonical form:
/// blocks sorted by smallest member, members ascending within each block.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Partition {
    n: u32,
    blocks: Vec<Vec<u32>>,
}

impl Partition {
    /// Build and canonicalize. Rejects non-covering or overlapping blocks.
    pub fn new(n: u32, blocks: Vec<Vec<u32>>) -> Result<Partition, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyGroundSet);
        }
        let mut seen = vec![false; n as usize];
        let mut canon: Vec<Vec<u32>> = Vec::with_capacity(blocks.len());
        for (bi, block) in blocks.into_iter().enumerate() {
            if block.is_empty() {
                return Err(PartitionError::EmptyBlock(bi));
            }
            let mut b = block;
            b.sort_unstable();
            for &e in &b {
                if e >= n {
                    return Err(PartitionError::OutOfRange(e, n));
                }
                if seen[e as usize] {
                    return Err(PartitionError::Overlap(e));
                }
                seen[e as usize] = true;
            }
            canon.push(b);
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(PartitionError::Missing(missing as u32));
        }
        canon.sort_by_key(|b| b[0]);
        Ok(Partition { n, blocks: canon })
    }

    /// The finest partition: every election on its own date.
    pub fn singletons(n: u32) -> Partition {
        Partition::new(n, (0..n).map(|e| vec![e]).collect()).expect("valid by construction")
    }

    /// The coarsest partition: all elections simultaneous.
    pub fn single_block(n: u32) -> Partition {
        Partition::new(n, vec![(0..n).collect()]).expect("valid by construction")
    }

    pub fn ground_size(&self) -> u32 {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `election`.
    pub fn block_of(&self, election: u32) -> Result<usize, PartitionError> {
        if election >= self.n {
            return Err(PartitionError::OutOfRange(election, self.n));
        }
        Ok(self
            .blocks
            .iter()
            .position(|b| b.binary_search(&election).is_ok())
            .expect("canonical partitions cover the ground set"))
    }

    /// True iff `self` is coarser than (or equal to) `fine`: any two
    /// elections simultaneous in `fine` are simultaneous in `self`.
    pub fn is_coarser_than(&self, fine: &Partition) -> Result<bool, PartitionError> {
        if self.n != fine.n {
            return Err(PartitionError::GroundSetMismatch(self.n, fine.n));
        }
        Ok(self.coarseness_witness(fine).is_none())
    }

    /// If not coarser, return a pair of elections simultaneous in `fine`
    /// but split by `self`.
    pub(crate) fn coarseness_witness(&self, fine: &Partition) -> Option<(u32, u32)> {
        let mut block_of = vec![0usize; self.n as usize];
        for (bi, b) in self.blocks.iter().enumerate() {
            for &e in b {
                block_of[e as usize] = bi;
            }
        }
        for fb in &fine.blocks {
            let home = block_of[fb[0] as usize];
            for &e in &fb[1..] {
                if block_of[e as usize] != home {
                    return Some((fb[0], e));
                }
            }
        }
        None
    }

    /// Replace blocks `i` and `j` by their union; the result is coarser
    /// than `self` by exactly one block.
    pub fn merge_blocks(&self, i: usize, j: usize) -> Result<Partition, PartitionError> {
        let nb = self.blocks.len();
        if i >= nb {
            return Err(PartitionError::BadBlockIndex { index: i, blocks: nb });
        }
        if j >= nb {
            return Err(PartitionError::BadBlockIndex { index: j, blocks: nb });
        }
        if i == j {
            return Err(PartitionError::SelfMerge(i));
        }
        let mut blocks = self.blocks.clone();
        let (lo, hi) = (i.min(j), i.max(j));
        let tail = blocks.remove(hi);
        blocks[lo].extend(tail);
        Partition::new(self.n, blocks)
    }
}

impl std::fmt::Display for Partition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.blocks {
            write!(f, "{{")?;
            for (i, e) in b.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{e}")?;
            }
            write!(f, "}}")?;
        }
        Ok(())
    }
}

/// All partitions of `{0, .., n-1}` via restricted growth strings, in
/// lexicographic string order. Yields exactly the Bell number of partitions.
pub fn enumerate_partitions(n: u32) -> Result<Vec<Partition>, PartitionError> {
    if n == 0 {
        return Err(PartitionError::EmptyGroundSet);
    }
    if n > 8 {
        return Err(PartitionError::TooManyElections(n));
    }
    let n = n as usize;
    let mut out = Vec::new();
    // rgs[i] = block label of element i; rgs[i] <= max(rgs[..i]) + 1
    let mut rgs = vec![0u32; n];
    loop {
        let num_blocks = rgs.iter().copied().max().unwrap() + 1;
        let mut blocks: Vec<Vec<u32>> = vec![Vec::new(); num_blocks as usize];
        for (e, &label) in rgs.iter().enumerate() {
            blocks[label as usize].push(e as u32);
        }
        out.push(Partition::new(n as u32, blocks).expect("RGS yields a valid partition"));

        // advance to the next restricted growth string
        let mut i = n;
        loop {
            if i == 1 {
                return Ok(out);
            }
            i -= 1;
            let prefix_max = rgs[..i].iter().copied().max().unwrap();
            if rgs[i] <= prefix_max {
                rgs[i] += 1;
                for r in rgs[i + 1..].iter_mut() {
                    *r = 0;
                }
                break;
            }
            rgs[i] = 0;
        }
    }
}

/// One elementary merge in a coarsening chain: in voter `voter`'s current
/// partition, blocks `block_a` and `block_b` (pre-merge indices) are united.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeStep {
    pub voter: u32,
    pub block_a: usize,
    pub block_b: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("schedules cover different voter counts: {0} vs {1}")]
    VoterMismatch(usize, usize),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(
        "schedule is not coarser: elections {election_a} and {election_b} are \
         simultaneous for voter {voter} in the finer schedule but not in the coarser one"
    )]
    NotCoarser {
        voter: u32,
        election_a: u32,
        election_b: u32,
    },
}

/// True iff `coarse` is coarser than (or equal to) `fine` for every voter.
pub fn is_coarser_staggered(coarse: &Schedule, fine: &Schedule) -> Result<bool, ChainError> {
    check_same_shape(coarse, fine)?;
    for (pc, pf) in coarse.partitions().iter().zip(fine.partitions()) {
        if !pc.is_coarser_than(pf)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_same_shape(a: &Schedule, b: &Schedule) -> Result<(), ChainError> {
    if a.num_voters() != b.num_voters() {
        return Err(ChainError::VoterMismatch(a.num_voters(), b.num_voters()));
    }
    if a.num_elections() != b.num_elections() {
        return Err(PartitionError::GroundSetMismatch(a.num_elections(), b.num_elections()).into());
    }
    Ok(())
}

/// A canonical sequence of elementary merges turning `fine` into `coarse`.
///
/// Voters are processed in ascending id; within a voter the two
/// lowest-indexed mergeable blocks are merged first. Replaying the steps on
/// `fine` reproduces `coarse` exactly.
pub fn coarsening_chain(fine: &Schedule, coarse: &Schedule) -> Result<Vec<MergeStep>, ChainError> {
    check_same_shape(coarse, fine)?;
    let mut steps = Vec::new();
    for (voter, (pf, pc)) in fine.partitions().iter().zip(coarse.partitions()).enumerate() {
        if let Some((a, b)) = pc.coarseness_witness(pf) {
            return Err(ChainError::NotCoarser {
                voter: voter as u32,
                election_a: a,
                election_b: b,
            });
        }
        let mut current = pf.clone();
        while current != *pc {
            let target: Vec<usize> = current
                .blocks()
                .iter()
                .map(|b| pc.block_of(b[0]).expect("coarseness checked above"))
                .collect();
            let (i, j) = first_mergeable_pair(&target)
                .expect("a finer-but-unequal partition always has a mergeable pair");
            steps.push(MergeStep {
                voter: voter as u32,
                block_a: i,
                block_b: j,
            });
            current = current.merge_blocks(i, j)?;
        }
    }
    Ok(steps)
}

fn first_mergeable_pair(target_block: &[usize]) -> Option<(usize, usize)> {
    for i in 0..target_block.len() {
        for j in i + 1..target_block.len() {
            if target_block[i] == target_block[j] {
                return Some((i, j));
            }
        }
    }
    None
}

/// Replay a merge chain on `fine`, returning the resulting schedule.
pub fn apply_chain(fine: &Schedule, steps: &[MergeStep]) -> Result<Schedule, ChainError> {
    let mut parts = fine.partitions().to_vec();
    for step in steps {
        let idx = step.voter as usize;
        if idx >= parts.len() {
            return Err(ChainError::VoterMismatch(idx, parts.len()));
        }
        parts[idx] = parts[idx].merge_blocks(step.block_a, step.block_b)?;
    }
    Ok(Schedule::staggered(parts))
}
