//! Direct verification of the correlation-inequality layer on explicit
//! lattice functions.
//!
//! A lattice function is a table over all subsets of a small voter set.
//! For an aligned tuple of nonnegative functions (at each voter, all
//! functions non-decreasing or all non-increasing), coarsening the
//! schedule can only raise the expectation of the product — the margin is
//! computed exactly here, along with the two-function covariance special
//! case and the single-vs-double coin identity that drives the proof.
//!
//! Everything is exact rational arithmetic: these are inequalities, and
//! float noise would produce false verdicts.

use crate::model::Schedule;
use crate::turnout::{self, TurnoutError};
use num::rational::BigRational;
use num::{One, Zero};
use rand::Rng;
use thiserror::Error;

/// Hard cap on voter-set size for the power-set tables.
pub const MAX_TABLE_VOTERS: u32 = 12;

#[derive(Debug, Error, PartialEq)]
pub enum IneqError {
    #[error("lattice functions support at most {max} voters, got {got}")]
    TooManyVoters { got: u32, max: u32 },
    #[error("table length {got} does not match 2^{voters}")]
    BadTableLength { got: usize, voters: u32 },
    #[error("tuple has {functions} functions but {directions} voter directions")]
    ShapeMismatch { functions: usize, directions: usize },
    #[error("functions disagree on voter-set size: {0} vs {1}")]
    VoterMismatch(u32, u32),
    #[error("function {function} is negative at subset {subset:#b}")]
    Negative { function: usize, subset: u64 },
    #[error(
        "function {function} is not {direction} at voter {voter}: \
         adding the voter to subset {subset:#b} moves it the wrong way"
    )]
    Misaligned {
        function: usize,
        voter: u32,
        subset: u64,
        direction: Direction,
    },
    #[error("function {function} is not increasing at voter {voter} (subset {subset:#b})")]
    NotIncreasing {
        function: usize,
        voter: u32,
        subset: u64,
    },
    #[error("probability vector has {got} entries for {want} voters")]
    BadProbabilities { got: usize, want: usize },
    #[error(transparent)]
    Turnout(#[from] TurnoutError),
    #[error("schedules are not comparable: {0}")]
    NotCoarser(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Increasing => write!(f, "increasing"),
            Direction::Decreasing => write!(f, "decreasing"),
        }
    }
}

/// A real-valued function on the power set of `{0, .., num_voters-1}`,
/// stored as an explicit table indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    num_voters: u32,
    values: Vec<BigRational>,
}

impl LatticeFunction {
    pub fn new(num_voters: u32, values: Vec<BigRational>) -> Result<LatticeFunction, IneqError> {
        if num_voters > MAX_TABLE_VOTERS {
            return Err(IneqError::TooManyVoters {
                got: num_voters,
                max: MAX_TABLE_VOTERS,
            });
        }
        if values.len() != 1usize << num_voters {
            return Err(IneqError::BadTableLength {
                got: values.len(),
                voters: num_voters,
            });
        }
        Ok(LatticeFunction { num_voters, values })
    }

    pub fn constant(num_voters: u32, value: BigRational) -> LatticeFunction {
        LatticeFunction::new(num_voters, vec![value; 1 << num_voters]).expect("table size matches")
    }

    /// The indicator of `voter ∈ S`.
    pub fn membership_indicator(num_voters: u32, voter: u32) -> LatticeFunction {
        let values = (0u64..(1 << num_voters))
            .map(|mask| {
                if mask >> voter & 1 == 1 {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        LatticeFunction::new(num_voters, values).expect("table size matches")
    }

    pub fn num_voters(&self) -> u32 {
        self.num_voters
    }

    pub fn value(&self, subset: u64) -> &BigRational {
        &self.values[subset as usize]
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= BigRational::zero())
    }

    /// First subset where adding `voter` moves the value against `dir`.
    pub fn direction_witness(&self, voter: u32, dir: Direction) -> Option<u64> {
        let bit = 1u64 << voter;
        for s in 0u64..(1 << self.num_voters) {
            if s & bit != 0 {
                continue;
            }
            let lo = &self.values[s as usize];
            let hi = &self.values[(s | bit) as usize];
            let ok = match dir {
                Direction::Increasing => hi >= lo,
                Direction::Decreasing => hi <= lo,
            };
            if !ok {
                return Some(s);
            }
        }
        None
    }

    pub fn is_increasing_everywhere(&self) -> Option<(u32, u64)> {
        (0..self.num_voters)
            .find_map(|h| self.direction_witness(h, Direction::Increasing).map(|s| (h, s)))
    }

    pub fn plus_constant(&self, c: &BigRational) -> LatticeFunction {
        LatticeFunction {
            num_voters: self.num_voters,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

/// A tuple of nonnegative functions sharing one declared direction per
/// voter, each function verified against the declaration on construction.
#[derive(Clone, Debug)]
pub struct AlignedTuple {
    functions: Vec<LatticeFunction>,
    directions: Vec<Direction>,
}

impl AlignedTuple {
    pub fn new(
        functions: Vec<LatticeFunction>,
        directions: Vec<Direction>,
    ) -> Result<AlignedTuple, IneqError> {
        let m = match functions.first() {
            Some(f) => f.num_voters(),
            None => directions.len() as u32,
        };
        for f in &functions {
            if f.num_voters() != m {
                return Err(IneqError::VoterMismatch(m, f.num_voters()));
            }
        }
        if directions.len() != m as usize {
            return Err(IneqError::ShapeMismatch {
                functions: functions.len(),
                directions: directions.len(),
            });
        }
        for (fi, f) in functions.iter().enumerate() {
            if let Some(subset) = f.values.iter().position(|v| *v < BigRational::zero()) {
                return Err(IneqError::Negative {
                    function: fi,
                    subset: subset as u64,
                });
            }
            for (h, &dir) in directions.iter().enumerate() {
                if let Some(subset) = f.direction_witness(h as u32, dir) {
                    return Err(IneqError::Misaligned {
                        function: fi,
                        voter: h as u32,
                        subset,
                        direction: dir,
                    });
                }
            }
        }
        Ok(AlignedTuple {
            functions,
            directions,
        })
    }

    pub fn functions(&self) -> &[LatticeFunction] {
        &self.functions
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn num_voters(&self) -> u32 {
        self.directions.len() as u32
    }
}

/// Exact expectation of the product `f_1(H_1) ... f_n(H_n)` under the
/// turnout measure given by per-voter partitions and probabilities. The
/// l-th function is evaluated on the set of voters attending election l.
pub fn expectation(
    functions: &[LatticeFunction],
    schedule: &Schedule,
    probs: &[BigRational],
) -> Result<BigRational, IneqError> {
    let m = schedule.num_voters();
    if probs.len() != m {
        return Err(IneqError::BadProbabilities {
            got: probs.len(),
            want: m,
        });
    }
    for f in functions {
        if f.num_voters() as usize != m {
            return Err(IneqError::VoterMismatch(f.num_voters(), m as u32));
        }
    }
    debug_assert_eq!(functions.len() as u32, schedule.num_elections());
    let mut total = BigRational::zero();
    turnout::fold_outcomes(schedule, probs, |masks, prob| {
        let mut term = prob.clone();
        for (f, &mask) in functions.iter().zip(masks) {
            if term.is_zero() {
                return;
            }
            term *= f.value(mask);
        }
        total += term;
    })?;
    Ok(total)
}

/// Outcome of an exact coarsening comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseningMargin {
    pub coarse_value: BigRational,
    pub fine_value: BigRational,
    /// `coarse_value - fine_value`; the inequality holds iff this is >= 0.
    pub margin: BigRational,
    pub holds: bool,
}

/// Verify the coarsening inequality for an aligned nonnegative tuple:
/// the expectation under the coarser schedule is at least the expectation
/// under the finer one. Preconditions (comparability, alignment) are
/// checked and reported with witnesses; the margin is exact.
pub fn verify_theorem_d(
    tuple: &AlignedTuple,
    fine: &Schedule,
    coarse: &Schedule,
    probs: &[BigRational],
) -> Result<CoarseningMargin, IneqError> {
    if !crate::lattice::is_coarser_staggered(coarse, fine)
        .map_err(|e| IneqError::NotCoarser(e.to_string()))?
    {
        let witness = crate::lattice::coarsening_chain(fine, coarse)
            .err()
            .map(|e| e.to_string())
            .unwrap_or_else(|| "not coarser".into());
        return Err(IneqError::NotCoarser(witness));
    }
    let coarse_value = expectation(tuple.functions(), coarse, probs)?;
    let fine_value = expectation(tuple.functions(), fine, probs)?;
    let margin = &coarse_value - &fine_value;
    let holds = margin >= BigRational::zero();
    Ok(CoarseningMargin {
        coarse_value,
        fine_value,
        margin,
        holds,
    })
}

/// Exact covariance of two increasing functions under the product
/// Bernoulli measure on subsets of the voter set: `E[f1 f2] - E[f1] E[f2]`.
/// Computed directly over the 2^m subsets, independent of the partition
/// machinery. Rejects non-increasing inputs with a witness.
pub fn harris_covariance(
    f1: &LatticeFunction,
    f2: &LatticeFunction,
    probs: &[BigRational],
) -> Result<BigRational, IneqError> {
    if f1.num_voters() != f2.num_voters() {
        return Err(IneqError::VoterMismatch(f1.num_voters(), f2.num_voters()));
    }
    let m = f1.num_voters();
    if probs.len() != m as usize {
        return Err(IneqError::BadProbabilities {
            got: probs.len(),
            want: m as usize,
        });
    }
    for (fi, f) in [f1, f2].into_iter().enumerate() {
        if let Some((voter, subset)) = f.is_increasing_everywhere() {
            return Err(IneqError::NotIncreasing {
                function: fi,
                voter,
                subset,
            });
        }
    }
    let mut e12 = BigRational::zero();
    let mut e1 = BigRational::zero();
    let mut e2 = BigRational::zero();
    for mask in 0u64..(1 << m) {
        let mut mu = BigRational::one();
        for (h, p) in probs.iter().enumerate() {
            if mask >> h & 1 == 1 {
                mu *= p;
            } else {
                mu *= BigRational::one() - p;
            }
        }
        e12 += &mu * f1.value(mask) * f2.value(mask);
        e1 += &mu * f1.value(mask);
        e2 += &mu * f2.value(mask);
    }
    Ok(e12 - e1 * e2)
}

/// The single-vs-double coin identity behind the elementary merge step.
#[derive(Clone, Debug, PartialEq)]
pub struct CoinIdentity {
    /// Conditional expectation with one coin for the merged block.
    pub single_toss: BigRational,
    /// Conditional expectation with separate coins for the two blocks.
    pub double_toss: BigRational,
    /// `single_toss - double_toss`, computed from the two expectations.
    pub difference: BigRational,
    /// The closed form `p(1-p)(a1-b1)(a2-b2)c`.
    pub product_form: BigRational,
    pub holds: bool,
}

/// Check, exactly, that merging two blocks changes the conditional
/// expectation by `p(1-p)(a1-b1)(a2-b2)c`: the single-toss expectation is
/// `[p a1 a2 + (1-p) b1 b2] c`, the double-toss one is
/// `[p^2 a1 a2 + p(1-p)(a1 b2 + b1 a2) + (1-p)^2 b1 b2] c`.
pub fn proof_identity_check(
    a1: &BigRational,
    a2: &BigRational,
    b1: &BigRational,
    b2: &BigRational,
    c: &BigRational,
    p: &BigRational,
) -> CoinIdentity {
    let q = BigRational::one() - p;
    let single_toss = (p * a1 * a2 + &q * b1 * b2) * c;
    let double_toss = (p * p * a1 * a2 + p * &q * (a1 * b2 + b1 * a2) + &q * &q * b1 * b2) * c;
    let difference = &single_toss - &double_toss;
    let product_form = p * q * (a1 - b1) * (a2 - b2) * c;
    let holds = difference == product_form;
    CoinIdentity {
        single_toss,
        double_toss,
        difference,
        product_form,
        holds,
    }
}

/// Generate a random aligned nonnegative tuple: each function is a sum of
/// nonnegative increments over the subset lattice (so it is non-decreasing
/// in every coordinate), then coordinates declared decreasing are flipped.
/// The result always satisfies the [`AlignedTuple`] invariants.
pub fn random_aligned_tuple(
    num_voters: u32,
    num_functions: u32,
    directions: &[Direction],
    rng: &mut impl Rng,
) -> Result<AlignedTuple, IneqError> {
    if num_voters > 10 {
        return Err(IneqError::TooManyVoters {
            got: num_voters,
            max: 10,
        });
    }
    assert_eq!(directions.len(), num_voters as usize);
    let size = 1usize << num_voters;
    let mut flip_mask = 0u64;
    for (h, &d) in directions.iter().enumerate() {
        if d == Direction::Decreasing {
            flip_mask |= 1 << h;
        }
    }
    let mut functions = Vec::with_capacity(num_functions as usize);
    for _ in 0..num_functions {
        // sparse nonnegative increments, small rational values
        let mut table: Vec<BigRational> = (0..size)
            .map(|_| {
                if rng.random_bool(0.5) {
                    BigRational::zero()
                } else {
                    let numer = rng.random_range(0..4i64);
                    let denom = rng.random_range(1..5i64);
                    crate::ratio::rat(numer, denom)
                }
            })
            .collect();
        // zeta transform: g(S) = sum of increments over subsets of S
        for h in 0..num_voters {
            let bit = 1usize << h;
            for s in 0..size {
                if s & bit != 0 {
                    let lower = table[s ^ bit].clone();
                    table[s] += lower;
                }
            }
        }
        let values: Vec<BigRational> = (0..size)
            .map(|s| table[(s as u64 ^ flip_mask) as usize].clone())
            .collect();
        functions.push(LatticeFunction::new(num_voters, values)?);
    }
    AlignedTuple::new(functions, directions.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Partition;
    use crate::ratio::{rat, rat_int};
    use crate::turnout::sample_rng;

    fn uniform(n: u32, blocks: &[&[u32]], m: usize) -> Schedule {
        Schedule::uniform(
            Partition::new(n, blocks.iter().map(|b| b.to_vec()).collect()).unwrap(),
            m,
        )
    }

    #[test]
    fn expectation_normalization_and_single_bernoulli() {
        // all functions identically 1: expectation 1 for every schedule
        let ones = vec![
            LatticeFunction::constant(2, rat_int(1)),
            LatticeFunction::constant(2, rat_int(1)),
        ];
        let p = vec![rat(1, 3), rat(2, 5)];
        for sch in [uniform(2, &[&[0, 1]], 2), uniform(2, &[&[0], &[1]], 2)] {
            assert_eq!(expectation(&ones, &sch, &p).unwrap(), rat_int(1));
        }
        // single indicator: expectation is the voter's probability
        let ind = vec![LatticeFunction::membership_indicator(2, 1)];
        let sch1 = uniform(1, &[&[0]], 2);
        assert_eq!(expectation(&ind, &sch1, &p).unwrap(), rat(2, 5));
    }

    #[test]
    fn expectation_merged_vs_separate_indicator_pair() {
        // n = 2, m = 1, both functions the indicator of voter 0
        let f = LatticeFunction::membership_indicator(1, 0);
        let fs = vec![f.clone(), f];
        let p = vec![rat(1, 2)];
        let sep = uniform(2, &[&[0], &[1]], 1);
        let merged = uniform(2, &[&[0, 1]], 1);
        assert_eq!(expectation(&fs, &sep, &p).unwrap(), rat(1, 4));
        assert_eq!(expectation(&fs, &merged, &p).unwrap(), rat(1, 2));
    }

    #[test]
    fn theorem_d_margin_on_identity_and_misaligned_rejection() {
        let f = LatticeFunction::membership_indicator(1, 0);
        let tuple = AlignedTuple::new(
            vec![f.clone(), f.clone()],
            vec![Direction::Increasing],
        )
        .unwrap();
        let sep = uniform(2, &[&[0], &[1]], 1);
        let merged = uniform(2, &[&[0, 1]], 1);
        let out = verify_theorem_d(&tuple, &sep, &merged, &[rat(1, 2)]).unwrap();
        assert!(out.holds);
        assert_eq!(out.margin, rat(1, 4));

        let same = verify_theorem_d(&tuple, &sep, &sep, &[rat(1, 2)]).unwrap();
        assert_eq!(same.margin, rat_int(0));
        assert!(same.holds);

        // misaligned declaration is rejected before evaluation
        let err = AlignedTuple::new(vec![f], vec![Direction::Decreasing]).unwrap_err();
        assert!(matches!(err, IneqError::Misaligned { voter: 0, .. }));

        // negative function rejected
        let neg = LatticeFunction::new(1, vec![rat_int(-1), rat_int(0)]).unwrap();
        let err = AlignedTuple::new(vec![neg], vec![Direction::Increasing]).unwrap_err();
        assert!(matches!(err, IneqError::Negative { .. }));
    }

    #[test]
    fn theorem_d_rejects_non_coarser_pairs() {
        let f = LatticeFunction::constant(1, rat_int(1));
        let tuple = AlignedTuple::new(vec![f.clone(), f.clone(), f], vec![Direction::Increasing])
            .unwrap();
        let a = uniform(3, &[&[0, 1], &[2]], 1);
        let b = uniform(3, &[&[0], &[1, 2]], 1);
        assert!(matches!(
            verify_theorem_d(&tuple, &a, &b, &[rat(1, 2)]),
            Err(IneqError::NotCoarser(_))
        ));
    }

    #[test]
    fn harris_covariance_examples() {
        let ind = LatticeFunction::membership_indicator(1, 0);
        // Bernoulli variance
        assert_eq!(
            harris_covariance(&ind, &ind, &[rat(1, 2)]).unwrap(),
            rat(1, 4)
        );
        // constants are uncorrelated
        let c = LatticeFunction::constant(1, rat(7, 3));
        assert_eq!(harris_covariance(&c, &ind, &[rat(1, 2)]).unwrap(), rat_int(0));
        // decreasing input rejected with witness
        let dec = LatticeFunction::new(1, vec![rat_int(1), rat_int(0)]).unwrap();
        assert!(matches!(
            harris_covariance(&dec, &ind, &[rat(1, 2)]),
            Err(IneqError::NotIncreasing { function: 0, .. })
        ));
    }

    #[test]
    fn harris_matches_theorem_d_construction() {
        // covariance equals the margin between the all-merged and
        // all-separate two-election schedules
        let mut rng = sample_rng(2024, 0);
        for trial in 0..40u64 {
            let m = 1 + (trial % 3) as u32;
            let dirs = vec![Direction::Increasing; m as usize];
            let tuple = random_aligned_tuple(m, 2, &dirs, &mut rng).unwrap();
            let probs: Vec<BigRational> = (0..m)
                .map(|_| rat(rng.random_range(0..=4), 4).min(rat_int(1)))
                .collect();
            let cov = harris_covariance(
                &tuple.functions()[0],
                &tuple.functions()[1],
                &probs,
            )
            .unwrap();
            let merged = uniform(2, &[&[0, 1]], m as usize);
            let sep = uniform(2, &[&[0], &[1]], m as usize);
            let margin = verify_theorem_d(&tuple, &sep, &merged, &probs).unwrap();
            assert_eq!(cov, margin.margin, "trial {trial}");
            assert!(cov >= rat_int(0));
        }
    }

    #[test]
    fn covariance_invariant_under_adding_constants() {
        let mut rng = sample_rng(7, 1);
        let dirs = vec![Direction::Increasing; 3];
        let tuple = random_aligned_tuple(3, 2, &dirs, &mut rng).unwrap();
        let f1 = &tuple.functions()[0];
        let f2 = &tuple.functions()[1];
        let p = vec![rat(1, 3), rat(1, 2), rat(3, 4)];
        let base = harris_covariance(f1, f2, &p).unwrap();
        let shifted = harris_covariance(&f1.plus_constant(&rat(5, 2)), f2, &p).unwrap();
        assert_eq!(base, shifted);
        let shifted2 = harris_covariance(f1, &f2.plus_constant(&rat_int(3)), &p).unwrap();
        assert_eq!(base, shifted2);
    }

    #[test]
    fn proof_identity_direct_substitution() {
        let one = rat_int(1);
        let zero = rat_int(0);
        let half = rat(1, 2);
        let out = proof_identity_check(&one, &one, &zero, &zero, &one, &half);
        assert!(out.holds);
        assert_eq!(out.difference, rat(1, 4));
        // equal heads/tails values: zero difference
        let same = proof_identity_check(&half, &half, &half, &half, &one, &rat(1, 3));
        assert!(same.holds);
        assert_eq!(same.difference, rat_int(0));
    }

    #[test]
    fn generator_output_is_deterministic_and_valid() {
        let dirs = vec![Direction::Increasing, Direction::Decreasing, Direction::Increasing];
        let mut rng_a = sample_rng(55, 3);
        let mut rng_b = sample_rng(55, 3);
        let a = random_aligned_tuple(3, 2, &dirs, &mut rng_a).unwrap();
        let b = random_aligned_tuple(3, 2, &dirs, &mut rng_b).unwrap();
        for (fa, fb) in a.functions().iter().zip(b.functions()) {
            assert_eq!(fa, fb);
        }
        // all-increasing output is a valid Harris input pair
        let inc = vec![Direction::Increasing; 3];
        let mut rng = sample_rng(55, 4);
        let pair = random_aligned_tuple(3, 2, &inc, &mut rng).unwrap();
        assert!(harris_covariance(&pair.functions()[0], &pair.functions()[1], &[
            rat(1, 2),
            rat(1, 3),
            rat(2, 3)
        ])
        .is_ok());
    }
}
