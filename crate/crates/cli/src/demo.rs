//! Packaged demonstration scenarios built programmatically.

use sweeplab_core::lattice::Partition;
use sweeplab_core::model::{ElectionSpec, PartyId, Scenario, Schedule, Voter};
use sweeplab_core::ratio::rat;
use sweeplab_core::rules::WinRuleSpec;

/// The one-nation-one-election demonstration: two parties with `per_side`
/// supporters each, every turnout probability 1/2, two first-past-the-post
/// elections (a national and a state poll). Returned with the two uniform
/// schedules to contrast: both elections on one date, or on separate dates.
pub fn onoe_scenario(per_side: u64) -> (Scenario, Schedule, Schedule) {
    assert!(per_side >= 1, "need at least one voter per side");
    let m = (2 * per_side) as usize;
    let voters = (0..m as u32)
        .map(|id| {
            let party = if (id as u64) < per_side { 0 } else { 1 };
            Voter::new(id, PartyId(party), rat(1, 2))
        })
        .collect();
    let scenario = Scenario::new(
        vec!["A".into(), "B".into()],
        voters,
        vec![
            ElectionSpec::new(0, WinRuleSpec::Fptp),
            ElectionSpec::new(1, WinRuleSpec::Fptp),
        ],
    );
    let simultaneous = Schedule::uniform(Partition::single_block(2), m);
    let separate = Schedule::uniform(Partition::singletons(2), m);
    (scenario, simultaneous, separate)
}
