//! Scenario files: a TOML document with `parties`, `voters` (explicit or
//! cohort rows), `elections`, named `schedules`, and optional `alliances`
//! and `analysis` sections.
//!
//! Probabilities are written as strings — `"1/2"` or `"0.35"` — and convert
//! exactly to rationals. Cohort rows expand to dense voter ids in file
//! order. Unknown keys anywhere in the document are rejected.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use sweeplab_core::model::{ElectionSpec, PartyId, Scenario, Schedule, Voter};
use sweeplab_core::ratio::parse_probability;
use sweeplab_core::rules::{
    Alliance, AllianceKind, AllianceStructure, PrWinMode, RoundingMethod, WinRuleSpec,
};
use sweeplab_core::VoterSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub parties: Vec<String>,
    pub voters: Vec<VoterGroup>,
    pub elections: Vec<ElectionEntry>,
    pub schedules: BTreeMap<String, ScheduleEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alliances: Option<AllianceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSection>,
}

/// One voter, or a cohort of `count` identical voters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterGroup {
    pub party: String,
    /// Turnout probability: `"1/2"`, `"0.35"`, `"0"`, or `"1"`.
    pub p: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectionEntry {
    pub name: String,
    /// `"fptp"` or `"pr"`.
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seats: Option<u64>,
    /// `"dhondt"` or `"hare"` (PR only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounding: Option<String>,
    /// `"most_seats"` or `"strict_majority"` (PR only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub win: Option<String>,
    /// Voter-group indices whose members' ballots count here; omitted
    /// means every voter is eligible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eligible_groups: Option<Vec<usize>>,
}

/// A named schedule: either one partition shared by everyone (`uniform`)
/// or one partition per voter group (`groups`). Partitions are lists of
/// blocks of election names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<Vec<String>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllianceSection {
    pub groups: Vec<AllianceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllianceEntry {
    pub name: String,
    pub members: Vec<String>,
    /// `"pre_poll"` or `"post_poll"`.
    pub kind: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    /// Schedule names to evaluate/compare; omitted means every schedule,
    /// in name order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedules: Option<Vec<String>>,
    /// Party focus for reports; omitted means all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parties: Option<Vec<String>>,
}

/// Why a scenario file could not be turned into a scenario.
#[derive(Debug)]
pub enum LoadError {
    /// Unreadable file or malformed TOML / unknown keys.
    Parse(String),
    /// Structurally fine but semantically invalid.
    Validation(String),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(msg) => write!(f, "{msg}"),
            LoadError::Validation(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for LoadError {}

/// A parsed, validated scenario plus its named schedules and analysis
/// defaults.
pub struct LoadedScenario {
    pub name: String,
    pub scenario: Scenario,
    pub election_names: Vec<String>,
    /// All named schedules, sorted by name.
    pub schedules: Vec<(String, Schedule)>,
    pub analysis: AnalysisSection,
    /// Expanded voter-id ranges per voter group (for diagnostics).
    pub group_ranges: Vec<(u32, u32)>,
}

impl LoadedScenario {
    pub fn schedule(&self, name: &str) -> Option<&Schedule> {
        self.schedules
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    /// The schedules selected by the analysis section, or all of them.
    pub fn selected_schedules(&self) -> Result<Vec<(String, Schedule)>, LoadError> {
        match self.analysis.schedules.as_ref() {
            None => Ok(self.schedules.clone()),
            Some(names) => names
                .iter()
                .map(|n| {
                    self.schedule(n)
                        .map(|s| (n.clone(), s.clone()))
                        .ok_or_else(|| {
                            LoadError::Validation(format!("analysis: unknown schedule `{n}`"))
                        })
                })
                .collect(),
        }
    }

    /// Render a partition's blocks with election names.
    pub fn partition_label(&self, partition: &sweeplab_core::Partition) -> String {
        let mut out = String::new();
        for block in partition.blocks() {
            out.push('{');
            for (i, &e) in block.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&self.election_names[e as usize]);
            }
            out.push('}');
        }
        out
    }
}

pub fn parse_file(text: &str) -> Result<ScenarioFile, LoadError> {
    toml::from_str(text).map_err(|e| LoadError::Parse(format!("scenario file: {e}")))
}

pub fn load_str(text: &str, fallback_name: &str) -> Result<LoadedScenario, LoadError> {
    let file = parse_file(text)?;
    build(&file, fallback_name)
}

pub fn load_path(path: &std::path::Path) -> Result<LoadedScenario, LoadError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| LoadError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let fallback = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    load_str(&text, &fallback)
}

fn party_index(parties: &[String], name: &str, context: &str) -> Result<u32, LoadError> {
    parties
        .iter()
        .position(|p| p == name)
        .map(|i| i as u32)
        .ok_or_else(|| LoadError::Validation(format!("{context}: unknown party `{name}`")))
}

fn build(file: &ScenarioFile, fallback_name: &str) -> Result<LoadedScenario, LoadError> {
    if file.voters.is_empty() {
        return Err(LoadError::Validation("voters: at least one entry".into()));
    }
    // expand cohorts to dense ids in file order
    let mut voters = Vec::new();
    let mut group_ranges = Vec::new();
    for (gi, group) in file.voters.iter().enumerate() {
        let count = group.count.unwrap_or(1);
        if count == 0 {
            return Err(LoadError::Validation(format!(
                "voters[{gi}]: count must be at least 1"
            )));
        }
        let party = party_index(&file.parties, &group.party, &format!("voters[{gi}]"))?;
        let p = parse_probability(&group.p)
            .map_err(|e| LoadError::Validation(format!("voters[{gi}]: {e}")))?;
        let start = voters.len() as u32;
        for _ in 0..count {
            let id = voters.len() as u32;
            voters.push(Voter::new(id, PartyId(party), p.clone()));
        }
        group_ranges.push((start, voters.len() as u32));
    }
    let num_voters = voters.len() as u32;

    let mut election_names = Vec::new();
    let mut elections = Vec::new();
    for (li, entry) in file.elections.iter().enumerate() {
        if election_names.contains(&entry.name) {
            return Err(LoadError::Validation(format!(
                "elections[{li}]: duplicate name `{}`",
                entry.name
            )));
        }
        let rule = parse_rule(entry, li)?;
        let mut spec = ElectionSpec::new(li as u32, rule);
        if let Some(groups) = &entry.eligible_groups {
            let mut mask = VoterSet::empty(num_voters);
            for &g in groups {
                let (start, end) = *group_ranges.get(g).ok_or_else(|| {
                    LoadError::Validation(format!(
                        "elections[{li}]: eligible_groups index {g} out of range \
                         ({} voter groups)",
                        group_ranges.len()
                    ))
                })?;
                for v in start..end {
                    mask.insert(v);
                }
            }
            spec = spec.with_eligibility(mask);
        }
        election_names.push(entry.name.clone());
        elections.push(spec);
    }

    let mut scenario = Scenario::new(file.parties.clone(), voters, elections);
    if let Some(section) = &file.alliances {
        let groups = section
            .groups
            .iter()
            .enumerate()
            .map(|(ai, a)| {
                let kind = match a.kind.as_str() {
                    "pre_poll" => AllianceKind::PrePoll,
                    "post_poll" => AllianceKind::PostPoll,
                    other => {
                        return Err(LoadError::Validation(format!(
                            "alliances[{ai}]: kind must be `pre_poll` or `post_poll`, \
                             got `{other}`"
                        )))
                    }
                };
                let members = a
                    .members
                    .iter()
                    .map(|m| party_index(&file.parties, m, &format!("alliances[{ai}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Alliance {
                    name: a.name.clone(),
                    members,
                    kind,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        scenario.alliances = Some(AllianceStructure { groups });
    }

    let violations = scenario.validate();
    if !violations.is_empty() {
        let list = violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(LoadError::Validation(format!("scenario invalid: {list}")));
    }

    if file.schedules.is_empty() {
        return Err(LoadError::Validation(
            "schedules: at least one named schedule".into(),
        ));
    }
    let mut schedules = Vec::new();
    for (name, entry) in &file.schedules {
        let schedule = build_schedule(entry, name, &election_names, &group_ranges, num_voters)?;
        let schedule_violations = scenario.validate_schedule(&schedule);
        if !schedule_violations.is_empty() {
            let list = schedule_violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ");
            return Err(LoadError::Validation(format!(
                "schedule `{name}` invalid: {list}"
            )));
        }
        schedules.push((name.clone(), schedule));
    }

    Ok(LoadedScenario {
        name: file
            .name
            .clone()
            .unwrap_or_else(|| fallback_name.to_string()),
        scenario,
        election_names,
        schedules,
        analysis: file.analysis.clone().unwrap_or_default(),
        group_ranges,
    })
}

fn parse_rule(entry: &ElectionEntry, li: usize) -> Result<WinRuleSpec, LoadError> {
    match entry.rule.as_str() {
        "fptp" => {
            if entry.seats.is_some() || entry.rounding.is_some() || entry.win.is_some() {
                return Err(LoadError::Validation(format!(
                    "elections[{li}]: fptp takes no seats/rounding/win fields"
                )));
            }
            Ok(WinRuleSpec::Fptp)
        }
        "pr" => {
            let seats = entry.seats.ok_or_else(|| {
                LoadError::Validation(format!("elections[{li}]: pr needs `seats`"))
            })?;
            let rounding = match entry.rounding.as_deref() {
                Some("dhondt") => RoundingMethod::HighestAverageDHondt,
                Some("hare") => RoundingMethod::LargestRemainderHare,
                Some(other) => {
                    return Err(LoadError::Validation(format!(
                        "elections[{li}]: rounding must be `dhondt` or `hare`, got `{other}`"
                    )))
                }
                None => {
                    return Err(LoadError::Validation(format!(
                        "elections[{li}]: pr needs `rounding`"
                    )))
                }
            };
            let win = match entry.win.as_deref() {
                Some("most_seats") => PrWinMode::MostSeats,
                Some("strict_majority") => PrWinMode::StrictMajority,
                Some(other) => {
                    return Err(LoadError::Validation(format!(
                        "elections[{li}]: win must be `most_seats` or `strict_majority`, \
                         got `{other}`"
                    )))
                }
                None => {
                    return Err(LoadError::Validation(format!(
                        "elections[{li}]: pr needs `win`"
                    )))
                }
            };
            Ok(WinRuleSpec::PartyListPr {
                seats,
                rounding,
                win,
            })
        }
        other => Err(LoadError::Validation(format!(
            "elections[{li}]: rule must be `fptp` or `pr`, got `{other}`"
        ))),
    }
}

fn blocks_from_names(
    blocks: &[Vec<String>],
    election_names: &[String],
    context: &str,
) -> Result<Vec<Vec<u32>>, LoadError> {
    blocks
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|name| {
                    election_names
                        .iter()
                        .position(|e| e == name)
                        .map(|i| i as u32)
                        .ok_or_else(|| {
                            LoadError::Validation(format!(
                                "{context}: unknown election `{name}`"
                            ))
                        })
                })
                .collect()
        })
        .collect()
}

fn build_schedule(
    entry: &ScheduleEntry,
    name: &str,
    election_names: &[String],
    group_ranges: &[(u32, u32)],
    num_voters: u32,
) -> Result<Schedule, LoadError> {
    let n = election_names.len() as u32;
    match (&entry.uniform, &entry.groups) {
        (Some(blocks), None) => {
            let raw = blocks_from_names(blocks, election_names, &format!("schedule `{name}`"))?;
            let partition = sweeplab_core::Partition::new(n, raw).map_err(|e| {
                LoadError::Validation(format!("schedule `{name}`: {e}"))
            })?;
            Ok(Schedule::uniform(partition, num_voters as usize))
        }
        (None, Some(per_group)) => {
            if per_group.len() != group_ranges.len() {
                return Err(LoadError::Validation(format!(
                    "schedule `{name}`: {} partitions for {} voter groups",
                    per_group.len(),
                    group_ranges.len()
                )));
            }
            let mut per_voter = vec![None; num_voters as usize];
            for (gi, blocks) in per_group.iter().enumerate() {
                let raw = blocks_from_names(
                    blocks,
                    election_names,
                    &format!("schedule `{name}` group {gi}"),
                )?;
                let partition = sweeplab_core::Partition::new(n, raw).map_err(|e| {
                    LoadError::Validation(format!("schedule `{name}` group {gi}: {e}"))
                })?;
                let (start, end) = group_ranges[gi];
                for v in start..end {
                    per_voter[v as usize] = Some(partition.clone());
                }
            }
            Ok(Schedule::staggered(
                per_voter.into_iter().map(|p| p.unwrap()).collect(),
            ))
        }
        _ => Err(LoadError::Validation(format!(
            "schedule `{name}`: exactly one of `uniform` or `groups` is required"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sweeplab_core::ratio::rat;

    const MICRO: &str = r#"
name = "micro"
parties = ["A", "B"]

[[voters]]
party = "A"
p = "1/2"

[[elections]]
name = "first"
rule = "fptp"

[[elections]]
name = "second"
rule = "fptp"

[schedules.simultaneous]
uniform = [["first", "second"]]

[schedules.separate]
uniform = [["first"], ["second"]]

[analysis]
method = "exact"
schedules = ["simultaneous", "separate"]
"#;

    #[test]
    fn loads_micro_scenario() {
        let loaded = load_str(MICRO, "fallback").unwrap();
        assert_eq!(loaded.name, "micro");
        assert_eq!(loaded.scenario.num_voters(), 1);
        assert_eq!(loaded.scenario.voters[0].turnout_prob, rat(1, 2));
        assert_eq!(loaded.schedules.len(), 2);
        let sim = loaded.schedule("simultaneous").unwrap();
        assert_eq!(sim.partition_for(0).num_blocks(), 1);
        assert_eq!(
            loaded.partition_label(sim.partition_for(0)),
            "{first,second}"
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MICRO.replace("[analysis]", "[analysis]\nbogus_key = 1");
        assert!(matches!(load_str(&text, "x"), Err(LoadError::Parse(_))));
        let top = format!("{MICRO}\nunknown_section = 3\n");
        assert!(matches!(load_str(&top, "x"), Err(LoadError::Parse(_))));
    }

    #[test]
    fn unknown_names_are_validation_errors() {
        let bad_party = MICRO.replace("party = \"A\"", "party = \"Z\"");
        assert!(matches!(
            load_str(&bad_party, "x"),
            Err(LoadError::Validation(_))
        ));
        let bad_election = MICRO.replace(
            "uniform = [[\"first\", \"second\"]]",
            "uniform = [[\"first\", \"third\"]]",
        );
        assert!(matches!(
            load_str(&bad_election, "x"),
            Err(LoadError::Validation(_))
        ));
    }

    #[test]
    fn cohorts_expand_in_file_order() {
        let text = r#"
parties = ["A", "B"]

[[voters]]
party = "A"
p = "0.25"
count = 3

[[voters]]
party = "B"
p = "1/3"
count = 2

[[elections]]
name = "only"
rule = "fptp"

[schedules.base]
uniform = [["only"]]
"#;
        let loaded = load_str(text, "cohorts").unwrap();
        assert_eq!(loaded.scenario.num_voters(), 5);
        assert_eq!(loaded.group_ranges, vec![(0, 3), (3, 5)]);
        assert_eq!(loaded.scenario.voters[2].preferred_party, PartyId(0));
        assert_eq!(loaded.scenario.voters[3].preferred_party, PartyId(1));
        assert_eq!(loaded.scenario.voters[0].turnout_prob, rat(1, 4));
    }

    #[test]
    fn per_group_schedules_and_eligibility() {
        let text = r#"
parties = ["A", "B"]

[[voters]]
party = "A"
p = "1/2"
count = 2

[[voters]]
party = "B"
p = "1/2"
count = 2

[[elections]]
name = "natl"
rule = "fptp"

[[elections]]
name = "state"
rule = "fptp"
eligible_groups = [1]

[schedules.phased]
groups = [
    [["natl", "state"]],
    [["natl"], ["state"]],
]
"#;
        let loaded = load_str(text, "phased").unwrap();
        let sch = loaded.schedule("phased").unwrap();
        assert_eq!(sch.partition_for(0).num_blocks(), 1);
        assert_eq!(sch.partition_for(2).num_blocks(), 2);
        let elig = loaded.scenario.elections[1].eligibility.as_ref().unwrap();
        assert_eq!(elig.iter().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn pr_rules_parse_and_misconfigurations_fail() {
        let text = r#"
parties = ["A", "B"]

[[voters]]
party = "A"
p = "1/2"

[[elections]]
name = "assembly"
rule = "pr"
seats = 5
rounding = "hare"
win = "strict_majority"

[schedules.base]
uniform = [["assembly"]]
"#;
        let loaded = load_str(text, "pr").unwrap();
        assert_eq!(
            loaded.scenario.elections[0].rule,
            WinRuleSpec::PartyListPr {
                seats: 5,
                rounding: RoundingMethod::LargestRemainderHare,
                win: PrWinMode::StrictMajority,
            }
        );
        let missing = text.replace("rounding = \"hare\"\n", "");
        assert!(matches!(
            load_str(&missing, "x"),
            Err(LoadError::Validation(_))
        ));
    }

    #[test]
    fn roundtrip_parse_serialize_parse() {
        let file = parse_file(MICRO).unwrap();
        let text = toml::to_string(&file).unwrap();
        let again = parse_file(&text).unwrap();
        assert_eq!(file, again);
    }
}
