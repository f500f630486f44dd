//! Shared vocabulary: settings, outcomes, space-time labels and trial records.
//!
//! Every recorded outcome carries its own [`SpaceTimeLabel`]. A label is bound
//! to exactly one setting; reusing a label for two settings is reported by
//! [`validate_dataset`] as a label collision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

const UNIT_TOL: f64 = 1e-12;

/// A measurement setting: symbolic label plus analyzer direction.
///
/// Two settings are equal when their labels are equal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Setting {
    label: String,
    direction: [f64; 3],
}

impl Setting {
    pub fn new(label: impl Into<String>, direction: [f64; 3]) -> Result<Self, ConfigError> {
        let label = label.into();
        let norm = direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL || !norm.is_finite() {
            return Err(ConfigError::NonUnitDirection { label, norm });
        }
        Ok(Setting { label, direction })
    }

    /// Setting in the x-y plane at `angle` radians from the x axis.
    pub fn planar(label: impl Into<String>, angle: f64) -> Self {
        Setting {
            label: label.into(),
            direction: [angle.cos(), angle.sin(), 0.0],
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn direction(&self) -> [f64; 3] {
        self.direction
    }

    /// Azimuthal angle of the direction in radians, in (-π, π].
    pub fn angle(&self) -> f64 {
        self.direction[1].atan2(self.direction[0])
    }

    pub fn dot(&self, other: &Setting) -> f64 {
        self.direction
            .iter()
            .zip(other.direction.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn is_unit(&self) -> bool {
        let norm = self.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
        (norm - 1.0).abs() <= UNIT_TOL
    }
}

impl PartialEq for Setting {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

impl Eq for Setting {}

/// Check that setting labels are unique and directions are unit vectors.
pub fn check_settings(settings: &[Setting]) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for s in settings {
        if !s.is_unit() {
            let norm = s.direction.iter().map(|c| c * c).sum::<f64>().sqrt();
            return Err(ConfigError::NonUnitDirection {
                label: s.label.clone(),
                norm,
            });
        }
        if !seen.insert(s.label.as_str()) {
            return Err(ConfigError::DuplicateSetting(s.label.clone()));
        }
    }
    Ok(())
}

/// A two-valued measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Sign with the tie `sign(0) = +1`.
    pub fn from_sign(x: f64) -> Self {
        if x >= 0.0 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl TryFrom<i64> for Outcome {
    type Error = i64;

    fn try_from(v: i64) -> Result<Self, i64> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(other),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Station {
    A,
    B,
}

impl fmt::Display for Station {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Station::A => f.write_str("A"),
            Station::B => f.write_str("B"),
        }
    }
}

/// Discrete event coordinate attached to a recorded outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceTimeLabel {
    pub station: Station,
    pub trial_index: u64,
    /// Simulated seconds.
    pub time_tag: f64,
}

impl SpaceTimeLabel {
    pub fn key(&self) -> (Station, u64) {
        (self.station, self.trial_index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationEvent {
    pub label: SpaceTimeLabel,
    pub setting: Arc<Setting>,
    pub outcome: Outcome,
    pub time_tag: f64,
}

impl StationEvent {
    pub fn new(label: SpaceTimeLabel, setting: Arc<Setting>, outcome: Outcome) -> Self {
        StationEvent {
            time_tag: label.time_tag,
            label,
            setting,
            outcome,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub event_a: StationEvent,
    pub event_b: StationEvent,
    /// Survived coincidence filtering.
    pub matched: bool,
}

impl TrialRecord {
    pub fn setting_pair(&self) -> (&str, &str) {
        (self.event_a.setting.label(), self.event_b.setting.label())
    }
}

/// Run metadata, persisted as the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub seed: Option<u64>,
    pub model: String,
    /// Coincidence window in seconds; `None` means no filtering.
    pub window: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub trials: Vec<TrialRecord>,
    pub settings: Vec<Arc<Setting>>,
    pub metadata: Metadata,
}

impl Dataset {
    pub fn setting(&self, label: &str) -> Option<&Arc<Setting>> {
        self.settings.iter().find(|s| s.label() == label)
    }

    pub fn matched(&self) -> impl Iterator<Item = &TrialRecord> {
        self.trials.iter().filter(|t| t.matched)
    }

    pub fn matched_count(&self) -> usize {
        self.matched().count()
    }

    /// Field-by-field comparison with time tags compared at `tol`.
    pub fn approx_eq(&self, other: &Dataset, tol: f64) -> bool {
        fn event_eq(x: &StationEvent, y: &StationEvent, tol: f64) -> bool {
            x.label.station == y.label.station
                && x.label.trial_index == y.label.trial_index
                && (x.label.time_tag - y.label.time_tag).abs() <= tol
                && (x.time_tag - y.time_tag).abs() <= tol
                && x.outcome == y.outcome
                && x.setting.label() == y.setting.label()
                && x.setting
                    .direction()
                    .iter()
                    .zip(y.setting.direction().iter())
                    .all(|(p, q)| (p - q).abs() <= tol)
        }
        self.metadata == other.metadata
            && self.settings.len() == other.settings.len()
            && self
                .settings
                .iter()
                .zip(other.settings.iter())
                .all(|(s, t)| s.label() == t.label())
            && self.trials.len() == other.trials.len()
            && self.trials.iter().zip(other.trials.iter()).all(|(x, y)| {
                x.trial_index == y.trial_index
                    && x.matched == y.matched
                    && event_eq(&x.event_a, &y.event_a, tol)
                    && event_eq(&x.event_b, &y.event_b, tol)
            })
    }
}

/// A single invariant violation found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// One label bound to two or more settings.
    LabelCollision {
        station: Station,
        label_index: u64,
        settings: Vec<String>,
        trials: Vec<u64>,
    },
    /// One label used twice with the same setting.
    DuplicateLabel {
        station: Station,
        label_index: u64,
        trials: Vec<u64>,
    },
    StationMismatch {
        trial_index: u64,
        expected: Station,
        found: Station,
    },
    TrialIndexMismatch {
        trial_index: u64,
        station: Station,
        label_index: u64,
    },
    TimeTagMismatch {
        trial_index: u64,
        station: Station,
    },
    NegativeTimeTag {
        trial_index: u64,
        station: Station,
    },
    NotIncreasing {
        trial_index: u64,
        previous: u64,
    },
    UnknownSetting {
        trial_index: u64,
        setting: String,
    },
    DuplicateSetting {
        setting: String,
    },
    NonUnitSetting {
        setting: String,
    },
}

impl Violation {
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::LabelCollision { .. } => "label collision",
            Violation::DuplicateLabel { .. } => "duplicate label",
            Violation::StationMismatch { .. } => "station mismatch",
            Violation::TrialIndexMismatch { .. } => "trial index mismatch",
            Violation::TimeTagMismatch { .. } => "time tag mismatch",
            Violation::NegativeTimeTag { .. } => "negative time tag",
            Violation::NotIncreasing { .. } => "trial order",
            Violation::UnknownSetting { .. } => "unknown setting",
            Violation::DuplicateSetting { .. } => "duplicate setting",
            Violation::NonUnitSetting { .. } => "non-unit setting",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LabelCollision {
                station,
                label_index,
                settings,
                trials,
            } => write!(
                f,
                "label collision: ({station},{label_index}) bound to settings {settings:?} in trials {trials:?}"
            ),
            Violation::DuplicateLabel {
                station,
                label_index,
                trials,
            } => write!(
                f,
                "duplicate label: ({station},{label_index}) used by trials {trials:?}"
            ),
            Violation::StationMismatch {
                trial_index,
                expected,
                found,
            } => write!(
                f,
                "station mismatch in trial {trial_index}: expected {expected}, found {found}"
            ),
            Violation::TrialIndexMismatch {
                trial_index,
                station,
                label_index,
            } => write!(
                f,
                "trial index mismatch in trial {trial_index}: station {station} label index {label_index}"
            ),
            Violation::TimeTagMismatch {
                trial_index,
                station,
            } => write!(
                f,
                "time tag mismatch in trial {trial_index}, station {station}"
            ),
            Violation::NegativeTimeTag {
                trial_index,
                station,
            } => write!(
                f,
                "negative time tag in trial {trial_index}, station {station}"
            ),
            Violation::NotIncreasing {
                trial_index,
                previous,
            } => write!(
                f,
                "trial order: trial {trial_index} follows trial {previous}"
            ),
            Violation::UnknownSetting {
                trial_index,
                setting,
            } => write!(f, "unknown setting `{setting}` in trial {trial_index}"),
            Violation::DuplicateSetting { setting } => {
                write!(f, "duplicate setting label `{setting}`")
            }
            Violation::NonUnitSetting { setting } => {
                write!(f, "setting `{setting}` is not a unit vector")
            }
        }
    }
}

/// Check every dataset invariant; an empty report means the data is well formed.
///
/// The report is sorted, so permuting the trials changes it only through
/// [`Violation::NotIncreasing`] entries.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut report = BTreeSet::new();

    let mut seen_settings = BTreeSet::new();
    for s in &d.settings {
        if !seen_settings.insert(s.label()) {
            report.insert(Violation::DuplicateSetting {
                setting: s.label().to_string(),
            });
        }
        if !s.is_unit() {
            report.insert(Violation::NonUnitSetting {
                setting: s.label().to_string(),
            });
        }
    }

    // label -> (settings, trials)
    let mut uses: BTreeMap<(Station, u64), (BTreeSet<String>, Vec<u64>)> = BTreeMap::new();
    for t in &d.trials {
        for (event, expected) in [(&t.event_a, Station::A), (&t.event_b, Station::B)] {
            if event.label.station == expected {
                let entry = uses.entry(event.label.key()).or_default();
                entry.0.insert(event.setting.label().to_string());
                entry.1.push(t.trial_index);
            } else {
                // the wrong station also explains any clash with the other event
                report.insert(Violation::StationMismatch {
                    trial_index: t.trial_index,
                    expected,
                    found: event.label.station,
                });
            }
            if event.time_tag < 0.0 || event.label.time_tag < 0.0 {
                report.insert(Violation::NegativeTimeTag {
                    trial_index: t.trial_index,
                    station: expected,
                });
            }
            if event.time_tag.to_bits() != event.label.time_tag.to_bits() {
                report.insert(Violation::TimeTagMismatch {
                    trial_index: t.trial_index,
                    station: expected,
                });
            }
            if !seen_settings.contains(event.setting.label()) {
                report.insert(Violation::UnknownSetting {
                    trial_index: t.trial_index,
                    setting: event.setting.label().to_string(),
                });
            }
        }
    }

    let mut reused = BTreeSet::new();
    for (key, (settings, mut trials)) in uses {
        if trials.len() < 2 {
            continue;
        }
        reused.insert(key);
        trials.sort_unstable();
        trials.dedup();
        if settings.len() > 1 {
            report.insert(Violation::LabelCollision {
                station: key.0,
                label_index: key.1,
                settings: settings.into_iter().collect(),
                trials,
            });
        } else {
            report.insert(Violation::DuplicateLabel {
                station: key.0,
                label_index: key.1,
                trials,
            });
        }
    }

    for t in &d.trials {
        for event in [&t.event_a, &t.event_b] {
            // A reused label already explains the mismatch.
            if event.label.trial_index != t.trial_index && !reused.contains(&event.label.key()) {
                report.insert(Violation::TrialIndexMismatch {
                    trial_index: t.trial_index,
                    station: event.label.station,
                    label_index: event.label.trial_index,
                });
            }
        }
    }

    for w in d.trials.windows(2) {
        if w[1].trial_index <= w[0].trial_index {
            report.insert(Violation::NotIncreasing {
                trial_index: w[1].trial_index,
                previous: w[0].trial_index,
            });
        }
    }

    report.into_iter().collect()
}
