//! Discrete space-time vector process: random setting-pair schedule, per-trial
//! sampling, labeling and coincidence selection.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::ConfigError;
use crate::model::{
    check_settings, Dataset, Metadata, Setting, SpaceTimeLabel, Station, StationEvent, TrialRecord,
};
use crate::models::ModelConfig;
use crate::rng::trial_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Each trial draws a pair uniformly from the allowed set.
    Uniform,
    /// Trials walk the user list in order, wrapping around.
    Explicit,
}

/// Setting pairs (station A label, station B label) per trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pairs: Vec<(String, String)>,
    mode: ScheduleMode,
}

impl Schedule {
    pub fn uniform<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        Schedule {
            pairs: pairs
                .into_iter()
                .map(|(a, b)| (a.into(), b.into()))
                .collect(),
            mode: ScheduleMode::Uniform,
        }
    }

    pub fn explicit<S: Into<String>>(pairs: impl IntoIterator<Item = (S, S)>) -> Self {
        Schedule {
            mode: ScheduleMode::Explicit,
            ..Self::uniform(pairs)
        }
    }

    /// Uniform over (s_i, s_j) for i < j in list order: (a,b), (a,c), (b,c) for three settings.
    pub fn all_pairs(settings: &[Setting]) -> Self {
        let mut pairs = Vec::new();
        for (i, x) in settings.iter().enumerate() {
            for y in &settings[i + 1..] {
                pairs.push((x.label().to_string(), y.label().to_string()));
            }
        }
        Schedule::uniform(pairs)
    }

    pub fn single(a: &str, b: &str) -> Self {
        Schedule::uniform([(a, b)])
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn mode(&self) -> ScheduleMode {
        self.mode
    }

    fn pick<R: Rng + ?Sized>(&self, trial_index: u64, rng: &mut R) -> usize {
        match self.mode {
            ScheduleMode::Uniform => {
                if self.pairs.len() == 1 {
                    0
                } else {
                    rng.random_range(0..self.pairs.len())
                }
            }
            ScheduleMode::Explicit => (trial_index % self.pairs.len() as u64) as usize,
        }
    }
}

/// Maximum |t_a − t_b| for two events to count as one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoincidenceWindow {
    Finite(f64),
    Infinite,
}

impl CoincidenceWindow {
    pub fn new(width: f64) -> Result<Self, ConfigError> {
        if width.is_infinite() && width > 0.0 {
            Ok(CoincidenceWindow::Infinite)
        } else if width > 0.0 {
            Ok(CoincidenceWindow::Finite(width))
        } else {
            Err(ConfigError::InvalidWindow(format!(
                "window must be positive, got {width}"
            )))
        }
    }

    pub fn contains(&self, dt: f64) -> bool {
        match *self {
            CoincidenceWindow::Finite(w) => dt.abs() < w,
            CoincidenceWindow::Infinite => true,
        }
    }

    pub fn width(&self) -> Option<f64> {
        match *self {
            CoincidenceWindow::Finite(w) => Some(w),
            CoincidenceWindow::Infinite => None,
        }
    }
}

/// Generate `n` trials. Every trial is marked matched (no filtering yet).
///
/// Trial `i` is emitted at `i · base_interval`; each station's time tag adds its
/// detection delay. The dataset depends only on the arguments, not on the
/// size of the rayon pool.
pub fn run_experiment(
    model: &ModelConfig,
    settings: &[Setting],
    schedule: &Schedule,
    n: u64,
    seed: u64,
) -> Result<Dataset, ConfigError> {
    if n == 0 {
        return Err(ConfigError::NoTrials);
    }
    model.validate()?;
    check_settings(settings)?;
    if schedule.pairs.is_empty() {
        return Err(ConfigError::InvalidSchedule("no setting pairs".into()));
    }
    let shared: Vec<Arc<Setting>> = settings.iter().cloned().map(Arc::new).collect();
    let lookup = |label: &str| {
        shared
            .iter()
            .find(|s| s.label() == label)
            .cloned()
            .ok_or_else(|| ConfigError::UnresolvedSetting(label.to_string()))
    };
    let resolved: Vec<(Arc<Setting>, Arc<Setting>)> = schedule
        .pairs
        .iter()
        .map(|(a, b)| Ok((lookup(a)?, lookup(b)?)))
        .collect::<Result<_, ConfigError>>()?;

    let trials = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(seed, i);
            let (sa, sb) = &resolved[schedule.pick(i, &mut rng)];
            let sample = model.sample(sa, sb, &mut rng)?;
            let emitted = i as f64 * model.base_interval;
            let label = |station, delay| SpaceTimeLabel {
                station,
                trial_index: i,
                time_tag: emitted + delay,
            };
            Ok(TrialRecord {
                trial_index: i,
                event_a: StationEvent::new(
                    label(Station::A, sample.delay_a),
                    sa.clone(),
                    sample.outcome_a,
                ),
                event_b: StationEvent::new(
                    label(Station::B, sample.delay_b),
                    sb.clone(),
                    sample.outcome_b,
                ),
                matched: true,
            })
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;

    Ok(Dataset {
        trials,
        settings: shared,
        metadata: Metadata {
            seed: Some(seed),
            model: model.kind.name().to_string(),
            window: None,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairingMode {
    /// Pair by time proximity only; cross-trial pairs allowed.
    #[default]
    Greedy,
    /// Only a trial's own two events may pair.
    SameTrial,
}

/// Two events paired by the matcher, as indices into `Dataset::trials`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Coincidence {
    pub a: usize,
    pub b: usize,
}

impl Coincidence {
    pub fn is_same_trial(&self) -> bool {
        self.a == self.b
    }
}

/// Time-sorted station streams, reusable across many windows.
#[derive(Debug, Clone)]
pub struct CoincidenceMatcher {
    stream_a: Vec<(f64, usize)>,
    stream_b: Vec<(f64, usize)>,
}

impl CoincidenceMatcher {
    pub fn new(d: &Dataset) -> Self {
        let sorted = |pick: fn(&TrialRecord) -> f64| {
            let mut v: Vec<(f64, usize)> = d
                .trials
                .iter()
                .enumerate()
                .map(|(i, t)| (pick(t), i))
                .collect();
            v.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            v
        };
        CoincidenceMatcher {
            stream_a: sorted(|t| t.event_a.time_tag),
            stream_b: sorted(|t| t.event_b.time_tag),
        }
    }

    /// Two-pointer greedy: the earlier head event pairs with the other head if
    /// within the window, otherwise it is dropped.
    pub fn pairs(&self, d: &Dataset, w: CoincidenceWindow, mode: PairingMode) -> Vec<Coincidence> {
        match mode {
            PairingMode::SameTrial => d
                .trials
                .iter()
                .enumerate()
                .filter(|(_, t)| w.contains(t.event_a.time_tag - t.event_b.time_tag))
                .map(|(i, _)| Coincidence { a: i, b: i })
                .collect(),
            PairingMode::Greedy => {
                let (mut i, mut j) = (0, 0);
                let mut out = Vec::new();
                while i < self.stream_a.len() && j < self.stream_b.len() {
                    let (ta, ia) = self.stream_a[i];
                    let (tb, ib) = self.stream_b[j];
                    if w.contains(ta - tb) {
                        out.push(Coincidence { a: ia, b: ib });
                        i += 1;
                        j += 1;
                    } else if ta <= tb {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
                out
            }
        }
    }
}

/// Result of coincidence selection.
#[derive(Debug, Clone)]
pub struct Matched {
    /// Input dataset with `matched` set for trials whose own two events paired.
    pub dataset: Dataset,
    /// All pairs, including cross-trial ones.
    pub pairs: Vec<Coincidence>,
}

impl Matched {
    pub fn cross_trial_count(&self) -> usize {
        self.pairs.iter().filter(|p| !p.is_same_trial()).count()
    }
}

pub fn match_coincidences(d: &Dataset, w: CoincidenceWindow, mode: PairingMode) -> Matched {
    let matcher = CoincidenceMatcher::new(d);
    let pairs = matcher.pairs(d, w, mode);
    let dataset = apply_pairs(d, &pairs, w);
    Matched { dataset, pairs }
}

/// Copy of `d` whose matched flags reflect `pairs`.
pub fn apply_pairs(d: &Dataset, pairs: &[Coincidence], w: CoincidenceWindow) -> Dataset {
    let same: BTreeSet<usize> = pairs
        .iter()
        .filter(|p| p.is_same_trial())
        .map(|p| p.a)
        .collect();
    let mut out = d.clone();
    for (i, t) in out.trials.iter_mut().enumerate() {
        t.matched = same.contains(&i);
    }
    out.metadata.window = w.width();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{tests::event, validate_dataset, Outcome};
    use crate::models::ModelConfig;

    fn two_stream_dataset(ta: &[f64], tb: &[f64]) -> Dataset {
        let s = Arc::new(Setting::planar("a", 0.0));
        let trials = ta
            .iter()
            .zip(tb)
            .enumerate()
            .map(|(i, (&x, &y))| TrialRecord {
                trial_index: i as u64,
                event_a: event(Station::A, i as u64, x, &s, Outcome::Plus),
                event_b: event(Station::B, i as u64, y, &s, Outcome::Minus),
                matched: true,
            })
            .collect();
        Dataset {
            trials,
            settings: vec![s],
            metadata: Metadata {
                seed: None,
                model: "test".into(),
                window: None,
            },
        }
    }

    #[test]
    fn single_trial_labels() {
        let settings = [Setting::planar("a", 0.0), Setting::planar("b", 1.0)];
        let d = run_experiment(
            &ModelConfig::deterministic(),
            &settings,
            &Schedule::single("a", "b"),
            1,
            42,
        )
        .unwrap();
        assert_eq!(d.trials.len(), 1);
        let t = &d.trials[0];
        assert_eq!(t.event_a.label.key(), (Station::A, 0));
        assert_eq!(t.event_b.label.key(), (Station::B, 0));
        assert!(validate_dataset(&d).is_empty());
    }

    #[test]
    fn unresolved_label_is_config_error() {
        let settings = [Setting::planar("a", 0.0)];
        let err = run_experiment(
            &ModelConfig::quantum(),
            &settings,
            &Schedule::single("a", "q"),
            5,
            1,
        )
        .unwrap_err();
        assert_eq!(err, ConfigError::UnresolvedSetting("q".into()));
        assert_eq!(
            run_experiment(
                &ModelConfig::quantum(),
                &settings,
                &Schedule::single("a", "a"),
                0,
                1
            )
            .unwrap_err(),
            ConfigError::NoTrials
        );
    }

    #[test]
    fn explicit_schedule_cycles() {
        let settings = [
            Setting::planar("a", 0.0),
            Setting::planar("b", 1.0),
            Setting::planar("c", 2.0),
        ];
        let sched = Schedule::explicit([("a", "b"), ("b", "c")]);
        let d = run_experiment(&ModelConfig::quantum(), &settings, &sched, 5, 3).unwrap();
        let got: Vec<_> = d.trials.iter().map(|t| t.setting_pair()).collect();
        assert_eq!(
            got,
            vec![("a", "b"), ("b", "c"), ("a", "b"), ("b", "c"), ("a", "b")]
        );
    }

    #[test]
    fn greedy_example_from_construction() {
        let d = two_stream_dataset(&[0.0, 10.0], &[0.1, 20.0]);
        let m = match_coincidences(&d, CoincidenceWindow::Finite(0.5), PairingMode::Greedy);
        assert_eq!(m.pairs, vec![Coincidence { a: 0, b: 0 }]);
        assert!(m.dataset.trials[0].matched);
        assert!(!m.dataset.trials[1].matched);
        assert_eq!(m.dataset.metadata.window, Some(0.5));
    }

    #[test]
    fn infinite_window_matches_everything() {
        let d = two_stream_dataset(&[0.0, 10.0, 10.5], &[0.1, 20.0, 3.0]);
        let m = match_coincidences(&d, CoincidenceWindow::Infinite, PairingMode::Greedy);
        assert_eq!(m.pairs.len(), 3);
        let strict = match_coincidences(&d, CoincidenceWindow::Infinite, PairingMode::SameTrial);
        assert_eq!(strict.dataset.matched_count(), 3);
    }

    #[test]
    fn cross_trial_pairs_when_delays_reorder() {
        // B of trial 0 arrives after A of trial 1.
        let d = two_stream_dataset(&[0.0, 1.0], &[1.05, 1.1]);
        let m = match_coincidences(&d, CoincidenceWindow::Finite(0.2), PairingMode::Greedy);
        assert_eq!(m.pairs, vec![Coincidence { a: 1, b: 0 }]);
        assert_eq!(m.cross_trial_count(), 1);
        assert_eq!(m.dataset.matched_count(), 0);
        let s = match_coincidences(&d, CoincidenceWindow::Finite(0.2), PairingMode::SameTrial);
        assert_eq!(s.pairs, vec![Coincidence { a: 1, b: 1 }]);
    }

    #[test]
    fn window_constructor() {
        assert!(CoincidenceWindow::new(0.0).is_err());
        assert!(CoincidenceWindow::new(-1.0).is_err());
        assert!(CoincidenceWindow::new(f64::NAN).is_err());
        assert_eq!(
            CoincidenceWindow::new(f64::INFINITY).unwrap(),
            CoincidenceWindow::Infinite
        );
        assert!(!CoincidenceWindow::Finite(0.5).contains(0.5));
    }
}
