//! Correlation estimates with normal-approximation errors, and the
//! coincidence-window scan.

use std::collections::BTreeMap;
use std::io::Write;
use std::str::FromStr;

use log::warn;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{ConfigError, StatsError};
use crate::model::{Dataset, Outcome, Setting};
use crate::models::ModelConfig;
use crate::rng::aux_stream;
use crate::scalar::Real;
use crate::simulator::{
    run_experiment, Coincidence, CoincidenceMatcher, CoincidenceWindow, PairingMode, Schedule,
};

/// Below this many pairs the normal approximation is flagged.
pub const SMALL_SAMPLE: u64 = 100;

/// Joint outcome counts for one setting pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl PairCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        PairCounts {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
        }
    }

    pub fn add(&mut self, a: Outcome, b: Outcome) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.n_pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.n_pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.n_mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.n_mm += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }

    fn merge(self, o: PairCounts) -> PairCounts {
        PairCounts::new(
            self.n_pp + o.n_pp,
            self.n_pm + o.n_pm,
            self.n_mp + o.n_mp,
            self.n_mm + o.n_mm,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate<F> {
    pub e: F,
    pub stderr: F,
    pub n: u64,
}

/// E = (n_pp + n_mm − n_pm − n_mp)/N, stderr = sqrt((1 − E²)/N).
pub fn estimate_correlation<F: Real>(
    counts: &PairCounts,
) -> Result<CorrelationEstimate<F>, StatsError> {
    let n = counts.total();
    if n == 0 {
        return Err(StatsError::NoMatchedTrials);
    }
    if n < SMALL_SAMPLE {
        warn!("only {n} matched pairs; normal-approximation errors are unreliable");
    }
    let nf = F::lit(n as f64);
    let agree = F::lit((counts.n_pp + counts.n_mm) as f64);
    let disagree = F::lit((counts.n_pm + counts.n_mp) as f64);
    let e = (agree - disagree) / nf;
    let stderr = ((F::one() - e * e).max(F::zero()) / nf).sqrt();
    Ok(CorrelationEstimate { e, stderr, n })
}

/// Counts per (setting at A, setting at B), in one pass over the data.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    counts: BTreeMap<(String, String), PairCounts>,
}

impl CountTable {
    /// Trials flagged as matched.
    pub fn from_matched(d: &Dataset) -> Self {
        let mut t = CountTable::default();
        for r in d.matched() {
            t.record(
                r.event_a.setting.label(),
                r.event_b.setting.label(),
                r.event_a.outcome,
                r.event_b.outcome,
            );
        }
        t
    }

    /// Explicit coincidences, including cross-trial ones: the station-A event
    /// of trial `p.a` with the station-B event of trial `p.b`.
    pub fn from_pairs(d: &Dataset, pairs: &[Coincidence]) -> Self {
        let mut t = CountTable::default();
        for p in pairs {
            let (ea, eb) = (&d.trials[p.a].event_a, &d.trials[p.b].event_b);
            t.record(
                ea.setting.label(),
                eb.setting.label(),
                ea.outcome,
                eb.outcome,
            );
        }
        t
    }

    fn record(&mut self, a: &str, b: &str, x: Outcome, y: Outcome) {
        if let Some(c) = self.counts.get_mut(&(a.to_owned(), b.to_owned())) {
            c.add(x, y);
        } else {
            let mut c = PairCounts::default();
            c.add(x, y);
            self.counts.insert((a.to_owned(), b.to_owned()), c);
        }
    }

    /// Counts for A at `a`, B at `b`; with `pool_reversed`, trials with A at `b`
    /// and B at `a` are added (the singlet statistics are symmetric in the pair).
    pub fn get(&self, a: &str, b: &str, pool_reversed: bool) -> PairCounts {
        let key = |x: &str, y: &str| (x.to_owned(), y.to_owned());
        let direct = self.counts.get(&key(a, b)).copied().unwrap_or_default();
        if pool_reversed && a != b {
            direct.merge(self.counts.get(&key(b, a)).copied().unwrap_or_default())
        } else {
            direct
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().map(PairCounts::total).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &PairCounts)> {
        self.counts.iter()
    }

    pub fn estimate(
        &self,
        a: &str,
        b: &str,
        pool_reversed: bool,
    ) -> Result<CorrelationEstimate<f64>, StatsError> {
        estimate_correlation(&self.get(a, b, pool_reversed))
            .map_err(|_| StatsError::MissingPair(a.to_owned(), b.to_owned()))
    }
}

/// E(a,b) + E(a,c) + E(b,c) over three settings, each pair pooled over both orientations.
#[derive(Debug, Clone, PartialEq)]
pub struct BellSum {
    pub labels: [String; 3],
    /// Estimates for (a,b), (a,c), (b,c).
    pub terms: [CorrelationEstimate<f64>; 3],
    pub sum: f64,
    pub stderr: f64,
}

impl BellSum {
    pub fn from_table(table: &CountTable, labels: [&str; 3]) -> Result<Self, StatsError> {
        let [a, b, c] = labels;
        let terms = [
            table.estimate(a, b, true)?,
            table.estimate(a, c, true)?,
            table.estimate(b, c, true)?,
        ];
        let sum = terms.iter().map(|t| t.e).sum();
        let stderr = terms
            .iter()
            .map(|t| t.stderr * t.stderr)
            .sum::<f64>()
            .sqrt();
        Ok(BellSum {
            labels: labels.map(str::to_owned),
            terms,
            sum,
            stderr,
        })
    }

    /// Number of standard errors by which the sum exceeds +1 (negative when below).
    pub fn excess_sigma(&self) -> f64 {
        (self.sum - 1.0) / self.stderr
    }
}

pub fn bell_sum(d: &Dataset, labels: [&str; 3]) -> Result<BellSum, StatsError> {
    BellSum::from_table(&CountTable::from_matched(d), labels)
}

/// Resampling estimate of the standard error of E for the given counts.
pub fn bootstrap_stderr(counts: &PairCounts, resamples: usize, seed: u64) -> f64 {
    let n = counts.total();
    if n == 0 || resamples < 2 {
        return f64::NAN;
    }
    let agree = counts.n_pp + counts.n_mm;
    let mut rng = aux_stream(seed, 0xB007);
    let estimates: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut s: i64 = 0;
            for _ in 0..n {
                s += if rng.random_range(0..n) < agree {
                    1
                } else {
                    -1
                };
            }
            s as f64 / n as f64
        })
        .collect();
    let m = estimates.iter().sum::<f64>() / resamples as f64;
    let var = estimates.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (resamples - 1) as f64;
    var.sqrt()
}

/// Parsed `--windows` grid, always sorted from widest to narrowest.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGrid(pub Vec<CoincidenceWindow>);

impl FromStr for WindowGrid {
    type Err = ConfigError;

    /// A comma list of widths (`inf` allowed) and ranges: `start:stop:logN`
    /// (N points per decade) or `start:stop:linN` (N points in total).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |m: &str| ConfigError::InvalidWindow(format!("`{s}`: {m}"));
        let num = |x: &str| -> Result<f64, ConfigError> {
            let x = x.trim();
            if x.eq_ignore_ascii_case("inf") {
                return Ok(f64::INFINITY);
            }
            x.parse::<f64>().map_err(|_| bad("not a number"))
        };
        let range = |part: &str| -> Result<Vec<f64>, ConfigError> {
            let [lo, hi, spec] = part.split(':').collect::<Vec<_>>()[..] else {
                return Err(bad("ranges are start:stop:logN or start:stop:linN"));
            };
            let (lo, hi) = (num(lo)?, num(hi)?);
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(bad("need 0 < start < stop < inf"));
            }
            let spec = spec.trim();
            if let Some(per) = spec.strip_prefix("log") {
                let per: usize = per.parse().map_err(|_| bad("bad point count"))?;
                if per == 0 {
                    return Err(bad("bad point count"));
                }
                let decades = (hi / lo).log10();
                let steps = ((decades * per as f64).round() as usize).max(1);
                Ok((0..=steps)
                    .map(|i| match i {
                        0 => lo,
                        i if i == steps => hi,
                        i => lo * 10f64.powf(decades * i as f64 / steps as f64),
                    })
                    .collect())
            } else if let Some(count) = spec.strip_prefix("lin") {
                let count: usize = count.parse().map_err(|_| bad("bad point count"))?;
                if count < 2 {
                    return Err(bad("linear grids need at least 2 points"));
                }
                Ok((0..count)
                    .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                    .collect())
            } else {
                Err(bad("expected logN or linN"))
            }
        };
        let mut widths = Vec::new();
        for part in s.split(',') {
            if part.contains(':') {
                widths.extend(range(part)?);
            } else {
                widths.push(num(part)?);
            }
        }
        widths.sort_by(|a, b| b.partial_cmp(a).expect("no NaN after parsing"));
        widths.dedup();
        if widths.is_empty() {
            return Err(bad("empty grid"));
        }
        widths
            .into_iter()
            .map(CoincidenceWindow::new)
            .collect::<Result<_, _>>()
            .map(WindowGrid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub window: CoincidenceWindow,
    pub delta: f64,
    pub n_matched: u64,
    /// NaN when nothing was matched.
    pub e: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Generate once and re-filter for every window (default), rather than
    /// regenerating per window.
    pub reuse: bool,
    pub pairing: PairingMode,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            reuse: true,
            pairing: PairingMode::Greedy,
        }
    }
}

fn per_window_seed(seed: u64, index: usize) -> u64 {
    aux_stream(seed, index as u64).random()
}

/// For every window: filter, then estimate E for settings (0, delta).
pub fn window_scan(
    model: &ModelConfig,
    delta: f64,
    windows: &WindowGrid,
    n: u64,
    seed: u64,
    opts: ScanOptions,
) -> Result<Vec<ScanRow>, ConfigError> {
    let settings = [Setting::planar("a", 0.0), Setting::planar("b", delta)];
    let schedule = Schedule::single("a", "b");
    let row = |w: CoincidenceWindow, d: &Dataset, matcher: &CoincidenceMatcher| {
        let pairs = matcher.pairs(d, w, opts.pairing);
        let counts = CountTable::from_pairs(d, &pairs).get("a", "b", false);
        let (e, stderr) = match estimate_correlation::<f64>(&counts) {
            Ok(est) => (est.e, est.stderr),
            Err(_) => (f64::NAN, f64::NAN),
        };
        ScanRow {
            window: w,
            delta,
            n_matched: counts.total(),
            e,
            stderr,
        }
    };
    if opts.reuse {
        let d = run_experiment(model, &settings, &schedule, n, seed)?;
        let matcher = CoincidenceMatcher::new(&d);
        Ok(windows
            .0
            .par_iter()
            .map(|&w| row(w, &d, &matcher))
            .collect())
    } else {
        windows
            .0
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let d = run_experiment(model, &settings, &schedule, n, per_window_seed(seed, i))?;
                Ok(row(w, &d, &CoincidenceMatcher::new(&d)))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellScanRow {
    pub window: CoincidenceWindow,
    pub n_matched: u64,
    /// `None` when some pair had no coincidences at this window.
    pub bell: Option<BellSum>,
}

/// Bell-sum audit per window on one dataset over three settings (all pairs).
pub fn bell_window_scan(
    model: &ModelConfig,
    settings: &[Setting; 3],
    windows: &WindowGrid,
    n: u64,
    seed: u64,
    pairing: PairingMode,
) -> Result<Vec<BellScanRow>, ConfigError> {
    let d = run_experiment(model, settings, &Schedule::all_pairs(settings), n, seed)?;
    let matcher = CoincidenceMatcher::new(&d);
    let labels = [
        settings[0].label(),
        settings[1].label(),
        settings[2].label(),
    ];
    Ok(windows
        .0
        .par_iter()
        .map(|&w| {
            let table = CountTable::from_pairs(&d, &matcher.pairs(&d, w, pairing));
            BellScanRow {
                window: w,
                n_matched: table.total(),
                bell: BellSum::from_table(&table, labels).ok(),
            }
        })
        .collect())
}

/// Narrowest window whose matched count is at least `min_matched`.
pub fn narrowest_with_at_least(rows: &[ScanRow], min_matched: u64) -> Option<&ScanRow> {
    rows.iter()
        .filter(|r| r.n_matched >= min_matched)
        .min_by(|x, y| {
            let w = |r: &ScanRow| r.window.width().unwrap_or(f64::INFINITY);
            w(x).partial_cmp(&w(y)).expect("finite or inf widths")
        })
}

pub fn window_label(w: CoincidenceWindow) -> String {
    match w.width() {
        Some(x) => format!("{x}"),
        None => "inf".to_string(),
    }
}

pub const SCAN_HEADER: &str = "window,delta,n_matched,E,stderr";

pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SCAN_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            window_label(r.window),
            r.delta,
            r.n_matched,
            r.e,
            r.stderr
        )?;
    }
    out.flush()
}
