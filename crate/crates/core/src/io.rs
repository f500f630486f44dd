//! Trial CSV and metadata sidecar.
//!
//! The CSV holds one row per trial; the sidecar (same path, `.json`
//! extension) holds the seed, model, window and full setting directions.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::IoError;
use crate::model::{
    Dataset, Metadata, Outcome, Setting, SpaceTimeLabel, Station, StationEvent, TrialRecord,
};

pub const CSV_HEADER: &str =
    "trial_index,setting_a,angle_a,outcome_a,time_a,setting_b,angle_b,outcome_b,time_b,matched";

const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingRecord {
    pub label: String,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub seed: Option<u64>,
    pub model: String,
    /// Seconds; `null` when unfiltered.
    pub window: Option<f64>,
    pub n_trials: usize,
    pub settings: Vec<SettingRecord>,
}

impl Sidecar {
    pub fn from_dataset(d: &Dataset) -> Self {
        Sidecar {
            seed: d.metadata.seed,
            model: d.metadata.model.clone(),
            window: d.metadata.window,
            n_trials: d.trials.len(),
            settings: d
                .settings
                .iter()
                .map(|s| {
                    let [x, y, z] = s.direction();
                    SettingRecord {
                        label: s.label().to_string(),
                        x,
                        y,
                        z,
                    }
                })
                .collect(),
        }
    }

    pub fn settings(&self) -> Result<Vec<Setting>, IoError> {
        self.settings
            .iter()
            .map(|r| {
                Setting::new(r.label.clone(), [r.x, r.y, r.z])
                    .map_err(|e| IoError::Metadata(e.to_string()))
            })
            .collect()
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn write_csv<W: Write>(d: &Dataset, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "{CSV_HEADER}")?;
    for t in &d.trials {
        let (a, b) = (&t.event_a, &t.event_b);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            t.trial_index,
            a.setting.label(),
            a.setting.angle(),
            a.outcome.value(),
            a.time_tag,
            b.setting.label(),
            b.setting.angle(),
            b.outcome.value(),
            b.time_tag,
            t.matched
        )?;
    }
    out.flush()
}

pub fn write_sidecar<W: Write>(d: &Dataset, out: W) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, &Sidecar::from_dataset(d))?;
    writeln!(out)?;
    out.flush()
}

/// Write `path` and its sidecar.
pub fn write_dataset(path: &Path, d: &Dataset) -> Result<(), IoError> {
    let file_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| IoError::File { path: p, source }
    };
    let f = File::create(path).map_err(file_err(path))?;
    write_csv(d, f).map_err(file_err(path))?;
    let side = sidecar_path(path);
    let f = File::create(&side).map_err(file_err(&side))?;
    write_sidecar(d, f).map_err(file_err(&side))
}

/// Read a trial CSV. Settings come from `sidecar` when given, otherwise they
/// are rebuilt as planar settings from the angle columns.
pub fn read_csv<R: Read>(input: R, sidecar: Option<&Sidecar>) -> Result<Dataset, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r?,
        None => {
            return Err(IoError::Header {
                expected: CSV_HEADER.into(),
                found: String::new(),
            })
        }
    };
    let found = header.iter().collect::<Vec<_>>().join(",");
    if found != CSV_HEADER {
        return Err(IoError::Header {
            expected: CSV_HEADER.into(),
            found,
        });
    }

    let mut settings: Vec<Arc<Setting>> = match sidecar {
        Some(s) => s.settings()?.into_iter().map(Arc::new).collect(),
        None => Vec::new(),
    };
    let mut trials = Vec::new();

    for (k, rec) in records.enumerate() {
        // header is line 1
        let row = k + 2;
        let rec = rec.map_err(|e| IoError::Row {
            row,
            message: e.to_string(),
        })?;
        let bad = |message: String| IoError::Row { row, message };
        if rec.len() != 10 {
            return Err(bad(format!("expected 10 fields, found {}", rec.len())));
        }
        let trial_index: u64 = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad trial_index `{}`", &rec[0])))?;
        let mut event = |station: Station, off: usize| -> Result<StationEvent, IoError> {
            let label = &rec[off];
            if label.is_empty() {
                return Err(bad("empty setting label".into()));
            }
            let angle: f64 = rec[off + 1]
                .parse()
                .map_err(|_| bad(format!("bad angle `{}`", &rec[off + 1])))?;
            let outcome = rec[off + 2]
                .parse::<i64>()
                .ok()
                .and_then(|v| Outcome::try_from(v).ok())
                .ok_or_else(|| bad(format!("bad outcome `{}`", &rec[off + 2])))?;
            let time: f64 = rec[off + 3]
                .parse()
                .ok()
                .filter(|t: &f64| t.is_finite())
                .ok_or_else(|| bad(format!("bad time `{}`", &rec[off + 3])))?;
            let setting = match settings.iter().find(|s| s.label() == label) {
                Some(s) => {
                    let diff = (s.angle() - angle).abs();
                    if diff > ANGLE_TOL && (diff - std::f64::consts::TAU).abs() > ANGLE_TOL {
                        return Err(bad(format!(
                            "angle {angle} disagrees with setting `{label}` ({})",
                            s.angle()
                        )));
                    }
                    s.clone()
                }
                None if sidecar.is_some() => {
                    return Err(bad(format!("setting `{label}` not in metadata")))
                }
                None => {
                    let s = Arc::new(Setting::planar(label, angle));
                    settings.push(s.clone());
                    s
                }
            };
            Ok(StationEvent::new(
                SpaceTimeLabel {
                    station,
                    trial_index,
                    time_tag: time,
                },
                setting,
                outcome,
            ))
        };
        let event_a = event(Station::A, 1)?;
        let event_b = event(Station::B, 5)?;
        let matched = match &rec[9] {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("bad matched flag `{other}`"))),
        };
        trials.push(TrialRecord {
            trial_index,
            event_a,
            event_b,
            matched,
        });
    }

    let metadata = match sidecar {
        Some(s) => {
            if s.n_trials != trials.len() {
                return Err(IoError::Metadata(format!(
                    "metadata lists {} trials, CSV has {}",
                    s.n_trials,
                    trials.len()
                )));
            }
            Metadata {
                seed: s.seed,
                model: s.model.clone(),
                window: s.window,
            }
        }
        None => Metadata {
            seed: None,
            model: "unknown".into(),
            window: None,
        },
    };
    Ok(Dataset {
        trials,
        settings,
        metadata,
    })
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar, IoError> {
    let f = File::open(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_reader(f).map_err(|e| IoError::Metadata(format!("{}: {e}", path.display())))
}

/// Read `path` plus its sidecar if one exists.
pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let side = sidecar_path(path);
    let sidecar = if side.exists() {
        Some(read_sidecar(&side)?)
    } else {
        None
    };
    let f = File::open(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(f, sidecar.as_ref())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tests::three_trials;

    fn roundtrip(d: &Dataset) -> Dataset {
        let mut buf = Vec::new();
        write_csv(d, &mut buf).unwrap();
        read_csv(buf.as_slice(), Some(&Sidecar::from_dataset(d))).unwrap()
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let d = three_trials();
        let back = roundtrip(&d);
        assert!(back.approx_eq(&d, 1e-9));
        assert_eq!(back, d);
    }

    #[test]
    fn header_is_bit_exact() {
        let mut buf = Vec::new();
        write_csv(&three_trials(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "0,a,0,1,0,b,2.0943951023931957,-1,0.1,true"
        );
    }

    #[test]
    fn corrupted_row_reports_line() {
        let mut buf = Vec::new();
        write_csv(&three_trials(), &mut buf).unwrap();
        let text = String::from_utf8(buf)
            .unwrap()
            .replace("1,a,0,1,1,", "1,a,0,7,1,");
        match read_csv(text.as_bytes(), None) {
            Err(IoError::Row { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("outcome"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = format!("{CSV_HEADER}\n0,a,0,1\n");
        assert!(matches!(
            read_csv(short.as_bytes(), None),
            Err(IoError::Row { row: 2, .. })
        ));
        assert!(matches!(
            read_csv("nope\n".as_bytes(), None),
            Err(IoError::Header { .. })
        ));
    }

    #[test]
    fn settings_rebuilt_without_sidecar() {
        let d = three_trials();
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let back = read_csv(buf.as_slice(), None).unwrap();
        let labels: Vec<_> = back
            .settings
            .iter()
            .map(|s| s.label().to_string())
            .collect();
        assert_eq!(labels, vec!["a", "b", "c"]);
        assert_eq!(back.trials, d.trials);
    }

    #[test]
    fn sidecar_trial_count_checked() {
        let d = three_trials();
        let mut side = Sidecar::from_dataset(&d);
        side.n_trials = 4;
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        assert!(matches!(
            read_csv(buf.as_slice(), Some(&side)),
            Err(IoError::Metadata(_))
        ));
    }
}
