use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use boolebell::algebra::builtins::Builtin;
use boolebell::algebra::json::{bound_report, expression_from_json, rational_to_json};
use boolebell::algebra::{
    decyclify, evaluate_on_dataset, has_cyclicity, Binding, ConstraintSet, Evaluation,
};
use boolebell::feasibility::{
    a_form, feasible_closed_form_3, feasible_lp, BellGameReport, CorrelationSet, Verdict,
};
use boolebell::io::{read_dataset, write_csv, write_dataset};
use boolebell::model::{validate_dataset, Dataset, Setting};
use boolebell::models::{Encoding, ModelConfig, ModelKind};
use boolebell::simulator::{
    apply_pairs, match_coincidences, run_experiment, CoincidenceMatcher, CoincidenceWindow,
    PairingMode, Schedule,
};
use boolebell::stats::{
    bell_window_scan, estimate_correlation, narrowest_with_at_least, window_label, window_scan,
    write_scan_csv, BellSum, CountTable, ScanOptions, ScanRow, WindowGrid,
};
use boolebell::Expr;
use log::{info, warn};
use serde_json::{json, Value};

use crate::args::*;
use crate::config::*;

/// Matched pairs a scan window needs before its estimate is reported as usable.
const USABLE_MATCHES: u64 = 10_000;

pub struct Context {
    pub config: FileConfig,
    /// Directory of the config file, for resolving relative paths in it.
    pub config_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl Context {
    fn seed(&self, command: &str) -> Result<u64, CliError> {
        self.seed.or(self.config.seed).ok_or_else(|| {
            CliError::Config(format!("`{command}` needs --seed (no implicit entropy)"))
        })
    }

    fn config_path(&self, p: &Path) -> PathBuf {
        match &self.config_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }
}

fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        None => Ok(()),
        Some(p) if p == Path::new("-") => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Config(format!("stdout: {e}")))
        }
        Some(p) => fs::write(p, content)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn parse_model(s: &str) -> Result<ModelKind, CliError> {
    s.parse()
        .map_err(|e: boolebell::ConfigError| CliError::Config(e.to_string()))
}

fn parse_encoding(s: &str) -> Result<Encoding, CliError> {
    s.parse()
        .map_err(|e: boolebell::ConfigError| CliError::Config(e.to_string()))
}

fn pairing_mode(p: PairingArg) -> PairingMode {
    match p {
        PairingArg::Greedy => PairingMode::Greedy,
        PairingArg::SameTrial => PairingMode::SameTrial,
    }
}

fn pairing_from(flag: Option<PairingArg>, cfg: Option<&str>) -> Result<PairingMode, CliError> {
    match (flag, cfg) {
        (Some(p), _) => Ok(pairing_mode(p)),
        (None, Some("greedy")) | (None, None) => Ok(PairingMode::Greedy),
        (None, Some("same-trial")) => Ok(PairingMode::SameTrial),
        (None, Some(other)) => Err(CliError::Config(format!("unknown pairing `{other}`"))),
    }
}

fn model_config(
    kind: ModelKind,
    encoding: Option<Encoding>,
    delays: &DelayArgs,
    cfg: &FileConfig,
) -> Result<ModelConfig, CliError> {
    let mut m = match kind {
        ModelKind::Quantum => ModelConfig::quantum(),
        ModelKind::Deterministic => ModelConfig::deterministic(),
        ModelKind::TimeTag => ModelConfig::timetag(),
    };
    if let Some(e) = encoding {
        m.encoding = e;
    }
    if let Some(x) = delays.delay_max.or(cfg.delay_max) {
        m.delay_max = x;
    }
    if let Some(x) = delays.delay_exponent.or(cfg.delay_exponent) {
        m.delay_exponent = x;
    }
    if let Some(x) = delays.base_interval.or(cfg.base_interval) {
        m.base_interval = x;
    }
    m.validate()?;
    Ok(m)
}

fn encoding_from(
    flag: Option<EncodingArg>,
    cfg: Option<&str>,
) -> Result<Option<Encoding>, CliError> {
    match (flag, cfg) {
        (Some(EncodingArg::Spin), _) => Ok(Some(Encoding::Spin)),
        (Some(EncodingArg::Polarization), _) => Ok(Some(Encoding::Polarization)),
        (None, Some(s)) => parse_encoding(s).map(Some),
        (None, None) => Ok(None),
    }
}

fn parse_schedule(text: &str, explicit: bool) -> Result<Schedule, CliError> {
    let pairs = text
        .split(',')
        .map(|p| {
            p.trim()
                .split_once(':')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| CliError::Config(format!("schedule entry `{p}` is not A:B")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if explicit {
        Schedule::explicit(pairs)
    } else {
        Schedule::uniform(pairs)
    })
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let kind = match (args.model, cfg.model.as_deref()) {
        (Some(ModelArg::Quantum), _) => ModelKind::Quantum,
        (Some(ModelArg::Deterministic), _) => ModelKind::Deterministic,
        (Some(ModelArg::Timetag), _) => ModelKind::TimeTag,
        (None, Some(s)) => parse_model(s)?,
        (None, None) => return Err(CliError::Config("--model is required".into())),
    };
    let encoding = encoding_from(args.encoding, cfg.encoding.as_deref())?;
    let model = model_config(kind, encoding, &args.delays, cfg)?;

    let settings = if let Some(path) = &args.settings {
        load_settings_file(path)?
    } else if let Some(angles) = &args.angles {
        settings_from_angles(angles)?
    } else {
        match (&cfg.settings, &cfg.angles) {
            (Some(SettingsSource::Path(p)), _) => load_settings_file(&ctx.config_path(p))?,
            (Some(SettingsSource::Inline(specs)), _) => build_settings(specs)?,
            (None, Some(angles)) => settings_from_angles(angles)?,
            (None, None) => {
                return Err(CliError::Config(
                    "--settings or --angles is required".into(),
                ))
            }
        }
    };
    let explicit = args.explicit_schedule || cfg.explicit_schedule.unwrap_or(false);
    let schedule = match args.schedule.as_deref().or(cfg.schedule.as_deref()) {
        Some(text) => parse_schedule(text, explicit)?,
        None if explicit => Schedule::explicit(Schedule::all_pairs(&settings).pairs().to_vec()),
        None if settings.len() == 1 => Schedule::single(settings[0].label(), settings[0].label()),
        None => Schedule::all_pairs(&settings),
    };
    let n = args
        .pairs
        .or(cfg.pairs)
        .ok_or_else(|| CliError::Config("--pairs is required".into()))?;
    let seed = ctx.seed("simulate")?;
    let window_text = args
        .window
        .clone()
        .or(cfg.window.as_ref().map(WindowValue::as_text));
    let window = parse_window(window_text.as_deref())?;
    let pairing = pairing_from(args.pairing, cfg.pairing.as_deref())?;
    let out = args
        .out
        .as_deref()
        .ok_or_else(|| CliError::Config("--out is required (use `-` for stdout)".into()))?;

    let generated = run_experiment(&model, &settings, &schedule, n, seed)?;
    let (dataset, cross) = match window {
        CoincidenceWindow::Infinite => (generated, 0),
        w => {
            let m = match_coincidences(&generated, w, pairing);
            let cross = m.cross_trial_count();
            (m.dataset, cross)
        }
    };

    if out == Path::new("-") {
        let mut buf = Vec::new();
        write_csv(&dataset, &mut buf).map_err(|e| CliError::Config(e.to_string()))?;
        emit(Some(out), &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    } else {
        write_dataset(out, &dataset).map_err(|e| CliError::Config(e.to_string()))?;
    }

    let matched = dataset.matched_count();
    eprintln!(
        "simulated {n} pairs: model {}, encoding {:?}, seed {seed}",
        model.kind, model.encoding
    );
    eprintln!(
        "matched {matched}/{n} ({:.2}%) at window {}{}",
        100.0 * matched as f64 / n as f64,
        window_label(window),
        if cross > 0 {
            format!("; {cross} cross-trial coincidences left unflagged")
        } else {
            String::new()
        }
    );
    Ok(())
}

fn correlations_json(table: &CountTable) -> Vec<Value> {
    table
        .iter()
        .filter_map(|((a, b), counts)| {
            estimate_correlation::<f64>(counts)
                .ok()
                .map(|e| json!({"a": a, "b": b, "E": e.e, "stderr": e.stderr, "n": e.n}))
        })
        .collect()
}

fn load_expression(builtin: Option<&str>, file: Option<&Path>) -> Result<Expr, CliError> {
    match (builtin, file) {
        (Some(name), _) => Ok(name.parse::<Builtin>()?.expression()),
        (None, Some(path)) => {
            require_file(path, "expression file")?;
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("expression file {}: {e}", path.display()))
            })?;
            Ok(expression_from_json(&text)?)
        }
        (None, None) => Err(CliError::Config("--builtin or --expr is required".into())),
    }
}

fn evaluation_json(e: &Expr, ev: &Evaluation) -> Value {
    let terms: Vec<Value> = e
        .terms()
        .iter()
        .zip(&ev.terms)
        .map(|(t, est)| {
            json!({
                "coeff": rational_to_json(t.coeff),
                "factors": t.factors.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "mean": est.mean,
                "stderr": est.stderr,
                "n": est.n,
            })
        })
        .collect();
    json!({
        "expression": e.to_string(),
        "binding": format!("{:?}", ev.binding),
        "terms": terms,
        "total": ev.total,
        "stderr": ev.stderr,
    })
}

fn read_validated(path: &Path) -> Result<Dataset, CliError> {
    require_file(path, "dataset")?;
    let d = read_dataset(path)?;
    let violations = validate_dataset(&d);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(CliError::Data(format!(
            "{}: {} validation violation(s)",
            path.display(),
            violations.len()
        )));
    }
    Ok(d)
}

pub fn audit(args: &AuditArgs) -> Result<(), CliError> {
    let window = match &args.window {
        Some(t) => Some(parse_window(Some(t))?),
        None => None,
    };
    let expression = match (&args.builtin, &args.expr) {
        (None, None) => None,
        (b, f) => Some(load_expression(b.as_deref(), f.as_deref())?),
    };
    let d = read_validated(&args.input)?;

    let (table, d) = match window {
        Some(w) => {
            let pairs = CoincidenceMatcher::new(&d).pairs(&d, w, pairing_mode(args.pairing));
            (
                CountTable::from_pairs(&d, &pairs),
                apply_pairs(&d, &pairs, w),
            )
        }
        None => (CountTable::from_matched(&d), d),
    };
    let n_matched = table.total();
    eprintln!(
        "{}: {} trials, {n_matched} matched pairs",
        args.input.display(),
        d.trials.len()
    );
    for ((a, b), counts) in table.iter() {
        if let Ok(e) = estimate_correlation::<f64>(counts) {
            eprintln!(
                "  E({a},{b}) = {:+.4} ± {:.4}  (n = {})",
                e.e, e.stderr, e.n
            );
        }
    }

    let labels: Option<Vec<String>> = match &args.bell_settings {
        Some(l) if l.len() == 3 => Some(l.clone()),
        Some(l) => {
            return Err(CliError::Config(format!(
                "--bell-settings needs three labels, got {}",
                l.len()
            )))
        }
        None if d.settings.len() == 3 => {
            Some(d.settings.iter().map(|s| s.label().to_string()).collect())
        }
        None => None,
    };
    let bell = match &labels {
        Some(l) => {
            for label in l {
                if d.setting(label).is_none() {
                    return Err(CliError::Config(format!("unknown setting `{label}`")));
                }
            }
            let sum = BellSum::from_table(&table, [&l[0], &l[1], &l[2]])?;
            let report = BellGameReport::from_bell_sum(sum)?;
            eprintln!(
                "Bell sum E({0},{1}) + E({0},{2}) + E({1},{2}) = {3:.4} ± {4:.4} (bound +1)",
                l[0], l[1], l[2], report.bell.sum, report.bell.stderr
            );
            eprintln!("verdict: {} — {}", report.verdict, report.message());
            for v in report.violated() {
                eprintln!("  violated: {v}");
            }
            Some(report.to_json())
        }
        None => {
            info!("no Bell sum: dataset does not have exactly three settings");
            None
        }
    };

    let evaluation = match &expression {
        Some(e) => {
            let c = if args.anticorrelated {
                ConstraintSet::anticorrelated()
            } else {
                ConstraintSet::none()
            };
            let binding = match args.binding {
                BindingArg::Auto => Binding::infer(e),
                BindingArg::Shared => Binding::Shared,
                BindingArg::PerTerm => Binding::PerTerm,
            };
            let ev = evaluate_on_dataset(e, &d, binding, c)?;
            eprintln!("expression {e}: {:.4} ± {:.4}", ev.total, ev.stderr);
            Some(evaluation_json(e, &ev))
        }
        None => None,
    };

    let report = json!({
        "input": args.input.display().to_string(),
        "n_trials": d.trials.len(),
        "n_matched": n_matched,
        "window": window.map(window_label),
        "correlations": correlations_json(&table),
        "bell": bell,
        "expression": evaluation,
    });
    emit(args.out.as_deref(), &pretty(&report))
}

pub fn bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let mut e = load_expression(args.builtin.as_deref(), args.expr.as_deref())?;
    if let Some(m) = args.decyclify {
        e = decyclify(&e, m);
    }
    let c = if args.anticorrelated {
        ConstraintSet::anticorrelated()
    } else {
        ConstraintSet::none()
    };
    let cyc = has_cyclicity(&e, c)?;
    eprintln!("{e}");
    eprintln!(
        "tight bounds [{}, {}], trivial [{}, {}], cyclic: {}",
        cyc.bounds.min, cyc.bounds.max, cyc.trivial.min, cyc.trivial.max, cyc.cyclic
    );
    if let Some(w) = &cyc.witness {
        eprintln!("cycle: {w}");
    }
    match e.claim_holds(&cyc.bounds) {
        Some(true) => eprintln!("stated bound holds for every assignment"),
        Some(false) => eprintln!("stated bound FAILS for some assignment"),
        None => {}
    }
    emit(args.out.as_deref(), &pretty(&bound_report(&e, c, &cyc)))
}

fn atom_name(omega: usize, k: usize) -> String {
    (0..k)
        .map(|i| if omega >> i & 1 == 1 { '-' } else { '+' })
        .collect()
}

pub fn feasibility(args: &FeasibilityArgs) -> Result<(), CliError> {
    let mut c = match (&args.corr, &args.input) {
        (Some(v), _) => {
            let [e12, e13, e23] = v[..] else {
                return Err(CliError::Config(format!(
                    "--corr needs three values E12,E13,E23, got {}",
                    v.len()
                )));
            };
            CorrelationSet::triple(e12, e13, e23)?
        }
        (None, Some(path)) => {
            require_file(path, "correlation file")?;
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            CorrelationSet::from_json(&text)?
        }
        (None, None) => return Err(CliError::Config("--corr or --in is required".into())),
    };
    if args.ab_form {
        let mut mapped = CorrelationSet::new(c.k())?;
        for (&(i, j), &e) in c.pairs() {
            mapped = mapped.with_pair(i, j, a_form(e))?;
        }
        for (&i, &e) in c.singles() {
            mapped = mapped.with_single(i, e)?;
        }
        c = mapped;
    }

    let mut report = json!({"input": c.to_json()});
    let mut verdicts = Vec::new();
    if matches!(args.method, MethodArg::Lp | MethodArg::Both) {
        let lp = feasible_lp(&c)?;
        let witness = lp.witness.as_ref().map(|w| {
            w.iter()
                .enumerate()
                .filter(|(_, &p)| p > 1e-12)
                .map(|(omega, &p)| json!({"atom": atom_name(omega, c.k()), "p": p}))
                .collect::<Vec<_>>()
        });
        let certificate = lp
            .certificate
            .as_ref()
            .map(|cert| json!({"inequality": cert.describe(), "value": cert.value(&c)}));
        eprintln!("LP: {} (stretch factor {:.6})", lp.verdict, lp.scale);
        if let Some(cert) = &lp.certificate {
            eprintln!(
                "  certificate: {} but the data give {:.6}",
                cert.describe(),
                cert.value(&c)
            );
        }
        report["lp"] = json!({
            "verdict": lp.verdict,
            "scale": lp.scale,
            "witness": witness,
            "certificate": certificate,
        });
        verdicts.push(lp.verdict);
    }
    let closed_possible = c.k() == 3 && c.pairs().len() == 3;
    if matches!(args.method, MethodArg::ClosedForm)
        || (args.method == MethodArg::Both && closed_possible)
    {
        let cf = feasible_closed_form_3(&c)?;
        eprintln!("closed form: {}", cf.verdict);
        for v in &cf.violated {
            eprintln!("  violated: {}", v.describe());
        }
        report["closed_form"] = json!({
            "verdict": cf.verdict,
            "conditions": cf.conditions.iter().map(|x| json!({"signs": x.signs, "value": x.value})).collect::<Vec<_>>(),
            "violated": cf.violated.iter().map(|x| x.describe()).collect::<Vec<_>>(),
        });
        verdicts.push(cf.verdict);
    }
    if verdicts
        .windows(2)
        .any(|w| w[0].is_feasible() != w[1].is_feasible())
    {
        warn!("LP and closed form disagree: {verdicts:?}");
    }
    let verdict = if verdicts.contains(&Verdict::Infeasible) {
        Verdict::Infeasible
    } else if verdicts.contains(&Verdict::Boundary) {
        Verdict::Boundary
    } else {
        Verdict::Feasible
    };
    eprintln!("verdict: {verdict}");
    report["verdict"] = json!(verdict);
    emit(args.out.as_deref(), &pretty(&report))
}

fn row_json(r: &ScanRow) -> Value {
    json!({
        "window": window_label(r.window),
        "n_matched": r.n_matched,
        "E": r.e,
        "stderr": r.stderr,
    })
}

pub fn scan_window(ctx: &Context, args: &ScanArgs) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let delta = args
        .delta
        .or(cfg.delta)
        .ok_or_else(|| CliError::Config("--delta is required".into()))?;
    let grid_text = args
        .windows
        .clone()
        .or(cfg.windows.clone())
        .unwrap_or_else(|| "1e-4:1:log30".to_string());
    let grid: WindowGrid = grid_text.parse()?;
    let n = args
        .pairs
        .or(cfg.pairs)
        .ok_or_else(|| CliError::Config("--pairs is required".into()))?;
    let seed = ctx.seed("scan-window")?;
    let encoding = encoding_from(args.encoding, cfg.encoding.as_deref())?;
    let model = model_config(ModelKind::TimeTag, encoding, &args.delays, cfg)?;
    let opts = ScanOptions {
        reuse: !(args.no_reuse || cfg.no_reuse.unwrap_or(false)),
        pairing: pairing_from(args.pairing, cfg.pairing.as_deref())?,
    };

    let rows = window_scan(&model, delta, &grid, n, seed, opts)?;
    let mut csv = Vec::new();
    write_scan_csv(&rows, &mut csv).map_err(|e| CliError::Config(e.to_string()))?;
    emit(
        args.out.as_deref(),
        &String::from_utf8(csv).expect("CSV is UTF-8"),
    )?;

    let target = -(model.encoding.factor() * delta).cos();
    let min_e = rows
        .iter()
        .filter(|r| r.n_matched > 0)
        .min_by(|a, b| a.e.total_cmp(&b.e));
    let usable = narrowest_with_at_least(&rows, USABLE_MATCHES);
    eprintln!(
        "scan: delta {delta}, {} windows, {n} pairs, seed {seed}, d = {}",
        rows.len(),
        model.delay_exponent
    );
    if let Some(r) = usable {
        eprintln!(
            "narrowest window with ≥{USABLE_MATCHES} matches: W = {} (n = {}), E = {:.4} ± {:.4}; singlet value {:.4}",
            window_label(r.window),
            r.n_matched,
            r.e,
            r.stderr,
            target
        );
    } else {
        warn!("no window reached {USABLE_MATCHES} matched pairs");
    }

    let bell = if args.bell || cfg.bell.unwrap_or(false) {
        let settings = [
            Setting::planar("a", 0.0),
            Setting::planar("b", delta),
            Setting::planar("c", 2.0 * delta),
        ];
        let bell_rows = bell_window_scan(&model, &settings, &grid, n, seed, opts.pairing)?;
        let mut out = Vec::new();
        for r in bell_rows {
            let entry = match r.bell {
                Some(sum) => {
                    let game = BellGameReport::from_bell_sum(sum)?;
                    json!({
                        "window": window_label(r.window),
                        "n_matched": r.n_matched,
                        "sum": game.bell.sum,
                        "stderr": game.bell.stderr,
                        "verdict": game.verdict,
                    })
                }
                None => {
                    json!({"window": window_label(r.window), "n_matched": r.n_matched, "sum": null})
                }
            };
            out.push(entry);
        }
        Some(out)
    } else {
        None
    };

    let summary = json!({
        "delta": delta,
        "pairs": n,
        "seed": seed,
        "encoding": format!("{:?}", model.encoding).to_lowercase(),
        "delay_exponent": model.delay_exponent,
        "delay_max": model.delay_max,
        "reuse": opts.reuse,
        "singlet_value": target,
        "min_e": min_e.map(row_json),
        "narrowest_usable": usable.map(row_json),
        "bell": bell,
    });
    emit(args.summary.as_deref(), &pretty(&summary))
}

pub fn validate(args: &ValidateArgs) -> Result<(), CliError> {
    let d = read_validated(&args.input)?;
    eprintln!(
        "{}: {} trials, {} matched, no violations",
        args.input.display(),
        d.trials.len(),
        d.matched_count()
    );
    Ok(())
}
