//! Pair-source models.
//!
//! Each model turns a setting pair and a random stream into two outcomes and
//! two detection delays. The hidden state stays inside the model; it never
//! reaches the dataset.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::model::{Outcome, Setting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Samples the singlet joint law directly.
    Quantum,
    /// Outcomes are signs of a shared hidden angle; no delays.
    Deterministic,
    /// Deterministic outcomes plus setting-dependent detection delays.
    TimeTag,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Quantum => "quantum",
            ModelKind::Deterministic => "deterministic",
            ModelKind::TimeTag => "timetag",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "quantum" => Ok(ModelKind::Quantum),
            "deterministic" | "sign" => Ok(ModelKind::Deterministic),
            "timetag" | "time-tag" => Ok(ModelKind::TimeTag),
            other => Err(ConfigError::InvalidModel(format!(
                "unknown model `{other}`"
            ))),
        }
    }
}

/// Angle convention. Polarization doubles every angle (period π).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Spin,
    Polarization,
}

impl Encoding {
    pub fn factor(self) -> f64 {
        match self {
            Encoding::Spin => 1.0,
            Encoding::Polarization => 2.0,
        }
    }
}

impl FromStr for Encoding {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "spin" => Ok(Encoding::Spin),
            "polarization" | "polarisation" | "pol" => Ok(Encoding::Polarization),
            other => Err(ConfigError::InvalidModel(format!(
                "unknown encoding `{other}`"
            ))),
        }
    }
}

/// Shared hidden angle plus optional per-station delay randomness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenState {
    /// λ in [0, 2π).
    pub angle: f64,
    /// (r_A, r_B), each in [0, 1).
    pub aux: Option<(f64, f64)>,
}

impl HiddenState {
    pub fn new(angle: f64) -> Self {
        HiddenState { angle, aux: None }
    }

    pub fn draw<R: Rng + ?Sized>(rng: &mut R, with_aux: bool) -> Self {
        let mut angle = rng.random::<f64>() * TAU;
        if angle >= TAU {
            angle = 0.0;
        }
        let aux = with_aux.then(|| (rng.random::<f64>(), rng.random::<f64>()));
        HiddenState { angle, aux }
    }
}

pub const DEFAULT_DELAY_EXPONENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub encoding: Encoding,
    /// T_max, seconds.
    pub delay_max: f64,
    /// d in the delay law.
    pub delay_exponent: f64,
    /// Seconds between emissions.
    pub base_interval: f64,
}

impl ModelConfig {
    pub fn new(kind: ModelKind, encoding: Encoding) -> Self {
        ModelConfig {
            kind,
            encoding,
            delay_max: 1.0,
            delay_exponent: DEFAULT_DELAY_EXPONENT,
            base_interval: 10.0,
        }
    }

    pub fn quantum() -> Self {
        Self::new(ModelKind::Quantum, Encoding::Spin)
    }

    pub fn deterministic() -> Self {
        Self::new(ModelKind::Deterministic, Encoding::Spin)
    }

    pub fn timetag() -> Self {
        Self::new(ModelKind::TimeTag, Encoding::Polarization)
    }

    pub fn with_exponent(mut self, d: f64) -> Self {
        self.delay_exponent = d;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delay_max > 0.0 && self.delay_max.is_finite()) {
            return Err(ConfigError::InvalidModel(format!(
                "delay_max must be positive, got {}",
                self.delay_max
            )));
        }
        if !(self.base_interval > 0.0 && self.base_interval.is_finite()) {
            return Err(ConfigError::InvalidModel(format!(
                "base_interval must be positive, got {}",
                self.base_interval
            )));
        }
        if !(self.delay_exponent >= 0.0 && self.delay_exponent.is_finite()) {
            return Err(ConfigError::InvalidModel(format!(
                "delay exponent must be non-negative, got {}",
                self.delay_exponent
            )));
        }
        Ok(())
    }

    /// Draw one trial for the setting pair.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        a: &Setting,
        b: &Setting,
        rng: &mut R,
    ) -> Result<PairSample, ConfigError> {
        match self.kind {
            ModelKind::Quantum => {
                let (oa, ob) = sample_quantum(a, b, self.encoding, rng)?;
                Ok(PairSample::instant(oa, ob))
            }
            ModelKind::Deterministic => {
                let lambda = HiddenState::draw(rng, false);
                let (oa, ob) = sample_deterministic(a, b, &lambda, self.encoding);
                Ok(PairSample::instant(oa, ob))
            }
            ModelKind::TimeTag => {
                let lambda = HiddenState::draw(rng, true);
                Ok(sample_timetag(a, b, &lambda, self, rng))
            }
        }
    }

    /// Model-free reference correlation −a·b (spin) or −cos 2(θa−θb) (polarization).
    pub fn singlet_correlation(&self, a: &Setting, b: &Setting) -> f64 {
        singlet_correlation(a, b, self.encoding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    /// Seconds after emission.
    pub delay_a: f64,
    pub delay_b: f64,
}

impl PairSample {
    fn instant(outcome_a: Outcome, outcome_b: Outcome) -> Self {
        PairSample {
            outcome_a,
            outcome_b,
            delay_a: 0.0,
            delay_b: 0.0,
        }
    }
}

pub fn singlet_correlation(a: &Setting, b: &Setting, encoding: Encoding) -> f64 {
    match encoding {
        Encoding::Spin => -a.dot(b),
        Encoding::Polarization => -(2.0 * (a.angle() - b.angle())).cos(),
    }
}

/// Sample the singlet law P(A=α, B=β) = (1 − αβ·c)/4, with c = −E.
pub fn sample_quantum<R: Rng + ?Sized>(
    a: &Setting,
    b: &Setting,
    encoding: Encoding,
    rng: &mut R,
) -> Result<(Outcome, Outcome), ConfigError> {
    for s in [a, b] {
        if !s.is_unit() {
            let d = s.direction();
            return Err(ConfigError::NonUnitDirection {
                label: s.label().to_string(),
                norm: d.iter().map(|c| c * c).sum::<f64>().sqrt(),
            });
        }
    }
    let c = -singlet_correlation(a, b, encoding);
    let oa = if rng.random::<f64>() < 0.5 {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let opposite = rng.random::<f64>() < (1.0 + c) / 2.0;
    let ob = if opposite { oa.flip() } else { oa };
    Ok((oa, ob))
}

/// A = sign(cos k(θa − λ)), B = −sign(cos k(θb − λ)), k = 1 (spin) or 2 (polarization).
pub fn sample_deterministic(
    a: &Setting,
    b: &Setting,
    lambda: &HiddenState,
    encoding: Encoding,
) -> (Outcome, Outcome) {
    let k = encoding.factor();
    let oa = Outcome::from_sign((k * (a.angle() - lambda.angle)).cos());
    let ob = Outcome::from_sign((k * (b.angle() - lambda.angle)).cos()).flip();
    (oa, ob)
}

/// Deterministic outcomes plus delays τ = T_max · r · |sin k(θ − λ_station)|^d.
///
/// Station B's hidden angle is λ + π/k. When `lambda.aux` is absent the two
/// delay variates are drawn from `rng`.
pub fn sample_timetag<R: Rng + ?Sized>(
    a: &Setting,
    b: &Setting,
    lambda: &HiddenState,
    cfg: &ModelConfig,
    rng: &mut R,
) -> PairSample {
    let k = cfg.encoding.factor();
    let (outcome_a, outcome_b) = sample_deterministic(a, b, lambda, cfg.encoding);
    let (r_a, r_b) = lambda
        .aux
        .unwrap_or_else(|| (rng.random::<f64>(), rng.random::<f64>()));
    let lambda_b = lambda.angle + PI / k;
    let delay = |theta: f64, lam: f64, r: f64| {
        let s = (k * (theta - lam)).sin().abs();
        cfg.delay_max * r * s.powf(cfg.delay_exponent)
    };
    PairSample {
        outcome_a,
        outcome_b,
        delay_a: delay(a.angle(), lambda.angle, r_a),
        delay_b: delay(b.angle(), lambda_b, r_b),
    }
}
