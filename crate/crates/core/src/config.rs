//! Parameter records, unit conversions and derived link quantities.
//!
//! [`SystemConfig`] is the user-facing record (JSON field names match the
//! notation used throughout: `M`, `N`, `B`, `T`, ...). [`validate`] checks
//! every physical constraint and returns [`DerivedParams`], which is what the
//! simulation and closed-form modules consume.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Violation};
use crate::real::Real;

/// Converts dBm to Watts.
pub fn dbm_to_watt(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// Converts Watts to dBm.
pub fn watt_to_dbm(p_watt: f64) -> f64 {
    10.0 * p_watt.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Distance path loss `C0 * (d / D0)^(-alpha)` with `C0` given in dB.
pub fn path_loss_beta(c0_db: f64, d: f64, d0: f64, alpha: f64) -> Result<f64, ConfigError> {
    let mut violations = Vec::new();
    if !(d > 0.0) {
        violations.push(Violation {
            field: "d_cas",
            message: format!("distance must be positive, got {d}"),
        });
    }
    if !(d0 > 0.0) {
        violations.push(Violation {
            field: "D0",
            message: format!("reference distance must be positive, got {d0}"),
        });
    }
    if !violations.is_empty() {
        return Err(ConfigError { violations });
    }
    Ok(db_to_linear(c0_db) * (d / d0).powf(-alpha))
}

/// Per-symbol Wiener increment variance `4 pi^2 f_c^2 T_s zeta` in rad^2.
pub fn phase_noise_variance(f_c: f64, t_s: f64, zeta: f64) -> f64 {
    4.0 * PI * PI * f_c * f_c * t_s * zeta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// BS antenna count.
    #[serde(rename = "M")]
    pub m: usize,
    /// IRS element count.
    #[serde(rename = "N")]
    pub n: usize,
    /// Pilot symbol count; `None` tracks `N`.
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    /// Coherence block length in symbols.
    #[serde(rename = "T")]
    pub coherence: usize,
    pub f_c: f64,
    #[serde(rename = "T_s")]
    pub t_s: f64,
    #[serde(rename = "zeta_BS")]
    pub zeta_bs: f64,
    #[serde(rename = "zeta_UE")]
    pub zeta_ue: f64,
    #[serde(rename = "P_dbm")]
    pub p_dbm: f64,
    pub sigma_d2_dbm: f64,
    /// Uplink receiver noise variance in Watts.
    pub sigma_u2: f64,
    #[serde(rename = "C0_db")]
    pub c0_db: f64,
    pub d_cas: f64,
    #[serde(rename = "D0")]
    pub d0: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m: 16,
            n: 16,
            b: None,
            coherence: 500,
            f_c: 2.5e9,
            t_s: 1e-7,
            zeta_bs: 0.0,
            zeta_ue: 0.0,
            p_dbm: 30.0,
            sigma_d2_dbm: -80.0,
            // beta_cas / sigma_u2 = 20 dB at the default geometry
            sigma_u2: 1e-9,
            c0_db: -30.0,
            d_cas: 100.0,
            d0: 1.0,
            alpha: 2.0,
            seed: 20_220_601,
        }
    }
}

/// Field names accepted in a config file, in declaration order.
pub const CONFIG_FIELDS: &[&str] = &[
    "M",
    "N",
    "B",
    "T",
    "f_c",
    "T_s",
    "zeta_BS",
    "zeta_UE",
    "P_dbm",
    "sigma_d2_dbm",
    "sigma_u2",
    "C0_db",
    "d_cas",
    "D0",
    "alpha",
    "seed",
];

impl SystemConfig {
    pub fn pilot_count(&self) -> usize {
        self.b.unwrap_or(self.n)
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::single(json_error_field(text, &e), e.to_string()))
    }

    /// Same record with `B` made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            b: Some(self.pilot_count()),
            ..self.clone()
        }
    }

    /// Applies a `key=value` override using the config-file field names.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigError> {
        let field = CONFIG_FIELDS
            .iter()
            .copied()
            .find(|f| *f == key)
            .ok_or_else(|| ConfigError::single("override", format!("unknown config field `{key}`")))?;
        let parsed: serde_json::Value = serde_json::from_str(value)
            .map_err(|_| ConfigError::single(field, format!("value `{value}` is not a number")))?;
        let mut obj = serde_json::to_value(self).expect("config serializes");
        obj.as_object_mut()
            .expect("config is an object")
            .insert(field.to_string(), parsed);
        serde_json::from_value(obj).map_err(|e| ConfigError::single(field, e.to_string()))
    }

    pub fn derive<T: Real>(&self) -> Result<DerivedParams<T>, ConfigError> {
        validate(self).map(|p| p.cast())
    }
}

fn json_error_field(text: &str, e: &serde_json::Error) -> &'static str {
    let msg = e.to_string();
    if let Some(f) = CONFIG_FIELDS.iter().copied().find(|f| msg.contains(&format!("`{f}`"))) {
        return f;
    }
    // type errors do not name the key; retry one key at a time
    if let Ok(serde_json::Value::Object(map)) = serde_json::from_str::<serde_json::Value>(text) {
        for (key, value) in map {
            let single = serde_json::json!({ key.clone(): value });
            if serde_json::from_value::<SystemConfig>(single).is_err() {
                if let Some(f) = CONFIG_FIELDS.iter().copied().find(|f| *f == key) {
                    return f;
                }
            }
        }
    }
    "config"
}

/// Quantities derived from a validated [`SystemConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedParams<T> {
    pub antennas: usize,
    pub elements: usize,
    pub pilots: usize,
    pub coherence: usize,
    pub beta_cas: T,
    pub sigma_bs2: T,
    pub sigma_ue2: T,
    /// Downlink transmit power in Watts.
    pub tx_power: T,
    pub sigma_d2: T,
    pub sigma_u2: T,
    /// Pilot symbol indices `1..=B`.
    pub pilot_times: Vec<usize>,
    pub seed: u64,
}

impl<T: Real> DerivedParams<T> {
    /// `P / sigma_d^2`.
    pub fn snr_scale(&self) -> T {
        self.tx_power / self.sigma_d2
    }

    /// `sigma_BS^2 + sigma_UE^2`.
    pub fn phase_var_sum(&self) -> T {
        self.sigma_bs2 + self.sigma_ue2
    }

    /// Downlink symbol indices `B+1 ..= T`.
    pub fn downlink_times(&self) -> RangeInclusive<usize> {
        (self.pilots + 1)..=self.coherence
    }

    /// Same link with ideal oscillators and noiseless pilots.
    pub fn with_perfect_csi(&self) -> Self {
        Self {
            sigma_bs2: T::zero(),
            sigma_ue2: T::zero(),
            sigma_u2: T::zero(),
            ..self.clone()
        }
    }

    pub fn cast<U: Real>(&self) -> DerivedParams<U> {
        let c = |x: T| U::of(x.as_f64());
        DerivedParams {
            antennas: self.antennas,
            elements: self.elements,
            pilots: self.pilots,
            coherence: self.coherence,
            beta_cas: c(self.beta_cas),
            sigma_bs2: c(self.sigma_bs2),
            sigma_ue2: c(self.sigma_ue2),
            tx_power: c(self.tx_power),
            sigma_d2: c(self.sigma_d2),
            sigma_u2: c(self.sigma_u2),
            pilot_times: self.pilot_times.clone(),
            seed: self.seed,
        }
    }
}

/// Checks every constraint of `config` and derives the link parameters.
/// All failures are reported together.
pub fn validate(config: &SystemConfig) -> Result<DerivedParams<f64>, ConfigError> {
    let mut v = Vec::new();
    let mut bad = |field: &'static str, message: String| v.push(Violation { field, message });

    let b = config.pilot_count();
    if config.m < 1 {
        bad("M", "need at least one BS antenna".into());
    }
    if config.n < 1 {
        bad("N", "need at least one IRS element".into());
    }
    if b < 1 {
        bad("B", "need at least one pilot symbol".into());
    }
    if b > config.n {
        bad("B", format!("B = {b} exceeds N = {}; the DFT pilot design needs B <= N", config.n));
    }
    if config.coherence <= b {
        bad("T", format!("T = {} must exceed B = {b} so the downlink set is non-empty", config.coherence));
    }
    let finite_nonneg = |x: f64| x.is_finite() && x >= 0.0;
    if !finite_nonneg(config.f_c) {
        bad("f_c", format!("carrier frequency must be finite and >= 0, got {}", config.f_c));
    }
    if !(config.t_s.is_finite() && config.t_s > 0.0) {
        bad("T_s", format!("symbol interval must be positive, got {}", config.t_s));
    }
    if !finite_nonneg(config.zeta_bs) {
        bad("zeta_BS", format!("oscillator constant must be >= 0, got {}", config.zeta_bs));
    }
    if !finite_nonneg(config.zeta_ue) {
        bad("zeta_UE", format!("oscillator constant must be >= 0, got {}", config.zeta_ue));
    }
    let tx_power = dbm_to_watt(config.p_dbm);
    if !(config.p_dbm.is_finite() && tx_power > 0.0) {
        bad("P_dbm", format!("transmit power must be finite, got {}", config.p_dbm));
    }
    let sigma_d2 = dbm_to_watt(config.sigma_d2_dbm);
    if !(config.sigma_d2_dbm.is_finite() && sigma_d2 > 0.0) {
        bad("sigma_d2_dbm", format!("downlink noise must be finite, got {}", config.sigma_d2_dbm));
    }
    if !(config.sigma_u2.is_finite() && config.sigma_u2 > 0.0) {
        bad("sigma_u2", format!("uplink noise variance must be positive, got {}", config.sigma_u2));
    }
    if !config.c0_db.is_finite() {
        bad("C0_db", "reference path loss must be finite".into());
    }
    if !config.alpha.is_finite() {
        bad("alpha", "path loss exponent must be finite".into());
    }
    let beta_cas = match path_loss_beta(config.c0_db, config.d_cas, config.d0, config.alpha) {
        Ok(beta) => {
            if !(beta.is_finite() && beta > 0.0) && config.c0_db.is_finite() && config.alpha.is_finite() {
                bad("d_cas", format!("cascaded gain {beta} is not a positive finite number"));
            }
            beta
        }
        Err(e) => {
            for violation in e.violations {
                bad(violation.field, violation.message);
            }
            f64::NAN
        }
    };

    if !v.is_empty() {
        return Err(ConfigError { violations: v });
    }

    Ok(DerivedParams {
        antennas: config.m,
        elements: config.n,
        pilots: b,
        coherence: config.coherence,
        beta_cas,
        sigma_bs2: phase_noise_variance(config.f_c, config.t_s, config.zeta_bs),
        sigma_ue2: phase_noise_variance(config.f_c, config.t_s, config.zeta_ue),
        tx_power,
        sigma_d2,
        sigma_u2: config.sigma_u2,
        pilot_times: (1..=b).collect(),
        seed: config.seed,
    })
}
