//! Narrowband spur model: per-path FM and AM sidebands, their superposition
//! at f_c ± f_noise, mechanism classification and contribution breakdown.
//!
//! Sideband phasors are expressed against cos(2π(f_c ± f_noise)t). For a path
//! with transfer H, FM sensitivity K and AM gain G, and noise amplitude A:
//!
//! * AM: M = A_c·G·H·A/2 on both sidebands.
//! * FM: F = A_c·K·H·A/(2 f_noise) on the upper sideband and −F on the lower.
//!
//! so |upper| = |ΣM + ΣF| and |lower| = |ΣM − ΣF|.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::devices::{BiasTable, Varactor};
use crate::error::{Error, Result};
use crate::solver::TransferFunction;
use crate::units::Eng;

/// Step of the central difference used for K, volts.
pub const K_STEP: f64 = 1e-3;
/// Above this modulation index the narrowband formulas carry a warning.
pub const NARROWBAND_LIMIT: f64 = 0.3;
pub const REFERENCE_IMPEDANCE: f64 = 50.0;

/// Gain from a back-gate voltage to the tank control voltage: the back-gate
/// current g_mb·v_bs develops across the common-mode resistance `r_cm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgateGain {
    pub bias: Eng,
    pub r_cm: Eng,
}

/// One circuit entry point of substrate noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcoEntry {
    pub path_label: String,
    pub node: String,
    /// The entry voltage is v(node) - v(reference) when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Volts of tank control voltage per volt at the entry.
    #[serde(default = "unit")]
    pub control_gain: Eng,
    /// Replaces `control_gain` with g_mb(bias)·r_cm from the bias table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backgate: Option<BackgateGain>,
    /// AM gain G_AM, 1/V.
    #[serde(default)]
    pub am_gain: Eng,
}

fn unit() -> Eng {
    Eng(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcoModel {
    /// Carrier amplitude A_c, volts.
    pub amplitude: Eng,
    pub inductance: Eng,
    pub fixed_capacitance: Eng,
    pub varactor: Varactor,
    pub v_tune: Eng,
    /// Allowed control-voltage range for the sensitivity step.
    #[serde(default = "open_range")]
    pub tune_range: (Eng, Eng),
    pub entries: Vec<VcoEntry>,
}

fn open_range() -> (Eng, Eng) {
    (Eng(f64::NEG_INFINITY), Eng(f64::INFINITY))
}

impl VcoModel {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let m: VcoModel = crate::layout::load_json(path)?;
        m.validate().map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.0 >= 0.0)
            || !(self.inductance.0 > 0.0)
            || !(self.fixed_capacitance.0 >= 0.0)
        {
            return Err(Error::Invalid(
                "VCO needs amplitude >= 0, inductance > 0 and fixed capacitance >= 0".into(),
            ));
        }
        self.varactor.validate()?;
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.path_label.as_str()) {
                return Err(Error::Invalid(format!(
                    "duplicate VCO entry label {:?}",
                    e.path_label
                )));
            }
        }
        if self.tank_capacitance(self.v_tune.0) <= 0.0 {
            return Err(Error::Invalid(
                "tank capacitance must be positive at V_tune".into(),
            ));
        }
        Ok(())
    }

    pub fn tank_capacitance(&self, v: f64) -> f64 {
        self.varactor.capacitance(v) + self.fixed_capacitance.0
    }

    /// 1/(2π√(L·C_tank(v))).
    pub fn oscillation_frequency(&self, v: f64) -> f64 {
        1.0 / (2.0 * PI * (self.inductance.0 * self.tank_capacitance(v)).sqrt())
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.oscillation_frequency(self.v_tune.0)
    }

    pub fn with_v_tune(&self, v: f64) -> VcoModel {
        VcoModel {
            v_tune: Eng(v),
            ..self.clone()
        }
    }

    pub fn entry(&self, label: &str) -> Result<&VcoEntry> {
        self.entries
            .iter()
            .find(|e| e.path_label == label)
            .ok_or_else(|| Error::MissingTransfer(label.to_string()))
    }

    pub fn control_gain(&self, entry: &VcoEntry, table: &BiasTable) -> Result<f64> {
        match entry.backgate {
            Some(b) => Ok(table.mos_params(b.bias.0)?.0 * b.r_cm.0),
            None => Ok(entry.control_gain.0),
        }
    }

    /// Resolve every entry's K and G_AM at the current V_tune.
    pub fn sensitivities(&self, table: &BiasTable) -> Result<Vec<PathSensitivity>> {
        self.entries
            .iter()
            .map(|e| {
                Ok(PathSensitivity {
                    path_label: e.path_label.clone(),
                    k: sensitivity_k(self, &e.path_label, table)?,
                    g_am: e.am_gain.0,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSensitivity {
    pub path_label: String,
    /// Hz/V
    pub k: f64,
    /// 1/V
    pub g_am: f64,
}

/// FM sensitivity of one path: central difference of the oscillation
/// frequency with the control voltage stepped by ±gain·1 mV.
pub fn sensitivity_k(vco: &VcoModel, path_label: &str, table: &BiasTable) -> Result<f64> {
    let entry = vco.entry(path_label)?;
    let gain = vco.control_gain(entry, table)?;
    if gain == 0.0 {
        return Ok(0.0);
    }
    let v = vco.v_tune.0;
    let (lo, hi) = (vco.tune_range.0 .0, vco.tune_range.1 .0);
    let (a, b) = (v - gain.abs() * K_STEP, v + gain.abs() * K_STEP);
    if a < lo || b > hi {
        return Err(Error::OutOfRange {
            what: format!("control voltage step for {path_label}"),
            value: if a < lo { a } else { b },
            min: lo,
            max: hi,
        });
    }
    let df = vco.oscillation_frequency(b) - vco.oscillation_frequency(a);
    Ok(gain.signum() * df / (2.0 * K_STEP))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmSpur {
    /// Upper-sideband phasor, volts.
    pub phasor: Complex64,
    /// Modulation index |H|·A·K/f.
    pub beta: f64,
    pub narrowband_warning: bool,
}

pub fn fm_spur(a_c: f64, h: Complex64, a_noise: f64, k: f64, f_noise: f64) -> Result<FmSpur> {
    if !(f_noise > 0.0) || !f_noise.is_finite() {
        return Err(Error::Invalid(format!(
            "noise frequency must be > 0, got {f_noise}"
        )));
    }
    let beta = (h.norm() * a_noise * k / f_noise).abs();
    Ok(FmSpur {
        phasor: h * (a_c * a_noise * k / (2.0 * f_noise)),
        beta,
        narrowband_warning: beta >= NARROWBAND_LIMIT,
    })
}

pub fn am_spur(a_c: f64, h: Complex64, a_noise: f64, g_am: f64) -> Complex64 {
    h * (a_c * a_noise * g_am / 2.0)
}

/// Power in dBm of a sinusoid of amplitude `volts` into the reference load.
pub fn dbm(volts: f64) -> f64 {
    10.0 * (volts * volts / (2.0 * REFERENCE_IMPEDANCE) / 1e-3).log10()
}

/// Sinusoid amplitude delivering `dbm` into `impedance`.
pub fn amplitude_from_dbm(dbm: f64, impedance: f64) -> f64 {
    (2.0 * impedance * 1e-3 * 10f64.powf(dbm / 10.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSource {
    /// Volts.
    pub amplitude: f64,
    pub frequency: f64,
    pub injection_node: String,
    pub impedance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpur {
    pub path_label: String,
    pub h: Complex64,
    pub k: f64,
    pub g_am: f64,
    pub fm: Complex64,
    pub am: Complex64,
    pub beta: f64,
    pub narrowband_warning: bool,
}

impl PathSpur {
    /// Mean of the path's upper and lower sideband power, dBm.
    pub fn power_dbm(&self) -> f64 {
        dbm((self.fm.norm_sqr() + self.am.norm_sqr()).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpurReport {
    pub f_noise: f64,
    pub carrier_frequency: f64,
    pub noise_amplitude: f64,
    pub paths: Vec<PathSpur>,
    /// |ΣM + ΣF|, volts.
    pub upper: f64,
    /// |ΣM − ΣF|, volts.
    pub lower: f64,
}

impl SpurReport {
    pub fn upper_dbm(&self) -> f64 {
        dbm(self.upper)
    }

    pub fn lower_dbm(&self) -> f64 {
        dbm(self.lower)
    }

    /// Mean of upper and lower spur power, dBm.
    pub fn total_dbm(&self) -> f64 {
        dbm(((self.upper * self.upper + self.lower * self.lower) / 2.0).sqrt())
    }

    /// Upper minus lower, dB.
    pub fn asymmetry_db(&self) -> f64 {
        20.0 * (self.upper / self.lower).log10()
    }

    pub fn path(&self, label: &str) -> Option<&PathSpur> {
        self.paths.iter().find(|p| p.path_label == label)
    }
}

/// Superpose all paths at one noise frequency. `transfers` must hold one
/// function per sensitivity, matched by path label.
pub fn spur_report(
    a_c: f64,
    carrier_frequency: f64,
    sens: &[PathSensitivity],
    noise: &NoiseSource,
    transfers: &[TransferFunction],
) -> Result<SpurReport> {
    let f = noise.frequency;
    let mut paths = Vec::with_capacity(sens.len());
    let (mut sum_m, mut sum_f) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for s in sens {
        let tf = transfers
            .iter()
            .find(|t| t.path_label.as_deref() == Some(s.path_label.as_str()))
            .ok_or_else(|| Error::MissingTransfer(s.path_label.clone()))?;
        let h = tf.at(f)?;
        let fm = fm_spur(a_c, h, noise.amplitude, s.k, f)?;
        let am = am_spur(a_c, h, noise.amplitude, s.g_am);
        sum_m += am;
        sum_f += fm.phasor;
        paths.push(PathSpur {
            path_label: s.path_label.clone(),
            h,
            k: s.k,
            g_am: s.g_am,
            fm: fm.phasor,
            am,
            beta: fm.beta,
            narrowband_warning: fm.narrowband_warning,
        });
    }
    Ok(SpurReport {
        f_noise: f,
        carrier_frequency,
        noise_amplitude: noise.amplitude,
        paths,
        upper: (sum_m + sum_f).norm(),
        lower: (sum_m - sum_f).norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mechanism {
    #[serde(rename = "resistive-FM")]
    ResistiveFm,
    #[serde(rename = "resistive-AM")]
    ResistiveAm,
    #[serde(rename = "capacitive-FM")]
    CapacitiveFm,
    #[serde(rename = "capacitive-AM")]
    CapacitiveAm,
    #[serde(rename = "mixed")]
    Mixed,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mechanism::ResistiveFm => "resistive-FM",
            Mechanism::ResistiveAm => "resistive-AM",
            Mechanism::CapacitiveFm => "capacitive-FM",
            Mechanism::CapacitiveAm => "capacitive-AM",
            Mechanism::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub slope_db_per_decade: f64,
    pub mechanisms: BTreeSet<Mechanism>,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.mechanisms.iter().map(|m| m.to_string()).collect();
        write!(
            f,
            "{{{}}} ({:+.2} dB/dec)",
            names.join(", "),
            self.slope_db_per_decade
        )
    }
}

/// Half-width of each slope window, dB/decade.
pub const SLOPE_WINDOW: f64 = 3.0;

/// Least-squares slope of power versus log10 frequency.
pub fn slope_db_per_decade(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.log10()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxy: f64 = xs
        .iter()
        .zip(samples)
        .map(|(x, s)| (x - mx) * (s.1 - my))
        .sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn classify_mechanism(samples: &[(f64, f64)]) -> Result<Classification> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSpan(format!(
            "{} samples, need at least 3",
            samples.len()
        )));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    if !(lo > 0.0) || hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(Error::InsufficientSpan(format!(
            "samples span {lo} to {hi} Hz, need at least one decade"
        )));
    }
    let slope = slope_db_per_decade(samples);
    let near = |c: f64| (slope - c).abs() <= SLOPE_WINDOW;
    let mechanisms = if near(-20.0) {
        [Mechanism::ResistiveFm].into()
    } else if near(0.0) {
        [Mechanism::ResistiveAm, Mechanism::CapacitiveFm].into()
    } else if near(20.0) {
        [Mechanism::CapacitiveAm].into()
    } else {
        [Mechanism::Mixed].into()
    };
    Ok(Classification {
        slope_db_per_decade: slope,
        mechanisms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub path_label: String,
    pub power_dbm: f64,
    /// Path power over total power; can exceed 1 when paths interfere
    /// destructively.
    pub share: f64,
    pub exceeds_total: bool,
}

/// Paths ordered by descending power with their share of the total.
pub fn contribution_breakdown(report: &SpurReport) -> Vec<Contribution> {
    let total = (report.upper * report.upper + report.lower * report.lower) / 2.0;
    let mut out: Vec<Contribution> = report
        .paths
        .iter()
        .map(|p| {
            let power = p.fm.norm_sqr() + p.am.norm_sqr();
            let share = if total > 0.0 { power / total } else { 0.0 };
            Contribution {
                path_label: p.path_label.clone(),
                power_dbm: p.power_dbm(),
                share,
                exceeds_total: share > 1.0 + 1e-12,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.power_dbm
            .total_cmp(&a.power_dbm)
            .then(a.path_label.cmp(&b.path_label))
    });
    out
}

/// Spur reports over a noise-frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub v_tune: f64,
    pub reports: Vec<SpurReport>,
}

impl SweepReport {
    pub fn labels(&self) -> Vec<String> {
        self.reports
            .first()
            .map(|r| r.paths.iter().map(|p| p.path_label.clone()).collect())
            .unwrap_or_default()
    }

    pub fn total_series(&self) -> Vec<(f64, f64)> {
        self.reports
            .iter()
            .map(|r| (r.f_noise, r.total_dbm()))
            .collect()
    }

    pub fn path_series(&self, label: &str) -> Vec<(f64, f64)> {
        self.reports
            .iter()
            .filter_map(|r| r.path(label).map(|p| (r.f_noise, p.power_dbm())))
            .collect()
    }

    /// Classification per path label and for the total (key "total");
    /// errors (e.g. insufficient span) are kept as messages.
    pub fn classify(&self) -> BTreeMap<String, std::result::Result<Classification, String>> {
        let mut out = BTreeMap::new();
        for label in self.labels() {
            out.insert(
                label.clone(),
                classify_mechanism(&self.path_series(&label)).map_err(|e| e.to_string()),
            );
        }
        out.insert(
            "total".into(),
            classify_mechanism(&self.total_series()).map_err(|e| e.to_string()),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossover {
    pub frequency: f64,
    /// True when the curves do not cross inside the sweep and the crossing
    /// comes from extending their fitted power laws.
    pub extrapolated: bool,
}

/// Frequency where path `a` and path `b` carry equal power.
pub fn crossover(sweep: &SweepReport, a: &str, b: &str) -> Option<Crossover> {
    let pa = sweep.path_series(a);
    let pb = sweep.path_series(b);
    if pa.len() != pb.len() || pa.len() < 2 {
        return None;
    }
    let d: Vec<(f64, f64)> = pa.iter().zip(&pb).map(|(x, y)| (x.0, x.1 - y.1)).collect();
    if !d.iter().all(|x| x.1.is_finite()) {
        return None;
    }
    if let Some(z) = d.iter().find(|x| x.1 == 0.0) {
        return Some(Crossover {
            frequency: z.0,
            extrapolated: false,
        });
    }
    for w in d.windows(2) {
        if w[0].1.signum() != w[1].1.signum() {
            let t = w[0].1 / (w[0].1 - w[1].1);
            let lf = w[0].0.log10() + t * (w[1].0.log10() - w[0].0.log10());
            return Some(Crossover {
                frequency: 10f64.powf(lf),
                extrapolated: false,
            });
        }
    }
    // Fit d = s·log10 f + c and solve for zero.
    let s = slope_db_per_decade(&d);
    if !s.is_finite() || s.abs() < 1e-9 {
        return None;
    }
    let n = d.len() as f64;
    let mx = d.iter().map(|x| x.0.log10()).sum::<f64>() / n;
    let my = d.iter().map(|x| x.1).sum::<f64>() / n;
    Some(Crossover {
        frequency: 10f64.powf(mx - my / s),
        extrapolated: true,
    })
}
