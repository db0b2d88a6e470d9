//! Time-domain reference for the narrowband spur formulas: the modulated
//! carrier is synthesized sample by sample in closed form and its sidebands
//! are read back with a DFT.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    RectangularCoherent,
    Hann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub sample_rate: f64,
    pub samples: usize,
    pub window: Window,
}

impl WaveformSpec {
    pub fn duration(&self) -> f64 {
        self.samples as f64 / self.sample_rate
    }

    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.samples as f64
    }

    /// Coherent record with bin spacing `resolution` and a sample rate of at
    /// least `min_rate`, rounded up to a whole number of bins.
    pub fn coherent(resolution: f64, min_rate: f64) -> Result<Self> {
        if !(resolution > 0.0) || !(min_rate > 0.0) {
            return Err(Error::Invalid(
                "resolution and sample rate must be > 0".into(),
            ));
        }
        let samples = (min_rate / resolution).ceil() as usize;
        Ok(WaveformSpec {
            sample_rate: samples as f64 * resolution,
            samples,
            window: Window::RectangularCoherent,
        })
    }

    fn bin_of(&self, f: f64) -> Option<usize> {
        let b = f / self.resolution();
        let r = b.round();
        ((b - r).abs() <= 1e-9 * b.max(1.0)).then_some(r as usize)
    }
}

/// One coupling path as seen by the oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OraclePath {
    pub h: Complex64,
    /// Hz/V
    pub k: f64,
    /// 1/V
    pub g_am: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulation {
    pub carrier_amplitude: f64,
    pub carrier_frequency: f64,
    pub noise_amplitude: f64,
    pub noise_frequency: f64,
}

fn cycle_phase(f: f64, k: usize, fs: f64) -> f64 {
    // Reduce f·t to [0, 1) before scaling so long records stay accurate.
    2.0 * PI * ((f / fs) * k as f64).fract()
}

/// Sampled v(t) = A_c(1 + Σ G_i|H_i|A cos(θ_i)) · cos(2π f_c t + Σ K_i|H_i|A/f_n · sin(θ_i))
/// with θ_i = 2π f_n t + ∠H_i.
pub fn synthesize(m: &Modulation, paths: &[OraclePath], spec: &WaveformSpec) -> Result<Vec<f64>> {
    if !(spec.sample_rate > 2.0 * (m.carrier_frequency + m.noise_frequency)) {
        return Err(Error::Invalid(format!(
            "sample rate {} Hz aliases the upper spur at {} Hz",
            spec.sample_rate,
            m.carrier_frequency + m.noise_frequency
        )));
    }
    if !(m.noise_frequency > 0.0) {
        return Err(Error::Invalid("noise frequency must be > 0".into()));
    }
    if spec.window == Window::RectangularCoherent {
        for f in [m.carrier_frequency, m.noise_frequency] {
            if spec.bin_of(f).is_none() {
                return Err(Error::Invalid(format!(
                    "{f} Hz is not a whole number of periods in a {} s record",
                    spec.duration()
                )));
            }
        }
    }
    let a = m.noise_amplitude;
    let fs = spec.sample_rate;
    Ok((0..spec.samples)
        .map(|k| {
            let tn = cycle_phase(m.noise_frequency, k, fs);
            let tc = cycle_phase(m.carrier_frequency, k, fs);
            let mut env = 1.0;
            let mut phase = tc;
            for p in paths {
                let th = tn + p.h.arg();
                env += p.g_am * p.h.norm() * a * th.cos();
                phase += p.k * p.h.norm() * a / m.noise_frequency * th.sin();
            }
            m.carrier_amplitude * env * phase.cos()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpurLines {
    pub upper: f64,
    pub lower: f64,
    pub carrier: f64,
}

pub fn spectrum(wave: &[f64], window: Window) -> Vec<Complex64> {
    let n = wave.len();
    let mut buf: Vec<Complex64> = wave
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let w = match window {
                Window::RectangularCoherent => 1.0,
                Window::Hann => 0.5 * (1.0 - (2.0 * PI * k as f64 / n as f64).cos()),
            };
            Complex64::new(v * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

/// Hann response at fractional bin offset d, normalized to 1 at d = 0.
fn hann_gain(d: f64) -> f64 {
    if d.abs() < 1e-12 {
        return 1.0;
    }
    if (d.abs() - 1.0).abs() < 1e-12 {
        return 0.5;
    }
    (PI * d).sin() / (PI * d * (1.0 - d * d))
}

/// Sinusoid amplitude at `f` read from a spectrum.
fn tone_amplitude(spec: &WaveformSpec, x: &[Complex64], f: f64) -> Result<f64> {
    let n = spec.samples as f64;
    match spec.window {
        Window::RectangularCoherent => {
            let b = spec
                .bin_of(f)
                .ok_or_else(|| Error::Invalid(format!("{f} Hz does not fall on a DFT bin")))?;
            Ok(2.0 * x[b].norm() / n)
        }
        Window::Hann => {
            let pos = f / spec.resolution();
            let b = pos.round() as usize;
            let d = pos - b as f64;
            Ok(2.0 * x[b].norm() / (0.5 * n * hann_gain(d).abs()))
        }
    }
}

pub fn extract_spurs(
    wave: &[f64],
    spec: &WaveformSpec,
    f_c: f64,
    f_noise: f64,
) -> Result<SpurLines> {
    if wave.len() != spec.samples {
        return Err(Error::Invalid(
            "waveform length does not match its spec".into(),
        ));
    }
    let x = spectrum(wave, spec.window);
    Ok(SpurLines {
        upper: tone_amplitude(spec, &x, f_c + f_noise)?,
        lower: tone_amplitude(spec, &x, f_c - f_noise)?,
        carrier: tone_amplitude(spec, &x, f_c)?,
    })
}

/// Bessel function of the first kind by its power series.
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let q = -half * half;
    for k in 1..200 {
        term *= q / (k as f64 * (k + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Exact FM line amplitude A_c·J_n(β) at f_c ± n·f_noise.
pub fn bessel_fm(a_c: f64, beta: f64, n: u32) -> f64 {
    a_c * bessel_j(n, beta)
}

pub fn write_waveform_csv<W: Write>(wave: &[f64], spec: &WaveformSpec, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(["t", "v"]).map_err(err)?;
    for (k, v) in wave.iter().enumerate() {
        w.write_record([(k as f64 / spec.sample_rate).to_string(), v.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    Ok(())
}
