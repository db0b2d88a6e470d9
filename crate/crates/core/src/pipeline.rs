//! End-to-end flow: layout → substrate mesh + interconnect + circuit →
//! entry transfer functions → spur reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impact::{
    self, amplitude_from_dbm, contribution_breakdown, crossover, Classification, Contribution,
    Crossover, NoiseSource, SpurReport, SweepReport, VcoModel,
};
use crate::interconnect::{extract_interconnect, scale_ground_width, InterconnectNetlist};
use crate::layout::{load_json, Layout, Technology};
use crate::mesh::{build_mesh, reduce_to_ports};
use crate::netlist::{ElementKind, Netlist};
use crate::oracle::{self, Modulation, OraclePath, WaveformSpec};
use crate::solver::{log_sweep, transfer_many, Probe, TransferFunction, DEFAULT_POINTS_PER_DECADE};
use crate::units::Eng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SweepSpec {
    List {
        frequencies: Vec<Eng>,
    },
    Range {
        start: Eng,
        stop: Eng,
        #[serde(default = "default_ppd")]
        points_per_decade: usize,
    },
}

fn default_ppd() -> usize {
    DEFAULT_POINTS_PER_DECADE
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec::Range {
            start: Eng(100e3),
            stop: Eng(15e6),
            points_per_decade: DEFAULT_POINTS_PER_DECADE,
        }
    }
}

impl SweepSpec {
    pub fn frequencies(&self) -> Result<Vec<f64>> {
        match self {
            SweepSpec::List { frequencies } => {
                if frequencies.is_empty() {
                    return Err(Error::Invalid("sweep frequency list is empty".into()));
                }
                let f: Vec<f64> = frequencies.iter().map(|e| e.0).collect();
                if f.iter().any(|x| !(*x > 0.0)) || f.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Invalid(
                        "sweep frequencies must be > 0 and strictly increasing".into(),
                    ));
                }
                Ok(f)
            }
            SweepSpec::Range {
                start,
                stop,
                points_per_decade,
            } => log_sweep(start.0, stop.0, *points_per_decade),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSuite {
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    /// Cases beyond the narrowband regime, reported but never failing.
    #[serde(default = "default_informational")]
    pub informational: Vec<f64>,
}

fn default_betas() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

fn default_informational() -> Vec<f64> {
    vec![0.5]
}

impl Default for OracleSuite {
    fn default() -> Self {
        OracleSuite {
            betas: default_betas(),
            informational: default_informational(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub layout: PathBuf,
    pub technology: PathBuf,
    /// Oscillator model; needed by the impact, contrib and what-if flows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vco: Option<PathBuf>,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default = "default_noise_dbm")]
    pub noise_dbm: f64,
    #[serde(default = "default_impedance")]
    pub source_impedance: f64,
    #[serde(default = "default_injection")]
    pub injection_node: String,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
    /// Tuning voltages to report; the VCO file's V_tune when empty.
    #[serde(default)]
    pub v_tune: Vec<f64>,
    #[serde(default)]
    pub oracle: OracleSuite,
}

fn default_noise_dbm() -> f64 {
    -5.0
}

fn default_impedance() -> f64 {
    50.0
}

fn default_injection() -> String {
    "SUB".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ProjectConfig {
    /// Load a config; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut c: ProjectConfig = load_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.layout, &mut c.technology, &mut c.output_dir]
            .into_iter()
            .chain(c.vco.as_mut())
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn noise_amplitude(&self) -> f64 {
        amplitude_from_dbm(self.noise_dbm, self.source_impedance)
    }
}

/// Parsed inputs of one project.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
    pub layout: Layout,
    pub technology: Technology,
    pub vco: Option<VcoModel>,
}

impl Project {
    pub fn load(config: ProjectConfig) -> Result<Self> {
        let layout = Layout::load(&config.layout)?;
        let technology = Technology::load(&config.technology)?;
        let vco = config.vco.as_deref().map(VcoModel::load).transpose()?;
        config.sweep.frequencies()?;
        Ok(Project {
            config,
            layout,
            technology,
            vco,
        })
    }

    pub fn vco(&self) -> Result<&VcoModel> {
        self.vco
            .as_ref()
            .ok_or_else(|| Error::Invalid("the project config names no vco file".into()))
    }

    pub fn noise(&self, frequency: f64) -> NoiseSource {
        NoiseSource {
            amplitude: self.config.noise_amplitude(),
            frequency,
            injection_node: self.config.injection_node.clone(),
            impedance: self.config.source_impedance,
        }
    }

    pub fn v_tunes(&self) -> Result<Vec<f64>> {
        Ok(if self.config.v_tune.is_empty() {
            vec![self.vco()?.v_tune.0]
        } else {
            self.config.v_tune.clone()
        })
    }
}

/// Substrate macro-model at unit conductance scale.
#[derive(Debug, Clone)]
pub struct SubstrateModel {
    pub cells: usize,
    pub ports: Vec<String>,
    /// Reduced onto `ports`, or the full mesh when the layout has no ports.
    pub netlist: Netlist,
}

pub fn extract_substrate(layout: &Layout) -> Result<SubstrateModel> {
    let mesh = build_mesh(
        &layout.stack,
        &layout.features,
        &layout.die,
        &layout.mesh,
        &layout.ground,
    )?;
    let cells = mesh.cell_count();
    let netlist = if mesh.ports.is_empty() {
        mesh.netlist
    } else {
        let mut ports: Vec<&str> = mesh.ports.iter().map(String::as_str).collect();
        ports.push(&layout.ground);
        reduce_to_ports(&mesh.netlist, &ports)?
    };
    Ok(SubstrateModel {
        cells,
        ports: mesh.ports,
        netlist,
    })
}

/// Copy of `net` with every resistor divided by `scale` (conductances
/// multiplied by it).
pub fn scale_conductances(net: &Netlist, scale: f64) -> Netlist {
    let mut out = net.clone();
    for e in out.elements_mut() {
        if let ElementKind::Resistor { ohms } = &mut e.kind {
            *ohms /= scale;
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub substrate: SubstrateModel,
    pub interconnect: InterconnectNetlist,
    pub circuit: Netlist,
    /// Substrate, wires, stubs and circuit on shared nets.
    pub combined: Netlist,
}

impl Extraction {
    pub fn total_ground_resistance(&self) -> f64 {
        self.interconnect
            .ground_resistance
            .iter()
            .map(|r| r.1)
            .sum()
    }

    pub fn summary(&self, vco: Option<&VcoModel>) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "substrate: {} cells reduced to {} ports ({})",
            self.substrate.cells,
            self.substrate.ports.len(),
            self.substrate.netlist
        );
        let _ = writeln!(
            s,
            "interconnect: {} elements, {} zero-length runs skipped",
            self.interconnect.netlist.elements().len(),
            self.interconnect.skipped_runs
        );
        let _ = writeln!(s, "circuit: {}", self.circuit);
        let _ = writeln!(s, "combined: {}", self.combined);
        let _ = writeln!(
            s,
            "total ground-path resistance: {:.6} ohm",
            self.total_ground_resistance()
        );
        for (label, count) in self.combined.count_by_label() {
            let _ = writeln!(s, "  elements labeled {label}: {count}");
        }
        if let Some(vco) = vco {
            let _ = writeln!(s, "coupling paths:");
            for e in &vco.entries {
                match &e.reference {
                    Some(r) => {
                        let _ = writeln!(s, "  {} at {} - {}", e.path_label, e.node, r);
                    }
                    None => {
                        let _ = writeln!(s, "  {} at {}", e.path_label, e.node);
                    }
                }
            }
        }
        s
    }
}

/// Wires, stubs and circuit around an already extracted substrate.
pub fn assemble(
    layout: &Layout,
    tech: &Technology,
    substrate: &SubstrateModel,
) -> Result<Extraction> {
    let scale = tech.mesh_conductance_scale.0;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Invalid(format!(
            "mesh conductance scale must be > 0, got {scale}"
        )));
    }
    let interconnect = extract_interconnect(layout, tech)?;
    let mut circuit = layout.circuit_file().into_netlist()?;
    for stub in &layout.stubs {
        stub.stamp_into(&mut circuit)?;
    }
    let mut combined = Netlist::new(&layout.ground);
    combined.merge(&scale_conductances(&substrate.netlist, scale))?;
    combined.merge(&interconnect.netlist)?;
    combined.merge(&circuit)?;
    Ok(Extraction {
        substrate: substrate.clone(),
        interconnect,
        circuit,
        combined,
    })
}

pub fn extract(layout: &Layout, tech: &Technology) -> Result<Extraction> {
    assemble(layout, tech, &extract_substrate(layout)?)
}

pub fn entry_probes(vco: &VcoModel) -> Vec<Probe> {
    vco.entries
        .iter()
        .map(|e| Probe {
            target: e.node.clone(),
            reference: e.reference.clone(),
            path_label: Some(e.path_label.clone()),
        })
        .collect()
}

pub fn entry_transfers(
    net: &Netlist,
    injection: &str,
    vco: &VcoModel,
    freqs: &[f64],
) -> Result<Vec<TransferFunction>> {
    transfer_many(net, injection, &entry_probes(vco), freqs)
}

/// Spur reports over `freqs` from precomputed entry transfers.
pub fn sweep_from_transfers(
    vco: &VcoModel,
    tech: &Technology,
    noise_amplitude: f64,
    injection: &str,
    transfers: &[TransferFunction],
    freqs: &[f64],
) -> Result<SweepReport> {
    let sens = vco.sensitivities(&tech.bias_table)?;
    let a_c = vco.amplitude.0;
    let f_c = vco.carrier_frequency();
    let reports = crate::solver::first_error(
        freqs
            .par_iter()
            .map(|&f| {
                let noise = NoiseSource {
                    amplitude: noise_amplitude,
                    frequency: f,
                    injection_node: injection.to_string(),
                    impedance: impact::REFERENCE_IMPEDANCE,
                };
                impact::spur_report(a_c, f_c, &sens, &noise, transfers)
            })
            .collect(),
    )?;
    Ok(SweepReport {
        v_tune: vco.v_tune.0,
        reports,
    })
}

#[derive(Debug, Clone)]
pub struct ImpactRun {
    pub extraction: Extraction,
    pub transfers: Vec<TransferFunction>,
    pub sweeps: Vec<SweepReport>,
}

pub fn run_impact(project: &Project) -> Result<ImpactRun> {
    let vco = project.vco()?;
    let freqs = project.config.sweep.frequencies()?;
    let extraction = extract(&project.layout, &project.technology)?;
    let transfers = entry_transfers(
        &extraction.combined,
        &project.config.injection_node,
        vco,
        &freqs,
    )?;
    let sweeps = project
        .v_tunes()?
        .iter()
        .map(|&v| {
            sweep_from_transfers(
                &vco.with_v_tune(v),
                &project.technology,
                project.config.noise_amplitude(),
                &project.config.injection_node,
                &transfers,
                &freqs,
            )
        })
        .collect::<Result<_>>()?;
    Ok(ImpactRun {
        extraction,
        transfers,
        sweeps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIf {
    pub factor: f64,
    pub before: SweepReport,
    pub after: SweepReport,
    /// (f_noise, total after − total before in dB)
    pub delta_db: Vec<(f64, f64)>,
}

/// Re-extract and re-solve with ground wires widened by `factor`.
pub fn whatif(project: &Project, factor: f64) -> Result<WhatIf> {
    let vco = project.vco()?;
    let v = project.v_tunes()?[0];
    let freqs = project.config.sweep.frequencies()?;
    let run = |layout: &Layout| -> Result<SweepReport> {
        let ex = extract(layout, &project.technology)?;
        let tf = entry_transfers(&ex.combined, &project.config.injection_node, vco, &freqs)?;
        sweep_from_transfers(
            &vco.with_v_tune(v),
            &project.technology,
            project.config.noise_amplitude(),
            &project.config.injection_node,
            &tf,
            &freqs,
        )
    };
    let before = run(&project.layout)?;
    let after = run(&scale_ground_width(&project.layout, factor)?)?;
    let delta_db = before
        .reports
        .iter()
        .zip(&after.reports)
        .map(|(b, a)| (b.f_noise, a.total_dbm() - b.total_dbm()))
        .collect();
    Ok(WhatIf {
        factor,
        before,
        after,
        delta_db,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCase {
    pub case: String,
    pub beta: f64,
    pub narrowband: f64,
    pub oracle: f64,
    pub bessel: f64,
    pub error_pct: f64,
    pub tolerance_pct: f64,
    pub informational: bool,
    pub pass: bool,
}

/// Allowed narrowband error versus the exact spectrum at modulation index β.
pub fn narrowband_tolerance_pct(beta: f64) -> Option<f64> {
    if beta <= 0.1 {
        Some(1.0)
    } else if beta <= 0.3 {
        Some(5.0)
    } else {
        None
    }
}

/// One single-path FM case: narrowband amplitude versus the DFT
/// of the synthesized waveform.
pub fn oracle_case(beta: f64, informational: bool) -> Result<OracleCase> {
    let (a_c, a_noise, f_n, f_c) = (1.0, 0.01, 1e6, 64e6);
    let h = Complex64::new(1.0, 0.0);
    let k = beta * f_n / a_noise;
    let nb = impact::fm_spur(a_c, h, a_noise, k, f_n)?.phasor.norm();
    let spec = WaveformSpec::coherent(f_n, 256e6)?;
    let m = Modulation {
        carrier_amplitude: a_c,
        carrier_frequency: f_c,
        noise_amplitude: a_noise,
        noise_frequency: f_n,
    };
    let wave = oracle::synthesize(&m, &[OraclePath { h, k, g_am: 0.0 }], &spec)?;
    let lines = oracle::extract_spurs(&wave, &spec, f_c, f_n)?;
    let error_pct = (nb - lines.upper) / lines.upper * 100.0;
    let tol = narrowband_tolerance_pct(beta);
    let informational = informational || tol.is_none();
    Ok(OracleCase {
        case: if informational {
            format!("fm beta={beta} (expected divergence)")
        } else {
            format!("fm beta={beta}")
        },
        beta,
        narrowband: nb,
        oracle: lines.upper,
        bessel: oracle::bessel_fm(a_c, beta, 1),
        error_pct,
        tolerance_pct: tol.unwrap_or(f64::INFINITY),
        informational,
        pass: informational || error_pct.abs() <= tol.unwrap_or(f64::INFINITY),
    })
}

pub fn oracle_check(suite: &OracleSuite) -> Result<Vec<OracleCase>> {
    let mut out = Vec::new();
    for &b in &suite.betas {
        out.push(oracle_case(b, false)?);
    }
    for &b in &suite.informational {
        out.push(oracle_case(b, true)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Calibration

/// Find x in [lo, hi] with g(x) = target for monotone g, bisecting in log x.
pub fn solve_monotone(
    g: impl Fn(f64) -> Result<f64>,
    target: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (lo.ln(), hi.ln());
    let ga = g(lo)? - target;
    let gb = g(hi)? - target;
    if ga.signum() == gb.signum() {
        return Err(Error::Invalid(format!(
            "calibration target {target} is not bracketed by [{lo}, {hi}]"
        )));
    }
    let rising = gb > ga;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let gm = g(m.exp())? - target;
        if (gm > 0.0) == rising {
            b = m;
        } else {
            a = m;
        }
        if b - a < rel_tol {
            break;
        }
    }
    Ok((0.5 * (a + b)).exp())
}

/// Mesh conductance scale that makes |v(target)/v(source)| equal `ratio` at
/// `frequency`. The substrate is reduced once; the scale then acts on the
/// reduced conductances exactly.
pub fn calibrate_mesh_scale(
    layout: &Layout,
    tech: &Technology,
    source: &str,
    target: &str,
    frequency: f64,
    ratio: f64,
) -> Result<f64> {
    let sub = extract_substrate(layout)?;
    let g = |s: f64| -> Result<f64> {
        let mut t = tech.clone();
        t.mesh_conductance_scale = Eng(s);
        let ex = assemble(layout, &t, &sub)?;
        Ok(
            crate::solver::transfer(&ex.combined, source, target, &[frequency])?.samples[0]
                .1
                .norm(),
        )
    };
    solve_monotone(g, ratio, 1e-3, 1e3, 1e-9)
}

// ---------------------------------------------------------------------------
// Output

/// Write `bytes` to `path` through a temporary file and rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

/// Rows: f_noise_hz, path_label, fm_dbm, am_dbm, upper_total_dbm, lower_total_dbm.
pub fn spurs_csv(sweep: &SweepReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record([
        "f_noise_hz",
        "path_label",
        "fm_dbm",
        "am_dbm",
        "upper_total_dbm",
        "lower_total_dbm",
    ])
    .map_err(err)?;
    for r in &sweep.reports {
        for p in &r.paths {
            w.write_record([
                r.f_noise.to_string(),
                p.path_label.clone(),
                impact::dbm(p.fm.norm()).to_string(),
                impact::dbm(p.am.norm()).to_string(),
                r.upper_dbm().to_string(),
                r.lower_dbm().to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

/// One row per frequency: f_noise_hz, total_dbm, upper_dbm, lower_dbm.
pub fn totals_csv(sweep: &SweepReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(["f_noise_hz", "total_dbm", "upper_dbm", "lower_dbm"])
        .map_err(err)?;
    for r in &sweep.reports {
        w.write_record([
            r.f_noise.to_string(),
            r.total_dbm().to_string(),
            r.upper_dbm().to_string(),
            r.lower_dbm().to_string(),
        ])
        .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactSummary {
    pub v_tune: f64,
    pub carrier_frequency: f64,
    pub classification: BTreeMap<String, std::result::Result<Classification, String>>,
    pub reports: Vec<SpurReport>,
}

impl ImpactSummary {
    pub fn new(sweep: &SweepReport) -> Self {
        ImpactSummary {
            v_tune: sweep.v_tune,
            carrier_frequency: sweep
                .reports
                .first()
                .map(|r| r.carrier_frequency)
                .unwrap_or(f64::NAN),
            classification: sweep.classify(),
            reports: sweep.reports.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionRow {
    pub f_noise: f64,
    pub contributions: Vec<Contribution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionSummary {
    pub v_tune: f64,
    pub rows: Vec<ContributionRow>,
    /// Crossover of each path with the path dominant at the lowest frequency.
    pub crossovers: BTreeMap<String, Option<Crossover>>,
    pub dominant: Option<String>,
}

pub fn contributions(sweep: &SweepReport) -> ContributionSummary {
    let rows: Vec<ContributionRow> = sweep
        .reports
        .iter()
        .map(|r| ContributionRow {
            f_noise: r.f_noise,
            contributions: contribution_breakdown(r),
        })
        .collect();
    let dominant = rows
        .first()
        .and_then(|r| r.contributions.first())
        .map(|c| c.path_label.clone());
    let mut crossovers = BTreeMap::new();
    if let Some(d) = &dominant {
        for label in sweep.labels() {
            if &label != d {
                crossovers.insert(label.clone(), crossover(sweep, d, &label));
            }
        }
    }
    ContributionSummary {
        v_tune: sweep.v_tune,
        rows,
        crossovers,
        dominant,
    }
}

/// Rows: f_noise_hz, path_label, power_dbm, share, exceeds_total.
pub fn contributions_csv(summary: &ContributionSummary) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record([
        "f_noise_hz",
        "path_label",
        "power_dbm",
        "share",
        "exceeds_total",
    ])
    .map_err(err)?;
    for row in &summary.rows {
        for c in &row.contributions {
            w.write_record([
                row.f_noise.to_string(),
                c.path_label.clone(),
                c.power_dbm.to_string(),
                c.share.to_string(),
                c.exceeds_total.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn whatif_csv(w: &WhatIf) -> Result<Vec<u8>> {
    let mut out = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    out.write_record(["f_noise_hz", "before_dbm", "after_dbm", "delta_db"])
        .map_err(err)?;
    for ((b, a), d) in w
        .before
        .reports
        .iter()
        .zip(&w.after.reports)
        .zip(&w.delta_db)
    {
        out.write_record([
            b.f_noise.to_string(),
            b.total_dbm().to_string(),
            a.total_dbm().to_string(),
            d.1.to_string(),
        ])
        .map_err(err)?;
    }
    out.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn oracle_csv(cases: &[OracleCase]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
    w.write_record(["case", "narrowband_v", "oracle_v", "error_pct", "status"])
        .map_err(err)?;
    for c in cases {
        w.write_record([
            c.case.clone(),
            c.narrowband.to_string(),
            c.oracle.to_string(),
            c.error_pct.to_string(),
            if c.informational {
                "info".to_string()
            } else if c.pass {
                "pass".to_string()
            } else {
                "FAIL".to_string()
            },
        ])
        .map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn transfer_csv(tf: &TransferFunction) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    tf.write_csv(&mut buf)?;
    Ok(buf)
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec_forms() {
        let s: SweepSpec = serde_json::from_str(r#"{"start": "100k", "stop": "15meg"}"#).unwrap();
        assert_eq!(s.frequencies().unwrap().len(), 45);
        let s: SweepSpec = serde_json::from_str(r#"{"frequencies": ["1meg", "2meg"]}"#).unwrap();
        assert_eq!(s.frequencies().unwrap(), vec![1e6, 2e6]);
        let s: SweepSpec = serde_json::from_str(r#"{"frequencies": []}"#).unwrap();
        assert!(s.frequencies().is_err());
    }

    #[test]
    fn monotone_solver_finds_root() {
        let x = solve_monotone(|x| Ok(x * x), 9.0, 0.1, 100.0, 1e-12).unwrap();
        assert!((x - 3.0).abs() < 1e-9);
        let y = solve_monotone(|x| Ok(1.0 / x), 0.5, 0.1, 100.0, 1e-12).unwrap();
        assert!((y - 2.0).abs() < 1e-9);
        assert!(solve_monotone(|x| Ok(x), 1e6, 0.1, 100.0, 1e-9).is_err());
    }

    #[test]
    fn oracle_suite_passes() {
        let cases = oracle_check(&OracleSuite::default()).unwrap();
        assert_eq!(cases.len(), 4);
        assert!(cases.iter().all(|c| c.pass));
        assert!(cases[3].informational);
        assert!(oracle_check(&OracleSuite {
            betas: vec![],
            informational: vec![]
        })
        .unwrap()
        .is_empty());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = std::env::temp_dir().join(format!("subimpact-aw-{}", std::process::id()));
        let p = dir.join("x.csv");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
