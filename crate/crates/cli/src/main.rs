use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use subimpact::pipeline::{
    self, atomic_write, contributions, contributions_csv, oracle_check, oracle_csv, spurs_csv,
    to_json, totals_csv, transfer_csv, whatif_csv, ImpactSummary, Project, ProjectConfig,
    SweepSpec,
};
use subimpact::solver::{transfer_many, Probe, DEFAULT_POINTS_PER_DECADE};
use subimpact::units::Eng;
use subimpact::{Error, Result};

#[derive(Parser)]
#[command(
    name = "subimpact",
    version,
    about = "Substrate noise impact simulation for LC VCOs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build substrate, interconnect and circuit netlists and print a summary.
    Extract(Common),
    /// Transfer functions from the injection node to probe nodes.
    Transfer {
        #[command(flatten)]
        common: Common,
        /// Source node (the config's injection node by default).
        #[arg(long)]
        source: Option<String>,
        /// Probe node; all VCO entry nodes when omitted.
        #[arg(long)]
        target: Option<String>,
        /// Reference node for a differential probe.
        #[arg(long, requires = "target")]
        reference: Option<String>,
    },
    /// Spur sweep with mechanism classification.
    Impact(Common),
    /// Per-path contribution breakdown and crossover frequencies.
    Contrib(Common),
    /// Spur change after widening resizable ground wires.
    Whatif {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2.0)]
        factor: f64,
    },
    /// Compare the narrowband spur formulas with the time-domain oracle.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated modulation indices; an empty string selects no cases.
        #[arg(long)]
        betas: Option<String>,
        /// Comma-separated indices reported without pass/fail.
        #[arg(long)]
        informational: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    freq_start: Option<Eng>,
    #[arg(long)]
    freq_stop: Option<Eng>,
    #[arg(long)]
    points_per_decade: Option<usize>,
    #[arg(long)]
    noise_dbm: Option<f64>,
    /// Tuning voltage; repeat for several.
    #[arg(long = "vtune")]
    vtune: Vec<f64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

enum Failure {
    Run(Error),
    Tolerance(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Common {
    fn config(&self) -> Result<ProjectConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::Invalid("--config is required for this command".into()))?;
        let mut c = ProjectConfig::load(path)?;
        if self.freq_start.is_some() || self.freq_stop.is_some() || self.points_per_decade.is_some()
        {
            let (start, stop, ppd) = match &c.sweep {
                SweepSpec::Range {
                    start,
                    stop,
                    points_per_decade,
                } => (*start, *stop, *points_per_decade),
                SweepSpec::List { frequencies } => (
                    frequencies[0],
                    *frequencies.last().unwrap_or(&frequencies[0]),
                    DEFAULT_POINTS_PER_DECADE,
                ),
            };
            c.sweep = SweepSpec::Range {
                start: self.freq_start.unwrap_or(start),
                stop: self.freq_stop.unwrap_or(stop),
                points_per_decade: self.points_per_decade.unwrap_or(ppd),
            };
        }
        if let Some(n) = self.noise_dbm {
            c.noise_dbm = n;
        }
        if !self.vtune.is_empty() {
            c.v_tune = self.vtune.clone();
        }
        if let Some(o) = &self.out {
            c.output_dir = o.clone();
        }
        Ok(c)
    }

    fn project(&self) -> Result<Project> {
        Project::load(self.config()?)
    }
}

/// Files are only written once every result is in hand.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn write(self) -> Result<()> {
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            atomic_write(&path, bytes)?;
            info!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn vtune_tag(v: f64) -> String {
    format!("vtune{v}")
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<Eng>()
                .map(|e| e.0)
                .map_err(|e| Error::Invalid(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn cmd_extract(common: &Common) -> Result<()> {
    let cfg = common.config()?;
    let project = Project::load(cfg)?;
    let ex = pipeline::extract(&project.layout, &project.technology)?;
    let mut out = Outputs::new(&project.config.output_dir);
    out.add(
        "substrate.json",
        ex.substrate.netlist.to_json_string().into_bytes(),
    );
    out.add(
        "interconnect.json",
        ex.interconnect.netlist.to_json_string().into_bytes(),
    );
    out.add("circuit.json", ex.circuit.to_json_string().into_bytes());
    out.add("combined.json", ex.combined.to_json_string().into_bytes());
    let summary = ex.summary(project.vco.as_ref());
    out.add("summary.txt", summary.clone().into_bytes());
    out.write()?;
    print!("{summary}");
    Ok(())
}

fn cmd_transfer(
    common: &Common,
    source: Option<&str>,
    target: Option<&str>,
    reference: Option<&str>,
) -> Result<()> {
    let project = common.project()?;
    let freqs = project.config.sweep.frequencies()?;
    let source = source.unwrap_or(&project.config.injection_node);
    let probes = match target {
        Some(t) => vec![Probe {
            target: t.to_string(),
            reference: reference.map(str::to_string),
            path_label: None,
        }],
        None => pipeline::entry_probes(project.vco()?),
    };
    let ex = pipeline::extract(&project.layout, &project.technology)?;
    let tfs = transfer_many(&ex.combined, source, &probes, &freqs)?;
    let mut out = Outputs::new(&project.config.output_dir);
    for (tf, probe) in tfs.iter().zip(&probes) {
        let name = probe
            .path_label
            .clone()
            .unwrap_or_else(|| match &probe.reference {
                Some(r) => format!("{}-{}", probe.target, r),
                None => probe.target.clone(),
            });
        match common.format {
            Format::Csv => out.add(format!("transfer_{name}.csv"), transfer_csv(tf)?),
            Format::Json => out.add(format!("transfer_{name}.json"), to_json(tf)),
        }
        if let Some((f, h)) = tf.samples.first() {
            println!(
                "{name}: |H| = {:.3} dB at {f} Hz ({} points)",
                20.0 * h.norm().log10(),
                tf.samples.len()
            );
        }
    }
    out.write()
}

fn cmd_impact(common: &Common) -> Result<()> {
    let project = common.project()?;
    let run = pipeline::run_impact(&project)?;
    let mut out = Outputs::new(&project.config.output_dir);
    for sweep in &run.sweeps {
        let tag = vtune_tag(sweep.v_tune);
        let summary = ImpactSummary::new(sweep);
        match common.format {
            Format::Csv => {
                out.add(format!("spurs_{tag}.csv"), spurs_csv(sweep)?);
                out.add(format!("totals_{tag}.csv"), totals_csv(sweep)?);
            }
            Format::Json => out.add(format!("impact_{tag}.json"), to_json(&summary)),
        }
        println!(
            "V_tune = {} V, f_c = {:.6e} Hz",
            sweep.v_tune, summary.carrier_frequency
        );
        for (label, class) in &summary.classification {
            match class {
                Ok(c) => {
                    let names: Vec<String> = c.mechanisms.iter().map(|m| m.to_string()).collect();
                    println!(
                        "  {label}: {:.2} dB/decade -> {{{}}}",
                        c.slope_db_per_decade,
                        names.join(", ")
                    );
                }
                Err(e) => println!("  {label}: {e}"),
            }
        }
        let warned: Vec<&str> = sweep
            .reports
            .iter()
            .flat_map(|r| r.paths.iter().filter(|p| p.narrowband_warning))
            .map(|p| p.path_label.as_str())
            .collect();
        if !warned.is_empty() {
            println!(
                "  warning: modulation index >= 0.3 on {} path samples",
                warned.len()
            );
        }
    }
    out.write()
}

fn cmd_contrib(common: &Common) -> Result<()> {
    let project = common.project()?;
    let run = pipeline::run_impact(&project)?;
    let mut out = Outputs::new(&project.config.output_dir);
    for sweep in &run.sweeps {
        let tag = vtune_tag(sweep.v_tune);
        let c = contributions(sweep);
        match common.format {
            Format::Csv => out.add(format!("contributions_{tag}.csv"), contributions_csv(&c)?),
            Format::Json => out.add(format!("contributions_{tag}.json"), to_json(&c)),
        }
        println!("V_tune = {} V", sweep.v_tune);
        if let Some(d) = &c.dominant {
            println!("  dominant path: {d}");
        }
        for (label, x) in &c.crossovers {
            match x {
                Some(x) if x.extrapolated => println!(
                    "  crossover with {label}: {:.4e} Hz (extrapolated)",
                    x.frequency
                ),
                Some(x) => println!("  crossover with {label}: {:.4e} Hz", x.frequency),
                None => println!("  crossover with {label}: none"),
            }
        }
    }
    out.write()
}

fn cmd_whatif(common: &Common, factor: f64) -> Result<()> {
    let project = common.project()?;
    let w = pipeline::whatif(&project, factor)?;
    let mut out = Outputs::new(&project.config.output_dir);
    match common.format {
        Format::Csv => out.add("whatif.csv", whatif_csv(&w)?),
        Format::Json => out.add("whatif.json", to_json(&w)),
    }
    if !w.delta_db.is_empty() {
        let mean = w.delta_db.iter().map(|d| d.1).sum::<f64>() / w.delta_db.len() as f64;
        let (lo, hi) = w
            .delta_db
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, d| {
                (a.0.min(d.1), a.1.max(d.1))
            });
        println!("ground width x{factor}: mean delta {mean:.3} dB (range {lo:.3} .. {hi:.3} dB)");
    }
    out.write()
}

fn cmd_oracle(
    common: &Common,
    betas: Option<&str>,
    informational: Option<&str>,
) -> std::result::Result<(), Failure> {
    let config = common
        .config
        .as_ref()
        .map(|_| common.config())
        .transpose()?;
    let mut suite = config
        .as_ref()
        .map(|c| c.oracle.clone())
        .unwrap_or_default();
    if let Some(b) = betas {
        suite.betas = parse_list(b)?;
        suite.informational = Vec::new();
    }
    if let Some(i) = informational {
        suite.informational = parse_list(i)?;
    }
    let cases = oracle_check(&suite)?;
    println!(
        "{:<36} {:>14} {:>14} {:>10}  status",
        "case", "narrowband V", "oracle V", "error %"
    );
    for c in &cases {
        let status = if c.informational {
            "info"
        } else if c.pass {
            "pass"
        } else {
            "FAIL"
        };
        println!(
            "{:<36} {:>14.6e} {:>14.6e} {:>10.4}  {status}",
            c.case, c.narrowband, c.oracle, c.error_pct
        );
    }
    let dir = config
        .map(|c| c.output_dir)
        .or_else(|| common.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut out = Outputs::new(&dir);
    match common.format {
        Format::Csv => out.add("oracle.csv", oracle_csv(&cases)?),
        Format::Json => out.add("oracle.json", to_json(&cases)),
    }
    out.write()?;
    let failed: Vec<&str> = cases
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.case.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Tolerance(failed.join(", ")))
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match &cli.command {
        Command::Extract(c) => cmd_extract(c)?,
        Command::Transfer {
            common,
            source,
            target,
            reference,
        } => cmd_transfer(
            common,
            source.as_deref(),
            target.as_deref(),
            reference.as_deref(),
        )?,
        Command::Impact(c) => cmd_impact(c)?,
        Command::Contrib(c) => cmd_contrib(c)?,
        Command::Whatif { common, factor } => cmd_whatif(common, *factor)?,
        Command::OracleCheck {
            common,
            betas,
            informational,
        } => cmd_oracle(common, betas.as_deref(), informational.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver() { 2 } else { 1 })
        }
        Err(Failure::Tolerance(cases)) => {
            eprintln!("error: oracle tolerance exceeded: {cases}");
            ExitCode::from(3)
        }
    }
}
