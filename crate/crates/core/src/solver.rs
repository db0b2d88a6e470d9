//! AC small-signal solves and substrate-to-node transfer functions.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mna::{stamp_with, MnaSystem, StampOptions, Unknown};
use crate::netlist::{ElementKind, Netlist, NodeId, NodeKind};
use crate::sparse::{Factorization, ZeroPivot};

/// Residual target for every solve, relative to the excitation norm.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct AcSolution {
    pub frequency: f64,
    /// Indexed by `NodeId`; ground is zero.
    voltages: Vec<Complex64>,
    /// Relative residual |b - Ax| / |b| after refinement.
    pub residual: f64,
}

impl AcSolution {
    pub fn voltage(&self, node: NodeId) -> Complex64 {
        self.voltages[node.0]
    }

    pub fn voltages(&self) -> &[Complex64] {
        &self.voltages
    }

    pub fn by_name(&self, net: &Netlist) -> std::collections::BTreeMap<String, Complex64> {
        net.nodes()
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.clone(), self.voltages[i]))
            .collect()
    }
}

fn suspect_nodes(net: &Netlist, sys: &MnaSystem, pivot: ZeroPivot) -> Vec<String> {
    match sys.unknowns[pivot.position] {
        Unknown::Voltage(n) => vec![net.node_name(n).to_string()],
        Unknown::Branch(k) => {
            let expanded;
            let net = if net.devices().is_empty() {
                net
            } else {
                expanded = net.expand_devices();
                &expanded
            };
            let e = &net.elements()[k];
            let mut names: Vec<String> = e
                .nodes
                .iter()
                .map(|&n| net.node_name(n).to_string())
                .collect();
            names.insert(0, format!("branch of {}", e.name));
            names
        }
    }
}

/// Solve the stamped system of a netlist that already carries its AC
/// excitation (one or more sources flagged `ac`).
pub fn ac_solve(net: &Netlist, frequency: f64) -> Result<AcSolution> {
    ac_solve_with(net, frequency, StampOptions::default())
}

pub fn ac_solve_with(net: &Netlist, frequency: f64, options: StampOptions) -> Result<AcSolution> {
    let sys = stamp_with(net, frequency, options)?;
    if sys.rhs.iter().all(|b| *b == Complex64::new(0.0, 0.0)) {
        return Err(Error::Invalid("netlist has no AC excitation".into()));
    }
    let lu = Factorization::new(&sys.matrix).map_err(|p| Error::Singular {
        nodes: suspect_nodes(net, &sys, p),
    })?;
    let (x, residual) = lu.solve_refined(&sys.matrix, &sys.rhs, 1e-13);
    if !residual.is_finite() || x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular {
            nodes: vec!["(non-finite solution)".into()],
        });
    }
    let mut voltages = vec![Complex64::new(0.0, 0.0); net.node_count()];
    for (k, u) in sys.unknowns.iter().enumerate() {
        if let Unknown::Voltage(n) = u {
            voltages[n.0] = x[k];
        }
    }
    Ok(AcSolution {
        frequency,
        voltages,
        residual,
    })
}

/// Sampled complex response from an injection node to a target node (or to
/// the difference `target - reference`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferFunction {
    pub source_node: String,
    pub target_node: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_label: Option<String>,
    pub samples: Vec<(f64, Complex64)>,
}

impl TransferFunction {
    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.0)
    }

    /// Value at `f`: exact on grid points, otherwise interpolated linearly in
    /// log-frequency on log-magnitude and unwrapped phase.
    pub fn at(&self, f: f64) -> Result<Complex64> {
        let first = self.samples.first().map(|s| s.0).unwrap_or(f64::NAN);
        let last = self.samples.last().map(|s| s.0).unwrap_or(f64::NAN);
        if self.samples.is_empty() || !(f >= first && f <= last) {
            return Err(Error::OutOfRange {
                what: format!("frequency for {}", self.describe()),
                value: f,
                min: first,
                max: last,
            });
        }
        let k = self.samples.partition_point(|s| s.0 < f);
        let (f1, h1) = self.samples[k];
        if f1 == f {
            return Ok(h1);
        }
        let (f0, h0) = self.samples[k - 1];
        if f0 <= 0.0 || h0.norm() == 0.0 || h1.norm() == 0.0 {
            let t = (f - f0) / (f1 - f0);
            return Ok(h0 + (h1 - h0) * t);
        }
        let t = (f.ln() - f0.ln()) / (f1.ln() - f0.ln());
        let mag = (h0.norm().ln() * (1.0 - t) + h1.norm().ln() * t).exp();
        let mut dphi = h1.arg() - h0.arg();
        if dphi > PI {
            dphi -= 2.0 * PI;
        } else if dphi <= -PI {
            dphi += 2.0 * PI;
        }
        Ok(Complex64::from_polar(mag, h0.arg() + t * dphi))
    }

    fn describe(&self) -> String {
        match &self.reference_node {
            Some(r) => format!("{} -> {}-{}", self.source_node, self.target_node, r),
            None => format!("{} -> {}", self.source_node, self.target_node),
        }
    }

    /// CSV with columns frequency_hz, re, im, mag_db, phase_deg.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        w.write_record(["frequency_hz", "re", "im", "mag_db", "phase_deg"])
            .map_err(err)?;
        for &(f, h) in &self.samples {
            w.write_record([
                f.to_string(),
                h.re.to_string(),
                h.im.to_string(),
                (20.0 * h.norm().log10()).to_string(),
                h.arg().to_degrees().to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))?;
        Ok(())
    }
}

/// Measurement point for [`transfer_many`].
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub target: String,
    pub reference: Option<String>,
    pub path_label: Option<String>,
}

impl Probe {
    pub fn node(target: &str) -> Self {
        Probe {
            target: target.to_string(),
            reference: None,
            path_label: None,
        }
    }
}

/// Ordered results to a single `Result`, reporting the earliest failure.
pub fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn check_sweep(freqs: &[f64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::Invalid("frequency list is empty".into()));
    }
    if freqs.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
        return Err(Error::Invalid("frequencies must be finite and >= 0".into()));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid(
            "frequencies must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Copy of `net` driven by a unit ideal voltage source at `source`, with
/// every other independent source zeroed.
pub fn with_unit_drive(net: &Netlist, source: NodeId) -> Netlist {
    let mut driven = net.clone();
    let ground = driven.ground();
    let mut found = false;
    for e in driven.elements_mut() {
        match &mut e.kind {
            ElementKind::VoltageSource { amplitude, ac } => {
                let across = (e.nodes[0], e.nodes[1]);
                if !found && (across == (source, ground) || across == (ground, source)) {
                    *amplitude = if across.0 == source { 1.0 } else { -1.0 };
                    *ac = true;
                    found = true;
                } else {
                    *ac = false;
                }
            }
            ElementKind::CurrentSource { ac, .. } => *ac = false,
            _ => {}
        }
    }
    if !found {
        driven
            .add_named(
                "Vdrive".into(),
                ElementKind::VoltageSource {
                    amplitude: 1.0,
                    ac: true,
                },
                &[source, ground],
                None,
            )
            .expect("valid drive");
    }
    driven
}

/// Voltage transfer `v(target)/v(source)` with the source node driven by an
/// ideal unit AC voltage.
pub fn transfer(
    net: &Netlist,
    source: &str,
    target: &str,
    freqs: &[f64],
) -> Result<TransferFunction> {
    transfer_many(net, source, &[Probe::node(target)], freqs).map(|mut v| v.remove(0))
}

/// Several voltage transfers from one injection node, sharing one solve per
/// frequency. Frequencies are solved in parallel and assembled in order.
pub fn transfer_many(
    net: &Netlist,
    source: &str,
    probes: &[Probe],
    freqs: &[f64],
) -> Result<Vec<TransferFunction>> {
    check_sweep(freqs)?;
    let src = net.require(source)?;
    if src == net.ground() {
        return Err(Error::Invalid(
            "cannot drive the ground-reference node".into(),
        ));
    }
    let ids: Vec<(NodeId, Option<NodeId>)> = probes
        .iter()
        .map(|p| {
            Ok((
                net.require(&p.target)?,
                p.reference.as_deref().map(|r| net.require(r)).transpose()?,
            ))
        })
        .collect::<Result<_>>()?;
    let driven = with_unit_drive(net, src);
    let solved: Vec<Vec<Complex64>> = first_error(
        freqs
            .par_iter()
            .map(|&f| {
                let sol = ac_solve(&driven, f).map_err(|e| e.at_frequency(f))?;
                let vs = sol.voltage(src);
                Ok(ids
                    .iter()
                    .map(|&(t, r)| {
                        let v = sol.voltage(t) - r.map(|r| sol.voltage(r)).unwrap_or_default();
                        v / vs
                    })
                    .collect())
            })
            .collect(),
    )?;
    Ok(probes
        .iter()
        .enumerate()
        .map(|(k, p)| TransferFunction {
            source_node: source.to_string(),
            target_node: p.target.clone(),
            reference_node: p.reference.clone(),
            path_label: p.path_label.clone(),
            samples: freqs
                .iter()
                .zip(&solved)
                .map(|(&f, row)| (f, row[k]))
                .collect(),
        })
        .collect())
}

/// Transimpedance `v(target)/i(source)` for a unit AC current injected into
/// `source` from ground. Unlike the voltage ratio this is reciprocal for
/// passive RLC networks.
pub fn transimpedance(
    net: &Netlist,
    source: &str,
    target: &str,
    freqs: &[f64],
) -> Result<TransferFunction> {
    check_sweep(freqs)?;
    let src = net.require(source)?;
    let tgt = net.require(target)?;
    let mut driven = net.clone();
    for e in driven.elements_mut() {
        match &mut e.kind {
            ElementKind::VoltageSource { ac, .. } | ElementKind::CurrentSource { ac, .. } => {
                *ac = false
            }
            _ => {}
        }
    }
    let ground = driven.ground();
    driven.add_named(
        "Idrive".into(),
        ElementKind::CurrentSource {
            amplitude: 1.0,
            ac: true,
        },
        &[ground, src],
        None,
    )?;
    let samples = first_error(
        freqs
            .par_iter()
            .map(|&f| {
                let sol = ac_solve(&driven, f).map_err(|e| e.at_frequency(f))?;
                Ok((f, sol.voltage(tgt)))
            })
            .collect(),
    )?;
    Ok(TransferFunction {
        source_node: source.to_string(),
        target_node: target.to_string(),
        reference_node: None,
        path_label: None,
        samples,
    })
}

/// DC resistance between two nodes through the resistor-only part of the
/// network, from a unit current injected at `a` and drawn at `b`.
pub fn point_to_point_resistance(net: &Netlist, a: &str, b: &str) -> Result<f64> {
    let ia = net.require(a)?;
    let ib = net.require(b)?;
    if ia == ib {
        return Err(Error::Invalid(format!(
            "point-to-point resistance needs two distinct nodes, got {a:?} twice"
        )));
    }
    let resistors: Vec<(NodeId, NodeId, f64)> = net
        .elements()
        .iter()
        .filter_map(|e| match e.kind {
            ElementKind::Resistor { ohms } if ohms.is_finite() => {
                Some((e.nodes[0], e.nodes[1], ohms))
            }
            _ => None,
        })
        .collect();
    // Component of b in the resistor graph.
    let n = net.node_count();
    let mut adj = vec![Vec::new(); n];
    for &(p, q, _) in &resistors {
        adj[p.0].push(q.0);
        adj[q.0].push(p.0);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![ib.0];
    seen[ib.0] = true;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    if !seen[ia.0] {
        return Err(Error::Unreachable(a.to_string(), b.to_string()));
    }
    let mut sub = Netlist::new(b);
    let mut map = vec![None; n];
    map[ib.0] = Some(sub.ground());
    for (i, node) in net.nodes().iter().enumerate() {
        if seen[i] && i != ib.0 {
            map[i] = Some(sub.add_node(&node.name, NodeKind::Circuit)?);
        }
    }
    for (p, q, ohms) in resistors {
        if let (Some(x), Some(y)) = (map[p.0], map[q.0]) {
            if x != y {
                sub.add_resistor(x, y, ohms)?;
            }
        }
    }
    let ground = sub.ground();
    let xa = map[ia.0].expect("a reachable");
    sub.add_current_source(ground, xa, 1.0, true)?;
    let sol = ac_solve_with(
        &sub,
        0.0,
        StampOptions {
            leak_conductance: 0.0,
        },
    )?;
    Ok(sol.voltage(xa).re)
}

/// Log-spaced sweep from `start` to `stop` inclusive with at least
/// `points_per_decade` points per decade.
pub fn log_sweep(start: f64, stop: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(start > 0.0) || !(stop >= start) || points_per_decade == 0 {
        return Err(Error::Invalid(format!(
            "invalid sweep {start}..{stop} Hz at {points_per_decade} points/decade"
        )));
    }
    if stop == start {
        return Ok(vec![start]);
    }
    let decades = (stop / start).log10();
    let steps = ((decades * points_per_decade as f64) - 1e-9)
        .ceil()
        .max(1.0) as usize;
    Ok((0..=steps)
        .map(|k| {
            if k == steps {
                stop
            } else {
                start * 10f64.powf(decades * k as f64 / steps as f64)
            }
        })
        .collect())
}

pub const DEFAULT_POINTS_PER_DECADE: usize = 20;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_endpoints_and_density() {
        let f = log_sweep(1e5, 1.5e7, 20).unwrap();
        assert_eq!(f[0], 1e5);
        assert_eq!(*f.last().unwrap(), 1.5e7);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(f.len(), 45);
        assert_eq!(log_sweep(1e6, 1e6, 20).unwrap(), vec![1e6]);
        assert!(log_sweep(0.0, 1.0, 20).is_err());
    }

    #[test]
    fn sweep_must_increase() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.add_resistor(a, n.ground(), 1.0).unwrap();
        assert!(transfer(&n, "a", "a", &[]).is_err());
        assert!(transfer(&n, "a", "a", &[2.0, 1.0]).is_err());
        assert!(transfer(&n, "a", "a", &[1.0, 1.0]).is_err());
    }

    #[test]
    fn interpolation_is_exact_on_grid_and_log_linear_between() {
        let tf = TransferFunction {
            source_node: "s".into(),
            target_node: "t".into(),
            reference_node: None,
            path_label: None,
            samples: vec![
                (1e3, Complex64::new(1.0, 0.0)),
                (1e5, Complex64::from_polar(100.0, 0.5)),
            ],
        };
        assert_eq!(tf.at(1e3).unwrap(), Complex64::new(1.0, 0.0));
        let mid = tf.at(1e4).unwrap();
        assert!((mid.norm() - 10.0).abs() < 1e-12);
        assert!((mid.arg() - 0.25).abs() < 1e-12);
        assert!(tf.at(10.0).is_err());
        assert!(tf.at(1e6).is_err());
    }

    #[test]
    fn singular_system_names_the_node() {
        // Two ideal sources in parallel: branch equations are dependent.
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.add_voltage_source(a, n.ground(), 1.0, true).unwrap();
        n.add_voltage_source(a, n.ground(), 2.0, false).unwrap();
        match ac_solve(&n, 1.0) {
            Err(Error::Singular { nodes }) => {
                assert!(nodes.iter().any(|x| x == "a" || x.contains("branch")))
            }
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn errors_carry_frequency() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        let b = n.ensure_node("b", NodeKind::Circuit);
        n.add_voltage_source(a, n.ground(), 1.0, false).unwrap();
        n.add_voltage_source(b, n.ground(), 1.0, false).unwrap();
        n.add_voltage_source(a, b, 1.0, false).unwrap();
        match transfer(&n, "a", "b", &[10.0, 20.0]) {
            Err(Error::AtFrequency { frequency, .. }) => assert_eq!(frequency, 10.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn p2p_requires_path() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        let b = n.ensure_node("b", NodeKind::Circuit);
        n.add_resistor(a, n.ground(), 1.0).unwrap();
        n.add_capacitor(b, n.ground(), 1e-12).unwrap();
        assert!(matches!(
            point_to_point_resistance(&n, "a", "b"),
            Err(Error::Unreachable(..))
        ));
        assert!(point_to_point_resistance(&n, "a", "a").is_err());
        assert!((point_to_point_resistance(&n, "a", "0").unwrap() - 1.0).abs() < 1e-12);
    }
}
