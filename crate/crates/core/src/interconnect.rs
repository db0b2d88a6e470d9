//! Wire resistance and substrate capacitance extraction.
//!
//! Each straight run of a routed polyline becomes one series resistor with
//! half of its substrate capacitance at each end (π model). Where two runs
//! meet at a bend, the centerline counts the corner square once in full; the
//! corner correction replaces that with `corner_weight` squares, taking half
//! of the difference off each adjoining run.

use crate::error::{Error, Result};
use crate::layout::{Layout, Technology, WireSegment};
use crate::netlist::{ElementKind, Netlist, NodeId, NodeKind};

pub const DEFAULT_CORNER_WEIGHT: f64 = 0.56;
pub const DEFAULT_VIA_RESISTANCE: f64 = 2.0;
pub const GROUND_LABEL: &str = "ground-interconnect";

#[derive(Debug, Clone)]
pub struct WireFragment {
    pub netlist: Netlist,
    /// Zero-length runs that were dropped.
    pub skipped_runs: usize,
    /// Series resistance from `from` to `to`, vias included.
    pub resistance: f64,
    pub capacitance: f64,
}

/// Resolved electrical parameters of one wire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WireParams {
    pub sheet_resistance: f64,
    pub cap_density: f64,
    pub via: (f64, f64),
    pub corner_weight: f64,
}

impl WireParams {
    pub fn resolve(seg: &WireSegment, tech: &Technology) -> Result<Self> {
        let layer = tech.layer(&seg.layer).ok();
        let sheet_resistance = match (seg.sheet_resistance, layer) {
            (Some(r), _) => r.0,
            (None, Some(l)) => l.sheet_resistance.0,
            (None, None) => return Err(tech.layer(&seg.layer).unwrap_err()),
        };
        let cap_density = seg
            .cap_density
            .map(|c| c.0)
            .or(layer.map(|l| l.cap_density.0))
            .unwrap_or(0.0);
        let via = seg
            .via_resistance
            .map(|(a, b)| (a.0, b.0))
            .unwrap_or((tech.via_resistance.0, tech.via_resistance.0));
        Ok(WireParams {
            sheet_resistance,
            cap_density,
            via,
            corner_weight: tech.corner_weight.0,
        })
    }
}

fn validate(seg: &WireSegment, p: &WireParams) -> Result<()> {
    let ctx = |m: String| Error::Invalid(format!("wire {:?}: {m}", seg.name));
    if seg.path.len() < 2 {
        return Err(ctx("path needs at least two points".into()));
    }
    if !(seg.width.0 > 0.0) {
        return Err(ctx(format!("width must be > 0, got {}", seg.width.0)));
    }
    if !(p.sheet_resistance >= 0.0)
        || !(p.cap_density >= 0.0)
        || !(p.via.0 >= 0.0)
        || !(p.via.1 >= 0.0)
    {
        return Err(ctx(
            "sheet resistance, capacitance density and via resistances must be >= 0".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p.corner_weight) {
        return Err(ctx(format!(
            "corner weight must lie in [0, 1], got {}",
            p.corner_weight
        )));
    }
    if seg.from == seg.to {
        return Err(ctx("wire starts and ends on the same net".into()));
    }
    Ok(())
}

/// Per-run (length, corner ends) after dropping zero-length runs.
fn runs(seg: &WireSegment) -> (Vec<(f64, usize)>, usize) {
    let pts: Vec<(f64, f64)> = seg.path.iter().map(|p| (p.0 .0, p.1 .0)).collect();
    let mut dirs = Vec::new();
    let mut skipped = 0;
    for w in pts.windows(2) {
        let (dx, dy) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
        let len = dx.hypot(dy);
        if len == 0.0 {
            skipped += 1;
        } else {
            dirs.push((len, dx / len, dy / len));
        }
    }
    let bend = |a: (f64, f64, f64), b: (f64, f64, f64)| (a.1 * b.2 - a.2 * b.1).abs() > 1e-9;
    let out = (0..dirs.len())
        .map(|k| {
            let mut corners = 0;
            if k > 0 && bend(dirs[k - 1], dirs[k]) {
                corners += 1;
            }
            if k + 1 < dirs.len() && bend(dirs[k], dirs[k + 1]) {
                corners += 1;
            }
            (dirs[k].0, corners)
        })
        .collect();
    (out, skipped)
}

/// Squares of each run after the corner correction.
pub fn run_squares(seg: &WireSegment, corner_weight: f64) -> Result<Vec<f64>> {
    let w = seg.width.0;
    let (runs, _) = runs(seg);
    runs.iter()
        .map(|&(len, corners)| {
            let sq = len / w - 0.5 * (1.0 - corner_weight) * corners as f64;
            if sq > 0.0 {
                Ok(sq)
            } else {
                Err(Error::Invalid(format!(
                    "wire {:?}: run of {len} m is too short for its corner allowance",
                    seg.name
                )))
            }
        })
        .collect()
}

/// Extract one wire into a netlist fragment whose ground is `ground`.
pub fn extract_wire(seg: &WireSegment, tech: &Technology, ground: &str) -> Result<WireFragment> {
    let p = WireParams::resolve(seg, tech)?;
    validate(seg, &p)?;
    let label = seg.path_label.as_deref().unwrap_or(GROUND_LABEL);
    let (run_list, skipped) = runs(seg);
    let squares = run_squares(seg, p.corner_weight)?;

    let mut net = Netlist::new(ground);
    let from = net.ensure_node(&seg.from, NodeKind::Circuit);
    let to = net.ensure_node(&seg.to, NodeKind::Circuit);
    let sub = match &seg.substrate_node {
        Some(s) => net.ensure_node(s, NodeKind::Interface),
        None => net.ground(),
    };

    let series = |net: &mut Netlist, a: NodeId, b: NodeId, ohms: f64| -> Result<()> {
        let kind = if ohms > 0.0 {
            ElementKind::Resistor { ohms }
        } else {
            ElementKind::VoltageSource {
                amplitude: 0.0,
                ac: false,
            }
        };
        net.add_element(kind, &[a, b], Some(label)).map(|_| ())
    };

    let n = run_list.len();
    let mut vertex = Vec::with_capacity(n + 1);
    if n == 0 {
        // Every run had zero length: the wire degenerates to its vias.
        series(&mut net, from, to, p.via.0 + p.via.1)?;
        return Ok(WireFragment {
            netlist: net,
            skipped_runs: skipped,
            resistance: p.via.0 + p.via.1,
            capacitance: 0.0,
        });
    }
    for k in 0..=n {
        let id = if k == 0 && p.via.0 == 0.0 {
            from
        } else if k == n && p.via.1 == 0.0 {
            to
        } else {
            net.ensure_node(&format!("{}.{k}", seg.name), NodeKind::Circuit)
        };
        vertex.push(id);
    }
    if p.via.0 > 0.0 {
        series(&mut net, from, vertex[0], p.via.0)?;
    }
    let mut total_r = p.via.0 + p.via.1;
    let mut total_c = 0.0;
    for k in 0..n {
        let r = p.sheet_resistance * squares[k];
        total_r += r;
        series(&mut net, vertex[k], vertex[k + 1], r)?;
        let c = p.cap_density * run_list[k].0 * seg.width.0;
        total_c += c;
        if c > 0.0 {
            for v in [vertex[k], vertex[k + 1]] {
                if v != sub {
                    net.add_element(
                        ElementKind::Capacitor { farads: c / 2.0 },
                        &[v, sub],
                        Some(label),
                    )?;
                }
            }
        }
    }
    if p.via.1 > 0.0 {
        series(&mut net, vertex[n], to, p.via.1)?;
    }
    Ok(WireFragment {
        netlist: net,
        skipped_runs: skipped,
        resistance: total_r,
        capacitance: total_c,
    })
}

#[derive(Debug, Clone)]
pub struct InterconnectNetlist {
    pub netlist: Netlist,
    pub skipped_runs: usize,
    /// Series resistance of every ground-interconnect wire, by wire name.
    pub ground_resistance: Vec<(String, f64)>,
}

/// Extract every wire of a layout into one netlist.
pub fn extract_interconnect(layout: &Layout, tech: &Technology) -> Result<InterconnectNetlist> {
    let mut net = Netlist::new(&layout.ground);
    let mut skipped = 0;
    let mut ground_resistance = Vec::new();
    for seg in &layout.wires {
        let frag = extract_wire(seg, tech, &layout.ground)?;
        skipped += frag.skipped_runs;
        if is_ground(seg) {
            ground_resistance.push((seg.name.clone(), frag.resistance));
        }
        net.merge(&frag.netlist)?;
    }
    Ok(InterconnectNetlist {
        netlist: net,
        skipped_runs: skipped,
        ground_resistance,
    })
}

pub fn is_ground(seg: &WireSegment) -> bool {
    seg.path_label.as_deref().unwrap_or(GROUND_LABEL) == GROUND_LABEL
}

/// Widen every resizable ground-interconnect wire by `factor`.
pub fn scale_ground_width(layout: &Layout, factor: f64) -> Result<Layout> {
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::Invalid(format!(
            "width factor must be > 0, got {factor}"
        )));
    }
    let mut out = layout.clone();
    for seg in &mut out.wires {
        if seg.resizable && is_ground(seg) {
            seg.width.0 *= factor;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{LayerTech, Point};
    use crate::solver::point_to_point_resistance;
    use crate::units::Eng;

    fn tech() -> Technology {
        let mut t = Technology::default();
        t.layers.insert(
            "M1".into(),
            LayerTech {
                sheet_resistance: Eng(0.08),
                cap_density: Eng(3e-5),
            },
        );
        t.via_resistance = Eng(0.0);
        t
    }

    fn wire(path: &[(f64, f64)], width: f64) -> WireSegment {
        WireSegment {
            name: "w".into(),
            layer: "M1".into(),
            path: path.iter().map(|&(x, y)| Point(Eng(x), Eng(y))).collect(),
            width: Eng(width),
            from: "a".into(),
            to: "b".into(),
            sheet_resistance: None,
            cap_density: None,
            via_resistance: None,
            substrate_node: None,
            path_label: None,
            resizable: true,
        }
    }

    #[test]
    fn straight_run_squares() {
        let f = extract_wire(&wire(&[(0.0, 0.0), (100e-6, 0.0)], 1e-6), &tech(), "0").unwrap();
        assert!((f.resistance - 8.0).abs() < 1e-12);
        let r = point_to_point_resistance(&f.netlist, "a", "b").unwrap();
        assert!((r - 8.0).abs() < 1e-9);
        let f2 = extract_wire(&wire(&[(0.0, 0.0), (100e-6, 0.0)], 2e-6), &tech(), "0").unwrap();
        assert!((f2.resistance - 4.0).abs() < 1e-12);
        assert!((f2.capacitance - 2.0 * f.capacitance).abs() < 1e-24);
    }

    #[test]
    fn every_element_is_labeled() {
        let f = extract_wire(
            &wire(&[(0.0, 0.0), (50e-6, 0.0), (50e-6, 50e-6)], 1e-6),
            &tech(),
            "0",
        )
        .unwrap();
        assert!(f
            .netlist
            .elements()
            .iter()
            .all(|e| e.path_label.as_deref() == Some(GROUND_LABEL)));
        let mut w = wire(&[(0.0, 0.0), (50e-6, 0.0)], 1e-6);
        w.path_label = Some("supply".into());
        let f = extract_wire(&w, &tech(), "0").unwrap();
        assert!(f
            .netlist
            .elements()
            .iter()
            .all(|e| e.path_label.as_deref() == Some("supply")));
    }

    #[test]
    fn corner_counts_weighted_square() {
        let f = extract_wire(
            &wire(&[(0.0, 0.0), (50e-6, 0.0), (50e-6, 50e-6)], 1e-6),
            &tech(),
            "0",
        )
        .unwrap();
        let squares = 100.0 - (1.0 - DEFAULT_CORNER_WEIGHT);
        assert!((f.resistance - 0.08 * squares).abs() < 1e-12);
    }

    #[test]
    fn zero_length_runs_are_skipped() {
        let f = extract_wire(
            &wire(
                &[(0.0, 0.0), (0.0, 0.0), (100e-6, 0.0), (100e-6, 0.0)],
                1e-6,
            ),
            &tech(),
            "0",
        )
        .unwrap();
        assert_eq!(f.skipped_runs, 2);
        assert!((f.resistance - 8.0).abs() < 1e-12);
    }

    #[test]
    fn vias_add_in_series() {
        let mut w = wire(&[(0.0, 0.0), (100e-6, 0.0)], 1e-6);
        w.via_resistance = Some((Eng(2.0), Eng(3.0)));
        let f = extract_wire(&w, &tech(), "0").unwrap();
        let r = point_to_point_resistance(&f.netlist, "a", "b").unwrap();
        assert!((r - 13.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_wires_are_rejected() {
        assert!(extract_wire(&wire(&[(0.0, 0.0)], 1e-6), &tech(), "0").is_err());
        assert!(extract_wire(&wire(&[(0.0, 0.0), (1e-6, 0.0)], 0.0), &tech(), "0").is_err());
        let mut w = wire(&[(0.0, 0.0), (1e-6, 0.0)], 1e-6);
        w.layer = "M9".into();
        assert!(extract_wire(&w, &tech(), "0").is_err());
    }
}
