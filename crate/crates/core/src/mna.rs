//! Modified nodal analysis stamps.
//!
//! Unknowns are the non-ground node voltages (in node order) followed by one
//! branch current per inductor and voltage source (in element order). The
//! inductor branch equation `v(a) - v(b) - jωL·i = 0` keeps f = 0 well posed.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, Netlist, NodeId};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Default leak to ground for nodes that have no conducting path to ground
/// at the stamping frequency.
pub const DEFAULT_LEAK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampOptions {
    pub leak_conductance: f64,
}

impl Default for StampOptions {
    fn default() -> Self {
        StampOptions {
            leak_conductance: DEFAULT_LEAK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unknown {
    Voltage(NodeId),
    /// Branch current of the element at this index in the (expanded) netlist.
    Branch(usize),
}

#[derive(Debug, Clone)]
pub struct MnaSystem {
    pub frequency: f64,
    pub matrix: CsrMatrix,
    pub rhs: Vec<Complex64>,
    pub unknowns: Vec<Unknown>,
    /// Row of each node's voltage; `None` for ground.
    node_row: Vec<Option<usize>>,
    /// Nodes that received the leak conductance.
    pub leaked: Vec<NodeId>,
}

impl MnaSystem {
    pub fn dim(&self) -> usize {
        self.unknowns.len()
    }

    pub fn row_of(&self, node: NodeId) -> Option<usize> {
        self.node_row[node.0]
    }
}

/// Stamp a netlist at `frequency` with default options.
pub fn stamp(netlist: &Netlist, frequency: f64) -> Result<MnaSystem> {
    stamp_with(netlist, frequency, StampOptions::default())
}

pub fn stamp_with(netlist: &Netlist, frequency: f64, options: StampOptions) -> Result<MnaSystem> {
    if !(frequency >= 0.0) || !frequency.is_finite() {
        return Err(Error::Invalid(format!(
            "frequency must be >= 0, got {frequency}"
        )));
    }
    let expanded;
    let net = if netlist.devices().is_empty() {
        netlist
    } else {
        expanded = netlist.expand_devices();
        &expanded
    };
    let (mut triplets, rhs, unknowns, node_row) = stamp_raw(net, frequency);
    let dim = unknowns.len();

    // Structurally empty rows mean the node is not touched by anything.
    let mut touched = vec![false; net.node_count()];
    for e in net.elements() {
        match e.kind {
            ElementKind::CurrentSource { .. } => {}
            ElementKind::Vccs { .. } => {
                touched[e.nodes[2].0] = true;
                touched[e.nodes[3].0] = true;
            }
            _ => e.nodes.iter().for_each(|n| touched[n.0] = true),
        }
    }
    if let Some(i) = (0..net.node_count()).find(|&i| NodeId(i) != net.ground() && !touched[i]) {
        return Err(Error::DisconnectedNode(
            net.node_name(NodeId(i)).to_string(),
        ));
    }

    let leaked = floating_nodes(net, frequency);
    if options.leak_conductance > 0.0 {
        for n in &leaked {
            if let Some(r) = node_row[n.0] {
                triplets.add(r, r, Complex64::new(options.leak_conductance, 0.0));
            }
        }
    }
    debug_assert_eq!(rhs.len(), dim);
    Ok(MnaSystem {
        frequency,
        matrix: triplets.build(),
        rhs,
        unknowns,
        node_row,
        leaked,
    })
}

type Raw = (
    TripletBuilder,
    Vec<Complex64>,
    Vec<Unknown>,
    Vec<Option<usize>>,
);

/// Plain element stamps: no connectivity checks, no leak.
pub(crate) fn stamp_raw(net: &Netlist, frequency: f64) -> Raw {
    let omega = 2.0 * PI * frequency;
    let ground = net.ground();
    let mut unknowns = Vec::new();
    let mut node_row = vec![None; net.node_count()];
    for i in 0..net.node_count() {
        if NodeId(i) != ground {
            node_row[i] = Some(unknowns.len());
            unknowns.push(Unknown::Voltage(NodeId(i)));
        }
    }
    let mut branch_row = vec![None; net.elements().len()];
    for (k, e) in net.elements().iter().enumerate() {
        if e.kind.has_branch() {
            branch_row[k] = Some(unknowns.len());
            unknowns.push(Unknown::Branch(k));
        }
    }
    let dim = unknowns.len();
    let mut t = TripletBuilder::new(dim);
    let mut rhs = vec![Complex64::new(0.0, 0.0); dim];
    let row = |n: NodeId| node_row[n.0];

    let admittance = |t: &mut TripletBuilder, a: NodeId, b: NodeId, y: Complex64| {
        let (ra, rb) = (row(a), row(b));
        if let Some(i) = ra {
            t.add(i, i, y);
        }
        if let Some(j) = rb {
            t.add(j, j, y);
        }
        if let (Some(i), Some(j)) = (ra, rb) {
            t.add(i, j, -y);
            t.add(j, i, -y);
        }
    };

    for (k, e) in net.elements().iter().enumerate() {
        let n = &e.nodes;
        match e.kind {
            ElementKind::Resistor { ohms } => {
                admittance(&mut t, n[0], n[1], Complex64::new(1.0 / ohms, 0.0))
            }
            ElementKind::Capacitor { farads } => {
                admittance(&mut t, n[0], n[1], Complex64::new(0.0, omega * farads))
            }
            ElementKind::Vccs { gm } => {
                let g = Complex64::new(gm, 0.0);
                let (cp, cn, op, on) = (row(n[0]), row(n[1]), row(n[2]), row(n[3]));
                for (out, sign) in [(op, 1.0), (on, -1.0)] {
                    let Some(o) = out else { continue };
                    if let Some(c) = cp {
                        t.add(o, c, g * sign);
                    }
                    if let Some(c) = cn {
                        t.add(o, c, -g * sign);
                    }
                }
            }
            ElementKind::Inductor { .. } | ElementKind::VoltageSource { .. } => {
                let b = branch_row[k].expect("branch allocated");
                let one = Complex64::new(1.0, 0.0);
                if let Some(i) = row(n[0]) {
                    t.add(i, b, one);
                    t.add(b, i, one);
                }
                if let Some(j) = row(n[1]) {
                    t.add(j, b, -one);
                    t.add(b, j, -one);
                }
                match e.kind {
                    ElementKind::Inductor { henries } => {
                        t.add(b, b, Complex64::new(0.0, -omega * henries))
                    }
                    ElementKind::VoltageSource { amplitude, ac } => {
                        // Structural zero keeps the pattern stable across sweeps.
                        t.add(b, b, Complex64::new(0.0, 0.0));
                        if ac {
                            rhs[b] += amplitude;
                        }
                    }
                    _ => unreachable!(),
                }
            }
            ElementKind::CurrentSource { amplitude, ac } => {
                if ac {
                    if let Some(i) = row(n[0]) {
                        rhs[i] -= amplitude;
                    }
                    if let Some(j) = row(n[1]) {
                        rhs[j] += amplitude;
                    }
                }
            }
        }
    }
    (t, rhs, unknowns, node_row)
}

/// Nodes without a conducting path to ground at this frequency. Capacitors
/// conduct only for f > 0; controlled and current sources never do.
pub fn floating_nodes(net: &Netlist, frequency: f64) -> Vec<NodeId> {
    let n = net.node_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for e in net.elements() {
        let conducts = match e.kind {
            ElementKind::Resistor { ohms } => ohms.is_finite(),
            ElementKind::Inductor { .. } | ElementKind::VoltageSource { .. } => true,
            ElementKind::Capacitor { farads } => frequency > 0.0 && farads > 0.0,
            ElementKind::Vccs { .. } | ElementKind::CurrentSource { .. } => false,
        };
        if conducts {
            let a = find(&mut parent, e.nodes[0].0);
            let b = find(&mut parent, e.nodes[1].0);
            parent[a] = b;
        }
    }
    let g = find(&mut parent, net.ground().0);
    (0..n)
        .filter(|&i| find(&mut parent, i) != g)
        .map(NodeId)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{MosSmallSignal, NodeKind};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_resistor() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.add_resistor(a, n.ground(), 1e3).unwrap();
        for f in [0.0, 1.0, 1e9] {
            let s = stamp(&n, f).unwrap();
            assert_eq!(s.dim(), 1);
            assert_eq!(s.matrix.get(0, 0), c(1e-3, 0.0));
        }
    }

    #[test]
    fn capacitor_at_unit_omega() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.add_capacitor(a, n.ground(), 1e-12).unwrap();
        let s = stamp(&n, 1.0 / (2.0 * PI)).unwrap();
        let v = s.matrix.get(0, 0);
        assert_eq!(v.re, 0.0);
        assert!((v.im - 1e-12).abs() < 1e-27);
        assert!(s.leaked.is_empty());
        // At DC the capacitor is open, so the node floats and gets the leak.
        let s0 = stamp(&n, 0.0).unwrap();
        assert_eq!(s0.leaked, vec![a]);
        assert_eq!(s0.matrix.get(0, 0), c(DEFAULT_LEAK, 0.0));
    }

    #[test]
    fn mos_drain_diagonal_holds_gds() {
        let mut n = Netlist::new("0");
        let [g, d, b] = ["g", "d", "b"].map(|x| n.ensure_node(x, NodeKind::Circuit));
        let s = n.ground();
        n.add_device(MosSmallSignal {
            name: "M1".into(),
            gm: 0.0,
            gmb: 10e-3,
            gds: 2.8e-3,
            cdbj: 120e-15,
            csbj: 200e-15,
            gate: g,
            drain: d,
            source: s,
            bulk: b,
            path_label: None,
        })
        .unwrap();
        n.add_resistor(g, s, 1e3).unwrap();
        n.add_resistor(b, s, 1e3).unwrap();
        assert_eq!(n.expand_devices().elements().len(), 2 + 5);
        let sys = stamp(&n, 0.0).unwrap();
        let rd = sys.row_of(d).unwrap();
        let rb = sys.row_of(b).unwrap();
        assert!((sys.matrix.get(rd, rd).re - 2.8e-3).abs() < 1e-18);
        assert!((sys.matrix.get(rd, rb).re - 10e-3).abs() < 1e-18);
    }

    #[test]
    fn disconnected_node_is_rejected_by_name() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.ensure_node("lonely", NodeKind::Circuit);
        n.add_resistor(a, n.ground(), 1.0).unwrap();
        match stamp(&n, 0.0) {
            Err(Error::DisconnectedNode(name)) => assert_eq!(name, "lonely"),
            other => panic!("unexpected {other:?}"),
        }
        // A node used only as a VCCS control input has an empty row too.
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        let ctl = n.ensure_node("ctl", NodeKind::Circuit);
        n.add_resistor(a, n.ground(), 1.0).unwrap();
        n.add_vccs((ctl, n.ground()), (a, n.ground()), 1e-3)
            .unwrap();
        assert!(matches!(stamp(&n, 0.0), Err(Error::DisconnectedNode(x)) if x == "ctl"));
    }

    #[test]
    fn inductor_branch_at_dc_shorts() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        n.add_inductor(a, n.ground(), 1e-9).unwrap();
        let s = stamp(&n, 0.0).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.matrix.get(0, 1), c(1.0, 0.0));
        assert_eq!(s.matrix.get(1, 0), c(1.0, 0.0));
        assert_eq!(s.matrix.get(1, 1), c(0.0, 0.0));
        assert!(s.leaked.is_empty());
    }

    #[test]
    fn rc_only_matrix_is_complex_symmetric() {
        let mut n = Netlist::new("0");
        let ids: Vec<_> = (0..5)
            .map(|i| n.ensure_node(&format!("n{i}"), NodeKind::Circuit))
            .collect();
        for i in 0..5 {
            n.add_resistor(ids[i], ids[(i + 1) % 5], 100.0 * (i + 1) as f64)
                .unwrap();
            n.add_capacitor(ids[i], n.ground(), 1e-12 * (i + 2) as f64)
                .unwrap();
        }
        n.add_resistor(ids[2], n.ground(), 50.0).unwrap();
        let s = stamp(&n, 1e6).unwrap();
        let d = s.matrix.to_dense();
        for i in 0..d.len() {
            for j in 0..d.len() {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    fn random_rc_vccs(seed: u64) -> Netlist {
        // Small LCG keeps the fixture deterministic without pulling rand.
        let mut state = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let mut n = Netlist::new("0");
        let ids: Vec<_> = (0..6)
            .map(|i| n.ensure_node(&format!("n{i}"), NodeKind::Circuit))
            .collect();
        let pick = |r: f64, with_ground: bool| -> NodeId {
            let k = (r * if with_ground { 7.0 } else { 6.0 }) as usize;
            if k >= 6 {
                NodeId(0)
            } else {
                ids[k]
            }
        };
        for _ in 0..12 {
            let (a, b) = (pick(next(), true), pick(next(), true));
            if a == b {
                continue;
            }
            match (next() * 3.0) as usize {
                0 => n.add_resistor(a, b, 1.0 + 1e4 * next()).unwrap(),
                1 => n.add_capacitor(a, b, 1e-15 + 1e-12 * next()).unwrap(),
                _ => {
                    let (c1, c2) = (pick(next(), true), pick(next(), true));
                    n.add_vccs((c1, c2), (a, b), next() - 0.5).unwrap()
                }
            };
        }
        n
    }

    #[test]
    fn stamp_is_linear_over_elements() {
        for seed in 0..20 {
            let net = random_rc_vccs(seed);
            let f = 3.3e6;
            let (whole, _, _, _) = stamp_raw(&net, f);
            let whole = whole.build().to_dense();
            let dim = whole.len();
            let mut sum = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
            for e in net.elements() {
                let mut single = net.clone();
                single.elements_mut().retain(|x| x == e);
                let (t, _, _, _) = stamp_raw(&single, f);
                for (i, row) in t.build().to_dense().iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        sum[i][j] += v;
                    }
                }
            }
            for i in 0..dim {
                for j in 0..dim {
                    assert!((whole[i][j] - sum[i][j]).norm() <= 1e-15 * (1.0 + whole[i][j].norm()));
                }
            }
        }
    }

    #[test]
    fn expanded_device_stamps_like_hand_built_network() {
        let mut dev = Netlist::new("0");
        let [g, d, s, b] = ["g", "d", "s", "b"].map(|x| dev.ensure_node(x, NodeKind::Circuit));
        for x in [g, d, s, b] {
            dev.add_resistor(x, dev.ground(), 1e3).unwrap();
        }
        let mut hand = dev.clone();
        dev.add_device(MosSmallSignal {
            name: "M1".into(),
            gm: 30e-3,
            gmb: 10e-3,
            gds: 2.8e-3,
            cdbj: 120e-15,
            csbj: 200e-15,
            gate: g,
            drain: d,
            source: s,
            bulk: b,
            path_label: None,
        })
        .unwrap();
        hand.add_vccs((g, s), (d, s), 30e-3).unwrap();
        hand.add_vccs((b, s), (d, s), 10e-3).unwrap();
        hand.add_resistor(d, s, 1.0 / 2.8e-3).unwrap();
        hand.add_capacitor(d, b, 120e-15).unwrap();
        hand.add_capacitor(s, b, 200e-15).unwrap();
        for f in [0.0, 1e6, 5e9] {
            let x = stamp(&dev, f).unwrap().matrix.to_dense();
            let y = stamp(&hand, f).unwrap().matrix.to_dense();
            assert_eq!(x, y);
        }
    }
}
