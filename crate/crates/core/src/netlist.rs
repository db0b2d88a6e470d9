//! Electrical network description: nodes, lumped elements and MOS
//! small-signal devices, with optional coupling-path labels on every element.
//!
//! Netlists are built incrementally and then treated as immutable; stamping
//! and solving only borrow them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::Eng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Circuit,
    SubstrateMesh,
    Interface,
    GroundReference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
}

/// Lumped element values, SI units.
///
/// Source polarity follows SPICE: a voltage source forces
/// `v(n+) - v(n-) = amplitude`; a current source drives `amplitude` amps from
/// `n+` through the source into `n-`; a VCCS with terminals
/// `[c+, c-, o+, o-]` drives `gm * (v(c+) - v(c-))` from `o+` through the
/// source into `o-`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElementKind {
    Resistor { ohms: f64 },
    Capacitor { farads: f64 },
    Inductor { henries: f64 },
    Vccs { gm: f64 },
    VoltageSource { amplitude: f64, ac: bool },
    CurrentSource { amplitude: f64, ac: bool },
}

impl ElementKind {
    pub fn terminal_count(&self) -> usize {
        match self {
            ElementKind::Vccs { .. } => 4,
            _ => 2,
        }
    }

    /// Carries an extra branch-current unknown in MNA.
    pub fn has_branch(&self) -> bool {
        matches!(
            self,
            ElementKind::Inductor { .. } | ElementKind::VoltageSource { .. }
        )
    }

    fn prefix(&self) -> &'static str {
        match self {
            ElementKind::Resistor { .. } => "R",
            ElementKind::Capacitor { .. } => "C",
            ElementKind::Inductor { .. } => "L",
            ElementKind::Vccs { .. } => "G",
            ElementKind::VoltageSource { .. } => "V",
            ElementKind::CurrentSource { .. } => "I",
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::Invalid(format!("{what} must be > 0, got {v}")));
        match *self {
            ElementKind::Resistor { ohms } if !(ohms > 0.0) => bad("resistance", ohms),
            ElementKind::Capacitor { farads } if !(farads > 0.0) => bad("capacitance", farads),
            ElementKind::Inductor { henries } if !(henries > 0.0) => bad("inductance", henries),
            ElementKind::Vccs { gm } if !gm.is_finite() => Err(Error::Invalid(format!(
                "transconductance must be finite, got {gm}"
            ))),
            ElementKind::VoltageSource { amplitude, .. }
            | ElementKind::CurrentSource { amplitude, .. }
                if !amplitude.is_finite() =>
            {
                Err(Error::Invalid(format!(
                    "source amplitude must be finite, got {amplitude}"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub kind: ElementKind,
    pub nodes: Vec<NodeId>,
    pub path_label: Option<String>,
}

/// MOS small-signal model: gm and gmb current sources drain to source, output
/// conductance, and the two bulk junction capacitances.
#[derive(Debug, Clone, PartialEq)]
pub struct MosSmallSignal {
    pub name: String,
    pub gm: f64,
    pub gmb: f64,
    pub gds: f64,
    pub cdbj: f64,
    pub csbj: f64,
    pub gate: NodeId,
    pub drain: NodeId,
    pub source: NodeId,
    pub bulk: NodeId,
    pub path_label: Option<String>,
}

impl MosSmallSignal {
    fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("gm", self.gm),
            ("gmb", self.gmb),
            ("gds", self.gds),
            ("cdbj", self.cdbj),
            ("csbj", self.csbj),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Invalid(format!(
                    "device {}: {what} must be finite and >= 0, got {v}",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// The five-element expansion. A zero `gds` becomes an infinite
    /// resistance and zero junction capacitances stay as zero-valued
    /// capacitors, so the element count is always five.
    pub fn expansion(&self) -> [Element; 5] {
        let el = |suffix: &str, kind, nodes: Vec<NodeId>| Element {
            name: format!("{}.{suffix}", self.name),
            kind,
            nodes,
            path_label: self.path_label.clone(),
        };
        [
            el(
                "gm",
                ElementKind::Vccs { gm: self.gm },
                vec![self.gate, self.source, self.drain, self.source],
            ),
            el(
                "gmb",
                ElementKind::Vccs { gm: self.gmb },
                vec![self.bulk, self.source, self.drain, self.source],
            ),
            el(
                "rds",
                ElementKind::Resistor {
                    ohms: if self.gds > 0.0 {
                        1.0 / self.gds
                    } else {
                        f64::INFINITY
                    },
                },
                vec![self.drain, self.source],
            ),
            el(
                "cdbj",
                ElementKind::Capacitor { farads: self.cdbj },
                vec![self.drain, self.bulk],
            ),
            el(
                "csbj",
                ElementKind::Capacitor { farads: self.csbj },
                vec![self.source, self.bulk],
            ),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    nodes: Vec<Node>,
    index: HashMap<String, NodeId>,
    ground: NodeId,
    elements: Vec<Element>,
    devices: Vec<MosSmallSignal>,
}

impl Netlist {
    pub fn new(ground: &str) -> Self {
        let mut index = HashMap::new();
        index.insert(ground.to_string(), NodeId(0));
        Netlist {
            nodes: vec![Node {
                name: ground.to_string(),
                kind: NodeKind::GroundReference,
            }],
            index,
            ground: NodeId(0),
            elements: Vec::new(),
            devices: Vec::new(),
        }
    }

    pub fn ground(&self) -> NodeId {
        self.ground
    }

    pub fn ground_name(&self) -> &str {
        &self.nodes[self.ground.0].name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0].name
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<NodeId> {
        self.node_id(name)
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn devices(&self) -> &[MosSmallSignal] {
        &self.devices
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn add_node(&mut self, name: &str, kind: NodeKind) -> Result<NodeId> {
        if self.index.contains_key(name) {
            return Err(Error::DuplicateNode(name.to_string()));
        }
        if kind == NodeKind::GroundReference {
            return Err(Error::DuplicateGround(
                self.ground_name().to_string(),
                name.to_string(),
            ));
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            name: name.to_string(),
            kind,
        });
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Look up a node by name, creating it with `kind` if absent. An existing
    /// circuit node is promoted to a more specific kind; the ground node is
    /// never changed.
    pub fn ensure_node(&mut self, name: &str, kind: NodeKind) -> NodeId {
        if let Some(id) = self.node_id(name) {
            let node = &mut self.nodes[id.0];
            if node.kind == NodeKind::Circuit && kind != NodeKind::GroundReference {
                node.kind = kind;
            }
            return id;
        }
        self.add_node(name, kind).expect("name checked absent")
    }

    pub fn add_element(
        &mut self,
        kind: ElementKind,
        nodes: &[NodeId],
        path_label: Option<&str>,
    ) -> Result<usize> {
        let name = format!("{}{}", kind.prefix(), self.elements.len() + 1);
        self.add_named(name, kind, nodes, path_label)
    }

    pub fn add_named(
        &mut self,
        name: String,
        kind: ElementKind,
        nodes: &[NodeId],
        path_label: Option<&str>,
    ) -> Result<usize> {
        kind.validate()?;
        if nodes.len() != kind.terminal_count() {
            return Err(Error::Invalid(format!(
                "element {name} needs {} terminals, got {}",
                kind.terminal_count(),
                nodes.len()
            )));
        }
        if let Some(bad) = nodes.iter().find(|n| n.0 >= self.nodes.len()) {
            return Err(Error::UnknownNode(format!("#{}", bad.0)));
        }
        self.elements.push(Element {
            name,
            kind,
            nodes: nodes.to_vec(),
            path_label: path_label.map(str::to_string),
        });
        Ok(self.elements.len() - 1)
    }

    pub fn add_resistor(&mut self, a: NodeId, b: NodeId, ohms: f64) -> Result<usize> {
        self.add_element(ElementKind::Resistor { ohms }, &[a, b], None)
    }

    pub fn add_capacitor(&mut self, a: NodeId, b: NodeId, farads: f64) -> Result<usize> {
        self.add_element(ElementKind::Capacitor { farads }, &[a, b], None)
    }

    pub fn add_inductor(&mut self, a: NodeId, b: NodeId, henries: f64) -> Result<usize> {
        self.add_element(ElementKind::Inductor { henries }, &[a, b], None)
    }

    pub fn add_vccs(
        &mut self,
        ctrl: (NodeId, NodeId),
        out: (NodeId, NodeId),
        gm: f64,
    ) -> Result<usize> {
        self.add_element(
            ElementKind::Vccs { gm },
            &[ctrl.0, ctrl.1, out.0, out.1],
            None,
        )
    }

    pub fn add_voltage_source(
        &mut self,
        p: NodeId,
        n: NodeId,
        amplitude: f64,
        ac: bool,
    ) -> Result<usize> {
        self.add_element(ElementKind::VoltageSource { amplitude, ac }, &[p, n], None)
    }

    pub fn add_current_source(
        &mut self,
        p: NodeId,
        n: NodeId,
        amplitude: f64,
        ac: bool,
    ) -> Result<usize> {
        self.add_element(ElementKind::CurrentSource { amplitude, ac }, &[p, n], None)
    }

    pub fn add_device(&mut self, device: MosSmallSignal) -> Result<()> {
        device.validate()?;
        for n in [device.gate, device.drain, device.source, device.bulk] {
            if n.0 >= self.nodes.len() {
                return Err(Error::UnknownNode(format!("#{}", n.0)));
            }
        }
        self.devices.push(device);
        Ok(())
    }

    /// Label every element (and device) added after index `from`.
    pub fn label_from(&mut self, from: usize, label: &str) {
        for e in &mut self.elements[from..] {
            e.path_label = Some(label.to_string());
        }
    }

    pub fn elements_mut(&mut self) -> &mut Vec<Element> {
        &mut self.elements
    }

    /// All path labels present on elements or devices.
    pub fn labels(&self) -> BTreeSet<String> {
        self.elements
            .iter()
            .filter_map(|e| e.path_label.clone())
            .chain(self.devices.iter().filter_map(|d| d.path_label.clone()))
            .collect()
    }

    /// Replace every MOS device by its five-element expansion.
    pub fn expand_devices(&self) -> Netlist {
        let mut out = self.clone();
        out.devices.clear();
        for d in &self.devices {
            out.elements.extend(d.expansion());
        }
        out
    }

    /// Copy `other` into this netlist, matching nodes by name. The other
    /// netlist's ground is mapped onto this ground.
    pub fn merge(&mut self, other: &Netlist) -> Result<()> {
        let map: Vec<NodeId> = other
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                if NodeId(i) == other.ground {
                    self.ground
                } else {
                    self.ensure_node(&node.name, node.kind)
                }
            })
            .collect();
        for e in &other.elements {
            self.elements.push(Element {
                name: e.name.clone(),
                kind: e.kind,
                nodes: e.nodes.iter().map(|n| map[n.0]).collect(),
                path_label: e.path_label.clone(),
            });
        }
        for d in &other.devices {
            self.devices.push(MosSmallSignal {
                gate: map[d.gate.0],
                drain: map[d.drain.0],
                source: map[d.source.0],
                bulk: map[d.bulk.0],
                ..d.clone()
            });
        }
        Ok(())
    }

    pub fn count_by_label(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for label in self
            .elements
            .iter()
            .filter_map(|e| e.path_label.as_ref())
            .chain(self.devices.iter().filter_map(|d| d.path_label.as_ref()))
        {
            *out.entry(label.clone()).or_insert(0) += 1;
        }
        out
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} nodes, {} elements, {} devices",
            self.nodes.len(),
            self.elements.len(),
            self.devices.len()
        )
    }
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistFile {
    pub ground: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub nodes: BTreeMap<String, NodeKind>,
    pub elements: Vec<ElementRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ElementRecord {
    Resistor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    Capacitor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    Inductor {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    Vccs {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    Vsource {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default)]
        ac: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    Isource {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        value: Eng,
        #[serde(default)]
        ac: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    /// Terminals in gate, drain, source, bulk order.
    Mos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<String>,
        gm: Eng,
        gmb: Eng,
        gds: Eng,
        cdbj: Eng,
        csbj: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
}

impl NetlistFile {
    pub fn into_netlist(self) -> Result<Netlist> {
        let mut net = Netlist::new(&self.ground);
        for (name, kind) in &self.nodes {
            if *kind == NodeKind::GroundReference {
                if name != &self.ground {
                    return Err(Error::DuplicateGround(self.ground.clone(), name.clone()));
                }
                continue;
            }
            net.add_node(name, *kind)?;
        }
        for (k, rec) in self.elements.into_iter().enumerate() {
            let ids = |net: &mut Netlist, names: &[String]| -> Vec<NodeId> {
                names
                    .iter()
                    .map(|n| net.ensure_node(n, NodeKind::Circuit))
                    .collect()
            };
            let context = |e: Error| Error::Invalid(format!("element #{k}: {e}"));
            match rec {
                ElementRecord::Mos {
                    name,
                    nodes,
                    gm,
                    gmb,
                    gds,
                    cdbj,
                    csbj,
                    path_label,
                } => {
                    if nodes.len() != 4 {
                        return Err(context(Error::Invalid("mos needs 4 terminals".into())));
                    }
                    let n = ids(&mut net, &nodes);
                    let name = name.unwrap_or_else(|| format!("M{}", net.devices.len() + 1));
                    net.add_device(MosSmallSignal {
                        name,
                        gm: gm.0,
                        gmb: gmb.0,
                        gds: gds.0,
                        cdbj: cdbj.0,
                        csbj: csbj.0,
                        gate: n[0],
                        drain: n[1],
                        source: n[2],
                        bulk: n[3],
                        path_label,
                    })
                    .map_err(context)?;
                }
                other => {
                    let (name, nodes, kind, label) = other.into_parts();
                    let n = ids(&mut net, &nodes);
                    let name = name.unwrap_or_else(|| format!("{}{}", kind.prefix(), k + 1));
                    net.add_named(name, kind, &n, label.as_deref())
                        .map_err(context)?;
                }
            }
        }
        Ok(net)
    }

    pub fn from_netlist(net: &Netlist) -> NetlistFile {
        let names = |ids: &[NodeId]| ids.iter().map(|&i| net.node_name(i).to_string()).collect();
        let mut elements = Vec::with_capacity(net.elements.len() + net.devices.len());
        for e in &net.elements {
            let name = Some(e.name.clone());
            let nodes = names(&e.nodes);
            let path_label = e.path_label.clone();
            elements.push(match e.kind {
                ElementKind::Resistor { ohms } => ElementRecord::Resistor {
                    name,
                    nodes,
                    value: Eng(ohms),
                    path_label,
                },
                ElementKind::Capacitor { farads } => ElementRecord::Capacitor {
                    name,
                    nodes,
                    value: Eng(farads),
                    path_label,
                },
                ElementKind::Inductor { henries } => ElementRecord::Inductor {
                    name,
                    nodes,
                    value: Eng(henries),
                    path_label,
                },
                ElementKind::Vccs { gm } => ElementRecord::Vccs {
                    name,
                    nodes,
                    value: Eng(gm),
                    path_label,
                },
                ElementKind::VoltageSource { amplitude, ac } => ElementRecord::Vsource {
                    name,
                    nodes,
                    value: Eng(amplitude),
                    ac,
                    path_label,
                },
                ElementKind::CurrentSource { amplitude, ac } => ElementRecord::Isource {
                    name,
                    nodes,
                    value: Eng(amplitude),
                    ac,
                    path_label,
                },
            });
        }
        for d in &net.devices {
            elements.push(ElementRecord::Mos {
                name: Some(d.name.clone()),
                nodes: names(&[d.gate, d.drain, d.source, d.bulk]),
                gm: Eng(d.gm),
                gmb: Eng(d.gmb),
                gds: Eng(d.gds),
                cdbj: Eng(d.cdbj),
                csbj: Eng(d.csbj),
                path_label: d.path_label.clone(),
            });
        }
        let nodes = net
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Circuit && n.kind != NodeKind::GroundReference)
            .map(|n| (n.name.clone(), n.kind))
            .collect();
        NetlistFile {
            ground: net.ground_name().to_string(),
            nodes,
            elements,
        }
    }
}

impl ElementRecord {
    fn into_parts(self) -> (Option<String>, Vec<String>, ElementKind, Option<String>) {
        match self {
            ElementRecord::Resistor {
                name,
                nodes,
                value,
                path_label,
            } => (
                name,
                nodes,
                ElementKind::Resistor { ohms: value.0 },
                path_label,
            ),
            ElementRecord::Capacitor {
                name,
                nodes,
                value,
                path_label,
            } => (
                name,
                nodes,
                ElementKind::Capacitor { farads: value.0 },
                path_label,
            ),
            ElementRecord::Inductor {
                name,
                nodes,
                value,
                path_label,
            } => (
                name,
                nodes,
                ElementKind::Inductor { henries: value.0 },
                path_label,
            ),
            ElementRecord::Vccs {
                name,
                nodes,
                value,
                path_label,
            } => (name, nodes, ElementKind::Vccs { gm: value.0 }, path_label),
            ElementRecord::Vsource {
                name,
                nodes,
                value,
                ac,
                path_label,
            } => (
                name,
                nodes,
                ElementKind::VoltageSource {
                    amplitude: value.0,
                    ac,
                },
                path_label,
            ),
            ElementRecord::Isource {
                name,
                nodes,
                value,
                ac,
                path_label,
            } => (
                name,
                nodes,
                ElementKind::CurrentSource {
                    amplitude: value.0,
                    ac,
                },
                path_label,
            ),
            ElementRecord::Mos { .. } => unreachable!("handled by caller"),
        }
    }
}

impl Netlist {
    pub fn from_json_str(text: &str) -> Result<Netlist> {
        let file: NetlistFile = serde_json::from_str(text)
            .map_err(|e| Error::Parse(format!("line {} column {}: {e}", e.line(), e.column())))?;
        file.into_netlist()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&NetlistFile::from_netlist(self)).expect("netlist serializes")
    }

    pub fn load(path: &Path) -> Result<Netlist> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Netlist::from_json_str(&text).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_ground_and_unique_names() {
        let mut n = Netlist::new("0");
        n.add_node("a", NodeKind::Circuit).unwrap();
        assert!(matches!(
            n.add_node("a", NodeKind::Circuit),
            Err(Error::DuplicateNode(_))
        ));
        assert!(matches!(
            n.add_node("gnd2", NodeKind::GroundReference),
            Err(Error::DuplicateGround(..))
        ));
        assert_eq!(n.node(n.ground()).kind, NodeKind::GroundReference);
    }

    #[test]
    fn rejects_nonpositive_passives() {
        let mut n = Netlist::new("0");
        let a = n.ensure_node("a", NodeKind::Circuit);
        let g = n.ground();
        assert!(n.add_resistor(a, g, 0.0).is_err());
        assert!(n.add_capacitor(a, g, -1e-12).is_err());
        assert!(n.add_inductor(a, g, f64::NAN).is_err());
        assert!(n.add_vccs((a, g), (a, g), -5e-3).is_ok());
    }

    #[test]
    fn expansion_counts() {
        let mut n = Netlist::new("0");
        assert_eq!(n.expand_devices(), n);
        let [g, d, s, b] = ["g", "d", "s", "b"].map(|x| n.ensure_node(x, NodeKind::Circuit));
        n.add_device(MosSmallSignal {
            name: "M1".into(),
            gm: 20e-3,
            gmb: 10e-3,
            gds: 2.8e-3,
            cdbj: 120e-15,
            csbj: 200e-15,
            gate: g,
            drain: d,
            source: s,
            bulk: b,
            path_label: Some("nmos-backgate".into()),
        })
        .unwrap();
        let e = n.expand_devices();
        assert_eq!(e.elements().len(), n.elements().len() + 5);
        assert_eq!(e.devices().len(), n.devices().len() - 1);
        assert!(e
            .elements()
            .iter()
            .all(|x| x.path_label.as_deref() == Some("nmos-backgate")));
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let text = r#"{
            "ground": "gnd",
            "nodes": {"SUB": "interface"},
            "elements": [
                {"type": "resistor", "nodes": ["SUB", "gnd"], "value": "1k", "path_label": "ground-interconnect"},
                {"type": "capacitor", "nodes": ["SUB", "x"], "value": "120f"},
                {"type": "vsource", "nodes": ["SUB", "gnd"], "value": 1, "ac": true},
                {"type": "mos", "nodes": ["x", "d", "gnd", "SUB"], "gm": "20m", "gmb": "10m", "gds": "2.8m", "cdbj": "120f", "csbj": "200f"}
            ]
        }"#;
        let n = Netlist::from_json_str(text).unwrap();
        assert_eq!(n.node(n.require("SUB").unwrap()).kind, NodeKind::Interface);
        assert_eq!(n.elements().len(), 3);
        assert_eq!(n.devices().len(), 1);
        let again = Netlist::from_json_str(&n.to_json_string()).unwrap();
        assert_eq!(again, n);
    }

    #[test]
    fn json_errors_are_reported() {
        assert!(Netlist::from_json_str("{").is_err());
        let bad =
            r#"{"ground":"0","elements":[{"type":"resistor","nodes":["a","0"],"value":"-1"}]}"#;
        assert!(Netlist::from_json_str(bad).is_err());
        let bad = r#"{"ground":"0","elements":[{"type":"resistor","nodes":["a"],"value":"1"}]}"#;
        assert!(Netlist::from_json_str(bad).is_err());
        let bad = r#"{"ground":"0","nodes":{"g2":"ground-reference"},"elements":[]}"#;
        assert!(matches!(
            Netlist::from_json_str(bad),
            Err(Error::DuplicateGround(..))
        ));
    }
}
