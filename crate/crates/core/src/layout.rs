//! Layout and technology descriptions: the extraction inputs.
//!
//! All lengths are meters; every numeric field also accepts engineering
//! strings such as `"100u"`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::devices::{BiasTable, CouplingStub};
use crate::error::{Error, Result};
use crate::netlist::NetlistFile;
use crate::units::Eng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: Eng,
    pub y0: Eng,
    pub x1: Eng,
    pub y1: Eng,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect {
            x0: Eng(x0),
            y0: Eng(y0),
            x1: Eng(x1),
            y1: Eng(y1),
        }
    }

    pub fn width(&self) -> f64 {
        self.x1.0 - self.x0.0
    }

    pub fn height(&self) -> f64 {
        self.y1.0 - self.y0.0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x0.0 >= self.x0.0
            && other.x1.0 <= self.x1.0
            && other.y0.0 >= self.y0.0
            && other.y1.0 <= self.y1.0
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x0.0 && x <= self.x1.0 && y >= self.y0.0 && y <= self.y1.0
    }

    /// Interiors intersect (touching edges do not count).
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x0.0 < other.x1.0
            && other.x0.0 < self.x1.0
            && self.y0.0 < other.y1.0
            && other.y0.0 < self.y1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpiLayer {
    pub resistivity: Eng,
    pub thickness: Eng,
}

/// Vertical substrate profile. Epi layers are listed top-down and sit above
/// the bulk, whose own thickness is `thickness`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateStack {
    pub resistivity: Eng,
    pub thickness: Eng,
    #[serde(default)]
    pub epi: Vec<EpiLayer>,
    #[serde(default)]
    pub backside_contact: bool,
}

impl SubstrateStack {
    pub fn uniform(resistivity: f64, thickness: f64) -> Self {
        SubstrateStack {
            resistivity: Eng(resistivity),
            thickness: Eng(thickness),
            epi: Vec::new(),
            backside_contact: false,
        }
    }

    pub fn total_thickness(&self) -> f64 {
        self.thickness.0 + self.epi.iter().map(|l| l.thickness.0).sum::<f64>()
    }

    /// (depth of bottom boundary, resistivity) per layer, top-down.
    pub fn layers(&self) -> Vec<(f64, f64)> {
        let mut depth = 0.0;
        let mut out = Vec::new();
        for l in &self.epi {
            depth += l.thickness.0;
            out.push((depth, l.resistivity.0));
        }
        out.push((depth + self.thickness.0, self.resistivity.0));
        out
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.resistivity.0) || !ok(self.thickness.0) {
            return Err(Error::Invalid(
                "substrate resistivity and thickness must be > 0".into(),
            ));
        }
        if self
            .epi
            .iter()
            .any(|l| !ok(l.resistivity.0) || !ok(l.thickness.0))
        {
            return Err(Error::Invalid(
                "epi layer resistivity and thickness must be > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceFeature {
    /// Ohmic substrate contact tied to `node`.
    Contact {
        name: String,
        rect: Rect,
        node: String,
    },
    /// Well coupled to the substrate through its junction capacitance.
    Well {
        name: String,
        rect: Rect,
        node: String,
        cap_density: Eng,
    },
    /// Port where a signal is injected or a substrate potential observed.
    InjectionPort {
        name: String,
        rect: Rect,
        node: String,
    },
}

impl SurfaceFeature {
    pub fn name(&self) -> &str {
        match self {
            SurfaceFeature::Contact { name, .. }
            | SurfaceFeature::Well { name, .. }
            | SurfaceFeature::InjectionPort { name, .. } => name,
        }
    }

    pub fn rect(&self) -> &Rect {
        match self {
            SurfaceFeature::Contact { rect, .. }
            | SurfaceFeature::Well { rect, .. }
            | SurfaceFeature::InjectionPort { rect, .. } => rect,
        }
    }

    pub fn node(&self) -> &str {
        match self {
            SurfaceFeature::Contact { node, .. }
            | SurfaceFeature::Well { node, .. }
            | SurfaceFeature::InjectionPort { node, .. } => node,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    /// Subdivision factor for cells bordering a feature edge.
    #[serde(default = "one")]
    pub refinement: usize,
    /// Depth lines sit at thickness·(k/nz)^z_grading; values above 1 crowd
    /// cells toward the surface.
    #[serde(default = "unit")]
    pub z_grading: f64,
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl MeshSpec {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        MeshSpec {
            nx,
            ny,
            nz,
            refinement: 1,
            z_grading: 1.0,
        }
    }

    pub fn doubled(&self) -> Self {
        MeshSpec {
            nx: 2 * self.nx,
            ny: 2 * self.ny,
            nz: 2 * self.nz,
            refinement: self.refinement,
            z_grading: self.z_grading,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_grading >= 1.0 && self.z_grading <= 4.0) {
            return Err(Error::Invalid(format!(
                "z_grading must be in [1, 4], got {}",
                self.z_grading
            )));
        }
        if self.nx < 2 || self.ny < 2 || self.nz < 2 || self.refinement < 1 {
            return Err(Error::Invalid(format!(
                "mesh counts must be >= 2 and refinement >= 1 (got {}x{}x{}, refinement {})",
                self.nx, self.ny, self.nz, self.refinement
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Eng, pub Eng);

/// A routed wire between two named nets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WireSegment {
    pub name: String,
    pub layer: String,
    pub path: Vec<Point>,
    pub width: Eng,
    pub from: String,
    pub to: String,
    /// Overrides the technology's sheet resistance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sheet_resistance: Option<Eng>,
    /// Overrides the technology's capacitance density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap_density: Option<Eng>,
    /// Via/contact resistance at the start and end; technology default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub via_resistance: Option<(Eng, Eng)>,
    /// Node receiving the wire's substrate capacitance (ground when absent).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substrate_node: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_label: Option<String>,
    #[serde(default = "yes")]
    pub resizable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerTech {
    pub sheet_resistance: Eng,
    #[serde(default)]
    pub cap_density: Eng,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Technology {
    #[serde(default)]
    pub layers: BTreeMap<String, LayerTech>,
    /// Calibration factor applied to every substrate mesh conductance.
    #[serde(default = "unit_scale")]
    pub mesh_conductance_scale: Eng,
    #[serde(default = "default_via")]
    pub via_resistance: Eng,
    #[serde(default = "default_corner")]
    pub corner_weight: Eng,
    #[serde(default)]
    pub bias_table: BiasTable,
}

fn unit_scale() -> Eng {
    Eng(1.0)
}

fn default_via() -> Eng {
    Eng(crate::interconnect::DEFAULT_VIA_RESISTANCE)
}

fn default_corner() -> Eng {
    Eng(crate::interconnect::DEFAULT_CORNER_WEIGHT)
}

impl Default for Technology {
    fn default() -> Self {
        Technology {
            layers: BTreeMap::new(),
            mesh_conductance_scale: unit_scale(),
            via_resistance: default_via(),
            corner_weight: default_corner(),
            bias_table: BiasTable::default(),
        }
    }
}

impl Technology {
    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }

    pub fn layer(&self, name: &str) -> Result<&LayerTech> {
        self.layers.get(name).ok_or_else(|| {
            Error::Invalid(format!(
                "layer {name:?} is not defined in the technology file"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layout {
    #[serde(default = "default_ground")]
    pub ground: String,
    pub die: Rect,
    pub stack: SubstrateStack,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub features: Vec<SurfaceFeature>,
    #[serde(default)]
    pub wires: Vec<WireSegment>,
    #[serde(default)]
    pub stubs: Vec<CouplingStub>,
    /// Circuit elements placed on the layout's nets.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circuit: Vec<crate::netlist::ElementRecord>,
}

fn default_ground() -> String {
    "0".to_string()
}

impl Layout {
    pub fn load(path: &Path) -> Result<Self> {
        load_json(path)
    }

    pub fn circuit_file(&self) -> NetlistFile {
        NetlistFile {
            ground: self.ground.clone(),
            nodes: BTreeMap::new(),
            elements: self.circuit.clone(),
        }
    }
}

pub(crate) fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::File {
        path: path.to_path_buf(),
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}
