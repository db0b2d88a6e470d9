//! Small-signal device parameters and the coupling stubs that attach circuit
//! entry nodes to the substrate or the package.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{ElementKind, Netlist, NodeId};
use crate::units::Eng;

/// One row of a bias table: bias volts, g_mb siemens, g_ds siemens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasRow(pub Eng, pub Eng, pub Eng);

/// Piecewise-linear g_mb/g_ds versus bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BiasRow>", into = "Vec<BiasRow>")]
pub struct BiasTable {
    rows: Vec<(f64, f64, f64)>,
}

impl BiasTable {
    pub fn new(rows: Vec<(f64, f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Invalid("bias table is empty".into()));
        }
        if rows.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Invalid(
                "bias table voltages must be strictly increasing".into(),
            ));
        }
        if let Some(r) = rows.iter().find(|r| !(r.1 > 0.0 && r.2 > 0.0)) {
            return Err(Error::Invalid(format!(
                "bias table row at {} V has non-positive values",
                r.0
            )));
        }
        Ok(BiasTable { rows })
    }

    pub fn rows(&self) -> &[(f64, f64, f64)] {
        &self.rows
    }

    pub fn range(&self) -> (f64, f64) {
        (self.rows[0].0, self.rows[self.rows.len() - 1].0)
    }

    /// (g_mb, g_ds) at `bias`, linearly interpolated. No extrapolation.
    pub fn mos_params(&self, bias: f64) -> Result<(f64, f64)> {
        let (lo, hi) = self.range();
        if !(bias >= lo && bias <= hi) {
            return Err(Error::OutOfRange {
                what: "bias".into(),
                value: bias,
                min: lo,
                max: hi,
            });
        }
        let k = self.rows.partition_point(|r| r.0 < bias);
        if self.rows[k].0 == bias {
            return Ok((self.rows[k].1, self.rows[k].2));
        }
        let (v0, a0, b0) = self.rows[k - 1];
        let (v1, a1, b1) = self.rows[k];
        let t = (bias - v0) / (v1 - v0);
        Ok((a0 + t * (a1 - a0), b0 + t * (b1 - b0)))
    }
}

impl Default for BiasTable {
    fn default() -> Self {
        BiasTable::new(vec![(0.5, 10e-3, 2.8e-3), (1.6, 38e-3, 22e-3)]).expect("valid default")
    }
}

impl TryFrom<Vec<BiasRow>> for BiasTable {
    type Error = Error;

    fn try_from(rows: Vec<BiasRow>) -> Result<Self> {
        BiasTable::new(rows.into_iter().map(|r| (r.0 .0, r.1 .0, r.2 .0)).collect())
    }
}

impl From<BiasTable> for Vec<BiasRow> {
    fn from(t: BiasTable) -> Self {
        t.rows
            .into_iter()
            .map(|(v, a, b)| BiasRow(Eng(v), Eng(a), Eng(b)))
            .collect()
    }
}

/// Frequency above which junction-capacitance feedthrough overtakes the
/// back-gate transconductance: g_mb / (2π (C_dbj + C_sbj)).
pub fn backgate_corner_freq(gmb: f64, cdbj: f64, csbj: f64) -> Result<f64> {
    for (what, v) in [("g_mb", gmb), ("C_dbj", cdbj), ("C_sbj", csbj)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Invalid(format!("{what} must be > 0, got {v}")));
        }
    }
    Ok(gmb / (2.0 * PI * (cdbj + csbj)))
}

/// Voltage-dependent tank capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Varactor {
    /// C(V) = Cmin + (Cmax - Cmin)(1 + tanh(slope (V - v_half)))/2
    Tanh {
        c_min: Eng,
        c_max: Eng,
        v_half: Eng,
        slope: Eng,
    },
    /// C(V) = c0 (1 + gamma V)
    Linear { c0: Eng, gamma: Eng },
}

impl Varactor {
    pub fn tanh(c_min: f64, c_max: f64, v_half: f64, slope: f64) -> Result<Self> {
        if !(c_min > 0.0 && c_max > c_min && slope > 0.0) {
            return Err(Error::Invalid(format!(
                "varactor needs Cmax > Cmin > 0 and slope > 0 (Cmin {c_min}, Cmax {c_max}, slope {slope})"
            )));
        }
        Ok(Varactor::Tanh {
            c_min: Eng(c_min),
            c_max: Eng(c_max),
            v_half: Eng(v_half),
            slope: Eng(slope),
        })
    }

    pub fn linear(c0: f64, gamma: f64) -> Result<Self> {
        if !(c0 > 0.0) || !gamma.is_finite() {
            return Err(Error::Invalid(format!(
                "linear varactor needs c0 > 0, got {c0}"
            )));
        }
        Ok(Varactor::Linear {
            c0: Eng(c0),
            gamma: Eng(gamma),
        })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Varactor::Tanh {
                c_min,
                c_max,
                v_half,
                slope,
            } => Varactor::tanh(c_min.0, c_max.0, v_half.0, slope.0).map(|_| ()),
            Varactor::Linear { c0, gamma } => Varactor::linear(c0.0, gamma.0).map(|_| ()),
        }
    }

    pub fn capacitance(&self, v: f64) -> f64 {
        match *self {
            Varactor::Tanh {
                c_min,
                c_max,
                v_half,
                slope,
            } => c_min.0 + (c_max.0 - c_min.0) * (1.0 + (slope.0 * (v - v_half.0)).tanh()) / 2.0,
            Varactor::Linear { c0, gamma } => c0.0 * (1.0 + gamma.0 * v),
        }
    }

    /// Analytic dC/dV.
    pub fn derivative(&self, v: f64) -> f64 {
        match *self {
            Varactor::Tanh {
                c_min,
                c_max,
                v_half,
                slope,
            } => {
                let t = (slope.0 * (v - v_half.0)).tanh();
                (c_max.0 - c_min.0) * slope.0 * (1.0 - t * t) / 2.0
            }
            Varactor::Linear { c0, gamma } => c0.0 * gamma.0,
        }
    }
}

pub const DEFAULT_PIN_RESISTANCE: f64 = 1.0;
pub const DEFAULT_PIN_INDUCTANCE: f64 = 2e-9;

/// Lumped coupling between a circuit node and the substrate (or, for a
/// package pin, between an on-chip net and the off-chip reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CouplingStub {
    InductorCap {
        circuit: String,
        substrate: String,
        farads: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    NwellCap {
        circuit: String,
        substrate: String,
        farads: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    SupplyCap {
        circuit: String,
        substrate: String,
        farads: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
    PackagePin {
        chip: String,
        board: String,
        #[serde(default = "default_pin_r")]
        ohms: Eng,
        #[serde(default = "default_pin_l")]
        henries: Eng,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path_label: Option<String>,
    },
}

fn default_pin_r() -> Eng {
    Eng(DEFAULT_PIN_RESISTANCE)
}

fn default_pin_l() -> Eng {
    Eng(DEFAULT_PIN_INDUCTANCE)
}

impl CouplingStub {
    fn default_label(&self) -> &'static str {
        match self {
            CouplingStub::InductorCap { .. } => "inductor",
            CouplingStub::NwellCap { .. } => "nwell-pmos",
            CouplingStub::SupplyCap { .. } => "supply",
            CouplingStub::PackagePin { .. } => "package",
        }
    }

    /// Add the stub's elements to `net`, creating nodes as needed. A package
    /// pin becomes a series R-L through an internal node `<chip>.pin`.
    pub fn stamp_into(&self, net: &mut Netlist) -> Result<()> {
        let label = match self {
            CouplingStub::InductorCap { path_label, .. }
            | CouplingStub::NwellCap { path_label, .. }
            | CouplingStub::SupplyCap { path_label, .. }
            | CouplingStub::PackagePin { path_label, .. } => path_label
                .clone()
                .unwrap_or_else(|| self.default_label().to_string()),
        };
        let node = |net: &mut Netlist, name: &str| -> NodeId {
            net.ensure_node(name, crate::NodeKind::Circuit)
        };
        match self {
            CouplingStub::InductorCap {
                circuit,
                substrate,
                farads,
                ..
            }
            | CouplingStub::NwellCap {
                circuit,
                substrate,
                farads,
                ..
            }
            | CouplingStub::SupplyCap {
                circuit,
                substrate,
                farads,
                ..
            } => {
                let a = node(net, circuit);
                let b = node(net, substrate);
                net.add_element(
                    ElementKind::Capacitor { farads: farads.0 },
                    &[a, b],
                    Some(&label),
                )?;
            }
            CouplingStub::PackagePin {
                chip,
                board,
                ohms,
                henries,
                ..
            } => {
                let a = node(net, chip);
                let b = node(net, board);
                let mid = node(net, &format!("{chip}.pin"));
                net.add_element(
                    ElementKind::Resistor { ohms: ohms.0 },
                    &[a, mid],
                    Some(&label),
                )?;
                net.add_element(
                    ElementKind::Inductor { henries: henries.0 },
                    &[mid, b],
                    Some(&label),
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_endpoints_and_midpoint() {
        let t = BiasTable::default();
        assert_eq!(t.mos_params(0.5).unwrap(), (10e-3, 2.8e-3));
        assert_eq!(t.mos_params(1.6).unwrap(), (38e-3, 22e-3));
        let (gmb, gds) = t.mos_params(1.05).unwrap();
        assert!((gmb - 24e-3).abs() < 1e-15);
        assert!((gds - 12.4e-3).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_bias_is_rejected() {
        let t = BiasTable::default();
        assert!(matches!(t.mos_params(0.49), Err(Error::OutOfRange { .. })));
        assert!(matches!(t.mos_params(1.7), Err(Error::OutOfRange { .. })));
        assert!(BiasTable::new(vec![(1.0, 1e-3, 1e-3), (1.0, 2e-3, 2e-3)]).is_err());
    }

    #[test]
    fn table_reads_engineering_strings() {
        let t: BiasTable =
            serde_json::from_str(r#"[[0.5, "10m", "2.8m"], [1.6, "38m", "22m"]]"#).unwrap();
        assert_eq!(t, BiasTable::default());
    }

    #[test]
    fn corner_frequency() {
        let lo = backgate_corner_freq(10e-3, 120e-15, 200e-15).unwrap();
        let hi = backgate_corner_freq(38e-3, 120e-15, 200e-15).unwrap();
        assert!((lo / 4.97e9 - 1.0).abs() < 5e-3, "{lo}");
        assert!((hi / 18.9e9 - 1.0).abs() < 5e-3, "{hi}");
        let unit = backgate_corner_freq(2.0 * PI * 2e-12, 1e-12, 1e-12).unwrap();
        assert!((unit - 1.0).abs() < 1e-12);
        assert!(backgate_corner_freq(0.0, 1e-15, 1e-15).is_err());
    }

    #[test]
    fn varactor_shape() {
        let v = Varactor::tanh(0.8e-12, 1.6e-12, 0.9, 2.5).unwrap();
        assert!((v.capacitance(0.9) - 1.2e-12).abs() < 1e-24);
        assert!((v.capacitance(50.0) - 1.6e-12).abs() < 1e-24);
        assert!((v.capacitance(-50.0) - 0.8e-12).abs() < 1e-24);
        let expect = 0.8e-12 * 2.5 / 2.0;
        assert!((v.derivative(0.9) / expect - 1.0).abs() < 1e-12);
        assert!(Varactor::tanh(1e-12, 1e-12, 0.0, 1.0).is_err());
    }

    #[test]
    fn package_pin_is_series_rl() {
        let mut net = Netlist::new("0");
        CouplingStub::PackagePin {
            chip: "vdd".into(),
            board: "0".into(),
            ohms: Eng(1.0),
            henries: Eng(2e-9),
            path_label: None,
        }
        .stamp_into(&mut net)
        .unwrap();
        assert_eq!(net.elements().len(), 2);
        assert_eq!(net.count_by_label()["package"], 2);
        assert!(net.node_id("vdd.pin").is_some());
    }
}
