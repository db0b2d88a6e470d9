//! Finite-volume substrate mesh and its reduction to a port macro-model.
//!
//! The substrate is cut into a rectilinear tensor grid with one node per
//! cell center. Grid lines always include the die edges, every feature edge
//! and every layer boundary, so each cell lies entirely inside or outside a
//! feature footprint and entirely inside one resistivity layer.
//!
//! Surface cells covered by a contact or port are shorted to (merged into)
//! the feature's terminal node. Cells under a well merge into an
//! equipotential plate node `<node>#sub`, which couples to the well node
//! through C = density × area.
//!
//! Depth lines can be graded toward the surface and cells bordering a
//! feature edge can be subdivided, since the spreading current concentrates
//! there.

use faer::prelude::*;
use faer::sparse::SparseColMat;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::layout::{MeshSpec, Rect, SubstrateStack, SurfaceFeature};
use crate::netlist::{ElementKind, Netlist, NodeId, NodeKind};

/// Grid lines closer than this fraction of the axis span are merged.
const MERGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct SubstrateMesh {
    pub netlist: Netlist,
    /// Feature terminal and well plate nodes, in feature order.
    pub ports: Vec<String>,
    pub x_lines: Vec<f64>,
    pub y_lines: Vec<f64>,
    /// Depths below the surface, top first.
    pub z_lines: Vec<f64>,
}

impl SubstrateMesh {
    pub fn cell_count(&self) -> usize {
        (self.x_lines.len() - 1) * (self.y_lines.len() - 1) * (self.z_lines.len() - 1)
    }
}

pub fn cell_name(ix: usize, iy: usize, iz: usize) -> String {
    format!("m{ix}_{iy}_{iz}")
}

fn axis_lines(
    lo: f64,
    hi: f64,
    n: usize,
    grading: f64,
    edges: &[f64],
    refine: &[(f64, f64)],
    factor: usize,
) -> Vec<f64> {
    let span = hi - lo;
    let mut lines: Vec<f64> = (0..=n)
        .map(|k| lo + span * (k as f64 / n as f64).powf(grading))
        .collect();
    lines.extend(edges.iter().copied().filter(|&e| e > lo && e < hi));
    lines.sort_by(f64::total_cmp);
    let mut merged: Vec<f64> = Vec::with_capacity(lines.len());
    for x in lines {
        match merged.last() {
            Some(&last) if x - last <= MERGE_TOL * span => {
                // Prefer exact feature edges over base lines.
                if edges.contains(&x) {
                    *merged.last_mut().unwrap() = x;
                }
            }
            _ => merged.push(x),
        }
    }
    *merged.first_mut().unwrap() = lo;
    *merged.last_mut().unwrap() = hi;
    if factor <= 1 || refine.is_empty() {
        return merged;
    }
    let near_edge = |x: f64| {
        refine
            .iter()
            .any(|&(a, b)| (x - a).abs() <= MERGE_TOL * span || (x - b).abs() <= MERGE_TOL * span)
    };
    let mut out = vec![merged[0]];
    for w in merged.windows(2) {
        let pieces = if near_edge(w[0]) || near_edge(w[1]) {
            factor
        } else {
            1
        };
        for k in 1..=pieces {
            out.push(if k == pieces {
                w[1]
            } else {
                w[0] + (w[1] - w[0]) * k as f64 / pieces as f64
            });
        }
    }
    out
}

fn check_features(features: &[SurfaceFeature], die: &Rect) -> Result<()> {
    for (k, f) in features.iter().enumerate() {
        let r = f.rect();
        if !(r.width() > 0.0 && r.height() > 0.0) {
            return Err(Error::DegenerateCell(format!(
                "feature {:?} has zero extent",
                f.name()
            )));
        }
        if !die.contains(r) {
            return Err(Error::FeatureOutsideDie(f.name().to_string()));
        }
        if let Some(g) = features[..k].iter().find(|g| g.rect().overlaps(r)) {
            return Err(Error::Invalid(format!(
                "features {:?} and {:?} overlap",
                g.name(),
                f.name()
            )));
        }
        if f.node().ends_with("#sub") {
            return Err(Error::Invalid(format!(
                "feature node {:?} uses the reserved suffix #sub",
                f.node()
            )));
        }
    }
    Ok(())
}

/// Mesh with unit conductance scale.
pub fn build_mesh(
    stack: &SubstrateStack,
    features: &[SurfaceFeature],
    die: &Rect,
    spec: &MeshSpec,
    ground: &str,
) -> Result<SubstrateMesh> {
    build_mesh_scaled(stack, features, die, spec, ground, 1.0)
}

/// Mesh whose every conductance is multiplied by `scale` (calibration).
pub fn build_mesh_scaled(
    stack: &SubstrateStack,
    features: &[SurfaceFeature],
    die: &Rect,
    spec: &MeshSpec,
    ground: &str,
    scale: f64,
) -> Result<SubstrateMesh> {
    stack.validate()?;
    spec.validate()?;
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Invalid(format!(
            "mesh conductance scale must be > 0, got {scale}"
        )));
    }
    if !(die.width() > 0.0 && die.height() > 0.0) {
        return Err(Error::DegenerateCell("die outline has zero extent".into()));
    }
    check_features(features, die)?;

    let xe: Vec<f64> = features
        .iter()
        .flat_map(|f| [f.rect().x0.0, f.rect().x1.0])
        .collect();
    let ye: Vec<f64> = features
        .iter()
        .flat_map(|f| [f.rect().y0.0, f.rect().y1.0])
        .collect();
    let xr: Vec<(f64, f64)> = features
        .iter()
        .map(|f| (f.rect().x0.0, f.rect().x1.0))
        .collect();
    let yr: Vec<(f64, f64)> = features
        .iter()
        .map(|f| (f.rect().y0.0, f.rect().y1.0))
        .collect();
    let x_lines = axis_lines(die.x0.0, die.x1.0, spec.nx, 1.0, &xe, &xr, spec.refinement);
    let y_lines = axis_lines(die.y0.0, die.y1.0, spec.ny, 1.0, &ye, &yr, spec.refinement);
    let layers = stack.layers();
    let depth_edges: Vec<f64> = layers.iter().map(|l| l.0).collect();
    let z_lines = axis_lines(
        0.0,
        stack.total_thickness(),
        spec.nz,
        spec.z_grading,
        &depth_edges,
        &[],
        1,
    );

    let (nx, ny, nz) = (x_lines.len() - 1, y_lines.len() - 1, z_lines.len() - 1);
    let dx: Vec<f64> = x_lines.windows(2).map(|w| w[1] - w[0]).collect();
    let dy: Vec<f64> = y_lines.windows(2).map(|w| w[1] - w[0]).collect();
    let dz: Vec<f64> = z_lines.windows(2).map(|w| w[1] - w[0]).collect();
    if dx.iter().chain(&dy).chain(&dz).any(|d| !(*d > 0.0)) {
        return Err(Error::DegenerateCell(
            "grid produced a zero-width cell".into(),
        ));
    }
    let rho: Vec<f64> = (0..nz)
        .map(|k| {
            let mid = 0.5 * (z_lines[k] + z_lines[k + 1]);
            layers
                .iter()
                .find(|l| mid < l.0)
                .unwrap_or(layers.last().unwrap())
                .1
        })
        .collect();

    let mut net = Netlist::new(ground);
    let mut ports = Vec::new();
    let add_port = |ports: &mut Vec<String>, name: &str| {
        if name != ground && !ports.iter().any(|p| p == name) {
            ports.push(name.to_string());
        }
    };
    // Surface cells under a footprint are the feature's terminal node.
    let mut surface: Vec<Option<NodeId>> = vec![None; nx * ny];
    for f in features {
        let rect = f.rect();
        let terminal = match f {
            SurfaceFeature::Well {
                node, cap_density, ..
            } => {
                let plate = format!("{node}#sub");
                let p = net.ensure_node(&plate, NodeKind::Interface);
                let w = net.ensure_node(node, NodeKind::Interface);
                add_port(&mut ports, &plate);
                add_port(&mut ports, node);
                let c = cap_density.0 * rect.area();
                if c > 0.0 {
                    net.add_element(ElementKind::Capacitor { farads: c }, &[w, p], None)?;
                }
                p
            }
            SurfaceFeature::Contact { node, .. } | SurfaceFeature::InjectionPort { node, .. } => {
                add_port(&mut ports, node);
                net.ensure_node(node, NodeKind::Interface)
            }
        };
        let mut covered = 0;
        for iy in 0..ny {
            for ix in 0..nx {
                let cx = 0.5 * (x_lines[ix] + x_lines[ix + 1]);
                let cy = 0.5 * (y_lines[iy] + y_lines[iy + 1]);
                if rect.contains_point(cx, cy) {
                    surface[iy * nx + ix] = Some(terminal);
                    covered += 1;
                }
            }
        }
        debug_assert!(covered > 0, "feature edges are grid lines");
    }

    let mut ids = Vec::with_capacity(nx * ny * nz);
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let id = match (iz, surface[iy * nx + ix]) {
                    (0, Some(t)) => t,
                    _ => net.add_node(&cell_name(ix, iy, iz), NodeKind::SubstrateMesh)?,
                };
                ids.push(id);
            }
        }
    }
    let id = |ix: usize, iy: usize, iz: usize| ids[(iz * ny + iy) * nx + ix];
    let r = |g: f64| ElementKind::Resistor {
        ohms: 1.0 / (g * scale),
    };
    let link = |net: &mut Netlist, a: NodeId, b: NodeId, g: f64| -> Result<()> {
        if a != b {
            net.add_element(r(g), &[a, b], None)?;
        }
        Ok(())
    };

    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let here = id(ix, iy, iz);
                if ix + 1 < nx {
                    let a = dy[iy] * dz[iz];
                    link(
                        &mut net,
                        here,
                        id(ix + 1, iy, iz),
                        a / (rho[iz] * 0.5 * (dx[ix] + dx[ix + 1])),
                    )?;
                }
                if iy + 1 < ny {
                    let a = dx[ix] * dz[iz];
                    link(
                        &mut net,
                        here,
                        id(ix, iy + 1, iz),
                        a / (rho[iz] * 0.5 * (dy[iy] + dy[iy + 1])),
                    )?;
                }
                if iz + 1 < nz {
                    let a = dx[ix] * dy[iy];
                    let g = a / (0.5 * (rho[iz] * dz[iz] + rho[iz + 1] * dz[iz + 1]));
                    link(&mut net, here, id(ix, iy, iz + 1), g)?;
                }
            }
        }
    }

    if stack.backside_contact {
        let g0 = net.ground();
        for iy in 0..ny {
            for ix in 0..nx {
                let g = dx[ix] * dy[iy] / (rho[nz - 1] * 0.5 * dz[nz - 1]);
                net.add_element(r(g), &[id(ix, iy, nz - 1), g0], None)?;
            }
        }
    }

    Ok(SubstrateMesh {
        netlist: net,
        ports,
        x_lines,
        y_lines,
        z_lines,
    })
}

/// Schur-complement reduction of the resistive network onto `ports` (the
/// ground node is always kept as reference). Non-resistive elements must
/// connect kept nodes only and are copied unchanged.
pub fn reduce_to_ports(mesh: &Netlist, ports: &[&str]) -> Result<Netlist> {
    let net = mesh.expand_devices();
    let ground = net.ground();
    let n = net.node_count();
    let mut keep = vec![false; n];
    keep[ground.0] = true;
    let mut port_ids = Vec::new();
    for p in ports {
        let id = net
            .node_id(p)
            .ok_or_else(|| Error::PortNotInMesh(p.to_string()))?;
        if !keep[id.0] {
            keep[id.0] = true;
            if id != ground {
                port_ids.push(id);
            }
        }
    }
    if port_ids.len() + 1 < 2 || ports.len() < 2 {
        return Err(Error::Invalid("reduction needs at least two ports".into()));
    }

    let mut resistors = Vec::new();
    let mut others = Vec::new();
    for e in net.elements() {
        match e.kind {
            ElementKind::Resistor { ohms } => {
                if ohms.is_finite() && e.nodes[0] != e.nodes[1] {
                    resistors.push((e.nodes[0], e.nodes[1], 1.0 / ohms));
                }
            }
            _ => {
                if let Some(bad) = e.nodes.iter().find(|id| !keep[id.0]) {
                    return Err(Error::ReactiveInternalNode(net.node_name(*bad).to_string()));
                }
                others.push(e.clone());
            }
        }
    }

    // Index interior nodes and kept non-ground nodes separately.
    let mut interior_row = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for i in 0..n {
        if !keep[i] {
            interior_row[i] = interior.len();
            interior.push(NodeId(i));
        }
    }
    let mut port_row = vec![usize::MAX; n];
    for (k, id) in port_ids.iter().enumerate() {
        port_row[id.0] = k;
    }
    let p = port_ids.len();
    let m = interior.len();

    let mut s = vec![vec![0.0f64; p]; p];
    let mut lii: Vec<(usize, usize, f64)> = Vec::new();
    // Columns of L_IP, one sparse list per port.
    let mut lip: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p];
    let mut touched = vec![false; m];
    for &(a, b, g) in &resistors {
        for (u, v) in [(a, b), (b, a)] {
            if interior_row[u.0] != usize::MAX {
                let i = interior_row[u.0];
                touched[i] = true;
                lii.push((i, i, g));
                if interior_row[v.0] != usize::MAX && interior_row[v.0] > i {
                    lii.push((interior_row[v.0], i, -g));
                } else if port_row[v.0] != usize::MAX {
                    lip[port_row[v.0]].push((i, -g));
                }
            } else if port_row[u.0] != usize::MAX {
                let i = port_row[u.0];
                s[i][i] += g;
                if port_row[v.0] != usize::MAX {
                    s[i][port_row[v.0]] -= g;
                }
            }
        }
    }
    if let Some(i) = touched.iter().position(|t| !t) {
        return Err(Error::DisconnectedNode(
            net.node_name(interior[i]).to_string(),
        ));
    }

    if m > 0 {
        let singular = || Error::Singular {
            nodes: vec!["substrate interior region not connected to any port".into()],
        };
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &lii)
            .map_err(|_| singular())?;
        let llt = a.sp_cholesky(Side::Lower).map_err(|_| singular())?;
        // S -= L_PI L_II^-1 L_IP, all port columns at once.
        let mut rhs = Mat::<f64>::zeros(m, p);
        for (c, col) in lip.iter().enumerate() {
            for &(i, g) in col {
                rhs[(i, c)] += g;
            }
        }
        llt.solve_in_place(rhs.as_mut());
        let cols: Vec<Vec<f64>> = (0..p)
            .map(|c| {
                (0..p)
                    .map(|r| lip[r].iter().map(|&(i, g)| g * rhs[(i, c)]).sum::<f64>())
                    .collect()
            })
            .collect();
        for (c, col) in cols.iter().enumerate() {
            for r in 0..p {
                s[r][c] -= col[r];
            }
        }
    }

    let mut out = Netlist::new(net.ground_name());
    let mut map = vec![None; n];
    map[ground.0] = Some(out.ground());
    for &id in &port_ids {
        map[id.0] = Some(out.add_node(net.node_name(id), net.node(id).kind)?);
    }
    let scale = (0..p).map(|i| s[i][i].abs()).fold(0.0, f64::max);
    let eps = 1e-12 * scale;
    for i in 0..p {
        for j in i + 1..p {
            let g = -0.5 * (s[i][j] + s[j][i]);
            if g > eps {
                out.add_named(
                    format!(
                        "R{}_{}",
                        out.node_name(map[port_ids[i].0].unwrap()),
                        out.node_name(map[port_ids[j].0].unwrap())
                    ),
                    ElementKind::Resistor { ohms: 1.0 / g },
                    &[map[port_ids[i].0].unwrap(), map[port_ids[j].0].unwrap()],
                    None,
                )?;
            }
        }
        let g0: f64 = s[i].iter().sum::<f64>();
        if g0 > eps {
            let a = map[port_ids[i].0].unwrap();
            out.add_named(
                format!("R{}_{}", out.node_name(a), out.ground_name()),
                ElementKind::Resistor { ohms: 1.0 / g0 },
                &[a, out.ground()],
                None,
            )?;
        }
    }
    for e in others {
        let nodes: Vec<NodeId> = e.nodes.iter().map(|id| map[id.0].expect("kept")).collect();
        out.add_named(e.name.clone(), e.kind, &nodes, e.path_label.as_deref())?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::point_to_point_resistance;

    fn bar(nz: usize, z_grading: f64) -> SubstrateMesh {
        // 100 um tall, 100 um x 100 um cross-section: top contact, backside to ground.
        let die = Rect::new(0.0, 0.0, 100e-6, 100e-6);
        let mut stack = SubstrateStack::uniform(0.2, 100e-6);
        stack.backside_contact = true;
        let features = vec![SurfaceFeature::Contact {
            name: "top".into(),
            rect: die,
            node: "a".into(),
        }];
        let spec = MeshSpec {
            z_grading,
            ..MeshSpec::new(4, 4, nz)
        };
        build_mesh(&stack, &features, &die, &spec, "0").unwrap()
    }

    // The shorted top cell removes half its own height from the bar.
    fn bar_exact(m: &SubstrateMesh) -> f64 {
        0.2 * (100e-6 - 0.5 * m.z_lines[1]) / 1e-8
    }

    #[test]
    fn vertical_bar_is_rho_l_over_a() {
        for (nz, g) in [(20, 2.0), (40, 1.0), (20, 1.5)] {
            let m = bar(nz, g);
            let r = point_to_point_resistance(&m.netlist, "a", "0").unwrap();
            assert!((r / bar_exact(&m) - 1.0).abs() < 1e-9, "{r}");
            assert!((r / 2000.0 - 1.0).abs() < 0.02, "{r}");
        }
    }

    #[test]
    fn two_port_reduction_of_bar() {
        let m = bar(20, 2.0);
        let red = reduce_to_ports(&m.netlist, &["a", "0"]).unwrap();
        assert_eq!(red.elements().len(), 1);
        let r = point_to_point_resistance(&red, "a", "0").unwrap();
        assert!((r / bar_exact(&m) - 1.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn features_are_validated() {
        let die = Rect::new(0.0, 0.0, 10e-6, 10e-6);
        let stack = SubstrateStack::uniform(0.2, 10e-6);
        let spec = MeshSpec::new(2, 2, 2);
        let out = vec![SurfaceFeature::Contact {
            name: "x".into(),
            rect: Rect::new(5e-6, 5e-6, 11e-6, 6e-6),
            node: "a".into(),
        }];
        assert!(matches!(
            build_mesh(&stack, &out, &die, &spec, "0"),
            Err(Error::FeatureOutsideDie(_))
        ));
        let overlap = vec![
            SurfaceFeature::Contact {
                name: "p".into(),
                rect: Rect::new(0.0, 0.0, 5e-6, 5e-6),
                node: "a".into(),
            },
            SurfaceFeature::Contact {
                name: "q".into(),
                rect: Rect::new(4e-6, 4e-6, 6e-6, 6e-6),
                node: "b".into(),
            },
        ];
        assert!(build_mesh(&stack, &overlap, &die, &spec, "0").is_err());
        let flat = vec![SurfaceFeature::Contact {
            name: "z".into(),
            rect: Rect::new(1e-6, 1e-6, 1e-6, 2e-6),
            node: "a".into(),
        }];
        assert!(matches!(
            build_mesh(&stack, &flat, &die, &spec, "0"),
            Err(Error::DegenerateCell(_))
        ));
        assert!(build_mesh(&stack, &[], &die, &MeshSpec::new(1, 2, 2), "0").is_err());
    }

    #[test]
    fn feature_edges_become_grid_lines() {
        let die = Rect::new(0.0, 0.0, 100e-6, 100e-6);
        let stack = SubstrateStack::uniform(0.2, 50e-6);
        let f = vec![SurfaceFeature::InjectionPort {
            name: "p".into(),
            rect: Rect::new(13e-6, 27e-6, 31e-6, 44e-6),
            node: "p".into(),
        }];
        let m = build_mesh(&stack, &f, &die, &MeshSpec::new(4, 4, 2), "0").unwrap();
        for x in [13e-6, 31e-6] {
            assert!(m.x_lines.contains(&x));
        }
        for y in [27e-6, 44e-6] {
            assert!(m.y_lines.contains(&y));
        }
        let refined = build_mesh(
            &stack,
            &f,
            &die,
            &MeshSpec {
                refinement: 3,
                ..MeshSpec::new(4, 4, 2)
            },
            "0",
        )
        .unwrap();
        assert!(refined.x_lines.len() > m.x_lines.len());
    }

    #[test]
    fn well_plate_carries_junction_cap() {
        let die = Rect::new(0.0, 0.0, 100e-6, 100e-6);
        let stack = SubstrateStack::uniform(0.2, 50e-6);
        let f = vec![
            SurfaceFeature::Well {
                name: "nw".into(),
                rect: Rect::new(0.0, 0.0, 50e-6, 50e-6),
                node: "nw".into(),
                cap_density: crate::units::Eng(1e-4),
            },
            SurfaceFeature::Contact {
                name: "g".into(),
                rect: Rect::new(75e-6, 75e-6, 100e-6, 100e-6),
                node: "0".into(),
            },
        ];
        let m = build_mesh(&stack, &f, &die, &MeshSpec::new(4, 4, 2), "0").unwrap();
        assert_eq!(m.ports, vec!["nw#sub".to_string(), "nw".to_string()]);
        let caps: Vec<f64> = m
            .netlist
            .elements()
            .iter()
            .filter_map(|e| match e.kind {
                ElementKind::Capacitor { farads } => Some(farads),
                _ => None,
            })
            .collect();
        assert_eq!(caps.len(), 1);
        assert!((caps[0] - 1e-4 * 2.5e-9).abs() < 1e-24);
        // Reduction keeps the capacitor between the two kept nodes.
        let red = reduce_to_ports(&m.netlist, &["nw#sub", "nw"]).unwrap();
        assert_eq!(
            red.elements()
                .iter()
                .filter(|e| matches!(e.kind, ElementKind::Capacitor { .. }))
                .count(),
            1
        );
        assert!(matches!(
            reduce_to_ports(&m.netlist, &["nw", "0"]),
            Err(Error::ReactiveInternalNode(_))
        ));
        assert!(matches!(
            reduce_to_ports(&m.netlist, &["nope", "0"]),
            Err(Error::PortNotInMesh(_))
        ));
    }
}
