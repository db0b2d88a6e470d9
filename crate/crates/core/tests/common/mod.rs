#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use subimpact::{Netlist, NodeId, NodeKind};

/// Two-terminal branch of a test network; node 0 is ground.
#[derive(Debug, Clone, Copy)]
pub enum Branch {
    R(usize, usize, f64),
    C(usize, usize, f64),
    L(usize, usize, f64),
}

#[derive(Debug, Clone)]
pub struct TestNetwork {
    pub nodes: usize,
    pub branches: Vec<Branch>,
}

pub fn name(k: usize) -> String {
    if k == 0 {
        "0".into()
    } else {
        format!("n{k}")
    }
}

impl TestNetwork {
    /// Connected random network: a resistor spanning tree to ground plus
    /// extra R, C and (optionally) L branches.
    pub fn random(seed: u64, nodes: usize, extra: usize, inductors: bool) -> Self {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut branches = Vec::new();
        for k in 1..=nodes {
            let parent = rng.gen_range(0..k);
            branches.push(Branch::R(k, parent, 10f64.powf(rng.gen_range(0.0..4.0))));
        }
        for _ in 0..extra {
            let a = rng.gen_range(0..=nodes);
            let mut b = rng.gen_range(0..=nodes);
            if a == b {
                b = (a + 1) % (nodes + 1);
            }
            let kind = rng.gen_range(0..if inductors { 3 } else { 2 });
            branches.push(match kind {
                0 => Branch::R(a, b, 10f64.powf(rng.gen_range(0.0..4.0))),
                1 => Branch::C(a, b, 10f64.powf(rng.gen_range(-13.0..-10.0))),
                _ => Branch::L(a, b, 10f64.powf(rng.gen_range(-9.0..-6.0))),
            });
        }
        TestNetwork { nodes, branches }
    }

    pub fn scaled(&self, s: f64) -> Self {
        TestNetwork {
            nodes: self.nodes,
            branches: self
                .branches
                .iter()
                .map(|b| match *b {
                    Branch::R(a, c, v) => Branch::R(a, c, v * s),
                    Branch::C(a, c, v) => Branch::C(a, c, v / s),
                    Branch::L(a, c, v) => Branch::L(a, c, v * s),
                })
                .collect(),
        }
    }

    pub fn netlist(&self) -> Netlist {
        let mut net = Netlist::new("0");
        let ids: Vec<NodeId> = (0..=self.nodes)
            .map(|k| net.ensure_node(&name(k), NodeKind::Circuit))
            .collect();
        for b in &self.branches {
            match *b {
                Branch::R(a, c, v) => net.add_resistor(ids[a], ids[c], v).unwrap(),
                Branch::C(a, c, v) => net.add_capacitor(ids[a], ids[c], v).unwrap(),
                Branch::L(a, c, v) => net.add_inductor(ids[a], ids[c], v).unwrap(),
            };
        }
        net
    }

    /// Nodal admittance matrix without the ground row and column.
    pub fn admittance(&self, f: f64) -> DMatrix<Complex64> {
        let w = 2.0 * std::f64::consts::PI * f;
        let mut y = DMatrix::from_element(self.nodes, self.nodes, Complex64::new(0.0, 0.0));
        for b in &self.branches {
            let (a, c, g) = match *b {
                Branch::R(a, c, v) => (a, c, Complex64::new(1.0 / v, 0.0)),
                Branch::C(a, c, v) => (a, c, Complex64::new(0.0, w * v)),
                Branch::L(a, c, v) => (a, c, Complex64::new(0.0, -1.0 / (w * v))),
            };
            if a > 0 {
                y[(a - 1, a - 1)] += g;
            }
            if c > 0 {
                y[(c - 1, c - 1)] += g;
            }
            if a > 0 && c > 0 {
                y[(a - 1, c - 1)] -= g;
                y[(c - 1, a - 1)] -= g;
            }
        }
        y
    }

    /// Node voltages (index 1..=nodes) for the given current injections.
    pub fn solve(&self, f: f64, injections: &[(usize, f64)]) -> Vec<Complex64> {
        let y = self.admittance(f);
        let mut rhs = DVector::from_element(self.nodes, Complex64::new(0.0, 0.0));
        for &(k, i) in injections {
            rhs[k - 1] += Complex64::new(i, 0.0);
        }
        let v = y.lu().solve(&rhs).expect("oracle matrix is nonsingular");
        std::iter::once(Complex64::new(0.0, 0.0))
            .chain(v.iter().copied())
            .collect()
    }
}

/// Resistor grid of nx × ny nodes with unit resistors; node (i, j) is
/// `g{i}_{j}`. The grid's corner (0, 0) is tied to ground through `r_tie`.
pub fn grid(nx: usize, ny: usize, r_tie: f64) -> (Netlist, TestNetwork) {
    let idx = |i: usize, j: usize| 1 + i + nx * j;
    let mut branches = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                branches.push(Branch::R(idx(i, j), idx(i + 1, j), 1.0));
            }
            if j + 1 < ny {
                branches.push(Branch::R(idx(i, j), idx(i, j + 1), 1.0));
            }
        }
    }
    branches.push(Branch::R(idx(0, 0), 0, r_tie));
    let t = TestNetwork {
        nodes: nx * ny,
        branches,
    };
    (t.netlist(), t)
}

pub fn rel_err(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
