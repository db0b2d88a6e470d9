mod common;

use common::{grid, name, rel_err, TestNetwork};
use num_complex::Complex64;
use proptest::prelude::*;
use subimpact::solver::{ac_solve, point_to_point_resistance, transfer, transimpedance};
use subimpact::{Netlist, NodeKind};

const TOL: f64 = 1e-9;

fn with_injections(net: &Netlist, inj: &[(usize, f64)]) -> Netlist {
    let mut n = net.clone();
    let g = n.ground();
    for &(k, i) in inj {
        let id = n.require(&name(k)).unwrap();
        n.add_current_source(g, id, i, true).unwrap();
    }
    n
}

#[test]
fn rc_lowpass_matches_closed_form() {
    let (r, c) = (1e3, 1e-9);
    let mut net = Netlist::new("0");
    let a = net.ensure_node("in", NodeKind::Circuit);
    let b = net.ensure_node("out", NodeKind::Circuit);
    let g = net.ground();
    net.add_resistor(a, b, r).unwrap();
    net.add_capacitor(b, g, c).unwrap();
    let freqs = [1e3, 1e5, 159154.94309189535, 1e6, 1e8];
    let tf = transfer(&net, "in", "out", &freqs).unwrap();
    for (f, h) in tf.samples {
        let expect =
            Complex64::new(1.0, 0.0) / Complex64::new(1.0, 2.0 * std::f64::consts::PI * f * r * c);
        assert!(rel_err(h, expect) < TOL, "{f}: {h} vs {expect}");
    }
}

#[test]
fn resistive_divider_and_rl_highpass() {
    let mut net = Netlist::new("0");
    let a = net.ensure_node("in", NodeKind::Circuit);
    let m = net.ensure_node("mid", NodeKind::Circuit);
    let o = net.ensure_node("hp", NodeKind::Circuit);
    let g = net.ground();
    net.add_resistor(a, m, 3e3).unwrap();
    net.add_resistor(m, g, 1e3).unwrap();
    net.add_resistor(a, o, 50.0).unwrap();
    net.add_inductor(o, g, 1e-6).unwrap();
    let tf = transfer(&net, "in", "mid", &[0.0, 1e6]).unwrap();
    for (_, h) in &tf.samples {
        assert!(rel_err(*h, Complex64::new(0.25, 0.0)) < TOL);
    }
    for f in [1e5, 1e7, 1e9] {
        let h = transfer(&net, "in", "hp", &[f]).unwrap().samples[0].1;
        let jwl = Complex64::new(0.0, 2.0 * std::f64::consts::PI * f * 1e-6);
        assert!(rel_err(h, jwl / (jwl + 50.0)) < TOL);
    }
}

#[test]
fn point_to_point_on_grid_matches_dense_oracle() {
    let (net, t) = grid(10, 10, 1.0);
    let a = 1;
    let b = 100;
    let r = point_to_point_resistance(&net, &name(a), &name(b)).unwrap();
    // Unit current in at a and out at b through the dense oracle.
    let v = t.solve(0.0, &[(a, 1.0), (b, -1.0)]);
    let expect = (v[a] - v[b]).re;
    assert!(((r - expect) / expect).abs() < TOL, "{r} vs {expect}");
}

#[test]
fn banded_path_matches_dense_oracle() {
    // 20 x 20 = 400 nodes, above the dense-solver threshold.
    let (net, t) = grid(20, 20, 0.5);
    let src = 1 + 7 + 20 * 13;
    let driven = with_injections(&net, &[(src, 1.0)]);
    let sol = ac_solve(&driven, 0.0).unwrap();
    let v = t.solve(0.0, &[(src, 1.0)]);
    for k in 1..=t.nodes {
        let id = net.require(&name(k)).unwrap();
        assert!(rel_err(sol.voltage(id), v[k]) < TOL);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solve_matches_dense_oracle(seed in any::<u64>(), n in 2usize..40, extra in 0usize..40, f in 1e3f64..1e9) {
        let t = TestNetwork::random(seed, n, extra, true);
        let net = t.netlist();
        let src = 1 + (seed as usize % n);
        let sol = ac_solve(&with_injections(&net, &[(src, 1.0)]), f).unwrap();
        let v = t.solve(f, &[(src, 1.0)]);
        for k in 1..=n {
            let id = net.require(&name(k)).unwrap();
            prop_assert!(rel_err(sol.voltage(id), v[k]) < 1e-8 || (sol.voltage(id) - v[k]).norm() < 1e-12 * v[src].norm());
        }
    }

    #[test]
    fn transimpedance_is_reciprocal(seed in any::<u64>(), n in 2usize..30, extra in 0usize..30, f in 1e3f64..1e9) {
        let t = TestNetwork::random(seed, n, extra, true);
        let net = t.netlist();
        let (a, b) = (1 + (seed as usize % n), 1 + ((seed >> 17) as usize % n));
        let zab = transimpedance(&net, &name(a), &name(b), &[f]).unwrap().samples[0].1;
        let zba = transimpedance(&net, &name(b), &name(a), &[f]).unwrap().samples[0].1;
        prop_assert!(rel_err(zab, zba) < TOL, "{} vs {}", zab, zba);
    }

    #[test]
    fn superposition_of_injections(seed in any::<u64>(), n in 2usize..30, extra in 0usize..30,
                                   i1 in -5.0f64..5.0, i2 in -5.0f64..5.0, f in 1e3f64..1e9) {
        prop_assume!(i1.abs() > 1e-3 && i2.abs() > 1e-3);
        let t = TestNetwork::random(seed, n, extra, false);
        let net = t.netlist();
        let (a, b) = (1 + (seed as usize % n), 1 + ((seed >> 23) as usize % n));
        let both = ac_solve(&with_injections(&net, &[(a, i1), (b, i2)]), f).unwrap();
        let only_a = ac_solve(&with_injections(&net, &[(a, i1)]), f).unwrap();
        let only_b = ac_solve(&with_injections(&net, &[(b, i2)]), f).unwrap();
        let scale = both.voltages().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for k in 0..both.voltages().len() {
            let sum = only_a.voltages()[k] + only_b.voltages()[k];
            prop_assert!((both.voltages()[k] - sum).norm() <= TOL * scale);
        }
    }

    #[test]
    fn impedance_scaling(seed in any::<u64>(), n in 2usize..25, extra in 0usize..25, s in 0.1f64..10.0, f in 1e3f64..1e9) {
        let t = TestNetwork::random(seed, n, extra, true);
        let a = 1 + (seed as usize % n);
        let b = 1 + ((seed >> 9) as usize % n);
        let z1 = transimpedance(&t.netlist(), &name(a), &name(b), &[f]).unwrap().samples[0].1;
        let z2 = transimpedance(&t.scaled(s).netlist(), &name(a), &name(b), &[f]).unwrap().samples[0].1;
        prop_assert!(rel_err(z2, z1 * s) < TOL);
    }
}
