//! Recomputes the calibrated values stored in fixtures/ and prints the
//! resulting acceptance metrics.
//!
//!     cargo run --release -p subimpact --example calibrate_fixtures [fixtures-dir]

use std::path::PathBuf;

use subimpact::impact::{slope_db_per_decade, spur_report};
use subimpact::layout::{Layout, Technology};
use subimpact::pipeline::{
    assemble, entry_transfers, extract_substrate, solve_monotone, sweep_from_transfers, whatif,
    Project, ProjectConfig,
};
use subimpact::units::Eng;
use subimpact::{transfer, Result};

const DIVISION: f64 = 1.0 / 652.0;
const BACKGATE_GAP_DB: f64 = 20.0;
const ASYMMETRY_DB: f64 = 1.0;

fn with_wire_rs(layout: &Layout, rs: f64) -> Layout {
    let mut l = layout.clone();
    l.wires[0].sheet_resistance = Some(Eng(rs));
    l
}

fn main() -> Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    let tech = Technology::load(&dir.join("technology.json"))?;
    let nmos = Layout::load(&dir.join("nmos_layout.json"))?;
    let sub = extract_substrate(&nmos)?;

    let division = |scale: f64, rs: f64| -> Result<f64> {
        let mut t = tech.clone();
        t.mesh_conductance_scale = Eng(scale);
        let ex = assemble(&with_wire_rs(&nmos, rs), &t, &sub)?;
        Ok(transfer(&ex.combined, "SUB", "BG", &[1e6])?.samples[0]
            .1
            .norm())
    };

    let rs = tech.layer("M1")?.sheet_resistance.0;
    let scale = solve_monotone(|s| division(s, rs), DIVISION, 1e-4, 1e4, 1e-10)?;
    let factor = division(scale, rs)? / division(scale, 1e-9)?;
    println!("nmos: mesh_conductance_scale = {scale:.9}");
    println!(
        "nmos: division 1/{:.3}, ground-ring factor {factor:.4}",
        1.0 / division(scale, rs)?
    );

    let cfg = ProjectConfig::load(&dir.join("vco_project.json"))?;
    let mut project = Project::load(cfg)?;
    let mut vco_model = project.vco()?.clone();
    project.technology.mesh_conductance_scale = Eng(scale);
    let freqs = project.config.sweep.frequencies()?;
    let vsub = extract_substrate(&project.layout)?;
    let ex = assemble(&project.layout, &project.technology, &vsub)?;
    let tfs = entry_transfers(&ex.combined, "SUB", &vco_model, &freqs)?;
    let gap = |r_cm: f64| -> Result<f64> {
        let mut vco = vco_model.clone();
        for e in &mut vco.entries {
            if let Some(b) = &mut e.backgate {
                b.r_cm = Eng(r_cm);
            }
        }
        let s = sweep_from_transfers(
            &vco,
            &project.technology,
            project.config.noise_amplitude(),
            "SUB",
            &tfs,
            &freqs,
        )?;
        let r = &s.reports[0];
        Ok(r.path("ground-interconnect").unwrap().power_dbm()
            - r.path("nmos-backgate").unwrap().power_dbm())
    };
    let r_cm = solve_monotone(gap, BACKGATE_GAP_DB, 1e-2, 150.0, 1e-10)?;
    println!("vco: backgate r_cm = {r_cm:.9}");
    for e in &mut vco_model.entries {
        if let Some(b) = &mut e.backgate {
            b.r_cm = Eng(r_cm);
        }
    }
    let asym = |g: f64| -> Result<f64> {
        let mut vco = vco_model.clone();
        vco.entries[0].am_gain = Eng(g);
        let sens = vco.sensitivities(&project.technology.bias_table)?;
        let r = spur_report(
            vco.amplitude.0,
            vco.carrier_frequency(),
            &sens,
            &project.noise(1e7),
            &tfs,
        )?;
        Ok(r.asymmetry_db().abs())
    };
    let g_am = solve_monotone(asym, ASYMMETRY_DB, 1e-3, 10.0, 1e-10)?;
    vco_model.entries[0].am_gain = Eng(g_am);
    println!("vco: ground am_gain = {g_am:.9}");
    println!("vco: f_c = {:.6e} Hz", vco_model.carrier_frequency());
    println!(
        "vco: total ground R = {:.6} ohm",
        ex.total_ground_resistance()
    );
    for v in project.v_tunes()? {
        let s = sweep_from_transfers(
            &vco_model.with_v_tune(v),
            &project.technology,
            project.config.noise_amplitude(),
            "SUB",
            &tfs,
            &freqs,
        )?;
        let slope = slope_db_per_decade(&s.total_series());
        println!("vco: v_tune {v}: total slope {slope:.4} dB/dec");
        for r in [
            &s.reports[0],
            &s.reports[freqs.len() / 2],
            s.reports.last().unwrap(),
        ] {
            print!(
                "  f {:.3e}: total {:.2} dBm asym {:.3} dB |",
                r.f_noise,
                r.total_dbm(),
                r.asymmetry_db()
            );
            for p in &r.paths {
                print!(
                    " {} {:.1} (beta {:.3})",
                    p.path_label,
                    p.power_dbm(),
                    p.beta
                );
            }
            println!();
        }
    }
    for name in ["vco_project.json", "vco_resize_all_project.json"] {
        let p = Project::load(ProjectConfig::load(&dir.join(name))?)?;
        let w = whatif(&p, 2.0)?;
        let (lo, hi) = w
            .delta_db
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |a, d| {
                (a.0.min(d.1), a.1.max(d.1))
            });
        println!("{name}: what-if x2 delta {lo:.4} .. {hi:.4} dB");
    }
    Ok(())
}
