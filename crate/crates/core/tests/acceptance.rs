//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every criterion reports even when an earlier one fails.

mod common;

use std::time::Instant;

use common::*;
use pimpes::diagnostics::front_position;
use pimpes::linsolve::Gauge;
use pimpes::mesh::Mesh;
use pimpes::physics::{fractional_flow, mobilities, RockModel};
use pimpes::rt0::{divergence, mass_matrix};
use pimpes::schemes::{initialize, run, Model, NoObserver, Operators, SchemeConfig, SchemeKind, TimeStepping};
use pimpes::units::{BAR, DAY, MILLIDARCY};
use pimpes::upwind::{capillary_divergence, compute_traces, upwinded_divergence, Phase};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Worst solve residual seen by each criterion, checked together at the end.
#[derive(Default)]
struct Solves {
    worst: Vec<(&'static str, f64)>,
    gauges: Vec<(&'static str, bool, Option<f64>)>,
}

fn conservation_run(solves: &mut Solves) -> (Outcome, Outcome) {
    let mut sc = load("layered_desk");
    sc.scheme.stepping = TimeStepping::Adaptive { cfl: 0.3, dt_min: 1.0, dt_max: 0.1 * DAY };
    sc.scheme.max_steps = Some(100);
    sc.scheme.end_time = None;
    let setup = build(&sc);
    let start = Instant::now();
    let (result, rec) = run_recorded(&setup.model, &sc.scheme, setup.s_w0.clone());
    let wall = start.elapsed().as_secs_f64();
    solves.worst.push(("1-2", rec.worst_solve));
    let lemma = rec.lemma_residuals.iter().fold(0.0f64, |m, r| m.max(r.0).max(r.1));
    let c1 = outcome(
        lemma <= 1e-9 && wall <= 60.0 && result.records.len() == 100,
        format!("steps {}, worst relative cell residual {lemma:.3e}, wall {wall:.1} s", result.records.len()),
    );
    let (mut dw, mut dn) = (0.0f64, 0.0f64);
    for e in &result.ledger.entries {
        dw = dw.max((e.s_io_w - e.s_nd_w).abs());
        dn = dn.max((e.s_o_n - e.s_rd_n).abs());
    }
    let c2 = outcome(dw <= 1e-8 && dn <= 1e-8, format!("max |S_IO_w - S_ND_w| {dw:.3e}, max |S_O_n - S_RD_n| {dn:.3e}"));
    (c1, c2)
}

fn bounds(solves: &mut Solves) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["layered_desk", "raster_drainage_desk", "lens_counter_current_desk", "raster_counter_current_desk"] {
        let sc = load(name);
        let setup = build(&sc);
        let (result, rec) = run_recorded(&setup.model, &sc.scheme, setup.s_w0.clone());
        solves.worst.push(("3", rec.worst_solve));
        if !setup.model.mesh.has_dirichlet() {
            let ok = matches!(Operators::new(&setup.model, sc.scheme.p_ref).gauge, Gauge::PinCell { .. });
            let defect = rec.compatibility.iter().map(|c| c.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            solves.gauges.push(("3", ok, Some(defect)));
        }
        pass &= result.eta == 0.0 && result.ledger.violations == 0;
        parts.push(format!("{name}: eta {:.2e}, violations {}", result.eta, result.ledger.violations));
    }
    outcome(pass, parts.join("; "))
}

fn time_step_advantage(solves: &mut Solves) -> Outcome {
    let mut sc = load("lens_counter_current_desk");
    sc.scheme.max_steps = None;
    sc.scheme.end_time = Some(5.0 * DAY);
    let sweep: Vec<f64> = [0.025, 0.05, 0.1, 0.2].iter().map(|d| d * DAY).collect();
    let cmp = pimpes::driver::compare(&sc, &[SchemeKind::Pimpes, SchemeKind::HfImpes], Some(&sweep)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("compare.csv"), cmp.to_csv()).unwrap();
    for r in cmp.rows.iter().filter(|r| r.failure.is_none()) {
        solves.worst.push(("4", r.worst_residual));
    }
    let p = cmp.feasible_dt(SchemeKind::Pimpes).unwrap_or(0.0);
    let h = cmp.feasible_dt(SchemeKind::HfImpes).unwrap_or(0.0);
    let hf_at_p = cmp.rows.iter().find(|r| r.kind == SchemeKind::HfImpes && r.dt == Some(p));
    let hf_positive = hf_at_p.is_some_and(|r| r.failure.is_some() || r.eta > 0.0);
    outcome(
        p > 0.0 && p > h && hf_positive,
        format!(
            "feasible dt P-IMPES {} day, HF-IMPES {} day, HF eta at {} day {}",
            p / DAY,
            h / DAY,
            p / DAY,
            hf_at_p.map(|r| format!("{:.3e}", r.eta)).unwrap_or_else(|| "n/a".into())
        ),
    )
}

fn relabeling(solves: &mut Solves) -> Outcome {
    let sc = load("lens_counter_current_desk");
    let mut config = sc.scheme.clone();
    if let TimeStepping::Adaptive { dt_max, .. } = config.stepping {
        config.stepping = TimeStepping::Fixed(dt_max);
    }
    config.max_steps = Some(100);
    config.end_time = None;
    let setup = build(&sc);
    let swapped = setup.model.relabeled().unwrap();
    let s0: Vec<f64> = setup.s_w0.iter().map(|s| 1.0 - s).collect();
    let (_, a) = run_recorded(&setup.model, &config, setup.s_w0.clone());
    let (_, b) = run_recorded(&swapped, &config, s0);
    solves.worst.push(("5", a.worst_solve.max(b.worst_solve)));
    let mut gap = 0.0f64;
    for (x, y) in a.states.iter().zip(&b.states) {
        for (sw, sn) in x.s_w.iter().zip(&y.s_n) {
            gap = gap.max((sw - sn).abs());
        }
    }
    let mismatch = a.update_mismatch.max(b.update_mismatch);
    outcome(
        a.states.len() == b.states.len() && gap <= 1e-9 && mismatch <= 1e-10,
        format!("{} states, max |S_w - S_n'| {gap:.3e}, update mismatch {mismatch:.3e}", a.states.len()),
    )
}

fn operator_oracles() -> Outcome {
    let irregular = Mesh::from_cells(
        vec![[0.0, 0.0], [1.3, 0.1], [1.1, 1.2], [-0.2, 0.9], [0.6, -0.7]],
        vec![[0, 1, 2], [0, 2, 3], [0, 4, 1]],
    )
    .unwrap();
    let meshes = [
        ("1x1", closed(Mesh::structured(1, 1, 1.0, 1.0).unwrap())),
        ("2x1", closed(Mesh::structured(2, 1, 2.0, 1.0).unwrap())),
        ("irregular", closed(irregular)),
    ];
    let fl = fluids(0.45e-3);
    let mut worst = 0.0f64;
    for (_, mesh) in &meshes {
        let m = mesh.n_cells();
        let mut rock = RockModel::uniform(m, 0.2, 1e-13);
        rock.bc = 60.0 * BAR * MILLIDARCY.sqrt();
        let lambda_k: Vec<f64> = (0..m).map(|k| 1e-13 * (1.0 + k as f64)).collect();
        let a = mass_matrix(mesh, &lambda_k).unwrap();
        let dense = brute_mass(mesh, &lambda_k);
        let scale = dense.iter().flatten().fold(0.0f64, |s, v| s.max(v.abs()));
        worst = worst.max(max_entry_gap(&dense, &|i, j| a.get(i, j)) / scale);

        let b = divergence(mesh);
        worst = worst.max(max_entry_gap(&brute_divergence(mesh, &|_| 1.0), &|i, j| b.get(i, j)));

        // Counter-current phases: each edge sees opposite phase directions.
        let s: Vec<f64> = (0..m).map(|k| 0.15 + 0.3 * k as f64).collect();
        let u_w: Vec<f64> = (0..mesh.n_edges()).map(|e| if e % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let u_n: Vec<f64> = u_w.iter().map(|v| -v).collect();
        let traces = compute_traces(mesh, &s, &u_w, &u_n).unwrap();
        let fw_edge = |e: usize| fractional_flow(s[upwind_cell(mesh, e, u_w[e])], &fl, &rock).0;
        let fn_edge = |e: usize| fractional_flow(s[upwind_cell(mesh, e, u_n[e])], &fl, &rock).1;
        let bw = upwinded_divergence(mesh, &traces, Phase::Wetting, &fl, &rock);
        let bn = upwinded_divergence(mesh, &traces, Phase::NonWetting, &fl, &rock);
        let bc = capillary_divergence(mesh, &traces, &fl, &rock);
        worst = worst.max(max_entry_gap(&brute_divergence(mesh, &fw_edge), &|i, j| bw.get(i, j)));
        worst = worst.max(max_entry_gap(&brute_divergence(mesh, &fn_edge), &|i, j| bn.get(i, j)));
        worst = worst.max(max_entry_gap(&brute_divergence(mesh, &|e| fw_edge(e) * fn_edge(e)), &|i, j| bc.get(i, j)));
    }
    outcome(worst <= 1e-12, format!("A, B, B_w, B_n, B_c on 1x1, 2x1, irregular: max gap {worst:.3e}"))
}

fn capillary_slows_front(solves: &mut Solves) -> Outcome {
    let with = load("strata_desk");
    let mut without = with.clone();
    without.rock.bc = 0.0;
    let mut fronts = Vec::new();
    for sc in [&with, &without] {
        let mut sc = sc.clone();
        if let TimeStepping::Adaptive { dt_max, .. } = sc.scheme.stepping {
            sc.scheme.stepping = TimeStepping::Fixed(dt_max);
        }
        let setup = build(&sc);
        let (result, rec) = run_recorded(&setup.model, &sc.scheme, setup.s_w0.clone());
        solves.worst.push(("7", rec.worst_solve));
        let strata = front_position(&setup.model.mesh, &setup.model.rock.permeability, &result.state.s_w, 0.5, [1.0, 0.0]).unwrap();
        let high = strata.last().unwrap();
        fronts.push((high.1, result.state.t));
    }
    outcome(
        fronts[0].1 == fronts[1].1 && fronts[0].0 < fronts[1].0,
        format!("high-K front at t = {:.2} day: {:.1} m with capillarity, {:.1} m without", fronts[0].1 / DAY, fronts[0].0, fronts[1].0),
    )
}

fn patch_test(solves: &mut Solves) -> Outcome {
    let (lx, ly) = (4.0, 3.0);
    let mesh = left_right(jittered_mesh(4, 3, lx, ly, 0.25), lx, 2.0 * BAR, BAR);
    let fl = fluids(0.45e-3);
    let k = 50.0 * MILLIDARCY;
    let rock = RockModel::uniform(mesh.n_cells(), 0.2, k);
    let model = Model::new(mesh, fl, rock).unwrap();
    let s = 0.4;
    let config = SchemeConfig::fixed(SchemeKind::Pimpes, DAY, 0);
    let state = initialize(&model, &config, vec![s; model.mesh.n_cells()]).unwrap();
    let result = run(&model, &config, state, &mut NoObserver).unwrap();
    let (lw, ln) = mobilities(s, &model.fluids, &model.rock);
    let u = (lw + ln) * k * BAR / lx;
    let mut flux_gap = 0.0f64;
    for (e, edge) in model.mesh.edges().iter().enumerate() {
        flux_gap = flux_gap.max((result.state.u_t[e] - u * edge.normal[0]).abs() / u);
    }
    let mut div = 0.0f64;
    for c in 0..model.mesh.n_cells() {
        let (mut net, mut gross) = (0.0, 0.0);
        for (i, &e) in model.mesh.cell_edges(c).iter().enumerate() {
            let f = model.mesh.cell_signs(c)[i] * model.mesh.edge(e).length * result.state.u_t[e];
            net += f;
            gross += f.abs();
        }
        div = div.max(net.abs() / gross);
    }
    let ops = Operators::new(&model, 0.0);
    let flow = pimpes::schemes::solve_flow(SchemeKind::Pimpes, &model, &ops, &result.state).unwrap();
    solves.worst.push(("9", flow.stats.worst()));
    outcome(flux_gap <= 1e-10 && div <= 1e-12, format!("max relative flux error {flux_gap:.3e}, max relative cell divergence {div:.3e}"))
}

fn solves_ok(solves: &Solves) -> Outcome {
    let worst = solves.worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let gauges = solves.gauges.iter().all(|(_, pinned, d)| *pinned && d.is_some_and(|v| v <= 1e-10));
    let defect = solves.gauges.iter().filter_map(|g| g.2).fold(0.0, f64::max);
    outcome(
        worst <= 1e-10 && gauges && !solves.gauges.is_empty(),
        format!("{} runs, worst relative residual {worst:.3e}, {} pinned runs, worst compatibility defect {defect:.3e}", solves.worst.len(), solves.gauges.len()),
    )
}

fn main() {
    let mut solves = Solves::default();
    let (c1, c2) = conservation_run(&mut solves);
    let mut results = vec![("1 local conservation", c1), ("2 mass ledger", c2)];
    results.push(("3 bounds preserving", bounds(&mut solves)));
    results.push(("4 time step advantage", time_step_advantage(&mut solves)));
    results.push(("5 phase relabeling", relabeling(&mut solves)));
    results.push(("6 operator assembly", operator_oracles()));
    results.push(("7 capillary front delay", capillary_slows_front(&mut solves)));
    let patch = patch_test(&mut solves);
    results.push(("8 solve accuracy", solves_ok(&solves)));
    results.push(("9 constant-velocity patch", patch));
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
