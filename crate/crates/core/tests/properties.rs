mod common;

use std::path::Path;

use common::*;
use pimpes::io::{checkpoint_string, parse_checkpoint};
use pimpes::mesh::Mesh;
use pimpes::physics::{capillary_pressure, fractional_flow, RockModel};
use pimpes::rt0::{divergence, mass_matrix};
use pimpes::schemes::{initialize, run, Model, NoObserver, SchemeConfig, SchemeKind, SimState};
use pimpes::units::{BAR, DAY, MILLIDARCY};
use proptest::prelude::*;

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn closed_model(nx: usize, ny: usize, jitter: f64, perms: &[f64], bc: f64) -> Model {
    let mesh = closed(jittered_mesh(nx, ny, 10.0 * nx as f64, 10.0 * ny as f64, jitter));
    let mut rock = RockModel::uniform(mesh.n_cells(), 0.2, MILLIDARCY);
    rock.permeability = (0..mesh.n_cells()).map(|k| perms[k % perms.len()] * MILLIDARCY).collect();
    rock.bc = bc * BAR * MILLIDARCY.sqrt();
    Model::new(mesh, fluids(0.45e-3), rock).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn fractional_flows_partition_unity(s in 0.0f64..=1.0, mu_n in 0.1e-3f64..5e-3) {
        let rock = RockModel::uniform(1, 0.2, MILLIDARCY);
        let (fw, fnw) = fractional_flow(s, &fluids(mu_n), &rock);
        prop_assert!((0.0..=1.0).contains(&fw) && (0.0..=1.0).contains(&fnw));
        prop_assert_eq!(fw + fnw, 1.0);
    }

    #[test]
    fn capillary_pressure_decreases_with_saturation(a in 0.0f64..1.0, b in 0.0f64..1.0, k in 1.0f64..1000.0) {
        let mut rock = RockModel::uniform(1, 0.2, MILLIDARCY);
        rock.bc = 60.0 * BAR * MILLIDARCY.sqrt();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let k = k * MILLIDARCY;
        prop_assert!(capillary_pressure(lo, &rock, k) >= capillary_pressure(hi, &rock, k));
        prop_assert!(capillary_pressure(hi, &rock, k) >= 0.0);
    }

    #[test]
    fn assembled_operators_match_quadrature(nx in 1usize..3, ny in 1usize..3, jitter in 0.0f64..0.3, scale in 0.5f64..2.0) {
        let mesh = jittered_mesh(nx, ny, 10.0, 7.0, jitter);
        let lambda_k: Vec<f64> = (0..mesh.n_cells()).map(|k| scale * (1.0 + 0.5 * k as f64)).collect();
        let dense = brute_mass(&mesh, &lambda_k);
        let a = mass_matrix(&mesh, &lambda_k).unwrap();
        let norm = dense.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_entry_gap(&dense, &|i, j| a.get(i, j)) <= 1e-12 * norm);
        let b = divergence(&mesh);
        prop_assert!(max_entry_gap(&brute_divergence(&mesh, &|_| 1.0), &|i, j| b.get(i, j)) <= 1e-12);
        // Constants have zero divergence-weighted flux on interior edges.
        let b1 = b.mul_vec(&vec![1.0; mesh.n_cells()]);
        for e in mesh.interior_edges() {
            prop_assert!(b1[e].abs() <= 1e-12 * mesh.edge(e).length);
        }
    }

    #[test]
    fn closed_domain_conserves_each_phase(
        s in prop::collection::vec(0.05f64..0.95, 12),
        perms in prop::collection::vec(1.0f64..100.0, 3),
        bc in 0.0f64..60.0,
    ) {
        let model = closed_model(3, 2, 0.2, &perms, bc);
        let cfg = SchemeConfig::fixed(SchemeKind::Pimpes, 0.02 * DAY, 5);
        let state = initialize(&model, &cfg, s.clone()).unwrap();
        let result = run(&model, &cfg, state, &mut NoObserver).unwrap();
        let vol = |v: &[f64]| v.iter().enumerate().map(|(k, x)| x * model.pore_volume(k)).sum::<f64>();
        let total = model.total_pore_volume();
        prop_assert!((vol(&result.state.s_w) - vol(&s)).abs() <= 1e-12 * total);
        let s_n0: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
        prop_assert!((vol(&result.state.s_n) - vol(&s_n0)).abs() <= 1e-12 * total);
        for (w, n) in result.state.s_w.iter().zip(&result.state.s_n) {
            prop_assert!((w + n - 1.0).abs() <= 1e-12);
        }
        // η never decreases, the ledger telescopes.
        for pair in result.records.windows(2) {
            prop_assert!(pair[1].eta >= pair[0].eta);
        }
        let window = result.ledger.window_defect_w(0..result.ledger.entries.len());
        let summed: f64 = result.ledger.entries.iter().map(|e| e.defect_w()).sum();
        prop_assert!((window - summed).abs() <= 1e-15);
        prop_assert!(window.abs() <= 1e-12);
    }

    #[test]
    fn relabeled_run_mirrors_original(
        s in prop::collection::vec(0.05f64..0.95, 8),
        perms in prop::collection::vec(1.0f64..100.0, 2),
        bc in 0.0f64..60.0,
    ) {
        let model = closed_model(2, 2, 0.1, &perms, bc);
        let swapped = model.relabeled().unwrap();
        let cfg = SchemeConfig::fixed(SchemeKind::Pimpes, 0.02 * DAY, 3);
        let a = run(&model, &cfg, initialize(&model, &cfg, s.clone()).unwrap(), &mut NoObserver).unwrap();
        let s1: Vec<f64> = s.iter().map(|x| 1.0 - x).collect();
        let b = run(&swapped, &cfg, initialize(&swapped, &cfg, s1).unwrap(), &mut NoObserver).unwrap();
        for (w, n) in a.state.s_w.iter().zip(&b.state.s_n) {
            prop_assert!((w - n).abs() <= 1e-9);
        }
    }

    #[test]
    fn checkpoints_round_trip(s in prop::collection::vec(0.0f64..=1.0, 4), p in prop::collection::vec(-1e7f64..1e7, 4), t in 0.0f64..1e9) {
        let mesh = Mesh::structured(2, 1, 1.0, 1.0).unwrap();
        let mut state = SimState::at_rest(&mesh, s).unwrap();
        state.t = t;
        state.p_w = p.clone();
        state.p_n = p.iter().map(|x| x * 1.5).collect();
        state.u_t = (0..mesh.n_edges()).map(|e| (e as f64 * t).sin()).collect();
        let back = parse_checkpoint(&checkpoint_string(&state), Path::new("mem")).unwrap();
        prop_assert_eq!(back, state);
    }
}
