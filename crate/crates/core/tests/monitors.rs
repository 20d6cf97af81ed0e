use std::sync::Arc;

use prandtl_core::functionals::{Cutoffs, EnergyParams};
use prandtl_core::gevrey::{GevreyWeight, GEVREY_M, P_CORR};
use prandtl_core::monitor::{decay_trace, two_run_divergence, FamilyRecorder};
use prandtl_core::solver::{Integrator, SolverConfig};
use prandtl_core::{GridConfig, SpectralGrid, State};

fn shear_state(ny: usize) -> State {
    let g = Arc::new(
        SpectralGrid::new(&GridConfig {
            nx: 8,
            ny,
            ..GridConfig::default()
        })
        .unwrap(),
    );
    let u = g.tabulate(|_, y| -y * (-0.25 * y * y).exp());
    State::from_u(g, 0.0, u, 0.0).unwrap()
}

fn cfg() -> SolverConfig {
    SolverConfig {
        n_galerkin: 2,
        dt: 1e-3,
        t_end: 0.05,
        sample_every: 5,
        ..SolverConfig::default()
    }
}

#[test]
fn shear_flow_energy_decays_without_shrinking_the_radius() {
    let st = shear_state(257);
    let mut fam = FamilyRecorder::new(Cutoffs::default(), EnergyParams::default());
    Integrator::new(st.grid.clone(), &cfg()).unwrap().run(&st, &mut [&mut fam]).unwrap();
    let w = GevreyWeight::new(1.0, GEVREY_M, P_CORR).unwrap();
    let trace = decay_trace(&fam.families, 1.0, &w, 0.1).unwrap();
    assert_eq!(trace.minimal_c, Some(0.0));
}

#[test]
fn shear_flow_perturbations_do_not_grow() {
    let st = shear_state(257);
    let d = two_run_divergence(&st, 1e-10, &cfg()).unwrap();
    assert!(d.within(0.0), "{:?}", d.gaps);
    let same = two_run_divergence(&st, 0.0, &cfg()).unwrap();
    assert!(same.gaps.iter().all(|&g| g == 0.0));
}
