//! Mid-weight integration checks of the field solver and source estimates
//! that exercise multi-peak configurations end to end.

use nls_core::ansatz::{make_ring_configuration, AnsatzField, AnsatzMode, PeakConfiguration};
use nls_core::field_solver::{
    equilibrium_inner_half_offset, lefthand_source, newton_solve, BOX_MARGIN,
};
use nls_core::grid::Grid3D;
use nls_core::ground_state::{coupled_amplitudes, solve_ground_state};
use nls_core::{builtin_potential, hessian_at_origin};
use std::sync::Arc;

#[test]
fn two_spike_inner_converges_with_two_maxima() {
    // the Theorem-A object at fixed moderate ε: a symmetric pair of spikes
    // on the x₃ axis at the trap-equilibrium offset, solved at ε = 0.25
    let eps = 0.25;
    let gs = Arc::new(solve_ground_state(1.0, 1e-10).unwrap());
    let amps = coupled_amplitudes(1.0, 1.0, 0.5).unwrap();
    let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
    let a = equilibrium_inner_half_offset(&gs, &amps, &p, &p, eps);
    assert!(a > 1.0 && a < 10.0, "equilibrium offset {a}");
    let cfg = PeakConfiguration {
        epsilon: eps,
        inner_centers: vec![[0.0, 0.0, a], [0.0, 0.0, -a]],
        ring_radius: 0.0,
        ring_count: 0,
        second_ring_radius: None,
        mode: AnsatzMode::Synchronized,
    };
    let field = AnsatzField::synchronized(cfg.clone(), amps, gs.clone());
    let half = cfg.outer_radius() + BOX_MARGIN;
    let n = (2.0 * half / 0.22).round() as usize + 1;
    let grid = Arc::new(Grid3D::even_symmetric(half, n, 1).unwrap());
    let (sol, report) = newton_solve(&field, &p, &p, grid.clone(), 1e-7).unwrap();
    assert!(sol.positive, "solution lost positivity");
    assert!(sol.residual_norm <= 1e-7);
    assert!(report.iterations < 40);
    // two local maxima along the x₃ axis: value at the spike beats both the
    // origin and the far side
    let at = |z: f64| grid.interp(&sol.u, [0.0, 0.0, z]);
    let peak = at(a);
    assert!(peak > at(0.0) * 1.05, "no dip at the origin: {} vs {}", peak, at(0.0));
    assert!(peak > at(a + 3.0));
    // spike survives near its ansatz position: scan for the max along z
    let mut best = (0.0, 0.0f64);
    let mut z = 0.0;
    while z < a + 4.0 {
        if at(z) > best.1 {
            best = (z, at(z));
        }
        z += 0.05;
    }
    assert!((best.0 - a).abs() < 1.5, "max at z={} vs ansatz {}", best.0, a);
}

#[test]
fn lefthand_source_tail_ratio_between_radii() {
    // ‖ℓ₁‖* between radii r and 1.5r in the window decays at least like the
    // trap tail r^{-m} (within 20% slack)
    let gs = Arc::new(solve_ground_state(1.0, 1e-10).unwrap());
    let amps = coupled_amplitudes(1.0, 1.0, 0.5).unwrap();
    let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
    let eps = 0.5;
    let k = 6;
    let r = 5.5;
    let mut norms = Vec::new();
    for radius in [r, 1.5 * r] {
        let cfg = make_ring_configuration(k, radius, eps, AnsatzMode::Synchronized, None).unwrap();
        let field = AnsatzField::synchronized(cfg, amps, gs.clone());
        let half = radius + 13.0;
        let n = (2.0 * half / 0.3).round() as usize + 1;
        let grid = Arc::new(Grid3D::even_symmetric(half, n, k).unwrap());
        let source = lefthand_source(&field, &p, &p, &grid);
        norms.push(source.weighted_norm_l1);
    }
    let ratio = norms[0] / norms[1];
    assert!(
        ratio >= 1.5f64.powi(4) * 0.8,
        "tail ratio {ratio} below (1.5)^4 * 0.8"
    );
}

#[test]
fn beta_zero_kills_cross_terms_in_source() {
    let gs = Arc::new(solve_ground_state(1.0, 1e-10).unwrap());
    let amps0 = coupled_amplitudes(1.0, 1.0, 0.0).unwrap();
    let flat = nls_core::PotentialModel::constant(1.0);
    let cfg = make_ring_configuration(4, 6.0, 1.0, AnsatzMode::Synchronized, None).unwrap();
    let field = AnsatzField::synchronized(cfg, amps0, gs.clone());
    let grid = Arc::new(Grid3D::even_symmetric(14.0, 57, 4).unwrap());
    let source = lefthand_source(&field, &flat, &flat, &grid);
    // β = 0 and P = 1: ℓ reduces to the pure peak-overlap cubic terms, equal
    // in both components by symmetry here
    for (a, b) in source.l1.iter().zip(&source.l2) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
}

#[test]
fn default_instance_hessian_margin_positive() {
    let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
    let amps = coupled_amplitudes(1.0, 1.0, 0.5).unwrap();
    let h = hessian_at_origin(&p, &p, &amps);
    assert!(!h.degenerate);
    assert!(h.margin > 0.0);
    // γ₁² = γ₂² = 2/3 here, so the diagonal is -2c(γ₁²+γ₂²) = -4c/3 · ... = -0.2·4/3
    assert!((h.matrix[0][0] + 0.2 * 4.0 / 3.0).abs() < 1e-12);
}
