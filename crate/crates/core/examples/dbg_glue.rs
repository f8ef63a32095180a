use nls_core::ansatz::*;
use nls_core::field_solver::*;
use nls_core::grid::{AxisSym, Grid3D};
use nls_core::ground_state::*;
use nls_core::builtin_potential;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let gs = Arc::new(solve_ground_state(1.0, 1e-10).unwrap());
    let amps = coupled_amplitudes(1.0, 1.0, 0.5).unwrap();
    let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
    let eps = 0.5;
    let k = 6usize;
    let h = 0.2;
    // inner pair
    let a = equilibrium_inner_half_offset(&gs, &amps, &p, &p, eps);
    println!("inner half offset a = {a:.3}");
    let inner_cfg = PeakConfiguration {
        epsilon: eps,
        inner_centers: vec![[0.0, 0.0, a], [0.0, 0.0, -a]],
        ring_radius: 0.0,
        ring_count: 0,
        second_ring_radius: None,
        mode: AnsatzMode::Synchronized,
    };
    let inner_field = AnsatzField::synchronized(inner_cfg.clone(), amps, gs.clone());
    let inner_half = inner_cfg.outer_radius() + BOX_MARGIN;
    let inner_n = (2.0 * inner_half / h).round() as usize + 1;
    let inner_grid = Arc::new(Grid3D::even_symmetric(inner_half, inner_n, 1).unwrap());
    match newton_solve(&inner_field, &p, &p, inner_grid.clone(), 1e-8) {
        Ok((inner_sol, rep)) => {
            println!("inner solve: {} its, res {:.2e}, positive {} [t={:.0}s]",
                rep.iterations, inner_sol.residual_norm, inner_sol.positive, t0.elapsed().as_secs_f64());
            let zpk = inner_grid.interp(&inner_sol.u, [0.0,0.0,a]);
            let z0 = inner_grid.interp(&inner_sol.u, [0.0,0.0,0.0]);
            println!("  u(0,0,a)={zpk:.3} u(0)={z0:.3}");
            // glued ansatz at window midpoint
            let r_ring = 6.84;
            let mut cfg = make_ring_configuration(k, r_ring, eps, AnsatzMode::Synchronized, None).unwrap();
            cfg.inner_centers = inner_cfg.inner_centers.clone();
            let field = AnsatzField::synchronized(cfg, amps, gs.clone()).with_inner(Arc::new(inner_sol));
            let half = field.configuration.outer_radius() + 12.0;
            let n = (2.0 * half / h).round() as usize + 1;
            let grid = Arc::new(Grid3D::with_symmetry(half, n, AxisSym::Even, AxisSym::Even, k).unwrap());
            println!("glued grid: n={:?} h={:.3} [t={:.0}s]", grid.n, grid.h, t0.elapsed().as_secs_f64());
            match newton_solve(&field, &p, &p, grid.clone(), 1e-8) {
                Ok((sol, rep)) => {
                    println!("glued solve: {} its, res {:.2e}, positive {} [t={:.0}s]",
                        rep.iterations, sol.residual_norm, sol.positive, t0.elapsed().as_secs_f64());
                    // where is the ring bump now?
                    let mut best = (0.0, 0.0f64);
                    let mut r = 2.0;
                    while r < half - 1.0 {
                        let v = grid.interp(&sol.u, [r, 0.0, 0.0]);
                        if v > best.1 { best = (r, v); }
                        r += 0.05;
                    }
                    println!("  ring bump along x1: max {:.3} at r={:.2} (ansatz 6.84)", best.1, best.0);
                    println!("  u at origin axis: {:.3}, at (0,0,a): {:.3}",
                        grid.interp(&sol.u, [0.0,0.0,0.0]), grid.interp(&sol.u, [0.0,0.0,a]));
                }
                Err(e) => println!("glued solve FAILED: {e} [t={:.0}s]", t0.elapsed().as_secs_f64()),
            }
        }
        Err(e) => println!("inner solve FAILED: {e}"),
    }
}
