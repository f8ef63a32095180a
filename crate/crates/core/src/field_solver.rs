//! Discretized coupled system on a 3D grid: full energy, damped-Newton
//! solves from an ansatz, and the projected solve in the constraint space
//! orthogonal to the ring-radius derivative directions.
//!
//! Everything is posed in rescaled coordinates y = x/ε, where the system
//! reads -Δu + P(ε|y|)u = μ₁u³ + βuv², -Δv + Q(ε|y|)v = μ₂v³ + βu²v, with a
//! 7-point Laplacian and homogeneous Dirichlet walls. Energies and norms are
//! reported in the same rescaled units (the physical energy carries an extra
//! ε³).

use crate::ansatz::{dist, AnsatzField, AnsatzMode};
use crate::error::{Error, Result};
use crate::grid::Grid3D;
use crate::ground_state::CoupledAmplitudes;
use crate::linalg::{cg_solve, pair_dot, pair_max_norm, pair_norm, Pair};
use crate::potentials::PotentialModel;
use std::io::Write;
use std::sync::Arc;

/// Box margin beyond the outermost peak, in rescaled units (the fields decay
/// like e^{-dist}, so 15 gives ~3e-7 truncation).
pub const BOX_MARGIN: f64 = 15.0;

/// A converged or sampled two-component field on a grid.
#[derive(Debug, Clone)]
pub struct DiscreteFieldPair {
    pub grid: Arc<Grid3D>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub epsilon: f64,
    /// Max-norm of the discrete system residual at these fields.
    pub residual_norm: f64,
    pub positive: bool,
}

impl DiscreteFieldPair {
    pub fn pair(&self) -> Pair {
        Pair {
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    /// Trilinear sample (u, v) at a rescaled point, unfolding grid symmetry.
    pub fn sample(&self, y: [f64; 3]) -> (f64, f64) {
        (self.grid.interp(&self.u, y), self.grid.interp(&self.v, y))
    }

    /// Flat binary export: u64 dims, f64 spacing ×3, f64 epsilon, then u and
    /// v node data, all little-endian.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for d in self.grid.n {
            out.write_all(&(d as u64).to_le_bytes())?;
        }
        for _ in 0..3 {
            out.write_all(&self.grid.h.to_le_bytes())?;
        }
        out.write_all(&self.epsilon.to_le_bytes())?;
        for x in self.u.iter().chain(self.v.iter()) {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    /// Mid-plane (x₃ = 0) CSV slice: x1, x2, u, v.
    pub fn write_midplane_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,u,v")?;
        let g = &self.grid;
        let k0 = match g.sym[1] {
            crate::grid::AxisSym::Full => (g.n[2] - 1) / 2,
            _ => 0,
        };
        for i in 0..g.n[0] {
            for j in 0..g.n[1] {
                let p = g.coord(i, j, k0);
                let c = g.idx(i, j, k0);
                writeln!(out, "{},{},{},{}", p[0], p[1], self.u[c], self.v[c])?;
            }
        }
        Ok(())
    }
}

/// Problem coefficients shared by residual, Jacobian and energy evaluation.
pub struct SystemCoefficients {
    /// P(ε|y|) and Q(ε|y|) sampled on the grid (1 on Dirichlet walls).
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub amps: CoupledAmplitudes,
}

pub fn sample_potentials(
    grid: &Grid3D,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    epsilon: f64,
    amps: CoupledAmplitudes,
) -> SystemCoefficients {
    let radial = |model: &PotentialModel| {
        let mut out = vec![0.0; grid.len()];
        for i in 0..grid.n[0] {
            for j in 0..grid.n[1] {
                for k in 0..grid.n[2] {
                    let p = grid.coord(i, j, k);
                    let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    out[grid.idx(i, j, k)] = model.evaluate(epsilon * r);
                }
            }
        }
        out
    };
    SystemCoefficients {
        p: radial(p_model),
        q: radial(q_model),
        amps,
    }
}

/// Residual of the discrete system at (u, v): out = (-Δu + Pu - μ₁u³ - βuv²,
/// -Δv + Qv - μ₂v³ - βu²v), zero on walls.
pub fn residual(grid: &Grid3D, coeff: &SystemCoefficients, fields: &Pair, out: &mut Pair) {
    grid.neg_laplacian(&fields.u, &mut out.u);
    grid.neg_laplacian(&fields.v, &mut out.v);
    let (mu1, mu2, beta) = (coeff.amps.mu1, coeff.amps.mu2, coeff.amps.beta);
    for idx in 0..fields.u.len() {
        let (u, v) = (fields.u[idx], fields.v[idx]);
        out.u[idx] += coeff.p[idx] * u - mu1 * u * u * u - beta * u * v * v;
        out.v[idx] += coeff.q[idx] * v - mu2 * v * v * v - beta * u * u * v;
    }
    zero_walls(grid, out);
}

/// Jacobian application at base fields (ub, vb).
pub fn jacobian_apply(
    grid: &Grid3D,
    coeff: &SystemCoefficients,
    base: &Pair,
    x: &Pair,
    out: &mut Pair,
) {
    grid.neg_laplacian(&x.u, &mut out.u);
    grid.neg_laplacian(&x.v, &mut out.v);
    let (mu1, mu2, beta) = (coeff.amps.mu1, coeff.amps.mu2, coeff.amps.beta);
    for idx in 0..x.u.len() {
        let (ub, vb) = (base.u[idx], base.v[idx]);
        let c11 = coeff.p[idx] - 3.0 * mu1 * ub * ub - beta * vb * vb;
        let c22 = coeff.q[idx] - 3.0 * mu2 * vb * vb - beta * ub * ub;
        let c12 = -2.0 * beta * ub * vb;
        out.u[idx] += c11 * x.u[idx] + c12 * x.v[idx];
        out.v[idx] += c12 * x.u[idx] + c22 * x.v[idx];
    }
    zero_walls(grid, out);
}

pub fn zero_walls(grid: &Grid3D, p: &mut Pair) {
    for i in 0..grid.n[0] {
        for j in 0..grid.n[1] {
            for k in 0..grid.n[2] {
                if grid.is_boundary(i, j, k) {
                    let c = grid.idx(i, j, k);
                    p.u[c] = 0.0;
                    p.v[c] = 0.0;
                }
            }
        }
    }
}

/// Jacobi preconditioner built from the linear part only (always positive).
fn jacobi_diag_inv(grid: &Grid3D, coeff: &SystemCoefficients) -> Pair {
    let lead = 6.0 / (grid.h * grid.h);
    Pair {
        u: coeff.p.iter().map(|p| 1.0 / (lead + p.max(0.01))).collect(),
        v: coeff.q.iter().map(|q| 1.0 / (lead + q.max(0.01))).collect(),
    }
}

/// Full energy of (u, v): ½∫(|∇u|² + Pu² + |∇v|² + Qv²) - ¼∫(μ₁u⁴ + μ₂v⁴)
/// - ½∫βu²v², with central-difference gradients.
pub fn energy_full(fields: &DiscreteFieldPair, coeff: &SystemCoefficients) -> Result<f64> {
    let grid = &fields.grid;
    // peaks must sit inside with margin: boundary leak check
    let mut peak: f64 = 0.0;
    let mut boundary: f64 = 0.0;
    let full2 = grid.sym[0] == crate::grid::AxisSym::Full;
    let full3 = grid.sym[1] == crate::grid::AxisSym::Full;
    for i in 0..grid.n[0] {
        for j in 0..grid.n[1] {
            for k in 0..grid.n[2] {
                let c = grid.idx(i, j, k);
                let m = fields.u[c].abs().max(fields.v[c].abs());
                peak = peak.max(m);
                // one node in from the Dirichlet wall, where the field is free
                let near_edge = !grid.is_boundary(i, j, k)
                    && (i == 1
                        || i == grid.n[0] - 2
                        || j == grid.n[1] - 2
                        || k == grid.n[2] - 2
                        || (full2 && j == 1)
                        || (full3 && k == 1));
                if near_edge {
                    boundary = boundary.max(m);
                }
            }
        }
    }
    if boundary > 1e-8 * peak && peak > 0.0 {
        return Err(Error::BoxTooSmall { boundary, peak });
    }

    let n = grid.len();
    let mut grad = vec![0.0; n];
    let mut quad = vec![0.0; n];
    let mut kin = vec![0.0; n];
    for axis in 0..3 {
        grid.gradient_component(&fields.u, axis, &mut grad);
        for (k, g) in kin.iter_mut().zip(&grad) {
            *k += g * g;
        }
        grid.gradient_component(&fields.v, axis, &mut grad);
        for (k, g) in kin.iter_mut().zip(&grad) {
            *k += g * g;
        }
    }
    let (mu1, mu2, beta) = (coeff.amps.mu1, coeff.amps.mu2, coeff.amps.beta);
    for idx in 0..n {
        let (u, v) = (fields.u[idx], fields.v[idx]);
        quad[idx] = 0.5 * (kin[idx] + coeff.p[idx] * u * u + coeff.q[idx] * v * v)
            - 0.25 * (mu1 * u.powi(4) + mu2 * v.powi(4))
            - 0.5 * beta * u * u * v * v;
    }
    let ones = vec![1.0; n];
    Ok(grid.dot(&quad, &ones))
}

/// Report from `newton_solve`.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Damped Newton from an ansatz. The line search halves the step until the
/// max-norm residual decreases, so accepted steps are monotone.
pub fn newton_solve(
    initial: &AnsatzField,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    grid: Arc<Grid3D>,
    tol: f64,
) -> Result<(DiscreteFieldPair, NewtonReport)> {
    if !(1e-10..=1e-4).contains(&tol) {
        return Err(Error::InvalidArgument(format!("tol must lie in [1e-10, 1e-4], got {tol}")));
    }
    let epsilon = initial.configuration.epsilon;
    let coeff = sample_potentials(&grid, p_model, q_model, epsilon, initial.amplitudes);
    let mut fields = Pair {
        u: grid.sample(|p| initial.evaluate(p).0),
        v: grid.sample(|p| initial.evaluate(p).1),
    };
    newton_iterate(&grid, &coeff, &mut fields, tol, 50).map(|report| {
        let positive = fields.u.iter().all(|x| *x >= 0.0) && fields.v.iter().all(|x| *x >= 0.0);
        (
            DiscreteFieldPair {
                grid: grid.clone(),
                u: fields.u.clone(),
                v: fields.v.clone(),
                epsilon,
                residual_norm: *report.residual_history.last().unwrap(),
                positive,
            },
            report,
        )
    })
}

pub(crate) fn newton_iterate(
    grid: &Grid3D,
    coeff: &SystemCoefficients,
    fields: &mut Pair,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonReport> {
    let n = grid.len();
    let mut res = Pair::zeros(n);
    let mut trial = Pair::zeros(n);
    let mut trial_res = Pair::zeros(n);
    let diag_inv = jacobi_diag_inv(grid, coeff);
    residual(grid, coeff, fields, &mut res);
    let mut res_norm = pair_max_norm(&res);
    let mut res_l2 = pair_norm(grid, &res);
    let res0_l2 = res_l2.max(1e-300);
    let mut history = vec![res_norm];
    for it in 0..max_iter {
        if res_norm <= tol {
            return Ok(NewtonReport {
                iterations: it,
                residual_history: history,
            });
        }
        let mut rhs = res.clone();
        rhs.scale(-1.0);
        let mut step = Pair::zeros(n);
        let base = fields.clone();
        let mut apply = |x: &Pair, out: &mut Pair| jacobian_apply(grid, coeff, &base, x, out);
        // inexact Newton: loose solves while the residual is large keep the
        // step a descent direction, tight solves restore quadratic tails
        let lin_tol = (0.1 * res_l2 / res0_l2).clamp(1e-10, 1e-3);
        let stats = cg_solve(
            grid,
            &mut apply,
            &rhs,
            &mut step,
            Some(&diag_inv),
            None,
            lin_tol,
            4000,
        );
        if stats.indefinite && stats.relative_residual > lin_tol.max(1e-6) {
            // the Jacobian has negative directions away from the solution;
            // MINRES handles the indefinite solve
            step = Pair::zeros(n);
            crate::linalg::minres_solve(grid, &mut apply, &rhs, &mut step, lin_tol, 8000);
        }
        // halving line search; the exact Newton direction is first-order
        // descent for the L² residual, so damping on it cannot stall unless
        // the step blows up along a nearly-neutral mode
        let mut line_search = |step: &Pair,
                               fields: &mut Pair,
                               res: &mut Pair,
                               res_l2: &mut f64,
                               res_norm: &mut f64|
         -> bool {
            let mut t = 1.0;
            for _ in 0..24 {
                trial.copy_from(fields);
                trial.axpy(t, step);
                residual(grid, coeff, &trial, &mut trial_res);
                let trial_l2 = pair_norm(grid, &trial_res);
                if trial_l2 < *res_l2 {
                    fields.copy_from(&trial);
                    res.copy_from(&trial_res);
                    *res_l2 = trial_l2;
                    *res_norm = pair_max_norm(res);
                    return true;
                }
                t *= 0.5;
            }
            false
        };
        let mut accepted = line_search(&step, fields, &mut res, &mut res_l2, &mut res_norm);
        if !accepted {
            // soft reduced modes (ring radius, spike separation) make the
            // plain Newton step overshoot; retry with Levenberg damping
            for tau_scale in [0.1, 1.0] {
                let tau = (tau_scale * res_l2).max(1e-4);
                let mut apply_reg = |x: &Pair, out: &mut Pair| {
                    jacobian_apply(grid, coeff, &base, x, out);
                    out.axpy(tau, x);
                    zero_walls(grid, out);
                };
                step = Pair::zeros(n);
                crate::linalg::minres_solve(grid, &mut apply_reg, &rhs, &mut step, lin_tol, 8000);
                if line_search(&step, fields, &mut res, &mut res_l2, &mut res_norm) {
                    accepted = true;
                    break;
                }
            }
        }
        if !accepted {
            return Err(Error::LineSearchFailure { iteration: it });
        }
        history.push(res_norm);
    }
    if res_norm <= tol {
        Ok(NewtonReport {
            iterations: max_iter,
            residual_history: history,
        })
    } else {
        Err(Error::NewtonStall {
            residual: res_norm,
            iterations: max_iter,
            tol,
        })
    }
}

/// Report from the projected (constrained) solve.
#[derive(Debug, Clone)]
pub struct ProjectedSolveReport {
    /// Energy norm sqrt(∫|∇φ|² + Pφ² + |∇ψ|² + Qψ²).
    pub correction_energy_norm: f64,
    /// Weighted sup norm of the correction.
    pub correction_weighted_norm: f64,
    pub multiplier: f64,
    pub constraint_residual: f64,
    pub iteration_residuals: Vec<f64>,
    pub correction: DiscreteFieldPair,
}

/// Source fields of the projected problem and their weighted norms.
#[derive(Debug, Clone)]
pub struct LefthandSource {
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub weighted_norm_l1: f64,
    pub weighted_norm_l2: f64,
}

/// The constraint direction (Σ_j W²_{x^j} Y_j, Σ_j W²_{x^j} Z_j) with
/// Y_j, Z_j the ring-radius derivatives of the peak profiles.
pub fn constraint_field(field: &AnsatzField, grid: &Grid3D) -> Pair {
    let cfg = &field.configuration;
    let profile = &field.profile;
    let gamma1 = field.amplitudes.gamma1;
    let gamma2 = field.amplitudes.gamma2;
    let mut c = Pair::zeros(grid.len());
    for i in 0..grid.n[0] {
        for j in 0..grid.n[1] {
            for k in 0..grid.n[2] {
                if grid.is_boundary(i, j, k) {
                    continue;
                }
                let y = grid.coord(i, j, k);
                let mut total = 0.0;
                for jj in 1..=cfg.ring_count {
                    let center = cfg.ring_center(jj);
                    let d = dist(y, center);
                    if d < 1e-12 || d > crate::ansatz::TAIL_CUTOFF {
                        continue;
                    }
                    let radial_dir = [
                        center[0] / cfg.ring_radius.max(1e-300),
                        center[1] / cfg.ring_radius.max(1e-300),
                        0.0,
                    ];
                    let toward = [(center[0] - y[0]), (center[1] - y[1]), (center[2] - y[2])];
                    let proj =
                        (toward[0] * radial_dir[0] + toward[1] * radial_dir[1]) / d;
                    let w = profile.eval(d);
                    let dw = profile.eval_deriv(d);
                    total += w * w * dw * proj;
                }
                let idx = grid.idx(i, j, k);
                c.u[idx] = gamma1 * total;
                c.v[idx] = gamma2 * total;
            }
        }
    }
    c
}

/// Algebraic source ℓ = (ℓ₁, ℓ₂) of the expansion around a synchronized
/// ansatz: the Laplacian parts cancel through the profile equations, so no
/// stencil error enters.
///
/// ℓ₁ = Σ_j (P-1)U_j - μ₁(S³ - u_ε³ - ΣU_j³) - β(ST² - u_εv_ε² - ΣU_jV_j²)
/// and symmetrically for ℓ₂, plus the inner solve's own discrete residual
/// when an inner solution is present (bounded by its convergence tol).
pub fn lefthand_source(
    field: &AnsatzField,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    grid: &Grid3D,
) -> LefthandSource {
    assert_eq!(
        field.configuration.mode,
        AnsatzMode::Synchronized,
        "lefthand_source expects a synchronized ansatz"
    );
    let cfg = &field.configuration;
    let amps = &field.amplitudes;
    let eps = cfg.epsilon;
    let n = grid.len();
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    let centers = cfg.ring_centers();
    for i in 0..grid.n[0] {
        for j in 0..grid.n[1] {
            for k in 0..grid.n[2] {
                if grid.is_boundary(i, j, k) {
                    continue;
                }
                let y = grid.coord(i, j, k);
                let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt();
                let (pv, qv) = (p_model.evaluate(eps * r), q_model.evaluate(eps * r));
                let mut w_sum = 0.0;
                let mut w_cubed_sum = 0.0;
                for c in &centers {
                    let d = dist(y, *c);
                    if d < crate::ansatz::TAIL_CUTOFF {
                        let w = field.profile.eval(d);
                        w_sum += w;
                        w_cubed_sum += w * w * w;
                    }
                }
                let (inner_u, inner_v) = match &field.inner_solution {
                    Some(inner) => inner.sample(y),
                    None => (0.0, 0.0),
                };
                let s = inner_u + amps.gamma1 * w_sum;
                let t = inner_v + amps.gamma2 * w_sum;
                let u_peaks3 = amps.gamma1.powi(3) * w_cubed_sum;
                let v_peaks3 = amps.gamma2.powi(3) * w_cubed_sum;
                let uv2_peaks = amps.gamma1 * amps.gamma2 * amps.gamma2 * w_cubed_sum;
                let u2v_peaks = amps.gamma1 * amps.gamma1 * amps.gamma2 * w_cubed_sum;
                let idx = grid.idx(i, j, k);
                l1[idx] = (pv - 1.0) * amps.gamma1 * w_sum
                    - amps.mu1 * (s.powi(3) - inner_u.powi(3) - u_peaks3)
                    - amps.beta * (s * t * t - inner_u * inner_v * inner_v - uv2_peaks);
                l2[idx] = (qv - 1.0) * amps.gamma2 * w_sum
                    - amps.mu2 * (t.powi(3) - inner_v.powi(3) - v_peaks3)
                    - amps.beta * (t * s * s - inner_v * inner_u * inner_u - u2v_peaks);
            }
        }
    }
    let envelope = crate::diagnostics::envelope_field(grid, cfg, 0.2, 1.0);
    let weighted = |l: &[f64]| {
        l.iter()
            .zip(&envelope)
            .fold(0.0f64, |m, (x, e)| m.max(x.abs() / e))
    };
    LefthandSource {
        weighted_norm_l1: weighted(&l1),
        weighted_norm_l2: weighted(&l2),
        l1,
        l2,
    }
}

/// Projected Newton solve of the constrained problem: find (φ, ψ) ⟂ c with
/// I'(S+φ, T+ψ) = b_k c. Linear solves run CG on the Jacobian restricted to
/// the discrete constraint space.
pub fn projected_solve(
    field: &AnsatzField,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    grid: Arc<Grid3D>,
    tol: f64,
) -> Result<ProjectedSolveReport> {
    let eps = field.configuration.epsilon;
    let coeff = sample_potentials(&grid, p_model, q_model, eps, field.amplitudes);
    let base = Pair {
        u: grid.sample(|p| field.evaluate(p).0),
        v: grid.sample(|p| field.evaluate(p).1),
    };
    let source = lefthand_source(field, p_model, q_model, &grid);
    let c = constraint_field(field, &grid);
    let c_norm2 = pair_dot(&grid, &c, &c);
    if c_norm2 < 1e-20 {
        return Err(Error::ConstraintRankDeficiency { norm: c_norm2.sqrt() });
    }
    let n = grid.len();
    let mut phi = Pair::zeros(n);
    let (mu1, mu2, beta) = (coeff.amps.mu1, coeff.amps.mu2, coeff.amps.beta);

    // G(φ) = ℓ + J φ + N(φ), all but Jφ assembled pointwise.
    let residual_at = |phi: &Pair, out: &mut Pair| {
        jacobian_apply(&grid, &coeff, &base, phi, out);
        for idx in 0..n {
            let (s, t) = (base.u[idx], base.v[idx]);
            let (du, dv) = (phi.u[idx], phi.v[idx]);
            let su = s + du;
            let tv = t + dv;
            // cubic remainders beyond the linearization
            let n1 = -mu1 * (su.powi(3) - s.powi(3) - 3.0 * s * s * du)
                - beta * (su * tv * tv - s * t * t - t * t * du - 2.0 * s * t * dv);
            let n2 = -mu2 * (tv.powi(3) - t.powi(3) - 3.0 * t * t * dv)
                - beta * (tv * su * su - t * s * s - s * s * dv - 2.0 * s * t * du);
            out.u[idx] += source.l1[idx] + n1;
            out.v[idx] += source.l2[idx] + n2;
        }
        zero_walls(&grid, out);
    };

    let mut g = Pair::zeros(n);
    residual_at(&phi, &mut g);
    let project_norm = |g: &Pair| {
        let along = pair_dot(&grid, g, &c) / c_norm2;
        let mut gp = g.clone();
        gp.axpy(-along, &c);
        (pair_norm(&grid, &gp), along)
    };
    let (mut g_norm, mut multiplier) = project_norm(&g);
    let mut trace = vec![g_norm];
    let g0 = g_norm.max(1e-300);
    for _ in 0..30 {
        if g_norm <= tol * g0.max(1.0) || g_norm <= tol {
            break;
        }
        let mut rhs = g.clone();
        rhs.scale(-1.0);
        let along_rhs = pair_dot(&grid, &rhs, &c) / c_norm2;
        rhs.axpy(-along_rhs, &c);
        let mut step = Pair::zeros(n);
        let base_phi = phi.clone();
        let shifted = {
            let mut s = base.clone();
            s.axpy(1.0, &base_phi);
            s
        };
        // the operator restricted to E_k is invertible but indefinite (the
        // amplitude directions are negative), so the solve runs MINRES on
        // the constraint-projected operator P J P
        let mut apply = |x: &Pair, out: &mut Pair| {
            let mut xp = x.clone();
            let a = pair_dot(&grid, &xp, &c) / c_norm2;
            xp.axpy(-a, &c);
            jacobian_apply(&grid, &coeff, &shifted, &xp, out);
            let b = pair_dot(&grid, out, &c) / c_norm2;
            out.axpy(-b, &c);
        };
        crate::linalg::minres_solve(&grid, &mut apply, &rhs, &mut step, 1e-10, 8000);
        phi.axpy(1.0, &step);
        // keep the iterate exactly in the constraint space
        let along = pair_dot(&grid, &phi, &c) / c_norm2;
        phi.axpy(-along, &c);
        residual_at(&phi, &mut g);
        let (new_norm, mult) = project_norm(&g);
        multiplier = mult;
        let ratio = new_norm / g_norm.max(1e-300);
        trace.push(new_norm);
        if new_norm > tol && new_norm > tol * g0.max(1.0) && ratio >= 0.9 {
            return Err(Error::NonContraction { ratio });
        }
        g_norm = new_norm;
    }
    let constraint_residual = (pair_dot(&grid, &phi, &c) / c_norm2.sqrt()).abs();

    // energy norm in the H¹-weighted product
    let mut grad = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for axis in 0..3 {
        grid.gradient_component(&phi.u, axis, &mut grad);
        for (a, g) in acc.iter_mut().zip(&grad) {
            *a += g * g;
        }
        grid.gradient_component(&phi.v, axis, &mut grad);
        for (a, g) in acc.iter_mut().zip(&grad) {
            *a += g * g;
        }
    }
    for idx in 0..n {
        acc[idx] += coeff.p[idx] * phi.u[idx] * phi.u[idx] + coeff.q[idx] * phi.v[idx] * phi.v[idx];
    }
    let ones = vec![1.0; n];
    let energy_norm = grid.dot(&acc, &ones).sqrt();
    let envelope = crate::diagnostics::envelope_field(&grid, &field.configuration, 0.2, 1.0);
    let weighted = phi
        .u
        .iter()
        .zip(&envelope)
        .chain(phi.v.iter().zip(&envelope))
        .fold(0.0f64, |m, (x, e)| m.max(x.abs() / e));

    Ok(ProjectedSolveReport {
        correction_energy_norm: energy_norm,
        correction_weighted_norm: weighted,
        multiplier,
        constraint_residual,
        iteration_residuals: trace,
        correction: DiscreteFieldPair {
            grid: grid.clone(),
            u: phi.u,
            v: phi.v,
            epsilon: eps,
            residual_norm: g_norm,
            positive: false,
        },
    })
}

/// Reduced energy of a symmetric two-spike inner cluster at half-offset a on
/// the x₃ axis: trap attraction toward the potential maximum against the
/// peak-peak attraction. Used to place the Theorem-A inner pair where the
/// Newton solve can hold it.
pub fn inner_pair_energy(
    profile: &crate::ground_state::GroundState,
    amps: &CoupledAmplitudes,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    epsilon: f64,
    half_offset: f64,
) -> f64 {
    // axisymmetric trap integral around a spike at (0,0,a): cylindrical
    // quadrature, midpoint in (ρ, z)
    let a = half_offset;
    let hq = 0.05;
    let extent = 9.0;
    let mut trap = 0.0;
    let nr = (extent / hq) as usize;
    let nz = (2.0 * extent / hq) as usize;
    for iz in 0..nz {
        let z = a - extent + (iz as f64 + 0.5) * hq;
        let mut ring_sum = 0.0;
        for ir in 0..nr {
            let rho = (ir as f64 + 0.5) * hq;
            let r = (rho * rho + z * z).sqrt();
            let d = (rho * rho + (z - a) * (z - a)).sqrt();
            let w = profile.eval(d);
            let g1 = amps.gamma1 * amps.gamma1;
            let g2 = amps.gamma2 * amps.gamma2;
            ring_sum += rho
                * w
                * w
                * (g1 * (p_model.evaluate(epsilon * r) - 1.0)
                    + g2 * (q_model.evaluate(epsilon * r) - 1.0));
        }
        trap += ring_sum;
    }
    trap *= 2.0 * std::f64::consts::PI * hq * hq; // per spike
    let gbar = amps.gamma1 * amps.gamma1 + amps.gamma2 * amps.gamma2;
    let sep = 2.0 * a;
    let i31 = crate::reduced_energy::I31_PREFACTOR * (-sep).exp() / sep;
    2.0 * 0.5 * trap * 2.0 - gbar * i31
}

/// Golden-section maximizer of the two-spike reduced energy; returns the
/// half-offset along x₃.
pub fn equilibrium_inner_half_offset(
    profile: &crate::ground_state::GroundState,
    amps: &CoupledAmplitudes,
    p_model: &PotentialModel,
    q_model: &PotentialModel,
    epsilon: f64,
) -> f64 {
    let f = |a: f64| inner_pair_energy(profile, amps, p_model, q_model, epsilon, a);
    let (mut lo, mut hi) = (0.6, 10.0);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    for _ in 0..48 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if f(m1) > f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    0.5 * (lo + hi)
}
