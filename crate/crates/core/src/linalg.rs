//! Matrix-free Krylov solvers over two-component grid fields.
//!
//! All reductions go through `Grid3D::dot`, which sums in a fixed order, so
//! results are reproducible run to run. Operators are closures applying the
//! symmetric system matrix to a (u, v) pair packed as two vectors.

use crate::grid::Grid3D;

/// Two-component field vector.
#[derive(Debug, Clone)]
pub struct Pair {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Pair {
    pub fn zeros(n: usize) -> Pair {
        Pair {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &Pair) {
        for (a, b) in self.u.iter_mut().zip(&other.u) {
            *a += alpha * b;
        }
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.u.iter_mut().for_each(|x| *x *= alpha);
        self.v.iter_mut().for_each(|x| *x *= alpha);
    }

    pub fn copy_from(&mut self, other: &Pair) {
        self.u.copy_from_slice(&other.u);
        self.v.copy_from_slice(&other.v);
    }
}

pub fn pair_dot(grid: &Grid3D, a: &Pair, b: &Pair) -> f64 {
    grid.dot(&a.u, &b.u) + grid.dot(&a.v, &b.v)
}

pub fn pair_norm(grid: &Grid3D, a: &Pair) -> f64 {
    pair_dot(grid, a, a).sqrt()
}

pub fn pair_max_norm(a: &Pair) -> f64 {
    a.u.iter()
        .chain(a.v.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// CG hit a non-positive curvature direction and stopped early.
    pub indefinite: bool,
}

/// Preconditioned conjugate gradient on a symmetric operator with optional
/// rank-one constraint deflation (iterates stay orthogonal to `constraint`
/// in the grid inner product).
///
/// `diag` is the Jacobi preconditioner (pointwise inverse applied); pass
/// None for the identity. Stops on a negative-curvature direction, which the
/// damped Newton callers treat as a truncated step.
#[allow(clippy::too_many_arguments)]
pub fn cg_solve(
    grid: &Grid3D,
    apply: &mut dyn FnMut(&Pair, &mut Pair),
    b: &Pair,
    x: &mut Pair,
    diag_inv: Option<&Pair>,
    constraint: Option<&Pair>,
    tol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = b.u.len();
    let mut r = Pair::zeros(n);
    let mut ap = Pair::zeros(n);
    let project = |vec: &mut Pair, c: Option<&Pair>| {
        if let Some(c) = c {
            let alpha = pair_dot(grid, vec, c) / pair_dot(grid, c, c);
            vec.axpy(-alpha, c);
        }
    };
    // r = b - A x
    apply(x, &mut ap);
    r.copy_from(b);
    r.axpy(-1.0, &ap);
    project(&mut r, constraint);
    let apply_prec = |z: &mut Pair, r: &Pair, d: Option<&Pair>| match d {
        Some(d) => {
            for ((z, r), di) in z.u.iter_mut().zip(&r.u).zip(&d.u) {
                *z = r * di;
            }
            for ((z, r), di) in z.v.iter_mut().zip(&r.v).zip(&d.v) {
                *z = r * di;
            }
        }
        None => z.copy_from(r),
    };
    let mut z = Pair::zeros(n);
    apply_prec(&mut z, &r, diag_inv);
    project(&mut z, constraint);
    let mut p = z.clone();
    let b_norm = pair_norm(grid, b).max(1e-300);
    let mut rz = pair_dot(grid, &r, &z);
    let mut stats = SolveStats {
        iterations: 0,
        relative_residual: pair_norm(grid, &r) / b_norm,
        indefinite: false,
    };
    for it in 0..max_iter {
        apply(&p, &mut ap);
        project(&mut ap, constraint);
        let pap = pair_dot(grid, &p, &ap);
        if pap <= 0.0 {
            stats.indefinite = true;
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let res = pair_norm(grid, &r) / b_norm;
        stats.iterations = it + 1;
        stats.relative_residual = res;
        if res < tol {
            break;
        }
        apply_prec(&mut z, &r, diag_inv);
        project(&mut z, constraint);
        let rz_new = pair_dot(grid, &r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        // p = z + beta p
        for (pi, zi) in p.u.iter_mut().zip(&z.u) {
            *pi = zi + beta * *pi;
        }
        for (pi, zi) in p.v.iter_mut().zip(&z.v) {
            *pi = zi + beta * *pi;
        }
    }
    stats
}

/// MINRES for symmetric indefinite systems; used by shift-invert solves
/// where the linearized operator has both signs.
pub fn minres_solve(
    grid: &Grid3D,
    apply: &mut dyn FnMut(&Pair, &mut Pair),
    b: &Pair,
    x: &mut Pair,
    tol: f64,
    max_iter: usize,
) -> SolveStats {
    let n = b.u.len();
    x.u.iter_mut().for_each(|t| *t = 0.0);
    x.v.iter_mut().for_each(|t| *t = 0.0);
    let mut v_prev = Pair::zeros(n);
    let mut v = b.clone();
    let beta1 = pair_norm(grid, b);
    if beta1 == 0.0 {
        return SolveStats {
            iterations: 0,
            relative_residual: 0.0,
            indefinite: false,
        };
    }
    v.scale(1.0 / beta1);
    let mut beta = 0.0f64;
    let mut c_prev = 1.0f64;
    let mut s_prev = 0.0f64;
    let mut c = 1.0f64;
    let mut s = 0.0f64;
    let mut d = Pair::zeros(n);
    let mut d_prev = Pair::zeros(n);
    let mut eta = beta1;
    let mut av = Pair::zeros(n);
    let mut stats = SolveStats {
        iterations: 0,
        relative_residual: 1.0,
        indefinite: false,
    };
    for it in 0..max_iter {
        apply(&v, &mut av);
        let alpha = pair_dot(grid, &v, &av);
        // Lanczos recurrence: w = A v - alpha v - beta v_prev
        av.axpy(-alpha, &v);
        if it > 0 {
            av.axpy(-beta, &v_prev);
        }
        let beta_next = pair_norm(grid, &av);
        // Givens rotations updating the tridiagonal QR
        let delta = c * alpha - c_prev * s * beta;
        let gamma1 = (delta * delta + beta_next * beta_next).sqrt();
        let eps = s_prev * beta;
        let delta3 = s * alpha + c_prev * c * beta;
        if gamma1 == 0.0 {
            stats.indefinite = true;
            break;
        }
        let c_next = delta / gamma1;
        let s_next = beta_next / gamma1;
        // d_new = (v - delta3 d - eps d_prev)/gamma1
        let mut d_new = v.clone();
        d_new.axpy(-delta3, &d);
        d_new.axpy(-eps, &d_prev);
        d_new.scale(1.0 / gamma1);
        x.axpy(c_next * eta, &d_new);
        eta *= -s_next;
        d_prev.copy_from(&d);
        d.copy_from(&d_new);
        // advance Lanczos vectors
        v_prev.copy_from(&v);
        if beta_next > 0.0 {
            v.copy_from(&av);
            v.scale(1.0 / beta_next);
        }
        beta = beta_next;
        c_prev = c;
        s_prev = s;
        c = c_next;
        s = s_next;
        stats.iterations = it + 1;
        stats.relative_residual = eta.abs() / beta1;
        if stats.relative_residual < tol {
            break;
        }
    }
    stats
}
