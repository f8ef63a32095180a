//! Cartesian 3D grid with homogeneous Dirichlet boundary and optional
//! reflection reduction in x₂ and/or x₃.
//!
//! Nodes along a full axis sit at -L + i h, i = 0..n-1 with h = 2L/(n-1); n
//! is kept odd so the origin is a node. A reduced axis stores only x ≥ 0:
//! an `Even` axis keeps the plane node and reflects the stencil across it
//! (u(-h) = u(+h)), an `Odd` axis drops the plane node and treats it as a
//! zero wall (u(0) = 0). Symmetric iterates therefore stay in their parity
//! sector structurally. Integrals weight stored nodes by the orbit size.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AxisSym {
    Full,
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid3D {
    /// Stored node counts per axis.
    pub n: [usize; 3],
    /// Full-domain node count (same for all axes).
    pub n_full: usize,
    pub h: f64,
    pub half_width: f64,
    /// Symmetry of axes x₂, x₃ (x₁ is always full).
    pub sym: [AxisSym; 2],
    /// Rotation order about the x₃ axis carried as symmetry metadata.
    pub rotation_order: usize,
}

impl Grid3D {
    /// Full box [-L, L]³ with n nodes per axis (n is forced odd).
    pub fn cube(half_width: f64, n: usize) -> Result<Grid3D> {
        Self::with_symmetry(half_width, n, AxisSym::Full, AxisSym::Full, 1)
    }

    /// Convenience for the even-even sector.
    pub fn even_symmetric(half_width: f64, n: usize, rotation_order: usize) -> Result<Grid3D> {
        Self::with_symmetry(half_width, n, AxisSym::Even, AxisSym::Even, rotation_order)
    }

    pub fn with_symmetry(
        half_width: f64,
        n: usize,
        sym2: AxisSym,
        sym3: AxisSym,
        rotation_order: usize,
    ) -> Result<Grid3D> {
        if n < 9 {
            return Err(Error::InvalidArgument(format!("grid too small: n={n}")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "half width must be positive: {half_width}"
            )));
        }
        // reflection reductions need the plane to be a node, hence odd n;
        // full grids take n as given (even n leaves the origin off-lattice)
        let reduced = sym2 != AxisSym::Full || sym3 != AxisSym::Full;
        let n_full = if reduced && n % 2 == 0 { n + 1 } else { n };
        let h = 2.0 * half_width / (n_full - 1) as f64;
        let half = (n_full - 1) / 2; // node count strictly right of the plane
        let stored = |s: AxisSym| match s {
            AxisSym::Full => n_full,
            AxisSym::Even => half + 1,
            AxisSym::Odd => half,
        };
        Ok(Grid3D {
            n: [n_full, stored(sym2), stored(sym3)],
            n_full,
            h,
            half_width,
            sym: [sym2, sym3],
            rotation_order,
        })
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + k
    }

    /// Coordinate origin offset of a stored axis: Even starts at 0, Odd at h.
    #[inline]
    fn axis_origin(&self, axis: usize) -> f64 {
        match axis {
            0 => -self.half_width,
            _ => match self.sym[axis - 1] {
                AxisSym::Full => -self.half_width,
                AxisSym::Even => 0.0,
                AxisSym::Odd => self.h,
            },
        }
    }

    /// Physical coordinate of a stored node.
    #[inline]
    pub fn coord(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            -self.half_width + i as f64 * self.h,
            self.axis_origin(1) + j as f64 * self.h,
            self.axis_origin(2) + k as f64 * self.h,
        ]
    }

    /// Quadrature weight of a stored node (h³ times the reflection orbit).
    #[inline]
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        let mut w = self.h * self.h * self.h;
        match self.sym[0] {
            AxisSym::Even if j > 0 => w *= 2.0,
            AxisSym::Odd => w *= 2.0,
            _ => {}
        }
        match self.sym[1] {
            AxisSym::Even if k > 0 => w *= 2.0,
            AxisSym::Odd => w *= 2.0,
            _ => {}
        }
        w
    }

    /// True for nodes held at zero: the Dirichlet box walls (and nothing
    /// else; symmetry planes are handled inside the stencils).
    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize, k: usize) -> bool {
        i == 0
            || i == self.n[0] - 1
            || j == self.n[1] - 1
            || k == self.n[2] - 1
            || (self.sym[0] == AxisSym::Full && j == 0)
            || (self.sym[1] == AxisSym::Full && k == 0)
    }

    /// Fill a stored-domain vector from a point function.
    pub fn sample(&self, f: impl Fn([f64; 3]) -> f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for i in 0..self.n[0] {
            for j in 0..self.n[1] {
                for k in 0..self.n[2] {
                    if !self.is_boundary(i, j, k) {
                        out[self.idx(i, j, k)] = f(self.coord(i, j, k));
                    }
                }
            }
        }
        out
    }

    /// Below-plane neighbor value along a reduced axis.
    #[inline]
    fn plane_neighbor(&self, u: &[f64], c: usize, axis: usize, stride: usize) -> f64 {
        match self.sym[axis - 1] {
            AxisSym::Even => u[c + stride], // u(-h) = u(+h)
            AxisSym::Odd => {
                // first stored node sits at h; the plane value is 0, and for
                // the node at h the below-plane neighbor IS the plane
                0.0
            }
            AxisSym::Full => unreachable!(),
        }
    }

    /// 7-point Laplacian: out = -Δ_h u with Dirichlet walls and reflections.
    pub fn neg_laplacian(&self, u: &[f64], out: &mut [f64]) {
        let [n0, n1, n2] = self.n;
        let inv_h2 = 1.0 / (self.h * self.h);
        for i in 0..n0 {
            for j in 0..n1 {
                let row = (i * n1 + j) * n2;
                for k in 0..n2 {
                    let c = row + k;
                    if self.is_boundary(i, j, k) {
                        out[c] = 0.0;
                        continue;
                    }
                    let u_c = u[c];
                    let xm = u[c - n1 * n2];
                    let xp = u[c + n1 * n2];
                    let ym = if j == 0 {
                        self.plane_neighbor(u, c, 1, n2)
                    } else {
                        u[c - n2]
                    };
                    let yp = u[c + n2];
                    let zm = if k == 0 {
                        self.plane_neighbor(u, c, 2, 1)
                    } else {
                        u[c - 1]
                    };
                    let zp = u[c + 1];
                    out[c] = (6.0 * u_c - xm - xp - ym - yp - zm - zp) * inv_h2;
                }
            }
        }
    }

    /// Central-difference gradient component along `axis`.
    pub fn gradient_component(&self, u: &[f64], axis: usize, out: &mut [f64]) {
        let [n0, n1, n2] = self.n;
        let inv_2h = 1.0 / (2.0 * self.h);
        for i in 0..n0 {
            for j in 0..n1 {
                let row = (i * n1 + j) * n2;
                for k in 0..n2 {
                    let c = row + k;
                    if self.is_boundary(i, j, k) {
                        out[c] = 0.0;
                        continue;
                    }
                    let (m, p) = match axis {
                        0 => (u[c - n1 * n2], u[c + n1 * n2]),
                        1 => (
                            if j == 0 {
                                // even axis: derivative 0 at the plane;
                                // odd axis: mirror value is -u(h)... the plane
                                // neighbor handles both via the sign
                                match self.sym[0] {
                                    AxisSym::Even => u[c + n2],
                                    AxisSym::Odd => 0.0,
                                    AxisSym::Full => unreachable!(),
                                }
                            } else {
                                u[c - n2]
                            },
                            u[c + n2],
                        ),
                        _ => (
                            if k == 0 {
                                match self.sym[1] {
                                    AxisSym::Even => u[c + 1],
                                    AxisSym::Odd => 0.0,
                                    AxisSym::Full => unreachable!(),
                                }
                            } else {
                                u[c - 1]
                            },
                            u[c + 1],
                        ),
                    };
                    out[c] = (p - m) * inv_2h;
                }
            }
        }
    }

    /// Weighted inner product over the represented full domain, summed in a
    /// fixed order for run-to-run determinism.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let n2 = self.n[2];
        let plane_w3 = match self.sym[1] {
            AxisSym::Full => 1.0,
            _ => 2.0,
        };
        let mut acc = 0.0;
        for i in 0..self.n[0] {
            for j in 0..self.n[1] {
                let row = (i * self.n[1] + j) * n2;
                let mut line0 = 0.0;
                let mut line = 0.0;
                for k in 0..n2 {
                    let t = a[row + k] * b[row + k];
                    if k == 0 {
                        line0 = t;
                    } else {
                        line += t;
                    }
                }
                // k = 0 is the plane node only for Even axes
                let first_w = match self.sym[1] {
                    AxisSym::Even => 1.0,
                    AxisSym::Odd => 2.0,
                    AxisSym::Full => 1.0,
                };
                let mut contrib = first_w * line0 + plane_w3 * line;
                match self.sym[0] {
                    AxisSym::Even if j > 0 => contrib *= 2.0,
                    AxisSym::Odd => contrib *= 2.0,
                    _ => {}
                }
                acc += contrib;
            }
        }
        acc * self.h * self.h * self.h
    }

    /// Max-norm over stored nodes.
    pub fn max_norm(&self, a: &[f64]) -> f64 {
        a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trilinear sample at an arbitrary point, unfolding reflections (with
    /// the sign flip on odd axes). Outside the box it returns 0.
    pub fn interp(&self, u: &[f64], p: [f64; 3]) -> f64 {
        let mut q = p;
        let mut sign = 1.0;
        for axis in [1usize, 2] {
            match self.sym[axis - 1] {
                AxisSym::Full => {}
                AxisSym::Even => q[axis] = q[axis].abs(),
                AxisSym::Odd => {
                    if q[axis] < 0.0 {
                        q[axis] = -q[axis];
                        sign = -sign;
                    }
                }
            }
        }
        let to_index = |axis: usize, x: f64| -> Option<f64> {
            let t = (x - self.axis_origin(axis)) / self.h;
            // odd axes: values between the plane (0) and the first stored
            // node interpolate against the implicit zero at the plane
            if t < -1.0 || t > (self.n[axis] - 1) as f64 {
                None
            } else {
                Some(t)
            }
        };
        let (Some(tx), Some(ty), Some(tz)) =
            (to_index(0, q[0]), to_index(1, q[1]), to_index(2, q[2]))
        else {
            return 0.0;
        };
        // fetch with implicit zero plane at index -1 on odd axes
        let fetch = |i: isize, j: isize, k: isize| -> f64 {
            if i < 0 || j < 0 || k < 0 {
                return 0.0;
            }
            u[self.idx(i as usize, j as usize, k as usize)]
        };
        let cell = |t: f64, n: usize| -> (isize, f64) {
            let i = t.floor().max(-1.0).min((n - 2) as f64) as isize;
            (i, t - i as f64)
        };
        let (i, fx) = cell(tx, self.n[0]);
        let (j, fy) = cell(ty, self.n[1]);
        let (k, fz) = cell(tz, self.n[2]);
        let mut v = 0.0;
        for (di, wx) in [(0, 1.0 - fx), (1, fx)] {
            for (dj, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dk, wz) in [(0, 1.0 - fz), (1, fz)] {
                    v += wx * wy * wz * fetch(i + di, j + dj, k + dk);
                }
            }
        }
        sign * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_reduction_consistent_with_full_grid() {
        let full = Grid3D::cube(4.0, 17).unwrap();
        let red = Grid3D::even_symmetric(4.0, 17, 1).unwrap();
        let f = |p: [f64; 3]| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
        let uf = full.sample(f);
        let ur = red.sample(f);
        let ones_f = vec![1.0; full.len()];
        let ones_r = vec![1.0; red.len()];
        assert!((full.dot(&uf, &ones_f) - red.dot(&ur, &ones_r)).abs() < 1e-12);
        let mut lf = vec![0.0; full.len()];
        let mut lr = vec![0.0; red.len()];
        full.neg_laplacian(&uf, &mut lf);
        red.neg_laplacian(&ur, &mut lr);
        let mid = (full.n_full - 1) / 2;
        for i in 1..full.n[0] - 1 {
            for j in 0..red.n[1] - 1 {
                for k in 0..red.n[2] - 1 {
                    let vf = lf[full.idx(i, mid + j, mid + k)];
                    let vr = lr[red.idx(i, j, k)];
                    assert!((vf - vr).abs() < 1e-11, "({i},{j},{k}): {vf} vs {vr}");
                }
            }
        }
    }

    #[test]
    fn odd_reduction_consistent_with_full_grid() {
        let full = Grid3D::cube(4.0, 17).unwrap();
        let red = Grid3D::with_symmetry(4.0, 17, AxisSym::Odd, AxisSym::Full, 1).unwrap();
        // function odd in x₂, even in x₃
        let f = |p: [f64; 3]| p[1] * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
        let uf = full.sample(f);
        let ur = red.sample(f);
        let mut lf = vec![0.0; full.len()];
        let mut lr = vec![0.0; red.len()];
        full.neg_laplacian(&uf, &mut lf);
        red.neg_laplacian(&ur, &mut lr);
        let mid = (full.n_full - 1) / 2;
        for i in 1..full.n[0] - 1 {
            for j in 0..red.n[1] - 1 {
                for k in 1..full.n[2] - 1 {
                    let vf = lf[full.idx(i, mid + 1 + j, k)];
                    let vr = lr[red.idx(i, j, k)];
                    assert!((vf - vr).abs() < 1e-11, "({i},{j},{k}): {vf} vs {vr}");
                }
            }
        }
        // norms: stored half carries weight 2
        let nf = full.dot(&uf, &uf);
        let nr = red.dot(&ur, &ur);
        assert!((nf - nr).abs() < 1e-12, "{nf} vs {nr}");
    }

    #[test]
    fn laplacian_second_order_on_smooth_field() {
        let f = |p: [f64; 3]| (-0.3 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
        let lap_exact = |p: [f64; 3]| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            -(0.36 * r2 - 1.8) * (-0.3f64 * r2).exp()
        };
        let mut errs = Vec::new();
        for n in [21, 41] {
            let g = Grid3D::cube(3.0, n).unwrap();
            let u = g.sample(f);
            let mut l = vec![0.0; g.len()];
            g.neg_laplacian(&u, &mut l);
            let mut worst: f64 = 0.0;
            for i in 2..g.n[0] - 2 {
                for j in 2..g.n[1] - 2 {
                    for k in 2..g.n[2] - 2 {
                        let e = (l[g.idx(i, j, k)] - lap_exact(g.coord(i, j, k))).abs();
                        worst = worst.max(e);
                    }
                }
            }
            errs.push(worst);
        }
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.0 && ratio < 5.0, "ratio={ratio}");
    }

    #[test]
    fn interp_unfolds_symmetry() {
        let red = Grid3D::even_symmetric(4.0, 17, 1).unwrap();
        let f = |p: [f64; 3]| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
        let u = red.sample(f);
        let v1 = red.interp(&u, [0.7, 1.3, 0.9]);
        let v2 = red.interp(&u, [0.7, -1.3, -0.9]);
        assert!((v1 - v2).abs() < 1e-15);
        assert!((v1 - f([0.7, 1.3, 0.9])).abs() < 0.02);
        assert_eq!(red.interp(&u, [5.0, 0.0, 0.0]), 0.0);
        // odd axis flips the sign
        let odd = Grid3D::with_symmetry(4.0, 17, AxisSym::Odd, AxisSym::Full, 1).unwrap();
        let g = |p: [f64; 3]| p[1] * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
        let uo = odd.sample(g);
        let a = odd.interp(&uo, [0.4, 1.1, -0.3]);
        let b = odd.interp(&uo, [0.4, -1.1, -0.3]);
        assert!((a + b).abs() < 1e-15);
    }

    #[test]
    fn dot_matches_naive_weighted_sum() {
        let g = Grid3D::with_symmetry(2.0, 9, AxisSym::Even, AxisSym::Full, 1).unwrap();
        let a = g.sample(|p| p[0] + 2.0 * p[1] * p[1] + 0.3);
        let b = g.sample(|p| 1.0 + p[2]);
        let mut naive = 0.0;
        for i in 0..g.n[0] {
            for j in 0..g.n[1] {
                for k in 0..g.n[2] {
                    naive += g.weight(j, k) * a[g.idx(i, j, k)] * b[g.idx(i, j, k)];
                }
            }
        }
        assert!((g.dot(&a, &b) - naive).abs() < 1e-12);
    }
}
