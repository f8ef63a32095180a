//! Peak configurations and pointwise evaluation of the composed approximate
//! solutions: an optional inner cluster near the origin plus one or two
//! outer rings in the x₃ = 0 plane.
//!
//! Positions are rescaled coordinates (y = x/ε). A ring of k peaks at radius
//! r has centers x^j = r(cos 2(j-1)π/k, sin 2(j-1)π/k, 0); the segregated
//! second ring is rotated by π/k. The admissible radius window is
//! D_k = [(m/2π - δ)k ln k, (m/2π + δ)k ln k] in the same rescaled units.

use crate::error::{Error, Result};
use crate::field_solver::DiscreteFieldPair;
use crate::ground_state::{CoupledAmplitudes, GroundState};
use std::sync::Arc;

/// Peaks farther than this from the query point contribute below
/// double-precision noise and are skipped.
pub const TAIL_CUTOFF: f64 = 40.0;

/// Default half-width δ of the radius window D_k.
pub const DEFAULT_DELTA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum AnsatzMode {
    Synchronized,
    Segregated,
}

#[derive(Debug, Clone)]
pub struct PeakConfiguration {
    pub epsilon: f64,
    /// Inner spike centers η̂^j (rescaled), possibly empty.
    pub inner_centers: Vec<[f64; 3]>,
    pub ring_radius: f64,
    pub ring_count: usize,
    pub second_ring_radius: Option<f64>,
    pub mode: AnsatzMode,
}

/// The admissible ring-radius interval.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
    /// δ = 0 collapses the window to a point.
    pub degenerate: bool,
}

impl Window {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }
}

/// D_k = [(m/2π - δ) k ln k, (m/2π + δ) k ln k].
pub fn default_window(k: usize, m: f64, delta: f64) -> Result<Window> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("window needs k >= 2, got {k}")));
    }
    if !(m > 2.0) {
        return Err(Error::InvalidArgument(format!("m must be > 2, got {m}")));
    }
    if !(delta >= 0.0 && delta < m / (4.0 * std::f64::consts::PI)) {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in [0, m/4π), got {delta}"
        )));
    }
    let base = k as f64 * (k as f64).ln();
    let mid = m / (2.0 * std::f64::consts::PI);
    Ok(Window {
        lo: (mid - delta) * base,
        hi: (mid + delta) * base,
        degenerate: delta == 0.0,
    })
}

impl PeakConfiguration {
    /// Ring center x^j, j = 1..k.
    pub fn ring_center(&self, j: usize) -> [f64; 3] {
        let angle = 2.0 * (j as f64 - 1.0) * std::f64::consts::PI / self.ring_count as f64;
        [
            self.ring_radius * angle.cos(),
            self.ring_radius * angle.sin(),
            0.0,
        ]
    }

    /// Second-ring center y^j (segregated mode only).
    pub fn second_ring_center(&self, j: usize) -> Option<[f64; 3]> {
        let rho = self.second_ring_radius?;
        let angle = (2.0 * j as f64 - 1.0) * std::f64::consts::PI / self.ring_count as f64;
        Some([rho * angle.cos(), rho * angle.sin(), 0.0])
    }

    pub fn ring_centers(&self) -> Vec<[f64; 3]> {
        (1..=self.ring_count).map(|j| self.ring_center(j)).collect()
    }

    pub fn second_ring_centers(&self) -> Vec<[f64; 3]> {
        (1..=self.ring_count)
            .filter_map(|j| self.second_ring_center(j))
            .collect()
    }

    /// 2 r sin(π/k).
    pub fn nearest_neighbor_distance(&self) -> f64 {
        2.0 * self.ring_radius * (std::f64::consts::PI / self.ring_count as f64).sin()
    }

    /// min over i, j of |x^i - y^j| = sqrt(r² + ρ² - 2rρ cos(π/k)).
    pub fn min_cross_distance(&self) -> Option<f64> {
        let rho = self.second_ring_radius?;
        let r = self.ring_radius;
        let c = (std::f64::consts::PI / self.ring_count as f64).cos();
        Some((r * r + rho * rho - 2.0 * r * rho * c).sqrt())
    }

    /// Outermost radius over all centers.
    pub fn outer_radius(&self) -> f64 {
        let mut r = self.ring_radius.max(self.second_ring_radius.unwrap_or(0.0));
        for c in &self.inner_centers {
            r = r.max((c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt());
        }
        r
    }
}

pub fn make_ring_configuration(
    k: usize,
    r: f64,
    epsilon: f64,
    mode: AnsatzMode,
    rho: Option<f64>,
) -> Result<PeakConfiguration> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("ring needs k >= 2 peaks, got {k}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("ring radius must be positive, got {r}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if mode == AnsatzMode::Segregated && rho.is_none() {
        return Err(Error::MissingRho);
    }
    Ok(PeakConfiguration {
        epsilon,
        inner_centers: Vec::new(),
        ring_radius: r,
        ring_count: k,
        second_ring_radius: if mode == AnsatzMode::Segregated { rho } else { None },
        mode,
    })
}

/// A single peak at the origin (degenerate k = 1 "ring"), used by solver and
/// spectral tests.
pub fn single_peak_configuration(epsilon: f64) -> PeakConfiguration {
    PeakConfiguration {
        epsilon,
        inner_centers: Vec::new(),
        ring_radius: 0.0,
        ring_count: 1,
        second_ring_radius: None,
        mode: AnsatzMode::Synchronized,
    }
}

/// Composite approximate solution: inner solution (if any) plus ring peaks,
/// evaluated pointwise together with its gradient.
#[derive(Clone)]
pub struct AnsatzField {
    pub configuration: PeakConfiguration,
    pub amplitudes: CoupledAmplitudes,
    /// Synchronized profile W (μ-normalization 1) shared by both components.
    pub profile: Arc<GroundState>,
    /// Segregated profiles (W_{μ1}, W_{μ2}); `profile` plays W_{μ1}.
    pub profile2: Option<Arc<GroundState>>,
    /// Inner solution sampled on its own grid (the Theorem-A object).
    pub inner_solution: Option<Arc<DiscreteFieldPair>>,
}

impl AnsatzField {
    pub fn synchronized(
        configuration: PeakConfiguration,
        amplitudes: CoupledAmplitudes,
        profile: Arc<GroundState>,
    ) -> Self {
        AnsatzField {
            configuration,
            amplitudes,
            profile,
            profile2: None,
            inner_solution: None,
        }
    }

    pub fn segregated(
        configuration: PeakConfiguration,
        amplitudes: CoupledAmplitudes,
        profile_mu1: Arc<GroundState>,
        profile_mu2: Arc<GroundState>,
    ) -> Self {
        AnsatzField {
            configuration,
            amplitudes,
            profile: profile_mu1,
            profile2: Some(profile_mu2),
            inner_solution: None,
        }
    }

    pub fn with_inner(mut self, inner: Arc<DiscreteFieldPair>) -> Self {
        self.inner_solution = Some(inner);
        self
    }

    /// (S, T) at a rescaled point y. The inner cluster contributes either
    /// the stored inner solution or, before one exists, raw synchronized
    /// peaks at the inner centers.
    pub fn evaluate(&self, y: [f64; 3]) -> (f64, f64) {
        let mut s = 0.0;
        let mut t = 0.0;
        if let Some(inner) = &self.inner_solution {
            let (iu, iv) = inner.sample(y);
            s += iu;
            t += iv;
        } else {
            for c in &self.configuration.inner_centers {
                let d = dist(y, *c);
                if d < TAIL_CUTOFF {
                    let w = self.profile.eval(d);
                    s += self.amplitudes.gamma1 * w;
                    t += self.amplitudes.gamma2 * w;
                }
            }
        }
        match self.configuration.mode {
            AnsatzMode::Synchronized => {
                let mut w_sum = 0.0;
                for j in 1..=self.configuration.ring_count {
                    let c = self.configuration.ring_center(j);
                    let d = dist(y, c);
                    if d < TAIL_CUTOFF {
                        w_sum += self.profile.eval(d);
                    }
                }
                s += self.amplitudes.gamma1 * w_sum;
                t += self.amplitudes.gamma2 * w_sum;
            }
            AnsatzMode::Segregated => {
                let p2 = self.profile2.as_ref().unwrap_or(&self.profile);
                for j in 1..=self.configuration.ring_count {
                    let c = self.configuration.ring_center(j);
                    let d = dist(y, c);
                    if d < TAIL_CUTOFF {
                        s += self.profile.eval(d);
                    }
                    if let Some(c2) = self.configuration.second_ring_center(j) {
                        let d2 = dist(y, c2);
                        if d2 < TAIL_CUTOFF {
                            t += p2.eval(d2);
                        }
                    }
                }
            }
        }
        (s, t)
    }

    /// (∇S, ∇T) at y from the tabulated radial derivative. Inner-solution
    /// gradients are not included (callers that need them differentiate the
    /// discrete field instead).
    pub fn evaluate_gradient(&self, y: [f64; 3]) -> ([f64; 3], [f64; 3]) {
        let mut gs = [0.0; 3];
        let mut gt = [0.0; 3];
        match self.configuration.mode {
            AnsatzMode::Synchronized => {
                let mut gw = [0.0; 3];
                for j in 1..=self.configuration.ring_count {
                    let c = self.configuration.ring_center(j);
                    accumulate_radial_grad(&self.profile, y, c, &mut gw);
                }
                for l in 0..3 {
                    gs[l] = self.amplitudes.gamma1 * gw[l];
                    gt[l] = self.amplitudes.gamma2 * gw[l];
                }
            }
            AnsatzMode::Segregated => {
                let p2 = self.profile2.as_ref().unwrap_or(&self.profile);
                for j in 1..=self.configuration.ring_count {
                    let c = self.configuration.ring_center(j);
                    accumulate_radial_grad(&self.profile, y, c, &mut gs);
                    if let Some(c2) = self.configuration.second_ring_center(j) {
                        accumulate_radial_grad(p2, y, c2, &mut gt);
                    }
                }
            }
        }
        (gs, gt)
    }
}

fn accumulate_radial_grad(
    profile: &GroundState,
    y: [f64; 3],
    center: [f64; 3],
    out: &mut [f64; 3],
) {
    let dx = [y[0] - center[0], y[1] - center[1], y[2] - center[2]];
    let d = (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt();
    if d >= TAIL_CUTOFF || d < 1e-12 {
        return;
    }
    let dv = profile.eval_deriv(d) / d;
    for l in 0..3 {
        out[l] += dv * dx[l];
    }
}

pub fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::{coupled_amplitudes, solve_ground_state};

    fn amps() -> CoupledAmplitudes {
        coupled_amplitudes(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn ring_centers_k4() {
        let cfg = make_ring_configuration(4, 10.0, 1.0, AnsatzMode::Synchronized, None).unwrap();
        let c = cfg.ring_centers();
        let expect = [
            [10.0, 0.0, 0.0],
            [0.0, 10.0, 0.0],
            [-10.0, 0.0, 0.0],
            [0.0, -10.0, 0.0],
        ];
        for (a, b) in c.iter().zip(expect.iter()) {
            for l in 0..3 {
                assert!((a[l] - b[l]).abs() < 1e-12, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn segregated_ring_rotated_by_pi_over_k() {
        let cfg =
            make_ring_configuration(4, 10.0, 1.0, AnsatzMode::Segregated, Some(12.0)).unwrap();
        let y1 = cfg.second_ring_center(1).unwrap();
        let expect = [
            12.0 * (std::f64::consts::PI / 4.0).cos(),
            12.0 * (std::f64::consts::PI / 4.0).sin(),
            0.0,
        ];
        for l in 0..3 {
            assert!((y1[l] - expect[l]).abs() < 1e-12);
        }
    }

    #[test]
    fn neighbor_distance_k2_is_diameter() {
        let cfg = make_ring_configuration(2, 5.0, 1.0, AnsatzMode::Synchronized, None).unwrap();
        assert!((cfg.nearest_neighbor_distance() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn missing_rho_rejected() {
        assert!(matches!(
            make_ring_configuration(4, 10.0, 1.0, AnsatzMode::Segregated, None),
            Err(Error::MissingRho)
        ));
    }

    #[test]
    fn window_midpoint_k16() {
        let w = default_window(16, 4.0, 0.1).unwrap();
        let expect = 4.0 / (2.0 * std::f64::consts::PI) * 16.0 * (16.0f64).ln();
        assert!((w.midpoint() - expect).abs() < 1e-9);
        assert!((expect - 28.24).abs() < 0.02);
        assert!(!w.degenerate);
        let w0 = default_window(16, 4.0, 0.0).unwrap();
        assert!(w0.degenerate && (w0.lo - w0.hi).abs() < 1e-12);
        assert!(default_window(2, 4.0, 0.1).unwrap().lo > 0.0);
    }

    #[test]
    fn cross_distance_formula() {
        let cfg =
            make_ring_configuration(8, 20.0, 1.0, AnsatzMode::Segregated, Some(20.0)).unwrap();
        let expect = 2.0 * 20.0 * (std::f64::consts::PI / 16.0).sin();
        assert!((cfg.min_cross_distance().unwrap() - expect).abs() < 1e-10);
        assert!(cfg.min_cross_distance().unwrap() < cfg.nearest_neighbor_distance());
    }

    #[test]
    fn single_peak_reduces_to_scaled_profile() {
        let gs = Arc::new(solve_ground_state(1.0, 1e-8).unwrap());
        let field = AnsatzField::synchronized(single_peak_configuration(1.0), amps(), gs.clone());
        let (s, t) = field.evaluate([0.0, 0.0, 0.0]);
        assert!((s - field.amplitudes.gamma1 * gs.center_value).abs() < 1e-12);
        assert!((t - field.amplitudes.gamma2 * gs.center_value).abs() < 1e-12);
        let (s1, _) = field.evaluate([1.3, -0.4, 0.2]);
        let r = (1.3f64 * 1.3 + 0.16 + 0.04).sqrt();
        assert!((s1 - field.amplitudes.gamma1 * gs.eval(r)).abs() < 1e-12);
    }

    #[test]
    fn rotation_and_reflection_symmetry() {
        let gs = Arc::new(solve_ground_state(1.0, 1e-8).unwrap());
        let cfg = make_ring_configuration(6, 9.0, 0.5, AnsatzMode::Synchronized, None).unwrap();
        let field = AnsatzField::synchronized(cfg, amps(), gs);
        let theta = 2.0 * std::f64::consts::PI / 6.0;
        for p in [[3.0, 1.0, 0.7], [8.5, -2.0, 0.1], [0.3, 0.2, 2.0]] {
            let (s0, t0) = field.evaluate(p);
            let rotated = [
                p[0] * theta.cos() - p[1] * theta.sin(),
                p[0] * theta.sin() + p[1] * theta.cos(),
                p[2],
            ];
            let (s1, t1) = field.evaluate(rotated);
            assert!((s0 - s1).abs() <= 1e-12 * s0.abs().max(1.0), "{s0} vs {s1}");
            assert!((t0 - t1).abs() <= 1e-12 * t0.abs().max(1.0));
            let (s2, _) = field.evaluate([p[0], -p[1], p[2]]);
            let (s3, _) = field.evaluate([p[0], p[1], -p[2]]);
            assert!((s0 - s2).abs() <= 1e-12 * s0.abs().max(1.0));
            assert!((s0 - s3).abs() <= 1e-12 * s0.abs().max(1.0));
        }
    }

    #[test]
    fn midpoint_two_term_dominance() {
        // x midway between adjacent peaks with |x1-x2| = 12: the sum over all
        // k peaks is within 1% of the two nearest contributions.
        let gs = Arc::new(solve_ground_state(1.0, 1e-8).unwrap());
        let k = 8;
        let half_angle = std::f64::consts::PI / k as f64;
        let r = 6.0 / half_angle.sin();
        let cfg = make_ring_configuration(k, r, 1.0, AnsatzMode::Synchronized, None).unwrap();
        let field = AnsatzField::synchronized(cfg.clone(), amps(), gs.clone());
        let mid = [
            0.5 * (cfg.ring_center(1)[0] + cfg.ring_center(2)[0]),
            0.5 * (cfg.ring_center(1)[1] + cfg.ring_center(2)[1]),
            0.0,
        ];
        let (s, _) = field.evaluate(mid);
        let two_term = 2.0 * field.amplitudes.gamma1 * gs.eval(6.0);
        assert!(
            (s - two_term).abs() / two_term < 0.01,
            "s={s} two_term={two_term}"
        );
    }

    #[test]
    fn peak_value_dominated_by_own_profile() {
        let gs = Arc::new(solve_ground_state(1.0, 1e-8).unwrap());
        let cfg = make_ring_configuration(6, 8.0, 0.5, AnsatzMode::Synchronized, None).unwrap();
        let field = AnsatzField::synchronized(cfg.clone(), amps(), gs.clone());
        let (s, _) = field.evaluate(cfg.ring_center(1));
        let own = field.amplitudes.gamma1 * gs.center_value;
        let tail_bound = cfg.ring_count as f64
            * gs.eval(cfg.nearest_neighbor_distance())
            * field.amplitudes.gamma1;
        assert!(
            s > own && s - own <= tail_bound,
            "s={s} own={own} bound={tail_bound}"
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let gs = Arc::new(solve_ground_state(1.0, 1e-8).unwrap());
        let cfg = make_ring_configuration(5, 7.0, 1.0, AnsatzMode::Synchronized, None).unwrap();
        let field = AnsatzField::synchronized(cfg, amps(), gs);
        let p = [5.2, 1.1, 0.6];
        let (g, _) = field.evaluate_gradient(p);
        for l in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[l] += 1e-5;
            pm[l] -= 1e-5;
            let fd = (field.evaluate(pp).0 - field.evaluate(pm).0) / 2e-5;
            assert!((fd - g[l]).abs() < 1e-7, "axis {l}: {fd} vs {}", g[l]);
        }
    }
}
