//! Built-in radial trap potentials with exact analytic tails.
//!
//! The built-in family evaluate(r) = 1 - c r² e^{-r²} + a r⁴/(1+r²)^{(m+4)/2}
//! has value 1 and a strict local maximum at the origin, a positive floor,
//! and the exact algebraic tail 1 + a/r^m + O(r^{-m-2}).

use crate::error::{Error, Result};
use crate::ground_state::{linear_fit, CoupledAmplitudes};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum PotentialKind {
    /// 1 - c r² e^{-r²} + a r⁴/(1+r²)^{(m+4)/2}
    Builtin,
    /// 1 + a / r^m (synthetic pure power tail, floor 1, flat at 0 only to O(r^{-m}))
    SyntheticPower,
    /// evaluate ≡ value (degenerate: no well, used by solver tests)
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PotentialModel {
    pub kind: PotentialKind,
    /// Tail amplitude a.
    pub a: f64,
    /// Tail exponent m (> 2).
    pub m: f64,
    /// Next-order tail coefficient of the built-in family: -(m+4)a/2 at order r^{-(m+2)}.
    pub b: f64,
    /// Inner-well strength c.
    pub well_depth: f64,
    /// Positive lower bound of evaluate over [0, ∞).
    pub floor: f64,
}

/// Fitted tail parameters from `tail_fit`.
#[derive(Debug, Clone, Copy)]
pub struct TailFit {
    pub a_hat: f64,
    pub m_hat: f64,
}

/// Hessian of γ₁²P + γ₂²Q at the origin with its non-degeneracy margin.
#[derive(Debug, Clone)]
pub struct OriginHessian {
    pub matrix: [[f64; 3]; 3],
    /// Minimal absolute eigenvalue (diagonal for the radial family).
    pub margin: f64,
    pub degenerate: bool,
}

/// Construct the built-in trap; fails if the well dips to or below zero.
pub fn builtin_potential(a: f64, m: f64, c: f64) -> Result<PotentialModel> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!("tail amplitude a must be > 0, got {a}")));
    }
    if !(m > 2.0) {
        return Err(Error::InvalidArgument(format!("tail exponent m must be > 2, got {m}")));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!("well depth c must be > 0, got {c}")));
    }
    let mut model = PotentialModel {
        kind: PotentialKind::Builtin,
        a,
        m,
        b: -(m + 4.0) * a / 2.0,
        well_depth: c,
        floor: 0.0,
    };
    let (min, at) = scan_minimum(&model);
    if min <= 0.0 {
        return Err(Error::FloorViolation { min, at });
    }
    model.floor = min;
    Ok(model)
}

impl PotentialModel {
    pub fn constant(value: f64) -> Self {
        PotentialModel {
            kind: PotentialKind::Constant,
            a: 0.0,
            m: 0.0,
            b: 0.0,
            well_depth: 0.0,
            floor: value,
        }
    }

    pub fn synthetic_power(a: f64, m: f64) -> Self {
        PotentialModel {
            kind: PotentialKind::SyntheticPower,
            a,
            m,
            b: 0.0,
            well_depth: 0.0,
            floor: 1.0f64.min(1.0 + a),
        }
    }

    pub fn evaluate(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.kind {
            PotentialKind::Constant => self.floor,
            PotentialKind::SyntheticPower => {
                if r < 1e-9 {
                    // keep the synthetic model finite at 0
                    1.0 + self.a / 1e-9f64.powf(self.m)
                } else {
                    1.0 + self.a / r.powf(self.m)
                }
            }
            PotentialKind::Builtin => {
                let r2 = r * r;
                1.0 - self.well_depth * r2 * (-r2).exp()
                    + self.a * r2 * r2 * (1.0 + r2).powf(-(self.m + 4.0) / 2.0)
            }
        }
    }

    /// evaluate(r) - 1 computed without cancellation against the unit
    /// background (the tail underflows past r ≈ 100 for large m otherwise).
    pub fn excess(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.kind {
            PotentialKind::Constant => self.floor - 1.0,
            PotentialKind::SyntheticPower => {
                if r < 1e-9 {
                    self.a / 1e-9f64.powf(self.m)
                } else {
                    self.a / r.powf(self.m)
                }
            }
            PotentialKind::Builtin => {
                let r2 = r * r;
                -self.well_depth * r2 * (-r2).exp()
                    + self.a * r2 * r2 * (1.0 + r2).powf(-(self.m + 4.0) / 2.0)
            }
        }
    }

    /// Radial derivative d/dr evaluate(r), analytic.
    pub fn derivative(&self, r: f64) -> f64 {
        let r = r.abs();
        match self.kind {
            PotentialKind::Constant => 0.0,
            PotentialKind::SyntheticPower => {
                if r < 1e-9 {
                    0.0
                } else {
                    -self.a * self.m / r.powf(self.m + 1.0)
                }
            }
            PotentialKind::Builtin => {
                let r2 = r * r;
                let well = -2.0 * self.well_depth * r * (1.0 - r2) * (-r2).exp();
                let tail = self.a * r * r2 * (1.0 + r2).powf(-(self.m + 6.0) / 2.0)
                    * (4.0 - self.m * r2);
                well + tail
            }
        }
    }

    /// Second radial derivative at the origin (−2c for the built-in family).
    pub fn second_derivative_origin(&self) -> f64 {
        match self.kind {
            PotentialKind::Builtin => -2.0 * self.well_depth,
            _ => 0.0,
        }
    }
}

fn scan_minimum(model: &PotentialModel) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0);
    let mut r = 0.0;
    while r <= 10.0 {
        let v = model.evaluate(r);
        if v < best.0 {
            best = (v, r);
        }
        r += 1e-3;
    }
    // golden refinement around the scan minimum
    let (mut lo, mut hi) = ((best.1 - 2e-3).max(0.0), best.1 + 2e-3);
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if model.evaluate(m1) < model.evaluate(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let r_star = 0.5 * (lo + hi);
    (model.evaluate(r_star).min(best.0), r_star)
}

/// Log-log least-squares identification of the tail (a, m) on [r_lo, r_hi].
pub fn tail_fit(model: &PotentialModel, window: [f64; 2]) -> Result<TailFit> {
    let [r_lo, r_hi] = window;
    if !(r_lo >= 20.0 && r_hi >= 2.0 * r_lo) {
        return Err(Error::InvalidArgument(format!(
            "tail window must satisfy r_lo >= 20, r_hi >= 2 r_lo, got [{r_lo}, {r_hi}]"
        )));
    }
    let n = 200;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / (n - 1) as f64);
        let excess = model.excess(r);
        if excess <= 0.0 {
            return Err(Error::SignChange { at: r });
        }
        xs.push(r.ln());
        ys.push(excess.ln());
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(TailFit {
        a_hat: intercept.exp(),
        m_hat: -slope,
    })
}

/// 3×3 Hessian of γ₁²P + γ₂²Q at the origin; for the radial family this is
/// (γ₁²P''(0) + γ₂²Q''(0))·Identity.
pub fn hessian_at_origin(
    p: &PotentialModel,
    q: &PotentialModel,
    amps: &CoupledAmplitudes,
) -> OriginHessian {
    let d = amps.gamma1 * amps.gamma1 * p.second_derivative_origin()
        + amps.gamma2 * amps.gamma2 * q.second_derivative_origin();
    let mut matrix = [[0.0; 3]; 3];
    for (i, row) in matrix.iter_mut().enumerate() {
        row[i] = d;
    }
    OriginHessian {
        matrix,
        margin: d.abs(),
        degenerate: d.abs() < 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::coupled_amplitudes;

    #[test]
    fn builtin_basic_values() {
        let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
        assert!((p.evaluate(0.0) - 1.0).abs() < 1e-15);
        assert!((p.second_derivative_origin() + 0.2).abs() < 1e-15);
        assert!((p.b + 4.0).abs() < 1e-15); // -(m+4)a/2 = -4
        assert!(p.floor > 0.0);
        // derivative zero at the origin, numeric cross-check of the analytic form
        for r in [0.3, 1.0, 3.7, 22.0] {
            let fd = (p.evaluate(r + 1e-6) - p.evaluate(r - 1e-6)) / 2e-6;
            assert!((fd - p.derivative(r)).abs() < 1e-7, "r={r}");
        }
    }

    #[test]
    fn builtin_floor_violation_for_deep_well() {
        assert!(matches!(
            builtin_potential(1.0, 4.0, 10.0),
            Err(Error::FloorViolation { .. })
        ));
    }

    #[test]
    fn tail_fit_recovers_builtin_exponent() {
        let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
        let fit = tail_fit(&p, [50.0, 200.0]).unwrap();
        assert!(
            (fit.m_hat - 4.0).abs() < 0.04,
            "m_hat={}",
            fit.m_hat
        );
        assert!((fit.a_hat - 1.0).abs() < 0.05, "a_hat={}", fit.a_hat);
    }

    #[test]
    fn tail_fit_range_over_exponents() {
        for m in [3.0, 4.0, 5.5, 8.0] {
            let p = builtin_potential(1.0, m, 0.1).unwrap();
            let fit = tail_fit(&p, [50.0, 200.0]).unwrap();
            assert!((fit.m_hat - m).abs() / m < 0.01, "m={m} m_hat={}", fit.m_hat);
            assert!((fit.a_hat - 1.0).abs() < 0.05, "m={m} a_hat={}", fit.a_hat);
        }
    }

    #[test]
    fn tail_fit_exact_power_law() {
        let p = PotentialModel::synthetic_power(1.0, 3.0);
        let fit = tail_fit(&p, [20.0, 60.0]).unwrap();
        assert!((fit.m_hat - 3.0).abs() < 1e-9);
        assert!((fit.a_hat - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_fit_rejects_inner_window() {
        let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
        assert!(tail_fit(&p, [1.0, 2.0]).is_err());
    }

    #[test]
    fn derivative_matches_h2prime_expansion() {
        let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
        for r in [50.0f64, 100.0, 200.0] {
            let asymptotic = -p.a * p.m / r.powf(p.m + 1.0);
            let rel = (p.derivative(r) - asymptotic).abs() / asymptotic.abs();
            assert!(rel < 0.02, "r={r} rel={rel}");
        }
    }

    #[test]
    fn hessian_examples() {
        let amps = coupled_amplitudes(1.0, 1.0, 0.0).unwrap();
        let p = builtin_potential(1.0, 4.0, 0.1).unwrap();
        let h = hessian_at_origin(&p, &p, &amps);
        assert!((h.matrix[0][0] + 0.4).abs() < 1e-14);
        assert!(!h.degenerate && h.margin > 0.0);

        let flat = PotentialModel::constant(1.0);
        let h0 = hessian_at_origin(&flat, &flat, &amps);
        assert!(h0.degenerate && h0.margin == 0.0);

        let p2 = builtin_potential(1.0, 4.0, 0.2).unwrap();
        let q1 = builtin_potential(1.0, 4.0, 0.1).unwrap();
        let h3 = hessian_at_origin(&p2, &q1, &amps);
        assert!((h3.matrix[1][1] + 0.6).abs() < 1e-14);
    }

    #[test]
    fn floor_invariant_over_family() {
        for (a, m, c) in [(1.0, 3.0, 0.05), (2.0, 6.0, 0.2), (0.5, 4.0, 0.3)] {
            let p = builtin_potential(a, m, c).unwrap();
            let mut r = 0.0;
            while r < 50.0 {
                assert!(p.evaluate(r) >= p.floor - 1e-12, "a={a} m={m} c={c} r={r}");
                r += 0.01;
            }
        }
    }
}
