//! Radial model manifolds: rotationally symmetric metrics g = dr² + ψ(r)²·g̃
//! on [0, r_max], their measure, ball volumes, and the geometric assumption
//! checks (bounded metric correction, Euclidean-comparable volume growth,
//! concave warping).
//!
//! The warping catalog holds one flat model, one concave nontrivial family
//! (`LogBlend`), one deliberately failing example (`Hyperbolic`, exponential
//! volume growth), and user-sampled profiles. Dimension n = 1 is allowed as
//! a line oracle (even extension about r = 0) with the flat warping only.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial warping profile ψ(r) of a rotationally symmetric metric.
///
/// Every catalog entry satisfies ψ(0) = 0, ψ'(0) = 1 and ψ > 0 for r > 0;
/// construction re-checks these on the actual grid.
#[derive(Debug, Clone, PartialEq)]
pub enum Warping {
    /// ψ(r) = r (Euclidean).
    Flat,
    /// ψ(r) = c·r + (1−c)·ln(1+r), c ∈ (0,1]. Concave, asymptotically c·r.
    LogBlend { c: f64 },
    /// ψ(r) = sinh r. Convex; volume of balls grows exponentially, so the
    /// comparability check is expected to fail on this entry.
    Hyperbolic,
    /// Piecewise-linear profile through the given (r, ψ) samples.
    UserSampled { r: Vec<f64>, psi: Vec<f64> },
}

impl Warping {
    pub fn log_blend(c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Parameter(format!(
                "log-blend coefficient must lie in (0, 1], got {c}"
            )));
        }
        Ok(Warping::LogBlend { c })
    }

    pub fn user_sampled(r: Vec<f64>, psi: Vec<f64>) -> Result<Self> {
        if r.len() != psi.len() || r.len() < 4 {
            return Err(Error::Parameter(
                "user-sampled warping needs >= 4 matched (r, psi) samples".into(),
            ));
        }
        if r[0] != 0.0 {
            return Err(Error::Parameter("user-sampled warping must start at r = 0".into()));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("user-sampled r nodes must be strictly increasing".into()));
        }
        Ok(Warping::UserSampled { r, psi })
    }

    /// ψ(r).
    pub fn psi(&self, r: f64) -> f64 {
        match self {
            Warping::Flat => r,
            Warping::LogBlend { c } => c * r + (1.0 - c) * (1.0 + r).ln(),
            Warping::Hyperbolic => r.sinh(),
            Warping::UserSampled { r: rs, psi } => interp_linear(rs, psi, r),
        }
    }

    /// ψ'(r).
    pub fn dpsi(&self, r: f64) -> f64 {
        match self {
            Warping::Flat => 1.0,
            Warping::LogBlend { c } => c + (1.0 - c) / (1.0 + r),
            Warping::Hyperbolic => r.cosh(),
            Warping::UserSampled { r: rs, psi } => slope_at(rs, psi, r),
        }
    }

    /// ψ''(r). Piecewise-linear profiles use a centered second difference on
    /// the sample nodes.
    pub fn d2psi(&self, r: f64) -> f64 {
        match self {
            Warping::Flat => 0.0,
            Warping::LogBlend { c } => (c - 1.0) / ((1.0 + r) * (1.0 + r)),
            Warping::Hyperbolic => r.sinh(),
            Warping::UserSampled { r: rs, psi } => second_difference_at(rs, psi, r),
        }
    }

    /// Whether ψ has a closed form valid beyond any truncation radius.
    pub fn has_closed_form(&self) -> bool {
        !matches!(self, Warping::UserSampled { .. })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Warping::Flat => "flat",
            Warping::LogBlend { .. } => "log-blend",
            Warping::Hyperbolic => "hyperbolic",
            Warping::UserSampled { .. } => "user-sampled",
        }
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
        Ok(i) => return ys[i],
        Err(i) => i,
    };
    if k == 0 {
        // extrapolate with the first segment slope
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys[0] + s * (x - xs[0]);
    }
    if k >= xs.len() {
        let m = xs.len();
        let s = (ys[m - 1] - ys[m - 2]) / (xs[m - 1] - xs[m - 2]);
        return ys[m - 1] + s * (x - xs[m - 1]);
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

fn slope_at(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let k = xs.partition_point(|&v| v < x).clamp(1, m - 1);
    (ys[k] - ys[k - 1]) / (xs[k] - xs[k - 1])
}

fn second_difference_at(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let m = xs.len();
    let k = xs.partition_point(|&v| v < x).clamp(1, m - 2);
    let (x0, x1, x2) = (xs[k - 1], xs[k], xs[k + 1]);
    let (y0, y1, y2) = (ys[k - 1], ys[k], ys[k + 1]);
    2.0 * (y0 / ((x1 - x0) * (x2 - x0)) - y1 / ((x1 - x0) * (x2 - x1))
        + y2 / ((x2 - x0) * (x2 - x1)))
}

/// Node placement on [0, r_max].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridKind {
    Uniform,
    /// r(x) = r_max·sinh(a·x)/sinh(a), x ∈ [0,1]: spacing ~r_max·a/(M·sinh a)
    /// at the pole, coarsening toward r_max. Used when one grid must resolve
    /// core radii spanning several decades.
    Sinh { strength: f64 },
}

impl GridKind {
    fn place(&self, nodes: usize, r_max: f64) -> Vec<f64> {
        let m = (nodes - 1) as f64;
        (0..nodes)
            .map(|i| {
                let x = i as f64 / m;
                match *self {
                    GridKind::Uniform => r_max * x,
                    GridKind::Sinh { strength } => r_max * (strength * x).sinh() / strength.sinh(),
                }
            })
            .collect()
    }

    /// Smallest sinh strength whose innermost spacing is at most `dr0`.
    pub fn sinh_for_spacing(r_max: f64, dr0: f64, nodes: usize) -> Self {
        let m = (nodes - 1) as f64;
        let goal = r_max / (dr0 * m);
        if goal <= 1.0 {
            return GridKind::Uniform;
        }
        // solve sinh(a)/a = goal
        let (mut lo, mut hi) = (1e-9_f64, 40.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.sinh() / mid < goal {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        GridKind::Sinh { strength: 0.5 * (lo + hi) }
    }
}

/// Surface measure of the unit sphere S^{n-1}: 2·π^{n/2}/Γ(n/2).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half_int(n)
}

/// Γ(n/2) for positive integer n.
fn gamma_half_int(n: usize) -> f64 {
    let mut x = n as f64 / 2.0;
    let mut acc = 1.0;
    while x > 1.0 {
        x -= 1.0;
        acc *= x;
    }
    // x is now 1 (integer n/2) or 1/2
    if (x - 0.5).abs() < 1e-12 {
        acc * PI.sqrt()
    } else {
        acc
    }
}

/// A truncated radial model: dimension, warping, grid, and the quadrature
/// weights of the measure dμ = ω_{n−1}·ψ(r)^{n−1}·dr. Immutable once built;
/// all operations are pure.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    pub n: usize,
    pub warping: Warping,
    pub r_max: f64,
    /// Strictly increasing nodes, grid[0] = 0, grid[last] = r_max.
    pub grid: Vec<f64>,
    /// Trapezoid weights of dμ on the grid; nonnegative, sum = V(r_max).
    pub measure_weights: Vec<f64>,
    omega: f64,
}

/// Thresholds for [`ManifoldModel::check_assumptions`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionThresholds {
    /// Bound on sup |r·(∂_r√G)/√G|.
    pub c_max: f64,
    /// Two-sided window for V(r)/(ω_{n−1}·rⁿ/n).
    pub v_lo: f64,
    pub v_hi: f64,
}

impl Default for AssumptionThresholds {
    fn default() -> Self {
        Self { c_max: 10.0, v_lo: 0.01, v_hi: 100.0 }
    }
}

/// Outcome of the geometric assumption checks.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    /// sup over radii of |r·(∂_r√G)/√G| = (n−1)·|r·ψ'/ψ − 1|.
    pub sup_correction: f64,
    /// [min, max] of V(r)/(ω_{n−1}·rⁿ/n) over a decade-spanning radius set.
    pub volume_ratio_range: [f64; 2],
    /// ψ'' ≤ 0 on the grid, and the derived bound ψ' ≤ ψ/r holds.
    pub ricci_ok: bool,
    pub passes: bool,
}

/// Builds a model on a uniform grid.
pub fn make_model(n: usize, warping: Warping, r_max: f64, nodes: usize) -> Result<ManifoldModel> {
    make_model_with_grid(n, warping, r_max, nodes, GridKind::Uniform)
}

/// Builds a model with an explicit node-placement rule.
pub fn make_model_with_grid(
    n: usize,
    warping: Warping,
    r_max: f64,
    nodes: usize,
    grid: GridKind,
) -> Result<ManifoldModel> {
    if n == 0 {
        return Err(Error::Parameter("dimension must be >= 1".into()));
    }
    if n == 1 && warping != Warping::Flat {
        return Err(Error::Parameter(
            "n = 1 is the line oracle and only supports the flat warping".into(),
        ));
    }
    if !(r_max > 0.0) {
        return Err(Error::Parameter(format!("r_max must be positive, got {r_max}")));
    }
    if nodes < 64 {
        return Err(Error::Parameter(format!("need at least 64 grid nodes, got {nodes}")));
    }
    if let GridKind::Sinh { strength } = grid {
        if !(strength > 0.0 && strength <= 40.0) {
            return Err(Error::Parameter(format!(
                "sinh grid strength must lie in (0, 40], got {strength}"
            )));
        }
    }

    let r = grid.place(nodes, r_max);

    // Warping sanity on this grid: ψ(0) = 0, ψ > 0 inside, ψ'(0) = 1 by a
    // second-order one-sided difference at the first nodes.
    let psi0 = warping.psi(0.0);
    if psi0.abs() > 1e-12 * r_max.max(1.0) {
        return Err(Error::Construction(format!("psi(0) = {psi0}, expected 0")));
    }
    for (i, &ri) in r.iter().enumerate().skip(1) {
        let p = warping.psi(ri);
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::Construction(format!(
                "warping non-positive or non-finite at node {i} (r = {ri}): psi = {p}"
            )));
        }
    }
    // One-sided derivative at 0: cubic through the origin and three nearby
    // abscissae (bias O(e1·e2·e3)). Closed-form warpings are probed at
    // grid-independent offsets so coarse grids do not degrade the check;
    // sampled profiles are probed at their own leading sample nodes.
    let fit_r: [f64; 3] = match &warping {
        Warping::UserSampled { r: rs, .. } => [rs[1], rs[2], rs[3]],
        _ => {
            let e = r[1].min(0.05);
            [e, 2.0 * e, 3.0 * e]
        }
    };
    let a = nalgebra::Matrix3::from_fn(|i, j| fit_r[i].powi(j as i32 + 1));
    let rhs = nalgebra::Vector3::new(
        warping.psi(fit_r[0]),
        warping.psi(fit_r[1]),
        warping.psi(fit_r[2]),
    );
    let d0 = a
        .lu()
        .solve(&rhs)
        .map(|coef| coef[0])
        .ok_or_else(|| Error::Construction("degenerate leading grid nodes".into()))?;
    if (d0 - 1.0).abs() > 1e-3 {
        return Err(Error::Construction(format!(
            "psi'(0) = {d0:.6} from one-sided difference, expected 1 within 1e-3"
        )));
    }

    let omega = sphere_area(n);
    let j: Vec<f64> = r.iter().map(|&ri| radial_density(&warping, n, ri)).collect();
    let mut w = vec![0.0; nodes];
    w[0] = omega * j[0] * (r[1] - r[0]) / 2.0;
    w[nodes - 1] = omega * j[nodes - 1] * (r[nodes - 1] - r[nodes - 2]) / 2.0;
    for i in 1..nodes - 1 {
        w[i] = omega * j[i] * (r[i + 1] - r[i - 1]) / 2.0;
    }

    Ok(ManifoldModel { n, warping, r_max, grid: r, measure_weights: w, omega })
}

/// ψ(r)^{n−1}, with the n = 1 line convention ψ⁰ ≡ 1.
pub(crate) fn radial_density(warping: &Warping, n: usize, r: f64) -> f64 {
    if n == 1 {
        1.0
    } else {
        warping.psi(r).powi(n as i32 - 1)
    }
}

impl ManifoldModel {
    pub fn nodes(&self) -> usize {
        self.grid.len()
    }

    /// ω_{n−1}, the angular factor of the measure.
    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// n = 1 models represent the symmetric line (oracle mode).
    pub fn is_line_oracle(&self) -> bool {
        self.n == 1
    }

    /// ∫ f dμ by the model's quadrature weights. `f` is sampled on the grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.measure_weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// Number of grid nodes with r ≤ radius.
    pub fn nodes_within(&self, radius: f64) -> usize {
        self.grid.partition_point(|&r| r <= radius)
    }

    /// First-order radial coefficient of the metric beyond (n−1)/r:
    /// (1/√G)·∂_r√G = (n−1)·(ψ'/ψ − 1/r). Returns 0 at r = 0 (flat tangency).
    pub fn correction_term(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r > self.r_max {
            return Err(Error::Range(format!("r = {r} outside [0, {}]", self.r_max)));
        }
        if r == 0.0 {
            return Ok(0.0);
        }
        let psi = self.warping.psi(r);
        Ok((self.n as f64 - 1.0) * (self.warping.dpsi(r) / psi - 1.0 / r))
    }

    /// V(r) = ω_{n−1}·∫₀^r ψ(s)^{n−1} ds by composite trapezoid on the grid
    /// (partial last cell evaluated with the warping itself).
    pub fn volume_ball(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) || r > self.r_max * (1.0 + 1e-12) {
            return Err(Error::Range(format!("radius {r} outside (0, {}]", self.r_max)));
        }
        let r = r.min(self.r_max);
        let mut vol = 0.0;
        for i in 1..self.grid.len() {
            let (a, b) = (self.grid[i - 1], self.grid[i]);
            let ja = radial_density(&self.warping, self.n, a);
            if b <= r {
                let jb = radial_density(&self.warping, self.n, b);
                vol += 0.5 * (ja + jb) * (b - a);
                if b == r {
                    break;
                }
            } else {
                let jr = radial_density(&self.warping, self.n, r);
                vol += 0.5 * (ja + jr) * (r - a);
                break;
            }
        }
        Ok(self.omega * vol)
    }

    /// Runs the geometric checks: bounded metric correction (also probed at
    /// log-spaced radii up to 10·r_max when ψ has a closed form), volume
    /// comparability V(r) ≍ rⁿ, and warping concavity with its consequence
    /// ψ'(r) ≤ ψ(r)/r.
    pub fn check_assumptions(&self, thresholds: &AssumptionThresholds) -> AssumptionReport {
        let nf = self.n as f64 - 1.0;

        let mut sup_correction: f64 = 0.0;
        let mut probe = |r: f64| {
            let psi = self.warping.psi(r);
            if psi > 0.0 {
                let c = nf * (r * self.warping.dpsi(r) / psi - 1.0);
                sup_correction = sup_correction.max(c.abs());
            }
        };
        for &r in self.grid.iter().skip(1) {
            probe(r);
        }
        if self.warping.has_closed_form() {
            for k in 0..64 {
                let r = self.r_max * 10f64.powf(k as f64 / 63.0);
                probe(r);
            }
        }

        // Volume comparability over two decades of radii inside the grid.
        let mut ratio_min = f64::INFINITY;
        let mut ratio_max: f64 = 0.0;
        for k in 0..25 {
            let r = self.r_max * 10f64.powf(-2.0 + 2.0 * k as f64 / 24.0);
            if let Ok(v) = self.volume_ball(r) {
                let flat = self.omega * r.powi(self.n as i32) / self.n as f64;
                let ratio = v / flat;
                ratio_min = ratio_min.min(ratio);
                ratio_max = ratio_max.max(ratio);
            }
        }

        let mut ricci_ok = true;
        for &r in self.grid.iter().skip(1) {
            if self.warping.d2psi(r) > 1e-10 {
                ricci_ok = false;
                break;
            }
            let psi = self.warping.psi(r);
            if self.warping.dpsi(r) > psi / r + 1e-8 {
                ricci_ok = false;
                break;
            }
        }

        let passes = sup_correction.is_finite()
            && sup_correction <= thresholds.c_max
            && ratio_min >= thresholds.v_lo
            && ratio_max <= thresholds.v_hi
            && ricci_ok;

        AssumptionReport {
            sup_correction,
            volume_ratio_range: [ratio_min, ratio_max],
            ricci_ok,
            passes,
        }
    }

    /// Human-readable reason for the first failed check, if any.
    pub fn first_violation(&self, thresholds: &AssumptionThresholds) -> Option<String> {
        let rep = self.check_assumptions(thresholds);
        if rep.volume_ratio_range[0] < thresholds.v_lo || rep.volume_ratio_range[1] > thresholds.v_hi {
            return Some(format!(
                "volume growth not comparable to r^n: V(r)/(omega r^n/n) ranges over [{:.4e}, {:.4e}], outside [{}, {}]",
                rep.volume_ratio_range[0], rep.volume_ratio_range[1], thresholds.v_lo, thresholds.v_hi
            ));
        }
        if !rep.sup_correction.is_finite() || rep.sup_correction > thresholds.c_max {
            return Some(format!(
                "metric correction unbounded: sup |r (d/dr sqrt G)/sqrt G| = {:.4} exceeds {}",
                rep.sup_correction, thresholds.c_max
            ));
        }
        if !rep.ricci_ok {
            return Some("warping not concave: psi'' > 0 or psi' > psi/r at a grid node".into());
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn flat_disc_volume_is_exact() {
        let m = make_model(2, Warping::Flat, 10.0, 256).unwrap();
        assert_relative_eq!(m.volume_ball(10.0).unwrap(), 100.0 * PI, max_relative = 1e-12);
        assert_relative_eq!(m.volume_ball(1.0).unwrap(), PI, max_relative = 1e-10);
        let total: f64 = m.measure_weights.iter().sum();
        assert_relative_eq!(total, m.volume_ball(10.0).unwrap(), max_relative = 1e-10);
        assert!(m.measure_weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn flat_ball_volume_n3() {
        let m = make_model(3, Warping::Flat, 2.0, 256).unwrap();
        assert_relative_eq!(m.volume_ball(2.0).unwrap(), 32.0 * PI / 3.0, max_relative = 1e-5);
    }

    #[test]
    fn log_blend_profile_matches_closed_form() {
        let w = Warping::log_blend(0.5).unwrap();
        let r = 3.7;
        assert_abs_diff_eq!(w.psi(r), r / 2.0 + 0.5 * (1.0 + r).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(w.dpsi(0.0), 1.0, epsilon = 1e-14);
        assert!(w.d2psi(r) < 0.0);
        let m = make_model(2, w, 20.0, 256).unwrap();
        assert!(m.check_assumptions(&AssumptionThresholds::default()).passes);
    }

    #[test]
    fn hyperbolic_constructs_but_fails_volume_check() {
        let m = make_model(2, Warping::Hyperbolic, 12.0, 512).unwrap();
        assert_relative_eq!(
            m.volume_ball(5.0).unwrap(),
            2.0 * PI * (5f64.cosh() - 1.0),
            max_relative = 1e-4
        );
        let rep = m.check_assumptions(&AssumptionThresholds::default());
        assert!(!rep.passes);
        assert!(!rep.ricci_ok);
        assert!(rep.volume_ratio_range[1] > 100.0);
        // deterministic negative test: ratio between r=10 and r=5 exceeds 10x
        let ratio = |r: f64| m.volume_ball(r).unwrap() / r.powi(2);
        assert!(ratio(10.0) / ratio(5.0) > 10.0);
        let msg = m.first_violation(&AssumptionThresholds::default()).unwrap();
        assert!(msg.contains("volume growth"));
    }

    #[test]
    fn correction_term_catalog() {
        let flat = make_model(2, Warping::Flat, 10.0, 128).unwrap();
        for r in [0.0, 0.5, 3.0, 10.0] {
            assert_eq!(flat.correction_term(r).unwrap(), 0.0);
        }

        let hyp = make_model(2, Warping::Hyperbolic, 10.0, 128).unwrap();
        let got = hyp.correction_term(1.0).unwrap();
        let coth1 = 1f64.cosh() / 1f64.sinh();
        assert_abs_diff_eq!(got, coth1 - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 0.3130, epsilon = 5e-4);

        let lb = make_model(2, Warping::log_blend(0.5).unwrap(), 1500.0, 4096).unwrap();
        assert!(lb.correction_term(1000.0).unwrap().abs() < 1e-4);

        assert!(flat.correction_term(11.0).is_err());
    }

    #[test]
    fn flat_assumptions_pass_with_unit_ratio() {
        let m = make_model(2, Warping::Flat, 10.0, 128).unwrap();
        let rep = m.check_assumptions(&AssumptionThresholds::default());
        assert!(rep.passes);
        assert_eq!(rep.sup_correction, 0.0);
        assert!(rep.ricci_ok);
        assert_abs_diff_eq!(rep.volume_ratio_range[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.volume_ratio_range[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn volume_is_monotone_and_doubling_on_passing_models() {
        for w in [Warping::Flat, Warping::log_blend(0.3).unwrap()] {
            let m = make_model(3, w, 16.0, 512).unwrap();
            let mut prev = 0.0;
            for k in 1..=32 {
                let v = m.volume_ball(16.0 * k as f64 / 32.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
            for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
                let c = m.volume_ball(2.0 * r).unwrap() / m.volume_ball(r).unwrap();
                assert!(c <= 8.0 * 1.05, "doubling constant {c} too large at r={r}");
            }
        }
    }

    #[test]
    fn concavity_inequality_on_grid() {
        let m = make_model(2, Warping::log_blend(0.7).unwrap(), 30.0, 256).unwrap();
        for &r in m.grid.iter().skip(1) {
            assert!(m.warping.dpsi(r) <= m.warping.psi(r) / r + 1e-8);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_model(1, Warping::Hyperbolic, 5.0, 128).is_err());
        assert!(make_model(2, Warping::Flat, -1.0, 128).is_err());
        assert!(make_model(2, Warping::Flat, 5.0, 32).is_err());
        assert!(Warping::log_blend(0.0).is_err());
        assert!(Warping::log_blend(1.5).is_err());
        // a profile that dips negative inside the grid
        let bad = Warping::user_sampled(
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![0.0, 1.0, -0.5, 1.0, 2.0],
        )
        .unwrap();
        let err = make_model(2, bad, 4.0, 64).unwrap_err();
        assert!(matches!(err, Error::Construction(_)));
        assert!(err.to_string().contains("node"));
    }

    #[test]
    fn user_sampled_tracks_reference_profile() {
        // sample the log-blend closed form (densely near 0) and rebuild
        let reference = Warping::log_blend(0.5).unwrap();
        let mut rs: Vec<f64> = vec![0.0];
        rs.extend((0..200).map(|i| 1e-4 * (8.0f64 / 1e-4).powf(i as f64 / 199.0)));
        let ps: Vec<f64> = rs.iter().map(|&r| reference.psi(r)).collect();
        let w = Warping::user_sampled(rs, ps).unwrap();
        let m = make_model(2, w, 8.0, 128).unwrap();
        assert_relative_eq!(
            m.volume_ball(8.0).unwrap(),
            make_model(2, reference, 8.0, 128).unwrap().volume_ball(8.0).unwrap(),
            max_relative = 1e-4
        );
    }

    #[test]
    fn sinh_grid_hits_requested_inner_spacing() {
        let kind = GridKind::sinh_for_spacing(40.0, 0.01, 512);
        let m = make_model_with_grid(2, Warping::Flat, 40.0, 512, kind).unwrap();
        let dr0 = m.grid[1] - m.grid[0];
        assert!(dr0 <= 0.0101 && dr0 > 0.005, "inner spacing {dr0}");
        assert_eq!(m.grid[0], 0.0);
        assert_relative_eq!(*m.grid.last().unwrap(), 40.0, max_relative = 1e-12);
        let total: f64 = m.measure_weights.iter().sum();
        assert_relative_eq!(total, m.volume_ball(40.0).unwrap(), max_relative = 1e-10);
    }

    proptest::proptest! {
        // concave warpings obey psi' <= psi/r at every radius
        #[test]
        fn log_blend_radial_gradient_bound(c in 0.05f64..1.0, r_exp in -3.0f64..3.0) {
            let w = Warping::log_blend(c).unwrap();
            let r = 10f64.powf(r_exp);
            proptest::prop_assert!(w.dpsi(r) <= w.psi(r) / r + 1e-10);
            proptest::prop_assert!(w.d2psi(r) <= 0.0);
        }
    }

    #[test]
    fn sphere_areas() {
        assert_abs_diff_eq!(sphere_area(1), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_area(2), 2.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-13);
        assert_abs_diff_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-12);
    }
}
