//! The polynomially decaying weight field
//! h(t, x) = t^{1+n/α} · (d²(x,p) + t^{2/α})^{−(n+α)/2}
//! with base point p at the pole, its exact time derivative, the functional
//! φ(t) = ∫ h(t+N, ·)·Re u dμ, the L² norm of h, and the numerical
//! certification that t·|(−Δ)^{α/2}h(t,·)|/h(t,·) stays bounded uniformly
//! in t (a spread bound across decades of t stands in for the implicit
//! constant).
//!
//! Ratio suprema are taken over the interior (outer 10% of the grid excluded)
//! to keep the Dirichlet truncation layer out of the statistics; the exact
//! flat-line identity check excludes a wider band since it compares against a
//! free-space closed form rather than a self-normalized ratio.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec;
use crate::manifold::ManifoldModel;
use crate::operator::SpectralOperator;
use crate::solver::FieldState;

/// Parameters of the weight field. The base point is pinned to the pole
/// (index 0): off-center bases are not meaningful on a radial grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WeightParams {
    pub alpha: f64,
    pub n: usize,
    pub base_index: usize,
    /// The time shift N in T = t + N.
    pub shift_n: f64,
}

impl WeightParams {
    pub fn new(alpha: f64, n: usize, shift_n: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        if n == 0 {
            return Err(Error::Parameter("dimension must be >= 1".into()));
        }
        if !(shift_n > 0.0) {
            return Err(Error::Parameter(format!("shift N must be positive, got {shift_n}")));
        }
        Ok(WeightParams { alpha, n, base_index: 0, shift_n })
    }

    /// Same parameters with a different shift.
    pub fn with_shift(mut self, shift_n: f64) -> Self {
        self.shift_n = shift_n;
        self
    }
}

/// h(t, r); equals 1 at r = 0 for every t and decreases in r.
pub fn eval_h(t: f64, r: f64, wp: &WeightParams) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("weight time must be positive, got {t}")));
    }
    Ok(h_unchecked(t, r, wp))
}

#[inline]
pub(crate) fn h_unchecked(t: f64, r: f64, wp: &WeightParams) -> f64 {
    let nf = wp.n as f64;
    let core = t.powf(2.0 / wp.alpha);
    t.powf(1.0 + nf / wp.alpha) * (r * r + core).powf(-(nf + wp.alpha) / 2.0)
}

/// ∂_t h in closed form: (1 + n/α)·(h/t)·r²/(r² + t^{2/α}).
/// Nonnegative, and bounded by (1 + n/α)·h/t.
pub fn eval_dt_h(t: f64, r: f64, wp: &WeightParams) -> Result<f64> {
    let h = eval_h(t, r, wp)?;
    let core = t.powf(2.0 / wp.alpha);
    Ok((1.0 + wp.n as f64 / wp.alpha) * (h / t) * r * r / (r * r + core))
}

/// h(t, ·) sampled on the model grid.
pub fn h_field(model: &ManifoldModel, wp: &WeightParams, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::Parameter(format!("weight time must be positive, got {t}")));
    }
    Ok(model.grid.iter().map(|&r| h_unchecked(t, r, wp)).collect())
}

/// One (t, r, ratio) sample of t·|(−Δ)^{α/2}h|/h for CSV export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatioSample {
    pub t: f64,
    pub r: f64,
    pub ratio: f64,
}

/// Certification record for the t-uniform fractional bound.
#[derive(Debug, Clone, Serialize)]
pub struct FracBoundReport {
    pub t_values: Vec<f64>,
    /// sup over the interior grid of t·|(−Δ)^{α/2}h(t,·)|/h(t,·), per t.
    pub sup_ratio: Vec<f64>,
    /// max/min of `sup_ratio`: the grid surrogate for a t-independent constant.
    pub spread: f64,
}

fn interior_limit(model: &ManifoldModel) -> f64 {
    0.9 * model.r_max
}

/// Interior sup of t·|(−Δ)^{α'/2}h(t,·)|/h(t,·) with an explicit exponent
/// (α' = wp.alpha for the certified bound; α' = 2 is a diagnostic).
pub fn sup_ratio_at(
    op: &SpectralOperator,
    wp: &WeightParams,
    t: f64,
    alpha_apply: f64,
) -> Result<f64> {
    let model = op.model();
    let h = h_field(model, wp, t)?;
    let g = if alpha_apply == 2.0 {
        op.apply_laplacian(&h)?
    } else {
        op.apply_fractional(alpha_apply, &h)?
    };
    let limit = interior_limit(model);
    let mut sup: f64 = 0.0;
    for (i, &r) in model.grid.iter().enumerate() {
        if r <= limit {
            sup = sup.max(t * g[i].abs() / h[i]);
        }
    }
    Ok(sup)
}

/// Evaluates the bound over the given times; errors if the grid does not put
/// at least 8 nodes across the smallest core radius t^{1/α}.
pub fn verify_frac_bound(
    op: &SpectralOperator,
    wp: &WeightParams,
    t_values: &[f64],
) -> Result<FracBoundReport> {
    Ok(verify_frac_bound_detailed(op, wp, t_values)?.0)
}

/// Like [`verify_frac_bound`], also returning every interior ratio sample.
pub fn verify_frac_bound_detailed(
    op: &SpectralOperator,
    wp: &WeightParams,
    t_values: &[f64],
) -> Result<(FracBoundReport, Vec<RatioSample>)> {
    if t_values.is_empty() {
        return Err(Error::Parameter("need at least one t value".into()));
    }
    let model = op.model();
    for &t in t_values {
        if !(t > 0.0) {
            return Err(Error::Parameter(format!("weight time must be positive, got {t}")));
        }
        let core = t.powf(1.0 / wp.alpha);
        let within = model.nodes_within(core);
        if within < 8 {
            return Err(Error::Resolution {
                t,
                detail: format!(
                    "only {within} grid nodes inside the core radius {core:.3e}; need 8"
                ),
            });
        }
    }

    let limit = interior_limit(model);
    let per_t = exec::map(t_values, |&t| -> Result<(f64, Vec<RatioSample>)> {
        let h = h_field(model, wp, t)?;
        let g = op.apply_fractional(wp.alpha, &h)?;
        let mut sup: f64 = 0.0;
        let mut rows = Vec::new();
        for (i, &r) in model.grid.iter().enumerate() {
            if r <= limit {
                let ratio = t * g[i].abs() / h[i];
                sup = sup.max(ratio);
                rows.push(RatioSample { t, r, ratio });
            }
        }
        Ok((sup, rows))
    });

    let mut sup_ratio = Vec::with_capacity(t_values.len());
    let mut samples = Vec::new();
    for item in per_t {
        let (sup, rows) = item?;
        sup_ratio.push(sup);
        samples.extend(rows);
    }
    let max = sup_ratio.iter().cloned().fold(f64::MIN, f64::max);
    let min = sup_ratio.iter().cloned().fold(f64::MAX, f64::min);
    let spread = if min > 0.0 { max / min } else { f64::INFINITY };
    Ok((FracBoundReport { t_values: t_values.to_vec(), sup_ratio, spread }, samples))
}

/// Exact flat-line identity at α = 1: (−Δ)^{1/2} of h(t,·) = t²/(r²+t²) is
/// t(t²−r²)/(r²+t²)². Returns the max deviation of the computed field from
/// the closed form over r ≤ interior_fraction·r_max, normalized by max h = 1.
///
/// The free-space closed form deviates near the truncation radius by about
/// h(t, r_max), so callers compare on a wider interior margin (0.7 by
/// default) than the self-normalized ratio checks use.
pub fn line_gold_identity_deviation(
    op: &SpectralOperator,
    t: f64,
    interior_fraction: f64,
) -> Result<f64> {
    let model = op.model();
    if model.n != 1 {
        return Err(Error::Parameter("the gold identity lives on the n = 1 line oracle".into()));
    }
    let wp = WeightParams::new(1.0, 1, 1.0)?;
    let h = h_field(model, &wp, t)?;
    let g = op.apply_fractional(1.0, &h)?;
    let limit = interior_fraction * model.r_max;
    let mut worst: f64 = 0.0;
    for (i, &r) in model.grid.iter().enumerate() {
        if r <= limit {
            let exact = t * (t * t - r * r) / (r * r + t * t).powi(2);
            worst = worst.max((g[i] - exact).abs());
        }
    }
    Ok(worst)
}

/// φ(t) = ∫ h(t+N, ·)·Re u dμ.
pub fn phi_of_state(model: &ManifoldModel, state: &FieldState, wp: &WeightParams) -> Result<f64> {
    if state.u.len() != model.nodes() {
        return Err(Error::ModelMismatch(format!(
            "state has {} samples, grid has {}",
            state.u.len(),
            model.nodes()
        )));
    }
    let t_shifted = state.t + wp.shift_n;
    if !(t_shifted > 0.0) {
        return Err(Error::Parameter(format!("shifted time t + N = {t_shifted} must be positive")));
    }
    Ok(model
        .grid
        .iter()
        .zip(&model.measure_weights)
        .zip(&state.u)
        .map(|((&r, &w), z)| w * h_unchecked(t_shifted, r, wp) * z.re)
        .sum())
}

/// ‖h(T, ·)‖_{L²(M)} by quadrature on the model grid.
pub fn h_l2_norm(model: &ManifoldModel, wp: &WeightParams, t_shifted: f64) -> Result<f64> {
    if !(t_shifted > 0.0) {
        return Err(Error::Parameter(format!("shifted time {t_shifted} must be positive")));
    }
    let sq: f64 = model
        .grid
        .iter()
        .zip(&model.measure_weights)
        .map(|(&r, &w)| {
            let h = h_unchecked(t_shifted, r, wp);
            w * h * h
        })
        .sum();
    Ok(sq.sqrt())
}

/// Log-log slope of ‖h(T,·)‖_{L²} over T ∈ [t_lo, t_hi], with the samples.
/// Dimensional analysis predicts n/(2α); the measured slope is reported so a
/// T^{−1} decay claim can be checked against it directly.
pub fn h_l2_norm_slope(
    model: &ManifoldModel,
    wp: &WeightParams,
    t_lo: f64,
    t_hi: f64,
    samples: usize,
) -> Result<(f64, Vec<(f64, f64)>)> {
    if !(t_lo > 0.0 && t_hi > t_lo) || samples < 5 {
        return Err(Error::Parameter("need 0 < t_lo < t_hi and at least 5 samples".into()));
    }
    let mut pts = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = t_lo * (t_hi / t_lo).powf(k as f64 / (samples - 1) as f64);
        pts.push((t, h_l2_norm(model, wp, t)?));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|&(t, v)| (t.ln(), v.ln())).collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((slope, pts))
}
