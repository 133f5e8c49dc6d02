//! Extraction of the `log(1/t)` coefficient from small-time heat traces.
//!
//! If `H(t) = Tr(P U e^{-tQ})`, then `Tr(P U Q^{-z}) = Γ(z)^{-1} ∫ t^{z-1} H(t) dt`
//! and a term `c·log(1/t)` produces a simple pole with residue `c`. For the
//! Gaussian kernel `e^{-tQ²}` the same computation gives the residue of
//! `Tr(P U Q^{-2z})`, so the residue at `z = 0` of `Tr(P U Q^{-z})` is `2c`.

use alloc::vec::Vec;

use crate::linalg::least_squares;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatKernel {
    /// `e^{-tQ}`.
    Poisson,
    /// `e^{-tQ²}`.
    Gaussian,
}

impl HeatKernel {
    /// Factor turning the `log(1/t)` coefficient into the residue at `z = 0`.
    pub fn residue_factor(self) -> f64 {
        match self {
            HeatKernel::Poisson => 1.0,
            HeatKernel::Gaussian => 2.0,
        }
    }
}

/// `t^power · log(1/t)^log_power`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BasisTerm {
    pub power: f64,
    pub log_power: u32,
}

impl BasisTerm {
    pub const fn pow(power: f64) -> Self {
        BasisTerm { power, log_power: 0 }
    }

    pub const fn log(power: f64) -> Self {
        BasisTerm { power, log_power: 1 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let l = libm::log(1.0 / t);
        libm::pow(t, self.power) * libm::pow(l, self.log_power as f64)
    }

    pub fn is_residue_term(&self) -> bool {
        self.power == 0.0 && self.log_power == 1
    }
}

/// Half-integer powers in `[-2, 2]` plus `log(1/t)`.
pub fn half_integer_basis() -> Vec<BasisTerm> {
    let mut b: Vec<BasisTerm> = (-4..=4).map(|k| BasisTerm::pow(k as f64 / 2.0)).collect();
    b.push(BasisTerm::log(0.0));
    b
}

/// Integer powers `t^{-1} … t^5` plus `log(1/t)`: one-dimensional Poisson traces.
pub fn poisson_basis() -> Vec<BasisTerm> {
    let mut b: Vec<BasisTerm> = (-1..=5).map(|k| BasisTerm::pow(k as f64)).collect();
    b.push(BasisTerm::log(0.0));
    b
}

/// Gaussian traces localized at isolated fixed points of a circle map.
pub fn fixed_circle_basis() -> Vec<BasisTerm> {
    alloc::vec![
        BasisTerm::log(0.0),
        BasisTerm::pow(0.0),
        BasisTerm::pow(0.5),
        BasisTerm::pow(1.0),
        BasisTerm::pow(1.5),
        BasisTerm::pow(2.0),
        BasisTerm::log(1.0),
        BasisTerm::log(2.0),
    ]
}

/// Geometric grid of `count` points from `t_max` down to `t_min`.
pub fn geometric_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2 && t_min > 0.0 && t_max > t_min);
    let r = libm::log(t_max / t_min) / (count - 1) as f64;
    (0..count).map(|i| t_max * libm::exp(-r * i as f64)).collect()
}

/// Heat trace values on a decreasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatTraceSample {
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Fourier cutoff used for `values`.
    pub truncation: usize,
    pub kernel: HeatKernel,
    /// Largest relative change of the values between cutoffs `N` and `2N`.
    pub doubling_delta: Option<f64>,
}

impl HeatTraceSample {
    pub fn decades(&self) -> f64 {
        let (lo, hi) = self.t_grid.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
        libm::log10(hi / lo)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MellinConfig {
    pub basis: Vec<BasisTerm>,
    pub max_condition: f64,
    /// Bound on `max |fit - H| / max |H|`.
    pub residual_tolerance: f64,
    pub min_decades: f64,
}

impl MellinConfig {
    pub fn for_kernel(kernel: HeatKernel) -> Self {
        let basis = match kernel {
            HeatKernel::Poisson => poisson_basis(),
            HeatKernel::Gaussian => fixed_circle_basis(),
        };
        MellinConfig { basis, max_condition: 1e12, residual_tolerance: 1e-4, min_decades: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MellinFit {
    pub residue: f64,
    pub log_coefficient: f64,
    pub coefficients: Vec<f64>,
    /// `max |fit - H| / max |H|`.
    pub residual: f64,
    pub condition: f64,
}

/// Least-squares fit of the heat trace; returns the residue at `z = 0`.
pub fn mellin_residue_oracle(sample: &HeatTraceSample, cfg: &MellinConfig) -> Result<MellinFit> {
    let m = sample.t_grid.len();
    let k = cfg.basis.len();
    if m != sample.values.len() {
        return Err(Error::ShapeMismatch("t grid and values differ in length".into()));
    }
    if let Some(&t) = sample.t_grid.iter().find(|&&t| t <= 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let idx = cfg
        .basis
        .iter()
        .position(|b| b.is_residue_term())
        .ok_or_else(|| Error::Invalid("basis lacks log(1/t)".into()))?;
    if m < k + 2 {
        return Err(Error::Invalid("too few time samples for the basis".into()));
    }
    let decades = sample.decades();
    if decades < cfg.min_decades {
        return Err(Error::GridTooNarrow(decades));
    }
    let mut a = Vec::with_capacity(m * k);
    for &t in &sample.t_grid {
        a.extend(cfg.basis.iter().map(|b| b.eval(t)));
    }
    let ls = least_squares(&a, m, k, &sample.values);
    if !(ls.condition <= cfg.max_condition) {
        return Err(Error::IllConditioned(ls.condition));
    }
    let hmax = sample.values.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    let residual = ls.residuals.iter().fold(0.0f64, |s, r| s.max(r.abs())) / hmax;
    if residual > cfg.residual_tolerance {
        return Err(Error::ResidualTooLarge { residual, tolerance: cfg.residual_tolerance });
    }
    let c = ls.coeffs[idx];
    Ok(MellinFit {
        residue: sample.kernel.residue_factor() * c,
        log_coefficient: c,
        coefficients: ls.coeffs,
        residual,
        condition: ls.condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_model_is_recovered() {
        let t = geometric_grid(1e-3, 1e-1, 30);
        let values: Vec<f64> = t.iter().map(|&t| 3.0 * libm::log(1.0 / t) + 1.0 - 0.5 * t + 0.1 * t * t).collect();
        let sample = HeatTraceSample { t_grid: t, values, truncation: 0, kernel: HeatKernel::Poisson, doubling_delta: None };
        let fit = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Poisson)).unwrap();
        assert!((fit.residue - 3.0).abs() < 1e-8);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let t = geometric_grid(1e-2, 1e-1, 30);
        let values = alloc::vec![0.0; 30];
        let sample = HeatTraceSample { t_grid: t, values, truncation: 0, kernel: HeatKernel::Poisson, doubling_delta: None };
        let r = mellin_residue_oracle(&sample, &MellinConfig::for_kernel(HeatKernel::Poisson));
        assert!(matches!(r, Err(Error::GridTooNarrow(_))));
    }
}
