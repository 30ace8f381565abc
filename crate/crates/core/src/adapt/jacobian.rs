//! Least-squares local Jacobians from repertoire neighborhoods.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::archive::{Genotype, Repertoire};
use crate::error::{contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JacobianConfig {
    /// Neighbors used per estimate.
    pub k: usize,
    /// Genotype-space neighborhood radius (normalized units).
    pub epsilon: f64,
    /// Residual at which confidence reaches zero.
    pub eta_threshold: f64,
    /// Ridge added to `G·Gᵀ` when it is numerically singular.
    pub ridge: f64,
    /// Relative singular-value cutoff for pseudo-inverses.
    pub svd_cutoff: f64,
    pub max_iterations: usize,
    /// Control-space success tolerance; `None` takes the domain's.
    pub tolerance: Option<f64>,
    /// Retry once with `2·epsilon` when too few neighbors are found.
    pub widen_once: bool,
}

impl Default for JacobianConfig {
    fn default() -> Self {
        Self {
            k: 30,
            epsilon: 0.4,
            eta_threshold: 0.3,
            ridge: 1e-6,
            svd_cutoff: 1e-8,
            max_iterations: 5,
            tolerance: None,
            widen_once: true,
        }
    }
}

impl JacobianConfig {
    /// Defaults for goal reaching (iteration cap 4).
    pub fn for_reach() -> Self {
        Self {
            max_iterations: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(contract("k must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.eta_threshold > 0.0) {
            return Err(contract("epsilon and eta_threshold must be positive"));
        }
        if !(self.ridge >= 0.0 && self.svd_cutoff >= 0.0) {
            return Err(contract("ridge and svd_cutoff must be non-negative"));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(contract("tolerance must be positive"));
            }
        }
        Ok(())
    }
}

/// Local linear map from genotype to normalized control behavior.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianEstimate {
    /// `c × n`, in normalized behavior units per genotype unit.
    pub matrix: DMatrix<f64>,
    /// `‖J̃·G − B‖_F / K`.
    pub residual: f64,
    pub confidence: f64,
    pub neighbor_ids: Vec<u64>,
}

/// Piecewise-linear confidence: `1 − η/η_th` below the threshold, else 0.
pub fn confidence(residual: f64, eta_threshold: f64) -> f64 {
    if residual < eta_threshold {
        (1.0 - residual / eta_threshold).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Moore–Penrose pseudo-inverse by SVD; singular values below
/// `rel_cutoff · σ_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested Vᵀ");
    let s = &svd.singular_values;
    let smax = s.max();
    let cut = smax * rel_cutoff;
    let mut out = DMatrix::zeros(c, r);
    for (k, &sk) in s.iter().enumerate() {
        if sk > cut && sk > 0.0 {
            out += vt.row(k).transpose() * u.column(k).transpose() / sk;
        }
    }
    out
}

/// Least-squares fit of `B ≈ J·G`, `G` holding genotype deltas (`n × K`)
/// and `B` behavior deltas (`c × K`) column-wise.
///
/// Uses the exact normal equations unless `G·Gᵀ` is numerically singular,
/// in which case `ridge·I` is added before inverting.
pub fn fit_jacobian(g: &DMatrix<f64>, b: &DMatrix<f64>, ridge: f64, svd_cutoff: f64) -> DMatrix<f64> {
    let n = g.nrows();
    let mut ggt = g * g.transpose();
    let sv = ggt.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > svd_cutoff * smax) {
        ggt += DMatrix::identity(n, n) * ridge;
    }
    let inv = pseudo_inverse(&ggt, svd_cutoff);
    b * g.transpose() * inv
}

/// Estimates the control-space Jacobian at `center`.
///
/// `anchor` is the normalized control behavior attributed to `center`;
/// neighbor behaviors are their compensated values. Returns `None` when fewer
/// than `n + 1` neighbors lie within `epsilon`.
pub fn estimate_jacobian(
    repertoire: &Repertoire,
    center: &Genotype,
    anchor: &[f64],
    epsilon: f64,
    cfg: &JacobianConfig,
) -> Result<Option<JacobianEstimate>> {
    let n = repertoire.genotype_dim();
    let dims = repertoire.control_dims();
    if center.len() != n {
        return Err(contract(format!("genotype length {} != {n}", center.len())));
    }
    if anchor.len() != dims.len() {
        return Err(contract(format!("anchor length {} != {}", anchor.len(), dims.len())));
    }
    let neighbors = repertoire.neighbors_in_genotype_space(center, cfg.k, epsilon);
    if neighbors.len() < n + 1 {
        return Ok(None);
    }
    let k = neighbors.len();
    let norm = repertoire.normalizer();
    let mut g = DMatrix::zeros(n, k);
    let mut b = DMatrix::zeros(dims.len(), k);
    for (col, ind) in neighbors.iter().enumerate() {
        for (row, (x, c)) in ind.genotype.values().iter().zip(center.values()).enumerate() {
            g[(row, col)] = x - c;
        }
        for (row, &d) in dims.iter().enumerate() {
            b[(row, col)] = norm.normalize_dim(d, ind.compensated_at(d)) - anchor[row];
        }
    }
    let matrix = fit_jacobian(&g, &b, cfg.ridge, cfg.svd_cutoff);
    let residual = (&matrix * &g - &b).norm() / k as f64;
    Ok(Some(JacobianEstimate {
        confidence: confidence(residual, cfg.eta_threshold),
        matrix,
        residual,
        neighbor_ids: neighbors.iter().map(|i| i.id).collect(),
    }))
}

/// `J⁺ · delta`.
pub fn step(jacobian: &DMatrix<f64>, delta: &[f64], svd_cutoff: f64) -> Vec<f64> {
    let pinv = pseudo_inverse(jacobian, svd_cutoff);
    (pinv * DVector::from_column_slice(delta)).iter().copied().collect()
}
