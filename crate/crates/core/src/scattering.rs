//! Scattering-function models, their quadrature discretization and moments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Relative truncation level for smooth models.
pub const TRUNCATION: f64 = 1e-14;

/// Tolerance on `sum w = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// `C02 * C20` below this counts as underspread.
pub const UNDERSPREAD_LIMIT: f64 = 1e-2;

/// Second moments at or below this are treated as vanishing.
const MOMENT_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelTag {
    GaussianSymmetric { alpha: f64 },
    Rectangular { tau_max: f64, nu_max: f64 },
    Custom,
}

/// Discretized scattering function: nodes `(tau_k, nu_k)` with quadrature
/// weights `w_k >= 0` that absorb `C(tau_k, nu_k) dtau dnu` and sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringGrid {
    nodes: Vec<(f64, f64)>,
    weights: Vec<f64>,
    model: ModelTag,
}

/// Nodes sharing one delay, so that a single spectral delay serves all of them.
#[derive(Debug, Clone)]
pub(crate) struct DelayGroup {
    pub tau: f64,
    /// `(nu, weight)` pairs
    pub taps: Vec<(f64, f64)>,
}

impl ScatteringGrid {
    /// Node list with arbitrary nonnegative weights; weights are renormalized.
    pub fn custom(nodes: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        Self::normalized(nodes, weights, ModelTag::Custom)
    }

    pub fn point_mass(tau: f64, nu: f64) -> Self {
        Self {
            nodes: vec![(tau, nu)],
            weights: vec![1.0],
            model: ModelTag::Custom,
        }
    }

    fn normalized(nodes: Vec<(f64, f64)>, mut weights: Vec<f64>, model: ModelTag) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: weights.len(),
            });
        }
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("scattering grid has no nodes".into()));
        }
        if nodes.iter().any(|(t, n)| !t.is_finite() || !n.is_finite()) {
            return Err(Error::InvalidParameter("non-finite scattering node".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter("scattering weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("scattering weights sum to zero".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights, model })
    }

    /// Symmetric Gaussian `C(tau, nu) = (alpha / 2) exp(-(pi / 2) alpha (tau^2 + nu^2))`
    /// on a `resolution x resolution` midpoint grid, truncated where `C` drops
    /// below `1e-14` of its peak.
    pub fn gaussian(alpha: f64, resolution: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("Gaussian alpha must be positive, got {alpha}")));
        }
        if resolution == 0 {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let decay = 0.5 * PI * alpha;
        let radius = ((1.0 / TRUNCATION).ln() / decay).sqrt();
        let step = 2.0 * radius / resolution as f64;
        let axis: Vec<f64> = (0..resolution).map(|i| -radius + (i as f64 + 0.5) * step).collect();
        let floor = TRUNCATION * 0.5 * alpha;
        let mut nodes = Vec::with_capacity(resolution * resolution);
        let mut weights = Vec::with_capacity(resolution * resolution);
        for &tau in &axis {
            for &nu in &axis {
                let c = 0.5 * alpha * (-decay * (tau * tau + nu * nu)).exp();
                if c >= floor {
                    nodes.push((tau, nu));
                    weights.push(c * step * step);
                }
            }
        }
        Self::normalized(nodes, weights, ModelTag::GaussianSymmetric { alpha })
    }

    /// Uniform scattering on `[0, tau_max] x [-nu_max, nu_max]`.
    pub fn rectangular(tau_max: f64, nu_max: f64, resolution: usize) -> Result<Self> {
        if !(tau_max > 0.0 && nu_max > 0.0 && tau_max.is_finite() && nu_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rectangular extents must be positive, got tau_max={tau_max}, nu_max={nu_max}"
            )));
        }
        if resolution == 0 {
            return Err(Error::InvalidParameter("resolution must be positive".into()));
        }
        let r = resolution as f64;
        let dt = tau_max / r;
        let dn = 2.0 * nu_max / r;
        let mut nodes = Vec::with_capacity(resolution * resolution);
        for i in 0..resolution {
            let tau = (i as f64 + 0.5) * dt;
            for j in 0..resolution {
                nodes.push((tau, -nu_max + (j as f64 + 0.5) * dn));
            }
        }
        let weights = vec![1.0; nodes.len()];
        Self::normalized(nodes, weights, ModelTag::Rectangular { tau_max, nu_max })
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn check_normalized(&self) -> Result<()> {
        let s = self.weight_sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL || self.weights.iter().any(|w| *w < 0.0) {
            return Err(Error::NotNormalized(s));
        }
        Ok(())
    }

    pub fn check_guard(&self, grid: &TimeGrid) -> Result<()> {
        for &(tau, nu) in &self.nodes {
            grid.check_guard(tau, nu)?;
        }
        Ok(())
    }

    /// Dilate the support: nodes `(s tau, s nu)`, weights unchanged.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale must be positive, got {s}")));
        }
        Ok(Self {
            nodes: self.nodes.iter().map(|&(t, n)| (s * t, s * n)).collect(),
            weights: self.weights.clone(),
            model: ModelTag::Custom,
        })
    }

    /// Rigid displacement of the support by `(d_tau, d_nu)`.
    pub fn shifted(&self, d_tau: f64, d_nu: f64) -> Self {
        Self {
            nodes: self.nodes.iter().map(|&(t, n)| (t + d_tau, n + d_nu)).collect(),
            weights: self.weights.clone(),
            model: ModelTag::Custom,
        }
    }

    /// Nodes grouped by identical delay, in ascending delay order.
    pub(crate) fn delay_groups(&self) -> Vec<DelayGroup> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| self.nodes[a].0.total_cmp(&self.nodes[b].0).then(a.cmp(&b)));
        let mut groups: Vec<DelayGroup> = Vec::new();
        for k in order {
            let (tau, nu) = self.nodes[k];
            let w = self.weights[k];
            match groups.last_mut() {
                Some(g) if g.tau.to_bits() == tau.to_bits() => g.taps.push((nu, w)),
                _ => groups.push(DelayGroup { tau, taps: vec![(nu, w)] }),
            }
        }
        groups
    }
}

/// How the dilation exponent was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Regular,
    /// `C20 = 0 < C02`: pure Doppler spread.
    DegenerateDoppler,
    /// `C02 = 0 < C20`: pure delay spread.
    DegenerateDelay,
    /// Both second moments vanish.
    PointLike,
}

/// Moments `C_mn = sum w (tau - tau0)^m (nu - nu0)^n` about a center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub tau0: f64,
    pub nu0: f64,
    pub c00: f64,
    pub c10: f64,
    pub c01: f64,
    pub c20: f64,
    pub c02: f64,
    pub c11: f64,
    /// `(C02 / C20)^(1/4)`, or 1 when that is undefined.
    pub alpha_scale: f64,
    pub scaling: Scaling,
    pub underspread: bool,
}

impl Moments {
    /// Moments about an arbitrary center.
    pub fn about(c: &ScatteringGrid, tau0: f64, nu0: f64) -> Self {
        let mut m = [0.0f64; 6];
        for (&(tau, nu), &w) in c.nodes.iter().zip(&c.weights) {
            let dt = tau - tau0;
            let dn = nu - nu0;
            m[0] += w;
            m[1] += w * dt;
            m[2] += w * dn;
            m[3] += w * dt * dt;
            m[4] += w * dn * dn;
            m[5] += w * dt * dn;
        }
        let [c00, c10, c01, c20, c02, c11] = m;
        let (alpha_scale, scaling) = match (c20 > MOMENT_FLOOR, c02 > MOMENT_FLOOR) {
            (true, true) => ((c02 / c20).powf(0.25), Scaling::Regular),
            (false, true) => (1.0, Scaling::DegenerateDoppler),
            (true, false) => (1.0, Scaling::DegenerateDelay),
            (false, false) => (1.0, Scaling::PointLike),
        };
        Self {
            tau0,
            nu0,
            c00,
            c10,
            c01,
            c20,
            c02,
            c11,
            alpha_scale,
            scaling,
            underspread: c02 * c20 < UNDERSPREAD_LIMIT,
        }
    }

    /// Central moments about the centroid, so that `C10 = C01 = 0`.
    pub fn compute(c: &ScatteringGrid) -> Result<Self> {
        c.check_normalized()?;
        let tau0: f64 = c.nodes.iter().zip(&c.weights).map(|(n, w)| w * n.0).sum();
        let nu0: f64 = c.nodes.iter().zip(&c.weights).map(|(n, w)| w * n.1).sum();
        let m = Self::about(c, tau0, nu0);
        if matches!(m.scaling, Scaling::DegenerateDoppler | Scaling::DegenerateDelay) {
            log::warn!(
                "degenerate scattering moments (C20={:e}, C02={:e}); using unit dilation",
                m.c20,
                m.c02
            );
        }
        Ok(m)
    }

    /// `sqrt(C02 C20)`, the spread that sets the local eigenvalue gaps.
    pub fn spread(&self) -> f64 {
        (self.c02 * self.c20).sqrt()
    }
}

/// Free-function spelling of [`Moments::compute`].
pub fn compute_moments(c: &ScatteringGrid) -> Result<Moments> {
    Moments::compute(c)
}
