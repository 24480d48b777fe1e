//! Pulse-design pipelines: the moment-based Gaussian ansatz, eigenpulses of
//! the local and exact lower-bound operators, and alternating maximization of
//! `Tr(G A(Gamma))` over rank-one pairs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cp_map::{ambiguity_on_nodes, cp_map_entries, eigenvector_signal, fidelity, UNIT_NORM_TOL};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{CMatrix, HermitianEigen};
use crate::scattering::{Moments, ScatteringGrid};
use crate::signal::{hermite, Signal};
use crate::spectral;
use crate::weyl::{central_basis, central_radius, local_operator, lower_bound_operator, OperatorMatrix};

/// `|C11|` above this rules out the separable eigen path.
pub const SEPARABILITY_TOL: f64 = 1e-8;

pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalues within this (relative to the spectral radius) of the top one
/// are treated as degenerate and resolved by overlap with a reference.
pub const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GaussianAnsatz,
    LocalEigen,
    ExactOscillator,
    Alternating,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::GaussianAnsatz => "gaussian_ansatz",
            Method::LocalEigen => "local_eigen",
            Method::ExactOscillator => "exact_oscillator",
            Method::Alternating => "alternating",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_ansatz" => Ok(Method::GaussianAnsatz),
            "local_eigen" => Ok(Method::LocalEigen),
            "exact_oscillator" => Ok(Method::ExactOscillator),
            "alternating" => Ok(Method::Alternating),
            other => Err(Error::InvalidParameter(format!("unknown method {other:?}"))),
        }
    }
}

/// Output of a design run. `gamma_opt` is the transmit pulse, `g_opt` the receive pulse.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub gamma_opt: Signal,
    pub g_opt: Signal,
    /// `E_H[a] = sum_k w_k |<g, S_k gamma>|^2`
    pub gain: f64,
    /// `|<g, L gamma~>|^2`
    pub lower_bound: f64,
    pub method: Method,
    pub iterations: usize,
    pub trajectory: Vec<f64>,
    /// Eigen- or singular value behind the pulse choice, where one exists.
    pub operator_eigenvalue: Option<f64>,
    /// Dilation used for the pulse frame.
    pub alpha: f64,
    pub tau0: f64,
    pub nu0: f64,
}

/// Scalar part of a [`DesignResult`], for serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub method: Method,
    pub gain: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub trajectory: Vec<f64>,
    pub operator_eigenvalue: Option<f64>,
    pub alpha: f64,
    pub tau0: f64,
    pub nu0: f64,
}

impl DesignResult {
    pub fn summary(&self) -> DesignSummary {
        DesignSummary {
            method: self.method,
            gain: self.gain,
            lower_bound: self.lower_bound,
            iterations: self.iterations,
            trajectory: self.trajectory.clone(),
            operator_eigenvalue: self.operator_eigenvalue,
            alpha: self.alpha,
            tau0: self.tau0,
            nu0: self.nu0,
        }
    }
}

/// Jensen lower bound `|<g, L gamma~>|^2` with `gamma~ = S_(tau0,nu0) gamma`
/// and `L = sum_k w_k rho(tau0 - tau_k, nu_k - nu0)` about the centroid.
pub fn lower_bound(c: &ScatteringGrid, g: &Signal, gamma: &Signal) -> Result<f64> {
    let m = Moments::compute(c)?;
    lower_bound_about(c, g, gamma, m.tau0, m.nu0)
}

/// [`lower_bound`] about an explicit center.
pub fn lower_bound_about(c: &ScatteringGrid, g: &Signal, gamma: &Signal, tau0: f64, nu0: f64) -> Result<f64> {
    let tilde = gamma.tf_shift(tau0, nu0)?;
    let centered = c.shifted(-tau0, -nu0);
    // <g, rho(a, b) f> = e^{pi i a b} <g, S_(-a, b) f> with (a, b) = (tau0 - tau, nu - nu0)
    let amb = ambiguity_on_nodes(&centered, g, &tilde)?;
    let sum: Complex64 = centered
        .nodes()
        .iter()
        .zip(centered.weights())
        .zip(&amb)
        .map(|((&(t, n), &w), a)| w * spectral::cis(-PI * t * n) * a)
        .sum();
    Ok(sum.norm_sqr())
}

fn finish(
    c: &ScatteringGrid,
    g: Signal,
    gamma: Signal,
    method: Method,
    m: &Moments,
    alpha: f64,
    iterations: usize,
    trajectory: Vec<f64>,
    operator_eigenvalue: Option<f64>,
) -> Result<DesignResult> {
    let g = g.normalized()?.phase_fixed();
    let gamma = gamma.normalized()?.phase_fixed();
    let gain = fidelity(c, &g, &gamma)?;
    let lb = lower_bound_about(c, &g, &gamma, m.tau0, m.nu0)?;
    Ok(DesignResult {
        gamma_opt: gamma,
        g_opt: g,
        gain,
        lower_bound: lb,
        method,
        iterations,
        trajectory,
        operator_eigenvalue,
        alpha,
        tau0: m.tau0,
        nu0: m.nu0,
    })
}

/// `(g, gamma) = (d_{1/alpha} h0, S^{-1}_(tau0,nu0) d_{1/alpha} h0)`.
pub fn ansatz_pair(grid: &TimeGrid, m: &Moments, alpha: f64) -> Result<(Signal, Signal)> {
    let g = hermite(grid, 0)?.dilate(1.0 / alpha)?;
    let gamma = g.tf_shift_inverse(m.tau0, m.nu0)?;
    Ok((g, gamma))
}

/// Scaled and displaced Gaussians with `alpha = (C02 / C20)^(1/4)`.
pub fn gaussian_ansatz(grid: &TimeGrid, c: &ScatteringGrid) -> Result<DesignResult> {
    let m = Moments::compute(c)?;
    let alpha = m.alpha_scale;
    let (g, gamma) = ansatz_pair(grid, &m, alpha)?;
    finish(c, g, gamma, Method::GaussianAnsatz, &m, alpha, 0, Vec::new(), None)
}

fn top_signal(grid: &TimeGrid, eig: &HermitianEigen, reference: &Signal) -> Result<Signal> {
    let scale = eig.values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let v = eig.top_vector(Some(reference.samples()), DEGENERACY_TOL * scale);
    eigenvector_signal(grid, &v)
}

/// Top eigenvector of the dilated local operator `L_alpha`, mapped back
/// through `d_{1/alpha}` and the displacement; `g` follows `L gamma~`.
///
/// The largest algebraic eigenvalue is used: the spectral discretization of
/// `D^2` gives large negative eigenvalues near the band edge that carry no
/// physical meaning.
pub fn local_eigen_design(grid: &TimeGrid, c: &ScatteringGrid) -> Result<DesignResult> {
    let m = Moments::compute(c)?;
    if m.c11.abs() > SEPARABILITY_TOL {
        return Err(Error::NotSeparable(m.c11));
    }
    let alpha = m.alpha_scale;
    let l = local_operator(grid, &m, alpha)?;
    let eig = l.eigen()?;
    let h0 = hermite(grid, 0)?;
    let v = top_signal(grid, &eig, &h0)?;
    let lv = l.apply(&v)?;
    let tilde = v.dilate(1.0 / alpha)?;
    let g = lv.dilate(1.0 / alpha)?;
    let gamma = tilde.tf_shift_inverse(m.tau0, m.nu0)?;
    finish(c, g, gamma, Method::LocalEigen, &m, alpha, 0, Vec::new(), Some(eig.values[0]))
}

/// Top singular pair of the quadrature lower-bound operator `L` on the central
/// subspace: `gamma~` the right singular vector, `g` the left one. For the
/// Gaussian family `L` is a multiple of an oscillator-semigroup element.
pub fn exact_operator_design(grid: &TimeGrid, c: &ScatteringGrid) -> Result<DesignResult> {
    let m = Moments::compute(c)?;
    let l = lower_bound_operator(grid, c, &m)?;
    let (sigma, left, right) = top_singular_pair(&l)?;
    let tilde = eigenvector_signal(grid, &right)?;
    let g = eigenvector_signal(grid, &left)?;
    let gamma = tilde.tf_shift_inverse(m.tau0, m.nu0)?;
    finish(c, g, gamma, Method::ExactOscillator, &m, 1.0, 0, Vec::new(), Some(sigma))
}

/// Top singular triple of the operator restricted to the central subspace,
/// singular vectors in sample coordinates.
fn top_singular_pair(op: &OperatorMatrix) -> Result<(f64, Vec<Complex64>, Vec<Complex64>)> {
    let q = central_basis(op.grid(), central_radius(op.grid()))?;
    let block = q.adjoint() * op.entries() * &q;
    let svd = block.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Numerical("singular value decomposition failed".into())),
    };
    let (k, sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best });
    let left = (&q * u.column(k)).iter().copied().collect();
    let right = (&q * vt.row(k).adjoint()).iter().copied().collect();
    Ok((sigma, left, right))
}

fn projector(f: &Signal) -> CMatrix {
    let n = f.grid().len();
    let dt = f.grid().dt();
    let s = f.samples();
    CMatrix::from_fn(n, n, |j, l| s[j] * s[l].conj() * dt)
}

fn rayleigh(m: &CMatrix, f: &Signal) -> f64 {
    let v = nalgebra::DVector::from_column_slice(f.samples());
    (v.adjoint() * m * &v)[(0, 0)].re * f.grid().dt()
}

/// Alternate `G <- top eigenprojector of A(Gamma)` and
/// `Gamma <- top eigenprojector of A~(G)` until a full cycle gains less than
/// `tol`. The trajectory records `Tr(G A(Gamma))` after every half-step.
///
/// Ties in the top eigenspace are broken by overlap with the previous iterate;
/// the very first receive step uses `h0`.
pub fn alternating_maximize(
    c: &ScatteringGrid,
    init_gamma: &Signal,
    max_iters: usize,
    tol: f64,
) -> Result<DesignResult> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    let n0 = init_gamma.norm();
    if (n0 - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm(n0));
    }
    let m = Moments::compute(c)?;
    let grid = *init_gamma.grid();
    c.check_guard(&grid)?;

    let mut gamma = init_gamma.clone();
    let mut g_ref = hermite(&grid, 0)?;
    let mut trajectory = Vec::new();
    let mut iterations = 0;
    let mut last = f64::NEG_INFINITY;
    for it in 1..=max_iters {
        iterations = it;
        let a = cp_map_entries(c, &grid, &projector(&gamma), false);
        let g = top_signal(&grid, &HermitianEigen::new(&a), &g_ref)?;
        let gain_g = rayleigh(&a, &g);
        trajectory.push(gain_g);

        let at = cp_map_entries(c, &grid, &projector(&g), true);
        let next = top_signal(&grid, &HermitianEigen::new(&at), &gamma)?;
        let gain_gamma = rayleigh(&at, &next);
        trajectory.push(gain_gamma);

        g_ref = g;
        gamma = next;
        let start = if it == 1 { gain_g } else { last };
        last = gain_gamma;
        if gain_gamma - start < tol {
            break;
        }
    }
    finish(c, g_ref, gamma, Method::Alternating, &m, 1.0, iterations, trajectory, None)
}

/// One row of a scaling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingSweep {
    pub points: Vec<SweepPoint>,
    pub argmax: usize,
}

impl ScalingSweep {
    pub fn best(&self) -> SweepPoint {
        self.points[self.argmax]
    }
}

/// Gain of the displaced Gaussian pair [`ansatz_pair`] across dilations.
pub fn scaling_sweep(grid: &TimeGrid, c: &ScatteringGrid, alphas: &[f64]) -> Result<ScalingSweep> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("empty alpha list".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {a}")));
    }
    let m = Moments::compute(c)?;
    let points: Vec<SweepPoint> = alphas
        .par_iter()
        .map(|&alpha| {
            let (g, gamma) = ansatz_pair(grid, &m, alpha)?;
            let g = g.normalized()?;
            let gamma = gamma.normalized()?;
            Ok(SweepPoint { alpha, gain: fidelity(c, &g, &gamma)? })
        })
        .collect::<Result<_>>()?;
    let argmax = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, p)| if p.gain > points[best].gain { i } else { best });
    Ok(ScalingSweep { points, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::hermite_family;

    fn grid() -> TimeGrid {
        TimeGrid::default()
    }

    fn overlap(a: &Signal, b: &Signal) -> f64 {
        a.inner_product(b).unwrap().norm()
    }

    #[test]
    fn ansatz_on_gaussian() {
        let c = ScatteringGrid::gaussian(2.0, 64).unwrap();
        let r = gaussian_ansatz(&grid(), &c).unwrap();
        assert!((r.gain - 0.5).abs() < 2e-3, "{}", r.gain);
        // <h0, L h0> = alpha / (alpha + 1)
        assert!((r.lower_bound - 4.0 / 9.0).abs() < 2e-3, "{}", r.lower_bound);
        assert!(r.lower_bound <= r.gain + 1e-8);
    }

    #[test]
    fn ansatz_compensates_point_mass() {
        let c = ScatteringGrid::point_mass(0.7, -0.4);
        let r = gaussian_ansatz(&grid(), &c).unwrap();
        assert!((r.gain - 1.0).abs() < 1e-8, "{}", r.gain);
        assert!((r.lower_bound - 1.0).abs() < 1e-8);
    }

    #[test]
    fn lower_bound_is_below_gain_for_hermite_pairs() {
        let g = grid();
        let c = ScatteringGrid::rectangular(0.4, 0.3, 24).unwrap();
        let hs = hermite_family(&g, 3).unwrap();
        for a in &hs {
            for b in &hs {
                let f = fidelity(&c, a, b).unwrap();
                assert!(lower_bound(&c, a, b).unwrap() <= f + 1e-8);
            }
        }
    }

    #[test]
    fn local_eigen_on_rectangle() {
        let g = grid();
        let c = ScatteringGrid::rectangular(0.2, 0.05, 64).unwrap();
        let r = local_eigen_design(&g, &c).unwrap();
        let m = Moments::compute(&c).unwrap();
        let lam = r.operator_eigenvalue.unwrap();
        assert!((lam - (1.0 - PI * m.spread())).abs() < 1e-7, "{lam}");
        let target = hermite(&g, 0).unwrap().dilate(1.0 / m.alpha_scale).unwrap();
        assert!(overlap(&r.g_opt, &target) > 0.999);
    }

    #[test]
    fn local_eigen_trivial_moments_pick_h0() {
        let g = grid();
        let c = ScatteringGrid::point_mass(0.0, 0.0);
        let r = local_eigen_design(&g, &c).unwrap();
        assert!((r.operator_eigenvalue.unwrap() - 1.0).abs() < 1e-12);
        assert!(overlap(&r.gamma_opt, &hermite(&g, 0).unwrap()) > 1.0 - 1e-10);
    }

    #[test]
    fn local_eigen_rejects_correlated_moments() {
        let nodes = vec![(0.0, 0.0), (0.1, 0.1), (0.2, 0.2)];
        let c = ScatteringGrid::custom(nodes, vec![1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(local_eigen_design(&grid(), &c), Err(Error::NotSeparable(_))));
    }

    #[test]
    fn exact_operator_design_on_gaussian() {
        let g = grid();
        let c = ScatteringGrid::gaussian(2.0, 48).unwrap();
        let r = exact_operator_design(&g, &c).unwrap();
        let h0 = hermite(&g, 0).unwrap();
        assert!(overlap(&r.gamma_opt, &h0) > 0.999);
        assert!(overlap(&r.g_opt, &h0) > 0.999);
        assert!((r.operator_eigenvalue.unwrap() - 2.0 / 3.0).abs() < 1e-3);
        assert!((r.gain - 0.5).abs() < 2e-3);
    }

    #[test]
    fn alternating_point_mass_single_iteration() {
        let g = grid();
        let c = ScatteringGrid::point_mass(0.0, 0.0);
        let init = hermite(&g, 2).unwrap();
        let r = alternating_maximize(&c, &init, 50, DEFAULT_TOL).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.gain - 1.0).abs() < 1e-10);
        assert!(overlap(&r.gamma_opt, &init) > 1.0 - 1e-10);
    }

    #[test]
    fn alternating_from_h1_reaches_h0() {
        let g = grid();
        let c = ScatteringGrid::gaussian(2.0, 48).unwrap();
        let init = hermite(&g, 1).unwrap();
        let r = alternating_maximize(&c, &init, DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        assert!(overlap(&r.gamma_opt, &hermite(&g, 0).unwrap()) > 0.999);
        assert!((r.gain - 0.5).abs() < 2e-3, "{}", r.gain);
        for w in r.trajectory.windows(2) {
            assert!(w[1] >= w[0] - 1e-10, "{:?}", r.trajectory);
        }
    }

    #[test]
    fn alternating_argument_checks() {
        let c = ScatteringGrid::point_mass(0.0, 0.0);
        let h = hermite(&grid(), 0).unwrap();
        assert!(alternating_maximize(&c, &h, 0, 1e-9).is_err());
        assert!(alternating_maximize(&c, &h, 5, 0.0).is_err());
        let half = h.scaled(Complex64::new(0.5, 0.0));
        assert!(matches!(alternating_maximize(&c, &half, 5, 1e-9), Err(Error::NotUnitNorm(_))));
    }

    #[test]
    fn sweep_symmetric_gaussian_peaks_at_one() {
        let c = ScatteringGrid::gaussian(2.0, 32).unwrap();
        let alphas: Vec<f64> = (0..21).map(|i| 0.5 + 0.05 * i as f64).collect();
        let s = scaling_sweep(&grid(), &c, &alphas).unwrap();
        assert!((s.best().alpha - 1.0).abs() <= 0.05 + 1e-12);
        assert!(s.points.iter().all(|p| p.gain <= s.best().gain));
        assert!(scaling_sweep(&grid(), &c, &[]).is_err());
        assert!(scaling_sweep(&grid(), &c, &[1.0, -1.0]).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::GaussianAnsatz, Method::LocalEigen, Method::ExactOscillator, Method::Alternating] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.as_str()));
        }
    }
}
