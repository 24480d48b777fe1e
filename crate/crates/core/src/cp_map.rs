//! The channel-averaged CP map `A(Gamma) = sum_k w_k S_k Gamma S_k^*`, its
//! adjoint, the fidelity functional and the second-order approximation `A_1`.
//!
//! Operator matrices act on sample vectors; a pulse `gamma` of unit `L^2` norm
//! has projector entries `gamma_j conj(gamma_l) dt`, so traces are physical.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{hermitian_deviation, trace, trace_product, CMatrix, HermitianEigen};
use crate::scattering::{Moments, ScatteringGrid};
use crate::signal::Signal;
use crate::spectral;
use crate::weyl::{momentum_operator, position_operator, OperatorMatrix, HERMITIAN_TOL};

/// Tolerance for membership in the unit-trace positive operators.
pub const DENSITY_TOL: f64 = 1e-10;

/// Negative eigenvalues above `-PSD_FLOOR` count as zero.
pub const PSD_FLOOR: f64 = 1e-10;

/// Pulses must have unit norm to this accuracy.
pub const UNIT_NORM_TOL: f64 = 1e-8;

/// Slack on eigenvalue partial sums in the majorization check.
pub const MAJORIZATION_TOL: f64 = 1e-8;

const GROUP_CHUNK: usize = 4;

/// Positive unit-trace operator on the sample space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    grid: TimeGrid,
    entries: CMatrix,
}

impl DensityOperator {
    /// Validated constructor: Hermitian, positive and unit trace within [`DENSITY_TOL`].
    pub fn new(grid: TimeGrid, entries: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(grid, entries)?;
        rho.validate()?;
        Ok(rho)
    }

    fn new_unchecked(grid: TimeGrid, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != grid.len() || entries.ncols() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: entries.nrows().max(entries.ncols()),
            });
        }
        Ok(Self { grid, entries })
    }

    /// Rank-one projector onto a unit-norm pulse.
    pub fn from_pulse(gamma: &Signal) -> Result<Self> {
        check_unit(gamma)?;
        Ok(Self {
            grid: *gamma.grid(),
            entries: projector_entries(gamma),
        })
    }

    /// Convex combination `sum p_i |f_i><f_i|` of unit-norm pulses.
    pub fn mixture(pulses: &[Signal], probabilities: &[f64]) -> Result<Self> {
        if pulses.len() != probabilities.len() || pulses.is_empty() {
            return Err(Error::LengthMismatch {
                expected: pulses.len(),
                got: probabilities.len(),
            });
        }
        let grid = *pulses[0].grid();
        let mut entries = CMatrix::zeros(grid.len(), grid.len());
        for (f, &p) in pulses.iter().zip(probabilities) {
            pulses[0].check_same_grid(f)?;
            check_unit(f)?;
            if p < 0.0 {
                return Err(Error::InvalidParameter(format!("negative mixture weight {p}")));
            }
            entries += projector_entries(f).scale(p);
        }
        Self::new(grid, entries)
    }

    pub fn validate(&self) -> Result<()> {
        let dev = hermitian_deviation(&self.entries);
        if dev > DENSITY_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::NotNormalized(tr));
        }
        let min = *self.eigen().values.last().expect("nonempty grid");
        if min < -PSD_FLOOR {
            return Err(Error::Numerical(format!("density operator has eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        trace(&self.entries).re
    }

    /// `Tr(rho^2)`, equal to one on rank-one projectors.
    pub fn purity(&self) -> f64 {
        trace_product(&self.entries, &self.entries).re
    }

    pub fn eigen(&self) -> HermitianEigen {
        HermitianEigen::new(&self.entries)
    }

    /// Unit-norm pulse spanning the top eigenspace, phase fixed.
    pub fn top_pulse(&self) -> Result<Signal> {
        let eig = self.eigen();
        eigenvector_signal(&self.grid, &eig.vector(0))
    }

    pub fn to_operator(&self) -> Result<OperatorMatrix> {
        OperatorMatrix::new(self.grid, self.entries.clone())
    }
}

fn check_unit(f: &Signal) -> Result<()> {
    let n = f.norm();
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::NotUnitNorm(n));
    }
    Ok(())
}

fn projector_entries(f: &Signal) -> CMatrix {
    let n = f.grid().len();
    let dt = f.grid().dt();
    let s = f.samples();
    CMatrix::from_fn(n, n, |j, l| s[j] * s[l].conj() * dt)
}

/// Convert a Euclidean-unit eigenvector into an `L^2`-unit pulse with the
/// largest-magnitude sample real and positive.
pub(crate) fn eigenvector_signal(grid: &TimeGrid, v: &[Complex64]) -> Result<Signal> {
    let s = Signal::new(*grid, v.to_vec())?;
    Ok(s.normalized()?.phase_fixed())
}

/// Apply the unitary delay `T_tau` to every column.
fn delay_columns(grid: &TimeGrid, m: &mut CMatrix, tau: f64) {
    let n = grid.len();
    for col in m.as_mut_slice().chunks_mut(n) {
        spectral::delay_in_place(grid, col, tau);
    }
}

/// `T_tau Q T_tau^*`.
fn conjugate_by_delay(grid: &TimeGrid, q: &CMatrix, tau: f64) -> CMatrix {
    if tau == 0.0 {
        return q.clone();
    }
    let mut a = q.clone();
    delay_columns(grid, &mut a, tau);
    let mut b = a.adjoint();
    delay_columns(grid, &mut b, tau);
    b.adjoint()
}

/// Toeplitz modulation mask `K[j, l] = sum_nu w e^{2 pi i nu (t_j - t_l)}`,
/// returned as a function of `j - l + n - 1`.
fn modulation_mask(grid: &TimeGrid, taps: &[(f64, f64)]) -> Vec<Complex64> {
    let n = grid.len() as i64;
    let dt = grid.dt();
    (-(n - 1)..n)
        .map(|d| {
            taps.iter()
                .map(|&(nu, w)| spectral::cis(TAU * nu * d as f64 * dt) * w)
                .sum()
        })
        .collect()
}

fn hadamard_mask(m: &mut CMatrix, mask: &[Complex64], conjugate: bool) {
    let n = m.nrows();
    for l in 0..n {
        for j in 0..n {
            let k = mask[j + n - 1 - l];
            m[(j, l)] *= if conjugate { k.conj() } else { k };
        }
    }
}

/// `A(rho)` (or `A~(rho)` with `adjoint`), without validating the output.
pub(crate) fn cp_map_entries(c: &ScatteringGrid, grid: &TimeGrid, rho: &CMatrix, adjoint: bool) -> CMatrix {
    let n = grid.len();
    let groups = c.delay_groups();
    let partials: Vec<CMatrix> = groups
        .par_chunks(GROUP_CHUNK)
        .map(|chunk| {
            let mut acc = CMatrix::zeros(n, n);
            for g in chunk {
                let mask = modulation_mask(grid, &g.taps);
                if adjoint {
                    let mut m = rho.clone();
                    hadamard_mask(&mut m, &mask, true);
                    acc += conjugate_by_delay(grid, &m, -g.tau);
                } else {
                    let mut m = conjugate_by_delay(grid, rho, g.tau);
                    hadamard_mask(&mut m, &mask, false);
                    acc += m;
                }
            }
            acc
        })
        .collect();
    let mut total = CMatrix::zeros(n, n);
    for p in &partials {
        total += p;
    }
    total
}

/// `A(rho) = sum_k w_k S_k rho S_k^*`, or the adjoint `sum_k w_k S_k^* rho S_k`.
pub fn apply_cp_map(c: &ScatteringGrid, rho: &DensityOperator, adjoint: bool) -> Result<DensityOperator> {
    c.check_normalized()?;
    c.check_guard(&rho.grid)?;
    let entries = cp_map_entries(c, &rho.grid, &rho.entries, adjoint);
    DensityOperator::new_unchecked(rho.grid, entries)
}

/// Cross ambiguity `<g, S_(tau,nu) gamma>`.
pub fn ambiguity(g: &Signal, gamma: &Signal, tau: f64, nu: f64) -> Result<Complex64> {
    g.inner_product(&gamma.tf_shift(tau, nu)?)
}

/// `<g, S_k gamma>` at every scattering node, in node order.
pub fn ambiguity_on_nodes(c: &ScatteringGrid, g: &Signal, gamma: &Signal) -> Result<Vec<Complex64>> {
    g.check_same_grid(gamma)?;
    let grid = *g.grid();
    c.check_guard(&grid)?;
    let dt = grid.dt();
    let times = grid.sample_points();
    let mut index: Vec<usize> = (0..c.len()).collect();
    index.sort_by(|&a, &b| c.nodes()[a].0.total_cmp(&c.nodes()[b].0).then(a.cmp(&b)));
    let mut starts = vec![0];
    for i in 1..index.len() {
        if c.nodes()[index[i]].0.to_bits() != c.nodes()[index[i - 1]].0.to_bits() {
            starts.push(i);
        }
    }
    starts.push(index.len());
    let blocks: Vec<Vec<(usize, Complex64)>> = starts
        .par_windows(2)
        .map(|w| {
            let members = &index[w[0]..w[1]];
            let tau = c.nodes()[members[0]].0;
            let mut u = gamma.samples().to_vec();
            spectral::delay_in_place(&grid, &mut u, tau);
            let p: Vec<Complex64> = g.samples().iter().zip(&u).map(|(a, b)| a.conj() * b * dt).collect();
            members
                .iter()
                .map(|&k| {
                    let nu = c.nodes()[k].1;
                    let v = p.iter().zip(&times).map(|(z, &t)| z * spectral::cis(TAU * nu * t)).sum();
                    (k, v)
                })
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); c.len()];
    for (k, v) in blocks.into_iter().flatten() {
        out[k] = v;
    }
    Ok(out)
}

/// `sum_k w_k |<g, S_k gamma>|^2`, the channel-averaged gain `E_H[a]`.
pub fn fidelity(c: &ScatteringGrid, g: &Signal, gamma: &Signal) -> Result<f64> {
    c.check_normalized()?;
    check_unit(g)?;
    check_unit(gamma)?;
    let amb = ambiguity_on_nodes(c, g, gamma)?;
    Ok(amb.iter().zip(c.weights()).map(|(a, w)| w * a.norm_sqr()).sum())
}

/// `|fidelity(S g, S gamma) - fidelity(g, gamma)|` for a common shift.
pub fn check_covariance(c: &ScatteringGrid, g: &Signal, gamma: &Signal, tau: f64, nu: f64) -> Result<f64> {
    let base = fidelity(c, g, gamma)?;
    let shifted = fidelity(c, &g.tf_shift(tau, nu)?, &gamma.tf_shift(tau, nu)?)?;
    Ok((shifted - base).abs())
}

/// Moment form of the second-order approximation of `A`, evaluated on a
/// frame-adapted `rho` and dilation `alpha`:
///
/// `C00 G - 4 pi^2 (C20 D[D,G] + C02 X[X,G]) + 4 pi^2 C11 (D[X,G] + X[D,G]) + 2 pi i (C10 [D,G] - C01 [X,G])`
///
/// with `X -> X / alpha` and `D -> alpha D`. The result is generally not
/// Hermitian; its Hermitian flag reports the outcome.
pub fn build_a1(c: &ScatteringGrid, moments: &Moments, rho: &DensityOperator, alpha: f64) -> Result<OperatorMatrix> {
    c.check_normalized()?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation must be positive, got {alpha}")));
    }
    let grid = rho.grid;
    let x = position_operator(&grid).into_entries().scale(1.0 / alpha);
    let d = momentum_operator(&grid).into_entries().scale(alpha);
    let g = &rho.entries;
    let comm = |a: &CMatrix| a * g - g * a;
    let cx = comm(&x);
    let cd = comm(&d);
    let m = moments;
    let mut out = g.scale(m.c00);
    out -= (&d * &cd * Complex64::new(m.c20, 0.0) + &x * &cx * Complex64::new(m.c02, 0.0)).scale(4.0 * PI * PI);
    out += (&d * &cx + &x * &cd).scale(4.0 * PI * PI * m.c11);
    out += (cd.scale(m.c10) - cx.scale(m.c01)) * Complex64::new(0.0, TAU);
    OperatorMatrix::new(grid, out)
}

/// `(Tr(G X Gamma X), Tr(G D Gamma D))`, reported for symmetric pulse pairs.
pub fn symmetric_cross_terms(g: &DensityOperator, gamma: &DensityOperator) -> Result<(f64, f64)> {
    if g.grid != gamma.grid {
        return Err(Error::GridMismatch {
            left: g.grid.describe(),
            right: gamma.grid.describe(),
        });
    }
    let x = position_operator(&g.grid).into_entries();
    let d = momentum_operator(&g.grid).into_entries();
    let tx = trace_product(&g.entries, &(&x * &gamma.entries * &x)).re;
    let td = trace_product(&g.entries, &(&d * &gamma.entries * &d)).re;
    Ok((tx, td))
}

/// Eigenvalue partial sums of `rho` and `A(rho)`, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorizationProfile {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl MajorizationProfile {
    /// Largest `output - input` over all prefixes.
    pub fn max_excess(&self) -> f64 {
        self.input
            .iter()
            .zip(&self.output)
            .map(|(a, b)| b - a)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn holds(&self) -> bool {
        self.max_excess() <= MAJORIZATION_TOL
    }
}

fn partial_sums(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

pub fn majorization_profile(c: &ScatteringGrid, rho: &DensityOperator) -> Result<MajorizationProfile> {
    let out = apply_cp_map(c, rho, false)?;
    Ok(MajorizationProfile {
        input: partial_sums(&rho.eigen().values),
        output: partial_sums(&out.eigen().values),
    })
}

/// Whether `rho` majorizes `A(rho)`: every prefix sum of sorted eigenvalues
/// drops or stays level.
pub fn check_majorization(c: &ScatteringGrid, rho: &DensityOperator) -> Result<bool> {
    Ok(majorization_profile(c, rho)?.holds())
}

/// `Tr(G A(Gamma))` for two density operators.
pub fn trace_fidelity(c: &ScatteringGrid, g: &DensityOperator, gamma: &DensityOperator) -> Result<f64> {
    let a = apply_cp_map(c, gamma, false)?;
    Ok(trace_product(&g.entries, &a.entries).re)
}

/// Whether `m` is Hermitian to [`HERMITIAN_TOL`].
pub fn is_hermitian(m: &CMatrix) -> bool {
    hermitian_deviation(m) < HERMITIAN_TOL
}
