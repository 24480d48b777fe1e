//! Operator matrices on the sampling grid.
//!
//! `X` multiplies by `t`, `D = (1 / 2 pi i) d/dt` is applied spectrally, and
//! the Weyl operator `rho(tau, nu) = exp(2 pi i (nu X + tau D))` relates to the
//! time-frequency shift by `S_(tau,nu) = exp(pi i tau nu) rho(-tau, nu)`.
//! Pseudo-differential operators are assembled from their spreading function
//! `sigma(D, X) = sum_k c_k rho(tau_k, nu_k)`.

use std::f64::consts::{PI, TAU};

use nalgebra::Matrix3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::linalg::{hermitian_deviation, CMatrix, HermitianEigen};
use crate::scattering::{Moments, ScatteringGrid};
use crate::signal::Signal;
use crate::spectral;

/// `||M - M^*||_F` below this marks an operator Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// First moments beyond this make the local operator non-Hermitian.
pub const CENTERING_TOL: f64 = 1e-8;

/// Delay groups handled per parallel task in spreading sums.
const GROUP_CHUNK: usize = 8;

/// Dense operator on the sample space of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    grid: TimeGrid,
    entries: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(grid: TimeGrid, entries: CMatrix) -> Result<Self> {
        if entries.nrows() != grid.len() || entries.ncols() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: entries.nrows().max(entries.ncols()),
            });
        }
        let hermitian = hermitian_deviation(&entries) < HERMITIAN_TOL;
        Ok(Self { grid, entries, hermitian })
    }

    /// Replace the entries by their Hermitian part. Used for operators that are
    /// Hermitian by construction and only pick up rounding asymmetry.
    fn hermitian_part(grid: TimeGrid, entries: CMatrix) -> Self {
        let entries = (&entries + entries.adjoint()).scale(0.5);
        Self { grid, entries, hermitian: true }
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

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.entries)
    }

    pub fn apply(&self, f: &Signal) -> Result<Signal> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch {
                left: self.grid.describe(),
                right: f.grid().describe(),
            });
        }
        let v = nalgebra::DVector::from_column_slice(f.samples());
        let out = &self.entries * v;
        Signal::new(self.grid, out.iter().copied().collect())
    }

    /// Eigendecomposition, descending eigenvalues.
    pub fn eigen(&self) -> Result<HermitianEigen> {
        if !self.hermitian {
            return Err(Error::NotHermitian(self.hermitian_deviation()));
        }
        Ok(HermitianEigen::new(&self.entries))
    }

    /// Eigendecomposition restricted to the central subspace
    /// ([`central_basis`] at [`central_radius`]); eigenvectors are returned
    /// in sample coordinates.
    pub fn central_eigen(&self) -> Result<HermitianEigen> {
        if !self.hermitian {
            return Err(Error::NotHermitian(self.hermitian_deviation()));
        }
        let q = central_basis(&self.grid, central_radius(&self.grid))?;
        let block = q.adjoint() * &self.entries * &q;
        let eig = HermitianEigen::new(&block);
        Ok(HermitianEigen {
            values: eig.values,
            vectors: &q * eig.vectors,
        })
    }

    /// Matrix elements `<basis_m, M basis_n>`.
    pub fn compress(&self, basis: &[Signal]) -> Result<CMatrix> {
        let images: Vec<Signal> = basis.iter().map(|b| self.apply(b)).collect::<Result<_>>()?;
        Ok(CMatrix::from_fn(basis.len(), basis.len(), |m, n| {
            basis[m].dot_unchecked(&images[n])
        }))
    }

    /// Expectation `<f, M f>`.
    pub fn expectation(&self, f: &Signal) -> Result<Complex64> {
        let mf = self.apply(f)?;
        f.inner_product(&mf)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let entries = self.entries.map(|z| z * c);
        let hermitian = self.hermitian && c.im == 0.0;
        Self { grid: self.grid, entries, hermitian }
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.describe(),
                right: other.grid.describe(),
            });
        }
        OperatorMatrix::new(self.grid, &self.entries * &other.entries)
    }
}

/// Phase-space radius of the central subspace: half the smaller guard.
pub fn central_radius(grid: &TimeGrid) -> f64 {
    0.5 * grid.tau_guard().min(grid.nu_guard())
}

/// Orthonormal columns spanning the eigenstates of the discrete `X^2 + D^2`
/// whose classical orbit radius `sqrt(lambda)` is at most `radius`, in
/// ascending order. Away from this region the periodic grid supports
/// eigenstates of spreading operators that have no continuum counterpart.
pub fn central_basis(grid: &TimeGrid, radius: f64) -> Result<CMatrix> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("central radius must be positive, got {radius}")));
    }
    let eig = harmonic_oscillator(grid).eigen()?;
    let idx: Vec<usize> = (0..eig.values.len())
        .rev()
        .take_while(|&i| eig.values[i] <= radius * radius)
        .collect();
    if idx.is_empty() {
        return Err(Error::InvalidParameter(format!("no oscillator states inside radius {radius}")));
    }
    Ok(CMatrix::from_fn(grid.len(), idx.len(), |r, c| eig.vectors[(r, idx[c])]))
}

fn circulant(kernel: &[Complex64]) -> CMatrix {
    let n = kernel.len();
    CMatrix::from_fn(n, n, |j, l| kernel[(j + n - l) % n])
}

/// `(X f)(t) = t f(t)`.
pub fn position_operator(grid: &TimeGrid) -> OperatorMatrix {
    let diag = nalgebra::DVector::from_iterator(
        grid.len(),
        (0..grid.len()).map(|k| Complex64::new(grid.t(k), 0.0)),
    );
    OperatorMatrix {
        grid: *grid,
        entries: CMatrix::from_diagonal(&diag),
        hermitian: true,
    }
}

/// `D = F^* diag(f) F`, exact on band-limited signals.
pub fn momentum_operator(grid: &TimeGrid) -> OperatorMatrix {
    let kernel = spectral::spectral_kernel(grid, |f| f);
    OperatorMatrix::hermitian_part(*grid, circulant(&kernel))
}

/// `X^2 + D^2`, with `D^2 = F^* diag(f^2) F`.
pub fn harmonic_oscillator(grid: &TimeGrid) -> OperatorMatrix {
    let kernel = spectral::spectral_kernel(grid, |f| f * f);
    let mut m = circulant(&kernel);
    for k in 0..grid.len() {
        m[(k, k)] += Complex64::new(grid.t(k).powi(2), 0.0);
    }
    OperatorMatrix::hermitian_part(*grid, m)
}

/// `rho(tau, nu) = exp(2 pi i (nu X + tau D))` from the eigendecomposition of
/// the Hermitian generator `nu X + tau D`.
pub fn weyl_operator(grid: &TimeGrid, tau: f64, nu: f64) -> Result<OperatorMatrix> {
    grid.check_guard(tau, nu)?;
    if tau == 0.0 && nu == 0.0 {
        return OperatorMatrix::new(*grid, CMatrix::identity(grid.len(), grid.len()));
    }
    let x = position_operator(grid);
    let d = momentum_operator(grid);
    let generator = x.entries.scale(nu) + d.entries.scale(tau);
    let eig = HermitianEigen::new(&generator);
    OperatorMatrix::new(*grid, eig.map(|lam| spectral::cis(TAU * lam)))
}

/// Time-frequency shift `S_(tau,nu)` as a matrix, built exactly like
/// [`Signal::tf_shift`]: spectral delay followed by modulation.
pub fn shift_operator(grid: &TimeGrid, tau: f64, nu: f64) -> Result<OperatorMatrix> {
    grid.check_guard(tau, nu)?;
    let kernel = spectral::delay_kernel(grid, tau);
    let modulation = spectral::modulation(grid, nu);
    let mut m = circulant(&kernel);
    for (j, mut row) in m.row_iter_mut().enumerate() {
        row.iter_mut().for_each(|z| *z *= modulation[j]);
    }
    OperatorMatrix::new(*grid, m)
}

/// Complex-weighted node list `sum_k c_k delta(tau - tau_k, nu - nu_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spreading {
    pub nodes: Vec<(f64, f64)>,
    pub coeffs: Vec<Complex64>,
}

impl Spreading {
    pub fn new(nodes: Vec<(f64, f64)>, coeffs: Vec<Complex64>) -> Result<Self> {
        if nodes.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                expected: nodes.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { nodes, coeffs })
    }

    pub fn from_scattering(c: &ScatteringGrid) -> Self {
        Self {
            nodes: c.nodes().to_vec(),
            coeffs: c.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect(),
        }
    }

    /// Spreading of `int rho(tau0 - tau, nu - nu0) dmu(tau, nu)`: node
    /// `(tau0 - tau_k, nu_k - nu0)` with weight `w_k`.
    pub fn lower_bound(c: &ScatteringGrid, tau0: f64, nu0: f64) -> Self {
        Self {
            nodes: c.nodes().iter().map(|&(t, n)| (tau0 - t, n - nu0)).collect(),
            coeffs: c.weights().iter().map(|&w| Complex64::new(w, 0.0)).collect(),
        }
    }

    /// Sum of `|c_k|`, an upper bound for the operator norm.
    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }
}

/// `sigma(D, X) = sum_k c_k rho(tau_k, nu_k)`.
///
/// Uses the exact splitting `rho(tau, nu) = M_(nu/2) T_(-tau) M_(nu/2)`, whose
/// matrix is `e^{pi i nu (t_j + t_l)} c_(-tau)[(j - l) mod n]` with the
/// circulant delay kernel `c`. Since `T` is unitary this keeps
/// `rho(-z) = rho(z)^*` exact on the grid, and nodes that share a delay
/// collapse to one kernel times a Hankel phase factor.
pub fn from_spreading(grid: &TimeGrid, spread: &Spreading) -> Result<OperatorMatrix> {
    for &(tau, nu) in &spread.nodes {
        grid.check_guard(tau, nu)?;
    }
    let n = grid.len();
    let dt = grid.dt();
    let mut order: Vec<usize> = (0..spread.nodes.len()).collect();
    order.sort_by(|&a, &b| spread.nodes[a].0.total_cmp(&spread.nodes[b].0).then(a.cmp(&b)));
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for k in order {
        let tau = spread.nodes[k].0;
        match groups.last_mut() {
            Some((t, members)) if t.to_bits() == tau.to_bits() => members.push(k),
            _ => groups.push((tau, vec![k])),
        }
    }

    let partials: Vec<CMatrix> = groups
        .par_chunks(GROUP_CHUNK)
        .map(|chunk| {
            let mut acc = CMatrix::zeros(n, n);
            for (tau, members) in chunk {
                // hankel[s] = sum_k c_k exp(pi i nu_k (t_j + t_l)), s = j + l
                let mut hankel = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
                for &k in members {
                    let nu = spread.nodes[k].1;
                    let c = spread.coeffs[k];
                    for (s, h) in hankel.iter_mut().enumerate() {
                        *h += c * spectral::cis(PI * nu * (s as f64 - n as f64) * dt);
                    }
                }
                let kernel = spectral::delay_kernel(grid, -tau);
                for l in 0..n {
                    let mut col = acc.column_mut(l);
                    for j in 0..n {
                        col[j] += hankel[j + l] * kernel[(j + n - l) % n];
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = CMatrix::zeros(n, n);
    for p in &partials {
        total += p;
    }
    OperatorMatrix::new(*grid, total)
}

/// `int rho(tau0 - tau, nu - nu0) dmu` about the scattering centroid.
pub fn lower_bound_operator(grid: &TimeGrid, c: &ScatteringGrid, moments: &Moments) -> Result<OperatorMatrix> {
    from_spreading(grid, &Spreading::lower_bound(c, moments.tau0, moments.nu0))
}

/// `arcoth(alpha) = atanh(1 / alpha)` for `alpha > 1`.
pub fn arcoth(alpha: f64) -> f64 {
    0.5 * ((alpha + 1.0) / (alpha - 1.0)).ln()
}

/// Oscillator semigroup element `exp(-2 pi arcoth(alpha) (X^2 + D^2))`, with
/// eigenvalues `exp(-(2n + 1) arcoth(alpha))` on the Hermite functions.
pub fn oscillator_semigroup_operator(grid: &TimeGrid, alpha: f64) -> Result<OperatorMatrix> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "oscillator semigroup needs alpha > 1, got {alpha}; alpha = 1 is the rank-one projector case"
        )));
    }
    let rate = TAU * arcoth(alpha);
    let eig = harmonic_oscillator(grid).eigen()?;
    let m = eig.map(|lam| Complex64::new((-rate * lam).exp(), 0.0));
    Ok(OperatorMatrix::hermitian_part(*grid, m))
}

/// Second-order local approximation in a frame dilated by `dilation`:
///
/// `L_a = C00 + 2 pi i (C01 X / a - C10 a D) - 2 pi^2 (C02 X^2 / a^2 + C20 a^2 D^2 - C11 (XD + DX))`.
///
/// `dilation = 1` gives the undilated operator.
pub fn local_operator(grid: &TimeGrid, m: &Moments, dilation: f64) -> Result<OperatorMatrix> {
    if m.c10.abs() > CENTERING_TOL || m.c01.abs() > CENTERING_TOL {
        return Err(Error::NotCentered { c10: m.c10, c01: m.c01 });
    }
    if !(dilation > 0.0 && dilation.is_finite()) {
        return Err(Error::InvalidParameter(format!("dilation must be positive, got {dilation}")));
    }
    let a = dilation;
    let n = grid.len();
    let x = position_operator(grid).entries;
    let d = momentum_operator(grid).entries;
    let d2 = circulant(&spectral::spectral_kernel(grid, |f| f * f));
    let x2 = &x * &x;
    let xd = &x * &d;
    let sym = &xd + xd.adjoint();
    let i2pi = Complex64::new(0.0, TAU);
    let mut l = CMatrix::identity(n, n).scale(m.c00);
    l += (x.scale(m.c01 / a) - d.scale(m.c10 * a)).map(|z| z * i2pi);
    l -= (x2.scale(m.c02 / (a * a)) + d2.scale(m.c20 * a * a) - sym.scale(m.c11)).scale(2.0 * PI * PI);
    OperatorMatrix::new(*grid, l)
}

/// Undilated local operator `L`.
pub fn build_local_operator(grid: &TimeGrid, m: &Moments) -> Result<OperatorMatrix> {
    local_operator(grid, m, 1.0)
}

/// Element `(alpha, beta, phi)` of the polarized Heisenberg group, represented
/// by the upper unitriangular matrix `[[1, alpha, phi], [0, 1, beta], [0, 0, 1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergElement {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl HeisenbergElement {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Self {
        Self { alpha, beta, phi }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(1.0, self.alpha, self.phi, 0.0, 1.0, self.beta, 0.0, 0.0, 1.0)
    }

    /// Lie algebra element `h = H - 1`.
    pub fn algebra(&self) -> Matrix3<f64> {
        self.matrix() - Matrix3::identity()
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Self {
        Self::new(m[(0, 1)], m[(1, 2)], m[(0, 2)])
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self::from_matrix(&(self.matrix() * other.matrix()))
    }
}

/// `exp(h(alpha, beta, phi)) = 1 + h + h^2 / 2`; the series stops since `h^3 = 0`.
pub fn heisenberg_exp(h: &HeisenbergElement) -> Matrix3<f64> {
    let a = h.algebra();
    Matrix3::identity() + a + (a * a) * 0.5
}
