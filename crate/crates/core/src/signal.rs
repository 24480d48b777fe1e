use std::collections::HashSet;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::spectral;

/// Tail mass above which an operation refuses to treat the torus as the real line.
pub const CONTINUUM_TAIL_LIMIT: f64 = 1e-8;

/// Tail mass allowed for a generated Hermite function.
pub const HERMITE_TAIL_LIMIT: f64 = 1e-10;

/// A sampled complex pulse. Samples carry amplitude per sqrt(second), so the
/// discrete norm `sum |x_k|^2 dt` approximates the L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    grid: TimeGrid,
    samples: Vec<Complex64>,
}

impl Signal {
    pub fn new(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            samples: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..grid.len()).map(|k| f(grid.t(k))).collect();
        Self { grid, samples }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn check_same_grid(&self, other: &Signal) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.describe(),
                right: other.grid.describe(),
            });
        }
        Ok(())
    }

    /// `<self, other> = sum conj(self_k) other_k dt`.
    pub fn inner_product(&self, other: &Signal) -> Result<Complex64> {
        self.check_same_grid(other)?;
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &Signal) -> Complex64 {
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        s * self.grid.dt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Signal> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidParameter("cannot normalize a zero signal".into()));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, c: Complex64) -> Signal {
        Signal {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * c).collect(),
        }
    }

    pub fn add(&self, other: &Signal) -> Result<Signal> {
        self.check_same_grid(other)?;
        Ok(Signal {
            grid: self.grid,
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        })
    }

    pub(crate) fn axpy(&mut self, c: Complex64, other: &Signal) {
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += c * b;
        }
    }

    /// Energy in the outer 10% of the window (both sides).
    pub fn tail_mass(&self) -> f64 {
        let w = self.grid.tail_width();
        let n = self.samples.len();
        let e: f64 = self.samples[..w]
            .iter()
            .chain(&self.samples[n - w..])
            .map(|z| z.norm_sqr())
            .sum();
        e * self.grid.dt()
    }

    /// Energy in the outer 10% of the dual frequency band.
    pub fn spectral_tail_mass(&self) -> f64 {
        let mut buf = self.samples.clone();
        spectral::fft(&mut buf);
        let n = buf.len();
        let w = self.grid.tail_width();
        // bins n/2 - w .. n/2 + w are the frequencies closest to +-Nyquist
        let e: f64 = buf[n / 2 - w..n / 2 + w].iter().map(|z| z.norm_sqr()).sum();
        // Parseval: sum |X_a|^2 = n sum |x_k|^2
        e / n as f64 * self.grid.dt()
    }

    /// `(S_(tau,nu) f)(t) = exp(2 pi i nu t) f(t - tau)`.
    pub fn tf_shift(&self, tau: f64, nu: f64) -> Result<Signal> {
        self.grid.check_guard(tau, nu)?;
        Ok(self.tf_shift_unchecked(tau, nu))
    }

    pub(crate) fn tf_shift_unchecked(&self, tau: f64, nu: f64) -> Signal {
        let mut out = self.clone();
        spectral::delay_in_place(&self.grid, &mut out.samples, tau);
        spectral::modulate_in_place(&self.grid, &mut out.samples, nu);
        out
    }

    /// Adjoint (= inverse) of [`Signal::tf_shift`]: demodulate, then delay by `-tau`.
    pub fn tf_shift_inverse(&self, tau: f64, nu: f64) -> Result<Signal> {
        self.grid.check_guard(tau, nu)?;
        let mut out = self.clone();
        spectral::modulate_in_place(&self.grid, &mut out.samples, -nu);
        spectral::delay_in_place(&self.grid, &mut out.samples, -tau);
        Ok(out)
    }

    /// `(d_alpha f)(t) = f(t / alpha) / sqrt(alpha)`, evaluated by
    /// trigonometric interpolation of the sampled pulse.
    pub fn dilate(&self, alpha: f64) -> Result<Signal> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {alpha}"
            )));
        }
        if alpha == 1.0 {
            return Ok(self.clone());
        }
        let grid = self.grid;
        let n = grid.len();
        let mut coeffs = self.samples.clone();
        spectral::fft(&mut coeffs);
        let inv_n = 1.0 / n as f64;
        coeffs.iter_mut().for_each(|c| *c *= inv_n);

        let t0 = grid.t(0);
        let t_end = t0 + grid.t_span();
        let nyquist = n / 2;
        let amp = 1.0 / alpha.sqrt();
        let samples: Vec<Complex64> = (0..n)
            .map(|k| {
                let s = grid.t(k) / alpha;
                if s < t0 || s >= t_end {
                    return Complex64::new(0.0, 0.0);
                }
                let x = s - t0;
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, c) in coeffs.iter().enumerate() {
                    if a == nyquist {
                        acc += c * (TAU * grid.frequency(a) * x).cos();
                    } else {
                        acc += c * spectral::cis(TAU * grid.frequency(a) * x);
                    }
                }
                acc * amp
            })
            .collect();
        let out = Signal { grid, samples };

        let energy = self.norm_sqr().max(f64::MIN_POSITIVE);
        let tail = out.tail_mass() / energy;
        let spec_tail = out.spectral_tail_mass() / energy;
        if tail > CONTINUUM_TAIL_LIMIT || spec_tail > CONTINUUM_TAIL_LIMIT {
            return Err(Error::SupportOverflow(format!(
                "dilation by {alpha} leaves relative tail mass {tail:e} (time) / {spec_tail:e} (frequency)"
            )));
        }
        Ok(out)
    }

    /// Rotate the global phase so the largest-magnitude sample is real positive.
    pub fn phase_fixed(&self) -> Signal {
        let peak = self
            .samples
            .iter()
            .copied()
            .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        if peak.norm() == 0.0 {
            return self.clone();
        }
        self.scaled(peak.conj() / peak.norm())
    }
}

/// Free-function form of [`Signal::inner_product`].
pub fn inner_product(f: &Signal, g: &Signal) -> Result<Complex64> {
    f.inner_product(g)
}

/// Hermite function `h_n` with `h_0(t) = 2^(1/4) exp(-pi t^2)`, so that
/// `(X^2 + D^2) h_n = (2n + 1) / (2 pi) h_n` for `D = (1 / 2 pi i) d/dt`.
pub fn hermite(grid: &TimeGrid, n: usize) -> Result<Signal> {
    hermite_family(grid, n).map(|mut v| v.pop().expect("family is non-empty"))
}

/// `h_0 ..= h_n`, generated by the three-term recurrence in `x = sqrt(2 pi) t`.
pub fn hermite_family(grid: &TimeGrid, n: usize) -> Result<Vec<Signal>> {
    let scale = TAU.sqrt();
    let norm0 = TAU.powf(0.25) * PI.powf(-0.25);
    let len = grid.len();
    let mut out: Vec<Vec<Complex64>> = vec![Vec::with_capacity(len); n + 1];
    for k in 0..len {
        let x = scale * grid.t(k);
        let mut prev = 0.0;
        let mut cur = norm0 * (-0.5 * x * x).exp();
        out[0].push(Complex64::new(cur, 0.0));
        for m in 0..n {
            let next = (2.0 / (m as f64 + 1.0)).sqrt() * x * cur
                - (m as f64 / (m as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            out[m + 1].push(Complex64::new(cur, 0.0));
        }
    }
    let family: Vec<Signal> = out
        .into_iter()
        .map(|samples| Signal { grid: *grid, samples })
        .collect();
    let last = family.last().expect("n + 1 >= 1 entries");
    let tail = last.tail_mass().max(last.spectral_tail_mass());
    if tail > HERMITE_TAIL_LIMIT {
        return Err(Error::SupportOverflow(format!(
            "h_{n} has tail mass {tail:e} on grid ({}); limit {HERMITE_TAIL_LIMIT:e}",
            grid.describe()
        )));
    }
    Ok(family)
}

/// Rectangular Gabor lattice `T Z x F Z` restricted to a finite index set of
/// `(m, n)` pairs: `m` counts frequency steps, `n` counts time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeParams {
    time_step: f64,
    freq_step: f64,
    index_set: Vec<(i32, i32)>,
}

impl LatticeParams {
    pub fn new(time_step: f64, freq_step: f64, index_set: Vec<(i32, i32)>) -> Result<Self> {
        if !(time_step > 0.0 && freq_step > 0.0 && time_step.is_finite() && freq_step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lattice steps must be positive, got T={time_step}, F={freq_step}"
            )));
        }
        if index_set.is_empty() {
            return Err(Error::InvalidParameter("lattice index set is empty".into()));
        }
        let mut seen = HashSet::new();
        for p in &index_set {
            if !seen.insert(*p) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate lattice index (m={}, n={})",
                    p.0, p.1
                )));
            }
        }
        Ok(Self {
            time_step,
            freq_step,
            index_set,
        })
    }

    /// All `(m, n)` with `|m|, |n| <= radius`, ordered row-major in `m`.
    pub fn square(time_step: f64, freq_step: f64, radius: u32) -> Result<Self> {
        let r = radius as i32;
        let set = (-r..=r).flat_map(|m| (-r..=r).map(move |n| (m, n))).collect();
        Self::new(time_step, freq_step, set)
    }

    #[inline]
    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    #[inline]
    pub fn freq_step(&self) -> f64 {
        self.freq_step
    }

    pub fn index_set(&self) -> &[(i32, i32)] {
        &self.index_set
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    /// `(tau, nu) = (n T, m F)` for index `(m, n)`.
    pub fn shift_of(&self, (m, n): (i32, i32)) -> (f64, f64) {
        (n as f64 * self.time_step, m as f64 * self.freq_step)
    }

    pub fn position(&self, idx: (i32, i32)) -> Option<usize> {
        self.index_set.iter().position(|&p| p == idx)
    }

    pub fn check_guard(&self, grid: &TimeGrid) -> Result<()> {
        for &idx in &self.index_set {
            let (tau, nu) = self.shift_of(idx);
            grid.check_guard(tau, nu)?;
        }
        Ok(())
    }

    /// `gamma_mn = S_(nT, mF) gamma` for every index in order.
    pub fn family(&self, gamma: &Signal) -> Result<Vec<Signal>> {
        self.check_guard(gamma.grid())?;
        Ok(self
            .index_set
            .iter()
            .map(|&idx| {
                let (tau, nu) = self.shift_of(idx);
                gamma.tf_shift_unchecked(tau, nu)
            })
            .collect())
    }
}

/// `s = sum_(m,n) x_mn S_(nT, mF) gamma`.
pub fn gabor_synthesize(gamma: &Signal, lattice: &LatticeParams, symbols: &[Complex64]) -> Result<Signal> {
    if symbols.len() != lattice.len() {
        return Err(Error::LengthMismatch {
            expected: lattice.len(),
            got: symbols.len(),
        });
    }
    let family = lattice.family(gamma)?;
    let mut out = Signal::zeros(*gamma.grid());
    for (x, g) in symbols.iter().zip(&family) {
        out.axpy(*x, g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> TimeGrid {
        TimeGrid::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Smooth localized test pulse: a random Hermite combination.
    fn pulse(coeffs: &[(f64, f64)]) -> Signal {
        let hs = hermite_family(&grid(), coeffs.len() - 1).unwrap();
        let mut s = Signal::zeros(grid());
        for (h, &(re, im)) in hs.iter().zip(coeffs) {
            s.axpy(c(re, im), h);
        }
        s.normalized().unwrap()
    }

    #[test]
    fn hermite_normalization_and_orthogonality() {
        let g = grid();
        let h0 = hermite(&g, 0).unwrap();
        let h1 = hermite(&g, 1).unwrap();
        assert!((h0.inner_product(&h0).unwrap() - c(1.0, 0.0)).norm() < 1e-12);
        assert!(h0.inner_product(&h1).unwrap().norm() < 1e-10);
        assert!((h0.samples()[128].re - 2f64.powf(0.25)).abs() < 1e-9);
    }

    #[test]
    fn hermite_gram_is_identity() {
        let hs = hermite_family(&grid(), 8).unwrap();
        for (m, hm) in hs.iter().enumerate() {
            for (n, hn) in hs.iter().enumerate() {
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((hm.inner_product(hn).unwrap() - c(want, 0.0)).norm() < 1e-9, "({m},{n})");
            }
        }
    }

    #[test]
    fn hermite_too_large_for_grid() {
        let small = TimeGrid::new(32, 4.0).unwrap();
        let err = hermite(&small, 30).unwrap_err();
        assert!(matches!(err, Error::SupportOverflow(_)), "{err}");
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let a = hermite(&grid(), 0).unwrap();
        let b = hermite(&TimeGrid::new(128, 16.0).unwrap(), 0).unwrap();
        assert!(matches!(a.inner_product(&b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn zero_shift_is_identity() {
        let f = pulse(&[(0.3, 0.1), (0.5, -0.2), (0.1, 0.4)]);
        assert_eq!(f.tf_shift(0.0, 0.0).unwrap(), f);
    }

    #[test]
    fn shift_guard() {
        let f = hermite(&grid(), 0).unwrap();
        assert!(matches!(f.tf_shift(4.5, 0.0), Err(Error::OutOfGuard { .. })));
        assert!(matches!(f.tf_shift(0.0, -4.0), Err(Error::OutOfGuard { .. })));
    }

    #[test]
    fn shift_inverse_roundtrip() {
        let f = pulse(&[(0.3, 0.1), (0.5, -0.2), (0.1, 0.4)]);
        let g = f.tf_shift(0.37, -0.81).unwrap().tf_shift_inverse(0.37, -0.81).unwrap();
        let err: f64 = f.samples().iter().zip(g.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn dilation_of_gaussian_matches_closed_form() {
        let g = grid();
        let h0 = hermite(&g, 0).unwrap();
        for alpha in [0.5, 0.8, 1.7, 2.0] {
            let d = h0.dilate(alpha).unwrap();
            for k in 0..g.len() {
                let t = g.t(k) / alpha;
                let want = 2f64.powf(0.25) * (-PI * t * t).exp() / alpha.sqrt();
                assert!((d.samples()[k] - c(want, 0.0)).norm() < 1e-8, "alpha {alpha} k {k}");
            }
            assert!((d.norm() - 1.0).abs() < 1e-10);
        }
        assert_eq!(h0.dilate(1.0).unwrap(), h0);
    }

    #[test]
    fn dilation_errors() {
        let h0 = hermite(&grid(), 0).unwrap();
        assert!(matches!(h0.dilate(0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(h0.dilate(-1.0), Err(Error::InvalidParameter(_))));
        // Gaussian of width 8 runs off the 16 s window
        assert!(matches!(h0.dilate(8.0), Err(Error::SupportOverflow(_))));
        // and width 1/8 runs off the band
        assert!(matches!(h0.dilate(0.125), Err(Error::SupportOverflow(_))));
    }

    #[test]
    fn dilation_inverse() {
        let f = pulse(&[(0.3, 0.1), (0.5, -0.2), (0.1, 0.4), (0.0, 0.2)]);
        for alpha in [0.6, 1.5] {
            let back = f.dilate(alpha).unwrap().dilate(1.0 / alpha).unwrap();
            let err: f64 = f.samples().iter().zip(back.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err < 1e-8, "alpha {alpha}: {err:e}");
        }
    }

    #[test]
    fn synthesis_single_symbol_is_identity() {
        let gamma = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::new(1.0, 1.0, vec![(0, 0)]).unwrap();
        let s = gabor_synthesize(&gamma, &lat, &[c(1.0, 0.0)]).unwrap();
        assert_eq!(s, gamma);
    }

    #[test]
    fn synthesis_far_separated_energy() {
        let gamma = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::new(3.5, 3.5, vec![(0, -1), (1, 1)]).unwrap();
        let x = [c(0.6, -0.3), c(-1.1, 0.4)];
        let s = gabor_synthesize(&gamma, &lat, &x).unwrap();
        let want: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        // overlap of the two atoms is exp(-pi (7^2 + 3.5^2) / 2), far below 1e-6
        assert!((s.norm_sqr() - want).abs() < 1e-6);
    }

    #[test]
    fn synthesis_errors() {
        let gamma = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::square(1.0, 1.0, 1).unwrap();
        assert!(matches!(
            gabor_synthesize(&gamma, &lat, &[c(1.0, 0.0)]),
            Err(Error::LengthMismatch { expected: 9, got: 1 })
        ));
        let wide = LatticeParams::square(2.5, 1.0, 2).unwrap();
        assert!(matches!(
            gabor_synthesize(&gamma, &wide, &vec![c(1.0, 0.0); 25]),
            Err(Error::OutOfGuard { .. })
        ));
        assert!(LatticeParams::new(1.0, 1.0, vec![(0, 0), (0, 0)]).is_err());
        assert!(LatticeParams::new(0.0, 1.0, vec![(0, 0)]).is_err());
    }

    fn coeffs() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..6)
            .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn inner_product_hermitian_symmetry(a in coeffs(), b in coeffs()) {
            let f = pulse(&a);
            let g = pulse(&b);
            let fg = f.inner_product(&g).unwrap();
            let gf = g.inner_product(&f).unwrap();
            prop_assert!((fg - gf.conj()).norm() < 1e-14);
            prop_assert!(f.inner_product(&f).unwrap().im.abs() < 1e-15);
        }

        #[test]
        fn shift_is_unitary(a in coeffs(), tau in -3.9..3.9f64, nu in -3.9..3.9f64) {
            let f = pulse(&a);
            let s = f.tf_shift(tau, nu).unwrap();
            prop_assert!((s.norm() - f.norm()).abs() < 1e-12);
        }

        #[test]
        fn shift_group_law(
            a in coeffs(),
            t1 in -1.5..1.5f64, n1 in -1.5..1.5f64,
            t2 in -1.5..1.5f64, n2 in -1.5..1.5f64,
        ) {
            // S_(a,b) S_(c,d) = exp(-2 pi i a d) S_(a+c, b+d)
            let f = pulse(&a);
            let lhs = f.tf_shift(t2, n2).unwrap().tf_shift(t1, n1).unwrap();
            let rhs = f.tf_shift(t1 + t2, n1 + n2).unwrap().scaled(spectral::cis(-TAU * t1 * n2));
            let err = lhs.samples().iter().zip(rhs.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10, "err {:e}", err);
        }

        #[test]
        fn synthesis_is_linear(
            x in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9),
            y in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9),
        ) {
            let gamma = hermite(&grid(), 0).unwrap();
            let lat = LatticeParams::square(1.0, 1.0, 1).unwrap();
            let xs: Vec<_> = x.iter().map(|&(a, b)| c(a, b)).collect();
            let ys: Vec<_> = y.iter().map(|&(a, b)| c(a, b)).collect();
            let sum: Vec<_> = xs.iter().zip(&ys).map(|(a, b)| a + b).collect();
            let lhs = gabor_synthesize(&gamma, &lat, &sum).unwrap();
            let rhs = gabor_synthesize(&gamma, &lat, &xs).unwrap()
                .add(&gabor_synthesize(&gamma, &lat, &ys).unwrap()).unwrap();
            let err = lhs.samples().iter().zip(rhs.samples()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            prop_assert!(err < 1e-12);
        }
    }

    #[test]
    fn split_shift_phase_relation() {
        // S_(0,nu) S_(tau,0) f vs S_(tau,0) S_(0,nu) f differ by exp(-2 pi i tau nu)
        let f = pulse(&[(0.2, 0.0), (0.7, 0.3), (0.0, -0.4)]);
        let (tau, nu) = (0.73, -1.21);
        let time_first = f.tf_shift(tau, 0.0).unwrap().tf_shift(0.0, nu).unwrap();
        let freq_first = f.tf_shift(0.0, nu).unwrap().tf_shift(tau, 0.0).unwrap();
        let rhs = time_first.scaled(spectral::cis(-TAU * tau * nu));
        let err = freq_first.samples().iter().zip(rhs.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err:e}");
    }
}
