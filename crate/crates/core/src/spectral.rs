//! FFT plumbing shared by the signal and operator modules.

use std::cell::RefCell;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::TimeGrid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

/// Normalized inverse transform.
pub(crate) fn ifft(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()).process(buf));
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
}

#[inline]
pub(crate) fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// `x(t) -> x(t - tau)` as a periodic band-limited delay.
pub(crate) fn delay_in_place(grid: &TimeGrid, x: &mut [Complex64], tau: f64) {
    if tau == 0.0 {
        return;
    }
    fft(x);
    for (a, z) in x.iter_mut().enumerate() {
        *z *= cis(-TAU * grid.frequency(a) * tau);
    }
    ifft(x);
}

/// `x(t) -> exp(2 pi i nu t) x(t)`.
pub(crate) fn modulate_in_place(grid: &TimeGrid, x: &mut [Complex64], nu: f64) {
    if nu == 0.0 {
        return;
    }
    for (k, z) in x.iter_mut().enumerate() {
        *z *= cis(TAU * nu * grid.t(k));
    }
}

pub(crate) fn modulation(grid: &TimeGrid, nu: f64) -> Vec<Complex64> {
    (0..grid.len()).map(|k| cis(TAU * nu * grid.t(k))).collect()
}

/// First column of the circulant delay matrix: `(T_tau x)_j = sum_l c[(j - l) mod n] x_l`.
pub(crate) fn delay_kernel(grid: &TimeGrid, tau: f64) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..grid.len())
        .map(|a| cis(-TAU * grid.frequency(a) * tau))
        .collect();
    ifft(&mut c);
    c
}

/// Same circulant construction for an arbitrary real multiplier on the frequency axis.
pub(crate) fn spectral_kernel(grid: &TimeGrid, symbol: impl Fn(f64) -> f64) -> Vec<Complex64> {
    let mut c: Vec<Complex64> = (0..grid.len())
        .map(|a| Complex64::new(symbol(grid.frequency(a)), 0.0))
        .collect();
    ifft(&mut c);
    c
}
