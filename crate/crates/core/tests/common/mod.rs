#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wssus_core::cp_map::DensityOperator;
use wssus_core::signal::hermite_family;
use wssus_core::{Complex64, Signal, TimeGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Unit-norm random combination of `h_0 .. h_degree`, so the pulse stays
/// well inside the window and the band.
pub fn random_pulse(grid: &TimeGrid, degree: usize, rng: &mut ChaCha8Rng) -> Signal {
    let hs = hermite_family(grid, degree).unwrap();
    let mut s = Signal::zeros(*grid);
    for h in &hs {
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        s = s.add(&h.scaled(c)).unwrap();
    }
    s.normalized().unwrap()
}

/// Mixture of a few random pulses with random probabilities.
pub fn random_density(grid: &TimeGrid, rng: &mut ChaCha8Rng) -> DensityOperator {
    let k = rng.random_range(1..=3);
    let pulses: Vec<Signal> = (0..k).map(|_| random_pulse(grid, 5, rng)).collect();
    let mut p: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    DensityOperator::mixture(&pulses, &p).unwrap()
}

pub fn max_abs_diff(a: &Signal, b: &Signal) -> f64 {
    a.samples().iter().zip(b.samples()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Composite Simpson rule on `[a, b]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Laguerre polynomial `L_n(x)` by the three-term recurrence.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, 1.0 - x);
    if n == 0 {
        return a;
    }
    for k in 1..n {
        let k = k as f64;
        let c = ((2.0 * k + 1.0 - x) * b - k * a) / (k + 1.0);
        a = b;
        b = c;
    }
    b
}
