//! Monte-Carlo WSSUS channels: Rayleigh-faded scatterers on the quadrature
//! nodes of a scattering function, channel matrices on a Gabor lattice and
//! ensemble estimates of gain, interference and SINR.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cp_map::ambiguity_on_nodes;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::scattering::ScatteringGrid;
use crate::signal::{LatticeParams, Signal};

/// Reported SINR when both noise and interference vanish.
pub const SINR_CAP: f64 = 1e12;

/// Interference below this counts as zero for the SINR cap.
pub const INTERFERENCE_FLOOR: f64 = 1e-12;

pub const MIN_REALIZATIONS: usize = 100;

const REALIZATION_CHUNK: usize = 256;

/// One draw of the spreading function on the scattering nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub nodes: Vec<(f64, f64)>,
    /// Circular Gaussian, `E|g_k|^2 = w_k`.
    pub gains: Vec<Complex64>,
}

fn draw_gains(weights: &[f64], seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    weights
        .iter()
        .map(|&w| {
            let s = (0.5 * w).sqrt();
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(s * re, s * im)
        })
        .collect()
}

/// Seed of realization `r` in an ensemble seeded by `seed`.
pub fn realization_seed(seed: u64, r: u64) -> u64 {
    seed ^ r
}

pub fn draw_channel(c: &ScatteringGrid, seed: u64) -> ChannelRealization {
    ChannelRealization {
        nodes: c.nodes().to_vec(),
        gains: draw_gains(c.weights(), seed),
    }
}

/// `sum_k g_k S_k s`, noiseless.
pub fn apply_channel(h: &ChannelRealization, s: &Signal) -> Result<Signal> {
    let grid = *s.grid();
    for &(tau, nu) in &h.nodes {
        grid.check_guard(tau, nu)?;
    }
    let mut out = Signal::zeros(grid);
    for (&(tau, nu), &gain) in h.nodes.iter().zip(&h.gains) {
        out.axpy(gain, &s.tf_shift_unchecked(tau, nu));
    }
    Ok(out)
}

/// `H[(kl), (mn)] = <g_kl, H gamma_mn>` over the lattice index set, rows and
/// columns in index-set order.
pub fn channel_matrix(h: &ChannelRealization, g: &Signal, gamma: &Signal, lattice: &LatticeParams) -> Result<CMatrix> {
    g.check_same_grid(gamma)?;
    let gs = lattice.family(g)?;
    let gammas = lattice.family(gamma)?;
    let outputs: Vec<Signal> = gammas.par_iter().map(|f| apply_channel(h, f)).collect::<Result<_>>()?;
    let n = lattice.len();
    Ok(CMatrix::from_fn(n, n, |r, c| gs[r].dot_unchecked(&outputs[c])))
}

/// Gram matrix `<gamma_i, gamma_j>` of the truncated Gabor family.
pub fn gram_matrix(gamma: &Signal, lattice: &LatticeParams) -> Result<CMatrix> {
    let fam = lattice.family(gamma)?;
    let n = fam.len();
    Ok(CMatrix::from_fn(n, n, |i, j| fam[i].dot_unchecked(&fam[j])))
}

/// Largest Gram eigenvalue: the Bessel bound of the truncated family, a lower
/// estimate of the full-lattice bound.
pub fn bessel_bound(gamma: &Signal, lattice: &LatticeParams) -> Result<f64> {
    let gram = gram_matrix(gamma, lattice)?;
    Ok(HermitianEigen::new(&gram).values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    #[serde(rename = "E_a")]
    pub e_a: f64,
    #[serde(rename = "E_b")]
    pub e_b: f64,
    pub sinr: f64,
    pub bessel_bound: f64,
    pub n_realizations: usize,
    /// Standard error of `E_a`.
    pub mc_stderr: f64,
    /// Standard error of `E_b`.
    pub mc_stderr_b: f64,
    pub sigma2: f64,
}

impl FidelityReport {
    /// `E_b <= B - E_a + 3 stderr`.
    pub fn relaxation_holds(&self) -> bool {
        self.e_b <= self.bessel_bound - self.e_a + 3.0 * self.mc_stderr
    }
}

/// `E_a / (sigma2 + E_b)`, capped at [`SINR_CAP`] in the noiseless,
/// interference-free case.
pub fn sinr(e_a: f64, e_b: f64, sigma2: f64) -> f64 {
    if sigma2 == 0.0 && e_b < INTERFERENCE_FLOOR {
        return SINR_CAP;
    }
    (e_a / (sigma2 + e_b)).min(SINR_CAP)
}

/// Per-realization values `a = |H_00,00|^2` and `b = sum_(mn != 00) |H_00,mn|^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub realization_id: u64,
    pub a: f64,
    pub b: f64,
}

/// Ensemble estimate of gain, interference and SINR for the receiver at
/// lattice index `(0, 0)`.
pub fn estimate_sinr(
    c: &ScatteringGrid,
    g: &Signal,
    gamma: &Signal,
    lattice: &LatticeParams,
    sigma2: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<FidelityReport> {
    Ok(estimate_sinr_with_traces(c, g, gamma, lattice, sigma2, n_realizations, seed)?.0)
}

pub fn estimate_sinr_with_traces(
    c: &ScatteringGrid,
    g: &Signal,
    gamma: &Signal,
    lattice: &LatticeParams,
    sigma2: f64,
    n_realizations: usize,
    seed: u64,
) -> Result<(FidelityReport, Vec<Trace>)> {
    if n_realizations < MIN_REALIZATIONS {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_REALIZATIONS} realizations, got {n_realizations}"
        )));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance must be nonnegative, got {sigma2}")));
    }
    c.check_normalized()?;
    let center = lattice
        .position((0, 0))
        .ok_or_else(|| Error::InvalidParameter("lattice index set must contain (0, 0)".into()))?;
    let family = lattice.family(gamma)?;
    // amb[mn][k] = <g, S_k gamma_mn>, so H_00,mn = sum_k gain_k amb[mn][k]
    let amb: Vec<Vec<Complex64>> = family
        .iter()
        .map(|f| ambiguity_on_nodes(c, g, f))
        .collect::<Result<_>>()?;

    let ids: Vec<u64> = (0..n_realizations as u64).collect();
    let traces: Vec<Trace> = ids
        .par_chunks(REALIZATION_CHUNK)
        .flat_map_iter(|chunk| {
            chunk.iter().map(|&r| {
                let gains = draw_gains(c.weights(), realization_seed(seed, r));
                let mut a = 0.0;
                let mut b = 0.0;
                for (mn, row) in amb.iter().enumerate() {
                    let h: Complex64 = row.iter().zip(&gains).map(|(x, y)| x * y).sum();
                    if mn == center {
                        a = h.norm_sqr();
                    } else {
                        b += h.norm_sqr();
                    }
                }
                Trace { realization_id: r, a, b }
            })
        })
        .collect();

    let n = n_realizations as f64;
    let (sa, sb) = traces.iter().fold((0.0, 0.0), |(x, y), t| (x + t.a, y + t.b));
    let (e_a, e_b) = (sa / n, sb / n);
    let (va, vb) = traces.iter().fold((0.0, 0.0), |(x, y), t| {
        (x + (t.a - e_a).powi(2), y + (t.b - e_b).powi(2))
    });
    let report = FidelityReport {
        e_a,
        e_b,
        sinr: sinr(e_a, e_b, sigma2),
        bessel_bound: bessel_bound(gamma, lattice)?,
        n_realizations,
        mc_stderr: (va / (n - 1.0) / n).sqrt(),
        mc_stderr_b: (vb / (n - 1.0) / n).sqrt(),
        sigma2,
    };
    Ok((report, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cp_map::fidelity;
    use crate::grid::TimeGrid;
    use crate::signal::{hermite, hermite_family};

    fn grid() -> TimeGrid {
        TimeGrid::default()
    }

    #[test]
    fn draw_is_deterministic() {
        let c = ScatteringGrid::gaussian(2.0, 16).unwrap();
        assert_eq!(draw_channel(&c, 42), draw_channel(&c, 42));
        assert_ne!(draw_channel(&c, 42), draw_channel(&c, 43));
    }

    #[test]
    fn gain_statistics() {
        let c = ScatteringGrid::gaussian(2.0, 8).unwrap();
        let draws = 10_000;
        let k = c.len();
        let mut power = vec![0.0; k];
        let mut cross = Vec::with_capacity(draws);
        for r in 0..draws as u64 {
            let h = draw_channel(&c, realization_seed(99, r));
            for (p, g) in power.iter_mut().zip(&h.gains) {
                *p += g.norm_sqr();
            }
            cross.push(h.gains[0] * h.gains[1].conj());
        }
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| c.weights()[b].total_cmp(&c.weights()[a]));
        for &i in order.iter().take(10) {
            let est = power[i] / draws as f64;
            let w = c.weights()[i];
            assert!(((est - w) / w).abs() < 0.05, "node {i}: {est} vs {w}");
        }
        let mean: Complex64 = cross.iter().sum::<Complex64>() / draws as f64;
        let var: f64 = cross.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (draws - 1) as f64;
        let se = (var / draws as f64).sqrt();
        assert!(mean.norm() < 3.0 * se * 2f64.sqrt(), "{mean} vs {se}");
    }

    #[test]
    fn identity_channel_passes_signal() {
        let f = hermite(&grid(), 2).unwrap();
        let h = ChannelRealization {
            nodes: vec![(0.0, 0.0)],
            gains: vec![Complex64::new(1.0, 0.0)],
        };
        assert_eq!(apply_channel(&h, &f).unwrap(), f);
    }

    #[test]
    fn channel_is_linear() {
        let hs = hermite_family(&grid(), 1).unwrap();
        let c = ScatteringGrid::rectangular(0.5, 0.5, 4).unwrap();
        let h = draw_channel(&c, 3);
        let z = Complex64::new(0.3, -1.2);
        let lhs = apply_channel(&h, &hs[0].add(&hs[1].scaled(z)).unwrap()).unwrap();
        let rhs = apply_channel(&h, &hs[0]).unwrap().add(&apply_channel(&h, &hs[1]).unwrap().scaled(z)).unwrap();
        let err = lhs.samples().iter().zip(rhs.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn projection_matches_ambiguity_sum() {
        let g = hermite(&grid(), 0).unwrap();
        let gamma = hermite(&grid(), 1).unwrap();
        let c = ScatteringGrid::rectangular(0.6, 0.4, 5).unwrap();
        let h = draw_channel(&c, 11);
        let direct = g.inner_product(&apply_channel(&h, &gamma).unwrap()).unwrap();
        let amb = ambiguity_on_nodes(&c, &g, &gamma).unwrap();
        let via: Complex64 = amb.iter().zip(&h.gains).map(|(a, b)| a * b).sum();
        assert!((direct - via).norm() < 1e-10);
    }

    #[test]
    fn single_scatterer_diagonal_is_lattice_invariant() {
        let g = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::square(2.0, 2.0, 1).unwrap();
        let h = ChannelRealization {
            nodes: vec![(0.3, -0.2)],
            gains: vec![Complex64::new(0.8, 0.6)],
        };
        let m = channel_matrix(&h, &g, &g, &lat).unwrap();
        let want = crate::cp_map::ambiguity(&g, &g, 0.3, -0.2).unwrap().norm();
        for i in 0..lat.len() {
            assert!((m[(i, i)].norm() - want).abs() < 1e-8, "{i}");
        }
    }

    #[test]
    fn bessel_bound_cases() {
        let h0 = hermite(&grid(), 0).unwrap();
        let one = LatticeParams::new(1.0, 1.0, vec![(0, 0)]).unwrap();
        assert!((bessel_bound(&h0, &one).unwrap() - 1.0).abs() < 1e-12);
        let wide = LatticeParams::square(3.5, 3.5, 1).unwrap();
        assert!((bessel_bound(&h0, &wide).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn estimate_requires_enough_realizations() {
        let c = ScatteringGrid::point_mass(0.0, 0.0);
        let h0 = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::square(2.0, 2.0, 1).unwrap();
        assert!(estimate_sinr(&c, &h0, &h0, &lat, 0.1, 10, 1).is_err());
        let no_center = LatticeParams::new(2.0, 2.0, vec![(1, 0)]).unwrap();
        assert!(estimate_sinr(&c, &h0, &h0, &no_center, 0.1, 200, 1).is_err());
    }

    #[test]
    fn estimate_is_reproducible_and_consistent() {
        let c = ScatteringGrid::gaussian(2.0, 16).unwrap();
        let h0 = hermite(&grid(), 0).unwrap();
        let lat = LatticeParams::square(2.0, 2.0, 1).unwrap();
        let a = estimate_sinr(&c, &h0, &h0, &lat, 0.1, 2000, 5).unwrap();
        let b = estimate_sinr(&c, &h0, &h0, &lat, 0.1, 2000, 5).unwrap();
        assert_eq!(a, b);
        let q = fidelity(&c, &h0, &h0).unwrap();
        assert!((a.e_a - q).abs() < 3.0 * a.mc_stderr, "{} vs {q} ({})", a.e_a, a.mc_stderr);
        assert_eq!(a.sinr, a.e_a / (0.1 + a.e_b));
        assert!(a.relaxation_holds());
    }

    #[test]
    fn sinr_cap() {
        assert_eq!(sinr(1.0, 0.0, 0.0), SINR_CAP);
        assert_eq!(sinr(1.0, 1.0, 1.0), 0.5);
    }
}
