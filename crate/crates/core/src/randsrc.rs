//! Seeded Haar-random states and unitaries.
//!
//! Every sample draws from its own ChaCha20 stream: the key is expanded from
//! the master seed and the stream id is the sample index. Outputs are
//! therefore a pure function of `(master_seed, sample_index)` and do not
//! depend on generation order or thread count. The generator
//! (`rand_chacha` 0.9.0, `seed_from_u64` key expansion) and the normal
//! sampler (`rand_distr` 0.5.1 `StandardNormal`) are pinned exactly in the
//! manifest because the acceptance tests fix seeds.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{householder_qr, CMatrix, CVector};
use crate::scalar::{phase, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub sample_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, sample_index: u64) -> Self {
        Self {
            master_seed,
            sample_index,
        }
    }

    /// Independent generator for this sample.
    pub fn rng(&self) -> ChaCha20Rng {
        let mut rng = ChaCha20Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.sample_index);
        rng.set_word_pos(0);
        rng
    }
}

/// Mixes a master seed with labels into a fresh master seed (SplitMix64
/// finalizer chained over the labels). Used to give trials, time points and
/// channel draws unrelated key material.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    labels.iter().fold(mix(master), |acc, &l| mix(acc ^ mix(l)))
}

fn complex_gaussians<T: Real>(rng: &mut ChaCha20Rng, n: usize) -> Vec<Complex<T>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(T::lit(re * scale), T::lit(im * scale))
        })
        .collect()
}

/// Haar-random pure state: normalized vector of i.i.d. complex Gaussians.
pub fn haar_state<T: Real>(d: usize, seed: SeedSpec) -> Result<CVector<T>> {
    if d == 0 {
        return Err(Error::DimensionTooSmall { min: 1, got: 0 });
    }
    let mut rng = seed.rng();
    loop {
        let v = CVector::new(complex_gaussians(&mut rng, d));
        let n = v.norm();
        if n > T::zero() {
            return Ok(v.scale_real(T::one() / n));
        }
    }
}

/// Haar-random unitary: QR of a complex Ginibre matrix, with each column of
/// `Q` multiplied by the phase of the matching diagonal entry of `R`.
pub fn haar_unitary<T: Real>(d: usize, seed: SeedSpec) -> Result<CMatrix<T>> {
    if d == 0 {
        return Err(Error::DimensionTooSmall { min: 1, got: 0 });
    }
    let mut rng = seed.rng();
    let g = CMatrix::from_vec(d, d, complex_gaussians(&mut rng, d * d))?;
    let (q, r) = householder_qr(&g);
    let phases: Vec<Complex<T>> = (0..d).map(|i| phase(r[(i, i)])).collect();
    Ok(CMatrix::from_fn(d, d, |i, j| q[(i, j)] * phases[j]))
}

/// Closed-form Haar average `∫dV V†XV·Y·V†ZV` over `U(D)`.
pub fn haar_second_moment_oracle<T: Real>(
    x: &CMatrix<T>,
    y: &CMatrix<T>,
    z: &CMatrix<T>,
    d: usize,
) -> Result<CMatrix<T>> {
    if d < 2 {
        return Err(Error::DimensionTooSmall { min: 2, got: d });
    }
    for m in [x, y, z] {
        if m.shape() != (d, d) {
            return Err(crate::error::mismatch(
                "haar_second_moment_oracle",
                format!("{d}x{d}"),
                format!("{}x{}", m.rows(), m.cols()),
            ));
        }
    }
    let dd = T::from_usize(d).unwrap();
    let den = dd * dd - T::one();
    let (tx, ty, tz) = (x.trace(), y.trace(), z.trace());
    let txz = x.trace_product(z);
    let coef_y = tx * tz / den - txz / (dd * den);
    let coef_i = txz * ty / den - tx * tz * ty / (dd * den);
    let mut out = y.scale(coef_y);
    for i in 0..d {
        out[(i, i)] += coef_i;
    }
    Ok(out)
}
