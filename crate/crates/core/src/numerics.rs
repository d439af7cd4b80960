//! Complex vector algebra, Gaussian tail utilities, correlated complex-Gaussian
//! sampling and deterministic random streams.

use std::f64::consts::{PI, SQRT_2};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex baseband vector stored as separate real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexVec {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::shape(format!(
                "real part has {} entries, imaginary part {}",
                re.len(),
                im.len()
            )));
        }
        Ok(Self { re, im })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    /// Builds a vector from `2n` reals laid out as `[re_0..re_{n-1}, im_0..im_{n-1}]`.
    pub fn from_split(values: &[f64]) -> Result<Self> {
        if values.len() % 2 != 0 {
            return Err(Error::shape(format!(
                "split layout needs an even number of reals, got {}",
                values.len()
            )));
        }
        let n = values.len() / 2;
        Ok(Self {
            re: values[..n].to_vec(),
            im: values[n..].to_vec(),
        })
    }

    /// Writes the split layout into `out` (length `2n`).
    pub fn write_split(&self, out: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(out.len(), 2 * n);
        out[..n].copy_from_slice(&self.re);
        out[n..].copy_from_slice(&self.im);
    }

    pub fn to_split(&self) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.len()];
        self.write_split(&mut out);
        out
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.re, &mut self.im)
    }

    pub fn get(&self, k: usize) -> (f64, f64) {
        (self.re[k], self.im[k])
    }

    pub fn set(&mut self, k: usize, value: (f64, f64)) {
        self.re[k] = value.0;
        self.im[k] = value.1;
    }

    /// Σ |v_k|².
    pub fn energy(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r * r + i * i)
            .sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.re.iter_mut().for_each(|v| *v *= factor);
        self.im.iter_mut().for_each(|v| *v *= factor);
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale(factor);
        out
    }

    /// Multiplies every entry by the complex scalar `c`.
    pub fn scale_complex(&mut self, c: (f64, f64)) {
        for (r, i) in self.re.iter_mut().zip(self.im.iter_mut()) {
            let (a, b) = (*r, *i);
            *r = a * c.0 - b * c.1;
            *i = a * c.1 + b * c.0;
        }
    }

    pub fn add_assign(&mut self, other: &ComplexVec) -> Result<()> {
        self.check_len(other)?;
        self.re.iter_mut().zip(&other.re).for_each(|(a, b)| *a += b);
        self.im.iter_mut().zip(&other.im).for_each(|(a, b)| *a += b);
        Ok(())
    }

    /// Hermitian inner product `selfᴴ · other` = Σ conj(self_k)·other_k.
    pub fn inner(&self, other: &ComplexVec) -> Result<(f64, f64)> {
        self.check_len(other)?;
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..self.len() {
            let (a, b) = (self.re[k], -self.im[k]);
            let (c, d) = (other.re[k], other.im[k]);
            re += a * c - b * d;
            im += a * d + b * c;
        }
        Ok((re, im))
    }

    fn check_len(&self, other: &ComplexVec) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::shape(format!(
                "vector lengths differ: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }
}

/// Gaussian upper-tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!(
            "q_function argument {x} is not finite"
        )));
    }
    Ok(0.5 * libm::erfc(x / SQRT_2))
}

/// Inverse of [`q_function`] on (0, 1).
pub fn q_inverse(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!("q_inverse needs 0 < p < 1, got {p}")));
    }
    // Q⁻¹(p) = −Φ⁻¹(p): rational first guess for the lower quantile, then
    // Halley steps against the erfc-based tail.
    let mut x = acklam_lower_quantile(p);
    for _ in 0..3 {
        let e = 0.5 * libm::erfc(-x / SQRT_2) - p;
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(-x)
}

fn acklam_lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Exponential correlation matrix with entries `rho^|m-n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    dim: usize,
    rho: f64,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn new(dim: usize, rho: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain(
                "correlation matrix dimension must be positive",
            ));
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::domain(format!(
                "correlation coefficient {rho} outside [0, 1)"
            )));
        }
        let mut entries = vec![0.0; dim * dim];
        for m in 0..dim {
            for n in 0..dim {
                entries[m * dim + n] = rho.powi(m.abs_diff(n) as i32);
            }
        }
        Ok(Self { dim, rho, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn entry(&self, m: usize, n: usize) -> f64 {
        self.entries[m * self.dim + n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn cholesky(&self) -> Result<CholeskyFactor> {
        cholesky(&self.entries, self.dim)
    }
}

/// Lower-triangular factor `Lc` with `Lc·Lcᵀ = R`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    dim: usize,
    data: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        self.data.clone()
    }

    /// `Lc·Lcᵀ`, row-major.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..=i.min(j))
                    .map(|k| self.get(i, k) * self.get(j, k))
                    .sum();
            }
        }
        out
    }
}

/// Cholesky decomposition of a symmetric positive-definite row-major matrix.
pub fn cholesky(matrix: &[f64], dim: usize) -> Result<CholeskyFactor> {
    if matrix.len() != dim * dim {
        return Err(Error::shape(format!(
            "expected {dim}x{dim} = {} entries, got {}",
            dim * dim,
            matrix.len()
        )));
    }
    let mut data = vec![0.0; dim * dim];
    for j in 0..dim {
        let mut diag = matrix[j * dim + j];
        for k in 0..j {
            diag -= data[j * dim + k] * data[j * dim + k];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let d = diag.sqrt();
        data[j * dim + j] = d;
        for i in (j + 1)..dim {
            let mut v = matrix[i * dim + j];
            for k in 0..j {
                v -= data[i * dim + k] * data[j * dim + k];
            }
            data[i * dim + j] = v / d;
        }
    }
    Ok(CholeskyFactor { dim, data })
}

/// Draws `v ~ CN(0, R)` using a precomputed factor of `R`.
pub fn sample_cgn_with_factor(factor: &CholeskyFactor, rng: &mut RngStream) -> ComplexVec {
    let n = factor.dim();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let wr: Vec<f64> = (0..n).map(|_| rng.standard_normal() * scale).collect();
    let wi: Vec<f64> = (0..n).map(|_| rng.standard_normal() * scale).collect();
    let mut out = ComplexVec::zeros(n);
    let (re, im) = out.parts_mut();
    for i in 0..n {
        for k in 0..=i {
            let l = factor.get(i, k);
            re[i] += l * wr[k];
            im[i] += l * wi[k];
        }
    }
    out
}

/// Draws a circularly symmetric `v ~ CN(0, R)`; each real part carries `R/2`.
pub fn sample_correlated_cgn(r: &CorrelationMatrix, rng: &mut RngStream) -> Result<ComplexVec> {
    let factor = r.cholesky()?;
    Ok(sample_cgn_with_factor(&factor, rng))
}

/// `n` i.i.d. `CN(0, variance)` entries.
pub fn sample_awgn(n: usize, variance: f64, rng: &mut RngStream) -> Result<ComplexVec> {
    if variance <= 0.0 || !variance.is_finite() {
        return Err(Error::domain(format!(
            "noise variance must be positive, got {variance}"
        )));
    }
    let mut out = ComplexVec::zeros(n);
    fill_awgn(&mut out, variance, rng);
    Ok(out)
}

/// Overwrites `out` with `CN(0, variance)` noise. `variance` must be positive.
pub(crate) fn fill_awgn(out: &mut ComplexVec, variance: f64, rng: &mut RngStream) {
    let sd = (0.5 * variance).sqrt();
    let (re, im) = out.parts_mut();
    for v in re.iter_mut() {
        *v = rng.standard_normal() * sd;
    }
    for v in im.iter_mut() {
        *v = rng.standard_normal() * sd;
    }
}

/// Deterministic random stream identified by `(seed, stream_id)`.
///
/// Backed by ChaCha8 with the stream id selecting the ChaCha stream, so
/// distinct ids share a key but never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self {
            seed,
            stream_id,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream under the same seed whose id is derived from this
    /// stream's id and `tag`. Independent of how much of `self` was consumed.
    pub fn fork(&self, tag: u64) -> RngStream {
        let id = splitmix64(self.stream_id ^ splitmix64(tag.wrapping_add(0x9E37_79B9_7F4A_7C15)));
        RngStream::new(self.seed, id)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bit(&mut self) -> bool {
        self.inner.next_u32() & 1 == 1
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Composite Simpson integration of the standard normal density over [x, x + 40].
    fn q_by_quadrature(x: f64) -> f64 {
        let n = 400_000;
        let (a, b) = (x, x + 40.0);
        let h = (b - a) / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * PI).sqrt();
        let mut sum = pdf(a) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * pdf(a + i as f64 * h);
        }
        sum * h / 3.0
    }

    fn q_inverse_by_bisection(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q_by_quadrature(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn q_function_reference_points() {
        assert_eq!(q_function(0.0).unwrap(), 0.5);
        assert!(q_function(40.0).unwrap() < 1e-300);
        let oracle = q_by_quadrature(1.0);
        assert!((oracle - 0.158_655_253_931_457).abs() < 1e-10);
        assert!((q_function(1.0).unwrap() - oracle).abs() < 1e-10);
        for x in [-3.0, -0.7, 0.4, 2.0, 4.5] {
            assert!(
                (q_function(x).unwrap() - q_by_quadrature(x)).abs() < 1e-10,
                "x = {x}"
            );
        }
    }

    #[test]
    fn q_function_rejects_non_finite() {
        assert!(matches!(q_function(f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(q_function(f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn q_inverse_reference_points() {
        assert!(q_inverse(0.5).unwrap().abs() < 1e-15);
        let p1 = q_by_quadrature(1.0);
        // 0.158655 is Q(1.0000010...), so the rounded input sits ~1.05e-6 from 1.
        let x = q_inverse(0.158_655).unwrap();
        assert!((x - q_inverse_by_bisection(0.158_655)).abs() < 1e-8);
        assert!((x - 1.0).abs() < 1.1e-6);
        assert!((q_inverse(p1).unwrap() - 1.0).abs() < 1e-9);
        let oracle = q_inverse_by_bisection(0.1);
        assert!((oracle - 1.28155).abs() < 1e-4);
        assert!((q_inverse(0.1).unwrap() - oracle).abs() < 1e-7);
    }

    #[test]
    fn q_inverse_rejects_out_of_range() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(q_inverse(p).is_err(), "p = {p}");
        }
    }

    #[test]
    fn q_inverse_roundtrip_is_relative_accurate() {
        for p in [1e-12, 1e-6, 0.01, 0.02425, 0.3, 0.9, 0.999_999] {
            let x = q_inverse(p).unwrap();
            let back = q_function(x).unwrap();
            assert!(((back - p) / p).abs() < 1e-8, "p = {p}, back = {back}");
        }
    }

    proptest! {
        #[test]
        fn q_function_symmetry(x in -30.0f64..30.0) {
            let s = q_function(x).unwrap() + q_function(-x).unwrap();
            prop_assert!((s - 1.0).abs() < 1e-12);
        }

        #[test]
        fn q_function_strictly_decreasing(a in -8.0f64..8.0, d in 1e-3f64..4.0) {
            prop_assert!(q_function(a).unwrap() > q_function(a + d).unwrap());
        }

        #[test]
        fn q_inverse_inverts_q(x in -6.0f64..6.0) {
            let back = q_inverse(q_function(x).unwrap()).unwrap();
            prop_assert!((back - x).abs() < 1e-6);
        }
    }

    #[test]
    fn cholesky_examples() {
        let id = CorrelationMatrix::new(2, 0.0).unwrap().cholesky().unwrap();
        assert_eq!(id.to_dense(), vec![1.0, 0.0, 0.0, 1.0]);

        let f = CorrelationMatrix::new(2, 0.5).unwrap().cholesky().unwrap();
        let expected = [1.0, 0.0, 0.5, 0.75f64.sqrt()];
        for (a, b) in f.to_dense().iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((f.get(1, 1) - 0.866_025).abs() < 1e-6);
    }

    #[test]
    fn cholesky_reconstructs_within_tolerance() {
        for rho in [0.0, 0.3, 0.5, 0.9] {
            for dim in [2, 4, 8] {
                let r = CorrelationMatrix::new(dim, rho).unwrap();
                let back = r.cholesky().unwrap().reconstruct();
                let err = back
                    .iter()
                    .zip(r.entries())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                assert!(err < 1e-10, "rho {rho} dim {dim}: {err}");
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite_matrix() {
        let m = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            cholesky(&m, 2),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        assert!(matches!(cholesky(&m, 3), Err(Error::Shape(_))));
    }

    #[test]
    fn correlation_matrix_rejects_bad_rho() {
        assert!(CorrelationMatrix::new(3, 1.0).is_err());
        assert!(CorrelationMatrix::new(3, -0.1).is_err());
        assert!(CorrelationMatrix::new(0, 0.5).is_err());
    }

    fn sample_covariance(rho: f64, draws: usize, seed: u64) -> [[(f64, f64); 2]; 2] {
        let r = CorrelationMatrix::new(2, rho).unwrap();
        let factor = r.cholesky().unwrap();
        let mut rng = RngStream::new(seed, 0);
        let mut acc = [[(0.0, 0.0); 2]; 2];
        for _ in 0..draws {
            let v = sample_cgn_with_factor(&factor, &mut rng);
            for (i, row) in acc.iter_mut().enumerate() {
                for (j, cell) in row.iter_mut().enumerate() {
                    // v_i · conj(v_j)
                    let (a, b) = v.get(i);
                    let (c, d) = v.get(j);
                    cell.0 += a * c + b * d;
                    cell.1 += b * c - a * d;
                }
            }
        }
        for row in acc.iter_mut() {
            for cell in row.iter_mut() {
                cell.0 /= draws as f64;
                cell.1 /= draws as f64;
            }
        }
        acc
    }

    #[test]
    fn correlated_sampler_matches_identity_covariance() {
        let c = sample_covariance(0.0, 1_000_000, 11);
        assert!((c[0][0].0 - 1.0).abs() < 0.01);
        assert!((c[1][1].0 - 1.0).abs() < 0.01);
        assert!(c[0][1].0.abs() < 0.01 && c[0][1].1.abs() < 0.01);
    }

    #[test]
    fn correlated_sampler_matches_off_diagonal() {
        let c = sample_covariance(0.5, 1_000_000, 12);
        assert!((c[0][1].0 - 0.5).abs() < 0.01, "{:?}", c[0][1]);
        assert!(c[0][1].1.abs() < 0.01);
    }

    #[test]
    fn correlated_sampler_error_shrinks_with_trials() {
        // Average absolute covariance error over repeated batches should fall
        // roughly as 1/sqrt(trials): 16x the trials gives ~4x less error.
        let err = |draws: usize| -> f64 {
            (0..8)
                .map(|s| (sample_covariance(0.5, draws, 100 + s)[0][1].0 - 0.5).abs())
                .sum::<f64>()
                / 8.0
        };
        let small = err(2_000);
        let large = err(32_000);
        let ratio = small / large;
        assert!(ratio > 2.0 && ratio < 8.0, "ratio {ratio}");
    }

    #[test]
    fn correlated_sampler_replays_with_seed() {
        let r = CorrelationMatrix::new(4, 0.5).unwrap();
        let a = sample_correlated_cgn(&r, &mut RngStream::new(5, 9)).unwrap();
        let b = sample_correlated_cgn(&r, &mut RngStream::new(5, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn awgn_power_and_validation() {
        let mut rng = RngStream::new(3, 1);
        let n = sample_awgn(1_000_000, 1.0, &mut rng).unwrap();
        assert!((n.energy() / 1e6 - 1.0).abs() < 0.01);
        assert!(sample_awgn(4, 0.0, &mut rng).is_err());
        assert!(sample_awgn(4, -1.0, &mut rng).is_err());
        let a = sample_awgn(16, 2.0, &mut RngStream::new(8, 8)).unwrap();
        let b = sample_awgn(16, 2.0, &mut RngStream::new(8, 8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = RngStream::new(42, 1);
        let mut b = RngStream::new(42, 2);
        let n = 100_000;
        let cross: f64 = (0..n)
            .map(|_| a.standard_normal() * b.standard_normal())
            .sum::<f64>()
            / n as f64;
        assert!(cross.abs() < 0.01, "{cross}");
        let mut c = a.fork(7);
        let mut d = a.fork(8);
        let cross: f64 = (0..n)
            .map(|_| c.standard_normal() * d.standard_normal())
            .sum::<f64>()
            / n as f64;
        assert!(cross.abs() < 0.01, "{cross}");
    }

    #[test]
    fn fork_ignores_consumption_of_parent() {
        let mut a = RngStream::new(1, 1);
        let before = a.fork(3).standard_normal();
        a.standard_normal();
        assert_eq!(before, a.fork(3).standard_normal());
    }

    #[test]
    fn complex_vec_basics() {
        assert!(ComplexVec::new(vec![1.0], vec![]).is_err());
        let v = ComplexVec::new(vec![1.0, 0.0], vec![0.0, 2.0]).unwrap();
        assert_eq!(v.energy(), 5.0);
        assert_eq!(ComplexVec::zeros(3).energy(), 0.0);
        let split = v.to_split();
        assert_eq!(split, vec![1.0, 0.0, 0.0, 2.0]);
        assert_eq!(ComplexVec::from_split(&split).unwrap(), v);
        // yᴴx with y = [j], x = [1] is −j.
        let y = ComplexVec::new(vec![0.0], vec![1.0]).unwrap();
        let x = ComplexVec::new(vec![1.0], vec![0.0]).unwrap();
        assert_eq!(y.inner(&x).unwrap(), (0.0, -1.0));
    }

    proptest! {
        #[test]
        fn energy_is_nonnegative_and_zero_only_at_origin(
            re in proptest::collection::vec(-5.0f64..5.0, 1..16),
            seed in any::<u64>(),
        ) {
            let mut rng = RngStream::new(seed, 0);
            let im: Vec<f64> = re.iter().map(|_| rng.standard_normal()).collect();
            let v = ComplexVec::new(re, im).unwrap();
            let e = v.energy();
            prop_assert!(e >= 0.0);
            let nonzero = v.re().iter().chain(v.im()).any(|x| *x != 0.0);
            prop_assert_eq!(e == 0.0, !nonzero);
        }
    }
}
