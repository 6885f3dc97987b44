//! Dense row-major matrices, activations, running moments and the seeded RNG.
//!
//! Everything here is `f64`. The significance monitors subtract nearly equal
//! quantities and single precision drifts visibly over long streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used throughout the crate: ChaCha with 8 rounds, a counter-based
/// stream cipher, seeded explicitly via [`Seed::rng`].
pub type StreamRng = ChaCha8Rng;

/// Explicit 64-bit seed. Distinct `stream` ids yield independent sequences
/// from the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self, stream: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "matrix data",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Mat { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    context: "matrix row",
                    expected: cols,
                    actual: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics, so zero-width matrices yield empty rows.
        (0..self.rows).map(move |r| self.row(r))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self.get(c, r))
    }

    pub fn matmul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                context: "matmul inner dimension",
                expected: self.cols,
                actual: other.rows,
            });
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Appends a column. `col.len()` must equal the row count.
    pub fn push_col(&mut self, col: &[f64]) {
        assert_eq!(col.len(), self.rows, "column length");
        let new_cols = self.cols + 1;
        let mut data = Vec::with_capacity(self.rows * new_cols);
        for (r, &v) in col.iter().enumerate() {
            data.extend_from_slice(self.row(r));
            data.push(v);
        }
        self.data = data;
        self.cols = new_cols;
    }

    pub fn remove_col(&mut self, c: usize) {
        assert!(c < self.cols, "column index");
        let cols = self.cols;
        let mut idx = 0;
        self.data.retain(|_| {
            let keep = idx % cols != c;
            idx += 1;
            keep
        });
        self.cols -= 1;
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols, "row length");
        self.data.extend_from_slice(row);
        self.rows += 1;
    }

    pub fn remove_row(&mut self, r: usize) {
        assert!(r < self.rows, "row index");
        self.data.drain(r * self.cols..(r + 1) * self.cols);
        self.rows -= 1;
    }
}

/// Row vector times matrix: `x · m`, with `x.len() == m.rows()`.
pub fn vec_mat(x: &[f64], m: &Mat) -> Vec<f64> {
    debug_assert_eq!(x.len(), m.rows());
    let mut out = vec![0.0; m.cols()];
    for (&xv, row) in x.iter().zip(m.iter_rows()) {
        if xv == 0.0 {
            continue;
        }
        for (o, &w) in out.iter_mut().zip(row) {
            *o += xv * w;
        }
    }
    out
}

/// Row vector times transposed matrix: `x · mᵀ`, with `x.len() == m.cols()`.
pub fn vec_mat_t(x: &[f64], m: &Mat) -> Vec<f64> {
    debug_assert_eq!(x.len(), m.cols());
    m.iter_rows().map(|row| dot(row, x)).collect()
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Uniform draw on `±sqrt(6 / (fan_in + fan_out))`.
pub fn xavier_draw<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> f64 {
    let fan = (fan_in + fan_out).max(1) as f64;
    let bound = (6.0 / fan).sqrt();
    rng.gen_range(-bound..=bound)
}

/// One-pass mean and population variance (Welford).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningMoment {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
        if self.m2 < 0.0 {
            self.m2 = 0.0;
        }
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count <= 1 {
            0.0
        } else {
            self.m2 / self.count as f64
        }
    }

    pub fn std(&self) -> f64 {
        self.variance().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_product(a: &Mat, b: &Mat) -> Mat {
        let mut out = Mat::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for k in 0..a.cols() {
                    s += a.get(i, k) * b.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    fn random_mat(rows: usize, cols: usize, rng: &mut StreamRng) -> Mat {
        Mat::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn identity_product() {
        let mut rng = Seed(3).rng(0);
        let m = random_mat(3, 4, &mut rng);
        assert_eq!(Mat::identity(3).matmul(&m).unwrap(), m);
    }

    #[test]
    fn hand_product() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Mat::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.as_slice(), &[3.0, 7.0]);
    }

    #[test]
    fn product_matches_triple_loop() {
        let mut rng = Seed(11).rng(0);
        for trial in 0..100 {
            let (r, k, c) = if trial == 0 {
                (5, 4, 3)
            } else {
                (
                    rng.gen_range(1..9),
                    rng.gen_range(1..9),
                    rng.gen_range(1..9),
                )
            };
            let a = random_mat(r, k, &mut rng);
            let b = random_mat(k, c, &mut rng);
            let fast = a.matmul(&b).unwrap();
            let slow = naive_product(&a, &b);
            for (x, y) in fast.as_slice().iter().zip(slow.as_slice()) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn product_rejects_mismatch() {
        let a = Mat::zeros(2, 3);
        let b = Mat::zeros(2, 3);
        assert!(matches!(a.matmul(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn column_and_row_edits() {
        let mut m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        m.push_col(&[5.0, 6.0]);
        assert_eq!(m.as_slice(), &[1.0, 2.0, 5.0, 3.0, 4.0, 6.0]);
        m.remove_col(0);
        assert_eq!(m.as_slice(), &[2.0, 5.0, 4.0, 6.0]);
        m.push_row(&[7.0, 8.0]);
        m.remove_row(0);
        assert_eq!(m.as_slice(), &[4.0, 6.0, 7.0, 8.0]);
    }

    #[test]
    fn vector_products_agree_with_matmul() {
        let mut rng = Seed(5).rng(0);
        let m = random_mat(4, 3, &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
        let xm = Mat::from_vec(1, 4, x.clone()).unwrap().matmul(&m).unwrap();
        assert_eq!(vec_mat(&x, &m), xm.as_slice());
        let y: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
        let ymt = Mat::from_vec(1, 3, y.clone())
            .unwrap()
            .matmul(&m.transpose())
            .unwrap();
        for (a, b) in vec_mat_t(&y, &m).iter().zip(ymt.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(50.0) - 1.0).abs() < 1e-15);
        assert!(sigmoid(-800.0).is_finite());
        assert!(sigmoid(800.0).is_finite());
        let mut rng = Seed(1).rng(0);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(-40.0..40.0);
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
            let y: f64 = rng.gen_range(-40.0..40.0);
            let (lo, hi) = if x < y { (x, y) } else { (y, x) };
            assert!(sigmoid(lo) <= sigmoid(hi));
        }
    }

    #[test]
    fn softmax_values() {
        let p = softmax_row(&[0.3, 0.3, 0.3, 0.3]);
        for v in &p {
            assert!((v - 0.25).abs() < 1e-15);
        }
        let p = softmax_row(&[1000.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] >= 0.0 && p[1] < 1e-300);
        let v = [0.1, -2.0, 3.5];
        let shifted: Vec<f64> = v.iter().map(|x| x + 17.25).collect();
        let (a, b) = (softmax_row(&v), softmax_row(&shifted));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    fn two_pass(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    }

    #[test]
    fn running_moment_small_cases() {
        let mut m = RunningMoment::new();
        m.push(5.0);
        assert_eq!((m.mean(), m.std()), (5.0, 0.0));
        let mut m = RunningMoment::new();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.std() - 1.25f64.sqrt()).abs() < 1e-15);
        assert_eq!(RunningMoment::new().std(), 0.0);
    }

    #[test]
    fn running_moment_matches_two_pass() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = Seed(42).rng(0);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mut m = RunningMoment::new();
        xs.iter().for_each(|&x| m.push(x));
        let (mean, std) = two_pass(&xs);
        assert!((m.mean() - mean).abs() < 1e-9);
        assert!((m.std() - std).abs() < 1e-9);
    }

    #[test]
    fn xavier_bounds_and_determinism() {
        let mut rng = Seed(9).rng(0);
        let draws: Vec<f64> = (0..10_000).map(|_| xavier_draw(3, 3, &mut rng)).collect();
        assert!(draws.iter().all(|d| (-1.0..=1.0).contains(d)));
        // uniform on [-1, 1] has std 1/sqrt(3)
        let se = (1.0f64 / 3.0).sqrt() / (draws.len() as f64).sqrt();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 3.0 * se);
        let mut a = Seed(9).rng(0);
        let mut b = Seed(9).rng(0);
        for _ in 0..100 {
            assert_eq!(
                xavier_draw(7, 2, &mut a).to_bits(),
                xavier_draw(7, 2, &mut b).to_bits()
            );
        }
    }

    #[test]
    fn seed_streams_differ() {
        let a: u64 = Seed(1).rng(0).gen();
        let b: u64 = Seed(1).rng(1).gen();
        assert_ne!(a, b);
    }
}
