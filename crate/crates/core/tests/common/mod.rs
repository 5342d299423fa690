#![allow(dead_code)]

use faer::Mat;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrmmse_core::{c64, DiagonalPrior, NoiseModel, SensingMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<c64>> {
    (0..rows).map(|_| (0..cols).map(|_| random_complex(rng)).collect()).collect()
}

pub fn to_mat(a: &[Vec<c64>]) -> Mat<c64> {
    let cols = a.first().map_or(0, |r| r.len());
    Mat::from_fn(a.len(), cols, |i, j| a[i][j])
}

pub fn from_mat(a: &Mat<c64>) -> Vec<Vec<c64>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

/// Random instance with unit-norm columns, a positive diagonal prior and noise.
pub fn random_instance(rng: &mut ChaCha8Rng, k: usize, m: usize) -> (SensingMatrix, Vec<Vec<c64>>, DiagonalPrior, NoiseModel) {
    let mut a = random_matrix(rng, k, m);
    for j in 0..m {
        let norm = (0..k).map(|i| a[i][j].norm_sqr()).sum::<f64>().sqrt();
        for row in a.iter_mut() {
            row[j] /= norm;
        }
    }
    let prior = DiagonalPrior::new((0..m).map(|_| rng.random_range(0.2..5.0)).collect()).unwrap();
    let noise = NoiseModel::new(rng.random_range(0.05..2.0)).unwrap();
    (SensingMatrix::from_matrix(to_mat(&a)), a, prior, noise)
}

pub fn adjoint(a: &[Vec<c64>]) -> Vec<Vec<c64>> {
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn matmul(a: &[Vec<c64>], b: &[Vec<c64>]) -> Vec<Vec<c64>> {
    let (r, inner, c) = (a.len(), b.len(), b[0].len());
    (0..r)
        .map(|i| (0..c).map(|j| (0..inner).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn matvec(a: &[Vec<c64>], x: &[c64]) -> Vec<c64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &[Vec<c64>]) -> Vec<Vec<c64>> {
    let n = a.len();
    let mut w: Vec<Vec<c64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| w[x][col].norm().total_cmp(&w[y][col].norm())).unwrap();
        w.swap(col, piv);
        let d = w[col][col];
        for v in w[col].iter_mut() {
            *v /= d;
        }
        let pivot = w[col].clone();
        for (row, r) in w.iter_mut().enumerate() {
            let f = r[col];
            if row != col && f != c64::new(0.0, 0.0) {
                for (x, p) in r.iter_mut().zip(&pivot) {
                    *x -= f * p;
                }
            }
        }
    }
    w.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `K_γ - K_γ H^H (H K_γ H^H + σ² I)^{-1} H K_γ`, evaluated densely.
pub fn posterior_innovation(a: &[Vec<c64>], p: &[f64], s2: f64) -> Vec<Vec<c64>> {
    let k = a.len();
    let m = p.len();
    let hk: Vec<Vec<c64>> = a.iter().map(|row| row.iter().zip(p).map(|(x, q)| x * q).collect()).collect();
    let mut c = matmul(&hk, &adjoint(a));
    for (i, row) in c.iter_mut().enumerate().take(k) {
        row[i] += s2;
    }
    let corr = matmul(&adjoint(&hk), &matmul(&inverse(&c), &hk));
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { c64::new(p[i], 0.0) - corr[i][j] } else { -corr[i][j] }).collect())
        .collect()
}

/// `(H^H H / σ² + K_γ^{-1})^{-1}`, evaluated densely.
pub fn posterior_information(a: &[Vec<c64>], p: &[f64], s2: f64) -> Vec<Vec<c64>> {
    let mut j = matmul(&adjoint(a), a);
    for (i, row) in j.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= s2;
        }
        row[i] += 1.0 / p[i];
    }
    inverse(&j)
}

pub fn max_abs(a: &[Vec<c64>]) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_diff(a: &[Vec<c64>], b: &[Vec<c64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}
