//! Principal component analysis over word vectors.
//!
//! The sample covariance (denominator `n - 1`) is diagonalized with cyclic
//! Jacobi rotations. Components are ordered by decreasing eigenvalue and
//! signed so that each component's largest-magnitude entry is positive,
//! which makes a fit fully deterministic.

use thiserror::Error;

use crate::embedding::{EmbeddingTable, Vector};

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("output dimension {d_out} outside 1..={d_in}")]
    InvalidOutputDim { d_out: usize, d_in: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[i]` is the unit eigenvector of `values[i]`.
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigendecomposition of the `n x n` row-major symmetric `matrix`.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> SymmetricEigen {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q] * a[p * n + q])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * fro || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = c * akp - s * akq;
                    let new_kq = s * akp + c * akq;
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + i]).collect();
            orient(&mut col);
            col
        })
        .collect();
    SymmetricEigen { values, vectors }
}

/// Flips `x` so its first largest-magnitude entry is positive.
fn orient(x: &mut [f64]) {
    let mut best = 0;
    for (i, xi) in x.iter().enumerate() {
        if xi.abs() > x[best].abs() {
            best = i;
        }
    }
    if x.get(best).is_some_and(|&b| b < 0.0) {
        x.iter_mut().for_each(|xi| *xi = -*xi);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vector,
    pub components: Vec<Vector>,
    /// Eigenvalue of each component, non-increasing and non-negative.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn d_in(&self) -> usize {
        self.mean.dim()
    }

    pub fn d_out(&self) -> usize {
        self.components.len()
    }

    /// Fits `d_out` components to `data`.
    pub fn fit(data: &[Vector], d_out: usize) -> Result<Self, PcaError> {
        if data.len() < 2 {
            return Err(PcaError::TooFewSamples(data.len()));
        }
        let d_in = data[0].dim();
        if d_out < 1 || d_out > d_in {
            return Err(PcaError::InvalidOutputDim { d_out, d_in });
        }
        if let Some(bad) = data.iter().find(|x| x.dim() != d_in) {
            return Err(PcaError::DimensionMismatch {
                expected: d_in,
                found: bad.dim(),
            });
        }

        let n = data.len() as f64;
        let mut mean = vec![0.0; d_in];
        for x in data {
            for (m, xi) in mean.iter_mut().zip(x.as_slice()) {
                *m += xi;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let mut cov = vec![0.0; d_in * d_in];
        let mut centered = vec![0.0; d_in];
        for x in data {
            for ((c, xi), m) in centered.iter_mut().zip(x.as_slice()).zip(&mean) {
                *c = xi - m;
            }
            for i in 0..d_in {
                let ci = centered[i];
                let row = &mut cov[i * d_in..(i + 1) * d_in];
                for j in i..d_in {
                    row[j] += ci * centered[j];
                }
            }
        }
        for i in 0..d_in {
            for j in i..d_in {
                let val = cov[i * d_in + j] / (n - 1.0);
                cov[i * d_in + j] = val;
                cov[j * d_in + i] = val;
            }
        }

        let eig = symmetric_eigen(&cov, d_in);
        let components = eig
            .vectors
            .into_iter()
            .take(d_out)
            .map(|c| Vector::new(c).expect("finite eigenvector"))
            .collect();
        let variances = eig
            .values
            .into_iter()
            .take(d_out)
            .map(|l| l.max(0.0))
            .collect();
        Ok(PcaModel {
            mean: Vector::new(mean).expect("finite mean"),
            components,
            variances,
        })
    }

    /// Coordinates of `v - mean` along each component.
    pub fn transform(&self, v: &Vector) -> Result<Vector, PcaError> {
        if v.dim() != self.d_in() {
            return Err(PcaError::DimensionMismatch {
                expected: self.d_in(),
                found: v.dim(),
            });
        }
        let centered: Vec<f64> = v
            .as_slice()
            .iter()
            .zip(self.mean.as_slice())
            .map(|(x, m)| x - m)
            .collect();
        let coords = self
            .components
            .iter()
            .map(|c| c.as_slice().iter().zip(&centered).map(|(a, b)| a * b).sum())
            .collect();
        Ok(Vector::new(coords).expect("finite projection"))
    }

    /// `mean + sum_i coeffs[i] * components[i]`.
    pub fn reconstruct(&self, coeffs: &Vector) -> Result<Vector, PcaError> {
        if coeffs.dim() != self.d_out() {
            return Err(PcaError::DimensionMismatch {
                expected: self.d_out(),
                found: coeffs.dim(),
            });
        }
        let mut out = self.mean.as_slice().to_vec();
        for (c, &w) in self.components.iter().zip(coeffs.as_slice()) {
            for (o, ci) in out.iter_mut().zip(c.as_slice()) {
                *o += w * ci;
            }
        }
        Ok(Vector::new(out).expect("finite reconstruction"))
    }
}

/// One PCA fit over the whole vocabulary, then every word projected to `d_out`.
pub fn project_embeddings(
    vocab: &EmbeddingTable,
    d_out: usize,
) -> Result<EmbeddingTable, PcaError> {
    let data: Vec<Vector> = vocab.iter().map(|(_, v)| v.clone()).collect();
    let model = PcaModel::fit(&data, d_out)?;
    let projected = vocab
        .iter()
        .map(|(w, v)| Ok((w.to_owned(), model.transform(v)?)))
        .collect::<Result<Vec<_>, PcaError>>()?;
    Ok(EmbeddingTable::from_entries(d_out, projected).expect("uniform projected dimension"))
}
