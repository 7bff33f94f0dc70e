//! Small dense real symmetric matrix kernel.
//!
//! Everything downstream (averages of weights, Bellman variables, Carleson
//! sums) lives in dimensions d <= 16 or so, where an eigendecomposition per
//! node is cheap and accuracy matters more than speed. Spectral calls are
//! backed by nalgebra's symmetric eigensolver; the wrappers here add the
//! PSD/singularity tolerances and symmetrization that keep the downstream
//! operator inequalities well defined.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Residual tolerance for spectral round trips (relative to matrix scale).
pub const TAU_NUM: f64 = 1e-10;
/// How far below zero an eigenvalue may sit and still count as PSD.
pub const TAU_PSD: f64 = 1e-9;
/// Eigenvalues at or below this (relative) threshold are treated as singular.
pub const TAU_SING: f64 = 1e-12;
/// Relative regularization added to weight leaves that are not safely SPD.
pub const EPS_REG: f64 = 1e-8;

pub type Vector = DVector<f64>;

/// A d x d real symmetric matrix. Construction symmetrizes, so the invariant
/// `entries[i][j] == entries[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from an arbitrary square matrix, symmetrizing as (M + M^T)/2.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "SymMatrix requires a square matrix");
        let sym = (&m + m.transpose()) * 0.5;
        SymMatrix { data: sym }
    }

    /// Build from row-major entries of length d*d.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimensionMismatch {
                left: entries.len(),
                right: d * d,
            });
        }
        let m = DMatrix::from_row_slice(d, d, entries);
        Ok(Self::from_matrix(m))
    }

    pub fn identity(d: usize) -> Self {
        SymMatrix {
            data: DMatrix::identity(d, d),
        }
    }

    pub fn zeros(d: usize) -> Self {
        SymMatrix {
            data: DMatrix::zeros(d, d),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        SymMatrix {
            data: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    /// Rank-one-style product G * G^T, always symmetric PSD.
    pub fn gram(g: &DMatrix<f64>) -> Self {
        Self::from_matrix(g * g.transpose())
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                out.push(self.data[(i, j)]);
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let se = self.data.clone().symmetric_eigen();
        (se.eigenvalues.as_slice().to_vec(), se.eigenvectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.data
            .clone()
            .symmetric_eigenvalues()
            .as_slice()
            .to_vec()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Operator norm: largest eigenvalue magnitude.
    pub fn op_norm(&self) -> f64 {
        self.eigenvalues()
            .into_iter()
            .fold(0.0f64, |acc, l| acc.max(l.abs()))
    }

    /// Scale used by the relative tolerances: 1 + ||M||_op.
    pub fn scale(&self) -> f64 {
        1.0 + self.op_norm()
    }

    /// Spectral condition number of an SPD matrix (infinite when the
    /// smallest eigenvalue is not positive).
    pub fn spd_condition(&self) -> f64 {
        let vals = self.eigenvalues();
        let max = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let min = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Apply `f` to the spectrum; `guard` may reject an eigenvalue first.
    fn spectral_map(
        &self,
        guard: impl Fn(f64) -> Result<()>,
        f: impl Fn(f64) -> f64,
    ) -> Result<SymMatrix> {
        let (vals, vecs) = self.eigen();
        for &l in &vals {
            guard(l)?;
        }
        let mapped = DVector::from_iterator(vals.len(), vals.iter().map(|&l| f(l)));
        let m = &vecs * DMatrix::from_diagonal(&mapped) * vecs.transpose();
        Ok(SymMatrix::from_matrix(m))
    }

    /// PSD square root. Eigenvalues in [-tau_psd*scale, 0) are clamped to 0;
    /// anything further below fails with NotPSD.
    pub fn sym_sqrt(&self) -> Result<SymMatrix> {
        let floor = -TAU_PSD * self.scale();
        self.spectral_map(
            |l| {
                if l < floor {
                    Err(Error::NotPsd { min_eig: l })
                } else {
                    Ok(())
                }
            },
            |l| l.max(0.0).sqrt(),
        )
    }

    /// Inverse of an SPD matrix; Singular if the smallest eigenvalue is at or
    /// below tau_sing * scale.
    pub fn sym_inv(&self) -> Result<SymMatrix> {
        let floor = TAU_SING * self.scale();
        self.spectral_map(
            |l| {
                if l <= floor {
                    Err(Error::Singular { min_eig: l })
                } else {
                    Ok(())
                }
            },
            |l| 1.0 / l,
        )
    }

    /// Inverse square root of an SPD matrix.
    pub fn inv_sqrt(&self) -> Result<SymMatrix> {
        let floor = TAU_SING * self.scale();
        self.spectral_map(
            |l| {
                if l <= floor {
                    Err(Error::Singular { min_eig: l })
                } else {
                    Ok(())
                }
            },
            |l| 1.0 / l.sqrt(),
        )
    }

    pub fn mul_vec(&self, v: &Vector) -> Result<Vector> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: v.len(),
            });
        }
        Ok(&self.data * v)
    }

    /// Symmetrized product of two symmetric matrices (A*B is generally not
    /// symmetric; callers that need A*B*A-style congruences use `congruence`).
    pub fn mul_sym(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(SymMatrix::from_matrix(&self.data * &other.data))
    }

    /// Congruence X * M * X^T for symmetric X (so X^T = X).
    pub fn congruence(&self, x: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(x)?;
        Ok(SymMatrix::from_matrix(&x.data * &self.data * &x.data))
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(SymMatrix {
            data: &self.data + &other.data,
        })
    }

    pub fn sub(&self, other: &SymMatrix) -> Result<SymMatrix> {
        self.check_dim(other)?;
        Ok(SymMatrix {
            data: &self.data - &other.data,
        })
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            data: &self.data * s,
        }
    }

    fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

/// PSD order: A <= B iff the smallest eigenvalue of B - A clears
/// -tau_psd * (1 + ||A|| + ||B||).
pub fn psd_leq(a: &SymMatrix, b: &SymMatrix) -> Result<bool> {
    psd_leq_slack(a, b, 0.0)
}

/// PSD order with extra absolute slack, for checks whose operands pass
/// through severely ill-conditioned inverses or square roots.
pub fn psd_leq_slack(a: &SymMatrix, b: &SymMatrix, extra: f64) -> Result<bool> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let diff = b.sub(a)?;
    let tol = TAU_PSD * (1.0 + a.op_norm() + b.op_norm()) + extra;
    Ok(diff.min_eigenvalue() >= -tol)
}

pub fn op_norm(m: &SymMatrix) -> f64 {
    m.op_norm()
}

pub fn vec_norm(v: &Vector) -> f64 {
    v.norm()
}

/// Bilinear form u^T M v.
pub fn quad_form(m: &SymMatrix, u: &Vector, v: &Vector) -> Result<f64> {
    if u.len() != m.dim() || v.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            left: m.dim(),
            right: u.len().max(v.len()),
        });
    }
    Ok(u.dot(&(m.as_matrix() * v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> SymMatrix {
        let g = DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        SymMatrix::gram(&g)
            .add(&SymMatrix::identity(d).scaled(0.1))
            .unwrap()
    }

    #[test]
    fn sqrt_diagonal() {
        let m = SymMatrix::from_diagonal(&[4.0, 9.0]);
        let r = m.sym_sqrt().unwrap();
        assert!((r.entry(0, 0) - 2.0).abs() < 1e-12);
        assert!((r.entry(1, 1) - 3.0).abs() < 1e-12);
        assert!(r.entry(0, 1).abs() < 1e-12);
    }

    #[test]
    fn sqrt_identity() {
        for d in 1..=5 {
            let m = SymMatrix::identity(d);
            let r = m.sym_sqrt().unwrap();
            assert!(r.sub(&SymMatrix::identity(d)).unwrap().op_norm() < 1e-12);
        }
    }

    #[test]
    fn sqrt_roundtrip_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_spd(4, &mut rng);
        let r = m.sym_sqrt().unwrap();
        let back = r.mul_sym(&r).unwrap();
        assert!(back.sub(&m).unwrap().op_norm() <= 1e-10 * (1.0 + m.op_norm()));
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(m.sym_sqrt(), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn inv_diagonal() {
        let m = SymMatrix::from_diagonal(&[2.0, 4.0]);
        let inv = m.sym_inv().unwrap();
        assert!((inv.entry(0, 0) - 0.5).abs() < 1e-14);
        assert!((inv.entry(1, 1) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn inv_residual_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_spd(3, &mut rng);
        let inv = m.sym_inv().unwrap();
        let prod = m.mul_sym(&inv).unwrap();
        assert!(prod.sub(&SymMatrix::identity(3)).unwrap().op_norm() < 1e-9);
    }

    #[test]
    fn inv_rejects_singular() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(m.sym_inv(), Err(Error::Singular { .. })));
    }

    #[test]
    fn psd_order_basics() {
        let id = SymMatrix::identity(3);
        let two = id.scaled(2.0);
        assert!(psd_leq(&id, &two).unwrap());
        assert!(!psd_leq(&two, &id).unwrap());
    }

    #[test]
    fn psd_order_depth1_weight_duality() {
        // scalar weight (1 on the left half, 4 on the right half):
        // inv of <w^-1> is 1.6, <w> is 2.5.
        let lhs = SymMatrix::from_diagonal(&[1.6]);
        let rhs = SymMatrix::from_diagonal(&[2.5]);
        assert!(psd_leq(&lhs, &rhs).unwrap());
    }

    #[test]
    fn norms_and_forms() {
        assert_eq!(op_norm(&SymMatrix::from_diagonal(&[-1.0, 3.0])), 3.0);
        assert_eq!(vec_norm(&Vector::from_row_slice(&[3.0, 4.0])), 5.0);
        let e1 = Vector::from_row_slice(&[1.0, 0.0]);
        assert_eq!(quad_form(&SymMatrix::identity(2), &e1, &e1).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = SymMatrix::identity(2);
        let b = SymMatrix::identity(3);
        assert!(matches!(
            psd_leq(&a, &b),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
