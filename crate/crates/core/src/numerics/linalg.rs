use nalgebra::{DMatrix, DVector};

use super::C64;
use crate::error::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numerical null space of a matrix together with its singular spectrum.
#[derive(Debug, Clone)]
pub struct NullSpace {
    /// Orthonormal basis vectors.
    pub basis: Vec<CVector>,
    /// All singular values in decreasing order (padded to `cols`).
    pub singular_values: Vec<f64>,
    pub rank: usize,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Ratio between the smallest kept and the largest discarded singular value.
    pub fn gap(&self) -> f64 {
        if self.rank == 0 || self.rank == self.singular_values.len() {
            return f64::INFINITY;
        }
        let kept = self.singular_values[self.rank - 1];
        let dropped = self.singular_values[self.rank];
        if dropped == 0.0 {
            f64::INFINITY
        } else {
            kept / dropped
        }
    }
}

/// Right singular vectors whose singular values fall below `tol * sigma_max`.
pub fn null_space(m: &CMatrix, tol: f64) -> Result<NullSpace> {
    if !(tol > 0.0) {
        return Err(Error::invalid("null-space tolerance must be positive"));
    }
    let (singular_values, vectors) = sorted_svd(m)?;
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let cutoff = tol * smax;
    let rank = if smax == 0.0 {
        0
    } else {
        singular_values.iter().filter(|&&s| s >= cutoff).count()
    };
    Ok(NullSpace {
        basis: vectors[rank..].to_vec(),
        singular_values,
        rank,
    })
}

/// The `dim` right singular vectors with the smallest singular values.
pub fn null_space_of_dim(m: &CMatrix, dim: usize) -> Result<NullSpace> {
    let (singular_values, vectors) = sorted_svd(m)?;
    if dim == 0 || dim > vectors.len() {
        return Err(Error::invalid(
            "requested null-space dimension out of range",
        ));
    }
    let rank = vectors.len() - dim;
    Ok(NullSpace {
        basis: vectors[rank..].to_vec(),
        singular_values,
        rank,
    })
}

/// Singular values in decreasing order with their right singular vectors.
fn sorted_svd(m: &CMatrix) -> Result<(Vec<f64>, Vec<CVector>)> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    if rows == 0 {
        let basis = (0..cols)
            .map(|k| {
                CVector::from_fn(cols, |i, _| {
                    if i == k {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        return Ok((vec![0.0; cols], basis));
    }
    // pad with zero rows so that the full right singular basis is returned
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = order.iter().map(|&k| v_t.row(k).adjoint()).collect();
    Ok((singular_values, vectors))
}

/// Minimum-norm least-squares solution of `a x = b` and the relative residual.
pub fn least_squares(a: &CMatrix, b: &CVector) -> Result<(CVector, f64)> {
    if a.nrows() != b.len() || a.ncols() == 0 {
        return Err(Error::invalid("least squares: shape mismatch"));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let x = svd
        .solve(b, 1e-14 * smax)
        .map_err(|e| Error::invalid(format!("least squares: {e}")))?;
    let r = a * &x - b;
    let bn = b.norm();
    let res = if bn == 0.0 { r.norm() } else { r.norm() / bn };
    Ok((x, res))
}

/// Sine of the angle between two complex vectors viewed as projective points.
pub fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "projective distance of unequal lengths");
    // prescale so huge homogeneous coordinates cannot overflow
    let sa = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let sb = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if sa == 0.0 || sb == 0.0 {
        return if sa == sb { 0.0 } else { 1.0 };
    }
    if !sa.is_finite() || !sb.is_finite() {
        return 1.0;
    }
    let a: Vec<C64> = a.iter().map(|z| z / sa).collect();
    let b: Vec<C64> = b.iter().map(|z| z / sb).collect();
    let (a, b) = (a.as_slice(), b.as_slice());
    let na = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return if na == nb { 0.0 } else { 1.0 };
    }
    // norm of the component of b/|b| orthogonal to a/|a|
    let inner: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() / (na * nb);
    let orth: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (y / nb - x / na * inner).norm_sqr())
        .sum();
    orth.sqrt().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn zero_matrix_has_full_null_space() {
        let ns = null_space(&CMatrix::zeros(3, 4), 1e-10).unwrap();
        assert_eq!(ns.dim(), 4);
        assert_eq!(ns.rank, 0);
    }

    #[test]
    fn identity_has_trivial_null_space() {
        let ns = null_space(&CMatrix::identity(4, 4), 1e-10).unwrap();
        assert_eq!(ns.dim(), 0);
    }

    #[test]
    fn empty_matrix_is_rejected() {
        assert!(null_space(&CMatrix::zeros(3, 0), 1e-10).is_err());
        assert!(null_space(&CMatrix::zeros(3, 3), 0.0).is_err());
    }

    #[test]
    fn generic_wide_matrix_has_one_dimensional_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let m = random_matrix(11, 12, &mut rng);
            let ns = null_space(&m, 1e-10).unwrap();
            assert_eq!(ns.dim(), 1);
            assert!((&m * &ns.basis[0]).norm() < 1e-12);
            assert_eq!(ns.dim() + ns.rank, 12);
        }
    }

    #[test]
    fn rank_deficient_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(9, 4, &mut rng) * random_matrix(4, 9, &mut rng);
        let ns = null_space(&m, 1e-10).unwrap();
        assert_eq!(ns.rank, 4);
        assert_eq!(ns.dim(), 5);
        assert!(ns.gap() > 1e8);
    }

    #[test]
    fn projective_distance_ignores_scale() {
        let a = [C64::new(1.0, 2.0), C64::new(-0.5, 0.1)];
        let s = C64::new(0.3, -4.0);
        let b = [a[0] * s, a[1] * s];
        assert!(projective_distance(&a, &b) < 1e-15);
        let c = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let d = [C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert!((projective_distance(&c, &d) - 1.0).abs() < 1e-15);
        let huge = [C64::new(1e200, 3e199), C64::new(1.0, 0.0)];
        assert!(projective_distance(&huge, &c) < 1e-15);
    }

    #[test]
    fn least_squares_recovers_consistent_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(8, 3, &mut rng);
        let x = CVector::from_fn(3, |i, _| C64::new(i as f64, 1.0));
        let (sol, res) = least_squares(&a, &(&a * &x)).unwrap();
        assert!((sol - x).norm() < 1e-12);
        assert!(res < 1e-13);
    }
}
