//! Continuous Lyapunov and Sylvester equations by real Schur reduction
//! and quasi-triangular back-substitution.

use nalgebra::{DMatrix, Schur};

use crate::error::{Error, Result};

/// Real Schur form `A = Q T Qᵀ` with the diagonal block structure of `T`.
#[derive(Clone, Debug)]
pub struct SchurForm {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
    /// `(start, size)` of each 1×1 or 2×2 diagonal block.
    pub blocks: Vec<(usize, usize)>,
    norm: f64,
}

impl SchurForm {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::InvalidParameter("Schur form needs a square matrix".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric {
                message: "matrix has non-finite entries".into(),
                residual: f64::NAN,
            });
        }
        let n = a.nrows();
        let norm = a.norm();
        if n == 0 {
            return Ok(Self { q: DMatrix::zeros(0, 0), t: DMatrix::zeros(0, 0), blocks: Vec::new(), norm });
        }
        let schur = Schur::try_new(a.clone(), f64::EPSILON, 100 * n.max(10)).ok_or_else(|| Error::Numeric {
            message: "real Schur iteration did not converge".into(),
            residual: f64::NAN,
        })?;
        let (q, mut t) = schur.unpack();
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < n {
            let coupled = i + 1 < n && {
                let sub = t[(i + 1, i)].abs();
                sub > f64::EPSILON * (t[(i, i)].abs() + t[(i + 1, i + 1)].abs()).max(f64::EPSILON * norm)
            };
            if coupled {
                blocks.push((i, 2));
                i += 2;
            } else {
                if i + 1 < n {
                    t[(i + 1, i)] = 0.0;
                }
                blocks.push((i, 1));
                i += 1;
            }
        }
        for j in 0..n {
            for r in j + 2..n {
                t[(r, j)] = 0.0;
            }
        }
        Ok(Self { q, t, blocks, norm })
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Largest real part among the eigenvalues.
    pub fn max_real_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|&(s, size)| {
                if size == 1 {
                    self.t[(s, s)]
                } else {
                    let (a, b, c, d) = (self.t[(s, s)], self.t[(s, s + 1)], self.t[(s + 1, s)], self.t[(s + 1, s + 1)]);
                    let half_trace = 0.5 * (a + d);
                    let disc = 0.25 * (a - d) * (a - d) + b * c;
                    half_trace + disc.max(0.0).sqrt()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Refuses matrices whose spectrum is not strictly in the left half plane.
    pub fn check_hurwitz(&self) -> Result<()> {
        let max_real = self.max_real_eigenvalue();
        if self.dim() > 0 && !(max_real <= -4.0 * f64::EPSILON * self.norm) {
            return Err(Error::Unstable { max_real });
        }
        Ok(())
    }
}

/// Solves `T Z + Z Bᵀ = R` for quasi-upper-triangular `T` (given by its
/// blocks) and a small dense `B`. `R` is overwritten by `Z`. When `R` has
/// fewer rows than `T`, only the leading principal part of `T` is used.
fn solve_triangular_sylvester(schur: &SchurForm, b: &DMatrix<f64>, r: &mut DMatrix<f64>) -> Result<()> {
    let t = &schur.t;
    let m = b.nrows();
    let rows = r.nrows();
    for &(k0, s) in schur.blocks.iter().rev().filter(|&&(k0, s)| k0 + s <= rows) {
        // rows k0..k0+s are final once the blocks below have been eliminated
        let dim = s * m;
        let mut sys = DMatrix::zeros(dim, dim);
        let mut rhs = nalgebra::DVector::zeros(dim);
        for col in 0..m {
            for i in 0..s {
                let row = col * s + i;
                rhs[row] = r[(k0 + i, col)];
                for j in 0..s {
                    sys[(row, col * s + j)] += t[(k0 + i, k0 + j)];
                }
                for c2 in 0..m {
                    sys[(row, c2 * s + i)] += b[(col, c2)];
                }
            }
        }
        let z = sys.lu().solve(&rhs).ok_or_else(|| Error::Numeric {
            message: "singular block in Sylvester back-substitution".into(),
            residual: f64::NAN,
        })?;
        for col in 0..m {
            for i in 0..s {
                r[(k0 + i, col)] = z[col * s + i];
            }
        }
        // eliminate the solved rows from the rows above
        for col in 0..m {
            for j in 0..s {
                let zj = r[(k0 + j, col)];
                if zj != 0.0 && k0 > 0 {
                    let t_col = t.column(k0 + j);
                    r.column_mut(col).rows_mut(0, k0).axpy(-zj, &t_col.rows(0, k0), 1.0);
                }
            }
        }
    }
    Ok(())
}

/// Solves `A Y + Y Bᵀ + C = 0` given the Schur form of `A` and a small `B`.
pub fn solve_sylvester_small(schur: &SchurForm, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut r = -(schur.q.transpose() * c);
    solve_triangular_sylvester(schur, b, &mut r)?;
    Ok(&schur.q * r)
}

/// Stationary covariance and its relative residual.
#[derive(Clone, Debug)]
pub struct LyapunovSolution {
    pub x: DMatrix<f64>,
    /// Backward error, see [`lyapunov_residual`].
    pub residual: f64,
}

/// Solves `A X + X Aᵀ + Q = 0` for symmetric `Q` and Hurwitz `A`.
///
/// `A` is first balanced by a diagonal similarity `D⁻¹ A D`; the solution
/// of the balanced equation maps back as `X = D X̃ D`.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<LyapunovSolution> {
    if q.nrows() != a.nrows() || q.ncols() != a.ncols() {
        return Err(Error::InvalidParameter(format!(
            "Lyapunov right-hand side is {}x{}, expected {n}x{n}",
            q.nrows(),
            q.ncols(),
            n = a.nrows()
        )));
    }
    let d = balancing_scales(a);
    let ab = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * d[j] / d[i]);
    let qb = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] / (d[i] * d[j]));
    let schur = SchurForm::new(&ab)?;
    schur.check_hurwitz()?;
    let sol = solve_lyapunov_schur(&schur, &ab, &qb)?;
    let x = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| sol.x[(i, j)] * d[i] * d[j]);
    let residual = lyapunov_residual(a, &x, q);
    Ok(LyapunovSolution { x, residual })
}

/// Power-of-two scales `d` that make row and column norms of `D⁻¹ A D`
/// comparable, off-diagonal entries only.
pub fn balancing_scales(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut d = vec![1.0f64; n];
    let mut converged = n == 0;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let (mut c, mut r) = (0.0, 0.0);
            for j in (0..n).filter(|&j| j != i) {
                c += (a[(j, i)] * d[i] / d[j]).abs();
                r += (a[(i, j)] * d[j] / d[i]).abs();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let total = c + r;
            let (mut cs, mut rs) = (c, r);
            while cs < rs / 2.0 {
                cs *= 2.0;
                rs /= 2.0;
                f *= 2.0;
            }
            while cs >= rs * 2.0 {
                cs /= 2.0;
                rs *= 2.0;
                f /= 2.0;
            }
            if cs + rs < 0.95 * total {
                d[i] *= f;
                converged = false;
            }
        }
    }
    d
}

/// As [`solve_lyapunov`], reusing a Schur form of `A`.
pub fn solve_lyapunov_schur(schur: &SchurForm, a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<LyapunovSolution> {
    let n = schur.dim();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::InvalidParameter(format!("Lyapunov right-hand side is {}x{}, expected {n}x{n}", q.nrows(), q.ncols())));
    }
    // T Y + Y Tᵀ = -Qᵀ Q Q, solved one column block at a time from the
    // right; rows below the block follow from symmetry
    let mut r = -(schur.q.transpose() * q * &schur.q);
    let t = &schur.t;
    for &(l0, s) in schur.blocks.iter().rev() {
        let right = l0 + s;
        if right < n {
            let t_lr = t.view((l0, right), (s, n - right)).transpose();
            let (mut left, solved) = r.columns_range_pair_mut(l0..right, right..n);
            for c in 0..s {
                for k in 0..n - right {
                    left[(right + k, c)] = solved[(l0 + c, k)];
                }
            }
            left.rows_mut(0, right).gemm(-1.0, &solved.rows(0, right), &t_lr, 1.0);
            let coupling = t.view((0, right), (right, n - right)) * left.rows(right, n - right);
            let mut head = left.rows_mut(0, right);
            head -= coupling;
        }
        let t_ll = t.view((l0, l0), (s, s)).clone_owned();
        let mut block = r.view((0, l0), (right, s)).clone_owned();
        solve_triangular_sylvester(schur, &t_ll, &mut block)?;
        r.view_mut((0, l0), (right, s)).copy_from(&block);
    }
    let mut x = &schur.q * r * schur.q.transpose();
    x = (&x + x.transpose()) * 0.5;
    let residual = lyapunov_residual(a, &x, q);
    Ok(LyapunovSolution { x, residual })
}

/// Normwise backward error `‖A X + X Aᵀ + Q‖ / (2‖A‖‖X‖ + ‖Q‖)`.
pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let ax = a * x;
    let res = (&ax + ax.transpose() + q).norm();
    let scale = 2.0 * a.norm() * x.norm() + q.norm();
    if scale > 0.0 {
        res / scale
    } else {
        res
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_ou() {
        let (alpha, beta) = (2.5, 0.7);
        let sol = solve_lyapunov(&DMatrix::from_element(1, 1, -alpha), &DMatrix::from_element(1, 1, beta * beta)).unwrap();
        assert_relative_eq!(sol.x[(0, 0)], beta * beta / (2.0 * alpha), max_relative = 1e-12);
    }

    #[test]
    fn unstable_is_refused() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]);
        let err = solve_lyapunov(&a, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }));
        let a = DMatrix::from_row_slice(1, 1, &[0.1]);
        assert!(matches!(solve_lyapunov(&a, &DMatrix::identity(1, 1)), Err(Error::Unstable { .. })));
    }

    #[test]
    fn sylvester_small_residual() {
        let a = DMatrix::from_row_slice(3, 3, &[-1.0, 2.0, 0.0, -3.0, -1.0, 0.5, 0.2, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -9.0, -0.3]);
        let c = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, -1.0, 0.0, 2.0]);
        let schur = SchurForm::new(&a).unwrap();
        let y = solve_sylvester_small(&schur, &b, &c).unwrap();
        let res = &a * &y + &y * b.transpose() + &c;
        assert!(res.norm() < 1e-12);
    }
}
