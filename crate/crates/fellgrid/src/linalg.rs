//! Dense complex matrices and the spectral machinery used by every fiber and
//! norm computation: operator norms, Hermitian eigendecomposition, the
//! positive-semidefinite order, fractional matrix powers, and polar factors.
//!
//! The eigensolver is a cyclic Jacobi iteration on Hermitian matrices. It is
//! deterministic, which matters here: reports produced from the same inputs
//! must be byte-identical.

use num_complex::Complex64;
use thiserror::Error;

/// Hermitian-check slack used by [`CMatrix::hermitian_eig`].
const HERMITIAN_SLACK: f64 = 1e-10;
/// Relative eigenvalue cutoff below which a PSD matrix is treated as singular.
const SUPPORT_CUTOFF: f64 = 1e-10;
/// Off-diagonal mass target for the Jacobi sweep, relative to the Frobenius
/// norm of the input.
const JACOBI_TARGET: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: max |m - m*| entry {defect:.3e} exceeds {allowed:.3e}")]
    NotHermitian { defect: f64, allowed: f64 },
    #[error("shape mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    ShapeMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error(
        "matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e} below -{allowed:.3e}"
    )]
    NotPositive { eigenvalue: f64, allowed: f64 },
}

/// Combined comparison tolerance: `abs + rel * scale`.
///
/// Every tolerance-based comparison in the crate goes through this policy so
/// that the slack in any reported violation is auditable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            abs: 1e-9,
            rel: 1e-7,
        }
    }
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64) -> Self {
        Tolerance { abs, rel }
    }

    /// Allowed slack when comparing quantities of the given magnitude.
    pub fn allowance(&self, scale: f64) -> f64 {
        self.abs + self.rel * scale.abs()
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl std::fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be positive");
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Real entries given row by row; handy in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        CMatrix::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = CMatrix::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), other.shape(), "add: shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), other.shape(), "sub: shape mismatch");
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, z: Complex64) -> CMatrix {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= z;
        }
        out
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul: inner dimensions differ");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Gram matrix `self* . self`; exactly Hermitian by construction.
    pub fn gram(&self) -> CMatrix {
        let n = self.cols;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..self.rows {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                out[(i, j)] = acc;
                if i != j {
                    out[(j, i)] = acc.conj();
                } else {
                    out[(i, i)] = Complex64::new(acc.re, 0.0);
                }
            }
        }
        out
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.rows == 1 && self.cols == 1 {
            return self[(0, 0)].norm();
        }
        // Work with the smaller Gram side.
        let gram = if self.rows < self.cols {
            self.adjoint().gram()
        } else {
            self.gram()
        };
        let (eigs, _) = gram.hermitian_eig().expect("gram matrix is Hermitian");
        eigs[0].max(0.0).sqrt()
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
    ///
    /// Returns eigenvalues in descending order together with the unitary
    /// matrix whose columns are the matching eigenvectors.
    pub fn hermitian_eig(&self) -> Result<(Vec<f64>, CMatrix), LinalgError> {
        let allowed = HERMITIAN_SLACK * (1.0 + self.max_abs());
        let defect = self.hermitian_defect();
        if defect > allowed {
            return Err(LinalgError::NotHermitian { defect, allowed });
        }
        let n = self.rows;
        // Fold in the adjoint so the working copy is exactly Hermitian.
        let mut a = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()).scale(0.5)
            }
        });
        let mut v = CMatrix::identity(n);
        let target = JACOBI_TARGET * self.frobenius_norm();

        for _sweep in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += 2.0 * a[(i, j)].norm_sqr();
                }
            }
            if off.sqrt() <= target {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let abs = apq.norm();
                    if abs < 1e-300 {
                        continue;
                    }
                    let phase = apq / abs;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (app - aqq) / (2.0 * abs);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let s_ph = phase.scale(s);
                    // Columns p,q of A <- A·U with U = [[c, -s·ph],[s·conj(ph), c]].
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp.scale(c) + akq * s_ph.conj();
                        a[(k, q)] = akq.scale(c) - akp * s_ph;
                    }
                    // Rows p,q of A <- U*·A.
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = apk.scale(c) + aqk * s_ph;
                        a[(q, k)] = aqk.scale(c) - apk * s_ph.conj();
                    }
                    a[(p, q)] = Complex64::new(0.0, 0.0);
                    a[(q, p)] = Complex64::new(0.0, 0.0);
                    a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                    // Eigenvector accumulator V <- V·U.
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp.scale(c) + vkq * s_ph.conj();
                        v[(k, q)] = vkq.scale(c) - vkp * s_ph;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].re.partial_cmp(&a[(i, i)].re).unwrap());
        let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
        let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        Ok((eigenvalues, vectors))
    }

    /// `V f(Λ) V*` with `f(λ) = λ^p` on the retained spectrum.
    ///
    /// Eigenvalues below `1e-10 · λ_max` count as zero and are mapped to zero,
    /// which realizes powers on the support only; negative `p` therefore acts
    /// as a pseudo-inverse power.
    pub fn psd_power(&self, p: f64) -> Result<CMatrix, LinalgError> {
        let (eigs, v) = self.hermitian_eig()?;
        let max_abs_eig = eigs.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
        let allowed = Tolerance::default().allowance(max_abs_eig);
        if let Some(&min) = eigs.last() {
            if min < -allowed {
                return Err(LinalgError::NotPositive {
                    eigenvalue: min,
                    allowed,
                });
            }
        }
        let top = eigs.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = SUPPORT_CUTOFF * top;
        let n = self.rows;
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in eigs.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let f = lambda.powf(p);
            for i in 0..n {
                let vik = v[(i, k)].scale(f);
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        Ok(out)
    }

    /// Partial-isometry factor of the polar-type decomposition
    /// `self = factor · (self* self)^{1/2}`.
    ///
    /// Satisfies `factor* factor = (self* self)^{1/2}` and
    /// `factor factor* = (self self*)^{1/2}` up to roundoff.
    pub fn polar_factor(&self) -> CMatrix {
        if self.is_zero() {
            return self.clone();
        }
        let quarter_inv = self
            .gram()
            .psd_power(-0.25)
            .expect("gram matrix is positive semidefinite");
        self.matmul(&quarter_inv)
    }
}

/// `a <= b` in the positive-semidefinite order: smallest eigenvalue of
/// `b - a` is at least `-tol`.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool, LinalgError> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(LinalgError::ShapeMismatch {
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    let diff = b.sub(a);
    let (eigs, _) = diff.hermitian_eig()?;
    Ok(eigs.last().is_none_or(|&min| min >= -tol))
}
