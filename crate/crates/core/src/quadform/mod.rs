//! Affinely parameterized quadratic systems
//!
//! ```text
//! f(x, u) = Q(x, x~, u) + L(x, u) + K(u),   x~ = x  or  conj(x)
//! ```
//!
//! where every quadratic and linear coefficient is affine in the real
//! parameter vector `u`: the coefficient attached to parameter slot `m` is
//! multiplied by `1` for `m = 0` and by `u[m - 1]` otherwise. Constant terms
//! are `K0 + K1 u`.
//!
//! Coefficients are kept as sparse term lists; `(j, l)` and `(l, j)` entries
//! are not merged.

mod json;

pub use json::{ScalarSpec, SystemSpec};

use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix, LuFactorization};
use crate::scalar::{max_modulus, re, Real, C};

/// Residual allowed at a nominal point.
pub const NOMINAL_RESIDUAL_TOL: f64 = 1e-9;

/// One entry of `Q_m`: contributes `coef * x[left] * x~[right]` to row `row`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadTerm<T: Real> {
    pub param: usize,
    pub row: usize,
    pub left: usize,
    pub right: usize,
    pub coef: C<T>,
}

/// One entry of `L_m`: contributes `coef * x[col]` to row `row`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinTerm<T: Real> {
    pub param: usize,
    pub row: usize,
    pub col: usize,
    pub coef: C<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSystem<T: Real> {
    n: usize,
    k: usize,
    conjugate: bool,
    quad: Vec<QuadTerm<T>>,
    lin: Vec<LinTerm<T>>,
    k0: Vec<C<T>>,
    k1: DenseMatrix<T>,
}

impl<T: Real> QuadraticSystem<T> {
    /// Empty system with `n` states and `k` parameters. With `conjugate` set
    /// the right argument of every quadratic term is conjugated.
    pub fn new(n: usize, k: usize, conjugate: bool) -> Self {
        Self {
            n,
            k,
            conjugate,
            quad: Vec::new(),
            lin: Vec::new(),
            k0: vec![re(T::zero()); n],
            k1: DenseMatrix::zeros(n, k),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_conjugate(&self) -> bool {
        self.conjugate
    }

    pub fn quad_terms(&self) -> &[QuadTerm<T>] {
        &self.quad
    }

    pub fn lin_terms(&self) -> &[LinTerm<T>] {
        &self.lin
    }

    pub fn k0(&self) -> &[C<T>] {
        &self.k0
    }

    pub fn k1(&self) -> &DenseMatrix<T> {
        &self.k1
    }

    fn check_param(&self, m: usize) -> Result<()> {
        if m > self.k {
            return Err(Error::Dimension(format!(
                "parameter slot {m} exceeds k = {}",
                self.k
            )));
        }
        Ok(())
    }

    fn check_state(&self, idx: usize) -> Result<()> {
        if idx >= self.n {
            return Err(Error::Dimension(format!(
                "state index {idx} exceeds n = {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn add_quad(
        &mut self,
        param: usize,
        row: usize,
        left: usize,
        right: usize,
        coef: C<T>,
    ) -> Result<&mut Self> {
        self.check_param(param)?;
        for idx in [row, left, right] {
            self.check_state(idx)?;
        }
        self.quad.push(QuadTerm {
            param,
            row,
            left,
            right,
            coef,
        });
        Ok(self)
    }

    pub fn add_lin(
        &mut self,
        param: usize,
        row: usize,
        col: usize,
        coef: C<T>,
    ) -> Result<&mut Self> {
        self.check_param(param)?;
        self.check_state(row)?;
        self.check_state(col)?;
        self.lin.push(LinTerm {
            param,
            row,
            col,
            coef,
        });
        Ok(self)
    }

    pub fn set_k0(&mut self, row: usize, value: C<T>) -> Result<&mut Self> {
        self.check_state(row)?;
        self.k0[row] = value;
        Ok(self)
    }

    pub fn set_k1(&mut self, row: usize, param: usize, value: C<T>) -> Result<&mut Self> {
        self.check_state(row)?;
        if param >= self.k {
            return Err(Error::Dimension(format!(
                "K1 column {param} exceeds k = {}",
                self.k
            )));
        }
        self.k1[(row, param)] = value;
        Ok(self)
    }

    /// True when every coefficient is real.
    pub fn has_real_coefficients(&self) -> bool {
        self.quad.iter().all(|t| t.coef.im == T::zero())
            && self.lin.iter().all(|t| t.coef.im == T::zero())
            && self.k0.iter().all(|z| z.im == T::zero())
            && self.k1.as_slice().iter().all(|z| z.im == T::zero())
    }

    /// True when quadratic and linear terms do not depend on `u`.
    pub fn has_parameter_free_jacobian(&self) -> bool {
        self.quad.iter().all(|t| t.param == 0) && self.lin.iter().all(|t| t.param == 0)
    }

    #[inline]
    fn weight(param: usize, u: &[T]) -> T {
        if param == 0 {
            T::one()
        } else {
            u[param - 1]
        }
    }

    #[inline]
    fn right_arg(&self, z: C<T>) -> C<T> {
        if self.conjugate {
            z.conj()
        } else {
            z
        }
    }

    fn check_dims(&self, x: &[C<T>], u: &[T]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "state of length {} for n = {}",
                x.len(),
                self.n
            )));
        }
        if u.len() != self.k {
            return Err(Error::Dimension(format!(
                "parameter of length {} for k = {}",
                u.len(),
                self.k
            )));
        }
        Ok(())
    }

    /// Quadratic part `Q(x, x~, u)` alone.
    pub fn eval_quad(&self, x: &[C<T>], u: &[T]) -> Result<Vec<C<T>>> {
        self.check_dims(x, u)?;
        let mut out = vec![re(T::zero()); self.n];
        for t in &self.quad {
            out[t.row] +=
                t.coef * Self::weight(t.param, u) * x[t.left] * self.right_arg(x[t.right]);
        }
        Ok(out)
    }

    /// `f(x, u)`.
    pub fn eval_f(&self, x: &[C<T>], u: &[T]) -> Result<Vec<C<T>>> {
        let mut out = self.eval_quad(x, u)?;
        for t in &self.lin {
            out[t.row] += t.coef * Self::weight(t.param, u) * x[t.col];
        }
        let ku = self
            .k1
            .mul_vec(&u.iter().map(|&v| re(v)).collect::<Vec<_>>())?;
        for i in 0..self.n {
            out[i] += self.k0[i] + ku[i];
        }
        Ok(out)
    }

    /// Directional derivative of `f` in `x` along `y`. For conjugated systems
    /// this is `df/dx y + df/dx~ conj(y)`.
    pub fn eval_jacobian_action(&self, x: &[C<T>], u: &[T], y: &[C<T>]) -> Result<Vec<C<T>>> {
        self.check_dims(x, u)?;
        if y.len() != self.n {
            return Err(Error::Dimension(format!(
                "direction of length {} for n = {}",
                y.len(),
                self.n
            )));
        }
        let mut out = vec![re(T::zero()); self.n];
        for t in &self.quad {
            let c = t.coef * Self::weight(t.param, u);
            out[t.row] += c
                * (y[t.left] * self.right_arg(x[t.right]) + x[t.left] * self.right_arg(y[t.right]));
        }
        for t in &self.lin {
            out[t.row] += t.coef * Self::weight(t.param, u) * y[t.col];
        }
        Ok(out)
    }

    /// Wirtinger blocks `(df/dx, df/dconj(x))` at `(x, u)`. The second block is
    /// zero for systems without conjugation.
    pub fn jacobian_blocks(&self, x: &[C<T>], u: &[T]) -> Result<(DenseMatrix<T>, DenseMatrix<T>)> {
        self.check_dims(x, u)?;
        let mut a = DenseMatrix::zeros(self.n, self.n);
        let mut b = DenseMatrix::zeros(self.n, self.n);
        for t in &self.quad {
            let c = t.coef * Self::weight(t.param, u);
            a[(t.row, t.left)] += c * self.right_arg(x[t.right]);
            if self.conjugate {
                b[(t.row, t.right)] += c * x[t.left];
            } else {
                a[(t.row, t.right)] += c * x[t.left];
            }
        }
        for t in &self.lin {
            a[(t.row, t.col)] += t.coef * Self::weight(t.param, u);
        }
        Ok((a, b))
    }

    /// Converts every coefficient to another scalar precision.
    pub fn cast<U: Real>(&self) -> QuadraticSystem<U> {
        let cz = |z: C<T>| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()));
        QuadraticSystem {
            n: self.n,
            k: self.k,
            conjugate: self.conjugate,
            quad: self
                .quad
                .iter()
                .map(|t| QuadTerm {
                    param: t.param,
                    row: t.row,
                    left: t.left,
                    right: t.right,
                    coef: cz(t.coef),
                })
                .collect(),
            lin: self
                .lin
                .iter()
                .map(|t| LinTerm {
                    param: t.param,
                    row: t.row,
                    col: t.col,
                    coef: cz(t.coef),
                })
                .collect(),
            k0: self.k0.iter().map(|&z| cz(z)).collect(),
            k1: self.k1.cast(),
        }
    }
}

/// Which linearization the nominal Jacobian uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianForm {
    /// `n x n` matrix `df/dx`; valid when `f` has no conjugated arguments.
    Direct,
    /// `2n x 2n` block `[[A, B], [conj B, conj A]]` over `(x, conj x)`.
    Block,
}

/// Nominal solution with its factorized Jacobian.
#[derive(Debug, Clone)]
pub struct NominalPoint<T: Real> {
    pub x_star: Vec<C<T>>,
    pub u_star: Vec<T>,
    pub form: JacobianForm,
    pub jac_factor: LuFactorization<T>,
    /// Top blocks `(M, N)` of the inverse block Jacobian (block form only).
    pub blocks: Option<(DenseMatrix<T>, DenseMatrix<T>)>,
}

impl<T: Real> NominalPoint<T> {
    pub fn m_star(&self) -> Option<&DenseMatrix<T>> {
        self.blocks.as_ref().map(|b| &b.0)
    }

    pub fn n_star(&self) -> Option<&DenseMatrix<T>> {
        self.blocks.as_ref().map(|b| &b.1)
    }
}

fn check_nominal_residual<T: Real>(sys: &QuadraticSystem<T>, x: &[C<T>], u: &[T]) -> Result<()> {
    let res = max_modulus(&sys.eval_f(x, u)?);
    if !(res <= T::tol(NOMINAL_RESIDUAL_TOL)) {
        return Err(Error::NotASolution(res.as_f64()));
    }
    Ok(())
}

/// Builds the nominal point using the linearization natural to `sys`: the
/// direct Jacobian for unconjugated systems, the block form otherwise.
pub fn make_nominal<T: Real>(
    sys: &QuadraticSystem<T>,
    x_star: &[C<T>],
    u_star: &[T],
) -> Result<NominalPoint<T>> {
    if sys.is_conjugate() {
        return make_nominal_block(sys, x_star, u_star);
    }
    check_nominal_residual(sys, x_star, u_star)?;
    let (a, _) = sys.jacobian_blocks(x_star, u_star)?;
    let jac_factor = lu_factor(&a)?;
    if jac_factor.is_singular() {
        return Err(Error::SingularJacobian);
    }
    Ok(NominalPoint {
        x_star: x_star.to_vec(),
        u_star: u_star.to_vec(),
        form: JacobianForm::Direct,
        jac_factor,
        blocks: None,
    })
}

/// Builds the nominal point in block form regardless of conjugation.
pub fn make_nominal_block<T: Real>(
    sys: &QuadraticSystem<T>,
    x_star: &[C<T>],
    u_star: &[T],
) -> Result<NominalPoint<T>> {
    check_nominal_residual(sys, x_star, u_star)?;
    let n = sys.n();
    let (a, b) = sys.jacobian_blocks(x_star, u_star)?;
    let jss = block_jacobian(&a, &b);
    let jac_factor = lu_factor(&jss)?;
    if jac_factor.is_singular() {
        return Err(Error::SingularJacobian);
    }
    let inv = jac_factor.inverse()?;
    let blocks = Some((inv.block(0, 0, n, n), inv.block(0, n, n, n)));
    Ok(NominalPoint {
        x_star: x_star.to_vec(),
        u_star: u_star.to_vec(),
        form: JacobianForm::Block,
        jac_factor,
        blocks,
    })
}

/// `[[A, B], [conj B, conj A]]`.
pub(crate) fn block_jacobian<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> DenseMatrix<T> {
    let n = a.rows();
    let mut m = DenseMatrix::zeros(2 * n, 2 * n);
    m.set_block(0, 0, a);
    m.set_block(0, n, b);
    m.set_block(n, 0, &b.conj());
    m.set_block(n, n, &a.conj());
    m
}
