//! Solvability certificates built from the triple `(e, g, h)`.
//!
//! With `J**` the nominal Jacobian, `x*`/`u*` the nominal point and all norms
//! the infinity norm:
//!
//! * `e = |J**^-1 (f(x*, u) - f(x*, u*))|`
//! * `g = |J**^-1 J*(u; .) - I|` (induced)
//! * `h >= max_{|y| <= 1} |J**^-1 Q(y, y, u)|`
//!
//! A solution exists within `|x - x*| <= rho` whenever
//! `rho h + g + e / rho <= 1`. Minimizing over `rho` gives the ball and
//! unbounded certificates below. Block-form nominal points use the
//! `M*`, `N*` blocks of the inverse block Jacobian in place of `J**^-1`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inf_norm_induced, inf_norm_vec, DenseMatrix};
use crate::quadform::{JacobianForm, NominalPoint, QuadraticSystem};
use crate::scalar::{re, Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateTerms<T: Real> {
    pub e: T,
    pub g: T,
    pub h: T,
    /// Whether `h` is the exact quadratic gain rather than the row-sum bound.
    pub h_exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallCertificate<T: Real> {
    pub certified: bool,
    /// Radius at which the self-map argument closes.
    pub witness_radius: Option<T>,
    /// Infimum of `rho h + g + e / rho` over the admissible radii.
    pub lhs_value: T,
}

/// Thresholds of the tightness theorem for systems whose quadratic and
/// linear terms do not depend on `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TightnessBounds<T: Real> {
    /// `e <= inner` guarantees a solution in the ball.
    pub inner: T,
    /// `e > outer` rules out any solution in the ball.
    pub outer: T,
    pub ball_radius: T,
    pub h_star: T,
}

impl<T: Real> TightnessBounds<T> {
    pub fn guarantees(&self, e: T) -> bool {
        e <= self.inner
    }

    pub fn excludes(&self, e: T) -> bool {
        e > self.outer
    }
}

fn check_u<T: Real>(nominal: &NominalPoint<T>, sys: &QuadraticSystem<T>, u: &[T]) -> Result<()> {
    if u.len() != sys.k() || nominal.u_star.len() != sys.k() || nominal.x_star.len() != sys.n() {
        return Err(Error::Dimension(format!(
            "u has {} entries, system has k = {}, n = {}",
            u.len(),
            sys.k(),
            sys.n()
        )));
    }
    Ok(())
}

/// Evaluates `(e, g, h)` at `u`.
pub fn compute_terms<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
) -> Result<CertificateTerms<T>> {
    check_u(nominal, sys, u)?;
    match nominal.form {
        JacobianForm::Direct => {
            if sys.is_conjugate() {
                return Err(Error::UnsupportedForm(
                    "direct Jacobian cannot represent a conjugated system".into(),
                ));
            }
            direct_terms(nominal, sys, u)
        }
        JacobianForm::Block => block_terms(nominal, sys, u),
    }
}

fn affine_deviation<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
) -> Result<Vec<C<T>>> {
    let fu = sys.eval_f(&nominal.x_star, u)?;
    let f0 = sys.eval_f(&nominal.x_star, &nominal.u_star)?;
    Ok(fu.iter().zip(&f0).map(|(a, b)| a - b).collect())
}

fn unit<T: Real>(n: usize, j: usize, v: C<T>) -> Vec<C<T>> {
    let mut e = vec![re(T::zero()); n];
    e[j] = v;
    e
}

fn direct_terms<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
) -> Result<CertificateTerms<T>> {
    let n = sys.n();
    let lu = &nominal.jac_factor;
    let e = inf_norm_vec(&lu.solve(&affine_deviation(nominal, sys, u)?)?);

    let mut ml = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let ej = unit(n, j, re(T::one()));
        let mut col = lu.solve(&sys.eval_jacobian_action(&nominal.x_star, u, &ej)?)?;
        col[j] -= re(T::one());
        ml.set_column(j, &col);
    }
    let g = inf_norm_induced(&ml);

    // Monomial x_j x_l with j <= l collects the (j, l) and (l, j) coefficients.
    let mut columns: BTreeMap<(usize, usize), Vec<C<T>>> = BTreeMap::new();
    for t in sys.quad_terms() {
        let w = if t.param == 0 {
            T::one()
        } else {
            u[t.param - 1]
        };
        let key = (t.left.min(t.right), t.left.max(t.right));
        columns.entry(key).or_insert_with(|| vec![re(T::zero()); n])[t.row] += t.coef * w;
    }
    let mut row_sums = vec![T::zero(); n];
    for col in columns.values() {
        for (acc, z) in row_sums.iter_mut().zip(lu.solve(col)?) {
            *acc += z.norm();
        }
    }
    let h = row_sums.into_iter().fold(T::zero(), T::max);
    Ok(CertificateTerms {
        e,
        g,
        h,
        h_exact: n == 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Monomial {
    /// `y_j y_l`, `j <= l`
    Holo(usize, usize),
    /// `conj(y_j) conj(y_l)`, `j <= l`
    Anti(usize, usize),
    /// `y_j conj(y_l)`
    Mixed(usize, usize),
}

impl Monomial {
    fn conj(self) -> Self {
        match self {
            Monomial::Holo(j, l) => Monomial::Anti(j, l),
            Monomial::Anti(j, l) => Monomial::Holo(j, l),
            Monomial::Mixed(j, l) => Monomial::Mixed(l, j),
        }
    }
}

fn block_terms<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
) -> Result<CertificateTerms<T>> {
    let n = sys.n();
    let (m, nn) = nominal.blocks.as_ref().ok_or_else(|| {
        Error::UnsupportedForm("block nominal point without inverse blocks".into())
    })?;
    let apply = |v: &[C<T>]| -> Result<Vec<C<T>>> {
        let a = m.mul_vec(v)?;
        let vc: Vec<C<T>> = v.iter().map(|z| z.conj()).collect();
        let b = nn.mul_vec(&vc)?;
        Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    };

    let e = inf_norm_vec(&apply(&affine_deviation(nominal, sys, u)?)?);

    // y -> M J(y) + N conj(J(y)) - y  =  P y + R conj(y).
    // Columns of df/dx and df/dconj(x) come from probing along e_j and i e_j.
    let i_unit = C::new(T::zero(), T::one());
    let half = T::lit(0.5);
    let conj_all = |v: &[C<T>]| -> Vec<C<T>> { v.iter().map(|z| z.conj()).collect() };
    let mut p = DenseMatrix::zeros(n, n);
    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let j_re = sys.eval_jacobian_action(&nominal.x_star, u, &unit(n, j, re(T::one())))?;
        let j_im = sys.eval_jacobian_action(&nominal.x_star, u, &unit(n, j, i_unit))?;
        let a_col: Vec<C<T>> = j_re
            .iter()
            .zip(&j_im)
            .map(|(x, y)| (x - i_unit * y) * half)
            .collect();
        let b_col: Vec<C<T>> = j_re
            .iter()
            .zip(&j_im)
            .map(|(x, y)| (x + i_unit * y) * half)
            .collect();
        let ma = m.mul_vec(&a_col)?;
        let nb = nn.mul_vec(&conj_all(&b_col))?;
        let mb = m.mul_vec(&b_col)?;
        let na = nn.mul_vec(&conj_all(&a_col))?;
        let mut pcol: Vec<C<T>> = ma.iter().zip(&nb).map(|(x, y)| x + y).collect();
        pcol[j] -= re(T::one());
        let rcol: Vec<C<T>> = mb.iter().zip(&na).map(|(x, y)| x + y).collect();
        p.set_column(j, &pcol);
        r.set_column(j, &rcol);
    }
    let g = (0..n)
        .map(|i| {
            p.row(i).iter().map(|z| z.norm()).sum::<T>()
                + r.row(i).iter().map(|z| z.norm()).sum::<T>()
        })
        .fold(T::zero(), T::max);

    // M Q(y) + N conj(Q(y)), grouped by monomial.
    let mut coeffs: BTreeMap<Monomial, Vec<C<T>>> = BTreeMap::new();
    for t in sys.quad_terms() {
        let w = if t.param == 0 {
            T::one()
        } else {
            u[t.param - 1]
        };
        let c = t.coef * w;
        let mono = if sys.is_conjugate() {
            Monomial::Mixed(t.left, t.right)
        } else {
            Monomial::Holo(t.left.min(t.right), t.left.max(t.right))
        };
        let direct = coeffs.entry(mono).or_insert_with(|| vec![re(T::zero()); n]);
        for (r_idx, acc) in direct.iter_mut().enumerate() {
            *acc += m[(r_idx, t.row)] * c;
        }
        let mirrored = coeffs
            .entry(mono.conj())
            .or_insert_with(|| vec![re(T::zero()); n]);
        for (r_idx, acc) in mirrored.iter_mut().enumerate() {
            *acc += nn[(r_idx, t.row)] * c.conj();
        }
    }
    let mut row_sums = vec![T::zero(); n];
    for col in coeffs.values() {
        for (acc, z) in row_sums.iter_mut().zip(col) {
            *acc += z.norm();
        }
    }
    let h = row_sums.into_iter().fold(T::zero(), T::max);
    Ok(CertificateTerms {
        e,
        g,
        h,
        h_exact: n == 1 && sys.is_conjugate(),
    })
}

impl<T: Real> CertificateTerms<T> {
    /// Ball certificate: minimizes `rho h + g + e / rho` over `rho` in `(0, r]`.
    pub fn ball(&self, r: T) -> Result<BallCertificate<T>> {
        if !(r > T::zero()) {
            return Err(Error::Domain(format!("radius must be positive, got {r}")));
        }
        let CertificateTerms { e, g, h, .. } = *self;
        let one = T::one();
        if e == T::zero() {
            // x* solves the system; the infimum g is approached as rho -> 0.
            if h == T::zero() {
                return Ok(BallCertificate {
                    certified: g <= one,
                    witness_radius: (g <= one).then_some(r),
                    lhs_value: g,
                });
            }
            let certified = g < one;
            let witness = certified.then(|| r.min((one - g) / h));
            return Ok(BallCertificate {
                certified,
                witness_radius: witness,
                lhs_value: g,
            });
        }
        let rho = if h > T::zero() {
            (e / h).sqrt().min(r)
        } else {
            r
        };
        let lhs = rho * h + g + e / rho;
        let certified = lhs <= one;
        Ok(BallCertificate {
            certified,
            witness_radius: certified.then_some(rho),
            lhs_value: lhs,
        })
    }

    /// Union over all radii: `2 sqrt(h e) + g <= 1`.
    pub fn unbounded(&self) -> BallCertificate<T> {
        let CertificateTerms { e, g, h, .. } = *self;
        let one = T::one();
        let lhs = T::lit(2.0) * (h * e).sqrt() + g;
        // The infimum is attained only when both e and h are positive, or both vanish.
        let attained = (e > T::zero() && h > T::zero()) || (e == T::zero() && h == T::zero());
        let certified = if attained { lhs <= one } else { lhs < one };
        let witness = (certified && e > T::zero() && h > T::zero()).then(|| (e / h).sqrt());
        BallCertificate {
            certified,
            witness_radius: witness,
            lhs_value: lhs,
        }
    }
}

/// Certifies existence of a solution with `|x - x*| <= r`.
pub fn certify_in_ball<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
    r: T,
) -> Result<BallCertificate<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain(format!("radius must be positive, got {r}")));
    }
    compute_terms(nominal, sys, u)?.ball(r)
}

/// Certifies existence of a solution anywhere.
pub fn certify_unbounded<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    u: &[T],
) -> Result<BallCertificate<T>> {
    Ok(compute_terms(nominal, sys, u)?.unbounded())
}

/// Inner/outer thresholds on `e` for a ball of radius `kappa / (2 h*)`.
pub fn tightness_bounds<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    kappa: T,
) -> Result<TightnessBounds<T>> {
    if !sys.has_parameter_free_jacobian() {
        return Err(Error::UnsupportedForm(
            "tightness bounds need quadratic and linear terms independent of u".into(),
        ));
    }
    if !(kappa > T::zero() && kappa < T::one()) {
        return Err(Error::Domain(format!(
            "kappa must lie in (0, 1), got {kappa}"
        )));
    }
    let h_star = compute_terms(nominal, sys, &nominal.u_star)?.h;
    if !(h_star > T::zero()) {
        return Err(Error::Domain("quadratic gain h* must be positive".into()));
    }
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    Ok(TightnessBounds {
        inner: (two * kappa - kappa * kappa) / (four * h_star),
        outer: (two * kappa + kappa * kappa) / (four * h_star),
        ball_radius: kappa / (two * h_star),
        h_star,
    })
}

/// Largest step `t` in `[0, t_max]` along `u* + t d` that the unbounded
/// certificate accepts, located by bisection from the nominal point.
pub fn boundary_along<T: Real>(
    nominal: &NominalPoint<T>,
    sys: &QuadraticSystem<T>,
    direction: &[T],
    t_max: T,
) -> Result<T> {
    if direction.len() != sys.k() {
        return Err(Error::Dimension("direction length differs from k".into()));
    }
    let at = |t: T| -> Result<bool> {
        let u: Vec<T> = nominal
            .u_star
            .iter()
            .zip(direction)
            .map(|(&a, &d)| a + t * d)
            .collect();
        Ok(certify_unbounded(nominal, sys, &u)?.certified)
    };
    if at(t_max)? {
        return Ok(t_max);
    }
    let (mut lo, mut hi) = (T::zero(), t_max);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
