//! Ground-truth solvers used to check certificates: damped multistart
//! Newton, exact regions for decoupled scalar quadratics, and grid scans of
//! the parameter space.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::lu_factor;
use crate::quadform::{block_jacobian, QuadraticSystem};
use crate::scalar::{max_modulus, re, Real, C};

pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_MAX_HALVINGS: usize = 20;
pub const NEWTON_TOL: f64 = 1e-10;
/// Largest number of real search dimensions that gets a full start grid.
pub const GRID_MAX_DIMS: usize = 4;
/// Slack on the ball radius when deciding membership.
pub const BALL_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport<T: Real> {
    /// A converged root lies within the ball.
    pub found: bool,
    /// Closest converged root to `x*`, whether or not it is inside the ball.
    pub x: Option<Vec<C<T>>>,
    pub residual: T,
    pub distance_from_nominal: T,
    pub starts_tried: usize,
}

fn newton_step<T: Real>(
    sys: &QuadraticSystem<T>,
    x: &[C<T>],
    u: &[T],
    f: &[C<T>],
) -> Option<Vec<C<T>>> {
    let (a, b) = sys.jacobian_blocks(x, u).ok()?;
    let n = sys.n();
    if sys.is_conjugate() {
        let jac = block_jacobian(&a, &b);
        let lu = lu_factor(&jac).ok()?;
        let rhs: Vec<C<T>> = f
            .iter()
            .map(|z| -z)
            .chain(f.iter().map(|z| -z.conj()))
            .collect();
        let dx = lu.solve(&rhs).ok()?;
        Some(dx[..n].to_vec())
    } else {
        let lu = lu_factor(&a).ok()?;
        let rhs: Vec<C<T>> = f.iter().map(|z| -z).collect();
        lu.solve(&rhs).ok()
    }
}

/// Damped Newton from one start. Returns the converged point.
fn damped_newton<T: Real>(
    sys: &QuadraticSystem<T>,
    u: &[T],
    start: Vec<C<T>>,
    tol: T,
) -> Option<Vec<C<T>>> {
    let mut x = start;
    let mut f = sys.eval_f(&x, u).ok()?;
    let mut norm = max_modulus(&f);
    for _ in 0..NEWTON_MAX_ITER {
        if norm < tol {
            return Some(x);
        }
        let dx = newton_step(sys, &x, u, &f)?;
        let mut lambda = T::one();
        let mut accepted = false;
        for _ in 0..=NEWTON_MAX_HALVINGS {
            let trial: Vec<C<T>> = x.iter().zip(&dx).map(|(a, d)| a + d * lambda).collect();
            let ft = sys.eval_f(&trial, u).ok()?;
            let nt = max_modulus(&ft);
            if nt < norm {
                x = trial;
                f = ft;
                norm = nt;
                accepted = true;
                break;
            }
            lambda *= T::lit(0.5);
        }
        if !accepted {
            return None;
        }
    }
    (norm < tol).then_some(x)
}

fn axis<T: Real>(points: usize, half_width: T) -> Vec<T> {
    if points <= 1 {
        return vec![T::zero()];
    }
    let step = T::lit(2.0) * half_width / T::lit((points - 1) as f64);
    (0..points)
        .map(|i| -half_width + step * T::lit(i as f64))
        .collect()
}

fn start_grid<T: Real>(x_star: &[C<T>], r: T, g: usize, real: bool) -> Vec<Vec<C<T>>> {
    let n = x_star.len();
    let dims = if real { n } else { 2 * n };
    let mut starts = vec![x_star.to_vec()];
    if dims > GRID_MAX_DIMS || !r.is_finite() {
        return starts;
    }
    let ticks = axis(g, r);
    let total = ticks.len().pow(dims as u32);
    for mut code in 0..total {
        let mut offs = Vec::with_capacity(dims);
        for _ in 0..dims {
            offs.push(ticks[code % ticks.len()]);
            code /= ticks.len();
        }
        let dx: Vec<C<T>> = if real {
            offs.iter().map(|&v| re(v)).collect()
        } else {
            (0..n)
                .map(|j| C::new(offs[2 * j], offs[2 * j + 1]))
                .collect()
        };
        if max_modulus(&dx) > r {
            continue;
        }
        starts.push(x_star.iter().zip(&dx).map(|(a, b)| a + b).collect());
    }
    starts
}

/// Searches for a root of `f(., u)` with `|x - x*| <= r`.
///
/// Unconjugated systems with real data are searched over real states, all
/// others over complex states. Starts form a uniform grid over the ball when
/// the search has at most four real dimensions; larger systems start from
/// `x*` only.
pub fn newton_multistart<T: Real>(
    sys: &QuadraticSystem<T>,
    u: &[T],
    x_star: &[C<T>],
    r: T,
    grid_points_per_dim: usize,
    tol: T,
) -> Result<SolveReport<T>> {
    if x_star.len() != sys.n() || u.len() != sys.k() {
        return Err(Error::Dimension(
            "state or parameter length differs from the system".into(),
        ));
    }
    if !(tol > T::zero()) || r < T::zero() {
        return Err(Error::Domain(
            "tolerance must be positive and radius non-negative".into(),
        ));
    }
    let real = !sys.is_conjugate()
        && sys.has_real_coefficients()
        && x_star.iter().all(|z| z.im == T::zero());
    let starts = start_grid(x_star, r, grid_points_per_dim, real);
    let starts_tried = starts.len();

    let mut best: Option<(T, T, Vec<C<T>>)> = None;
    for s in starts {
        let Some(x) = damped_newton(sys, u, s, tol) else {
            continue;
        };
        // Re-check through a fresh evaluation.
        let residual = max_modulus(&sys.eval_f(&x, u)?);
        if !(residual < tol) {
            continue;
        }
        let dist = x
            .iter()
            .zip(x_star)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()));
        if best.as_ref().is_none_or(|(d, _, _)| dist < *d) {
            best = Some((dist, residual, x));
        }
    }
    Ok(match best {
        Some((dist, residual, x)) => SolveReport {
            found: dist <= r + T::tol(BALL_SLACK),
            x: Some(x),
            residual,
            distance_from_nominal: dist,
            starts_tried,
        },
        None => SolveReport {
            found: false,
            x: None,
            residual: T::infinity(),
            distance_from_nominal: T::infinity(),
            starts_tried,
        },
    })
}

/// Exact solvability region of a decoupled real system
/// `a_i x_i^2 + b_i x_i + K0_i + (K1 u)_i = 0` over a ball around `x*`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagonalRegion<T: Real> {
    /// Admissible values of `(K1 u)_i`, as closed intervals (possibly unbounded).
    pub value_intervals: Vec<(T, T)>,
    k1: Vec<Vec<T>>,
}

impl<T: Real> DiagonalRegion<T> {
    pub fn contains(&self, u: &[T]) -> bool {
        self.value_intervals
            .iter()
            .zip(&self.k1)
            .all(|(&(lo, hi), row)| {
                let v: T = row.iter().zip(u).map(|(&a, &b)| a * b).sum();
                lo <= v && v <= hi
            })
    }

    /// For a single parameter, the interval of `u` satisfying every
    /// coordinate; `None` when empty.
    pub fn parameter_interval(&self) -> Result<Option<(T, T)>> {
        if self.k1.first().map_or(0, Vec::len) != 1 {
            return Err(Error::UnsupportedForm(
                "parameter interval needs k = 1".into(),
            ));
        }
        let (mut lo, mut hi) = (T::neg_infinity(), T::infinity());
        for (&(vlo, vhi), row) in self.value_intervals.iter().zip(&self.k1) {
            let c = row[0];
            if c == T::zero() {
                if !(vlo <= T::zero() && T::zero() <= vhi) {
                    return Ok(None);
                }
                continue;
            }
            let (a, b) = if c > T::zero() {
                (vlo / c, vhi / c)
            } else {
                (vhi / c, vlo / c)
            };
            lo = lo.max(a);
            hi = hi.min(b);
        }
        Ok((lo <= hi).then_some((lo, hi)))
    }
}

/// Range of `a x^2 + b x + c` over `[lo, hi]`, allowing infinite endpoints.
fn quadratic_range<T: Real>(a: T, b: T, c: T, lo: T, hi: T) -> (T, T) {
    let eval = |x: T| -> T {
        if x.is_finite() {
            a * x * x + b * x + c
        } else if a != T::zero() {
            a.signum() * T::infinity()
        } else if b != T::zero() {
            (b * x.signum()).signum() * T::infinity()
        } else {
            c
        }
    };
    let mut vals = vec![eval(lo), eval(hi)];
    if a != T::zero() {
        let xv = -b / (T::lit(2.0) * a);
        if lo <= xv && xv <= hi {
            vals.push(eval(xv));
        }
    }
    let min = vals.iter().copied().fold(T::infinity(), T::min);
    let max = vals.iter().copied().fold(T::neg_infinity(), T::max);
    (min, max)
}

/// Exact region of parameters for which each decoupled equation has a root
/// within `radius` of `x*` (per coordinate; `radius` may be infinite).
pub fn scalar_quadratic_region<T: Real>(
    sys: &QuadraticSystem<T>,
    x_star: &[T],
    radius: T,
) -> Result<DiagonalRegion<T>> {
    let n = sys.n();
    if sys.is_conjugate() || !sys.has_real_coefficients() {
        return Err(Error::UnsupportedForm(
            "diagonal oracle needs a real unconjugated system".into(),
        ));
    }
    if x_star.len() != n {
        return Err(Error::Dimension("x* length differs from n".into()));
    }
    if radius < T::zero() {
        return Err(Error::Domain("radius must be non-negative".into()));
    }
    let mut a = vec![T::zero(); n];
    let mut b = vec![T::zero(); n];
    for t in sys.quad_terms() {
        if t.param != 0 || t.left != t.row || t.right != t.row {
            return Err(Error::UnsupportedForm(
                "quadratic term couples coordinates or depends on u".into(),
            ));
        }
        a[t.row] += t.coef.re;
    }
    for t in sys.lin_terms() {
        if t.param != 0 || t.col != t.row {
            return Err(Error::UnsupportedForm(
                "linear term couples coordinates or depends on u".into(),
            ));
        }
        b[t.row] += t.coef.re;
    }
    let value_intervals = (0..n)
        .map(|i| {
            let (lo, hi) = (x_star[i] - radius, x_star[i] + radius);
            let (gmin, gmax) = quadratic_range(a[i], b[i], sys.k0()[i].re, lo, hi);
            (-gmax, -gmin)
        })
        .collect();
    let k1 = (0..n)
        .map(|i| sys.k1().row(i).iter().map(|z| z.re).collect())
        .collect();
    Ok(DiagonalRegion {
        value_intervals,
        k1,
    })
}

/// Uniform grid over a 2-D slice `u0 + s a1 + t a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceGrid<T: Real> {
    pub s_range: (T, T),
    pub s_points: usize,
    pub t_range: (T, T),
    pub t_points: usize,
}

impl<T: Real> SliceGrid<T> {
    fn ticks(range: (T, T), points: usize) -> Vec<T> {
        if points <= 1 {
            return vec![range.0];
        }
        let step = (range.1 - range.0) / T::lit((points - 1) as f64);
        (0..points)
            .map(|i| range.0 + step * T::lit(i as f64))
            .collect()
    }

    pub fn s_values(&self) -> Vec<T> {
        Self::ticks(self.s_range, self.s_points)
    }

    pub fn t_values(&self) -> Vec<T> {
        Self::ticks(self.t_range, self.t_points)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy<T: Real> {
    pub s_values: Vec<T>,
    pub t_values: Vec<T>,
    /// `cells[a][b]` for `s_values[a]`, `t_values[b]`.
    pub cells: Vec<Vec<bool>>,
}

impl<T: Real> Occupancy<T> {
    pub fn parameter(origin: &[T], axis1: &[T], axis2: &[T], s: T, t: T) -> Vec<T> {
        origin
            .iter()
            .zip(axis1)
            .zip(axis2)
            .map(|((&o, &a), &b)| o + s * a + t * b)
            .collect()
    }
}

/// Marks each grid node whose parameter admits a root within `r` of `x*`.
#[allow(clippy::too_many_arguments)]
pub fn region_scan_2d<T: Real>(
    sys: &QuadraticSystem<T>,
    x_star: &[C<T>],
    origin: &[T],
    axis1: &[T],
    axis2: &[T],
    grid: &SliceGrid<T>,
    r: T,
    grid_points_per_dim: usize,
) -> Result<Occupancy<T>> {
    let k = sys.k();
    if origin.len() != k || axis1.len() != k || axis2.len() != k {
        return Err(Error::Dimension("slice vectors must have k entries".into()));
    }
    let s_values = grid.s_values();
    let t_values = grid.t_values();
    let tol = T::tol(NEWTON_TOL);
    let cells = s_values
        .par_iter()
        .map(|&s| {
            t_values
                .iter()
                .map(|&t| {
                    let u = Occupancy::parameter(origin, axis1, axis2, s, t);
                    newton_multistart(sys, &u, x_star, r, grid_points_per_dim, tol)
                        .map(|rep| rep.found)
                })
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Occupancy {
        s_values,
        t_values,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{diagonal_simple_system, scalar_demo};

    #[test]
    fn newton_scalar_examples() {
        let sys = scalar_demo();
        let rep = newton_multistart(&sys, &[0.1], &[re(0.0)], 1.0, 11, 1e-10).unwrap();
        assert!(rep.found);
        let x = rep.x.unwrap()[0];
        assert!((x.re - (-1.0 + 0.6f64.sqrt()) / 2.0).abs() < 1e-10);
        assert!(rep.residual < 1e-10);

        let rep = newton_multistart(&sys, &[0.0], &[re(0.0)], 1.0, 5, 1e-10).unwrap();
        assert!(rep.found);
        assert_eq!(rep.distance_from_nominal, 0.0);

        let rep = newton_multistart(&sys, &[0.5], &[re(0.0)], 1.0, 11, 1e-10).unwrap();
        assert!(!rep.found);
        assert!(rep.x.is_none());
    }

    #[test]
    fn newton_reports_roots_outside_ball() {
        let sys = scalar_demo();
        // roots at -0.5 +- 0.2236: the nearest is 0.2764 away from 0
        let rep = newton_multistart(&sys, &[0.2], &[re(0.0)], 0.1, 11, 1e-10).unwrap();
        assert!(!rep.found);
        assert!((rep.distance_from_nominal - (1.0 - 0.2f64.sqrt()) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn scalar_region_examples() {
        let sys = scalar_demo();
        let reg = scalar_quadratic_region(&sys, &[0.0], 0.25).unwrap();
        assert_eq!(reg.parameter_interval().unwrap(), Some((-0.3125, 0.1875)));
        let reg = scalar_quadratic_region(&sys, &[0.0], 0.0).unwrap();
        assert_eq!(reg.parameter_interval().unwrap(), Some((0.0, 0.0)));
        let reg = scalar_quadratic_region(&sys, &[0.0], f64::INFINITY).unwrap();
        let (lo, hi) = reg.parameter_interval().unwrap().unwrap();
        assert_eq!(hi, 0.25);
        assert_eq!(lo, f64::NEG_INFINITY);
    }

    #[test]
    fn scalar_region_rejects_coupled_systems() {
        let mut sys = diagonal_simple_system(&[1.0, 2.0], &[1.0, 1.0]);
        sys.add_quad(0, 0, 0, 1, re(0.5)).unwrap();
        assert!(matches!(
            scalar_quadratic_region(&sys, &[0.0, 0.0], 1.0),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn diagonal_region_contains() {
        let sys = diagonal_simple_system(&[1.0, 2.0], &[1.0, -1.0]);
        let reg = scalar_quadratic_region(&sys, &[0.0, 0.0], f64::INFINITY).unwrap();
        // coordinate 0: u0 <= 1/4; coordinate 1: 2x^2 - x + u1 = 0 needs u1 <= 1/8
        assert!(reg.contains(&[0.25, 0.125]));
        assert!(!reg.contains(&[0.26, 0.0]));
        assert!(!reg.contains(&[0.0, 0.13]));
    }

    #[test]
    fn scan_of_scalar_demo() {
        let sys = scalar_demo();
        let grid = SliceGrid {
            s_range: (-1.0, 1.0),
            s_points: 41,
            t_range: (0.0, 0.0),
            t_points: 1,
        };
        let occ =
            region_scan_2d(&sys, &[re(0.0)], &[0.0], &[1.0], &[0.0], &grid, 10.0, 21).unwrap();
        for (s, row) in occ.s_values.iter().zip(&occ.cells) {
            let cell = 2.0 / 40.0;
            if *s <= 0.25 - cell {
                assert!(row[0], "u = {s}");
            } else if *s > 0.25 + cell {
                assert!(!row[0], "u = {s}");
            }
        }
        let mid = occ.s_values.iter().position(|&s| s == 0.0).unwrap();
        assert!(occ.cells[mid][0]);
    }
}
