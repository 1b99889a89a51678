//! Random instance generators shared by unit tests, property tests and the
//! acceptance suite.

use rand::Rng;

use crate::quadform::QuadraticSystem;
use crate::scalar::{re, C};

fn coef<R: Rng>(rng: &mut R, scale: f64, complex: bool) -> C<f64> {
    let a = rng.random_range(-scale..=scale);
    let b = if complex {
        rng.random_range(-scale..=scale)
    } else {
        0.0
    };
    C::new(a, b)
}

/// Random state vector with entries in the unit box.
pub fn random_state<R: Rng>(rng: &mut R, n: usize, real: bool) -> Vec<C<f64>> {
    (0..n).map(|_| coef(rng, 1.0, !real)).collect()
}

pub fn random_params<R: Rng>(rng: &mut R, k: usize, scale: f64) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-scale..=scale)).collect()
}

/// Random system with parameter-dependent quadratic, linear and constant
/// terms together with a nominal point `(x*, u*)` at which it vanishes.
///
/// The linear part is diagonally dominant so the nominal Jacobian is
/// invertible for all but exceptional draws. Unconjugated systems get real
/// coefficients and a real nominal state.
pub fn random_system<R: Rng>(
    rng: &mut R,
    n: usize,
    k: usize,
    conjugate: bool,
) -> (QuadraticSystem<f64>, Vec<C<f64>>, Vec<f64>) {
    let complex = conjugate;
    let mut sys = QuadraticSystem::new(n, k, conjugate);
    for i in 0..n {
        let diag = 1.5 + rng.random_range(0.0..1.0);
        sys.add_lin(0, i, i, re(diag)).unwrap();
        for j in 0..n {
            if j != i {
                let c = coef(rng, 0.3, complex);
                sys.add_lin(0, i, j, c).unwrap();
            }
        }
        for _ in 0..(n + 1) {
            let (j, l) = (rng.random_range(0..n), rng.random_range(0..n));
            let c = coef(rng, 1.0, complex);
            sys.add_quad(0, i, j, l, c).unwrap();
        }
        for m in 1..=k {
            let (j, l) = (rng.random_range(0..n), rng.random_range(0..n));
            let c = coef(rng, 0.3, complex);
            sys.add_quad(m, i, j, l, c).unwrap();
            let j = rng.random_range(0..n);
            let c = coef(rng, 0.3, complex);
            sys.add_lin(m, i, j, c).unwrap();
            let c = coef(rng, 1.0, complex);
            sys.set_k1(i, m - 1, c).unwrap();
        }
    }
    let x_star: Vec<C<f64>> = (0..n).map(|_| coef(rng, 0.5, complex)).collect();
    let u_star = random_params(rng, k, 0.5);
    let f = sys.eval_f(&x_star, &u_star).unwrap();
    for i in 0..n {
        let shifted = sys.k0()[i] - f[i];
        sys.set_k0(i, shifted).unwrap();
    }
    (sys, x_star, u_star)
}

/// Decoupled system `f_i = a_i x_i^2 + b_i x_i + u_i` with nominal `(0, 0)`.
pub fn diagonal_simple_system(a: &[f64], b: &[f64]) -> QuadraticSystem<f64> {
    let n = a.len();
    let mut sys = QuadraticSystem::new(n, n, false);
    for i in 0..n {
        sys.add_quad(0, i, i, i, re(a[i])).unwrap();
        sys.add_lin(0, i, i, re(b[i])).unwrap();
        sys.set_k1(i, i, re(1.0)).unwrap();
    }
    sys
}

/// `f = x^2 + x + u`, the running scalar example.
pub fn scalar_demo() -> QuadraticSystem<f64> {
    diagonal_simple_system(&[1.0], &[1.0])
}
