//! JSON interchange for quadratic systems.
//!
//! ```json
//! {"n": 1, "k": 1, "complex": false,
//!  "quad": [[0, 0, 0, 0, 1.0, 0.0]],
//!  "lin": [[0, 0, 0, 1.0, 0.0]],
//!  "const_k0": [0.0],
//!  "const_k1": [[1.0]],
//!  "x_star": [0.0], "u_star": [0.0]}
//! ```
//!
//! Quadratic rows are `[m, i, j, l, re, im]`, linear rows `[m, i, j, re, im]`;
//! the trailing imaginary part may be omitted. Constant entries are either a
//! number or a `[re, im]` pair. `x_star`/`u_star` default to zero.

use serde::{Deserialize, Serialize};

use super::QuadraticSystem;
use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl ScalarSpec {
    fn to_complex<T: Real>(self) -> C<T> {
        match self {
            ScalarSpec::Real(v) => C::new(T::lit(v), T::zero()),
            ScalarSpec::Complex([a, b]) => C::new(T::lit(a), T::lit(b)),
        }
    }

    fn from_complex<T: Real>(z: C<T>) -> Self {
        if z.im == T::zero() {
            ScalarSpec::Real(z.re.as_f64())
        } else {
            ScalarSpec::Complex([z.re.as_f64(), z.im.as_f64()])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub k: usize,
    #[serde(default)]
    pub complex: bool,
    #[serde(default)]
    pub quad: Vec<Vec<f64>>,
    #[serde(default)]
    pub lin: Vec<Vec<f64>>,
    #[serde(default)]
    pub const_k0: Vec<ScalarSpec>,
    #[serde(default)]
    pub const_k1: Vec<Vec<ScalarSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<Vec<ScalarSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_star: Option<Vec<f64>>,
}

fn index(v: f64, what: &str) -> Result<usize> {
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::Format(format!(
            "{what} must be a non-negative integer, got {v}"
        )))
    }
}

fn coef<T: Real>(row: &[f64], at: usize) -> C<T> {
    C::new(
        T::lit(row[at]),
        T::lit(row.get(at + 1).copied().unwrap_or(0.0)),
    )
}

impl SystemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_system<T: Real>(&self) -> Result<QuadraticSystem<T>> {
        let mut sys = QuadraticSystem::new(self.n, self.k, self.complex);
        for row in &self.quad {
            if !(5..=6).contains(&row.len()) {
                return Err(Error::Format(format!(
                    "quad entry needs 5 or 6 numbers, got {}",
                    row.len()
                )));
            }
            sys.add_quad(
                index(row[0], "quad m")?,
                index(row[1], "quad i")?,
                index(row[2], "quad j")?,
                index(row[3], "quad l")?,
                coef(row, 4),
            )?;
        }
        for row in &self.lin {
            if !(4..=5).contains(&row.len()) {
                return Err(Error::Format(format!(
                    "lin entry needs 4 or 5 numbers, got {}",
                    row.len()
                )));
            }
            sys.add_lin(
                index(row[0], "lin m")?,
                index(row[1], "lin i")?,
                index(row[2], "lin j")?,
                coef(row, 3),
            )?;
        }
        if !self.const_k0.is_empty() {
            if self.const_k0.len() != self.n {
                return Err(Error::Dimension(format!(
                    "const_k0 has {} entries for n = {}",
                    self.const_k0.len(),
                    self.n
                )));
            }
            for (i, v) in self.const_k0.iter().enumerate() {
                sys.set_k0(i, v.to_complex())?;
            }
        }
        if !self.const_k1.is_empty() {
            if self.const_k1.len() != self.n {
                return Err(Error::Dimension(format!(
                    "const_k1 has {} rows for n = {}",
                    self.const_k1.len(),
                    self.n
                )));
            }
            for (i, row) in self.const_k1.iter().enumerate() {
                if row.len() != self.k {
                    return Err(Error::Dimension(format!(
                        "const_k1 row {i} has {} entries for k = {}",
                        row.len(),
                        self.k
                    )));
                }
                for (m, v) in row.iter().enumerate() {
                    sys.set_k1(i, m, v.to_complex())?;
                }
            }
        }
        Ok(sys)
    }

    /// Nominal point stored alongside the system, zero when absent.
    pub fn nominal<T: Real>(&self) -> Result<(Vec<C<T>>, Vec<T>)> {
        let x = match &self.x_star {
            Some(v) if v.len() != self.n => {
                return Err(Error::Dimension(format!(
                    "x_star has {} entries for n = {}",
                    v.len(),
                    self.n
                )))
            }
            Some(v) => v.iter().map(|s| s.to_complex()).collect(),
            None => vec![C::new(T::zero(), T::zero()); self.n],
        };
        let u = match &self.u_star {
            Some(v) if v.len() != self.k => {
                return Err(Error::Dimension(format!(
                    "u_star has {} entries for k = {}",
                    v.len(),
                    self.k
                )))
            }
            Some(v) => v.iter().map(|&s| T::lit(s)).collect(),
            None => vec![T::zero(); self.k],
        };
        Ok((x, u))
    }

    pub fn from_system<T: Real>(
        sys: &QuadraticSystem<T>,
        x_star: Option<&[C<T>]>,
        u_star: Option<&[T]>,
    ) -> Self {
        let f = |z: C<T>| [z.re.as_f64(), z.im.as_f64()];
        SystemSpec {
            n: sys.n(),
            k: sys.k(),
            complex: sys.is_conjugate(),
            quad: sys
                .quad_terms()
                .iter()
                .map(|t| {
                    let [a, b] = f(t.coef);
                    vec![
                        t.param as f64,
                        t.row as f64,
                        t.left as f64,
                        t.right as f64,
                        a,
                        b,
                    ]
                })
                .collect(),
            lin: sys
                .lin_terms()
                .iter()
                .map(|t| {
                    let [a, b] = f(t.coef);
                    vec![t.param as f64, t.row as f64, t.col as f64, a, b]
                })
                .collect(),
            const_k0: sys
                .k0()
                .iter()
                .map(|&z| ScalarSpec::from_complex(z))
                .collect(),
            const_k1: (0..sys.n())
                .map(|i| {
                    sys.k1()
                        .row(i)
                        .iter()
                        .map(|&z| ScalarSpec::from_complex(z))
                        .collect()
                })
                .collect(),
            x_star: x_star.map(|x| x.iter().map(|&z| ScalarSpec::from_complex(z)).collect()),
            u_star: u_star.map(|u| u.iter().map(|v| v.as_f64()).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::re;

    const SCALAR: &str = r#"{"n":1,"k":1,"complex":false,
        "quad":[[0,0,0,0,1.0,0.0]],"lin":[[0,0,0,1.0]],
        "const_k0":[0.0],"const_k1":[[1.0]]}"#;

    #[test]
    fn parses_scalar_demo() {
        let spec = SystemSpec::from_json(SCALAR).unwrap();
        let sys: QuadraticSystem<f64> = spec.to_system().unwrap();
        assert_eq!(sys.eval_f(&[re(1.0)], &[2.0]).unwrap()[0], re(4.0));
        let (x, u) = spec.nominal::<f64>().unwrap();
        assert_eq!((x, u), (vec![re(0.0)], vec![0.0]));
    }

    #[test]
    fn json_round_trip() {
        let spec = SystemSpec::from_json(SCALAR).unwrap();
        let sys: QuadraticSystem<f64> = spec.to_system().unwrap();
        let again = SystemSpec::from_system(&sys, None, None);
        let back: QuadraticSystem<f64> = SystemSpec::from_json(&again.to_json().unwrap())
            .unwrap()
            .to_system()
            .unwrap();
        assert_eq!(back, sys);
    }

    #[test]
    fn rejects_bad_entries() {
        let bad = r#"{"n":1,"k":1,"quad":[[0,0,0,1.5,1.0]]}"#;
        assert!(SystemSpec::from_json(bad)
            .unwrap()
            .to_system::<f64>()
            .is_err());
        let short = r#"{"n":1,"k":1,"lin":[[0,0,1.0]]}"#;
        assert!(SystemSpec::from_json(short)
            .unwrap()
            .to_system::<f64>()
            .is_err());
        let k1 = r#"{"n":1,"k":2,"const_k1":[[1.0]]}"#;
        assert!(matches!(
            SystemSpec::from_json(k1).unwrap().to_system::<f64>(),
            Err(Error::Dimension(_))
        ));
        let complex_k0 = r#"{"n":1,"k":0,"complex":true,"const_k0":[[0.5,-1.0]]}"#;
        let sys = SystemSpec::from_json(complex_k0)
            .unwrap()
            .to_system::<f64>()
            .unwrap();
        assert_eq!(sys.k0()[0], C::new(0.5, -1.0));
        assert!(sys.is_conjugate());
    }
}
