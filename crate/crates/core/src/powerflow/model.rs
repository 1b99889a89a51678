use serde::Serialize;

use super::matpower::{BusType, GridCase};
use crate::error::{Error, Result};
use crate::linalg::{lu_factor, DenseMatrix};
use crate::quadform::QuadraticSystem;
use crate::scalar::{max_modulus, re, Real, C};

/// Threshold on `|w_i|` below which the no-load profile is degenerate.
pub const NO_LOAD_MIN: f64 = 1e-12;

pub const PICARD_TOL: f64 = 1e-10;
pub const PICARD_MAX_ITER: usize = 200;

/// Fixed-point form `V = w + Z diag(conj(V))^-1 conj(s)` of the power-flow
/// equations with the slack bus eliminated. All quantities are per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowModel<T: Real> {
    y: DenseMatrix<T>,
    y0: Vec<C<T>>,
    v0: C<T>,
    z: DenseMatrix<T>,
    w: Vec<C<T>>,
    s_nominal: Vec<C<T>>,
    bus_ids: Vec<u64>,
    slack_id: u64,
    warnings: Vec<String>,
}

impl<T: Real> PowerFlowModel<T> {
    /// Builds a model from the reduced admittance matrix `Y`, the coupling
    /// column `Y0` to the slack and the slack voltage `V0`.
    pub fn from_reduced(
        y: DenseMatrix<T>,
        y0: Vec<C<T>>,
        v0: C<T>,
        s_nominal: Vec<C<T>>,
        bus_ids: Vec<u64>,
        slack_id: u64,
    ) -> Result<Self> {
        let n = y.rows();
        if !y.is_square() || y0.len() != n || s_nominal.len() != n || bus_ids.len() != n {
            return Err(Error::Dimension(
                "reduced admittance data has inconsistent sizes".into(),
            ));
        }
        let lu = lu_factor(&y)?;
        if lu.is_singular() {
            return Err(Error::Model(
                "admittance matrix is singular (islanded bus?)".into(),
            ));
        }
        let z = lu.inverse()?;
        let rhs: Vec<C<T>> = y0.iter().map(|&c| -c * v0).collect();
        let w = lu.solve(&rhs)?;
        if let Some(i) = w.iter().position(|z| !(z.norm() > T::lit(NO_LOAD_MIN))) {
            return Err(Error::DegenerateNoLoad(bus_ids[i].to_string()));
        }
        Ok(Self {
            y,
            y0,
            v0,
            z,
            w,
            s_nominal,
            bus_ids,
            slack_id,
            warnings: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn y(&self) -> &DenseMatrix<T> {
        &self.y
    }

    pub fn y0(&self) -> &[C<T>] {
        &self.y0
    }

    pub fn v0(&self) -> C<T> {
        self.v0
    }

    pub fn z(&self) -> &DenseMatrix<T> {
        &self.z
    }

    /// No-load voltages.
    pub fn w(&self) -> &[C<T>] {
        &self.w
    }

    pub fn s_nominal(&self) -> &[C<T>] {
        &self.s_nominal
    }

    /// Case bus ids of the non-slack buses, in state order.
    pub fn bus_ids(&self) -> &[u64] {
        &self.bus_ids
    }

    pub fn slack_id(&self) -> u64 {
        self.slack_id
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Current injections `Y V + Y0 V0` for a voltage profile.
    fn currents(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        let mut i = self.y.mul_vec(v)?;
        for (a, &b) in i.iter_mut().zip(&self.y0) {
            *a += b * self.v0;
        }
        Ok(i)
    }

    /// Complex power injections `V conj(Y V + Y0 V0)` implied by `v`.
    pub fn injections(&self, v: &[C<T>]) -> Result<Vec<C<T>>> {
        Ok(self
            .currents(v)?
            .iter()
            .zip(v)
            .map(|(i, v)| v * i.conj())
            .collect())
    }

    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            n: self.n(),
            slack_id: self.slack_id,
            z_inf_norm: self.z.inf_norm_induced().as_f64(),
            min_abs_w: self
                .w
                .iter()
                .map(|z| z.norm())
                .fold(T::infinity(), T::min)
                .as_f64(),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub n: usize,
    pub slack_id: u64,
    pub z_inf_norm: f64,
    pub min_abs_w: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Assembles the bus admittance matrix and reduces it around the slack.
///
/// Generators at non-slack buses are scheduled injections; PV buses are
/// therefore handled as PQ buses, which is reported in
/// [`PowerFlowModel::warnings`]. The slack voltage magnitude comes from an
/// in-service generator setpoint at the slack bus when one exists, and from
/// the bus table otherwise.
pub fn build_model<T: Real>(case: &GridCase) -> Result<PowerFlowModel<T>> {
    let nb = case.buses.len();
    let mut ybus = DenseMatrix::<f64>::zeros(nb, nb);
    let index = |id: u64| {
        case.bus_index(id)
            .ok_or_else(|| Error::Model(format!("unknown bus {id}")))
    };

    for br in case.branches.iter().filter(|b| b.in_service()) {
        let (f, t) = (index(br.from)?, index(br.to)?);
        let zs = C::new(br.r, br.x);
        if zs.norm() == 0.0 {
            return Err(Error::Model(format!(
                "branch {}-{} has zero impedance",
                br.from, br.to
            )));
        }
        let y = zs.inv();
        let charging = C::new(0.0, br.b / 2.0);
        let tau = br.effective_tap();
        let ratio = C::from_polar(tau, br.shift_deg.to_radians());
        ybus[(f, f)] += (y + charging) / (tau * tau);
        ybus[(f, t)] += -y / ratio.conj();
        ybus[(t, f)] += -y / ratio;
        ybus[(t, t)] += y + charging;
    }
    for (i, b) in case.buses.iter().enumerate() {
        ybus[(i, i)] += C::new(b.gs, b.bs) / case.base_mva;
    }

    let slack = case.slack();
    let s = index(slack.id)?;
    let keep: Vec<usize> = (0..nb).filter(|&i| i != s).collect();
    let cast = |z: C<f64>| C::new(T::lit(z.re), T::lit(z.im));
    let y = DenseMatrix::from_fn(keep.len(), keep.len(), |a, b| {
        cast(ybus[(keep[a], keep[b])])
    });
    let y0: Vec<C<T>> = keep.iter().map(|&i| cast(ybus[(i, s)])).collect();

    let slack_gen = case
        .gens
        .iter()
        .find(|g| g.bus == slack.id && g.in_service());
    let vm = slack_gen.map_or(slack.vm, |g| g.vg);
    let v0 = cast(C::from_polar(vm, slack.va.to_radians()));

    let mut warnings = Vec::new();
    let s_nominal: Vec<C<T>> = keep
        .iter()
        .map(|&i| {
            let bus = &case.buses[i];
            let (pg, qg) = case
                .gens
                .iter()
                .filter(|g| g.bus == bus.id && g.in_service())
                .fold((0.0, 0.0), |(p, q), g| (p + g.pg, q + g.qg));
            cast(C::new(pg - bus.pd, qg - bus.qd) / case.base_mva)
        })
        .collect();
    let pv: Vec<String> = keep
        .iter()
        .filter(|&&i| case.buses[i].bus_type == BusType::Pv)
        .map(|&i| case.buses[i].id.to_string())
        .collect();
    if !pv.is_empty() {
        warnings.push(format!(
            "PV buses treated as PQ with scheduled injections: {}",
            pv.join(", ")
        ));
    }

    let bus_ids = keep.iter().map(|&i| case.buses[i].id).collect();
    let mut model = PowerFlowModel::from_reduced(y, y0, v0, s_nominal, bus_ids, slack.id).map_err(
        |e| match e {
            Error::SingularJacobian => {
                Error::Model("admittance matrix is singular (islanded bus?)".into())
            }
            other => other,
        },
    )?;
    model.warnings = warnings;
    Ok(model)
}

/// `zeta(s)_il = Z_il conj(s_l) / (w_i conj(w_l))`.
pub fn zeta<T: Real>(model: &PowerFlowModel<T>, s: &[C<T>]) -> Result<DenseMatrix<T>> {
    let n = model.n();
    if s.len() != n {
        return Err(Error::Dimension(format!(
            "injection vector of length {} for n = {n}",
            s.len()
        )));
    }
    let w = model.w();
    Ok(DenseMatrix::from_fn(n, n, |i, l| {
        model.z()[(i, l)] * s[l].conj() / (w[i] * w[l].conj())
    }))
}

fn zeta_norms<T: Real>(model: &PowerFlowModel<T>, s: &[C<T>]) -> Result<(T, T)> {
    let z = zeta(model, s)?;
    let row_sums: Vec<C<T>> = (0..z.rows()).map(|i| z.row(i).iter().sum()).collect();
    Ok((max_modulus(&row_sums), z.inf_norm_induced()))
}

/// `2 |zeta 1| + 2 sqrt(|zeta 1| |zeta|)` in the infinity norms; a solution
/// exists whenever this is at most one.
pub fn kappa<T: Real>(model: &PowerFlowModel<T>, s: &[C<T>]) -> Result<T> {
    let (a, b) = zeta_norms(model, s)?;
    Ok(T::lit(2.0) * a + T::lit(2.0) * (a * b).sqrt())
}

/// The older sufficient condition `4 |zeta|`.
pub fn kappa_prime<T: Real>(model: &PowerFlowModel<T>, s: &[C<T>]) -> Result<T> {
    let (_, b) = zeta_norms(model, s)?;
    Ok(T::lit(4.0) * b)
}

/// Both functionals from a single evaluation of `zeta`.
pub fn kappa_pair<T: Real>(model: &PowerFlowModel<T>, s: &[C<T>]) -> Result<(T, T)> {
    let (a, b) = zeta_norms(model, s)?;
    Ok((
        T::lit(2.0) * a + T::lit(2.0) * (a * b).sqrt(),
        T::lit(4.0) * b,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub enum PicardOutcome<T: Real> {
    Converged {
        v: Vec<C<T>>,
        iterations: usize,
        step: T,
    },
    Diverged {
        iterations: usize,
        last_step: T,
    },
}

impl<T: Real> PicardOutcome<T> {
    pub fn converged(&self) -> bool {
        matches!(self, PicardOutcome::Converged { .. })
    }

    pub fn voltage(&self) -> Option<&[C<T>]> {
        match self {
            PicardOutcome::Converged { v, .. } => Some(v),
            PicardOutcome::Diverged { .. } => None,
        }
    }
}

/// Iterates `V <- w + Z conj(s ./ V)` from `V = w` until successive iterates
/// differ by less than `tol` in the max norm.
pub fn picard_solve<T: Real>(
    model: &PowerFlowModel<T>,
    s: &[C<T>],
    tol: T,
    max_iter: usize,
) -> Result<PicardOutcome<T>> {
    if !(tol > T::zero()) {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    if s.len() != model.n() {
        return Err(Error::Dimension(format!(
            "injection vector of length {} for n = {}",
            s.len(),
            model.n()
        )));
    }
    let mut v = model.w().to_vec();
    let mut step = T::infinity();
    for it in 1..=max_iter {
        let ratio: Vec<C<T>> = s.iter().zip(&v).map(|(s, v)| (s / v).conj()).collect();
        let mut next = model.z().mul_vec(&ratio)?;
        for (a, &b) in next.iter_mut().zip(model.w()) {
            *a += b;
        }
        step = next
            .iter()
            .zip(&v)
            .fold(T::zero(), |acc, (a, b)| acc.max((a - b).norm()));
        if !step.is_finite() || next.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Ok(PicardOutcome::Diverged {
                iterations: it,
                last_step: T::infinity(),
            });
        }
        v = next;
        if step < tol {
            return Ok(PicardOutcome::Converged {
                v,
                iterations: it,
                step,
            });
        }
    }
    Ok(PicardOutcome::Diverged {
        iterations: max_iter,
        last_step: step,
    })
}

/// The power-flow equations in normalized form `gamma_i = w_i / V_i`:
///
/// ```text
/// gamma_i + sum_l zeta(s)_il gamma_i conj(gamma_l) - 1 = 0
/// ```
///
/// as a conjugated quadratic system with real parameters
/// `u = [Re s; Im s]` and nominal point `gamma = 1`, `u = 0`.
pub fn epfl_system<T: Real>(model: &PowerFlowModel<T>) -> (QuadraticSystem<T>, Vec<C<T>>, Vec<T>) {
    let n = model.n();
    let w = model.w();
    let mut sys = QuadraticSystem::new(n, 2 * n, true);
    let minus_i = C::new(T::zero(), -T::one());
    for i in 0..n {
        for l in 0..n {
            let c = model.z()[(i, l)] / (w[i] * w[l].conj());
            if c == re(T::zero()) {
                continue;
            }
            // conj(s_l) = Re s_l - i Im s_l
            sys.add_quad(1 + l, i, i, l, c).expect("indices in range");
            sys.add_quad(1 + n + l, i, i, l, c * minus_i)
                .expect("indices in range");
        }
        sys.add_lin(0, i, i, re(T::one()))
            .expect("indices in range");
        sys.set_k0(i, re(-T::one())).expect("indices in range");
    }
    (sys, vec![re(T::one()); n], vec![T::zero(); 2 * n])
}

/// Splits a complex injection into the real parameter vector of
/// [`epfl_system`].
pub fn injection_params<T: Real>(s: &[C<T>]) -> Vec<T> {
    s.iter()
        .map(|z| z.re)
        .chain(s.iter().map(|z| z.im))
        .collect()
}
