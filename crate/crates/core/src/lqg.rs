//! Sensing-constrained LQG: backward Riccati recursion, Kalman covariance
//! under a sensor subset, the sensor-selection objective, and Monte Carlo
//! closed-loop simulation.
//!
//! Time convention: the estimator starts from `Σ_{0|0} = x0_cov`; at steps
//! `t = 1..T` it predicts, fuses the active measurements, and applies
//! `u_t = −K_t x̂_{t|t}`. The stage cost is `x_{t+1}ᵀ Q x_{t+1} + u_tᵀ R u_t`,
//! which matches the terminal condition `S_{T+1} = Q`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::setfn::{matrix_from_rows, matrix_to_rows, SetFunction};
use crate::subset::{ElementId, Subset};

/// Tolerance on negative eigenvalues when checking PSD inputs.
pub const PSD_TOL: f64 = 1e-10;
const ASYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub x0_cov: DMatrix<f64>,
    pub horizon: usize,
}

impl LinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        w: DMatrix<f64>,
        x0_mean: DVector<f64>,
        x0_cov: DMatrix<f64>,
        horizon: usize,
    ) -> Result<Self> {
        let d = a.nrows();
        if !a.is_square() || b.nrows() != d || w.shape() != (d, d) || x0_mean.len() != d
            || x0_cov.shape() != (d, d)
        {
            return Err(Error::Input("inconsistent system dimensions".into()));
        }
        check_psd(&w, "process noise covariance")?;
        check_psd(&x0_cov, "initial covariance")?;
        Ok(Self {
            a,
            b,
            w,
            x0_mean,
            x0_cov,
            horizon,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
}

/// Linear measurement `y = C x + v`, `v ~ N(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorModel {
    pub id: ElementId,
    pub label: String,
    pub c: DMatrix<f64>,
    pub v: DMatrix<f64>,
    /// `Cᵀ V⁻¹ C`
    information: DMatrix<f64>,
}

impl SensorModel {
    pub fn new(id: ElementId, label: impl Into<String>, c: DMatrix<f64>, v: DMatrix<f64>) -> Result<Self> {
        if v.shape() != (c.nrows(), c.nrows()) {
            return Err(Error::Input(format!("sensor {id}: noise covariance has wrong shape")));
        }
        let v_inv = spd_inverse(&v)
            .ok_or_else(|| Error::Input(format!("sensor {id}: noise covariance not positive definite")))?;
        let information = symmetrize(&(c.transpose() * v_inv * &c));
        Ok(Self {
            id,
            label: label.into(),
            c,
            v,
            information,
        })
    }

    pub fn information(&self) -> &DMatrix<f64> {
        &self.information
    }
}

/// Cost matrices plus the backward-recursion products, indexed from `t = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqgWeights {
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// `S_1..S_{T+1}`
    pub s: Vec<DMatrix<f64>>,
    /// Feedback gains `K_1..K_T`.
    pub gains: Vec<DMatrix<f64>>,
    /// Sensing weights `M_1..M_T`.
    pub m: Vec<DMatrix<f64>>,
}

impl LqgWeights {
    pub fn horizon(&self) -> usize {
        self.gains.len()
    }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Symmetric part, additionally projected onto the PSD cone when the input
/// drifted from symmetry by more than `1e-10`.
fn settle(m: &DMatrix<f64>) -> DMatrix<f64> {
    let asym = (m - m.transpose()).amax();
    let sym = symmetrize(m);
    if asym > ASYMMETRY_TOL {
        project_psd(&sym)
    } else {
        sym
    }
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose()
}

/// PSD square root `U diag(√λ₊) Uᵀ`.
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !m.is_square() || (m - m.transpose()).amax() > 1e-9 * (1.0 + m.amax()) {
        return Err(Error::Input(format!("{what} is not symmetric")));
    }
    if min_eigenvalue(m) < -PSD_TOL {
        return Err(Error::Input(format!("{what} is not positive semi-definite")));
    }
    Ok(())
}

fn spd_inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    m.clone().cholesky().map(|c| c.inverse())
}

/// Backward Riccati recursion from `S_{T+1} = Q`:
/// `Γ_t = R + Bᵀ S_{t+1} B`, `K_t = Γ_t⁻¹ Bᵀ S_{t+1} A`, `M_t = K_tᵀ Γ_t K_t`,
/// `S_t = Q + Aᵀ S_{t+1} A − Aᵀ S_{t+1} B K_t`.
pub fn riccati_backward(sys: &LinearSystem, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqgWeights> {
    let d = sys.state_dim();
    let m_in = sys.input_dim();
    if q.shape() != (d, d) || r.shape() != (m_in, m_in) {
        return Err(Error::Input("cost matrices have wrong shape".into()));
    }
    check_psd(q, "Q")?;
    if r.clone().cholesky().is_none() {
        return Err(Error::Input("R is not positive definite".into()));
    }
    if sys.horizon < 1 {
        return Err(Error::Input("horizon must be at least 1".into()));
    }
    let t_len = sys.horizon;
    let (a, b) = (&sys.a, &sys.b);
    let mut s = vec![DMatrix::zeros(d, d); t_len + 1];
    let mut gains = vec![DMatrix::zeros(m_in, d); t_len];
    let mut m = vec![DMatrix::zeros(d, d); t_len];
    s[t_len] = q.clone();
    for t in (0..t_len).rev() {
        let next = &s[t + 1];
        let gamma = symmetrize(&(r + b.transpose() * next * b));
        let chol = gamma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical(format!("Γ_{} is singular", t + 1)))?;
        let k = chol.solve(&(b.transpose() * next * a));
        m[t] = settle(&(k.transpose() * &gamma * &k));
        s[t] = settle(&(q + a.transpose() * next * a - a.transpose() * next * b * &k));
        gains[t] = k;
    }
    Ok(LqgWeights {
        q: q.clone(),
        r: r.clone(),
        s,
        gains,
        m,
    })
}

/// Sum of the per-sensor information matrices `Σ Cᵢᵀ Vᵢ⁻¹ Cᵢ`.
pub fn information_of<'a, I: IntoIterator<Item = &'a SensorModel>>(d: usize, sensors: I) -> DMatrix<f64> {
    sensors
        .into_iter()
        .fold(DMatrix::zeros(d, d), |acc, s| acc + s.information())
}

/// Filtered covariances `Σ_{t|t}`, `t = 1..T`, via the information-form update.
pub fn kalman_covariance<'a, I>(sys: &LinearSystem, sensors: I) -> Result<Vec<DMatrix<f64>>>
where
    I: IntoIterator<Item = &'a SensorModel>,
{
    let d = sys.state_dim();
    let info = information_of(d, sensors);
    let fuse = info.iter().any(|&x| x != 0.0);
    let mut out = Vec::with_capacity(sys.horizon);
    let mut cov = sys.x0_cov.clone();
    for t in 1..=sys.horizon {
        let prior = settle(&(&sys.a * &cov * sys.a.transpose() + &sys.w));
        cov = if fuse {
            let prior_inv = spd_inverse(&prior)
                .ok_or_else(|| Error::Numerical(format!("prior covariance at t={t} is singular")))?;
            let post = spd_inverse(&symmetrize(&(prior_inv + &info)))
                .ok_or_else(|| Error::Numerical(format!("posterior information at t={t} is singular")))?;
            settle(&post)
        } else {
            prior
        };
        out.push(cov.clone());
    }
    Ok(out)
}

/// Filtered covariances via the gain-form (Joseph) update on the stacked
/// measurement model. Tolerates singular priors.
pub fn kalman_covariance_gain_form<'a, I>(sys: &LinearSystem, sensors: I) -> Result<Vec<DMatrix<f64>>>
where
    I: IntoIterator<Item = &'a SensorModel>,
{
    let stacked = Stacked::new(sys.state_dim(), sensors);
    let mut out = Vec::with_capacity(sys.horizon);
    let mut cov = sys.x0_cov.clone();
    for _ in 0..sys.horizon {
        let prior = settle(&(&sys.a * &cov * sys.a.transpose() + &sys.w));
        cov = match stacked.gain(&prior)? {
            Some(gain) => stacked.joseph(&prior, &gain),
            None => prior,
        };
        out.push(cov.clone());
    }
    Ok(out)
}

/// Stacked measurement matrices of a sensor subset.
struct Stacked {
    c: DMatrix<f64>,
    v: DMatrix<f64>,
}

impl Stacked {
    fn new<'a, I: IntoIterator<Item = &'a SensorModel>>(d: usize, sensors: I) -> Self {
        let sensors: Vec<&SensorModel> = sensors.into_iter().collect();
        let k: usize = sensors.iter().map(|s| s.c.nrows()).sum();
        let mut c = DMatrix::zeros(k, d);
        let mut v = DMatrix::zeros(k, k);
        let mut row = 0;
        for s in sensors {
            let rows = s.c.nrows();
            c.view_mut((row, 0), (rows, d)).copy_from(&s.c);
            v.view_mut((row, row), (rows, rows)).copy_from(&s.v);
            row += rows;
        }
        Self { c, v }
    }

    fn gain(&self, prior: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
        if self.c.nrows() == 0 {
            return Ok(None);
        }
        let innovation = symmetrize(&(&self.c * prior * self.c.transpose() + &self.v));
        let chol = innovation
            .cholesky()
            .ok_or_else(|| Error::Numerical("innovation covariance is singular".into()))?;
        // K = P Cᵀ S⁻¹  ⇔  Kᵀ = S⁻¹ C P
        Ok(Some(chol.solve(&(&self.c * prior)).transpose()))
    }

    fn joseph(&self, prior: &DMatrix<f64>, gain: &DMatrix<f64>) -> DMatrix<f64> {
        let d = prior.nrows();
        let i_kc = DMatrix::identity(d, d) - gain * &self.c;
        settle(&(&i_kc * prior * i_kc.transpose() + gain * &self.v * gain.transpose()))
    }
}

/// `Σ_t trace(M_t Σ_{t|t})`.
pub fn sensing_cost(weights: &LqgWeights, covs: &[DMatrix<f64>]) -> f64 {
    weights
        .m
        .iter()
        .zip(covs)
        .map(|(m, c)| (m * c).trace())
        .sum()
}

/// Exact expected closed-loop cost of the LQG controller for given filtered
/// covariances: `E[x₁ᵀ(S₁−Q)x₁] + Σ_t tr(W S_{t+1}) + Σ_t tr(M_t Σ_{t|t})`.
pub fn expected_lqg_cost(sys: &LinearSystem, weights: &LqgWeights, covs: &[DMatrix<f64>]) -> f64 {
    let mean1 = &sys.a * &sys.x0_mean;
    let cov1 = &sys.a * &sys.x0_cov * sys.a.transpose() + &sys.w;
    let p = &weights.s[0] - &weights.q;
    let initial = (mean1.transpose() * &p * &mean1)[(0, 0)] + (&p * cov1).trace();
    let process: f64 = weights.s[1..].iter().map(|s| (s * &sys.w).trace()).sum();
    initial + process + sensing_cost(weights, covs)
}

/// Reward-form sensor objective `f(S) = J(∅) − J(S)` with
/// `J(S) = Σ_t trace(M_t Σ_{t|t}(S))`; element `i` is `catalog[i]`.
pub fn sensor_selection_objective(
    sys: &LinearSystem,
    weights: &LqgWeights,
    catalog: &[SensorModel],
) -> Result<SetFunction> {
    if weights.horizon() != sys.horizon {
        return Err(Error::Input("weights horizon does not match the system".into()));
    }
    let sys = Arc::new(sys.clone());
    let weights = Arc::new(weights.clone());
    let catalog: Arc<Vec<SensorModel>> = Arc::new(catalog.to_vec());
    let n = catalog.len();
    // raw value −J(S); the empty-set offset turns it into J(∅) − J(S)
    SetFunction::new(n, "lqg-sensing", move |s: &Subset| {
        match kalman_covariance(&sys, s.iter().map(|i| &catalog[i])) {
            Ok(covs) => -sensing_cost(&weights, &covs),
            Err(_) => f64::NAN,
        }
    })
}

/// Mean of the realized cost over seeded rollouts with only the `active`
/// sensors feeding the filter.
///
/// Noise draws depend on `(seed, rollout)` and the full catalog, not on the
/// active set, so different sensor sets see common random numbers.
pub fn simulate_closed_loop_cost(
    sys: &LinearSystem,
    weights: &LqgWeights,
    catalog: &[SensorModel],
    active: &Subset,
    rollouts: usize,
    seed: u64,
) -> Result<f64> {
    if rollouts == 0 {
        return Err(Error::Input("rollouts must be at least 1".into()));
    }
    if weights.horizon() != sys.horizon {
        return Err(Error::Input("weights horizon does not match the system".into()));
    }
    if active.ground_size() != catalog.len() {
        return Err(Error::GroundMismatch {
            expected: catalog.len(),
            actual: active.ground_size(),
        });
    }
    let d = sys.state_dim();
    let t_len = sys.horizon;
    let selected: Vec<&SensorModel> = active.iter().map(|i| &catalog[i]).collect();
    let stacked = Stacked::new(d, selected.iter().copied());

    // Filter gains are deterministic; compute them once.
    let mut filter_gains = Vec::with_capacity(t_len);
    let mut cov = sys.x0_cov.clone();
    for _ in 0..t_len {
        let prior = settle(&(&sys.a * &cov * sys.a.transpose() + &sys.w));
        let gain = stacked.gain(&prior)?;
        cov = match &gain {
            Some(g) => stacked.joseph(&prior, g),
            None => prior,
        };
        filter_gains.push(gain);
    }

    let x0_root = psd_sqrt(&sys.x0_cov);
    let w_root = psd_sqrt(&sys.w);
    let v_roots: Vec<DMatrix<f64>> = catalog.iter().map(|s| psd_sqrt(&s.v)).collect();
    // rows of the stacked measurement belonging to each catalog sensor
    let offsets: Vec<usize> = catalog
        .iter()
        .scan(0, |acc, s| {
            let here = *acc;
            *acc += s.c.nrows();
            Some(here)
        })
        .collect();
    let active_rows: Vec<(ElementId, usize)> = {
        let mut row = 0;
        selected
            .iter()
            .map(|s| {
                let here = (s.id, row);
                row += s.c.nrows();
                here
            })
            .collect()
    };
    let total_meas: usize = catalog.iter().map(|s| s.c.nrows()).sum();

    let mut total = 0.0;
    for rollout in 0..rollouts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rollout as u64);
        let mut normal = |len: usize| DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal));

        let x0 = &sys.x0_mean + &x0_root * normal(d);
        let mut x = &sys.a * &x0 + &w_root * normal(d);
        let mut estimate = sys.x0_mean.clone();
        let mut u_prev = DVector::zeros(sys.input_dim());
        let mut cost = 0.0;
        for (filter_gain, feedback) in filter_gains.iter().zip(&weights.gains) {
            let raw_noise = normal(total_meas);
            let w_noise = &w_root * normal(d);

            estimate = &sys.a * &estimate + &sys.b * &u_prev;
            if let Some(gain) = filter_gain {
                let mut y = DVector::zeros(stacked.c.nrows());
                for &(id, row) in &active_rows {
                    let s = &catalog[id];
                    let k = s.c.nrows();
                    let v = &v_roots[id] * raw_noise.rows(offsets[id], k);
                    y.rows_mut(row, k).copy_from(&(&s.c * &x + v));
                }
                let innovation = y - &stacked.c * &estimate;
                estimate += gain * innovation;
            }
            let u = -(feedback * &estimate);
            x = &sys.a * &x + &sys.b * &u + w_noise;
            cost += (x.transpose() * &weights.q * &x)[(0, 0)] + (u.transpose() * &weights.r * &u)[(0, 0)];
            u_prev = u;
        }
        total += cost;
    }
    Ok(total / rollouts as f64)
}

/// Parameters of the UAV landing scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    #[serde(rename = "T", alias = "horizon", default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_ground")]
    pub n_ground: usize,
}

fn default_horizon() -> usize {
    20
}
fn default_dt() -> f64 {
    1.0
}
fn default_ground() -> usize {
    12
}

impl ScenarioConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            horizon: default_horizon(),
            dt: default_dt(),
            n_ground: default_ground(),
        }
    }
}

/// A built scenario: dynamics, cost weights, and the sensor catalog.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: LinearSystem,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub catalog: Vec<SensorModel>,
}

impl Scenario {
    pub fn weights(&self) -> Result<LqgWeights> {
        riccati_backward(&self.system, &self.q, &self.r)
    }

    pub fn objective(&self) -> Result<SetFunction> {
        sensor_selection_objective(&self.system, &self.weights()?, &self.catalog)
    }

    pub fn to_descriptor(&self) -> LqgObjectiveDescriptor {
        LqgObjectiveDescriptor {
            a: matrix_to_rows(&self.system.a),
            b: matrix_to_rows(&self.system.b),
            w: matrix_to_rows(&self.system.w),
            x0_mean: self.system.x0_mean.iter().copied().collect(),
            x0_cov: matrix_to_rows(&self.system.x0_cov),
            horizon: self.system.horizon,
            q: matrix_to_rows(&self.q),
            r: matrix_to_rows(&self.r),
            sensors: self
                .catalog
                .iter()
                .map(|s| SensorDescriptor {
                    label: s.label.clone(),
                    c: matrix_to_rows(&s.c),
                    v: matrix_to_rows(&s.v),
                })
                .collect(),
        }
    }
}

/// 3-D double integrator with a GPS receiver, an altimeter, and `n_ground`
/// random linear ground sensors.
pub fn build_landing_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    let dt = config.dt;
    let i3 = DMatrix::<f64>::identity(3, 3);
    let mut a = DMatrix::<f64>::identity(6, 6);
    a.view_mut((0, 3), (3, 3)).copy_from(&(&i3 * dt));
    let mut b = DMatrix::<f64>::zeros(6, 3);
    b.view_mut((0, 0), (3, 3)).copy_from(&(&i3 * (dt * dt / 2.0)));
    b.view_mut((3, 0), (3, 3)).copy_from(&(&i3 * dt));

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let position = Uniform::new_inclusive(-10.0, 10.0).expect("valid range");
    let mut x0_mean = DVector::zeros(6);
    for k in 0..3 {
        x0_mean[k] = rng.sample(position);
    }
    let system = LinearSystem::new(
        a,
        b,
        DMatrix::identity(6, 6),
        x0_mean,
        DMatrix::identity(6, 6),
        config.horizon,
    )?;

    let mut catalog = Vec::with_capacity(2 + config.n_ground);
    let mut gps = DMatrix::zeros(3, 6);
    gps.view_mut((0, 0), (3, 3)).copy_from(&i3);
    catalog.push(SensorModel::new(0, "gps", gps, &i3 * 2.0)?);
    let mut altimeter = DMatrix::zeros(1, 6);
    altimeter[(0, 2)] = 1.0;
    catalog.push(SensorModel::new(1, "altimeter", altimeter, DMatrix::from_element(1, 1, 0.25))?);
    for g in 0..config.n_ground {
        let c = DMatrix::from_fn(1, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        catalog.push(SensorModel::new(2 + g, format!("ground{g}"), c, DMatrix::identity(1, 1))?);
    }

    let q = DMatrix::from_diagonal(&DVector::from_vec(vec![1e-3, 1e-3, 10.0, 1e-3, 1e-3, 10.0]));
    Ok(Scenario {
        system,
        q,
        r: DMatrix::identity(3, 3),
        catalog,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorDescriptor {
    #[serde(default)]
    pub label: String,
    pub c: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

/// JSON form of a sensor-selection objective; consumed as the
/// `lqg_sensing` objective kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqgObjectiveDescriptor {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    pub x0_mean: Vec<f64>,
    pub x0_cov: Vec<Vec<f64>>,
    pub horizon: usize,
    pub q: Vec<Vec<f64>>,
    pub r: Vec<Vec<f64>>,
    pub sensors: Vec<SensorDescriptor>,
}

impl LqgObjectiveDescriptor {
    pub fn build_scenario(&self) -> Result<Scenario> {
        let system = LinearSystem::new(
            matrix_from_rows(&self.a, "a")?,
            matrix_from_rows(&self.b, "b")?,
            matrix_from_rows(&self.w, "w")?,
            DVector::from_vec(self.x0_mean.clone()),
            matrix_from_rows(&self.x0_cov, "x0_cov")?,
            self.horizon,
        )?;
        let catalog = self
            .sensors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                SensorModel::new(
                    i,
                    s.label.clone(),
                    matrix_from_rows(&s.c, "c")?,
                    matrix_from_rows(&s.v, "v")?,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            system,
            q: matrix_from_rows(&self.q, "q")?,
            r: matrix_from_rows(&self.r, "r")?,
            catalog,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar(a: f64, b: f64, w: f64, x0: f64, t: usize) -> LinearSystem {
        LinearSystem::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, w),
            DVector::zeros(1),
            DMatrix::from_element(1, 1, x0),
            t,
        )
        .unwrap()
    }

    fn one() -> DMatrix<f64> {
        DMatrix::from_element(1, 1, 1.0)
    }

    #[test]
    fn scalar_riccati_step() {
        let w = riccati_backward(&scalar(1.0, 1.0, 1.0, 1.0, 1), &one(), &one()).unwrap();
        assert_eq!(w.s[1][(0, 0)], 1.0);
        assert_abs_diff_eq!(w.gains[0][(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.m[0][(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(w.s[0][(0, 0)], 1.5, epsilon = 1e-15);
    }

    #[test]
    fn no_actuation_means_no_sensing_weight() {
        let w = riccati_backward(&scalar(1.0, 0.0, 1.0, 1.0, 5), &one(), &one()).unwrap();
        assert!(w.gains.iter().all(|k| k.amax() == 0.0));
        assert!(w.m.iter().all(|m| m.amax() == 0.0));
    }

    #[test]
    fn riccati_rejects_bad_costs() {
        let sys = scalar(1.0, 1.0, 1.0, 1.0, 3);
        assert!(riccati_backward(&sys, &one(), &DMatrix::zeros(1, 1)).is_err());
        assert!(riccati_backward(&sys, &(-one()), &one()).is_err());
        assert!(riccati_backward(&scalar(1.0, 1.0, 1.0, 1.0, 0), &one(), &one()).is_err());
    }

    #[test]
    fn kalman_prediction_only() {
        let covs = kalman_covariance(&scalar(1.0, 1.0, 1.0, 1.0, 2), []).unwrap();
        assert_eq!(covs[0][(0, 0)], 2.0);
        assert_eq!(covs[1][(0, 0)], 3.0);
    }

    #[test]
    fn kalman_single_sensor_step() {
        let sensor = SensorModel::new(0, "s", one(), one()).unwrap();
        let covs = kalman_covariance(&scalar(1.0, 1.0, 1.0, 1.0, 1), [&sensor]).unwrap();
        assert_abs_diff_eq!(covs[0][(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
        let gain = kalman_covariance_gain_form(&scalar(1.0, 1.0, 1.0, 1.0, 1), [&sensor]).unwrap();
        assert_abs_diff_eq!(gain[0][(0, 0)], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn sensor_requires_positive_definite_noise() {
        assert!(SensorModel::new(0, "bad", one(), DMatrix::zeros(1, 1)).is_err());
        assert!(SensorModel::new(0, "bad", one(), DMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn scenario_shape() {
        let sc = build_landing_scenario(&ScenarioConfig::new(3)).unwrap();
        assert_eq!(sc.catalog.len(), 14);
        let gps = &sc.catalog[0];
        assert_eq!(gps.c.shape(), (3, 6));
        assert_eq!(gps.c.view((0, 0), (3, 3)), DMatrix::<f64>::identity(3, 3));
        assert_eq!(gps.v, DMatrix::<f64>::identity(3, 3) * 2.0);
        let alt = &sc.catalog[1];
        assert_eq!(alt.c.shape(), (1, 6));
        assert_eq!(alt.c[(0, 2)], 1.0);
        assert_eq!(alt.c.sum(), 1.0);
        assert_eq!(alt.v[(0, 0)], 0.25);
        assert_eq!(sc.system.w, DMatrix::<f64>::identity(6, 6));
        assert!(sc.system.x0_mean.rows(0, 3).iter().all(|p| p.abs() <= 10.0));
        assert!(sc.system.x0_mean.rows(3, 3).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scenario_weights_are_psd() {
        let sc = build_landing_scenario(&ScenarioConfig::new(11)).unwrap();
        let w = sc.weights().unwrap();
        assert_eq!(w.m.len(), 20);
        for m in w.m.iter().chain(&w.s) {
            assert!(min_eigenvalue(m) >= -1e-8);
            assert!((m - m.transpose()).amax() <= 1e-8);
        }
    }

    #[test]
    fn zero_noise_at_rest_costs_nothing() {
        let tiny = 1e-12;
        let sys = LinearSystem::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 1),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
            5,
        )
        .unwrap();
        let w = riccati_backward(&sys, &DMatrix::identity(2, 2), &one()).unwrap();
        let sensor = SensorModel::new(0, "s", DMatrix::identity(2, 2), DMatrix::identity(2, 2) * tiny).unwrap();
        let cost = simulate_closed_loop_cost(&sys, &w, &[sensor], &Subset::full(1), 10, 1).unwrap();
        assert_eq!(cost, 0.0);
    }

    #[test]
    fn descriptor_round_trip() {
        let sc = build_landing_scenario(&ScenarioConfig::new(5)).unwrap();
        let d = sc.to_descriptor();
        let json = serde_json::to_string(&d).unwrap();
        let back: LqgObjectiveDescriptor = serde_json::from_str(&json).unwrap();
        let rebuilt = back.build_scenario().unwrap();
        let f = sc.objective().unwrap();
        let g = rebuilt.objective().unwrap();
        let s = Subset::from_ids(14, [0, 3, 9]).unwrap();
        assert_abs_diff_eq!(f.evaluate(&s).unwrap(), g.evaluate(&s).unwrap(), epsilon = 1e-9);
    }
}
