//! Linear two-state sine-wave Kalman filter for one hypothesized
//! frequency.
//!
//! The target position obeys the harmonic-oscillator dynamics
//! `x'' = -omega^2 x`, so the state `[position, velocity]` propagates
//! with a rotation-like transition matrix. Process noise enters as
//! continuous white acceleration noise with spectral density `phi_s`;
//! only the position is measured.

use crate::error::{Error, Result};

/// 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub m: [[f64; 2]; 2],
}

impl Matrix2 {
    pub const fn new(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Matrix2 { m: [[m00, m01], [m10, m11]] }
    }

    pub const fn zero() -> Self {
        Matrix2::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn identity() -> Self {
        Matrix2::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn diag(d0: f64, d1: f64) -> Self {
        Matrix2::new(d0, 0.0, 0.0, d1)
    }

    pub fn mul(&self, rhs: &Matrix2) -> Matrix2 {
        let a = &self.m;
        let b = &rhs.m;
        Matrix2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn transpose(&self) -> Matrix2 {
        Matrix2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn add(&self, rhs: &Matrix2) -> Matrix2 {
        Matrix2::new(
            self.m[0][0] + rhs.m[0][0],
            self.m[0][1] + rhs.m[0][1],
            self.m[1][0] + rhs.m[1][0],
            self.m[1][1] + rhs.m[1][1],
        )
    }

    pub fn scale(&self, s: f64) -> Matrix2 {
        Matrix2::new(self.m[0][0] * s, self.m[0][1] * s, self.m[1][0] * s, self.m[1][1] * s)
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Averages the off-diagonal entries.
    pub fn symmetrized(&self) -> Matrix2 {
        let off = 0.5 * (self.m[0][1] + self.m[1][0]);
        Matrix2::new(self.m[0][0], off, off, self.m[1][1])
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|x| x.is_finite())
    }

    /// Smallest eigenvalue of the symmetric part (closed form).
    pub fn min_eigenvalue_sym(&self) -> f64 {
        let s = self.symmetrized();
        let mean = 0.5 * s.trace();
        let half_diff = 0.5 * (s.m[0][0] - s.m[1][1]);
        mean - (half_diff * half_diff + s.m[0][1] * s.m[0][1]).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

/// Model constants for one hypothesized frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineModel {
    /// Hypothesized angular frequency, rad/s.
    pub omega: f64,
    /// Sampling time, seconds.
    pub dt: f64,
    /// Continuous process-noise spectral density, (m/s^2)^2 * s.
    pub phi_s: f64,
    /// Measurement-noise variance, m^2.
    pub r: f64,
}

impl SineModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) {
            return Err(Error::param(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::param(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.phi_s >= 0.0) {
            return Err(Error::param(format!("phi_s must be >= 0, got {}", self.phi_s)));
        }
        if !(self.r > 0.0) {
            return Err(Error::param(format!("r must be > 0, got {}", self.r)));
        }
        Ok(())
    }
}

/// Filter state: estimate and covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanFilterState {
    /// [position m, velocity m/s].
    pub x_hat: [f64; 2],
    /// Estimate-error covariance.
    pub p: Matrix2,
}

impl KalmanFilterState {
    pub fn new(x_hat: [f64; 2], p: Matrix2) -> Self {
        KalmanFilterState { x_hat, p }
    }

    pub fn is_finite(&self) -> bool {
        self.x_hat.iter().all(|x| x.is_finite()) && self.p.is_finite()
    }
}

/// Discrete transition matrix of the harmonic oscillator:
/// `[[cos wdt, sin wdt / w], [-w sin wdt, cos wdt]]`.
pub fn transition_matrix(omega: f64, dt: f64) -> Matrix2 {
    let c = (omega * dt).cos();
    let s = (omega * dt).sin();
    Matrix2::new(c, s / omega, -omega * s, c)
}

/// Discrete process-noise covariance: the integral over one sampling
/// interval of `Phi(tau) * diag(0, phi_s) * Phi(tau)^T`, evaluated in
/// closed form:
///
/// ```text
/// Q11 = phi_s / w^2 * (dt/2 - sin(2 w dt) / (4 w))
/// Q12 = Q21 = phi_s * sin^2(w dt) / (2 w^2)
/// Q22 = phi_s * (dt/2 + sin(2 w dt) / (4 w))
/// ```
pub fn process_noise(model: &SineModel) -> Matrix2 {
    let w = model.omega;
    let dt = model.dt;
    let phi_s = model.phi_s;
    let s2 = (2.0 * w * dt).sin();
    let s = (w * dt).sin();
    let q11 = phi_s / (w * w) * (0.5 * dt - s2 / (4.0 * w));
    let q12 = phi_s * s * s / (2.0 * w * w);
    let q22 = phi_s * (0.5 * dt + s2 / (4.0 * w));
    Matrix2::new(q11, q12, q12, q22)
}

const H: [f64; 2] = [1.0, 0.0]; // position-only measurement

/// One predict-update cycle.
///
/// Returns the posterior state, the innovation `z - H Phi x`, and the
/// innovation variance `H M H^T + R`. The posterior covariance is
/// symmetrized after the standard-form update.
pub fn kf_step(
    state: &KalmanFilterState,
    z: f64,
    model: &SineModel,
) -> Result<(KalmanFilterState, f64, f64)> {
    if !z.is_finite() {
        return Err(Error::numeric(format!("measurement not finite: {z}")));
    }
    if !state.is_finite() {
        return Err(Error::numeric("filter state not finite".to_string()));
    }

    let phi = transition_matrix(model.omega, model.dt);
    let q = process_noise(model);

    let x_pred = phi.mul_vec(state.x_hat);
    let m = phi.mul(&state.p).mul(&phi.transpose()).add(&q).symmetrized();

    let residual = z - (H[0] * x_pred[0] + H[1] * x_pred[1]);
    let residual_var = m.m[0][0] + model.r;
    if !(residual_var > 0.0) {
        return Err(Error::numeric(format!(
            "innovation variance must be positive, got {residual_var}"
        )));
    }

    let k = [m.m[0][0] / residual_var, m.m[1][0] / residual_var];
    let x_hat = [x_pred[0] + k[0] * residual, x_pred[1] + k[1] * residual];

    // P = (I - K H) M, standard form, then symmetrize.
    let p = Matrix2::new(
        m.m[0][0] - k[0] * m.m[0][0],
        m.m[0][1] - k[0] * m.m[0][1],
        m.m[1][0] - k[1] * m.m[0][0],
        m.m[1][1] - k[1] * m.m[0][1],
    )
    .symmetrized();

    Ok((KalmanFilterState { x_hat, p }, residual, residual_var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use std::f64::consts::TAU;

    // ── Oracles ──────────────────────────────────────────────────────

    /// Matrix exponential exp(F dt) by scaling-and-squaring Taylor series.
    fn expm(f: &Matrix2, dt: f64) -> Matrix2 {
        let mut a = f.scale(dt);
        let mut squarings = 0u32;
        while a.max_abs() > 0.5 {
            a = a.scale(0.5);
            squarings += 1;
        }
        let mut result = Matrix2::identity();
        let mut term = Matrix2::identity();
        for k in 1..60 {
            term = term.mul(&a).scale(1.0 / k as f64);
            result = result.add(&term);
            if term.max_abs() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            result = result.mul(&result);
        }
        result
    }

    /// Adaptive Simpson quadrature of a scalar function.
    fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn recurse(
            f: &dyn Fn(f64) -> f64,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let mid = 0.5 * (a + b);
            let left = simpson(f, a, mid);
            let right = simpson(f, mid, b);
            if depth > 40 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                recurse(f, a, mid, left, tol / 2.0, depth + 1)
                    + recurse(f, mid, b, right, tol / 2.0, depth + 1)
            }
        }
        let whole = simpson(f, a, b);
        recurse(f, a, b, whole, tol, 0)
    }

    /// Q integrand entry (i, j) at tau.
    fn q_integrand(omega: f64, phi_s: f64, tau: f64, i: usize, j: usize) -> f64 {
        let phi = transition_matrix(omega, tau);
        let q = Matrix2::diag(0.0, phi_s);
        phi.mul(&q).mul(&phi.transpose()).m[i][j]
    }

    // ── transition_matrix ────────────────────────────────────────────

    #[test]
    fn transition_at_zero_dt_is_identity() {
        let phi = transition_matrix(TAU * 5.0, 0.0);
        assert_eq!(phi, Matrix2::identity());
    }

    #[test]
    fn transition_quarter_period() {
        let omega = 3.0;
        let dt = std::f64::consts::FRAC_PI_2 / omega;
        let phi = transition_matrix(omega, dt);
        assert!(phi.m[0][0].abs() < 1e-15);
        assert!((phi.m[0][1] - 1.0 / omega).abs() < 1e-15);
        assert!((phi.m[1][0] + omega).abs() < 1e-12);
        assert!(phi.m[1][1].abs() < 1e-15);
    }

    #[test]
    fn transition_matches_matrix_exponential() {
        for &(f_hz, dt) in &[(5.0, 0.01), (5.5, 0.01), (10.4, 0.01), (6.0, 0.25), (0.3, 1.7)] {
            let omega = TAU * f_hz;
            let f = Matrix2::new(0.0, 1.0, -omega * omega, 0.0);
            let exact = transition_matrix(omega, dt);
            let series = expm(&f, dt);
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (exact.m[i][j] - series.m[i][j]).abs() < 1e-12,
                        "f={f_hz} dt={dt} entry ({i},{j}): {} vs {}",
                        exact.m[i][j],
                        series.m[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn transition_semigroup_property() {
        let mut rng = Rng::new(8);
        for _ in 0..50 {
            let omega = rng.next_range(0.5, 80.0);
            let a = rng.next_range(0.0, 0.3);
            let b = rng.next_range(0.0, 0.3);
            let lhs = transition_matrix(omega, a + b);
            let rhs = transition_matrix(omega, a).mul(&transition_matrix(omega, b));
            for i in 0..2 {
                for j in 0..2 {
                    // Entries scale with omega; compare relative to that scale.
                    let scale = 1.0f64.max(omega);
                    assert!(
                        (lhs.m[i][j] - rhs.m[i][j]).abs() < 1e-12 * scale,
                        "omega={omega} a={a} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn transition_determinant_is_one() {
        for &f_hz in &[5.0, 5.2, 10.4] {
            let phi = transition_matrix(TAU * f_hz, 0.01);
            assert!((phi.det() - 1.0).abs() < 1e-14);
        }
    }

    // ── process_noise ────────────────────────────────────────────────

    #[test]
    fn process_noise_zero_density_and_zero_dt() {
        let mut model = SineModel { omega: TAU * 5.0, dt: 0.01, phi_s: 0.0, r: 0.01 };
        assert_eq!(process_noise(&model), Matrix2::zero());
        model.phi_s = 1.0;
        model.dt = 0.0;
        let q = process_noise(&model);
        assert!(q.max_abs() < 1e-15);
    }

    #[test]
    fn process_noise_matches_quadrature() {
        for &(f_hz, dt, phi_s) in &[(5.0, 0.01, 1.0), (5.5, 0.01, 0.1), (10.4, 0.05, 2.5), (6.0, 0.75, 0.7)]
        {
            let omega = TAU * f_hz;
            let model = SineModel { omega, dt, phi_s, r: 0.01 };
            let q = process_noise(&model);
            for i in 0..2 {
                for j in 0..2 {
                    let numeric = adaptive_simpson(
                        &|tau| q_integrand(omega, phi_s, tau, i, j),
                        0.0,
                        dt,
                        1e-13,
                    );
                    assert!(
                        (q.m[i][j] - numeric).abs() < 1e-10,
                        "f={f_hz} dt={dt} entry ({i},{j}): closed {} vs quadrature {numeric}",
                        q.m[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn process_noise_is_symmetric_psd() {
        let model = SineModel { omega: TAU * 10.2, dt: 0.01, phi_s: 0.3, r: 0.01 };
        let q = process_noise(&model);
        assert_eq!(q.m[0][1], q.m[1][0]);
        assert!(q.min_eigenvalue_sym() >= -1e-15 * q.trace().abs());
    }

    // ── kf_step ──────────────────────────────────────────────────────

    fn model_5hz() -> SineModel {
        SineModel { omega: TAU * 5.0, dt: 0.01, phi_s: 0.1, r: 0.09 }
    }

    #[test]
    fn diffuse_prior_trusts_measurement() {
        let state = KalmanFilterState::new([0.0, 0.0], Matrix2::diag(1e6, 1e6));
        let z = 0.7;
        let (next, _, _) = kf_step(&state, z, &model_5hz()).unwrap();
        assert!((next.x_hat[0] - z).abs() < z.abs() * 1e-5 + 1e-5);
    }

    #[test]
    fn exact_model_reproduces_noiseless_signal() {
        // Q = 0, exact init [0, A w]: the prediction equals the truth,
        // so every residual stays at numerical zero.
        let omega = TAU * 5.0;
        let model = SineModel { omega, dt: 0.01, phi_s: 0.0, r: 1e-4 };
        let mut state = KalmanFilterState::new([0.0, omega], Matrix2::zero());
        for k in 1..=100 {
            let z = (omega * k as f64 * 0.01).sin();
            let (next, residual, _) = kf_step(&state, z, &model).unwrap();
            assert!(residual.abs() <= 1e-9, "k={k} residual={residual}");
            state = next;
        }
    }

    /// Straight-line transcription of the filter equations on plain
    /// scalars, independent of kf_step.
    #[allow(clippy::too_many_arguments)]
    fn oracle_step(
        x: [f64; 2],
        p: [[f64; 2]; 2],
        z: f64,
        omega: f64,
        dt: f64,
        phi_s: f64,
        r: f64,
    ) -> ([f64; 2], [[f64; 2]; 2]) {
        let c = (omega * dt).cos();
        let s = (omega * dt).sin();
        let phi = [[c, s / omega], [-omega * s, c]];
        let s2 = (2.0 * omega * dt).sin();
        let q = [
            [
                phi_s / (omega * omega) * (dt / 2.0 - s2 / (4.0 * omega)),
                phi_s * s * s / (2.0 * omega * omega),
            ],
            [
                phi_s * s * s / (2.0 * omega * omega),
                phi_s * (dt / 2.0 + s2 / (4.0 * omega)),
            ],
        ];
        // M = Phi P Phi^T + Q
        let pp = [
            [
                phi[0][0] * p[0][0] + phi[0][1] * p[1][0],
                phi[0][0] * p[0][1] + phi[0][1] * p[1][1],
            ],
            [
                phi[1][0] * p[0][0] + phi[1][1] * p[1][0],
                phi[1][0] * p[0][1] + phi[1][1] * p[1][1],
            ],
        ];
        let mut m = [[0.0f64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                m[i][j] = pp[i][0] * phi[j][0] + pp[i][1] * phi[j][1] + q[i][j];
            }
        }
        let off = 0.5 * (m[0][1] + m[1][0]);
        m[0][1] = off;
        m[1][0] = off;
        let x_pred = [
            phi[0][0] * x[0] + phi[0][1] * x[1],
            phi[1][0] * x[0] + phi[1][1] * x[1],
        ];
        let res = z - x_pred[0];
        let cvar = m[0][0] + r;
        let k = [m[0][0] / cvar, m[1][0] / cvar];
        let x_new = [x_pred[0] + k[0] * res, x_pred[1] + k[1] * res];
        let mut p_new = [
            [m[0][0] - k[0] * m[0][0], m[0][1] - k[0] * m[0][1]],
            [m[1][0] - k[1] * m[0][0], m[1][1] - k[1] * m[0][1]],
        ];
        let off = 0.5 * (p_new[0][1] + p_new[1][0]);
        p_new[0][1] = off;
        p_new[1][0] = off;
        (x_new, p_new)
    }

    #[test]
    fn ten_step_run_matches_transcription() {
        let model = model_5hz();
        let mut rng = Rng::new(31);
        let mut state = KalmanFilterState::new([0.0, 0.0], Matrix2::diag(100.0, 1e5));
        let mut ox = [0.0, 0.0];
        let mut op = [[100.0, 0.0], [0.0, 1e5]];
        for k in 1..=10 {
            let z = (model.omega * k as f64 * model.dt).sin() + 0.3 * rng.next_gaussian();
            let (next, _, _) = kf_step(&state, z, &model).unwrap();
            let (nx, np) = oracle_step(ox, op, z, model.omega, model.dt, model.phi_s, model.r);
            for i in 0..2 {
                assert!((next.x_hat[i] - nx[i]).abs() < 1e-12, "k={k} x[{i}]");
                for j in 0..2 {
                    assert!((next.p.m[i][j] - np[i][j]).abs() < 1e-12, "k={k} p[{i}][{j}]");
                }
            }
            state = next;
            ox = nx;
            op = np;
        }
    }

    #[test]
    fn covariance_stays_symmetric_psd() {
        let model = model_5hz();
        let mut rng = Rng::new(12);
        let mut state = KalmanFilterState::new([0.0, 0.0], Matrix2::diag(100.0, 1e5));
        for _ in 0..500 {
            let z = rng.next_gaussian();
            let (next, _, residual_var) = kf_step(&state, z, &model).unwrap();
            let asym = (next.p.m[0][1] - next.p.m[1][0]).abs();
            assert!(asym <= 1e-12 * next.p.trace().abs().max(1e-300));
            assert!(next.p.min_eigenvalue_sym() >= -1e-12 * next.p.trace().abs());
            assert!(residual_var > model.r);
            state = next;
        }
    }

    #[test]
    fn infinite_r_keeps_prior_covariance() {
        // With R huge the update carries no information: P ~= M.
        let mut model = model_5hz();
        model.r = 1e30;
        let state = KalmanFilterState::new([0.1, -0.4], Matrix2::new(2.0, 0.3, 0.3, 5.0));
        let (next, _, _) = kf_step(&state, 0.9, &model).unwrap();
        let phi = transition_matrix(model.omega, model.dt);
        let m = phi
            .mul(&state.p)
            .mul(&phi.transpose())
            .add(&process_noise(&model))
            .symmetrized();
        for i in 0..2 {
            for j in 0..2 {
                assert!((next.p.m[i][j] - m.m[i][j]).abs() <= 1e-9 * m.m[i][j].abs().max(1e-12));
            }
        }
    }

    #[test]
    fn rejects_non_finite_measurement() {
        let state = KalmanFilterState::new([0.0, 0.0], Matrix2::diag(1.0, 1.0));
        assert!(kf_step(&state, f64::NAN, &model_5hz()).is_err());
        assert!(kf_step(&state, f64::INFINITY, &model_5hz()).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(SineModel { omega: 0.0, dt: 0.01, phi_s: 0.1, r: 0.01 }.validate().is_err());
        assert!(SineModel { omega: 1.0, dt: 0.0, phi_s: 0.1, r: 0.01 }.validate().is_err());
        assert!(SineModel { omega: 1.0, dt: 0.01, phi_s: -0.1, r: 0.01 }.validate().is_err());
        assert!(SineModel { omega: 1.0, dt: 0.01, phi_s: 0.1, r: 0.0 }.validate().is_err());
        assert!(SineModel { omega: 1.0, dt: 0.01, phi_s: 0.1, r: 0.01 }.validate().is_ok());
    }
}
