//! Brute-force Lyapunov matrix of the delay system.
//!
//! The fundamental matrix is integrated with classical RK4 on a grid that
//! resolves the delay exactly; delayed values at half steps are linearly
//! interpolated and the distributed term uses trapezoid quadrature on the
//! same grid. `U(τ)` is then the trapezoid sum of `Φ(t)^T W Φ(t+τ)` up to a
//! truncation horizon, evaluated separately for every `τ` of a symmetric
//! grid on `[-h, h]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifted::SystemSpec;
use crate::matrix::DenseMatrix;

/// Norm at which a trajectory is declared divergent.
const OVERFLOW_GUARD: f64 = 1e100;

/// `||Φ(t_max)||_F` must have dropped below this fraction of `||Φ(0)||_F`
/// before the defining integral is truncated there.
pub const TRUNCATION_DECAY_GUARD: f64 = 1e-4;

fn ratio_as_count(num: f64, den: f64, what: &str) -> Result<usize> {
    let r = num / den;
    let k = r.round();
    if !(k >= 0.0) || (r - k).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::Grid(format!(
            "{what}: {num} is not an integer multiple of {den}"
        )));
    }
    Ok(k as usize)
}

/// `out += alpha * a * b` for row-major `n x n` blocks.
#[inline]
fn gemm_acc(out: &mut [f64], alpha: f64, a: &[f64], b: &[f64], n: usize) {
    for i in 0..n {
        for k in 0..n {
            let aik = alpha * a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            let row = &b[k * n..k * n + n];
            let o = &mut out[i * n..i * n + n];
            for (x, y) in o.iter_mut().zip(row) {
                *x += aik * y;
            }
        }
    }
}

/// Samples of a matrix function on a uniform grid; zero before `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub step: f64,
    pub start: f64,
    n: usize,
    data: Vec<f64>,
}

impl SampledTrajectory {
    pub fn len(&self) -> usize {
        self.data.len() / (self.n * self.n)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn raw(&self, k: usize) -> &[f64] {
        let n2 = self.n * self.n;
        &self.data[k * n2..(k + 1) * n2]
    }

    pub fn sample(&self, k: usize) -> DenseMatrix {
        DenseMatrix::new(self.n, self.n, self.raw(k).to_vec()).expect("finite samples")
    }

    /// Value at grid time `t`: zero before the start, `None` past the end
    /// or off the grid.
    pub fn at(&self, t: f64) -> Option<DenseMatrix> {
        let pos = (t - self.start) / self.step;
        let k = pos.round();
        if (pos - k).abs() > 1e-9 * k.abs().max(1.0) {
            return None;
        }
        if k < 0.0 {
            return Some(DenseMatrix::zeros(self.n, self.n));
        }
        let k = k as usize;
        (k < self.len()).then(|| self.sample(k))
    }

    pub fn end_time(&self) -> f64 {
        self.start + (self.len() - 1) as f64 * self.step
    }
}

/// Kernel quadrature over stored history: `sin_sum = Σ w_i sin(ωθ_i) Φ_i`,
/// `cos_sum` likewise, plus the weight of the current stage value at `θ = 0`.
struct HistorySums {
    sin_sum: Vec<f64>,
    cos_sum: Vec<f64>,
    top_weight: f64,
}

/// Where in the step `[k, k+1]` (index units) a stage is evaluated.
#[derive(Clone, Copy, PartialEq)]
enum Stage {
    Start,
    Mid,
    End,
}

/// RK4 integrator for the fundamental matrix with a grid-aligned delay.
struct DelayIntegrator<'a> {
    spec: &'a SystemSpec,
    n: usize,
    dt: f64,
    per_delay: usize,
    phi: Vec<f64>,
    /// `(sin, cos)` of `ω θ` at `θ = -j dt`, `j = 0..=per_delay`.
    trig_int: Vec<(f64, f64)>,
    /// `(sin, cos)` of `ω θ` at `θ = -(j + 1/2) dt`, `j = 0..per_delay`.
    trig_half: Vec<(f64, f64)>,
}

impl<'a> DelayIntegrator<'a> {
    fn new(spec: &'a SystemSpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Grid(format!("step {dt} must be positive")));
        }
        let per_delay = ratio_as_count(spec.h, dt, "delay vs step")?;
        if per_delay == 0 {
            return Err(Error::Grid("step exceeds the delay".into()));
        }
        let w = spec.omega;
        let trig_int = (0..=per_delay)
            .map(|j| (-w * j as f64 * dt).sin_cos())
            .collect();
        let trig_half = (0..per_delay)
            .map(|j| (-w * (j as f64 + 0.5) * dt).sin_cos())
            .collect();
        Ok(Self {
            spec,
            n: spec.n,
            dt,
            per_delay,
            phi: DenseMatrix::identity(spec.n).as_slice().to_vec(),
            trig_int,
            trig_half,
        })
    }

    fn last_index(&self) -> usize {
        self.phi.len() / (self.n * self.n) - 1
    }

    fn phi_at(&self, k: usize) -> &[f64] {
        let n2 = self.n * self.n;
        &self.phi[k * n2..(k + 1) * n2]
    }

    /// Trapezoid sums of the distributed term over `θ ∈ [-h, 0]` for the
    /// stage at `k + c`, excluding the stage value itself. History before
    /// `t = 0` is zero and `Φ(0) = I` is taken from the right.
    fn history_sums(&self, k: usize, stage: Stage) -> HistorySums {
        let n2 = self.n * self.n;
        let m = self.per_delay;
        let dt = self.dt;
        let mut sums = HistorySums {
            sin_sum: vec![0.0; n2],
            cos_sum: vec![0.0; n2],
            top_weight: 0.0,
        };
        let mut add = |w: f64, (s, c): (f64, f64), phi: &[f64]| {
            for ((ss, cs), p) in sums
                .sin_sum
                .iter_mut()
                .zip(sums.cos_sum.iter_mut())
                .zip(phi)
            {
                *ss += w * s * p;
                *cs += w * c * p;
            }
        };
        match stage {
            Stage::Mid => {
                let q = dt / 4.0;
                let first = if k >= m {
                    add(0.5 * q, self.trig_int[m], self.phi_at(k - m));
                    add(0.5 * q, self.trig_int[m], self.phi_at(k - m + 1));
                    k - m + 1
                } else {
                    0
                };
                for i in first..=k {
                    let left = if i > first {
                        dt / 2.0
                    } else if k >= m {
                        q
                    } else {
                        0.0
                    };
                    let right = if i < k { dt / 2.0 } else { q };
                    add(left + right, self.trig_half[k - i], self.phi_at(i));
                }
                sums.top_weight = q;
            }
            Stage::Start | Stage::End => {
                let top = if stage == Stage::End { k + 1 } else { k };
                let lo = top.saturating_sub(m);
                for i in lo..top {
                    let w = if i > lo { dt } else { dt / 2.0 };
                    add(w, self.trig_int[top - i], self.phi_at(i));
                }
                sums.top_weight = if top > lo { dt / 2.0 } else { 0.0 };
            }
        }
        sums
    }

    /// Right-hand side at stage `stage` of step `k` with stage value `y`.
    fn rhs(&self, k: usize, stage: Stage, hist: &HistorySums, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = self.per_delay;
        out.fill(0.0);
        gemm_acc(out, 1.0, self.spec.a0.as_slice(), y, n);

        // delayed argument lies in [k-m, k-m+1]; zero history before it
        if k >= m {
            let a1 = self.spec.a1.as_slice();
            match stage {
                Stage::Start => gemm_acc(out, 1.0, a1, self.phi_at(k - m), n),
                Stage::Mid => {
                    gemm_acc(out, 0.5, a1, self.phi_at(k - m), n);
                    gemm_acc(out, 0.5, a1, self.phi_at(k - m + 1), n);
                }
                Stage::End => gemm_acc(out, 1.0, a1, self.phi_at(k - m + 1), n),
            }
        }

        // G(0) = B1, so the stage value only enters the cosine part
        let cos_part: Vec<f64> = hist
            .cos_sum
            .iter()
            .zip(y)
            .map(|(c, yi)| c + hist.top_weight * yi)
            .collect();
        gemm_acc(out, 1.0, self.spec.b0.as_slice(), &hist.sin_sum, n);
        gemm_acc(out, 1.0, self.spec.b1.as_slice(), &cos_part, n);
    }

    fn step(&mut self) -> Result<()> {
        let k = self.last_index();
        let dt = self.dt;
        let n2 = self.n * self.n;
        let cur = self.phi_at(k).to_vec();
        let start = self.history_sums(k, Stage::Start);
        let mid = self.history_sums(k, Stage::Mid);
        let end = self.history_sums(k, Stage::End);

        let mut slopes = [vec![0.0; n2], vec![0.0; n2], vec![0.0; n2], vec![0.0; n2]];
        let mut y = cur.clone();
        let stages = [
            (Stage::Start, &start, 0.5),
            (Stage::Mid, &mid, 0.5),
            (Stage::Mid, &mid, 1.0),
        ];
        for (s, (stage, hist, next_frac)) in stages.into_iter().enumerate() {
            self.rhs(k, stage, hist, &y, &mut slopes[s]);
            for ((yi, c), d) in y.iter_mut().zip(&cur).zip(&slopes[s]) {
                *yi = c + next_frac * dt * d;
            }
        }
        let [k1, k2, k3, k4] = &mut slopes;
        self.rhs(k, Stage::End, &end, &y, k4);

        let next: Vec<f64> = (0..n2)
            .map(|i| cur[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm < OVERFLOW_GUARD) {
            return Err(Error::Instability(format!(
                "fundamental matrix diverged at t = {}",
                (k + 1) as f64 * dt
            )));
        }
        self.phi.extend_from_slice(&next);
        Ok(())
    }

    fn advance_to(&mut self, index: usize) -> Result<()> {
        while self.last_index() < index {
            self.step()?;
        }
        Ok(())
    }

    fn norm_at(&self, k: usize) -> f64 {
        self.phi_at(k).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Advances delay by delay until `||Φ||_F < threshold` at a multiple of
    /// `h`; returns that multiple.
    fn advance_until_decayed(&mut self, threshold: f64, horizon_cap: f64) -> Result<usize> {
        let max_delays = (horizon_cap / self.spec.h + 1e-9).floor() as usize;
        let unstable = |msg: String| {
            Error::Instability(format!(
                "{msg}; the Lyapunov integral is undefined for an unstable system"
            ))
        };
        for d in 1..=max_delays {
            let idx = d * self.per_delay;
            self.advance_to(idx).map_err(|e| match e {
                Error::Instability(msg) => unstable(msg),
                other => other,
            })?;
            if self.norm_at(idx) < threshold {
                return Ok(d);
            }
        }
        Err(unstable(format!(
            "||Phi(t)|| did not fall below {threshold} by t = {horizon_cap}"
        )))
    }

    fn into_trajectory(self) -> SampledTrajectory {
        SampledTrajectory {
            step: self.dt,
            start: 0.0,
            n: self.n,
            data: self.phi,
        }
    }
}

/// Fundamental matrix on `[0, t_max]` with step `dt`.
pub fn fundamental_matrix(spec: &SystemSpec, t_max: f64, dt: f64) -> Result<SampledTrajectory> {
    let mut integ = DelayIntegrator::new(spec, dt)?;
    let delays = ratio_as_count(t_max, spec.h, "horizon vs delay")?;
    integ.advance_to(delays * integ.per_delay)?;
    Ok(integ.into_trajectory())
}

/// Smallest multiple of `h` at which `||Φ(t)||_F < threshold`, searching up
/// to `horizon_cap`.
pub fn decay_time(spec: &SystemSpec, threshold: f64, dt: f64, horizon_cap: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::Config(format!(
            "decay threshold {threshold} must lie in (0, 1)"
        )));
    }
    let mut integ = DelayIntegrator::new(spec, dt)?;
    Ok(integ.advance_until_decayed(threshold, horizon_cap)? as f64 * spec.h)
}

/// `U(τ)` on the symmetric grid `τ_j = j·tau_step`, `j = -J..=J`,
/// `J·tau_step = h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSamples {
    pub tau_step: f64,
    pub taus: Vec<f64>,
    pub values: Vec<DenseMatrix>,
}

impl LyapunovSamples {
    pub fn new(tau_step: f64, values: Vec<DenseMatrix>) -> Result<Self> {
        if !(tau_step > 0.0) {
            return Err(Error::Grid("tau step must be positive".into()));
        }
        if values.len().is_multiple_of(2) {
            return Err(Error::Grid(
                "a symmetric grid containing 0 has an odd number of points".into(),
            ));
        }
        let half = (values.len() / 2) as isize;
        let taus = (-half..=half).map(|j| j as f64 * tau_step).collect();
        Ok(Self {
            tau_step,
            taus,
            values,
        })
    }

    /// Number of grid steps on each side of zero.
    pub fn half_len(&self) -> usize {
        self.values.len() / 2
    }

    /// `U(j·tau_step)`.
    pub fn at(&self, j: isize) -> &DenseMatrix {
        &self.values[(j + self.half_len() as isize) as usize]
    }

    fn steps_per_delay(&self, spec: &SystemSpec) -> Result<usize> {
        let j = ratio_as_count(spec.h, self.tau_step, "delay vs tau step")?;
        if j != self.half_len() {
            return Err(Error::Grid(format!(
                "grid covers ±{}, need ±{}",
                self.half_len() as f64 * self.tau_step,
                spec.h
            )));
        }
        Ok(j)
    }
}

/// `U(τ) = ∫_0^{t_max} Φ(t)^T W Φ(t+τ) dt` on a grid over `[-h, h]`.
/// Negative `τ` are integrated directly, not mirrored.
pub fn lyapunov_by_definition(
    spec: &SystemSpec,
    tau_step: f64,
    t_max: f64,
    dt: f64,
) -> Result<LyapunovSamples> {
    let stride = ratio_as_count(tau_step, dt, "tau step vs integration step")?;
    let half = ratio_as_count(spec.h, tau_step, "delay vs tau step")?;
    if stride == 0 || half == 0 {
        return Err(Error::Grid(
            "tau step must be a positive multiple of dt".into(),
        ));
    }
    let horizon = ratio_as_count(t_max, dt, "horizon vs integration step")?;
    if horizon < half * stride {
        return Err(Error::Grid("horizon must be at least one delay".into()));
    }

    let mut integ = DelayIntegrator::new(spec, dt)?;
    integrate_lyapunov(&mut integ, stride, half, horizon)
}

/// Extends the integration to `horizon + h` and evaluates the defining
/// integral for every `τ` of the grid.
fn integrate_lyapunov(
    integ: &mut DelayIntegrator<'_>,
    stride: usize,
    half: usize,
    horizon: usize,
) -> Result<LyapunovSamples> {
    let spec = integ.spec;
    let dt = integ.dt;
    integ.advance_to(horizon + half * stride)?;
    let phi0 = integ.norm_at(0);
    if !(integ.norm_at(horizon) <= TRUNCATION_DECAY_GUARD * phi0) {
        return Err(Error::Instability(format!(
            "||Phi({})|| = {:.3e} has not decayed; the Lyapunov integral is \
             undefined or badly truncated",
            horizon as f64 * dt,
            integ.norm_at(horizon)
        )));
    }

    let n = spec.n;
    let n2 = n * n;
    let wt = spec.w.as_slice();
    // Φ_i^T W, one block per grid point up to the horizon
    let lhs: Vec<f64> = (0..=horizon)
        .flat_map(|i| {
            let p = integ.phi_at(i);
            let mut q = vec![0.0; n2];
            for r in 0..n {
                for c in 0..n {
                    q[r * n + c] = (0..n).map(|k| p[k * n + r] * wt[k * n + c]).sum();
                }
            }
            q
        })
        .collect();

    let values = (-(half as isize)..=half as isize)
        .into_par_iter()
        .map(|j| {
            let shift = j * stride as isize;
            let first = if shift < 0 { (-shift) as usize } else { 0 };
            let mut acc = vec![0.0; n2];
            for i in first..=horizon {
                let w = if i == first || i == horizon {
                    dt / 2.0
                } else {
                    dt
                };
                let right = integ.phi_at((i as isize + shift) as usize);
                gemm_acc(&mut acc, w, &lhs[i * n2..(i + 1) * n2], right, n);
            }
            DenseMatrix::new(n, n, acc)
        })
        .collect::<Result<Vec<_>>>()?;

    LyapunovSamples::new(stride as f64 * dt, values)
}

/// Trapezoid weight of node `l` out of `0..=count` with spacing `step`.
fn trap(l: usize, count: usize, step: f64) -> f64 {
    if l == 0 || l == count {
        step / 2.0
    } else {
        step
    }
}

/// Max over interior `τ ∈ (0, h)` of the mismatch between a central
/// difference of `U` and `U(τ)A0 + U(τ-h)A1 + ∫ U(τ+θ)G(θ)dθ`.
pub fn dynamic_residual(u: &LyapunovSamples, spec: &SystemSpec) -> Result<f64> {
    let half = u.steps_per_delay(spec)?;
    if half < 2 {
        return Err(Error::Grid(
            "need at least two tau steps per delay for central differences".into(),
        ));
    }
    let d = u.tau_step;
    let kernels: Vec<DenseMatrix> = (0..=half).map(|l| spec.kernel(-(l as f64) * d)).collect();
    let mut worst: f64 = 0.0;
    for j in 1..half as isize {
        let deriv = (u.at(j + 1) - u.at(j - 1)).scale(1.0 / (2.0 * d));
        let mut rhs = &(u.at(j) * &spec.a0) + &(u.at(j - half as isize) * &spec.a1);
        for (l, g) in kernels.iter().enumerate() {
            rhs = &rhs + &(u.at(j - l as isize) * g).scale(trap(l, half, d));
        }
        worst = worst.max((&deriv - &rhs).frobenius_norm());
    }
    Ok(worst)
}

/// Max over the grid of `||U(-τ) - U(τ)^T||_F`.
pub fn symmetry_residual(u: &LyapunovSamples) -> f64 {
    let half = u.half_len() as isize;
    (0..=half)
        .map(|j| (u.at(-j) - &u.at(j).transpose()).frobenius_norm())
        .fold(0.0, f64::max)
}

/// `||W + U(0)A0 + U(-h)A1 + ∫U(θ)G(θ)dθ + A0^T U(0) + A1^T U(h)
///   + ∫G(θ)^T U(-θ)dθ||_F` with trapezoid quadrature over `[-h, 0]`.
pub fn algebraic_residual(u: &LyapunovSamples, spec: &SystemSpec) -> Result<f64> {
    let half = u.steps_per_delay(spec)?;
    let h = half as isize;
    let d = u.tau_step;
    let mut acc = &(&spec.w + &(u.at(0) * &spec.a0)) + &(u.at(-h) * &spec.a1);
    acc = &(&acc + &(&spec.a0.transpose() * u.at(0))) + &(&spec.a1.transpose() * u.at(h));
    for l in 0..=half {
        let g = spec.kernel(-(l as f64) * d);
        let w = trap(l, half, d);
        let li = l as isize;
        acc = &acc + &(&(u.at(-li) * &g) + &(&g.transpose() * u.at(li))).scale(w);
    }
    Ok(acc.frobenius_norm())
}

/// Lifted state `(vec U(0), vec U(-h), vec ∫sin(ωθ)U(θ)dθ, vec ∫cos(ωθ)U(θ)dθ)`,
/// the candidate initial value that turns the algebraic property into the
/// algebraic boundary row of the lifted problem.
pub fn lifted_initial_state(u: &LyapunovSamples, spec: &SystemSpec) -> Result<DenseMatrix> {
    let half = u.steps_per_delay(spec)?;
    let d = u.tau_step;
    let n = spec.n;
    let mut x0 = DenseMatrix::zeros(n, n);
    let mut x1 = DenseMatrix::zeros(n, n);
    for l in 0..=half {
        let theta = -(l as f64) * d;
        let (s, c) = (spec.omega * theta).sin_cos();
        let w = trap(l, half, d);
        let ul = u.at(-(l as isize));
        x0 = &x0 + &ul.scale(w * s);
        x1 = &x1 + &ul.scale(w * c);
    }
    let parts = [
        crate::kron::vec(u.at(0)),
        crate::kron::vec(u.at(-(half as isize))),
        crate::kron::vec(&x0),
        crate::kron::vec(&x1),
    ];
    let top = DenseMatrix::vstack(&parts[0], &parts[1])?;
    let bottom = DenseMatrix::vstack(&parts[2], &parts[3])?;
    DenseMatrix::vstack(&top, &bottom)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleNumerics {
    pub dt: f64,
    pub tau_step: f64,
    pub decay_threshold: f64,
    /// Longest horizon searched for decay, in units of the delay.
    pub horizon_cap: f64,
}

impl Default for OracleNumerics {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            tau_step: 1e-2,
            decay_threshold: 1e-8,
            horizon_cap: 200.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub dynamic: f64,
    pub symmetric: f64,
    pub algebraic: f64,
}

#[derive(Debug, Clone)]
pub struct OracleRun {
    pub t_max: f64,
    pub numerics: OracleNumerics,
    pub samples: LyapunovSamples,
    pub residuals: Residuals,
}

/// Decay horizon, `U(τ)` samples and the three property residuals.
pub fn run_oracle(spec: &SystemSpec, numerics: OracleNumerics) -> Result<OracleRun> {
    let OracleNumerics {
        dt,
        tau_step,
        decay_threshold,
        horizon_cap,
    } = numerics;
    if !(decay_threshold > 0.0 && decay_threshold < 1.0) {
        return Err(Error::Config(format!(
            "decay threshold {decay_threshold} must lie in (0, 1)"
        )));
    }
    let stride = ratio_as_count(tau_step, dt, "tau step vs integration step")?;
    let half = ratio_as_count(spec.h, tau_step, "delay vs tau step")?;
    if stride == 0 || half == 0 {
        return Err(Error::Grid(
            "tau step must be a positive multiple of dt".into(),
        ));
    }
    let mut integ = DelayIntegrator::new(spec, dt)?;
    let delays = integ.advance_until_decayed(decay_threshold, horizon_cap * spec.h)?;
    let t_max = delays as f64 * spec.h;
    let horizon = delays * integ.per_delay;
    let samples = integrate_lyapunov(&mut integ, stride, half, horizon)?;
    let residuals = Residuals {
        dynamic: dynamic_residual(&samples, spec)?,
        symmetric: symmetry_residual(&samples),
        algebraic: algebraic_residual(&samples, spec)?,
    };
    Ok(OracleRun {
        t_max,
        numerics,
        samples,
        residuals,
    })
}
