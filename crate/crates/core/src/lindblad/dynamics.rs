use std::io::Write;

use crate::error::{Error, Result};
use crate::matrix::{axpy, c, check_dim, hermitian_part, is_psd_within, max_abs, CMatrix};

use super::model::LindbladModel;
use super::state::{DensityMatrix, StateTolerances};

/// Integration settings for the fixed-step RK4 propagator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub max_time: f64,
    /// `steady_state` stops once `max |generator(ρ)|` drops below this.
    pub stationarity_tol: f64,
    /// Emit every k-th state in `evolve` (the final state is always emitted).
    pub record_every: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            max_time: 10.0,
            stationarity_tol: 1e-10,
            record_every: 1,
        }
    }
}

impl EvolutionConfig {
    pub fn new(dt: f64, max_time: f64) -> Self {
        Self {
            dt,
            max_time,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.max_time >= 0.0 && self.max_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "max_time must be finite and non-negative, got {}",
                self.max_time
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps covering `max_time`.
    pub fn steps(&self) -> usize {
        (self.max_time / self.dt).round() as usize
    }
}

/// Heuristic largest stable step, `0.1 / max(γ ‖L‖²)`.
///
/// `‖L‖²` is bounded by the product of the largest absolute column and row sums,
/// which is exact for the collective jump operators used here.
pub fn stability_bound(model: &LindbladModel) -> f64 {
    let mut worst = 0.0_f64;
    for bath in model.baths() {
        for ch in bath.channels() {
            let op = ch.op();
            let d = op.nrows();
            let col = (0..d)
                .map(|j| op.column(j).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max);
            let row = (0..d)
                .map(|i| op.row(i).iter().map(|z| z.norm()).sum::<f64>())
                .fold(0.0, f64::max);
            worst = worst.max(ch.rate().abs() * col * row);
        }
    }
    if worst == 0.0 {
        f64::INFINITY
    } else {
        0.1 / worst
    }
}

/// Warns through `log` when `dt` exceeds the stability heuristic. Returns whether it did.
pub(crate) fn warn_if_unstable(model: &LindbladModel, dt: f64) -> bool {
    let bound = stability_bound(model);
    if dt >= bound {
        log::warn!("dt = {dt} exceeds the stability heuristic {bound:e}");
        true
    } else {
        false
    }
}

/// Fixed-step RK4 for `dρ/dt = generator(ρ)`.
#[derive(Debug)]
pub struct Propagator<'a> {
    model: &'a LindbladModel,
    dt: f64,
    last_k1: Option<CMatrix>,
}

impl<'a> Propagator<'a> {
    pub fn new(model: &'a LindbladModel, dt: f64) -> Self {
        Self {
            model,
            dt,
            last_k1: None,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &LindbladModel {
        self.model
    }

    /// `max |generator(ρ)|` at the start of the most recent step.
    pub fn last_residual(&self) -> f64 {
        self.last_k1.as_ref().map_or(f64::NAN, max_abs)
    }

    /// One RK4 step. The result is re-Hermitized.
    pub fn step(&mut self, rho: &CMatrix) -> CMatrix {
        self.step_with(rho, self.dt)
    }

    /// One RK4 step of length `h`.
    pub fn step_with(&mut self, rho: &CMatrix, h: f64) -> CMatrix {
        let g = |m: &CMatrix| self.model.generator_unchecked(m);
        let k1 = g(rho);
        let mut next = rho.clone();
        axpy(&mut next, c(h / 6.0), &k1);
        let mut tmp = rho.clone();
        axpy(&mut tmp, c(0.5 * h), &k1);
        let k2 = g(&tmp);
        axpy(&mut next, c(h / 3.0), &k2);
        tmp.copy_from(rho);
        axpy(&mut tmp, c(0.5 * h), &k2);
        let k3 = g(&tmp);
        axpy(&mut next, c(h / 3.0), &k3);
        tmp.copy_from(rho);
        axpy(&mut tmp, c(h), &k3);
        let k4 = g(&tmp);
        axpy(&mut next, c(h / 6.0), &k4);
        hermitize_in_place(&mut next);
        self.last_k1 = Some(k1);
        next
    }
}

fn hermitize_in_place(m: &mut CMatrix) {
    const TILE: usize = 32;
    let n = m.nrows();
    for jb in (0..n).step_by(TILE) {
        for ib in (0..=jb).step_by(TILE) {
            for j in jb..(jb + TILE).min(n) {
                for i in ib..(ib + TILE).min(j + 1) {
                    if i == j {
                        m[(j, j)].im = 0.0;
                    } else {
                        let avg = 0.5 * (m[(i, j)] + m[(j, i)].conj());
                        m[(i, j)] = avg;
                        m[(j, i)] = avg.conj();
                    }
                }
            }
        }
    }
}

/// Recorded states of an `evolve` run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Largest |Tr ρ(t) - Tr ρ(0)| seen over every step.
    pub max_trace_drift: f64,
    /// Whether `dt` exceeded the stability heuristic.
    pub stability_warning: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// CSV with column `t` followed by every entry of ρ in row-major order, real and imaginary parts interleaved.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.states.first().map_or(0, DensityMatrix::dim);
        let mut header = String::from("t");
        for i in 0..d {
            for j in 0..d {
                header.push_str(&format!(",re_{i}_{j},im_{i}_{j}"));
            }
        }
        writeln!(out, "{header}")?;
        for (t, state) in self.times.iter().zip(&self.states) {
            let m = state.matrix();
            let mut line = format!("{t}");
            for i in 0..d {
                for j in 0..d {
                    let z = m[(i, j)];
                    line.push_str(&format!(",{},{}", z.re, z.im));
                }
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Checks an integrator state against trace drift and positivity slack.
pub(crate) fn check_trajectory_state(m: &CMatrix, trace0: f64, time: f64, full: bool) -> Result<f64> {
    let drift = (m.trace().re - trace0).abs();
    if !drift.is_finite() || drift > StateTolerances::TRAJECTORY.trace {
        return Err(Error::Stability {
            time,
            detail: format!("trace drift {drift:e}"),
        });
    }
    if full && !is_psd_within(m, StateTolerances::TRAJECTORY.positivity) {
        return Err(Error::Stability {
            time,
            detail: format!("eigenvalue below -{:e}", StateTolerances::TRAJECTORY.positivity),
        });
    }
    Ok(drift)
}

/// Integrates from `rho0` for `config.max_time`, re-validating every emitted state.
pub fn evolve(model: &LindbladModel, rho0: &DensityMatrix, config: &EvolutionConfig) -> Result<Trajectory> {
    config.check()?;
    check_dim(rho0.matrix(), model.dim())?;
    let stability_warning = warn_if_unstable(model, config.dt);
    let n = config.steps();
    let trace0 = rho0.matrix().trace().re;
    let mut prop = Propagator::new(model, config.dt);
    let mut rho = rho0.matrix().clone();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    let mut max_drift = 0.0_f64;
    for k in 1..=n {
        rho = prop.step(&rho);
        let t = k as f64 * config.dt;
        let emit = k % config.record_every == 0 || k == n;
        max_drift = max_drift.max(check_trajectory_state(&rho, trace0, t, emit)?);
        if emit {
            times.push(t);
            states.push(DensityMatrix::from_trusted(rho.clone()));
        }
    }
    Ok(Trajectory {
        times,
        states,
        max_trace_drift: max_drift,
        stability_warning,
    })
}

/// Result of a steady-state search.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: DensityMatrix,
    pub elapsed: f64,
    /// `max |generator(state)|`.
    pub residual: f64,
}

/// Evolves until `max |generator(ρ)| < config.stationarity_tol`.
pub fn steady_state(model: &LindbladModel, rho0: &DensityMatrix, config: &EvolutionConfig) -> Result<SteadyState> {
    config.check()?;
    check_dim(rho0.matrix(), model.dim())?;
    warn_if_unstable(model, config.dt);
    let n = config.steps();
    let trace0 = rho0.matrix().trace().re;
    let mut prop = Propagator::new(model, config.dt);
    let mut rho = rho0.matrix().clone();
    for k in 0..=n {
        let residual = max_abs(&model.generator_unchecked(&rho));
        let t = k as f64 * config.dt;
        if residual < config.stationarity_tol {
            check_trajectory_state(&rho, trace0, t, true)?;
            return Ok(SteadyState {
                state: DensityMatrix::from_trusted(hermitian_part(&rho)),
                elapsed: t,
                residual,
            });
        }
        if k == n {
            return Err(Error::NotConverged {
                max_time: config.max_time,
                residual,
            });
        }
        rho = prop.step(&rho);
        check_trajectory_state(&rho, trace0, t + config.dt, false)?;
    }
    unreachable!("loop returns on its final iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{Bath, JumpChannel};
    use crate::matrix::ONE;

    fn qubit(gamma: f64, beta: f64) -> LindbladModel {
        let mut h = CMatrix::zeros(2, 2);
        h[(1, 1)] = ONE;
        let mut down = CMatrix::zeros(2, 2);
        down[(0, 1)] = ONE;
        let up = down.adjoint();
        let bath = Bath::new(
            "B",
            beta,
            0.0,
            vec![
                JumpChannel::new(1.0, gamma, down).unwrap(),
                JumpChannel::new(-1.0, gamma * (-beta).exp(), up).unwrap(),
            ],
        )
        .unwrap();
        LindbladModel::new(h, vec![bath]).unwrap()
    }

    #[test]
    fn excited_population_decays_exponentially() {
        // zero temperature limit: p_e(t) = exp(-γ t)
        let model = qubit(0.8, 60.0);
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 1)] = ONE;
        let rho0 = DensityMatrix::new(m).unwrap();
        let traj = evolve(&model, &rho0, &EvolutionConfig::new(1e-3, 2.0)).unwrap();
        let pe = traj.last().unwrap().matrix()[(1, 1)].re;
        assert!((pe - (-1.6_f64).exp()).abs() < 1e-12);
        assert_eq!(traj.len(), 2001);
    }

    #[test]
    fn steady_state_is_gibbs() {
        let model = qubit(1.0, 0.7);
        let rho0 = DensityMatrix::maximally_mixed(2);
        let cfg = EvolutionConfig {
            dt: 0.01,
            max_time: 100.0,
            stationarity_tol: 1e-12,
            record_every: 1,
        };
        let ss = steady_state(&model, &rho0, &cfg).unwrap();
        let pe = 1.0 / (1.0 + 0.7_f64.exp());
        assert!((ss.state.matrix()[(1, 1)].re - pe).abs() < 1e-11);
        assert!(ss.elapsed > 0.0);
    }

    #[test]
    fn not_converged_is_reported() {
        let model = qubit(1.0, 0.7);
        let mut m = CMatrix::zeros(2, 2);
        m[(1, 1)] = ONE;
        let rho0 = DensityMatrix::new(m).unwrap();
        let err = steady_state(&model, &rho0, &EvolutionConfig::new(0.01, 0.1)).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
    }

    #[test]
    fn record_every_thins_output() {
        let model = qubit(1.0, 1.0);
        let rho0 = DensityMatrix::maximally_mixed(2);
        let cfg = EvolutionConfig {
            record_every: 10,
            ..EvolutionConfig::new(0.01, 1.0)
        };
        let traj = evolve(&model, &rho0, &cfg).unwrap();
        assert_eq!(traj.len(), 11);
    }

    #[test]
    fn stability_bound_flags_large_steps() {
        let model = qubit(10.0, 1.0);
        assert!((stability_bound(&model) - 0.01).abs() < 1e-15);
        let traj = evolve(
            &model,
            &DensityMatrix::maximally_mixed(2),
            &EvolutionConfig::new(0.02, 0.02),
        )
        .unwrap();
        assert!(traj.stability_warning);
    }

    #[test]
    fn csv_layout() {
        let model = qubit(1.0, 1.0);
        let traj = evolve(
            &model,
            &DensityMatrix::maximally_mixed(2),
            &EvolutionConfig::new(0.5, 0.5),
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,re_0_0,im_0_0,re_0_1,im_0_1,re_1_0,im_1_0,re_1_1,im_1_1"
        );
        assert!(lines.next().unwrap().starts_with("0,0.5,0,0,0,0,0,0.5,0"));
        assert_eq!(lines.count(), 1);
    }
}
