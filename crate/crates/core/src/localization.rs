//! Conditioned-state dynamics of a 1D particle monitored by its environment:
//! non-Hermitian effective evolution, stochastic jumps into the orthogonal
//! state, pointer-state attractor, and trajectory records.

use crate::numerics::{self, fft, rng::StreamId, Grid1D, RngStream, C64};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Potential landscape for the particle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    Free,
    /// V(x) = 1/2 M omega^2 x^2
    Harmonic {
        omega: f64,
    },
    /// V(x) = -1/2 M lyapunov^2 x^2, a local model of a chaotic instability
    Inverted {
        lyapunov: f64,
    },
    /// Arbitrary real values sampled on the grid (recentering is disabled
    /// for sampled potentials since the values are cell-indexed).
    Sampled {
        values: Vec<f64>,
    },
}

impl PotentialSpec {
    pub(crate) fn validate(&self, n_points: usize) -> Result<()> {
        if let PotentialSpec::Sampled { values } = self {
            if values.len() != n_points {
                return Err(Error::ShapeMismatch(format!(
                    "sampled potential has {} values for a {}-point grid",
                    values.len(),
                    n_points
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("sampled potential".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn value(&self, mass: f64, x: f64, cell: usize) -> f64 {
        match self {
            PotentialSpec::Free => 0.0,
            PotentialSpec::Harmonic { omega } => 0.5 * mass * omega * omega * x * x,
            PotentialSpec::Inverted { lyapunov } => -0.5 * mass * lyapunov * lyapunov * x * x,
            PotentialSpec::Sampled { values } => values[cell],
        }
    }
}

/// Parameters of the monitored-particle model. Dimensionless units, hbar = 1.
///
/// `lambda` is the localization coupling (inverse length^2 x time); it is an
/// input here, not derived from any scattering model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalizationParams {
    pub mass: f64,
    pub lambda: f64,
    pub dt: f64,
    pub potential: PotentialSpec,
}

/// Cap on the per-step jump probability r*dt.
pub const JUMP_PROBABILITY_CAP: f64 = 0.1;

impl LocalizationParams {
    pub fn new(mass: f64, lambda: f64, dt: f64, potential: PotentialSpec) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass = {mass}")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda = {lambda}")));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt}")));
        }
        Ok(Self {
            mass,
            lambda,
            dt,
            potential,
        })
    }

    /// Convenience constructor with the default timestep `t_loc() / 200`,
    /// which resolves the localization transient.
    pub fn with_default_dt(mass: f64, lambda: f64, potential: PotentialSpec) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(
                "default dt needs lambda > 0".into(),
            ));
        }
        let t_loc = (mass / lambda).sqrt();
        Self::new(mass, lambda, t_loc / 200.0, potential)
    }

    /// Localization time sqrt(M / lambda) (hbar = 1).
    pub fn t_loc(&self) -> f64 {
        (self.mass / self.lambda).sqrt()
    }

    /// Complex attractor frequency sqrt(2 lambda / (i M)), taking the root
    /// with Re > 0, Im < 0. With an inverted potential the frequency is
    /// sqrt(-lyapunov^2 + 2 lambda / (i M)), same branch.
    pub fn attractor_frequency(&self) -> C64 {
        let lyap2 = match self.potential {
            PotentialSpec::Inverted { lyapunov } => lyapunov * lyapunov,
            _ => 0.0,
        };
        let omega2 = C64::new(-lyap2, -2.0 * self.lambda / self.mass);
        let omega = omega2.sqrt();
        if omega.re >= 0.0 {
            omega
        } else {
            -omega
        }
    }

    /// Closed-form position variance of the pointer state (free case).
    pub fn pointer_var_x(&self) -> f64 {
        0.5 / (self.mass * self.lambda).sqrt()
    }

    /// Closed-form momentum variance of the pointer state (free case).
    pub fn pointer_var_p(&self) -> f64 {
        (self.mass * self.lambda).sqrt()
    }
}

/// Position/momentum moments of a wave function.
#[derive(Clone, Copy, Debug)]
pub struct Moments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

/// Normalized complex amplitudes on a periodic grid.
#[derive(Clone, Debug)]
pub struct WaveFunction {
    grid: Grid1D,
    amp: Vec<C64>,
}

impl WaveFunction {
    /// Build from raw amplitudes; normalizes, errors on zero/non-finite input.
    pub fn new(grid: Grid1D, mut amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes on a {}-point grid",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if !numerics::all_finite(&amplitudes) {
            return Err(Error::NonFinite("wave function amplitudes".into()));
        }
        numerics::normalize(&mut amplitudes)?;
        Ok(Self {
            grid,
            amp: amplitudes,
        })
    }

    /// Gaussian packet with position spread `sigma` (so var_x = sigma^2) and
    /// mean momentum `momentum`.
    pub fn gaussian(grid: Grid1D, center: f64, sigma: f64, momentum: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
        }
        let amp = (0..grid.n_points())
            .map(|i| {
                let x = grid.x(i);
                let envelope = (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp();
                C64::new(0.0, momentum * x).exp() * envelope
            })
            .collect();
        Self::new(grid, amp)
    }

    /// Pointer-state attractor of the localization dynamics: the Gaussian
    /// exp(-M omega x^2 / 2) with complex frequency omega = sqrt(2 lambda/iM),
    /// centered at `center`.
    pub fn pointer_state(grid: Grid1D, params: &LocalizationParams, center: f64) -> Result<Self> {
        if !(params.lambda > 0.0) {
            return Err(Error::InvalidParameter(
                "pointer state undefined for lambda = 0 (no attractor)".into(),
            ));
        }
        // The pointer state is set by the monitoring term alone.
        let free = LocalizationParams {
            potential: PotentialSpec::Free,
            ..params.clone()
        };
        let omega = free.attractor_frequency();
        let alpha = 0.5 * params.mass * omega;
        let amp = (0..grid.n_points())
            .map(|i| {
                let d = grid.x(i) - center;
                (-alpha * d * d).exp()
            })
            .collect();
        Self::new(grid, amp)
    }

    /// Superposition of two packets of width `sigma` at `centers`, with
    /// amplitude weights `weights` (not necessarily normalized).
    pub fn two_packets(
        grid: Grid1D,
        centers: (f64, f64),
        sigma: f64,
        weights: (f64, f64),
    ) -> Result<Self> {
        let amp = (0..grid.n_points())
            .map(|i| {
                let x = grid.x(i);
                let a = weights.0 * (-(x - centers.0).powi(2) / (4.0 * sigma * sigma)).exp();
                let b = weights.1 * (-(x - centers.1).powi(2) / (4.0 * sigma * sigma)).exp();
                C64::new(a + b, 0.0)
            })
            .collect();
        Self::new(grid, amp)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        numerics::vec_norm(&self.amp)
    }

    pub fn overlap(&self, other: &WaveFunction) -> C64 {
        numerics::vec_dot(&self.amp, &other.amp)
    }

    pub fn mean_x(&self) -> f64 {
        self.amp
            .iter()
            .enumerate()
            .map(|(i, z)| self.grid.x(i) * z.norm_sqr())
            .sum()
    }

    pub fn var_x(&self) -> f64 {
        let mx = self.mean_x();
        self.amp
            .iter()
            .enumerate()
            .map(|(i, z)| (self.grid.x(i) - mx).powi(2) * z.norm_sqr())
            .sum()
    }

    /// All four phase-space moments with a single transform.
    pub fn moments(&self) -> Moments {
        let mut mean_x = 0.0;
        let mut mean_x2 = 0.0;
        for (i, z) in self.amp.iter().enumerate() {
            let w = z.norm_sqr();
            let x = self.grid.x(i);
            mean_x += x * w;
            mean_x2 += x * x * w;
        }
        let hat = fft(&self.amp);
        let total: f64 = hat.iter().map(|z| z.norm_sqr()).sum();
        let mut mean_p = 0.0;
        let mut mean_p2 = 0.0;
        for (j, z) in hat.iter().enumerate() {
            let w = z.norm_sqr() / total;
            let k = self.grid.wavenumber(j);
            mean_p += k * w;
            mean_p2 += k * k * w;
        }
        Moments {
            mean_x,
            var_x: (mean_x2 - mean_x * mean_x).max(0.0),
            mean_p,
            var_p: (mean_p2 - mean_p * mean_p).max(0.0),
        }
    }

    /// Density matrix of the pure state (outer product of amplitudes).
    pub fn density(&self) -> crate::numerics::CMatrix {
        crate::numerics::CMatrix::outer(&self.amp, &self.amp)
    }

    /// Probability mass in the outer `fraction` of cells on each side.
    pub fn edge_mass(&self, fraction: f64) -> f64 {
        let n = self.grid.n_points();
        let band = ((n as f64 * fraction) as usize).max(1);
        let mut mass = 0.0;
        for i in 0..band {
            mass += self.amp[i].norm_sqr();
            mass += self.amp[n - 1 - i].norm_sqr();
        }
        mass
    }

    /// Circularly shift amplitudes by `cells` and move the grid origin with
    /// them, keeping physical coordinates intact.
    fn recentered(&self, cells: i64) -> WaveFunction {
        let n = self.grid.n_points() as i64;
        let amp = (0..n)
            .map(|i| self.amp[((i + cells).rem_euclid(n)) as usize])
            .collect();
        WaveFunction {
            grid: self.grid.shifted(cells),
            amp,
        }
    }

    /// Shift the momentum content by `cells` spectral bins (an exact
    /// circular shift of the spectrum): psi -> exp(-i dk cells x) psi.
    fn boosted(&self, cells: i64) -> WaveFunction {
        let dk = 2.0 * std::f64::consts::PI / (self.grid.n_points() as f64 * self.grid.dx());
        let shift = cells as f64 * dk;
        let amp = self
            .amp
            .iter()
            .enumerate()
            .map(|(i, z)| z * C64::new(0.0, -shift * self.grid.x(i)).exp())
            .collect();
        WaveFunction {
            grid: self.grid,
            amp,
        }
    }

    /// Physically translate the packet by `cells` grid cells (amplitude
    /// roll with the grid origin fixed).
    fn translated(&self, cells: i64) -> WaveFunction {
        let n = self.grid.n_points() as i64;
        let amp = (0..n)
            .map(|i| self.amp[((i - cells).rem_euclid(n)) as usize])
            .collect();
        WaveFunction {
            grid: self.grid,
            amp,
        }
    }
}

/// Transition rate r = 2 lambda var_x for jumps into the orthogonal state.
pub fn jump_rate(psi: &WaveFunction, params: &LocalizationParams) -> f64 {
    2.0 * params.lambda * psi.var_x()
}

/// Jump: psi -> (x - <x>) psi, normalized. The output is orthogonal to the
/// input. Errors when the state is already point-localized.
pub fn apply_jump(psi: &WaveFunction) -> Result<WaveFunction> {
    let mx = psi.mean_x();
    let vx = psi.var_x();
    if vx < 1e-14 {
        return Err(Error::PointLocalized);
    }
    let amp = psi
        .amp
        .iter()
        .enumerate()
        .map(|(i, z)| (psi.grid.x(i) - mx) * z)
        .collect();
    WaveFunction::new(psi.grid, amp)
}

/// One Strang-split step of the non-Hermitian, state-dependent effective
/// evolution: half kinetic, full position-space factor
/// exp(-i dt V) exp(-dt lambda ((x - <x>)^2 - var_x)), half kinetic, then
/// renormalize. `<x>` and `var_x` are frozen at step start.
pub fn heff_step(psi: &WaveFunction, params: &LocalizationParams) -> Result<WaveFunction> {
    let vx = psi.var_x();
    let r = 2.0 * params.lambda * vx;
    if r * params.dt > JUMP_PROBABILITY_CAP {
        return Err(Error::StabilityViolated {
            what: "r * dt",
            value: r * params.dt,
            limit: JUMP_PROBABILITY_CAP,
        });
    }
    heff_step_dt(psi, params, params.dt)
}

/// Same splitting with an explicit timestep (used by the adaptive
/// substepping in `evolve_trajectory`).
fn heff_step_dt(psi: &WaveFunction, params: &LocalizationParams, dt: f64) -> Result<WaveFunction> {
    params.potential.validate(psi.grid.n_points())?;
    let mx = psi.mean_x();
    let vx = psi.var_x();

    let mut hat = fft(&psi.amp);
    for (j, z) in hat.iter_mut().enumerate() {
        let k = psi.grid.wavenumber(j);
        *z *= (-C64::i() * (0.5 * dt * k * k / (2.0 * params.mass))).exp();
    }
    let mut amp = crate::numerics::fft::ifft(&hat);
    for (i, z) in amp.iter_mut().enumerate() {
        let x = psi.grid.x(i);
        let v = params.potential.value(params.mass, x, i);
        let damp = -dt * params.lambda * ((x - mx).powi(2) - vx);
        *z *= (C64::new(damp, -dt * v)).exp();
    }
    let mut hat = fft(&amp);
    for (j, z) in hat.iter_mut().enumerate() {
        let k = psi.grid.wavenumber(j);
        *z *= (-C64::i() * (0.5 * dt * k * k / (2.0 * params.mass))).exp();
    }
    let amp = crate::numerics::fft::ifft(&hat);
    if !numerics::all_finite(&amp) {
        return Err(Error::NonFinite("amplitudes after effective step".into()));
    }
    WaveFunction::new(psi.grid, amp)
}

/// Time series of a single conditioned trajectory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    /// Whether the step ending at this sample was a jump (first entry false).
    pub jumped: Vec<bool>,
    pub jump_times: Vec<f64>,
    pub seed: StreamId,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if [
            self.mean_x.len(),
            self.mean_p.len(),
            self.var_x.len(),
            self.var_p.len(),
            self.jumped.len(),
        ]
        .iter()
        .any(|&l| l != n)
        {
            return Err(Error::ShapeMismatch("trajectory record arrays".into()));
        }
        for jt in &self.jump_times {
            if !self.times.iter().any(|t| (t - jt).abs() < 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "jump time {jt} not on the sample grid"
                )));
            }
        }
        Ok(())
    }

    /// RFC-4180-style CSV with header `t,mean_x,mean_p,var_x,var_p,jumped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mean_x,mean_p,var_x,var_p,jumped\n");
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                self.times[i],
                self.mean_x[i],
                self.mean_p[i],
                self.var_x[i],
                self.var_p[i],
                u8::from(self.jumped[i]),
            ));
        }
        out
    }
}

/// Evolve one stochastic trajectory: per step, jump with probability r*dt,
/// otherwise take an effective-Hamiltonian step.
///
/// The grid co-moves with the packet in both phase-space directions: a
/// circular amplitude shift once `<x>` drifts more than n/4 cells off
/// center, and (free potential only) an exact spectral-bin momentum shift
/// once `<p>` random-walks beyond a quarter of the Nyquist wavenumber —
/// otherwise long runs alias the Brownian momentum drift. Records carry the
/// physical `<x>` and `<p>` with the accumulated gauge offsets restored.
pub fn evolve_trajectory(
    psi0: &WaveFunction,
    params: &LocalizationParams,
    t_final: f64,
    rng: &mut RngStream,
) -> Result<(WaveFunction, TrajectoryRecord)> {
    if !(t_final > 0.0) {
        return Err(Error::InvalidParameter(format!("t_final = {t_final}")));
    }
    let dt = params.dt;
    let n_steps = (t_final / dt).ceil() as usize;
    let allow_recenter = !matches!(params.potential, PotentialSpec::Sampled { .. });
    let allow_boost = matches!(params.potential, PotentialSpec::Free);
    let dk = 2.0 * std::f64::consts::PI / (psi0.grid.n_points() as f64 * psi0.grid.dx());
    let nyquist = std::f64::consts::PI / psi0.grid.dx();
    let mut p_offset = 0.0f64;
    let mut x_drift = 0.0f64;
    let mut boost_cells = 0i64;

    let mut psi = psi0.clone();
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(n_steps + 1),
        mean_x: Vec::with_capacity(n_steps + 1),
        mean_p: Vec::with_capacity(n_steps + 1),
        var_x: Vec::with_capacity(n_steps + 1),
        var_p: Vec::with_capacity(n_steps + 1),
        jumped: Vec::with_capacity(n_steps + 1),
        jump_times: Vec::new(),
        seed: rng.id(),
    };
    let push = |rec: &mut TrajectoryRecord, t: f64, m: &Moments, jumped: bool| {
        rec.times.push(t);
        rec.mean_x.push(m.mean_x);
        rec.mean_p.push(m.mean_p);
        rec.var_x.push(m.var_x);
        rec.var_p.push(m.var_p);
        rec.jumped.push(jumped);
    };

    let mut moments = psi.moments();
    push(&mut rec, 0.0, &moments, false);

    for step in 0..n_steps {
        let t = step as f64 * dt;
        let fail = |e: Error| Error::TrajectoryFailure {
            step,
            time: t,
            source: Box::new(e),
        };

        // Bernoulli trial with p = r*dt per step. When a jump cluster pushes
        // r*dt over the cap, subdivide the step so every trial stays valid.
        let mut jumped = false;
        let mut remaining = dt;
        while remaining > 0.0 {
            let r = 2.0 * params.lambda * psi.var_x();
            let h = if r * remaining > JUMP_PROBABILITY_CAP {
                JUMP_PROBABILITY_CAP / (2.0 * r)
            } else {
                remaining
            };
            let u = rng.uniform();
            if u < r * h {
                psi = apply_jump(&psi).map_err(fail)?;
                jumped = true;
            } else {
                psi = heff_step_dt(&psi, params, h).map_err(fail)?;
            }
            remaining -= h;
        }

        x_drift += p_offset * dt / params.mass;

        if allow_recenter {
            let drift = psi.mean_x() - psi.grid.center();
            let quarter = psi.grid.n_points() as f64 / 4.0 * psi.grid.dx();
            if drift.abs() > quarter {
                let cells = (drift / psi.grid.dx()).round() as i64;
                psi = psi.recentered(cells);
            }
        }

        moments = psi.moments();
        if allow_boost && moments.mean_p.abs() > 0.25 * nyquist {
            let cells = (moments.mean_p / dk).round() as i64;
            psi = psi.boosted(cells);
            p_offset += cells as f64 * dk;
            boost_cells += cells;
            moments = psi.moments();
        }

        let t_next = (step + 1) as f64 * dt;
        let physical = Moments {
            mean_x: moments.mean_x + x_drift,
            mean_p: moments.mean_p + p_offset,
            ..moments
        };
        push(&mut rec, t_next, &physical, jumped);
        if jumped {
            rec.jump_times.push(t_next);
        }
    }

    // express the returned state on the initial grid in the physical gauge
    // (positions are periodic, so very long drifts wrap modulo the span;
    // the record always carries unwrapped coordinates)
    if boost_cells != 0 {
        psi = psi.boosted(-boost_cells);
    }
    let back = ((psi.grid.x0() - psi0.grid.x0()) / psi0.grid.dx()).round() as i64;
    if back != 0 {
        psi = psi.recentered(-back);
    }
    let move_cells = (x_drift / psi0.grid.dx()).round() as i64;
    if move_cells != 0 {
        psi = psi.translated(move_cells);
    }
    Ok((psi, rec))
}

/// Run an ensemble of trajectories in parallel, one RNG stream per index.
/// Results are deterministic for a fixed `seed` regardless of thread count.
pub fn ensemble_trajectories(
    psi0: &WaveFunction,
    params: &LocalizationParams,
    t_final: f64,
    n_traj: usize,
    seed: u64,
) -> Result<Vec<(WaveFunction, TrajectoryRecord)>> {
    use rayon::prelude::*;
    (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            evolve_trajectory(psi0, params, t_final, &mut rng)
        })
        .collect()
}

/// Outcome of probing localization against a local instability.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChaosProbe {
    /// Terminal (or failure-time) position spread.
    pub attractor_spread: f64,
    pub localized: bool,
    pub diagnostic: Option<String>,
}

/// Relative displacement used to seed the unstable manifold of the inverted
/// potential: the probe starts a pointer-like packet this many pointer widths
/// away from the hilltop, so the verdict reflects the instability-versus-
/// localization competition instead of floating-point noise.
pub const INSTABILITY_SEED: f64 = 1e-6;

/// Evolve a pointer-like seed in an inverted potential for 10 localization
/// times without jumps and report whether the spread stayed below 10x the
/// lambda-only pointer spread. Divergence (grid escape, edge mass, NaN)
/// counts as not localized.
pub fn chaos_probe(grid: Grid1D, params: &LocalizationParams) -> Result<ChaosProbe> {
    let lyapunov = match params.potential {
        PotentialSpec::Inverted { lyapunov } => lyapunov,
        _ => {
            return Err(Error::InvalidParameter(
                "chaos probe requires an inverted potential".into(),
            ));
        }
    };
    if !(params.lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "chaos probe needs lambda > 0".into(),
        ));
    }
    let pointer_spread = params.pointer_var_x().sqrt();
    let threshold = 10.0 * pointer_spread;
    let center = grid.center();
    let offset = if lyapunov > 0.0 {
        INSTABILITY_SEED * pointer_spread
    } else {
        0.0
    };
    let mut psi = WaveFunction::pointer_state(grid, params, center)?;
    if offset != 0.0 {
        psi = WaveFunction::gaussian(grid, center + offset, pointer_spread, 0.0)?;
    }

    let t_total = 10.0 * params.t_loc();
    let n_steps = (t_total / params.dt).ceil() as usize;
    let quarter = grid.n_points() as f64 / 4.0 * grid.dx();
    let mut spread = psi.var_x().sqrt();

    for step in 0..n_steps {
        psi = match heff_step(&psi, params) {
            Ok(next) => next,
            Err(e) => {
                return Ok(ChaosProbe {
                    attractor_spread: spread,
                    localized: false,
                    diagnostic: Some(format!("step {step} failed: {e}")),
                });
            }
        };
        spread = psi.var_x().sqrt();
        if !spread.is_finite() {
            return Ok(ChaosProbe {
                attractor_spread: f64::INFINITY,
                localized: false,
                diagnostic: Some(format!("non-finite spread at step {step}")),
            });
        }
        if spread >= threshold {
            return Ok(ChaosProbe {
                attractor_spread: spread,
                localized: false,
                diagnostic: Some(format!("spread exceeded {threshold:.3e} at step {step}")),
            });
        }
        if (psi.mean_x() - center).abs() > quarter {
            return Ok(ChaosProbe {
                attractor_spread: spread,
                localized: false,
                diagnostic: Some(format!(
                    "packet escaped the localization region at step {step}"
                )),
            });
        }
        if psi.edge_mass(0.125) > 1e-6 {
            return Ok(ChaosProbe {
                attractor_spread: spread,
                localized: false,
                diagnostic: Some(format!("norm concentration failure at step {step}")),
            });
        }
    }

    Ok(ChaosProbe {
        attractor_spread: spread,
        localized: true,
        diagnostic: None,
    })
}
