//! Gaussian wave packets on a finite chain.
//!
//! The momentum-space path evolves each Bloch spinor of a periodic ring with
//! the integrator of [`crate::propagator`]. The real-space path
//! integrates the open chain directly and serves as an independent check.

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FloquetError, Result};
use crate::linalg::{pairwise_sum, Spinor, C64};
use crate::model::{bloch_hamiltonian, velocity_operator, ModelParams};
use crate::perturbation::ComTerms;
use crate::propagator::{step, DEFAULT_STEPS_PER_PERIOD};

/// Minimum ring size in units of the packet width.
pub const WIDTH_RULE: f64 = 8.0;
/// Largest tolerated density in the outermost cells of the open chain.
pub const BOUNDARY_LIMIT: f64 = 1e-8;
const EDGE_CELLS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavePacketSpec {
    pub width: f64,
    pub k0: f64,
    pub spinor: [C64; 2],
    pub cells: usize,
    /// Packet centre; `cells / 2` unless overridden.
    pub center: f64,
    pub duration: f64,
    /// Output sampling interval.
    pub dt: f64,
    pub steps_per_period: usize,
}

impl WavePacketSpec {
    /// Width 10 on 400 cells, polarized on sublattice A, sampled at `T/40`
    /// for 25 time units.
    pub fn standard(params: &ModelParams) -> Self {
        Self {
            width: 10.0,
            k0: 0.0,
            spinor: [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            cells: 400,
            center: 200.0,
            duration: 25.0,
            dt: params.period / 40.0,
            steps_per_period: DEFAULT_STEPS_PER_PERIOD,
        }
    }

    pub fn with_width(mut self, width: f64) -> Self {
        self.width = width;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells;
        self.center = (cells / 2) as f64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FloquetError::InvalidArgument(m));
        if !(self.width > 0.0 && self.width.is_finite()) {
            return bad(format!("packet width must be positive, got {}", self.width));
        }
        if (self.cells as f64) < WIDTH_RULE * self.width {
            return bad(format!(
                "{} cells cannot hold a packet of width {}: need at least 8·d = {}",
                self.cells,
                self.width,
                WIDTH_RULE * self.width
            ));
        }
        let n = self.spinor[0].norm_sqr() + self.spinor[1].norm_sqr();
        if (n - 1.0).abs() > 1e-14 {
            return bad(format!("spinor norm² is {n}, expected 1"));
        }
        if !(self.duration >= 0.0 && self.dt > 0.0 && self.duration.is_finite()) {
            return bad("duration must be non-negative and dt positive".into());
        }
        if self.steps_per_period == 0 {
            return bad("steps_per_period must be at least 1".into());
        }
        if !self.k0.is_finite() || !self.center.is_finite() {
            return bad("k0 and center must be finite".into());
        }
        Ok(())
    }

    /// Output times `0, dt, 2dt, …` up to the duration.
    pub fn times(&self) -> Vec<f64> {
        let n = (self.duration / self.dt + 1e-9).floor() as usize;
        (0..=n).map(|j| j as f64 * self.dt).collect()
    }

    /// Integrator steps between consecutive samples.
    pub fn substeps(&self, params: &ModelParams) -> usize {
        ((self.steps_per_period as f64) * self.dt / params.period).ceil().max(1.0) as usize
    }
}

/// Normalized packet amplitudes, one spinor per cell.
pub fn prepare_packet(spec: &WavePacketSpec) -> Result<Vec<Spinor>> {
    spec.validate()?;
    let s = Spinor::new(spec.spinor[0], spec.spinor[1]);
    let mut psi: Vec<Spinor> = (0..spec.cells)
        .map(|i| {
            let y = i as f64 - spec.center;
            let env = (-y * y / (2.0 * spec.width * spec.width)).exp();
            s * C64::from_polar(env, spec.k0 * y)
        })
        .collect();
    let norm = pairwise_sum(&psi.iter().map(|c| c.norm_squared()).collect::<Vec<_>>()).sqrt();
    for c in &mut psi {
        *c = c.unscale(norm);
    }
    Ok(psi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Centre of mass relative to its initial value.
    pub x_exact: Vec<f64>,
    pub v_exact: Vec<f64>,
    pub norm: Vec<f64>,
    /// Initial absolute centre of mass.
    pub x_origin: f64,
    pub x_first_order: Option<Vec<f64>>,
    pub x_lowfreq: Option<Vec<f64>>,
    pub com_terms: Option<ComTerms>,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Fill the analytic columns. The closed forms hold at the band-inversion
    /// point, so they are attached only for packets centred at `k = 0`.
    pub fn attach_first_order(&mut self, params: &ModelParams, k0: f64) -> Result<()> {
        if k0 != 0.0 {
            return Ok(());
        }
        let terms = ComTerms::first_order(params)?;
        self.x_first_order = Some(self.times.iter().map(|&t| terms.position(t)).collect());
        self.x_lowfreq = Some(self.times.iter().map(|&t| terms.low_frequency(t)).collect());
        self.com_terms = Some(terms);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub times: Vec<f64>,
    pub cells: usize,
    /// `rho[j][i]`: density of cell `i` at `times[j]`.
    pub rho: Vec<Vec<f64>>,
}

fn cell_density(psi: &[Spinor]) -> Vec<f64> {
    psi.iter().map(|c| c.norm_squared()).collect()
}

fn position_moments(rho: &[f64]) -> (f64, f64) {
    let weighted: Vec<f64> = rho.iter().enumerate().map(|(i, r)| i as f64 * r).collect();
    (pairwise_sum(&weighted), pairwise_sum(rho))
}

struct Ring {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    cells: usize,
}

impl Ring {
    fn new(cells: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(cells),
            inverse: planner.plan_fft_inverse(cells),
            cells,
        }
    }

    fn momentum(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.cells as f64
    }

    /// `φ(k) = L^{-1/2} Σ_i e^{-iki} ψ_i`, sublattice by sublattice.
    fn to_momentum(&self, psi: &[Spinor]) -> Vec<Spinor> {
        self.transform(psi, &self.forward)
    }

    fn to_position(&self, phi: &[Spinor]) -> Vec<Spinor> {
        self.transform(phi, &self.inverse)
    }

    fn transform(&self, input: &[Spinor], fft: &Arc<dyn Fft<f64>>) -> Vec<Spinor> {
        let scale = 1.0 / (self.cells as f64).sqrt();
        let mut a: Vec<C64> = input.iter().map(|c| c[0]).collect();
        let mut b: Vec<C64> = input.iter().map(|c| c[1]).collect();
        fft.process(&mut a);
        fft.process(&mut b);
        a.iter()
            .zip(&b)
            .map(|(x, y)| Spinor::new(x * scale, y * scale))
            .collect()
    }
}

/// Sample times, integrator steps per sample and the step length.
fn step_grid(spec: &WavePacketSpec, params: &ModelParams) -> (Vec<f64>, usize, f64) {
    let times = spec.times();
    let sub = spec.substeps(params);
    (times, sub, spec.dt / sub as f64)
}

struct MomentumRun {
    times: Vec<f64>,
    /// `phi[j][s]`: Bloch spinor of momentum index `j` at sample `s`.
    phi: Vec<Vec<Spinor>>,
    ring: Ring,
}

fn run_momentum(spec: &WavePacketSpec, params: &ModelParams) -> Result<MomentumRun> {
    let psi0 = prepare_packet(spec)?;
    let ring = Ring::new(spec.cells);
    let phi0 = ring.to_momentum(&psi0);
    let (times, sub, delta) = step_grid(spec, params);
    let phi: Vec<Vec<Spinor>> = (0..spec.cells)
        .into_par_iter()
        .map(|j| {
            let k = ring.momentum(j);
            let mut out = Vec::with_capacity(times.len());
            let mut state = phi0[j];
            out.push(state);
            for &t0 in &times[..times.len() - 1] {
                let h = |t: f64| bloch_hamiltonian(params, k, t).pauli();
                for n in 0..sub {
                    state = step(&h, t0 + n as f64 * delta, delta) * state;
                }
                out.push(state);
            }
            out
        })
        .collect();
    Ok(MomentumRun { times, phi, ring })
}

fn finish_trajectory(times: Vec<f64>, x_abs: Vec<f64>, v: Vec<f64>, norm: Vec<f64>) -> Trajectory {
    let x_origin = x_abs[0];
    Trajectory {
        times,
        x_exact: x_abs.iter().map(|x| x - x_origin).collect(),
        v_exact: v,
        norm,
        x_origin,
        x_first_order: None,
        x_lowfreq: None,
        com_terms: None,
    }
}

pub fn evolve_momentum_space(spec: &WavePacketSpec, params: &ModelParams) -> Result<Trajectory> {
    let run = run_momentum(spec, params)?;
    let vel: Vec<_> = (0..spec.cells)
        .map(|j| velocity_operator(params, run.ring.momentum(j)).matrix())
        .collect();
    let per_sample: Vec<(f64, f64, f64)> = (0..run.times.len())
        .into_par_iter()
        .map(|s| {
            let phi: Vec<Spinor> = run.phi.iter().map(|row| row[s]).collect();
            let psi = run.ring.to_position(&phi);
            let (x, n) = position_moments(&cell_density(&psi));
            let v: Vec<f64> = phi
                .iter()
                .zip(&vel)
                .map(|(f, m)| crate::linalg::braket(f, &(m * f)).re)
                .collect();
            (x, pairwise_sum(&v), n)
        })
        .collect();
    let x = per_sample.iter().map(|r| r.0).collect();
    let v = per_sample.iter().map(|r| r.1).collect();
    let norm = per_sample.iter().map(|r| r.2).collect();
    Ok(finish_trajectory(run.times, x, v, norm))
}

pub fn density_map(spec: &WavePacketSpec, params: &ModelParams) -> Result<DensityProfile> {
    let run = run_momentum(spec, params)?;
    let rho = (0..run.times.len())
        .into_par_iter()
        .map(|s| {
            let phi: Vec<Spinor> = run.phi.iter().map(|row| row[s]).collect();
            cell_density(&run.ring.to_position(&phi))
        })
        .collect();
    Ok(DensityProfile {
        times: run.times,
        cells: spec.cells,
        rho,
    })
}

/// `H(t)ψ` on the open chain; cell `i`'s A site couples to the B site of
/// cell `i − 1`.
fn apply_open_chain(params: &ModelParams, t: f64, psi: &[Spinor], out: &mut [Spinor]) {
    let intra = C64::new(params.j1 + params.amp * (params.omega * t).cos(), 0.0);
    let inter = C64::new(params.j2, 0.0);
    let n = psi.len();
    for i in 0..n {
        let mut a = intra * psi[i][1];
        let mut b = intra * psi[i][0];
        if i > 0 {
            a += inter * psi[i - 1][1];
        }
        if i + 1 < n {
            b += inter * psi[i + 1][0];
        }
        out[i] = Spinor::new(a, b);
    }
}

/// Fourth-order Magnus generator of the step `[t, t + δ]` applied to `psi`:
/// `Ω = δ(H₁ + H₂)/2 + i√3 δ²[H₁, H₂]/12` at the two Gauss-Legendre nodes.
struct MagnusApply {
    h1: Vec<Spinor>,
    h2: Vec<Spinor>,
    h12: Vec<Spinor>,
    h21: Vec<Spinor>,
}

impl MagnusApply {
    fn new(n: usize) -> Self {
        let z = vec![Spinor::zeros(); n];
        Self {
            h1: z.clone(),
            h2: z.clone(),
            h12: z.clone(),
            h21: z,
        }
    }

    fn apply(&mut self, params: &ModelParams, t: f64, delta: f64, psi: &[Spinor], out: &mut [Spinor]) {
        let (tm, off) = (t + 0.5 * delta, 3f64.sqrt() / 6.0 * delta);
        apply_open_chain(params, tm - off, psi, &mut self.h1);
        apply_open_chain(params, tm + off, psi, &mut self.h2);
        apply_open_chain(params, tm - off, &self.h2, &mut self.h12);
        apply_open_chain(params, tm + off, &self.h1, &mut self.h21);
        let a = C64::new(0.5 * delta, 0.0);
        let c = C64::new(0.0, 3f64.sqrt() / 12.0 * delta * delta);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (self.h1[i] + self.h2[i]) * a + (self.h12[i] - self.h21[i]) * c;
        }
    }
}

/// `ψ ← exp(−iΩ)ψ` by a Taylor series summed to machine precision.
fn taylor_step(
    params: &ModelParams,
    t: f64,
    delta: f64,
    psi: &mut [Spinor],
    term: &mut [Spinor],
    next: &mut [Spinor],
    gen: &mut MagnusApply,
) {
    term.copy_from_slice(psi);
    for order in 1..40 {
        gen.apply(params, t, delta, term, next);
        let c = C64::new(0.0, -1.0 / order as f64);
        let mut size = 0.0;
        for (p, (dst, src)) in psi.iter_mut().zip(term.iter_mut().zip(next.iter())) {
            *dst = src * c;
            size += dst.norm_squared();
            *p += *dst;
        }
        if size < 1e-34 {
            break;
        }
    }
}

/// `⟨v⟩ = 2 J2 Σ_i Im(ψ*_{iA} ψ_{i−1,B})`, the expectation of `i[H, x̂]`.
fn open_chain_velocity(params: &ModelParams, psi: &[Spinor]) -> f64 {
    let terms: Vec<f64> = (1..psi.len())
        .map(|i| 2.0 * params.j2 * (psi[i][0].conj() * psi[i - 1][1]).im)
        .collect();
    pairwise_sum(&terms)
}

pub fn evolve_real_space(spec: &WavePacketSpec, params: &ModelParams) -> Result<Trajectory> {
    let mut psi = prepare_packet(spec)?;
    let (times, sub, delta) = step_grid(spec, params);
    let mut term = psi.clone();
    let mut next = psi.clone();
    let mut gen = MagnusApply::new(psi.len());
    let (mut xs, mut vs, mut ns) = (Vec::new(), Vec::new(), Vec::new());
    for (s, &t0) in times.iter().enumerate() {
        if s > 0 {
            let start = times[s - 1];
            for n in 0..sub {
                taylor_step(params, start + n as f64 * delta, delta, &mut psi, &mut term, &mut next, &mut gen);
            }
        }
        let rho = cell_density(&psi);
        let edge: f64 = rho[..EDGE_CELLS].iter().chain(&rho[rho.len() - EDGE_CELLS..]).sum();
        if edge > BOUNDARY_LIMIT {
            return Err(FloquetError::BoundaryLeak { t: t0, density: edge });
        }
        let (x, norm) = position_moments(&rho);
        xs.push(x);
        vs.push(open_chain_velocity(params, &psi));
        ns.push(norm);
    }
    Ok(finish_trajectory(times, xs, vs, ns))
}

/// Largest gap between a five-point derivative of `x_exact` and `v_exact`
/// over interior samples.
pub fn heisenberg_consistency(traj: &Trajectory) -> f64 {
    let x = &traj.x_exact;
    if x.len() < 5 {
        return 0.0;
    }
    let h = traj.times[1] - traj.times[0];
    (2..x.len() - 2)
        .map(|j| {
            let d = (x[j - 2] - 8.0 * x[j - 1] + 8.0 * x[j + 1] - x[j + 2]) / (12.0 * h);
            (d - traj.v_exact[j]).abs()
        })
        .fold(0.0, f64::max)
}
