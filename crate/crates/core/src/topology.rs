//! Chiral gap invariants from the periodicized half-period operator, band
//! windings from Floquet-mode Berry phases, and `(A, ω)` phase diagrams.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{FloquetError, Gap, Result};
use crate::extended::{gaps, quasienergies, ExtendedEigenpair, DEFAULT_DRIFT_TOLERANCE, DEFAULT_TRUNCATION};
use crate::linalg::{eig_unitary, outer, Mat2, Spinor, C64};
use crate::model::ModelParams;
use crate::propagator::{half_and_full, DEFAULT_STEPS_PER_PERIOD};

/// Minimum distance, in eigenphase, between a Floquet eigenvalue and the
/// branch cut.
pub const GAP_TOL: f64 = 1e-8;
/// Elements of the suppressed chiral pair must be below this.
pub const STRUCT_TOL: f64 = 1e-6;
pub const WINDING_TOL: f64 = 1e-8;
pub const DEFAULT_KGRID: usize = 512;
pub const DEFAULT_CLOSURE_THRESHOLD: f64 = 0.05;
/// Smallest admissible overlap between Floquet modes at neighbouring momenta.
pub const MIN_OVERLAP: f64 = 0.5;

/// Uniform periodic grid `k_j = -π + 2πj/N`.
pub fn kgrid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

/// Quasienergy window in which the branch cut sits at its lower end.
pub fn branch_window(gap: Gap, omega: f64) -> (f64, f64) {
    match gap {
        Gap::Zero => (-omega, 0.0),
        Gap::Pi => (-0.5 * omega, 0.5 * omega),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Structure {
    Diagonal,
    OffDiagonal,
}

/// Eigen-decomposition of `U(T)` with quasienergies in the window of `gap`.
fn branch_eigen(u_full: &Mat2, params: &ModelParams, k: f64, gap: Gap) -> Result<[(f64, Spinor); 2]> {
    let e = eig_unitary(u_full);
    let (lo, _) = branch_window(gap, params.omega);
    let t = params.period;
    let mut out = [(0.0, Spinor::zeros()); 2];
    for (j, slot) in out.iter_mut().enumerate() {
        // λ = e^{-iεT}; phase θ = -εT mapped so that ε ∈ (lo, lo + ω]
        let theta = -e.values[j].arg();
        let lo_phase = lo * t;
        let mut x = (theta - lo_phase).rem_euclid(2.0 * PI);
        let distance = x.min(2.0 * PI - x);
        if distance < GAP_TOL {
            return Err(FloquetError::GapClosed { k, gap, distance });
        }
        if x == 0.0 {
            x = 2.0 * PI;
        }
        *slot = ((lo_phase + x) / t, e.vectors[j]);
    }
    Ok(out)
}

fn eff_from(eig: &[(f64, Spinor); 2]) -> Mat2 {
    eig.iter()
        .map(|(e, v)| outer(v, v) * C64::new(*e, 0.0))
        .fold(Mat2::zeros(), |a, b| a + b)
}

/// `h_eff = (i/T) log U(T, 0)` with the branch cut inside `gap`.
pub fn effective_hamiltonian(params: &ModelParams, k: f64, gap: Gap, steps: usize) -> Result<Mat2> {
    let (_, full) = half_and_full(params, k, steps)?;
    Ok(eff_from(&branch_eigen(&full.matrix, params, k, gap)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPeriod {
    pub k: f64,
    pub matrix: Mat2,
    pub structure: Structure,
    /// Designated element: `(1, 0)` for the off-diagonal structure and
    /// `(1, 1)` for the diagonal one.
    pub v_plus: C64,
    /// Largest magnitude in the suppressed pair.
    pub suppressed: f64,
}

fn half_period_from(u_half: &Mat2, u_full: &Mat2, params: &ModelParams, k: f64, gap: Gap) -> Result<HalfPeriod> {
    let eig = branch_eigen(u_full, params, k, gap)?;
    let half = 0.5 * params.period;
    let back: Mat2 = eig
        .iter()
        .map(|(e, v)| outer(v, v) * C64::from_polar(1.0, e * half))
        .fold(Mat2::zeros(), |a, b| a + b);
    let m = u_half * back;
    let diagonal = m[(0, 0)].norm().max(m[(1, 1)].norm());
    let off_diagonal = m[(0, 1)].norm().max(m[(1, 0)].norm());
    let (structure, suppressed, v_plus) = if off_diagonal < STRUCT_TOL && diagonal > STRUCT_TOL {
        (Structure::Diagonal, off_diagonal, m[(1, 1)])
    } else if diagonal < STRUCT_TOL && off_diagonal > STRUCT_TOL {
        (Structure::OffDiagonal, diagonal, m[(1, 0)])
    } else {
        return Err(FloquetError::Structure {
            k,
            diagonal,
            off_diagonal,
        });
    };
    if v_plus.norm() < WINDING_TOL {
        return Err(FloquetError::WindingUndefined {
            k,
            magnitude: v_plus.norm(),
        });
    }
    Ok(HalfPeriod {
        k,
        matrix: m,
        structure,
        v_plus,
        suppressed,
    })
}

/// `M = U(T/2, 0) exp(i h_eff T/2)` in the σz basis and its designated element.
pub fn periodicized_half(params: &ModelParams, k: f64, gap: Gap, steps: usize) -> Result<HalfPeriod> {
    let (half, full) = half_and_full(params, k, steps)?;
    half_period_from(&half.matrix, &full.matrix, params, k, gap)
}

/// `(1/2π) Σ_j arg(z_{j+1}/z_j)` around a closed loop.
pub fn phase_winding(values: &[C64]) -> f64 {
    let n = values.len();
    let increments: Vec<f64> = (0..n).map(|j| (values[(j + 1) % n] / values[j]).arg()).collect();
    crate::linalg::pairwise_sum(&increments) / (2.0 * PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantOptions {
    pub kgrid_size: usize,
    pub steps: usize,
    pub truncation: usize,
    pub drift_tol: f64,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self {
            kgrid_size: DEFAULT_KGRID,
            steps: DEFAULT_STEPS_PER_PERIOD,
            truncation: DEFAULT_TRUNCATION,
            drift_tol: DEFAULT_DRIFT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Largest element of the suppressed chiral pair over grid and gaps.
    pub structure: f64,
    /// Largest distance of a raw winding sum from its integer.
    pub integer_deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub amp: f64,
    pub omega: f64,
    pub nu0: i32,
    pub nupi: i32,
    pub raw_nu0: f64,
    pub raw_nupi: f64,
    pub gap0: f64,
    pub gappi: f64,
    pub kgrid: usize,
    pub steps: usize,
    pub truncation: usize,
    pub residuals: Residuals,
}

/// Minima over the grid of the two quasienergy gaps, from extended-space
/// quasienergies, and the truncation that converged.
pub fn gap_minima(params: &ModelParams, ks: &[f64], opts: &InvariantOptions, parallel: bool) -> Result<(f64, f64, usize)> {
    // converge the truncation on a few probe momenta, then use it everywhere
    let probes = [0.0, 0.5 * PI, PI, ks[ks.len() / 3]];
    let truncation = crate::extended::truncation_for(params, &probes, opts.truncation, opts.drift_tol)?;
    let eval = |&k: &f64| -> Result<(f64, f64)> {
        let q = quasienergies(params, k, truncation)?;
        Ok(gaps(&q, params.omega))
    };
    let per_k: Vec<Result<(f64, f64)>> = if parallel {
        ks.par_iter().map(eval).collect()
    } else {
        ks.iter().map(eval).collect()
    };
    let mut g0 = f64::INFINITY;
    let mut gpi = f64::INFINITY;
    for r in per_k {
        let (a, b) = r?;
        g0 = g0.min(a);
        gpi = gpi.min(b);
    }
    Ok((g0.max(0.0), gpi.max(0.0), truncation))
}

fn invariants_impl(params: &ModelParams, opts: &InvariantOptions, parallel: bool) -> Result<InvariantReport> {
    if opts.kgrid_size < 4 {
        return Err(FloquetError::InvalidArgument("kgrid_size must be at least 4".into()));
    }
    let ks = kgrid(opts.kgrid_size);
    let eval = |&k: &f64| -> Result<[HalfPeriod; 2]> {
        let (half, full) = half_and_full(params, k, opts.steps)?;
        Ok([
            half_period_from(&half.matrix, &full.matrix, params, k, Gap::Zero)?,
            half_period_from(&half.matrix, &full.matrix, params, k, Gap::Pi)?,
        ])
    };
    let per_k: Vec<Result<[HalfPeriod; 2]>> = if parallel {
        ks.par_iter().map(eval).collect()
    } else {
        ks.iter().map(eval).collect()
    };
    let per_k: Vec<[HalfPeriod; 2]> = per_k.into_iter().collect::<Result<_>>()?;

    let mut raw = [0.0; 2];
    let mut structure_residual: f64 = 0.0;
    for (g, slot) in raw.iter_mut().enumerate() {
        let first = per_k[0][g].structure;
        if let Some(bad) = per_k.iter().find(|h| h[g].structure != first) {
            let m = bad[g].matrix;
            return Err(FloquetError::Structure {
                k: bad[g].k,
                diagonal: m[(0, 0)].norm().max(m[(1, 1)].norm()),
                off_diagonal: m[(0, 1)].norm().max(m[(1, 0)].norm()),
            });
        }
        let values: Vec<C64> = per_k.iter().map(|h| h[g].v_plus).collect();
        *slot = phase_winding(&values);
        structure_residual = per_k.iter().map(|h| h[g].suppressed).fold(structure_residual, f64::max);
    }
    let (gap0, gappi, truncation) = gap_minima(params, &ks, opts, parallel)?;
    let deficit = raw.iter().map(|r| (r - r.round()).abs()).fold(0.0, f64::max);
    Ok(InvariantReport {
        amp: params.amp,
        omega: params.omega,
        nu0: raw[0].round() as i32,
        nupi: raw[1].round() as i32,
        raw_nu0: raw[0],
        raw_nupi: raw[1],
        gap0,
        gappi,
        kgrid: opts.kgrid_size,
        steps: opts.steps,
        truncation,
        residuals: Residuals {
            structure: structure_residual,
            integer_deficit: deficit,
        },
    })
}

pub fn gap_invariants(params: &ModelParams, opts: &InvariantOptions) -> Result<InvariantReport> {
    invariants_impl(params, opts, true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindingRoute {
    FloquetState,
    ExtendedTerm,
}

/// Gauge phase that makes the A amplitude of the upper band, or the B
/// amplitude of the lower band, real and positive.
fn gauge_phase(state: &Spinor, band: usize) -> C64 {
    let pivot = if band == 1 { state[0] } else { state[1] };
    if pivot.norm() == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        pivot.conj() / pivot.norm()
    }
}

/// Berry-phase winding of each band, `ν_n = γ_n / π`, with the gauge of
/// [`gauge_phase`]. Any phase already carried by the modes is removed first,
/// so the result does not depend on the eigensolver's phase choice.
pub fn band_winding_from_modes(modes: &[[ExtendedEigenpair; 2]], ks: &[f64], route: WindingRoute) -> Result<([i32; 2], [f64; 2])> {
    let mut nu = [0i32; 2];
    let mut raw = [0.0; 2];
    for band in 0..2 {
        let vectors: Vec<Vec<Spinor>> = modes
            .iter()
            .map(|m| {
                let mode = &m[band];
                let p_max = mode.truncation as i64;
                let comps: Vec<Spinor> = (-p_max..=p_max).map(|p| mode.principal_component(p)).collect();
                let phase = gauge_phase(&mode.physical_state(), band);
                match route {
                    WindingRoute::FloquetState => vec![mode.physical_state() * phase],
                    WindingRoute::ExtendedTerm => comps.into_iter().map(|c| c * phase).collect(),
                }
            })
            .collect();
        let n = vectors.len();
        let mut increments = Vec::with_capacity(n);
        for j in 0..n {
            let a = &vectors[j];
            let b = &vectors[(j + 1) % n];
            let ov: C64 = a.iter().zip(b).map(|(x, y)| crate::linalg::braket(x, y)).sum();
            let scale = (a.iter().map(|x| x.norm_squared()).sum::<f64>() * b.iter().map(|x| x.norm_squared()).sum::<f64>()).sqrt();
            if ov.norm() < MIN_OVERLAP * scale {
                return Err(FloquetError::GridTooCoarse {
                    k: ks[j],
                    overlap: ov.norm() / scale,
                });
            }
            increments.push(-ov.arg());
        }
        raw[band] = crate::linalg::pairwise_sum(&increments) / PI;
        nu[band] = raw[band].round() as i32;
    }
    Ok((nu, raw))
}

/// Principal Floquet modes on the grid, truncation converged at probe points.
pub fn modes_on_grid(params: &ModelParams, ks: &[f64], opts: &InvariantOptions) -> Result<Vec<[ExtendedEigenpair; 2]>> {
    let probes = [0.0, 0.5 * PI, PI];
    let truncation = crate::extended::truncation_for(params, &probes, opts.truncation, opts.drift_tol)?;
    ks.par_iter().map(|&k| quasienergies(params, k, truncation)).collect()
}

/// Integer winding of the lower (index 0) and upper (index 1) band.
pub fn band_winding(params: &ModelParams, opts: &InvariantOptions, route: WindingRoute) -> Result<[i32; 2]> {
    let ks = kgrid(opts.kgrid_size);
    let modes = modes_on_grid(params, &ks, opts)?;
    Ok(band_winding_from_modes(&modes, &ks, route)?.0)
}

/// `Π_j ⟨n_j|n_{j+1}⟩`, independent of every per-momentum phase.
pub fn wilson_loop(modes: &[[ExtendedEigenpair; 2]], band: usize) -> C64 {
    let n = modes.len();
    (0..n)
        .map(|j| crate::linalg::braket(&modes[j][band].physical_state(), &modes[(j + 1) % n][band].physical_state()))
        .fold(C64::new(1.0, 0.0), |a, b| a * b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointStatus {
    Ok,
    /// A gap minimum is below the closure threshold.
    Boundary,
    Error(String),
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointStatus::Ok => write!(f, "ok"),
            PointStatus::Boundary => write!(f, "boundary"),
            PointStatus::Error(code) => write!(f, "{code}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub amp: f64,
    pub omega: f64,
    pub report: Option<InvariantReport>,
    pub status: PointStatus,
}

impl PhasePoint {
    pub fn invariants(&self) -> Option<(i32, i32)> {
        self.report.as_ref().map(|r| (r.nu0, r.nupi))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub amps: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Amplitude-major: point `(i, j)` is at index `i * omegas.len() + j`.
    pub points: Vec<PhasePoint>,
    pub threshold: f64,
    pub options: InvariantOptions,
}

impl PhaseDiagram {
    pub fn at(&self, i: usize, j: usize) -> &PhasePoint {
        &self.points[i * self.omegas.len() + j]
    }

    /// Pairs of grid neighbours, each as two flat indices.
    pub fn neighbours(&self) -> Vec<(usize, usize)> {
        let (na, nw) = (self.amps.len(), self.omegas.len());
        let mut out = Vec::new();
        for i in 0..na {
            for j in 0..nw {
                let here = i * nw + j;
                if j + 1 < nw {
                    out.push((here, here + 1));
                }
                if i + 1 < na {
                    out.push((here, here + nw));
                }
            }
        }
        out
    }
}

pub fn phase_diagram(
    base: &ModelParams,
    amps: &[f64],
    omegas: &[f64],
    opts: &InvariantOptions,
    threshold: f64,
) -> Result<PhaseDiagram> {
    if amps.is_empty() || omegas.is_empty() {
        return Err(FloquetError::InvalidArgument("phase diagram grids must be nonempty".into()));
    }
    let grid: Vec<(f64, f64)> = amps.iter().flat_map(|&a| omegas.iter().map(move |&w| (a, w))).collect();
    let points = grid
        .par_iter()
        .map(|&(amp, omega)| {
            let report = ModelParams::new(base.j1, base.j2, amp, omega).and_then(|p| invariants_impl(&p, opts, false));
            match report {
                Ok(r) => {
                    let status = if r.gap0 < threshold || r.gappi < threshold {
                        PointStatus::Boundary
                    } else {
                        PointStatus::Ok
                    };
                    PhasePoint {
                        amp,
                        omega,
                        report: Some(r),
                        status,
                    }
                }
                Err(FloquetError::GapClosed { .. }) | Err(FloquetError::Structure { .. }) => PhasePoint {
                    amp,
                    omega,
                    report: None,
                    status: PointStatus::Boundary,
                },
                Err(e) => PhasePoint {
                    amp,
                    omega,
                    report: None,
                    status: PointStatus::Error(e.code().to_string()),
                },
            }
        })
        .collect();
    Ok(PhaseDiagram {
        amps: amps.to_vec(),
        omegas: omegas.to_vec(),
        points,
        threshold,
        options: *opts,
    })
}

/// Smallest gap of the given kind along the straight segment between two
/// parameter points, sampled at `samples` interior points plus the ends.
pub fn segment_gap_minimum(
    base: &ModelParams,
    from: (f64, f64),
    to: (f64, f64),
    gap: Gap,
    samples: usize,
    opts: &InvariantOptions,
) -> Result<f64> {
    let ks = kgrid(opts.kgrid_size);
    let mut best = f64::INFINITY;
    for s in 0..=samples + 1 {
        let f = s as f64 / (samples + 1) as f64;
        let amp = from.0 + f * (to.0 - from.0);
        let omega = from.1 + f * (to.1 - from.1);
        let p = ModelParams::new(base.j1, base.j2, amp, omega)?;
        let (g0, gpi, _) = gap_minima(&p, &ks, opts, false)?;
        best = best.min(match gap {
            Gap::Zero => g0,
            Gap::Pi => gpi,
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionViolation {
    pub from: (f64, f64),
    pub to: (f64, f64),
    pub gap: Gap,
    pub segment_gap: f64,
}

/// Neighbouring points whose invariants differ although the corresponding
/// gap stays above `threshold` along the segment between them.
pub fn transition_violations(diagram: &PhaseDiagram, base: &ModelParams, samples: usize) -> Result<Vec<TransitionViolation>> {
    let mut out = Vec::new();
    for (a, b) in diagram.neighbours() {
        let (pa, pb) = (&diagram.points[a], &diagram.points[b]);
        let (Some(ia), Some(ib)) = (pa.invariants(), pb.invariants()) else {
            continue;
        };
        for (gap, changed) in [(Gap::Zero, ia.0 != ib.0), (Gap::Pi, ia.1 != ib.1)] {
            if !changed {
                continue;
            }
            let g = segment_gap_minimum(base, (pa.amp, pa.omega), (pb.amp, pb.omega), gap, samples, &diagram.options)?;
            if g >= diagram.threshold {
                out.push(TransitionViolation {
                    from: (pa.amp, pa.omega),
                    to: (pb.amp, pb.omega),
                    gap,
                    segment_gap: g,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    Amplitude,
    Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub axis: SweepAxis,
    /// Bracket left after bisection.
    pub lower: f64,
    pub upper: f64,
    pub below: (i32, i32),
    pub above: (i32, i32),
    /// Smallest gaps at the midpoint of the final bracket.
    pub gap0: f64,
    pub gappi: f64,
}

fn with_axis(base: &ModelParams, axis: SweepAxis, x: f64) -> Result<ModelParams> {
    match axis {
        SweepAxis::Amplitude => base.with_amp(x),
        SweepAxis::Frequency => base.with_omega(x),
    }
}

/// Bisect the sweep parameter between `lo` and `hi`, whose invariants
/// differ, down to a bracket of width `tol`.
pub fn bisect_transition(
    base: &ModelParams,
    axis: SweepAxis,
    lo: f64,
    hi: f64,
    tol: f64,
    opts: &InvariantOptions,
) -> Result<Transition> {
    let inv = |x: f64| -> Result<(i32, i32)> {
        let r = gap_invariants(&with_axis(base, axis, x)?, opts)?;
        Ok((r.nu0, r.nupi))
    };
    let below = inv(lo)?;
    let above = inv(hi)?;
    if below == above {
        return Err(FloquetError::InvalidArgument(format!(
            "no invariant change between {lo} and {hi}: both {below:?}"
        )));
    }
    let (mut a, mut b) = (lo, hi);
    while (b - a).abs() > tol {
        let mid = 0.5 * (a + b);
        match inv(mid) {
            Ok(v) if v == below => a = mid,
            Ok(v) if v == above => b = mid,
            // a closed gap or a third phase: the closure is at `mid`
            _ => {
                a = mid;
                b = mid;
            }
        }
    }
    let mid = with_axis(base, axis, 0.5 * (a + b))?;
    let (gap0, gappi, _) = gap_minima(&mid, &kgrid(opts.kgrid_size), opts, true)?;
    Ok(Transition {
        axis,
        lower: a,
        upper: b,
        below,
        above,
        gap0,
        gappi,
    })
}
