//! Time-ordered evolution of a single Bloch momentum and the leading
//! Floquet-Magnus generators.
//!
//! The integrator is the fourth-order Magnus step on the two Gauss-Legendre
//! nodes of each interval, `U ← exp(-i Ω) U` with
//! `Ω = δ(h₁ + h₂)/2 + i√3 δ²[h₁, h₂]/12`. For 2×2 generators the commutator
//! is a cross product of Pauli vectors and the exponential is closed form, so
//! every factor is exactly unitary and the global error is O(δ⁴).

use serde::{Deserialize, Serialize};

use crate::error::{FloquetError, Result};
use crate::linalg::{commutator, Mat2, Pauli, C64, I};
use crate::model::{bloch_hamiltonian, drive_fourier_components, DriveFourier, ModelParams};

pub const DEFAULT_STEPS_PER_PERIOD: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Propagator {
    pub matrix: Mat2,
    pub interval: (f64, f64),
    pub steps: usize,
}

impl Propagator {
    pub fn identity(t: f64) -> Self {
        Self {
            matrix: Mat2::identity(),
            interval: (t, t),
            steps: 0,
        }
    }

    /// `self` after `earlier`: `U(t3, t1) = U(t3, t2) U(t2, t1)`.
    pub fn after(&self, earlier: &Propagator) -> Propagator {
        Propagator {
            matrix: self.matrix * earlier.matrix,
            interval: (earlier.interval.0, self.interval.1),
            steps: self.steps + earlier.steps,
        }
    }

    /// Eigenphases `θ_j ∈ (-π, π]` with `U |j⟩ = e^{iθ_j} |j⟩`.
    pub fn eigenphases(&self) -> [f64; 2] {
        let e = crate::linalg::eig_unitary(&self.matrix);
        [e.values[0].arg(), e.values[1].arg()]
    }
}

fn magnus4_step(h1: &Pauli, h2: &Pauli, dt: f64) -> Pauli {
    // i[a·σ, b·σ] = -2 (a × b)·σ
    let c = -3f64.sqrt() / 6.0 * dt * dt;
    Pauli::new(
        0.5 * dt * (h1.d0 + h2.d0),
        0.5 * dt * (h1.dx + h2.dx) + c * (h1.dy * h2.dz - h1.dz * h2.dy),
        0.5 * dt * (h1.dy + h2.dy) + c * (h1.dz * h2.dx - h1.dx * h2.dz),
        0.5 * dt * (h1.dz + h2.dz) + c * (h1.dx * h2.dy - h1.dy * h2.dx),
    )
}

/// One integrator factor over `[t, t + dt]`.
pub fn step(h: &impl Fn(f64) -> Pauli, t: f64, dt: f64) -> Mat2 {
    let (tm, off) = (t + 0.5 * dt, 3f64.sqrt() / 6.0 * dt);
    magnus4_step(&h(tm - off), &h(tm + off), dt).exp_minus_i(1.0)
}

/// Fourth-order Magnus product for an arbitrary Hermitian generator.
pub fn evolve_generator(h: impl Fn(f64) -> Pauli, t1: f64, t2: f64, steps: usize) -> Result<Propagator> {
    if steps == 0 {
        return Err(FloquetError::InvalidArgument("steps must be at least 1".into()));
    }
    if t1.is_nan() || t2.is_nan() || t2 < t1 {
        return Err(FloquetError::InvalidArgument(format!(
            "evolution interval must satisfy t2 >= t1, got [{t1}, {t2}]"
        )));
    }
    let dt = (t2 - t1) / steps as f64;
    let mut u = Mat2::identity();
    if dt > 0.0 {
        for j in 0..steps {
            u = step(&h, t1 + j as f64 * dt, dt) * u;
        }
    }
    Ok(Propagator {
        matrix: u,
        interval: (t1, t2),
        steps,
    })
}

pub fn evolve(params: &ModelParams, k: f64, t1: f64, t2: f64, steps: usize) -> Result<Propagator> {
    evolve_generator(|t| bloch_hamiltonian(params, k, t).pauli(), t1, t2, steps)
}

/// Stroboscopic operator `U(T, 0)`.
pub fn floquet_operator(params: &ModelParams, k: f64, steps: usize) -> Result<Propagator> {
    evolve(params, k, 0.0, params.period, steps)
}

/// `U(T/2, 0)` and `U(T, 0)` from one pass. `steps` is per full period and
/// is rounded up to an even number.
pub fn half_and_full(params: &ModelParams, k: f64, steps: usize) -> Result<(Propagator, Propagator)> {
    let half_steps = steps.div_ceil(2).max(1);
    let t_half = 0.5 * params.period;
    let first = evolve(params, k, 0.0, t_half, half_steps)?;
    let second = evolve(params, k, t_half, params.period, half_steps)?;
    let full = second.after(&first);
    Ok((first, full))
}

/// Leading Floquet-Magnus Floquet Hamiltonian and kick operator with the
/// initial time fixed at `t_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnusPair {
    pub h_f: Mat2,
    pub omega: f64,
    sidebands: Vec<(i64, Mat2)>,
}

impl MagnusPair {
    /// `K_F(t) = Σ_{p≠0} i H_p (1 - e^{ipωt}) / (pω)`.
    pub fn k_f(&self, t: f64) -> Mat2 {
        let mut acc = Mat2::zeros();
        for &(p, hp) in &self.sidebands {
            let pw = p as f64 * self.omega;
            let factor = I * (C64::new(1.0, 0.0) - C64::from_polar(1.0, pw * t)) / pw;
            acc += hp * factor;
        }
        acc
    }
}

pub fn magnus_from_components(drive: &DriveFourier, omega: f64) -> Result<MagnusPair> {
    if omega == 0.0 || !omega.is_finite() {
        return Err(FloquetError::InvalidArgument(format!("omega must be nonzero, got {omega}")));
    }
    let mut h_f = drive.h0;
    for (p, hp) in drive.sidebands() {
        let pw = C64::new(p as f64 * omega, 0.0);
        h_f += (hp * drive.component(-p) + commutator(&drive.h0, &hp)) / pw;
    }
    Ok(MagnusPair {
        h_f,
        omega,
        sidebands: drive.sidebands().to_vec(),
    })
}

pub fn magnus_leading(params: &ModelParams, k: f64) -> Result<MagnusPair> {
    magnus_from_components(&drive_fourier_components(params, k), params.omega)
}

/// Summary of a step-doubling convergence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingReport {
    pub steps: usize,
    /// `‖U_steps − U_2steps‖`.
    pub coarse_error: f64,
    /// `‖U_2steps − U_4steps‖`.
    pub fine_error: f64,
    /// `coarse_error / fine_error`, ≈ 16 for a fourth-order scheme.
    pub ratio: f64,
}

pub fn doubling_check(params: &ModelParams, k: f64, steps: usize) -> Result<DoublingReport> {
    let u1 = floquet_operator(params, k, steps)?.matrix;
    let u2 = floquet_operator(params, k, 2 * steps)?.matrix;
    let u4 = floquet_operator(params, k, 4 * steps)?.matrix;
    let coarse_error = crate::linalg::fro(&(u1 - u2));
    let fine_error = crate::linalg::fro(&(u2 - u4));
    Ok(DoublingReport {
        steps,
        coarse_error,
        fine_error,
        ratio: coarse_error / fine_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, sigma_z, unitarity_defect};
    use crate::model::static_hamiltonian;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn wrap(x: f64) -> f64 {
        let y = x.rem_euclid(2.0 * PI);
        if y > PI {
            y - 2.0 * PI
        } else {
            y
        }
    }

    fn sorted(mut v: [f64; 2]) -> [f64; 2] {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    #[test]
    fn empty_interval_is_identity() {
        let p = ModelParams::new(1.0, 1.5, 1.0, 5.5).unwrap();
        let u = evolve(&p, 0.4, 1.3, 1.3, 10).unwrap();
        assert_eq!(u.matrix, Mat2::identity());
    }

    #[test]
    fn zero_steps_rejected() {
        let p = ModelParams::new(1.0, 1.5, 1.0, 5.5).unwrap();
        assert!(matches!(evolve(&p, 0.0, 0.0, 1.0, 0), Err(FloquetError::InvalidArgument(_))));
        assert!(evolve(&p, 0.0, 1.0, 0.0, 10).is_err());
    }

    #[test]
    fn static_limit_has_closed_form() {
        let p = ModelParams::new(1.0, 1.5, 0.0, 5.5).unwrap();
        for (k, e) in [(PI, 0.5), (0.0, 2.5)] {
            let u = floquet_operator(&p, k, 2000).unwrap();
            let expect = sorted([wrap(-e * p.period), wrap(e * p.period)]);
            let got = sorted(u.eigenphases());
            assert!((got[0] - expect[0]).abs() < 1e-12 && (got[1] - expect[1]).abs() < 1e-12);
            let closed = static_hamiltonian(&p, k).pauli().exp_minus_i(p.period);
            assert!(fro(&(u.matrix - closed)) < 1e-12);
        }
    }

    #[test]
    fn determinant_and_unitarity() {
        let p = ModelParams::new(1.0, 1.5, 3.0, 6.0).unwrap();
        let u = floquet_operator(&p, 1.1, 2000).unwrap();
        assert!((u.matrix.determinant().norm() - 1.0).abs() < 1e-10);
        assert!(unitarity_defect(&u.matrix) < 1e-10);
    }

    #[test]
    fn stroboscopic_power() {
        let p = ModelParams::new(1.0, 1.5, 1.0, 5.5).unwrap();
        let steps = 2000;
        let u = floquet_operator(&p, 0.7, steps).unwrap().matrix;
        let u5 = evolve(&p, 0.7, 0.0, 5.0 * p.period, 5 * steps).unwrap().matrix;
        let pow = u * u * u * u * u;
        assert!(fro(&(pow - u5)) < 1e-11);
    }

    #[test]
    fn composition_law() {
        let p = ModelParams::new(1.0, 1.5, 2.0, 4.0).unwrap();
        let a = evolve(&p, 0.3, 0.0, 0.6, 600).unwrap();
        let b = evolve(&p, 0.3, 0.6, 1.5, 900).unwrap();
        let ab = evolve(&p, 0.3, 0.0, 1.5, 1500).unwrap();
        assert!(fro(&(b.after(&a).matrix - ab.matrix)) < 1e-12);
    }

    #[test]
    fn richardson_fourth_order() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let amp = rng.gen_range(0.2..4.0);
            let omega = rng.gen_range(2.0..12.0);
            let k = rng.gen_range(-PI..PI);
            let p = ModelParams::new(1.0, 1.5, amp, omega).unwrap();
            let r = doubling_check(&p, k, 200).unwrap();
            assert!((r.ratio - 16.0).abs() < 0.8, "ratio {} at A={amp}, ω={omega}, k={k}", r.ratio);
        }
    }

    #[test]
    fn chiral_relation() {
        let p = ModelParams::new(1.0, 1.5, 2.5, 4.5).unwrap();
        // σz U(t,0) σz = U(-t,0) = U(0,-t)† for the cosine drive
        for t in [0.3, 0.5 * p.period, 2.7] {
            let fwd = evolve(&p, 0.9, 0.0, t, 1000).unwrap().matrix;
            let back = evolve(&p, 0.9, -t, 0.0, 1000).unwrap().matrix;
            assert!(fro(&(sigma_z() * fwd * sigma_z() - back.adjoint())) < 1e-12);
        }
        // the node grid is symmetric over a full period, so the relation is exact
        let u = floquet_operator(&p, 0.9, 1000).unwrap().matrix;
        assert!(fro(&(sigma_z() * u * sigma_z() - u.adjoint())) < 1e-13);
    }

    #[test]
    fn magnus_static_and_cancellation() {
        let p = ModelParams::new(1.0, 1.5, 0.0, 5.5).unwrap();
        let m = magnus_leading(&p, 0.4).unwrap();
        assert_eq!(m.h_f, static_hamiltonian(&p, 0.4).matrix());
        assert_eq!(fro(&m.k_f(1.234)), 0.0);

        // H_{+1} = H_{-1} makes the commutator terms cancel for any amplitude
        for amp in [0.5, 1.0, 3.0] {
            let p = ModelParams::new(1.0, 1.5, amp, 5.5).unwrap();
            let m = magnus_leading(&p, 0.4).unwrap();
            assert!(fro(&(m.h_f - static_hamiltonian(&p, 0.4).matrix())) < 1e-15);
        }
    }

    #[test]
    fn kick_operator_properties() {
        let p = ModelParams::new(1.0, 1.5, 1.0, 5.5).unwrap();
        let m = magnus_leading(&p, 0.4).unwrap();
        assert_eq!(fro(&m.k_f(0.0)), 0.0);
        for t in [0.1, 0.77, 3.0] {
            assert!(fro(&(m.k_f(t + p.period) - m.k_f(t))) < 1e-12);
            let k = m.k_f(t);
            assert!(fro(&(k - k.adjoint())) < 1e-14);
            // (A/ω) sin(ωt) σx for the cosine drive
            let expect = crate::linalg::sigma_x() * C64::new((p.amp / p.omega) * (p.omega * t).sin(), 0.0);
            assert!(fro(&(k - expect)) < 1e-14);
        }
    }

    #[test]
    fn magnus_generic_drive() {
        // V not Hermitian: H_pH_{-p} and commutator terms survive
        let h0 = Pauli::new(0.0, 1.0, 0.3, 0.0).to_matrix();
        let v = Pauli::new(0.0, 0.0, 0.0, 0.4).to_matrix() * C64::new(0.0, 1.0);
        let drive = DriveFourier {
            h0,
            h_plus: v,
            h_minus: v.adjoint(),
        };
        let omega = 7.0;
        let m = magnus_from_components(&drive, omega).unwrap();
        let expect = h0
            + (v * v.adjoint() - v.adjoint() * v) / C64::new(omega, 0.0)
            + (commutator(&h0, &v) - commutator(&h0, &v.adjoint())) / C64::new(omega, 0.0);
        assert!(fro(&(m.h_f - expect)) < 1e-14);
        assert!(fro(&(m.h_f - m.h_f.adjoint())) < 1e-14);
    }

    #[test]
    fn magnus_high_frequency_agreement() {
        let err = |omega: f64| {
            let p = ModelParams::new(1.0, 1.5, 1.0, omega).unwrap();
            let m = magnus_leading(&p, 0.6).unwrap();
            let approx = Pauli::from_matrix(&m.h_f).exp_minus_i(p.period);
            let exact = floquet_operator(&p, 0.6, 4000).unwrap().matrix;
            fro(&(approx - exact))
        };
        let (e20, e40) = (err(20.0), err(40.0));
        assert!(e40 < e20 / 2.0, "e20={e20}, e40={e40}");
        // O(1/ω) or better: fitted exponent at least 1
        assert!((e20 / e40).log2() >= 1.0);
    }
}
