//! First-order Floquet modes, their Floquet-Magnus counterparts, and the
//! analytic centre-of-mass formulas at the band-inversion point `k = 0`.
//!
//! Bands are indexed `0` (lower) and `1` (upper) as in
//! [`static_eigensystem`]. The drive is `h(t) = H0 + V e^{iωt} + V† e^{-iωt}`.

use serde::{Deserialize, Serialize};

use crate::error::{FloquetError, Result};
use crate::extended::{quasienergies, ExtendedEigenpair};
use crate::linalg::{braket, Mat2, Spinor, C64};
use crate::model::{
    drive_fourier_components, velocity_operator, ModelParams, StaticEigenpair,
};

/// Smallest admissible energy denominator.
pub const RESONANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    ExtendedSpace,
    FloquetMagnus,
}

/// Which intermediate states enter the first-order sideband components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SidebandTerms {
    /// Only the other band, `m ≠ n`.
    OffDiagonal,
    /// Both bands. The `m = n` terms carry the micromotion of a drive that
    /// is diagonal in the static eigenbasis.
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderMode {
    pub base: StaticEigenpair,
    pub u0: Spinor,
    pub u_plus: Spinor,
    pub u_minus: Spinor,
    pub scheme: Scheme,
    pub omega: f64,
}

impl FirstOrderMode {
    pub fn component(&self, p: i64) -> Spinor {
        match p {
            0 => self.u0,
            1 => self.u_plus,
            -1 => self.u_minus,
            _ => Spinor::zeros(),
        }
    }

    /// Physical state at the initial time, `Σ_p |u^p⟩`.
    pub fn state(&self) -> Spinor {
        self.u0 + self.u_plus + self.u_minus
    }

    /// Periodic part `|u(t)⟩ = Σ_p e^{ipωt}|u^p⟩`.
    pub fn mode_at(&self, t: f64) -> Spinor {
        let e = C64::from_polar(1.0, self.omega * t);
        self.u0 + self.u_plus * e + self.u_minus * e.conj()
    }

    /// Energy with the first-order shift, which is zero in both schemes.
    pub fn quasienergy(&self) -> f64 {
        self.base.energy
    }
}

fn guarded(denominator: f64, n: usize, m: usize, sign: i32) -> Result<f64> {
    if denominator.abs() < RESONANCE_TOL {
        Err(FloquetError::Resonance {
            n,
            m,
            sign,
            denominator,
        })
    } else {
        Ok(denominator)
    }
}

/// First-order extended-space modes for a general drive `(H0, V)`.
pub fn first_order_from_drive(
    h0: &Mat2,
    v: &Mat2,
    omega: f64,
    k: f64,
    terms: SidebandTerms,
) -> Result<[FirstOrderMode; 2]> {
    let sys = eigensystem_of(h0, k)?;
    let vd = v.adjoint();
    let mode = |n: usize| -> Result<FirstOrderMode> {
        let nu_n = sys.pairs[n];
        let mut u_plus = Spinor::zeros();
        let mut u_minus = Spinor::zeros();
        for m in 0..2 {
            if m == n && terms == SidebandTerms::OffDiagonal {
                continue;
            }
            let nu_m = sys.pairs[m];
            let delta = nu_n.energy - nu_m.energy;
            let dp = guarded(delta - omega, n, m, 1)?;
            let dm = guarded(delta + omega, n, m, -1)?;
            u_plus += nu_m.state * (braket(&nu_m.state, &(v * nu_n.state)) / dp);
            u_minus += nu_m.state * (braket(&nu_m.state, &(vd * nu_n.state)) / dm);
        }
        Ok(FirstOrderMode {
            base: nu_n,
            u0: nu_n.state,
            u_plus,
            u_minus,
            scheme: Scheme::ExtendedSpace,
            omega,
        })
    };
    Ok([mode(0)?, mode(1)?])
}

/// First-order Floquet-Magnus modes for a general drive. The stationary
/// state `|n⟩ = |ν_n⟩ + (1/ω)Σ_{m≠n}|ν_m⟩⟨ν_m|V†−V|ν_n⟩` is dressed by the
/// first-order kick `1 − iK_F(t)`, so `Σ_p u^p = |n⟩` and the sidebands are
/// `∓V^{(†)}|ν_n⟩/ω`.
pub fn magnus_from_drive(h0: &Mat2, v: &Mat2, omega: f64, k: f64) -> Result<[FirstOrderMode; 2]> {
    if omega.abs() < RESONANCE_TOL {
        return Err(FloquetError::InvalidArgument(format!("omega = {omega} too small for the high-frequency expansion")));
    }
    let sys = eigensystem_of(h0, k)?;
    let vd = v.adjoint();
    let w = vd - v;
    let mode = |n: usize| {
        let nu = sys.pairs[n];
        let m = 1 - n;
        let nu_m = sys.pairs[m];
        let stationary = nu.state + nu_m.state * (braket(&nu_m.state, &(w * nu.state)) / omega);
        let u_plus = -(v * nu.state) / C64::new(omega, 0.0);
        let u_minus = (vd * nu.state) / C64::new(omega, 0.0);
        FirstOrderMode {
            base: nu,
            u0: stationary - u_plus - u_minus,
            u_plus,
            u_minus,
            scheme: Scheme::FloquetMagnus,
            omega,
        }
    };
    Ok([mode(0), mode(1)])
}

fn eigensystem_of(h0: &Mat2, k: f64) -> Result<crate::model::StaticEigensystem> {
    let p = crate::linalg::Pauli::from_matrix(h0);
    let e = crate::linalg::eigh(&p);
    let pair = |j: usize| StaticEigenpair {
        energy: e.values[j],
        state: crate::model::fix_gauge(e.vectors[j]),
    };
    let sys = crate::model::StaticEigensystem {
        pairs: [pair(0), pair(1)],
        degenerate: e.half_gap < crate::model::DEGENERACY_TOL,
    };
    sys.require_gapped(k)?;
    Ok(sys)
}

pub fn first_order_extended(params: &ModelParams, k: f64, terms: SidebandTerms) -> Result<[FirstOrderMode; 2]> {
    let d = drive_fourier_components(params, k);
    first_order_from_drive(&d.h0, &d.h_plus, params.omega, k, terms)
}

pub fn first_order_magnus(params: &ModelParams, k: f64) -> Result<[FirstOrderMode; 2]> {
    let d = drive_fourier_components(params, k);
    magnus_from_drive(&d.h0, &d.h_plus, params.omega, k)
}

/// `|n⟩ / ⟨ν_n|n⟩`, the normalization under which the extended-space state
/// takes the Floquet-Magnus form.
pub fn renormalized_state(mode: &FirstOrderMode) -> Spinor {
    let s = mode.state();
    s / braket(&mode.base.state, &s)
}

/// Largest deviation of `Σ_p ⟨u_m^p|u_n^{p+q}⟩` from `δ_mn δ_q0` over both
/// bands and `|q| ≤ 2`.
pub fn orthogonality_deficit(modes: &[FirstOrderMode; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..2 {
        for n in 0..2 {
            for q in -2i64..=2 {
                let s: C64 = (-1i64..=1)
                    .map(|p| braket(&modes[m].component(p), &modes[n].component(p + q)))
                    .sum();
                let target = if m == n && q == 0 { 1.0 } else { 0.0 };
                worst = worst.max((s - C64::new(target, 0.0)).norm());
            }
        }
    }
    worst
}

/// Amplitudes and frequencies of `x(t) = Σ_j a_j [cos(Ω_j t) − 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComTerms {
    pub amplitudes: [f64; 3],
    /// `2ε₊⁰`, `2ε₊⁰ − ω`, `2ε₊⁰ + ω`, signed.
    pub frequencies: [f64; 3],
    pub lowfreq_index: usize,
}

impl ComTerms {
    /// First-order terms at `k = 0`, where `ε₊⁰ = J1 + J2`.
    pub fn first_order(params: &ModelParams) -> Result<Self> {
        let e = params.j1 + params.j2;
        let j2 = params.j2;
        let r = params.amp / params.omega;
        let two_e = guarded(2.0 * e, 1, 0, 0)?;
        let lo = guarded(2.0 * e - params.omega, 1, 0, 1)?;
        let hi = guarded(2.0 * e + params.omega, 1, 0, -1)?;
        let frequencies = [two_e, lo, hi];
        let lowfreq_index = (0..3)
            .min_by(|&a, &b| frequencies[a].abs().total_cmp(&frequencies[b].abs()))
            .unwrap();
        Ok(Self {
            amplitudes: [j2 / two_e, -r * j2 / lo, r * j2 / hi],
            frequencies,
            lowfreq_index,
        })
    }

    pub fn position(&self, t: f64) -> f64 {
        (0..3).map(|j| self.term(j, t)).sum()
    }

    pub fn term(&self, j: usize, t: f64) -> f64 {
        self.amplitudes[j] * ((self.frequencies[j] * t).cos() - 1.0)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        (0..3)
            .map(|j| -self.amplitudes[j] * self.frequencies[j] * (self.frequencies[j] * t).sin())
            .sum()
    }

    pub fn low_frequency(&self, t: f64) -> f64 {
        self.term(self.lowfreq_index, t)
    }

    /// Index of the largest-magnitude amplitude.
    pub fn dominant_index(&self) -> usize {
        (0..3)
            .max_by(|&a, &b| self.amplitudes[a].abs().total_cmp(&self.amplitudes[b].abs()))
            .unwrap()
    }
}

pub fn com_first_order(params: &ModelParams, t: f64) -> Result<(f64, ComTerms)> {
    let terms = ComTerms::first_order(params)?;
    Ok((terms.position(t), terms))
}

/// Closed-form velocity `−J2 sin(2εt) − (2AJ2/ω) cos(2εt) sin(ωt)`.
pub fn com_velocity(params: &ModelParams, t: f64) -> f64 {
    let two_e = 2.0 * (params.j1 + params.j2);
    -params.j2 * (two_e * t).sin()
        - 2.0 * params.amp * params.j2 / params.omega * (two_e * t).cos() * (params.omega * t).sin()
}

/// The term oscillating at `2ε₊⁰ − ω`.
pub fn com_low_frequency(params: &ModelParams, t: f64) -> Result<f64> {
    let terms = ComTerms::first_order(params)?;
    Ok(terms.term(1, t))
}

/// Centre of mass of an infinitely wide packet at `k` built from first-order
/// modes, `x(t) = ∫₀ᵗ ⟨ψ|v̂|ψ⟩`, keeping only terms linear in the drive.
/// The packet starts in `spinor` with weights `c_n = ⟨ν_n|spinor⟩`.
pub fn com_from_modes(params: &ModelParams, k: f64, modes: &[FirstOrderMode; 2], spinor: &Spinor, t: f64) -> f64 {
    let v = velocity_operator(params, k).matrix();
    let omega = params.omega;
    let mut x = C64::new(0.0, 0.0);
    for a in &[0usize, 1] {
        for b in &[0usize, 1] {
            let ca = braket(&modes[*a].base.state, spinor);
            let cb = braket(&modes[*b].base.state, spinor);
            for q in -1i64..=1 {
                for p in -1i64..=1 {
                    if p != 0 && q != 0 {
                        continue;
                    }
                    let bra = modes[*a].component(q);
                    let ket = modes[*b].component(p);
                    let coef = ca.conj() * cb * braket(&bra, &(v * ket));
                    // phase e^{i(ε_a − qω − ε_b + pω)t}
                    let freq = modes[*a].quasienergy() - q as f64 * omega - modes[*b].quasienergy() + p as f64 * omega;
                    x += if freq.abs() < 1e-12 {
                        coef * t
                    } else {
                        coef * (C64::from_polar(1.0, freq * t) - 1.0) / C64::new(0.0, freq)
                    };
                }
            }
        }
    }
    x.re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergResidual {
    pub position_element: [f64; 2],
    pub velocity_element: [f64; 2],
    pub residual: f64,
}

fn central_difference_step() -> f64 {
    1e-3
}

fn aligned(reference: &[Spinor], v: Vec<Spinor>) -> Vec<Spinor> {
    let ov: C64 = reference.iter().zip(&v).map(|(a, b)| braket(a, b)).sum();
    let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
    v.into_iter().map(|s| s * phase).collect()
}

/// Both sides of `⟨m q|x̂|n p⟩ = ⟨m q|i ∂_k H|n p⟩ / (ε_{np} − ε_{mq})` for
/// extended eigenvectors at truncation `P`; `x̂ = i∂_k` is applied by a
/// four-point difference in a parallel-transported gauge.
pub fn heisenberg_identity_check(
    params: &ModelParams,
    k: f64,
    truncation: usize,
    (m, q): (usize, i64),
    (n, p): (usize, i64),
) -> Result<HeisenbergResidual> {
    let at = |kk: f64| quasienergies(params, kk, truncation);
    let centre = at(k)?;
    let e_m = centre[m].quasienergy - q as f64 * params.omega;
    let e_n = centre[n].quasienergy - p as f64 * params.omega;
    let denom = e_n - e_m;
    if denom.abs() < RESONANCE_TOL {
        return Err(FloquetError::Resonance {
            n,
            m,
            sign: (p - q) as i32,
            denominator: denom,
        });
    }
    let bra = centre[m].replica_components(q);
    let ket0 = centre[n].replica_components(p);

    let h = central_difference_step();
    let shifted = |j: f64| -> Result<Vec<Spinor>> {
        let pairs = at(k + j * h)?;
        Ok(aligned(&ket0, tracked(&pairs, &centre[n], params.omega, p)))
    };
    let (km2, km1, kp1, kp2) = (shifted(-2.0)?, shifted(-1.0)?, shifted(1.0)?, shifted(2.0)?);
    let mut lhs = C64::new(0.0, 0.0);
    for s in 0..bra.len() {
        let d = (km2[s] - kp2[s] + (kp1[s] - km1[s]).scale(8.0)).unscale(12.0 * h);
        lhs += braket(&bra[s], &d) * crate::linalg::I;
    }
    let dv = velocity_operator(params, k).matrix();
    let mut rhs = C64::new(0.0, 0.0);
    for s in 0..bra.len() {
        rhs += braket(&bra[s], &(dv * ket0[s]));
    }
    rhs *= crate::linalg::I / denom;
    Ok(HeisenbergResidual {
        position_element: [lhs.re, lhs.im],
        velocity_element: [rhs.re, rhs.im],
        residual: (lhs - rhs).norm(),
    })
}

/// Replica `p` of the band at a neighbouring momentum that continues `band`.
fn tracked(pairs: &[ExtendedEigenpair; 2], band: &ExtendedEigenpair, omega: f64, p: i64) -> Vec<Spinor> {
    let d = |x: &ExtendedEigenpair| crate::extended::quasienergy_distance(x.quasienergy, band.quasienergy, omega);
    let pick = if d(&pairs[0]) <= d(&pairs[1]) { &pairs[0] } else { &pairs[1] };
    // keep the same unfolded branch if the neighbour crossed the window edge
    let shift = ((pick.quasienergy - band.quasienergy) / omega).round() as i64;
    pick.replica_components(p + shift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::static_eigensystem;
    use crate::extended::quasienergies;
    use crate::linalg::sigma_x;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(amp: f64, omega: f64) -> ModelParams {
        ModelParams::new(1.0, 1.5, amp, omega).unwrap()
    }

    fn slope(xs: &[f64], ys: &[f64]) -> f64 {
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let n = xs.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        num / den
    }

    #[test]
    fn zero_drive_has_no_sidebands() {
        for terms in [SidebandTerms::OffDiagonal, SidebandTerms::Complete] {
            let m = first_order_extended(&params(0.0, 5.5), 0.3, terms).unwrap();
            for mode in &m {
                assert_eq!(mode.u_plus, Spinor::zeros());
                assert_eq!(mode.u_minus, Spinor::zeros());
                assert_eq!(mode.u0, mode.base.state);
            }
        }
    }

    #[test]
    fn drive_is_diagonal_at_band_inversion_point() {
        let p = params(1.0, 5.5);
        let sys = static_eigensystem(&p, 0.0);
        let v = sigma_x() * C64::new(0.5, 0.0);
        let lower = sys.lower().state;
        let upper = sys.upper().state;
        assert!(braket(&lower, &(v * upper)).norm() < 1e-15);
        assert!((braket(&upper, &(v * upper)).re - 0.5).abs() < 1e-15);
        assert!((braket(&lower, &(v * lower)).re + 0.5).abs() < 1e-15);
        // only the diagonal terms survive
        let off = first_order_extended(&p, 0.0, SidebandTerms::OffDiagonal).unwrap();
        assert!(off.iter().all(|m| m.u_plus.norm() < 1e-15 && m.u_minus.norm() < 1e-15));
    }

    #[test]
    fn complete_terms_give_micromotion_phase() {
        let p = params(1.0, 5.5);
        let modes = first_order_extended(&p, 0.0, SidebandTerms::Complete).unwrap();
        let r = p.amp / p.omega;
        for t in [0.1, 0.7, 2.3] {
            for (n, sign) in [(1usize, -1.0), (0usize, 1.0)] {
                let u = modes[n].mode_at(t);
                let expect = modes[n].base.state * C64::new(1.0, sign * r * (p.omega * t).sin());
                assert!((u - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn resonance_is_rejected() {
        // 2(J1+J2) = 5
        let err = first_order_extended(&params(1.0, 5.0), 0.0, SidebandTerms::OffDiagonal).unwrap_err();
        assert!(matches!(err, FloquetError::Resonance { .. }));
        assert!(ComTerms::first_order(&params(1.0, 5.0)).is_err());
    }

    #[test]
    fn degenerate_static_point_is_rejected() {
        let p = ModelParams::new(1.0, 1.0, 0.5, 5.5).unwrap();
        assert!(matches!(
            first_order_extended(&p, PI, SidebandTerms::Complete),
            Err(FloquetError::Degenerate { .. })
        ));
    }

    fn overlap_deficits(k: f64, extended_vector: bool) -> Vec<f64> {
        [0.05, 0.1, 0.2]
            .iter()
            .map(|&a| {
                let p = params(a, 5.5);
                let exact = &quasienergies(&p, k, 12).unwrap()[1];
                let approx = &first_order_extended(&p, k, SidebandTerms::Complete).unwrap()[1];
                let ov = if extended_vector {
                    (-1i64..=1)
                        .map(|q| braket(&exact.principal_component(q), &approx.component(q)))
                        .sum::<C64>()
                } else {
                    let e = exact.physical_state();
                    braket(&e.unscale(e.norm()), &approx.state())
                };
                (ov.norm() - 1.0).abs()
            })
            .collect()
    }

    #[test]
    fn overlap_with_exact_mode_deficit_is_quadratic() {
        let amps = [0.05, 0.1, 0.2];
        // at k = 0 the assembled state is exactly |ν_n⟩, so compare sideband stacks
        let d = overlap_deficits(0.0, true);
        assert!((slope(&amps, &d) - 2.0).abs() < 0.2, "{d:?}");
        let d = overlap_deficits(0.7, false);
        assert!((slope(&amps, &d) - 2.0).abs() < 0.2, "{d:?}");
        assert!(overlap_deficits(0.0, false).iter().all(|&x| x < 1e-12));
    }

    #[test]
    fn orthogonality_deficit_is_quadratic() {
        for (k, terms) in [(0.7, SidebandTerms::OffDiagonal), (0.7, SidebandTerms::Complete), (0.0, SidebandTerms::Complete)] {
            let amps = [0.05, 0.1, 0.2];
            let d: Vec<f64> = amps
                .iter()
                .map(|&a| orthogonality_deficit(&first_order_extended(&params(a, 5.5), k, terms).unwrap()))
                .collect();
            let sl = slope(&amps, &d);
            assert!((sl - 2.0).abs() < 0.2, "k={k} {terms:?}: slope {sl}");
        }
    }

    #[test]
    fn magnus_state_for_hermitian_drive() {
        let p = params(0.5, 40.0);
        let fm = first_order_magnus(&p, 0.7).unwrap();
        for mode in &fm {
            assert!((mode.state() - mode.base.state).norm() < 1e-15);
        }
        // renormalized extended-space state approaches the same form
        let eh = first_order_extended(&p, 0.7, SidebandTerms::OffDiagonal).unwrap();
        for n in 0..2 {
            let d = (renormalized_state(&eh[n]) - fm[n].state()).norm();
            assert!(d < 1e-3, "{d}");
        }
    }

    #[test]
    fn magnus_and_extended_converge_at_high_frequency() {
        let omegas = [10.0, 20.0, 40.0];
        for terms in [SidebandTerms::OffDiagonal, SidebandTerms::Complete] {
            let d: Vec<f64> = omegas
                .iter()
                .map(|&w| {
                    let p = params(0.5, w);
                    let eh = first_order_extended(&p, 0.7, terms).unwrap();
                    let fm = first_order_magnus(&p, 0.7).unwrap();
                    (renormalized_state(&eh[1]) - fm[1].state()).norm()
                })
                .collect();
            assert!(slope(&omegas, &d) < -1.9, "{terms:?}: {d:?}");
        }
    }

    #[test]
    fn non_hermitian_drive_matches_magnus_to_first_order() {
        let h0 = crate::linalg::Pauli::new(0.0, 0.8, -0.4, 0.3).to_matrix();
        let v = Mat2::new(C64::new(0.1, 0.2), C64::new(0.3, -0.1), C64::new(-0.2, 0.0), C64::new(0.05, 0.1));
        let omegas = [10.0, 20.0, 40.0];
        let d: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                let eh = first_order_from_drive(&h0, &v, w, 0.0, SidebandTerms::Complete).unwrap();
                let fm = magnus_from_drive(&h0, &v, w, 0.0).unwrap();
                let sb = (eh[0].u_plus - fm[0].u_plus).norm() + (eh[0].u_minus - fm[0].u_minus).norm();
                (renormalized_state(&eh[0]) - fm[0].state()).norm() + sb
            })
            .collect();
        let sl = slope(&omegas, &d);
        assert!(sl < -1.9, "slope {sl} {d:?}");
    }

    #[test]
    fn com_terms_values() {
        let t = ComTerms::first_order(&params(1.0, 5.5)).unwrap();
        assert!((t.amplitudes[0] - 0.3).abs() < 1e-15);
        assert!((t.amplitudes[1] - 1.5 / 2.75).abs() < 1e-14);
        assert!((t.amplitudes[1] - 0.5455).abs() < 1e-4);
        assert!((t.amplitudes[2] - 0.025974).abs() < 1e-6);
        assert_eq!(t.frequencies, [5.0, -0.5, 10.5]);
        assert_eq!(t.lowfreq_index, 1);
        assert_eq!(t.position(0.0), 0.0);
        let lf = com_low_frequency(&params(1.0, 5.5), 2.0 * PI).unwrap();
        assert!((lf - 0.5455 * ((PI).cos() - 1.0)).abs() < 1e-3);
    }

    #[test]
    fn low_frequency_is_linear_in_amplitude_and_flips() {
        let a1 = com_low_frequency(&params(1.0, 5.5), 3.0).unwrap();
        let a3 = com_low_frequency(&params(3.0, 5.5), 3.0).unwrap();
        assert!((a3 - 3.0 * a1).abs() < 1e-12);
        let below = ComTerms::first_order(&params(1.0, 4.5)).unwrap();
        let above = ComTerms::first_order(&params(1.0, 5.5)).unwrap();
        assert!(below.amplitudes[1] * above.amplitudes[1] < 0.0);
    }

    #[test]
    fn static_limit_is_plain_zitterbewegung() {
        let t = ComTerms::first_order(&params(0.0, 5.5)).unwrap();
        for s in [0.3, 1.0, 7.0] {
            assert_eq!(t.position(s), 0.3 * ((5.0 * s).cos() - 1.0));
        }
    }

    #[test]
    fn velocity_closed_form_and_difference() {
        let p = params(1.0, 5.5);
        let t = ComTerms::first_order(&p).unwrap();
        let h = 1e-5;
        for s in [0.0, 0.4, 3.3, 12.0] {
            assert!((t.velocity(s) - com_velocity(&p, s)).abs() < 1e-12);
            let fd = (t.position(s + h) - t.position(s - h)) / (2.0 * h);
            assert!((fd - com_velocity(&p, s)).abs() < 1e-8);
        }
    }

    #[test]
    fn com_from_complete_modes_matches_formula() {
        let p = params(1.0, 5.5);
        let spinor = Spinor::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let modes = first_order_extended(&p, 0.0, SidebandTerms::Complete).unwrap();
        let terms = ComTerms::first_order(&p).unwrap();
        for t in [0.0, 0.5, 3.0, 11.0, 25.0] {
            let x = com_from_modes(&p, 0.0, &modes, &spinor, t);
            assert!((x - terms.position(t)).abs() < 1e-12, "t={t}: {x} vs {}", terms.position(t));
        }
        // without the diagonal terms only the static oscillation remains
        let off = first_order_extended(&p, 0.0, SidebandTerms::OffDiagonal).unwrap();
        let x = com_from_modes(&p, 0.0, &off, &spinor, 3.0);
        assert!((x - 0.3 * ((15.0f64).cos() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn first_order_norm_is_preserved_to_first_order() {
        let amps = [0.05, 0.1, 0.2];
        let d: Vec<f64> = amps
            .iter()
            .map(|&a| {
                let p = params(a, 5.5);
                let modes = first_order_extended(&p, 0.7, SidebandTerms::Complete).unwrap();
                (0..20)
                    .map(|j| {
                        let t = 0.37 * j as f64;
                        let psi = modes[0].mode_at(t) * C64::from_polar(0.6, -modes[0].quasienergy() * t)
                            + modes[1].mode_at(t) * C64::from_polar(0.8, -modes[1].quasienergy() * t);
                        (psi.norm_squared() - 1.0).abs()
                    })
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!((slope(&amps, &d) - 2.0).abs() < 0.2, "{d:?}");
    }

    #[test]
    fn heisenberg_static_and_driven() {
        let r = heisenberg_identity_check(&params(0.0, 5.5), 0.4, 6, (0, 0), (1, 0)).unwrap();
        assert!(r.residual < 1e-10, "{r:?}");
        let r = heisenberg_identity_check(&params(1.0, 5.5), 0.0, 12, (0, 0), (1, 0)).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
        let r = heisenberg_identity_check(&params(1.0, 5.5), 0.9, 12, (0, 1), (1, 0)).unwrap();
        assert!(r.residual < 1e-8, "{r:?}");
        assert!(heisenberg_identity_check(&params(1.0, 5.5), 0.9, 12, (1, 0), (1, 0)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn smaller_detuning_gives_larger_sideband_amplitude(amp in 0.1..3.0f64, omega in 0.5..20.0f64) {
            let t = match ComTerms::first_order(&params(amp, omega)) {
                Ok(t) => t,
                Err(_) => return Ok(()),
            };
            // both drive-induced terms share the prefactor A·J2/ω
            prop_assert!(t.amplitudes[1].abs() >= t.amplitudes[2].abs());
            prop_assert_eq!(t.amplitudes[1].abs() > t.amplitudes[0].abs(), amp / omega * 5.0 > (5.0 - omega).abs());
            if t.amplitudes[1].abs() > t.amplitudes[0].abs() {
                prop_assert_eq!(t.dominant_index(), t.lowfreq_index);
            }
        }

        #[test]
        fn every_denominator_is_guarded(omega in 4.9999..5.0001f64) {
            let p = params(1.0, omega);
            let r = ComTerms::first_order(&p);
            if (5.0 - omega).abs() < RESONANCE_TOL {
                prop_assert!(r.is_err());
            } else {
                prop_assert!(r.unwrap().amplitudes.iter().all(|a| a.is_finite()));
            }
        }
    }
}
