//! The harmonically driven SSH chain.
//!
//! Intra-cell hopping `J1(t) = J1 + A cos(ωt)` couples A and B of the same
//! cell; the static inter-cell hopping `J2` couples A of cell `i` to B of cell
//! `i - 1`. With Bloch amplitudes `ψ_i = L^{-1/2} Σ_k e^{iki} φ(k)` this gives
//!
//! ```text
//! h(k, t) = [J1 + A cos(ωt) + J2 cos k] σx + J2 sin k σy
//! ```
//!
//! Both sublattices of cell `i` sit at position `i`, so the velocity operator
//! is `∂h/∂k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FloquetError, Result};
use crate::linalg::{eigh, Mat2, Pauli, Spinor, C64};

/// |d(k)| below which the static bands are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub j1: f64,
    pub j2: f64,
    pub amp: f64,
    pub omega: f64,
    pub period: f64,
}

impl ModelParams {
    pub fn new(j1: f64, j2: f64, amp: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("j1", j1), ("j2", j2), ("amp", amp), ("omega", omega)] {
            if !v.is_finite() {
                return Err(FloquetError::InvalidArgument(format!("{name} must be finite, got {v}")));
            }
        }
        if omega <= 0.0 {
            return Err(FloquetError::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        Ok(Self {
            j1,
            j2,
            amp,
            omega,
            period: 2.0 * PI / omega,
        })
    }

    pub fn with_amp(&self, amp: f64) -> Result<Self> {
        Self::new(self.j1, self.j2, amp, self.omega)
    }

    pub fn with_omega(&self, omega: f64) -> Result<Self> {
        Self::new(self.j1, self.j2, self.amp, omega)
    }

    /// Flat `key=value` block, one parameter per line.
    pub fn to_config_block(&self) -> String {
        format!(
            "j1={:?}\nj2={:?}\namp={:?}\nomega={:?}\n",
            self.j1, self.j2, self.amp, self.omega
        )
    }

    /// Parse a block written by [`ModelParams::to_config_block`]. Blank lines
    /// and `#` comments are ignored; any other key is an error.
    pub fn from_config_block(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 4] = [None; 4];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                FloquetError::InvalidArgument(format!("line {}: expected key=value", lineno + 1))
            })?;
            let slot = match key.trim() {
                "j1" => 0,
                "j2" => 1,
                "amp" => 2,
                "omega" => 3,
                other => {
                    return Err(FloquetError::InvalidArgument(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            };
            let v: f64 = value.trim().parse().map_err(|_| {
                FloquetError::InvalidArgument(format!("line {}: bad number '{}'", lineno + 1, value.trim()))
            })?;
            vals[slot] = Some(v);
        }
        let get = |i: usize, name: &str| {
            vals[i].ok_or_else(|| FloquetError::InvalidArgument(format!("missing key '{name}'")))
        };
        Self::new(get(0, "j1")?, get(1, "j2")?, get(2, "amp")?, get(3, "omega")?)
    }
}

/// A 2×2 Hermitian Bloch matrix stored through its Pauli coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochOperator {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl BlochOperator {
    pub fn pauli(&self) -> Pauli {
        Pauli::new(0.0, self.dx, self.dy, self.dz)
    }

    pub fn matrix(&self) -> Mat2 {
        self.pauli().to_matrix()
    }

    pub fn norm(&self) -> f64 {
        self.pauli().norm()
    }
}

pub fn bloch_hamiltonian(params: &ModelParams, k: f64, t: f64) -> BlochOperator {
    BlochOperator {
        dx: params.j1 + params.amp * (params.omega * t).cos() + params.j2 * k.cos(),
        dy: params.j2 * k.sin(),
        dz: 0.0,
    }
}

/// Undriven Bloch Hamiltonian, the zeroth Fourier component of `h(k, t)`.
pub fn static_hamiltonian(params: &ModelParams, k: f64) -> BlochOperator {
    BlochOperator {
        dx: params.j1 + params.j2 * k.cos(),
        dy: params.j2 * k.sin(),
        dz: 0.0,
    }
}

/// Fourier components `H_p` of `h(k, t) = Σ_p H_p e^{ipωt}`. Only
/// `p ∈ {-1, 0, 1}` are non-zero for the cosine drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveFourier {
    pub h0: Mat2,
    /// `H_{+1}`, the operator `V` multiplying `e^{iωt}`.
    pub h_plus: Mat2,
    /// `H_{-1} = V†`.
    pub h_minus: Mat2,
}

impl DriveFourier {
    pub fn component(&self, p: i64) -> Mat2 {
        match p {
            0 => self.h0,
            1 => self.h_plus,
            -1 => self.h_minus,
            _ => Mat2::zeros(),
        }
    }

    /// Reassemble `h(t)` from the components.
    pub fn evaluate(&self, omega: f64, t: f64) -> Mat2 {
        let e = C64::from_polar(1.0, omega * t);
        self.h0 + self.h_plus * e + self.h_minus * e.conj()
    }

    /// The nonzero sideband orders.
    pub fn sidebands(&self) -> [(i64, Mat2); 2] {
        [(1, self.h_plus), (-1, self.h_minus)]
    }
}

pub fn drive_fourier_components(params: &ModelParams, k: f64) -> DriveFourier {
    let v = Pauli::new(0.0, 0.5 * params.amp, 0.0, 0.0).to_matrix();
    DriveFourier {
        h0: static_hamiltonian(params, k).matrix(),
        h_plus: v,
        h_minus: v.adjoint(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticEigenpair {
    pub energy: f64,
    pub state: Spinor,
}

#[derive(Debug, Clone, Copy)]
pub struct StaticEigensystem {
    /// Ascending in energy.
    pub pairs: [StaticEigenpair; 2],
    pub degenerate: bool,
}

impl StaticEigensystem {
    pub fn lower(&self) -> &StaticEigenpair {
        &self.pairs[0]
    }

    pub fn upper(&self) -> &StaticEigenpair {
        &self.pairs[1]
    }

    /// Error out when the gap is closed.
    pub fn require_gapped(&self, k: f64) -> Result<&Self> {
        if self.degenerate {
            Err(FloquetError::Degenerate {
                k,
                norm: 0.5 * (self.pairs[1].energy - self.pairs[0].energy),
            })
        } else {
            Ok(self)
        }
    }
}

/// Gauge: first component real and non-negative, or the second when the
/// first vanishes.
pub(crate) fn fix_gauge(v: Spinor) -> Spinor {
    let pivot = if v[0].norm() > 1e-12 { v[0] } else { v[1] };
    if pivot.norm() == 0.0 {
        return v;
    }
    v * (pivot.conj() / pivot.norm())
}

pub fn static_eigensystem(params: &ModelParams, k: f64) -> StaticEigensystem {
    let h = static_hamiltonian(params, k).pauli();
    let e = eigh(&h);
    StaticEigensystem {
        pairs: [
            StaticEigenpair {
                energy: e.values[0],
                state: fix_gauge(e.vectors[0]),
            },
            StaticEigenpair {
                energy: e.values[1],
                state: fix_gauge(e.vectors[1]),
            },
        ],
        degenerate: e.half_gap < DEGENERACY_TOL,
    }
}

/// `∂h/∂k = -J2 sin k σx + J2 cos k σy`.
pub fn velocity_operator(params: &ModelParams, k: f64) -> BlochOperator {
    BlochOperator {
        dx: -params.j2 * k.sin(),
        dy: params.j2 * k.cos(),
        dz: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{fro, hermiticity_defect, sigma_x, sigma_y, sigma_z};
    use proptest::prelude::*;

    fn fig2() -> ModelParams {
        ModelParams::new(1.0, 1.5, 1.0, 5.5).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let p = fig2();
        let h = bloch_hamiltonian(&p, 0.0, 0.0);
        assert_eq!((h.dx, h.dy, h.dz), (3.5, 0.0, 0.0));
        let h = bloch_hamiltonian(&p, PI, 0.0);
        assert!((h.dx - 0.5).abs() < 1e-15 && h.dy.abs() < 1e-15);
        let h = bloch_hamiltonian(&p, PI / 2.0, p.period / 2.0);
        assert!(h.dx.abs() < 1e-15 && (h.dy - 1.5).abs() < 1e-15);
    }

    #[test]
    fn period_matches_frequency() {
        let p = fig2();
        assert!((p.period * p.omega - 2.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(1.0, 1.5, 1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 1.5, 1.0, -2.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.5, 1.0, 2.0).is_err());
        assert!(ModelParams::new(1.0, 1.5, f64::INFINITY, 2.0).is_err());
    }

    #[test]
    fn drive_components() {
        for (amp, expect) in [(1.0, 0.5), (0.0, 0.0), (3.0, 1.5)] {
            let p = ModelParams::new(1.0, 1.5, amp, 5.5).unwrap();
            let f = drive_fourier_components(&p, 0.3);
            assert!(fro(&(f.h_plus - sigma_x() * C64::new(expect, 0.0))) < 1e-15);
            assert_eq!(f.h_plus, f.h_minus);
            assert_eq!(f.component(2), Mat2::zeros());
            assert_eq!(f.component(-3), Mat2::zeros());
        }
        let p = ModelParams::new(1.0, 1.5, 0.0, 5.5).unwrap();
        let f = drive_fourier_components(&p, 0.3);
        assert_eq!(f.h0, bloch_hamiltonian(&p, 0.3, 0.0).matrix());
    }

    #[test]
    fn static_eigensystem_examples() {
        let p = fig2();
        let s = static_eigensystem(&p, 0.0);
        assert!((s.lower().energy + 2.5).abs() < 1e-14 && (s.upper().energy - 2.5).abs() < 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let minus = Spinor::new(C64::new(r, 0.0), C64::new(-r, 0.0));
        let plus = Spinor::new(C64::new(r, 0.0), C64::new(r, 0.0));
        assert!((s.lower().state - minus).norm() < 1e-15);
        assert!((s.upper().state - plus).norm() < 1e-15);

        let s = static_eigensystem(&p, PI);
        assert!((s.upper().energy - 0.5).abs() < 1e-14);
        // 1.118033988749895 = sqrt(1.5^2 - 1), evaluated independently
        let s = static_eigensystem(&p, (-1.0f64 / 1.5).acos());
        assert!((s.upper().energy - 1.118033988749895).abs() < 1e-14);
        assert!((s.lower().energy + 1.118033988749895).abs() < 1e-14);
        assert!(!s.degenerate);
    }

    #[test]
    fn static_eigensystem_flags_closure() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 5.5).unwrap();
        let s = static_eigensystem(&p, PI);
        assert!(s.degenerate);
        assert!(s.require_gapped(PI).is_err());
        let overlap = s.lower().state.dotc(&s.upper().state).norm();
        assert!(overlap < 1e-15);
    }

    #[test]
    fn velocity_examples() {
        let p = fig2();
        let v = velocity_operator(&p, 0.0).matrix();
        assert!(fro(&(v - sigma_y() * C64::new(1.5, 0.0))) < 1e-15);
        let v = velocity_operator(&p, PI / 2.0).matrix();
        assert!(fro(&(v + sigma_x() * C64::new(1.5, 0.0))) < 1e-15);
        let v = velocity_operator(&p, PI).matrix();
        assert!(fro(&(v + sigma_y() * C64::new(1.5, 0.0))) < 1e-15);
    }

    #[test]
    fn velocity_is_central_difference_limit() {
        let p = fig2();
        let k = 0.83;
        let err = |delta: f64| {
            let fd = (bloch_hamiltonian(&p, k + delta, 0.4).matrix()
                - bloch_hamiltonian(&p, k - delta, 0.4).matrix())
                / C64::new(2.0 * delta, 0.0);
            fro(&(fd - velocity_operator(&p, k).matrix()))
        };
        let (e1, e2) = (err(1e-2), err(5e-3));
        let slope = (e1 / e2).log2();
        assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn config_block_round_trip() {
        let p = ModelParams::new(1.0, 1.5, 0.1, 5.5).unwrap();
        let q = ModelParams::from_config_block(&p.to_config_block()).unwrap();
        assert_eq!(p, q);
        assert!(ModelParams::from_config_block("j1=1\nj2=1.5\namp=1\nomega=2\nfoo=3").is_err());
        assert!(ModelParams::from_config_block("j1=1\nj2=1.5\namp=1").is_err());
        assert!(ModelParams::from_config_block("j1=1\nj2=x\namp=1\nomega=2").is_err());
    }

    proptest! {
        #[test]
        fn hamiltonian_symmetries(k in -PI..PI, t in 0.0..10.0f64, amp in -3.0..3.0f64, omega in 0.5..20.0f64) {
            let p = ModelParams::new(1.0, 1.5, amp, omega).unwrap();
            let h = bloch_hamiltonian(&p, k, t).matrix();
            prop_assert!(hermiticity_defect(&h) < 1e-14);
            prop_assert!((h[(0, 0)] + h[(1, 1)]).norm() < 1e-14);
            prop_assert!(fro(&(sigma_z() * h * sigma_z() + h)) < 1e-14);
            let parity = sigma_x() * h * sigma_x();
            prop_assert!(fro(&(parity - bloch_hamiltonian(&p, -k, t).matrix())) < 1e-14);
            let f = drive_fourier_components(&p, k);
            prop_assert!(fro(&(f.evaluate(p.omega, t) - h)) < 1e-13);
        }

        #[test]
        fn static_eigenpairs_are_accurate(k in -PI..PI, j2 in 0.1..3.0f64) {
            let p = ModelParams::new(1.0, j2, 0.0, 5.0).unwrap();
            let s = static_eigensystem(&p, k);
            let h = static_hamiltonian(&p, k).matrix();
            for e in s.pairs {
                let r = h * e.state - e.state * C64::new(e.energy, 0.0);
                prop_assert!(r.norm() < 1e-12);
                prop_assert!((e.state.norm() - 1.0).abs() < 1e-14);
            }
        }
    }
}
