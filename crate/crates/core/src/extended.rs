//! Truncated extended-space Hamiltonian and its Floquet modes.
//!
//! Sidebands `p ∈ [-P, P]` are stacked in ascending order; the 2×2 block in
//! row `q`, column `p` is `H_{q-p} + pω δ_{pq}`. An eigenvector with
//! eigenvalue `E` is the replica `|n q⟩` of a Floquet mode whose quasienergy
//! `ε_n = E + qω` lies in the principal window `(-ω/2, ω/2]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FloquetError, Result};
use crate::linalg::{Spinor, C64};
use crate::model::{drive_fourier_components, ModelParams};

pub const DEFAULT_TRUNCATION: usize = 10;
/// Eigenvectors with more weight than this in the outer two sidebands are
/// truncation artefacts.
pub const EDGE_WEIGHT_LIMIT: f64 = 0.01;
/// A third replica family whose central weight comes this close to the
/// second one makes the band assignment ambiguous.
pub const TIE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_DRIFT_TOLERANCE: f64 = 1e-10;
pub const MAX_TRUNCATION: usize = 80;

/// Fold a quasienergy into `(-ω/2, ω/2]`. Returns the folded value and the
/// integer `m` with `folded = e - mω`.
pub fn fold(e: f64, omega: f64) -> (f64, i64) {
    let m = ((e - 0.5 * omega) / omega).ceil();
    let mut folded = e - m * omega;
    let mut m = m as i64;
    // guard the closed end against rounding
    if folded <= -0.5 * omega {
        folded += omega;
        m -= 1;
    } else if folded > 0.5 * omega {
        folded -= omega;
        m += 1;
    }
    (folded, m)
}

/// Circular distance between two quasienergies modulo ω.
pub fn quasienergy_distance(a: f64, b: f64, omega: f64) -> f64 {
    fold(a - b, omega).0.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedHamiltonian {
    pub truncation: usize,
    pub dim: usize,
    pub omega: f64,
    pub matrix: DMatrix<C64>,
}

impl ExtendedHamiltonian {
    pub fn slot(&self, p: i64) -> usize {
        (p + self.truncation as i64) as usize
    }

    pub fn block(&self, q: i64, p: i64) -> crate::linalg::Mat2 {
        let (r, c) = (2 * self.slot(q), 2 * self.slot(p));
        crate::linalg::Mat2::new(
            self.matrix[(r, c)],
            self.matrix[(r, c + 1)],
            self.matrix[(r + 1, c)],
            self.matrix[(r + 1, c + 1)],
        )
    }

    /// All eigenpairs, eigenvalues ascending.
    pub fn diagonalize(&self) -> Vec<(f64, DVector<C64>)> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut out: Vec<(f64, DVector<C64>)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(j, &e)| (e, eig.eigenvectors.column(j).into_owned()))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

pub fn build_extended(params: &ModelParams, k: f64, truncation: usize) -> Result<ExtendedHamiltonian> {
    if truncation < 1 {
        return Err(FloquetError::InvalidArgument("truncation P must be at least 1".into()));
    }
    let drive = drive_fourier_components(params, k);
    let n = 2 * truncation + 1;
    let dim = 2 * n;
    let mut m = DMatrix::<C64>::zeros(dim, dim);
    let p_of = |s: usize| s as i64 - truncation as i64;
    for row in 0..n {
        for col in 0..n {
            let diff = p_of(row) - p_of(col);
            if diff.abs() > 1 {
                continue;
            }
            let mut b = drive.component(diff);
            if row == col {
                let shift = C64::new(p_of(col) as f64 * params.omega, 0.0);
                b[(0, 0)] += shift;
                b[(1, 1)] += shift;
            }
            for i in 0..2 {
                for j in 0..2 {
                    m[(2 * row + i, 2 * col + j)] = b[(i, j)];
                }
            }
        }
    }
    Ok(ExtendedHamiltonian {
        truncation,
        dim,
        omega: params.omega,
        matrix: m,
    })
}

/// A Floquet mode as a stack of Fourier spinors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedEigenpair {
    /// Folded into `(-ω/2, ω/2]`.
    pub quasienergy: f64,
    /// Raw eigenvalue of the selected replica, `quasienergy - replica_index·ω`.
    pub eigenvalue: f64,
    /// Spinors of the selected replica, sideband `-P` first.
    pub components: Vec<Spinor>,
    pub replica_index: i64,
    pub truncation: usize,
    pub omega: f64,
}

impl ExtendedEigenpair {
    fn from_vector(e: f64, v: &DVector<C64>, truncation: usize, omega: f64) -> Self {
        let (folded, m) = fold(e, omega);
        let components = (0..2 * truncation + 1)
            .map(|s| Spinor::new(v[2 * s], v[2 * s + 1]))
            .collect();
        Self {
            quasienergy: folded,
            eigenvalue: e,
            components,
            replica_index: -m,
            truncation,
            omega,
        }
    }

    fn slot(&self, p: i64) -> Option<usize> {
        let s = p + self.truncation as i64;
        (0..self.components.len() as i64).contains(&s).then_some(s as usize)
    }

    /// Spinor of the selected replica in sideband `p`.
    pub fn component(&self, p: i64) -> Spinor {
        self.slot(p).map(|s| self.components[s]).unwrap_or_else(Spinor::zeros)
    }

    /// `|u_n^p⟩` of the principal mode `|n 0⟩`, whose eigenvalue is the
    /// folded quasienergy.
    pub fn principal_component(&self, p: i64) -> Spinor {
        self.component(p - self.replica_index)
    }

    /// Components of the replica `|n q⟩`, eigenvalue `ε_n - qω`, in sideband
    /// order `-P..=P`.
    pub fn replica_components(&self, q: i64) -> Vec<Spinor> {
        let p_max = self.truncation as i64;
        (-p_max..=p_max).map(|p| self.principal_component(p + q)).collect()
    }

    /// `Σ_p ⟨u^p|u^p⟩`.
    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_squared()).sum()
    }

    pub fn weight(&self, p: i64) -> f64 {
        self.component(p).norm_squared()
    }

    /// Physical Floquet state at `t = 0`, `|n⟩ = Σ_p |u_n^p⟩`.
    pub fn physical_state(&self) -> Spinor {
        self.components.iter().fold(Spinor::zeros(), |acc, c| acc + c)
    }

    /// Multiply every component by the same phase.
    pub fn rephase(&mut self, phase: C64) {
        for c in &mut self.components {
            *c *= phase;
        }
    }
}

fn slot_weights(v: &DVector<C64>, truncation: usize) -> Vec<f64> {
    (0..2 * truncation + 1)
        .map(|s| v[2 * s].norm_sqr() + v[2 * s + 1].norm_sqr())
        .collect()
}

fn edge_weight(w: &[f64]) -> f64 {
    let n = w.len();
    if n < 4 {
        return w.iter().sum();
    }
    w[0] + w[1] + w[n - 2] + w[n - 1]
}

/// `|⟨shift_s(a)|b⟩|` where `shift_s(a)^p = a^{p+s}`.
fn shifted_overlap(a: &DVector<C64>, b: &DVector<C64>, shift: i64, truncation: usize) -> f64 {
    let n = (2 * truncation + 1) as i64;
    let mut acc = C64::new(0.0, 0.0);
    for s in 0..n {
        let src = s + shift;
        if !(0..n).contains(&src) {
            continue;
        }
        let (s, src) = (s as usize, src as usize);
        acc += a[2 * src].conj() * b[2 * s] + a[2 * src + 1].conj() * b[2 * s + 1];
    }
    acc.norm()
}

/// The two principal Floquet modes at `k`, ascending in quasienergy.
pub fn quasienergies(params: &ModelParams, k: f64, truncation: usize) -> Result<[ExtendedEigenpair; 2]> {
    let h = build_extended(params, k, truncation)?;
    principal_pairs(&h.diagonalize(), k, truncation, params.omega)
}

fn principal_pairs(
    eig: &[(f64, DVector<C64>)],
    k: f64,
    truncation: usize,
    omega: f64,
) -> Result<[ExtendedEigenpair; 2]> {
    struct Candidate<'a> {
        e: f64,
        v: &'a DVector<C64>,
        central: f64,
        q: i64,
    }
    let center = truncation;
    let mut cands: Vec<Candidate> = eig
        .iter()
        .filter_map(|(e, v)| {
            let w = slot_weights(v, truncation);
            (edge_weight(&w) <= EDGE_WEIGHT_LIMIT).then(|| Candidate {
                e: *e,
                v,
                central: w[center],
                q: -fold(*e, omega).1,
            })
        })
        .collect();
    cands.sort_by(|a, b| b.central.total_cmp(&a.central));

    let is_replica = |a: &Candidate, b: &Candidate| {
        let shift = ((a.e - b.e) / omega).round() as i64;
        quasienergy_distance(a.e, b.e, omega) < 1e-6 && shifted_overlap(a.v, b.v, shift, truncation) > 0.5
    };

    // group candidates into replica families, strongest central weight first
    let mut families: Vec<Vec<usize>> = Vec::new();
    for i in 0..cands.len() {
        match families.iter_mut().find(|f| is_replica(&cands[f[0]], &cands[i])) {
            Some(f) => f.push(i),
            None => families.push(vec![i]),
        }
    }
    if families.len() < 2 {
        return Err(FloquetError::BandSelection { k, truncation });
    }
    if let Some(third) = families.get(2) {
        let (w2, w3) = (cands[families[1][0]].central, cands[third[0]].central);
        if w2 - w3 < TIE_TOLERANCE {
            return Err(FloquetError::AmbiguousPrincipal { k, band: 1, w1: w2, w2: w3 });
        }
    }
    // within a family the replica closest to the principal window wins
    let chosen: Vec<usize> = families[..2]
        .iter()
        .map(|f| *f.iter().min_by_key(|&&i| (cands[i].q.abs(), cands[i].q < 0)).unwrap())
        .collect();
    let mut pairs: Vec<ExtendedEigenpair> = chosen
        .iter()
        .map(|&i| ExtendedEigenpair::from_vector(cands[i].e, cands[i].v, truncation, omega))
        .collect();
    pairs.sort_by(|a, b| a.quasienergy.total_cmp(&b.quasienergy));
    let b = pairs.pop().unwrap();
    let a = pairs.pop().unwrap();
    Ok([a, b])
}

/// Quasienergy gaps at the window centre and edge from one pair of bands.
pub fn gaps(pairs: &[ExtendedEigenpair; 2], omega: f64) -> (f64, f64) {
    let inner = pairs[1].quasienergy - pairs[0].quasienergy;
    (inner, omega - inner)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub truncation: usize,
    pub drift: f64,
    pub quasienergies: [f64; 2],
    pub refined: [f64; 2],
}

/// Compare the principal quasienergies at `P` and `P + 2`.
pub fn convergence_check(params: &ModelParams, k: f64, truncation: usize) -> Result<ConvergenceReport> {
    let a = quasienergies(params, k, truncation)?;
    let b = quasienergies(params, k, truncation + 2)?;
    let drift = (0..2)
        .map(|i| quasienergy_distance(a[i].quasienergy, b[i].quasienergy, params.omega))
        .fold(0.0, f64::max);
    Ok(ConvergenceReport {
        truncation,
        drift,
        quasienergies: [a[0].quasienergy, a[1].quasienergy],
        refined: [b[0].quasienergy, b[1].quasienergy],
    })
}

/// Raise `P` in steps of 2 from `start` until the drift is below `tol`.
/// Returns the first passing `P` and its report.
pub fn adaptive_truncation(
    params: &ModelParams,
    k: f64,
    start: usize,
    tol: f64,
) -> Result<(usize, ConvergenceReport)> {
    let mut p = start.max(1);
    loop {
        match convergence_check(params, k, p) {
            Ok(r) if r.drift < tol => return Ok((p, r)),
            Ok(r) if p + 2 > MAX_TRUNCATION => {
                return Err(FloquetError::NotConverged {
                    k,
                    truncation: p,
                    drift: r.drift,
                })
            }
            Err(e) if p + 2 > MAX_TRUNCATION => return Err(e),
            _ => p += 2,
        }
    }
}

/// Smallest `P` that passes the convergence check at every probe momentum.
pub fn truncation_for(params: &ModelParams, probes: &[f64], start: usize, tol: f64) -> Result<usize> {
    let mut p = start;
    for &k in probes {
        p = p.max(adaptive_truncation(params, k, p, tol)?.0);
    }
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub k: f64,
    pub band_index: usize,
    pub quasienergy: f64,
    pub replica_q: i64,
}

/// Principal quasienergies on a momentum grid plus replicas `ε - qω` for
/// `0 < |q| ≤ replicas`. Rows are ordered by grid index, then band, then q.
pub fn spectrum_scan(
    params: &ModelParams,
    k_grid: &[f64],
    truncation: usize,
    replicas: u32,
) -> Result<Vec<SpectrumRow>> {
    if k_grid.is_empty() {
        return Err(FloquetError::InvalidArgument("k grid is empty".into()));
    }
    let per_k: Vec<Result<Vec<SpectrumRow>>> = k_grid
        .par_iter()
        .map(|&k| {
            let pairs = quasienergies(params, k, truncation)?;
            let mut rows = Vec::new();
            for (band, pair) in pairs.iter().enumerate() {
                let r = replicas as i64;
                let mut qs: Vec<i64> = vec![0];
                qs.extend((1..=r).flat_map(|q| [-q, q]));
                for q in qs {
                    rows.push(SpectrumRow {
                        k,
                        band_index: band,
                        quasienergy: pair.quasienergy - q as f64 * params.omega,
                        replica_q: q,
                    });
                }
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_k {
        out.extend(r?);
    }
    Ok(out)
}
