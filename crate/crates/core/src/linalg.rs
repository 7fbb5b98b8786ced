//! Closed-form 2×2 algebra: Pauli decompositions, exponentials and
//! eigensystems of Hermitian and unitary 2×2 matrices.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Spinor = Vector2<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Below this value of |d|·τ the exponential uses its series expansion.
const SERIES_CUTOFF: f64 = 1e-8;

pub fn identity() -> Mat2 {
    Mat2::identity()
}

pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Coefficients of `d0·I + dx·σx + dy·σy + dz·σz`.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Pauli {
    pub d0: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
}

impl Pauli {
    pub fn new(d0: f64, dx: f64, dy: f64, dz: f64) -> Self {
        Self { d0, dx, dy, dz }
    }

    /// Decompose a Hermitian matrix. The anti-Hermitian part is discarded.
    pub fn from_matrix(m: &Mat2) -> Self {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        Self {
            d0: 0.5 * (a + d),
            dz: 0.5 * (a - d),
            dx: off.re,
            dy: -off.im,
        }
    }

    pub fn to_matrix(&self) -> Mat2 {
        Mat2::new(
            C64::new(self.d0 + self.dz, 0.0),
            C64::new(self.dx, -self.dy),
            C64::new(self.dx, self.dy),
            C64::new(self.d0 - self.dz, 0.0),
        )
    }

    /// Length of the traceless part.
    pub fn norm(&self) -> f64 {
        (self.dx * self.dx + self.dy * self.dy + self.dz * self.dz).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.d0 * s, self.dx * s, self.dy * s, self.dz * s)
    }

    /// `exp(-i (d0 + d·σ) τ)` in closed form.
    pub fn exp_minus_i(&self, tau: f64) -> Mat2 {
        let r = self.norm();
        let x = r * tau;
        let (c, s_over_r) = if x.abs() < SERIES_CUTOFF {
            (1.0 - 0.5 * x * x, tau * (1.0 - x * x / 6.0))
        } else {
            (x.cos(), x.sin() / r)
        };
        let phase = C64::from_polar(1.0, -self.d0 * tau);
        let m = Mat2::new(
            C64::new(c, -s_over_r * self.dz),
            C64::new(-s_over_r * self.dy, -s_over_r * self.dx),
            C64::new(s_over_r * self.dy, -s_over_r * self.dx),
            C64::new(c, s_over_r * self.dz),
        );
        m * phase
    }
}

pub fn dagger(m: &Mat2) -> Mat2 {
    m.adjoint()
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    a * b - b * a
}

/// Frobenius norm.
pub fn fro(m: &Mat2) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_defect(m: &Mat2) -> f64 {
    fro(&(m - m.adjoint()))
}

pub fn unitarity_defect(u: &Mat2) -> f64 {
    fro(&(u.adjoint() * u - Mat2::identity()))
}

/// Unit eigenvector of `n·σ` with eigenvalue +1 for a unit vector `n`.
fn bloch_up(nx: f64, ny: f64, nz: f64) -> Spinor {
    if nz >= 0.0 {
        let v = Spinor::new(C64::new(1.0 + nz, 0.0), C64::new(nx, ny));
        v.unscale(v.norm())
    } else {
        let v = Spinor::new(C64::new(nx, -ny), C64::new(1.0 - nz, 0.0));
        v.unscale(v.norm())
    }
}

/// Orthogonal partner `(-b*, a*)` of a spinor `(a, b)`.
pub fn partner(v: &Spinor) -> Spinor {
    Spinor::new(-v[1].conj(), v[0].conj())
}

/// Eigensystem of a Hermitian 2×2 matrix.
#[derive(Debug, Clone, Copy)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: [f64; 2],
    pub vectors: [Spinor; 2],
    /// Half the level splitting, |d|.
    pub half_gap: f64,
}

pub fn eigh(p: &Pauli) -> HermitianEigen {
    let r = p.norm();
    let (nx, ny, nz) = if r > 0.0 {
        (p.dx / r, p.dy / r, p.dz / r)
    } else {
        (0.0, 0.0, 1.0)
    };
    let up = bloch_up(nx, ny, nz);
    let down = partner(&up);
    HermitianEigen {
        values: [p.d0 - r, p.d0 + r],
        vectors: [down, up],
        half_gap: r,
    }
}

/// Eigensystem of a 2×2 unitary, `U = Σ_j λ_j |j⟩⟨j|`.
#[derive(Debug, Clone, Copy)]
pub struct UnitaryEigen {
    pub values: [C64; 2],
    pub vectors: [Spinor; 2],
}

pub fn eig_unitary(u: &Mat2) -> UnitaryEigen {
    let det = u.determinant();
    let alpha = 0.5 * det.arg();
    let w = u * C64::from_polar(1.0, -alpha);
    // w = cos φ I − i sin φ (n·σ)
    let cos_phi = 0.5 * (w[(0, 0)] + w[(1, 1)]).re;
    let k = (w - w.adjoint()) * C64::new(0.0, 0.5);
    let sn = Pauli::from_matrix(&k);
    let sin_phi = sn.norm();
    let phi = sin_phi.atan2(cos_phi);
    let (nx, ny, nz) = if sin_phi > 0.0 {
        (sn.dx / sin_phi, sn.dy / sin_phi, sn.dz / sin_phi)
    } else {
        (0.0, 0.0, 1.0)
    };
    let up = bloch_up(nx, ny, nz);
    let down = partner(&up);
    UnitaryEigen {
        values: [
            C64::from_polar(1.0, alpha - phi),
            C64::from_polar(1.0, alpha + phi),
        ],
        vectors: [up, down],
    }
}

/// Outer product `|a⟩⟨b|`.
pub fn outer(a: &Spinor, b: &Spinor) -> Mat2 {
    a * b.adjoint()
}

/// `⟨a|b⟩`.
pub fn braket(a: &Spinor, b: &Spinor) -> C64 {
    a.dotc(b)
}

/// Fixed-order pairwise summation; the result does not depend on how the
/// terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if xs.len() <= LEAF {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}
