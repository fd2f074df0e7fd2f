//! Single-step physics of the monitored qubit.
//!
//! The qubit lives on two sites coupled by hopping `gamma`; a detector coupled
//! with strength `M` to site 1 is reset and read out every period `T`. One period
//! acts on the qubit through the no-click matrix `m_minus` and the click matrix
//! `m_plus`. States on the Grand Circle (GC) `(cos θ/2, i sin θ/2)` stay there,
//! so on the GC each matrix reduces to a real 2×2 matrix acting on
//! `(cos θ/2, sin θ/2)`. Every GC map, probability and slope below is computed
//! from that real representation.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A matrix counts as projecting below this determinant modulus.
pub const PROJECTIVE_TOL: f64 = 1e-12;

const ZERO_PROBABILITY: f64 = 1e-300;

pub type Mat2 = [[C64; 2]; 2];
pub type RealMat2 = [[f64; 2]; 2];

/// Physical parameters of one point of the phase diagram plus cached trigonometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetupParams {
    m: f64,
    t: f64,
    gamma: f64,
    y: f64,
    cm: f64,
    sm: f64,
    cy: f64,
    sy: f64,
}

impl SetupParams {
    pub fn new(m: f64, t: f64, gamma: f64) -> Result<Self> {
        if !(m.is_finite() && t.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "non-finite input M={m}, T={t}, gamma={gamma}"
            )));
        }
        if m <= 0.0 || t < 0.0 || gamma < 0.0 {
            return Err(Error::InvalidParams(format!(
                "need M > 0, T >= 0, gamma >= 0; got M={m}, T={t}, gamma={gamma}"
            )));
        }
        let y = m.hypot(2.0 * gamma);
        let (sm, cm) = (0.5 * m * t).sin_cos();
        let (sy, cy) = (0.5 * y * t).sin_cos();
        Ok(Self { m, t, gamma, y, cm, sm, cy, sy })
    }

    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// `sqrt(M² + 4γ²)`.
    pub fn y(&self) -> f64 {
        self.y
    }
    /// `cos(MT/2)`.
    pub fn cm(&self) -> f64 {
        self.cm
    }
    /// `sin(MT/2)`.
    pub fn sm(&self) -> f64 {
        self.sm
    }
    /// `cos(YT/2)`.
    pub fn cy(&self) -> f64 {
        self.cy
    }
    /// `sin(YT/2)`.
    pub fn sy(&self) -> f64 {
        self.sy
    }

    /// Real determinant of the no-click matrix, `cM² − (M/Y)² sY²`.
    pub fn det_minus(&self) -> f64 {
        let r = self.m / self.y * self.sy;
        self.cm * self.cm - r * r
    }

    /// Determinant of the click matrix, `−sM² + (M/Y)² sY²`.
    pub fn det_plus(&self) -> f64 {
        let r = self.m / self.y * self.sy;
        r * r - self.sm * self.sm
    }
}

pub fn build_params(m: f64, t: f64, gamma: f64) -> Result<SetupParams> {
    SetupParams::new(m, t, gamma)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    /// Detector click.
    Plus,
    /// No click.
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Minus, Outcome::Plus];

    pub fn other(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

/// Wrap an angle into `[−π, π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta - TAU * ((theta + PI) / TAU).floor();
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// Real representation of `m_mu` on the GC, acting on `(cos θ/2, sin θ/2)`.
///
/// `m_minus = D R_minus D⁻¹` and `m_plus = −i D R_plus D⁻¹` with `D = diag(1, i)`.
pub fn gc_matrix(p: &SetupParams, mu: Outcome) -> RealMat2 {
    let my = p.m / p.y;
    let g = 2.0 * p.gamma / p.y;
    match mu {
        Outcome::Minus => {
            let q = g * p.cm * p.sy;
            [
                [p.cm * p.cy - my * p.sm * p.sy, q],
                [-q, p.cm * p.cy + my * p.sm * p.sy],
            ]
        }
        Outcome::Plus => {
            let q = g * p.sm * p.sy;
            [
                [p.sm * p.cy + my * p.cm * p.sy, q],
                [-q, p.sm * p.cy - my * p.cm * p.sy],
            ]
        }
    }
}

fn det_real(r: &RealMat2) -> f64 {
    r[0][0] * r[1][1] - r[0][1] * r[1][0]
}

/// Determinant of the real GC representation. Its sign tells whether `Θ_μ`
/// preserves orientation.
pub fn gc_det(p: &SetupParams, mu: Outcome) -> f64 {
    det_real(&gc_matrix(p, mu))
}

fn apply_real(r: &RealMat2, theta: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (r[0][0] * c + r[0][1] * s, r[1][0] * c + r[1][1] * s)
}

/// Born probability of outcome `mu` for the GC state at `theta`.
pub fn gc_probability(theta: f64, mu: Outcome, p: &SetupParams) -> f64 {
    let (x, y) = apply_real(&gc_matrix(p, mu), theta);
    x * x + y * y
}

/// Post-measurement GC angle `Θ_μ(θ)`.
pub fn theta_map(theta: f64, mu: Outcome, p: &SetupParams) -> f64 {
    let (x, y) = apply_real(&gc_matrix(p, mu), theta);
    wrap_angle(2.0 * y.atan2(x))
}

/// Retrospective map `F_μ`, the inverse of [`theta_map`].
pub fn theta_inverse(theta: f64, mu: Outcome, p: &SetupParams) -> Result<f64> {
    let r = gc_matrix(p, mu);
    let det = det_real(&r);
    if det.abs() < PROJECTIVE_TOL {
        return Err(Error::NonInvertibleMap(det.abs()));
    }
    // The adjugate is the inverse up to a real scale, which drops out of the angle.
    let adj = [[r[1][1], -r[0][1]], [-r[1][0], r[0][0]]];
    let (x, y) = apply_real(&adj, theta);
    Ok(wrap_angle(2.0 * y.atan2(x)))
}

/// `dΘ_μ/dθ = det R_μ / P_μ(θ)`.
pub fn theta_map_derivative(theta: f64, mu: Outcome, p: &SetupParams) -> f64 {
    let r = gc_matrix(p, mu);
    let (x, y) = apply_real(&r, theta);
    let prob = x * x + y * y;
    let det = det_real(&r);
    if prob == 0.0 {
        // Only reachable on the kernel of a projector, where det is zero too.
        return 0.0;
    }
    det / prob
}

/// Fixed points of `Θ_μ` on the GC together with the real eigenvalues of the
/// GC representation. Index `dominant` has the larger eigenvalue modulus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenAngles {
    pub angles: [f64; 2],
    pub values: [f64; 2],
    pub dominant: usize,
}

impl EigenAngles {
    pub fn dominant_angle(&self) -> f64 {
        self.angles[self.dominant]
    }
}

/// Eigenangles of `m_mu`, present when its eigenvectors lie on the GC.
///
/// Returns `None` in the equator regime (complex eigenvalues of the real
/// representation) and when the matrix is a multiple of the identity, where
/// every angle is fixed.
pub fn eigenangles(p: &SetupParams, mu: Outcome) -> Option<EigenAngles> {
    real_eigenangles(&gc_matrix(p, mu))
}

pub(crate) fn real_eigenangles(r: &RealMat2) -> Option<EigenAngles> {
    let [[a, b], [c, d]] = *r;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return None;
    }
    if b.abs().max(c.abs()).max((a - d).abs()) <= 1e-14 * scale {
        return None;
    }
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    if disc <= 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let values = [half_tr + root, half_tr - root];
    let angles = values.map(|lambda| {
        let v1 = (b, lambda - a);
        let v2 = (lambda - d, c);
        let (vx, vy) = if v1.0.hypot(v1.1) >= v2.0.hypot(v2.1) { v1 } else { v2 };
        wrap_angle(2.0 * vy.atan2(vx))
    });
    let dominant = if values[0].abs() >= values[1].abs() { 0 } else { 1 };
    Some(EigenAngles { angles, values, dominant })
}

/// Eigenvector configuration as in the GC attraction analysis: bit 0 set when
/// `m_minus` has GC eigenvectors, bit 1 when `m_plus` does.
pub fn eigen_configuration(p: &SetupParams) -> u8 {
    eigenangles(p, Outcome::Minus).is_some() as u8 + 2 * eigenangles(p, Outcome::Plus).is_some() as u8
}

/// Bloch vector `(sin θ cos φ, sin θ sin φ, cos θ)`.
pub fn bloch_vector(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

/// Pure qubit state `α|1,0⟩ + β|0,1⟩` with the global phase fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochState {
    pub alpha: C64,
    pub beta: C64,
}

impl BlochState {
    /// `(cos θ/2, e^{iφ} sin θ/2)`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (s, c) = (0.5 * theta).sin_cos();
        Self { alpha: C64::new(c, 0.0), beta: C64::from_polar(s, phi) }.phase_fixed()
    }

    pub fn on_gc(theta: f64) -> Self {
        Self::from_angles(theta, FRAC_PI_2)
    }

    /// Normalizes and rotates the global phase so that α is real and nonnegative
    /// (β real and positive when α vanishes).
    pub fn phase_fixed(self) -> Self {
        let norm = (self.alpha.norm_sqr() + self.beta.norm_sqr()).sqrt();
        let ra = self.alpha.norm();
        let phase = if ra > 0.0 {
            self.alpha.conj() / ra
        } else {
            self.beta.conj() / self.beta.norm()
        };
        Self { alpha: self.alpha * phase / norm, beta: self.beta * phase / norm }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr()
    }

    /// `(θ, φ)` with `θ ∈ [−π, π)` and `φ ∈ (−π/2, π/2]`.
    ///
    /// The pairs `(θ, φ)` and `(−θ, φ ± π)` describe the same state, so the GC
    /// sits on the edge of the φ range. At the poles φ is reported as π/2.
    pub fn angles(&self) -> (f64, f64) {
        let ra = self.alpha.norm();
        let rb = self.beta.norm();
        if rb == 0.0 {
            return (0.0, FRAC_PI_2);
        }
        if ra == 0.0 {
            return (-PI, FRAC_PI_2);
        }
        let b = self.beta * self.alpha.conj() / ra;
        let chi = b.arg();
        let half = rb.atan2(ra);
        if chi > -FRAC_PI_2 && chi <= FRAC_PI_2 {
            (wrap_angle(2.0 * half), chi)
        } else {
            let phi = if chi > FRAC_PI_2 { chi - PI } else { chi + PI };
            (wrap_angle(-2.0 * half), phi)
        }
    }

    pub fn theta(&self) -> f64 {
        self.angles().0
    }

    pub fn phi(&self) -> f64 {
        self.angles().1
    }

    /// Angle of the GC point nearest to this state: the sign of θ follows the
    /// sign of Im β, which stays continuous across the GC.
    pub fn gc_theta(&self) -> f64 {
        let ra = self.alpha.norm();
        let rb = self.beta.norm();
        if ra == 0.0 {
            return -PI;
        }
        let b = self.beta * self.alpha.conj() / ra;
        let half = rb.atan2(ra);
        wrap_angle(if b.im >= 0.0 { 2.0 * half } else { -2.0 * half })
    }
}

/// Eigenvalues and (unnormalized) eigenvectors of a complex 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenData {
    pub values: [C64; 2],
    pub vectors: [[C64; 2]; 2],
}

/// Closed-form eigen-decomposition `υ = (tr ∓ sqrt(tr² − 4 det))/2`.
pub fn eigen2(m: &Mat2) -> EigenData {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let root = (tr * tr - 4.0 * det).sqrt();
    let values = [0.5 * (tr - root), 0.5 * (tr + root)];
    let vectors = values.map(|v| {
        let v1 = [m[0][1], v - m[0][0]];
        let v2 = [v - m[1][1], m[1][0]];
        let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
        let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
        if n1.max(n2) == 0.0 {
            [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
        } else if n1 >= n2 {
            v1
        } else {
            v2
        }
    });
    EigenData { values, vectors }
}

pub fn det2(m: &Mat2) -> C64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

pub fn matmul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `a† a`.
pub fn gram2(a: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[0][i].conj() * a[0][j] + a[1][i].conj() * a[1][j];
        }
    }
    out
}

/// No-click and click matrices with their determinants and eigen-data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrausPair {
    pub m_minus: Mat2,
    pub m_plus: Mat2,
    pub det_minus: C64,
    pub det_plus: C64,
    pub eig_minus: EigenData,
    pub eig_plus: EigenData,
}

impl KrausPair {
    pub fn from_matrices(m_minus: Mat2, m_plus: Mat2) -> Self {
        Self {
            m_minus,
            m_plus,
            det_minus: det2(&m_minus),
            det_plus: det2(&m_plus),
            eig_minus: eigen2(&m_minus),
            eig_plus: eigen2(&m_plus),
        }
    }

    pub fn matrix(&self, mu: Outcome) -> &Mat2 {
        match mu {
            Outcome::Minus => &self.m_minus,
            Outcome::Plus => &self.m_plus,
        }
    }

    /// Unnormalized `m_mu ψ`.
    #[inline]
    pub fn act(&self, state: &BlochState, mu: Outcome) -> (C64, C64) {
        let m = self.matrix(mu);
        (
            m[0][0] * state.alpha + m[0][1] * state.beta,
            m[1][0] * state.alpha + m[1][1] * state.beta,
        )
    }

    pub fn probability(&self, state: &BlochState, mu: Outcome) -> f64 {
        let (a, b) = self.act(state, mu);
        a.norm_sqr() + b.norm_sqr()
    }

    /// Applies outcome `mu` and returns the renormalized state with the Born
    /// probability of that outcome.
    pub fn apply(&self, state: &BlochState, mu: Outcome) -> Result<(BlochState, f64)> {
        let (a, b) = self.act(state, mu);
        let prob = a.norm_sqr() + b.norm_sqr();
        if prob < ZERO_PROBABILITY {
            return Err(Error::ZeroProbabilityOutcome(prob));
        }
        Ok((BlochState { alpha: a, beta: b }.phase_fixed(), prob))
    }
}

/// Closed-form Kraus matrices of one measurement period.
pub fn kraus_matrices(p: &SetupParams) -> KrausPair {
    let i = C64::new(0.0, 1.0);
    let re = |x: f64| C64::new(x, 0.0);
    let rm = gc_matrix(p, Outcome::Minus);
    let rp = gc_matrix(p, Outcome::Plus);
    // Undo the D = diag(1, i) similarity.
    let m_minus = [[re(rm[0][0]), -i * rm[0][1]], [-i * rm[0][1], re(rm[1][1])]];
    let m_plus = [[-i * rp[0][0], re(-rp[0][1])], [re(-rp[0][1]), -i * rp[1][1]]];
    KrausPair::from_matrices(m_minus, m_plus)
}

/// `(P_plus, P_minus)` for a normalized state.
pub fn born_probabilities(state: &BlochState, p: &SetupParams) -> (f64, f64) {
    let k = kraus_matrices(p);
    let pp = k.probability(state, Outcome::Plus);
    let pm = k.probability(state, Outcome::Minus);
    let total = pp + pm;
    (pp / total, pm / total)
}

pub fn apply_kraus(state: &BlochState, mu: Outcome, p: &SetupParams) -> Result<(BlochState, f64)> {
    kraus_matrices(p).apply(state, mu)
}
