//! Scalar stability functions of the seven schemes, companion matrices and
//! numerical verification of the exponential power bounds.
//!
//! On the linear test equation `V' = (μ0+μ1+μ2+λ0)V` each scheme reduces to
//! a one-step amplification factor `R` or a two-step pair `(R1, R0)` whose
//! companion matrix governs stability. With `z_j = μ_j Δt`, `w0 = λ0 Δt`,
//! `w = z0+z1+z2` and `p = (1−θz1)(1−θz2)`, the verified bounds are of the
//! form `|R^n| ≤ e^{c|λ0|t_n}` (or the companion-matrix analogue) under the
//! root condition `|z0| ≤ 2γ√(Re z1 · Re z2)`, `Re z1 ≤ 0`, `Re z2 ≤ 0`.

use crate::steppers::Scheme;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("amplification factor has a pole: {0}")]
    Pole(&'static str),
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn cn_denominator(w: C64) -> Result<C64, StabilityError> {
    let den = one() - 0.5 * w;
    if den.norm() == 0.0 {
        return Err(StabilityError::Pole("1 - w/2 = 0"));
    }
    Ok(den)
}

/// CNFE: `R = (1 + ½w + w0) / (1 − ½w)`.
pub fn stab_cnfe(w: C64, w0: C64) -> Result<C64, StabilityError> {
    Ok((one() + 0.5 * w + w0) / cn_denominator(w)?)
}

/// CNFI with `l` sweeps:
/// `R = (½w0/(1−½w))^l + Σ_{k<l} (½w0/(1−½w))^k (1+½w+½w0)/(1−½w)`.
pub fn stab_cnfi(w: C64, w0: C64, l: usize) -> Result<C64, StabilityError> {
    let den = cn_denominator(w)?;
    let g = 0.5 * w0 / den;
    let base = (one() + 0.5 * w + 0.5 * w0) / den;
    let mut r = g.powu(l as u32);
    let mut gk = one();
    for _ in 0..l {
        r += gk * base;
        gk *= g;
    }
    Ok(r)
}

/// IETR: `R = (1 + ½w + w0 + ½(w+w0)w0) / (1 − ½w)`.
pub fn stab_ietr(w: C64, w0: C64) -> Result<C64, StabilityError> {
    Ok((one() + 0.5 * w + w0 + 0.5 * (w + w0) * w0) / cn_denominator(w)?)
}

/// Companion pair of a two-step recurrence `V^n = R1 V^{n-1} + R0 V^{n-2}`.
#[derive(Debug, Clone, Copy)]
pub struct Companion2 {
    pub r1: C64,
    pub r0: C64,
}

/// Dense 2×2 complex matrix used for companion powers.
#[derive(Debug, Clone, Copy)]
pub struct Mat2 {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl Companion2 {
    /// The companion matrix `[[R1, R0], [1, 0]]`.
    pub fn matrix(&self) -> Mat2 {
        Mat2 {
            a: self.r1,
            b: self.r0,
            c: one(),
            d: C64::new(0.0, 0.0),
        }
    }
}

impl Mat2 {
    pub fn identity() -> Self {
        Mat2 {
            a: one(),
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
            d: one(),
        }
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    /// Maximum norm (induced ∞-norm: largest absolute row sum).
    pub fn max_norm(&self) -> f64 {
        (self.a.norm() + self.b.norm()).max(self.c.norm() + self.d.norm())
    }
}

/// CNAB pair: `R1 = (1 + ½w + 3/2·w0)/(1−½w)`, `R0 = −½w0/(1−½w)`.
pub fn stab_cnab(w: C64, w0: C64) -> Result<Companion2, StabilityError> {
    let den = cn_denominator(w)?;
    Ok(Companion2 {
        r1: (one() + 0.5 * w + 1.5 * w0) / den,
        r0: -0.5 * w0 / den,
    })
}

fn adi_p(z1: C64, z2: C64, theta: f64) -> Result<C64, StabilityError> {
    let p = (one() - theta * z1) * (one() - theta * z2);
    if p.norm() == 0.0 {
        return Err(StabilityError::Pole("p = (1-θz1)(1-θz2) = 0"));
    }
    Ok(p)
}

/// MCS:
/// `R = 1 + (w+w0)/p + θ(z0+w0)(w+w0)/p² + (½−θ)(w+w0)²/p²`.
pub fn stab_mcs(z0: C64, z1: C64, z2: C64, w0: C64, theta: f64) -> Result<C64, StabilityError> {
    let p = adi_p(z1, z2, theta)?;
    let w = z0 + z1 + z2;
    let s = w + w0;
    Ok(one() + s / p + theta * (z0 + w0) * s / (p * p) + (0.5 - theta) * s * s / (p * p))
}

/// MCS2 pair:
/// `R1 = 1 + (w + 3/2·w0) q`, `R0 = −½w0 q` with
/// `q = 1/p + θz0/p² + (½−θ)w/p²`.
pub fn stab_mcs2(
    z0: C64,
    z1: C64,
    z2: C64,
    w0: C64,
    theta: f64,
) -> Result<Companion2, StabilityError> {
    let p = adi_p(z1, z2, theta)?;
    let w = z0 + z1 + z2;
    let q = one() / p + theta * z0 / (p * p) + (0.5 - theta) * w / (p * p);
    Ok(Companion2 {
        r1: one() + (w + 1.5 * w0) * q,
        r0: -0.5 * w0 * q,
    })
}

/// SC2A pair:
/// `R1 = 1 + (b̂₁(z0+w0) + b̌₁(z1+z2))/p`,
/// `R0 = (b̂₂(z0+w0) + b̌₂(z1+z2))/p`
/// with `(b̂₁,b̂₂) = (3/2, −1/2)` and `(b̌₁,b̌₂) = (3/2−θ, θ−1/2)`.
pub fn stab_sc2a(
    z0: C64,
    z1: C64,
    z2: C64,
    w0: C64,
    theta: f64,
) -> Result<Companion2, StabilityError> {
    let p = adi_p(z1, z2, theta)?;
    let (bh1, bh2) = (1.5, -0.5);
    let (bc1, bc2) = (1.5 - theta, theta - 0.5);
    Ok(Companion2 {
        r1: one() + (bh1 * (z0 + w0) + bc1 * (z1 + z2)) / p,
        r0: (bh2 * (z0 + w0) + bc2 * (z1 + z2)) / p,
    })
}

/// Scaled eigenvalue quadruple `(z0, z1, z2, w0)` of the four split parts.
#[derive(Debug, Clone, Copy)]
pub struct EigQuadruple {
    pub z0: C64,
    pub z1: C64,
    pub z2: C64,
    pub w0: C64,
}

/// The root condition with relative mixed-term size `γ`:
/// `|z0| ≤ 2γ√(Re z1 · Re z2)`, `Re z1 ≤ 0`, `Re z2 ≤ 0`. `γ = 1` is the
/// plain condition.
pub fn check_condition(q: &EigQuadruple, gamma: f64) -> bool {
    if q.z1.re > 0.0 || q.z2.re > 0.0 {
        return false;
    }
    q.z0.norm() <= 2.0 * gamma * (q.z1.re * q.z2.re).sqrt()
}

/// One exponential power bound to verify numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundCase {
    /// `|R^n| ≤ e^{|λ0|t_n}` for CNFE, any `Re w ≤ 0`.
    ImexCnfe,
    /// `|R^n| ≤ e^{c|λ0|t_n}` for CNFI with `c = Σ_{k<l}(½|λ0|T)^k`.
    ImexCnfi { l: usize },
    /// `|R^n| ≤ e^{|λ0|t_n}` for IETR.
    ImexIetr,
    /// `‖C^n‖ ≤ e^{2|λ0|t_n}` for CNAB.
    ImexCnab,
    /// `|R^n| ≤ e^{c|λ0|t_n}` for MCS, `c = max(1/θ, 2)`; real or complex
    /// eigenvalues under the root condition.
    Mcs { theta: f64, complex_z: bool },
    /// `‖C^n‖ ≤ e^{2c|λ0|t_n}` for MCS2.
    Mcs2 { theta: f64, complex_z: bool },
}

impl BoundCase {
    pub fn label(&self) -> String {
        match self {
            BoundCase::ImexCnfe => "cnfe".into(),
            BoundCase::ImexCnfi { l } => format!("cnfi-l{l}"),
            BoundCase::ImexIetr => "ietr".into(),
            BoundCase::ImexCnab => "cnab".into(),
            BoundCase::Mcs { theta, complex_z } => {
                format!(
                    "mcs-{}-theta{theta:.4}",
                    if *complex_z { "complex" } else { "real" }
                )
            }
            BoundCase::Mcs2 { theta, complex_z } => {
                format!(
                    "mcs2-{}-theta{theta:.4}",
                    if *complex_z { "complex" } else { "real" }
                )
            }
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            BoundCase::ImexCnfe => Scheme::Cnfe,
            BoundCase::ImexCnfi { .. } => Scheme::Cnfi,
            BoundCase::ImexIetr => Scheme::Ietr,
            BoundCase::ImexCnab => Scheme::Cnab,
            BoundCase::Mcs { .. } => Scheme::Mcs,
            BoundCase::Mcs2 { .. } => Scheme::Mcs2,
        }
    }
}

/// Sampler configuration for [`verify_bounds`].
#[derive(Debug, Clone, Copy)]
pub struct VerifySpec {
    pub case: BoundCase,
    pub samples: usize,
    /// Powers checked: `n = 1..=n_max`.
    pub n_max: usize,
    pub seed: u64,
    /// Relative mixed-term size in the root condition.
    pub gamma: f64,
    /// Magnitude scale of `w0 = λ0Δt`; the natural size is `λT/N'`.
    pub w0_scale: f64,
}

impl VerifySpec {
    pub fn new(case: BoundCase) -> Self {
        Self {
            case,
            samples: 10_000,
            n_max: 100,
            seed: 2024,
            gamma: 1.0,
            w0_scale: 0.1,
        }
    }
}

/// Outcome of a bound verification: worst ratio of `|R^n|` (or `‖C^n‖`) to
/// its exponential bound over all samples and powers.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub case: BoundCase,
    pub samples: usize,
    pub n_max: usize,
    pub max_ratio: f64,
    pub violations: usize,
    pub worst: Option<EigQuadruple>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Rounding slack on the bound comparison; the bounds themselves are exact.
const RATIO_SLACK: f64 = 1.0 + 1e-10;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + rng.gen::<f64>() * (b - a)).exp()
}

/// Magnitude in `[1e-3, 1e3]` log-uniform, phase in the closed left half
/// plane (or the negative real axis for `complex = false`).
fn left_half_sample(rng: &mut ChaCha8Rng, complex: bool) -> C64 {
    let r = log_uniform(rng, 1e-3, 1e3);
    if complex {
        let phi = rng.gen_range(0.5 * std::f64::consts::PI..1.5 * std::f64::consts::PI);
        C64::from_polar(r, phi)
    } else {
        C64::new(-r, 0.0)
    }
}

fn sample_quadruple(
    rng: &mut ChaCha8Rng,
    complex_z: bool,
    gamma: f64,
    w0_scale: f64,
) -> EigQuadruple {
    let z1 = left_half_sample(rng, complex_z);
    let z2 = left_half_sample(rng, complex_z);
    let cap = 2.0 * gamma * (z1.re * z2.re).sqrt();
    let r0 = rng.gen::<f64>() * cap;
    let z0 = if complex_z {
        C64::from_polar(r0, rng.gen_range(0.0..2.0 * std::f64::consts::PI))
    } else {
        C64::new(if rng.gen::<bool>() { r0 } else { -r0 }, 0.0)
    };
    let w0 = C64::from_polar(
        rng.gen::<f64>() * w0_scale,
        rng.gen_range(0.0..2.0 * std::f64::consts::PI),
    );
    EigQuadruple { z0, z1, z2, w0 }
}

/// Verifies one exponential stability bound by direct power iteration over
/// seeded random samples satisfying the bound's hypothesis.
pub fn verify_bounds(spec: &VerifySpec) -> Result<BoundReport, StabilityError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut max_ratio = 0.0f64;
    let mut violations = 0usize;
    let mut worst = None;
    for _ in 0..spec.samples {
        let (q, rate, value) = match spec.case {
            BoundCase::ImexCnfe
            | BoundCase::ImexCnfi { .. }
            | BoundCase::ImexIetr
            | BoundCase::ImexCnab => {
                // w complex with Re w ≤ 0; w0 complex of moderate size.
                let w = left_half_sample(&mut rng, true);
                let w0 = C64::from_polar(
                    rng.gen::<f64>() * spec.w0_scale,
                    rng.gen_range(0.0..2.0 * std::f64::consts::PI),
                );
                let q = EigQuadruple {
                    z0: C64::new(0.0, 0.0),
                    z1: w,
                    z2: C64::new(0.0, 0.0),
                    w0,
                };
                let lam_abs = w0.norm(); // |λ0|Δt
                match spec.case {
                    BoundCase::ImexCnfe => (q, lam_abs, Value::Scalar(stab_cnfe(w, w0)?)),
                    BoundCase::ImexCnfi { l } => {
                        // c = Σ_{k<l} (½|λ0|T)^k with T = n_max·Δt.
                        let half_lt = 0.5 * lam_abs * spec.n_max as f64;
                        let c: f64 = (0..l).map(|k| half_lt.powi(k as i32)).sum();
                        (q, c * lam_abs, Value::Scalar(stab_cnfi(w, w0, l)?))
                    }
                    BoundCase::ImexIetr => (q, lam_abs, Value::Scalar(stab_ietr(w, w0)?)),
                    BoundCase::ImexCnab => (q, 2.0 * lam_abs, Value::Companion(stab_cnab(w, w0)?)),
                    _ => unreachable!(),
                }
            }
            BoundCase::Mcs { theta, complex_z } => {
                let q = sample_quadruple(&mut rng, complex_z, spec.gamma, spec.w0_scale);
                let c = (1.0 / theta).max(2.0);
                let r = stab_mcs(q.z0, q.z1, q.z2, q.w0, theta)?;
                (q, c * q.w0.norm(), Value::Scalar(r))
            }
            BoundCase::Mcs2 { theta, complex_z } => {
                let q = sample_quadruple(&mut rng, complex_z, spec.gamma, spec.w0_scale);
                let c = (1.0 / theta).max(2.0);
                let r = stab_mcs2(q.z0, q.z1, q.z2, q.w0, theta)?;
                (q, 2.0 * c * q.w0.norm(), Value::Companion(r))
            }
        };
        let ratio = worst_power_ratio(&value, rate, spec.n_max);
        if ratio > max_ratio {
            max_ratio = ratio;
            worst = Some(q);
        }
        if ratio > RATIO_SLACK {
            violations += 1;
        }
    }
    Ok(BoundReport {
        case: spec.case,
        samples: spec.samples,
        n_max: spec.n_max,
        max_ratio,
        violations,
        worst,
    })
}

enum Value {
    Scalar(C64),
    Companion(Companion2),
}

/// `max_n |R^n| / e^{rate·n}` (power iteration, not eigendecomposition:
/// companion matrices may be defective).
fn worst_power_ratio(value: &Value, rate: f64, n_max: usize) -> f64 {
    let mut worst = 0.0f64;
    match value {
        Value::Scalar(r) => {
            let mut pow = one();
            for n in 1..=n_max {
                pow *= r;
                worst = worst.max(pow.norm() / (rate * n as f64).exp());
            }
        }
        Value::Companion(c) => {
            let m = c.matrix();
            let mut pow = Mat2::identity();
            for n in 1..=n_max {
                pow = pow.mul(&m);
                worst = worst.max(pow.max_norm() / (rate * n as f64).exp());
            }
        }
    }
    worst
}
