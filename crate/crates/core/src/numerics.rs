//! Special functions used by the policies.
//!
//! `erfc`, the regularized incomplete beta function and `ln Γ` come from
//! `statrs`. Quantiles are found by safeguarded Newton iteration inside a
//! bracket, which keeps the CDF residual well under 1e-8.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, BanditError, Result};

/// Φ(z); saturates at 0 and 1.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// 1 − Φ(z), without cancellation in the upper tail.
pub fn std_normal_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

/// Probability mass of N(0, 1) on `[a, b]`, evaluated on whichever tail
/// keeps the subtraction well conditioned.
fn std_normal_mass(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussianSpec {
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TruncatedGaussianSpec {
    pub fn new(mean: f64, std: f64, lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(invalid(format!(
                "truncation range [{lower}, {upper}] is empty"
            )));
        }
        if std.is_nan() || std < 0.0 || !mean.is_finite() {
            return Err(invalid(format!(
                "bad truncated gaussian mean {mean} / std {std}"
            )));
        }
        Ok(Self {
            mean,
            std,
            lower,
            upper,
        })
    }

    /// Gaussian truncated to [0, 1].
    pub fn unit(mean: f64, std: f64) -> Result<Self> {
        Self::new(mean, std, 0.0, 1.0)
    }

    fn standardized(&self, x: f64) -> Result<(f64, f64, f64, f64)> {
        if self.std <= 0.0 {
            return Err(invalid(
                "truncated gaussian with zero std is a point mass; evaluate it directly",
            ));
        }
        let a = (self.lower - self.mean) / self.std;
        let b = (self.upper - self.mean) / self.std;
        let z = (x - self.mean) / self.std;
        let mass = std_normal_mass(a, b);
        if mass.is_nan() || mass <= 0.0 {
            return Err(BanditError::NumericalFailure(format!(
                "truncation range holds no mass for {self:?}"
            )));
        }
        Ok((a, z, b, mass))
    }
}

pub fn truncated_normal_cdf(x: f64, spec: &TruncatedGaussianSpec) -> Result<f64> {
    let (a, z, _, mass) = spec.standardized(x)?;
    if x <= spec.lower {
        return Ok(0.0);
    }
    if x >= spec.upper {
        return Ok(1.0);
    }
    Ok((std_normal_mass(a, z) / mass).clamp(0.0, 1.0))
}

/// Survival function `1 − F(x)`, accurate when it is tiny.
pub fn truncated_normal_sf(x: f64, spec: &TruncatedGaussianSpec) -> Result<f64> {
    let (_, z, b, mass) = spec.standardized(x)?;
    if x <= spec.lower {
        return Ok(1.0);
    }
    if x >= spec.upper {
        return Ok(0.0);
    }
    Ok((std_normal_mass(z, b) / mass).clamp(0.0, 1.0))
}

fn check_shape(alpha: f64, beta: f64) -> Result<()> {
    if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!(
            "beta shapes must be positive, got ({alpha}, {beta})"
        )))
    }
}

fn check_level(q: f64) -> Result<()> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("quantile level {q} is outside (0, 1)")))
    }
}

pub fn beta_cdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        beta_reg(alpha, beta, x)
    }
}

fn ln_beta_fn(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn beta_pdf(x: f64, alpha: f64, beta: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta_fn(alpha, beta)).exp()
}

pub fn beta_quantile(q: f64, alpha: f64, beta: f64) -> Result<f64> {
    check_level(q)?;
    check_shape(alpha, beta)?;
    let ln_b = ln_beta_fn(alpha, beta);
    let pdf = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_b).exp()
        }
    };
    let start = alpha / (alpha + beta);
    Ok(invert_cdf(
        q,
        |x| beta_cdf(x, alpha, beta),
        pdf,
        0.0,
        1.0,
        start,
    ))
}

/// CDF of the standard Student-t distribution with `dof` degrees of freedom.
pub fn student_t_cdf(t: f64, dof: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 1.0;
    }
    if t == f64::NEG_INFINITY {
        return 0.0;
    }
    let t2 = t * t;
    if t2 < dof {
        // P(|T| < |t|) = I_{t²/(ν+t²)}(1/2, ν/2)
        let inner = beta_reg(0.5, 0.5 * dof, t2 / (dof + t2));
        0.5 + 0.5 * t.signum() * inner
    } else {
        let tail = 0.5 * beta_reg(0.5 * dof, 0.5, dof / (dof + t2));
        if t > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

pub fn student_t_pdf(t: f64, dof: f64) -> f64 {
    let ln_norm = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
    (ln_norm - 0.5 * (dof + 1.0) * (t * t / dof).ln_1p()).exp()
}

/// `location + scale · t_dof⁻¹(q)`.
pub fn student_t_quantile(q: f64, dof: f64, location: f64, scale: f64) -> Result<f64> {
    check_level(q)?;
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(invalid(format!(
            "degrees of freedom must be positive, got {dof}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) || !location.is_finite() {
        return Err(invalid(format!("bad location/scale ({location}, {scale})")));
    }
    if q == 0.5 {
        return Ok(location);
    }
    let cdf = |t: f64| student_t_cdf(t, dof);
    let (mut lo, mut hi) = (-1.0, 1.0);
    while cdf(lo) > q {
        lo *= 2.0;
        if !lo.is_finite() {
            return Err(BanditError::NumericalFailure(
                "t quantile bracket overflow".into(),
            ));
        }
    }
    while cdf(hi) < q {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(BanditError::NumericalFailure(
                "t quantile bracket overflow".into(),
            ));
        }
    }
    let z = invert_cdf(q, cdf, |t| student_t_pdf(t, dof), lo, hi, 0.5 * (lo + hi));
    Ok(location + scale * z)
}

/// Solves `cdf(x) = q` on `[lo, hi]` for a nondecreasing `cdf` that brackets
/// `q`. Newton steps that leave the bracket are replaced by bisection.
fn invert_cdf(
    q: f64,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    start: f64,
) -> f64 {
    const RESIDUAL: f64 = 1e-14;
    let mut x = start.clamp(lo, hi);
    let mut best = (f64::INFINITY, x);
    for _ in 0..400 {
        let r = cdf(x) - q;
        if r.abs() < best.0 {
            best = (r.abs(), x);
        }
        if r.abs() <= RESIDUAL {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        let d = pdf(x);
        let newton = x - r / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    best.1
}
