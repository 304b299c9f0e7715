//! Pearson, Spearman, ordinary least squares and the D'Agostino-Pearson
//! omnibus normality test, with the tail probabilities they need.

use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance: correlation is undefined")]
    ZeroVariance,
    #[error("degenerate fit: all x values are identical")]
    ConstantX,
    #[error("input contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    Pearson,
    Spearman,
    DAgostinoK2,
}

impl TestKind {
    pub const fn name(self) -> &'static str {
        match self {
            TestKind::Pearson => "pearson",
            TestKind::Spearman => "spearman",
            TestKind::DAgostinoK2 => "dagostino_k2",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A test statistic with its sample size and two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatResult {
    pub test: TestKind,
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

// ---------------------------------------------------------------------------
// Special functions

const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 10_000;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * libm::log(x) + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Regularized lower incomplete gamma P(a, x) by its power series.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..CF_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * CF_EPS {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction.
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / CF_TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = b + an / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    libm::exp(-x + a * libm::log(x) - ln_gamma(a)) * h
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(df / 2.0, x / 2.0)
}

/// Upper tail of the standard normal distribution.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / core::f64::consts::SQRT_2)
}

/// Upper tail P(T > t) of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Two-sided p-value of a correlation coefficient via the t transform.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * libm::sqrt(df / (1.0 - r * r));
    (2.0 * student_t_sf(t.abs(), df)).clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// Descriptive helpers

fn check_finite(x: &[f64]) -> Result<(), StatsError> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn check_pair(x: &[f64], y: &[f64], min_n: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < min_n {
        return Err(StatsError::TooFewSamples {
            need: min_n,
            got: x.len(),
        });
    }
    check_finite(x)?;
    check_finite(y)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (divide-by-n) standard deviation.
pub fn population_std(x: &[f64]) -> f64 {
    let m = mean(x);
    libm::sqrt(x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64)
}

/// 1-based fractional ranks; tied values share the average of their ranks.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = alloc::vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn product_moment(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / libm::sqrt(sxx * syy)).clamp(-1.0, 1.0))
}

// ---------------------------------------------------------------------------
// Tests

pub fn pearson(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_pair(x, y, 3)?;
    let r = product_moment(x, y)?;
    Ok(StatResult {
        test: TestKind::Pearson,
        statistic: r,
        n: x.len(),
        p_value: correlation_p_value(r, x.len()),
    })
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<StatResult, StatsError> {
    check_pair(x, y, 3)?;
    let rho = product_moment(&fractional_ranks(x), &fractional_ranks(y))?;
    Ok(StatResult {
        test: TestKind::Spearman,
        statistic: rho,
        n: x.len(),
        p_value: correlation_p_value(rho, x.len()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub intercept: f64,
    pub slope: f64,
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

impl OlsFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Least-squares line of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<OlsFit, StatsError> {
    check_pair(x, y, 3)?;
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        return Err(StatsError::ConstantX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (intercept + slope * a)).collect();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(OlsFit {
        intercept,
        slope,
        residuals,
        r_squared,
    })
}

/// Z score of the sample skewness (D'Agostino's transformation).
pub fn skewness_z(x: &[f64]) -> Result<f64, StatsError> {
    let n = x.len();
    if n < 8 {
        return Err(StatsError::TooFewSamples { need: 8, got: n });
    }
    check_finite(x)?;
    let nf = n as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
    if m2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let m3 = x.iter().map(|v| libm::pow(v - m, 3.0)).sum::<f64>() / nf;
    let b1 = m3 / libm::pow(m2, 1.5);
    let mut y = b1 * libm::sqrt((nf + 1.0) * (nf + 3.0) / (6.0 * (nf - 2.0)));
    let beta2 = 3.0 * (nf * nf + 27.0 * nf - 70.0) * (nf + 1.0) * (nf + 3.0)
        / ((nf - 2.0) * (nf + 5.0) * (nf + 7.0) * (nf + 9.0));
    let w2 = -1.0 + libm::sqrt(2.0 * (beta2 - 1.0));
    let delta = 1.0 / libm::sqrt(0.5 * libm::log(w2));
    let alpha = libm::sqrt(2.0 / (w2 - 1.0));
    if y == 0.0 {
        y = 1.0;
    }
    let ya = y / alpha;
    Ok(delta * libm::log(ya + libm::sqrt(ya * ya + 1.0)))
}

/// Z score of the sample kurtosis (Anscombe-Glynn transformation).
pub fn kurtosis_z(x: &[f64]) -> Result<f64, StatsError> {
    let n = x.len();
    if n < 5 {
        return Err(StatsError::TooFewSamples { need: 5, got: n });
    }
    check_finite(x)?;
    let nf = n as f64;
    let m = mean(x);
    let m2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf;
    if m2 == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let m4 = x.iter().map(|v| libm::pow(v - m, 4.0)).sum::<f64>() / nf;
    let b2 = m4 / (m2 * m2);
    let expected = 3.0 * (nf - 1.0) / (nf + 1.0);
    let var_b2 = 24.0 * nf * (nf - 2.0) * (nf - 3.0) / ((nf + 1.0) * (nf + 1.0) * (nf + 3.0) * (nf + 5.0));
    let xs = (b2 - expected) / libm::sqrt(var_b2);
    let sqrt_beta1 = 6.0 * (nf * nf - 5.0 * nf + 2.0) / ((nf + 7.0) * (nf + 9.0))
        * libm::sqrt(6.0 * (nf + 3.0) * (nf + 5.0) / (nf * (nf - 2.0) * (nf - 3.0)));
    let a = 6.0 + 8.0 / sqrt_beta1 * (2.0 / sqrt_beta1 + libm::sqrt(1.0 + 4.0 / (sqrt_beta1 * sqrt_beta1)));
    let term1 = 1.0 - 2.0 / (9.0 * a);
    let denom = 1.0 + xs * libm::sqrt(2.0 / (a - 4.0));
    let term2 = if denom == 0.0 {
        f64::NAN
    } else {
        denom.signum() * libm::cbrt((1.0 - 2.0 / a) / denom.abs())
    };
    Ok((term1 - term2) / libm::sqrt(2.0 / (9.0 * a)))
}

/// Below this many observations the omnibus test's kurtosis approximation
/// is unreliable; callers should warn.
pub const DAGOSTINO_VALIDITY_FLOOR: usize = 20;

/// D'Agostino-Pearson omnibus test: K² = Z(skew)² + Z(kurtosis)², referred to
/// chi-square with two degrees of freedom. Needs at least 8 observations.
pub fn dagostino_k2(x: &[f64]) -> Result<StatResult, StatsError> {
    let zs = skewness_z(x)?;
    let zk = kurtosis_z(x)?;
    let k2 = zs * zs + zk * zk;
    Ok(StatResult {
        test: TestKind::DAgostinoK2,
        statistic: k2,
        n: x.len(),
        p_value: chi2_sf(k2, 2.0).clamp(0.0, 1.0),
    })
}
