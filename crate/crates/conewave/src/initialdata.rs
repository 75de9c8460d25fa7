//! Goursat data on the two truncated null cones.
//!
//! Data on the outgoing cone carry a value and a slope channel sampled on
//! the `x` grid; data on the incoming cone carry values on the `y` grid.
//! The approximant construction anchors the outgoing values at the corner
//! and integrates the (optionally mollified) slope channel, so the corner
//! compatibility holds bit-exactly by construction.

use thiserror::Error;

use crate::norms::trapezoid;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("mollification width {width} exceeds the domain size {domain}")]
    BadWidth { width: f64, domain: f64 },
    #[error("corner values disagree: |{plus} - {minus}| = {residual:.3e} > tol {tol:.3e}")]
    IncompatibleData { plus: f64, minus: f64, residual: f64, tol: f64 },
    #[error("weighted data norm {norm:.3e} exceeds the admissibility bound {bound:.3e}")]
    UnboundedWeightedData { norm: f64, bound: f64 },
    #[error("profile `{0}` is malformed")]
    BadProfile(String),
}

/// Built-in analytic data profiles.
#[derive(Debug, Clone, PartialEq)]
pub enum DataProfile {
    Zero,
    /// `amp * exp(-(t - mu)^2 / (2 sigma^2))`
    Gaussian { mu: f64, sigma: f64, amp: f64 },
    /// `c0 + c1 t + c2 t^2 + ...`
    Poly { coeffs: Vec<f64> },
    /// `|t|^p`
    Power { p: f64 },
}

impl DataProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DataProfile::Zero => 0.0,
            DataProfile::Gaussian { mu, sigma, amp } => {
                let d = (t - mu) / sigma;
                amp * (-0.5 * d * d).exp()
            }
            DataProfile::Poly { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
            }
            DataProfile::Power { p } => t.abs().powf(*p),
        }
    }

    pub fn eval_deriv(&self, t: f64) -> f64 {
        match self {
            DataProfile::Zero => 0.0,
            DataProfile::Gaussian { mu, sigma, amp } => {
                let d = (t - mu) / sigma;
                -amp * d / sigma * (-0.5 * d * d).exp()
            }
            DataProfile::Poly { coeffs } => {
                let mut acc = 0.0;
                for (i, c) in coeffs.iter().enumerate().skip(1) {
                    acc += i as f64 * c * t.powi(i as i32 - 1);
                }
                acc
            }
            DataProfile::Power { p } => {
                if t == 0.0 {
                    0.0
                } else {
                    p * t.abs().powf(p - 1.0) * t.signum()
                }
            }
        }
    }
}

/// Value and slope samples on the outgoing cone `y = 0`, `x` in `[x0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDataPlus {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl ConeDataPlus {
    pub fn from_profile(profile: &DataProfile, xs: &[f64]) -> Self {
        Self {
            xs: xs.to_vec(),
            values: xs.iter().map(|&x| profile.eval(x)).collect(),
            slopes: xs.iter().map(|&x| profile.eval_deriv(x)).collect(),
        }
    }

    pub fn corner_value(&self) -> f64 {
        self.values[0]
    }

    /// `max_x |x|^{-alpha} (|value| + |slope|)`, the data contribution to
    /// the sup-norm monitor.
    pub fn weighted_sup(&self, alpha: f64) -> f64 {
        self.xs
            .iter()
            .zip(self.values.iter().zip(&self.slopes))
            .map(|(&x, (&v, &s))| (-x).powf(-alpha) * (v.abs() + s.abs()))
            .fold(0.0, f64::max)
    }

    /// Weighted quadrature `(int (|x|^{-alpha} (|value|+|slope|))^2 dx/|x|)^{1/2}`
    /// used by the admissibility check.
    pub fn weighted_quadrature(&self, alpha: f64) -> f64 {
        let integrand: Vec<f64> = self
            .xs
            .iter()
            .zip(self.values.iter().zip(&self.slopes))
            .map(|(&x, (&v, &s))| {
                let q = (-x).powf(-alpha) * (v.abs() + s.abs());
                q * q / (-x)
            })
            .collect();
        trapezoid(&self.xs, &integrand).sqrt()
    }
}

/// Value samples on the incoming cone `x = x0`, `y` in `[0, u_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDataMinus {
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl ConeDataMinus {
    pub fn from_profile(profile: &DataProfile, ys: &[f64]) -> Self {
        Self { ys: ys.to_vec(), values: ys.iter().map(|&y| profile.eval(y)).collect() }
    }

    pub fn corner_value(&self) -> f64 {
        self.values[0]
    }

    /// One-sided fourth-order estimate of `dy w` at `y = 0`.
    pub fn corner_y_derivative(&self) -> f64 {
        let v = &self.values;
        let h = self.ys[1] - self.ys[0];
        if v.len() >= 5 {
            (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h)
        } else if v.len() >= 3 {
            (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
        } else {
            (v[1] - v[0]) / h
        }
    }
}

/// Corner compatibility residual.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CompatReport {
    pub residual: f64,
    pub pass: bool,
}

pub fn check_compatibility(plus: &ConeDataPlus, minus: &ConeDataMinus, tol: f64) -> CompatReport {
    let residual = (plus.corner_value() - minus.corner_value()).abs();
    CompatReport { residual, pass: residual <= tol }
}

/// Discrete mollification with a compactly supported bump kernel and
/// reflected extension at the ends. Width zero is the identity.
pub fn mollify(values: &[f64], h: f64, width: f64) -> Result<Vec<f64>, DataError> {
    let domain = h * (values.len() - 1) as f64;
    if width > domain {
        return Err(DataError::BadWidth { width, domain });
    }
    if width <= 0.0 {
        return Ok(values.to_vec());
    }
    let radius = (width / h).floor() as i64;
    if radius == 0 {
        return Ok(values.to_vec());
    }
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for o in -radius..=radius {
        let t = o as f64 * h / width;
        kernel.push(if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 });
    }
    let total: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= total;
    }
    let n = values.len() as i64;
    let reflect = |i: i64| -> usize {
        let mut i = i;
        if i < 0 {
            i = -i;
        }
        if i >= n {
            i = 2 * n - 2 - i;
        }
        i.clamp(0, n - 1) as usize
    };
    Ok((0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(ki, &kv)| kv * values[reflect(i + ki as i64 - radius)])
                .sum()
        })
        .collect())
}

/// Compatibility-corrected approximants at smoothing index `k`: the slope
/// channel and the incoming data are mollified with width `w0 / 2^k`, then
/// the outgoing values are rebuilt as corner value plus the integral of the
/// slope channel, which makes the corner residual exactly zero.
pub fn build_approximant(
    plus: &ConeDataPlus,
    minus: &ConeDataMinus,
    k: u32,
    w0: f64,
) -> Result<(ConeDataPlus, ConeDataMinus), DataError> {
    let hx = plus.xs[1] - plus.xs[0];
    let hy = minus.ys[1] - minus.ys[0];
    let wk = w0 / 2f64.powi(k as i32);
    let slopes_k = mollify(&plus.slopes, hx, wk)?;
    let minus_k = mollify(&minus.values, hy, wk)?;

    let mut values = Vec::with_capacity(plus.xs.len());
    let mut acc = minus_k[0];
    values.push(acc);
    for j in 1..plus.xs.len() {
        acc += 0.5 * (slopes_k[j] + slopes_k[j - 1]) * (plus.xs[j] - plus.xs[j - 1]);
        values.push(acc);
    }

    Ok((
        ConeDataPlus { xs: plus.xs.clone(), values, slopes: slopes_k },
        ConeDataMinus { ys: minus.ys.clone(), values: minus_k },
    ))
}

/// Seed values on the full grid: `w0(y_i, x_j) = plus(x_j) + minus(y_i) - minus(0)`.
/// Restricts to the given data on both cones exactly; the corner must match
/// to `tol` first.
pub fn seed_grid(
    plus: &ConeDataPlus,
    minus: &ConeDataMinus,
    tol: f64,
) -> Result<Vec<f64>, DataError> {
    let compat = check_compatibility(plus, minus, tol);
    if !compat.pass {
        return Err(DataError::IncompatibleData {
            plus: plus.corner_value(),
            minus: minus.corner_value(),
            residual: compat.residual,
            tol,
        });
    }
    let (rows, cols) = (minus.ys.len(), plus.xs.len());
    let corner = minus.corner_value();
    let mut grid = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            grid[i * cols + j] = plus.values[j] + minus.values[i] - corner;
        }
    }
    // impose the data rows bit-exactly
    for j in 0..cols {
        grid[j] = plus.values[j];
    }
    for i in 0..rows {
        grid[i * cols] = minus.values[i];
    }
    Ok(grid)
}

/// Ingests physical cone data: on the outgoing cone `t - r = a` and
/// `t + r = 1/|x|`, and the rescaled value is
/// `Omega^{-(n-1)/2} phys(t, r)` with `Omega = |x| / a`. The slope channel
/// is built by fourth-order differencing along the cone; the weighted
/// quadrature must stay below `bound`.
pub fn ingest_physical<F: Fn(f64, f64) -> f64>(
    phys: F,
    a: f64,
    n: usize,
    xs: &[f64],
    alpha: f64,
    bound: f64,
) -> Result<ConeDataPlus, DataError> {
    let values: Vec<f64> = xs
        .iter()
        .map(|&x| {
            let reach = 1.0 / (-x);
            let t = 0.5 * (reach + a);
            let r = 0.5 * (reach - a);
            let om = (-x) / a;
            om.powf(-((n as f64 - 1.0) / 2.0)) * phys(t, r)
        })
        .collect();

    let h = xs[1] - xs[0];
    let m = values.len();
    let mut slopes = vec![0.0; m];
    for i in 0..m {
        slopes[i] = if i >= 2 && i + 2 < m {
            (-values[i + 2] + 8.0 * values[i + 1] - 8.0 * values[i - 1] + values[i - 2]) / (12.0 * h)
        } else if i + 4 < m && i < 2 {
            (-25.0 * values[i] + 48.0 * values[i + 1] - 36.0 * values[i + 2]
                + 16.0 * values[i + 3]
                - 3.0 * values[i + 4])
                / (12.0 * h)
        } else if i >= 4 {
            (25.0 * values[i] - 48.0 * values[i - 1] + 36.0 * values[i - 2]
                - 16.0 * values[i - 3]
                + 3.0 * values[i - 4])
                / (12.0 * h)
        } else {
            0.0
        };
    }

    let data = ConeDataPlus { xs: xs.to_vec(), values, slopes };
    let norm = data.weighted_quadrature(alpha);
    if !norm.is_finite() || norm > bound {
        return Err(DataError::UnboundedWeightedData { norm, bound });
    }
    Ok(data)
}
