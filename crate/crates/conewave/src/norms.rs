//! Weighted norms and energy diagnostics.
//!
//! The weight `H(x, y) = (-x)^ell exp(-Lambda (y + x))` drives the energy
//! inequality on null slices; the weighted Sobolev norms carry the singular
//! measure `dx / |x|` with `|x|^{-alpha + j}` on the j-th derivative.
//! Quadrature is composite trapezoid, organized over dyadic shells in `x`
//! when integrating callables so the singular end is refined geometrically.

use thiserror::Error;

use crate::par;

#[derive(Debug, Error, PartialEq)]
pub enum NormError {
    #[error("weight requires x < 0, got {x}")]
    NonNegativeX { x: f64 },
    #[error("grid too short for order-{order} differencing ({len} nodes)")]
    InsufficientSmoothness { order: usize, len: usize },
}

/// Parameters of the exponential-polynomial weight.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightSpec {
    pub ell: f64,
    pub lambda: f64,
}

impl WeightSpec {
    pub fn new(ell: f64, lambda: f64) -> Self {
        assert!(ell >= 0.0 && lambda >= 0.0, "weight parameters must be non-negative");
        Self { ell, lambda }
    }
}

/// `H(x, y) = (-x)^ell exp(-Lambda (y + x))`; requires `x < 0`.
pub fn weight_h(x: f64, y: f64, w: &WeightSpec) -> Result<f64, NormError> {
    if x >= 0.0 {
        return Err(NormError::NonNegativeX { x });
    }
    Ok((-x).powf(w.ell) * (-w.lambda * (y + x)).exp())
}

/// Analytic `dH/dx = -ell (-x)^{-1} H - Lambda H`.
pub fn weight_h_dx(x: f64, y: f64, w: &WeightSpec) -> Result<f64, NormError> {
    let h = weight_h(x, y, w)?;
    Ok(-w.ell / (-x) * h - w.lambda * h)
}

/// Analytic `dH/dy = -Lambda H`.
pub fn weight_h_dy(x: f64, y: f64, w: &WeightSpec) -> Result<f64, NormError> {
    Ok(-w.lambda * weight_h(x, y, w)?)
}

/// Order, weight exponent and per-shell quadrature resolution of a
/// weighted Sobolev norm.
#[derive(Debug, Clone, Copy)]
pub struct NormSpec {
    pub order: usize,
    pub alpha: f64,
    pub shell_resolution: usize,
}

impl NormSpec {
    pub fn new(order: usize, alpha: f64) -> Self {
        Self { order, alpha, shell_resolution: 128 }
    }
}

/// Composite trapezoid over a (possibly non-uniform) increasing grid.
pub fn trapezoid(xs: &[f64], vals: &[f64]) -> f64 {
    assert_eq!(xs.len(), vals.len());
    let mut acc = 0.0;
    for i in 1..xs.len() {
        acc += 0.5 * (vals[i] + vals[i - 1]) * (xs[i] - xs[i - 1]);
    }
    acc
}

/// Iterated centered differences on a uniform grid, second order, with
/// one-sided closures at the ends.
fn fd_derivative(vals: &[f64], h: f64) -> Vec<f64> {
    let n = vals.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h);
    out[n - 1] = (3.0 * vals[n - 1] - 4.0 * vals[n - 2] + vals[n - 3]) / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (vals[i + 1] - vals[i - 1]) / (2.0 * h);
    }
    out
}

/// Weighted Sobolev norm of a sampled line on a uniform grid of negative
/// `x` values (increasing towards zero):
/// `sum_{j<=k} int (|x|^{-alpha+j} d^j f)^2 dx/|x|`.
pub fn weighted_sobolev_norm(xs: &[f64], vals: &[f64], spec: &NormSpec) -> Result<f64, NormError> {
    let n = xs.len();
    if n < 2 * spec.order + 3 {
        return Err(NormError::InsufficientSmoothness { order: spec.order, len: n });
    }
    let h = xs[1] - xs[0];
    let mut deriv = vals.to_vec();
    let mut total = 0.0;
    for j in 0..=spec.order {
        if j > 0 {
            deriv = fd_derivative(&deriv, h);
        }
        let integrand: Vec<f64> = xs
            .iter()
            .zip(&deriv)
            .map(|(&x, &d)| {
                let w = (-x).powf(-spec.alpha + j as f64) * d;
                w * w / (-x)
            })
            .collect();
        total += trapezoid(xs, &integrand);
    }
    Ok(total.sqrt())
}

/// Dyadic shells of `[x0, x_end]`: shell `m` covers `[x0/2^{m-1}, x0/2^m]`
/// in `x`, rescaled to `s = 2^m x / x0` in (a sub-interval of) `[1, 2]`.
fn shells(x0: f64, x_end: f64) -> Vec<(u32, f64, f64)> {
    assert!(x0 < x_end && x_end < 0.0);
    let mut out = Vec::new();
    let mut m = 1u32;
    loop {
        let s_min = (x_end / x0) * 2f64.powi(m as i32);
        if s_min >= 2.0 {
            break;
        }
        out.push((m, s_min.max(1.0), 2.0));
        if s_min > 1.0 {
            break; // clipped final shell
        }
        m += 1;
        if m > 128 {
            break;
        }
    }
    out
}

/// Weighted Sobolev norm of a callable on `[x0, x_end]`, quadrature over
/// dyadic shells so the singular end is geometrically refined.
pub fn weighted_sobolev_norm_fn<F: Fn(f64) -> f64 + Sync>(
    f: F,
    x0: f64,
    x_end: f64,
    spec: &NormSpec,
) -> Result<f64, NormError> {
    let res = spec.shell_resolution.max(2 * spec.order + 3);
    let shell_list = shells(x0, x_end);
    let contributions = par::map_indexed(shell_list.len(), |i| {
        let (m, s_lo, s_hi) = shell_list[i];
        let scale = x0 / 2f64.powi(m as i32); // x = s * scale
        let ds = (s_hi - s_lo) / (res - 1) as f64;
        let ss: Vec<f64> = (0..res).map(|k| s_lo + k as f64 * ds).collect();
        let mut deriv: Vec<f64> = ss.iter().map(|&s| f(s * scale)).collect();
        let mut acc = 0.0;
        for j in 0..=spec.order {
            if j > 0 {
                deriv = fd_derivative(&deriv, ds);
            }
            // d^j/dx^j = scale^{-j} d^j/ds^j ; dx/|x| = ds/s
            let integrand: Vec<f64> = ss
                .iter()
                .zip(&deriv)
                .map(|(&s, &d)| {
                    let x_abs = (s * scale).abs();
                    let v = x_abs.powf(-spec.alpha + j as f64) * d / scale.abs().powi(j as i32);
                    v * v / s
                })
                .collect();
            acc += trapezoid(&ss, &integrand);
        }
        acc
    });
    Ok(contributions.into_iter().sum::<f64>().sqrt())
}

/// Per-shell contributions to the squared dyadic norm:
/// `(-x0)^{-2 alpha} 2^{2 m alpha} |f_m|^2_{H^k([1,2])}` with
/// `f_m(s) = f(s x0 / 2^m)`.
pub fn dyadic_shell_contributions<F: Fn(f64) -> f64 + Sync>(
    f: F,
    x0: f64,
    x_end: f64,
    spec: &NormSpec,
) -> Vec<f64> {
    let res = spec.shell_resolution.max(2 * spec.order + 3);
    let shell_list = shells(x0, x_end);
    let pref = (-x0).powf(-2.0 * spec.alpha);
    par::map_indexed(shell_list.len(), |i| {
        let (m, s_lo, s_hi) = shell_list[i];
        let scale = x0 / 2f64.powi(m as i32);
        let ds = (s_hi - s_lo) / (res - 1) as f64;
        let ss: Vec<f64> = (0..res).map(|k| s_lo + k as f64 * ds).collect();
        let mut deriv: Vec<f64> = ss.iter().map(|&s| f(s * scale)).collect();
        let mut h_norm_sq = 0.0;
        for j in 0..=spec.order {
            if j > 0 {
                deriv = fd_derivative(&deriv, ds);
            }
            let integrand: Vec<f64> = deriv.iter().map(|&d| d * d).collect();
            h_norm_sq += trapezoid(&ss, &integrand);
        }
        pref * 2f64.powf(2.0 * m as f64 * spec.alpha) * h_norm_sq
    })
}

/// Dyadic-decomposition norm: square root of the summed shell
/// contributions. Equivalent (not equal) to the direct weighted norm.
pub fn dyadic_norm_fn<F: Fn(f64) -> f64 + Sync>(
    f: F,
    x0: f64,
    x_end: f64,
    spec: &NormSpec,
) -> Result<f64, NormError> {
    Ok(dyadic_shell_contributions(f, x0, x_end, spec).into_iter().sum::<f64>().sqrt())
}

/// Orientation of a null slice: constant `y` (tangent is `x`) or constant
/// `x` (tangent is `y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SliceOrientation {
    ConstY,
    ConstX,
}

/// Sampled data along one null slice.
pub struct SliceData<'a> {
    /// Coordinate running along the slice (`x` for ConstY, `y` for ConstX).
    pub coords: &'a [f64],
    /// The frozen coordinate (`y = u` for ConstY, `x = v` for ConstX).
    pub fixed: f64,
    pub values: &'a [f64],
    pub tangent_deriv: &'a [f64],
}

/// Boundary energy of one slice: `int H (w^2 [+ (tangent dw)^2])`.
/// `order` 0 keeps only the value term, 1 adds the tangential derivative.
pub fn slice_energy(
    slice: &SliceData<'_>,
    orient: SliceOrientation,
    w: &WeightSpec,
    order: usize,
) -> Result<f64, NormError> {
    assert!(order <= 1, "slice energies are order 0 or 1");
    let mut integrand = Vec::with_capacity(slice.coords.len());
    for i in 0..slice.coords.len() {
        let (x, y) = match orient {
            SliceOrientation::ConstY => (slice.coords[i], slice.fixed),
            SliceOrientation::ConstX => (slice.fixed, slice.coords[i]),
        };
        let h = weight_h(x, y, w)?;
        let mut q = slice.values[i] * slice.values[i];
        if order == 1 {
            q += slice.tangent_deriv[i] * slice.tangent_deriv[i];
        }
        integrand.push(h * q);
    }
    Ok(trapezoid(slice.coords, &integrand))
}

/// Read-only view of one field component on the full grid, row-major with
/// `ys.len()` rows; `box_values` holds the discrete wave-operator values.
pub struct GridView<'a> {
    pub ys: &'a [f64],
    pub xs: &'a [f64],
    pub values: &'a [f64],
    pub dy: &'a [f64],
    pub dx: &'a [f64],
    pub box_values: &'a [f64],
}

impl GridView<'_> {
    fn at(&self, arr: &[f64], i: usize, j: usize) -> f64 {
        arr[i * self.xs.len() + j]
    }
}

/// Terms and margin of the discrete energy inequality audit on the
/// causal diamond `[0, u] x [x0, v]`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditReport {
    pub lhs_outgoing: f64,
    pub lhs_incoming: f64,
    pub data_plus: f64,
    pub data_minus: f64,
    pub lfunc_abs: f64,
    pub bulk: f64,
    pub c1_used: f64,
    pub lambda: f64,
    pub margin: f64,
    /// Margin normalized by the magnitude of both sides.
    pub margin_rel: f64,
}

/// Audits the slice-energy inequality: outgoing plus incoming energies at
/// `(u, v)` against the data energies, the bulk term with coefficient
/// `(c1 - 2 Lambda)`, and the integrated weighted flux `|L[w]|` with
/// `L[w] = H (dx w + dy w) box w`. Frame constant of the symmetric
/// reduction is 1.
pub fn energy_audit(
    v: &GridView<'_>,
    u_row: usize,
    v_col: usize,
    w: &WeightSpec,
    c1: f64,
) -> Result<AuditReport, NormError> {
    let xs = &v.xs[..=v_col];
    let ys = &v.ys[..=u_row];

    let row_slice = |i: usize| -> Result<f64, NormError> {
        let vals: Vec<f64> = (0..=v_col).map(|j| v.at(v.values, i, j)).collect();
        let tang: Vec<f64> = (0..=v_col).map(|j| v.at(v.dx, i, j)).collect();
        slice_energy(
            &SliceData { coords: xs, fixed: v.ys[i], values: &vals, tangent_deriv: &tang },
            SliceOrientation::ConstY,
            w,
            1,
        )
    };
    let col_slice = |j: usize| -> Result<f64, NormError> {
        let vals: Vec<f64> = (0..=u_row).map(|i| v.at(v.values, i, j)).collect();
        let tang: Vec<f64> = (0..=u_row).map(|i| v.at(v.dy, i, j)).collect();
        slice_energy(
            &SliceData { coords: ys, fixed: v.xs[j], values: &vals, tangent_deriv: &tang },
            SliceOrientation::ConstX,
            w,
            1,
        )
    };

    let lhs_outgoing = row_slice(u_row)?;
    let lhs_incoming = col_slice(v_col)?;
    let data_plus = row_slice(0)?;
    let data_minus = col_slice(0)?;

    // bulk and flux integrals over the diamond, trapezoid in both axes
    let mut bulk_rows = Vec::with_capacity(u_row + 1);
    let mut flux_rows = Vec::with_capacity(u_row + 1);
    for i in 0..=u_row {
        let mut bulk_line = Vec::with_capacity(v_col + 1);
        let mut flux_line = Vec::with_capacity(v_col + 1);
        for j in 0..=v_col {
            let h = weight_h(v.xs[j], v.ys[i], w)?;
            let (val, dyv, dxv) = (v.at(v.values, i, j), v.at(v.dy, i, j), v.at(v.dx, i, j));
            bulk_line.push(h * (val * val + dyv * dyv + dxv * dxv));
            flux_line.push((h * (dxv + dyv) * v.at(v.box_values, i, j)).abs());
        }
        bulk_rows.push(trapezoid(xs, &bulk_line));
        flux_rows.push(trapezoid(xs, &flux_line));
    }
    let bulk = trapezoid(ys, &bulk_rows);
    let lfunc_abs = trapezoid(ys, &flux_rows);

    let lhs = lhs_outgoing + lhs_incoming;
    let rhs = data_plus + data_minus + (c1 - 2.0 * w.lambda) * bulk + lfunc_abs;
    let margin = rhs - lhs;
    let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
    Ok(AuditReport {
        lhs_outgoing,
        lhs_incoming,
        data_plus,
        data_minus,
        lfunc_abs,
        bulk,
        c1_used: c1,
        lambda: w.lambda,
        margin,
        margin_rel: margin / scale,
    })
}

/// Result of the Lambda scan: the smallest weight rate making the audited
/// inequality hold (bulk term dropped, i.e. `c1 = 2 Lambda`) across a
/// validation family.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LambdaScan {
    pub lambda_star: f64,
    pub margins_at_star: Vec<f64>,
    pub converged: bool,
}

/// Scans `Lambda` upward (coarse grid then bisection) for the smallest
/// value with relative margin `>= -tol_rel` on every family member.
pub fn scan_lambda(
    family: &[GridView<'_>],
    ell: f64,
    tol_rel: f64,
    lambda_hi: f64,
) -> Result<LambdaScan, NormError> {
    let min_margin = |lambda: f64| -> Result<f64, NormError> {
        let w = WeightSpec::new(ell, lambda);
        let mut worst = f64::INFINITY;
        for view in family {
            let rep = energy_audit(view, view.ys.len() - 1, view.xs.len() - 1, &w, 2.0 * lambda)?;
            worst = worst.min(rep.margin_rel);
        }
        Ok(worst)
    };

    if min_margin(lambda_hi)? < -tol_rel {
        return Ok(LambdaScan { lambda_star: lambda_hi, margins_at_star: vec![], converged: false });
    }
    let (mut lo, mut hi) = (0.0f64, lambda_hi);
    if min_margin(lo)? >= -tol_rel {
        hi = lo;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if min_margin(mid)? >= -tol_rel {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    let lambda_star = hi;
    let w = WeightSpec::new(ell, lambda_star);
    let margins: Result<Vec<f64>, NormError> = family
        .iter()
        .map(|view| {
            energy_audit(view, view.ys.len() - 1, view.xs.len() - 1, &w, 2.0 * lambda_star)
                .map(|r| r.margin_rel)
        })
        .collect();
    Ok(LambdaScan { lambda_star, margins_at_star: margins?, converged: true })
}
