//! Coordinate and field transformations between physical Minkowski space,
//! the compactified space, and double-null coordinates.
//!
//! The compactification is the inversion `y = x / eta(x,x)` which maps the
//! unbounded interior of a light cone to a bounded region. The factor
//! `Omega = -eta(y,y)` rescales fields so that decay at infinity becomes
//! boundedness near `Omega -> 0` (null infinity sits at `x -> 0^-` in the
//! double-null chart). All maps here are exact; the finite-difference
//! routines at the bottom verify the analytic identities numerically.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConformalError {
    #[error("point lies on the light cone of the origin (|eta(p,p)| = {eta_abs:.3e})")]
    OnLightCone { eta_abs: f64 },
    #[error("double-null point (y={ynull}, x={xnull}) outside [0,y0] x [x0,0)")]
    OutOfDomain { ynull: f64, xnull: f64 },
    #[error("conformal factor must be positive, got {omega}")]
    NonPositiveOmega { omega: f64 },
}

/// A point of Minkowski space in canonical coordinates `(x^0, .., x^n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinkowskiPoint {
    pub coords: Vec<f64>,
}

impl MinkowskiPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() >= 2, "need at least one space dimension");
        Self { coords }
    }

    /// Space dimension `n` (coords are `n + 1` long).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }
}

/// Image of a Minkowski point under the inversion map.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactifiedPoint {
    pub coords: Vec<f64>,
}

impl CompactifiedPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(coords.len() >= 2, "need at least one space dimension");
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    /// Compactified time `tau = y^0`.
    pub fn tau(&self) -> f64 {
        self.coords[0]
    }

    /// Compactified radius `rho = |(y^1, .., y^n)|`.
    pub fn rho(&self) -> f64 {
        self.coords[1..].iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Double-null coordinates `x = tau + rho`, `y = tau - rho + 1/a`.
///
/// `xnull` is negative throughout the domain and `ynull` non-negative;
/// the compactified radius is `rho = (1/a + x - y) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleNullPoint {
    pub ynull: f64,
    pub xnull: f64,
}

/// Geometry of the truncated-cone domain: space dimension `n`, cone offset
/// `a > 0` and truncation parameter `lambda` in `(-1/a, 0)`.
///
/// The incoming data cone sits at `x = x0 = lambda` and the outgoing one at
/// `y = 0`; the slab extends to `y0 = lambda + 1/a`, so `y0 - x0 = 1/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeGeometry {
    pub n: usize,
    pub a: f64,
    pub lambda: f64,
}

impl ConeGeometry {
    pub fn new(n: usize, a: f64, lambda: f64) -> Result<Self, String> {
        if n < 1 {
            return Err(format!("space dimension must be >= 1, got {n}"));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(format!("cone offset a must be positive and finite, got {a}"));
        }
        if !(lambda > -1.0 / a && lambda < 0.0) {
            return Err(format!("lambda must lie in (-1/a, 0) = ({}, 0), got {lambda}", -1.0 / a));
        }
        Ok(Self { n, a, lambda })
    }

    pub fn x0(&self) -> f64 {
        self.lambda
    }

    pub fn y0(&self) -> f64 {
        self.lambda + 1.0 / self.a
    }

    /// Compactified radius at a double-null point.
    pub fn rho(&self, p: DoubleNullPoint) -> f64 {
        0.5 * (1.0 / self.a + p.xnull - p.ynull)
    }

    pub fn contains(&self, p: DoubleNullPoint) -> bool {
        p.ynull >= 0.0 && p.ynull <= self.y0() && p.xnull >= self.x0() && p.xnull < 0.0
    }
}

/// Conformal factor `Omega`; positive inside the timelike cones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConformalFactor(pub f64);

impl ConformalFactor {
    pub fn value(self) -> f64 {
        self.0
    }

    fn require_positive(self) -> Result<f64, ConformalError> {
        if self.0 > 0.0 {
            Ok(self.0)
        } else {
            Err(ConformalError::NonPositiveOmega { omega: self.0 })
        }
    }
}

/// Minkowski quadratic form `eta(c, c) = -(c^0)^2 + sum (c^i)^2`.
pub fn eta_norm(coords: &[f64]) -> f64 {
    let mut s = -coords[0] * coords[0];
    for c in &coords[1..] {
        s += c * c;
    }
    s
}

/// Scale-aware light-cone detection threshold.
pub fn eps_cone(coords: &[f64]) -> f64 {
    let norm_sq: f64 = coords.iter().map(|c| c * c).sum();
    1e-10 * (1.0 + norm_sq)
}

fn invert(coords: &[f64]) -> Result<Vec<f64>, ConformalError> {
    let e = eta_norm(coords);
    if e.abs() <= eps_cone(coords) {
        return Err(ConformalError::OnLightCone { eta_abs: e.abs() });
    }
    Ok(coords.iter().map(|c| c / e).collect())
}

/// Inversion map `y^a = x^a / eta(x,x)`; its own inverse on its domain.
pub fn compactify(p: &MinkowskiPoint) -> Result<CompactifiedPoint, ConformalError> {
    Ok(CompactifiedPoint::new(invert(&p.coords)?))
}

/// Inverse of [`compactify`]: the same inversion applied in `y` space.
pub fn decompactify(q: &CompactifiedPoint) -> Result<MinkowskiPoint, ConformalError> {
    Ok(MinkowskiPoint::new(invert(&q.coords)?))
}

/// `Omega = -eta(y, y) = (y^0)^2 - sum (y^i)^2`.
pub fn omega(q: &CompactifiedPoint) -> ConformalFactor {
    ConformalFactor(-eta_norm(&q.coords))
}

/// `Omega` in double-null coordinates: `-x (1/a - y)`.
pub fn omega_dn(p: DoubleNullPoint, g: &ConeGeometry) -> ConformalFactor {
    ConformalFactor(-p.xnull * (1.0 / g.a - p.ynull))
}

/// Double-null coordinates of a compactified point (rotationally symmetric
/// reduction: only `(tau, rho)` matter).
pub fn to_double_null(
    q: &CompactifiedPoint,
    g: &ConeGeometry,
) -> Result<DoubleNullPoint, ConformalError> {
    let tau = q.tau();
    let rho = q.rho();
    let p = DoubleNullPoint { ynull: tau - rho + 1.0 / g.a, xnull: tau + rho };
    if g.contains(p) {
        Ok(p)
    } else {
        Err(ConformalError::OutOfDomain { ynull: p.ynull, xnull: p.xnull })
    }
}

/// Compactified point of a double-null point, with the spatial part along
/// the first axis.
pub fn from_double_null(p: DoubleNullPoint, g: &ConeGeometry) -> CompactifiedPoint {
    let tau = 0.5 * (p.ynull + p.xnull - 1.0 / g.a);
    let rho = g.rho(p);
    let mut coords = vec![0.0; g.n + 1];
    coords[0] = tau;
    coords[1] = rho;
    CompactifiedPoint::new(coords)
}

/// Field rescaling `fhat = Omega^{-(n-1)/2} f`.
pub fn rescale(f_value: f64, omega: ConformalFactor, n: usize) -> Result<f64, ConformalError> {
    let om = omega.require_positive()?;
    Ok(om.powf(-((n as f64 - 1.0) / 2.0)) * f_value)
}

/// Inverse of [`rescale`]: `f = Omega^{(n-1)/2} fhat`.
pub fn unrescale(fhat_value: f64, omega: ConformalFactor, n: usize) -> Result<f64, ConformalError> {
    let om = omega.require_positive()?;
    Ok(om.powf((n as f64 - 1.0) / 2.0) * fhat_value)
}

/// Pushes compactified first derivatives to physical ones:
///
/// `df/dx^mu = Omega^{(n-1)/2} { (1-n) y_mu fhat - Omega dfhat/dy^mu
///             - 2 y_mu y^a dfhat/dy^a }`
///
/// where `y_mu` is the index-lowered coordinate (`y_0 = -y^0`).
pub fn push_derivative(
    fhat: f64,
    dfhat: &[f64],
    q: &CompactifiedPoint,
    n: usize,
) -> Result<Vec<f64>, ConformalError> {
    assert_eq!(dfhat.len(), q.coords.len());
    let om = omega(q).require_positive()?;
    let pref = om.powf((n as f64 - 1.0) / 2.0);
    let contraction: f64 = q.coords.iter().zip(dfhat).map(|(ya, da)| ya * da).sum();
    let nn = n as f64;
    Ok((0..q.coords.len())
        .map(|mu| {
            let y_lower = if mu == 0 { -q.coords[0] } else { q.coords[mu] };
            pref * ((1.0 - nn) * y_lower * fhat - om * dfhat[mu] - 2.0 * y_lower * contraction)
        })
        .collect())
}

/// Coefficients of the physical time and radial derivatives in the
/// double-null frame:
///
/// `d/dt = x^2 d/dx + (y - 1/a)^2 d/dy`,
/// `d/dr = x^2 d/dx - (y - 1/a)^2 d/dy`.
///
/// Returns `((cx, cy), (cx, -cy))` with `cx = x^2`, `cy = (y - 1/a)^2`.
pub fn dt_dr_coefficients(p: DoubleNullPoint, g: &ConeGeometry) -> ((f64, f64), (f64, f64)) {
    let cx = p.xnull * p.xnull;
    let d = p.ynull - 1.0 / g.a;
    let cy = d * d;
    ((cx, cy), (cx, -cy))
}

/// Centered second-order wave operator `-d0^2 + sum di^2` of a callable
/// field at `coords` with step `h`.
pub fn fd_box<F: Fn(&[f64]) -> f64>(f: &F, coords: &[f64], h: f64) -> f64 {
    let center = f(coords);
    let mut acc = 0.0;
    let mut work = coords.to_vec();
    for mu in 0..coords.len() {
        let orig = work[mu];
        work[mu] = orig + h;
        let plus = f(&work);
        work[mu] = orig - h;
        let minus = f(&work);
        work[mu] = orig;
        let second = (plus - 2.0 * center + minus) / (h * h);
        acc += if mu == 0 { -second } else { second };
    }
    acc
}

/// Residual of the conformal wave identity
/// `box_x f = Omega^{(n+3)/2} box_y fhat` at a compactified point, with both
/// sides evaluated by centered second-order differences. Converges to zero
/// at order two in `h` for smooth `f`.
pub fn conformal_wave_residual<F: Fn(&[f64]) -> f64 + Copy>(
    f_phys: F,
    q: &CompactifiedPoint,
    h: f64,
) -> Result<f64, ConformalError> {
    let n = q.dim();
    let om = omega(q).require_positive()?;
    let p = decompactify(q)?;

    let lhs = fd_box(&f_phys, &p.coords, h);

    let fhat = |y: &[f64]| -> f64 {
        let qq = CompactifiedPoint::new(y.to_vec());
        let om_y = omega(&qq).value();
        let phys = decompactify(&qq).expect("stencil point off the light cone");
        om_y.powf(-((n as f64 - 1.0) / 2.0)) * f_phys(&phys.coords)
    };
    let rhs = om.powf((n as f64 + 3.0) / 2.0) * fd_box(&fhat, &q.coords, h);

    Ok((lhs - rhs).abs())
}

/// Second-order evaluation of the reduced wave operator
/// `-4 dx dy + (n-1)/rho (dx - dy)` for a callable field in double-null
/// coordinates (rotationally symmetric reduction).
pub fn double_null_box<W: Fn(f64, f64) -> f64>(
    w: &W,
    p: DoubleNullPoint,
    g: &ConeGeometry,
    h: f64,
) -> f64 {
    let (y, x) = (p.ynull, p.xnull);
    let cross = (w(y + h, x + h) - w(y + h, x - h) - w(y - h, x + h) + w(y - h, x - h))
        / (4.0 * h * h);
    let dx = (w(y, x + h) - w(y, x - h)) / (2.0 * h);
    let dy = (w(y + h, x) - w(y - h, x)) / (2.0 * h);
    let rho = g.rho(p);
    -4.0 * cross + (g.n as f64 - 1.0) / rho * (dx - dy)
}
