//! Source terms for the reduced wave equation.
//!
//! A source is evaluated in double-null coordinates with all powers of `|x|`
//! combined symbolically before any floating-point exponentiation, so the
//! singular prefactor near null infinity never meets a compensating zero at
//! runtime. Monomial sources carry explicit exponent bookkeeping; the wave
//! map source implements the conformally transformed sigma-model
//! nonlinearity for a target given by its Christoffel symbols.

use thiserror::Error;

use crate::conformal::DoubleNullPoint;

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("source spec has no terms")]
    EmptySpec,
    #[error("term would evaluate |x|^{exponent} at x = 0")]
    ExponentUnderflow { exponent: f64 },
    #[error("alpha must lie in (-1, -1/2], got {alpha}")]
    BadAlpha { alpha: f64 },
    #[error("uniform zero order must be >= 2, got {order}")]
    BadOrder { order: u32 },
    #[error("direction annihilates every term of the source")]
    DegenerateDirection,
    #[error("Christoffel provider is not symmetric in its lower indices (max asymmetry {max_asym:.3e})")]
    BadTarget { max_asym: f64 },
}

/// One monomial `coeff * w^p (dy w)^qy (x dx w)^qx (dA w)^qA`, with an
/// optional extra `|x|` power carried by the coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialTerm {
    pub coeff: f64,
    pub pow_p: u32,
    pub pow_qy: u32,
    pub pow_qx: u32,
    pub pow_qa: u32,
    pub extra_x_exponent: f64,
}

impl MonomialTerm {
    /// Total degree in the field and its derivatives.
    pub fn degree(&self) -> u32 {
        self.pow_p + self.pow_qy + self.pow_qx + self.pow_qa
    }
}

/// Outcome of the dimension constraint `n >= 1 + 4/(r-1) - 2 alpha`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GateReport {
    pub pass: bool,
    pub margin: f64,
    pub n_min: usize,
}

/// Dimension constraint for a uniform zero of order `r` at weight `alpha`.
pub fn dimension_gate(n: usize, r: u32, alpha: f64) -> Result<GateReport, SourceError> {
    if !(alpha > -1.0 && alpha <= -0.5) {
        return Err(SourceError::BadAlpha { alpha });
    }
    if r < 2 {
        return Err(SourceError::BadOrder { order: r });
    }
    let bound = 1.0 + 4.0 / (r as f64 - 1.0) - 2.0 * alpha;
    let margin = n as f64 - bound;
    let n_min = (1..=64)
        .find(|&m| m as f64 - bound >= 0.0)
        .unwrap_or(64);
    Ok(GateReport { pass: margin >= 0.0, margin, n_min })
}

/// Wave-map dimension constraint `n >= 2 - 2 alpha`.
pub fn wave_map_gate(n: usize, alpha: f64) -> Result<GateReport, SourceError> {
    if !(alpha > -1.0 && alpha <= -0.5) {
        return Err(SourceError::BadAlpha { alpha });
    }
    let bound = 2.0 - 2.0 * alpha;
    let margin = n as f64 - bound;
    let n_min = (1..=64)
        .find(|&m| m as f64 - bound >= 0.0)
        .unwrap_or(64);
    Ok(GateReport { pass: margin >= 0.0, margin, n_min })
}

/// Field state passed to source evaluators, one slice entry per component.
#[derive(Debug, Clone, Copy)]
pub struct FieldState<'a> {
    pub omega: &'a [f64],
    pub dy: &'a [f64],
    pub dx: &'a [f64],
}

/// Right-hand side of the reduced wave equation as a function of the point
/// and the frozen field state.
pub trait SourceEval: Sync + Send {
    fn ncomp(&self) -> usize;

    /// Evaluates the RHS at `(y, x)` into `out` (length `ncomp`).
    fn eval(&self, y: f64, x: f64, state: FieldState<'_>, out: &mut [f64])
        -> Result<(), SourceError>;

    /// Uniform-zero order for field nonlinearities; `None` for external
    /// forcings, which are not subject to the dimension gate.
    fn uniform_zero_order(&self) -> Option<u32>;

    /// Dimension-gate report at weight `alpha`, when applicable.
    fn gate(&self, alpha: f64) -> Option<Result<GateReport, SourceError>>;
}

/// A finite sum of monomials with declared uniform-zero order.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    terms: Vec<MonomialTerm>,
    zero_order: u32,
    n: usize,
    /// Exponent of the singular prefactor `|x|^{-ell_pre}`.
    pub ell_pre: f64,
}

impl SourceSpec {
    pub fn new(n: usize, terms: Vec<MonomialTerm>) -> Result<Self, SourceError> {
        let zero_order = terms.iter().map(MonomialTerm::degree).min().ok_or(SourceError::EmptySpec)?;
        let ell_pre = (n as f64 + 3.0) / 2.0;
        Ok(Self { terms, zero_order, n, ell_pre })
    }

    /// Convenience constructor for a single pure power `coeff * w^r`.
    pub fn pure_power(n: usize, coeff: f64, r: u32) -> Self {
        Self::new(
            n,
            vec![MonomialTerm { coeff, pow_p: r, pow_qy: 0, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 }],
        )
        .expect("single term")
    }

    pub fn terms(&self) -> &[MonomialTerm] {
        &self.terms
    }

    pub fn zero_order(&self) -> u32 {
        self.zero_order
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Combined `|x|` exponent of one term after folding the prefactor, the
    /// argument weights and the `x`-derivative prefactor.
    pub fn combined_exponent(&self, t: &MonomialTerm) -> f64 {
        -self.ell_pre
            + t.degree() as f64 * (self.n as f64 - 1.0) / 2.0
            + t.pow_qx as f64
            + t.extra_x_exponent
    }

    /// Evaluates the full RHS with exponents combined before any power is
    /// taken. `da` is the angular derivative, zero in the symmetric
    /// reduction but kept for term bookkeeping.
    pub fn evaluate_factored(
        &self,
        p: DoubleNullPoint,
        omega: f64,
        dy: f64,
        dx: f64,
        da: f64,
    ) -> Result<f64, SourceError> {
        let ax = -p.xnull;
        debug_assert!(ax >= 0.0, "xnull must be non-positive");
        let mut acc = 0.0;
        for t in &self.terms {
            let e = self.combined_exponent(t);
            if ax == 0.0 && e < 0.0 {
                return Err(SourceError::ExponentUnderflow { exponent: e });
            }
            let sign = if t.pow_qx % 2 == 1 { -1.0 } else { 1.0 };
            acc += t.coeff
                * sign
                * ax.powf(e)
                * omega.powi(t.pow_p as i32)
                * dy.powi(t.pow_qy as i32)
                * dx.powi(t.pow_qx as i32)
                * da.powi(t.pow_qa as i32);
        }
        Ok(acc)
    }

    /// Reference evaluation that builds the weighted arguments first and
    /// applies the singular prefactor last. Loses accuracy near `x = 0`;
    /// used to cross-check [`Self::evaluate_factored`].
    pub fn evaluate_naive(&self, p: DoubleNullPoint, omega: f64, dy: f64, dx: f64, da: f64) -> f64 {
        let x = p.xnull;
        let ax = -x;
        let w = ax.powf((self.n as f64 - 1.0) / 2.0);
        let (parg, qy, qx, qa) = (w * omega, w * dy, w * x * dx, w * da);
        let mut g = 0.0;
        for t in &self.terms {
            g += t.coeff
                * ax.powf(t.extra_x_exponent)
                * parg.powi(t.pow_p as i32)
                * qy.powi(t.pow_qy as i32)
                * qx.powi(t.pow_qx as i32)
                * qa.powi(t.pow_qa as i32);
        }
        ax.powf(-self.ell_pre) * g
    }
}

impl SourceEval for SourceSpec {
    fn ncomp(&self) -> usize {
        1
    }

    fn eval(&self, y: f64, x: f64, state: FieldState<'_>, out: &mut [f64])
        -> Result<(), SourceError> {
        let p = DoubleNullPoint { ynull: y, xnull: x };
        out[0] = self.evaluate_factored(p, state.omega[0], state.dy[0], state.dx[0], 0.0)?;
        Ok(())
    }

    fn uniform_zero_order(&self) -> Option<u32> {
        Some(self.zero_order)
    }

    fn gate(&self, alpha: f64) -> Option<Result<GateReport, SourceError>> {
        Some(dimension_gate(self.n, self.zero_order, alpha))
    }
}

/// Field-independent forcing, used for manufactured-solution runs.
pub struct ForcingSource<F> {
    pub f: F,
}

impl<F: Fn(f64, f64) -> f64 + Sync + Send> SourceEval for ForcingSource<F> {
    fn ncomp(&self) -> usize {
        1
    }

    fn eval(&self, y: f64, x: f64, _state: FieldState<'_>, out: &mut [f64])
        -> Result<(), SourceError> {
        out[0] = (self.f)(y, x);
        Ok(())
    }

    fn uniform_zero_order(&self) -> Option<u32> {
        None
    }

    fn gate(&self, _alpha: f64) -> Option<Result<GateReport, SourceError>> {
        None
    }
}

/// Christoffel symbols of the target manifold in normal coordinates around
/// the asymptotic value.
pub trait ChristoffelProvider: Sync + Send {
    fn target_dim(&self) -> usize;

    /// Writes `Gamma^a_{bc}(f)` into `out[(a * nt + b) * nt + c]`.
    fn christoffel(&self, f: &[f64], out: &mut [f64]);
}

/// Flat target: all Christoffels vanish.
#[derive(Debug, Clone, Copy)]
pub struct FlatTarget {
    pub n_target: usize,
}

impl ChristoffelProvider for FlatTarget {
    fn target_dim(&self) -> usize {
        self.n_target
    }

    fn christoffel(&self, _f: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Constant-curvature target in geodesic normal coordinates, truncated at
/// linear order: `Gamma^a_{bc}(u) = (K/3)(2 d_{bc} u_a - d_{ac} u_b - d_{ab} u_c)`,
/// the expansion of the metric `g_{ab} = d_{ab} - (K/3)(|u|^2 d_{ab} - u_a u_b) + O(|u|^4)`.
/// For `K = 1` this matches the round sphere in normal coordinates.
#[derive(Debug, Clone, Copy)]
pub struct ConstantCurvatureTarget {
    pub k: f64,
    pub n_target: usize,
}

impl ChristoffelProvider for ConstantCurvatureTarget {
    fn target_dim(&self) -> usize {
        self.n_target
    }

    fn christoffel(&self, f: &[f64], out: &mut [f64]) {
        let nt = self.n_target;
        let third = self.k / 3.0;
        for a in 0..nt {
            for b in 0..nt {
                for c in 0..nt {
                    let mut v = 0.0;
                    if b == c {
                        v += 2.0 * f[a];
                    }
                    if a == c {
                        v -= f[b];
                    }
                    if a == b {
                        v -= f[c];
                    }
                    out[(a * nt + b) * nt + c] = third * v;
                }
            }
        }
    }
}

/// Conformally transformed wave-map source. The physical nonlinearity is
/// `-eta^{ab} Gamma(f) df df`; after compactification and the double-null
/// reduction the eta-contraction of gradients collapses to a multiple of
/// `dx . dy`, and two lower-order terms in the field and its scaling
/// derivative `x dx + (y - 1/a) dy` appear. All Omega powers are combined
/// before evaluation; the two prefactor conventions (`(n+1)/2` with a bare
/// bracket, `(n+3)/2` with one compensating Omega inside) yield the same
/// combined exponents, so `ell_pre` is recorded for reporting only.
pub struct WaveMapSource<P: ChristoffelProvider> {
    provider: P,
    n: usize,
    a: f64,
    pub ell_pre: f64,
}

impl<P: ChristoffelProvider> WaveMapSource<P> {
    pub fn new(provider: P, n: usize, a: f64) -> Result<Self, SourceError> {
        let nt = provider.target_dim();
        let mut gamma = vec![0.0; nt * nt * nt];
        // probe a few states for lower-index symmetry
        let probes: [Vec<f64>; 3] = [
            vec![0.0; nt],
            (0..nt).map(|i| 0.1 + 0.05 * i as f64).collect(),
            (0..nt).map(|i| -0.2 + 0.07 * i as f64).collect(),
        ];
        let mut max_asym = 0.0f64;
        for f in &probes {
            provider.christoffel(f, &mut gamma);
            for a_ix in 0..nt {
                for b in 0..nt {
                    for c in 0..nt {
                        let d = (gamma[(a_ix * nt + b) * nt + c] - gamma[(a_ix * nt + c) * nt + b]).abs();
                        max_asym = max_asym.max(d);
                    }
                }
            }
        }
        if max_asym > 1e-12 {
            return Err(SourceError::BadTarget { max_asym });
        }
        let ell_pre = (n as f64 + 1.0) / 2.0;
        Ok(Self { provider, n, a, ell_pre })
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }
}

impl<P: ChristoffelProvider> SourceEval for WaveMapSource<P> {
    fn ncomp(&self) -> usize {
        self.provider.target_dim()
    }

    fn eval(&self, y: f64, x: f64, state: FieldState<'_>, out: &mut [f64])
        -> Result<(), SourceError> {
        let nt = self.provider.target_dim();
        let nn = self.n as f64;
        let om = -x * (1.0 / self.a - y);
        if om == 0.0 {
            return Err(SourceError::ExponentUnderflow { exponent: nn - 2.0 });
        }
        // physical field values at which the Christoffels are evaluated
        let w_field = om.powf((nn - 1.0) / 2.0);
        let phys: Vec<f64> = state.omega.iter().map(|v| w_field * v).collect();
        let mut gamma = vec![0.0; nt * nt * nt];
        self.provider.christoffel(&phys, &mut gamma);

        // net Omega exponents after folding the prefactor with the bracket
        let e_grad = om.powf(nn - 1.0);
        let e_low = om.powf(nn - 2.0);
        let scale_der = |c: usize| x * state.dx[c] + (y - 1.0 / self.a) * state.dy[c];

        for a_ix in 0..nt {
            let mut acc = 0.0;
            for b in 0..nt {
                for c in 0..nt {
                    let g = gamma[(a_ix * nt + b) * nt + c];
                    if g == 0.0 {
                        continue;
                    }
                    let grad = -2.0 * (state.dx[b] * state.dy[c] + state.dy[b] * state.dx[c]);
                    let low = -(1.0 - nn) * (1.0 - nn) * state.omega[b] * state.omega[c]
                        + 2.0 * (1.0 - nn) * state.omega[b] * scale_der(c);
                    acc += g * (e_grad * grad + e_low * low);
                }
            }
            out[a_ix] = -acc;
        }
        Ok(())
    }

    fn uniform_zero_order(&self) -> Option<u32> {
        Some(3)
    }

    fn gate(&self, alpha: f64) -> Option<Result<GateReport, SourceError>> {
        Some(wave_map_gate(self.n, alpha))
    }
}

/// Log-log slope of `|S(eps * direction)|` versus `eps`; for a homogeneous
/// source this is the uniform-zero order.
pub fn scaling_probe(
    src: &dyn SourceEval,
    p: DoubleNullPoint,
    direction: FieldState<'_>,
    eps_grid: &[f64],
) -> Result<f64, SourceError> {
    assert!(eps_grid.len() >= 3, "need at least three scales");
    let nc = src.ncomp();
    let mut logs = Vec::with_capacity(eps_grid.len());
    let mut out = vec![0.0; nc];
    for &eps in eps_grid {
        let omega: Vec<f64> = direction.omega.iter().map(|v| eps * v).collect();
        let dy: Vec<f64> = direction.dy.iter().map(|v| eps * v).collect();
        let dx: Vec<f64> = direction.dx.iter().map(|v| eps * v).collect();
        src.eval(p.ynull, p.xnull, FieldState { omega: &omega, dy: &dy, dx: &dx }, &mut out)?;
        let mag = out.iter().map(|v| v * v).sum::<f64>().sqrt();
        if mag < 1e-300 {
            return Err(SourceError::DegenerateDirection);
        }
        logs.push((eps.ln(), mag.ln()));
    }
    // least-squares slope
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(x, _)| x).sum();
    let sy: f64 = logs.iter().map(|(_, y)| y).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| x * y).sum();
    Ok((n * sxy - sx * sy) / (n * sxx - sx * sx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(n: usize) -> SourceSpec {
        SourceSpec::pure_power(n, 1.0, 3)
    }

    #[test]
    fn zero_fields_give_zero() {
        let s = cubic(4);
        let p = DoubleNullPoint { ynull: 0.1, xnull: -0.3 };
        assert_eq!(s.evaluate_factored(p, 0.0, 0.0, 0.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn cubic_exponent_arithmetic() {
        // n = 4, ell_pre = 3.5, degree 3: E = -3.5 + 3 * 1.5 = 1.0,
        // so the RHS is |x| w^3.
        let s = cubic(4);
        assert_eq!(s.combined_exponent(&s.terms()[0]), 1.0);
        let p = DoubleNullPoint { ynull: 0.2, xnull: -0.5 };
        let got = s.evaluate_factored(p, 2.0, 0.0, 0.0, 0.0).unwrap();
        assert!((got - 0.5 * 8.0).abs() < 1e-14);
        let naive = s.evaluate_naive(p, 2.0, 0.0, 0.0, 0.0);
        assert!((got - naive).abs() < 1e-14 * got.abs());
    }

    #[test]
    fn factored_and_naive_agree_near_scri() {
        let s = SourceSpec::new(
            4,
            vec![
                MonomialTerm { coeff: 1.5, pow_p: 2, pow_qy: 1, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 },
                MonomialTerm { coeff: -0.7, pow_p: 0, pow_qy: 0, pow_qx: 3, pow_qa: 0, extra_x_exponent: 0.5 },
                MonomialTerm { coeff: 2.0, pow_p: 3, pow_qy: 0, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 },
            ],
        )
        .unwrap();
        for &x in &[-1e-3, -1e-4, -1e-6, -0.25] {
            let p = DoubleNullPoint { ynull: 0.1, xnull: x };
            let a = s.evaluate_factored(p, 0.3, -0.2, 0.9, 0.0).unwrap();
            let b = s.evaluate_naive(p, 0.3, -0.2, 0.9, 0.0);
            assert!(
                (a - b).abs() <= 1e-10 * (1.0 + a.abs()),
                "x={x}: factored {a} vs naive {b}"
            );
        }
    }

    #[test]
    fn sign_parity_of_x_derivative_terms() {
        // single term (x dx w)^1: value must carry the sign of x.
        let s = SourceSpec::new(
            4,
            vec![MonomialTerm { coeff: 1.0, pow_p: 0, pow_qy: 0, pow_qx: 1, pow_qa: 0, extra_x_exponent: 0.0 }],
        )
        .unwrap();
        let p = DoubleNullPoint { ynull: 0.0, xnull: -0.4 };
        let fac = s.evaluate_factored(p, 0.0, 0.0, 1.0, 0.0).unwrap();
        let naive = s.evaluate_naive(p, 0.0, 0.0, 1.0, 0.0);
        assert!((fac - naive).abs() < 1e-12 * naive.abs().max(1.0));
        assert!(fac < 0.0, "x dx w with dx w > 0 and x < 0 must be negative");
    }

    #[test]
    fn underflow_error_only_at_exact_zero() {
        let mut s = cubic(4);
        s.ell_pre = 10.0; // force a negative combined exponent
        let p = DoubleNullPoint { ynull: 0.0, xnull: 0.0 };
        assert!(matches!(
            s.evaluate_factored(p, 1.0, 0.0, 0.0, 0.0),
            Err(SourceError::ExponentUnderflow { .. })
        ));
    }

    #[test]
    fn zero_order_is_min_degree() {
        assert_eq!(cubic(4).zero_order(), 3);
        let pq = SourceSpec::new(
            4,
            vec![MonomialTerm { coeff: 1.0, pow_p: 1, pow_qy: 1, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 }],
        )
        .unwrap();
        assert_eq!(pq.zero_order(), 2);
        let mixed = SourceSpec::new(
            4,
            vec![
                MonomialTerm { coeff: 1.0, pow_p: 2, pow_qy: 0, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 },
                MonomialTerm { coeff: 1.0, pow_p: 3, pow_qy: 0, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 },
            ],
        )
        .unwrap();
        assert_eq!(mixed.zero_order(), 2);
        assert_eq!(SourceSpec::new(4, vec![]).unwrap_err(), SourceError::EmptySpec);
    }

    #[test]
    fn gate_reproduces_minimal_dimensions() {
        assert_eq!(dimension_gate(6, 2, -0.5).unwrap().n_min, 6);
        assert_eq!(dimension_gate(4, 3, -0.5).unwrap().n_min, 4);
        assert_eq!(dimension_gate(3, 5, -0.5).unwrap().n_min, 3);
        assert!(!dimension_gate(5, 2, -0.5).unwrap().pass);
        assert!(dimension_gate(6, 2, -0.5).unwrap().pass);
        assert_eq!(wave_map_gate(3, -0.5).unwrap().n_min, 3);
        assert!(matches!(dimension_gate(4, 3, 0.0), Err(SourceError::BadAlpha { .. })));
        assert!(matches!(dimension_gate(4, 1, -0.5), Err(SourceError::BadOrder { .. })));
    }

    #[test]
    fn scaling_probe_recovers_homogeneity() {
        let p = DoubleNullPoint { ynull: 0.1, xnull: -0.3 };
        let dir = FieldState { omega: &[0.7], dy: &[-0.4], dx: &[0.3] };
        let eps: Vec<f64> = (0..12).map(|i| 1e-4 * 10f64.powf(i as f64 * 0.25)).collect();

        let s3 = cubic(4);
        let slope = scaling_probe(&s3, p, dir, &eps).unwrap();
        assert!((slope - 3.0).abs() < 1e-6, "cubic slope {slope}");

        let s2 = SourceSpec::new(
            6,
            vec![MonomialTerm { coeff: 1.0, pow_p: 1, pow_qy: 1, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 }],
        )
        .unwrap();
        let slope = scaling_probe(&s2, p, dir, &eps).unwrap();
        assert!((slope - 2.0).abs() < 1e-6, "quadratic slope {slope}");
    }

    #[test]
    fn scaling_probe_rejects_annihilating_direction() {
        // pure dy-term with a direction that has dy = 0
        let s = SourceSpec::new(
            4,
            vec![MonomialTerm { coeff: 1.0, pow_p: 0, pow_qy: 2, pow_qx: 0, pow_qa: 0, extra_x_exponent: 0.0 }],
        )
        .unwrap();
        let p = DoubleNullPoint { ynull: 0.1, xnull: -0.3 };
        let dir = FieldState { omega: &[1.0], dy: &[0.0], dx: &[1.0] };
        let eps = [1e-4, 1e-3, 1e-2, 1e-1];
        assert_eq!(scaling_probe(&s, p, dir, &eps).unwrap_err(), SourceError::DegenerateDirection);
    }

    #[test]
    fn flat_target_gives_identically_zero_source() {
        let wm = WaveMapSource::new(FlatTarget { n_target: 3 }, 3, 1.0).unwrap();
        let mut out = vec![1.0; 3];
        let state = FieldState {
            omega: &[0.4, -0.2, 0.1],
            dy: &[0.3, 0.5, -0.7],
            dx: &[-0.1, 0.2, 0.6],
        };
        wm.eval(0.2, -0.3, state, &mut out).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn wave_map_source_scales_cubically() {
        let wm = WaveMapSource::new(ConstantCurvatureTarget { k: 1.0, n_target: 3 }, 3, 1.0).unwrap();
        let p = DoubleNullPoint { ynull: 0.15, xnull: -0.35 };
        let dir = FieldState {
            omega: &[0.5, -0.3, 0.2],
            dy: &[0.4, 0.1, -0.6],
            dx: &[-0.2, 0.7, 0.3],
        };
        let eps: Vec<f64> = (0..13).map(|i| 1e-4 * 10f64.powf(i as f64 * 0.25)).collect();
        let slope = scaling_probe(&wm, p, dir, &eps).unwrap();
        assert!((slope - 3.0).abs() < 0.05, "wave-map slope {slope}");
    }

    #[test]
    fn asymmetric_provider_is_rejected() {
        struct Skewed;
        impl ChristoffelProvider for Skewed {
            fn target_dim(&self) -> usize {
                2
            }
            fn christoffel(&self, _f: &[f64], out: &mut [f64]) {
                out.fill(0.0);
                out[(0 * 2 + 0) * 2 + 1] = 1.0; // Gamma^0_{01} != Gamma^0_{10}
            }
        }
        assert!(matches!(
            WaveMapSource::new(Skewed, 3, 1.0),
            Err(SourceError::BadTarget { .. })
        ));
    }

    /// Numeric Christoffels of the exact round-sphere metric in normal
    /// coordinates, used to validate the linear truncation.
    fn round_sphere_christoffel(u: &[f64], a: usize, b: usize, c: usize) -> f64 {
        let nt = u.len();
        let metric = |u: &[f64]| -> Vec<f64> {
            let rho2: f64 = u.iter().map(|v| v * v).sum();
            let rho = rho2.sqrt();
            let factor = if rho < 1e-9 { 1.0 - rho2 / 3.0 } else { (rho.sin() / rho).powi(2) };
            let mut g = vec![0.0; nt * nt];
            for i in 0..nt {
                for j in 0..nt {
                    let radial = if rho2 > 0.0 { u[i] * u[j] / rho2 } else { 0.0 };
                    let trans = if i == j { 1.0 } else { 0.0 } - radial;
                    g[i * nt + j] = radial + factor * trans;
                }
            }
            g
        };
        let h = 1e-5;
        let dg = |k: usize, i: usize, j: usize| -> f64 {
            let mut up = u.to_vec();
            up[k] += h;
            let mut dn = u.to_vec();
            dn[k] -= h;
            (metric(&up)[i * nt + j] - metric(&dn)[i * nt + j]) / (2.0 * h)
        };
        // invert the metric at u (2x2 / 3x3 by Gauss elimination)
        let g = metric(u);
        let mut inv = vec![0.0; nt * nt];
        let mut aug = vec![0.0; nt * 2 * nt];
        for i in 0..nt {
            for j in 0..nt {
                aug[i * 2 * nt + j] = g[i * nt + j];
            }
            aug[i * 2 * nt + nt + i] = 1.0;
        }
        for col in 0..nt {
            let piv = (col..nt)
                .max_by(|&r1, &r2| {
                    aug[r1 * 2 * nt + col].abs().partial_cmp(&aug[r2 * 2 * nt + col].abs()).unwrap()
                })
                .unwrap();
            for j in 0..2 * nt {
                aug.swap(col * 2 * nt + j, piv * 2 * nt + j);
            }
            let d = aug[col * 2 * nt + col];
            for j in 0..2 * nt {
                aug[col * 2 * nt + j] /= d;
            }
            for r in 0..nt {
                if r != col {
                    let m = aug[r * 2 * nt + col];
                    for j in 0..2 * nt {
                        aug[r * 2 * nt + j] -= m * aug[col * 2 * nt + j];
                    }
                }
            }
        }
        for i in 0..nt {
            for j in 0..nt {
                inv[i * nt + j] = aug[i * 2 * nt + nt + j];
            }
        }
        let mut v = 0.0;
        for d in 0..nt {
            v += 0.5 * inv[a * nt + d] * (dg(b, d, c) + dg(c, d, b) - dg(d, b, c));
        }
        v
    }

    #[test]
    fn truncated_christoffels_match_round_sphere_near_origin() {
        let target = ConstantCurvatureTarget { k: 1.0, n_target: 3 };
        let u = [0.008, -0.004, 0.006];
        let mut gamma = vec![0.0; 27];
        target.christoffel(&u, &mut gamma);
        for a in 0..3 {
            for b in 0..3 {
                for c in 0..3 {
                    let exact = round_sphere_christoffel(&u, a, b, c);
                    let approx = gamma[(a * 3 + b) * 3 + c];
                    assert!(
                        (exact - approx).abs() < 1e-5,
                        "Gamma^{a}_{{{b}{c}}}: exact {exact:.3e} vs truncated {approx:.3e}"
                    );
                }
            }
        }
    }
}
