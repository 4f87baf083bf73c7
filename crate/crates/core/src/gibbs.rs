//! Parametric Gibbs energy of mixing models (in units of RT) and the reduced
//! van der Waals Helmholtz energy.
//!
//! Every binary excess model is written as `x(1-x) * h(x)`, so the excess
//! contribution vanishes at both pure-component limits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Sum-to-one tolerance for composition vectors.
const SUM_TOL: f64 = 1e-9;

/// Ideal mixing contribution `Σ x_i ln x_i`.
pub fn ideal_mixing(x: &[f64]) -> Result<f64> {
    check_composition(x)?;
    Ok(x.iter().map(|&c| c * c.ln()).sum())
}

fn check_composition(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::InvalidComposition(format!(
            "need at least 2 components, got {}",
            x.len()
        )));
    }
    for &c in x {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::CompositionOutOfRange { value: c });
        }
    }
    let s: f64 = x.iter().sum();
    if (s - 1.0).abs() > SUM_TOL {
        return Err(Error::InvalidComposition(format!("components sum to {s}")));
    }
    Ok(())
}

#[inline]
fn ideal_binary(x: f64) -> f64 {
    x * x.ln() + (1.0 - x) * (1.0 - x).ln()
}

#[inline]
fn ideal_binary_d2(x: f64) -> f64 {
    1.0 / (x * (1.0 - x))
}

fn default_alpha() -> f64 {
    0.2
}

/// Binary Gibbs energy of mixing model.
///
/// JSON form: `{"kind":"margules","A":2.5}`, `{"kind":"nrtl","tau12":1,"tau21":2}`,
/// `{"kind":"flexible","theta":[...]}`, `{"kind":"ideal"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeModel {
    Ideal,
    /// One-parameter Margules: `A x(1-x)`.
    Margules {
        #[serde(rename = "A")]
        a: f64,
    },
    Nrtl {
        tau12: f64,
        tau21: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Redlich–Kister style expansion `x(1-x) Σ_k θ_k (2x-1)^k`.
    Flexible {
        theta: Vec<f64>,
    },
}

impl GeModel {
    pub fn margules(a: f64) -> Self {
        GeModel::Margules { a }
    }

    pub fn nrtl(tau12: f64, tau21: f64) -> Self {
        GeModel::Nrtl {
            tau12,
            tau21,
            alpha: default_alpha(),
        }
    }

    /// Flexible model of order `order` with all coefficients zero.
    pub fn flexible_zeros(order: usize) -> Self {
        GeModel::Flexible {
            theta: vec![0.0; order + 1],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeModel::Ideal => "ideal",
            GeModel::Margules { .. } => "margules",
            GeModel::Nrtl { .. } => "nrtl",
            GeModel::Flexible { .. } => "flexible",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, "must be finite"))
            }
        };
        match self {
            GeModel::Ideal => Ok(()),
            GeModel::Margules { a } => finite("A", *a),
            GeModel::Nrtl {
                tau12,
                tau21,
                alpha,
            } => {
                finite("tau12", *tau12)?;
                finite("tau21", *tau21)?;
                finite("alpha", *alpha)
            }
            GeModel::Flexible { theta } => {
                if theta.is_empty() {
                    return Err(invalid("theta", "needs at least one coefficient"));
                }
                theta.iter().try_for_each(|&t| finite("theta", t))
            }
        }
    }

    /// Excess part `gE/RT` at an interior composition (no range check).
    pub fn excess(&self, x: f64) -> f64 {
        match self {
            GeModel::Ideal => 0.0,
            GeModel::Margules { a } => a * x * (1.0 - x),
            GeModel::Nrtl {
                tau12,
                tau21,
                alpha,
            } => {
                let nr = Nrtl::new(*tau12, *tau21, *alpha);
                nr.excess(x)
            }
            GeModel::Flexible { theta } => {
                let u = 2.0 * x - 1.0;
                x * (1.0 - x) * horner(theta, u)
            }
        }
    }

    /// `Δg_mix` at an interior composition (no range check).
    #[inline]
    pub fn gmix(&self, x: f64) -> f64 {
        self.excess(x) + ideal_binary(x)
    }

    /// Analytic `∂²Δg_mix/∂x²` at an interior composition.
    pub fn gmix_d2(&self, x: f64) -> f64 {
        let excess = match self {
            GeModel::Ideal => 0.0,
            GeModel::Margules { a } => -2.0 * a,
            GeModel::Nrtl {
                tau12,
                tau21,
                alpha,
            } => Nrtl::new(*tau12, *tau21, *alpha).excess_d2(x),
            GeModel::Flexible { theta } => {
                let u = 2.0 * x - 1.0;
                theta
                    .iter()
                    .enumerate()
                    .map(|(k, t)| t * flexible_d2_basis(k, u))
                    .sum()
            }
        };
        excess + ideal_binary_d2(x)
    }

    /// Trainable parameters: `[A]`, `[tau12, tau21]` or `θ`.
    pub fn params(&self) -> Result<Vec<f64>> {
        match self {
            GeModel::Ideal => Err(Error::NotTrainable("ideal")),
            GeModel::Margules { a } => Ok(vec![*a]),
            GeModel::Nrtl { tau12, tau21, .. } => Ok(vec![*tau12, *tau21]),
            GeModel::Flexible { theta } => Ok(theta.clone()),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            GeModel::Ideal => 0,
            GeModel::Margules { .. } => 1,
            GeModel::Nrtl { .. } => 2,
            GeModel::Flexible { theta } => theta.len(),
        }
    }

    /// Same model kind with new trainable parameters.
    pub fn with_params(&self, params: &[f64]) -> Result<GeModel> {
        let expected = self.n_params();
        if matches!(self, GeModel::Ideal) {
            return Err(Error::NotTrainable("ideal"));
        }
        if params.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: params.len(),
            });
        }
        Ok(match self {
            GeModel::Ideal => unreachable!(),
            GeModel::Margules { .. } => GeModel::Margules { a: params[0] },
            GeModel::Nrtl { alpha, .. } => GeModel::Nrtl {
                tau12: params[0],
                tau21: params[1],
                alpha: *alpha,
            },
            GeModel::Flexible { .. } => GeModel::Flexible {
                theta: params.to_vec(),
            },
        })
    }

    /// Writes `∂Δg_mix/∂θ` at `x` into `out` (length [`Self::n_params`]).
    pub fn param_gradient_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: out.len(),
            });
        }
        match self {
            GeModel::Ideal => return Err(Error::NotTrainable("ideal")),
            GeModel::Margules { .. } => out[0] = x * (1.0 - x),
            GeModel::Nrtl {
                tau12,
                tau21,
                alpha,
            } => {
                let g = Nrtl::new(*tau12, *tau21, *alpha).param_gradient(x);
                out.copy_from_slice(&g);
            }
            GeModel::Flexible { .. } => {
                let u = 2.0 * x - 1.0;
                let mut b = x * (1.0 - x);
                for o in out.iter_mut() {
                    *o = b;
                    b *= u;
                }
            }
        }
        Ok(())
    }

    /// Writes `∂/∂θ (∂²Δg_mix/∂x²)` at `x` into `out`.
    ///
    /// Closed form for Margules and the flexible expansion; NRTL uses
    /// central differences of the analytic curvature in parameter space.
    pub fn d2_param_gradient_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        if out.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                actual: out.len(),
            });
        }
        match self {
            GeModel::Ideal => return Err(Error::NotTrainable("ideal")),
            GeModel::Margules { .. } => out[0] = -2.0,
            GeModel::Flexible { .. } => {
                let u = 2.0 * x - 1.0;
                for (k, o) in out.iter_mut().enumerate() {
                    *o = flexible_d2_basis(k, u);
                }
            }
            GeModel::Nrtl {
                tau12,
                tau21,
                alpha,
            } => {
                let p = [*tau12, *tau21];
                for (k, o) in out.iter_mut().enumerate() {
                    let h = 1e-6 * p[k].abs().max(1.0);
                    let mut up = p;
                    let mut dn = p;
                    up[k] += h;
                    dn[k] -= h;
                    let fu = Nrtl::new(up[0], up[1], *alpha).excess_d2(x);
                    let fd = Nrtl::new(dn[0], dn[1], *alpha).excess_d2(x);
                    *o = (fu - fd) / (2.0 * h);
                }
            }
        }
        Ok(())
    }
}

fn horner(coeffs: &[f64], u: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// `d²/dx² [x(1-x)(2x-1)^k] = k(k-1)u^(k-2) - (k+1)(k+2)u^k` with `u = 2x-1`.
fn flexible_d2_basis(k: usize, u: f64) -> f64 {
    let lead = if k >= 2 {
        (k * (k - 1)) as f64 * u.powi(k as i32 - 2)
    } else {
        0.0
    };
    lead - ((k + 1) * (k + 2)) as f64 * u.powi(k as i32)
}

/// NRTL excess energy split as `c1 p/q1 + c2 p/q2` with `p = x(1-x)` and
/// linear denominators.
struct Nrtl {
    tau12: f64,
    tau21: f64,
    alpha: f64,
    g12: f64,
    g21: f64,
}

impl Nrtl {
    fn new(tau12: f64, tau21: f64, alpha: f64) -> Self {
        Self {
            tau12,
            tau21,
            alpha,
            g12: (-alpha * tau12).exp(),
            g21: (-alpha * tau21).exp(),
        }
    }

    // q1 = x1 + x2 G21, q2 = x2 + x1 G12 with x1 = x
    fn denominators(&self, x: f64) -> (f64, f64) {
        (x + (1.0 - x) * self.g21, (1.0 - x) + x * self.g12)
    }

    fn excess(&self, x: f64) -> f64 {
        let (q1, q2) = self.denominators(x);
        x * (1.0 - x) * (self.tau21 * self.g21 / q1 + self.tau12 * self.g12 / q2)
    }

    fn excess_d2(&self, x: f64) -> f64 {
        let p = x * (1.0 - x);
        let dp = 1.0 - 2.0 * x;
        let ratio_d2 =
            |q: f64, dq: f64| -2.0 / q - 2.0 * dp * dq / (q * q) + 2.0 * p * dq * dq / (q * q * q);
        let (q1, q2) = self.denominators(x);
        self.tau21 * self.g21 * ratio_d2(q1, 1.0 - self.g21)
            + self.tau12 * self.g12 * ratio_d2(q2, self.g12 - 1.0)
    }

    /// `[∂gE/∂tau12, ∂gE/∂tau21]` at fixed alpha.
    fn param_gradient(&self, x: f64) -> [f64; 2] {
        let p = x * (1.0 - x);
        let (q1, q2) = self.denominators(x);
        let a = self.alpha;
        let d21 = self.g21 * ((1.0 - a * self.tau21) * q1 + a * self.tau21 * (1.0 - x) * self.g21)
            / (q1 * q1);
        let d12 =
            self.g12 * ((1.0 - a * self.tau12) * q2 + a * self.tau12 * x * self.g12) / (q2 * q2);
        [p * d12, p * d21]
    }
}

/// Checked `Δg_mix(x)`.
pub fn eval_gmix(model: &GeModel, x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::CompositionOutOfRange { value: x });
    }
    Ok(model.gmix(x))
}

/// `Δg_mix` evaluated on a set of grid points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GibbsCurve {
    pub values: Vec<f64>,
}

impl GibbsCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

pub fn eval_curve(model: &GeModel, points: &[f64]) -> Result<GibbsCurve> {
    if points.is_empty() {
        return Err(Error::EmptyInput("grid points"));
    }
    let values = points
        .iter()
        .map(|&x| eval_gmix(model, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(GibbsCurve { values })
}

/// Curvature `∂²Δg_mix/∂x²` at `x`. All binary models here have a closed
/// form, so `h` only validates that the stencil `x ± h` stays inside (0, 1);
/// use [`central_second_difference`] for the finite-difference value.
pub fn second_derivative(model: &GeModel, x: f64, h: f64) -> Result<f64> {
    check_stencil(x, h)?;
    Ok(model.gmix_d2(x))
}

fn check_stencil(x: f64, h: f64) -> Result<()> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("step must be positive, got {h}")));
    }
    if !(x - h > 0.0 && x + h < 1.0) {
        return Err(Error::CompositionOutOfRange {
            value: if x - h <= 0.0 { x - h } else { x + h },
        });
    }
    Ok(())
}

/// `(g(x+h) - 2g(x) + g(x-h)) / h²`.
pub fn central_second_difference(model: &GeModel, x: f64, h: f64) -> Result<f64> {
    check_stencil(x, h)?;
    Ok((model.gmix(x + h) - 2.0 * model.gmix(x) + model.gmix(x - h)) / (h * h))
}

/// `∂Δg_mix/∂θ` at an interior composition.
pub fn param_gradient(model: &GeModel, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::CompositionOutOfRange { value: x });
    }
    let mut out = vec![0.0; model.n_params()];
    model.param_gradient_into(x, &mut out)?;
    Ok(out)
}

/// Symmetric ternary regular solution:
/// `A (x1 x2 + x1 x3 + x2 x3) + Σ x_i ln x_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTernaryModel {
    #[serde(rename = "A")]
    pub a: f64,
}

impl SymmetricTernaryModel {
    pub fn new(a: f64) -> Self {
        Self { a }
    }

    pub fn gmix(&self, x: &[f64]) -> Result<f64> {
        if x.len() != 3 {
            return Err(Error::LengthMismatch {
                expected: 3,
                actual: x.len(),
            });
        }
        let ideal = ideal_mixing(x)?;
        Ok(self.a * (x[0] * x[1] + x[0] * x[2] + x[1] * x[2]) + ideal)
    }
}

/// Reduced van der Waals fluid. Volumes are in units of the critical volume
/// and Helmholtz energies in units of `R T_c`; temperature-only terms are
/// dropped since they do not move the double tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdwHelmholtz {
    pub tr: f64,
}

impl VdwHelmholtz {
    pub fn new(tr: f64) -> Result<Self> {
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(invalid(
                "tr",
                format!("reduced temperature must be positive, got {tr}"),
            ));
        }
        Ok(Self { tr })
    }

    /// `a(v) = -Tr ln(3v-1) - 9/(8v)`.
    pub fn helmholtz(&self, v: f64) -> Result<f64> {
        if !(v > 1.0 / 3.0) || !v.is_finite() {
            return Err(invalid(
                "v",
                format!("reduced volume must exceed 1/3, got {v}"),
            ));
        }
        Ok(vdw_reduced_helmholtz(self.tr, v))
    }

    /// Reduced pressure `8Tr/(3v-1) - 3/v² = (8/3)(-∂a/∂v)`.
    pub fn pressure(&self, v: f64) -> f64 {
        8.0 * self.tr / (3.0 * v - 1.0) - 3.0 / (v * v)
    }

    /// Limits of mechanical instability (`∂p/∂v = 0`), or `None` at and
    /// above the critical temperature.
    pub fn spinodal_volumes(&self) -> Option<(f64, f64)> {
        if self.tr >= 1.0 {
            return None;
        }
        // ∂p/∂v = 0  <=>  4 Tr v³ = (3v-1)², negative between the two roots
        let h = |v: f64| 4.0 * self.tr * v.powi(3) - (3.0 * v - 1.0).powi(2);
        let lo = bisect(h, 1.0 / 3.0, 1.0)?;
        let mut upper = 2.0;
        while h(upper) < 0.0 {
            upper *= 2.0;
            if upper > 1e12 {
                return None;
            }
        }
        let hi = bisect(h, 1.0, upper)?;
        Some((lo, hi))
    }
}

/// `-Tr ln(3v-1) - 9/(8v)`; returns +∞ at and below `v = 1/3`.
pub fn vdw_reduced_helmholtz(tr: f64, v: f64) -> f64 {
    if v <= 1.0 / 3.0 {
        return f64::INFINITY;
    }
    -tr * (3.0 * v - 1.0).ln() - 9.0 / (8.0 * v)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    let lo_sign = flo.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
