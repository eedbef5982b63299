//! Population (infinite-sample) EM maps evaluated by quadrature.
//!
//! With `X ~ (1−δ*)·N(η,1) + δ*·N(−η,1)` and `β = β_{δ_iter}`:
//!
//! * `f(θ) = E[X·tanh(Xθ + β)]`, the one-dimensional mean map;
//! * `F(a,b) = E[V·tanh(aV + bW + β)]` and `G(a,b) = E[W·tanh(aV + bW + β)]`,
//!   the signal and orthogonal maps of a `d`-dimensional iterate
//!   `θ = a·θ̂* + b·ξ` (`V` distributed as `X`, `W ~ N(0,1)` independent);
//! * `h(ρ) = E[tanh(‖θ‖V + β_ρ)]`, the weight map for a frozen mean `θ`, where
//!   `V` is the mixture projected on `θ̂`.
//!
//! `F` and `G` are reduced to one-dimensional integrals with Stein's identity:
//! `aV + bW = a·Sη + r·Z` with `r = √(a²+b²)`, giving
//! `F = Σ_s π_s (sη·E[tanh(asη + rZ + β)] + a·E[sech²(asη + rZ + β)])` and
//! `G = b·Σ_s π_s E[sech²(asη + rZ + β)]`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fixed_point::bisect;
use crate::linalg::{dot, ln_cosh, norm, sech2, tanh_diff, tanh_step};
use crate::model::{delta_to_beta, rho_to_beta, MixtureParams};
use crate::quadrature::{QuadratureGrid, MIN_ORDER};

fn check_grid(grid: &QuadratureGrid) -> Result<()> {
    if grid.order() < MIN_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {} below the minimum of {MIN_ORDER}",
            grid.order()
        )));
    }
    Ok(())
}

fn check_delta(name: &str, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("{name}={delta} must lie in (0,1)")));
    }
    Ok(())
}

/// One-dimensional population mean map `θ ↦ f(θ | η, δ*)` iterated with weight `δ_iter`.
///
/// `delta_iter ≠ delta_star` gives the mismatched map used when the weight is misspecified.
#[derive(Debug, Clone)]
pub struct PopMeanMap1D {
    eta: f64,
    delta_star: f64,
    delta_iter: f64,
    beta: f64,
    grid: Arc<QuadratureGrid>,
}

impl PopMeanMap1D {
    pub fn new(eta: f64, delta_star: f64, delta_iter: f64, grid: Arc<QuadratureGrid>) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta={eta} must be finite and nonnegative")));
        }
        check_delta("delta_star", delta_star)?;
        check_delta("delta_iter", delta_iter)?;
        check_grid(&grid)?;
        let beta = delta_to_beta(delta_iter)?;
        Ok(Self { eta, delta_star, delta_iter, beta, grid })
    }

    /// The correctly specified map, `δ_iter = δ*`, on the default rule.
    pub fn matched(eta: f64, delta: f64) -> Result<Self> {
        Self::new(eta, delta, delta, QuadratureGrid::standard())
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn delta_star(&self) -> f64 {
        self.delta_star
    }

    pub fn delta_iter(&self) -> f64 {
        self.delta_iter
    }

    /// `Σ_s π_s E_Z[g(sη + Z)]` over the two mixture components.
    fn mixture_expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let plus = self.grid.expect(|z| g(self.eta + z));
        let minus = self.grid.expect(|z| g(-self.eta + z));
        (1.0 - self.delta_star) * plus + self.delta_star * minus
    }

    /// `f(θ) = E[X·tanh(Xθ + β)]`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.mixture_expect(|x| x * (x * theta + self.beta).tanh())
    }

    /// Closed-form derivatives: `f′ = E[X² sech²(Xθ+β)]`, `f″ = −2E[X³ tanh(Xθ+β) sech²(Xθ+β)]`.
    pub fn deriv(&self, theta: f64, order: u8) -> Result<f64> {
        match order {
            1 => Ok(self.mixture_expect(|x| x * x * sech2(x * theta + self.beta))),
            2 => Ok(-2.0
                * self.mixture_expect(|x| {
                    let u = x * theta + self.beta;
                    x * x * x * u.tanh() * sech2(u)
                })),
            _ => Err(Error::InvalidArgument(format!("derivative order {order} not supported (1 or 2)"))),
        }
    }
}

impl PopMeanMap1D {
    /// `f(θ) − f(θ')` without cancellation, `E[X·(tanh(Xθ+β) − tanh(Xθ'+β))]`.
    pub fn increment(&self, theta: f64, theta_prime: f64) -> f64 {
        self.mixture_expect(|x| x * tanh_diff(x * theta + self.beta, x * theta_prime + self.beta))
    }

    /// One step of the error recursion `e ↦ η − f(η − e)` for `e = η − θ`.
    ///
    /// Relies on `f(η) = η`, so errors stay resolvable far below the
    /// absolute accuracy of a single map evaluation.
    pub fn error_step(&self, e: f64) -> f64 {
        -self.mixture_expect(|x| x * tanh_step(x * self.eta + self.beta, -x * e))
    }
}

pub fn pop_mean_1d(map: &PopMeanMap1D, theta: f64) -> f64 {
    map.eval(theta)
}

pub fn pop_mean_1d_deriv(map: &PopMeanMap1D, theta: f64, order: u8) -> Result<f64> {
    map.deriv(theta, order)
}

/// Signal map `F(a,b)` and orthogonal map `G(a,b)` of the `d > 1` population iteration.
#[derive(Debug, Clone)]
pub struct SignalOrthogonalMap {
    eta: f64,
    delta_star: f64,
    beta: f64,
    grid: Arc<QuadratureGrid>,
}

impl SignalOrthogonalMap {
    pub fn new(eta: f64, delta_star: f64, delta_iter: f64, grid: Arc<QuadratureGrid>) -> Result<Self> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::Domain(format!("eta={eta} must be finite and nonnegative")));
        }
        check_delta("delta_star", delta_star)?;
        check_delta("delta_iter", delta_iter)?;
        check_grid(&grid)?;
        Ok(Self { eta, delta_star, beta: delta_to_beta(delta_iter)?, grid })
    }

    pub fn matched(eta: f64, delta: f64) -> Result<Self> {
        Self::new(eta, delta, delta, QuadratureGrid::standard())
    }

    /// Returns `(F(a,b), G(a,b))` from a single pass over the nodes.
    pub fn step(&self, a: f64, b: f64) -> (f64, f64) {
        let r = a.hypot(b);
        let mut f = 0.0;
        let mut s2 = 0.0;
        for (sign, weight) in [(1.0, 1.0 - self.delta_star), (-1.0, self.delta_star)] {
            let shift = a * sign * self.eta + self.beta;
            let mut t_sum = 0.0;
            let mut s_sum = 0.0;
            for (&z, &w) in self.grid.nodes().iter().zip(self.grid.weights()) {
                let u = shift + r * z;
                t_sum += w * u.tanh();
                s_sum += w * sech2(u);
            }
            f += weight * (sign * self.eta * t_sum + a * s_sum);
            s2 += weight * s_sum;
        }
        (f, b * s2)
    }

    pub fn signal(&self, a: f64, b: f64) -> f64 {
        self.step(a, b).0
    }

    pub fn orthogonal(&self, a: f64, b: f64) -> f64 {
        self.step(a, b).1
    }
}

pub fn signal_map(map: &SignalOrthogonalMap, a: f64, b: f64) -> f64 {
    map.signal(a, b)
}

pub fn orthogonal_map(map: &SignalOrthogonalMap, a: f64, b: f64) -> f64 {
    map.orthogonal(a, b)
}

/// Population mean map `f(θ, ρ | θ*, ρ*) = E[X·tanh(⟨θ,X⟩ + β_ρ)]` in `d` dimensions.
pub fn pop_mean(params: &MixtureParams, theta: &[f64], rho: f64, grid: Arc<QuadratureGrid>) -> Result<Vec<f64>> {
    let d = params.d();
    if theta.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: theta.len() });
    }
    rho_to_beta(rho)?;
    let eta = params.eta();
    let map = SignalOrthogonalMap::new(eta, params.delta_star(), (1.0 - rho) / 2.0, grid)?;
    let theta_norm = norm(theta);
    // Unit vector along the signal; with θ* = 0 any direction works, so take θ̂.
    let u: Vec<f64> = if eta > 0.0 {
        params.theta_star.iter().map(|v| v / eta).collect()
    } else if theta_norm > 0.0 {
        theta.iter().map(|v| v / theta_norm).collect()
    } else {
        return Ok(vec![0.0; d]);
    };
    let a = dot(theta, &u);
    let resid: Vec<f64> = theta.iter().zip(&u).map(|(t, ui)| t - a * ui).collect();
    let b = norm(&resid);
    let (f, g) = map.step(a, b);
    Ok(u.iter().zip(&resid).map(|(ui, ri)| f * ui + if b > 0.0 { g * ri / b } else { 0.0 }).collect())
}

/// Population weight map `ρ ↦ h(ρ, θ | θ*, ρ*)` for a frozen mean `θ`.
#[derive(Debug, Clone)]
pub struct PopWeightMap {
    theta_norm: f64,
    /// `⟨θ, θ*⟩`
    inner: f64,
    /// `⟨θ̂, θ*⟩`, the mean of the projected mixture.
    projection: f64,
    rho_star: f64,
    grid: Arc<QuadratureGrid>,
}

impl PopWeightMap {
    pub fn new(theta: &[f64], theta_star: &[f64], rho_star: f64, grid: Arc<QuadratureGrid>) -> Result<Self> {
        if theta.len() != theta_star.len() {
            return Err(Error::DimensionMismatch { expected: theta_star.len(), got: theta.len() });
        }
        rho_to_beta(rho_star)?;
        check_grid(&grid)?;
        let theta_norm = norm(theta);
        let inner = dot(theta, theta_star);
        let projection = if theta_norm > 0.0 { inner / theta_norm } else { 0.0 };
        Ok(Self { theta_norm, inner, projection, rho_star, grid })
    }

    pub fn with_standard_grid(theta: &[f64], theta_star: &[f64], rho_star: f64) -> Result<Self> {
        Self::new(theta, theta_star, rho_star, QuadratureGrid::standard())
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    fn projected_expect<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        let plus = self.grid.expect(|z| g(self.projection + z));
        let minus = self.grid.expect(|z| g(-self.projection + z));
        0.5 * (1.0 + self.rho_star) * plus + 0.5 * (1.0 - self.rho_star) * minus
    }

    /// `h(ρ) = E[tanh(‖θ‖V + β_ρ)]`.
    pub fn eval(&self, rho: f64) -> Result<f64> {
        let beta = rho_to_beta(rho)?;
        Ok(self.projected_expect(|v| (self.theta_norm * v + beta).tanh()))
    }

    /// `h(ρ) − ρ = E[tanh(‖θ‖V + β) − tanh(β)]`, accurate as `ρ → ±1`.
    pub fn gap(&self, rho: f64) -> Result<f64> {
        let beta = rho_to_beta(rho)?;
        Ok(self.projected_expect(|v| tanh_diff(self.theta_norm * v + beta, beta)))
    }

    /// `h′(1) = e^{2‖θ‖²}·[(1+ρ*)/2·e^{−2⟨θ,θ*⟩} + (1−ρ*)/2·e^{2⟨θ,θ*⟩}]`.
    pub fn deriv_at_one(&self) -> f64 {
        let t2 = self.theta_norm * self.theta_norm;
        (2.0 * t2).exp()
            * (0.5 * (1.0 + self.rho_star) * (-2.0 * self.inner).exp()
                + 0.5 * (1.0 - self.rho_star) * (2.0 * self.inner).exp())
    }

    /// The interior fixed point `ρ_# ∈ (−1,1)`, which exists iff `h′(1) > 1`.
    pub fn find_fixed_point(&self) -> Result<Option<f64>> {
        if self.inner == 0.0 {
            return Err(Error::Unidentifiable("weight is unidentifiable when <theta, theta_star> = 0".into()));
        }
        if self.deriv_at_one() <= 1.0 {
            return Ok(None);
        }
        let lo = -1.0 + 1e-9;
        let hi = 1.0 - 1e-9;
        let g = |r: f64| self.gap(r).unwrap_or(f64::NAN);
        let g_lo = g(lo);
        let g_hi = g(hi);
        if (g_lo < 0.0) != (g_hi < 0.0) && g_lo != 0.0 && g_hi != 0.0 {
            return Ok(Some(bisect(&g, lo, hi, g_lo)));
        }
        // Endpoint gaps are O(1e-9); fall back to a scan if rounding hid the bracket.
        let n = 4000;
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        for i in 1..n {
            if gs[i] == 0.0 {
                return Ok(Some(xs[i]));
            }
            if (gs[i] < 0.0) != (gs[i + 1] < 0.0) && gs[i + 1] != 0.0 {
                return Ok(Some(bisect(&g, xs[i], xs[i + 1], gs[i])));
            }
        }
        Ok(None)
    }
}

pub fn pop_weight(map: &PopWeightMap, rho: f64) -> Result<f64> {
    map.eval(rho)
}

pub fn weight_deriv_at_one(map: &PopWeightMap) -> f64 {
    map.deriv_at_one()
}

pub fn find_weight_fixed_point(map: &PopWeightMap) -> Result<Option<f64>> {
    map.find_fixed_point()
}

/// `s(u) = −tanh(u+β) + tanh(u−β) − 1/(2δ cosh²(u+β)) + 1/(2(1−δ) cosh²(u−β))`,
/// with `β = atanh(1−2δ)` required to hold to 1e-10.
pub fn s_function(u: f64, beta: f64, delta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!("beta={beta} must be positive")));
    }
    check_delta("delta", delta)?;
    let expected = (1.0 - 2.0 * delta).atanh();
    if (beta - expected).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "beta={beta} inconsistent with delta={delta} (expected {expected})"
        )));
    }
    // Equivalent closed form −2 sinhβ cosh³β (1+e^{−2u}) / (cosh²(u+β) cosh²(u−β)),
    // evaluated in the log domain: the four-term sum cancels to e^{−4u} order for large u.
    let softplus = if u >= 0.0 { (-2.0 * u).exp().ln_1p() } else { -2.0 * u + (2.0 * u).exp().ln_1p() };
    let log_mag = std::f64::consts::LN_2 + beta.sinh().ln() + 3.0 * ln_cosh(beta) + softplus
        - 2.0 * ln_cosh(u + beta)
        - 2.0 * ln_cosh(u - beta);
    Ok(-log_mag.exp())
}
