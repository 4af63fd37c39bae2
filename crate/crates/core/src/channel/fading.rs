//! α-η-κ-μ short-term fading, sampled from its physical construction.
//!
//! The α-th power of the envelope is proportional to the clustered power
//!
//! ```text
//! G = Σ_{i=1..μ} (X_i + λ)² + (Y_i + λ)²
//! ```
//!
//! with independent zero-mean Gaussians, `Var X / Var Y = η`,
//! `Var X + Var Y = 1`, and equal in-phase/quadrature dominant amplitudes
//! `λ² = κ/2`, so that the dominant-to-scattered power ratio is κ. The
//! envelope is `h_f = r̂ (G / E[G])^{1/α}` with `E[G] = μ(1 + κ)`, hence
//! `E[h_f^α] = r̂^α`.
//!
//! For integer μ the sums are drawn literally. For fractional μ each of the
//! in-phase and quadrature sums is a scaled noncentral χ² with μ degrees of
//! freedom, drawn as a Poisson mixture of central χ² laws; for integer μ both
//! routes have the same law.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use super::ChannelError;
use crate::config::FadingParams;

#[derive(Debug, Clone)]
pub struct FadingSampler {
    inv_alpha: f64,
    r_hat: f64,
    mu: f64,
    sigma_x: f64,
    sigma_y: f64,
    lambda: f64,
    mean_power: f64,
    route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Route {
    Clusters(u32),
    NoncentralChiSquare,
}

impl FadingSampler {
    pub fn new(fp: &FadingParams) -> Result<Self, ChannelError> {
        Self::with_route(fp, false)
    }

    /// Forces the noncentral-χ² route even for integer μ.
    pub fn mixture_route(fp: &FadingParams) -> Result<Self, ChannelError> {
        Self::with_route(fp, true)
    }

    fn with_route(fp: &FadingParams, force_mixture: bool) -> Result<Self, ChannelError> {
        let ok = fp.alpha > 0.0
            && fp.eta > 0.0
            && fp.kappa >= 0.0
            && fp.mu > 0.0
            && fp.r_hat > 0.0
            && [fp.alpha, fp.eta, fp.kappa, fp.mu, fp.r_hat].iter().all(|v| v.is_finite());
        if !ok {
            return Err(ChannelError::UnsupportedParams(format!(
                "need alpha, eta, mu, r_hat > 0 and kappa >= 0 (got {fp:?})"
            )));
        }
        if fp.p_ext != 1.0 || fp.q_ext != 1.0 {
            return Err(ChannelError::UnsupportedParams("asymmetric p/q extensions are not sampled".into()));
        }
        let route = if !force_mixture && fp.mu.fract() == 0.0 && fp.mu <= 1024.0 {
            Route::Clusters(fp.mu as u32)
        } else {
            Route::NoncentralChiSquare
        };
        let var_x = fp.eta / (1.0 + fp.eta);
        let var_y = 1.0 / (1.0 + fp.eta);
        Ok(FadingSampler {
            inv_alpha: 1.0 / fp.alpha,
            r_hat: fp.r_hat,
            mu: fp.mu,
            sigma_x: var_x.sqrt(),
            sigma_y: var_y.sqrt(),
            lambda: (fp.kappa / 2.0).sqrt(),
            mean_power: fp.mu * (1.0 + fp.kappa),
            route,
        })
    }

    /// Draws the clustered power `G` (before normalisation).
    pub fn sample_power<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.route {
            Route::Clusters(mu) => {
                let mut g = 0.0;
                for _ in 0..mu {
                    let x: f64 = rng.sample(StandardNormal);
                    let y: f64 = rng.sample(StandardNormal);
                    let i = self.sigma_x * x + self.lambda;
                    let q = self.sigma_y * y + self.lambda;
                    g += i * i + q * q;
                }
                g
            }
            Route::NoncentralChiSquare => {
                let lambda_sq = self.lambda * self.lambda;
                let var_x = self.sigma_x * self.sigma_x;
                let var_y = self.sigma_y * self.sigma_y;
                var_x * noncentral_chi_square(self.mu, self.mu * lambda_sq / var_x, rng)
                    + var_y * noncentral_chi_square(self.mu, self.mu * lambda_sq / var_y, rng)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.r_hat * (self.sample_power(rng) / self.mean_power).powf(self.inv_alpha)
    }
}

/// χ'²(ν, δ) as χ²(ν + 2N) with N ~ Poisson(δ/2).
fn noncentral_chi_square<R: Rng + ?Sized>(dof: f64, noncentrality: f64, rng: &mut R) -> f64 {
    let extra = if noncentrality > 0.0 {
        let n: f64 = Poisson::new(noncentrality / 2.0).expect("positive Poisson rate").sample(rng);
        2.0 * n
    } else {
        0.0
    };
    2.0 * Gamma::new((dof + extra) / 2.0, 1.0).expect("positive gamma shape").sample(rng)
}

/// One envelope draw; `h_f = 1` when fading is disabled.
pub fn sample_fading<R: Rng + ?Sized>(fp: &FadingParams, rng: &mut R) -> Result<f64, ChannelError> {
    if !fp.enabled {
        return Ok(1.0);
    }
    Ok(FadingSampler::new(fp)?.sample(rng))
}
