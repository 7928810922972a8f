//! Alpha-stable laws in Nolan's continuous (S0) parametrization.
//!
//! `S(alpha, beta, gamma, delta)` has characteristic function
//!
//! ```text
//! alpha != 1: exp(-g^a |u|^a [1 + i b tan(pi a / 2) sign(u) (|g u|^(1-a) - 1)] + i d u)
//! alpha == 1: exp(-g |u| [1 + i b (2/pi) sign(u) ln(g |u|)] + i d u)
//! ```
//!
//! Draws use the Chambers-Mallows-Stuck transform, which produces the
//! classical S1 form; the location is shifted back into S0 afterwards.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sample::Sample;

/// Below this distance from one the `alpha == 1` formulas are used, since
/// `tan(pi * alpha / 2)` blows up at the seam.
pub const ALPHA_ONE_TOLERANCE: f64 = 1e-8;

/// Scale at which `S(2, 0, gamma, 0)` is the standard normal.
pub const UNIT_NORMAL_GAMMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 2], got {alpha}"
            )));
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [-1, 1], got {beta}"
            )));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive and finite, got {gamma}"
            )));
        }
        if !delta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite, got {delta}"
            )));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            delta,
        })
    }

    /// The symmetric law `S(alpha, 0, sqrt(2)/2, 0)` used throughout the
    /// simulations; at `alpha = 2` it is `N(0, 1)`.
    pub fn symmetric_standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.0, UNIT_NORMAL_GAMMA, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn is_alpha_one(&self) -> bool {
        (self.alpha - 1.0).abs() < ALPHA_ONE_TOLERANCE
    }
}

pub fn characteristic_function(p: &StableParams, u: f64) -> Complex64 {
    if u == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let StableParams {
        alpha,
        beta,
        gamma,
        delta,
    } = *p;
    let abs_u = u.abs();
    let sign = u.signum();
    let exponent = if p.is_alpha_one() {
        let scale = gamma * abs_u;
        let skew = beta * (2.0 / PI) * sign * (gamma * abs_u).ln();
        Complex64::new(-scale, -scale * skew + delta * u)
    } else {
        let scale = gamma.powf(alpha) * abs_u.powf(alpha);
        let skew = if beta == 0.0 {
            0.0
        } else {
            beta * (FRAC_PI_2 * alpha).tan() * sign * ((gamma * abs_u).powf(1.0 - alpha) - 1.0)
        };
        Complex64::new(-scale, -scale * skew + delta * u)
    };
    exponent.exp()
}

/// Which tail of the law a tail constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// `c_alpha = sin(pi alpha / 2) Gamma(alpha) / pi`.
pub fn c_alpha(alpha: f64) -> f64 {
    (FRAC_PI_2 * alpha).sin() * statrs::function::gamma::gamma(alpha) / PI
}

/// Limit of `x^alpha P(X > x)` (upper) or `x^alpha P(X < -x)` (lower).
pub fn tail_constant(p: &StableParams, side: Side) -> Result<f64> {
    if p.alpha >= 2.0 {
        return Err(Error::Domain(
            "alpha = 2 has Gaussian tails, not a power tail".into(),
        ));
    }
    if p.beta.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "|beta| = 1 is totally skewed; tail constant needs -1 < beta < 1, got {}",
            p.beta
        )));
    }
    let skew = match side {
        Side::Upper => 1.0 + p.beta,
        Side::Lower => 1.0 - p.beta,
    };
    Ok(c_alpha(p.alpha) * skew * p.gamma.powf(p.alpha))
}

/// `E[X] = delta - beta gamma tan(pi alpha / 2)` for `1 < alpha <= 2`;
/// `None` when the mean is undefined (`alpha <= 1`).
pub fn stable_mean(p: &StableParams) -> Option<f64> {
    if p.alpha <= 1.0 {
        return None;
    }
    if p.beta == 0.0 {
        return Some(p.delta);
    }
    Some(p.delta - p.beta * p.gamma * (FRAC_PI_2 * p.alpha).tan())
}

/// Chambers-Mallows-Stuck draw from the standardized S1 law
/// `S1(alpha, beta, 1, 0)` given `v ~ U(-pi/2, pi/2)` and `w ~ Exp(1)`.
fn cms_standard(alpha: f64, beta: f64, alpha_one: bool, v: f64, w: f64) -> f64 {
    if alpha_one {
        let shifted = FRAC_PI_2 + beta * v;
        return (shifted * v.tan() - beta * ((FRAC_PI_2 * w * v.cos()) / shifted).ln()) / FRAC_PI_2;
    }
    if beta == 0.0 {
        return (alpha * v).sin() / v.cos().powf(1.0 / alpha)
            * ((v * (1.0 - alpha)).cos() / w).powf((1.0 - alpha) / alpha);
    }
    let zeta = beta * (FRAC_PI_2 * alpha).tan();
    let b = zeta.atan() / alpha;
    let s = (1.0 + zeta * zeta).powf(1.0 / (2.0 * alpha));
    let arg = alpha * (v + b);
    s * arg.sin() / v.cos().powf(1.0 / alpha) * ((v - arg).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Drawing state for one parameter set; precomputes the S1 location.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    params: StableParams,
    alpha_one: bool,
    s1_location: f64,
}

impl StableSampler {
    pub fn new(params: StableParams) -> Self {
        let alpha_one = params.is_alpha_one();
        let StableParams {
            alpha,
            beta,
            gamma,
            delta,
        } = params;
        // Additive term after scaling the standardized draw. For alpha = 1
        // the S0 -> S1 shift and the CMS scale correction are both
        // (2/pi) beta gamma ln(gamma) and cancel.
        let s1_location = if beta == 0.0 || alpha_one {
            delta
        } else {
            delta - beta * gamma * (FRAC_PI_2 * alpha).tan()
        };
        Self {
            params,
            alpha_one,
            s1_location,
        }
    }

    pub fn params(&self) -> &StableParams {
        &self.params
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let StableParams {
            alpha, beta, gamma, ..
        } = self.params;
        loop {
            let u: f64 = rng.random();
            if u == 0.0 {
                continue;
            }
            let v = PI * (u - 0.5);
            let w: f64 = Exp1.sample(rng);
            let x = cms_standard(alpha, beta, self.alpha_one, v, w);
            let y = gamma * x + self.s1_location;
            if y.is_finite() {
                return y;
            }
        }
    }

    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for slot in out {
            *slot = self.draw(rng);
        }
    }
}

/// `n` i.i.d. draws from `p`, fully determined by `(p, n, stream)`.
pub fn sample(p: &StableParams, n: usize, stream: RngStream) -> Result<Sample> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(Sample::from_finite_unchecked(sample_values(p, n, stream)))
}

pub(crate) fn sample_values(p: &StableParams, n: usize, stream: RngStream) -> Vec<f64> {
    let sampler = StableSampler::new(*p);
    let mut rng = stream.rng();
    let mut values = vec![0.0; n];
    sampler.fill(&mut rng, &mut values);
    values
}
