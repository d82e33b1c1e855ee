//! Closed-form interference statistics and SE bounds.

pub mod laplace;
pub mod quad;

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::Exp1;
use statrs::function::gamma::ln_gamma;

use crate::channel::{pathloss_gain, LinkBudget, LinkSet};
use crate::error::{Error, Result};
use crate::pzf::PzfParams;

pub use laplace::{contaminated_se_conditioned, contaminated_se_unconditioned, ShotNoise};

/// A PPP of D2D interferers as seen by one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceField {
    pub lambda: f64,
    /// Transmit power times the 1 m reference gain.
    pub power: f64,
    pub alpha: f64,
    pub xi_bar: f64,
    pub n0: f64,
}

impl InterferenceField {
    pub fn at_bs(budget: &LinkBudget, lambda: f64) -> Self {
        InterferenceField {
            lambda,
            power: budget.p_d * pathloss_gain(1.0, budget.alpha_c, budget.c_c0_db).unwrap_or(0.0),
            alpha: budget.alpha_c,
            xi_bar: budget.xi_bar(),
            n0: budget.n0_bs,
        }
    }

    pub fn at_ue(budget: &LinkBudget, lambda: f64) -> Self {
        InterferenceField {
            lambda,
            power: budget.p_d * pathloss_gain(1.0, budget.alpha_d, budget.c_d0_db).unwrap_or(0.0),
            alpha: budget.alpha_d,
            xi_bar: budget.xi_bar(),
            n0: budget.n0_ue,
        }
    }
}

/// Mean normalised interference left after nulling the `m` nearest PPP
/// points. Infinite when `m = 0` or `m + 1 ≤ α/2`.
pub fn rho(field: &InterferenceField, m: usize) -> f64 {
    if field.lambda == 0.0 {
        return 0.0;
    }
    let half = field.alpha / 2.0;
    if m == 0 || (m as f64) + 1.0 <= half {
        return f64::INFINITY;
    }
    let ratio = (ln_gamma(m as f64 + 1.0 - half) - ln_gamma(m as f64)).exp();
    2.0 * (PI * field.lambda).powf(half) * field.power * field.xi_bar * ratio
        / ((field.alpha - 2.0) * field.n0)
}

fn bound(residual: usize, snr: f64, leftover: f64, rho: f64) -> f64 {
    (1.0 + residual as f64 * snr / (leftover + rho + 1.0)).log2()
}

fn check_bound(params: &PzfParams, alpha: f64, lambda: f64) -> Result<()> {
    if params.cancel_cellular + params.cancel_d2d + 1 > params.antennas {
        return Err(Error::InfeasibleBound(format!(
            "{} + {} nulls leave no degree of freedom with {} antennas",
            params.cancel_cellular, params.cancel_d2d, params.antennas
        )));
    }
    if lambda > 0.0 && (params.cancel_d2d as f64) <= alpha / 2.0 - 1.0 {
        return Err(Error::InfeasibleBound(format!(
            "residual D2D interference is unbounded unless more than {} D2D links are nulled",
            (alpha / 2.0 - 1.0).floor()
        )));
    }
    Ok(())
}

fn leftover_snr(links: &LinkSet, skip: usize) -> f64 {
    links
        .cellular
        .iter()
        .skip(skip)
        .map(|i| i.coeff / links.noise)
        .sum()
}

/// Lower bound on the ergodic SE (bits) of a cellular uplink with a PZF
/// receiver, conditioned on the cellular geometry in `links`.
pub fn cellular_se_lower_bound(
    links: &LinkSet,
    params: &PzfParams,
    budget: &LinkBudget,
    lambda: f64,
) -> Result<f64> {
    check_bound(params, budget.alpha_c, lambda)?;
    let r = rho(&InterferenceField::at_bs(budget, lambda), params.cancel_d2d);
    Ok(bound(
        params.residual_dof() - 1,
        links.snr(),
        leftover_snr(links, params.cancel_cellular),
        r,
    ))
}

/// Lower bound on the ergodic SE (bits) of a D2D link with a PZF receiver.
pub fn d2d_se_lower_bound(
    links: &LinkSet,
    params: &PzfParams,
    budget: &LinkBudget,
    lambda: f64,
) -> Result<f64> {
    check_bound(params, budget.alpha_d, lambda)?;
    let r = rho(&InterferenceField::at_ue(budget, lambda), params.cancel_d2d);
    Ok(bound(
        params.residual_dof() - 1,
        links.snr(),
        leftover_snr(links, params.cancel_cellular),
        r,
    ))
}

/// Large-array limit `log2(1 + SNR/(ρ + 1))`; zero when ρ is infinite.
pub fn asymptotic_se_bound(snr: f64, rho: f64) -> f64 {
    if rho.is_infinite() {
        return 0.0;
    }
    (1.0 + snr / (rho + 1.0)).log2()
}

/// `Γ(m + 1 − α/2) / Γ(m)`.
pub fn gamma_ratio(m: usize, alpha: f64) -> Result<f64> {
    let a = m as f64 + 1.0 - alpha / 2.0;
    if m == 0 || a <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma ratio undefined for m = {m}, alpha = {alpha}"
        )));
    }
    Ok((ln_gamma(a) - ln_gamma(m as f64)).exp())
}

/// [`gamma_ratio`] next to its large-`m` approximation `(m − α/2)^{1 − α/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StirlingRatio {
    pub exact: f64,
    pub asymptote: f64,
    /// `|asymptote / exact − 1|`.
    pub rel_gap: f64,
}

pub fn stirling_gamma_ratio(m: usize, alpha: f64) -> Result<StirlingRatio> {
    let exact = gamma_ratio(m, alpha)?;
    let base = m as f64 - alpha / 2.0;
    let asymptote = if alpha == 2.0 {
        1.0
    } else {
        base.max(0.0).powf(1.0 - alpha / 2.0)
    };
    Ok(StirlingRatio {
        exact,
        asymptote,
        rel_gap: (asymptote / exact - 1.0).abs(),
    })
}

/// One draw of the cellular rate as the array grows with transmit power
/// scaled as `1/M`: only unnulled D2D interference with exponential fading
/// survives.
pub fn power_scaled_limit_sample<R: Rng + ?Sized>(
    links: &LinkSet,
    cancel_d2d: usize,
    rng: &mut R,
) -> f64 {
    let interf: f64 = links
        .d2d
        .iter()
        .skip(cancel_d2d)
        .map(|i| i.coeff / links.noise * rng.sample::<f64, _>(Exp1))
        .sum();
    (1.0 + links.snr() / (interf + 1.0)).log2()
}
