//! Log-domain Laplace-transform integrals for the large-array SE under pilot
//! contamination.
//!
//! Uses `E ln(1 + S/I) = ∫_0^∞ (1/z)(1 − E e^{−zS}) E e^{−zI} dz` with S and I
//! independent, evaluated in `t = ln z`.

use std::f64::consts::{LN_10, LN_2, PI};

use statrs::function::gamma::gamma;

use super::quad::{gauss_legendre, integrate_adaptive, CompositeRule};
use crate::channel::{lognormal_fractional_moment, pathloss_gain, LinkBudget};
use crate::error::{Error, Result};
use crate::geom::{CellLayout, Point2};

/// Shot noise `Σ A² Ξ_i² r_i^{−2α}` over a homogeneous PPP of density
/// `lambda`. Its Laplace transform is `exp(−c z^{1/α})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotNoise {
    pub lambda: f64,
    pub amplitude: f64,
    pub alpha: f64,
    /// `E[Ξ^{2/α}]`.
    pub frac_moment: f64,
}

impl ShotNoise {
    pub fn lognormal(lambda: f64, amplitude: f64, alpha: f64, sigma_db: f64) -> Self {
        ShotNoise {
            lambda,
            amplitude,
            alpha,
            frac_moment: lognormal_fractional_moment(sigma_db, 2.0 / alpha),
        }
    }

    /// D2D training interference seen at a BS.
    pub fn d2d_at_bs(budget: &LinkBudget, lambda: f64) -> Self {
        let amplitude =
            budget.p_d * pathloss_gain(1.0, budget.alpha_c, budget.c_c0_db).unwrap_or(0.0);
        Self::lognormal(lambda, amplitude, budget.alpha_c, budget.sigma_db)
    }

    pub fn exponent(&self) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let a = self.alpha;
        PI * self.lambda * gamma(1.0 - 1.0 / a) * self.amplitude.powf(2.0 / a) * self.frac_moment
    }

    pub fn log_laplace(&self, z: f64) -> f64 {
        -self.exponent() * z.powf(1.0 / self.alpha)
    }
}

/// `∫ g(t) dt` over the real line for a non-negative integrand that decays in
/// both directions from around `center`. Result in the units of `g`.
pub fn integrate_log_domain(g: impl Fn(f64) -> f64, center: f64) -> Result<f64> {
    const STEP: f64 = 0.5;
    const MAX_STEPS: usize = 4000;
    const CUTOFF: f64 = 1e-14;

    let mut gmax = g(center);
    let mut hi = center;
    let mut below = 0;
    for step in 0.. {
        if step == MAX_STEPS {
            return Err(Error::Quadrature(
                "integrand does not decay as z grows".into(),
            ));
        }
        hi += STEP;
        let v = g(hi);
        gmax = gmax.max(v);
        below = if v <= CUTOFF * gmax { below + 1 } else { 0 };
        if below == 4 {
            break;
        }
    }
    let mut lo = center;
    below = 0;
    for step in 0.. {
        if step == MAX_STEPS {
            return Err(Error::Quadrature(
                "integrand does not decay as z shrinks".into(),
            ));
        }
        lo -= STEP;
        let v = g(lo);
        gmax = gmax.max(v);
        below = if v <= CUTOFF * gmax { below + 1 } else { 0 };
        if below == 4 {
            break;
        }
    }
    if gmax.is_nan() || gmax <= 0.0 {
        return Ok(0.0);
    }
    Ok(integrate_adaptive(g, lo, hi, 1e-10, 1e-13 * gmax, 20_000)?.value)
}

/// Large-array SE (bits) for given signal power `s_hat` and cellular
/// contamination `i_cc`, averaging D2D shot noise over the PPP. `noise` adds a
/// deterministic floor in the same units.
pub fn contaminated_se_conditioned(
    s_hat: f64,
    i_cc: f64,
    noise: f64,
    shot: Option<&ShotNoise>,
) -> Result<f64> {
    if !(s_hat >= 0.0 && i_cc >= 0.0 && noise >= 0.0) {
        return Err(Error::Domain("powers must be non-negative".into()));
    }
    if s_hat == 0.0 {
        return Ok(0.0);
    }
    let c = shot.map_or(0.0, ShotNoise::exponent);
    let inv_alpha = shot.map_or(0.0, |s| 1.0 / s.alpha);
    if i_cc + noise == 0.0 && c == 0.0 {
        return Err(Error::Domain(
            "SINR is unbounded without interference or noise".into(),
        ));
    }
    let g = |t: f64| {
        let z = t.exp();
        -(-z * s_hat).exp_m1() * (-z * (i_cc + noise) - c * (t * inv_alpha).exp()).exp()
    };
    Ok(integrate_log_domain(g, -s_hat.ln())? / LN_2)
}

/// `y ↦ E exp(−e^{y + sZ})` and `y ↦ E[1 − exp(−e^{y + sZ})]` for standard
/// normal Z, tabulated in the log domain.
#[derive(Debug, Clone)]
pub struct ShadowedExp {
    s: f64,
    y0: f64,
    h: f64,
    ln_lap: Vec<f64>,
    ln_psi: Vec<f64>,
}

impl ShadowedExp {
    /// `s` is the log-domain deviation of the shadowed gain.
    pub fn new(s: f64) -> Self {
        if s == 0.0 {
            return ShadowedExp {
                s,
                y0: 0.0,
                h: 0.0,
                ln_lap: Vec::new(),
                ln_psi: Vec::new(),
            };
        }
        let y0 = -(1.5 * s * s + 35.0);
        let y1 = 12.0 * s + 8.0;
        let h = 0.02;
        let n = ((y1 - y0) / h).ceil() as usize + 1;
        let z_rule = CompositeRule::new(-12.0, 12.0, 480, 4);
        let phi: Vec<f64> = z_rule
            .nodes
            .iter()
            .zip(&z_rule.weights)
            .map(|(z, w)| w * (-0.5 * z * z).exp() / (2.0 * PI).sqrt())
            .collect();
        let (mut ln_lap, mut ln_psi) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n {
            let y = y0 + i as f64 * h;
            let (mut lap, mut psi) = (0.0, 0.0);
            for (z, w) in z_rule.nodes.iter().zip(&phi) {
                let x = (y + s * z).exp();
                lap += w * (-x).exp();
                psi += w * -(-x).exp_m1();
            }
            ln_lap.push(lap.max(f64::MIN_POSITIVE).ln());
            ln_psi.push(psi.ln());
        }
        ShadowedExp {
            s,
            y0,
            h,
            ln_lap,
            ln_psi,
        }
    }

    fn interp(&self, table: &[f64], y: f64) -> f64 {
        let u = (y - self.y0) / self.h;
        let i = (u.floor() as usize).clamp(1, table.len() - 3);
        let f = u - i as f64;
        let (p0, p1, p2, p3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
        p1 + 0.5
            * f
            * (p2 - p0
                + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
    }

    /// `ln E exp(−e^{y + sZ})`.
    pub fn ln_laplace(&self, y: f64) -> f64 {
        if self.s == 0.0 {
            return -y.exp();
        }
        if y < self.y0 + self.h {
            return -(y + 0.5 * self.s * self.s).exp();
        }
        if y > self.y0 + self.h * (self.ln_lap.len() - 3) as f64 {
            return f64::NEG_INFINITY;
        }
        self.interp(&self.ln_lap, y)
    }

    /// `E[1 − exp(−e^{y + sZ})]`.
    pub fn one_minus(&self, y: f64) -> f64 {
        if self.s == 0.0 {
            return -(-y.exp()).exp_m1();
        }
        if y < self.y0 + self.h {
            return (y + 0.5 * self.s * self.s).exp();
        }
        if y > self.y0 + self.h * (self.ln_psi.len() - 3) as f64 {
            return 1.0;
        }
        self.interp(&self.ln_psi, y).exp().min(1.0)
    }
}

/// Density of `ln r` for a point uniform in a flat-top hexagon of side `side`,
/// `r` the distance to its center.
pub fn hex_log_radius_density(w: f64, side: f64) -> f64 {
    let r = w.exp();
    let apothem = side * 3f64.sqrt() / 2.0;
    if r >= side {
        return 0.0;
    }
    let area = 1.5 * 3f64.sqrt() * side * side;
    let mut dens = 2.0 * PI * r;
    if r > apothem {
        dens -= 12.0 * r * (apothem / r).acos();
    }
    dens * r / area
}

/// Composite rule in `w = ln r` for [`hex_log_radius_density`], graded
/// towards the kink at the apothem.
pub fn hex_log_radius_rule(side: f64) -> CompositeRule {
    let apothem = side * 3f64.sqrt() / 2.0;
    let w_a = apothem.ln();
    let w_lo = side.ln() - 35.0;
    let n = ((w_a - w_lo) / 0.05).ceil() as usize;
    let mut breaks: Vec<f64> = (0..n)
        .map(|i| w_lo + (w_a - w_lo) * i as f64 / n as f64)
        .collect();
    breaks.extend((0..=24).map(|i| (apothem + (side - apothem) * (i as f64 / 24.0).powi(2)).ln()));
    CompositeRule::with_breaks(&breaks, 6)
}

/// Quadrature nodes `(point, weight)` for the uniform average over a
/// hexagon: six triangles, each a collapsed `n × n` Gauss–Legendre rule.
pub fn hex_nodes(center: Point2, side: f64, n: usize) -> Vec<(Point2, f64)> {
    let (x, w) = gauss_legendre(n);
    let area = 1.5 * 3f64.sqrt() * side * side;
    let mut out = Vec::with_capacity(6 * n * n);
    for k in 0..6 {
        let a = Point2::polar(side, PI / 3.0 * k as f64);
        let b = Point2::polar(side, PI / 3.0 * (k + 1) as f64);
        let det = (a.x * b.y - a.y * b.x).abs();
        for (xs, ws) in x.iter().zip(&w) {
            let s = 0.5 * (xs + 1.0);
            for (xt, wt) in x.iter().zip(&w) {
                let t = 0.5 * (xt + 1.0);
                let p = Point2::new(
                    s * ((1.0 - t) * a.x + t * b.x),
                    s * ((1.0 - t) * a.y + t * b.y),
                );
                out.push((center + p, 0.25 * ws * wt * s * det / area));
            }
        }
    }
    out
}

/// Large-array SE (bits) of a cellular user averaged over user positions,
/// shadowing and the D2D PPP: cell-0 user uniform in its hexagon, one
/// co-pilot user uniform in every other cell.
pub fn contaminated_se_unconditioned(
    layout: &CellLayout,
    budget: &LinkBudget,
    lambda: f64,
) -> Result<f64> {
    budget.validate()?;
    let alpha = budget.alpha_c;
    let side = layout.side();
    let amp = budget.p_c * pathloss_gain(1.0, alpha, budget.c_c0_db)?;
    let ln_c = (budget.t_c as f64 * amp * amp).ln();
    let table = ShadowedExp::new(2.0 * budget.sigma_db * LN_10 / 10.0);

    let rule = hex_log_radius_rule(side);
    let own: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&w, &wt)| (-2.0 * alpha * w, wt * hex_log_radius_density(w, side)))
        .collect();

    let others: Vec<Vec<(f64, f64)>> = (1..layout.num_cells())
        .map(|b| {
            hex_nodes(layout.center(b), side, 16)
                .into_iter()
                .map(|(p, wt)| (-2.0 * alpha * p.norm().ln(), wt))
                .collect()
        })
        .collect();

    let shot = ShotNoise::d2d_at_bs(budget, lambda);
    let c = shot.exponent();
    let g = |t: f64| {
        let y = t + ln_c;
        let signal: f64 = own.iter().map(|(v, wt)| wt * table.one_minus(y + v)).sum();
        let ln_interf: f64 = others
            .iter()
            .map(|nodes| {
                nodes
                    .iter()
                    .map(|(v, wt)| wt * table.ln_laplace(y + v).exp())
                    .sum::<f64>()
                    .ln()
            })
            .sum();
        signal * (ln_interf - c * (t / alpha).exp()).exp()
    };
    if layout.num_cells() == 1 && c == 0.0 {
        return Err(Error::Domain(
            "SINR is unbounded without interference or noise".into(),
        ));
    }
    Ok(integrate_log_domain(g, -(ln_c - 2.0 * alpha * side.ln()))? / LN_2)
}
