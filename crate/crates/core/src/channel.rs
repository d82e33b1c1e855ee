//! Pathloss, shadowing, fading and link-budget arithmetic.
//!
//! All powers are linear milliwatts. A link's large-scale coefficient is
//! `P · Ξ · 10^{-C0/10} · d^{-α}`, with `α_c, C_c0` for links into a BS and
//! `α_d, C_d0` for links into a D2D receiver.

use std::f64::consts::{FRAC_1_SQRT_2, LN_10};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geom::{NetworkDrop, Point2};
use crate::rng::{derive_seed, hashed_normal};

pub type CVec = Vec<Complex64>;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Thermal noise over `bandwidth_hz` plus the receiver noise figure, in mW.
pub fn noise_power_mw(psd_dbm_hz: f64, bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_mw(psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    /// Cellular transmit power, mW.
    pub p_c: f64,
    /// D2D transmit power, mW.
    pub p_d: f64,
    pub alpha_c: f64,
    pub alpha_d: f64,
    pub c_c0_db: f64,
    pub c_d0_db: f64,
    /// Noise power at a BS, mW.
    pub n0_bs: f64,
    /// Noise power at a UE, mW.
    pub n0_ue: f64,
    pub sigma_db: f64,
    /// Training length in symbols.
    pub t_c: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            p_c: dbm_to_mw(23.0),
            p_d: dbm_to_mw(13.0),
            alpha_c: 3.76,
            alpha_d: 4.37,
            c_c0_db: 15.3,
            c_d0_db: 38.5,
            n0_bs: noise_power_mw(-174.0, 10e6, 6.0),
            n0_ue: noise_power_mw(-174.0, 10e6, 9.0),
            sigma_db: 7.0,
            t_c: 4,
        }
    }
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("p_c", self.p_c),
            ("p_d", self.p_d),
            ("n0_bs", self.n0_bs),
            ("n0_ue", self.n0_ue),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "budget.{name} must be positive, got {v}"
                )));
            }
        }
        for (name, a) in [("alpha_c", self.alpha_c), ("alpha_d", self.alpha_d)] {
            if !(a > 2.0 && a.is_finite()) {
                return Err(Error::Config(format!(
                    "budget.{name} must exceed 2, got {a}"
                )));
            }
        }
        if !(self.sigma_db >= 0.0 && self.sigma_db.is_finite()) {
            return Err(Error::Config(format!(
                "budget.sigma_db must be non-negative, got {}",
                self.sigma_db
            )));
        }
        if self.t_c == 0 {
            return Err(Error::Config("budget.t_c must be at least 1".into()));
        }
        Ok(())
    }

    /// Copy with the cellular transmit power multiplied by `factor`.
    pub fn scale_pc(&self, factor: f64) -> Self {
        LinkBudget {
            p_c: self.p_c * factor,
            ..self.clone()
        }
    }

    pub fn xi_bar(&self) -> f64 {
        shadowing_mean(self.sigma_db)
    }

    /// Pathloss gain of a UE→BS link.
    pub fn gain_bs(&self, dist: f64) -> Result<f64> {
        pathloss_gain(dist, self.alpha_c, self.c_c0_db)
    }

    /// Pathloss gain of a UE→UE link.
    pub fn gain_ue(&self, dist: f64) -> Result<f64> {
        pathloss_gain(dist, self.alpha_d, self.c_d0_db)
    }
}

/// `10^{-C0/10} · dist^{-α}`.
pub fn pathloss_gain(dist: f64, alpha: f64, c0_db: f64) -> Result<f64> {
    if dist.is_nan() || dist <= 0.0 {
        return Err(Error::Domain(format!(
            "pathloss needs a positive distance, got {dist}"
        )));
    }
    Ok(db_to_linear(-c0_db) * dist.powf(-alpha))
}

pub fn snr_linear(p: f64, xi: f64, dist: f64, alpha: f64, c0_db: f64, n0: f64) -> Result<f64> {
    Ok(p * xi * pathloss_gain(dist, alpha, c0_db)? / n0)
}

/// Lognormal shadowing gain `10^{X/10}` with `X ~ N(0, σ²)` in dB.
pub fn sample_shadowing<R: Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    db_to_linear(sigma_db * z)
}

pub fn shadowing_mean(sigma_db: f64) -> f64 {
    lognormal_fractional_moment(sigma_db, 1.0)
}

/// `E[Ξ^p]` for lognormal shadowing with deviation `sigma_db`.
pub fn lognormal_fractional_moment(sigma_db: f64, p: f64) -> f64 {
    let s = p * sigma_db * LN_10 / 10.0;
    (0.5 * s * s).exp()
}

/// One CN(0, 1) entry.
#[inline]
pub fn sample_cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// I.i.d. CN(0, 1) vector.
pub fn sample_fading<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    (0..dim).map(|_| sample_cn(rng)).collect()
}

/// Transmit or receive end of a link, used to address shadowing gains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    /// Flat cellular UE index `b * K + k`.
    CellularUe(usize),
    D2dTx(usize),
    Bs(usize),
    D2dRx(usize),
}

impl Node {
    fn key(self) -> u64 {
        let (tag, i) = match self {
            Node::CellularUe(i) => (1u64, i),
            Node::D2dTx(i) => (2, i),
            Node::Bs(i) => (3, i),
            Node::D2dRx(i) => (4, i),
        };
        (tag << 56) | i as u64
    }
}

/// I.i.d. lognormal shadowing for every (transmitter, receiver) pair of a
/// drop, computed on demand from a hash of the pair so nothing is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadowField {
    seed: u64,
    sigma_db: f64,
}

impl ShadowField {
    pub fn new(seed: u64, sigma_db: f64) -> Self {
        ShadowField { seed, sigma_db }
    }

    pub fn sigma_db(&self) -> f64 {
        self.sigma_db
    }

    pub fn gain(&self, tx: Node, rx: Node) -> f64 {
        if self.sigma_db == 0.0 {
            return 1.0;
        }
        let z = hashed_normal(derive_seed(self.seed, &[tx.key(), rx.key()]));
        db_to_linear(self.sigma_db * z)
    }
}

/// Receiver whose detection problem is being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionTarget {
    /// Cellular UE `k` of cell 0, received at BS 0.
    Cellular { k: usize },
    /// D2D pair `pair`, received at its own receiver.
    D2d { pair: usize },
}

/// Large-scale description of one interferer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    /// Flat UE index or D2D transmitter index.
    pub index: usize,
    pub dist: f64,
    /// Received power coefficient `P · Ξ · pathloss`.
    pub coeff: f64,
}

/// Large-scale quantities of one detection problem. Interferer lists are
/// sorted nearest first, ties broken by index.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSet {
    pub target: DetectionTarget,
    pub desired_coeff: f64,
    pub desired_dist: f64,
    pub cellular: Vec<Interferer>,
    pub d2d: Vec<Interferer>,
    pub noise: f64,
}

impl LinkSet {
    pub fn build(drop: &NetworkDrop, target: DetectionTarget, budget: &LinkBudget) -> Result<Self> {
        let (rx_point, rx_node, alpha, c0, noise) = match target {
            DetectionTarget::Cellular { .. } => (
                drop.layout.center(0),
                Node::Bs(0),
                budget.alpha_c,
                budget.c_c0_db,
                budget.n0_bs,
            ),
            DetectionTarget::D2d { pair } => (
                drop.d2d.rx[pair],
                Node::D2dRx(pair),
                budget.alpha_d,
                budget.c_d0_db,
                budget.n0_ue,
            ),
        };
        let link = |p: f64, tx: Node, at: Point2| -> Result<(f64, f64)> {
            let dist = at.dist(rx_point);
            let coeff = p * drop.shadow.gain(tx, rx_node) * pathloss_gain(dist, alpha, c0)?;
            Ok((dist, coeff))
        };

        let (desired_tx, desired_power, skip_ue, skip_d2d) = match target {
            DetectionTarget::Cellular { k } => {
                let idx = drop.ue_index(0, k);
                (
                    (Node::CellularUe(idx), drop.ue(idx)),
                    budget.p_c,
                    Some(idx),
                    None,
                )
            }
            DetectionTarget::D2d { pair } => (
                (Node::D2dTx(pair), drop.d2d.tx[pair]),
                budget.p_d,
                None,
                Some(pair),
            ),
        };
        let (desired_dist, desired_coeff) = link(desired_power, desired_tx.0, desired_tx.1)?;

        let mut cellular = Vec::with_capacity(drop.num_cellular());
        for (j, p) in drop.cellular_points().enumerate() {
            if Some(j) != skip_ue {
                let (dist, coeff) = link(budget.p_c, Node::CellularUe(j), p)?;
                cellular.push(Interferer {
                    index: j,
                    dist,
                    coeff,
                });
            }
        }
        let mut d2d = Vec::with_capacity(drop.d2d.len());
        for (i, &p) in drop.d2d.tx.iter().enumerate() {
            if Some(i) != skip_d2d {
                let (dist, coeff) = link(budget.p_d, Node::D2dTx(i), p)?;
                d2d.push(Interferer {
                    index: i,
                    dist,
                    coeff,
                });
            }
        }
        let order =
            |a: &Interferer, b: &Interferer| a.dist.total_cmp(&b.dist).then(a.index.cmp(&b.index));
        cellular.sort_unstable_by(order);
        d2d.sort_unstable_by(order);
        Ok(LinkSet {
            target,
            desired_coeff,
            desired_dist,
            cellular,
            d2d,
            noise,
        })
    }

    /// Desired-link SNR.
    pub fn snr(&self) -> f64 {
        self.desired_coeff / self.noise
    }
}

/// A fading vector with its large-scale coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEntry {
    pub index: usize,
    pub h: CVec,
    pub coeff: f64,
    pub canceled: bool,
}

/// Fading vectors of every transmitter relevant to one detection problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub target: DetectionTarget,
    pub desired: CVec,
    pub desired_coeff: f64,
    pub cellular: Vec<ChannelEntry>,
    pub d2d: Vec<ChannelEntry>,
    pub noise: f64,
}

impl ChannelSet {
    /// Draws a fading vector of length `dim` for every link in `links`.
    pub fn sample<R: Rng + ?Sized>(links: &LinkSet, dim: usize, rng: &mut R) -> Self {
        let mut entries = |list: &[Interferer]| -> Vec<ChannelEntry> {
            list.iter()
                .map(|i| ChannelEntry {
                    index: i.index,
                    h: sample_fading(dim, rng),
                    coeff: i.coeff,
                    canceled: false,
                })
                .collect()
        };
        let cellular = entries(&links.cellular);
        let d2d = entries(&links.d2d);
        ChannelSet {
            target: links.target,
            desired: sample_fading(dim, rng),
            desired_coeff: links.desired_coeff,
            cellular,
            d2d,
            noise: links.noise,
        }
    }

    pub fn dim(&self) -> usize {
        self.desired.len()
    }

    /// Flags the listed cellular UEs and D2D transmitters as canceled.
    pub fn mark_canceled(&mut self, cellular: &[usize], d2d: &[usize]) {
        for e in &mut self.cellular {
            e.canceled = cellular.contains(&e.index);
        }
        for e in &mut self.d2d {
            e.canceled = d2d.contains(&e.index);
        }
    }

    /// Channel vectors of all canceled interferers, cellular first.
    pub fn canceled_vectors(&self) -> Vec<&[Complex64]> {
        self.cellular
            .iter()
            .chain(&self.d2d)
            .filter(|e| e.canceled)
            .map(|e| e.h.as_slice())
            .collect()
    }
}

/// Builds the full channel set for `target` with `dim` receive antennas.
pub fn assemble_channel_set<R: Rng + ?Sized>(
    drop: &NetworkDrop,
    target: DetectionTarget,
    budget: &LinkBudget,
    dim: usize,
    rng: &mut R,
) -> Result<ChannelSet> {
    let links = LinkSet::build(drop, target, budget)?;
    Ok(ChannelSet::sample(&links, dim, rng))
}
