//! Partial zero-forcing receivers and post-processing SINR under perfect CSI.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::Exp1;

use crate::channel::{sample_fading, ChannelSet, DetectionTarget, LinkSet};
use crate::error::{Error, Result};
use crate::geom::{nearest_interferers, NetworkDrop};
use crate::stats::{mean_var, NeumaierSum, Z95};

/// Degrees-of-freedom split of a PZF receiver: how many of the nearest
/// cellular and D2D interferers it nulls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PzfParams {
    pub cancel_cellular: usize,
    pub cancel_d2d: usize,
    pub antennas: usize,
}

impl PzfParams {
    pub fn new(cancel_cellular: usize, cancel_d2d: usize, antennas: usize) -> Self {
        PzfParams {
            cancel_cellular,
            cancel_d2d,
            antennas,
        }
    }

    pub fn mrc(antennas: usize) -> Self {
        PzfParams::new(0, 0, antennas)
    }

    /// Antennas left for array gain after nulling.
    pub fn residual_dof(&self) -> usize {
        self.antennas
            .saturating_sub(self.cancel_cellular + self.cancel_d2d)
    }

    /// BS-side feasibility for a layout of `num_cells` cells with `k` UEs each.
    pub fn check_bs(&self, num_cells: usize, k: usize) -> Result<()> {
        let others = (num_cells * k).saturating_sub(1);
        if self.cancel_cellular > others {
            return Err(Error::InfeasiblePzf(format!(
                "m_c = {} exceeds the {others} other cellular UEs",
                self.cancel_cellular
            )));
        }
        self.check_dims("m_c + m_d", "M")
    }

    /// UE-side feasibility.
    pub fn check_ue(&self, num_cells: usize, k: usize) -> Result<()> {
        if self.cancel_cellular > num_cells * k {
            return Err(Error::InfeasiblePzf(format!(
                "n_c = {} exceeds the {} cellular UEs",
                self.cancel_cellular,
                num_cells * k
            )));
        }
        self.check_dims("n_c + n_d", "N")
    }

    fn check_dims(&self, what: &str, dim: &str) -> Result<()> {
        if self.antennas == 0 || self.cancel_cellular + self.cancel_d2d >= self.antennas {
            return Err(Error::InfeasiblePzf(format!(
                "{what} = {} must be below {dim} = {}",
                self.cancel_cellular + self.cancel_d2d,
                self.antennas
            )));
        }
        Ok(())
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Removes the components of `v` along the orthonormal `basis`, twice
/// (classical Gram–Schmidt with one reorthogonalization pass).
fn project_out(v: &mut [Complex64], basis: &[Vec<Complex64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
        }
    }
}

/// Relative norm below which a reorthogonalized column counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Unit-norm projection of `desired` onto the orthogonal complement of the
/// span of `canceled`. With nothing to cancel this is MRC.
pub fn pzf_filter<V: AsRef<[Complex64]>>(
    desired: &[Complex64],
    canceled: &[V],
) -> Result<Vec<Complex64>> {
    let dim = desired.len();
    if canceled.len() >= dim {
        return Err(Error::InfeasiblePzf(format!(
            "{} canceled channels with {dim} antennas",
            canceled.len()
        )));
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(canceled.len());
    for (column, c) in canceled.iter().enumerate() {
        let c = c.as_ref();
        if c.len() != dim {
            return Err(Error::Domain(format!(
                "channel {column} has length {}, expected {dim}",
                c.len()
            )));
        }
        let scale = norm(c);
        let mut v = c.to_vec();
        project_out(&mut v, &basis);
        let n = norm(&v);
        if n.is_nan() || n <= RANK_TOL * scale {
            return Err(Error::RankDeficient { column });
        }
        v.iter_mut().for_each(|x| *x /= n);
        basis.push(v);
    }
    let mut w = desired.to_vec();
    project_out(&mut w, &basis);
    let n = norm(&w);
    if n.is_nan() || n <= RANK_TOL * norm(desired) {
        return Err(Error::Domain(
            "desired channel lies in the canceled subspace".into(),
        ));
    }
    w.iter_mut().for_each(|x| *x /= n);
    Ok(w)
}

/// Interferers a receiver nulls: flat cellular UE indices and D2D
/// transmitter indices, nearest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CancelTargets {
    pub cellular: Vec<usize>,
    pub d2d: Vec<usize>,
}

/// The `cancel_cellular` nearest cellular interferers and `cancel_d2d`
/// nearest D2D transmitters of `target`'s receiver. Requests beyond the
/// number of candidates cancel everything available.
pub fn select_cancellation_targets(
    drop: &NetworkDrop,
    target: DetectionTarget,
    params: &PzfParams,
) -> CancelTargets {
    let (rx, skip_ue, skip_d2d) = match target {
        DetectionTarget::Cellular { k } => (drop.layout.center(0), Some(drop.ue_index(0, k)), None),
        DetectionTarget::D2d { pair } => (drop.d2d.rx[pair], None, Some(pair)),
    };
    let ues: Vec<_> = drop.cellular_points().collect();
    let nearest_excluding = |points: &[_], skip: Option<usize>, m: usize| -> Vec<usize> {
        let extra = usize::from(skip.is_some());
        let mut v = nearest_interferers(rx, points, m + extra);
        v.retain(|&i| Some(i) != skip);
        v.truncate(m);
        v
    };
    CancelTargets {
        cellular: nearest_excluding(&ues, skip_ue, params.cancel_cellular),
        d2d: nearest_excluding(&drop.d2d.tx, skip_d2d, params.cancel_d2d),
    }
}

impl CancelTargets {
    /// Same selection read off a [`LinkSet`], whose lists are already sorted.
    pub fn from_links(links: &LinkSet, params: &PzfParams) -> Self {
        CancelTargets {
            cellular: links
                .cellular
                .iter()
                .take(params.cancel_cellular)
                .map(|i| i.index)
                .collect(),
            d2d: links
                .d2d
                .iter()
                .take(params.cancel_d2d)
                .map(|i| i.index)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal: f64,
    pub cellular_interf: f64,
    pub d2d_interf: f64,
    pub noise: f64,
    pub sinr: f64,
}

impl SinrBreakdown {
    pub fn new(signal: f64, cellular_interf: f64, d2d_interf: f64, noise: f64) -> Self {
        let sinr = signal / (cellular_interf + d2d_interf + noise);
        SinrBreakdown {
            signal,
            cellular_interf,
            d2d_interf,
            noise,
            sinr,
        }
    }
}

fn breakdown(ch: &ChannelSet, w: &[Complex64]) -> SinrBreakdown {
    let interf = |list: &[crate::channel::ChannelEntry]| -> f64 {
        list.iter()
            .filter(|e| !e.canceled)
            .map(|e| e.coeff * dot(w, &e.h).norm_sqr())
            .sum()
    };
    let signal = ch.desired_coeff * dot(w, &ch.desired).norm_sqr();
    let w_norm2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
    SinrBreakdown::new(
        signal,
        interf(&ch.cellular),
        interf(&ch.d2d),
        w_norm2 * ch.noise,
    )
}

/// Post-processing SINR at BS 0. Canceled interferers are left out of the
/// sums rather than relying on numerical nulling.
pub fn sinr_cellular(channels: &ChannelSet, w: &[Complex64]) -> SinrBreakdown {
    debug_assert!(matches!(channels.target, DetectionTarget::Cellular { .. }));
    breakdown(channels, w)
}

/// Post-processing SINR at a D2D receiver.
pub fn sinr_d2d(channels: &ChannelSet, w: &[Complex64]) -> SinrBreakdown {
    debug_assert!(matches!(channels.target, DetectionTarget::D2d { .. }));
    breakdown(channels, w)
}

/// How fading is realized for one detection problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FadingMode {
    /// Only the desired and canceled channels get explicit vectors. For an
    /// uncanceled interferer, `w*h` is independent of `w` and CN(0, ‖w‖²),
    /// so `|w*h|²` is drawn directly as Exp(1).
    #[default]
    Projected,
    /// Every interferer gets an explicit vector.
    Full,
}

/// One fading realization of the SINR for the detection problem in `links`.
pub fn sample_sinr<R: Rng + ?Sized>(
    links: &LinkSet,
    targets: &CancelTargets,
    antennas: usize,
    mode: FadingMode,
    rng: &mut R,
) -> Result<SinrBreakdown> {
    match mode {
        FadingMode::Full => {
            let mut ch = ChannelSet::sample(links, antennas, rng);
            ch.mark_canceled(&targets.cellular, &targets.d2d);
            let w = pzf_filter(&ch.desired, &ch.canceled_vectors())?;
            Ok(breakdown(&ch, &w))
        }
        FadingMode::Projected => {
            let desired = sample_fading(antennas, rng);
            let canceled: Vec<_> = (0..targets.cellular.len() + targets.d2d.len())
                .map(|_| sample_fading(antennas, rng))
                .collect();
            let w = pzf_filter(&desired, &canceled)?;
            let signal = links.desired_coeff * dot(&w, &desired).norm_sqr();
            let mut uncanceled = |list: &[crate::channel::Interferer], skip: usize| -> f64 {
                let mut s = NeumaierSum::default();
                for i in &list[skip.min(list.len())..] {
                    let e: f64 = rng.sample(Exp1);
                    s.add(i.coeff * e);
                }
                s.value()
            };
            let ic = uncanceled(&links.cellular, targets.cellular.len());
            let id = uncanceled(&links.d2d, targets.d2d.len());
            Ok(SinrBreakdown::new(signal, ic, id, links.noise))
        }
    }
}

/// Spectral-efficiency estimate in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeEstimate {
    pub mean: f64,
    pub std_err: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub ci_halfwidth: f64,
    pub samples: usize,
}

/// Mean of `log2(1 + SINR)` with its standard error.
pub fn spectral_efficiency(sinr_samples: &[f64]) -> Result<SeEstimate> {
    if sinr_samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rates: Vec<f64> = sinr_samples
        .iter()
        .map(|s| s.ln_1p() / std::f64::consts::LN_2)
        .collect();
    let (mean, var) = mean_var(&rates);
    let std_err = (var / rates.len() as f64).sqrt();
    Ok(SeEstimate {
        mean,
        std_err,
        ci_halfwidth: Z95 * std_err,
        samples: rates.len(),
    })
}

/// Pools per-group sums of `log2(1 + SINR)` into a ratio estimate whose
/// standard error treats groups (drops) as the independent units.
pub fn grouped_estimate(groups: &[(f64, usize)]) -> Result<SeEstimate> {
    let total: usize = groups.iter().map(|g| g.1).sum();
    if total == 0 {
        return Err(Error::EmptySamples);
    }
    let n = groups.len() as f64;
    let mean = groups.iter().map(|g| g.0).collect::<NeumaierSum>().value() / total as f64;
    let std_err = if groups.len() > 1 {
        let avg_count = total as f64 / n;
        let ss: NeumaierSum = groups
            .iter()
            .map(|&(s, c)| {
                let r = (s - mean * c as f64) / avg_count;
                r * r
            })
            .collect();
        (ss.value() / (n * (n - 1.0))).sqrt()
    } else {
        0.0
    };
    Ok(SeEstimate {
        mean,
        std_err,
        ci_halfwidth: Z95 * std_err,
        samples: total,
    })
}
