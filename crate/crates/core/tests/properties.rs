//! Statistical properties of the simulator checked against independent
//! closed forms.

use std::f64::consts::{LN_2, PI};

use d2dmimo::analytic::power_scaled_limit_sample;
use d2dmimo::channel::{lognormal_fractional_moment, sample_fading, sample_shadowing, LinkBudget};
use d2dmimo::csi::CsiFading;
use d2dmimo::geom::{build_hex_layout, drop_d2d_pairs, nearest_interferers, DropSpec, Point2};
use d2dmimo::harness::SweepVar;
use d2dmimo::pzf::{grouped_estimate, sample_sinr, CancelTargets};
use d2dmimo::{
    run_experiment, DetectionTarget, EstimatedCsi, ExperimentConfig, FadingMode, LinkSet,
    NetworkDrop, PzfParams, TrainingMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Gamma, Poisson};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_drop(density: f64, seed: u64) -> NetworkDrop {
    let layout = build_hex_layout(1, 500.0);
    let spec = DropSpec {
        ues_per_cell: 4,
        lambda: density / (PI * 500.0 * 500.0),
        d2d_distance: 20.0,
        region_radius: 3.0 * layout.circumradius(),
        sigma_db: 7.0,
    };
    NetworkDrop::generate(&layout, &spec, seed).unwrap()
}

#[test]
fn ppp_counts_in_a_subregion_are_poisson() {
    let lambda = 12.0 / (PI * 500.0 * 500.0);
    let (region, window, drops) = (4000.0, 500.0, 10_000);
    let mut r = rng(1);
    let mut counts = vec![0usize; 64];
    for _ in 0..drops {
        let pairs = drop_d2d_pairs(region, lambda, 20.0, &mut r).unwrap();
        let inside = pairs.tx.iter().filter(|p| p.norm() <= window).count();
        counts[inside.min(63)] += 1;
    }
    let law = Poisson::new(lambda * PI * window * window).unwrap();
    // Bins 0..=4 and 20.. are merged so that every expected count is at least 5.
    let bins: Vec<(usize, usize)> = std::iter::once((0, 4))
        .chain((5..20).map(|k| (k, k)))
        .chain([(20, 63)])
        .collect();
    let mut chi2 = 0.0;
    for &(lo, hi) in &bins {
        let observed: usize = counts[lo..=hi].iter().sum();
        let p: f64 = if hi == 63 {
            1.0 - (0..lo as u64).map(|k| law.pmf(k)).sum::<f64>()
        } else {
            (lo as u64..=hi as u64).map(|k| law.pmf(k)).sum()
        };
        let expected = p * drops as f64;
        assert!(expected >= 5.0, "bin {lo}..={hi} expects {expected}");
        chi2 += (observed as f64 - expected).powi(2) / expected;
    }
    let critical = ChiSquared::new((bins.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2} vs {critical}");
}

#[test]
fn mth_nearest_distance_follows_gamma_law() {
    let lambda = 12.0 / (PI * 500.0 * 500.0);
    let n = 10_000;
    let mut r = rng(2);
    for m in [1usize, 3, 6] {
        let mut areas: Vec<f64> = (0..n)
            .map(|_| {
                let pairs = drop_d2d_pairs(2000.0, lambda, 20.0, &mut r).unwrap();
                let idx = nearest_interferers(Point2::new(0.0, 0.0), &pairs.tx, m);
                let d = pairs.tx[idx[m - 1]].norm();
                lambda * PI * d * d
            })
            .collect();
        // λπr² of the m-th nearest point is Gamma(m, 1)
        let law = Gamma::new(m as f64, 1.0).unwrap();
        areas.sort_by(f64::total_cmp);
        let d = areas
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = law.cdf(x);
                (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
            })
            .fold(0.0, f64::max);
        assert!(d < 1.6276 / (n as f64).sqrt(), "m = {m}: KS {d}");
    }
}

#[test]
fn fading_components_are_gaussian() {
    let mut r = rng(3);
    let h = sample_fading(200_000, &mut r);
    let chi2_2_99 = ChiSquared::new(2.0).unwrap().inverse_cdf(0.99);
    for part in [
        h.iter().map(|z| z.re).collect::<Vec<_>>(),
        h.iter().map(|z| z.im).collect(),
    ] {
        let n = part.len() as f64;
        let mean = part.iter().sum::<f64>() / n;
        let m2 = part.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m3 = part.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
        let m4 = part.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let skew = m3 / m2.powf(1.5);
        let kurt = m4 / (m2 * m2);
        let jb = n / 6.0 * (skew * skew + (kurt - 3.0).powi(2) / 4.0);
        assert!(jb < chi2_2_99, "Jarque-Bera {jb}");
        assert!((m2 - 0.5).abs() < 0.01, "variance {m2}");
    }
}

#[test]
fn shadowing_fractional_moment() {
    let mut r = rng(4);
    for alpha in [3.76, 4.37] {
        let p = 2.0 / alpha;
        let n = 1_000_000;
        let sample = (0..n)
            .map(|_| sample_shadowing(7.0, &mut r).powf(p))
            .sum::<f64>()
            / n as f64;
        let closed = (p * 7.0 * std::f64::consts::LN_10 / 10.0).powi(2) / 2.0;
        assert!(
            (sample / closed.exp() - 1.0).abs() < 0.01,
            "alpha {alpha}: {sample} vs {}",
            closed.exp()
        );
        assert!((lognormal_fractional_moment(7.0, p) / closed.exp() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn bound_gap_shrinks_as_more_d2d_links_are_nulled() {
    let cfg = ExperimentConfig {
        sweep: SweepVar::CancelD2d,
        values: vec![2.0, 4.0, 8.0],
        bs: PzfParams::new(3, 2, 100),
        drops: 60,
        fades: 20,
        master_seed: 5,
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg).unwrap();
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| {
            let bound = r.analytic_se.unwrap();
            assert!(
                bound <= r.sim_se + r.ci,
                "m_d {}: bound {bound} above {}",
                r.sweep,
                r.sim_se
            );
            (r.sim_se - bound) / r.sim_se
        })
        .collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
}

#[test]
fn mrc_interference_vanishes_relative_to_signal() {
    let drop = small_drop(4.0, 6);
    let budget = LinkBudget::default();
    let links = LinkSet::build(&drop, DetectionTarget::Cellular { k: 0 }, &budget).unwrap();
    let none = CancelTargets::default();
    let mut r = rng(6);
    let mut previous = f64::INFINITY;
    for m in [16usize, 64, 256, 1024] {
        let mut gain = Vec::new();
        let mut ratio = Vec::new();
        for _ in 0..30 {
            let s = sample_sinr(&links, &none, m, FadingMode::Full, &mut r).unwrap();
            gain.push(s.signal / (m as f64 * links.desired_coeff));
            ratio.push((s.cellular_interf + s.d2d_interf) / s.signal);
        }
        gain.sort_by(f64::total_cmp);
        ratio.sort_by(f64::total_cmp);
        let med = ratio[15];
        assert!(med < previous, "M = {m}: {med} not below {previous}");
        previous = med;
        if m == 1024 {
            assert!(
                (gain[15] - 1.0).abs() < 0.05,
                "normalised gain {}",
                gain[15]
            );
        }
    }
}

#[test]
fn scaled_power_se_approaches_its_limit() {
    let drop = small_drop(4.0, 7);
    let budget = LinkBudget::default();
    let target = DetectionTarget::Cellular { k: 1 };
    let full = LinkSet::build(&drop, target, &budget).unwrap();
    let mut r = rng(7);
    let draws = 40_000;
    let limit = (0..draws)
        .map(|_| power_scaled_limit_sample(&full, 0, &mut r))
        .sum::<f64>()
        / draws as f64;
    let none = CancelTargets::default();
    let mut gaps = Vec::new();
    for m in [16usize, 128, 1024] {
        let links = LinkSet::build(&drop, target, &budget.scale_pc(1.0 / m as f64)).unwrap();
        let fades = 8_000;
        let se = (0..fades)
            .map(|_| {
                (1.0 + sample_sinr(&links, &none, m, FadingMode::Projected, &mut r)
                    .unwrap()
                    .sinr)
                    .log2()
            })
            .sum::<f64>()
            / fades as f64;
        gaps.push((se - limit).abs());
    }
    assert!(gaps[0] > gaps[2], "{gaps:?}");
    assert!(
        gaps[2] < 0.05 * limit.max(1.0),
        "{gaps:?} with limit {limit}"
    );
}

#[test]
fn silenced_training_removes_coherent_d2d_interference() {
    let drop = small_drop(4.0, 8);
    let budget = LinkBudget::default();
    let est = EstimatedCsi::new(&drop, &budget, TrainingMode::Silenced).unwrap();
    let mut r = rng(8);
    let mut previous = f64::INFINITY;
    for m in [16usize, 64, 256, 1024] {
        let (mut d2d, mut signal) = (0.0, 0.0);
        for _ in 0..40 {
            for s in est.sample(m, CsiFading::Projected, &mut r).unwrap() {
                d2d += s.d2d_interf;
                signal += s.signal;
            }
        }
        let ratio = d2d / signal;
        assert!(ratio < previous, "M = {m}: {ratio} not below {previous}");
        previous = ratio;
    }
}

#[test]
fn confidence_intervals_cover_a_known_mean() {
    // E ln(1 + X) for X ~ Exp(1) is the Gompertz constant.
    let truth = 0.596_347_362_323_194_1 / LN_2;
    let mut r = rng(9);
    let runs = 200;
    let covered = (0..runs)
        .filter(|_| {
            let groups: Vec<(f64, usize)> = (0..40)
                .map(|_| {
                    (
                        (0..10)
                            .map(|_| (1.0 + r.sample::<f64, _>(Exp1)).log2())
                            .sum(),
                        10,
                    )
                })
                .collect();
            let est = grouped_estimate(&groups).unwrap();
            (est.mean - truth).abs() <= est.ci_halfwidth
        })
        .count();
    let rate = covered as f64 / runs as f64;
    assert!((0.91..=0.99).contains(&rate), "coverage {rate}");
}
