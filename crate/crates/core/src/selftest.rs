//! Quick end-to-end sanity checks runnable from the command line.

use rand::SeedableRng;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::analytic::{contaminated_se_conditioned, rho, stirling_gamma_ratio, InterferenceField};
use crate::channel::{sample_fading, LinkBudget};
use crate::csi::make_pilots;
use crate::harness::{format_csv, parse_csv, preset, run_experiment};
use crate::pzf::pzf_filter;
use crate::rng::SimRng;
use crate::stats::{ks_critical_1pct, ks_statistic};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> SelfCheck {
    SelfCheck {
        name,
        passed,
        detail,
    }
}

fn dot(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> num_complex::Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Runs every check; never panics on a failed check.
pub fn run_selftest() -> Vec<SelfCheck> {
    let mut out = Vec::new();
    let mut rng = SimRng::seed_from_u64(0x5e1f);

    let desired = sample_fading(16, &mut rng);
    let canceled: Vec<_> = (0..5).map(|_| sample_fading(16, &mut rng)).collect();
    out.push(match pzf_filter(&desired, &canceled) {
        Ok(w) => {
            let leak = canceled
                .iter()
                .map(|h| dot(&w, h).norm())
                .fold(0.0, f64::max);
            let norm: f64 = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            check(
                "pzf-nulls-canceled",
                leak < 1e-10 && (norm - 1.0).abs() < 1e-12,
                format!("max leak {leak:.2e}"),
            )
        }
        Err(e) => check("pzf-nulls-canceled", false, e.to_string()),
    });

    let (m, nulls, n) = (12, 4, 2000);
    let mut gains: Vec<f64> = (0..n)
        .filter_map(|_| {
            let h = sample_fading(m, &mut rng);
            let c: Vec<_> = (0..nulls).map(|_| sample_fading(m, &mut rng)).collect();
            pzf_filter(&h, &c).ok().map(|w| dot(&w, &h).norm_sqr())
        })
        .collect();
    let law = Gamma::new((m - nulls) as f64, 1.0).expect("valid shape");
    let d = ks_statistic(&mut gains, |x| law.cdf(x));
    out.push(check(
        "pzf-desired-gain-law",
        d < ks_critical_1pct(n),
        format!("KS {d:.4} vs {:.4}", ks_critical_1pct(n)),
    ));

    let budget = LinkBudget::default();
    let f = InterferenceField::at_bs(&budget, 1e-5);
    let g = InterferenceField { lambda: 4e-5, ..f };
    let ratio = rho(&g, 2) / rho(&f, 2) / 4f64.powf(f.alpha / 2.0);
    out.push(check(
        "rho-density-scaling",
        (ratio - 1.0).abs() < 1e-13,
        format!("ratio {ratio:.15}"),
    ));

    out.push(match stirling_gamma_ratio(100, 3.76) {
        Ok(r) => check(
            "gamma-ratio-asymptote",
            r.rel_gap < 0.03,
            format!("gap {:.4}", r.rel_gap),
        ),
        Err(e) => check("gamma-ratio-asymptote", false, e.to_string()),
    });

    out.push(match make_pilots(8, 8) {
        Ok(p) => {
            let mut worst: f64 = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((dot(p.column(i), p.column(j)) - target).norm());
                }
            }
            check(
                "pilots-orthonormal",
                worst < 1e-12,
                format!("max deviation {worst:.2e}"),
            )
        }
        Err(e) => check("pilots-orthonormal", false, e.to_string()),
    });

    out.push(match contaminated_se_conditioned(3.0, 1.0, 0.0, None) {
        Ok(v) => check(
            "laplace-identity",
            (v - 2.0).abs() < 1e-8,
            format!("{v:.10} bits"),
        ),
        Err(e) => check("laplace-identity", false, e.to_string()),
    });

    let determinism = (|| -> crate::Result<(bool, bool)> {
        let mut cfg = preset("props-suite")?;
        cfg.drops = 4;
        cfg.workers = 1;
        let one = format_csv(&run_experiment(&cfg)?);
        cfg.workers = 3;
        let three = format_csv(&run_experiment(&cfg)?);
        let round = format_csv(&parse_csv(&one)?) == one;
        Ok((one == three, round))
    })();
    match determinism {
        Ok((same, round)) => {
            out.push(check(
                "worker-count-determinism",
                same,
                "props-suite at 1 and 3 workers".into(),
            ));
            out.push(check(
                "csv-round-trip",
                round,
                "format → parse → format".into(),
            ));
        }
        Err(e) => out.push(check("worker-count-determinism", false, e.to_string())),
    }
    out
}
