//! Monte Carlo experiment driver.

pub mod config;
pub mod csv;
pub mod presets;

use rayon::prelude::*;

use crate::analytic::{
    cellular_se_lower_bound, contaminated_se_conditioned, d2d_se_lower_bound, ShotNoise,
};
use crate::channel::{DetectionTarget, LinkSet};
use crate::csi::{
    contaminated_sinr_terms, deactivated_training_sinr, CsiFading, EstimatedCsi, TrainingMode,
};
use crate::error::{Error, Result};
use crate::geom::NetworkDrop;
use crate::pzf::{grouped_estimate, sample_sinr, CancelTargets, FadingMode};
use crate::rng::{drop_seed, stream, Phase};
use crate::stats::NeumaierSum;

pub use config::{
    CancelRule, CsiMode, ExperimentConfig, Geometry, LinkKind, PointSetup, PowerScaling, SweepVar,
};
pub use csv::{emit_csv, format_csv, parse_csv};
pub use presets::{preset, PRESET_NAMES};

/// One row of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SeResult {
    pub sweep: f64,
    /// Mean of `log2(1 + SINR)` over drops, targets and fades.
    pub sim_se: f64,
    /// 95% confidence half-width of `sim_se`.
    pub ci: f64,
    /// Matching analytical value averaged over the same drops and targets.
    pub analytic_se: Option<f64>,
    pub samples: usize,
    /// Set when the point could not be evaluated; numeric fields are NaN.
    pub error: Option<String>,
}

impl SeResult {
    fn failed(sweep: f64, err: &Error) -> Self {
        SeResult {
            sweep,
            sim_se: f64::NAN,
            ci: f64::NAN,
            analytic_se: None,
            samples: 0,
            error: Some(err.to_string()),
        }
    }
}

/// Per-drop sums.
#[derive(Debug, Clone, Copy, Default)]
struct DropOutcome {
    rate_sum: f64,
    samples: usize,
    analytic_sum: f64,
    analytic_count: usize,
    analytic_ok: bool,
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / std::f64::consts::LN_2
}

fn simulate_drop(
    cfg: &ExperimentConfig,
    point: &PointSetup,
    sweep_index: usize,
    drop_index: usize,
    simulate: bool,
) -> Result<DropOutcome> {
    let layout = point.geometry.layout();
    let spec = point.geometry.drop_spec(&layout, point.budget.sigma_db);
    let seed = drop_seed(cfg.master_seed, sweep_index, drop_index, Phase::Geometry);
    let drop = NetworkDrop::generate(&layout, &spec, seed)?;
    let mut rng = stream(drop_seed(
        cfg.master_seed,
        sweep_index,
        drop_index,
        Phase::Fading,
    ));
    let lambda = point.geometry.lambda();
    let budget = &point.budget;
    let fades = if simulate { cfg.fades } else { 0 };

    let mut rates = NeumaierSum::default();
    let mut samples = 0;
    let mut analytic = NeumaierSum::default();
    let mut analytic_count = 0;
    let mut analytic_ok = true;
    let mut record = |value: Result<f64>| match value {
        Ok(v) if v.is_finite() => {
            analytic.add(v);
            analytic_count += 1;
        }
        _ => analytic_ok = false,
    };

    match (cfg.link, cfg.csi) {
        (LinkKind::Cellular, CsiMode::Perfect) => {
            for k in 0..drop.ues_per_cell() {
                let links = LinkSet::build(&drop, DetectionTarget::Cellular { k }, budget)?;
                let targets = CancelTargets::from_links(&links, &point.bs);
                for _ in 0..fades {
                    rates.add(log2_1p(
                        sample_sinr(&links, &targets, point.bs.antennas, cfg.fading, &mut rng)?
                            .sinr,
                    ));
                    samples += 1;
                }
                record(cellular_se_lower_bound(&links, &point.bs, budget, lambda));
            }
        }
        (LinkKind::D2d, _) => {
            for pair in drop.central_d2d_receivers() {
                let links = LinkSet::build(&drop, DetectionTarget::D2d { pair }, budget)?;
                let targets = CancelTargets::from_links(&links, &point.ue);
                for _ in 0..fades {
                    rates.add(log2_1p(
                        sample_sinr(&links, &targets, point.ue.antennas, cfg.fading, &mut rng)?
                            .sinr,
                    ));
                    samples += 1;
                }
                record(d2d_se_lower_bound(&links, &point.ue, budget, lambda));
            }
        }
        (LinkKind::Cellular, csi) => {
            let mode = if csi == CsiMode::EstimatedActive {
                TrainingMode::Active
            } else {
                TrainingMode::Silenced
            };
            let est = EstimatedCsi::new(&drop, budget, mode)?;
            let fading = match cfg.fading {
                FadingMode::Projected => CsiFading::Projected,
                FadingMode::Full => CsiFading::Full,
            };
            for _ in 0..fades {
                for s in est.sample(point.bs.antennas, fading, &mut rng)? {
                    rates.add(log2_1p(s.sinr));
                    samples += 1;
                }
            }
            for k in 0..drop.ues_per_cell() {
                let value = match (mode, cfg.power) {
                    (TrainingMode::Active, PowerScaling::None) => {
                        let t = contaminated_sinr_terms(&drop, budget, k)?;
                        contaminated_se_conditioned(
                            t.s_hat,
                            t.i_cc,
                            0.0,
                            Some(&ShotNoise::d2d_at_bs(budget, lambda)),
                        )
                    }
                    (TrainingMode::Silenced, PowerScaling::SqrtAntennas) => {
                        deactivated_training_sinr(&drop, &point.base_budget, k).map(log2_1p)
                    }
                    (TrainingMode::Silenced, PowerScaling::None) => {
                        let t = contaminated_sinr_terms(&drop, budget, k)?;
                        Ok(log2_1p(t.s_hat / t.i_cc))
                    }
                    _ => Err(Error::Domain("no analytic counterpart".into())),
                };
                record(value);
            }
        }
    }
    Ok(DropOutcome {
        rate_sum: rates.value(),
        samples,
        analytic_sum: analytic.value(),
        analytic_count,
        analytic_ok,
    })
}

fn summarize(sweep: f64, outcomes: &[DropOutcome], simulate: bool) -> Result<SeResult> {
    let count: usize = outcomes.iter().map(|o| o.analytic_count).sum();
    let analytic = (outcomes.iter().all(|o| o.analytic_ok) && count > 0).then(|| {
        outcomes
            .iter()
            .map(|o| o.analytic_sum)
            .collect::<NeumaierSum>()
            .value()
            / count as f64
    });
    if !simulate {
        return Ok(SeResult {
            sweep,
            sim_se: f64::NAN,
            ci: f64::NAN,
            analytic_se: analytic,
            samples: count,
            error: None,
        });
    }
    let groups: Vec<(f64, usize)> = outcomes.iter().map(|o| (o.rate_sum, o.samples)).collect();
    let est = grouped_estimate(&groups)?;
    Ok(SeResult {
        sweep,
        sim_se: est.mean,
        ci: est.ci_halfwidth,
        analytic_se: analytic,
        samples: est.samples,
        error: None,
    })
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Runs every sweep point of `cfg`. Points that are infeasible or fail at
/// run time come back as error rows; the rest of the sweep still runs.
/// Output depends only on `cfg`, never on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeResult>> {
    run_points(cfg, true)
}

/// Like [`run_experiment`] but evaluates only the analytical column, on the
/// same drops. Simulation columns are NaN and `samples` counts the averaged
/// analytical values.
pub fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<SeResult>> {
    run_points(cfg, false)
}

fn run_points(cfg: &ExperimentConfig, simulate: bool) -> Result<Vec<SeResult>> {
    cfg.validate()?;
    let points: Vec<Result<PointSetup>> = (0..cfg.values.len()).map(|i| cfg.point(i)).collect();
    let tasks: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_ok())
        .flat_map(|(i, _)| (0..cfg.drops).map(move |d| (i, d)))
        .collect();
    let outcomes: Vec<Result<DropOutcome>> = thread_pool(cfg.workers)?.install(|| {
        tasks
            .par_iter()
            .map(|&(i, d)| match &points[i] {
                Ok(p) => simulate_drop(cfg, p, i, d, simulate),
                Err(_) => unreachable!("tasks only cover feasible points"),
            })
            .collect()
    });

    let mut out = Vec::with_capacity(cfg.values.len());
    let mut outcomes = outcomes.into_iter();
    for (i, point) in points.iter().enumerate() {
        let sweep = cfg.values[i];
        match point {
            Err(e) => out.push(SeResult::failed(sweep, e)),
            Ok(_) => {
                let row = outcomes
                    .by_ref()
                    .take(cfg.drops)
                    .collect::<Result<Vec<_>>>()
                    .and_then(|ok| summarize(sweep, &ok, simulate))
                    .unwrap_or_else(|e| SeResult::failed(sweep, &e));
                out.push(row);
            }
        }
    }
    Ok(out)
}

/// What [`optimize_pzf`] maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PzfObjective {
    Simulated,
    Bound,
}

/// Outcome of a PZF grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct PzfChoice {
    pub cancel_cellular: usize,
    pub cancel_d2d: usize,
    /// Sum SE over the K users of cell 0 at the optimum.
    pub sum_se: f64,
    /// `(m_c, m_d, sum SE)` for every grid point; NaN where infeasible.
    pub table: Vec<(usize, usize, f64)>,
}

/// Exhaustive search over `m_c_grid × m_d_grid` at the first sweep value of
/// `cfg` (cellular link). Ties go to the smallest `m_c + m_d`, then the
/// smallest `m_c`.
pub fn optimize_pzf(
    cfg: &ExperimentConfig,
    m_c_grid: &[usize],
    m_d_grid: &[usize],
    objective: PzfObjective,
) -> Result<PzfChoice> {
    if cfg.link != LinkKind::Cellular {
        return Err(Error::Config(
            "PZF optimization applies to the cellular uplink".into(),
        ));
    }
    let mut grid: Vec<(usize, usize)> = m_c_grid
        .iter()
        .flat_map(|&c| m_d_grid.iter().map(move |&d| (c, d)))
        .collect();
    grid.sort_by_key(|&(c, d)| (c + d, c));
    grid.dedup();
    let k = cfg.geometry.ues_per_cell as f64;

    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, usize, f64)> = None;
    for (c, d) in grid {
        let mut point_cfg = cfg.clone();
        point_cfg.values.truncate(1);
        point_cfg.bs.cancel_cellular = c;
        point_cfg.bs.cancel_d2d = d;
        point_cfg.m_d_rule = CancelRule::Fixed;
        if matches!(
            point_cfg.sweep,
            SweepVar::CancelCellular | SweepVar::CancelD2d
        ) {
            point_cfg.sweep = SweepVar::Antennas;
            point_cfg.values = vec![cfg.bs.antennas as f64];
        }
        let row = run_experiment(&point_cfg)?.remove(0);
        let per_user = match objective {
            PzfObjective::Simulated => row.sim_se,
            PzfObjective::Bound => row.analytic_se.unwrap_or(f64::NAN),
        };
        let value = k * per_user;
        table.push((c, d, value));
        if value.is_finite() && best.is_none_or(|b| value > b.2) {
            best = Some((c, d, value));
        }
    }
    let (c, d, v) =
        best.ok_or_else(|| Error::Domain("no feasible PZF configuration in the grid".into()))?;
    Ok(PzfChoice {
        cancel_cellular: c,
        cancel_d2d: d,
        sum_se: v,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pzf::PzfParams;

    fn tiny() -> ExperimentConfig {
        let mut cfg = preset("props-suite").unwrap();
        cfg.drops = 3;
        cfg.fades = 2;
        cfg.values = vec![8.0, 16.0];
        cfg
    }

    #[test]
    fn single_sample_pipeline_is_reproducible_by_hand() {
        let mut cfg = ExperimentConfig {
            drops: 1,
            fades: 1,
            values: vec![4.0],
            bs: PzfParams::mrc(4),
            master_seed: 42,
            ..Default::default()
        };
        cfg.geometry.num_rings = 0;
        cfg.geometry.density = 0.0;
        cfg.geometry.ues_per_cell = 1;
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows[0].samples, 1);

        let point = cfg.point(0).unwrap();
        let layout = point.geometry.layout();
        let drop = NetworkDrop::generate(
            &layout,
            &point.geometry.drop_spec(&layout, cfg.budget.sigma_db),
            drop_seed(42, 0, 0, Phase::Geometry),
        )
        .unwrap();
        let links = LinkSet::build(&drop, DetectionTarget::Cellular { k: 0 }, &cfg.budget).unwrap();
        let mut rng = stream(drop_seed(42, 0, 0, Phase::Fading));
        let h = crate::channel::sample_fading(4, &mut rng);
        let gain: f64 = h.iter().map(|x| x.norm_sqr()).sum();
        assert!((rows[0].sim_se - (1.0 + links.snr() * gain).log2()).abs() < 1e-12);
        assert!((rows[0].analytic_se.unwrap() - (1.0 + 3.0 * links.snr()).log2()).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let mut cfg = tiny();
        cfg.workers = 1;
        let a = format_csv(&run_experiment(&cfg).unwrap());
        cfg.workers = 4;
        let b = format_csv(&run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn bounds_match_the_simulated_run() {
        let cfg = tiny();
        let sim = run_experiment(&cfg).unwrap();
        let bounds = run_bounds(&cfg).unwrap();
        for (s, b) in sim.iter().zip(&bounds) {
            assert_eq!(s.analytic_se, b.analytic_se);
            assert!(b.sim_se.is_nan() && b.ci.is_nan());
            assert_eq!(b.samples, cfg.drops * cfg.geometry.ues_per_cell);
        }
    }

    #[test]
    fn sweep_points_are_isolated() {
        let cfg = tiny();
        let base = run_experiment(&cfg).unwrap();
        let mut more = cfg.clone();
        more.values = vec![8.0, 32.0];
        let changed = run_experiment(&more).unwrap();
        assert_eq!(base[0], changed[0]);
        assert_ne!(base[1], changed[1]);
    }

    #[test]
    fn infeasible_point_becomes_error_row() {
        let mut cfg = tiny();
        cfg.values = vec![3.0, 16.0];
        let rows = run_experiment(&cfg).unwrap();
        assert!(rows[0].error.is_some() && rows[0].sim_se.is_nan() && rows[0].samples == 0);
        assert!(rows[1].error.is_none() && rows[1].samples == 3 * 2 * 4);
        assert!(format_csv(&rows)
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("3,nan,nan,nan,0"));
    }

    #[test]
    fn optimizer_on_single_point_grid() {
        let cfg = tiny();
        let choice = optimize_pzf(&cfg, &[1], &[2], PzfObjective::Simulated).unwrap();
        assert_eq!((choice.cancel_cellular, choice.cancel_d2d), (1, 2));
        assert_eq!(choice.table.len(), 1);
        assert!(optimize_pzf(&cfg, &[0], &[0], PzfObjective::Bound).is_err());
    }
}
