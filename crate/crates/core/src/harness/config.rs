//! Experiment configuration and its flat `section.key = value` text form.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::channel::{dbm_to_mw, LinkBudget};
use crate::error::{Error, Result};
use crate::geom::{build_hex_layout, CellLayout, DropSpec};
use crate::pzf::{FadingMode, PzfParams};

/// Parameter swept along the rows of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// BS antennas M.
    Antennas,
    /// Cellular interferers nulled at the BS.
    CancelCellular,
    /// D2D interferers nulled at the BS.
    CancelD2d,
    /// Cellular UEs per cell K.
    UesPerCell,
    /// D2D receiver antennas N.
    UeAntennas,
    /// Normalized D2D density `π R_c² λ`.
    Density,
    /// D2D link distance in meters.
    D2dDistance,
    /// Multiplier on the cellular transmit power.
    PcScale,
}

impl SweepVar {
    const NAMES: [(&'static str, SweepVar); 8] = [
        ("M", SweepVar::Antennas),
        ("m_c", SweepVar::CancelCellular),
        ("m_d", SweepVar::CancelD2d),
        ("K", SweepVar::UesPerCell),
        ("N", SweepVar::UeAntennas),
        ("density", SweepVar::Density),
        ("D", SweepVar::D2dDistance),
        ("pc_scale", SweepVar::PcScale),
    ];

    pub fn name(self) -> &'static str {
        Self::NAMES
            .iter()
            .find(|(_, v)| *v == self)
            .map_or("?", |(n, _)| n)
    }

    fn is_count(self) -> bool {
        !matches!(
            self,
            SweepVar::Density | SweepVar::D2dDistance | SweepVar::PcScale
        )
    }
}

impl FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::NAMES
            .iter()
            .find(|(n, _)| *n == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Config(format!("unknown sweep variable `{s}`")))
    }
}

/// Which link's spectral efficiency is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    Cellular,
    D2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiMode {
    Perfect,
    /// MMSE estimates with uncoordinated D2D transmitters active in training.
    EstimatedActive,
    /// MMSE estimates with D2D transmitters silent in training.
    EstimatedSilenced,
}

/// Cellular transmit power scaling with the BS array size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerScaling {
    None,
    /// `P_c / M`.
    PerAntenna,
    /// `P_c / √M`.
    SqrtAntennas,
}

/// How many D2D interferers the BS nulls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CancelRule {
    /// `pzf.bs.m_d` as configured.
    Fixed,
    /// `⌈√M⌉`.
    SqrtAntennas,
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, $( $name:literal => $val:expr ),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $( $name => Ok($val), )+
                    _ => Err(Error::Config(format!(concat!("unknown ", $what, " `{}`"), s))),
                }
            }
        }
        impl $ty {
            pub fn keyword(self) -> &'static str {
                $( if self == $val { return $name; } )+
                unreachable!()
            }
        }
    };
}

keyword_enum!(LinkKind, "link", "cellular" => LinkKind::Cellular, "d2d" => LinkKind::D2d);
keyword_enum!(CsiMode, "csi mode",
    "perfect" => CsiMode::Perfect,
    "estimated-active" => CsiMode::EstimatedActive,
    "estimated-silenced" => CsiMode::EstimatedSilenced);
keyword_enum!(PowerScaling, "power scaling",
    "none" => PowerScaling::None,
    "per-antenna" => PowerScaling::PerAntenna,
    "sqrt-antenna" => PowerScaling::SqrtAntennas);
keyword_enum!(CancelRule, "m_d rule", "fixed" => CancelRule::Fixed, "sqrt-m" => CancelRule::SqrtAntennas);
keyword_enum!(FadingMode, "fading mode", "projected" => FadingMode::Projected, "full" => FadingMode::Full);

/// Spatial layer of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub num_rings: usize,
    /// Hexagon side (= circumradius) R_c in meters.
    pub cell_radius: f64,
    /// PPP disk radius as a multiple of the layout circumradius.
    pub region_multiplier: f64,
    pub ues_per_cell: usize,
    /// `π R_c² λ`.
    pub density: f64,
    pub d2d_distance: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            num_rings: 2,
            cell_radius: 500.0,
            region_multiplier: 3.0,
            ues_per_cell: 4,
            density: 12.0,
            d2d_distance: 20.0,
        }
    }
}

impl Geometry {
    /// D2D intensity in m⁻².
    pub fn lambda(&self) -> f64 {
        self.density / (PI * self.cell_radius * self.cell_radius)
    }

    pub fn layout(&self) -> CellLayout {
        build_hex_layout(self.num_rings, self.cell_radius)
    }

    pub fn drop_spec(&self, layout: &CellLayout, sigma_db: f64) -> DropSpec {
        DropSpec {
            ues_per_cell: self.ues_per_cell,
            lambda: self.lambda(),
            d2d_distance: self.d2d_distance,
            region_radius: self.region_multiplier * layout.circumradius(),
            sigma_db,
        }
    }
}

/// Everything needed to run one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: String,
    pub link: LinkKind,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub drops: usize,
    pub fades: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses every available core.
    pub workers: usize,
    pub budget: LinkBudget,
    pub geometry: Geometry,
    /// BS receiver `(m_c, m_d, M)`.
    pub bs: PzfParams,
    /// D2D receiver `(n_c, n_d, N)`.
    pub ue: PzfParams,
    pub m_d_rule: CancelRule,
    pub csi: CsiMode,
    pub power: PowerScaling,
    pub fading: FadingMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            preset: "custom".into(),
            link: LinkKind::Cellular,
            sweep: SweepVar::Antennas,
            values: vec![100.0],
            drops: 200,
            fades: 50,
            master_seed: 1,
            workers: 0,
            budget: LinkBudget::default(),
            geometry: Geometry::default(),
            bs: PzfParams::new(0, 2, 100),
            ue: PzfParams::new(0, 2, 4),
            m_d_rule: CancelRule::Fixed,
            csi: CsiMode::Perfect,
            power: PowerScaling::None,
            fading: FadingMode::Projected,
        }
    }
}

/// Parameters of one sweep point after the sweep value is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetup {
    /// Budget with any power scaling applied.
    pub budget: LinkBudget,
    /// Budget before power scaling.
    pub base_budget: LinkBudget,
    pub geometry: Geometry,
    pub bs: PzfParams,
    pub ue: PzfParams,
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn as_count(var: SweepVar, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!(
            "sweep value {v} for `{}` must be a non-negative integer",
            var.name()
        )))
    }
}

impl ExperimentConfig {
    /// Checks everything that does not depend on the sweep point.
    pub fn validate(&self) -> Result<()> {
        if self.drops == 0 || self.fades == 0 {
            return Err(Error::Config(
                "run.drops and run.fades must be at least 1".into(),
            ));
        }
        if self.values.is_empty() {
            return Err(Error::Config("sweep.values is empty".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sweep.values must be finite".into()));
        }
        if self.sweep.is_count() {
            for &v in &self.values {
                as_count(self.sweep, v)?;
            }
        }
        self.budget.validate()?;
        let g = &self.geometry;
        if !(g.cell_radius > 0.0
            && g.region_multiplier >= 1.0
            && g.density >= 0.0
            && g.d2d_distance > 0.0)
        {
            return Err(Error::Config(
                "geometry needs cell_radius > 0, region_multiplier >= 1, density >= 0, d2d_distance > 0".into(),
            ));
        }
        if self.link == LinkKind::D2d && self.csi != CsiMode::Perfect {
            return Err(Error::Config(
                "estimated CSI is only modelled for the cellular uplink".into(),
            ));
        }
        Ok(())
    }

    /// Applies sweep value `index` and checks PZF and training feasibility.
    pub fn point(&self, index: usize) -> Result<PointSetup> {
        let v = self.values[index];
        let mut geometry = self.geometry.clone();
        let mut bs = self.bs;
        let mut ue = self.ue;
        let mut base_budget = self.budget.clone();
        match self.sweep {
            SweepVar::Antennas => bs.antennas = as_count(self.sweep, v)?,
            SweepVar::CancelCellular => bs.cancel_cellular = as_count(self.sweep, v)?,
            SweepVar::CancelD2d => bs.cancel_d2d = as_count(self.sweep, v)?,
            SweepVar::UesPerCell => geometry.ues_per_cell = as_count(self.sweep, v)?,
            SweepVar::UeAntennas => ue.antennas = as_count(self.sweep, v)?,
            SweepVar::Density => geometry.density = v,
            SweepVar::D2dDistance => geometry.d2d_distance = v,
            SweepVar::PcScale => base_budget = base_budget.scale_pc(v),
        }
        if geometry.ues_per_cell == 0 || !(geometry.density >= 0.0 && geometry.d2d_distance > 0.0) {
            return Err(Error::Config(format!(
                "sweep value {v} gives an invalid geometry"
            )));
        }
        if base_budget.p_c.is_nan() || base_budget.p_c <= 0.0 {
            return Err(Error::Config(format!(
                "sweep value {v} gives a non-positive cellular power"
            )));
        }
        if self.m_d_rule == CancelRule::SqrtAntennas {
            bs.cancel_d2d = (bs.antennas as f64).sqrt().ceil() as usize;
        }
        let m = bs.antennas.max(1) as f64;
        let budget = match self.power {
            PowerScaling::None => base_budget.clone(),
            PowerScaling::PerAntenna => base_budget.scale_pc(1.0 / m),
            PowerScaling::SqrtAntennas => base_budget.scale_pc(1.0 / m.sqrt()),
        };
        let cells = geometry.layout().num_cells();
        match (self.link, self.csi) {
            (LinkKind::Cellular, CsiMode::Perfect) => bs.check_bs(cells, geometry.ues_per_cell)?,
            (LinkKind::Cellular, _) => {
                if bs.antennas == 0 {
                    return Err(Error::InfeasiblePzf("M must be at least 1".into()));
                }
                if budget.t_c < geometry.ues_per_cell {
                    return Err(Error::InfeasibleTraining {
                        t_c: budget.t_c,
                        needed: geometry.ues_per_cell,
                    });
                }
            }
            (LinkKind::D2d, _) => ue.check_ue(cells, geometry.ues_per_cell)?,
        }
        Ok(PointSetup {
            budget,
            base_budget,
            geometry,
            bs,
            ue,
        })
    }

    /// Sets one `section.key` entry.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let b = &mut self.budget;
        let g = &mut self.geometry;
        match key {
            "run.preset" => self.preset = v.to_string(),
            "run.link" => self.link = v.parse()?,
            "run.drops" => self.drops = parse(key, v)?,
            "run.fades" => self.fades = parse(key, v)?,
            "run.seed" => self.master_seed = parse(key, v)?,
            "run.workers" => self.workers = parse(key, v)?,
            "run.csi" => self.csi = v.parse()?,
            "run.power_scaling" => self.power = v.parse()?,
            "run.fading" => self.fading = v.parse()?,
            "sweep.var" => self.sweep = v.parse()?,
            "sweep.values" => {
                self.values = v
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "budget.p_c_dbm" => b.p_c = dbm_to_mw(parse(key, v)?),
            "budget.p_d_dbm" => b.p_d = dbm_to_mw(parse(key, v)?),
            "budget.alpha_c" => b.alpha_c = parse(key, v)?,
            "budget.alpha_d" => b.alpha_d = parse(key, v)?,
            "budget.c_c0_db" => b.c_c0_db = parse(key, v)?,
            "budget.c_d0_db" => b.c_d0_db = parse(key, v)?,
            "budget.n0_bs_dbm" => b.n0_bs = dbm_to_mw(parse(key, v)?),
            "budget.n0_ue_dbm" => b.n0_ue = dbm_to_mw(parse(key, v)?),
            "budget.sigma_db" => b.sigma_db = parse(key, v)?,
            "budget.t_c" => b.t_c = parse(key, v)?,
            "geometry.num_rings" => g.num_rings = parse(key, v)?,
            "geometry.cell_radius" => g.cell_radius = parse(key, v)?,
            "geometry.region_multiplier" => g.region_multiplier = parse(key, v)?,
            "geometry.ues_per_cell" => g.ues_per_cell = parse(key, v)?,
            "geometry.density" => g.density = parse(key, v)?,
            "geometry.d2d_distance" => g.d2d_distance = parse(key, v)?,
            "pzf.bs.m_c" => self.bs.cancel_cellular = parse(key, v)?,
            "pzf.bs.m_d" => self.bs.cancel_d2d = parse(key, v)?,
            "pzf.bs.antennas" => self.bs.antennas = parse(key, v)?,
            "pzf.ue.n_c" => self.ue.cancel_cellular = parse(key, v)?,
            "pzf.ue.n_d" => self.ue.cancel_d2d = parse(key, v)?,
            "pzf.ue.antennas" => self.ue.antennas = parse(key, v)?,
            "pzf.m_d_rule" => self.m_d_rule = v.parse()?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Reads `[section]` headers and `key = value` lines on top of `self`.
    /// `#` and `;` start comments; keys may also be written fully dotted.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            let key = if section.is_empty() {
                k.trim().to_string()
            } else {
                format!("{section}.{}", k.trim())
            };
            self.set(&key, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Text form accepted by [`ExperimentConfig::merge_text`].
    pub fn to_text(&self) -> String {
        let b = &self.budget;
        let g = &self.geometry;
        let dbm = |mw: f64| 10.0 * mw.log10();
        let values: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "[run]\npreset = {}\nlink = {}\ndrops = {}\nfades = {}\nseed = {}\nworkers = {}",
            self.preset,
            self.link.keyword(),
            self.drops,
            self.fades,
            self.master_seed,
            self.workers
        );
        let _ = writeln!(
            s,
            "csi = {}\npower_scaling = {}\nfading = {}\n",
            self.csi.keyword(),
            self.power.keyword(),
            self.fading.keyword()
        );
        let _ = writeln!(
            s,
            "[sweep]\nvar = {}\nvalues = {}\n",
            self.sweep.name(),
            values.join(",")
        );
        let _ = writeln!(
            s,
            "[budget]\np_c_dbm = {}\np_d_dbm = {}\nalpha_c = {}\nalpha_d = {}",
            dbm(b.p_c),
            dbm(b.p_d),
            b.alpha_c,
            b.alpha_d
        );
        let _ = writeln!(
            s,
            "c_c0_db = {}\nc_d0_db = {}\nn0_bs_dbm = {}\nn0_ue_dbm = {}",
            b.c_c0_db,
            b.c_d0_db,
            dbm(b.n0_bs),
            dbm(b.n0_ue)
        );
        let _ = writeln!(s, "sigma_db = {}\nt_c = {}\n", b.sigma_db, b.t_c);
        let _ = writeln!(
            s,
            "[geometry]\nnum_rings = {}\ncell_radius = {}\nregion_multiplier = {}",
            g.num_rings, g.cell_radius, g.region_multiplier
        );
        let _ = writeln!(
            s,
            "ues_per_cell = {}\ndensity = {}\nd2d_distance = {}\n",
            g.ues_per_cell, g.density, g.d2d_distance
        );
        let _ = writeln!(s, "[pzf]\nm_d_rule = {}", self.m_d_rule.keyword());
        let _ = writeln!(
            s,
            "bs.m_c = {}\nbs.m_d = {}\nbs.antennas = {}",
            self.bs.cancel_cellular, self.bs.cancel_d2d, self.bs.antennas
        );
        let _ = writeln!(
            s,
            "ue.n_c = {}\nue.n_d = {}\nue.antennas = {}",
            self.ue.cancel_cellular, self.ue.cancel_d2d, self.ue.antennas
        );
        s
    }
}
