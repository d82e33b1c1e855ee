//! Pilot-based training: orthonormal pilots, the training-phase received
//! signal at BS 0, linear MMSE channel estimates and the contaminated SINR
//! quantities that appear once D2D transmitters talk during training.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{pathloss_gain, sample_cn, sample_fading, CVec, LinkBudget, Node};
use crate::error::{Error, Result};
use crate::geom::{nearest_interferers, partition_by_cell, NetworkDrop};
use crate::pzf::SinrBreakdown;

/// Dense complex matrix in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// `self += a * b^H` for column vectors `a` (rows) and `b` (cols).
    pub fn add_outer(&mut self, a: &[Complex64], b: &[Complex64]) {
        for (c, bc) in b.iter().enumerate() {
            let s = bc.conj();
            self.col_mut(c)
                .iter_mut()
                .zip(a)
                .for_each(|(y, x)| *y += x * s);
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> CVec {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (c, vc) in v.iter().enumerate() {
            out.iter_mut()
                .zip(self.col(c))
                .for_each(|(o, y)| *o += y * vc);
        }
        out
    }
}

/// Orthonormal pilot columns of length `T_c`, one per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotBook {
    q: CMatrix,
}

impl PilotBook {
    pub fn t_c(&self) -> usize {
        self.q.rows()
    }

    pub fn len(&self) -> usize {
        self.q.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.q.cols() == 0
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        self.q.col(j)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.q
    }
}

/// First `n_seq` columns of the unitary `T_c`-point DFT matrix.
pub fn make_pilots(t_c: usize, n_seq: usize) -> Result<PilotBook> {
    if t_c < n_seq || t_c == 0 {
        return Err(Error::InfeasibleTraining {
            t_c,
            needed: n_seq.max(1),
        });
    }
    let mut q = CMatrix::zeros(t_c, n_seq);
    let scale = 1.0 / (t_c as f64).sqrt();
    for j in 0..n_seq {
        for (t, x) in q.col_mut(j).iter_mut().enumerate() {
            let phase = -TAU * ((j * t) % t_c) as f64 / t_c as f64;
            *x = Complex64::from_polar(scale, phase);
        }
    }
    Ok(PilotBook { q })
}

/// What non-coordinated D2D transmitters do during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrainingMode {
    /// They keep sending independent data symbols.
    #[default]
    Active,
    /// They stay silent until the data phase.
    Silenced,
}

/// Per-cell coordinated D2D transmitters: the nearest `min(m_d, |Φ_b|)`
/// transmitters of cell `b` to BS `b`, which send pilot `K + i`.
pub fn coordinated_d2d(drop: &NetworkDrop, m_d: usize) -> Vec<Vec<usize>> {
    let sets = partition_by_cell(&drop.d2d.tx, &drop.layout);
    (0..drop.layout.num_cells())
        .map(|b| {
            let members = &sets[b];
            let pts: Vec<_> = members.iter().map(|&i| drop.d2d.tx[i]).collect();
            nearest_interferers(drop.layout.center(b), &pts, m_d)
                .into_iter()
                .map(|j| members[j])
                .collect()
        })
        .collect()
}

/// Large-scale gain `Ξ · pathloss` of a transmitter at BS 0.
fn gain_bs0(drop: &NetworkDrop, budget: &LinkBudget, tx: Node) -> Result<f64> {
    let p = match tx {
        Node::CellularUe(j) => drop.ue(j),
        Node::D2dTx(i) => drop.d2d.tx[i],
        _ => return Err(Error::Domain("only UEs transmit during training".into())),
    };
    let dist = p.dist(drop.layout.center(0));
    Ok(drop.shadow.gain(tx, Node::Bs(0)) * pathloss_gain(dist, budget.alpha_c, budget.c_c0_db)?)
}

/// Training received signal together with the channel vectors it was built
/// from, so callers can compare estimates against the truth.
#[derive(Debug, Clone)]
pub struct TrainingRx {
    /// `M × T_c` received signal.
    pub y: CMatrix,
    /// Channel of every cellular UE to BS 0, by flat index.
    pub cellular: Vec<CVec>,
    /// Channel of every D2D transmitter to BS 0.
    pub d2d: Vec<CVec>,
}

/// Synthesizes the training-phase received signal at BS 0 with `antennas`
/// antennas. `coordinated` is the output of [`coordinated_d2d`].
pub fn training_rx<R: Rng + ?Sized>(
    drop: &NetworkDrop,
    budget: &LinkBudget,
    pilots: &PilotBook,
    coordinated: &[Vec<usize>],
    mode: TrainingMode,
    antennas: usize,
    rng: &mut R,
) -> Result<TrainingRx> {
    let k = drop.ues_per_cell();
    let needed = k + coordinated.iter().map(Vec::len).max().unwrap_or(0);
    if pilots.len() < needed {
        return Err(Error::InfeasibleTraining {
            t_c: pilots.t_c(),
            needed,
        });
    }
    let t_c = pilots.t_c();
    let mut y = CMatrix::zeros(antennas, t_c);
    let pilot_amp = |g: f64| (t_c as f64 * budget.p_c * g).sqrt();

    let mut cellular = Vec::with_capacity(drop.num_cellular());
    for j in 0..drop.num_cellular() {
        let h = sample_fading(antennas, rng);
        let a = pilot_amp(gain_bs0(drop, budget, Node::CellularUe(j))?);
        let scaled: CVec = h.iter().map(|x| x * a).collect();
        y.add_outer(&scaled, pilots.column(j % k));
        cellular.push(h);
    }

    let mut pilot_of = vec![None; drop.d2d.len()];
    for cell in coordinated {
        for (i, &tx) in cell.iter().enumerate() {
            pilot_of[tx] = Some(k + i);
        }
    }
    let mut d2d = Vec::with_capacity(drop.d2d.len());
    for (tx, pilot) in pilot_of.iter().enumerate() {
        let h = sample_fading(antennas, rng);
        let g = gain_bs0(drop, budget, Node::D2dTx(tx))?;
        match (pilot, mode) {
            (Some(p), _) => {
                let a = pilot_amp(g);
                let scaled: CVec = h.iter().map(|x| x * a).collect();
                y.add_outer(&scaled, pilots.column(*p));
            }
            (None, TrainingMode::Active) => {
                let a = (budget.p_d * g).sqrt();
                let scaled: CVec = h.iter().map(|x| x * a).collect();
                // y += h u^H with u the conjugated data sequence; CN(0, 1) is conjugation invariant
                let u = sample_fading(t_c, rng);
                y.add_outer(&scaled, &u);
            }
            (None, TrainingMode::Silenced) => {}
        }
        d2d.push(h);
    }

    let sigma = budget.n0_bs.sqrt();
    y.data.iter_mut().for_each(|v| *v += sample_cn(rng) * sigma);
    Ok(TrainingRx { y, cellular, d2d })
}

/// Large-scale statistics needed by the MMSE estimator of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// `Ξ · pathloss` of the link being estimated.
    pub own_gain: f64,
    /// Σ β over same-pilot transmitters in the other cells.
    pub beta_sum: f64,
    /// Σ `P_d Ξ pathloss` over D2D transmitters sending data in training.
    pub d2d_sum: f64,
    pub n0: f64,
    pub t_c: usize,
    pub p_c: f64,
}

impl LinkStats {
    /// Statistics for cellular UE `k` of cell 0.
    pub fn cellular(
        drop: &NetworkDrop,
        budget: &LinkBudget,
        k: usize,
        coordinated: &[Vec<usize>],
        mode: TrainingMode,
    ) -> Result<Self> {
        let own_gain = gain_bs0(drop, budget, Node::CellularUe(drop.ue_index(0, k)))?;
        let mut beta_sum = 0.0;
        for b in 1..drop.layout.num_cells() {
            beta_sum += gain_bs0(drop, budget, Node::CellularUe(drop.ue_index(b, k)))? / own_gain;
        }
        let mut d2d_sum = 0.0;
        if mode == TrainingMode::Active {
            let mut is_coord = vec![false; drop.d2d.len()];
            coordinated
                .iter()
                .flatten()
                .for_each(|&i| is_coord[i] = true);
            for (i, _) in is_coord.iter().enumerate().filter(|(_, c)| !**c) {
                d2d_sum += budget.p_d * gain_bs0(drop, budget, Node::D2dTx(i))?;
            }
        }
        Ok(LinkStats {
            own_gain,
            beta_sum,
            d2d_sum,
            n0: budget.n0_bs,
            t_c: budget.t_c,
            p_c: budget.p_c,
        })
    }

    /// MMSE scaling `ξ`.
    pub fn xi(&self) -> f64 {
        let own = self.t_c as f64 * self.p_c * self.own_gain;
        1.0 / (1.0 + self.beta_sum + (self.d2d_sum + self.n0) / own)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmseEstimate {
    pub h_hat: CVec,
    pub xi: f64,
    /// Per-entry error variance `1 − ξ`.
    pub err_var: f64,
}

/// Linear MMSE estimate from the training signal projected on pilot `q`.
pub fn mmse_estimate(y: &CMatrix, q: &[Complex64], stats: &LinkStats) -> Result<MmseEstimate> {
    if stats.own_gain.is_nan() || stats.own_gain <= 0.0 {
        return Err(Error::Domain(format!(
            "own-link gain must be positive, got {}",
            stats.own_gain
        )));
    }
    let norm = (stats.t_c as f64 * stats.p_c * stats.own_gain).sqrt();
    let xi = stats.xi();
    let h_hat = y.mul_vec(q).into_iter().map(|v| v * (xi / norm)).collect();
    Ok(MmseEstimate {
        h_hat,
        xi,
        err_var: 1.0 - xi,
    })
}

/// Large-M signal, pilot-contamination and underlay-contamination powers of
/// cellular UE `k` in cell 0 under MRC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminatedTerms {
    pub s_hat: f64,
    pub i_cc: f64,
    pub i_dc: f64,
}

impl ContaminatedTerms {
    pub fn sinr(&self) -> f64 {
        self.s_hat / (self.i_cc + self.i_dc)
    }
}

pub fn contaminated_sinr_terms(
    drop: &NetworkDrop,
    budget: &LinkBudget,
    k: usize,
) -> Result<ContaminatedTerms> {
    let t_c = budget.t_c as f64;
    let sq = |x: f64| x * x;
    let s_hat =
        t_c * sq(budget.p_c * gain_bs0(drop, budget, Node::CellularUe(drop.ue_index(0, k)))?);
    let mut i_cc = 0.0;
    for b in 1..drop.layout.num_cells() {
        i_cc +=
            t_c * sq(budget.p_c * gain_bs0(drop, budget, Node::CellularUe(drop.ue_index(b, k)))?);
    }
    let mut i_dc = 0.0;
    for i in 0..drop.d2d.len() {
        i_dc += sq(budget.p_d * gain_bs0(drop, budget, Node::D2dTx(i))?);
    }
    Ok(ContaminatedTerms { s_hat, i_cc, i_dc })
}

/// Limiting SINR of UE `k` when D2D links are silent during training and
/// cellular power scales as `P_c / √M`. `budget.p_c` is the unscaled power.
pub fn deactivated_training_sinr(drop: &NetworkDrop, budget: &LinkBudget, k: usize) -> Result<f64> {
    let t_c = budget.t_c as f64;
    let snr = |j: usize| -> Result<f64> {
        Ok(budget.p_c * gain_bs0(drop, budget, Node::CellularUe(j))? / budget.n0_bs)
    };
    let signal = t_c * snr(drop.ue_index(0, k))?.powi(2);
    let mut pilot = 0.0;
    for b in 1..drop.layout.num_cells() {
        pilot += t_c * snr(drop.ue_index(b, k))?.powi(2);
    }
    let mut d2d = 0.0;
    for i in 0..drop.d2d.len() {
        d2d += budget.p_d * gain_bs0(drop, budget, Node::D2dTx(i))? / budget.n0_bs;
    }
    Ok(signal / (pilot + d2d + 1.0))
}

/// How the MRC filter `w = Y q_k` is formed in [`EstimatedCsi::sample`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CsiFading {
    /// Draw the projected pilot statistics `u^H q_k` and `V q_k` directly;
    /// they are i.i.d. CN(0, 1) and CN(0, N0 I) for orthonormal pilots.
    #[default]
    Projected,
    /// Build the full `M × T_c` training matrix.
    Full,
}

/// MRC detection of the cell-0 UEs from estimated channels with
/// `(m_c, m_d) = (0, 0)`. Holds the large-scale gains of one drop.
#[derive(Debug, Clone)]
pub struct EstimatedCsi<'a> {
    drop: &'a NetworkDrop,
    budget: LinkBudget,
    mode: TrainingMode,
    ue_gain: Vec<f64>,
    d2d_gain: Vec<f64>,
}

impl<'a> EstimatedCsi<'a> {
    pub fn new(drop: &'a NetworkDrop, budget: &LinkBudget, mode: TrainingMode) -> Result<Self> {
        let ue_gain = (0..drop.num_cellular())
            .map(|j| gain_bs0(drop, budget, Node::CellularUe(j)))
            .collect::<Result<_>>()?;
        let d2d_gain = (0..drop.d2d.len())
            .map(|i| gain_bs0(drop, budget, Node::D2dTx(i)))
            .collect::<Result<_>>()?;
        Ok(EstimatedCsi {
            drop,
            budget: budget.clone(),
            mode,
            ue_gain,
            d2d_gain,
        })
    }

    /// One block-fading realization: SINR of every cell-0 UE with `antennas`
    /// BS antennas.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        antennas: usize,
        fading: CsiFading,
        rng: &mut R,
    ) -> Result<Vec<SinrBreakdown>> {
        let k = self.drop.ues_per_cell();
        let b = &self.budget;
        let h_ue: Vec<CVec> = (0..self.ue_gain.len())
            .map(|_| sample_fading(antennas, rng))
            .collect();
        let h_d2d: Vec<CVec> = (0..self.d2d_gain.len())
            .map(|_| sample_fading(antennas, rng))
            .collect();
        let active = self.mode == TrainingMode::Active;

        let filters: Vec<CVec> = match fading {
            CsiFading::Projected => {
                let noise_amp = b.n0_bs.sqrt();
                (0..k)
                    .map(|kk| {
                        let mut w: CVec =
                            (0..antennas).map(|_| sample_cn(rng) * noise_amp).collect();
                        for (j, h) in h_ue.iter().enumerate().filter(|(j, _)| j % k == kk) {
                            axpy(
                                &mut w,
                                Complex64::from((b.t_c as f64 * b.p_c * self.ue_gain[j]).sqrt()),
                                h,
                            );
                        }
                        if active {
                            for (h, g) in h_d2d.iter().zip(&self.d2d_gain) {
                                axpy(&mut w, sample_cn(rng) * (b.p_d * g).sqrt(), h);
                            }
                        }
                        w
                    })
                    .collect()
            }
            CsiFading::Full => {
                let pilots = make_pilots(b.t_c, k)?;
                let mut y = CMatrix::zeros(antennas, b.t_c);
                for (j, h) in h_ue.iter().enumerate() {
                    let a = (b.t_c as f64 * b.p_c * self.ue_gain[j]).sqrt();
                    let scaled: CVec = h.iter().map(|x| x * a).collect();
                    y.add_outer(&scaled, pilots.column(j % k));
                }
                if active {
                    for (h, g) in h_d2d.iter().zip(&self.d2d_gain) {
                        let a = (b.p_d * g).sqrt();
                        let scaled: CVec = h.iter().map(|x| x * a).collect();
                        y.add_outer(&scaled, &sample_fading(b.t_c, rng));
                    }
                }
                let sigma = b.n0_bs.sqrt();
                y.data.iter_mut().for_each(|v| *v += sample_cn(rng) * sigma);
                (0..k).map(|kk| y.mul_vec(pilots.column(kk))).collect()
            }
        };

        let out = filters
            .iter()
            .enumerate()
            .map(|(kk, w)| {
                let own = self.drop.ue_index(0, kk);
                let mut signal = 0.0;
                let mut cellular = 0.0;
                for (j, h) in h_ue.iter().enumerate() {
                    let p = b.p_c * self.ue_gain[j] * dot(w, h).norm_sqr();
                    if j == own {
                        signal = p;
                    } else {
                        cellular += p;
                    }
                }
                let d2d: f64 = h_d2d
                    .iter()
                    .zip(&self.d2d_gain)
                    .map(|(h, g)| b.p_d * g * dot(w, h).norm_sqr())
                    .sum();
                let w2: f64 = w.iter().map(|x| x.norm_sqr()).sum();
                SinrBreakdown::new(signal, cellular, d2d, w2 * b.n0_bs)
            })
            .collect();
        Ok(out)
    }
}

fn axpy(y: &mut [Complex64], a: Complex64, x: &[Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}
