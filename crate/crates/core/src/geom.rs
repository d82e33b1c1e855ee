//! Spatial layer: hexagonal cell layout, UE drops, PPP D2D drops,
//! per-cell partitioning and nearest-neighbour ordering.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Sub};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::channel::ShadowField;
use crate::error::{Error, Result};
use crate::rng::{self, Phase};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn polar(r: f64, theta: f64) -> Self {
        Point2::new(r * theta.cos(), r * theta.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn dist2(self, other: Point2) -> f64 {
        let d = self - other;
        d.x * d.x + d.y * d.y
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

/// Flat-top hexagonal cells on a lattice, listed ring by ring outward from
/// cell 0 at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    centers: Vec<Point2>,
    side: f64,
}

impl CellLayout {
    pub fn centers(&self) -> &[Point2] {
        &self.centers
    }

    pub fn center(&self, cell: usize) -> Point2 {
        self.centers[cell]
    }

    /// Hexagon side length, equal to the center-to-vertex distance.
    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn num_cells(&self) -> usize {
        self.centers.len()
    }

    /// Distance from the origin to the farthest hexagon vertex.
    pub fn circumradius(&self) -> f64 {
        self.centers.iter().map(|c| c.norm()).fold(0.0, f64::max) + self.side
    }

    pub fn hex_area(&self) -> f64 {
        1.5 * SQRT3 * self.side * self.side
    }

    /// Closed membership test for one hexagon.
    pub fn in_cell(&self, cell: usize, p: Point2) -> bool {
        in_hexagon(p - self.centers[cell], self.side)
    }

    /// Cell owning `p`, or `None` outside the layout. Points on a shared edge
    /// go to the nearest center, ties broken by the lower index.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let nearest = self
            .centers
            .iter()
            .enumerate()
            .map(|(i, c)| (c.dist2(p), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, i)| i)?;
        self.in_cell(nearest, p).then_some(nearest)
    }
}

/// Point-in-hexagon test for a flat-top hexagon centred at the origin.
pub fn in_hexagon(p: Point2, side: f64) -> bool {
    let (x, y) = (p.x.abs(), p.y.abs());
    y <= 0.5 * SQRT3 * side && SQRT3 * x + y <= SQRT3 * side
}

/// Builds `1 + 3 r (r + 1)` cells for `num_rings = r`.
///
/// # Panics
/// If `side` is not a positive finite number.
pub fn build_hex_layout(num_rings: usize, side: f64) -> CellLayout {
    assert!(
        side.is_finite() && side > 0.0,
        "cell side must be positive, got {side}"
    );
    let n = num_rings as i64;
    let mut cells: Vec<(i64, f64, Point2)> = Vec::new();
    for q in -n..=n {
        for r in (-n).max(-q - n)..=n.min(-q + n) {
            let ring = q.abs().max(r.abs()).max((q + r).abs());
            let p = Point2::new(
                1.5 * side * q as f64,
                SQRT3 * side * (r as f64 + 0.5 * q as f64),
            );
            let angle = p.y.atan2(p.x).rem_euclid(TAU);
            cells.push((ring, angle, p));
        }
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    CellLayout {
        centers: cells.into_iter().map(|c| c.2).collect(),
        side,
    }
}

/// Uniform point in a flat-top hexagon centred at the origin.
pub fn sample_in_hexagon<R: Rng + ?Sized>(side: f64, rng: &mut R) -> Point2 {
    let half_h = 0.5 * SQRT3 * side;
    loop {
        let p = Point2::new(rng.gen_range(-side..side), rng.gen_range(-half_h..half_h));
        if in_hexagon(p, side) {
            return p;
        }
    }
}

/// Drops `k` UEs uniformly in every cell.
pub fn drop_cellular_ues<R: Rng + ?Sized>(
    layout: &CellLayout,
    k: usize,
    rng: &mut R,
) -> Vec<Vec<Point2>> {
    layout
        .centers
        .iter()
        .map(|&c| {
            (0..k)
                .map(|_| c + sample_in_hexagon(layout.side, rng))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct D2dPairs {
    pub tx: Vec<Point2>,
    pub rx: Vec<Point2>,
}

impl D2dPairs {
    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }
}

/// PPP of D2D transmitters with intensity `lambda` on a disk of radius
/// `region`, each paired with a receiver at distance `d` in a uniform
/// direction.
pub fn drop_d2d_pairs<R: Rng + ?Sized>(
    region: f64,
    lambda: f64,
    d: f64,
    rng: &mut R,
) -> Result<D2dPairs> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "D2D intensity must be finite and non-negative, got {lambda}"
        )));
    }
    if !(d >= 0.0 && region > 0.0) {
        return Err(Error::Domain(format!(
            "invalid D2D geometry: distance {d}, region {region}"
        )));
    }
    let mean = lambda * PI * region * region;
    let count = if mean > 0.0 {
        let poisson = Poisson::new(mean).map_err(|e| Error::Domain(e.to_string()))?;
        poisson.sample(rng) as usize
    } else {
        0
    };
    let mut pairs = D2dPairs {
        tx: Vec::with_capacity(count),
        rx: Vec::with_capacity(count),
    };
    for _ in 0..count {
        let r = region * rng.gen::<f64>().sqrt();
        let tx = Point2::polar(r, rng.gen_range(0.0..TAU));
        let rx = tx + Point2::polar(d, rng.gen_range(0.0..TAU));
        pairs.tx.push(tx);
        pairs.rx.push(rx);
    }
    Ok(pairs)
}

/// Splits point indices by owning cell. The returned vector has
/// `num_cells + 1` entries; the last one collects points outside the layout.
pub fn partition_by_cell(points: &[Point2], layout: &CellLayout) -> Vec<Vec<usize>> {
    let outside = layout.num_cells();
    let mut sets = vec![Vec::new(); outside + 1];
    for (i, &p) in points.iter().enumerate() {
        sets[layout.locate(p).unwrap_or(outside)].push(i);
    }
    sets
}

/// Indices of the `m` candidates closest to `reference`, nearest first, ties
/// broken by index.
pub fn nearest_interferers(reference: Point2, candidates: &[Point2], m: usize) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = candidates
        .iter()
        .map(|c| c.dist2(reference))
        .zip(0..)
        .collect();
    nearest_prefix(&mut keyed, m);
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Sorts the `m` smallest `(key, index)` pairs to the front and truncates.
pub(crate) fn nearest_prefix(keyed: &mut Vec<(f64, usize)>, m: usize) {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let m = m.min(keyed.len());
    if m == 0 {
        keyed.clear();
        return;
    }
    if m < keyed.len() {
        keyed.select_nth_unstable_by(m - 1, cmp);
        keyed.truncate(m);
    }
    keyed.sort_unstable_by(cmp);
}

/// Knobs for generating a [`NetworkDrop`].
#[derive(Debug, Clone, PartialEq)]
pub struct DropSpec {
    pub ues_per_cell: usize,
    /// D2D transmitter intensity in m⁻².
    pub lambda: f64,
    pub d2d_distance: f64,
    /// Radius of the disk on which the PPP is simulated.
    pub region_radius: f64,
    pub sigma_db: f64,
}

/// One realization of the network: UE positions, the D2D point process and
/// the per-link shadowing field.
#[derive(Debug, Clone)]
pub struct NetworkDrop {
    pub layout: CellLayout,
    /// `cellular_ues[b][k]` is UE `k` of cell `b`.
    pub cellular_ues: Vec<Vec<Point2>>,
    pub d2d: D2dPairs,
    pub d2d_distance: f64,
    pub shadow: ShadowField,
    pub seed: u64,
}

impl NetworkDrop {
    /// Generates a drop whose geometry and shadowing are pure functions of
    /// `seed`.
    pub fn generate(layout: &CellLayout, spec: &DropSpec, seed: u64) -> Result<Self> {
        let mut geo = rng::stream(rng::derive_seed(seed, &[Phase::Geometry as u64]));
        let cellular_ues = drop_cellular_ues(layout, spec.ues_per_cell, &mut geo);
        let d2d = drop_d2d_pairs(spec.region_radius, spec.lambda, spec.d2d_distance, &mut geo)?;
        let shadow = ShadowField::new(
            rng::derive_seed(seed, &[Phase::Shadowing as u64]),
            spec.sigma_db,
        );
        Ok(NetworkDrop {
            layout: layout.clone(),
            cellular_ues,
            d2d,
            d2d_distance: spec.d2d_distance,
            shadow,
            seed,
        })
    }

    pub fn ues_per_cell(&self) -> usize {
        self.cellular_ues.first().map_or(0, Vec::len)
    }

    pub fn num_cellular(&self) -> usize {
        self.cellular_ues.iter().map(Vec::len).sum()
    }

    /// Flat UE index `b * K + k`.
    pub fn ue_index(&self, cell: usize, k: usize) -> usize {
        cell * self.ues_per_cell() + k
    }

    pub fn ue(&self, index: usize) -> Point2 {
        let k = self.ues_per_cell();
        self.cellular_ues[index / k][index % k]
    }

    pub fn cellular_points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.cellular_ues.iter().flatten().copied()
    }

    /// D2D pairs whose receiver lies in cell 0.
    pub fn central_d2d_receivers(&self) -> Vec<usize> {
        (0..self.d2d.len())
            .filter(|&r| self.layout.in_cell(0, self.d2d.rx[r]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn ring_counts() {
        assert_eq!(build_hex_layout(0, 500.0).num_cells(), 1);
        assert_eq!(build_hex_layout(1, 500.0).num_cells(), 7);
        assert_eq!(build_hex_layout(2, 500.0).num_cells(), 19);
        assert_eq!(build_hex_layout(0, 500.0).center(0), Point2::ORIGIN);
    }

    #[test]
    fn first_ring_spacing() {
        let layout = build_hex_layout(1, 500.0);
        for c in &layout.centers()[1..] {
            assert!((c.norm() - SQRT3 * 500.0).abs() < 1e-9);
        }
    }

    #[test]
    fn hexagons_do_not_overlap() {
        // brute-force grid: interior points belong to at most one hexagon
        let layout = build_hex_layout(2, 500.0);
        let mut covered = 0;
        for i in -120..=120 {
            for j in -120..=120 {
                let p = Point2::new(i as f64 * 19.3 + 0.17, j as f64 * 19.7 + 0.31);
                let owners = (0..layout.num_cells())
                    .filter(|&c| layout.in_cell(c, p))
                    .count();
                assert!(owners <= 1, "{p:?} in {owners} cells");
                covered += owners;
            }
        }
        assert!(covered > 0);
    }

    #[test]
    fn locate_edge_cases() {
        let layout = build_hex_layout(2, 500.0);
        assert_eq!(layout.locate(Point2::ORIGIN), Some(0));
        assert_eq!(layout.locate(Point2::new(5000.0, 0.0)), None);
        let sets = partition_by_cell(&[Point2::ORIGIN, Point2::new(5000.0, 0.0)], &layout);
        assert_eq!(sets.len(), 20);
        assert_eq!(sets[0], vec![0]);
        assert_eq!(sets[19], vec![1]);
    }

    #[test]
    fn ues_stay_in_their_cell() {
        let layout = build_hex_layout(2, 500.0);
        let mut r = rng::stream(5);
        let ues = drop_cellular_ues(&layout, 4, &mut r);
        assert_eq!(ues.iter().map(Vec::len).sum::<usize>(), 76);
        for (b, cell) in ues.iter().enumerate() {
            for &p in cell {
                assert!(layout.in_cell(b, p));
            }
        }
    }

    #[test]
    fn hexagon_samples_are_centred() {
        let mut r = rng::stream(11);
        let n = 100_000;
        let (sx, sy) = (0..n).fold((0.0, 0.0), |(sx, sy), _| {
            let p = sample_in_hexagon(500.0, &mut r);
            (sx + p.x, sy + p.y)
        });
        // per-axis std of a uniform hexagon point is below 0.5 R
        let tol = 3.0 * 250.0 / (n as f64).sqrt();
        assert!((sx / n as f64).abs() < tol && (sy / n as f64).abs() < tol);
    }

    #[test]
    fn d2d_pairs_basics() {
        let mut r = rng::stream(1);
        assert!(drop_d2d_pairs(1000.0, 0.0, 20.0, &mut r)
            .unwrap()
            .is_empty());
        let pairs = drop_d2d_pairs(2000.0, 1e-5, 20.0, &mut r).unwrap();
        for (t, x) in pairs.tx.iter().zip(&pairs.rx) {
            assert!((t.dist(*x) - 20.0).abs() < 1e-9);
            assert!(t.norm() <= 2000.0);
        }
        assert!(drop_d2d_pairs(1000.0, -1.0, 20.0, &mut r).is_err());
    }

    #[test]
    fn ppp_mean_count() {
        let lambda = 12.0 / (PI * 500.0 * 500.0);
        let radius = 3.0 * build_hex_layout(2, 500.0).circumradius();
        let mean = lambda * PI * radius * radius;
        let mut r = rng::stream(2);
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| drop_d2d_pairs(radius, lambda, 20.0, &mut r).unwrap().len())
            .sum();
        let avg = total as f64 / draws as f64;
        assert!(
            (avg - mean).abs() < 4.0 * (mean / draws as f64).sqrt(),
            "{avg} vs {mean}"
        );
    }

    #[test]
    fn nearest_ordering() {
        let cands = [
            Point2::new(3.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ];
        assert!(nearest_interferers(Point2::ORIGIN, &cands, 0).is_empty());
        assert_eq!(nearest_interferers(Point2::ORIGIN, &cands, 2), vec![1, 2]);
        assert_eq!(
            nearest_interferers(Point2::ORIGIN, &cands, 10),
            vec![1, 2, 0]
        );
        // equal distances resolve by index
        let tie = [Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)];
        assert_eq!(nearest_interferers(Point2::ORIGIN, &tie, 1), vec![0]);
    }

    #[test]
    fn identical_seeds_identical_drops() {
        let layout = build_hex_layout(2, 500.0);
        let spec = DropSpec {
            ues_per_cell: 4,
            lambda: 12.0 / (PI * 500.0 * 500.0),
            d2d_distance: 20.0,
            region_radius: 3.0 * layout.circumradius(),
            sigma_db: 7.0,
        };
        let a = NetworkDrop::generate(&layout, &spec, 99).unwrap();
        let b = NetworkDrop::generate(&layout, &spec, 99).unwrap();
        assert_eq!(a.cellular_ues, b.cellular_ues);
        assert_eq!(a.d2d, b.d2d);
        let c = NetworkDrop::generate(&layout, &spec, 100).unwrap();
        assert_ne!(a.d2d, c.d2d);
    }

    proptest! {
        #[test]
        fn partition_is_complete(seed in any::<u64>(), density in 0.0f64..30.0) {
            let layout = build_hex_layout(2, 500.0);
            let lambda = density / (PI * 500.0 * 500.0);
            let pairs = drop_d2d_pairs(3.0 * layout.circumradius(), lambda, 20.0, &mut rng::stream(seed)).unwrap();
            let sets = partition_by_cell(&pairs.tx, &layout);
            let mut seen: Vec<usize> = sets.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..pairs.len()).collect::<Vec<_>>());
            for (b, set) in sets.iter().enumerate().take(layout.num_cells()) {
                for &i in set {
                    prop_assert!(layout.in_cell(b, pairs.tx[i]));
                }
            }
        }

        #[test]
        fn nearest_is_sorted_prefix(seed in any::<u64>(), m in 0usize..40) {
            let mut r = rng::stream(seed);
            let pts: Vec<Point2> = (0..30).map(|_| Point2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
            let got = nearest_interferers(Point2::ORIGIN, &pts, m);
            let mut all: Vec<usize> = (0..pts.len()).collect();
            all.sort_by(|&a, &b| pts[a].norm().total_cmp(&pts[b].norm()).then(a.cmp(&b)));
            all.truncate(m);
            prop_assert_eq!(got, all);
        }
    }
}
