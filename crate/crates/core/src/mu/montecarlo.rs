//! Monte-Carlo estimation of the group moments.
//!
//! Each drop places `K` users uniformly in a cell (outside the exclusion
//! disk), ranks them by distance to their own base station and records the
//! relative strength at base station 0 of every rank, for every interfering
//! cell. The same user offsets serve all cells.
//!
//! Drops are grouped in fixed-size chunks, each driven by its own ChaCha
//! stream derived from `(seed, chunk index)`, and chunk results are reduced
//! in chunk order, so estimates do not depend on the number of worker
//! threads. Standard errors are batch means over chunks.
//!
//! [`MuFamily`] draws `K_max` users per drop and derives the rank
//! expectations for every smaller `K` with the order-statistics identity
//! `(K+1) E[X_(i:K)] = (K+1-i) E[X_(i:K+1)] + i E[X_(i+1:K+1)]`, applied
//! per chunk. Per chunk this equals averaging over all `K`-subsets of the
//! drawn users, so every level is an unbiased estimate of the same moments.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{GroupMoments, GroupStatistics, Method, Provenance, UserSplit};
use crate::error::{Error, Result};
use crate::geometry::{sample_unit_offset, CellGrid, Point};
use crate::propagation::PropagationModel;

const TARGET_CHUNKS: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloConfig {
    pub n_samples: u64,
    pub min_dist_fraction: f64,
    pub seed: u64,
}

impl MonteCarloConfig {
    pub fn new(n_samples: u64, min_dist_fraction: f64, seed: u64) -> Result<Self> {
        if n_samples == 0 {
            return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&min_dist_fraction) {
            return Err(Error::InvalidArgument(format!(
                "minimum distance fraction must lie in [0, 1), got {min_dist_fraction}"
            )));
        }
        Ok(Self { n_samples, min_dist_fraction, seed })
    }

    fn chunk_len(&self) -> u64 {
        self.n_samples.div_ceil(TARGET_CHUNKS)
    }

    fn n_chunks(&self) -> u64 {
        self.n_samples.div_ceil(self.chunk_len())
    }

    fn provenance(&self, grid: &CellGrid, model: &PropagationModel) -> Provenance {
        Provenance {
            grid_hash: grid.layout_hash(),
            kappa: model.kappa(),
            min_dist_fraction: self.min_dist_fraction,
            method: Method::MonteCarlo { seed: self.seed, n_samples: self.n_samples },
        }
    }
}

/// Monte-Carlo moments for one user split.
pub fn estimate_mu(
    grid: &CellGrid,
    model: &PropagationModel,
    split: UserSplit,
    config: &MonteCarloConfig,
) -> Result<GroupStatistics> {
    let chunks = draw_chunks(grid, model, split.users(), config);
    let mut out = None;
    reduce_levels(&chunks, grid.len(), split.users(), split.users(), |k| {
        (k == split.users()).then(|| vec![split.interior()])
    }, |moments| out = Some(moments));
    let (_, interior, edge) = out.expect("requested level is always reduced");
    Ok(GroupStatistics {
        split,
        interior,
        edge,
        provenance: config.provenance(grid, model),
    })
}

/// Moments for every split of every `K` in `1..=k_max`, from one set of drops.
#[derive(Debug, Clone)]
pub struct MuFamily {
    k_max: usize,
    provenance: Provenance,
    // levels[k - 1][m]
    levels: Vec<Vec<Arc<GroupStatistics>>>,
}

impl MuFamily {
    pub fn estimate(
        grid: &CellGrid,
        model: &PropagationModel,
        k_max: usize,
        config: &MonteCarloConfig,
    ) -> Result<Self> {
        Self::estimate_range(grid, model, 1, k_max, config)
    }

    /// Like [`MuFamily::estimate`] but only keeps levels `k_min..=k_max`.
    pub fn estimate_range(
        grid: &CellGrid,
        model: &PropagationModel,
        k_min: usize,
        k_max: usize,
        config: &MonteCarloConfig,
    ) -> Result<Self> {
        if k_min == 0 || k_min > k_max {
            return Err(Error::InvalidArgument(format!(
                "invalid user range {k_min}..={k_max}"
            )));
        }
        let provenance = config.provenance(grid, model);
        let chunks = draw_chunks(grid, model, k_max, config);
        let mut levels: Vec<Vec<Arc<GroupStatistics>>> = vec![Vec::new(); k_max];
        reduce_levels(
            &chunks,
            grid.len(),
            k_max,
            k_min,
            |k| Some((0..k).collect()),
            |(split, interior, edge)| {
                levels[split.users() - 1].push(Arc::new(GroupStatistics {
                    split,
                    interior,
                    edge,
                    provenance: provenance.clone(),
                }));
            },
        );
        Ok(Self { k_max, provenance, levels })
    }

    pub(crate) fn from_parts(k_max: usize, provenance: Provenance, levels: Vec<Vec<Arc<GroupStatistics>>>) -> Self {
        Self { k_max, provenance, levels }
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Smallest `K` held by this family.
    pub fn k_min(&self) -> usize {
        self.levels.iter().position(|l| !l.is_empty()).map_or(self.k_max + 1, |i| i + 1)
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn get(&self, split: UserSplit) -> Option<Arc<GroupStatistics>> {
        self.levels
            .get(split.users().checked_sub(1)?)?
            .get(split.interior())
            .cloned()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<GroupStatistics>> {
        self.levels.iter().flatten()
    }
}

/// Per-chunk rank means, layout `[interfering cell][rank][moment]`.
struct ChunkRanks {
    drops: u64,
    means: Vec<f64>,
}

fn draw_chunks(
    grid: &CellGrid,
    model: &PropagationModel,
    users: usize,
    config: &MonteCarloConfig,
) -> Vec<ChunkRanks> {
    let origin = grid.cell(0).unit_center;
    let shifts: Vec<Point> = grid.cells()[1..].iter().map(|c| c.unit_center - origin).collect();
    let chunk_len = config.chunk_len();
    (0..config.n_chunks())
        .into_par_iter()
        .map(|chunk| {
            let drops = chunk_len.min(config.n_samples - chunk * chunk_len);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(chunk);
            let mut sums = vec![0.0; shifts.len() * users * 2];
            let mut ranked: Vec<(f64, Point)> = Vec::with_capacity(users);
            for _ in 0..drops {
                ranked.clear();
                ranked.extend((0..users).map(|_| {
                    let u = sample_unit_offset(&mut rng, config.min_dist_fraction);
                    (u.norm_sq(), u)
                }));
                // stable: ties keep draw order
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (c, &shift) in shifts.iter().enumerate() {
                    let row = &mut sums[c * users * 2..(c + 1) * users * 2];
                    for (slot, &(own_sq, u)) in row.chunks_exact_mut(2).zip(&ranked) {
                        let r = model.strength_from_sq(own_sq, (u + shift).norm_sq());
                        slot[0] += r;
                        slot[1] += r * r;
                    }
                }
            }
            let inv = 1.0 / drops as f64;
            sums.iter_mut().for_each(|s| *s *= inv);
            ChunkRanks { drops, means: sums }
        })
        .collect()
}

type LevelOutput = (UserSplit, Option<GroupMoments>, GroupMoments);

/// Walks `K` down from `k_max` to `k_min`, reducing the requested splits of
/// each level across chunks.
#[allow(clippy::needless_range_loop)]
fn reduce_levels(
    chunks: &[ChunkRanks],
    n_cells: usize,
    k_max: usize,
    k_min: usize,
    mut splits_for: impl FnMut(usize) -> Option<Vec<usize>>,
    mut emit: impl FnMut(LevelOutput),
) {
    let n_interf = n_cells - 1;
    let mut current: Vec<Vec<f64>> = chunks.iter().map(|c| c.means.clone()).collect();
    let weights: Vec<f64> = chunks.iter().map(|c| c.drops as f64).collect();
    let w_sum: f64 = weights.iter().sum();
    let w_sq: f64 = weights.iter().map(|w| w * w).sum();
    let n_batches = chunks.len() as f64;
    let inflation = if chunks.len() > 1 { n_batches / (n_batches - 1.0) } else { 0.0 };

    for k in (k_min..=k_max).rev() {
        if k < k_max {
            for ranks in &mut current {
                *ranks = step_down(ranks, n_interf, k + 1);
            }
        }
        let Some(splits) = splits_for(k) else { continue };
        // acc[(split, cell, moment, group)] = (sum w x, sum w^2 x, sum w^2 x^2)
        let stride = n_interf * 2 * 2;
        let mut acc = vec![[0.0f64; 3]; splits.len() * stride];
        let mut wanted = vec![usize::MAX; k];
        for (i, &m) in splits.iter().enumerate() {
            wanted[m] = i;
        }
        for (ranks, &w) in current.iter().zip(&weights) {
            let w2 = w * w;
            for c in 0..n_interf {
                for g in 0..2 {
                    let at = |r: usize| ranks[(c * k + r) * 2 + g];
                    let total: f64 = (0..k).map(at).sum();
                    let mut prefix = 0.0;
                    for m in 0..k {
                        if wanted[m] != usize::MAX {
                            let base = wanted[m] * stride + (c * 2 + g) * 2;
                            if m > 0 {
                                let x = prefix / m as f64;
                                let a = &mut acc[base];
                                a[0] += w * x;
                                a[1] += w2 * x;
                                a[2] += w2 * x * x;
                            }
                            let x = (total - prefix) / (k - m) as f64;
                            let a = &mut acc[base + 1];
                            a[0] += w * x;
                            a[1] += w2 * x;
                            a[2] += w2 * x * x;
                        }
                        prefix += at(m);
                    }
                }
            }
        }
        for (i, &m) in splits.iter().enumerate() {
            let mut interior = (m > 0).then(|| GroupMoments::own_cell_only(n_cells));
            let mut edge = GroupMoments::own_cell_only(n_cells);
            for c in 0..n_interf {
                for g in 0..2 {
                    let base = i * stride + (c * 2 + g) * 2;
                    let targets = [(interior.as_mut(), acc[base]), (Some(&mut edge), acc[base + 1])];
                    for (target, [s1, s2, s3]) in targets {
                        let Some(t) = target else { continue };
                        let mean = s1 / w_sum;
                        let var = (s3 - 2.0 * mean * s2 + mean * mean * w_sq) * inflation / (w_sum * w_sum);
                        let se = var.max(0.0).sqrt();
                        if g == 0 {
                            t.mu1[c + 1] = mean;
                            t.stderr1[c + 1] = se;
                        } else {
                            t.mu2[c + 1] = mean;
                            t.stderr2[c + 1] = se;
                        }
                    }
                }
            }
            let split = UserSplit::new(k, m).expect("m < k by construction");
            emit((split, interior, edge));
        }
    }
}

/// Rank means of `k - 1` users from those of `k` users.
fn step_down(ranks: &[f64], n_interf: usize, k: usize) -> Vec<f64> {
    let target = k - 1;
    let kf = k as f64;
    let mut out = vec![0.0; n_interf * target * 2];
    for c in 0..n_interf {
        let src = &ranks[c * k * 2..(c + 1) * k * 2];
        let dst = &mut out[c * target * 2..(c + 1) * target * 2];
        for i in 0..target {
            // 1-based rank i+1: weights (k - (i+1)) / k and (i+1) / k
            let lo = (k - 1 - i) as f64 / kf;
            let hi = (i + 1) as f64 / kf;
            for g in 0..2 {
                dst[i * 2 + g] = lo * src[i * 2 + g] + hi * src[(i + 1) * 2 + g];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::Moment;

    fn setup() -> (CellGrid, PropagationModel) {
        (CellGrid::new(1.0, 1).unwrap(), PropagationModel::new(3.5).unwrap())
    }

    #[test]
    fn own_cell_is_exactly_one() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(500, 0.14, 1).unwrap();
        let s = estimate_mu(&grid, &model, UserSplit::new(4, 1).unwrap(), &cfg).unwrap();
        for g in [s.interior.as_ref().unwrap(), &s.edge] {
            assert_eq!((g.mu1[0], g.mu2[0], g.stderr1[0], g.stderr2[0]), (1.0, 1.0, 0.0, 0.0));
        }
    }

    #[test]
    fn no_interior_group_without_fractional_reuse() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(100, 0.14, 1).unwrap();
        let s = estimate_mu(&grid, &model, UserSplit::new(3, 0).unwrap(), &cfg).unwrap();
        assert!(s.interior.is_none());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(MonteCarloConfig::new(0, 0.14, 0).is_err());
        assert!(MonteCarloConfig::new(10, 1.0, 0).is_err());
    }

    #[test]
    fn chunking_covers_all_drops() {
        for n in [1, 2, 255, 256, 257, 1000, 100_000, 1_000_000] {
            let cfg = MonteCarloConfig::new(n, 0.0, 0).unwrap();
            let len = cfg.chunk_len();
            let chunks = cfg.n_chunks();
            assert!(chunks <= TARGET_CHUNKS);
            assert!((chunks - 1) * len < n && chunks * len >= n, "n={n}");
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(2_000, 0.14, 9).unwrap();
        let split = UserSplit::new(5, 2).unwrap();
        let a = estimate_mu(&grid, &model, split, &cfg).unwrap();
        let b = estimate_mu(&grid, &model, split, &cfg).unwrap();
        assert_eq!(a, b);
        let other = MonteCarloConfig { seed: 10, ..cfg };
        assert_ne!(a, estimate_mu(&grid, &model, split, &other).unwrap());
    }

    #[test]
    fn family_top_level_equals_direct_estimate() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(3_000, 0.14, 4).unwrap();
        let family = MuFamily::estimate(&grid, &model, 6, &cfg).unwrap();
        for m in 0..6 {
            let split = UserSplit::new(6, m).unwrap();
            let direct = estimate_mu(&grid, &model, split, &cfg).unwrap();
            assert_eq!(*family.get(split).unwrap(), direct);
        }
        assert_eq!(family.iter().count(), 21);
        assert!(family.get(UserSplit::new(7, 0).unwrap()).is_none());
    }

    #[test]
    fn step_down_matches_subset_average() {
        // three sorted values; every 2-subset keeps its order
        let ranks = vec![1.0, 10.0, 2.0, 20.0, 4.0, 40.0];
        let two = step_down(&ranks, 1, 3);
        // subsets {1,2},{1,4},{2,4}: rank-1 mean (1+1+2)/3, rank-2 mean (2+4+4)/3
        assert!((two[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((two[2] - 10.0 / 3.0).abs() < 1e-15);
        assert!((two[1] - 40.0 / 3.0).abs() < 1e-13);
        let one = step_down(&two, 1, 2);
        assert!((one[0] - 7.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lower_levels_agree_with_direct_draws() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(20_000, 0.14, 5).unwrap();
        let family = MuFamily::estimate(&grid, &model, 12, &cfg).unwrap();
        let split = UserSplit::new(5, 2).unwrap();
        let derived = family.get(split).unwrap();
        let direct = estimate_mu(&grid, &model, split, &MonteCarloConfig { seed: 77, ..cfg }).unwrap();
        for (a, b) in [
            (derived.interior.as_ref().unwrap(), direct.interior.as_ref().unwrap()),
            (&derived.edge, &direct.edge),
        ] {
            for gamma in Moment::ALL {
                for l in 1..grid.len() {
                    let diff = (a.mu(gamma)[l] - b.mu(gamma)[l]).abs();
                    let se = a.stderr(gamma)[l].hypot(b.stderr(gamma)[l]);
                    assert!(diff < 4.0 * se, "cell {l} {gamma:?}: {diff} vs se {se}");
                }
            }
        }
    }

    #[test]
    fn interior_users_interfere_more() {
        let (grid, model) = setup();
        let cfg = MonteCarloConfig::new(20_000, 0.14, 2).unwrap();
        let s = estimate_mu(&grid, &model, UserSplit::new(10, 5).unwrap(), &cfg).unwrap();
        let i = s.interior.as_ref().unwrap();
        for l in 1..grid.len() {
            // closer to their own BS means weaker at BS 0
            assert!(i.mu1[l] < s.edge.mu1[l]);
            assert!(s.edge.mu2[l] >= s.edge.mu1[l].powi(2) - 3.0 * s.edge.stderr2[l]);
        }
    }
}
