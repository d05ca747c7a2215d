//! Cyclic gradient boosting of main effects, then pair terms.

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::interactions::{bin_counts, rank_pairs, CoarseAxis};
use super::{EbmModel, Term};
use crate::dataset::{apply_bins, build_bins, Dataset};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::scalar::{inv_logit, log1p_exp, logit, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_rounds: usize,
    /// Rounds without a validation improvement before a stage stops.
    pub early_stop_patience: usize,
    pub validation_fraction: f64,
    pub outer_bags: usize,
    pub n_interactions: usize,
    pub max_bins: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            max_rounds: 5000,
            early_stop_patience: 50,
            validation_fraction: 0.15,
            outer_bags: 8,
            n_interactions: 10,
            max_bins: 256,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad(format!(
                "validation_fraction must lie in (0, 1), got {}",
                self.validation_fraction
            ));
        }
        if self.outer_bags == 0 {
            return bad("outer_bags must be at least 1".into());
        }
        if self.max_bins < 2 {
            return bad(format!(
                "max_bins must be at least 2, got {}",
                self.max_bins
            ));
        }
        Ok(())
    }
}

/// Validation-loss trajectory of one boosting stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageLog {
    pub rounds: usize,
    /// Round whose tables were kept (0 = no update helped).
    pub best_round: usize,
    /// Loss before any update, then after every round.
    pub val_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BagLog {
    pub bag: usize,
    pub mains: StageLog,
    pub pairs: StageLog,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLog {
    pub bags: Vec<BagLog>,
    /// Selected interaction pairs, strongest first.
    pub pairs: Vec<(usize, usize)>,
}

pub fn fit_ebm<T: Scalar>(
    train: &Dataset,
    config: &TrainConfig,
    family: Family,
) -> Result<EbmModel<T>> {
    fit_ebm_logged(train, config, family).map(|(m, _)| m)
}

/// Trains a model and reports the per-bag validation trajectories.
///
/// Each outer bag holds out a random validation slice and, when there is
/// more than one bag, boosts on a bootstrap replicate of the remaining rows.
/// Main effects are boosted first; pair terms are then ranked on the
/// residuals of the bag-averaged main-effect model and boosted on top of
/// each bag's main effects. Tables and intercepts are averaged over bags and
/// every table is finally centred on the training distribution.
pub fn fit_ebm_logged<T: Scalar>(
    train: &Dataset,
    config: &TrainConfig,
    family: Family,
) -> Result<(EbmModel<T>, TrainLog)> {
    config.validate()?;
    if train.n_rows() == 0 {
        return Err(Error::Empty("training data has no rows".into()));
    }
    train.validate_target(family)?;

    let spec = build_bins(train, config.max_bins)?;
    let binned = apply_bins(train, &spec)?;
    let y: Vec<T> = train.target().iter().map(|&v| T::lit(v)).collect();
    let n = binned.n_rows();
    let p = binned.n_features();

    let bags: Vec<Bag<T>> = (0..config.outer_bags)
        .map(|b| Bag::draw(n, config, b))
        .collect();

    let main_cells: Vec<Vec<u32>> = (0..p)
        .map(|f| binned.column(f).iter().map(|&b| b as u32).collect())
        .collect();
    let main_sizes: Vec<usize> = (0..p).map(|f| binned.n_bins(f)).collect();

    let stage1: Vec<(MainFit<T>, StageLog)> = bags
        .par_iter()
        .map(|bag| {
            let intercept = initial_intercept(family, &y, bag);
            let eta = vec![intercept; n];
            let terms = TermCells::gather(&main_cells, &main_sizes, bag);
            let (tables, log) = boost(&terms, &y, eta, bag, config, family);
            (MainFit { intercept, tables }, log)
        })
        .collect();

    let n_bags = T::from_count(bags.len());
    let mut intercept = stage1.iter().map(|(m, _)| m.intercept).sum::<T>() / n_bags;
    let mut main_tables = average_tables(stage1.iter().map(|(m, _)| &m.tables), n_bags);

    let max_pairs = p * p.saturating_sub(1) / 2;
    let n_pairs = config.n_interactions.min(max_pairs);
    if n_pairs < config.n_interactions {
        log::warn!(
            "only {max_pairs} feature pairs exist; fitting {n_pairs} of the {} requested interactions",
            config.n_interactions
        );
    }
    let pairs = if n_pairs > 0 {
        let eta = main_effect_eta(intercept, &main_tables, &main_cells);
        let residuals: Vec<T> = y
            .iter()
            .zip(&eta)
            .map(|(&yi, &e)| gradient(family, yi, e))
            .collect();
        rank_pairs(&binned, &residuals, n_pairs)?
    } else {
        Vec::new()
    };
    debug!("selected interaction pairs: {pairs:?}");

    let axes: Vec<CoarseAxis> = (0..p)
        .map(|f| CoarseAxis::from_binned(&binned, f))
        .collect();
    let pair_cells: Vec<Vec<u32>> = pairs
        .iter()
        .map(|&(i, j)| {
            let (ai, aj) = (&axes[i], &axes[j]);
            binned
                .column(i)
                .iter()
                .zip(binned.column(j))
                .map(|(&a, &b)| {
                    (ai.map[a as usize] as usize * aj.n_groups + aj.map[b as usize] as usize) as u32
                })
                .collect()
        })
        .collect();
    let pair_sizes: Vec<usize> = pairs
        .iter()
        .map(|&(i, j)| axes[i].n_groups * axes[j].n_groups)
        .collect();

    let stage2: Vec<(Vec<Vec<T>>, StageLog)> = bags
        .par_iter()
        .zip(&stage1)
        .map(|(bag, (mains, _))| {
            if pairs.is_empty() {
                return (Vec::new(), StageLog::default());
            }
            let eta = main_effect_eta(mains.intercept, &mains.tables, &main_cells);
            let terms = TermCells::gather(&pair_cells, &pair_sizes, bag);
            boost(&terms, &y, eta, bag, config, family)
        })
        .collect();
    let coarse_pairs = average_tables(stage2.iter().map(|(t, _)| t), n_bags);

    // centre each table on the training rows and zero unsupported cells
    let mut terms = Vec::with_capacity(p + pairs.len());
    for (f, mut table) in main_tables.drain(..).enumerate() {
        let counts = bin_counts(&binned, f);
        intercept += centre(&mut table, &counts, |b| b, n);
        terms.push(Term::main(f, table));
    }
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let mut coarse = coarse_pairs[k].clone();
        let mut counts = vec![0usize; pair_sizes[k]];
        for &c in &pair_cells[k] {
            counts[c as usize] += 1;
        }
        intercept += centre(&mut coarse, &counts, |c| c, n);
        let (ai, aj) = (&axes[i], &axes[j]);
        let (bi, bj) = (binned.n_bins(i), binned.n_bins(j));
        let mut full = Vec::with_capacity(bi * bj);
        for a in 0..bi {
            for b in 0..bj {
                full.push(coarse[ai.map[a] as usize * aj.n_groups + aj.map[b] as usize]);
            }
        }
        terms.push(Term::pair(i, j, full));
    }

    let log = TrainLog {
        bags: stage1
            .into_iter()
            .zip(stage2)
            .enumerate()
            .map(|(bag, ((_, mains), (_, pairs)))| BagLog { bag, mains, pairs })
            .collect(),
        pairs: pairs.clone(),
    };
    let model = EbmModel::new(intercept, family.link(), spec, terms)?;
    Ok((model, log))
}

/// Subtracts the count-weighted mean from supported cells, zeroes cells with
/// no training rows and returns the removed mean.
fn centre<T: Scalar>(
    table: &mut [T],
    counts: &[usize],
    cell: impl Fn(usize) -> usize,
    n: usize,
) -> T {
    let mean = table
        .iter()
        .enumerate()
        .map(|(b, &s)| s * T::from_count(counts[cell(b)]))
        .sum::<T>()
        / T::from_count(n);
    for (b, s) in table.iter_mut().enumerate() {
        *s = if counts[cell(b)] > 0 {
            *s - mean
        } else {
            T::zero()
        };
    }
    mean
}

struct MainFit<T> {
    intercept: T,
    tables: Vec<Vec<T>>,
}

/// Row assignment of one outer bag.
struct Bag<T> {
    train_rows: Vec<usize>,
    weights: Vec<T>,
    val_rows: Vec<usize>,
}

impl<T: Scalar> Bag<T> {
    fn draw(n: usize, config: &TrainConfig, bag: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(bag as u64);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut n_val = (n as f64 * config.validation_fraction).round() as usize;
        if n_val >= n {
            n_val = 0;
        }
        let mut val_rows = idx[..n_val].to_vec();
        let mut rest = idx[n_val..].to_vec();
        val_rows.sort_unstable();
        rest.sort_unstable();

        if config.outer_bags == 1 {
            let weights = vec![T::one(); rest.len()];
            return Bag {
                train_rows: rest,
                weights,
                val_rows,
            };
        }
        let mut counts = vec![0usize; rest.len()];
        for _ in 0..rest.len() {
            counts[rng.gen_range(0..rest.len())] += 1;
        }
        let (train_rows, weights) = rest
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&r, &c)| (r, T::from_count(c)))
            .unzip();
        Bag {
            train_rows,
            weights,
            val_rows,
        }
    }
}

/// Cell index of every bag row for each term being boosted.
struct TermCells<T> {
    train: Vec<Vec<u32>>,
    val: Vec<Vec<u32>>,
    sizes: Vec<usize>,
    /// Total bag weight per cell.
    weight: Vec<Vec<T>>,
}

impl<T: Scalar> TermCells<T> {
    fn gather(cells: &[Vec<u32>], sizes: &[usize], bag: &Bag<T>) -> Self {
        let pick = |rows: &[usize]| -> Vec<Vec<u32>> {
            cells
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect()
        };
        let train = pick(&bag.train_rows);
        let val = pick(&bag.val_rows);
        let weight = train
            .iter()
            .zip(sizes)
            .map(|(col, &size)| {
                let mut w = vec![T::zero(); size];
                for (&c, &wi) in col.iter().zip(&bag.weights) {
                    w[c as usize] += wi;
                }
                w
            })
            .collect();
        TermCells {
            train,
            val,
            sizes: sizes.to_vec(),
            weight,
        }
    }
}

/// Runs cyclic boosting over `terms`, starting from link-scale predictions
/// `eta` (indexed by dataset row). Returns the tables from the best
/// validation round.
fn boost<T: Scalar>(
    terms: &TermCells<T>,
    y: &[T],
    eta: Vec<T>,
    bag: &Bag<T>,
    config: &TrainConfig,
    family: Family,
) -> (Vec<Vec<T>>, StageLog) {
    let lr = T::lit(config.learning_rate);
    let y_train: Vec<T> = bag.train_rows.iter().map(|&r| y[r]).collect();
    let y_val: Vec<T> = bag.val_rows.iter().map(|&r| y[r]).collect();
    let mut eta_train: Vec<T> = bag.train_rows.iter().map(|&r| eta[r]).collect();
    let mut eta_val: Vec<T> = bag.val_rows.iter().map(|&r| eta[r]).collect();

    let mut tables: Vec<Vec<T>> = terms.sizes.iter().map(|&s| vec![T::zero(); s]).collect();
    let has_val = !bag.val_rows.is_empty();
    let mut log = StageLog::default();
    let mut best = f64::INFINITY;
    let mut best_tables = tables.clone();
    if has_val {
        best = mean_loss(family, &y_val, &eta_val);
        log.val_loss.push(best);
    }
    let mut sums: Vec<T> = Vec::new();

    for round in 1..=config.max_rounds {
        for (k, table) in tables.iter_mut().enumerate() {
            let cells = &terms.train[k];
            sums.clear();
            sums.resize(table.len(), T::zero());
            for ((&c, &w), (&yi, &e)) in cells
                .iter()
                .zip(&bag.weights)
                .zip(y_train.iter().zip(&eta_train))
            {
                sums[c as usize] += w * gradient(family, yi, e);
            }
            for ((s, t), &w) in sums.iter_mut().zip(table.iter_mut()).zip(&terms.weight[k]) {
                *s = if w > T::zero() {
                    lr * *s / w
                } else {
                    T::zero()
                };
                *t += *s;
            }
            for (e, &c) in eta_train.iter_mut().zip(cells) {
                *e += sums[c as usize];
            }
            for (e, &c) in eta_val.iter_mut().zip(&terms.val[k]) {
                *e += sums[c as usize];
            }
        }
        log.rounds = round;
        if has_val {
            let loss = mean_loss(family, &y_val, &eta_val);
            log.val_loss.push(loss);
            if loss < best {
                best = loss;
                log.best_round = round;
                best_tables.clone_from(&tables);
            } else if round - log.best_round >= config.early_stop_patience {
                break;
            }
        }
    }
    if has_val {
        (best_tables, log)
    } else {
        log.best_round = log.rounds;
        (tables, log)
    }
}

fn initial_intercept<T: Scalar>(family: Family, y: &[T], bag: &Bag<T>) -> T {
    let (num, den) = bag
        .train_rows
        .iter()
        .zip(&bag.weights)
        .fold((T::zero(), T::zero()), |(s, w), (&r, &wi)| {
            (s + wi * y[r], w + wi)
        });
    let mean = if den > T::zero() {
        num / den
    } else {
        T::zero()
    };
    match family {
        Family::Gaussian => mean,
        Family::Binomial => {
            let eps = T::lit(1e-5);
            logit(mean.max(eps).min(T::one() - eps))
        }
    }
}

fn main_effect_eta<T: Scalar>(intercept: T, tables: &[Vec<T>], cells: &[Vec<u32>]) -> Vec<T> {
    let n = cells.first().map_or(0, Vec::len);
    let mut eta = vec![intercept; n];
    for (table, col) in tables.iter().zip(cells) {
        for (e, &c) in eta.iter_mut().zip(col) {
            *e += table[c as usize];
        }
    }
    eta
}

fn average_tables<'a, T: Scalar>(
    per_bag: impl Iterator<Item = &'a Vec<Vec<T>>>,
    n_bags: T,
) -> Vec<Vec<T>> {
    let mut acc: Option<Vec<Vec<T>>> = None;
    for tables in per_bag {
        match &mut acc {
            None => acc = Some(tables.clone()),
            Some(a) => {
                for (at, t) in a.iter_mut().zip(tables) {
                    for (x, &v) in at.iter_mut().zip(t) {
                        *x += v;
                    }
                }
            }
        }
    }
    let mut acc = acc.unwrap_or_default();
    for t in &mut acc {
        for x in t.iter_mut() {
            *x /= n_bags;
        }
    }
    acc
}

/// Negative loss gradient in the link scale: `y - mean(eta)`.
pub(crate) fn gradient<T: Scalar>(family: Family, y: T, eta: T) -> T {
    match family {
        Family::Gaussian => y - eta,
        Family::Binomial => y - inv_logit(eta),
    }
}

fn mean_loss<T: Scalar>(family: Family, y: &[T], eta: &[T]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(eta)
        .map(|(&yi, &e)| match family {
            Family::Gaussian => (yi - e).as_f64().powi(2),
            Family::Binomial => (log1p_exp(e) - yi * e).as_f64(),
        })
        .sum();
    total / y.len() as f64
}
