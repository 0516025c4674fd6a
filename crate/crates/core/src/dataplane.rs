//! Datasets, synthetic data generation and the distributed sampler.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded through
//! `seed_from_u64` (SplitMix64 expansion). Shuffles are an explicit
//! Fisher-Yates pass drawing bounded integers by 128-bit widening multiply,
//! so the permutation for a given seed does not depend on `rand` internals.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// Labelled feature vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        num_classes: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Input(
                "dataset must contain at least one sample".into(),
            ));
        }
        if feature_dim == 0 {
            return Err(Error::Input("feature dimension must be at least 1".into()));
        }
        if features.len() != labels.len() * feature_dim {
            return Err(Error::Input(format!(
                "{} feature values do not form {} rows of width {}",
                features.len(),
                labels.len(),
                feature_dim
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Input(format!(
                "label {bad} not below class count {num_classes}"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("feature values must be finite".into()));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            feature_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    pub fn sample(&self, i: usize) -> Result<(&[f64], usize)> {
        if i >= self.len() {
            return Err(Error::Index {
                what: "sample",
                index: i,
                bound: self.len(),
            });
        }
        Ok((self.row(i), self.labels[i]))
    }

    /// A new dataset holding the given rows in order. The class count is kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.feature_dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let (x, y) = self.sample(i)?;
            features.extend_from_slice(x);
            labels.push(y);
        }
        Self::new(features, labels, self.num_classes, self.feature_dim)
    }

    /// Seeded shuffle, then the last `round(n·holdout)` shuffled indices form
    /// the validation split. Returns (train, validation, validation indices).
    pub fn split_holdout(&self, holdout: f64, seed: u64) -> Result<Split> {
        if !(0.0..1.0).contains(&holdout) {
            return Err(Error::Config(format!(
                "holdout fraction {holdout} not in [0, 1)"
            )));
        }
        let n = self.len();
        let n_val = ((n as f64) * holdout).round() as usize;
        if n_val == 0 || n_val >= n {
            return Err(Error::Config(format!(
                "holdout fraction {holdout} leaves no train or validation samples for n={n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        shuffle(
            &mut order,
            &mut Xoshiro256PlusPlus::seed_from_u64(mix(seed, SPLIT_STREAM)),
        );
        let (train_idx, val_idx) = order.split_at(n - n_val);
        let mut train_idx = train_idx.to_vec();
        let mut val_idx = val_idx.to_vec();
        train_idx.sort_unstable();
        val_idx.sort_unstable();
        Ok(Split {
            train: self.subset(&train_idx)?,
            validation: self.subset(&val_idx)?,
            train_indices: train_idx,
            validation_indices: val_idx,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub train: Dataset,
    pub validation: Dataset,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
}

const SPLIT_STREAM: u64 = 0x5350_4c49_545f_3830;
const SHARD_STREAM: u64 = 0x5348_4152_445f_4550;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two words into one seed with SplitMix64 finalisers.
pub fn mix(a: u64, b: u64) -> u64 {
    splitmix64(splitmix64(a) ^ b)
}

/// Uniform integer in `0..bound` via 128-bit widening multiply.
fn bounded(rng: &mut impl RngCore, bound: usize) -> usize {
    ((rng.next_u64() as u128 * bound as u128) >> 64) as usize
}

/// Fisher-Yates, walking from the last position down.
pub fn shuffle<T>(items: &mut [T], rng: &mut impl RngCore) {
    for i in (1..items.len()).rev() {
        let j = bounded(rng, i + 1);
        items.swap(i, j);
    }
}

/// Gaussian class clusters: class `c` is centred on `margin · u_c` for a
/// seeded random unit vector `u_c`, with unit isotropic noise. Sample `i` has
/// label `i mod C`, so class counts differ by at most one.
pub fn generate_synthetic(
    n: usize,
    feature_dim: usize,
    num_classes: usize,
    margin: f64,
    seed: u64,
) -> Result<Dataset> {
    if num_classes < 2 {
        return Err(Error::Input(format!(
            "need at least 2 classes, got {num_classes}"
        )));
    }
    if n < num_classes {
        return Err(Error::Input(format!(
            "n={n} is smaller than the class count {num_classes}"
        )));
    }
    if feature_dim == 0 {
        return Err(Error::Input("feature dimension must be at least 1".into()));
    }
    if !(margin >= 0.0 && margin.is_finite()) {
        return Err(Error::Input(format!(
            "margin must be finite and >= 0, got {margin}"
        )));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut centres = Vec::with_capacity(num_classes * feature_dim);
    for _ in 0..num_classes {
        let dir: Vec<f64> = (0..feature_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        centres.extend(dir.iter().map(|x| margin * x / norm));
    }
    let mut features = Vec::with_capacity(n * feature_dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % num_classes;
        let centre = &centres[c * feature_dim..(c + 1) * feature_dim];
        features.extend(centre.iter().map(|m| {
            let noise: f64 = StandardNormal.sample(&mut rng);
            m + noise
        }));
        labels.push(c);
    }
    Dataset::new(features, labels, num_classes, feature_dim)
}

/// Parses a headerless CSV: integer label, then the feature values.
pub fn parse_csv(text: &str) -> Result<Dataset> {
    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let label_field = fields.next().unwrap_or_default().trim();
        let label: usize = label_field.parse().map_err(|_| Error::Parse {
            line: lineno,
            msg: format!("label {label_field:?} is not a non-negative integer"),
        })?;
        let start = features.len();
        for f in fields {
            let f = f.trim();
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("feature {f:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("feature {f:?} is not finite"),
                });
            }
            features.push(v);
        }
        let row_width = features.len() - start;
        match width {
            None if row_width == 0 => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: "row has a label but no features".into(),
                })
            }
            None => width = Some(row_width),
            Some(w) if w != row_width => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has {} fields, expected {}", row_width + 1, w + 1),
                })
            }
            Some(_) => {}
        }
        labels.push(label);
    }
    let Some(width) = width else {
        return Err(Error::Parse {
            line: 1,
            msg: "file contains no samples".into(),
        });
    };
    let num_classes = labels.iter().max().map_or(0, |m| m + 1);
    Dataset::new(features, labels, num_classes, width)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_csv(&fs::read_to_string(path)?)
}

/// Formats a dataset as CSV. Floats use Rust's shortest round-trip form.
pub fn to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for i in 0..data.len() {
        write!(out, "{}", data.labels[i]).unwrap();
        for x in data.row(i) {
            write!(out, ",{x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv(data))?;
    Ok(())
}

/// One worker's slice of an epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub worker_id: usize,
    pub num_workers: usize,
    pub epoch: u64,
    pub indices: Vec<usize>,
}

/// The epoch permutation shared by every worker.
pub fn epoch_permutation(n: usize, epoch: u64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix(mix(seed, SHARD_STREAM), epoch));
    shuffle(&mut order, &mut rng);
    order
}

/// Distributed sampler over `n` samples: shuffle, drop the remainder so that
/// every worker gets `floor(n/N)` indices, then deal round-robin.
pub fn shard(
    n: usize,
    num_workers: usize,
    worker_id: usize,
    epoch: u64,
    seed: u64,
) -> Result<Shard> {
    if num_workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    if num_workers > n {
        return Err(Error::Config(format!(
            "{num_workers} workers exceed the {n} available samples"
        )));
    }
    if worker_id >= num_workers {
        return Err(Error::Index {
            what: "worker",
            index: worker_id,
            bound: num_workers,
        });
    }
    let order = epoch_permutation(n, epoch, seed);
    let kept = (n / num_workers) * num_workers;
    let indices = order[..kept]
        .iter()
        .skip(worker_id)
        .step_by(num_workers)
        .copied()
        .collect();
    Ok(Shard {
        worker_id,
        num_workers,
        epoch,
        indices,
    })
}

/// Contiguous batches of a shard; the last one may be short.
pub fn batches(shard: &Shard, batch_size: usize) -> impl Iterator<Item = &[usize]> {
    shard.indices.chunks(batch_size.max(1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_basic() {
        let d = parse_csv("0,1.0,2.0\n1,3.0,4.0").unwrap();
        assert_eq!((d.len(), d.feature_dim(), d.num_classes()), (2, 2, 2));
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.labels(), &[0, 1]);
    }

    #[test]
    fn csv_errors_name_lines() {
        match parse_csv("0,1.0\n1,2.0,3.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("0,1.0\n1,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("x,1.0\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_csv(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let d = generate_synthetic(9, 4, 3, 1.5, 2).unwrap();
        let text = to_csv(&d);
        let back = parse_csv(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(to_csv(&back), text);
    }

    #[test]
    fn synthetic_shape_and_balance() {
        let d = generate_synthetic(4145, 512, 3, 2.0, 7).unwrap();
        assert_eq!((d.len(), d.feature_dim(), d.num_classes()), (4145, 512, 3));
        let mut counts = [0usize; 3];
        for &l in d.labels() {
            counts[l] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(hi - lo <= 1);
        assert_eq!(d, generate_synthetic(4145, 512, 3, 2.0, 7).unwrap());
        assert!(generate_synthetic(2, 4, 3, 1.0, 0).is_err());
        assert!(generate_synthetic(10, 4, 2, -1.0, 0).is_err());
    }

    #[test]
    fn shard_examples() {
        let s = shard(10, 1, 0, 0, 3).unwrap();
        assert_eq!(s.indices.len(), 10);
        for w in 0..4 {
            assert_eq!(shard(10, 4, w, 0, 3).unwrap().indices.len(), 2);
        }
        assert!(matches!(shard(3, 4, 0, 0, 0), Err(Error::Config(_))));
        assert!(matches!(shard(10, 4, 4, 0, 0), Err(Error::Index { .. })));
    }

    #[test]
    fn epochs_reshuffle() {
        let a = shard(32, 2, 0, 0, 9).unwrap();
        let b = shard(32, 2, 0, 1, 9).unwrap();
        assert_ne!(a.indices, b.indices);
    }

    #[test]
    fn batching() {
        let mk = |n| Shard {
            worker_id: 0,
            num_workers: 1,
            epoch: 0,
            indices: (0..n).collect(),
        };
        let s8 = mk(8);
        assert_eq!(
            batches(&s8, 4).map(<[usize]>::len).collect::<Vec<_>>(),
            vec![4, 4]
        );
        let s5 = mk(5);
        assert_eq!(
            batches(&s5, 4).map(<[usize]>::len).collect::<Vec<_>>(),
            vec![4, 1]
        );
        let joined: Vec<usize> = batches(&s5, 4).flatten().copied().collect();
        assert_eq!(joined, s5.indices);
    }

    #[test]
    fn holdout_split() {
        let d = generate_synthetic(245, 3, 2, 1.0, 1).unwrap();
        let s = d.split_holdout(0.2, 1).unwrap();
        assert_eq!(s.validation.len(), 49);
        assert_eq!(s.train.len(), 196);
        let mut all: Vec<usize> = s
            .train_indices
            .iter()
            .chain(&s.validation_indices)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..245).collect::<Vec<_>>());
    }
}
