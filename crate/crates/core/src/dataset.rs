//! Data ingestion and node partitioning.
//!
//! The pipeline runs load → binarize → normalize → partition. Loading reads
//! the big-endian IDX image/label pair and scales pixels to [0, 1];
//! binarizing keeps two classes and relabels them ±1; normalizing rescales
//! every feature row to unit Euclidean norm; partitioning assigns sample
//! indices to nodes in one of two modes. A seeded Gaussian-blob generator
//! stands in for the real image data so the test suite and the synthetic
//! recipes run self-contained.
//!
//! A partition is a provenance map, not a copy: node i owns the global
//! indices in `partition.node(i)`, and the objective built on top reads
//! feature rows through that map. Partitions are bijections onto 0..N,
//! every node holds at least one sample, and the same seed reproduces the
//! same partition byte for byte.

use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::metrics::TestSet;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Feature matrix with aligned integer labels. Labels are raw class ids
/// after loading and ±1 after [`Dataset::binarize`].
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: DMatrix<f64>,
    pub labels: Vec<i64>,
}

impl Dataset {
    pub fn new(features: DMatrix<f64>, labels: Vec<i64>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::IdxCountMismatch { images: features.nrows(), labels: labels.len() });
        }
        if labels.is_empty() {
            return Err(Error::Invalid("dataset must hold at least one sample".into()));
        }
        Ok(Dataset { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature dimension d (before the logistic model appends its bias).
    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Load an IDX image/label file pair. Pixels are scaled to [0, 1].
    pub fn from_idx(images: &Path, labels: &Path) -> Result<Self> {
        let (rows, dims) = read_idx(images, IDX_IMAGES_MAGIC, 3)?;
        let d = dims[1] * dims[2];
        let (raw_labels, _) = read_idx(labels, IDX_LABELS_MAGIC, 1)?;
        if dims[0] != raw_labels.len() {
            return Err(Error::IdxCountMismatch { images: dims[0], labels: raw_labels.len() });
        }
        let features =
            DMatrix::from_row_iterator(dims[0], d, rows.iter().map(|&b| b as f64 / 255.0));
        let labels = raw_labels.iter().map(|&b| b as i64).collect();
        Dataset::new(features, labels)
    }

    /// Keep only two classes and relabel them: `pos` ↦ +1, `neg` ↦ −1.
    pub fn binarize(&self, pos: i64, neg: i64) -> Result<Dataset> {
        for class in [pos, neg] {
            if !self.labels.contains(&class) {
                return Err(Error::MissingClass { class });
            }
        }
        let keep: Vec<usize> = (0..self.len())
            .filter(|&s| self.labels[s] == pos || self.labels[s] == neg)
            .collect();
        let features = DMatrix::from_fn(keep.len(), self.dim(), |r, c| self.features[(keep[r], c)]);
        let labels = keep.iter().map(|&s| if self.labels[s] == pos { 1 } else { -1 }).collect();
        Dataset::new(features, labels)
    }

    /// Rescale every feature row to unit Euclidean norm.
    pub fn normalize_unit(&self) -> Result<Dataset> {
        let mut features = self.features.clone();
        for s in 0..features.nrows() {
            let norm = features.row(s).norm();
            if norm == 0.0 {
                return Err(Error::ZeroNormSample { index: s });
            }
            features.row_mut(s).scale_mut(1.0 / norm);
        }
        Dataset::new(features, self.labels.clone())
    }

    /// View as a held-out evaluation set. Labels must already be ±1.
    pub fn to_test_set(&self) -> Result<TestSet> {
        let labels = self
            .labels
            .iter()
            .map(|&y| match y {
                1 => Ok(1.0),
                -1 => Ok(-1.0),
                other => Err(Error::Invalid(format!(
                    "test labels must be ±1; found {other} (binarize first)"
                ))),
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(TestSet { features: self.features.clone(), labels })
    }
}

fn read_idx(path: &Path, magic: u32, ndims: usize) -> Result<(Vec<u8>, Vec<usize>)> {
    let name = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::io(&name, e))?;
    let header = 4 * (1 + ndims);
    if bytes.len() < 4 {
        return Err(Error::IdxTruncated { path: name, needed: header, found: bytes.len() });
    }
    let word = |k: usize| u32::from_be_bytes(bytes[4 * k..4 * k + 4].try_into().unwrap());
    let found = word(0);
    if found != magic {
        return Err(Error::IdxMagic { path: name, expected: magic, found });
    }
    if bytes.len() < header {
        return Err(Error::IdxTruncated { path: name, needed: header, found: bytes.len() });
    }
    let dims: Vec<usize> = (1..=ndims).map(|k| word(k) as usize).collect();
    let payload: usize = dims.iter().product();
    if bytes.len() != header + payload {
        return Err(Error::IdxTruncated {
            path: name,
            needed: header + payload,
            found: bytes.len(),
        });
    }
    Ok((bytes[header..].to_vec(), dims))
}

/// Write a 3-dimensional IDX image file (test fixtures and synthetic
/// exports). `images` holds rows·cols bytes per sample.
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    let name = path.display().to_string();
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for img in images {
        assert_eq!(img.len(), rows * cols, "image byte count must be rows*cols");
        out.extend_from_slice(img);
    }
    std::fs::write(path, out).map_err(|e| Error::io(name, e))
}

/// Write a 1-dimensional IDX label file.
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let name = path.display().to_string();
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    std::fs::write(path, out).map_err(|e| Error::io(name, e))
}

// ---------------------------------------------------------------------------

/// Two seeded Gaussian blobs labeled ±1, a stand-in for binarized image
/// data. Labels alternate by sample index so both classes hold ⌈N/2⌉ and
/// ⌊N/2⌋ samples exactly.
#[derive(Debug, Clone, Copy)]
pub struct BlobConfig {
    pub samples: usize,
    pub dim: usize,
    /// Distance between the two class centers.
    pub separation: f64,
    /// Isotropic Gaussian noise scale around each center.
    pub noise: f64,
    pub seed: u64,
}

pub fn synthetic_blobs(cfg: &BlobConfig) -> Result<Dataset> {
    if cfg.samples == 0 || cfg.dim == 0 {
        return Err(Error::Invalid("blob generator needs samples and dim positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut direction = nalgebra::DVector::from_fn(cfg.dim, |_, _| {
        rng.sample::<f64, _>(StandardNormal)
    });
    let norm = direction.norm();
    if norm == 0.0 {
        direction[0] = 1.0;
    } else {
        direction /= norm;
    }
    let mut features = DMatrix::zeros(cfg.samples, cfg.dim);
    let mut labels = Vec::with_capacity(cfg.samples);
    for s in 0..cfg.samples {
        let y: i64 = if s % 2 == 0 { 1 } else { -1 };
        labels.push(y);
        for l in 0..cfg.dim {
            let g: f64 = rng.sample(StandardNormal);
            features[(s, l)] = y as f64 * 0.5 * cfg.separation * direction[l] + cfg.noise * g;
        }
    }
    Dataset::new(features, labels)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Near-equal batch sizes with each node's class mix matching the
    /// global proportions up to rounding.
    BalancedHomogeneous,
    /// Every node holds samples of a single class; batch sizes vary
    /// randomly via sorted uniform cut points within each class.
    UnbalancedSingleClass,
}

impl std::fmt::Display for PartitionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PartitionMode::BalancedHomogeneous => write!(f, "balanced"),
            PartitionMode::UnbalancedSingleClass => write!(f, "unbalanced"),
        }
    }
}

impl std::str::FromStr for PartitionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "balanced" | "balanced_homogeneous" => Ok(PartitionMode::BalancedHomogeneous),
            "unbalanced" | "unbalanced_single_class" => Ok(PartitionMode::UnbalancedSingleClass),
            other => Err(Error::Invalid(format!(
                "unknown partition mode `{other}` (expected balanced|unbalanced)"
            ))),
        }
    }
}

/// Assignment of global sample indices to nodes. `node(i)` lists the
/// global indices backing node i's local components, so local index j
/// corresponds to global sample `node(i)[j]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignments: Vec<Vec<usize>>,
}

impl Partition {
    pub fn num_nodes(&self) -> usize {
        self.assignments.len()
    }

    pub fn node(&self, i: usize) -> &[usize] {
        &self.assignments[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.assignments.iter().map(|a| a.len()).collect()
    }

    pub fn total(&self) -> usize {
        self.assignments.iter().map(|a| a.len()).sum()
    }

    /// Single node owning everything, in index order.
    pub fn trivial(n_samples: usize) -> Self {
        Partition { assignments: vec![(0..n_samples).collect()] }
    }

    /// Write as `node_id,global_index` CSV rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let name = path.display().to_string();
        let mut out = Vec::new();
        let _ = writeln!(out, "node_id,global_index");
        for (i, batch) in self.assignments.iter().enumerate() {
            for &g in batch {
                let _ = writeln!(out, "{i},{g}");
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(name, e))
    }
}

/// Split `dataset` across `n` nodes. Deterministic in `seed`; the
/// randomness is a private ChaCha stream so callers cannot perturb it.
pub fn partition(dataset: &Dataset, n: usize, mode: PartitionMode, seed: u64) -> Result<Partition> {
    let total = dataset.len();
    if n == 0 {
        return Err(Error::Invalid("partition needs at least one node".into()));
    }
    if total < n {
        return Err(Error::TooFewSamples { samples: total, nodes: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::rng::derive_seed(seed, crate::rng::salt::PARTITION));

    // Class index lists in ascending class order, each shuffled in place.
    let mut classes: Vec<i64> = dataset.labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut by_class: Vec<Vec<usize>> = classes
        .iter()
        .map(|&c| (0..total).filter(|&s| dataset.labels[s] == c).collect())
        .collect();
    for list in &mut by_class {
        list.shuffle(&mut rng);
    }

    let assignments = match mode {
        PartitionMode::BalancedHomogeneous => {
            // Proportional interleave: at every position take the class
            // whose quota is furthest behind, so any contiguous chunk
            // carries near-global class proportions. Then chunk into n
            // batches of size ⌈N/n⌉ or ⌊N/n⌋, larger ones first.
            let counts: Vec<usize> = by_class.iter().map(|l| l.len()).collect();
            let mut taken = vec![0usize; by_class.len()];
            let mut order = Vec::with_capacity(total);
            for _ in 0..total {
                let pick = (0..by_class.len())
                    .filter(|&c| taken[c] < counts[c])
                    .min_by(|&a, &b| {
                        let ra = (taken[a] + 1) as f64 / counts[a] as f64;
                        let rb = (taken[b] + 1) as f64 / counts[b] as f64;
                        ra.partial_cmp(&rb).unwrap()
                    })
                    .expect("some class always has samples left");
                order.push(by_class[pick][taken[pick]]);
                taken[pick] += 1;
            }
            let base = total / n;
            let extra = total % n;
            let mut assignments = Vec::with_capacity(n);
            let mut cursor = 0;
            for i in 0..n {
                let m = base + usize::from(i < extra);
                assignments.push(order[cursor..cursor + m].to_vec());
                cursor += m;
            }
            assignments
        }
        PartitionMode::UnbalancedSingleClass => {
            // Nodes are allotted to classes proportionally (largest
            // remainder, every class at least one node), then each class's
            // shuffled list is cut at sorted distinct points so every
            // batch is nonempty.
            let node_counts = proportional_allotment(
                &by_class.iter().map(|l| l.len()).collect::<Vec<_>>(),
                n,
            )
            .ok_or_else(|| Error::Invalid(format!(
                "cannot give each of {} classes its own node with n = {n}",
                by_class.len()
            )))?;
            let mut assignments = Vec::with_capacity(n);
            for (ci, list) in by_class.iter().enumerate() {
                let parts = node_counts[ci];
                if list.len() < parts {
                    return Err(Error::PartitionInfeasible {
                        class: classes[ci],
                        samples: list.len(),
                        nodes: parts,
                    });
                }
                let cuts = distinct_sorted_cuts(list.len(), parts, &mut rng);
                let mut start = 0;
                for &end in cuts.iter().chain(std::iter::once(&list.len())) {
                    assignments.push(list[start..end].to_vec());
                    start = end;
                }
            }
            assignments
        }
    };
    debug_assert_eq!(assignments.iter().map(|a| a.len()).sum::<usize>(), total);
    Ok(Partition { assignments })
}

/// Largest-remainder split of `n` slots proportional to `weights`,
/// guaranteeing one slot per positive weight. None if that is impossible.
fn proportional_allotment(weights: &[usize], n: usize) -> Option<Vec<usize>> {
    let live = weights.iter().filter(|&&w| w > 0).count();
    if live == 0 || n < live {
        return None;
    }
    let total: usize = weights.iter().sum();
    let mut counts: Vec<usize> = weights
        .iter()
        .map(|&w| if w > 0 { ((n * w) / total).max(1) } else { 0 })
        .collect();
    // Remainder goes to the classes with the largest fractional parts;
    // ties break toward lower class index for determinism.
    loop {
        let assigned: usize = counts.iter().sum();
        match assigned.cmp(&n) {
            std::cmp::Ordering::Equal => return Some(counts),
            std::cmp::Ordering::Less => {
                let c = (0..weights.len())
                    .filter(|&c| weights[c] > 0)
                    .max_by(|&a, &b| {
                        let fa = n as f64 * weights[a] as f64 / total as f64 - counts[a] as f64;
                        let fb = n as f64 * weights[b] as f64 / total as f64 - counts[b] as f64;
                        fa.partial_cmp(&fb).unwrap().then(b.cmp(&a))
                    })
                    .unwrap();
                counts[c] += 1;
            }
            std::cmp::Ordering::Greater => {
                // Overshoot can only come from the .max(1) floor; shrink
                // the most over-represented class that can spare a slot.
                let c = (0..weights.len())
                    .filter(|&c| counts[c] > 1)
                    .max_by(|&a, &b| {
                        let fa = counts[a] as f64 - n as f64 * weights[a] as f64 / total as f64;
                        let fb = counts[b] as f64 - n as f64 * weights[b] as f64 / total as f64;
                        fa.partial_cmp(&fb).unwrap().then(b.cmp(&a))
                    })?;
                counts[c] -= 1;
            }
        }
    }
}

/// `parts − 1` distinct sorted cut points in 1..len, so slicing yields
/// `parts` nonempty batches.
fn distinct_sorted_cuts(len: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // Sample without replacement from {1, .., len−1} via a partial
    // Fisher–Yates over the candidate positions.
    let mut candidates: Vec<usize> = (1..len).collect();
    let k = parts - 1;
    for i in 0..k {
        let j = rng.random_range(i..candidates.len());
        candidates.swap(i, j);
    }
    let mut cuts = candidates[..k].to_vec();
    cuts.sort_unstable();
    cuts
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn toy_idx(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let img = dir.join("imgs");
        let lab = dir.join("labs");
        let mut a = vec![0u8; 784];
        a[0] = 255;
        let mut b = vec![0u8; 784];
        b[783] = 51;
        write_idx_images(&img, &[a, b], 28, 28).unwrap();
        write_idx_labels(&lab, &[3, 8]).unwrap();
        (img, lab)
    }

    #[test]
    fn idx_fixture_loads_with_scaled_pixels() {
        let dir = tempdir().unwrap();
        let (img, lab) = toy_idx(dir.path());
        let ds = Dataset::from_idx(&img, &lab).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 784);
        assert_eq!(ds.features[(0, 0)], 1.0);
        assert_eq!(ds.features[(1, 783)], 0.2);
        assert_eq!(ds.labels, vec![3, 8]);
    }

    #[test]
    fn idx_errors_are_distinct() {
        let dir = tempdir().unwrap();
        let (img, lab) = toy_idx(dir.path());

        let wrong = dir.path().join("wrong");
        std::fs::write(&wrong, 0x0000_0801u32.to_be_bytes()).unwrap();
        assert!(matches!(
            Dataset::from_idx(&wrong, &lab),
            Err(Error::IdxMagic { expected: IDX_IMAGES_MAGIC, .. })
        ));

        let short = dir.path().join("short");
        let full = std::fs::read(&img).unwrap();
        std::fs::write(&short, &full[..full.len() - 10]).unwrap();
        assert!(matches!(Dataset::from_idx(&short, &lab), Err(Error::IdxTruncated { .. })));

        let lab3 = dir.path().join("labs3");
        write_idx_labels(&lab3, &[3, 8, 8]).unwrap();
        assert!(matches!(
            Dataset::from_idx(&img, &lab3),
            Err(Error::IdxCountMismatch { images: 2, labels: 3 })
        ));
    }

    #[test]
    fn binarize_relabels_and_rejects_missing_classes() {
        let features = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let ds = Dataset::new(features, vec![3, 3, 8]).unwrap();
        let bin = ds.binarize(3, 8).unwrap();
        assert_eq!(bin.labels, vec![1, 1, -1]);
        assert_eq!(bin.len(), 3);
        assert!(matches!(ds.binarize(3, 9), Err(Error::MissingClass { class: 9 })));
    }

    #[test]
    fn binarize_drops_other_classes() {
        let features = DMatrix::from_row_slice(4, 2, &[1., 0., 2., 0., 3., 0., 4., 0.]);
        let ds = Dataset::new(features, vec![1, 7, 3, 7]).unwrap();
        let bin = ds.binarize(7, 3).unwrap();
        assert_eq!(bin.len(), 3);
        assert_eq!(bin.labels, vec![1, -1, 1]);
        assert_eq!(bin.features.column(0).as_slice(), &[2.0, 3.0, 4.0]);
    }

    #[test]
    fn normalize_unit_hand_case_and_idempotence() {
        let ds = Dataset::new(DMatrix::from_row_slice(1, 2, &[3.0, 4.0]), vec![1]).unwrap();
        let unit = ds.normalize_unit().unwrap();
        assert!((unit.features[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((unit.features[(0, 1)] - 0.8).abs() < 1e-15);
        let again = unit.normalize_unit().unwrap();
        assert!((again.features[(0, 0)] - unit.features[(0, 0)]).abs() < 1e-15);

        let zero = Dataset::new(DMatrix::zeros(2, 3), vec![1, -1]).unwrap();
        assert!(matches!(zero.normalize_unit(), Err(Error::ZeroNormSample { index: 0 })));
    }

    #[test]
    fn blobs_are_deterministic_and_balanced() {
        let cfg = BlobConfig { samples: 101, dim: 5, separation: 2.0, noise: 0.5, seed: 9 };
        let a = synthetic_blobs(&cfg).unwrap();
        let b = synthetic_blobs(&cfg).unwrap();
        assert_eq!(a.features, b.features);
        let pos = a.labels.iter().filter(|&&y| y == 1).count();
        assert_eq!(pos, 51);
        assert_eq!(a.len() - pos, 50);
    }

    #[test]
    fn balanced_partition_splits_12000_by_16_into_750s() {
        let cfg = BlobConfig { samples: 12_000, dim: 3, separation: 1.0, noise: 1.0, seed: 1 };
        let ds = synthetic_blobs(&cfg).unwrap();
        let part = partition(&ds, 16, PartitionMode::BalancedHomogeneous, 7).unwrap();
        assert_eq!(part.sizes(), vec![750; 16]);
        // Two equal classes: the interleave gives every node exactly 375
        // of each.
        for i in 0..16 {
            let pos = part.node(i).iter().filter(|&&g| ds.labels[g] == 1).count();
            assert_eq!(pos, 375, "node {i} class balance");
        }
    }

    #[test]
    fn balanced_partition_spreads_remainder_over_first_nodes() {
        let cfg = BlobConfig { samples: 10, dim: 2, separation: 1.0, noise: 1.0, seed: 2 };
        let ds = synthetic_blobs(&cfg).unwrap();
        let part = partition(&ds, 3, PartitionMode::BalancedHomogeneous, 7).unwrap();
        assert_eq!(part.sizes(), vec![4, 3, 3]);
    }

    #[test]
    fn unbalanced_partition_isolates_classes_and_covers_everything() {
        let cfg = BlobConfig { samples: 12_000, dim: 2, separation: 1.0, noise: 1.0, seed: 3 };
        let ds = synthetic_blobs(&cfg).unwrap();
        let part = partition(&ds, 1000, PartitionMode::UnbalancedSingleClass, 11).unwrap();
        assert_eq!(part.num_nodes(), 1000);
        assert_eq!(part.total(), 12_000);
        for i in 0..1000 {
            let batch = part.node(i);
            assert!(!batch.is_empty(), "node {i} empty");
            let first = ds.labels[batch[0]];
            assert!(batch.iter().all(|&g| ds.labels[g] == first), "node {i} mixes classes");
        }
        let mut all: Vec<usize> = (0..1000).flat_map(|i| part.node(i).iter().copied()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..12_000).collect::<Vec<_>>());
    }

    #[test]
    fn unbalanced_partition_rejects_infeasible_splits() {
        // More nodes than samples.
        let mut features = DMatrix::zeros(10, 1);
        for s in 0..10 {
            features[(s, 0)] = s as f64;
        }
        let labels = vec![1, 1, 1, 1, 1, -1, -1, -1, -1, -1];
        let ds = Dataset::new(features.clone(), labels).unwrap();
        assert!(matches!(
            partition(&ds, 16, PartitionMode::UnbalancedSingleClass, 5),
            Err(Error::TooFewSamples { samples: 10, nodes: 16 })
        ));

        // More classes than nodes: some class would get no node, leaving
        // its samples unassigned.
        let ds = Dataset::new(features, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]).unwrap();
        assert!(partition(&ds, 3, PartitionMode::UnbalancedSingleClass, 5).is_err());
    }

    #[test]
    fn single_node_partition_is_the_whole_dataset() {
        let cfg = BlobConfig { samples: 9, dim: 2, separation: 1.0, noise: 1.0, seed: 4 };
        let ds = synthetic_blobs(&cfg).unwrap();
        let part = partition(&ds, 1, PartitionMode::BalancedHomogeneous, 7).unwrap();
        assert_eq!(part.num_nodes(), 1);
        let mut got = part.node(0).to_vec();
        got.sort_unstable();
        assert_eq!(got, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn partitions_repeat_exactly_for_a_seed() {
        let cfg = BlobConfig { samples: 200, dim: 2, separation: 1.0, noise: 1.0, seed: 5 };
        let ds = synthetic_blobs(&cfg).unwrap();
        for mode in [PartitionMode::BalancedHomogeneous, PartitionMode::UnbalancedSingleClass] {
            let a = partition(&ds, 7, mode, 42).unwrap();
            let b = partition(&ds, 7, mode, 42).unwrap();
            assert_eq!(a, b);
            let c = partition(&ds, 7, mode, 43).unwrap();
            assert_ne!(a, c, "different seed should move samples in mode {mode}");
        }
    }

    #[test]
    fn partition_csv_lists_every_sample_once() {
        let dir = tempdir().unwrap();
        let cfg = BlobConfig { samples: 20, dim: 2, separation: 1.0, noise: 1.0, seed: 6 };
        let ds = synthetic_blobs(&cfg).unwrap();
        let part = partition(&ds, 4, PartitionMode::BalancedHomogeneous, 1).unwrap();
        let path = dir.path().join("part.csv");
        part.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("node_id,global_index"));
        let mut seen: Vec<usize> = lines
            .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..20).collect::<Vec<_>>());
    }
}
