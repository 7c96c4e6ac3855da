//! Synthetic two-domain classification datasets.
//!
//! Two generator families (Gaussian clusters, two moons) produce an "old"
//! domain; the "new" domain is the same generator pushed through a shift
//! (rotation + offset + different noise level). Datasets carry stable sample
//! IDs so splits, replay buffers and run logs can refer to samples across the
//! whole experiment.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain a single sample was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Old,
    New,
}

/// Domain composition of a whole dataset. `All` marks a merged dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetDomain {
    Old,
    New,
    All,
}

/// Which split of the experiment a dataset belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    Unsplit,
}

impl fmt::Display for DatasetDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DatasetDomain::Old => "old",
            DatasetDomain::New => "new",
            DatasetDomain::All => "all",
        };
        f.write_str(s)
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SplitTag::Train => "train",
            SplitTag::Val => "val",
            SplitTag::Test => "test",
            SplitTag::Unsplit => "unsplit",
        };
        f.write_str(s)
    }
}

/// One labeled feature vector with an experiment-wide stable ID.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: u64,
    pub features: Vec<f64>,
    pub label: usize,
    pub domain: Domain,
}

/// Base point-cloud generator for a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    GaussianClusters,
    TwoMoons,
}

/// Recipe for one synthetic domain: a generator plus a rigid shift
/// (rotation then offset) and a noise level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainSpec {
    pub generator: Generator,
    /// Mean offset added to every point after rotation.
    #[serde(default = "zero_offset")]
    pub offset: [f64; 2],
    /// Rotation around the generator's center, in radians.
    #[serde(default)]
    pub rotation: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub sigma: f64,
    /// Number of samples to generate.
    pub size: usize,
    pub seed: u64,
}

fn zero_offset() -> [f64; 2] {
    [0.0, 0.0]
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidInput(format!(
                "domain sigma must be finite and > 0, got {}",
                self.sigma
            )));
        }
        if self.size < 10 {
            return Err(Error::InvalidInput(format!(
                "domain size must be >= 10, got {}",
                self.size
            )));
        }
        Ok(())
    }
}

/// An immutable collection of samples with unique IDs.
#[derive(Debug, Clone)]
pub struct Dataset {
    samples: Vec<Sample>,
    domain: DatasetDomain,
    split: SplitTag,
    input_dim: usize,
    id_index: HashMap<u64, usize>,
}

impl Dataset {
    /// Builds a dataset, checking ID uniqueness and feature-length agreement.
    pub fn new(samples: Vec<Sample>, domain: DatasetDomain, split: SplitTag) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("dataset must be nonempty".into()));
        }
        let input_dim = samples[0].features.len();
        let mut id_index = HashMap::with_capacity(samples.len());
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != input_dim {
                return Err(Error::InvalidInput(format!(
                    "sample {} has {} features, expected {}",
                    s.id,
                    s.features.len(),
                    input_dim
                )));
            }
            if id_index.insert(s.id, i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate sample id {}", s.id)));
            }
        }
        Ok(Self {
            samples,
            domain,
            split,
            input_dim,
            id_index,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn domain(&self) -> DatasetDomain {
        self.domain
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn by_id(&self, id: u64) -> Option<&Sample> {
        self.id_index.get(&id).map(|&i| &self.samples[i])
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.samples.iter().map(|s| s.id)
    }

    pub fn contains_id(&self, id: u64) -> bool {
        self.id_index.contains_key(&id)
    }

    /// Sub-dataset holding the given IDs, in the order given.
    pub fn subset(&self, ids: &[u64], split: SplitTag) -> Result<Self> {
        let samples = ids
            .iter()
            .map(|&id| {
                self.by_id(id)
                    .cloned()
                    .ok_or_else(|| Error::InvalidInput(format!("unknown sample id {id}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(samples, self.domain, split)
    }

    /// True when every class in `0..num_classes` occurs at least once.
    pub fn has_all_classes(&self, num_classes: usize) -> bool {
        let mut seen = vec![false; num_classes];
        for s in &self.samples {
            if s.label < num_classes {
                seen[s.label] = true;
            }
        }
        seen.into_iter().all(|b| b)
    }
}

/// Generates one synthetic domain.
///
/// Deterministic per `spec.seed`. Labels are exactly balanced (size/2 vs
/// size - size/2) and the sample order is a seeded shuffle. IDs are
/// `first_id..first_id + size`, assigned after the shuffle so they are stable
/// identifiers, not class markers.
pub fn generate_domain(spec: &DomainSpec, domain: Domain, first_id: u64) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.sigma)
        .map_err(|e| Error::InvalidInput(format!("bad sigma: {e}")))?;

    let n0 = spec.size / 2;
    let mut points: Vec<([f64; 2], usize)> = Vec::with_capacity(spec.size);
    for i in 0..spec.size {
        let label = usize::from(i >= n0);
        // Position along the class structure, deterministic and evenly spaced.
        let class_count = if label == 0 { n0 } else { spec.size - n0 };
        let j = if label == 0 { i } else { i - n0 };
        let t = (j as f64 + 0.5) / class_count as f64;
        let base = match spec.generator {
            Generator::TwoMoons => two_moons_point(t, label),
            Generator::GaussianClusters => cluster_center(label),
        };
        points.push((base, label));
    }

    let (sin, cos) = spec.rotation.sin_cos();
    let mut samples: Vec<Sample> = points
        .into_iter()
        .map(|([x, y], label)| {
            let rx = cos * x - sin * y + spec.offset[0];
            let ry = sin * x + cos * y + spec.offset[1];
            let features = vec![rx + noise.sample(&mut rng), ry + noise.sample(&mut rng)];
            Sample {
                id: 0, // assigned after the shuffle
                features,
                label,
                domain,
            }
        })
        .collect();

    samples.shuffle(&mut rng);
    for (i, s) in samples.iter_mut().enumerate() {
        s.id = first_id + i as u64;
    }

    let dataset_domain = match domain {
        Domain::Old => DatasetDomain::Old,
        Domain::New => DatasetDomain::New,
    };
    let dataset = Dataset::new(samples, dataset_domain, SplitTag::Unsplit)?;
    debug_assert!(dataset.has_all_classes(2));
    Ok(dataset)
}

/// Noiseless two-moons point for arc position `t` in [0, 1], centered so the
/// figure's midpoint sits at the origin (rotations pivot around the data).
fn two_moons_point(t: f64, label: usize) -> [f64; 2] {
    let angle = t * std::f64::consts::PI;
    let (x, y) = if label == 0 {
        (angle.cos(), angle.sin())
    } else {
        (1.0 - angle.cos(), 0.5 - angle.sin())
    };
    [x - 0.5, y - 0.25]
}

/// Class centers for the Gaussian-clusters generator.
fn cluster_center(label: usize) -> [f64; 2] {
    if label == 0 {
        [-1.0, 0.0]
    } else {
        [1.0, 0.0]
    }
}

/// Splits a dataset into train/val/test by seeded shuffle.
///
/// Ratios must be strictly positive and sum to 1 (within 1e-9). Sizes land
/// within one sample of the exact proportions and the three ID sets partition
/// the original.
pub fn split(dataset: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let (rt, rv, rs) = ratios;
    if rt <= 0.0 || rv <= 0.0 || rs <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "split ratios must be strictly positive, got ({rt}, {rv}, {rs})"
        )));
    }
    if (rt + rv + rs - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "split ratios must sum to 1, got {}",
            rt + rv + rs
        )));
    }
    let n = dataset.len();
    let n_train = (n as f64 * rt).round() as usize;
    let n_val = (n as f64 * rv).round() as usize;
    if n_train + n_val >= n || n_train == 0 || n_val == 0 {
        return Err(Error::InvalidInput(format!(
            "dataset of {n} samples is too small for ratios ({rt}, {rv}, {rs})"
        )));
    }

    let mut ids: Vec<u64> = dataset.ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);

    let train = dataset.subset(&ids[..n_train], SplitTag::Train)?;
    let val = dataset.subset(&ids[n_train..n_train + n_val], SplitTag::Val)?;
    let test = dataset.subset(&ids[n_train + n_val..], SplitTag::Test)?;
    Ok((train, val, test))
}

/// Concatenates two datasets into an `All` dataset, preserving per-sample
/// domain tags. IDs must be disjoint.
pub fn merge(a: &Dataset, b: &Dataset) -> Result<Dataset> {
    if a.input_dim() != b.input_dim() {
        return Err(Error::InvalidInput(format!(
            "input_dim mismatch: {} vs {}",
            a.input_dim(),
            b.input_dim()
        )));
    }
    for id in b.ids() {
        if a.contains_id(id) {
            return Err(Error::InvalidInput(format!("id collision on {id}")));
        }
    }
    let mut samples = a.samples().to_vec();
    samples.extend_from_slice(b.samples());
    let split = if a.split() == b.split() { a.split() } else { SplitTag::Unsplit };
    Dataset::new(samples, DatasetDomain::All, split)
}

// --- on-disk format ------------------------------------------------------
//
// One header line:
//   gmir-dataset v1 input_dim=<d> classes=<c> domain=<old|new> split=<tag> count=<n>
// then one record per sample:
//   <id> <label> <f_0> ... <f_{d-1}>
// Floats are written with 17 significant digits, which round-trips f64
// exactly.

impl Dataset {
    pub fn save(&self, path: &Path) -> Result<()> {
        if self.domain == DatasetDomain::All {
            return Err(Error::InvalidInput(
                "merged (all-domain) datasets are in-memory only; save the per-domain files".into(),
            ));
        }
        let classes = 1 + self.samples.iter().map(|s| s.label).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!(
            "gmir-dataset v1 input_dim={} classes={} domain={} split={} count={}\n",
            self.input_dim,
            classes,
            self.domain,
            self.split,
            self.samples.len()
        ));
        for s in &self.samples {
            out.push_str(&format!("{} {}", s.id, s.label));
            for f in &s.features {
                out.push_str(&format!(" {f:.16e}"));
            }
            out.push('\n');
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))??;
        let fields = parse_header(&header, path)?;
        let input_dim: usize = header_field(&fields, "input_dim", path)?;
        let count: usize = header_field(&fields, "count", path)?;
        let domain = match fields.get("domain").map(String::as_str) {
            Some("old") => (DatasetDomain::Old, Domain::Old),
            Some("new") => (DatasetDomain::New, Domain::New),
            other => {
                return Err(Error::Parse(format!(
                    "{}: bad domain tag {other:?}",
                    path.display()
                )))
            }
        };
        let split = match fields.get("split").map(String::as_str) {
            Some("train") => SplitTag::Train,
            Some("val") => SplitTag::Val,
            Some("test") => SplitTag::Test,
            Some("unsplit") => SplitTag::Unsplit,
            other => {
                return Err(Error::Parse(format!(
                    "{}: bad split tag {other:?}",
                    path.display()
                )))
            }
        };

        let mut samples = Vec::with_capacity(count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let id: u64 = parse_field(parts.next(), "id", path)?;
            let label: usize = parse_field(parts.next(), "label", path)?;
            let features: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{}: bad feature: {e}", path.display())))
                })
                .collect::<Result<_>>()?;
            if features.len() != input_dim {
                return Err(Error::Parse(format!(
                    "{}: sample {id} has {} features, header says {input_dim}",
                    path.display(),
                    features.len()
                )));
            }
            samples.push(Sample {
                id,
                features,
                label,
                domain: domain.1,
            });
        }
        if samples.len() != count {
            return Err(Error::Parse(format!(
                "{}: header count {} but {} records",
                path.display(),
                count,
                samples.len()
            )));
        }
        Dataset::new(samples, domain.0, split)
    }
}

fn parse_header(header: &str, path: &Path) -> Result<HashMap<String, String>> {
    let mut parts = header.split_whitespace();
    if parts.next() != Some("gmir-dataset") || parts.next() != Some("v1") {
        return Err(Error::Parse(format!(
            "{}: not a gmir-dataset v1 file",
            path.display()
        )));
    }
    Ok(parts
        .filter_map(|p| p.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn header_field<T: std::str::FromStr>(
    fields: &HashMap<String, String>,
    key: &str,
    path: &Path,
) -> Result<T> {
    fields
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: missing or bad header field {key}", path.display())))
}

fn parse_field<T: std::str::FromStr>(part: Option<&str>, name: &str, path: &Path) -> Result<T> {
    part.and_then(|p| p.parse().ok())
        .ok_or_else(|| Error::Parse(format!("{}: missing or bad {name}", path.display())))
}
