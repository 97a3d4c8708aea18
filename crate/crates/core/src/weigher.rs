//! Linear term weigher: hand-crafted per-term features, a linear regression
//! head trained with summed squared error by full-batch gradient descent, and
//! an oracle weigher that replays ground-truth targets.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analyzer::AnalyzerConfig;
use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::targets::{TermTargets, WeightRecord};

/// Number of features produced by [`FeatureExtractor`].
pub const FEATURE_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(values: Vec<f64>) -> Self {
        FeatureVector(values)
    }
}

/// One training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub target: f64,
}

impl Example {
    pub fn new(features: impl Into<FeatureVector>, target: f64) -> Self {
        Example {
            features: features.into(),
            target,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub subsample_fraction: f64,
    pub examples_used: usize,
    pub final_loss: f64,
}

/// `w·f + b` over standardized features. The stored means and standard
/// deviations map raw features into the space the weights were fitted in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<TrainingMeta>,
}

impl LinearModel {
    /// A model with identity standardization.
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        let dim = w.len();
        LinearModel {
            w,
            b,
            feature_means: vec![0.0; dim],
            feature_stds: vec![1.0; dim],
            meta: None,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![0.0; dim], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    fn check_dim(&self, f: &FeatureVector) -> Result<()> {
        if f.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: f.dim(),
            });
        }
        Ok(())
    }

    /// The linear head on already-standardized features. Unclamped.
    pub fn predict(&self, f: &FeatureVector) -> Result<f64> {
        self.check_dim(f)?;
        Ok(dot(&self.w, f.values()) + self.b)
    }

    pub fn standardize(&self, raw: &FeatureVector) -> Result<FeatureVector> {
        self.check_dim(raw)?;
        Ok(FeatureVector(
            raw.values()
                .iter()
                .zip(self.feature_means.iter().zip(&self.feature_stds))
                .map(|(x, (m, s))| (x - m) / s)
                .collect(),
        ))
    }

    /// Standardizes raw features and applies the head.
    pub fn weigh(&self, raw: &FeatureVector) -> Result<f64> {
        self.predict(&self.standardize(raw)?)
    }

    /// Coefficients and intercept expressed over raw features.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let w: Vec<f64> = self
            .w
            .iter()
            .zip(&self.feature_stds)
            .map(|(w, s)| w / s)
            .collect();
        let b = self.b - dot(&w, &self.feature_means);
        (w, b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::from)?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: LinearModel = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display(), 1, e.to_string()))?;
        let dim = model.dim();
        if model.feature_means.len() != dim || model.feature_stds.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: model.feature_means.len().min(model.feature_stds.len()),
            });
        }
        Ok(model)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Summed squared error over the batch.
pub fn mse_loss(model: &LinearModel, batch: &[Example]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut loss = 0.0;
    for ex in batch {
        let residual = ex.target - model.predict(&ex.features)?;
        loss += residual * residual;
    }
    Ok(loss)
}

/// Analytic gradient of [`mse_loss`] with respect to `w` and `b`.
pub fn gradient(model: &LinearModel, batch: &[Example]) -> Result<(Vec<f64>, f64)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut grad_w = vec![0.0; model.dim()];
    let mut grad_b = 0.0;
    for ex in batch {
        let scale = -2.0 * (ex.target - model.predict(&ex.features)?);
        for (g, x) in grad_w.iter_mut().zip(ex.features.values()) {
            *g += scale * x;
        }
        grad_b += scale;
    }
    Ok((grad_w, grad_b))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of examples kept, drawn without replacement. `1.0` keeps all.
    pub subsample_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            seed: 13,
            subsample_fraction: 1.0,
        }
    }
}

/// Indices of the examples kept by subsampling: `round(n * fraction)` of
/// them (at least one), chosen by a seeded shuffle and returned in ascending
/// order.
pub fn subsample_indices(n: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "subsample fraction must be in (0, 1], got {fraction}"
        )));
    }
    if fraction == 1.0 {
        return Ok((0..n).collect());
    }
    let keep = ((n as f64 * fraction).round() as usize).clamp(1.min(n), n);
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = idx.partial_shuffle(&mut rng, keep);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Per-feature mean and population standard deviation. Constant features get
/// a standard deviation of 1 so they standardize to zero.
fn feature_moments(examples: &[&Example], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = examples.len() as f64;
    let mut means = vec![0.0; dim];
    for ex in examples {
        for (m, x) in means.iter_mut().zip(ex.features.values()) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; dim];
    for ex in examples {
        for ((v, x), m) in vars.iter_mut().zip(ex.features.values()).zip(&means) {
            *v += (x - m) * (x - m);
        }
    }
    let stds = vars
        .into_iter()
        .map(|v| {
            let s = (v / n).sqrt();
            if s > 1e-12 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (means, stds)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Loss before the first update followed by the loss after each epoch.
    pub losses: Vec<f64>,
}

pub fn train(examples: &[Example], config: &TrainConfig) -> Result<LinearModel> {
    train_traced(examples, config).map(|o| o.model)
}

/// Full-batch gradient descent on standardized features, starting from
/// `w = 0` and `b = mean(target)`.
pub fn train_traced(examples: &[Example], config: &TrainConfig) -> Result<TrainOutcome> {
    if examples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    let dim = examples[0].features.dim();
    if let Some(bad) = examples.iter().find(|e| e.features.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.features.dim(),
        });
    }
    if let Some(bad) = examples
        .iter()
        .flat_map(|e| e.features.values().iter().chain(std::iter::once(&e.target)))
        .find(|v| !v.is_finite())
    {
        return Err(Error::NonFinite(*bad));
    }

    let kept = subsample_indices(examples.len(), config.subsample_fraction, config.seed)?;
    let used: Vec<&Example> = kept.iter().map(|&i| &examples[i]).collect();
    let (means, stds) = feature_moments(&used, dim);
    let batch: Vec<Example> = used
        .iter()
        .map(|ex| Example {
            features: FeatureVector(
                ex.features
                    .values()
                    .iter()
                    .zip(means.iter().zip(&stds))
                    .map(|(x, (m, s))| (x - m) / s)
                    .collect(),
            ),
            target: ex.target,
        })
        .collect();

    let mean_target = batch.iter().map(|e| e.target).sum::<f64>() / batch.len() as f64;
    let mut model = LinearModel {
        w: vec![0.0; dim],
        b: mean_target,
        feature_means: means,
        feature_stds: stds,
        meta: None,
    };

    let mut losses = Vec::with_capacity(config.epochs + 1);
    losses.push(mse_loss(&model, &batch)?);
    for epoch in 1..=config.epochs {
        let (grad_w, grad_b) = gradient(&model, &batch)?;
        for (w, g) in model.w.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g;
        }
        model.b -= config.learning_rate * grad_b;
        let loss = mse_loss(&model, &batch)?;
        if !loss.is_finite() || model.w.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        losses.push(loss);
    }

    model.meta = Some(TrainingMeta {
        epochs: config.epochs,
        learning_rate: config.learning_rate,
        seed: config.seed,
        subsample_fraction: config.subsample_fraction,
        examples_used: batch.len(),
        final_loss: *losses.last().expect("initial loss recorded"),
    });
    Ok(TrainOutcome { model, losses })
}

/// A text whose terms are weighed: a document (title plus body) or a query.
#[derive(Debug, Clone, Copy)]
pub struct WeighedText<'a> {
    pub owner_id: &'a str,
    pub title: Option<&'a str>,
    pub body: &'a str,
}

impl<'a> From<&'a Document> for WeighedText<'a> {
    fn from(doc: &'a Document) -> Self {
        WeighedText {
            owner_id: &doc.external_id,
            title: doc.title.as_deref(),
            body: &doc.body,
        }
    }
}

/// Computes the per-term feature layout:
///
/// | index | feature |
/// |---|---|
/// | 0 | `ln(1 + tf)` in the owning text |
/// | 1 | `ln((N + 1) / (df + 1))` over the collection |
/// | 2 | first occurrence position, scaled to `[0, 1]` |
/// | 3 | term length / 20, capped at 1 |
/// | 4 | 1 if the term occurs in the title |
/// | 5 | constant 1 |
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    analyzer: AnalyzerConfig,
    doc_freq: HashMap<String, u32>,
    doc_count: u64,
}

impl FeatureExtractor {
    /// Collects document frequencies over `docs`. Stopwords are kept, since
    /// the weigher scores every analyzed term a target may exist for.
    pub fn from_documents(docs: &[Document], analyzer: &AnalyzerConfig) -> Self {
        let analyzer = analyzer.without_stopwords();
        let sets: Vec<HashSet<String>> = docs
            .par_iter()
            .map(|d| analyzer.analyze(&d.text()).into_iter().collect())
            .collect();
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        for set in sets {
            for term in set {
                *doc_freq.entry(term).or_default() += 1;
            }
        }
        FeatureExtractor {
            analyzer,
            doc_freq,
            doc_count: docs.len() as u64,
        }
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// Features for each distinct analyzed term, in first-occurrence order.
    pub fn features(&self, text: WeighedText<'_>) -> Vec<(String, FeatureVector)> {
        let title_terms: HashSet<String> = text
            .title
            .map(|t| self.analyzer.analyze(t).into_iter().collect())
            .unwrap_or_default();
        let full = match text.title {
            Some(title) if !title.is_empty() => format!("{title} {}", text.body),
            _ => text.body.to_string(),
        };
        let terms = self.analyzer.analyze(&full);
        let len = terms.len();

        let mut order: Vec<&str> = Vec::new();
        let mut stats: HashMap<&str, (u32, usize)> = HashMap::new();
        for (pos, term) in terms.iter().enumerate() {
            stats
                .entry(term.as_str())
                .and_modify(|(tf, _)| *tf += 1)
                .or_insert_with(|| {
                    order.push(term.as_str());
                    (1, pos)
                });
        }

        let n = self.doc_count as f64;
        order
            .into_iter()
            .map(|term| {
                let (tf, first) = stats[term];
                let df = self.doc_freq.get(term).copied().unwrap_or(0) as f64;
                let position = if len > 1 {
                    first as f64 / (len - 1) as f64
                } else {
                    0.0
                };
                let values = vec![
                    (1.0 + tf as f64).ln(),
                    ((n + 1.0) / (df + 1.0)).ln(),
                    position,
                    (term.chars().count() as f64 / 20.0).min(1.0),
                    if title_terms.contains(term) { 1.0 } else { 0.0 },
                    1.0,
                ];
                (term.to_string(), FeatureVector(values))
            })
            .collect()
    }
}

/// Pairs every target with the features of its term. Targets whose owner is
/// not among `texts`, or whose term does not occur in the analyzed text, are
/// skipped. Order follows `targets`, then term order within each owner.
pub fn build_examples(
    extractor: &FeatureExtractor,
    texts: &[WeighedText<'_>],
    targets: &[TermTargets],
) -> Vec<Example> {
    let by_owner: HashMap<&str, &WeighedText<'_>> = texts.iter().map(|t| (t.owner_id, t)).collect();
    targets
        .par_iter()
        .map(|tt| {
            let Some(text) = by_owner.get(tt.owner_id.as_str()) else {
                return Vec::new();
            };
            let features: HashMap<String, FeatureVector> =
                extractor.features(**text).into_iter().collect();
            tt.weights
                .iter()
                .filter_map(|(term, &target)| {
                    features.get(term).map(|f| Example::new(f.clone(), target))
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

/// Weighs every analyzed term of every text with a trained model.
pub fn predict_records(
    model: &LinearModel,
    extractor: &FeatureExtractor,
    texts: &[WeighedText<'_>],
) -> Result<Vec<WeightRecord>> {
    texts
        .par_iter()
        .map(|text| {
            let mut record = WeightRecord::new(text.owner_id);
            for (term, raw) in extractor.features(*text) {
                record.weights.insert(term, model.weigh(&raw)?);
            }
            Ok(record)
        })
        .collect()
}

/// Replays ground-truth targets as predicted weights.
pub fn oracle_weigher(targets: impl IntoIterator<Item = TermTargets>) -> Vec<WeightRecord> {
    targets.into_iter().map(TermTargets::into_record).collect()
}
