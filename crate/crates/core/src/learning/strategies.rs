use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{predict_among, Centroid, Model, StopDecision, StopRule, Strategy, TrainStats, WeightSummary, NUM_CLASSES};
use crate::error::{check_dims, Error, Result};
use crate::evaluation::{evaluate, LabelSequence};
use crate::hypervector::{Hypervector, Sign, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateRule {
    /// Mispredicted samples are added to their correct class only.
    AddOnly,
    /// ... and also subtracted from the class they were mistaken for.
    AddSubtract,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiPassConfig {
    pub update: UpdateRule,
    pub learning_rate: Weight,
    pub stop: StopRule,
}

impl Default for MultiPassConfig {
    fn default() -> Self {
        Self {
            update: UpdateRule::AddSubtract,
            learning_rate: Weight::ONE,
            stop: StopRule::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionMethod {
    Remove,
    Cluster,
}

/// Which multi-centroid sub-classes survive reduction.
///
/// Without `keep_fraction`, a centroid survives when its member weight is at
/// least `max(min_members, min_share * class samples)`. With it, the top
/// `ceil(keep_fraction * count)` centroids of each class survive. The most
/// populated centroid of a class always survives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub min_members: f64,
    pub min_share: f64,
    pub keep_fraction: Option<f64>,
}

impl Default for Reduction {
    fn default() -> Self {
        Self {
            min_members: 2.0,
            min_share: 0.02,
            keep_fraction: None,
        }
    }
}

/// Parameters of every strategy, so that one config drives all of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub learning_rate: Weight,
    pub stop: StopRule,
    pub reduction: Reduction,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            learning_rate: Weight::ONE,
            stop: StopRule::default(),
            reduction: Reduction::default(),
        }
    }
}

impl StrategyParams {
    fn multi_pass(&self, update: UpdateRule) -> MultiPassConfig {
        MultiPassConfig {
            update,
            learning_rate: self.learning_rate,
            stop: self.stop,
        }
    }
}

fn validate(samples: &[Hypervector], labels: &[u8], tie_break: &Hypervector) -> Result<[usize; NUM_CLASSES]> {
    if samples.len() != labels.len() {
        return Err(Error::LabelCountMismatch {
            samples: samples.len(),
            labels: labels.len(),
        });
    }
    let mut per_class = [0usize; NUM_CLASSES];
    for (s, &l) in samples.iter().zip(labels) {
        check_dims(tie_break.dim(), s.dim())?;
        if l as usize >= NUM_CLASSES {
            return Err(Error::InvalidParameter("class labels must be 0 or 1"));
        }
        per_class[l as usize] += 1;
    }
    for (class, &n) in per_class.iter().enumerate() {
        if n == 0 {
            return Err(Error::MissingClass(class as u8));
        }
    }
    Ok(per_class)
}

/// Training score used by the multi-pass strategies when the caller has no
/// better one: F1DEmean of the raw predicted labels against `truth`, treated
/// as one unit-step sequence.
pub fn default_scorer(truth: &[u8]) -> impl Fn(&[u8]) -> f64 + '_ {
    move |pred: &[u8]| {
        let p = LabelSequence::new(pred.to_vec(), 1.0);
        let t = LabelSequence::new(truth.to_vec(), 1.0);
        match (p, t) {
            (Ok(p), Ok(t)) => evaluate(&p, &t).map(|r| r.f1_de_mean).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

/// One centroid per class; every sample added once with unit weight.
pub fn train_single_pass(samples: &[Hypervector], labels: &[u8], tie_break: &Hypervector) -> Result<Model> {
    let class_samples = validate(samples, labels, tie_break)?;
    let mut centroids: Vec<Option<Centroid>> = vec![None, None];
    for (x, &y) in samples.iter().zip(labels) {
        match &mut centroids[y as usize] {
            Some(c) => c.add_deferred(x, Weight::ONE, Sign::Add)?,
            slot => *slot = Some(Centroid::seeded(x, y, Weight::ONE, tie_break)?),
        }
    }
    let mut centroids: Vec<Centroid> = centroids.into_iter().flatten().collect();
    for c in centroids.iter_mut() {
        c.refresh(tie_break)?;
    }
    let mut model = Model::from_parts(Strategy::SinglePass, centroids, tie_break.clone())?;
    model.stats = TrainStats {
        passes: 1,
        selected_pass: 1,
        class_samples,
        centroids_before_reduction: model.centroid_counts(),
        centroids_after_reduction: model.centroid_counts(),
        ..TrainStats::default()
    };
    Ok(model)
}

/// Single pass followed by refinement passes that re-add mispredicted
/// samples (`2C+`) and optionally subtract them from the wrong class
/// (`2C+-`).
pub fn train_multi_pass(
    samples: &[Hypervector],
    labels: &[u8],
    tie_break: &Hypervector,
    config: &MultiPassConfig,
    scorer: &dyn Fn(&[u8]) -> f64,
) -> Result<Model> {
    let mut model = train_single_pass(samples, labels, tie_break)?;
    model.strategy = match config.update {
        UpdateRule::AddOnly => Strategy::MultiPassAdd,
        UpdateRule::AddSubtract => Strategy::MultiPassAddSubtract,
    };
    refine(&mut model, samples, labels, config, scorer)?;
    Ok(model)
}

/// Multi-pass refinement over a fixed centroid set (`MCri` from an `MCr` or
/// `MCc` model). Mispredicted samples go to the most similar centroid of
/// their class and are subtracted from the mistaken one.
pub fn fine_tune_multi_pass(
    model: &Model,
    samples: &[Hypervector],
    labels: &[u8],
    learning_rate: Weight,
    stop: StopRule,
    scorer: &dyn Fn(&[u8]) -> f64,
) -> Result<Model> {
    validate(samples, labels, &model.tie_break)?;
    let config = MultiPassConfig {
        update: UpdateRule::AddSubtract,
        learning_rate,
        stop,
    };
    let mut tuned = model.clone();
    tuned.strategy = Strategy::MultiCentroidRefined;
    tuned.stats.readded_fraction_per_pass.clear();
    tuned.stats.train_score_per_pass.clear();
    // the initial multi-centroid pass counts as the first pass
    refine(&mut tuned, samples, labels, &config, scorer)?;
    Ok(tuned)
}

/// The shared refinement loop. Each pass predicts every sample against the
/// prototypes frozen at the end of the previous pass, applies all updates,
/// and re-binarizes once. The best-scoring pass (earliest on ties) is kept.
fn refine(
    model: &mut Model,
    samples: &[Hypervector],
    labels: &[u8],
    config: &MultiPassConfig,
    scorer: &dyn Fn(&[u8]) -> f64,
) -> Result<()> {
    if config.learning_rate == Weight::ZERO {
        return Err(Error::InvalidParameter("learning rate must be positive"));
    }
    let tie = model.tie_break.clone();
    let n = samples.len();

    let mut predictions = predict_each(&model.centroids, samples)?;
    let mut history = vec![score_of(&predictions, scorer)];
    let mut readded = Vec::new();
    let mut best = (history[0], model.centroids.clone(), 1usize);

    while config.stop.evaluate(&history) == StopDecision::Continue {
        let mut updates = 0usize;
        let mut dirty = vec![false; model.centroids.len()];
        for (i, (x, &y)) in samples.iter().zip(labels).enumerate() {
            let (pred_label, pred_centroid) = predictions[i];
            if pred_label == y {
                continue;
            }
            updates += 1;
            // prototypes stay frozen until the end-of-pass refresh
            let target = closest_of_class(&model.centroids, x, y).ok_or(Error::MissingClass(y))?;
            model.centroids[target].add_deferred(x, config.learning_rate, Sign::Add)?;
            dirty[target] = true;
            if config.update == UpdateRule::AddSubtract {
                model.centroids[pred_centroid].add_deferred(x, config.learning_rate, Sign::Subtract)?;
                dirty[pred_centroid] = true;
            }
        }
        readded.push(updates as f64 / n as f64);
        for (c, d) in model.centroids.iter_mut().zip(dirty) {
            if d {
                c.refresh(&tie)?;
            }
        }
        predictions = predict_each(&model.centroids, samples)?;
        let score = score_of(&predictions, scorer);
        history.push(score);
        if score > best.0 {
            best = (score, model.centroids.clone(), history.len());
        }
        if updates == 0 {
            break;
        }
    }

    model.stats.passes = history.len();
    model.stats.readded_fraction_per_pass = readded;
    model.stats.train_score_per_pass = history;
    model.stats.selected_pass = best.2;
    model.centroids = best.1;
    Ok(())
}

fn closest_of_class(centroids: &[Centroid], x: &Hypervector, class: u8) -> Option<usize> {
    centroids
        .iter()
        .enumerate()
        .filter(|(_, c)| c.label == class)
        .map(|(i, c)| (c.proto.hamming_unchecked(x), i))
        .min()
        .map(|(_, i)| i)
}

fn predict_each(centroids: &[Centroid], samples: &[Hypervector]) -> Result<Vec<(u8, usize)>> {
    samples
        .iter()
        .map(|x| {
            predict_among(centroids, x)
                .map(|p| (p.label, p.centroid))
                .ok_or(Error::EmptyModel)
        })
        .collect()
}

fn score_of(predictions: &[(u8, usize)], scorer: &dyn Fn(&[u8]) -> f64) -> f64 {
    let labels: Vec<u8> = predictions.iter().map(|p| p.0).collect();
    scorer(&labels)
}

/// Single-pass multi-centroid training. A correctly predicted sample joins
/// its most similar centroid; a mispredicted one founds a new centroid of
/// its class.
pub fn train_multi_centroid(samples: &[Hypervector], labels: &[u8], tie_break: &Hypervector) -> Result<Model> {
    let class_samples = validate(samples, labels, tie_break)?;
    let mut centroids: Vec<Centroid> = Vec::new();
    let mut seeded = [false; NUM_CLASSES];
    for (x, &y) in samples.iter().zip(labels) {
        if !seeded[y as usize] {
            centroids.push(Centroid::seeded(x, y, Weight::ONE, tie_break)?);
            seeded[y as usize] = true;
            continue;
        }
        let p = predict_among(&centroids, x).ok_or(Error::EmptyModel)?;
        if p.label == y {
            centroids[p.centroid].update(x, Weight::ONE, Sign::Add, tie_break)?;
        } else {
            centroids.push(Centroid::seeded(x, y, Weight::ONE, tie_break)?);
        }
    }
    let mut model = Model::from_parts(Strategy::MultiCentroid, centroids, tie_break.clone())?;
    model.stats = TrainStats {
        passes: 1,
        selected_pass: 1,
        class_samples,
        centroids_before_reduction: model.centroid_counts(),
        centroids_after_reduction: model.centroid_counts(),
        ..TrainStats::default()
    };
    Ok(model)
}

/// Drops (`MCr`) or merges (`MCc`) sparsely populated sub-classes.
///
/// Merging visits dropped centroids in descending member order and adds each
/// into the surviving same-class centroid whose prototype is most similar;
/// survivors are re-binarized once at the end.
pub fn reduce_centroids(model: &Model, method: ReductionMethod, rule: &Reduction) -> Result<Model> {
    if let Some(kf) = rule.keep_fraction {
        if !(kf > 0.0 && kf <= 1.0) {
            return Err(Error::InvalidParameter("keep_fraction must be in (0, 1]"));
        }
    }
    if model.centroids.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut keep = vec![false; model.centroids.len()];
    let mut dropped: Vec<usize> = Vec::new();
    for class in 0..NUM_CLASSES as u8 {
        let mut ranked: Vec<usize> = (0..model.centroids.len())
            .filter(|&i| model.centroids[i].label == class)
            .collect();
        if ranked.is_empty() {
            continue;
        }
        ranked.sort_by_key(|&i| core::cmp::Reverse(model.centroids[i].n_members));
        let survivors = match rule.keep_fraction {
            Some(kf) => libm::ceil(kf * ranked.len() as f64) as usize,
            None => {
                let total: u64 = ranked.iter().map(|&i| model.centroids[i].n_members).sum();
                let threshold = (rule.min_members * Weight::SCALE as f64).max(rule.min_share * total as f64);
                ranked
                    .iter()
                    .take_while(|&&i| model.centroids[i].n_members as f64 >= threshold)
                    .count()
            }
        }
        .max(1);
        for (rank, &i) in ranked.iter().enumerate() {
            if rank < survivors {
                keep[i] = true;
            } else {
                dropped.push(i);
            }
        }
    }

    let mut centroids: Vec<Centroid> = model.centroids.clone();
    if method == ReductionMethod::Cluster {
        dropped.sort_by_key(|&i| (core::cmp::Reverse(model.centroids[i].n_members), i));
        let mut touched = vec![false; centroids.len()];
        for &d in &dropped {
            let source = &model.centroids[d];
            let target = (0..centroids.len())
                .filter(|&j| keep[j] && centroids[j].label == source.label)
                .min_by_key(|&j| (model.centroids[j].proto.hamming_unchecked(&source.proto), j))
                .expect("every class keeps at least one centroid");
            centroids[target].absorb(source)?;
            touched[target] = true;
        }
        for (c, t) in centroids.iter_mut().zip(touched) {
            if t {
                c.refresh(&model.tie_break)?;
            }
        }
    }
    let centroids: Vec<Centroid> = centroids
        .into_iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(c, _)| c)
        .collect();

    let mut reduced = model.clone();
    reduced.centroids = centroids;
    reduced.strategy = match method {
        ReductionMethod::Remove => Strategy::MultiCentroidRemoved,
        ReductionMethod::Cluster => Strategy::MultiCentroidClustered,
    };
    reduced.stats.centroids_after_reduction = reduced.centroid_counts();
    Ok(reduced)
}

/// Weighted single pass. Each sample is added to its class with weight
/// `1 - similarity(sample, class prototype)` and the prototype is
/// re-binarized immediately. With [`UpdateRule::AddSubtract`], a sample the
/// current model mispredicts is also subtracted, with the same weight, from
/// the mistaken centroid.
pub fn train_online(
    samples: &[Hypervector],
    labels: &[u8],
    tie_break: &Hypervector,
    update: UpdateRule,
) -> Result<Model> {
    let class_samples = validate(samples, labels, tie_break)?;
    let dim = tie_break.dim() as u64;
    let mut slots: [Option<usize>; NUM_CLASSES] = [None; NUM_CLASSES];
    let mut centroids: Vec<Centroid> = Vec::with_capacity(NUM_CLASSES);
    let mut weights: [WeightSummary; NUM_CLASSES] = Default::default();

    for (x, &y) in samples.iter().zip(labels) {
        let Some(own) = slots[y as usize] else {
            slots[y as usize] = Some(centroids.len());
            centroids.push(Centroid::seeded(x, y, Weight::ONE, tie_break)?);
            continue;
        };
        let predicted = predict_among(&centroids, x).ok_or(Error::EmptyModel)?;
        let distance = centroids[own].proto.hamming_unchecked(x) as u64;
        let w = Weight::from_ratio(distance, dim)?;
        weights[y as usize].record(w);
        centroids[own].update(x, w, Sign::Add, tie_break)?;
        if update == UpdateRule::AddSubtract && predicted.label != y {
            centroids[predicted.centroid].update(x, w, Sign::Subtract, tie_break)?;
        }
    }

    let strategy = match update {
        UpdateRule::AddOnly => Strategy::OnlineAdd,
        UpdateRule::AddSubtract => Strategy::OnlineAddSubtract,
    };
    let mut model = Model::from_parts(strategy, centroids, tie_break.clone())?;
    model.stats = TrainStats {
        passes: 1,
        selected_pass: 1,
        class_samples,
        centroids_before_reduction: model.centroid_counts(),
        centroids_after_reduction: model.centroid_counts(),
        weights: Some(weights),
        ..TrainStats::default()
    };
    Ok(model)
}

/// Trains `strategy` end to end (e.g. `MCri` runs MC, removal, then
/// fine-tuning).
pub fn train(
    strategy: Strategy,
    samples: &[Hypervector],
    labels: &[u8],
    tie_break: &Hypervector,
    params: &StrategyParams,
    scorer: &dyn Fn(&[u8]) -> f64,
) -> Result<Model> {
    match strategy {
        Strategy::SinglePass => train_single_pass(samples, labels, tie_break),
        Strategy::MultiPassAdd => {
            train_multi_pass(samples, labels, tie_break, &params.multi_pass(UpdateRule::AddOnly), scorer)
        }
        Strategy::MultiPassAddSubtract => {
            train_multi_pass(samples, labels, tie_break, &params.multi_pass(UpdateRule::AddSubtract), scorer)
        }
        Strategy::MultiCentroid => train_multi_centroid(samples, labels, tie_break),
        Strategy::MultiCentroidRemoved => {
            let mc = train_multi_centroid(samples, labels, tie_break)?;
            reduce_centroids(&mc, ReductionMethod::Remove, &params.reduction)
        }
        Strategy::MultiCentroidClustered => {
            let mc = train_multi_centroid(samples, labels, tie_break)?;
            reduce_centroids(&mc, ReductionMethod::Cluster, &params.reduction)
        }
        Strategy::MultiCentroidRefined => {
            let mc = train_multi_centroid(samples, labels, tie_break)?;
            let reduced = reduce_centroids(&mc, ReductionMethod::Remove, &params.reduction)?;
            fine_tune_multi_pass(&reduced, samples, labels, params.learning_rate, params.stop, scorer)
        }
        Strategy::OnlineAdd => train_online(samples, labels, tie_break, UpdateRule::AddOnly),
        Strategy::OnlineAddSubtract => train_online(samples, labels, tie_break, UpdateRule::AddSubtract),
    }
}
