use super::model::RewardModel;
use super::ModelError;
use crate::trajectory::TrajectorySet;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    /// `None` when the labeled samples are all of one class.
    pub roc_auc: Option<f64>,
    pub count: usize,
}

/// Accuracy at threshold 0.5 (a probability of exactly 0.5 predicts
/// correct) and ROC-AUC over the labeled samples of `data`.
pub fn evaluate(model: &RewardModel, data: &TrajectorySet) -> Result<EvalReport, ModelError> {
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for s in data.iter() {
        if let Some(y) = s.label.target() {
            scores.push(model.forward(&s.trajectory)?);
            labels.push(y == 1.0);
        }
    }
    if scores.is_empty() {
        return Err(ModelError::NoLabeledSamples);
    }
    let hits = scores
        .iter()
        .zip(&labels)
        .filter(|(p, y)| (**p >= 0.5) == **y)
        .count();
    Ok(EvalReport {
        accuracy: hits as f64 / scores.len() as f64,
        roc_auc: roc_auc(&scores, &labels).ok(),
        count: scores.len(),
    })
}

/// Mann–Whitney form of the ROC-AUC: the fraction of (positive, negative)
/// pairs where the positive scores higher, ties counting one half.
///
/// Computed from midranks in `O(n log n)`.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, ModelError> {
    if scores.len() != labels.len() {
        return Err(ModelError::LengthMismatch(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ModelError::RocSingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of midranks of the positives, doubled so it stays integral.
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, midrank (i + j + 2) / 2
        let twice_mid = (i + j + 2) as u64;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k]).count() as u64;
        twice_rank_sum += twice_mid * tied_pos;
        i = j + 1;
    }
    let (p, n) = (pos as u64, neg as u64);
    // U = rank_sum - p(p+1)/2, doubled: counts concordant pairs twice and ties once
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok((twice_u as f64 / 2.0) / (p * n) as f64)
}
