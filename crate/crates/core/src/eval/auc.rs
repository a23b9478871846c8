use crate::dataset::Label;
use crate::error::{Error, Result};

/// Rank-based (Mann–Whitney) ROC AUC with half credit for tied scores.
///
/// Scores are sorted once; each run of equal scores gets the mean of the
/// ranks it spans. The statistic is kept as twice the U value, an integer,
/// so ties introduce no rounding before the final division.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len(), "one label per score");
    let n_pos = labels.iter().filter(|l| l.is_positive()).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::OneClassOnly);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of doubled 1-based midranks of positive samples.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end; doubled midrank = start + 1 + end.
        let doubled_midrank = (start + 1 + end) as u64;
        let positives = order[start..end].iter().filter(|&&i| labels[i].is_positive()).count() as u64;
        doubled_rank_sum += positives * doubled_midrank;
        start = end;
    }
    let doubled_u = doubled_rank_sum - n_pos * (n_pos + 1);
    Ok(doubled_u as f64 / (2 * n_pos * n_neg) as f64)
}
