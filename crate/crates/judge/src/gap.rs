//! Agreement between judge scores and human ratings.

use crate::JudgeError;

/// Per-dimension mean absolute difference between paired score vectors.
///
/// Both lists hold `(prompt_id, scores)`; they must cover the same prompts,
/// in any order.
pub fn llm_selection_gap(llm: &[(String, [f64; 5])], human: &[(String, [f64; 5])]) -> Result<[f64; 5], JudgeError> {
    if llm.is_empty() {
        return Err(JudgeError::Misaligned("no prompts".into()));
    }
    if llm.len() != human.len() {
        return Err(JudgeError::Misaligned(format!("{} judged vs {} rated prompts", llm.len(), human.len())));
    }
    let mut a: Vec<&(String, [f64; 5])> = llm.iter().collect();
    let mut b: Vec<&(String, [f64; 5])> = human.iter().collect();
    a.sort_by(|x, y| x.0.cmp(&y.0));
    b.sort_by(|x, y| x.0.cmp(&y.0));
    let mut sums = [0.0; 5];
    for (x, y) in a.iter().zip(&b) {
        if x.0 != y.0 {
            return Err(JudgeError::Misaligned(format!("prompt {} has no counterpart {}", x.0, y.0)));
        }
        for k in 0..5 {
            sums[k] += (x.1[k] - y.1[k]).abs();
        }
    }
    Ok(sums.map(|s| s / a.len() as f64))
}
