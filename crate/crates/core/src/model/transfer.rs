use crate::error::{Error, Result};
use crate::model::association::AssociationMatrix;
use crate::model::features::FeatureMatrix;

/// Column-name prefix for averaged answer features appended to questions.
pub const ANSWER_MEAN_PREFIX: &str = "answer_mean.";
/// Column-name prefix for parent-question features appended to answers.
pub const QUESTION_PREFIX: &str = "question.";

/// Feature transfer across the association.
///
/// Returns `([X_q, M~ X_a], [X_a, M' X_q])`: each question row gains the mean
/// of its answers' rows, each answer row gains its question's row. `m` may be
/// given raw or row-normalized; the raw incidence is used for the answer side.
pub fn transfer_features(
    question_features: &FeatureMatrix,
    answer_features: &FeatureMatrix,
    m: &AssociationMatrix,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if question_features.rows() != m.n_questions() || answer_features.rows() != m.n_answers() {
        return Err(Error::dim(format!(
            "features have {}x{} rows, association is {}x{}",
            question_features.rows(),
            answer_features.rows(),
            m.n_questions(),
            m.n_answers()
        )));
    }
    let normalized;
    let averaging = if m.is_normalized() {
        m
    } else {
        normalized = m.row_normalize()?;
        &normalized
    };
    let incidence = AssociationMatrix::from_parents(m.n_questions(), m.parents())?;
    let answer_means = averaging
        .mul_dense(answer_features)?
        .rename(ANSWER_MEAN_PREFIX);
    let parent_rows = incidence
        .t_mul_dense(question_features)?
        .rename(QUESTION_PREFIX);
    Ok((
        question_features.hstack(&answer_means)?,
        answer_features.hstack(&parent_rows)?,
    ))
}
