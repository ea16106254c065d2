use crate::error::{Error, Result};
use crate::model::features::FeatureMatrix;

/// Sparse question-by-answer incidence matrix in compressed sparse row layout.
///
/// Row `i` lists the answers of question `i`. Every answer belongs to exactly
/// one question, so the transpose has exactly one entry per row and is kept as
/// a parent lookup rather than a second CSR structure.
///
/// The same type holds both the raw incidence (all weights 1) and its
/// row-normalized form produced by [`AssociationMatrix::row_normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    n_answers: usize,
    row_ptr: Vec<usize>,
    answers: Vec<usize>,
    weights: Vec<f64>,
    parent: Vec<usize>,
    normalized: bool,
}

impl AssociationMatrix {
    /// Builds the incidence from each answer's question index.
    pub fn from_parents(n_questions: usize, parents: &[usize]) -> Result<Self> {
        let mut counts = vec![0usize; n_questions];
        for (j, &q) in parents.iter().enumerate() {
            if q >= n_questions {
                return Err(Error::dim(format!(
                    "answer {j} points at question {q}, only {n_questions} questions"
                )));
            }
            counts[q] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n_questions + 1);
        row_ptr.push(0);
        for c in &counts {
            row_ptr.push(row_ptr.last().unwrap() + c);
        }
        let mut cursor = row_ptr[..n_questions].to_vec();
        let mut answers = vec![0; parents.len()];
        for (j, &q) in parents.iter().enumerate() {
            answers[cursor[q]] = j;
            cursor[q] += 1;
        }
        Ok(Self {
            n_answers: parents.len(),
            row_ptr,
            weights: vec![1.0; parents.len()],
            answers,
            parent: parents.to_vec(),
            normalized: false,
        })
    }

    /// Builds the incidence from `(question, answer)` pairs. Each answer index
    /// in `0..n_answers` must appear exactly once.
    pub fn from_pairs(
        n_questions: usize,
        n_answers: usize,
        pairs: &[(usize, usize)],
    ) -> Result<Self> {
        let mut parents = vec![usize::MAX; n_answers];
        for &(q, a) in pairs {
            if a >= n_answers {
                return Err(Error::dim(format!("answer index {a} >= {n_answers}")));
            }
            if parents[a] != usize::MAX {
                return Err(Error::invalid(format!(
                    "answer {a} is associated with more than one question"
                )));
            }
            parents[a] = q;
        }
        if let Some(a) = parents.iter().position(|&p| p == usize::MAX) {
            return Err(Error::invalid(format!("answer {a} has no question")));
        }
        Self::from_parents(n_questions, &parents)
    }

    pub fn n_questions(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_answers(&self) -> usize {
        self.n_answers
    }

    pub fn nnz(&self) -> usize {
        self.answers.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Question index owning answer `j`.
    pub fn parent(&self, j: usize) -> usize {
        self.parent[j]
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn answers_of(&self, i: usize) -> &[usize] {
        &self.answers[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row_ptr[i + 1] - self.row_ptr[i]
    }

    /// `(answer, weight)` entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.answers[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Weight of the single entry in column `j`.
    fn column_weight(&self, j: usize) -> f64 {
        if self.normalized {
            1.0 / self.degree(self.parent[j]) as f64
        } else {
            1.0
        }
    }

    /// Row-normalized copy: entry `(i, j)` becomes `1 / degree(i)`.
    ///
    /// Fails with [`Error::EmptyQuestion`] carrying the row index of the first
    /// question without answers.
    pub fn row_normalize(&self) -> Result<Self> {
        let mut out = self.clone();
        for i in 0..self.n_questions() {
            let deg = self.degree(i);
            if deg == 0 {
                return Err(Error::EmptyQuestion { question: i as u64 });
            }
            let w = 1.0 / deg as f64;
            out.weights[self.row_ptr[i]..self.row_ptr[i + 1]].fill(w);
        }
        out.normalized = true;
        Ok(out)
    }

    /// `M v` for a vector over answers.
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.n_answers {
            return Err(Error::dim(format!(
                "vector of length {} against {} answers",
                v.len(),
                self.n_answers
            )));
        }
        Ok((0..self.n_questions())
            .map(|i| self.row(i).map(|(j, w)| w * v[j]).sum())
            .collect())
    }

    /// `M' u` for a vector over questions.
    pub fn t_mul_vec(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.n_questions() {
            return Err(Error::dim(format!(
                "vector of length {} against {} questions",
                u.len(),
                self.n_questions()
            )));
        }
        Ok((0..self.n_answers)
            .map(|j| self.column_weight(j) * u[self.parent[j]])
            .collect())
    }

    /// `M X` for an answer-feature matrix.
    pub fn mul_dense(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.rows() != self.n_answers {
            return Err(Error::dim(format!(
                "{} answer rows against {} answers",
                x.rows(),
                self.n_answers
            )));
        }
        let d = x.cols();
        let mut data = vec![0.0; self.n_questions() * d];
        for i in 0..self.n_questions() {
            let out = &mut data[i * d..(i + 1) * d];
            for (j, w) in self.row(i) {
                for (o, v) in out.iter_mut().zip(x.row(j)) {
                    *o += w * v;
                }
            }
        }
        FeatureMatrix::new(self.n_questions(), x.schema().to_vec(), data)
    }

    /// `M' X` for a question-feature matrix.
    pub fn t_mul_dense(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.rows() != self.n_questions() {
            return Err(Error::dim(format!(
                "{} question rows against {} questions",
                x.rows(),
                self.n_questions()
            )));
        }
        let d = x.cols();
        let mut data = Vec::with_capacity(self.n_answers * d);
        for j in 0..self.n_answers {
            let w = self.column_weight(j);
            data.extend(x.row(self.parent[j]).iter().map(|v| w * v));
        }
        FeatureMatrix::new(self.n_answers, x.schema().to_vec(), data)
    }

    /// Dense copy, row-major `n_questions x n_answers`. Test and debug aid.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n_answers]; self.n_questions()];
        for (i, row) in dense.iter_mut().enumerate() {
            for (j, w) in self.row(i) {
                row[j] = w;
            }
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_answers_get_half_weight() {
        let m = AssociationMatrix::from_parents(2, &[0, 0, 1]).unwrap();
        let n = m.row_normalize().unwrap();
        assert_eq!(n.to_dense()[0], vec![0.5, 0.5, 0.0]);
        assert_eq!(n.to_dense()[1], vec![0.0, 0.0, 1.0]);
        assert!(n.is_normalized());
        assert!(!m.is_normalized());
    }

    #[test]
    fn empty_row_is_reported() {
        let m = AssociationMatrix::from_parents(3, &[0, 2]).unwrap();
        match m.row_normalize() {
            Err(Error::EmptyQuestion { question }) => assert_eq!(question, 1),
            other => panic!("expected empty-question error, got {other:?}"),
        }
    }

    #[test]
    fn pairs_must_cover_each_answer_once() {
        assert!(AssociationMatrix::from_pairs(2, 2, &[(0, 0), (1, 0)]).is_err());
        assert!(AssociationMatrix::from_pairs(2, 2, &[(0, 0)]).is_err());
        let m = AssociationMatrix::from_pairs(2, 2, &[(1, 0), (0, 1)]).unwrap();
        assert_eq!(m.parents(), &[1, 0]);
    }

    #[test]
    fn transpose_copies_parent_value() {
        let m = AssociationMatrix::from_parents(2, &[1, 0, 1]).unwrap();
        assert_eq!(m.t_mul_vec(&[10.0, 20.0]).unwrap(), vec![20.0, 10.0, 20.0]);
        let n = m.row_normalize().unwrap();
        assert_eq!(n.mul_vec(&[1.0, 2.0, 3.0]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(n.t_mul_vec(&[10.0, 20.0]).unwrap(), vec![10.0, 10.0, 10.0]);
    }
}
