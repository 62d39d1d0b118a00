//! Symmetric Multiple Negatives Ranking loss and its grouped multi-positive
//! extension, with analytic gradients.
//!
//! Both losses take raw (unnormalized) query and document embeddings. Rows
//! are L2-normalized internally and gradients flow back through the
//! normalization, so the returned gradients are with respect to the raw
//! entries.
//!
//! ```text
//! s_ij = <q_i/|q_i|, d_j/|d_j|> / T
//!
//! L = -1/(2B) Σ_i [ log( Σ_{j∈P(i)} e^{s_ij} / Σ_j e^{s_ij} )
//!                 + log( e^{s_ii}        / Σ_j e^{s_ji} ) ]
//! ```
//!
//! With `P(i) = {i}` this is the plain symmetric loss.

use thiserror::Error;

use crate::ddouble::Dd;

/// Used when no temperature is configured.
pub const DEFAULT_TEMPERATURE: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("row {0} has zero norm")]
    ZeroNormRow(usize),
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("data length {len} does not match {rows}x{dim}")]
    ShapeMismatch { rows: usize, dim: usize, len: usize },
    #[error("non-finite entry at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("queries are {q_rows}x{q_dim} but documents are {d_rows}x{d_dim}")]
    BatchMismatch { q_rows: usize, q_dim: usize, d_rows: usize, d_dim: usize },
    #[error("temperature must be positive and finite, got {0}")]
    BadTemperature(f64),
    #[error("expected {expected} positive groups, got {got}")]
    GroupCount { expected: usize, got: usize },
    #[error("positive group {0} is empty")]
    EmptyGroup(usize),
    #[error("positive group {group} does not contain its own index")]
    MissingSelf { group: usize },
    #[error("positive group {group} has index {index} outside the batch")]
    GroupIndexOutOfRange { group: usize, index: usize },
    #[error("finite-difference step must be in (0, 1e-2], got {0}")]
    BadStep(f64),
    #[error("batch has positive groups; use grouped_mnr_loss")]
    UnexpectedGroups,
    #[error("batch has no positive groups")]
    MissingGroups,
}

/// Row-major matrix of `rows` embeddings of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self, LossError> {
        if rows == 0 || dim == 0 {
            return Err(LossError::EmptyMatrix);
        }
        if data.len() != rows * dim {
            return Err(LossError::ShapeMismatch { rows, dim, len: data.len() });
        }
        if let Some(i) = data.iter().position(|x| !x.is_finite()) {
            return Err(LossError::NonFinite { row: i / dim, col: i % dim });
        }
        Ok(Self { rows, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LossError> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(LossError::ShapeMismatch { rows: rows.len(), dim, len: bad.len() });
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    fn zeros(rows: usize, dim: usize) -> Self {
        Self { rows, dim, data: vec![0.0; rows * dim] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Multiplies row `i` by `factor`.
    pub fn scale_row(&mut self, i: usize, factor: f64) {
        self.row_mut(i).iter_mut().for_each(|x| *x *= factor);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Normalized copy plus the original row norms.
fn normalize_with_norms(m: &EmbeddingMatrix) -> Result<(EmbeddingMatrix, Vec<f64>), LossError> {
    let mut out = m.clone();
    let mut norms = Vec::with_capacity(m.rows);
    for i in 0..m.rows {
        let n = dot(m.row(i), m.row(i)).sqrt();
        if n == 0.0 {
            return Err(LossError::ZeroNormRow(i));
        }
        out.row_mut(i).iter_mut().for_each(|x| *x /= n);
        norms.push(n);
    }
    Ok((out, norms))
}

/// Every row scaled to unit Euclidean norm.
pub fn l2_normalize_rows(m: &EmbeddingMatrix) -> Result<EmbeddingMatrix, LossError> {
    normalize_with_norms(m).map(|(n, _)| n)
}

/// Queries, documents, temperature and optional positive index sets.
/// Group indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBatch {
    queries: EmbeddingMatrix,
    documents: EmbeddingMatrix,
    temperature: f64,
    groups: Option<Vec<Vec<usize>>>,
}

impl LossBatch {
    pub fn new(queries: EmbeddingMatrix, documents: EmbeddingMatrix, temperature: f64) -> Result<Self, LossError> {
        if queries.rows != documents.rows || queries.dim != documents.dim {
            return Err(LossError::BatchMismatch {
                q_rows: queries.rows,
                q_dim: queries.dim,
                d_rows: documents.rows,
                d_dim: documents.dim,
            });
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(LossError::BadTemperature(temperature));
        }
        Ok(Self { queries, documents, temperature, groups: None })
    }

    /// Attaches positive sets; `groups[i]` must contain `i`. Duplicate
    /// indices within a group are ignored.
    pub fn with_groups(mut self, groups: Vec<Vec<usize>>) -> Result<Self, LossError> {
        let b = self.batch_size();
        if groups.len() != b {
            return Err(LossError::GroupCount { expected: b, got: groups.len() });
        }
        let mut cleaned = Vec::with_capacity(b);
        for (i, g) in groups.into_iter().enumerate() {
            if g.is_empty() {
                return Err(LossError::EmptyGroup(i));
            }
            if let Some(&index) = g.iter().find(|&&j| j >= b) {
                return Err(LossError::GroupIndexOutOfRange { group: i, index });
            }
            if !g.contains(&i) {
                return Err(LossError::MissingSelf { group: i });
            }
            let mut g = g;
            g.sort_unstable();
            g.dedup();
            cleaned.push(g);
        }
        self.groups = Some(cleaned);
        Ok(self)
    }

    pub fn batch_size(&self) -> usize {
        self.queries.rows
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn queries(&self) -> &EmbeddingMatrix {
        &self.queries
    }

    pub fn documents(&self) -> &EmbeddingMatrix {
        &self.documents
    }

    pub fn groups(&self) -> Option<&[Vec<usize>]> {
        self.groups.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad_queries: EmbeddingMatrix,
    pub grad_documents: EmbeddingMatrix,
}

/// `s_ij = q̂_i · d̂_j / T`, row-major `B x B`.
pub fn similarity_matrix(batch: &LossBatch) -> Result<Vec<Vec<f64>>, LossError> {
    let q = l2_normalize_rows(&batch.queries)?;
    let d = l2_normalize_rows(&batch.documents)?;
    Ok(similarities(&q, &d, batch.temperature))
}

fn similarities(q: &EmbeddingMatrix, d: &EmbeddingMatrix, t: f64) -> Vec<Vec<f64>> {
    (0..q.rows).map(|i| (0..d.rows).map(|j| dot(q.row(i), d.row(j)) / t).collect()).collect()
}

/// Symmetric in-batch loss with `(q_i, d_i)` as the only positive pairs.
pub fn mnr_loss(batch: &LossBatch) -> Result<LossOutput, LossError> {
    if batch.groups.is_some() {
        return Err(LossError::UnexpectedGroups);
    }
    let singletons: Vec<Vec<usize>> = (0..batch.batch_size()).map(|i| vec![i]).collect();
    loss_with_groups(batch, &singletons)
}

/// Symmetric loss where row `i` treats every document in `P(i)` as positive.
pub fn grouped_mnr_loss(batch: &LossBatch) -> Result<LossOutput, LossError> {
    let groups = batch.groups.as_ref().ok_or(LossError::MissingGroups)?;
    loss_with_groups(batch, groups)
}

/// Dispatches on whether the batch carries groups.
pub fn batch_loss(batch: &LossBatch) -> Result<LossOutput, LossError> {
    match batch.groups {
        Some(_) => grouped_mnr_loss(batch),
        None => mnr_loss(batch),
    }
}

fn loss_with_groups(batch: &LossBatch, groups: &[Vec<usize>]) -> Result<LossOutput, LossError> {
    let b = batch.batch_size();
    let t = batch.temperature;
    let (q_hat, q_norm) = normalize_with_norms(&batch.queries)?;
    let (d_hat, d_norm) = normalize_with_norms(&batch.documents)?;
    let s = similarities(&q_hat, &d_hat, t);

    // dL/ds_ij accumulated from both softmax directions.
    let scale = -1.0 / (2.0 * b as f64);
    let mut g = vec![vec![0.0; b]; b];
    let mut total = 0.0;

    // Each log term is written as -ln(1 + negatives/positives) so that terms
    // close to zero keep full relative precision.
    for (i, row) in s.iter().enumerate() {
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|x| (x - m).exp()).collect();
        let (mut zp, mut zn) = (0.0, 0.0);
        for (j, e) in exps.iter().enumerate() {
            if groups[i].binary_search(&j).is_ok() {
                zp += e;
            } else {
                zn += e;
            }
        }
        let z = zp + zn;
        total -= (zn / zp).ln_1p();
        for j in 0..b {
            let d = if groups[i].binary_search(&j).is_ok() { exps[j] * zn / (zp * z) } else { -exps[j] / z };
            g[i][j] += scale * d;
        }
    }
    for j in 0..b {
        let m = (0..b).map(|k| s[k][j]).fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = (0..b).map(|k| (s[k][j] - m).exp()).collect();
        let zn: f64 = (0..b).filter(|&k| k != j).map(|k| exps[k]).sum();
        let z = exps[j] + zn;
        total -= (zn / exps[j]).ln_1p();
        for k in 0..b {
            let d = if k == j { zn / z } else { -exps[k] / z };
            g[k][j] += scale * d;
        }
    }
    let value = scale * total;

    // Back through s_ij = q̂_i·d̂_j / T, then through row normalization.
    let dim = batch.queries.dim;
    let mut gq_hat = EmbeddingMatrix::zeros(b, dim);
    let mut gd_hat = EmbeddingMatrix::zeros(b, dim);
    for (i, gi) in g.iter().enumerate() {
        for (j, gij) in gi.iter().enumerate() {
            let w = gij / t;
            if w == 0.0 {
                continue;
            }
            for c in 0..dim {
                gq_hat.data[i * dim + c] += w * d_hat.get(j, c);
                gd_hat.data[j * dim + c] += w * q_hat.get(i, c);
            }
        }
    }
    let grad_queries = through_normalization(&gq_hat, &q_hat, &q_norm);
    let grad_documents = through_normalization(&gd_hat, &d_hat, &d_norm);
    Ok(LossOutput { value, grad_queries, grad_documents })
}

/// `dL/dx = (g - x̂ (x̂·g)) / |x|` per row.
fn through_normalization(grad_hat: &EmbeddingMatrix, unit: &EmbeddingMatrix, norms: &[f64]) -> EmbeddingMatrix {
    let mut out = grad_hat.clone();
    for (i, &n) in norms.iter().enumerate() {
        let proj = dot(grad_hat.row(i), unit.row(i));
        for (o, u) in out.row_mut(i).iter_mut().zip(unit.row(i)) {
            *o = (*o - u * proj) / n;
        }
    }
    out
}

/// Largest relative difference between the analytic gradient and a central
/// difference `(L(x+h) - L(x-h)) / 2h` over every entry of both matrices.
/// The denominator is `max(|analytic|, |numeric|, 1e-8)`.
///
/// The perturbed losses are evaluated in double-double arithmetic so that
/// rounding in `L` does not swamp gradient entries near the `1e-8` floor.
pub fn finite_diff_check(batch: &LossBatch, h: f64) -> Result<f64, LossError> {
    if !(h > 0.0 && h <= 1e-2) {
        return Err(LossError::BadStep(h));
    }
    let analytic = batch_loss(batch)?;
    let mut worst: f64 = 0.0;
    for side in [Side::Queries, Side::Documents] {
        let len = side.matrix(batch).data.len();
        let grad = match side {
            Side::Queries => &analytic.grad_queries,
            Side::Documents => &analytic.grad_documents,
        };
        for idx in 0..len {
            let x = side.matrix(batch).data[idx];
            let mut plus = batch.clone();
            side.matrix_mut(&mut plus).data_mut()[idx] = x + h;
            let mut minus = batch.clone();
            side.matrix_mut(&mut minus).data_mut()[idx] = x - h;
            let step = Dd::sum(x + h, -(x - h));
            let numeric = ((extended_loss(&plus)? - extended_loss(&minus)?) / step).to_f64();
            let a = grad.data[idx];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

/// Loss value only, in double-double precision.
fn extended_loss(batch: &LossBatch) -> Result<Dd, LossError> {
    let b = batch.batch_size();
    let singletons: Vec<Vec<usize>>;
    let groups = match &batch.groups {
        Some(g) => g.as_slice(),
        None => {
            singletons = (0..b).map(|i| vec![i]).collect();
            &singletons
        }
    };
    let unit = |m: &EmbeddingMatrix| -> Result<Vec<Vec<Dd>>, LossError> {
        (0..m.rows)
            .map(|i| {
                let sq = m.row(i).iter().fold(Dd::ZERO, |acc, &x| acc + Dd::prod(x, x));
                if sq.hi() == 0.0 {
                    return Err(LossError::ZeroNormRow(i));
                }
                let n = sq.sqrt();
                Ok(m.row(i).iter().map(|&x| Dd::from(x) / n).collect())
            })
            .collect()
    };
    let q = unit(&batch.queries)?;
    let d = unit(&batch.documents)?;
    let t = batch.temperature;
    let s: Vec<Vec<Dd>> = q
        .iter()
        .map(|qi| {
            d.iter()
                .map(|dj| qi.iter().zip(dj).fold(Dd::ZERO, |acc, (x, y)| acc + *x * *y) / t)
                .collect()
        })
        .collect();

    // -log(positives / all) = log1p(negatives / positives)
    let term = |vals: &[Dd], positive: &dyn Fn(usize) -> bool| {
        let m = vals.iter().map(|v| v.hi()).fold(f64::NEG_INFINITY, f64::max);
        let (mut zp, mut zn) = (Dd::ZERO, Dd::ZERO);
        for (j, v) in vals.iter().enumerate() {
            let e = (*v - m).exp();
            if positive(j) {
                zp += e;
            } else {
                zn += e;
            }
        }
        (zn / zp).ln_1p()
    };
    let mut total = Dd::ZERO;
    for i in 0..b {
        total += term(&s[i], &|j| groups[i].binary_search(&j).is_ok());
        let column: Vec<Dd> = (0..b).map(|k| s[k][i]).collect();
        total += term(&column, &|k| k == i);
    }
    Ok(total / (2.0 * b as f64))
}

#[derive(Clone, Copy)]
enum Side {
    Queries,
    Documents,
}

impl Side {
    fn matrix(self, b: &LossBatch) -> &EmbeddingMatrix {
        match self {
            Side::Queries => &b.queries,
            Side::Documents => &b.documents,
        }
    }

    fn matrix_mut(self, b: &mut LossBatch) -> &mut EmbeddingMatrix {
        match self {
            Side::Queries => &mut b.queries,
            Side::Documents => &mut b.documents,
        }
    }
}
