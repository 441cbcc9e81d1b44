//! Skip-gram hashtag embeddings with negative sampling.
//!
//! A tweet's hashtag list is one sentence; the context window is the whole
//! sentence (sentences are at most seven tokens). Training is plain SGD on
//! the SGNS objective with a linearly decaying learning rate, seeded and
//! single-threaded for bit-exact reproducibility.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::scalar::Real;

pub const VECTOR_MAGIC: &[u8; 6] = b"HSVEC1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub initial_lr: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 300,
            negatives: 5,
            epochs: 5,
            initial_lr: 0.025,
            min_count: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("empty vocabulary after the min-count filter")]
    EmptyCorpus,
    #[error("training diverged to a non-finite value")]
    NumericDivergence,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("`{query}` is not in the vocabulary{}", hint_suffix(.hints))]
    Oov { query: String, hints: Vec<String> },
    #[error("vector file corrupt: {0}")]
    BadVectorFile(String),
    #[error("io: {0}")]
    Io(String),
}

fn hint_suffix(hints: &[String]) -> String {
    if hints.is_empty() {
        String::new()
    } else {
        format!("; nearest spellings: {}", hints.join(", "))
    }
}

impl From<std::io::Error> for EmbeddingError {
    fn from(e: std::io::Error) -> Self {
        EmbeddingError::Io(e.to_string())
    }
}

/// Token table ordered by descending corpus frequency (ties lexicographic),
/// with the unigram^0.75 noise distribution used for negative sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVocab {
    pub tokens: Vec<String>,
    pub counts: Vec<u64>,
    /// Cumulative noise distribution; last entry is 1.
    noise_cdf: Vec<f64>,
    index: std::collections::HashMap<String, usize>,
}

impl EmbeddingVocab {
    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn noise_probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.noise_cdf
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    fn sample_noise(&self, rng: &mut SplitMix64) -> usize {
        let u = rng.next_f64();
        self.noise_cdf.partition_point(|&c| c <= u).min(self.len() - 1)
    }
}

/// Keep tokens with frequency >= `min_count`; ids ordered by descending
/// frequency then lexicographic; noise distribution proportional to
/// frequency^0.75.
pub fn build_vocab<S, T>(sentences: &[S], min_count: u64) -> Result<EmbeddingVocab, EmbeddingError>
where
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    let mut freq: std::collections::HashMap<&str, u64> = std::collections::HashMap::new();
    for sent in sentences {
        for tok in sent.as_ref() {
            *freq.entry(tok.as_ref()).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, n)| n >= min_count)
        .collect();
    if entries.is_empty() {
        return Err(EmbeddingError::EmptyCorpus);
    }
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let tokens: Vec<String> = entries.iter().map(|&(t, _)| t.to_string()).collect();
    let counts: Vec<u64> = entries.iter().map(|&(_, n)| n).collect();
    let weights: Vec<f64> = counts.iter().map(|&n| (n as f64).powf(0.75)).collect();
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let noise_cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    let index = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(EmbeddingVocab {
        tokens,
        counts,
        noise_cdf,
        index,
    })
}

/// Trained vectors. Similarity queries use the input vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<F: Real> {
    pub tokens: Vec<String>,
    pub dim: usize,
    pub input_vectors: Vec<Vec<F>>,
    pub output_vectors: Vec<Vec<F>>,
    index: std::collections::HashMap<String, usize>,
}

impl<F: Real> EmbeddingMatrix<F> {
    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn vector(&self, token: &str) -> Option<&[F]> {
        self.id(token).map(|i| self.input_vectors[i].as_slice())
    }

    fn from_parts(tokens: Vec<String>, dim: usize, input: Vec<Vec<F>>, output: Vec<Vec<F>>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        EmbeddingMatrix {
            tokens,
            dim,
            input_vectors: input,
            output_vectors: output,
            index,
        }
    }
}

fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// SGNS loss for one (center, context, negatives) example:
/// `-log sigma(u_ctx . v_c) - sum_n log sigma(-u_n . v_c)`.
pub fn sgns_loss<F: Real>(center: &[F], context: &[F], negatives: &[&[F]]) -> F {
    let mut loss = -sigmoid(dot(center, context)).ln();
    for neg in negatives {
        loss -= sigmoid(-dot(center, neg)).ln();
    }
    loss
}

/// Analytic gradients of [`sgns_loss`] with respect to the center vector,
/// the context output vector, and each negative output vector.
pub fn sgns_gradients<F: Real>(
    center: &[F],
    context: &[F],
    negatives: &[&[F]],
) -> (Vec<F>, Vec<F>, Vec<Vec<F>>) {
    let d = center.len();
    let g_pos = sigmoid(dot(center, context)) - F::one();
    let mut grad_center: Vec<F> = context.iter().map(|&u| g_pos * u).collect();
    let grad_context: Vec<F> = center.iter().map(|&v| g_pos * v).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for neg in negatives {
        let g_neg = sigmoid(dot(center, neg));
        for i in 0..d {
            grad_center[i] += g_neg * neg[i];
        }
        grad_negs.push(center.iter().map(|&v| g_neg * v).collect());
    }
    (grad_center, grad_context, grad_negs)
}

/// Train SGNS over hashtag sentences. Every ordered (center, context) pair
/// within a sentence is a positive example; each draws `negatives` noise
/// words. The learning rate decays linearly from `initial_lr` to
/// `initial_lr / 1e4` over all examples.
pub fn train_skipgram<F: Real, S, T>(
    sentences: &[S],
    config: &EmbeddingConfig,
) -> Result<EmbeddingMatrix<F>, EmbeddingError>
where
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    let vocab = build_vocab(sentences, config.min_count)?;
    train_skipgram_with_vocab(sentences, &vocab, config)
}

pub fn train_skipgram_with_vocab<F: Real, S, T>(
    sentences: &[S],
    vocab: &EmbeddingVocab,
    config: &EmbeddingConfig,
) -> Result<EmbeddingMatrix<F>, EmbeddingError>
where
    S: AsRef<[T]>,
    T: AsRef<str>,
{
    let d = config.dim;
    let v = vocab.len();
    let mut rng = SplitMix64::new(config.seed);

    // Input vectors uniform in [-0.5/d, 0.5/d]; output vectors zero.
    let span = 1.0 / d as f64;
    let mut input: Vec<Vec<F>> = (0..v)
        .map(|_| {
            (0..d)
                .map(|_| F::of_f64((rng.next_f64() - 0.5) * span))
                .collect()
        })
        .collect();
    let mut output: Vec<Vec<F>> = vec![vec![F::zero(); d]; v];

    // Sentences mapped to ids, out-of-vocabulary tokens dropped.
    let id_sentences: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| {
            s.as_ref()
                .iter()
                .filter_map(|t| vocab.id(t.as_ref()))
                .collect()
        })
        .collect();
    let pairs_per_epoch: usize = id_sentences
        .iter()
        .map(|s| if s.len() > 1 { s.len() * (s.len() - 1) } else { 0 })
        .sum();
    let total_examples = (pairs_per_epoch * config.epochs).max(1);

    let lr_start = config.initial_lr;
    let lr_end = config.initial_lr / 1e4;
    let mut example = 0usize;
    let mut grad_center = vec![F::zero(); d];

    for _ in 0..config.epochs {
        for sent in &id_sentences {
            if sent.len() < 2 {
                continue;
            }
            for (i, &center) in sent.iter().enumerate() {
                for (j, &context) in sent.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let progress = example as f64 / total_examples as f64;
                    let lr = F::of_f64(lr_start + (lr_end - lr_start) * progress);
                    example += 1;

                    for g in grad_center.iter_mut() {
                        *g = F::zero();
                    }
                    // Positive example.
                    {
                        let (v_c, u_ctx) = (&input[center], &mut output[context]);
                        let g = sigmoid(dot(v_c, u_ctx)) - F::one();
                        if !g.is_finite() {
                            return Err(EmbeddingError::NumericDivergence);
                        }
                        for k in 0..d {
                            grad_center[k] += g * u_ctx[k];
                            u_ctx[k] -= lr * g * v_c[k];
                        }
                    }
                    // Negative samples; a draw that hits the center word
                    // is skipped.
                    for _ in 0..config.negatives {
                        let noise = vocab.sample_noise(&mut rng);
                        if noise == center {
                            continue;
                        }
                        let (v_c, u_n) = (&input[center], &mut output[noise]);
                        let g = sigmoid(dot(v_c, u_n));
                        for k in 0..d {
                            grad_center[k] += g * u_n[k];
                            u_n[k] -= lr * g * v_c[k];
                        }
                    }
                    for k in 0..d {
                        input[center][k] -= lr * grad_center[k];
                    }
                }
            }
        }
    }
    for row in input.iter().chain(output.iter()) {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(EmbeddingError::NumericDivergence);
        }
    }
    Ok(EmbeddingMatrix::from_parts(
        vocab.tokens.clone(),
        d,
        input,
        output,
    ))
}

/// Cosine similarity; errors on zero-norm input.
pub fn cosine<F: Real>(u: &[F], v: &[F]) -> Result<F, EmbeddingError> {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == F::zero() || nv == F::zero() {
        return Err(EmbeddingError::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// The `k` highest-cosine tokens against the query's input vector,
/// excluding the query itself and `exclude`. Ties break lexicographically.
/// An out-of-vocabulary query errors with nearby spellings as a hint.
pub fn most_similar<F: Real>(
    matrix: &EmbeddingMatrix<F>,
    query: &str,
    k: usize,
    exclude: &std::collections::HashSet<String>,
) -> Result<Vec<(String, F)>, EmbeddingError> {
    assert!(k >= 1);
    let Some(qid) = matrix.id(query) else {
        let mut hints: Vec<String> = matrix
            .tokens
            .iter()
            .filter(|t| edit_distance(t, query) <= 2)
            .cloned()
            .collect();
        hints.sort();
        hints.truncate(5);
        return Err(EmbeddingError::Oov {
            query: query.to_string(),
            hints,
        });
    };
    let qvec = &matrix.input_vectors[qid];
    let mut scored: Vec<(&str, F)> = Vec::with_capacity(matrix.tokens.len());
    for (i, tok) in matrix.tokens.iter().enumerate() {
        if i == qid || exclude.contains(tok) {
            continue;
        }
        let sim = cosine(qvec, &matrix.input_vectors[i])?;
        scored.push((tok.as_str(), sim));
    }
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(b.0)));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(t, s)| (t.to_string(), s))
        .collect())
}

/// Binary persistence: magic, u32 V, u32 d, then per token a length-
/// prefixed UTF-8 string and d little-endian f32 input-vector entries.
pub fn save_vectors<F: Real, W: Write>(
    matrix: &EmbeddingMatrix<F>,
    mut w: W,
) -> Result<(), EmbeddingError> {
    w.write_all(VECTOR_MAGIC)?;
    w.write_all(&(matrix.tokens.len() as u32).to_le_bytes())?;
    w.write_all(&(matrix.dim as u32).to_le_bytes())?;
    for (tok, vec) in matrix.tokens.iter().zip(&matrix.input_vectors) {
        w.write_all(&(tok.len() as u32).to_le_bytes())?;
        w.write_all(tok.as_bytes())?;
        for &x in vec {
            w.write_all(&(x.as_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_vectors<F: Real, R: Read>(mut r: R) -> Result<EmbeddingMatrix<F>, EmbeddingError> {
    let bad = |m: &str| EmbeddingError::BadVectorFile(m.to_string());
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != VECTOR_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let v = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let d = u32::from_le_bytes(u32buf) as usize;
    let mut tokens = Vec::with_capacity(v);
    let mut input = Vec::with_capacity(v);
    for _ in 0..v {
        r.read_exact(&mut u32buf)?;
        let len = u32::from_le_bytes(u32buf) as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        tokens.push(String::from_utf8(name).map_err(|_| bad("token not UTF-8"))?);
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut u32buf)?;
            row.push(F::of_f64(f32::from_le_bytes(u32buf) as f64));
        }
        input.push(row);
    }
    let output = vec![vec![F::zero(); d]; v];
    Ok(EmbeddingMatrix::from_parts(tokens, d, input, output))
}

/// Plain-text export: token followed by d decimal floats per line.
pub fn write_text_vectors<F: Real, W: Write>(
    matrix: &EmbeddingMatrix<F>,
    mut w: W,
) -> Result<(), EmbeddingError> {
    for (tok, vec) in matrix.tokens.iter().zip(&matrix.input_vectors) {
        write!(w, "{tok}")?;
        for &x in vec {
            write!(w, " {}", x.as_f64() as f32)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Parse the plain-text format back into a matrix.
pub fn read_text_vectors<F: Real, R: BufRead>(r: R) -> Result<EmbeddingMatrix<F>, EmbeddingError> {
    let bad = |m: &str| EmbeddingError::BadVectorFile(m.to_string());
    let mut tokens = Vec::new();
    let mut input: Vec<Vec<F>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let tok = it.next().ok_or_else(|| bad("empty line"))?;
        let row: Result<Vec<F>, _> = it
            .map(|s| s.parse::<f64>().map(F::of_f64).map_err(|_| bad("bad float")))
            .collect();
        let row = row?;
        if let Some(first) = input.first() {
            if row.len() != first.len() {
                return Err(bad("ragged rows"));
            }
        }
        tokens.push(tok.to_string());
        input.push(row);
    }
    let d = input.first().map(|r| r.len()).unwrap_or(0);
    let v = tokens.len();
    Ok(EmbeddingMatrix::from_parts(
        tokens,
        d,
        input,
        vec![vec![F::zero(); d]; v],
    ))
}
