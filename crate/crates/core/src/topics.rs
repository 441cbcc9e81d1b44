//! Hashtag-only topic modeling: collapsed Gibbs LDA, NPMI coherence, and
//! topic-count selection from the coherence curve.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TweetRecord;
use crate::rng::SplitMix64;
use crate::scalar::Real;

pub const MODEL_MAGIC: &str = "HSLDA1";

/// Token ids of one tweet's hashtag list, for tweets passing the
/// minimum-tag filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashtagDocument {
    pub tokens: Vec<usize>,
    pub source: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        let id = self.tokens.len();
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TopicsError {
    #[error("no documents survive the minimum-hashtag filter")]
    EmptyCorpus,
    #[error("degenerate model: K={k} exceeds total token count {tokens}")]
    Degenerate { k: usize, tokens: usize },
    #[error("non-finite sampling weight")]
    Numeric,
    #[error("model file corrupt: {0}")]
    BadModelFile(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for TopicsError {
    fn from(e: std::io::Error) -> Self {
        TopicsError::Io(e.to_string())
    }
}

/// Build one document per tweet with at least `min_tags` hashtags. Tokens
/// with corpus frequency below `min_freq` are dropped before the length
/// test. The default floor of 1 keeps everything.
pub fn build_documents(
    records: &[TweetRecord],
    min_tags: usize,
    min_freq: u64,
) -> Result<(Vec<HashtagDocument>, Vocabulary), TopicsError> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for r in records {
        for t in &r.hashtags {
            *freq.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let mut vocab = Vocabulary::default();
    let mut docs = Vec::new();
    for (source, r) in records.iter().enumerate() {
        let kept: Vec<&String> = r
            .hashtags
            .iter()
            .filter(|t| freq[t.as_str()] >= min_freq)
            .collect();
        if kept.len() < min_tags {
            continue;
        }
        let tokens = kept.iter().map(|t| vocab.intern(t)).collect();
        docs.push(HashtagDocument { tokens, source });
    }
    if docs.is_empty() {
        return Err(TopicsError::EmptyCorpus);
    }
    Ok((docs, vocab))
}

/// Collapsed Gibbs LDA state: count matrices, totals, and per-token topic
/// assignments. The derived distributions are
/// `phi_k(v) = (topic_word[k][v] + beta) / (topic_total[k] + V*beta)` and
/// `theta_d(k) = (doc_topic[d][k] + alpha) / (len_d + K*alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sweeps: u64,
    pub seed: u64,
    pub topic_word: Vec<Vec<u64>>,
    pub doc_topic: Vec<Vec<u64>>,
    pub topic_totals: Vec<u64>,
    pub assignments: Vec<Vec<usize>>,
}

impl LdaModel {
    /// Random uniform initial assignments, seeded.
    pub fn init(
        docs: &[HashtagDocument],
        vocab_size: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
    ) -> Result<(LdaModel, SplitMix64), TopicsError> {
        assert!(k >= 1 && alpha > 0.0 && beta > 0.0);
        let total_tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
        if k > total_tokens {
            return Err(TopicsError::Degenerate {
                k,
                tokens: total_tokens,
            });
        }
        let mut rng = SplitMix64::new(seed);
        let mut model = LdaModel {
            k,
            vocab_size,
            alpha,
            beta,
            sweeps: 0,
            seed,
            topic_word: vec![vec![0; vocab_size]; k],
            doc_topic: vec![vec![0; k]; docs.len()],
            topic_totals: vec![0; k],
            assignments: docs.iter().map(|d| vec![0; d.tokens.len()]).collect(),
        };
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.tokens.iter().enumerate() {
                let z = rng.next_below(k as u64) as usize;
                model.assignments[d][i] = z;
                model.topic_word[z][w] += 1;
                model.doc_topic[d][z] += 1;
                model.topic_totals[z] += 1;
            }
        }
        Ok((model, rng))
    }

    /// One full Gibbs sweep: resample every token's topic from the
    /// collapsed conditional with that token's count removed.
    pub fn sweep(&mut self, docs: &[HashtagDocument], rng: &mut SplitMix64) -> Result<(), TopicsError> {
        let v_beta = self.vocab_size as f64 * self.beta;
        let mut weights = vec![0.0f64; self.k];
        for (d, doc) in docs.iter().enumerate() {
            for (i, &w) in doc.tokens.iter().enumerate() {
                let old = self.assignments[d][i];
                self.topic_word[old][w] -= 1;
                self.doc_topic[d][old] -= 1;
                self.topic_totals[old] -= 1;

                let mut sum = 0.0;
                for (z, weight) in weights.iter_mut().enumerate() {
                    let wt = (self.doc_topic[d][z] as f64 + self.alpha)
                        * (self.topic_word[z][w] as f64 + self.beta)
                        / (self.topic_totals[z] as f64 + v_beta);
                    if !wt.is_finite() {
                        return Err(TopicsError::Numeric);
                    }
                    sum += wt;
                    *weight = sum;
                }
                let u = rng.next_f64() * sum;
                let new = weights.partition_point(|&c| c <= u).min(self.k - 1);

                self.assignments[d][i] = new;
                self.topic_word[new][w] += 1;
                self.doc_topic[d][new] += 1;
                self.topic_totals[new] += 1;
            }
        }
        self.sweeps += 1;
        Ok(())
    }

    /// Topic-word distribution for topic `t`.
    pub fn phi(&self, t: usize) -> Vec<f64> {
        let denom = self.topic_totals[t] as f64 + self.vocab_size as f64 * self.beta;
        self.topic_word[t]
            .iter()
            .map(|&c| (c as f64 + self.beta) / denom)
            .collect()
    }

    /// Document-topic distribution for document `d`.
    pub fn theta(&self, d: usize) -> Vec<f64> {
        let len: u64 = self.doc_topic[d].iter().sum();
        let denom = len as f64 + self.k as f64 * self.alpha;
        self.doc_topic[d]
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect()
    }

    /// Panics if any count invariant is violated.
    pub fn assert_invariants(&self, docs: &[HashtagDocument]) {
        for (d, doc) in docs.iter().enumerate() {
            let row_sum: u64 = self.doc_topic[d].iter().sum();
            assert_eq!(row_sum, doc.tokens.len() as u64, "doc {d} row sum");
        }
        let mut grand = 0u64;
        for t in 0..self.k {
            let word_sum: u64 = self.topic_word[t].iter().sum();
            assert_eq!(word_sum, self.topic_totals[t], "topic {t} total");
            grand += self.topic_totals[t];
        }
        let tokens: u64 = docs.iter().map(|d| d.tokens.len() as u64).sum();
        assert_eq!(grand, tokens, "token conservation");
    }

    pub fn save<W: Write>(&self, mut w: W, vocab: &Vocabulary) -> Result<(), TopicsError> {
        writeln!(
            w,
            "{MODEL_MAGIC} {} {} {} {} {} {}",
            self.k, self.vocab_size, self.alpha, self.beta, self.sweeps, self.seed
        )?;
        let nnz: usize = self
            .topic_word
            .iter()
            .map(|row| row.iter().filter(|&&c| c > 0).count())
            .sum();
        writeln!(w, "nnz {nnz}")?;
        for (t, row) in self.topic_word.iter().enumerate() {
            for (word, &c) in row.iter().enumerate() {
                if c > 0 {
                    writeln!(w, "{t} {word} {c}")?;
                }
            }
        }
        for token in vocab.tokens() {
            writeln!(w, "{token}")?;
        }
        Ok(())
    }

    /// Load the topic-word portion of a saved model. Document-side state is
    /// not persisted; the loaded model answers top-word queries only.
    pub fn load<R: BufRead>(r: R) -> Result<(LdaModel, Vocabulary), TopicsError> {
        let bad = |m: &str| TopicsError::BadModelFile(m.to_string());
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty file"))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 || parts[0] != MODEL_MAGIC {
            return Err(bad("bad header"));
        }
        let k: usize = parts[1].parse().map_err(|_| bad("bad K"))?;
        let vocab_size: usize = parts[2].parse().map_err(|_| bad("bad V"))?;
        let alpha: f64 = parts[3].parse().map_err(|_| bad("bad alpha"))?;
        let beta: f64 = parts[4].parse().map_err(|_| bad("bad beta"))?;
        let sweeps: u64 = parts[5].parse().map_err(|_| bad("bad sweeps"))?;
        let seed: u64 = parts[6].parse().map_err(|_| bad("bad seed"))?;
        let nnz_line = lines.next().ok_or_else(|| bad("missing nnz"))??;
        let nnz: usize = nnz_line
            .strip_prefix("nnz ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad nnz"))?;
        let mut topic_word = vec![vec![0u64; vocab_size]; k];
        let mut topic_totals = vec![0u64; k];
        for _ in 0..nnz {
            let line = lines.next().ok_or_else(|| bad("truncated triples"))??;
            let mut it = line.split_whitespace();
            let t: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad triple"))?;
            let w: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad triple"))?;
            let c: u64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad triple"))?;
            if t >= k || w >= vocab_size {
                return Err(bad("triple out of range"));
            }
            topic_word[t][w] = c;
            topic_totals[t] += c;
        }
        let mut vocab = Vocabulary::default();
        for line in lines {
            let token = line?;
            if !token.is_empty() {
                vocab.intern(&token);
            }
        }
        if vocab.len() != vocab_size {
            return Err(bad("vocabulary size mismatch"));
        }
        Ok((
            LdaModel {
                k,
                vocab_size,
                alpha,
                beta,
                sweeps,
                seed,
                topic_word,
                doc_topic: Vec::new(),
                topic_totals,
                assignments: Vec::new(),
            },
            vocab,
        ))
    }
}

/// Run `sweeps` full Gibbs sweeps from a seeded random initialization and
/// return the final state.
pub fn train_lda(
    docs: &[HashtagDocument],
    vocab_size: usize,
    k: usize,
    alpha: f64,
    beta: f64,
    sweeps: u64,
    seed: u64,
) -> Result<LdaModel, TopicsError> {
    let (mut model, mut rng) = LdaModel::init(docs, vocab_size, k, alpha, beta, seed)?;
    for _ in 0..sweeps {
        model.sweep(docs, &mut rng)?;
    }
    Ok(model)
}

/// The `m` highest-phi words of topic `t`, ties lexicographic.
pub fn topic_top_words(
    model: &LdaModel,
    vocab: &Vocabulary,
    t: usize,
    m: usize,
) -> Vec<(String, f64)> {
    let phi = model.phi(t);
    let mut ranked: Vec<(usize, f64)> = phi.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| vocab.token(a.0).cmp(vocab.token(b.0)))
    });
    ranked
        .into_iter()
        .take(m)
        .map(|(w, p)| (vocab.token(w).to_string(), p))
        .collect()
}

const NPMI_EPS: f64 = 1e-12;

/// NPMI of one word pair under boolean per-document co-occurrence.
/// Pairs that never co-occur score -1.
pub fn npmi<F: Real>(joint: u64, left: u64, right: u64, n_docs: u64) -> F {
    if joint == 0 {
        return -F::one();
    }
    let n = n_docs as f64;
    let p12 = joint as f64 / n;
    let p1 = left as f64 / n;
    let p2 = right as f64 / n;
    let pmi = ((p12 + NPMI_EPS) / (p1 * p2 + NPMI_EPS)).ln();
    let denom = -(p12 + NPMI_EPS).ln();
    if denom.abs() < NPMI_EPS {
        return F::zero();
    }
    F::of_f64(pmi / denom)
}

/// Mean over topics of the mean pairwise NPMI of each topic's top-`m`
/// words. Co-occurrence is boolean per document (the window is the whole
/// document).
pub fn coherence<F: Real>(model: &LdaModel, docs: &[HashtagDocument], vocab: &Vocabulary, m: usize) -> F {
    assert!(m >= 2);
    let n_docs = docs.len() as u64;
    // Document frequency per word of interest, joint per pair.
    let mut topic_words: Vec<Vec<usize>> = Vec::with_capacity(model.k);
    for t in 0..model.k {
        let words: Vec<usize> = topic_top_words(model, vocab, t, m)
            .into_iter()
            .map(|(tok, _)| vocab.id(&tok).unwrap())
            .collect();
        topic_words.push(words);
    }
    let mut interest: Vec<usize> = topic_words.iter().flatten().copied().collect();
    interest.sort_unstable();
    interest.dedup();
    let slot: HashMap<usize, usize> = interest.iter().enumerate().map(|(i, &w)| (w, i)).collect();
    let s = interest.len();
    let mut df = vec![0u64; s];
    let mut joint = vec![0u64; s * s];
    let mut present = Vec::new();
    for doc in docs {
        present.clear();
        present.extend(
            doc.tokens
                .iter()
                .filter_map(|w| slot.get(w).copied())
                .collect::<std::collections::BTreeSet<_>>(),
        );
        for (i, &a) in present.iter().enumerate() {
            df[a] += 1;
            for &b in &present[i + 1..] {
                joint[a * s + b] += 1;
                joint[b * s + a] += 1;
            }
        }
    }
    let mut topic_scores = Vec::with_capacity(model.k);
    for words in &topic_words {
        let mut sum = F::zero();
        let mut pairs = 0usize;
        for (i, &a) in words.iter().enumerate() {
            for &b in &words[i + 1..] {
                if a == b {
                    continue;
                }
                let (sa, sb) = (slot[&a], slot[&b]);
                sum += npmi::<F>(joint[sa * s + sb], df[sa], df[sb], n_docs);
                pairs += 1;
            }
        }
        if pairs > 0 {
            topic_scores.push(sum / F::of_usize(pairs));
        }
    }
    if topic_scores.is_empty() {
        F::zero()
    } else {
        topic_scores.iter().copied().sum::<F>() / F::of_usize(topic_scores.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceCurve {
    /// (K, coherence), K strictly increasing.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub k: usize,
    /// False when no plateau was found and `k` is the argmax fallback.
    pub converged: bool,
}

/// Smallest K at which the coherence curve has settled: every relative
/// step over the next `lookahead` grid points stays below `rel_eps`. Falls
/// back to the argmax K with `converged = false`.
pub fn select_k(curve: &CoherenceCurve, rel_eps: f64, lookahead: usize) -> KSelection {
    let pts = &curve.points;
    assert!(pts.len() >= lookahead + 1, "curve too short");
    for i in 0..pts.len() - lookahead {
        let settled = (i..i + lookahead).all(|j| {
            let (_, c) = pts[j];
            let (_, c_next) = pts[j + 1];
            (c_next - c).abs() / c.abs().max(1e-9) < rel_eps
        });
        if settled {
            return KSelection {
                k: pts[i].0,
                converged: true,
            };
        }
    }
    let best = pts
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
        .unwrap();
    KSelection {
        k: best.0,
        converged: false,
    }
}

#[derive(Debug, Clone)]
pub struct LdaConfig {
    /// None means the 50/K default.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub sweeps: u64,
    pub seed: u64,
    pub coherence_top_m: usize,
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig {
            alpha: None,
            beta: 0.01,
            sweeps: 1000,
            seed: 0,
            coherence_top_m: 10,
        }
    }
}

impl LdaConfig {
    pub fn alpha_for(&self, k: usize) -> f64 {
        self.alpha.unwrap_or(50.0 / k as f64)
    }
}

/// Train one model per K in the grid (independent chains, each with its
/// own derived seed) and score coherence. Chains run in parallel; the
/// curve is identical regardless of thread count.
pub fn sweep_k(
    docs: &[HashtagDocument],
    vocab: &Vocabulary,
    k_grid: &[usize],
    config: &LdaConfig,
    threads: usize,
) -> Result<CoherenceCurve, TopicsError> {
    assert!(!k_grid.is_empty() && k_grid.windows(2).all(|w| w[0] < w[1]));
    let run = |&k: &usize| -> Result<(usize, f64), TopicsError> {
        let seed = SplitMix64::derive(config.seed, k as u64);
        let model = train_lda(
            docs,
            vocab.len(),
            k,
            config.alpha_for(k),
            config.beta,
            config.sweeps,
            seed,
        )?;
        Ok((k, coherence::<f64>(&model, docs, vocab, config.coherence_top_m)))
    };
    let points: Result<Vec<(usize, f64)>, TopicsError> = if threads <= 1 {
        k_grid.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| TopicsError::Io(e.to_string()))?;
        pool.install(|| k_grid.par_iter().map(run).collect())
    };
    Ok(CoherenceCurve { points: points? })
}
