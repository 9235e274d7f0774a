//! The two-level convolutional/recurrent attention classifier.
//!
//! A document is a `[S × T]` grid of token indices. Each sentence row is
//! embedded and run through the word-level [`Encoder`]; the resulting
//! sentence vectors form a `[S × D]` sequence for the sentence-level encoder,
//! whose output goes through dropout and a softmax layer.

mod checkpoint;
mod encoder;
mod report;

pub use checkpoint::{from_bytes, load, save, to_bytes, CheckpointError, FORMAT_VERSION, MAGIC};
pub use encoder::{Encoder, EncoderCache, EncoderDims, EncoderShapes};
pub use report::{parameter_report, ParameterReport, ReportRow, BIGRU_NOTE};

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::Hasher;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{
    dropout, dropout_backward, prefixed, Activation, Dense, DropoutMask, ParamKind, Parameters,
};
use crate::rng::Rng;
use crate::tensor::{argmax, Float, Tensor};

/// Class names in index order.
pub const LABELS: [&str; 3] = ["negative", "neutral", "positive"];

pub const PAD_INDEX: u32 = 0;
pub const OOV_INDEX: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    pub max_sentences: usize,
    pub max_tokens: usize,
    pub embedding_dim: usize,
    pub filters: usize,
    pub kernel_sizes: Vec<usize>,
    pub pool_size: usize,
    pub hidden: usize,
    pub attention_dim: usize,
    pub classes: usize,
    pub dropout: Float,
    pub dense_activation: Activation,
    pub freeze_embedding: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            max_sentences: 15,
            max_tokens: 200,
            embedding_dim: 100,
            filters: 128,
            kernel_sizes: vec![3, 4, 5],
            pool_size: 3,
            hidden: 100,
            attention_dim: 100,
            classes: 3,
            dropout: 0.5,
            dense_activation: Activation::Relu,
            freeze_embedding: false,
        }
    }
}

impl HyperParams {
    /// A model small enough to gradient-check end to end. Kernel and pool
    /// sizes shrink with the grid so the sentence level keeps two attention
    /// steps.
    pub fn tiny() -> Self {
        HyperParams {
            max_sentences: 6,
            max_tokens: 8,
            embedding_dim: 4,
            filters: 4,
            kernel_sizes: vec![2, 3],
            pool_size: 2,
            hidden: 3,
            attention_dim: 3,
            classes: 3,
            dropout: 0.5,
            dense_activation: Activation::Relu,
            freeze_embedding: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("max_sentences", self.max_sentences),
            ("max_tokens", self.max_tokens),
            ("embedding_dim", self.embedding_dim),
            ("filters", self.filters),
            ("pool_size", self.pool_size),
            ("hidden", self.hidden),
            ("attention_dim", self.attention_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        if self.kernel_sizes.is_empty() || self.kernel_sizes.contains(&0) {
            return Err(Error::invalid(
                "kernel sizes must be a non-empty list of positive sizes",
            ));
        }
        if self.classes < 2 {
            return Err(Error::invalid("at least two classes are required"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        if self.dense_activation == Activation::Softmax {
            return Err(Error::invalid(
                "time-distributed dense activation must be relu or linear",
            ));
        }
        Ok(())
    }

    fn dims(&self, input: usize) -> EncoderDims {
        EncoderDims {
            input,
            filters: self.filters,
            hidden: self.hidden,
            attention: self.attention_dim,
            pool_size: self.pool_size,
            activation: self.dense_activation,
        }
    }

    pub fn doc_len(&self) -> usize {
        self.max_sentences * self.max_tokens
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub hp: HyperParams,
    pub embedding: Tensor,
    pub word: Encoder,
    pub sentence: Encoder,
    pub output: Dense,
}

/// Attention weights and prediction for one document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionTrace {
    /// Token strings per sentence, filled in by callers that know them.
    pub tokens: Vec<Vec<String>>,
    /// Word-level weights per sentence, one per encoded position.
    pub word_weights: Vec<Vec<Float>>,
    pub sentence_weights: Vec<Float>,
    pub probabilities: Vec<Float>,
    pub predicted: usize,
}

/// Forward state of one unique sentence row.
#[derive(Clone, Debug)]
struct SentencePass {
    tokens: Vec<u32>,
    input: Tensor,
    vector: Tensor,
    weights: Vec<Float>,
    cache: EncoderCache,
}

#[derive(Clone, Debug)]
struct DocPass {
    sentence_ids: Vec<usize>,
    input: Tensor,
    weights: Vec<Float>,
    cache: EncoderCache,
    mask: Option<DropoutMask>,
    dropped: Tensor,
    probs: Tensor,
}

/// Forward pass over a batch. Identical sentence rows (all-pad rows in
/// particular) are encoded once and share their gradient in backward.
#[derive(Clone, Debug)]
pub struct BatchForward {
    sentences: Vec<SentencePass>,
    docs: Vec<DocPass>,
}

impl BatchForward {
    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn probs(&self, doc: usize) -> &Tensor {
        &self.docs[doc].probs
    }

    pub fn unique_sentences(&self) -> usize {
        self.sentences.len()
    }

    /// Fingerprint of every ReLU sign and max-pool winner in the pass. Two
    /// passes with equal fingerprints lie on the same smooth piece.
    pub fn activation_pattern(&self, model: &Model) -> u64 {
        let mut state = DefaultHasher::new();
        for s in &self.sentences {
            model.word.activation_pattern(&s.cache, &mut state);
        }
        for d in &self.docs {
            model.sentence.activation_pattern(&d.cache, &mut state);
        }
        state.finish()
    }

    pub fn trace(&self, doc: usize) -> AttentionTrace {
        let d = &self.docs[doc];
        AttentionTrace {
            tokens: Vec::new(),
            word_weights: d
                .sentence_ids
                .iter()
                .map(|&id| self.sentences[id].weights.clone())
                .collect(),
            sentence_weights: d.weights.clone(),
            probabilities: d.probs.data().to_vec(),
            predicted: argmax(d.probs.data()),
        }
    }
}

/// Output shapes along a forward pass, in layer order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeTrace {
    pub word_input: Vec<usize>,
    pub embedding: Vec<usize>,
    pub word: EncoderShapes,
    pub doc_input: Vec<usize>,
    pub sentence_vectors: Vec<usize>,
    pub sentence: EncoderShapes,
    pub dropout: Vec<usize>,
    pub output: Vec<usize>,
}

impl Model {
    pub fn new(hp: HyperParams, vocab_size: usize, rng: &mut Rng) -> Result<Self> {
        hp.validate()?;
        if vocab_size < 2 {
            return Err(Error::invalid(
                "vocabulary needs at least the pad and OOV entries",
            ));
        }
        let n = vocab_size * hp.embedding_dim;
        let mut embedding = Tensor::new(
            vec![vocab_size, hp.embedding_dim],
            (0..n).map(|_| rng.uniform(-0.05, 0.05)).collect(),
        )?;
        embedding.row_mut(PAD_INDEX as usize).fill(0.0);
        let word = Encoder::new(&hp.kernel_sizes, &hp.dims(hp.embedding_dim), rng)?;
        let sentence = Encoder::new(&hp.kernel_sizes, &hp.dims(hp.attention_dim), rng)?;
        word.attention_steps(hp.max_tokens)?;
        sentence.attention_steps(hp.max_sentences)?;
        let output = Dense::new(hp.attention_dim, hp.classes, Activation::Softmax, rng)?;
        Ok(Model {
            hp,
            embedding,
            word,
            sentence,
            output,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.rows()
    }

    /// Same-shaped model with every parameter zero, used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        Model {
            hp: self.hp.clone(),
            embedding: self.embedding.zeros_like(),
            word: self.word.zeros_like(),
            sentence: self.sentence.zeros_like(),
            output: self.output.zeros_like(),
        }
    }

    /// Replaces the embedding matrix, e.g. with pretrained vectors. Row 0 is zeroed.
    pub fn set_embedding(&mut self, mut table: Tensor) -> Result<()> {
        if table.shape() != self.embedding.shape() {
            return Err(Error::shape(format!(
                "embedding table {:?} does not match {:?}",
                table.shape(),
                self.embedding.shape()
            )));
        }
        table.row_mut(PAD_INDEX as usize).fill(0.0);
        self.embedding = table;
        Ok(())
    }

    fn embed(&self, tokens: &[u32]) -> Result<Tensor> {
        let dim = self.hp.embedding_dim;
        let vocab = self.vocab_size();
        let mut out = Tensor::zeros(&[tokens.len(), dim]);
        for (i, &tok) in tokens.iter().enumerate() {
            if tok as usize >= vocab {
                return Err(Error::TokenOutOfRange {
                    index: tok,
                    vocab_size: vocab,
                });
            }
            out.row_mut(i)
                .copy_from_slice(self.embedding.row(tok as usize));
        }
        Ok(out)
    }

    /// Spreads word-level attention back onto the first `tokens` positions of
    /// a sentence row. Each timestep's weight is split evenly across the
    /// windows it merges, and each window's share evenly across its tokens.
    /// The result sums to the attention mass that lands on those positions.
    pub fn token_saliency(&self, word_weights: &[Float], tokens: usize) -> Result<Vec<Float>> {
        spread(&self.word, self.hp.max_tokens, word_weights, tokens)
    }

    /// The same redistribution for sentence-level attention over the first
    /// `sentences` rows of a document.
    pub fn sentence_saliency(
        &self,
        sentence_weights: &[Float],
        sentences: usize,
    ) -> Result<Vec<Float>> {
        spread(
            &self.sentence,
            self.hp.max_sentences,
            sentence_weights,
            sentences,
        )
    }

    /// Encodes one `[T]` token row into a sentence vector and its word weights.
    pub fn encode_sentence(&self, tokens: &[u32]) -> Result<(Tensor, Vec<Float>)> {
        if tokens.len() != self.hp.max_tokens {
            return Err(Error::shape(format!(
                "sentence must have {} tokens, got {}",
                self.hp.max_tokens,
                tokens.len()
            )));
        }
        let x = self.embed(tokens)?;
        let (vector, weights, _) = self.word.forward(&x)?;
        Ok((vector, weights))
    }

    /// Runs a batch of `[S·T]` documents. Dropout masks, one per document in
    /// order, are drawn from `rng` only when `training`.
    pub fn forward_batch(
        &self,
        docs: &[&[u32]],
        training: bool,
        rng: &mut Rng,
    ) -> Result<BatchForward> {
        let (s_len, t_len) = (self.hp.max_sentences, self.hp.max_tokens);
        let mut index: HashMap<&[u32], usize> = HashMap::new();
        let mut sentences: Vec<SentencePass> = Vec::new();
        let mut doc_ids = Vec::with_capacity(docs.len());
        for doc in docs {
            if doc.len() != s_len * t_len {
                return Err(Error::shape(format!(
                    "document must be [{s_len} × {t_len}], got {} tokens",
                    doc.len()
                )));
            }
            let mut ids = Vec::with_capacity(s_len);
            for row in doc.chunks(t_len) {
                let id = match index.get(row) {
                    Some(&id) => id,
                    None => {
                        let input = self.embed(row)?;
                        let (vector, weights, cache) = self.word.forward(&input)?;
                        sentences.push(SentencePass {
                            tokens: row.to_vec(),
                            input,
                            vector,
                            weights,
                            cache,
                        });
                        index.insert(row, sentences.len() - 1);
                        sentences.len() - 1
                    }
                };
                ids.push(id);
            }
            doc_ids.push(ids);
        }

        let d = self.hp.attention_dim;
        let mut passes = Vec::with_capacity(docs.len());
        for sentence_ids in doc_ids {
            let mut input = Tensor::zeros(&[s_len, d]);
            for (row, &id) in sentence_ids.iter().enumerate() {
                input
                    .row_mut(row)
                    .copy_from_slice(sentences[id].vector.data());
            }
            let (vector, weights, cache) = self.sentence.forward(&input)?;
            let (dropped, mask) = dropout(&vector, self.hp.dropout, training, rng)?;
            let probs = self.output.forward(&dropped)?;
            passes.push(DocPass {
                sentence_ids,
                input,
                weights,
                cache,
                mask,
                dropped,
                probs,
            });
        }
        Ok(BatchForward {
            sentences,
            docs: passes,
        })
    }

    /// Accumulates into `grads` the gradient of `Σ_i dprobs[i] · probs_i`.
    pub fn backward_batch(
        &self,
        pass: &BatchForward,
        dprobs: &[Tensor],
        grads: &mut Model,
    ) -> Result<()> {
        if dprobs.len() != pass.docs.len() {
            return Err(Error::shape(format!(
                "{} output gradients for {} documents",
                dprobs.len(),
                pass.docs.len()
            )));
        }
        let d = self.hp.attention_dim;
        let mut dvectors = vec![Tensor::zeros(&[d]); pass.sentences.len()];
        for (doc, dp) in pass.docs.iter().zip(dprobs) {
            let d_dropped = self
                .output
                .backward(&doc.dropped, &doc.probs, dp, &mut grads.output);
            let d_vec = dropout_backward(doc.mask.as_ref(), &d_dropped);
            let d_input =
                self.sentence
                    .backward(&doc.input, &doc.cache, &d_vec, &mut grads.sentence);
            for (row, &id) in doc.sentence_ids.iter().enumerate() {
                for (g, &v) in dvectors[id].data_mut().iter_mut().zip(d_input.row(row)) {
                    *g += v;
                }
            }
        }
        for (sentence, dvec) in pass.sentences.iter().zip(&dvectors) {
            let d_embed =
                self.word
                    .backward(&sentence.input, &sentence.cache, dvec, &mut grads.word);
            if self.hp.freeze_embedding {
                continue;
            }
            for (pos, &tok) in sentence.tokens.iter().enumerate() {
                if tok == PAD_INDEX {
                    continue;
                }
                for (g, &v) in grads
                    .embedding
                    .row_mut(tok as usize)
                    .iter_mut()
                    .zip(d_embed.row(pos))
                {
                    *g += v;
                }
            }
        }
        Ok(())
    }

    /// Class probabilities and attention trace for one `[S·T]` document.
    pub fn forward(
        &self,
        doc: &[u32],
        training: bool,
        rng: &mut Rng,
    ) -> Result<(Tensor, AttentionTrace)> {
        let pass = self.forward_batch(&[doc], training, rng)?;
        Ok((pass.probs(0).clone(), pass.trace(0)))
    }

    /// Inference-mode argmax; ties go to the lowest class index.
    pub fn predict(&self, doc: &[u32]) -> Result<usize> {
        let (probs, _) = self.forward(doc, false, &mut Rng::new(0))?;
        Ok(argmax(probs.data()))
    }

    /// Runs an all-pad document and records each stage's output shape.
    pub fn shape_trace(&self) -> Result<ShapeTrace> {
        let (s_len, t_len) = (self.hp.max_sentences, self.hp.max_tokens);
        let doc = vec![PAD_INDEX; s_len * t_len];
        let pass = self.forward_batch(&[&doc], false, &mut Rng::new(0))?;
        let sentence = &pass.sentences[0];
        let d = &pass.docs[0];
        Ok(ShapeTrace {
            word_input: vec![t_len],
            embedding: sentence.input.shape().to_vec(),
            word: Encoder::shapes(&sentence.cache),
            doc_input: vec![s_len, t_len],
            sentence_vectors: d.input.shape().to_vec(),
            sentence: Encoder::shapes(&d.cache),
            dropout: d.dropped.shape().to_vec(),
            output: d.probs.shape().to_vec(),
        })
    }
}

impl Parameters for Model {
    fn params(&self) -> Vec<(String, ParamKind, &Tensor)> {
        let mut v = vec![(
            "embedding".to_string(),
            ParamKind::Embedding,
            &self.embedding,
        )];
        v.extend(prefixed("word", self.word.params()));
        v.extend(prefixed("sentence", self.sentence.params()));
        v.extend(prefixed("output", self.output.params()));
        v
    }

    fn params_mut(&mut self) -> Vec<(String, ParamKind, &mut Tensor)> {
        let mut v = vec![(
            "embedding".to_string(),
            ParamKind::Embedding,
            &mut self.embedding,
        )];
        v.extend(prefixed("word", self.word.params_mut()));
        v.extend(prefixed("sentence", self.sentence.params_mut()));
        v.extend(prefixed("output", self.output.params_mut()));
        v
    }
}

fn spread(encoder: &Encoder, len: usize, weights: &[Float], keep: usize) -> Result<Vec<Float>> {
    let fields = encoder.receptive_fields(len)?;
    if fields.len() != weights.len() {
        return Err(Error::shape(format!(
            "{} attention weights for {} steps",
            weights.len(),
            fields.len()
        )));
    }
    let mut saliency = vec![0.0; len];
    for (windows, &w) in fields.iter().zip(weights) {
        let share = w / windows.len() as Float;
        for span in windows {
            let per_row = share / span.len() as Float;
            saliency[span.clone()]
                .iter_mut()
                .for_each(|s| *s += per_row);
        }
    }
    saliency.truncate(keep.min(len));
    Ok(saliency)
}
