use std::io::BufRead;
use std::path::Path;

use serde::Serialize;

use super::Vocabulary;
use crate::error::{Error, Result};
use crate::model::PAD_INDEX;
use crate::rng::Rng;
use crate::tensor::{Float, Tensor};

/// Where an embedding row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowSource {
    #[serde(rename = "loaded")]
    Loaded,
    #[serde(rename = "randomly-initialized")]
    Random,
    #[serde(rename = "zero-pad")]
    Padding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    /// `[|V| × dim]`, aligned with the vocabulary.
    pub table: Tensor,
    pub provenance: Vec<RowSource>,
}

impl EmbeddingTable {
    pub fn loaded(&self) -> usize {
        self.count(RowSource::Loaded)
    }

    pub fn initialized(&self) -> usize {
        self.count(RowSource::Random)
    }

    fn count(&self, source: RowSource) -> usize {
        self.provenance.iter().filter(|&&s| s == source).count()
    }
}

/// Reads GloVe text vectors (`word v1 … v_dim` per line) for the words in
/// `vocab`. Every line is validated, including those for words outside the
/// vocabulary. The first occurrence of a word wins. Rows without a vector are
/// drawn uniformly from [−0.05, 0.05] with `seed`, in index order; row 0 is
/// zero.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingTable> {
    let mut rows: Vec<Option<Vec<Float>>> = vec![None; vocab.len()];
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let mut fields = line.split_ascii_whitespace();
        let Some(word) = fields.next() else {
            continue;
        };
        let values = fields
            .map(|f| {
                f.parse::<Float>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("unparseable value {f:?}")))
            })
            .collect::<Result<Vec<Float>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                line_no,
                format!(
                    "expected {dim} values after {word:?}, found {}",
                    values.len()
                ),
            ));
        }
        if let Some(i) = vocab.get(word) {
            let slot = &mut rows[i as usize];
            if slot.is_none() {
                *slot = Some(values);
            }
        }
    }

    let mut rng = Rng::new(seed);
    let mut table = Tensor::zeros(&[vocab.len(), dim]);
    let mut provenance = Vec::with_capacity(vocab.len());
    for (i, row) in rows.into_iter().enumerate() {
        if i == PAD_INDEX as usize {
            provenance.push(RowSource::Padding);
            continue;
        }
        let out = table.row_mut(i);
        match row {
            Some(values) => {
                out.copy_from_slice(&values);
                provenance.push(RowSource::Loaded);
            }
            None => {
                out.iter_mut().for_each(|v| *v = rng.uniform(-0.05, 0.05));
                provenance.push(RowSource::Random);
            }
        }
    }
    Ok(EmbeddingTable { table, provenance })
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    read_embeddings(std::io::BufReader::new(file), vocab, dim, seed)
}
