use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Real, Tape, Var};
use crate::error::{Error, Result};

/// Which coordinates of a representation act as the source part and which
/// as the target part of the asymmetric inner product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    /// First half is the source part, second half the target part.
    Block,
    /// Even coordinates are the source part, odd coordinates the target part.
    Interleave,
}

/// Column indices of the source and target parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDims {
    pub src: Arc<Vec<usize>>,
    pub dst: Arc<Vec<usize>>,
}

fn check_even(dim: usize) -> Result<()> {
    if dim % 2 == 1 {
        return Err(Error::Dimension(format!(
            "decoder needs an even representation width, got {dim}"
        )));
    }
    Ok(())
}

impl DecoderKind {
    pub fn split(self, dim: usize) -> Result<SplitDims> {
        check_even(dim)?;
        let k = dim / 2;
        let (src, dst) = match self {
            DecoderKind::Block => ((0..k).collect(), (k..dim).collect()),
            DecoderKind::Interleave => ((0..k).map(|i| 2 * i).collect(), (0..k).map(|i| 2 * i + 1).collect()),
        };
        Ok(SplitDims {
            src: Arc::new(src),
            dst: Arc::new(dst),
        })
    }

    /// Score of one pair of representation vectors.
    pub fn score<T: Real>(self, h_src: &[T], h_dst: &[T]) -> Result<T> {
        if h_src.len() != h_dst.len() {
            return Err(Error::Dimension(format!(
                "representations of width {} and {}",
                h_src.len(),
                h_dst.len()
            )));
        }
        let s = self.split(h_src.len())?;
        Ok(s.src
            .iter()
            .zip(s.dst.iter())
            .fold(T::zero(), |acc, (&i, &j)| acc + h_src[i] * h_dst[j]))
    }
}

/// `dot(first half of h_src, second half of h_dst)`.
pub fn decode_block<T: Real>(h_src: &[T], h_dst: &[T]) -> Result<T> {
    DecoderKind::Block.score(h_src, h_dst)
}

/// `dot(even entries of h_src, odd entries of h_dst)`.
pub fn decode_interleave<T: Real>(h_src: &[T], h_dst: &[T]) -> Result<T> {
    DecoderKind::Interleave.score(h_src, h_dst)
}

/// Permutation `p` with `decode_interleave(a, b) == decode_block(a∘p, b∘p)`,
/// where `(a∘p)[j] = a[p[j]]`: even indices first, then odd ones.
pub fn block_permutation(dim: usize) -> Result<Vec<usize>> {
    check_even(dim)?;
    Ok((0..dim).step_by(2).chain((1..dim).step_by(2)).collect())
}

/// Scores of the node pairs `(src_rows[k], dst_rows[k])` as an `n x 1`
/// column.
pub fn score_pairs<T: Real>(
    tape: &mut Tape<T>,
    src_rep: Var,
    dst_rep: Var,
    src_rows: Arc<Vec<usize>>,
    dst_rows: Arc<Vec<usize>>,
    split: &SplitDims,
) -> Result<Var> {
    if src_rows.len() != dst_rows.len() {
        return Err(Error::InvalidArgument(format!(
            "{} sources for {} destinations",
            src_rows.len(),
            dst_rows.len()
        )));
    }
    let s = tape.select_cols(src_rep, split.src.clone())?;
    let s = tape.gather_rows(s, src_rows)?;
    let d = tape.select_cols(dst_rep, split.dst.clone())?;
    let d = tape.gather_rows(d, dst_rows)?;
    tape.row_dot(s, d)
}
