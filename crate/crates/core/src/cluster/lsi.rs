use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::svd::{DenseMatrix, Svd};
use crate::vector::TermVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LsiError {
    #[error("nothing to project")]
    NoItems,
    #[error("latent rank must be at least 1")]
    ZeroRank,
}

/// Rank-`r` latent semantic space over a set of items.
#[derive(Debug, Clone)]
pub struct LatentSpace {
    pub rank: usize,
    /// Row labels of the term-document matrix.
    pub terms: Vec<String>,
    /// `rank` orthonormal directions, each indexed like `terms`.
    pub term_basis: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
    /// Item id -> coordinates (`sigma_i * v_i`), i.e. the projection of the
    /// item's column onto the term basis.
    pub doc_coords: BTreeMap<String, Vec<f64>>,
}

impl LatentSpace {
    /// Rank-`r` approximation of an item's column, indexed like `terms`.
    pub fn reconstruct(&self, item_id: &str) -> Option<Vec<f64>> {
        let coords = self.doc_coords.get(item_id)?;
        let mut col = vec![0.0; self.terms.len()];
        for (dir, &c) in self.term_basis.iter().zip(coords) {
            for (x, d) in col.iter_mut().zip(dir) {
                *x += c * d;
            }
        }
        Some(col)
    }
}

/// Builds the term-document matrix of `items` (one column per item) and
/// keeps its `r` leading singular directions.
///
/// `r` is clamped to the smaller matrix dimension and to the numerical
/// rank, so `rank` may come back smaller than requested.
pub fn lsi_project(items: &[(String, &TermVector)], r: usize) -> Result<LatentSpace, LsiError> {
    if items.is_empty() {
        return Err(LsiError::NoItems);
    }
    if r == 0 {
        return Err(LsiError::ZeroRank);
    }
    let terms: Vec<String> = items
        .iter()
        .flat_map(|(_, v)| v.terms().map(str::to_string))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let row_of: BTreeMap<&str, usize> =
        terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let columns = items
        .iter()
        .map(|(_, v)| {
            let mut col = vec![0.0; terms.len()];
            for (t, w) in v.iter() {
                col[row_of[t]] = w;
            }
            col
        })
        .collect();
    let matrix = DenseMatrix::from_columns(terms.len(), columns);
    let r = r.min(terms.len()).min(items.len());
    let svd = Svd::compute(&matrix).truncate(r);
    let rank = svd.rank();

    let doc_coords = items
        .iter()
        .enumerate()
        .map(|(j, (id, _))| {
            let coords = svd.s.iter().zip(&svd.v).map(|(s, v)| s * v[j]).collect();
            (id.clone(), coords)
        })
        .collect();

    Ok(LatentSpace {
        rank,
        terms,
        term_basis: svd.u,
        singular_values: svd.s,
        doc_coords,
    })
}
