//! High-quality semantic-patch affinity spaces: construction, measure-based
//! nearest-neighbor retrieval, and deformation-path expansion.
//!
//! A space holds same-kind, same-identity, same-pose exemplars at one
//! canonical size. Queries always use each stored record as the *moving*
//! image deformed toward the query, so the deformed output a caller reuses
//! keeps the record's quality.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::affinity::{demon_distance, AffinityConfig, FeatureKind};
use crate::demon::field_path;
use crate::image::ColorImage;
use crate::par;
use crate::warp::warp_hsv;
use crate::{Error, Result};

/// One exemplar patch and its provenance.
#[derive(Debug, Clone)]
pub struct PatchRecord {
    pub id: String,
    pub image: ColorImage,
    pub kind: FeatureKind,
    pub identity: String,
    pub pose: String,
    /// Id of the full photo this patch was cut from.
    pub source_image_id: String,
}

/// Directed pairwise distances; the measure is not symmetric, so both
/// directions are stored.
#[derive(Debug, Clone)]
pub struct PairwiseDistances {
    n: usize,
    /// Row-major `n x n`: entry `(from, to)` is the distance moving record
    /// `from` toward record `to`.
    values: Vec<f64>,
}

impl PairwiseDistances {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.values[from * self.n + to]
    }
}

/// An immutable affinity space over homogeneous patch records.
#[derive(Debug, Clone)]
pub struct PatchSpace {
    records: Vec<PatchRecord>,
    pairwise: Option<PairwiseDistances>,
}

/// Result of a nearest-neighbor query: full ascending ranking plus the
/// winning record.
#[derive(Debug, Clone)]
pub struct QueryResult {
    pub best_id: String,
    pub distance: f64,
    /// `(record id, distance)` sorted ascending by distance, ties by id.
    pub ranking: Vec<(String, f64)>,
}

impl PatchSpace {
    /// Validates homogeneity (kind, identity, pose, canonical size) and
    /// optionally computes the directed pairwise distance matrix.
    pub fn build(
        records: Vec<PatchRecord>,
        cfg: &AffinityConfig,
        with_pairwise: bool,
    ) -> Result<PatchSpace> {
        if records.is_empty() {
            return Err(Error::EmptySpace);
        }
        cfg.validate()?;
        let first = &records[0];
        for r in &records[1..] {
            if r.kind != first.kind {
                return Err(Error::HeterogeneousSpace {
                    record_id: r.id.clone(),
                    detail: format!("kind {} differs from {}", r.kind.name(), first.kind.name()),
                });
            }
            if r.identity != first.identity {
                return Err(Error::HeterogeneousSpace {
                    record_id: r.id.clone(),
                    detail: format!(
                        "identity '{}' differs from '{}'",
                        r.identity, first.identity
                    ),
                });
            }
            if r.pose != first.pose {
                return Err(Error::HeterogeneousSpace {
                    record_id: r.id.clone(),
                    detail: format!("pose '{}' differs from '{}'", r.pose, first.pose),
                });
            }
            if r.image.dims() != first.image.dims() {
                return Err(Error::HeterogeneousSpace {
                    record_id: r.id.clone(),
                    detail: format!(
                        "size {}x{} differs from canonical {}x{}",
                        r.image.width(),
                        r.image.height(),
                        first.image.width(),
                        first.image.height()
                    ),
                });
            }
        }

        let pairwise = if with_pairwise {
            let n = records.len();
            let kind = first.kind;
            let rows: Vec<Result<Vec<f64>>> = par::map_indices(n, |from| {
                let mut row = Vec::with_capacity(n);
                for to in 0..n {
                    if from == to {
                        row.push(0.0);
                    } else {
                        row.push(demon_distance(
                            &records[from].image,
                            &records[to].image,
                            kind,
                            cfg,
                        )?);
                    }
                }
                Ok(row)
            });
            let mut values = Vec::with_capacity(n * n);
            for row in rows {
                values.extend(row?);
            }
            Some(PairwiseDistances { n, values })
        } else {
            None
        };

        Ok(PatchSpace { records, pairwise })
    }

    pub fn records(&self) -> &[PatchRecord] {
        &self.records
    }

    pub fn pairwise(&self) -> Option<&PairwiseDistances> {
        self.pairwise.as_ref()
    }

    pub fn kind(&self) -> FeatureKind {
        self.records[0].kind
    }

    pub fn identity(&self) -> &str {
        &self.records[0].identity
    }

    pub fn pose(&self) -> &str {
        &self.records[0].pose
    }

    /// Canonical `(width, height)` every record shares.
    pub fn canonical_size(&self) -> (usize, usize) {
        self.records[0].image.dims()
    }

    pub fn record(&self, id: &str) -> Option<&PatchRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Nearest-neighbor search: scores every record as the moving image
    /// deformed toward `query` and returns the full ascending ranking.
    /// The query must already be at the canonical size.
    pub fn nn_query(&self, query: &ColorImage, cfg: &AffinityConfig) -> Result<QueryResult> {
        cfg.validate()?;
        if query.dims() != self.canonical_size() {
            return Err(Error::dims(self.canonical_size(), query.dims()));
        }
        let kind = self.kind();
        let scored: Vec<Result<(String, f64)>> = par::map_ordered(&self.records, |r| {
            let d = demon_distance(&r.image, query, kind, cfg)?;
            Ok((r.id.clone(), d))
        });
        let mut ranking = Vec::with_capacity(scored.len());
        for s in scored {
            ranking.push(s?);
        }
        ranking.sort_by(|a, b| {
            a.1.partial_cmp(&b.1)
                .expect("distances are finite")
                .then_with(|| a.0.cmp(&b.0))
        });
        let (best_id, distance) = ranking[0].clone();
        Ok(QueryResult {
            best_id,
            distance,
            ranking,
        })
    }

    /// Deformation-path expansion between two records: registers the first
    /// record's channel toward the second's for the full budget, then warps
    /// the first record's HSV planes by the accumulated field at each
    /// requested step. Callers decide whether to admit the results.
    pub fn expand(
        &self,
        from_id: &str,
        to_id: &str,
        steps: &[usize],
        cfg: &AffinityConfig,
    ) -> Result<Vec<ColorImage>> {
        cfg.validate()?;
        let from = self.record(from_id).ok_or_else(|| Error::UnknownRecord {
            id: String::from(from_id),
        })?;
        let to = self.record(to_id).ok_or_else(|| Error::UnknownRecord {
            id: String::from(to_id),
        })?;

        let kind = self.kind();
        let mut m_ch = crate::affinity::select_channel(&from.image, kind);
        let mut s_ch = crate::affinity::select_channel(&to.image, kind);
        if cfg.pre_equalize {
            m_ch = crate::histogram::histogram_equalize(&m_ch);
            s_ch = crate::histogram::histogram_equalize(&s_ch);
        }
        let fields = field_path(&m_ch, &s_ch, &cfg.reg, steps)?;
        fields
            .iter()
            .map(|field| warp_hsv(&from.image, field))
            .collect()
    }
}
