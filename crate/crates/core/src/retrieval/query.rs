use std::collections::HashMap;

use crate::analyzer::AnalyzerConfig;
use crate::corpus::Query;
use crate::error::{Error, Result};
use crate::targets::WeightRecord;

/// Bag-of-words query with a strictly positive weight per distinct term.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQuery {
    terms: Vec<(String, f64)>,
}

impl WeightedQuery {
    /// Repeated terms are merged by summing their weights, keeping the
    /// position of the first occurrence.
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let mut merged: Vec<(String, f64)> = Vec::new();
        let mut slot: HashMap<String, usize> = HashMap::new();
        for (term, weight) in terms {
            let term = term.into();
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "query term `{term}` has non-positive weight {weight}"
                )));
            }
            match slot.get(&term) {
                Some(&i) => merged[i].1 += weight,
                None => {
                    slot.insert(term.clone(), merged.len());
                    merged.push((term, weight));
                }
            }
        }
        if merged.is_empty() {
            return Err(Error::EmptyQuery);
        }
        Ok(WeightedQuery { terms: merged })
    }

    /// Every analyzed term with weight 1; repeats add up.
    pub fn uniform(terms: &[String]) -> Result<Self> {
        Self::new(terms.iter().map(|t| (t.as_str(), 1.0)))
    }

    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    /// Weights rescaled to sum to one.
    pub fn normalized(&self) -> Vec<(&str, f64)> {
        let total: f64 = self.terms.iter().map(|(_, w)| w).sum();
        self.terms
            .iter()
            .map(|(t, w)| (t.as_str(), w / total))
            .collect()
    }

    /// Renders the query in `#weight(...)` notation.
    pub fn to_weight_expr(&self) -> String {
        let parts: Vec<String> = self.terms.iter().map(|(t, w)| format!("{w} {t}")).collect();
        format!("#weight({})", parts.join(" "))
    }
}

/// A weighted query plus the analyzed terms that had no weight and were
/// therefore left out.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedQueryBuild {
    pub query: WeightedQuery,
    pub unweighted_terms: Vec<String>,
}

/// Pairs the analyzed query terms with predicted weights. Terms with
/// non-positive weights are discarded, as are terms the record does not
/// cover (reported in `unweighted_terms`).
pub fn make_weighted_query(
    query: &Query,
    weights: &WeightRecord,
    analyzer: &AnalyzerConfig,
) -> Result<WeightedQueryBuild> {
    if weights.owner_id != query.query_id {
        return Err(Error::InvalidArgument(format!(
            "weight record `{}` does not belong to query `{}`",
            weights.owner_id, query.query_id
        )));
    }
    let mut kept = Vec::new();
    let mut unweighted_terms = Vec::new();
    for term in analyzer.analyze(&query.text) {
        match weights.get(&term) {
            Some(w) if w > 0.0 && w.is_finite() => kept.push((term, w)),
            Some(_) => {}
            None => unweighted_terms.push(term),
        }
    }
    Ok(WeightedQueryBuild {
        query: WeightedQuery::new(kept)?,
        unweighted_terms,
    })
}

/// Mixture weights of the unigram, ordered-bigram and unordered-window
/// components of a sequential dependence query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdmMix {
    pub unigram: f64,
    pub ordered: f64,
    pub unordered: f64,
}

impl Default for SdmMix {
    fn default() -> Self {
        SdmMix {
            unigram: 0.85,
            ordered: 0.10,
            unordered: 0.05,
        }
    }
}

impl SdmMix {
    pub fn new(unigram: f64, ordered: f64, unordered: f64) -> Result<Self> {
        let mix = SdmMix {
            unigram,
            ordered,
            unordered,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.unigram, self.ordered, self.unordered];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0)
            || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "SDM mix must be non-negative and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }
}

pub const DEFAULT_SDM_WINDOW: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SdmQuery {
    pub unigrams: WeightedQuery,
    /// Adjacent term pairs in query order.
    pub ordered: Vec<((String, String), f64)>,
    /// The same pairs matched in either order within `window` positions.
    pub unordered: Vec<((String, String), f64, u32)>,
    pub mix: SdmMix,
}

/// Builds a sequential dependence query. The unigram part is the weighted
/// query when `weights` is given and uniform otherwise; pairs come from
/// adjacent analyzed terms and are weighted uniformly.
pub fn make_sdm_query(
    query: &Query,
    weights: Option<&WeightRecord>,
    analyzer: &AnalyzerConfig,
    mix: SdmMix,
    window: u32,
) -> Result<SdmQuery> {
    mix.validate()?;
    if window < 2 {
        return Err(Error::InvalidArgument(
            "SDM window must be at least 2".into(),
        ));
    }
    let terms = analyzer.analyze(&query.text);
    let unigrams = match weights {
        Some(record) => make_weighted_query(query, record, analyzer)?.query,
        None => WeightedQuery::uniform(&terms)?,
    };
    let pairs: Vec<(String, String)> = terms
        .windows(2)
        .map(|w| (w[0].clone(), w[1].clone()))
        .collect();
    Ok(SdmQuery {
        unigrams,
        ordered: pairs.iter().map(|p| (p.clone(), 1.0)).collect(),
        unordered: pairs.into_iter().map(|p| (p, 1.0, window)).collect(),
        mix,
    })
}
