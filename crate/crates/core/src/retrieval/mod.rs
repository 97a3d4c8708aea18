//! Ranking with BM25 and query likelihood over either kind of index,
//! weighted and sequential-dependence query construction, and run files.

mod query;
mod run;
mod scoring;

use rayon::prelude::*;

use crate::error::Result;
use crate::index::InvertedIndex;

pub use query::{
    make_sdm_query, make_weighted_query, SdmMix, SdmQuery, WeightedQuery, WeightedQueryBuild,
    DEFAULT_SDM_WINDOW,
};
pub use run::{
    export_candidates, read_run, read_run_from, write_run, write_run_to, Run, ScoredDoc,
};
pub use scoring::{
    bm25_idf, bm25_search, ordered_matches, ql_search, sdm_search, search, window_matches,
    Bm25Params, Model, DEFAULT_LAMBDA,
};

#[derive(Debug, Clone, PartialEq)]
pub enum SearchQuery {
    Bow(WeightedQuery),
    Sdm(SdmQuery),
}

/// Default result depth.
pub const DEFAULT_K: u32 = 1000;

/// Runs every query, in parallel on the current rayon pool. The result does
/// not depend on the number of threads.
pub fn search_batch(
    index: &InvertedIndex,
    queries: &[(String, SearchQuery)],
    k: u32,
    model: Model,
) -> Result<Run> {
    let lists: Vec<(String, Vec<ScoredDoc>)> = queries
        .par_iter()
        .map(|(qid, query)| {
            let hits = match (query, model) {
                (SearchQuery::Bow(q), model) => search(index, q, k, model)?,
                (SearchQuery::Sdm(q), Model::Ql { lambda }) => sdm_search(index, q, k, lambda)?,
                (SearchQuery::Sdm(_), Model::Bm25(_)) => {
                    return Err(crate::Error::InvalidArgument(
                        "sequential dependence queries are scored with query likelihood".into(),
                    ))
                }
            };
            Ok((qid.clone(), hits))
        })
        .collect::<Result<_>>()?;
    let mut run = Run::new();
    for (qid, hits) in lists {
        run.insert(qid, hits);
    }
    Ok(run)
}

/// Run tag naming the retrieval function and its parameters.
pub fn run_tag(model: Model, sdm: bool) -> String {
    let base = match model {
        Model::Bm25(p) => format!("bm25-lucene-idf-k1_{}-b_{}", p.k1, p.b),
        Model::Ql { lambda } => format!("ql-jm-lambda_{lambda}"),
    };
    if sdm {
        format!("{base}-sdm")
    } else {
        base
    }
}
