use rayon::prelude::*;

use super::{EntropyMode, Method, ScoreRecord};
use crate::corpus::{Corpus, DomainTag, Side};
use crate::error::{Error, Result};
use crate::lm::{lm_negloglik, NGramLanguageModel};

/// The four language models of a cross-entropy-difference score.
#[derive(Debug, Clone, Copy)]
pub struct MmlModels<'a> {
    pub src_in: &'a NGramLanguageModel,
    pub src_gen: &'a NGramLanguageModel,
    pub tgt_in: &'a NGramLanguageModel,
    pub tgt_gen: &'a NGramLanguageModel,
}

impl MmlModels<'_> {
    fn check(&self) -> Result<()> {
        for (name, lm, side, domain) in [
            ("src_in", self.src_in, Side::Source, DomainTag::InDomain),
            ("src_gen", self.src_gen, Side::Source, DomainTag::General),
            ("tgt_in", self.tgt_in, Side::Target, DomainTag::InDomain),
            ("tgt_gen", self.tgt_gen, Side::Target, DomainTag::General),
        ] {
            if lm.side() != side || lm.domain() != domain {
                return Err(Error::invalid(format!(
                    "{name} must be a {} {} model, got {} {}",
                    side.name(),
                    domain.name(),
                    lm.side().name(),
                    lm.domain().name()
                )));
            }
        }
        Ok(())
    }
}

/// `(h_src_in - h_src_gen) + (h_tgt_in - h_tgt_gen)`; lower is more in-domain.
pub fn mml_score(h_src_in: f64, h_src_gen: f64, h_tgt_in: f64, h_tgt_gen: f64) -> f64 {
    (h_src_in - h_src_gen) + (h_tgt_in - h_tgt_gen)
}

pub fn score_corpus_mml(corpus: &Corpus, models: MmlModels<'_>, mode: EntropyMode) -> Result<Vec<ScoreRecord>> {
    models.check()?;
    let h = |lm: &NGramLanguageModel, s: &[String]| -> Result<f64> {
        match mode {
            EntropyMode::PerToken => lm_negloglik(lm, s),
            EntropyMode::Sum => Ok(lm.total_negloglik(s)),
        }
    };
    corpus
        .pairs()
        .par_iter()
        .map(|p| {
            let value = mml_score(
                h(models.src_in, &p.src)?,
                h(models.src_gen, &p.src)?,
                h(models.tgt_in, &p.tgt)?,
                h(models.tgt_gen, &p.tgt)?,
            );
            Ok(ScoreRecord { pair_id: p.id, value, method: Method::Mml })
        })
        .collect()
}
