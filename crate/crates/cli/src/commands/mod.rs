//! Subcommand implementations. Each reads the validated configuration,
//! writes its reports into the output directory and returns an [`Outcome`].

mod finegrained;
mod judge;
mod physical;
mod select;
mod semantic;

pub use finegrained::eval_finegrained;
pub use judge::judge;
pub use physical::eval_physical;
pub use select::score_select;
pub use semantic::eval_semantic;

use t2m_core::corpus::{load_corpus, load_corpus_lenient, Corpus};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::ErrorRow;

/// Configuration plus process-level settings.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub jobs: usize,
}

impl Context {
    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs.max(1))
            .build()
            .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))
    }

    /// Valid records plus one error row per invalid record. Strict mode
    /// aborts on the first invalid record instead.
    pub fn corpus(&self) -> Result<(Corpus, Vec<ErrorRow>), CliError> {
        let path = self.config.require_corpus()?;
        let (corpus, errors) = if self.config.strict {
            let c = load_corpus(path).map_err(|e| match e.clip_id() {
                Some(_) => CliError::Data(e.to_string()),
                None => CliError::Config(e.to_string()),
            })?;
            (c, Vec::new())
        } else {
            load_corpus_lenient(path).map_err(|e| CliError::Config(e.to_string()))?
        };
        if corpus.is_empty() && errors.is_empty() {
            return Err(CliError::Config("no clips".into()));
        }
        let rows = errors
            .iter()
            .map(|e| ErrorRow {
                clip_id: e.clip_id().map(str::to_string),
                message: e.to_string(),
            })
            .collect();
        Ok((corpus, rows))
    }
}
