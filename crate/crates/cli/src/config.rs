//! Shared resources loaded once at startup.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::Args;
use relworld::algebra::check_axioms;
use relworld::dialog::ParaphraseStore;
use relworld::extraction::{Lexicons, NameLexicon, RelationLexicon};
use relworld::session::SessionConfig;
use relworld::CompositionTable;

/// Flags common to `repl` and `serve`. Each has an environment override.
#[derive(Debug, Clone, Args)]
pub struct ResourceArgs {
    /// Composition table file; the bundled table when absent.
    #[arg(long, env = "RELWORLD_TABLE")]
    pub table: Option<PathBuf>,
    /// CSV of `name,male,female` counts.
    #[arg(long, env = "RELWORLD_NAME_LEXICON")]
    pub name_lexicon: Option<PathBuf>,
    /// CSV of relation words.
    #[arg(long, env = "RELWORLD_RELATION_LEXICON")]
    pub relation_lexicon: Option<PathBuf>,
    /// Append-only paraphrase file; kept in memory only when absent.
    #[arg(long, env = "RELWORLD_PARAPHRASES")]
    pub paraphrases: Option<PathBuf>,
    /// Where `:save`, `:load` and the save/load endpoints keep session files.
    #[arg(long, env = "RELWORLD_SESSION_DIR", default_value = "sessions")]
    pub session_dir: PathBuf,
    /// Ask for the names of unnamed relatives once nothing else is open.
    #[arg(long, env = "RELWORLD_ASK_NAMES")]
    pub ask_names: bool,
}

impl Default for ResourceArgs {
    fn default() -> ResourceArgs {
        ResourceArgs {
            table: None,
            name_lexicon: None,
            relation_lexicon: None,
            paraphrases: None,
            session_dir: PathBuf::from("sessions"),
            ask_names: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Resources {
    pub table: Arc<CompositionTable>,
    pub lex: Arc<Lexicons>,
    pub store: Arc<ParaphraseStore>,
    pub session_dir: PathBuf,
    pub session: SessionConfig,
}

impl ResourceArgs {
    pub fn load(&self) -> anyhow::Result<Resources> {
        let table = match &self.table {
            Some(p) => CompositionTable::load(p)
                .with_context(|| format!("cannot load table {}", p.display()))?,
            None => CompositionTable::shipped(),
        };
        let report = check_axioms(&table);
        if !report.is_valid() {
            bail!("table violates the axioms:\n{report}");
        }
        let names = match &self.name_lexicon {
            Some(p) => NameLexicon::load(p)
                .with_context(|| format!("cannot load name lexicon {}", p.display()))?,
            None => NameLexicon::builtin(),
        };
        let relations = match &self.relation_lexicon {
            Some(p) => RelationLexicon::load(p)
                .with_context(|| format!("cannot load relation lexicon {}", p.display()))?,
            None => RelationLexicon::builtin(),
        };
        let store = match &self.paraphrases {
            Some(p) => ParaphraseStore::open(p)
                .with_context(|| format!("cannot open paraphrase store {}", p.display()))?,
            None => ParaphraseStore::in_memory(),
        };
        Ok(Resources {
            table: Arc::new(table),
            lex: Arc::new(Lexicons { relations, names }),
            store: Arc::new(store),
            session_dir: self.session_dir.clone(),
            session: SessionConfig {
                ask_names: self.ask_names,
            },
        })
    }
}

impl Resources {
    /// Bundled table and lexicons, in-memory paraphrases.
    pub fn builtin(session_dir: impl AsRef<Path>) -> Resources {
        ResourceArgs {
            session_dir: session_dir.as_ref().to_path_buf(),
            ..ResourceArgs::default()
        }
        .load()
        .expect("bundled resources load")
    }

    /// Relative paths are taken inside the session directory.
    pub fn session_path(&self, file: &str) -> PathBuf {
        let p = Path::new(file);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.session_dir.join(p)
        }
    }
}
