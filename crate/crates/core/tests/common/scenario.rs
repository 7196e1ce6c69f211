//! Scripted conversations stored as transcripts.
//!
//! `> text` is a user line, `< text` a system line (replies, then the next
//! question), `=== new session` starts a fresh session that shares the
//! paraphrase store with the previous ones.

use std::sync::Arc;

use relworld::dialog::ParaphraseStore;
use relworld::extraction::Lexicons;
use relworld::session::{Session, SessionConfig};
use relworld::CompositionTable;

pub const NEW_SESSION: &str = "=== new session";

pub struct Outcome {
    pub transcript: String,
    /// Every session in order, in its final state.
    pub sessions: Vec<Session>,
    pub store: ParaphraseStore,
}

/// Run the user lines of `script` and render the full transcript.
pub fn run(script: &str, table: Arc<CompositionTable>) -> Outcome {
    let lex = Lexicons::builtin();
    let store = ParaphraseStore::in_memory();
    let fresh = || Session::new("scenario", table.clone(), SessionConfig::default()).unwrap();
    let mut sessions = vec![fresh()];
    let mut out = String::new();
    for line in script.lines() {
        if line.trim() == NEW_SESSION {
            sessions.push(fresh());
            out.push_str(NEW_SESSION);
            out.push('\n');
        } else if let Some(text) = line.strip_prefix("> ") {
            out.push_str(line);
            out.push('\n');
            let reply = sessions.last_mut().unwrap().say(text, &lex, &store);
            for r in reply.replies {
                out.push_str(&format!("< {r}\n"));
            }
            if let Some(q) = reply.question {
                out.push_str(&format!("< {}\n", q.text));
            }
        }
    }
    Outcome {
        transcript: out,
        sessions,
        store,
    }
}
