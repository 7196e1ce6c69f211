//! Line-oriented dialog loop. Lines starting with `:` are meta-commands,
//! everything else goes to the session.

use std::io::{BufRead, Write};

use anyhow::Context;
use relworld::session::{Session, TurnReply};
use relworld::world::{Possible, WorldModel};
use relworld::EntityId;

use crate::config::Resources;

const HELP: &str = "\
:graph          list entities and possible relations
:ask A B        possible relations of A to B (ids like e3, names, or `me`)
:save FILE      write the session (relative paths go to the session dir)
:load FILE      replace the session with a saved one
:quit           leave";

/// Run until `:quit` or end of input. `prompt` adds a `> ` prompt and a
/// greeting, for interactive terminals.
pub fn run_repl(
    res: &Resources,
    input: impl BufRead,
    out: &mut impl Write,
    prompt: bool,
) -> anyhow::Result<()> {
    let mut session = Session::new(new_id(), res.table.clone(), res.session.clone())?;
    if prompt {
        writeln!(out, "Tell me about your family. Type :help for commands.")?;
    }
    let mut lines = input.lines();
    loop {
        if prompt {
            write!(out, "> ")?;
            out.flush()?;
        }
        let Some(line) = lines.next() else { break };
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(cmd) = line.strip_prefix(':') {
            match meta(cmd, &mut session, res, out)? {
                Flow::Continue => continue,
                Flow::Quit => break,
            }
        }
        let reply = session.say(line, &res.lex, &res.store);
        print_reply(out, &reply)?;
    }
    Ok(())
}

enum Flow {
    Continue,
    Quit,
}

fn meta(cmd: &str, session: &mut Session, res: &Resources, out: &mut impl Write) -> anyhow::Result<Flow> {
    let mut words = cmd.split_whitespace();
    let name = words.next().unwrap_or("");
    let args: Vec<&str> = words.collect();
    match (name, args.as_slice()) {
        ("quit" | "q" | "exit", []) => return Ok(Flow::Quit),
        ("help" | "h", []) => writeln!(out, "{HELP}")?,
        ("graph", []) => write!(out, "{}", render_graph(session.world()))?,
        ("ask", [a, b]) => {
            let w = session.world();
            match (resolve_entity(w, a), resolve_entity(w, b)) {
                (Ok(a), Ok(b)) => match w.possible_relations(a, b)? {
                    Possible::Relations(s) => writeln!(out, "{s}")?,
                    Possible::Disjoint => writeln!(out, "disjoint: no connection is known")?,
                },
                (Err(e), _) | (_, Err(e)) => writeln!(out, "{e}")?,
            }
        }
        ("save", [file]) => {
            let path = res.session_path(file);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, session.save_json())
                .with_context(|| format!("cannot write {}", path.display()))?;
            writeln!(out, "saved to {}", path.display())?;
        }
        ("load", [file]) => {
            let path = res.session_path(file);
            match std::fs::read_to_string(&path) {
                Ok(json) => match Session::load_json(res.table.clone(), &json) {
                    Ok(s) => {
                        *session = s;
                        writeln!(out, "loaded {}", path.display())?;
                        if let Some(q) = session.pending() {
                            writeln!(out, "{}", q.text)?;
                        }
                    }
                    Err(e) => writeln!(out, "cannot load {}: {e}", path.display())?,
                },
                Err(e) => writeln!(out, "cannot read {}: {e}", path.display())?,
            }
        }
        _ => writeln!(out, "unknown command `:{cmd}`; try :help")?,
    }
    Ok(Flow::Continue)
}

fn print_reply(out: &mut impl Write, reply: &TurnReply) -> std::io::Result<()> {
    for r in &reply.replies {
        writeln!(out, "{r}")?;
    }
    if let Some(q) = &reply.question {
        writeln!(out, "{}", q.text)?;
    }
    Ok(())
}

pub fn new_id() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

/// `e3`, `3`, `me`, or a name carried by exactly one entity.
pub fn resolve_entity(w: &WorldModel, token: &str) -> Result<EntityId, String> {
    let t = token.trim();
    let numeric = t.strip_prefix('e').unwrap_or(t);
    if let Ok(n) = numeric.parse::<u32>() {
        let id = EntityId(n);
        return match w.entity(id) {
            Some(_) => Ok(id),
            None => Err(format!("no entity {id}")),
        };
    }
    if matches!(t.to_lowercase().as_str(), "me" | "i" | "narrator" | "you") {
        return w.narrator().ok_or_else(|| "there is no narrator".to_string());
    }
    let hits: Vec<EntityId> = w.entities().filter(|e| e.has_name(t)).map(|e| e.id).collect();
    match hits.as_slice() {
        [id] => Ok(*id),
        [] => Err(format!("nobody is called {t}")),
        many => Err(format!(
            "{t} is ambiguous: {}",
            many.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", ")
        )),
    }
}

pub fn render_graph(w: &WorldModel) -> String {
    let mut s = String::from("entities:\n");
    for e in w.entities() {
        let names = match (e.names.is_empty(), e.is_narrator) {
            (true, true) => "you".to_string(),
            (true, false) => "-".to_string(),
            _ => e.names.iter().cloned().collect::<Vec<_>>().join("/"),
        };
        let narrator = if e.is_narrator { " (narrator)" } else { "" };
        s.push_str(&format!("  {} {names}{narrator} [{}]\n", e.id, e.gender));
    }
    s.push_str("edges:\n");
    for (a, b, set) in w.edges() {
        let mark = if set.len() > 1 { " ?" } else { "" };
        s.push_str(&format!("  {a} -> {b}: {set}{mark}\n"));
    }
    s
}
