//! Isabelle/HOL theory generation.

pub mod emit;
pub mod expr;

use serde::Serialize;

pub use emit::{emit_function, emit_pre_definition, emit_termination, emit_wf_relation, translate, wrapped_relation, Emitter, Translation};
pub use expr::{isa_signature, isa_type, isa_type_atom, IsaPrinter, Unsupported};

pub const DEFAULT_TOOLKIT: &str = "VDMToolkit";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockKind {
    Definition,
    LemmasBundle,
    Function,
    Fun,
    Abbreviation,
    Lemma,
    Termination,
    Comment,
}

/// One top-level command. `lines` carry their own indentation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Block {
    pub kind: BlockKind,
    pub name: Option<String>,
    pub lines: Vec<String>,
}

impl Block {
    pub fn new(kind: BlockKind, name: Option<String>, lines: Vec<String>) -> Self {
        Block { kind, name, lines }
    }

    pub fn comment(text: impl Into<String>) -> Self {
        Block { kind: BlockKind::Comment, name: None, lines: vec![format!("(* {} *)", text.into())] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoryDoc {
    pub name: String,
    pub imports: Vec<String>,
    pub blocks: Vec<Block>,
}

impl TheoryDoc {
    pub fn new(name: impl Into<String>, toolkit: impl Into<String>) -> Self {
        TheoryDoc { name: name.into(), imports: vec![toolkit.into()], blocks: Vec::new() }
    }

    pub fn find(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name.as_deref() == Some(name))
    }
}

pub fn render_theory(doc: &TheoryDoc) -> String {
    let mut out = format!("theory {}\n  imports {}\nbegin\n\n", doc.name, doc.imports.join(" "));
    for b in &doc.blocks {
        for l in &b.lines {
            out.push_str(l);
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str("end\n");
    out
}

/// Replaces `\<name>` symbol encodings by their Unicode glyphs.
pub fn decode_symbols(s: &str) -> String {
    const TABLE: &[(&str, &str)] = &[
        ("\\<open>", "‹"),
        ("\\<close>", "›"),
        ("\\<Rightarrow>", "⇒"),
        ("\\<Longrightarrow>", "⟹"),
        ("\\<longrightarrow>", "⟶"),
        ("\\<rightharpoonup>", "⇀"),
        ("\\<equiv>", "≡"),
        ("\\<times>", "×"),
        ("\\<and>", "∧"),
        ("\\<or>", "∨"),
        ("\\<not>", "¬"),
        ("\\<noteq>", "≠"),
        ("\\<le>", "≤"),
        ("\\<ge>", "≥"),
        ("\\<in>", "∈"),
        ("\\<union>", "∪"),
        ("\\<triangleleft>", "◁"),
        ("\\<mapsto>", "↦"),
        ("\\<lambda>", "λ"),
        ("\\<forall>", "∀"),
        ("\\<exists>", "∃"),
        ("\\<lbrakk>", "⟦"),
        ("\\<rbrakk>", "⟧"),
    ];
    let mut s = s.to_string();
    for (from, to) in TABLE {
        s = s.replace(from, to);
    }
    s
}
