//! Tokenizer for the VDM-SL subset.
//!
//! Ordinary `--` comments are dropped. A comment of the form `--@Name` is
//! kept: the lexer emits an annotation token for the name and then tokenizes
//! the rest of the comment as ordinary input. When the annotation's
//! parentheses are still open at the end of the line, the text of following
//! `--` comment lines is taken as its continuation.

use std::fmt;

use num_bigint::BigInt;
use thiserror::Error;

use crate::diag::Pos;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    /// `@A`, a type variable in a polymorphic signature.
    TypeVar(String),
    Int(BigInt),

    KwFunctions,
    KwMeasure,
    KwIs,
    KwNot,
    KwYet,
    KwSpecified,
    KwPre,
    KwIf,
    KwThen,
    KwElse,
    KwElseif,
    KwLet,
    KwIn,
    KwSet,
    KwOf,
    KwMap,
    KwTo,
    KwNat,
    KwNat1,
    KwInt,
    KwBool,
    KwSeq,
    KwAnd,
    KwOr,
    KwTrue,
    KwFalse,
    KwDom,
    KwCard,
    KwUnion,
    KwForall,
    KwMkTuple,
    KwIsType,

    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Colon,
    Amp,
    Bar,
    DefEq,
    Arrow,
    Implies,
    MapsTo,
    DomAntiRestrict,
    EmptyMap,
    Plus,
    Minus,
    Star,
    Backslash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,

    AnnIsaMeasure,
    AnnWitness,
    AnnIsaMutualRec,
    AnnLemma,
    AnnOther(String),
}

impl Tok {
    pub fn is_annotation_start(&self) -> bool {
        matches!(
            self,
            Tok::AnnIsaMeasure | Tok::AnnWitness | Tok::AnnIsaMutualRec | Tok::AnnLemma | Tok::AnnOther(_)
        )
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::TypeVar(s) => return write!(f, "type variable `@{s}`"),
            Tok::Int(v) => return write!(f, "integer `{v}`"),
            Tok::AnnOther(n) => return write!(f, "annotation `@{n}`"),
            Tok::KwFunctions => "functions",
            Tok::KwMeasure => "measure",
            Tok::KwIs => "is",
            Tok::KwNot => "not",
            Tok::KwYet => "yet",
            Tok::KwSpecified => "specified",
            Tok::KwPre => "pre",
            Tok::KwIf => "if",
            Tok::KwThen => "then",
            Tok::KwElse => "else",
            Tok::KwElseif => "elseif",
            Tok::KwLet => "let",
            Tok::KwIn => "in",
            Tok::KwSet => "set",
            Tok::KwOf => "of",
            Tok::KwMap => "map",
            Tok::KwTo => "to",
            Tok::KwNat => "nat",
            Tok::KwNat1 => "nat1",
            Tok::KwInt => "int",
            Tok::KwBool => "bool",
            Tok::KwSeq => "seq",
            Tok::KwAnd => "and",
            Tok::KwOr => "or",
            Tok::KwTrue => "true",
            Tok::KwFalse => "false",
            Tok::KwDom => "dom",
            Tok::KwCard => "card",
            Tok::KwUnion => "union",
            Tok::KwForall => "forall",
            Tok::KwMkTuple => "mk_",
            Tok::KwIsType => "is_",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Amp => "&",
            Tok::Bar => "|",
            Tok::DefEq => "==",
            Tok::Arrow => "->",
            Tok::Implies => "=>",
            Tok::MapsTo => "|->",
            Tok::DomAntiRestrict => "<-:",
            Tok::EmptyMap => "{|->}",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Backslash => "\\",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AnnIsaMeasure => "@IsaMeasure",
            Tok::AnnWitness => "@Witness",
            Tok::AnnIsaMutualRec => "@IsaMutualRec",
            Tok::AnnLemma => "@Lemma",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("illegal character {ch:?} at {pos}")]
    IllegalCharacter { ch: char, pos: Pos },
}

impl LexError {
    pub fn pos(&self) -> Pos {
        match self {
            LexError::IllegalCharacter { pos, .. } => *pos,
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "functions" => Tok::KwFunctions,
        "measure" => Tok::KwMeasure,
        "is" => Tok::KwIs,
        "not" => Tok::KwNot,
        "yet" => Tok::KwYet,
        "specified" => Tok::KwSpecified,
        "pre" => Tok::KwPre,
        "if" => Tok::KwIf,
        "then" => Tok::KwThen,
        "else" => Tok::KwElse,
        "elseif" => Tok::KwElseif,
        "let" => Tok::KwLet,
        "in" => Tok::KwIn,
        "set" => Tok::KwSet,
        "of" => Tok::KwOf,
        "map" => Tok::KwMap,
        "to" => Tok::KwTo,
        "nat" => Tok::KwNat,
        "nat1" => Tok::KwNat1,
        "int" => Tok::KwInt,
        "bool" => Tok::KwBool,
        "seq" | "seq1" => Tok::KwSeq,
        "and" => Tok::KwAnd,
        "or" => Tok::KwOr,
        "true" => Tok::KwTrue,
        "false" => Tok::KwFalse,
        "dom" => Tok::KwDom,
        "card" => Tok::KwCard,
        "union" => Tok::KwUnion,
        "forall" => Tok::KwForall,
        _ => return None,
    })
}

fn annotation(name: &str) -> Tok {
    match name {
        "IsaMeasure" => Tok::AnnIsaMeasure,
        "Witness" => Tok::AnnWitness,
        "IsaMutualRec" => Tok::AnnIsaMutualRec,
        "Lemma" => Tok::AnnLemma,
        other => Tok::AnnOther(other.to_string()),
    }
}

struct Lexer<'a> {
    chars: Vec<char>,
    i: usize,
    line: u32,
    col: u32,
    out: Vec<Token>,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { chars: src.chars().collect(), i: 0, line: 1, col: 1, out: Vec::new(), _src: src }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.i + k).copied()
    }

    fn pos(&self) -> Pos {
        Pos::new(self.line, self.col)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.i).copied()?;
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(k, c)| self.peek(k) == Some(c))
    }

    fn push(&mut self, tok: Tok, pos: Pos) {
        self.out.push(Token { tok, pos });
    }

    fn skip_to_eol(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    /// Lexes a whole file.
    fn run(&mut self) -> Result<(), LexError> {
        // Paren depth of the annotation currently being lexed, if any.
        let mut ann_depth: Option<i64> = None;
        while let Some(c) = self.peek(0) {
            if c == '\n' {
                self.bump();
                if let Some(depth) = ann_depth {
                    if depth > 0 && self.continuation_follows() {
                        // Step over leading blanks and the `--` of the next line.
                        while matches!(self.peek(0), Some(' ' | '\t' | '\r')) {
                            self.bump();
                        }
                        self.bump();
                        self.bump();
                        continue;
                    }
                    ann_depth = None;
                }
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if self.starts_with("--") {
                if ann_depth.is_some() {
                    // A comment nested inside an annotation ends it.
                    self.skip_to_eol();
                    continue;
                }
                if self.peek(2) == Some('@') && self.peek(3).is_some_and(|c| c.is_ascii_alphabetic()) {
                    let pos = self.pos();
                    self.bump();
                    self.bump();
                    self.bump();
                    let name = self.take_word();
                    self.push(annotation(&name), pos);
                    ann_depth = Some(0);
                    continue;
                }
                self.skip_to_eol();
                continue;
            }
            let pos = self.pos();
            let tok = self.lex_token()?;
            if let Some(depth) = ann_depth.as_mut() {
                match tok {
                    Tok::LParen => *depth += 1,
                    Tok::RParen => *depth -= 1,
                    _ => {}
                }
            }
            self.push(tok, pos);
        }
        Ok(())
    }

    /// True when the next line is a plain `--` comment (not a new annotation).
    fn continuation_follows(&self) -> bool {
        let mut k = 0;
        while matches!(self.peek(k), Some(' ' | '\t' | '\r')) {
            k += 1;
        }
        self.peek(k) == Some('-') && self.peek(k + 1) == Some('-') && self.peek(k + 2) != Some('@')
    }

    fn take_word(&mut self) -> String {
        let mut word = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_alphanumeric() || c == '_' || c == '\'' {
                word.push(c);
                self.bump();
            } else {
                break;
            }
        }
        word
    }

    fn lex_token(&mut self) -> Result<Tok, LexError> {
        let pos = self.pos();
        let c = self.peek(0).expect("caller checked for input");
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(d) = self.peek(0).filter(char::is_ascii_digit) {
                digits.push(d);
                self.bump();
            }
            return Ok(Tok::Int(digits.parse().expect("ascii digits")));
        }
        if c.is_alphabetic() {
            if self.starts_with("mk_") {
                for _ in 0..3 {
                    self.bump();
                }
                return Ok(Tok::KwMkTuple);
            }
            if self.starts_with("is_") && self.peek(3) == Some('(') {
                for _ in 0..3 {
                    self.bump();
                }
                return Ok(Tok::KwIsType);
            }
            let word = self.take_word();
            return Ok(keyword(&word).unwrap_or(Tok::Ident(word)));
        }
        if c == '@' && self.peek(1).is_some_and(char::is_alphabetic) {
            self.bump();
            return Ok(Tok::TypeVar(self.take_word()));
        }
        const SYMBOLS: &[(&str, Tok)] = &[
            ("{|->}", Tok::EmptyMap),
            ("|->", Tok::MapsTo),
            ("<-:", Tok::DomAntiRestrict),
            ("==", Tok::DefEq),
            ("=>", Tok::Implies),
            ("->", Tok::Arrow),
            ("<>", Tok::Ne),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            ("[", Tok::LBracket),
            ("]", Tok::RBracket),
            (",", Tok::Comma),
            (";", Tok::Semi),
            (":", Tok::Colon),
            ("&", Tok::Amp),
            ("|", Tok::Bar),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
            ("\\", Tok::Backslash),
            ("=", Tok::Eq),
            ("<", Tok::Lt),
            (">", Tok::Gt),
        ];
        // `{|->}` may contain blanks in hand-written sources: `{ |-> }`.
        if c == '{' {
            let mut k = 1;
            while matches!(self.peek(k), Some(' ' | '\t')) {
                k += 1;
            }
            if ["|", "-", ">"].iter().enumerate().all(|(j, s)| self.peek(k + j) == s.chars().next()) {
                let mut e = k + 3;
                while matches!(self.peek(e), Some(' ' | '\t')) {
                    e += 1;
                }
                if self.peek(e) == Some('}') {
                    for _ in 0..=e {
                        self.bump();
                    }
                    return Ok(Tok::EmptyMap);
                }
            }
        }
        for (text, tok) in SYMBOLS {
            if self.starts_with(text) {
                for _ in 0..text.chars().count() {
                    self.bump();
                }
                return Ok(tok.clone());
            }
        }
        Err(LexError::IllegalCharacter { ch: c, pos })
    }
}

/// Splits source text into tokens.
pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer::new(text);
    lexer.run()?;
    Ok(lexer.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    fn id(s: &str) -> Tok {
        Tok::Ident(s.into())
    }

    #[test]
    fn measure_clause() {
        assert_eq!(toks("measure n;"), vec![Tok::KwMeasure, id("n"), Tok::Semi]);
    }

    #[test]
    fn witness_annotation() {
        assert_eq!(
            toks("--@Witness(sumset({ 1 }))"),
            vec![
                Tok::AnnWitness,
                Tok::LParen,
                id("sumset"),
                Tok::LParen,
                Tok::LBrace,
                Tok::Int(1.into()),
                Tok::RBrace,
                Tok::RParen,
                Tok::RParen,
            ]
        );
    }

    #[test]
    fn empty_map() {
        assert_eq!(toks("{|->}"), vec![Tok::EmptyMap]);
        assert_eq!(toks("{ |-> }"), vec![Tok::EmptyMap]);
        assert_eq!(toks("{ 1 |-> 1 }").len(), 5);
    }

    #[test]
    fn plain_comments_dropped() {
        assert_eq!(toks("x -- a comment\ny"), vec![id("x"), id("y")]);
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("fact(n) ==\n  n").unwrap();
        assert_eq!(t[0].pos, Pos::new(1, 1));
        assert_eq!(t[4].pos, Pos::new(1, 9));
        assert_eq!(t[5].pos, Pos::new(2, 3));
    }

    #[test]
    fn primes_and_type_vars() {
        assert_eq!(
            toks("lex_prod[@A] z' mk_(a)"),
            vec![
                id("lex_prod"),
                Tok::LBracket,
                Tok::TypeVar("A".into()),
                Tok::RBracket,
                id("z'"),
                Tok::KwMkTuple,
                Tok::LParen,
                id("a"),
                Tok::RParen
            ]
        );
    }

    #[test]
    fn annotation_continues_on_comment_lines() {
        let t = toks("--@IsaMeasure({ x |\n  --  x : nat })\nmeasure");
        assert_eq!(t.last(), Some(&Tok::KwMeasure));
        assert!(t.contains(&Tok::KwNat));
    }

    #[test]
    fn balanced_annotation_does_not_swallow_next_comment() {
        let t = toks("--@Witness(f(1))\n-- ordinary\nx");
        assert_eq!(t.last(), Some(&id("x")));
        assert_eq!(t.len(), 8);
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("x\n  # y").unwrap_err();
        assert_eq!(err, LexError::IllegalCharacter { ch: '#', pos: Pos::new(2, 3) });
    }
}
