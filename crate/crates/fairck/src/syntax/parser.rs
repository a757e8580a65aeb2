//! Recursive-descent parser for the `.st` language.

use std::collections::HashSet;

use super::lexer::{tokenize, Tok};
use super::{ParseError, Pos, SourceFile, Term, TermId, TypeDef, Warning, KEYWORDS};
use crate::system::Polarity;

/// Parses a complete source file. Labels are validated against the declared
/// alphabet and type names checked for duplicates; references to undefined
/// names are left to elaboration, since equations may be mutually recursive.
pub fn parse(text: &str) -> Result<SourceFile, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        at: 0,
        file: SourceFile {
            alphabet: Vec::new(),
            typedefs: Vec::new(),
            warnings: Vec::new(),
            terms: Vec::new(),
        },
    };
    parser.file()?;
    Ok(parser.file)
}

struct Parser {
    tokens: Vec<(Tok, Pos)>,
    at: usize,
    file: SourceFile,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].0
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            expected: format!("{} (found {})", expected.into(), self.peek().describe()),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Pos, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().1)
        } else {
            self.fail(tok.describe())
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Pos, ParseError> {
        match self.peek() {
            Tok::Ident(name) if name == word => Ok(self.bump().1),
            _ => self.fail(format!("`{word}`")),
        }
    }

    /// An identifier that is not a keyword, for type names and labels.
    fn ident(&mut self, role: &str) -> Result<(String, Pos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                let pos = self.bump().1;
                Ok((name, pos))
            }
            _ => self.fail(format!("a {role}")),
        }
    }

    fn file(&mut self) -> Result<(), ParseError> {
        self.alphabet_decl()?;
        let mut seen: HashSet<String> = HashSet::new();
        loop {
            match self.peek() {
                Tok::Eof => return Ok(()),
                Tok::Ident(name) if name == "type" => {
                    self.bump();
                    let (name, pos) = self.ident("type name")?;
                    if !seen.insert(name.clone()) {
                        return Err(ParseError::DuplicateTypeName { pos, name });
                    }
                    self.expect(Tok::Eq)?;
                    let term = self.term()?;
                    self.file.typedefs.push(TypeDef { name, pos, term });
                }
                _ => return self.fail("`type` or end of file"),
            }
        }
    }

    fn alphabet_decl(&mut self) -> Result<(), ParseError> {
        let decl_pos = self.keyword("alphabet")?;
        self.expect(Tok::LBrace)?;
        loop {
            let (label, pos) = self.ident("label")?;
            if self.file.alphabet.contains(&label) {
                return Err(ParseError::DuplicateAlphabetLabel { pos, label });
            }
            self.file.alphabet.push(label);
            match self.bump() {
                (Tok::Comma, _) => continue,
                (Tok::RBrace, _) => break,
                (tok, pos) => {
                    return Err(ParseError::Syntax {
                        pos,
                        expected: format!("`,` or `}}` (found {})", tok.describe()),
                    })
                }
            }
        }
        if self.file.alphabet.len() == 1 {
            self.file.warnings.push(Warning {
                pos: decl_pos,
                message: "singleton alphabet: every choice is trivial".to_string(),
            });
        }
        Ok(())
    }

    fn term(&mut self) -> Result<TermId, ParseError> {
        let pos = self.pos();
        let first = self.seq()?;
        let mut operands = vec![first];
        while *self.peek() == Tok::Plus {
            self.bump();
            operands.push(self.seq()?);
        }
        if operands.len() == 1 {
            Ok(operands.pop().unwrap())
        } else {
            Ok(self.file.push_term(Term::Sum(operands), pos))
        }
    }

    fn seq(&mut self) -> Result<TermId, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) if name == "nil" => {
                self.bump();
                Ok(self.file.push_term(Term::Nil, pos))
            }
            Tok::Ident(name) if name == "end" => {
                self.bump();
                let polarity = self.polarity()?;
                Ok(self.file.push_term(Term::End(polarity), pos))
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(self.file.push_term(Term::Ref(name), pos))
            }
            Tok::Bang | Tok::Query => {
                let polarity = self.polarity()?;
                let labels = self.labelset()?;
                self.expect(Tok::Dot)?;
                let body = self.seq()?;
                Ok(self
                    .file
                    .push_term(Term::Prefix { polarity, labels, body }, pos))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => self.fail("a term"),
        }
    }

    fn polarity(&mut self) -> Result<Polarity, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Polarity::Out)
            }
            Tok::Query => {
                self.bump();
                Ok(Polarity::In)
            }
            _ => self.fail("`!` or `?`"),
        }
    }

    fn labelset(&mut self) -> Result<Vec<String>, ParseError> {
        if *self.peek() != Tok::LBrace {
            let (label, pos) = self.ident("label")?;
            self.check_label(&label, pos)?;
            return Ok(vec![label]);
        }
        self.bump();
        let mut labels = Vec::new();
        loop {
            let (label, pos) = self.ident("label")?;
            self.check_label(&label, pos)?;
            labels.push(label);
            match self.bump() {
                (Tok::Comma, _) => continue,
                (Tok::RBrace, _) => return Ok(labels),
                (tok, pos) => {
                    return Err(ParseError::Syntax {
                        pos,
                        expected: format!("`,` or `}}` (found {})", tok.describe()),
                    })
                }
            }
        }
    }

    fn check_label(&self, label: &str, pos: Pos) -> Result<(), ParseError> {
        if self.file.alphabet.iter().any(|l| l == label) {
            Ok(())
        } else {
            Err(ParseError::UnknownLabel {
                pos,
                label: label.to_string(),
            })
        }
    }
}
