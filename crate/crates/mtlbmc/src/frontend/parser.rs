//! Lexer and recursive-descent parser.

use super::ast::*;
use super::FrontendError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Shared,
    Int_,
    Local,
    If,
    Else,
    While,
    Assert,
    Assume,
    Spawn,
    Join,
    Thread,
    Main,
    Nondet,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Assign,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Shared => write!(f, "`shared`"),
            Tok::Int_ => write!(f, "`int`"),
            Tok::Local => write!(f, "`local`"),
            Tok::If => write!(f, "`if`"),
            Tok::Else => write!(f, "`else`"),
            Tok::While => write!(f, "`while`"),
            Tok::Assert => write!(f, "`assert`"),
            Tok::Assume => write!(f, "`assume`"),
            Tok::Spawn => write!(f, "`spawn`"),
            Tok::Join => write!(f, "`join`"),
            Tok::Thread => write!(f, "`thread`"),
            Tok::Main => write!(f, "`main`"),
            Tok::Nondet => write!(f, "`nondet`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::LBrace => write!(f, "`{{`"),
            Tok::RBrace => write!(f, "`}}`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::Assign => write!(f, "`=`"),
            Tok::EqEq => write!(f, "`==`"),
            Tok::Ne => write!(f, "`!=`"),
            Tok::Lt => write!(f, "`<`"),
            Tok::Le => write!(f, "`<=`"),
            Tok::Gt => write!(f, "`>`"),
            Tok::Ge => write!(f, "`>=`"),
            Tok::Plus => write!(f, "`+`"),
            Tok::Minus => write!(f, "`-`"),
            Tok::Star => write!(f, "`*`"),
            Tok::AndAnd => write!(f, "`&&`"),
            Tok::OrOr => write!(f, "`||`"),
            Tok::Bang => write!(f, "`!`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

struct Token {
    tok: Tok,
    pos: Pos,
}

fn lex(src: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;
    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            out.push(Token {
                tok: $tok,
                pos: Pos { line, col },
            });
            i += $len;
            col += $len as u32;
        }};
    }
    while i < bytes.len() {
        let c = bytes[i] as char;
        let next = if i + 1 < bytes.len() {
            bytes[i + 1] as char
        } else {
            '\0'
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '/' if next == '/' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '(' => push!(Tok::LParen, 1),
            ')' => push!(Tok::RParen, 1),
            '{' => push!(Tok::LBrace, 1),
            '}' => push!(Tok::RBrace, 1),
            ';' => push!(Tok::Semi, 1),
            '+' => push!(Tok::Plus, 1),
            '-' => push!(Tok::Minus, 1),
            '*' => push!(Tok::Star, 1),
            '=' if next == '=' => push!(Tok::EqEq, 2),
            '=' => push!(Tok::Assign, 1),
            '!' if next == '=' => push!(Tok::Ne, 2),
            '!' => push!(Tok::Bang, 1),
            '<' if next == '=' => push!(Tok::Le, 2),
            '<' => push!(Tok::Lt, 1),
            '>' if next == '=' => push!(Tok::Ge, 2),
            '>' => push!(Tok::Gt, 1),
            '&' if next == '&' => push!(Tok::AndAnd, 2),
            '|' if next == '|' => push!(Tok::OrOr, 2),
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                let n: i64 = text.parse().map_err(|_| FrontendError::Syntax {
                    pos: Pos { line, col },
                    message: format!("integer literal `{text}` out of range"),
                })?;
                out.push(Token {
                    tok: Tok::Int(n),
                    pos: Pos { line, col },
                });
                col += (i - start) as u32;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                let text = &src[start..i];
                let tok = match text {
                    "shared" => Tok::Shared,
                    "int" => Tok::Int_,
                    "local" => Tok::Local,
                    "if" => Tok::If,
                    "else" => Tok::Else,
                    "while" => Tok::While,
                    "assert" => Tok::Assert,
                    "assume" => Tok::Assume,
                    "spawn" => Tok::Spawn,
                    "join" => Tok::Join,
                    "thread" => Tok::Thread,
                    "main" => Tok::Main,
                    "nondet" => Tok::Nondet,
                    _ => Tok::Ident(text.to_string()),
                };
                out.push(Token {
                    tok,
                    pos: Pos { line, col },
                });
                col += (i - start) as u32;
            }
            _ => {
                return Err(FrontendError::Syntax {
                    pos: Pos { line, col },
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        pos: Pos { line, col },
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.cursor].pos
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.cursor].tok.clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), FrontendError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(FrontendError::Syntax {
                pos: self.pos(),
                message: format!("expected {}, found {}", want, self.peek()),
            })
        }
    }

    fn expect_ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            other => Err(FrontendError::Syntax {
                pos: self.pos(),
                message: format!("expected identifier, found {other}"),
            }),
        }
    }

    fn program(&mut self) -> Result<Program, FrontendError> {
        let mut shared = Vec::new();
        while *self.peek() == Tok::Shared {
            shared.push(self.shared_decl()?);
        }
        let mut threads = Vec::new();
        while *self.peek() == Tok::Thread {
            let pos = self.pos();
            self.advance();
            let name = self.expect_ident()?;
            let body = self.block()?;
            threads.push(ThreadDef { name, body, pos });
        }
        self.expect(Tok::Main)?;
        let main = self.block()?;
        if *self.peek() != Tok::Eof {
            return Err(FrontendError::Syntax {
                pos: self.pos(),
                message: format!("expected end of input, found {}", self.peek()),
            });
        }
        Ok(Program {
            shared,
            threads,
            main,
        })
    }

    fn shared_decl(&mut self) -> Result<SharedDecl, FrontendError> {
        let pos = self.pos();
        self.expect(Tok::Shared)?;
        self.expect(Tok::Int_)?;
        let name = self.expect_ident()?;
        let init = if *self.peek() == Tok::Assign {
            self.advance();
            let neg = if *self.peek() == Tok::Minus {
                self.advance();
                true
            } else {
                false
            };
            match self.advance() {
                Tok::Int(n) => {
                    if neg {
                        -n
                    } else {
                        n
                    }
                }
                other => {
                    return Err(FrontendError::Syntax {
                        pos,
                        message: format!("expected integer initializer, found {other}"),
                    })
                }
            }
        } else {
            0
        };
        self.expect(Tok::Semi)?;
        Ok(SharedDecl { name, init, pos })
    }

    fn block(&mut self) -> Result<Block, FrontendError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(FrontendError::Syntax {
                    pos: self.pos(),
                    message: "unterminated block".to_string(),
                });
            }
            stmts.push(self.stmt()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(Block { stmts })
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Local => {
                self.advance();
                self.expect(Tok::Int_)?;
                let name = self.expect_ident()?;
                let init = if *self.peek() == Tok::Assign {
                    self.advance();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect(Tok::Semi)?;
                StmtKind::Local { name, init }
            }
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Else {
                    self.advance();
                    Some(self.block()?)
                } else {
                    None
                };
                StmtKind::If {
                    cond,
                    then_branch,
                    else_branch,
                }
            }
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                let body = self.block()?;
                StmtKind::While { cond, body }
            }
            Tok::Assert => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Assert { cond }
            }
            Tok::Assume => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                StmtKind::Assume { cond }
            }
            Tok::Join => {
                self.advance();
                let handle = self.expect_ident()?;
                self.expect(Tok::Semi)?;
                StmtKind::Join { handle }
            }
            Tok::Ident(name) => {
                self.advance();
                self.expect(Tok::Assign)?;
                if *self.peek() == Tok::Spawn {
                    self.advance();
                    let thread = self.expect_ident()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Spawn {
                        handle: name,
                        thread,
                    }
                } else {
                    let value = self.expr()?;
                    self.expect(Tok::Semi)?;
                    StmtKind::Assign { name, value }
                }
            }
            other => {
                return Err(FrontendError::Syntax {
                    pos,
                    message: format!("expected statement, found {other}"),
                })
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.and_expr()?;
        while *self.peek() == Tok::OrOr {
            self.advance();
            let rhs = self.and_expr()?;
            lhs = Expr::Binary {
                op: BinOp::Or,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.equality_expr()?;
        while *self.peek() == Tok::AndAnd {
            self.advance();
            let rhs = self.equality_expr()?;
            lhs = Expr::Binary {
                op: BinOp::And,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn equality_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.relational_expr()?;
        loop {
            let op = match self.peek() {
                Tok::EqEq => BinOp::Eq,
                Tok::Ne => BinOp::Ne,
                _ => break,
            };
            self.advance();
            let rhs = self.relational_expr()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn relational_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.additive_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Lt => BinOp::Lt,
                Tok::Le => BinOp::Le,
                Tok::Gt => BinOp::Gt,
                Tok::Ge => BinOp::Ge,
                _ => break,
            };
            self.advance();
            let rhs = self.additive_expr()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn additive_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.multiplicative_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.multiplicative_expr()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn multiplicative_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary_expr()?;
        while *self.peek() == Tok::Star {
            self.advance();
            let rhs = self.unary_expr()?;
            lhs = Expr::Binary {
                op: BinOp::Mul,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> Result<Expr, FrontendError> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(Expr::Unary {
                    op: UnOp::Not,
                    operand: Box::new(self.unary_expr()?),
                })
            }
            Tok::Minus => {
                self.advance();
                Ok(Expr::Unary {
                    op: UnOp::Neg,
                    operand: Box::new(self.unary_expr()?),
                })
            }
            _ => self.primary_expr(),
        }
    }

    fn primary_expr(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        match self.advance() {
            Tok::Int(n) => Ok(Expr::Int(n)),
            Tok::Ident(name) => Ok(Expr::Var { name, pos }),
            Tok::Nondet => {
                self.expect(Tok::LParen)?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Nondet)
            }
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => Err(FrontendError::Syntax {
                pos,
                message: format!("expected expression, found {other}"),
            }),
        }
    }
}

/// Parses source text into an AST. Name resolution runs separately.
pub fn parse_text(src: &str) -> Result<Program, FrontendError> {
    let tokens = lex(src)?;
    Parser { tokens, cursor: 0 }.program()
}
