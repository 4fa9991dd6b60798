use std::collections::HashSet;
use std::sync::Arc;

use super::lexer::{tokenize, Tok, Token};
use super::{mint, Node, NodeKind, ParseError, Pos, Role, Span};

const KEYWORDS: [&str; 9] = ["module", "class", "import", "var", "if", "else", "while", "return", "print"];

/// Parses one source file; its single top-level module is the root.
pub fn parse_file(path: &str, text: &str) -> Result<Node, ParseError> {
    let tokens = tokenize(path, text)?;
    let mut p = Parser { file: Arc::from(path), tokens, pos: 0 };
    let mut root = p.module()?;
    if !matches!(p.peek(), Tok::Eof) {
        return p.error("expected end of file after the top-level module");
    }
    mint(&mut root, None);
    Ok(root)
}

struct Parser {
    file: Arc<str>,
    tokens: Vec<Token>,
    pos: usize,
}

/// Binary operators by precedence level, loosest first.
const LEVELS: [&[&str]; 5] = [&["||"], &["&&"], &["==", "!="], &["<", "<=", ">", ">="], &["+", "-"]];
const TIGHTEST: &[&str] = &["*", "/", "%"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn bump(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn last_end(&self) -> Pos {
        self.tokens[self.pos.saturating_sub(1)].end
    }

    fn start(&self) -> Pos {
        self.tokens[self.pos].start
    }

    fn span(&self, start: Pos) -> Span {
        Span { file: self.file.clone(), start, end: self.last_end() }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let t = &self.tokens[self.pos];
        let found = match &t.tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of file".into(),
        };
        Err(ParseError {
            file: self.file.to_string(),
            line: t.start.line,
            column: t.start.col,
            message: format!("{}, found {found}", message.into()),
        })
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{p}`"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected `{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => self.error("expected identifier"),
        }
    }

    fn module(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect_keyword("module")?;
        let mut node = Node::new(NodeKind::Module, Role::Decl);
        node.name = Some(self.ident()?);
        self.expect_punct("{")?;
        let mut seen = HashSet::new();
        while !self.is_punct("}") {
            let at = self.pos;
            let child = if self.is_keyword("module") {
                self.module()?
            } else if self.is_keyword("class") {
                self.class()?
            } else {
                return self.error("expected `module`, `class` or `}`");
            };
            if !seen.insert(child.name.clone()) {
                self.pos = at + 1;
                return self.error("duplicate declaration name");
            }
            node.children.push(Arc::new(child));
        }
        self.bump();
        node.span = self.span(start);
        Ok(node)
    }

    fn class(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect_keyword("class")?;
        let mut node = Node::new(NodeKind::Class, Role::Decl);
        node.name = Some(self.ident()?);
        self.expect_punct("{")?;
        let mut imports = 0;
        let mut seen = HashSet::new();
        while !self.is_punct("}") {
            if self.is_keyword("import") {
                let import = self.import(imports)?;
                imports += 1;
                node.children.push(Arc::new(import));
            } else {
                let at = self.pos;
                let method = self.method()?;
                if !seen.insert(method.name.clone()) {
                    self.pos = at;
                    return self.error("duplicate method name");
                }
                node.children.push(Arc::new(method));
            }
        }
        self.bump();
        node.span = self.span(start);
        Ok(node)
    }

    fn import(&mut self, index: usize) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect_keyword("import")?;
        let mut node = Node::new(NodeKind::NameImport, Role::Step("import", Some(index)));
        let mut name = self.qualified_ref()?;
        name.role = Role::Step("name", None);
        node.children.push(Arc::new(name));
        self.expect_punct(";")?;
        node.span = self.span(start);
        Ok(node)
    }

    /// `a.b.C` as a chain of references linked through `prefix`.
    fn qualified_ref(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut node = Node::new(NodeKind::ReferenceExpression, Role::Step("prefix", None));
        node.name = Some(self.ident()?);
        node.span = self.span(start);
        while self.is_punct(".") {
            self.bump();
            let mut outer = Node::new(NodeKind::ReferenceExpression, Role::Step("prefix", None));
            outer.name = Some(self.ident()?);
            outer.children.push(Arc::new(node));
            outer.span = self.span(start);
            node = outer;
        }
        Ok(node)
    }

    fn method(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        let mut node = Node::new(NodeKind::Method, Role::Decl);
        node.name = Some(self.ident().or_else(|_| self.error("expected `import`, method or `}`"))?);
        self.expect_punct("(")?;
        let mut names = HashSet::new();
        if !self.is_punct(")") {
            loop {
                let pstart = self.start();
                let mut param = Node::new(NodeKind::Parameter, Role::Step("param", Some(node.children.len())));
                let name = self.ident()?;
                if !names.insert(name.clone()) {
                    self.pos -= 1;
                    return self.error("duplicate parameter name");
                }
                param.name = Some(name);
                param.span = self.span(pstart);
                node.children.push(Arc::new(param));
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        node.children.push(Arc::new(self.block("body")?));
        node.span = self.span(start);
        Ok(node)
    }

    fn block(&mut self, role: &'static str) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect_punct("{")?;
        let mut node = Node::new(NodeKind::Block, Role::Step(role, None));
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error("expected `}`");
            }
            let stmt = self.statement(node.children.len())?;
            node.children.push(Arc::new(stmt));
        }
        self.bump();
        node.span = self.span(start);
        Ok(node)
    }

    fn statement(&mut self, index: usize) -> Result<Node, ParseError> {
        let start = self.start();
        let role = Role::Item(index);
        let mut node;
        if self.is_keyword("var") {
            self.bump();
            node = Node::new(NodeKind::DeclarationStatement, role);
            node.name = Some(self.ident()?);
            self.expect_punct("=")?;
            node.children.push(Arc::new(self.expression("value")?));
            self.expect_punct(";")?;
        } else if self.is_keyword("if") {
            node = self.if_statement(role)?;
        } else if self.is_keyword("while") {
            self.bump();
            node = Node::new(NodeKind::LoopStatement, role);
            self.expect_punct("(")?;
            node.children.push(Arc::new(self.expression("cond")?));
            self.expect_punct(")")?;
            node.children.push(Arc::new(self.block("body")?));
        } else if self.is_keyword("return") {
            self.bump();
            node = Node::new(NodeKind::ReturnStatement, role);
            if !self.is_punct(";") {
                node.children.push(Arc::new(self.expression("value")?));
            }
            self.expect_punct(";")?;
        } else if self.is_keyword("print") {
            self.bump();
            node = Node::new(NodeKind::PrintStatement, role);
            self.expect_punct("(")?;
            if !self.is_punct(")") {
                loop {
                    let i = node.children.len();
                    let mut arg = self.expression("arg")?;
                    arg.role = Role::Step("arg", Some(i));
                    node.children.push(Arc::new(arg));
                    if self.is_punct(",") {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            self.expect_punct(";")?;
        } else if matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Punct("=")) {
            node = Node::new(NodeKind::ExpressionStatement, role);
            let lstart = self.start();
            let mut target = Node::new(NodeKind::ReferenceExpression, Role::Step("lhs", None));
            target.name = Some(self.ident()?);
            target.span = self.span(lstart);
            self.bump();
            let value = self.expression("rhs")?;
            let mut assign = Node::new(NodeKind::BinaryExpression, Role::Step("expr", None));
            assign.token = Some("=".into());
            assign.children = vec![Arc::new(target), Arc::new(value)];
            assign.span = self.span(lstart);
            node.children.push(Arc::new(assign));
            self.expect_punct(";")?;
        } else {
            node = Node::new(NodeKind::ExpressionStatement, role);
            node.children.push(Arc::new(self.expression("expr")?));
            self.expect_punct(";")?;
        }
        node.span = self.span(start);
        Ok(node)
    }

    fn if_statement(&mut self, role: Role) -> Result<Node, ParseError> {
        let start = self.start();
        self.expect_keyword("if")?;
        let mut node = Node::new(NodeKind::IfStatement, role);
        self.expect_punct("(")?;
        node.children.push(Arc::new(self.expression("cond")?));
        self.expect_punct(")")?;
        node.children.push(Arc::new(self.block("then")?));
        if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                let bstart = self.start();
                let nested = self.if_statement(Role::Item(0))?;
                let mut block = Node::new(NodeKind::Block, Role::Step("else", None));
                block.children.push(Arc::new(nested));
                block.span = self.span(bstart);
                node.children.push(Arc::new(block));
            } else {
                node.children.push(Arc::new(self.block("else")?));
            }
        }
        node.span = self.span(start);
        Ok(node)
    }

    fn expression(&mut self, role: &'static str) -> Result<Node, ParseError> {
        let mut e = self.binary(0)?;
        e.role = Role::Step(role, None);
        Ok(e)
    }

    fn binary(&mut self, level: usize) -> Result<Node, ParseError> {
        let ops: &[&str] = if level < LEVELS.len() { LEVELS[level] } else { TIGHTEST };
        let next = |p: &mut Parser| if level < LEVELS.len() { p.binary(level + 1) } else { p.primary() };
        let start = self.start();
        let mut lhs = next(self)?;
        loop {
            let op = match self.peek() {
                Tok::Punct(p) if ops.contains(p) => *p,
                _ => return Ok(lhs),
            };
            self.bump();
            let mut rhs = next(self)?;
            lhs.role = Role::Step("lhs", None);
            rhs.role = Role::Step("rhs", None);
            let mut bin = Node::new(NodeKind::BinaryExpression, Role::Step("expr", None));
            bin.token = Some(op.to_string());
            bin.children = vec![Arc::new(lhs), Arc::new(rhs)];
            bin.span = self.span(start);
            lhs = bin;
        }
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let start = self.start();
        match self.peek().clone() {
            Tok::Int(digits) => {
                self.bump();
                self.int_literal(&digits, start)
            }
            Tok::Punct("-") if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(digits) = self.peek().clone() else { unreachable!() };
                self.bump();
                self.int_literal(&format!("-{digits}"), start)
            }
            Tok::Str(s) => {
                self.bump();
                let mut n = Node::new(NodeKind::StringLiteral, Role::Step("expr", None));
                n.token = Some(s);
                n.span = self.span(start);
                Ok(n)
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.binary(0)?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            Tok::Ident(_) => {
                let mut callee = self.qualified_ref()?;
                if !self.is_punct("(") {
                    return Ok(callee);
                }
                callee.role = Role::Step("callee", None);
                self.bump();
                let mut call = Node::new(NodeKind::CallExpression, Role::Step("expr", None));
                call.name = callee.dotted_name();
                call.children.push(Arc::new(callee));
                if !self.is_punct(")") {
                    loop {
                        let i = call.children.len() - 1;
                        let mut arg = self.binary(0)?;
                        arg.role = Role::Step("arg", Some(i));
                        call.children.push(Arc::new(arg));
                        if self.is_punct(",") {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                call.span = self.span(start);
                Ok(call)
            }
            _ => self.error("expected expression"),
        }
    }

    fn int_literal(&mut self, text: &str, start: Pos) -> Result<Node, ParseError> {
        if text.parse::<i64>().is_err() {
            self.pos -= 1;
            return self.error("integer literal out of range");
        }
        let mut n = Node::new(NodeKind::IntLiteral, Role::Step("expr", None));
        n.token = Some(text.to_string());
        n.span = self.span(start);
        Ok(n)
    }
}
