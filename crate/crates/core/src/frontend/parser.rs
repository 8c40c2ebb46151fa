//! Recursive-descent parser with precedence climbing for binary expressions.
//!
//! Statements end at a newline, a `;`, or the closing `}` of their block. A
//! syntax error abandons the current top-level declaration; parsing resumes at
//! the next one so several errors can surface in a single run.

use super::ast::*;
use super::lexer::{Keyword, Token, TokenKind};
use super::Span;
use crate::diagnostics::{codes, Diagnostic, Sink};

type PResult<T> = Result<T, ()>;

pub struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    origin: Origin,
    next_id: ExprId,
    sink: Sink<'a>,
    eof: Token,
}

/// Parses a token stream into a module. `files` names the inputs that spans refer to.
pub fn parse(tokens: Vec<Token>, files: &[String]) -> (SourceModule, Vec<Diagnostic>) {
    let mut parser = Parser::new(tokens, files, Origin::User, 0);
    let declarations = parser.parse_declarations();
    let next_expr_id = parser.next_id;
    (SourceModule { declarations, next_expr_id }, parser.sink.diagnostics)
}

impl<'a> Parser<'a> {
    pub fn new(tokens: Vec<Token>, files: &'a [String], origin: Origin, next_id: ExprId) -> Self {
        let mut sink = Sink::new(files, 0);
        let tokens = merge_dollar_identifiers(tokens, &mut sink);
        let end = tokens.last().map(|t| t.span).unwrap_or_default();
        let eof_span = Span { offset: end.offset + end.len, len: 0, ..end };
        let eof = Token { kind: TokenKind::Newline, text: String::new(), span: eof_span };
        Parser { tokens, pos: 0, origin, next_id, sink, eof }
    }

    pub fn next_expr_id(&self) -> ExprId {
        self.next_id
    }

    pub fn into_diagnostics(self) -> Vec<Diagnostic> {
        self.sink.diagnostics
    }

    // ---- token helpers -------------------------------------------------

    fn peek(&self) -> &Token {
        self.tokens.get(self.pos).unwrap_or(&self.eof)
    }

    fn peek_nth(&self, n: usize) -> &Token {
        self.tokens.get(self.pos + n).unwrap_or(&self.eof)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if !self.at_end() {
            self.pos += 1;
        }
        tok
    }

    fn check(&self, text: &str) -> bool {
        self.peek().is(text)
    }

    fn check_kw(&self, kw: Keyword) -> bool {
        self.peek().is_keyword(kw)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.check(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.check_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn skip_newlines(&mut self) {
        while !self.at_end() && self.peek().kind == TokenKind::Newline {
            self.pos += 1;
        }
    }

    fn skip_separators(&mut self) {
        while !self.at_end() && (self.peek().kind == TokenKind::Newline || self.peek().is(";")) {
            self.pos += 1;
        }
    }

    fn describe(tok: &Token) -> String {
        match tok.kind {
            TokenKind::Newline if tok.text.is_empty() => "end of file".to_string(),
            TokenKind::Newline => "newline".to_string(),
            _ => format!("'{}'", tok.text),
        }
    }

    fn error<T>(&mut self, expected: &str) -> PResult<T> {
        let tok = self.peek().clone();
        let message = if tok.kind == TokenKind::Invalid {
            format!("Unexpected character '{}'; expected {}.", tok.text, expected)
        } else {
            format!("Expected {}, found {}.", expected, Self::describe(&tok))
        };
        let code = if tok.kind == TokenKind::Invalid { codes::INVALID_LITERAL } else { codes::SYNTAX };
        self.sink.error(code, message, tok.span);
        Err(())
    }

    fn expect(&mut self, text: &str) -> PResult<Token> {
        if self.check(text) {
            Ok(self.advance())
        } else {
            self.error(&format!("'{text}'"))
        }
    }

    fn expect_kw(&mut self, kw: Keyword, text: &str) -> PResult<Token> {
        if self.check_kw(kw) {
            Ok(self.advance())
        } else {
            self.error(&format!("'{text}'"))
        }
    }

    fn identifier(&mut self) -> PResult<Ident> {
        if self.peek().kind == TokenKind::Identifier {
            let tok = self.advance();
            Ok(Ident::new(tok.text, tok.span))
        } else {
            self.error("an identifier")
        }
    }

    fn fresh_id(&mut self) -> ExprId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn mk(&mut self, kind: ExprKind, span: Span) -> Expr {
        Expr { id: self.fresh_id(), kind, span }
    }

    fn prev_span(&self) -> Span {
        self.tokens.get(self.pos.saturating_sub(1)).map(|t| t.span).unwrap_or_default()
    }

    // ---- top level -----------------------------------------------------

    pub fn parse_declarations(&mut self) -> Vec<TopLevelDecl> {
        let mut decls = Vec::new();
        loop {
            self.skip_separators();
            if self.at_end() {
                break;
            }
            let start = self.pos;
            match self.top_level() {
                Ok(d) => decls.push(d),
                Err(()) => self.recover(start),
            }
        }
        decls
    }

    /// Skips past the declaration that started at `start`: to the brace that
    /// closes its first `{`, or to the next line that begins a declaration.
    fn recover(&mut self, start: usize) {
        let mut i = start;
        let mut depth = 0i32;
        let mut seen_brace = false;
        while i < self.tokens.len() {
            let tok = &self.tokens[i];
            if tok.is("{") {
                depth += 1;
                seen_brace = true;
            } else if tok.is("}") {
                depth -= 1;
                if seen_brace && depth <= 0 {
                    self.pos = i + 1;
                    return;
                }
            } else if !seen_brace && i > start && tok.kind == TokenKind::Newline && self.starts_declaration(i + 1) {
                self.pos = i + 1;
                return;
            }
            i += 1;
        }
        self.pos = self.tokens.len();
    }

    fn starts_declaration(&self, i: usize) -> bool {
        let Some(tok) = self.tokens.get(i) else { return false };
        match tok.kind {
            TokenKind::Keyword(Keyword::Contract | Keyword::Struct | Keyword::Enum) => true,
            TokenKind::Identifier => {
                self.tokens.get(i + 1).is_some_and(|t| t.is("::") || t.is("@"))
            }
            _ => false,
        }
    }

    fn top_level(&mut self) -> PResult<TopLevelDecl> {
        let tok = self.peek().clone();
        match tok.kind {
            TokenKind::Keyword(Keyword::Contract) => {
                if self.peek_nth(1).is_keyword(Keyword::Trait) {
                    self.advance();
                    self.advance();
                    return self.trait_decl(TraitKind::Contract).map(TopLevelDecl::Trait);
                }
                self.contract_decl().map(TopLevelDecl::Contract)
            }
            TokenKind::Keyword(Keyword::Struct) => {
                if self.peek_nth(1).is_keyword(Keyword::Trait) {
                    self.advance();
                    self.advance();
                    return self.trait_decl(TraitKind::Struct).map(TopLevelDecl::Trait);
                }
                self.struct_decl().map(TopLevelDecl::Struct)
            }
            TokenKind::Keyword(Keyword::Enum) => self.enum_decl().map(TopLevelDecl::Enum),
            TokenKind::Identifier => self.behaviour_decl().map(TopLevelDecl::Behaviour),
            _ => self.error("a top-level declaration"),
        }
    }

    fn identifier_list(&mut self) -> PResult<Vec<Ident>> {
        self.expect("(")?;
        self.skip_newlines();
        let mut ids = Vec::new();
        if !self.check(")") {
            loop {
                self.skip_newlines();
                ids.push(self.identifier()?);
                self.skip_newlines();
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        Ok(ids)
    }

    fn conformances(&mut self) -> PResult<Vec<Ident>> {
        let mut list = Vec::new();
        if self.eat(":") {
            loop {
                list.push(self.identifier()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        Ok(list)
    }

    fn contract_decl(&mut self) -> PResult<ContractDecl> {
        self.expect_kw(Keyword::Contract, "contract")?;
        let name = self.identifier()?;
        let mut typestates = Vec::new();
        let mut conformances = Vec::new();
        for _ in 0..2 {
            if self.check("(") {
                typestates = self.identifier_list()?;
            } else if self.check(":") {
                conformances = self.conformances()?;
            }
        }
        self.expect("{")?;
        let mut members = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            if self.check_kw(Keyword::Event) {
                members.push(ContractMember::Event(self.event_decl()?));
            } else {
                let modifiers = self.modifiers();
                members.push(ContractMember::Property(self.variable_decl(modifiers)?));
            }
            self.end_of_member()?;
        }
        Ok(ContractDecl { name, conformances, typestates, members, origin: self.origin })
    }

    fn end_of_member(&mut self) -> PResult<()> {
        if self.peek().kind == TokenKind::Newline || self.check(";") || self.check("}") {
            Ok(())
        } else {
            self.error("a newline")
        }
    }

    fn modifiers(&mut self) -> Vec<Modifier> {
        let mut mods = Vec::new();
        loop {
            let m = match self.peek().kind {
                TokenKind::Keyword(Keyword::Public) => Modifier::Public,
                TokenKind::Keyword(Keyword::Mutating) => Modifier::Mutating,
                TokenKind::Keyword(Keyword::Visible) => Modifier::Visible,
                _ => break,
            };
            self.advance();
            mods.push(m);
        }
        mods
    }

    fn variable_decl(&mut self, modifiers: Vec<Modifier>) -> PResult<VariableDecl> {
        let start = self.peek().span;
        let is_let = if self.eat_kw(Keyword::Let) {
            true
        } else if self.eat_kw(Keyword::Var) {
            false
        } else {
            return self.error("'var' or 'let'");
        };
        let name = self.identifier()?;
        let ty = if self.eat(":") { Some(self.type_annotation()?) } else { None };
        let value = if self.eat("=") { Some(Box::new(self.expression(1)?)) } else { None };
        Ok(VariableDecl { modifiers, is_let, name, ty, value, span: start.to(self.prev_span()) })
    }

    fn event_decl(&mut self) -> PResult<EventDecl> {
        self.expect_kw(Keyword::Event, "event")?;
        let name = self.identifier()?;
        self.expect("{")?;
        let mut fields = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            fields.push(self.variable_decl(Vec::new())?);
            self.end_of_member()?;
        }
        Ok(EventDecl { name, fields })
    }

    fn behaviour_decl(&mut self) -> PResult<BehaviourDecl> {
        let contract = self.identifier()?;
        let states = if self.eat("@") { self.identifier_list()? } else { Vec::new() };
        self.expect("::")?;
        let caller_binding = if self.peek().kind == TokenKind::Identifier && self.peek_nth(1).is("<-") {
            let id = self.identifier()?;
            self.advance();
            Some(id)
        } else {
            None
        };
        let protections = self.identifier_list()?;
        if protections.is_empty() {
            let span = self.prev_span();
            self.sink.error(codes::SYNTAX, "Expected at least one caller protection.", span);
            return Err(());
        }
        self.expect("{")?;
        let mut members = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            members.push(self.function_decl()?);
        }
        Ok(BehaviourDecl { contract, states, caller_binding, protections, members, origin: self.origin })
    }

    fn struct_decl(&mut self) -> PResult<StructDecl> {
        self.expect_kw(Keyword::Struct, "struct")?;
        let name = self.identifier()?;
        let conformances = self.conformances()?;
        self.expect("{")?;
        let mut members = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            let save = self.pos;
            let modifiers = self.modifiers();
            if self.check_kw(Keyword::Var) || self.check_kw(Keyword::Let) {
                members.push(StructMember::Property(self.variable_decl(modifiers)?));
                self.end_of_member()?;
            } else {
                self.pos = save;
                members.push(StructMember::Function(self.function_decl()?));
            }
        }
        Ok(StructDecl { name, conformances, members, origin: self.origin })
    }

    fn trait_decl(&mut self, kind: TraitKind) -> PResult<TraitDecl> {
        let name = self.identifier()?;
        self.expect("{")?;
        let mut members = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            if self.check_kw(Keyword::Event) {
                members.push(TraitMember::Event(self.event_decl()?));
                self.end_of_member()?;
            } else {
                members.push(TraitMember::Function(self.function_decl()?));
            }
        }
        Ok(TraitDecl { kind, name, members, origin: self.origin })
    }

    fn enum_decl(&mut self) -> PResult<EnumDecl> {
        self.expect_kw(Keyword::Enum, "enum")?;
        let name = self.identifier()?;
        self.expect("{")?;
        let mut cases = Vec::new();
        loop {
            self.skip_separators();
            if self.eat("}") {
                break;
            }
            self.expect_kw(Keyword::Case, "case")?;
            cases.push(self.identifier()?);
            self.end_of_member()?;
        }
        Ok(EnumDecl { name, cases })
    }

    fn function_decl(&mut self) -> PResult<FunctionDecl> {
        let start = self.peek().span;
        let mut attributes = Vec::new();
        while self.check("@") {
            self.advance();
            attributes.push(self.identifier()?);
            self.skip_newlines();
        }
        let modifiers = self.modifiers();
        let (kind, name) = if self.eat_kw(Keyword::Func) {
            (FunctionKind::Function, self.identifier()?)
        } else if self.check_kw(Keyword::Init) {
            let tok = self.advance();
            (FunctionKind::Initialiser, Ident::new("init", tok.span))
        } else if self.check_kw(Keyword::Fallback) {
            let tok = self.advance();
            (FunctionKind::Fallback, Ident::new("fallback", tok.span))
        } else {
            return self.error("'func', 'init' or 'fallback'");
        };
        let params = self.parameter_list()?;
        let return_type = if self.eat("->") { Some(self.type_annotation()?) } else { None };
        let body = if self.check("{") { Some(self.block()?) } else { None };
        let span = start.to(self.prev_span());
        if body.is_none() {
            self.end_of_member()?;
        }
        Ok(FunctionDecl { kind, attributes, modifiers, name, params, return_type, body, span })
    }

    fn parameter_list(&mut self) -> PResult<Vec<Parameter>> {
        self.expect("(")?;
        let mut params = Vec::new();
        self.skip_newlines();
        if self.eat(")") {
            return Ok(params);
        }
        loop {
            self.skip_newlines();
            let mut is_implicit = false;
            let mut is_inout = false;
            loop {
                if self.eat_kw(Keyword::Implicit) {
                    is_implicit = true;
                } else if self.eat_kw(Keyword::Inout) {
                    is_inout = true;
                } else {
                    break;
                }
            }
            let name = self.identifier()?;
            self.expect(":")?;
            if self.eat_kw(Keyword::Inout) {
                is_inout = true;
            }
            let ty = self.type_annotation()?;
            let default = if self.eat("=") { Some(self.expression(1)?) } else { None };
            params.push(Parameter { is_implicit, is_inout, name, ty, default });
            self.skip_newlines();
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(params)
    }

    fn type_annotation(&mut self) -> PResult<TypeAnnotation> {
        let base = if self.eat("[") {
            let key = self.type_annotation()?;
            if self.eat(":") {
                let value = self.type_annotation()?;
                self.expect("]")?;
                TypeAnnotation::Dictionary(Box::new(key), Box::new(value))
            } else {
                self.expect("]")?;
                TypeAnnotation::Array(Box::new(key))
            }
        } else {
            let name = self.identifier()?;
            let mut generics = Vec::new();
            if self.eat("<") {
                loop {
                    generics.push(self.type_annotation()?);
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(">")?;
            }
            TypeAnnotation::Named { name, generics }
        };
        let mut ty = base;
        while self.check("[") && self.peek_nth(1).kind == TokenKind::Number && self.peek_nth(2).is("]") {
            self.advance();
            let n = self.advance();
            self.advance();
            let Ok(size) = n.text.parse::<u64>() else {
                self.sink.error(codes::INVALID_LITERAL, format!("Invalid array size '{}'.", n.text), n.span);
                return Err(());
            };
            ty = TypeAnnotation::FixedArray(Box::new(ty), size);
        }
        Ok(ty)
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect("{")?;
        let mut statements = Vec::new();
        loop {
            self.skip_separators();
            if self.check("}") {
                break;
            }
            if self.at_end() {
                return self.error("'}'");
            }
            statements.push(self.statement()?);
            if !(self.peek().kind == TokenKind::Newline || self.check(";") || self.check("}")) {
                return self.error("a newline or ';' after statement");
            }
        }
        let close = self.expect("}")?;
        Ok(Block { statements, span: open.span.to(close.span) })
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let start = self.peek().span;
        let kind = if self.eat_kw(Keyword::Return) {
            if self.peek().kind == TokenKind::Newline || self.check(";") || self.check("}") {
                StmtKind::Return(None)
            } else {
                StmtKind::Return(Some(self.expression(0)?))
            }
        } else if self.eat_kw(Keyword::Become) {
            StmtKind::Become(self.identifier()?)
        } else if self.eat_kw(Keyword::Emit) {
            let event = self.identifier()?;
            let args = self.arguments()?;
            StmtKind::Emit { event, args }
        } else if self.eat_kw(Keyword::For) {
            let is_let = if self.eat_kw(Keyword::Let) {
                true
            } else {
                self.expect_kw(Keyword::Var, "'var' or 'let'")?;
                false
            };
            let name = self.identifier()?;
            let ty = if self.eat(":") { Some(self.type_annotation()?) } else { None };
            self.expect_kw(Keyword::In, "in")?;
            let iterable = self.expression(1)?;
            let body = self.block()?;
            StmtKind::For { is_let, name, ty, iterable, body }
        } else if self.check_kw(Keyword::If) {
            return self.if_statement();
        } else {
            StmtKind::Expr(self.expression(0)?)
        };
        Ok(Stmt { kind, span: start.to(self.prev_span()) })
    }

    fn if_statement(&mut self) -> PResult<Stmt> {
        let start = self.expect_kw(Keyword::If, "if")?.span;
        let condition = self.expression(1)?;
        let then_block = self.block()?;
        let save = self.pos;
        self.skip_newlines();
        let else_block = if self.eat_kw(Keyword::Else) {
            if self.check_kw(Keyword::If) {
                let nested = self.if_statement()?;
                let span = nested.span;
                Some(Block { statements: vec![nested], span })
            } else {
                Some(self.block()?)
            }
        } else {
            self.pos = save;
            None
        };
        let kind = StmtKind::If { condition, then_block, else_block };
        Ok(Stmt { kind, span: start.to(self.prev_span()) })
    }

    // ---- expressions ---------------------------------------------------

    /// Precedence climbing; `min_prec` 0 admits assignment operators.
    pub fn expression(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.prefix()?;
        loop {
            let tok = self.peek();
            if tok.kind != TokenKind::Operator {
                break;
            }
            let Some(op) = BinaryOp::from_symbol(&tok.text) else { break };
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            self.skip_newlines();
            let next_min = if op.is_right_assoc() { prec } else { prec + 1 };
            let rhs = self.expression(next_min)?;
            let span = lhs.span.to(rhs.span);
            lhs = self.mk(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> PResult<Expr> {
        let start = self.peek().span;
        if self.eat("&") {
            let inner = self.postfix()?;
            let span = start.to(inner.span);
            return Ok(self.mk(ExprKind::InOut(Box::new(inner)), span));
        }
        if self.eat_kw(Keyword::Try) {
            let inner = self.postfix()?;
            let span = start.to(inner.span);
            return Ok(self.mk(ExprKind::Try(Box::new(inner)), span));
        }
        if self.check_kw(Keyword::Var) || self.check_kw(Keyword::Let) {
            let decl = self.variable_decl(Vec::new())?;
            let span = decl.span;
            return Ok(self.mk(ExprKind::VarDecl(decl), span));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut expr = self.primary()?;
        loop {
            if self.check(".") {
                self.advance();
                let name = self.identifier()?;
                if self.check("(") {
                    let args = self.arguments()?;
                    let span = expr.span.to(self.prev_span());
                    expr = self.mk(ExprKind::Call { receiver: Some(Box::new(expr)), name, args }, span);
                } else {
                    let span = expr.span.to(name.span);
                    expr = self.mk(ExprKind::Member { base: Box::new(expr), name }, span);
                }
            } else if self.check("[") {
                self.advance();
                self.skip_newlines();
                let index = self.expression(1)?;
                self.skip_newlines();
                let close = self.expect("]")?;
                let span = expr.span.to(close.span);
                expr = self.mk(ExprKind::Subscript { base: Box::new(expr), index: Box::new(index) }, span);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek().clone();
        let span = tok.span;
        let kind = match tok.kind {
            TokenKind::Identifier => {
                self.advance();
                let name = Ident::new(tok.text, span);
                if self.check("(") {
                    let args = self.arguments()?;
                    let span = span.to(self.prev_span());
                    return Ok(self.mk(ExprKind::Call { receiver: None, name, args }, span));
                }
                ExprKind::Identifier(name)
            }
            TokenKind::Keyword(Keyword::SelfValue) => {
                self.advance();
                ExprKind::SelfValue
            }
            TokenKind::Number => {
                self.advance();
                if tok.text.contains('.') {
                    ExprKind::Fraction(tok.text)
                } else {
                    ExprKind::Int(tok.text)
                }
            }
            TokenKind::Bool => {
                self.advance();
                ExprKind::Bool(tok.text == "true")
            }
            TokenKind::Address => {
                self.advance();
                ExprKind::Address(tok.text)
            }
            TokenKind::String => {
                self.advance();
                ExprKind::Str(tok.text.trim_matches('"').to_string())
            }
            TokenKind::Punct if tok.text == "[" => {
                self.advance();
                if self.eat(":") {
                    let close = self.expect("]")?;
                    return Ok(self.mk(ExprKind::EmptyDictionary, span.to(close.span)));
                }
                let close = self.expect("]")?;
                return Ok(self.mk(ExprKind::EmptyArray, span.to(close.span)));
            }
            TokenKind::Punct if tok.text == "(" => {
                self.advance();
                self.skip_newlines();
                let inner = self.expression(0)?;
                self.skip_newlines();
                if self.check("..<") || self.check("...") {
                    let inclusive = self.advance().text == "...";
                    let end = self.expression(1)?;
                    self.skip_newlines();
                    let close = self.expect(")")?;
                    let kind = ExprKind::Range { start: Box::new(inner), end: Box::new(end), inclusive };
                    return Ok(self.mk(kind, span.to(close.span)));
                }
                let close = self.expect(")")?;
                return Ok(self.mk(ExprKind::Bracketed(Box::new(inner)), span.to(close.span)));
            }
            _ => return self.error("an expression"),
        };
        Ok(self.mk(kind, span))
    }

    fn arguments(&mut self) -> PResult<Vec<Argument>> {
        self.expect("(")?;
        let mut args = Vec::new();
        self.skip_newlines();
        if self.eat(")") {
            return Ok(args);
        }
        loop {
            self.skip_newlines();
            let label = if self.peek().kind == TokenKind::Identifier && self.peek_nth(1).is(":") {
                let l = self.identifier()?;
                self.advance();
                Some(l)
            } else {
                None
            };
            let value = self.expression(1)?;
            args.push(Argument { label, value });
            self.skip_newlines();
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(args)
    }
}

/// Joins `ident $ ident` runs into one identifier, reporting the reserved `$`.
fn merge_dollar_identifiers(tokens: Vec<Token>, sink: &mut Sink<'_>) -> Vec<Token> {
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut iter = tokens.into_iter().peekable();
    while let Some(tok) = iter.next() {
        let adjacent = |a: &Token, b: &Token| a.span.offset + a.span.len == b.span.offset;
        let joinable = tok.kind == TokenKind::Identifier
            || (tok.kind == TokenKind::Invalid && tok.text == "$");
        if !joinable {
            out.push(tok);
            continue;
        }
        let mut merged = tok;
        let mut has_dollar = merged.kind == TokenKind::Invalid;
        while let Some(next) = iter.peek() {
            let next_ok = next.kind == TokenKind::Identifier || (next.kind == TokenKind::Invalid && next.text == "$");
            if next_ok && adjacent(&merged, next) {
                let next = iter.next().unwrap();
                has_dollar |= next.kind == TokenKind::Invalid;
                merged.text.push_str(&next.text);
                merged.span.len += next.span.len;
            } else {
                break;
            }
        }
        if has_dollar {
            sink.error(
                codes::INVALID_CHARACTER,
                format!("Use of invalid character '$' in '{}'.", merged.text),
                merged.span,
            );
            merged.kind = TokenKind::Identifier;
        }
        out.push(merged);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::lexer::tokenize;

    fn files() -> Vec<String> {
        vec!["test.flint".to_string()]
    }

    fn parse_src(src: &str) -> (SourceModule, Vec<Diagnostic>) {
        parse(tokenize(src), &files())
    }

    fn expr(src: &str) -> Expr {
        let f = files();
        let mut p = Parser::new(tokenize(src), &f, Origin::User, 0);
        let e = p.expression(0).expect("parses");
        assert!(p.at_end(), "trailing tokens in {src}");
        e
    }

    fn shape(e: &Expr) -> String {
        match &e.kind {
            ExprKind::Identifier(i) => i.name.clone(),
            ExprKind::Int(n) => n.clone(),
            ExprKind::Binary { op, lhs, rhs } => format!("{:?}({}, {})", op, shape(lhs), shape(rhs)),
            ExprKind::Member { base, name } => format!("Member({}, {})", shape(base), name.name),
            ExprKind::Subscript { base, index } => format!("Subscript({}, {})", shape(base), shape(index)),
            ExprKind::InOut(inner) => format!("InOut({})", shape(inner)),
            ExprKind::Call { receiver, name, args } => format!(
                "Call({}{}, [{}])",
                receiver.as_ref().map(|r| format!("{}.", shape(r))).unwrap_or_default(),
                name.name,
                args.iter().map(|a| shape(&a.value)).collect::<Vec<_>>().join(", ")
            ),
            other => format!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(shape(&expr("1 + 2 * 3")), "Add(1, Mul(2, 3))");
        assert_eq!(shape(&expr("a.b[i] = c && d")), "Assign(Subscript(Member(a, b), i), And(c, d))");
        assert_eq!(shape(&expr("2 ** 3 ** 2")), "Pow(2, Pow(3, 2))");
        assert_eq!(shape(&expr("a - b - c")), "Sub(Sub(a, b), c)");
        assert_eq!(shape(&expr("a < b == c")), "Eq(Lt(a, b), c)");
        assert_eq!(shape(&expr("a || b && c")), "Or(a, And(b, c))");
        assert_eq!(shape(&expr("x &+ y &* z")), "WrapAdd(x, WrapMul(y, z))");
    }

    #[test]
    fn inout_call() {
        assert_eq!(
            shape(&expr("Wei(&balances[account], amount)")),
            "Call(Wei, [InOut(Subscript(balances, account)), amount])"
        );
    }

    #[test]
    fn minimal_module() {
        let (m, d) = parse_src("contract C {}\nC :: (any) { public init() {} }\n");
        assert!(d.is_empty(), "{d:?}");
        assert_eq!(m.declarations.len(), 2);
        let TopLevelDecl::Contract(c) = &m.declarations[0] else { panic!() };
        assert!(c.typestates.is_empty());
        assert!(matches!(m.declarations[1], TopLevelDecl::Behaviour(_)));
    }

    #[test]
    fn behaviour_header() {
        let (m, d) = parse_src("SimpleDAO @(Join) :: caller <- (any) {\n}\n");
        assert!(d.is_empty());
        let TopLevelDecl::Behaviour(b) = &m.declarations[0] else { panic!() };
        assert_eq!(b.states[0].name, "Join");
        assert_eq!(b.caller_binding.as_ref().unwrap().name, "caller");
        assert_eq!(b.protections[0].name, "any");
    }

    #[test]
    fn recovers_at_next_declaration() {
        let src = "contract A { var x: = }\ncontract B { var y: Int }\nB :: (any) { public init() { return ) } }\nstruct S { var z: Int = 0 }\n";
        let (m, d) = parse_src(src);
        assert_eq!(d.len(), 2, "{d:?}");
        assert_eq!(d[0].line, 1);
        assert_eq!(d[1].line, 3);
        assert_eq!(m.declarations.len(), 2);
    }

    #[test]
    fn dollar_identifier_reported_once() {
        let (m, d) = parse_src("contract C {}\nC :: (any) {\n  func my$Func() {}\n}\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "Use of invalid character '$' in 'my$Func'.");
        assert_eq!(d[0].line, 3);
        let TopLevelDecl::Behaviour(b) = &m.declarations[1] else { panic!() };
        assert_eq!(b.members[0].name.name, "my$Func");
    }

    #[test]
    fn statements_and_ranges() {
        let src = "contract C {}\nC :: (any) {\n  func f() -> Int {\n    var s: Int = 0; for let i: Int in (0..<10) { s += i }\n    if(s > 3) { return s } else if s == 0 { return 1 }\n    return 0\n  }\n}\n";
        let (m, d) = parse_src(src);
        assert!(d.is_empty(), "{d:?}");
        let TopLevelDecl::Behaviour(b) = &m.declarations[1] else { panic!() };
        let body = b.members[0].body.as_ref().unwrap();
        assert_eq!(body.statements.len(), 4);
        let StmtKind::For { iterable, .. } = &body.statements[1].kind else { panic!() };
        assert!(matches!(iterable.kind, ExprKind::Range { inclusive: false, .. }));
    }

    #[test]
    fn types() {
        let (m, d) = parse_src("struct S {\n var a: [Address: [Int]] = [:]\n var b: Int[4]\n let c: Self\n}\n");
        assert!(d.is_empty(), "{d:?}");
        let TopLevelDecl::Struct(s) = &m.declarations[0] else { panic!() };
        let StructMember::Property(b) = &s.members[1] else { panic!() };
        assert!(matches!(b.ty, Some(TypeAnnotation::FixedArray(_, 4))));
    }
}
