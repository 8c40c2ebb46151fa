//! Source pretty-printer. Output reparses to a structurally identical tree.

use std::fmt::Write;

use super::ast::*;

pub fn print_module(module: &SourceModule) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    for decl in &module.declarations {
        p.decl(decl);
        p.out.push('\n');
    }
    p.out
}

pub fn print_expr(expr: &Expr) -> String {
    let mut p = Printer { out: String::new(), indent: 0 };
    p.expr(expr);
    p.out
}

pub fn print_type(ty: &TypeAnnotation) -> String {
    match ty {
        TypeAnnotation::Named { name, generics } if generics.is_empty() => name.name.clone(),
        TypeAnnotation::Named { name, generics } => {
            let args: Vec<String> = generics.iter().map(print_type).collect();
            format!("{}<{}>", name.name, args.join(", "))
        }
        TypeAnnotation::Array(t) => format!("[{}]", print_type(t)),
        TypeAnnotation::FixedArray(t, n) => format!("{}[{}]", print_type(t), n),
        TypeAnnotation::Dictionary(k, v) => format!("[{}: {}]", print_type(k), print_type(v)),
    }
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn idents(list: &[Ident]) -> String {
        list.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
    }

    fn decl(&mut self, decl: &TopLevelDecl) {
        match decl {
            TopLevelDecl::Contract(c) => {
                let mut head = format!("contract {}", c.name.name);
                if !c.conformances.is_empty() {
                    let _ = write!(head, ": {}", Self::idents(&c.conformances));
                }
                if !c.typestates.is_empty() {
                    let _ = write!(head, " ({})", Self::idents(&c.typestates));
                }
                self.line(&format!("{head} {{"));
                self.indent += 1;
                for m in &c.members {
                    match m {
                        ContractMember::Property(v) => {
                            let text = self.var_decl(v);
                            self.line(&text);
                        }
                        ContractMember::Event(e) => self.event(e),
                    }
                }
                self.indent -= 1;
                self.line("}");
            }
            TopLevelDecl::Behaviour(b) => {
                let mut head = b.contract.name.clone();
                if !b.states.is_empty() {
                    let _ = write!(head, " @({})", Self::idents(&b.states));
                }
                head.push_str(" :: ");
                if let Some(binding) = &b.caller_binding {
                    let _ = write!(head, "{} <- ", binding.name);
                }
                let _ = write!(head, "({}) {{", Self::idents(&b.protections));
                self.line(&head);
                self.indent += 1;
                for f in &b.members {
                    self.function(f);
                }
                self.indent -= 1;
                self.line("}");
            }
            TopLevelDecl::Struct(s) => {
                let mut head = format!("struct {}", s.name.name);
                if !s.conformances.is_empty() {
                    let _ = write!(head, ": {}", Self::idents(&s.conformances));
                }
                self.line(&format!("{head} {{"));
                self.indent += 1;
                for m in &s.members {
                    match m {
                        StructMember::Property(v) => {
                            let text = self.var_decl(v);
                            self.line(&text);
                        }
                        StructMember::Function(f) => self.function(f),
                    }
                }
                self.indent -= 1;
                self.line("}");
            }
            TopLevelDecl::Enum(e) => {
                self.line(&format!("enum {} {{", e.name.name));
                self.indent += 1;
                for case in &e.cases {
                    self.line(&format!("case {}", case.name));
                }
                self.indent -= 1;
                self.line("}");
            }
            TopLevelDecl::Trait(t) => {
                let kw = match t.kind {
                    TraitKind::Struct => "struct",
                    TraitKind::Contract => "contract",
                };
                self.line(&format!("{kw} trait {} {{", t.name.name));
                self.indent += 1;
                for m in &t.members {
                    match m {
                        TraitMember::Function(f) => self.function(f),
                        TraitMember::Event(e) => self.event(e),
                    }
                }
                self.indent -= 1;
                self.line("}");
            }
        }
    }

    fn event(&mut self, e: &EventDecl) {
        self.line(&format!("event {} {{", e.name.name));
        self.indent += 1;
        for f in &e.fields {
            let text = self.var_decl(f);
            self.line(&text);
        }
        self.indent -= 1;
        self.line("}");
    }

    fn var_decl(&mut self, v: &VariableDecl) -> String {
        let mut s = String::new();
        for m in &v.modifiers {
            s.push_str(m.keyword());
            s.push(' ');
        }
        s.push_str(if v.is_let { "let " } else { "var " });
        s.push_str(&v.name.name);
        if let Some(ty) = &v.ty {
            let _ = write!(s, ": {}", print_type(ty));
        }
        if let Some(value) = &v.value {
            s.push_str(" = ");
            s.push_str(&print_expr(value));
        }
        s
    }

    fn function(&mut self, f: &FunctionDecl) {
        for a in &f.attributes {
            self.line(&format!("@{}", a.name));
        }
        let mut head = String::new();
        for m in &f.modifiers {
            head.push_str(m.keyword());
            head.push(' ');
        }
        match f.kind {
            FunctionKind::Function => {
                let _ = write!(head, "func {}", f.name.name);
            }
            FunctionKind::Initialiser => head.push_str("init"),
            FunctionKind::Fallback => head.push_str("fallback"),
        }
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| {
                let mut s = String::new();
                if p.is_implicit {
                    s.push_str("implicit ");
                }
                let _ = write!(s, "{}: ", p.name.name);
                if p.is_inout {
                    s.push_str("inout ");
                }
                s.push_str(&print_type(&p.ty));
                if let Some(d) = &p.default {
                    let _ = write!(s, " = {}", print_expr(d));
                }
                s
            })
            .collect();
        let _ = write!(head, "({})", params.join(", "));
        if let Some(ret) = &f.return_type {
            let _ = write!(head, " -> {}", print_type(ret));
        }
        match &f.body {
            None => self.line(&head),
            Some(body) => {
                self.line(&format!("{head} {{"));
                self.block_body(body);
                self.line("}");
            }
        }
    }

    fn block_body(&mut self, block: &Block) {
        self.indent += 1;
        for s in &block.statements {
            self.stmt(s);
        }
        self.indent -= 1;
    }

    fn args(args: &[Argument]) -> String {
        let parts: Vec<String> = args
            .iter()
            .map(|a| match &a.label {
                Some(l) => format!("{}: {}", l.name, print_expr(&a.value)),
                None => print_expr(&a.value),
            })
            .collect();
        format!("({})", parts.join(", "))
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match &stmt.kind {
            StmtKind::Expr(e) => self.line(&print_expr(e)),
            StmtKind::Return(None) => self.line("return"),
            StmtKind::Return(Some(e)) => self.line(&format!("return {}", print_expr(e))),
            StmtKind::Become(s) => self.line(&format!("become {}", s.name)),
            StmtKind::Emit { event, args } => self.line(&format!("emit {}{}", event.name, Self::args(args))),
            StmtKind::For { is_let, name, ty, iterable, body } => {
                let mut head = format!("for {} {}", if *is_let { "let" } else { "var" }, name.name);
                if let Some(ty) = ty {
                    let _ = write!(head, ": {}", print_type(ty));
                }
                let _ = write!(head, " in {} {{", print_expr(iterable));
                self.line(&head);
                self.block_body(body);
                self.line("}");
            }
            StmtKind::If { .. } => self.if_stmt(stmt, false),
        }
    }

    fn if_stmt(&mut self, stmt: &Stmt, chained: bool) {
        let StmtKind::If { condition, then_block, else_block } = &stmt.kind else { unreachable!() };
        let head = format!("if {} {{", print_expr(condition));
        if chained {
            // Continues the `} else ` already written on the current line.
            self.out.push_str(&head);
            self.out.push('\n');
        } else {
            self.line(&head);
        }
        self.block_body(then_block);
        match else_block {
            None => self.line("}"),
            Some(b) => {
                let is_else_if = b.statements.len() == 1
                    && matches!(b.statements[0].kind, StmtKind::If { .. })
                    && b.span == b.statements[0].span;
                for _ in 0..self.indent {
                    self.out.push_str("  ");
                }
                if is_else_if {
                    self.out.push_str("} else ");
                    self.if_stmt(&b.statements[0], true);
                } else {
                    self.out.push_str("} else {\n");
                    self.block_body(b);
                    self.line("}");
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        let text = match &e.kind {
            ExprKind::Identifier(i) => i.name.clone(),
            ExprKind::SelfValue => "self".into(),
            ExprKind::Int(n) | ExprKind::Fraction(n) => n.clone(),
            ExprKind::Bool(b) => b.to_string(),
            ExprKind::Address(a) => a.clone(),
            ExprKind::Str(s) => format!("\"{s}\""),
            ExprKind::EmptyArray => "[]".into(),
            ExprKind::EmptyDictionary => "[:]".into(),
            ExprKind::InOut(inner) => format!("&{}", print_expr(inner)),
            ExprKind::Binary { op, lhs, rhs } => {
                format!("{} {} {}", print_expr(lhs), op.symbol(), print_expr(rhs))
            }
            ExprKind::Member { base, name } => format!("{}.{}", print_expr(base), name.name),
            ExprKind::Subscript { base, index } => format!("{}[{}]", print_expr(base), print_expr(index)),
            ExprKind::Call { receiver, name, args } => match receiver {
                Some(r) => format!("{}.{}{}", print_expr(r), name.name, Self::args(args)),
                None => format!("{}{}", name.name, Self::args(args)),
            },
            ExprKind::VarDecl(v) => self.var_decl(v),
            ExprKind::Bracketed(inner) => format!("({})", print_expr(inner)),
            ExprKind::Range { start, end, inclusive } => {
                format!("({} {} {})", print_expr(start), if *inclusive { "..." } else { "..<" }, print_expr(end))
            }
            ExprKind::Try(inner) => format!("try {}", print_expr(inner)),
        };
        self.out.push_str(&text);
    }
}
