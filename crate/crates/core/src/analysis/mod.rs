//! Semantic passes over a parsed module: type checking with name resolution,
//! caller protections, mutation, initialisation, payable and trait rules.

pub mod init;
pub mod mutation;
pub mod payable;
pub mod protections;
pub mod traits;
pub mod typeck;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::environment::{FnId, FuncLoc, Type};
use crate::frontend::ast::*;
use crate::frontend::Span;
use crate::stdlib::RuntimeFn;

pub type LocalId = usize;

/// What a local variable aliases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocalKind {
    Var,
    Param { index: usize, inout: bool },
    /// Loop variable bound to each element of a collection of structures.
    LoopRef { root: RootKind },
    /// Loop variable holding a copy of each element or range value.
    LoopValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalInfo {
    pub name: String,
    pub ty: Type,
    pub is_let: bool,
    pub kind: LocalKind,
    pub span: Span,
}

/// Where an lvalue's storage ultimately lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootKind {
    /// State of the enclosing contract or structure (`self`).
    State,
    /// An inout parameter: state visible to the caller.
    InoutParam,
    Local,
    /// Not an lvalue.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ref {
    Local(LocalId),
    /// Property of the enclosing contract or structure.
    Property(usize),
    Caller,
    TypeName(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemberRef {
    /// `self.x` in a contract or structure.
    SelfProperty(usize),
    Field { strukt: String, index: usize },
    Size,
    EnumCase { name: String, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CallTarget {
    Function(FnId),
    /// Structure construction; `None` for the implicit initialiser.
    Init { strukt: String, init: Option<FnId> },
    Runtime(RuntimeFn),
}

/// Side tables produced by the type checker and read by later passes.
#[derive(Debug, Clone, Default)]
pub struct Annotations {
    pub types: HashMap<ExprId, Type>,
    pub refs: HashMap<ExprId, Ref>,
    pub members: HashMap<ExprId, MemberRef>,
    pub calls: HashMap<ExprId, CallTarget>,
    /// Variable-declaration expression to the local it declares.
    pub decls: HashMap<ExprId, LocalId>,
    /// For-loop iterable expression to the loop variable.
    pub loop_vars: HashMap<ExprId, LocalId>,
    pub locals: HashMap<FnId, Vec<LocalInfo>>,
}

impl Annotations {
    pub fn ty(&self, e: &Expr) -> Type {
        self.types.get(&e.id).cloned().unwrap_or(Type::Error)
    }

    pub fn local(&self, f: FnId, id: LocalId) -> &LocalInfo {
        &self.locals[&f][id]
    }

    /// Root of the place `e` denotes.
    pub fn root(&self, f: Option<FnId>, e: &Expr) -> RootKind {
        match &e.kind {
            ExprKind::Bracketed(inner) | ExprKind::InOut(inner) => self.root(f, inner),
            ExprKind::SelfValue => RootKind::State,
            ExprKind::Identifier(_) => match self.refs.get(&e.id) {
                Some(Ref::Property(_)) => RootKind::State,
                Some(Ref::Local(l)) => match f.map(|f| self.local(f, *l).kind) {
                    Some(LocalKind::Param { inout: true, .. }) => RootKind::InoutParam,
                    Some(LocalKind::LoopRef { root }) => root,
                    _ => RootKind::Local,
                },
                _ => RootKind::None,
            },
            ExprKind::Member { base, .. } | ExprKind::Subscript { base, .. } => self.root(f, base),
            _ => RootKind::None,
        }
    }
}

pub fn function_decl(module: &SourceModule, loc: FuncLoc) -> &FunctionDecl {
    match &module.declarations[loc.decl] {
        TopLevelDecl::Behaviour(b) => &b.members[loc.member],
        TopLevelDecl::Struct(s) => match &s.members[loc.member] {
            StructMember::Function(f) => f,
            StructMember::Property(_) => panic!("member {} is not a function", loc.member),
        },
        _ => panic!("declaration {} has no functions", loc.decl),
    }
}

/// Calls `f` on every statement of `block`, entering nested blocks.
pub fn walk_stmts<'a>(block: &'a Block, f: &mut dyn FnMut(&'a Stmt)) {
    for s in &block.statements {
        f(s);
        match &s.kind {
            StmtKind::For { body, .. } => walk_stmts(body, f),
            StmtKind::If { then_block, else_block, .. } => {
                walk_stmts(then_block, f);
                if let Some(b) = else_block {
                    walk_stmts(b, f);
                }
            }
            _ => {}
        }
    }
}

/// Expressions directly owned by a statement (not those of nested blocks).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::Expr(e) => vec![e],
        StmtKind::Return(e) => e.iter().collect(),
        StmtKind::Become(_) => Vec::new(),
        StmtKind::Emit { args, .. } => args.iter().map(|a| &a.value).collect(),
        StmtKind::For { iterable, .. } => vec![iterable],
        StmtKind::If { condition, .. } => vec![condition],
    }
}

/// Calls `f` on `e` and every sub-expression, parents first.
pub fn walk_expr<'a>(e: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(e);
    match &e.kind {
        ExprKind::InOut(x) | ExprKind::Bracketed(x) | ExprKind::Try(x) => walk_expr(x, f),
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        ExprKind::Member { base, .. } => walk_expr(base, f),
        ExprKind::Subscript { base, index } => {
            walk_expr(base, f);
            walk_expr(index, f);
        }
        ExprKind::Call { receiver, args, .. } => {
            if let Some(r) = receiver {
                walk_expr(r, f);
            }
            for a in args {
                walk_expr(&a.value, f);
            }
        }
        ExprKind::VarDecl(d) => {
            if let Some(v) = &d.value {
                walk_expr(v, f);
            }
        }
        ExprKind::Range { start, end, .. } => {
            walk_expr(start, f);
            walk_expr(end, f);
        }
        _ => {}
    }
}
