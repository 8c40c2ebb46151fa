//! Mutating statements, `mutating` declarations, fallbacks and let-constants.

use super::*;
use crate::diagnostics::{codes, Diagnostic, Note, Sink};
use crate::environment::{Environment, FnId, FunctionInfo, Owner};

pub const PASS: u8 = 3;

struct Cx<'a> {
    env: &'a Environment,
    ann: &'a Annotations,
    fn_id: FnId,
    info: &'a FunctionInfo,
}

impl Cx<'_> {
    fn writes_outside(&self, root: RootKind) -> bool {
        matches!(root, RootKind::State | RootKind::InoutParam)
    }

    /// Whether evaluating `e` may change state visible outside the function.
    fn expr_mutates(&self, e: &Expr) -> bool {
        let mut found = false;
        walk_expr(e, &mut |x| {
            found |= match &x.kind {
                ExprKind::Binary { op, lhs, .. } if op.is_assignment() => {
                    self.writes_outside(self.ann.root(Some(self.fn_id), lhs))
                }
                ExprKind::InOut(inner) => self.writes_outside(self.ann.root(Some(self.fn_id), inner)),
                ExprKind::Call { receiver, .. } => self.call_mutates(x, receiver.as_deref()),
                _ => false,
            };
        });
        found
    }

    fn call_mutates(&self, call: &Expr, receiver: Option<&Expr>) -> bool {
        let Some(CallTarget::Function(f)) = self.ann.calls.get(&call.id) else { return false };
        let callee = self.env.function(*f);
        if !callee.is_mutating {
            return false;
        }
        match &callee.owner {
            Owner::Contract(_) | Owner::Global => true,
            Owner::Struct(_) => match receiver {
                None => true,
                Some(r) => self.writes_outside(self.ann.root(Some(self.fn_id), r)),
            },
        }
    }

    fn stmt_mutates(&self, s: &Stmt) -> bool {
        matches!(s.kind, StmtKind::Become(_)) || stmt_exprs(s).into_iter().any(|e| self.expr_mutates(e))
    }

    fn let_violation(&self, lhs: &Expr) -> Option<(String, Span)> {
        let lhs = lhs.unbracketed();
        let props = self.env.properties(&self.info.owner);
        let in_own_init = self.info.kind == FunctionKind::Initialiser;
        match &lhs.kind {
            ExprKind::Identifier(_) => match self.ann.refs.get(&lhs.id)? {
                Ref::Local(l) => {
                    let local = self.ann.local(self.fn_id, *l);
                    local.is_let.then(|| (local.name.clone(), local.span))
                }
                Ref::Property(i) => {
                    let p = &props[*i];
                    (p.is_let && (!in_own_init || p.has_default)).then(|| (p.name.clone(), p.span))
                }
                _ => None,
            },
            ExprKind::Member { base, .. } => match self.ann.members.get(&lhs.id)? {
                MemberRef::SelfProperty(i) => {
                    let p = &props[*i];
                    (p.is_let && (!in_own_init || p.has_default)).then(|| (p.name.clone(), p.span))
                }
                MemberRef::Field { strukt, index } => {
                    let p = &self.env.structs[strukt].properties[*index];
                    let own = in_own_init
                        && matches!(base.unbracketed().kind, ExprKind::SelfValue)
                        && self.info.owner == Owner::Struct(strukt.clone());
                    (p.is_let && (!own || p.has_default)).then(|| (p.name.clone(), p.span))
                }
                _ => None,
            },
            ExprKind::Subscript { base, .. } => self.let_violation(base),
            _ => None,
        }
    }
}

pub fn check_mutation(module: &SourceModule, env: &Environment, ann: &Annotations, files: &[String]) -> Vec<Diagnostic> {
    let mut sink = Sink::new(files, PASS);
    for (id, info) in env.functions.iter().enumerate() {
        let Some(loc) = info.loc else { continue };
        let decl = function_decl(module, loc);
        let Some(body) = &decl.body else { continue };
        let cx = Cx { env, ann, fn_id: id, info };
        let checked = info.kind != FunctionKind::Initialiser && info.owner != Owner::Global;
        let is_fallback = info.kind == FunctionKind::Fallback;
        let mut mutating_seen = false;
        let mut unresolved_call = false;
        let mut let_assigned: Vec<usize> = Vec::new();
        walk_stmts(body, &mut |s| {
            for e in stmt_exprs(s) {
                walk_expr(e, &mut |x| {
                    unresolved_call |= matches!(x.kind, ExprKind::Call { .. }) && !ann.calls.contains_key(&x.id);
                    let ExprKind::Binary { op, lhs, .. } = &x.kind else { return };
                    if !op.is_assignment() {
                        return;
                    }
                    if let Some((name, span)) = cx.let_violation(lhs) {
                        let_error(&mut sink, &name, lhs.span, span);
                    } else if info.kind == FunctionKind::Initialiser {
                        if let Some(i) = own_property(ann, lhs) {
                            let p = &env.properties(&info.owner)[i];
                            if p.is_let {
                                if let_assigned.contains(&i) {
                                    let_error(&mut sink, &p.name, lhs.span, p.span);
                                }
                                let_assigned.push(i);
                            }
                        }
                    }
                });
            }
            if !checked || !cx.stmt_mutates(s) {
                return;
            }
            mutating_seen = true;
            if is_fallback {
                sink.error(codes::FALLBACK_MUTATION, "Fallback functions cannot change any state.", s.span);
            } else if !info.is_mutating {
                sink.error(codes::MUTATING_IN_NONMUTATING, "Use of mutating statement in a nonmutating function.", s.span);
            }
        });
        if !checked {
            continue;
        }
        if is_fallback && info.is_mutating {
            sink.warning(
                codes::MUTATING_FALLBACK,
                "Fallback functions cannot change any state; 'mutating' has no effect.",
                decl.name.span,
            );
        } else if info.is_mutating && !mutating_seen && !unresolved_call {
            sink.warning(
                codes::UNNECESSARY_MUTATING,
                "Function does not have to be declared mutating: none of its statements are mutating.",
                decl.name.span,
            );
        }
    }
    sink.diagnostics
}

/// Property of the enclosing type assigned by `lhs` as a whole.
pub fn own_property(ann: &Annotations, lhs: &Expr) -> Option<usize> {
    let lhs = lhs.unbracketed();
    match &lhs.kind {
        ExprKind::Identifier(_) => match ann.refs.get(&lhs.id) {
            Some(Ref::Property(i)) => Some(*i),
            _ => None,
        },
        ExprKind::Member { .. } => match ann.members.get(&lhs.id) {
            Some(MemberRef::SelfProperty(i)) => Some(*i),
            _ => None,
        },
        _ => None,
    }
}

fn let_error(sink: &mut Sink<'_>, name: &str, at: Span, declared: Span) {
    sink.error(codes::LET_REASSIGNMENT, format!("Cannot reassign to value: '{name}' is a let-constant."), at).notes.push(
        Note {
            message: format!("'{name}' is declared on line {}, column {}.", declared.line, declared.column),
            line: Some(declared.line),
            column: Some(declared.column),
        },
    );
}
