//! Initialiser rules: public initialisers and definite assignment of properties.

use std::collections::BTreeSet;

use super::mutation::own_property;
use super::typeck::is_fatal_call;
use super::*;
use crate::diagnostics::{codes, Diagnostic, Note, Sink};
use crate::environment::{Environment, FnId, PropertyInfo};
use crate::stdlib;

pub const PASS: u8 = 4;

pub fn check_initialisation(module: &SourceModule, env: &Environment, ann: &Annotations, files: &[String]) -> Vec<Diagnostic> {
    let mut sink = Sink::new(files, PASS);
    for c in env.contracts.values() {
        if c.inits.is_empty() {
            let missing: Vec<&PropertyInfo> = c.properties.iter().filter(|p| !p.has_default).collect();
            if missing.is_empty() {
                missing_public(&mut sink, &c.name, c.span);
            }
            for p in missing {
                unassigned(&mut sink, p);
            }
            continue;
        }
        let public: Vec<FnId> = c.inits.iter().copied().filter(|&f| env.function(f).is_public).collect();
        if public.is_empty() {
            missing_public(&mut sink, &c.name, c.span);
        }
        multiple_public(&mut sink, env, &public);
        for &f in &public {
            let info = env.function(f);
            if !info.admits_any() {
                sink.error(
                    codes::PUBLIC_INIT_NOT_ANY,
                    "Public contract initialiser should be callable using caller capability 'any'.",
                    info.span,
                );
            }
        }
        for &f in &c.inits {
            definite_assignment(&mut sink, module, env, ann, f, &c.properties);
        }
    }
    for s in env.structs.values() {
        if s.origin == Origin::Stdlib && s.name == stdlib::GLOBAL_STRUCT {
            continue;
        }
        if s.inits.is_empty() {
            for p in s.properties.iter().filter(|p| !p.has_default) {
                unassigned(&mut sink, p);
            }
            continue;
        }
        let public: Vec<FnId> = s.inits.iter().copied().filter(|&f| env.function(f).is_public).collect();
        multiple_public(&mut sink, env, &public);
        for &f in &s.inits {
            definite_assignment(&mut sink, module, env, ann, f, &s.properties);
        }
    }
    sink.diagnostics
}

fn missing_public(sink: &mut Sink<'_>, name: &str, span: Span) {
    sink.error(
        codes::MISSING_PUBLIC_INIT,
        format!("Contract '{name}' needs a public initialiser accessible using caller capability 'any'."),
        span,
    );
}

fn unassigned(sink: &mut Sink<'_>, p: &PropertyInfo) {
    sink.error(
        codes::UNASSIGNED_NO_INIT,
        format!("State property '{}' needs to be assigned a value, as no initialiser was declared.", p.name),
        p.span,
    );
}

fn multiple_public(sink: &mut Sink<'_>, env: &Environment, public: &[FnId]) {
    if let Some((&first, rest)) = public.split_first() {
        let first = env.function(first).span;
        for &f in rest {
            sink.error(codes::MULTIPLE_PUBLIC_INIT, "A public initialiser has already been defined.", env.function(f).span)
                .notes
                .push(Note {
                    message: format!("A public initialiser is defined on line {}, column {}.", first.line, first.column),
                    line: Some(first.line),
                    column: Some(first.column),
                });
        }
    }
}

fn definite_assignment(
    sink: &mut Sink<'_>,
    module: &SourceModule,
    env: &Environment,
    ann: &Annotations,
    f: FnId,
    properties: &[PropertyInfo],
) {
    let info = env.function(f);
    let Some(loc) = info.loc else { return };
    let Some(body) = &function_decl(module, loc).body else { return };
    let required: BTreeSet<usize> = (0..properties.len()).filter(|&i| !properties[i].has_default).collect();
    let mut missing_at: Vec<(Span, Vec<usize>)> = Vec::new();
    let end = block(env, ann, body, BTreeSet::new(), &required, &mut missing_at);
    if let Some(set) = end {
        let missing: Vec<usize> = required.difference(&set).copied().collect();
        if !missing.is_empty() {
            missing_at.push((info.span, missing));
        }
    }
    for (span, missing) in missing_at {
        let d = sink.error(codes::RETURN_UNINITIALISED, "Return from initialiser without initialising all properties.", span);
        for i in missing {
            d.notes.push(Note { message: format!("'{}' is uninitialised.", properties[i].name), line: None, column: None });
        }
    }
}

/// Properties definitely assigned when control falls off the end of `b`,
/// or `None` when every path returns or traps.
fn block(
    env: &Environment,
    ann: &Annotations,
    b: &Block,
    mut assigned: BTreeSet<usize>,
    required: &BTreeSet<usize>,
    missing_at: &mut Vec<(Span, Vec<usize>)>,
) -> Option<BTreeSet<usize>> {
    for s in &b.statements {
        match &s.kind {
            StmtKind::Expr(e) => {
                if is_fatal_call(e, ann, env) {
                    return None;
                }
                if let ExprKind::Binary { op: BinaryOp::Assign, lhs, .. } = &e.unbracketed().kind {
                    if let Some(i) = own_property(ann, lhs) {
                        assigned.insert(i);
                    }
                }
            }
            StmtKind::Return(_) => {
                let missing: Vec<usize> = required.difference(&assigned).copied().collect();
                if !missing.is_empty() {
                    missing_at.push((s.span, missing));
                }
                return None;
            }
            StmtKind::If { then_block, else_block, .. } => {
                let t = block(env, ann, then_block, assigned.clone(), required, missing_at);
                let e = match else_block {
                    Some(b) => block(env, ann, b, assigned.clone(), required, missing_at),
                    None => Some(assigned.clone()),
                };
                assigned = match (t, e) {
                    (None, None) => return None,
                    (Some(x), None) | (None, Some(x)) => x,
                    (Some(x), Some(y)) => x.intersection(&y).copied().collect(),
                };
            }
            StmtKind::For { body, .. } => {
                block(env, ann, body, assigned.clone(), required, missing_at);
            }
            StmtKind::Become(_) | StmtKind::Emit { .. } => {}
        }
    }
    Some(assigned)
}
