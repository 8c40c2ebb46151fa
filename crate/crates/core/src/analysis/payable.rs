//! Declaration rules: `@payable`, public signatures, discarded results and
//! unreachable code.

use super::typeck::stmt_terminates;
use super::*;
use crate::diagnostics::{codes, Diagnostic, Note, Sink};
use crate::environment::{Environment, Owner, Type};

pub const PASS: u8 = 5;

pub fn check_declarations(module: &SourceModule, env: &Environment, ann: &Annotations, files: &[String]) -> Vec<Diagnostic> {
    let mut sink = Sink::new(files, PASS);
    for info in &env.functions {
        let Some(loc) = info.loc else { continue };
        let decl = function_decl(module, loc);
        let currency: Vec<&crate::environment::ParamInfo> =
            info.params.iter().filter(|p| p.is_implicit && env.is_currency(&p.ty)).collect();
        if info.is_payable {
            match currency.len() {
                0 => {
                    sink.error(
                        codes::PAYABLE_NO_IMPLICIT,
                        format!("{} is declared @payable but doesn't have an implicit parameter of a currency type.", info.name),
                        decl.name.span,
                    );
                }
                1 => {}
                _ => {
                    sink.error(
                        codes::AMBIGUOUS_PAYABLE,
                        "Ambiguous implicit payable value parameter. Only one parameter can be declared 'implicit' with a currency type.",
                        currency[1].span,
                    );
                }
            }
        }
        for p in info.params.iter().filter(|p| p.is_implicit) {
            let ok = info.is_payable && env.is_currency(&p.ty);
            if !ok {
                sink.error(
                    codes::INVALID_DECLARATION,
                    format!("Parameter '{}' can only be 'implicit' in a @payable function, with a currency type.", p.name),
                    p.span,
                );
            }
        }
        if info.is_payable && !matches!(info.owner, Owner::Contract(_)) {
            sink.error(codes::INVALID_DECLARATION, "Only contract functions can be declared @payable.", decl.name.span);
        }
        if info.is_public && matches!(info.owner, Owner::Contract(_)) {
            let dynamic: Vec<_> =
                info.params.iter().filter(|p| env.is_dynamic(&p.ty) && !(p.is_implicit && env.is_currency(&p.ty))).collect();
            if !dynamic.is_empty() {
                let d = sink.error(
                    codes::DYNAMIC_PARAMETER,
                    format!("Function '{}' cannot have dynamic parameters.", info.name),
                    decl.name.span,
                );
                for p in dynamic {
                    d.notes.push(Note {
                        message: format!("'{}' cannot be used as a parameter.", p.name),
                        line: Some(p.span.line),
                        column: Some(p.span.column),
                    });
                }
            }
            if env.is_dynamic(&info.ret) {
                sink.error(
                    codes::DYNAMIC_RETURN,
                    format!("Public function '{}' cannot return a value of dynamic type '{}'.", info.name, info.ret),
                    decl.name.span,
                );
            }
        }
        if let Some(body) = &decl.body {
            check_block(&mut sink, env, ann, body);
        }
    }
    sink.diagnostics
}

fn check_block(sink: &mut Sink<'_>, env: &Environment, ann: &Annotations, b: &Block) {
    let mut terminated = false;
    for s in &b.statements {
        if terminated {
            sink.warning(codes::CODE_AFTER_RETURN, "Code after return will never be executed.", s.span);
            break;
        }
        if let StmtKind::Expr(e) = &s.kind {
            if let Some((_, name, _)) = e.as_call() {
                let t = ann.ty(e);
                if t != Type::Void && !t.is_error() {
                    sink.error(
                        codes::DISCARDED_RESULT,
                        format!("Result of call to '{}' is unused; it is an error to discard a function result.", name.name),
                        e.span,
                    );
                }
            }
        }
        match &s.kind {
            StmtKind::For { body, .. } => check_block(sink, env, ann, body),
            StmtKind::If { then_block, else_block, .. } => {
                check_block(sink, env, ann, then_block);
                if let Some(b) = else_block {
                    check_block(sink, env, ann, b);
                }
            }
            _ => {}
        }
        terminated = stmt_terminates(s, ann, Some(env));
    }
}
