//! Static caller-protection and typestate compatibility of internal calls.

use std::collections::HashSet;

use super::*;
use crate::diagnostics::{codes, Diagnostic, Sink};
use crate::environment::{Environment, FunctionInfo, Owner};

pub const PASS: u8 = 2;

/// Whether a function with `caller`'s protections may call `callee` directly.
pub fn protections_compatible(caller: &FunctionInfo, callee: &FunctionInfo) -> bool {
    callee.admits_any() || caller.protections.iter().all(|p| callee.protections.contains(p))
}

/// Whether every state `caller` may run in admits `callee`. Empty means all.
pub fn states_compatible(caller: &FunctionInfo, callee: &FunctionInfo) -> bool {
    callee.states.is_empty() || (!caller.states.is_empty() && caller.states.iter().all(|s| callee.states.contains(s)))
}

fn group(states: &[String]) -> String {
    if states.is_empty() {
        "@(any)".into()
    } else {
        format!("@({})", states.join(", "))
    }
}

pub fn check_protections(module: &SourceModule, env: &Environment, ann: &Annotations, files: &[String]) -> Vec<Diagnostic> {
    let mut sink = Sink::new(files, PASS);
    for info in &env.functions {
        let (Some(loc), Owner::Contract(_)) = (info.loc, &info.owner) else { continue };
        let Some(body) = &function_decl(module, loc).body else { continue };
        walk_stmts(body, &mut |s| {
            for root in stmt_exprs(s) {
                let mut tried = HashSet::new();
                walk_expr(root, &mut |e| {
                    if let ExprKind::Try(inner) = &e.kind {
                        tried.insert(inner.unbracketed().id);
                    }
                    let ExprKind::Call { name, .. } = &e.kind else { return };
                    if tried.contains(&e.id) {
                        return;
                    }
                    let Some(CallTarget::Function(f)) = ann.calls.get(&e.id) else { return };
                    let callee = env.function(*f);
                    if callee.owner != info.owner {
                        return;
                    }
                    if !protections_compatible(info, callee) {
                        sink.error(
                            codes::INCOMPATIBLE_PROTECTION,
                            format!(
                                "Function '{}' is not in scope or cannot be called using caller protection '{}'.",
                                name.name,
                                info.protection_group()
                            ),
                            name.span,
                        )
                        .notes
                        .push(crate::diagnostics::Note {
                            message: format!(
                                "Perhaps you meant this function, which requires caller protection '{}'.",
                                callee.protection_group()
                            ),
                            line: Some(callee.span.line),
                            column: Some(callee.span.column),
                        });
                    } else if !states_compatible(info, callee) {
                        sink.error(
                            codes::INCOMPATIBLE_TYPESTATE,
                            format!(
                                "Function '{}' cannot be called from typestate group '{}'.",
                                name.name,
                                group(&info.states)
                            ),
                            name.span,
                        )
                        .notes
                        .push(crate::diagnostics::Note {
                            message: format!(
                                "Perhaps you meant this function, which requires typestate group '{}'.",
                                group(&callee.states)
                            ),
                            line: Some(callee.span.line),
                            column: Some(callee.span.column),
                        });
                    }
                });
            }
        });
    }
    sink.diagnostics
}
