//! Trait conformance: signature-only members must be implemented, default
//! bodies are copied into each conformer with `Self` replaced.

use std::collections::HashMap;

use crate::diagnostics::{codes, Diagnostic, Sink};
use crate::frontend::ast::*;
use crate::frontend::printer::print_type;

pub const PASS: u8 = 7;

type Key = (FunctionKind, String, Vec<(String, bool)>);

fn substitute(ty: &TypeAnnotation, conformer: &str) -> TypeAnnotation {
    match ty {
        TypeAnnotation::Named { name, generics } => TypeAnnotation::Named {
            name: if name.name == "Self" { Ident::new(conformer, name.span) } else { name.clone() },
            generics: generics.iter().map(|g| substitute(g, conformer)).collect(),
        },
        TypeAnnotation::Array(t) => TypeAnnotation::Array(Box::new(substitute(t, conformer))),
        TypeAnnotation::FixedArray(t, n) => TypeAnnotation::FixedArray(Box::new(substitute(t, conformer)), *n),
        TypeAnnotation::Dictionary(k, v) => {
            TypeAnnotation::Dictionary(Box::new(substitute(k, conformer)), Box::new(substitute(v, conformer)))
        }
    }
}

fn key(f: &FunctionDecl, conformer: &str) -> Key {
    (
        f.kind,
        f.name.name.clone(),
        f.params.iter().map(|p| (print_type(&substitute(&p.ty, conformer)), p.is_inout)).collect(),
    )
}

/// Copies `f` for `conformer`, substituting `Self` and renumbering expressions.
fn instantiate(f: &FunctionDecl, conformer: &str, next_id: &mut ExprId) -> FunctionDecl {
    let mut f = f.clone();
    let mut renumber = |e: &mut Expr| {
        e.id = *next_id;
        *next_id += 1;
        if let ExprKind::VarDecl(v) = &mut e.kind {
            if let Some(t) = &v.ty {
                v.ty = Some(substitute(t, conformer));
            }
        }
    };
    for p in &mut f.params {
        p.ty = substitute(&p.ty, conformer);
        if let Some(d) = &mut p.default {
            visit_expr_mut(d, &mut renumber);
        }
    }
    f.return_type = f.return_type.as_ref().map(|t| substitute(t, conformer));
    if let Some(body) = &mut f.body {
        visit_block_exprs_mut(body, &mut renumber);
        substitute_loop_types(body, conformer);
    }
    f
}

fn substitute_loop_types(block: &mut Block, conformer: &str) {
    for s in &mut block.statements {
        match &mut s.kind {
            StmtKind::For { ty, body, .. } => {
                if let Some(t) = ty {
                    *t = substitute(t, conformer);
                }
                substitute_loop_types(body, conformer);
            }
            StmtKind::If { then_block, else_block, .. } => {
                substitute_loop_types(then_block, conformer);
                if let Some(b) = else_block {
                    substitute_loop_types(b, conformer);
                }
            }
            _ => {}
        }
    }
}

/// Embeds trait members into conformers. Runs before the environment is built.
pub fn resolve_traits(module: &mut SourceModule, files: &[String]) -> Vec<Diagnostic> {
    let mut sink = Sink::new(files, PASS);
    let mut traits: HashMap<String, TraitDecl> = HashMap::new();
    for d in &module.declarations {
        if let TopLevelDecl::Trait(t) = d {
            traits.entry(t.name.name.clone()).or_insert_with(|| t.clone());
        }
    }
    let mut next_id = module.next_expr_id;
    let mut synthesized = Vec::new();
    let contract_names: Vec<String> = module
        .declarations
        .iter()
        .filter_map(|d| match d {
            TopLevelDecl::Contract(c) => Some(c.name.name.clone()),
            _ => None,
        })
        .collect();
    for i in 0..module.declarations.len() {
        let (name, conformances, kind) = match &module.declarations[i] {
            TopLevelDecl::Struct(s) => (s.name.clone(), s.conformances.clone(), TraitKind::Struct),
            TopLevelDecl::Contract(c) => (c.name.clone(), c.conformances.clone(), TraitKind::Contract),
            _ => continue,
        };
        for conf in &conformances {
            let Some(t) = traits.get(&conf.name) else {
                sink.error(codes::UNDEFINED_TRAIT, format!("Use of undeclared trait '{}'.", conf.name), conf.span);
                continue;
            };
            if t.kind != kind {
                let expected = match kind {
                    TraitKind::Struct => "structure",
                    TraitKind::Contract => "contract",
                };
                sink.error(
                    codes::UNDEFINED_TRAIT,
                    format!("Trait '{}' cannot be adopted by a {expected}.", conf.name),
                    conf.span,
                );
                continue;
            }
            let existing: Vec<Key> = match &module.declarations[i] {
                TopLevelDecl::Struct(s) => s
                    .members
                    .iter()
                    .filter_map(|m| match m {
                        StructMember::Function(f) => Some(key(f, &name.name)),
                        StructMember::Property(_) => None,
                    })
                    .collect(),
                _ => module
                    .declarations
                    .iter()
                    .filter_map(|d| match d {
                        TopLevelDecl::Behaviour(b) if b.contract.name == name.name => Some(b),
                        _ => None,
                    })
                    .flat_map(|b| b.members.iter().map(|f| key(f, &name.name)))
                    .collect(),
            };
            let mut added = Vec::new();
            for member in &t.members {
                match member {
                    TraitMember::Function(f) => {
                        let k = key(f, &name.name);
                        let present = existing.contains(&k);
                        match (&f.body, present) {
                            (Some(_), true) => {
                                sink.error(
                                    codes::DUPLICATE_TRAIT_BODY,
                                    format!(
                                        "'{}' already has a body in trait '{}'; a function can have at most one body.",
                                        f.name.name, conf.name
                                    ),
                                    name.span,
                                );
                            }
                            (Some(_), false) => added.push(instantiate(f, &name.name, &mut next_id)),
                            (None, true) => {}
                            (None, false) => {
                                sink.error(
                                    codes::MISSING_TRAIT_MEMBER,
                                    format!(
                                        "'{}' does not conform to trait '{}': missing '{}'.",
                                        name.name, conf.name, f.name.name
                                    ),
                                    name.span,
                                );
                            }
                        }
                    }
                    TraitMember::Event(e) => {
                        if let TopLevelDecl::Contract(c) = &mut module.declarations[i] {
                            let has = c.members.iter().any(|m| matches!(m, ContractMember::Event(x) if x.name.name == e.name.name));
                            if !has {
                                c.members.push(ContractMember::Event(e.clone()));
                            }
                        }
                    }
                }
            }
            if added.is_empty() {
                continue;
            }
            match &mut module.declarations[i] {
                TopLevelDecl::Struct(s) => s.members.extend(added.into_iter().map(StructMember::Function)),
                TopLevelDecl::Contract(_) if contract_names.contains(&name.name) => {
                    synthesized.push(TopLevelDecl::Behaviour(BehaviourDecl {
                        contract: name.clone(),
                        states: Vec::new(),
                        caller_binding: None,
                        protections: vec![Ident::new("any", name.span)],
                        members: added,
                        origin: t.origin,
                    }));
                }
                _ => {}
            }
        }
    }
    module.declarations.extend(synthesized);
    module.next_expr_id = next_id;
    sink.diagnostics
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::codes;
    use crate::pipeline::parse_sources;
    use crate::stdlib::StdlibMode;

    fn functions_of<'a>(m: &'a SourceModule, name: &str) -> Vec<&'a FunctionDecl> {
        m.declarations
            .iter()
            .filter_map(|d| match d {
                TopLevelDecl::Struct(s) if s.name.name == name => Some(s),
                _ => None,
            })
            .flat_map(|s| {
                s.members.iter().filter_map(|m| match m {
                    StructMember::Function(f) => Some(f),
                    StructMember::Property(_) => None,
                })
            })
            .collect()
    }

    #[test]
    fn wei_gains_default_transfers() {
        let (mut m, files, d) = parse_sources(&[], StdlibMode::Full);
        assert!(d.is_empty());
        let before = functions_of(&m, "Wei").len();
        let diags = resolve_traits(&mut m, &files);
        assert!(diags.is_empty(), "{diags:?}");
        let fs = functions_of(&m, "Wei");
        assert_eq!(fs.len(), before + 2);
        let transfers: Vec<_> = fs.iter().filter(|f| f.name.name == "transfer").collect();
        assert_eq!(transfers.len(), 2);
        for f in transfers {
            assert_eq!(print_type(&f.params[0].ty), "Wei");
        }
    }

    #[test]
    fn copied_bodies_get_fresh_ids() {
        let (mut m, files, _) = parse_sources(&[], StdlibMode::Full);
        let start = m.next_expr_id;
        resolve_traits(&mut m, &files);
        assert!(m.next_expr_id > start);
        let mut ids = Vec::new();
        for f in functions_of(&m, "Wei") {
            if let Some(b) = &f.body {
                let mut b = b.clone();
                visit_block_exprs_mut(&mut b, &mut |e| ids.push(e.id));
            }
        }
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn missing_member_and_duplicate_body() {
        let src = "struct trait T {\n  func a() -> Int\n  func b() -> Int {\n    return 1\n  }\n}\nstruct S: T {\n  func b() -> Int {\n    return 2\n  }\n}\n";
        let (mut m, files, _) = parse_sources(&[("t.flint", src)], StdlibMode::None);
        let d = resolve_traits(&mut m, &files);
        let codes_seen: Vec<&str> = d.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes_seen, vec![codes::MISSING_TRAIT_MEMBER, codes::DUPLICATE_TRAIT_BODY]);
        assert!(d.iter().all(|d| d.line == 7));
    }

    #[test]
    fn unknown_trait() {
        let (mut m, files, _) = parse_sources(&[("t.flint", "struct S: Nope {\n}\n")], StdlibMode::None);
        let d = resolve_traits(&mut m, &files);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, codes::UNDEFINED_TRAIT);
    }
}
