//! Declaration facts gathered from a parsed module: contracts, structures,
//! traits, typestates, protections and function signatures.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{codes, Diagnostic, Sink};
use crate::frontend::ast::*;
use crate::frontend::Span;
use crate::lowering::mangle::mangle;
use crate::lowering::selector::{compute_selector, selector_hex, signature};
use crate::stdlib;

pub const PASS: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Address,
    Int,
    Bool,
    String,
    Void,
    FixedArray(Box<Type>, u64),
    Array(Box<Type>),
    Dictionary(Box<Type>, Box<Type>),
    /// A structure or enumeration.
    Named(String),
    /// `Self` inside a trait.
    SelfType,
    /// The value of a range expression.
    Range,
    /// Placeholder after an error, compatible with everything.
    Error,
}

impl Type {
    pub fn is_basic(&self) -> bool {
        matches!(self, Type::Address | Type::Int | Type::Bool | Type::String)
    }

    pub fn is_collection(&self) -> bool {
        matches!(self, Type::Array(_) | Type::Dictionary(..) | Type::FixedArray(..))
    }

    pub fn is_error(&self) -> bool {
        match self {
            Type::Error => true,
            Type::Array(t) | Type::FixedArray(t, _) => t.is_error(),
            Type::Dictionary(k, v) => k.is_error() || v.is_error(),
            _ => false,
        }
    }

    /// Structural equality, with errors compatible with anything.
    pub fn compatible(&self, other: &Type) -> bool {
        match (self, other) {
            (Type::Error, _) | (_, Type::Error) => true,
            (Type::Array(a), Type::Array(b)) => a.compatible(b),
            (Type::FixedArray(a, n), Type::FixedArray(b, m)) => n == m && a.compatible(b),
            (Type::Dictionary(a, b), Type::Dictionary(c, d)) => a.compatible(c) && b.compatible(d),
            (a, b) => a == b,
        }
    }

    pub fn is_currency(&self) -> bool {
        matches!(self, Type::Named(n) if n == stdlib::CURRENCY)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Address => f.write_str("Address"),
            Type::Int => f.write_str("Int"),
            Type::Bool => f.write_str("Bool"),
            Type::String => f.write_str("String"),
            Type::Void => f.write_str("Void"),
            Type::FixedArray(t, n) => write!(f, "{t}[{n}]"),
            Type::Array(t) => write!(f, "[{t}]"),
            Type::Dictionary(k, v) => write!(f, "[{k}: {v}]"),
            Type::Named(n) => f.write_str(n),
            Type::SelfType => f.write_str("Self"),
            Type::Range => f.write_str("Range"),
            Type::Error => f.write_str("<error>"),
        }
    }
}

pub type FnId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Owner {
    Contract(String),
    Struct(String),
    /// Functions of `Flint$Global`, called without a receiver.
    Global,
}

impl Owner {
    pub fn type_name(&self) -> &str {
        match self {
            Owner::Contract(n) | Owner::Struct(n) => n,
            Owner::Global => stdlib::GLOBAL_STRUCT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Private,
    Visible,
    Public,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyInfo {
    pub name: String,
    pub ty: Type,
    pub is_let: bool,
    pub has_default: bool,
    pub visibility: Visibility,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventInfo {
    pub name: String,
    pub fields: Vec<(String, Type)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub ty: Type,
    pub is_inout: bool,
    pub is_implicit: bool,
    pub has_default: bool,
    pub span: Span,
}

/// Position of a function declaration: top-level declaration index, member index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FuncLoc {
    pub decl: usize,
    pub member: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionInfo {
    pub name: String,
    pub mangled: String,
    pub owner: Owner,
    pub kind: FunctionKind,
    pub params: Vec<ParamInfo>,
    pub ret: Type,
    pub is_mutating: bool,
    pub is_public: bool,
    pub is_payable: bool,
    /// Protection names of the enclosing behaviour; empty outside contracts.
    pub protections: Vec<String>,
    /// Typestates of the enclosing behaviour; empty means every state.
    pub states: Vec<String>,
    pub caller_binding: Option<String>,
    pub behaviour: Option<usize>,
    /// `None` for synthesized getters.
    pub loc: Option<FuncLoc>,
    pub getter_of: Option<usize>,
    pub span: Span,
    pub origin: Origin,
}

impl FunctionInfo {
    pub fn admits_any(&self) -> bool {
        self.protections.iter().any(|p| p == "any")
    }

    pub fn param_key(&self) -> Vec<(Type, bool)> {
        self.params.iter().map(|p| (p.ty.clone(), p.is_inout)).collect()
    }

    pub fn external_params(&self) -> impl Iterator<Item = &ParamInfo> {
        self.params.iter().filter(|p| !p.is_implicit)
    }

    pub fn protection_group(&self) -> String {
        format!("({})", self.protections.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProtectionKind {
    Any,
    AddressProperty(String),
    AddressListProperty(String),
    Predicate(FnId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviourInfo {
    pub decl: usize,
    pub states: Vec<String>,
    pub protections: Vec<(String, Option<ProtectionKind>)>,
    pub caller_binding: Option<String>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectorEntry {
    pub selector: [u8; 4],
    pub signature: String,
    pub function: FnId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractInfo {
    pub name: String,
    pub span: Span,
    pub decl: usize,
    pub typestates: Vec<Ident>,
    pub properties: Vec<PropertyInfo>,
    pub events: IndexMap<String, EventInfo>,
    pub functions: Vec<FnId>,
    pub inits: Vec<FnId>,
    pub fallbacks: Vec<FnId>,
    pub behaviours: Vec<BehaviourInfo>,
    pub selectors: Vec<SelectorEntry>,
}

impl ContractInfo {
    pub fn typestate_ordinal(&self, name: &str) -> Option<u32> {
        self.typestates.iter().position(|s| s.name == name).map(|i| i as u32 + 1)
    }

    pub fn property(&self, name: &str) -> Option<(usize, &PropertyInfo)> {
        self.properties.iter().enumerate().find(|(_, p)| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructInfo {
    pub name: String,
    pub span: Span,
    pub decl: usize,
    pub properties: Vec<PropertyInfo>,
    pub functions: Vec<FnId>,
    pub inits: Vec<FnId>,
    pub origin: Origin,
}

impl StructInfo {
    pub fn property(&self, name: &str) -> Option<(usize, &PropertyInfo)> {
        self.properties.iter().enumerate().find(|(_, p)| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitInfo {
    pub name: String,
    pub kind: TraitKind,
    pub span: Span,
    pub decl: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumInfo {
    pub name: String,
    pub cases: Vec<String>,
    pub span: Span,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub contracts: IndexMap<String, ContractInfo>,
    pub structs: IndexMap<String, StructInfo>,
    pub traits: IndexMap<String, TraitInfo>,
    pub enums: IndexMap<String, EnumInfo>,
    pub functions: Vec<FunctionInfo>,
    /// Functions of `Flint$Global`.
    pub globals: Vec<FnId>,
}

impl Environment {
    pub fn function(&self, id: FnId) -> &FunctionInfo {
        &self.functions[id]
    }

    /// Functions of `owner` named `name`, initialisers excluded.
    pub fn functions_named(&self, owner: &Owner, name: &str) -> Vec<FnId> {
        let list: &[FnId] = match owner {
            Owner::Contract(c) => self.contracts.get(c).map_or(&[], |c| &c.functions),
            Owner::Struct(s) => self.structs.get(s).map_or(&[], |s| &s.functions),
            Owner::Global => &self.globals,
        };
        list.iter().copied().filter(|&f| self.functions[f].name == name).collect()
    }

    pub fn properties(&self, owner: &Owner) -> &[PropertyInfo] {
        match owner {
            Owner::Contract(c) => self.contracts.get(c).map_or(&[], |c| &c.properties),
            Owner::Struct(s) => self.structs.get(s).map_or(&[], |s| &s.properties),
            Owner::Global => &[],
        }
    }

    /// Storage or memory words occupied by a value of `ty`.
    pub fn words(&self, ty: &Type) -> u64 {
        match ty {
            Type::Named(n) => match self.structs.get(n) {
                Some(s) => s.properties.iter().map(|p| self.words(&p.ty)).sum(),
                None => 1,
            },
            Type::FixedArray(t, n) => self.words(t) * n,
            _ => 1,
        }
    }

    /// Word offset of `field` within structure `name`.
    pub fn field_offset(&self, name: &str, field: usize) -> u64 {
        self.structs[name].properties[..field].iter().map(|p| self.words(&p.ty)).sum()
    }

    pub fn is_struct_type(&self, ty: &Type) -> bool {
        matches!(ty, Type::Named(n) if self.structs.contains_key(n))
    }

    pub fn is_enum_type(&self, ty: &Type) -> bool {
        matches!(ty, Type::Named(n) if self.enums.contains_key(n))
    }

    /// Fits in one word and compares by value.
    pub fn is_word_type(&self, ty: &Type) -> bool {
        ty.is_basic() || self.is_enum_type(ty)
    }

    /// Structures, arrays and dictionaries.
    pub fn is_dynamic(&self, ty: &Type) -> bool {
        ty.is_collection() || self.is_struct_type(ty)
    }

    pub fn is_currency(&self, ty: &Type) -> bool {
        ty.is_currency() && self.structs.contains_key(stdlib::CURRENCY)
    }
}

/// Resolves a caller-protection identifier of `contract`. A property wins
/// over a predicate function of the same name.
pub fn resolve_protection(env: &Environment, contract: &str, name: &str) -> Option<ProtectionKind> {
    resolve_protection_detail(env, contract, name).0
}

/// The resolution plus whether both a property and a predicate matched.
fn resolve_protection_detail(env: &Environment, contract: &str, name: &str) -> (Option<ProtectionKind>, bool) {
    if name == "any" {
        return (Some(ProtectionKind::Any), false);
    }
    let Some(info) = env.contracts.get(contract) else { return (None, false) };
    let property = info.property(name).and_then(|(_, p)| match &p.ty {
        Type::Address => Some(ProtectionKind::AddressProperty(name.to_string())),
        Type::Array(t) if **t == Type::Address => Some(ProtectionKind::AddressListProperty(name.to_string())),
        _ => None,
    });
    let predicate = env.functions_named(&Owner::Contract(contract.to_string()), name).into_iter().find(|&f| {
        let f = env.function(f);
        f.kind == FunctionKind::Function
            && f.params.len() == 1
            && f.params[0].ty == Type::Address
            && !f.params[0].is_inout
            && f.ret == Type::Bool
            && !f.is_mutating
    });
    match (property, predicate) {
        (Some(p), Some(_)) => (Some(p), true),
        (Some(p), None) => (Some(p), false),
        (None, Some(f)) => (Some(ProtectionKind::Predicate(f)), false),
        (None, None) => (None, false),
    }
}

struct Builder<'a> {
    module: &'a SourceModule,
    env: Environment,
    sink: Sink<'a>,
    /// First declaration span of every top-level name.
    names: HashMap<String, Span>,
}

pub fn build_environment(module: &SourceModule, files: &[String]) -> (Environment, Vec<Diagnostic>) {
    let mut b = Builder { module, env: Environment::default(), sink: Sink::new(files, PASS), names: HashMap::new() };
    b.register_names();
    b.register_structs();
    b.register_contracts();
    b.register_behaviours();
    b.synthesize_getters();
    b.resolve_protections();
    b.check_function_redeclarations();
    b.compute_selectors();
    (b.env, b.sink.diagnostics)
}

fn redeclaration(sink: &mut Sink<'_>, name: &str, span: Span, previous: Span) {
    sink.error(codes::REDECLARATION, format!("Invalid redeclaration of '{name}'."), span).notes.push(
        crate::diagnostics::Note {
            message: format!("Previous declaration on line {}, column {}.", previous.line, previous.column),
            line: Some(previous.line),
            column: Some(previous.column),
        },
    );
}

impl<'a> Builder<'a> {
    fn register_names(&mut self) {
        for (i, decl) in self.module.declarations.iter().enumerate() {
            let (name, span) = match decl {
                TopLevelDecl::Contract(c) => (&c.name.name, c.name.span),
                TopLevelDecl::Struct(s) => (&s.name.name, s.name.span),
                TopLevelDecl::Enum(e) => (&e.name.name, e.name.span),
                TopLevelDecl::Trait(t) => (&t.name.name, t.name.span),
                TopLevelDecl::Behaviour(_) => continue,
            };
            if let Some(prev) = self.names.get(name) {
                redeclaration(&mut self.sink, name, span, *prev);
                continue;
            }
            self.names.insert(name.clone(), span);
            match decl {
                TopLevelDecl::Contract(_) => {
                    self.env.contracts.insert(
                        name.clone(),
                        ContractInfo {
                            name: name.clone(),
                            span,
                            decl: i,
                            typestates: Vec::new(),
                            properties: Vec::new(),
                            events: IndexMap::new(),
                            functions: Vec::new(),
                            inits: Vec::new(),
                            fallbacks: Vec::new(),
                            behaviours: Vec::new(),
                            selectors: Vec::new(),
                        },
                    );
                }
                TopLevelDecl::Struct(s) => {
                    self.env.structs.insert(
                        name.clone(),
                        StructInfo {
                            name: name.clone(),
                            span,
                            decl: i,
                            properties: Vec::new(),
                            functions: Vec::new(),
                            inits: Vec::new(),
                            origin: s.origin,
                        },
                    );
                }
                TopLevelDecl::Enum(e) => {
                    let mut cases: Vec<String> = Vec::new();
                    for case in &e.cases {
                        if cases.contains(&case.name) {
                            let prev = e.cases.iter().find(|c| c.name == case.name).unwrap().span;
                            redeclaration(&mut self.sink, &case.name, case.span, prev);
                        } else {
                            cases.push(case.name.clone());
                        }
                    }
                    self.env.enums.insert(name.clone(), EnumInfo { name: name.clone(), cases, span });
                }
                TopLevelDecl::Trait(t) => {
                    self.env.traits.insert(name.clone(), TraitInfo { name: name.clone(), kind: t.kind, span, decl: i });
                }
                TopLevelDecl::Behaviour(_) => unreachable!(),
            }
        }
    }

    fn resolve_type(&mut self, ann: &TypeAnnotation, self_name: Option<&str>) -> Type {
        match ann {
            TypeAnnotation::Named { name, generics } => {
                if !generics.is_empty() {
                    self.sink.error(
                        codes::INVALID_DECLARATION,
                        format!("Generic type arguments are not supported on '{}'.", name.name),
                        name.span,
                    );
                    return Type::Error;
                }
                match name.name.as_str() {
                    "Address" => Type::Address,
                    "Int" => Type::Int,
                    "Bool" => Type::Bool,
                    "String" => Type::String,
                    "Void" => Type::Void,
                    "Self" => match self_name {
                        Some(s) => Type::Named(s.to_string()),
                        None => Type::SelfType,
                    },
                    n if self.env.structs.contains_key(n) || self.env.enums.contains_key(n) => Type::Named(n.to_string()),
                    n => {
                        self.sink.error(codes::UNDECLARED_TYPE, format!("Use of undeclared type '{n}'."), name.span);
                        Type::Error
                    }
                }
            }
            TypeAnnotation::Array(t) => Type::Array(Box::new(self.resolve_type(t, self_name))),
            TypeAnnotation::FixedArray(t, n) => Type::FixedArray(Box::new(self.resolve_type(t, self_name)), *n),
            TypeAnnotation::Dictionary(k, v) => {
                let key = self.resolve_type(k, self_name);
                if !(key.is_basic() || key.is_error() || self.env.enums.contains_key(&key.to_string())) {
                    self.sink.error(
                        codes::INVALID_DECLARATION,
                        format!("Dictionary keys must have a basic type, not '{key}'."),
                        k.span(),
                    );
                }
                Type::Dictionary(Box::new(key), Box::new(self.resolve_type(v, self_name)))
            }
        }
    }

    fn property(&mut self, v: &VariableDecl, self_name: &str, existing: &[PropertyInfo]) -> Option<PropertyInfo> {
        if let Some(prev) = existing.iter().find(|p| p.name == v.name.name) {
            redeclaration(&mut self.sink, &v.name.name, v.name.span, prev.span);
            return None;
        }
        let ty = match &v.ty {
            Some(t) => self.resolve_type(t, Some(self_name)),
            None => {
                self.sink.error(
                    codes::INVALID_DECLARATION,
                    format!("State property '{}' needs a type annotation.", v.name.name),
                    v.name.span,
                );
                Type::Error
            }
        };
        if matches!(ty, Type::Void | Type::SelfType) {
            self.sink.error(
                codes::INVALID_DECLARATION,
                format!("State property '{}' cannot have type '{ty}'.", v.name.name),
                v.name.span,
            );
        }
        let visibility = if v.modifiers.contains(&Modifier::Public) {
            Visibility::Public
        } else if v.modifiers.contains(&Modifier::Visible) {
            Visibility::Visible
        } else {
            Visibility::Private
        };
        if v.modifiers.contains(&Modifier::Mutating) {
            self.sink.error(
                codes::INVALID_DECLARATION,
                format!("Property '{}' cannot be declared 'mutating'.", v.name.name),
                v.name.span,
            );
        }
        Some(PropertyInfo {
            name: v.name.name.clone(),
            ty,
            is_let: v.is_let,
            has_default: v.value.is_some(),
            visibility,
            span: v.name.span,
        })
    }

    fn register_structs(&mut self) {
        for (i, decl) in self.module.declarations.iter().enumerate() {
            let TopLevelDecl::Struct(s) = decl else { continue };
            if self.env.structs.get(&s.name.name).map(|x| x.decl) != Some(i) {
                continue;
            }
            let mut props = Vec::new();
            for m in &s.members {
                if let StructMember::Property(v) = m {
                    if let Some(p) = self.property(v, &s.name.name, &props) {
                        props.push(p);
                    }
                }
            }
            self.env.structs[&s.name.name].properties = props;
        }
        self.check_struct_cycles();
        for (i, decl) in self.module.declarations.iter().enumerate() {
            let TopLevelDecl::Struct(s) = decl else { continue };
            if self.env.structs.get(&s.name.name).map(|x| x.decl) != Some(i) {
                continue;
            }
            let is_global = s.origin == Origin::Stdlib && s.name.name == stdlib::GLOBAL_STRUCT;
            let owner = if is_global { Owner::Global } else { Owner::Struct(s.name.name.clone()) };
            for (m, member) in s.members.iter().enumerate() {
                let StructMember::Function(f) = member else { continue };
                if f.kind == FunctionKind::Fallback {
                    self.sink.error(
                        codes::INVALID_DECLARATION,
                        "Fallback functions can only be declared in contract behaviour declarations.",
                        f.name.span,
                    );
                    continue;
                }
                let id = self.register_function(f, owner.clone(), FuncLoc { decl: i, member: m }, None, s.origin);
                let info = &mut self.env.structs[&s.name.name];
                if f.kind == FunctionKind::Initialiser {
                    info.inits.push(id);
                } else if is_global {
                    self.env.globals.push(id);
                } else {
                    info.functions.push(id);
                }
            }
        }
    }

    fn check_struct_cycles(&mut self) {
        fn contains(env: &Environment, ty: &Type, target: &str, seen: &mut BTreeSet<String>) -> bool {
            match ty {
                Type::Named(n) => {
                    if n == target {
                        return true;
                    }
                    if !seen.insert(n.clone()) {
                        return false;
                    }
                    env.structs.get(n).is_some_and(|s| s.properties.iter().any(|p| contains(env, &p.ty, target, seen)))
                }
                Type::FixedArray(t, _) => contains(env, t, target, seen),
                _ => false,
            }
        }
        let mut cyclic = Vec::new();
        for s in self.env.structs.values() {
            if s.properties.iter().any(|p| contains(&self.env, &p.ty, &s.name, &mut BTreeSet::new())) {
                cyclic.push((s.name.clone(), s.span));
            }
        }
        for (name, span) in cyclic {
            self.sink.error(codes::INVALID_DECLARATION, format!("Structure '{name}' cannot contain itself."), span);
            for p in &mut self.env.structs[&name].properties {
                if matches!(&p.ty, Type::Named(n) if n == &name) || matches!(&p.ty, Type::FixedArray(..)) {
                    p.ty = Type::Error;
                }
            }
        }
    }

    fn register_contracts(&mut self) {
        for (i, decl) in self.module.declarations.iter().enumerate() {
            let TopLevelDecl::Contract(c) = decl else { continue };
            if self.env.contracts.get(&c.name.name).map(|x| x.decl) != Some(i) {
                continue;
            }
            let mut props = Vec::new();
            let mut events: IndexMap<String, EventInfo> = IndexMap::new();
            for m in &c.members {
                match m {
                    ContractMember::Property(v) => {
                        if let Some(p) = self.property(v, &c.name.name, &props) {
                            props.push(p);
                        }
                    }
                    ContractMember::Event(e) => {
                        if let Some(prev) = events.get(&e.name.name) {
                            let prev = prev.span;
                            redeclaration(&mut self.sink, &e.name.name, e.name.span, prev);
                            continue;
                        }
                        let info = self.event(e, &c.name.name);
                        events.insert(e.name.name.clone(), info);
                    }
                }
            }
            let mut states: Vec<Ident> = Vec::new();
            for s in &c.typestates {
                if let Some(prev) = states.iter().find(|x| x.name == s.name) {
                    redeclaration(&mut self.sink, &s.name, s.span, prev.span);
                    continue;
                }
                if s.name == "any" {
                    self.sink.error(codes::TYPESTATE_COLLISION, "'any' cannot be used as a typestate name.", s.span);
                    continue;
                }
                if let Some(p) = props.iter().find(|p| p.name == s.name) {
                    self.sink
                        .error(
                            codes::TYPESTATE_COLLISION,
                            format!("Typestate '{}' collides with a state property of '{}'.", s.name, c.name.name),
                            s.span,
                        )
                        .notes
                        .push(crate::diagnostics::Note {
                            message: format!("'{}' is declared on line {}, column {}.", p.name, p.span.line, p.span.column),
                            line: Some(p.span.line),
                            column: Some(p.span.column),
                        });
                    continue;
                }
                states.push(s.clone());
            }
            let info = &mut self.env.contracts[&c.name.name];
            info.properties = props;
            info.events = events;
            info.typestates = states;
        }
    }

    fn event(&mut self, e: &EventDecl, self_name: &str) -> EventInfo {
        let mut fields: Vec<(String, Type)> = Vec::new();
        for f in &e.fields {
            if fields.iter().any(|(n, _)| n == &f.name.name) {
                let prev = e.fields.iter().find(|x| x.name.name == f.name.name).unwrap().name.span;
                redeclaration(&mut self.sink, &f.name.name, f.name.span, prev);
                continue;
            }
            let ty = match &f.ty {
                Some(t) => self.resolve_type(t, Some(self_name)),
                None => Type::Error,
            };
            if !(ty.is_basic() || ty.is_error() || self.env.is_enum_type(&ty)) {
                self.sink.error(
                    codes::INVALID_DECLARATION,
                    format!("Event field '{}' must have a basic type, not '{ty}'.", f.name.name),
                    f.name.span,
                );
            }
            fields.push((f.name.name.clone(), ty));
        }
        EventInfo { name: e.name.name.clone(), fields, span: e.name.span }
    }

    fn register_behaviours(&mut self) {
        for (i, decl) in self.module.declarations.iter().enumerate() {
            let TopLevelDecl::Behaviour(b) = decl else { continue };
            let name = &b.contract.name;
            if !self.env.contracts.contains_key(name) {
                let message = if self.names.contains_key(name) {
                    format!("Contract behaviour declaration for {name} has no associated contract declaration.")
                } else {
                    format!("Contract behaviour declaration for '{name}' has no associated contract declaration.")
                };
                self.sink.error(codes::ORPHAN_BEHAVIOUR, message, b.contract.span);
                continue;
            }
            let mut states = Vec::new();
            let mut all_states = false;
            for s in &b.states {
                if s.name == "any" {
                    all_states = true;
                } else if self.env.contracts[name].typestate_ordinal(&s.name).is_none() {
                    self.sink.error(
                        codes::UNDEFINED_TYPESTATE,
                        format!("Typestate '{}' is undefined in '{}'.", s.name, name),
                        s.span,
                    );
                } else if !states.contains(&s.name) {
                    states.push(s.name.clone());
                }
            }
            if all_states {
                states.clear();
            }
            let mut protections: Vec<String> = Vec::new();
            for p in &b.protections {
                if !protections.contains(&p.name) {
                    protections.push(p.name.clone());
                }
            }
            let binding = b.caller_binding.as_ref().map(|c| c.name.clone());
            let index = self.env.contracts[name].behaviours.len();
            self.env.contracts[name].behaviours.push(BehaviourInfo {
                decl: i,
                states: states.clone(),
                protections: protections.iter().map(|p| (p.clone(), None)).collect(),
                caller_binding: binding.clone(),
                span: b.contract.span,
            });
            for (m, f) in b.members.iter().enumerate() {
                let id = self.register_function(
                    f,
                    Owner::Contract(name.clone()),
                    FuncLoc { decl: i, member: m },
                    Some((index, &protections, &states, binding.clone())),
                    b.origin,
                );
                let info = &mut self.env.contracts[name];
                match f.kind {
                    FunctionKind::Initialiser => info.inits.push(id),
                    FunctionKind::Fallback => info.fallbacks.push(id),
                    FunctionKind::Function => info.functions.push(id),
                }
            }
        }
    }

    fn register_function(
        &mut self,
        f: &FunctionDecl,
        owner: Owner,
        loc: FuncLoc,
        behaviour: Option<(usize, &Vec<String>, &Vec<String>, Option<String>)>,
        origin: Origin,
    ) -> FnId {
        let self_name = match &owner {
            Owner::Struct(s) => Some(s.clone()),
            Owner::Contract(c) => Some(c.clone()),
            Owner::Global => None,
        };
        let mut params: Vec<ParamInfo> = Vec::new();
        for p in &f.params {
            if let Some(prev) = params.iter().find(|x| x.name == p.name.name) {
                let prev = prev.span;
                redeclaration(&mut self.sink, &p.name.name, p.name.span, prev);
            }
            let ty = self.resolve_type(&p.ty, self_name.as_deref());
            params.push(ParamInfo {
                name: p.name.name.clone(),
                ty,
                is_inout: p.is_inout,
                is_implicit: p.is_implicit,
                has_default: p.default.is_some(),
                span: p.name.span,
            });
        }
        let ret = match &f.return_type {
            Some(t) => self.resolve_type(t, self_name.as_deref()),
            None => Type::Void,
        };
        if f.kind != FunctionKind::Function && f.return_type.is_some() {
            self.sink.error(
                codes::INVALID_DECLARATION,
                format!("'{}' declarations cannot have a return type.", f.name.name),
                f.name.span,
            );
        }
        for a in &f.attributes {
            if a.name != "payable" {
                self.sink.error(codes::INVALID_DECLARATION, format!("Unknown attribute '@{}'.", a.name), a.span);
            }
        }
        let key: Vec<(Type, bool)> = params.iter().map(|p| (p.ty.clone(), p.is_inout)).collect();
        let (behaviour, protections, states, caller_binding) = match behaviour {
            Some((i, p, s, b)) => (Some(i), p.clone(), s.clone(), b),
            None => (None, Vec::new(), Vec::new(), None),
        };
        let info = FunctionInfo {
            name: f.name.name.clone(),
            mangled: mangle(owner.type_name(), &f.name.name, &key),
            owner,
            kind: f.kind,
            params,
            ret,
            is_mutating: f.has_modifier(Modifier::Mutating),
            is_public: f.has_modifier(Modifier::Public),
            is_payable: f.is_payable(),
            protections,
            states,
            caller_binding,
            behaviour,
            loc: Some(loc),
            getter_of: None,
            span: f.name.span,
            origin,
        };
        self.env.functions.push(info);
        self.env.functions.len() - 1
    }

    fn synthesize_getters(&mut self) {
        let names: Vec<String> = self.env.contracts.keys().cloned().collect();
        for c in names {
            let props = self.env.contracts[&c].properties.clone();
            for (i, p) in props.iter().enumerate() {
                if p.visibility == Visibility::Private || self.env.is_dynamic(&p.ty) || p.ty.is_error() {
                    continue;
                }
                let owner = Owner::Contract(c.clone());
                if let Some(&prev) = self
                    .env
                    .functions_named(&owner, &p.name)
                    .iter()
                    .find(|&&f| self.env.functions[f].params.is_empty())
                {
                    let prev = self.env.functions[prev].span;
                    redeclaration(&mut self.sink, &p.name, prev, p.span);
                    continue;
                }
                self.env.functions.push(FunctionInfo {
                    name: p.name.clone(),
                    mangled: mangle(&c, &p.name, &[]),
                    owner,
                    kind: FunctionKind::Function,
                    params: Vec::new(),
                    ret: p.ty.clone(),
                    is_mutating: false,
                    is_public: true,
                    is_payable: false,
                    protections: vec!["any".into()],
                    states: Vec::new(),
                    caller_binding: None,
                    behaviour: None,
                    loc: None,
                    getter_of: Some(i),
                    span: p.span,
                    origin: Origin::User,
                });
                let id = self.env.functions.len() - 1;
                self.env.contracts[&c].functions.push(id);
            }
        }
    }

    fn resolve_protections(&mut self) {
        let names: Vec<String> = self.env.contracts.keys().cloned().collect();
        for c in names {
            for bi in 0..self.env.contracts[&c].behaviours.len() {
                let decl = self.env.contracts[&c].behaviours[bi].decl;
                let TopLevelDecl::Behaviour(b) = &self.module.declarations[decl] else { unreachable!() };
                let mut resolved = Vec::new();
                let mut seen = Vec::new();
                for ident in &b.protections {
                    if seen.contains(&ident.name) {
                        continue;
                    }
                    seen.push(ident.name.clone());
                    let (kind, ambiguous) = resolve_protection_detail(&self.env, &c, &ident.name);
                    if kind.is_none() {
                        let d = self.sink.error(
                            codes::UNDEFINED_PROTECTION,
                            format!("Caller protection '{}' is undefined in '{}', or has incompatible type.", ident.name, c),
                            ident.span,
                        );
                        let mutating_predicate = self
                            .env
                            .functions_named(&Owner::Contract(c.clone()), &ident.name)
                            .into_iter()
                            .any(|f| self.env.functions[f].is_mutating && self.env.functions[f].ret == Type::Bool);
                        if mutating_predicate {
                            d.notes.push(crate::diagnostics::Note {
                                message: "Predicate protections cannot be declared mutating.".into(),
                                line: None,
                                column: None,
                            });
                        }
                    } else if ambiguous {
                        self.sink.warning(
                            codes::AMBIGUOUS_PROTECTION,
                            format!(
                                "Caller protection '{}' refers to both a state property and a function; the property is used.",
                                ident.name
                            ),
                            ident.span,
                        );
                    }
                    resolved.push((ident.name.clone(), kind));
                }
                self.env.contracts[&c].behaviours[bi].protections = resolved;
            }
        }
    }

    fn check_function_redeclarations(&mut self) {
        let mut groups: Vec<Vec<FnId>> = Vec::new();
        for c in self.env.contracts.values() {
            groups.push(c.functions.clone());
            groups.push(c.inits.clone());
            if c.fallbacks.len() > 1 {
                let first = self.env.functions[c.fallbacks[0]].span;
                for &f in &c.fallbacks[1..] {
                    redeclaration(&mut self.sink, "fallback", self.env.functions[f].span, first);
                }
            }
        }
        for s in self.env.structs.values() {
            groups.push(s.functions.clone());
            groups.push(s.inits.clone());
        }
        groups.push(self.env.globals.clone());
        for group in groups {
            for (i, &f) in group.iter().enumerate() {
                let info = &self.env.functions[f];
                if info.getter_of.is_some() {
                    continue;
                }
                if let Some(&prev) = group[..i].iter().find(|&&g| {
                    let other = &self.env.functions[g];
                    other.getter_of.is_none() && other.name == info.name && other.param_key() == info.param_key()
                }) {
                    let (name, span, prev) = (info.name.clone(), info.span, self.env.functions[prev].span);
                    redeclaration(&mut self.sink, &name, span, prev);
                }
            }
        }
    }

    fn compute_selectors(&mut self) {
        let names: Vec<String> = self.env.contracts.keys().cloned().collect();
        for c in names {
            let mut entries: Vec<SelectorEntry> = Vec::new();
            for &f in &self.env.contracts[&c].functions {
                let info = &self.env.functions[f];
                if !info.is_public {
                    continue;
                }
                let sig = signature(&info.name, info.external_params().map(|p| &p.ty));
                let selector = compute_selector(&sig);
                if let Some(prev) = entries.iter().find(|e| e.selector == selector) {
                    let other = &self.env.functions[prev.function];
                    if other.name == info.name && other.param_key() == info.param_key() {
                        continue;
                    }
                    let message = if prev.signature == sig {
                        format!("Public functions '{}' share the external signature '{sig}'.", info.name)
                    } else {
                        format!(
                            "Function selector {} of '{sig}' collides with '{}'.",
                            selector_hex(selector),
                            prev.signature
                        )
                    };
                    self.sink.error(codes::SELECTOR_COLLISION, message, info.span);
                    continue;
                }
                entries.push(SelectorEntry { selector, signature: sig, function: f });
            }
            self.env.contracts[&c].selectors = entries;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::parse_sources;
    use crate::stdlib::StdlibMode;

    fn env_of(src: &str) -> (Environment, Vec<Diagnostic>) {
        let (module, files, diags) = parse_sources(&[("t.flint".into(), src.into())], StdlibMode::Full);
        assert!(diags.is_empty(), "{diags:?}");
        build_environment(&module, &files)
    }

    #[test]
    fn bank_properties_and_protections() {
        let (env, d) = env_of(include_str!("../corpus/bank.flint"));
        assert!(d.is_empty(), "{d:?}");
        let bank = &env.contracts["Bank"];
        let names: Vec<&str> = bank.properties.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["manager", "balances", "accounts", "lastIndex", "totalDonations"]);
        assert_eq!(resolve_protection(&env, "Bank", "manager"), Some(ProtectionKind::AddressProperty("manager".into())));
        assert_eq!(
            resolve_protection(&env, "Bank", "accounts"),
            Some(ProtectionKind::AddressListProperty("accounts".into()))
        );
        assert_eq!(resolve_protection(&env, "Bank", "any"), Some(ProtectionKind::Any));
        assert_eq!(resolve_protection(&env, "Bank", "admin"), None);
    }

    #[test]
    fn dao_predicate() {
        let (env, d) = env_of(include_str!("../corpus/simple_dao.flint"));
        assert!(d.is_empty(), "{d:?}");
        let Some(ProtectionKind::Predicate(f)) = resolve_protection(&env, "SimpleDAO", "tokenHolder") else {
            panic!("tokenHolder is not a predicate")
        };
        assert_eq!(env.function(f).name, "tokenHolder");
        let dao = &env.contracts["SimpleDAO"];
        assert_eq!(dao.typestate_ordinal("Join"), Some(1));
        assert_eq!(dao.typestate_ordinal("Vote"), Some(3));
        assert!(dao.functions.iter().any(|&f| env.function(f).getter_of.is_some()));
    }

    #[test]
    fn orphan_behaviour() {
        let (_, d) = env_of("X :: (any) {\n  public init() {}\n}\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "Contract behaviour declaration for 'X' has no associated contract declaration.");
    }

    #[test]
    fn redeclared_function() {
        let (_, d) = env_of("contract C {}\nC :: (any) {\n  public init() {}\n  func f() {}\n  func f() {}\n}\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, codes::REDECLARATION);
        assert_eq!(d[0].line, 5);
        assert_eq!(d[0].notes[0].message, "Previous declaration on line 4, column 8.");
    }

    #[test]
    fn property_beats_predicate() {
        let src = "contract C {\n  var owner: Address\n}\nC :: (owner) {\n  func owner(a: Address) -> Bool { return true }\n}\nC :: (any) {\n  public init(o: Address) { owner = o }\n}\n";
        let (env, d) = env_of(src);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].code, codes::AMBIGUOUS_PROTECTION);
        assert_eq!(resolve_protection(&env, "C", "owner"), Some(ProtectionKind::AddressProperty("owner".into())));
    }

    #[test]
    fn typestate_collision_and_undefined() {
        let src = "contract C (A, x) {\n  var x: Int = 0\n}\nC @(B) :: (any) {\n  public init() {}\n}\n";
        let (_, d) = env_of(src);
        let codes: Vec<&str> = d.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, [codes::TYPESTATE_COLLISION, codes::UNDEFINED_TYPESTATE]);
    }
}
