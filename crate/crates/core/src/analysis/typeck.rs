//! Name resolution and type checking. Every expression receives a type;
//! resolved identifiers, members and call targets go to [`Annotations`].

use primitive_types::U256;

use super::*;
use crate::diagnostics::{codes, Diagnostic, Note, Sink};
use crate::environment::{Environment, FunctionInfo, Owner, Type};
use crate::stdlib::{self, RuntimeFn};

pub const PASS: u8 = 6;

pub fn type_check(module: &SourceModule, env: &Environment, files: &[String]) -> (Annotations, Vec<Diagnostic>) {
    let mut ann = Annotations::default();
    let mut sink = Sink::new(files, PASS);
    // Property defaults are checked with no locals in scope.
    for (i, decl) in module.declarations.iter().enumerate() {
        let (owner, props): (Owner, Vec<&VariableDecl>) = match decl {
            TopLevelDecl::Contract(c) if env.contracts.get(&c.name.name).is_some_and(|x| x.decl == i) => (
                Owner::Contract(c.name.name.clone()),
                c.members
                    .iter()
                    .filter_map(|m| match m {
                        ContractMember::Property(v) => Some(v),
                        ContractMember::Event(_) => None,
                    })
                    .collect(),
            ),
            TopLevelDecl::Struct(s) if env.structs.get(&s.name.name).is_some_and(|x| x.decl == i) => (
                Owner::Struct(s.name.name.clone()),
                s.members
                    .iter()
                    .filter_map(|m| match m {
                        StructMember::Property(v) => Some(v),
                        StructMember::Function(_) => None,
                    })
                    .collect(),
            ),
            _ => continue,
        };
        let origin = match decl {
            TopLevelDecl::Struct(s) => s.origin,
            TopLevelDecl::Contract(c) => c.origin,
            _ => Origin::User,
        };
        for v in props {
            let Some(value) = &v.value else { continue };
            let Some((_, prop)) = env.properties(&owner).iter().enumerate().find(|(_, p)| p.name == v.name.name) else {
                continue;
            };
            let expected = prop.ty.clone();
            let mut cx = Checker::new(env, &mut ann, &mut sink, None, owner.clone(), origin);
            let actual = cx.expr(value, Some(&expected));
            if !actual.compatible(&expected) {
                cx.sink.error(
                    codes::ASSIGNMENT_TYPE,
                    format!("Incompatible assignment between values of type {expected} and {actual}."),
                    value.span,
                );
            }
        }
    }
    for (id, info) in env.functions.iter().enumerate() {
        let Some(loc) = info.loc else { continue };
        let decl = function_decl(module, loc);
        let mut cx = Checker::new(env, &mut ann, &mut sink, Some(id), info.owner.clone(), info.origin);
        cx.function(info, decl);
    }
    (ann, sink.diagnostics)
}

struct Checker<'a, 'b> {
    env: &'a Environment,
    ann: &'b mut Annotations,
    sink: &'b mut Sink<'a>,
    fn_id: Option<FnId>,
    owner: Owner,
    origin: Origin,
    locals: Vec<LocalInfo>,
    scopes: Vec<Vec<(String, LocalId)>>,
    caller_binding: Option<String>,
    ret: Type,
}

impl<'a, 'b> Checker<'a, 'b> {
    fn new(
        env: &'a Environment,
        ann: &'b mut Annotations,
        sink: &'b mut Sink<'a>,
        fn_id: Option<FnId>,
        owner: Owner,
        origin: Origin,
    ) -> Self {
        Checker {
            env,
            ann,
            sink,
            fn_id,
            owner,
            origin,
            locals: Vec::new(),
            scopes: vec![Vec::new()],
            caller_binding: None,
            ret: Type::Void,
        }
    }

    fn function(&mut self, info: &FunctionInfo, decl: &FunctionDecl) {
        self.caller_binding = info.caller_binding.clone();
        self.ret = info.ret.clone();
        for (i, p) in info.params.iter().enumerate() {
            if let Some(default) = &decl.params[i].default {
                let t = self.expr(default, Some(&p.ty));
                if !t.compatible(&p.ty) {
                    self.sink.error(
                        codes::ARGUMENT_TYPE,
                        format!("Cannot convert expression of type {t} to expected argument type {}", p.ty),
                        default.span,
                    );
                }
            }
            self.declare(LocalInfo {
                name: p.name.clone(),
                ty: p.ty.clone(),
                is_let: !p.is_inout,
                kind: LocalKind::Param { index: i, inout: p.is_inout },
                span: p.span,
            });
        }
        if let Some(body) = &decl.body {
            self.block(body);
            if info.ret != Type::Void && !info.ret.is_error() && !block_terminates(body, self.ann) {
                self.sink.error(
                    codes::MISSING_RETURN,
                    format!("Missing return in function expected to return '{}'.", info.ret),
                    decl.name.span,
                );
            }
        }
        if let Some(f) = self.fn_id {
            self.ann.locals.insert(f, std::mem::take(&mut self.locals));
        }
    }

    fn declare(&mut self, local: LocalInfo) -> LocalId {
        if let Some((_, prev)) = self.scopes.last().unwrap().iter().find(|(n, _)| n == &local.name) {
            let prev = self.locals[*prev].span;
            self.sink.error(codes::REDECLARATION, format!("Invalid redeclaration of '{}'.", local.name), local.span).notes.push(
                Note {
                    message: format!("Previous declaration on line {}, column {}.", prev.line, prev.column),
                    line: Some(prev.line),
                    column: Some(prev.column),
                },
            );
        }
        let id = self.locals.len();
        self.scopes.last_mut().unwrap().push((local.name.clone(), id));
        self.locals.push(local);
        id
    }

    fn lookup_local(&self, name: &str) -> Option<LocalId> {
        self.scopes.iter().rev().find_map(|s| s.iter().rev().find(|(n, _)| n == name).map(|(_, id)| *id))
    }

    fn block(&mut self, block: &Block) {
        self.scopes.push(Vec::new());
        for s in &block.statements {
            self.stmt(s);
        }
        self.scopes.pop();
    }

    fn contract_name(&self) -> Option<&str> {
        match &self.owner {
            Owner::Contract(c) => Some(c),
            _ => None,
        }
    }

    fn stmt(&mut self, stmt: &Stmt) {
        match &stmt.kind {
            StmtKind::Expr(e) => {
                let t = self.expr(e, None);
                let is_effect = match &e.unbracketed().kind {
                    ExprKind::Binary { op, .. } => op.is_assignment(),
                    ExprKind::Call { .. } | ExprKind::Try(_) | ExprKind::VarDecl(_) => true,
                    _ => false,
                };
                if !is_effect && !t.is_error() {
                    self.sink.error(codes::INVALID_EXPRESSION, format!("Expression of type '{t}' is unused."), e.span);
                }
            }
            StmtKind::Return(value) => {
                let ret = self.ret.clone();
                match value {
                    Some(v) => {
                        let t = self.expr(v, Some(&ret));
                        if !t.compatible(&ret) {
                            self.sink.error(
                                codes::RETURN_TYPE,
                                format!("Cannot convert expression of type '{t}' to expected return type '{ret}'."),
                                v.span,
                            );
                        }
                    }
                    None if ret != Type::Void && !ret.is_error() => {
                        self.sink.error(
                            codes::RETURN_TYPE,
                            format!("Cannot convert expression of type 'Void' to expected return type '{ret}'."),
                            stmt.span,
                        );
                    }
                    None => {}
                }
            }
            StmtKind::Become(state) => match self.contract_name() {
                Some(c) => {
                    if self.env.contracts[c].typestate_ordinal(&state.name).is_none() {
                        let c = c.to_string();
                        self.sink.error(
                            codes::UNDEFINED_TYPESTATE,
                            format!("Typestate '{}' is undefined in '{c}'.", state.name),
                            state.span,
                        );
                    }
                }
                None => {
                    self.sink.error(
                        codes::INVALID_DECLARATION,
                        "'become' can only be used in contract functions.",
                        stmt.span,
                    );
                }
            },
            StmtKind::Emit { event, args } => self.emit(event, args, stmt.span),
            StmtKind::For { is_let, name, ty, iterable, body } => {
                let it = self.expr(iterable, None);
                let elem = match &it {
                    Type::Range => Type::Int,
                    Type::Array(t) | Type::FixedArray(t, _) => (**t).clone(),
                    Type::Dictionary(_, v) => (**v).clone(),
                    Type::Error => Type::Error,
                    other => {
                        self.sink.error(
                            codes::OPERATOR_TYPE,
                            format!("Cannot iterate over a value of type '{other}'."),
                            iterable.span,
                        );
                        Type::Error
                    }
                };
                if let Some(annot) = ty {
                    let declared = self.resolve_local_type(annot);
                    if !declared.compatible(&elem) {
                        self.sink.error(
                            codes::ASSIGNMENT_TYPE,
                            format!("Incompatible assignment between values of type {declared} and {elem}."),
                            name.span,
                        );
                    }
                }
                let kind = if it != Type::Range && self.env.is_dynamic(&elem) {
                    LocalKind::LoopRef { root: self.ann.root(self.fn_id, iterable) }
                } else {
                    LocalKind::LoopValue
                };
                self.scopes.push(Vec::new());
                let id =
                    self.declare(LocalInfo { name: name.name.clone(), ty: elem, is_let: *is_let, kind, span: name.span });
                self.ann.loop_vars.insert(iterable.id, id);
                self.block(body);
                self.scopes.pop();
            }
            StmtKind::If { condition, then_block, else_block } => {
                let t = self.expr(condition, Some(&Type::Bool));
                if !t.compatible(&Type::Bool) {
                    self.sink.error(
                        codes::CONDITION_TYPE,
                        format!("Cannot convert expression of type '{t}' to expected condition type 'Bool'."),
                        condition.span,
                    );
                }
                self.block(then_block);
                if let Some(b) = else_block {
                    self.block(b);
                }
            }
        }
    }

    fn emit(&mut self, event: &Ident, args: &[Argument], span: Span) {
        let info = self.contract_name().and_then(|c| self.env.contracts[c].events.get(&event.name)).cloned();
        let Some(info) = info else {
            for a in args {
                self.expr(&a.value, None);
            }
            self.sink.error(codes::UNDECLARED_IDENTIFIER, format!("Use of undeclared event '{}'.", event.name), event.span);
            return;
        };
        if args.len() != info.fields.len() {
            self.sink.error(
                codes::ARGUMENT_TYPE,
                format!("Event '{}' expects {} arguments, got {}.", event.name, info.fields.len(), args.len()),
                span,
            );
        }
        for (i, a) in args.iter().enumerate() {
            let expected = info.fields.get(i).map(|(_, t)| t.clone());
            let t = self.expr(&a.value, expected.as_ref());
            if let Some((field, ft)) = info.fields.get(i) {
                if let Some(l) = &a.label {
                    if &l.name != field {
                        self.sink.error(
                            codes::ARGUMENT_TYPE,
                            format!("Incorrect argument label '{}'; expected '{field}'.", l.name),
                            l.span,
                        );
                    }
                }
                if !t.compatible(ft) {
                    self.sink.error(
                        codes::ARGUMENT_TYPE,
                        format!("Cannot convert expression of type {t} to expected argument type {ft}"),
                        a.value.span,
                    );
                }
            }
        }
    }

    fn resolve_local_type(&mut self, ann: &TypeAnnotation) -> Type {
        let self_name = match &self.owner {
            Owner::Struct(s) => Some(s.as_str()),
            _ => None,
        };
        resolve_annotation(self.env, ann, self_name, self.sink)
    }

    fn record(&mut self, e: &Expr, t: Type) -> Type {
        self.ann.types.insert(e.id, t.clone());
        t
    }

    fn expr(&mut self, e: &Expr, expected: Option<&Type>) -> Type {
        let t = self.expr_inner(e, expected);
        self.record(e, t)
    }

    fn expr_inner(&mut self, e: &Expr, expected: Option<&Type>) -> Type {
        match &e.kind {
            ExprKind::Identifier(id) => self.identifier(e, id),
            ExprKind::SelfValue => match &self.owner {
                Owner::Global => {
                    self.sink.error(codes::UNDECLARED_IDENTIFIER, "Use of undeclared identifier 'self'.", e.span);
                    Type::Error
                }
                o => Type::Named(o.type_name().to_string()),
            },
            ExprKind::Int(text) => {
                if U256::from_dec_str(text).is_err() {
                    self.sink.error(
                        codes::UNSUPPORTED_LITERAL,
                        format!("Integer literal '{text}' does not fit in 256 bits."),
                        e.span,
                    );
                    return Type::Error;
                }
                Type::Int
            }
            ExprKind::Fraction(text) => {
                self.sink.error(
                    codes::UNSUPPORTED_LITERAL,
                    format!("Fractional literal '{text}' is not supported: there is no fixed-point type."),
                    e.span,
                );
                Type::Error
            }
            ExprKind::Bool(_) => Type::Bool,
            ExprKind::Address(_) => Type::Address,
            ExprKind::Str(s) => {
                if s.len() > 32 {
                    self.sink.error(
                        codes::UNSUPPORTED_LITERAL,
                        "String literals longer than 32 bytes are not supported.",
                        e.span,
                    );
                }
                Type::String
            }
            ExprKind::EmptyArray => match expected {
                Some(t @ (Type::Array(_) | Type::FixedArray(..))) => t.clone(),
                _ => Type::Array(Box::new(Type::Error)),
            },
            ExprKind::EmptyDictionary => match expected {
                Some(t @ Type::Dictionary(..)) => t.clone(),
                _ => Type::Dictionary(Box::new(Type::Error), Box::new(Type::Error)),
            },
            ExprKind::InOut(inner) => {
                self.expr(inner, None);
                self.sink.error(
                    codes::INVALID_INOUT,
                    "'&' can only be applied to arguments of inout parameters.",
                    e.span,
                );
                Type::Error
            }
            ExprKind::Bracketed(inner) => self.expr(inner, expected),
            ExprKind::Try(inner) => {
                if !matches!(inner.unbracketed().kind, ExprKind::Call { .. }) {
                    self.sink.error(codes::INVALID_EXPRESSION, "'try' must be applied to a function call.", e.span);
                }
                self.expr(inner, expected)
            }
            ExprKind::Range { start, end, .. } => {
                for x in [start, end] {
                    let t = self.expr(x, Some(&Type::Int));
                    if !t.compatible(&Type::Int) {
                        self.sink.error(
                            codes::OPERATOR_TYPE,
                            format!("Range bounds must be of type 'Int', not '{t}'."),
                            x.span,
                        );
                    }
                }
                Type::Range
            }
            ExprKind::VarDecl(decl) => self.var_decl(e, decl),
            ExprKind::Binary { op, lhs, rhs } => self.binary(e, *op, lhs, rhs),
            ExprKind::Member { base, name } => self.member(e, base, name),
            ExprKind::Subscript { base, index } => self.subscript(base, index),
            ExprKind::Call { receiver, name, args } => self.call(e, receiver.as_deref(), name, args),
        }
    }

    fn identifier(&mut self, e: &Expr, id: &Ident) -> Type {
        if let Some(l) = self.lookup_local(&id.name) {
            self.ann.refs.insert(e.id, Ref::Local(l));
            return self.locals[l].ty.clone();
        }
        if self.caller_binding.as_deref() == Some(id.name.as_str()) {
            self.ann.refs.insert(e.id, Ref::Caller);
            return Type::Address;
        }
        if let Some((i, p)) = self.env.properties(&self.owner).iter().enumerate().find(|(_, p)| p.name == id.name) {
            self.ann.refs.insert(e.id, Ref::Property(i));
            return p.ty.clone();
        }
        if self.env.enums.contains_key(&id.name) || self.env.structs.contains_key(&id.name) {
            self.ann.refs.insert(e.id, Ref::TypeName(id.name.clone()));
            return Type::Error;
        }
        self.sink.error(codes::UNDECLARED_IDENTIFIER, format!("Use of undeclared identifier '{}'.", id.name), id.span);
        Type::Error
    }

    fn var_decl(&mut self, e: &Expr, decl: &VariableDecl) -> Type {
        let declared = decl.ty.as_ref().map(|t| self.resolve_local_type(t));
        let value_ty = decl.value.as_ref().map(|v| self.expr(v, declared.as_ref()));
        let ty = match (&declared, &value_ty) {
            (Some(d), Some(v)) => {
                if !v.compatible(d) {
                    self.sink.error(
                        codes::ASSIGNMENT_TYPE,
                        format!("Incompatible assignment between values of type {d} and {v}."),
                        decl.value.as_ref().unwrap().span,
                    );
                }
                d.clone()
            }
            (Some(d), None) => {
                self.sink.error(
                    codes::INVALID_DECLARATION,
                    format!("Local variable '{}' must be given an initial value.", decl.name.name),
                    decl.name.span,
                );
                d.clone()
            }
            (None, Some(v)) if !v.is_error() && *v != Type::Range => v.clone(),
            (None, _) => {
                self.sink.error(
                    codes::INVALID_DECLARATION,
                    format!("Cannot infer a type for '{}'; add a type annotation.", decl.name.name),
                    decl.name.span,
                );
                Type::Error
            }
        };
        if ty.is_collection() {
            self.sink.error(
                codes::INVALID_DECLARATION,
                format!("Local variable '{}' cannot have collection type '{ty}'.", decl.name.name),
                decl.name.span,
            );
        }
        if ty == Type::Void {
            self.sink.error(
                codes::INVALID_DECLARATION,
                format!("Local variable '{}' cannot have type 'Void'.", decl.name.name),
                decl.name.span,
            );
        }
        let id = self.declare(LocalInfo {
            name: decl.name.name.clone(),
            ty,
            is_let: decl.is_let,
            kind: LocalKind::Var,
            span: decl.name.span,
        });
        self.ann.decls.insert(e.id, id);
        Type::Void
    }

    fn binary(&mut self, e: &Expr, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> Type {
        use BinaryOp::*;
        if op.is_assignment() {
            let lt = self.expr(lhs, None);
            let rt = self.expr(rhs, Some(&lt));
            if !is_lvalue(lhs, self.ann) {
                self.sink.error(codes::NOT_ASSIGNABLE, "Cannot assign to this expression.", lhs.span);
                return Type::Void;
            }
            if op == Assign {
                if !rt.compatible(&lt) {
                    self.sink.error(
                        codes::ASSIGNMENT_TYPE,
                        format!("Incompatible assignment between values of type {lt} and {rt}."),
                        e.span,
                    );
                }
            } else if !(lt.compatible(&Type::Int) && rt.compatible(&Type::Int)) {
                self.sink.error(
                    codes::OPERATOR_TYPE,
                    format!("Binary operator '{}' cannot be applied to operands of type '{lt}' and '{rt}'.", op.symbol()),
                    e.span,
                );
            }
            return Type::Void;
        }
        let (lt, rt) = match op {
            And | Or => (self.expr(lhs, Some(&Type::Bool)), self.expr(rhs, Some(&Type::Bool))),
            Eq | NotEq => {
                let lt = self.expr(lhs, None);
                let rt = self.expr(rhs, Some(&lt));
                (lt, rt)
            }
            _ => (self.expr(lhs, Some(&Type::Int)), self.expr(rhs, Some(&Type::Int))),
        };
        let ok = match op {
            And | Or => lt.compatible(&Type::Bool) && rt.compatible(&Type::Bool),
            Eq | NotEq => lt.compatible(&rt) && (lt.is_error() || rt.is_error() || self.env.is_word_type(&lt)),
            _ => lt.compatible(&Type::Int) && rt.compatible(&Type::Int),
        };
        if !ok {
            self.sink.error(
                codes::OPERATOR_TYPE,
                format!("Binary operator '{}' cannot be applied to operands of type '{lt}' and '{rt}'.", op.symbol()),
                e.span,
            );
        }
        match op {
            Add | Sub | Mul | Div | Pow | WrapAdd | WrapSub | WrapMul => Type::Int,
            _ => Type::Bool,
        }
    }

    fn member(&mut self, e: &Expr, base: &Expr, name: &Ident) -> Type {
        if matches!(base.kind, ExprKind::SelfValue) {
            self.expr(base, None);
            if let Some((i, p)) = self.env.properties(&self.owner).iter().enumerate().find(|(_, p)| p.name == name.name) {
                self.ann.members.insert(e.id, MemberRef::SelfProperty(i));
                return p.ty.clone();
            }
            self.sink.error(
                codes::NO_MEMBER,
                format!("Value of type '{}' has no member '{}'.", self.owner.type_name(), name.name),
                name.span,
            );
            return Type::Error;
        }
        let bt = self.expr(base, None);
        if let Some(Ref::TypeName(t)) = self.ann.refs.get(&base.id).cloned() {
            if let Some(info) = self.env.enums.get(&t) {
                if let Some(index) = info.cases.iter().position(|c| c == &name.name) {
                    self.ann.members.insert(e.id, MemberRef::EnumCase { name: t.clone(), index });
                    return Type::Named(t);
                }
            }
            self.sink.error(codes::NO_MEMBER, format!("Type '{t}' has no member '{}'.", name.name), name.span);
            return Type::Error;
        }
        match &bt {
            Type::Named(s) if self.env.structs.contains_key(s) => {
                if let Some((index, p)) = self.env.structs[s].property(&name.name) {
                    self.ann.members.insert(e.id, MemberRef::Field { strukt: s.clone(), index });
                    return p.ty.clone();
                }
            }
            Type::Array(_) | Type::Dictionary(..) | Type::FixedArray(..) if name.name == "size" => {
                self.ann.members.insert(e.id, MemberRef::Size);
                return Type::Int;
            }
            Type::Error => return Type::Error,
            _ => {}
        }
        self.sink.error(codes::NO_MEMBER, format!("Value of type '{bt}' has no member '{}'.", name.name), name.span);
        Type::Error
    }

    fn subscript(&mut self, base: &Expr, index: &Expr) -> Type {
        let bt = self.expr(base, None);
        match &bt {
            Type::Array(t) | Type::FixedArray(t, _) => {
                let it = self.expr(index, Some(&Type::Int));
                if !it.compatible(&Type::Int) {
                    self.sink.error(
                        codes::ARGUMENT_TYPE,
                        format!("Cannot convert expression of type {it} to expected index type Int"),
                        index.span,
                    );
                }
                (**t).clone()
            }
            Type::Dictionary(k, v) => {
                let it = self.expr(index, Some(k));
                if !it.compatible(k) {
                    if self.env.is_word_type(&it) && self.env.is_word_type(k) {
                        self.sink.warning(
                            codes::KEY_CONVERSION,
                            format!("Implicit conversion of dictionary key from '{it}' to '{k}'."),
                            index.span,
                        );
                    } else {
                        self.sink.error(
                            codes::ARGUMENT_TYPE,
                            format!("Cannot convert expression of type {it} to expected key type {k}"),
                            index.span,
                        );
                    }
                }
                (**v).clone()
            }
            Type::Error => {
                self.expr(index, None);
                Type::Error
            }
            other => {
                self.expr(index, None);
                self.sink.error(codes::OPERATOR_TYPE, format!("Cannot subscript a value of type '{other}'."), base.span);
                Type::Error
            }
        }
    }

    fn candidates(&mut self, receiver: Option<&Expr>, name: &Ident) -> Result<Candidates, Type> {
        if let Some(r) = receiver {
            if matches!(r.kind, ExprKind::SelfValue) {
                self.expr(r, None);
                return Ok(Candidates::Functions(self.env.functions_named(&self.owner, &name.name)));
            }
            let rt = self.expr(r, None);
            return match &rt {
                Type::Named(s) if self.env.structs.contains_key(s) => {
                    Ok(Candidates::Functions(self.env.functions_named(&Owner::Struct(s.clone()), &name.name)))
                }
                Type::Error => Err(Type::Error),
                other => {
                    self.sink.error(
                        codes::NO_MEMBER,
                        format!("Value of type '{other}' has no member '{}'.", name.name),
                        name.span,
                    );
                    Err(Type::Error)
                }
            };
        }
        if let Some(s) = self.env.structs.get(&name.name) {
            if s.name == stdlib::GLOBAL_STRUCT {
                return Ok(Candidates::Functions(Vec::new()));
            }
            return Ok(Candidates::Inits(s.name.clone(), s.inits.clone()));
        }
        if name.name.starts_with("flint$") && self.origin == Origin::Stdlib {
            if let Some(rt) = RuntimeFn::from_name(&name.name) {
                return Ok(Candidates::Runtime(rt));
            }
        }
        let mut own = self.env.functions_named(&self.owner, &name.name);
        if own.is_empty() {
            own = self.env.functions_named(&Owner::Global, &name.name);
        }
        Ok(Candidates::Functions(own))
    }

    fn call(&mut self, e: &Expr, receiver: Option<&Expr>, name: &Ident, args: &[Argument]) -> Type {
        let cands = match self.candidates(receiver, name) {
            Ok(c) => c,
            Err(t) => {
                for a in args {
                    self.arg_expr(a, None);
                }
                return t;
            }
        };
        let sigs: Vec<(Option<FnId>, Vec<ParamSig>, Type)> = match &cands {
            Candidates::Functions(fs) => fs
                .iter()
                .map(|&f| {
                    let info = self.env.function(f);
                    (Some(f), param_sigs(info), info.ret.clone())
                })
                .collect(),
            Candidates::Inits(s, inits) if inits.is_empty() => vec![(None, Vec::new(), Type::Named(s.clone()))],
            Candidates::Inits(s, inits) => inits
                .iter()
                .map(|&f| (Some(f), param_sigs(self.env.function(f)), Type::Named(s.clone())))
                .collect(),
            Candidates::Runtime(rt) => vec![(
                None,
                rt.params()
                    .into_iter()
                    .map(|ty| ParamSig { name: String::new(), ty, inout: false, optional: false })
                    .collect(),
                Type::Void,
            )],
        };
        if sigs.is_empty() {
            for a in args {
                self.arg_expr(a, None);
            }
            self.sink.error(codes::UNDECLARED_IDENTIFIER, format!("Use of undeclared identifier '{}'.", name.name), name.span);
            return Type::Error;
        }
        let arity: Vec<usize> = (0..sigs.len())
            .filter(|&i| {
                let p = &sigs[i].1;
                args.len() <= p.len() && p[args.len()..].iter().all(|x| x.optional)
            })
            .collect();
        let hint: Option<&Vec<ParamSig>> = if arity.len() == 1 { Some(&sigs[arity[0]].1) } else { None };
        let arg_types: Vec<Type> = args
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let expected = hint.and_then(|p| p.get(i)).map(|p| p.ty.clone());
                self.arg_expr(a, expected.as_ref())
            })
            .collect();
        let error_args = arg_types.iter().any(Type::is_error);
        let mut chosen = None;
        for &i in &arity {
            if args_match(&sigs[i].1, args, &arg_types) {
                chosen = Some(i);
                break;
            }
        }
        let Some(i) = chosen else {
            if error_args {
                return sigs.first().map(|s| s.2.clone()).unwrap_or(Type::Error);
            }
            self.report_mismatch(name, args, &arg_types, &sigs, &arity);
            return if sigs.len() == 1 { sigs[0].2.clone() } else { Type::Error };
        };
        let target = match &cands {
            Candidates::Functions(_) => CallTarget::Function(sigs[i].0.unwrap()),
            Candidates::Inits(s, _) => CallTarget::Init { strukt: s.clone(), init: sigs[i].0 },
            Candidates::Runtime(rt) => CallTarget::Runtime(*rt),
        };
        self.ann.calls.insert(e.id, target);
        sigs[i].2.clone()
    }

    fn arg_expr(&mut self, a: &Argument, expected: Option<&Type>) -> Type {
        match &a.value.kind {
            ExprKind::InOut(inner) => {
                let t = self.expr(inner, expected);
                if !is_lvalue(inner, self.ann) {
                    self.sink.error(codes::INVALID_INOUT, "Only assignable values can be passed inout.", a.value.span);
                } else if !t.is_error() && !self.env.is_dynamic(&t) {
                    self.sink.error(
                        codes::INVALID_INOUT,
                        format!("Only dynamic types can be passed inout, not '{t}'."),
                        a.value.span,
                    );
                }
                self.record(&a.value, t)
            }
            _ => self.expr(&a.value, expected),
        }
    }

    fn report_mismatch(
        &mut self,
        name: &Ident,
        args: &[Argument],
        arg_types: &[Type],
        sigs: &[(Option<FnId>, Vec<ParamSig>, Type)],
        arity: &[usize],
    ) {
        if sigs.len() == 1 && arity.len() == 1 {
            let params = &sigs[0].1;
            for (i, a) in args.iter().enumerate() {
                let p = &params[i];
                let is_inout = matches!(a.value.kind, ExprKind::InOut(_));
                if let Some(l) = &a.label {
                    if !p.name.is_empty() && l.name != p.name {
                        self.sink.error(
                            codes::ARGUMENT_TYPE,
                            format!("Incorrect argument label '{}'; expected '{}'.", l.name, p.name),
                            l.span,
                        );
                        return;
                    }
                }
                if p.inout != is_inout {
                    let message = if p.inout {
                        format!("Argument '{}' is inout and must be passed with '&'.", p.name)
                    } else {
                        format!("Argument '{}' is not inout and cannot be passed with '&'.", p.name)
                    };
                    self.sink.error(codes::INVALID_INOUT, message, a.value.span);
                    return;
                }
                if !arg_types[i].compatible(&p.ty) {
                    self.sink.error(
                        codes::ARGUMENT_TYPE,
                        format!("Cannot convert expression of type {} to expected argument type {}", arg_types[i], p.ty),
                        a.value.span,
                    );
                    return;
                }
            }
        }
        if sigs.len() == 1 {
            let required = sigs[0].1.iter().filter(|p| !p.optional).count();
            self.sink.error(
                codes::ARGUMENT_TYPE,
                format!("Function '{}' expects {} argument(s), got {}.", name.name, required, args.len()),
                name.span,
            );
            return;
        }
        let shown: Vec<String> = arg_types.iter().map(|t| t.to_string()).collect();
        self.sink.error(
            codes::ARGUMENT_TYPE,
            format!("No overload of '{}' accepts arguments of type ({}).", name.name, shown.join(", ")),
            name.span,
        );
    }
}

enum Candidates {
    Functions(Vec<FnId>),
    Inits(String, Vec<FnId>),
    Runtime(RuntimeFn),
}

struct ParamSig {
    name: String,
    ty: Type,
    inout: bool,
    optional: bool,
}

fn param_sigs(info: &FunctionInfo) -> Vec<ParamSig> {
    info.params
        .iter()
        .map(|p| ParamSig { name: p.name.clone(), ty: p.ty.clone(), inout: p.is_inout, optional: p.has_default })
        .collect()
}

fn args_match(params: &[ParamSig], args: &[Argument], types: &[Type]) -> bool {
    args.iter().enumerate().all(|(i, a)| {
        let p = &params[i];
        let label_ok = a.label.as_ref().is_none_or(|l| p.name.is_empty() || l.name == p.name);
        let inout_ok = p.inout == matches!(a.value.kind, ExprKind::InOut(_));
        label_ok && inout_ok && types[i].compatible(&p.ty)
    })
}

/// Assignable places: locals, properties, fields and subscripts of those.
pub fn is_lvalue(e: &Expr, ann: &Annotations) -> bool {
    match &e.kind {
        ExprKind::Bracketed(inner) => is_lvalue(inner, ann),
        ExprKind::Identifier(_) => matches!(ann.refs.get(&e.id), Some(Ref::Local(_) | Ref::Property(_))),
        ExprKind::Member { base, .. } => {
            matches!(ann.members.get(&e.id), Some(MemberRef::SelfProperty(_)))
                || (matches!(ann.members.get(&e.id), Some(MemberRef::Field { .. })) && is_lvalue(base, ann))
        }
        ExprKind::Subscript { base, .. } => is_lvalue(base, ann),
        _ => false,
    }
}

/// Resolves a type written inside a function body.
pub fn resolve_annotation(env: &Environment, ann: &TypeAnnotation, self_name: Option<&str>, sink: &mut Sink<'_>) -> Type {
    match ann {
        TypeAnnotation::Named { name, generics } => {
            if !generics.is_empty() {
                sink.error(
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
                "Self" if self_name.is_some() => Type::Named(self_name.unwrap().to_string()),
                n if env.structs.contains_key(n) || env.enums.contains_key(n) => Type::Named(n.to_string()),
                n => {
                    sink.error(codes::UNDECLARED_TYPE, format!("Use of undeclared type '{n}'."), name.span);
                    Type::Error
                }
            }
        }
        TypeAnnotation::Array(t) => Type::Array(Box::new(resolve_annotation(env, t, self_name, sink))),
        TypeAnnotation::FixedArray(t, n) => Type::FixedArray(Box::new(resolve_annotation(env, t, self_name, sink)), *n),
        TypeAnnotation::Dictionary(k, v) => Type::Dictionary(
            Box::new(resolve_annotation(env, k, self_name, sink)),
            Box::new(resolve_annotation(env, v, self_name, sink)),
        ),
    }
}

/// Whether `e` is a call to the global `fatalError`.
pub fn is_fatal_call(e: &Expr, ann: &Annotations, env: &Environment) -> bool {
    match ann.calls.get(&e.unbracketed().id) {
        Some(CallTarget::Function(f)) => {
            let f = env.function(*f);
            f.owner == Owner::Global && f.name == "fatalError"
        }
        Some(CallTarget::Runtime(RuntimeFn::FatalError)) => true,
        _ => false,
    }
}

/// Whether every path through the statement ends in `return` or `fatalError()`.
pub fn stmt_terminates(stmt: &Stmt, ann: &Annotations, env: Option<&Environment>) -> bool {
    match &stmt.kind {
        StmtKind::Return(_) => true,
        StmtKind::Expr(e) => env.is_some_and(|env| is_fatal_call(e, ann, env)) || is_fatal_name(e),
        StmtKind::If { then_block, else_block: Some(b), .. } => {
            block_terminates_with(then_block, ann, env) && block_terminates_with(b, ann, env)
        }
        _ => false,
    }
}

fn is_fatal_name(e: &Expr) -> bool {
    matches!(&e.unbracketed().kind, ExprKind::Call { receiver: None, name, .. } if name.name == "fatalError")
}

fn block_terminates_with(block: &Block, ann: &Annotations, env: Option<&Environment>) -> bool {
    block.statements.iter().any(|s| stmt_terminates(s, ann, env))
}

pub fn block_terminates(block: &Block, ann: &Annotations) -> bool {
    block_terminates_with(block, ann, None)
}
