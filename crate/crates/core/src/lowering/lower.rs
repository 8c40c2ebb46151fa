//! Lowering of an analysed module to IR.

use std::collections::{BTreeSet, HashMap, HashSet};

use primitive_types::U256;

use super::ir::*;
use super::mangle::mangle;
use crate::analysis::{function_decl, Annotations, CallTarget, LocalId, LocalKind, MemberRef, Ref};
use crate::environment::{ContractInfo, Environment, FnId, FunctionInfo, Owner, ProtectionKind, Type};
use crate::frontend::ast::*;
use crate::pipeline::Analysis;
use crate::stdlib::{self, RuntimeFn};

pub fn abi_of(env: &Environment, ty: &Type) -> Option<AbiType> {
    match ty {
        Type::Int => Some(AbiType::Uint256),
        Type::Address => Some(AbiType::Address),
        Type::Bool => Some(AbiType::Bool),
        Type::String => Some(AbiType::String),
        t if env.is_enum_type(t) => Some(AbiType::Uint256),
        _ => None,
    }
}

/// A string literal as one word: bytes left-aligned, zero padded.
pub fn string_word(s: &str) -> U256 {
    let mut buf = [0u8; 32];
    let bytes = s.as_bytes();
    let n = bytes.len().min(32);
    buf[..n].copy_from_slice(&bytes[..n]);
    U256::from_big_endian(&buf)
}

pub fn word_string(w: U256) -> String {
    let buf = w.to_big_endian();
    let end = buf.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&buf[..end]).into_owned()
}

pub fn implicit_init_name(strukt: &str) -> String {
    mangle(strukt, "init", &[])
}

fn layout_type(env: &Environment, ty: &Type) -> LayoutType {
    match ty {
        t if env.is_currency(t) => LayoutType::Currency,
        Type::Named(n) if env.structs.contains_key(n) => {
            let s = &env.structs[n];
            LayoutType::Struct {
                fields: s.properties.iter().enumerate().map(|(i, p)| (env.field_offset(n, i), layout_type(env, &p.ty))).collect(),
            }
        }
        Type::FixedArray(t, n) => {
            LayoutType::FixedArray { elem: Box::new(layout_type(env, t)), elem_words: env.words(t), len: *n }
        }
        Type::Array(t) => LayoutType::Array { elem: Box::new(layout_type(env, t)), elem_words: env.words(t) },
        Type::Dictionary(_, v) => LayoutType::Dictionary { value: Box::new(layout_type(env, v)), value_words: env.words(v) },
        _ => LayoutType::Word,
    }
}

pub fn lower(a: &Analysis) -> IRProgram {
    let mut program = IRProgram::default();
    for c in a.env.contracts.values() {
        program.contracts.push(lower_contract(a, c));
    }
    program
}

fn property_slots(env: &Environment, c: &ContractInfo) -> Vec<u64> {
    let mut next = 0;
    c.properties
        .iter()
        .map(|p| {
            let slot = next;
            next += env.words(&p.ty);
            slot
        })
        .collect()
}

fn lower_contract(a: &Analysis, c: &ContractInfo) -> IRContract {
    let env = &a.env;
    let slots = property_slots(env, c);
    let layout = c
        .properties
        .iter()
        .zip(&slots)
        .map(|(p, &slot)| LayoutEntry {
            name: p.name.clone(),
            slot,
            words: env.words(&p.ty),
            ty: p.ty.to_string(),
            layout: layout_type(env, &p.ty),
        })
        .collect();
    let events = c
        .events
        .values()
        .map(|e| IREvent {
            name: e.name.clone(),
            fields: e.fields.iter().map(|(n, t)| (n.clone(), abi_of(env, t).unwrap_or(AbiType::Uint256))).collect(),
        })
        .collect();
    let owner = Owner::Contract(c.name.clone());
    let mut functions = Vec::new();
    for (id, info) in env.functions.iter().enumerate() {
        if info.owner == owner {
            functions.push(lower_function(a, Some(c), &slots, id, info));
        }
    }
    for s in env.structs.values() {
        let mut ids: Vec<FnId> = s.inits.iter().chain(&s.functions).copied().collect();
        if s.name == stdlib::GLOBAL_STRUCT {
            ids.extend(&env.globals);
        }
        ids.sort();
        for id in ids {
            functions.push(lower_function(a, Some(c), &slots, id, env.function(id)));
        }
        if s.inits.is_empty() && s.name != stdlib::GLOBAL_STRUCT {
            functions.push(implicit_init(a, &s.name));
        }
    }
    functions.extend(RuntimeFn::ALL.into_iter().map(runtime_function));
    let init = c.inits.iter().copied().find(|&f| env.function(f).is_public).or(c.inits.first().copied());
    let init = init.map(|f| env.function(f).mangled.clone()).unwrap_or_default();
    let fallback = c.fallbacks.first().map(|&f| env.function(f).mangled.clone());
    let dispatch: Vec<DispatchEntry> = c
        .selectors
        .iter()
        .map(|s| {
            let f = env.function(s.function);
            DispatchEntry {
                selector: s.selector,
                signature: s.signature.clone(),
                name: f.name.clone(),
                function: f.mangled.clone(),
                returns: abi_of(env, &f.ret),
            }
        })
        .collect();
    let mut contract = IRContract {
        name: c.name.clone(),
        layout,
        typestates: c.typestates.iter().enumerate().map(|(i, s)| (s.name.clone(), i as u32 + 1)).collect(),
        events,
        init,
        fallback,
        dispatch,
        functions,
    };
    prune(&mut contract);
    contract
}

/// Drops functions unreachable from dispatch, the initialiser, the fallback
/// and predicate checks.
fn prune(c: &mut IRContract) {
    let mut live: HashSet<String> = HashSet::new();
    let mut work: Vec<String> = c.dispatch.iter().map(|d| d.function.clone()).collect();
    work.push(c.init.clone());
    work.extend(c.fallback.clone());
    let index: HashMap<String, usize> = c.functions.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
    while let Some(name) = work.pop() {
        if !live.insert(name.clone()) {
            continue;
        }
        let Some(&i) = index.get(&name) else { continue };
        let f = &c.functions[i];
        for ins in &f.body {
            if let Instr::Call { func, .. } = ins {
                work.push(func.clone());
            }
        }
        if let Some(entry) = &f.entry {
            for p in &entry.protections {
                if let ProtectionCheck::Predicate { function } = p {
                    work.push(function.clone());
                }
            }
        }
    }
    c.functions.retain(|f| live.contains(&f.name));
}

fn runtime_function(rt: RuntimeFn) -> IRFunction {
    let r = |i| Operand::Reg(i);
    let (params, body, regs) = match rt {
        RuntimeFn::Send => (
            2,
            vec![Instr::SendWei { address: r(0), amount: r(1) }, Instr::Return { values: vec![] }],
            2,
        ),
        RuntimeFn::FatalError => (0, vec![Instr::Revert { reason: RevertReason::FatalError }], 0),
        RuntimeFn::Assert => (
            1,
            vec![
                Instr::Branch { cond: r(0), then_label: 0, else_label: 1 },
                Instr::Label(1),
                Instr::Revert { reason: RevertReason::Assertion },
                Instr::Label(0),
                Instr::Return { values: vec![] },
            ],
            1,
        ),
        RuntimeFn::Mint => (1, vec![Instr::Mint { amount: r(0) }, Instr::Return { values: vec![] }], 1),
    };
    IRFunction {
        name: rt.name().to_string(),
        params: vec![ParamKind::Word { abi: None }; params],
        returns: 0,
        num_regs: regs,
        payable: false,
        entry: None,
        body,
    }
}

fn implicit_init(a: &Analysis, strukt: &str) -> IRFunction {
    let mut l = Lowerer::new(a, None, &[], None, Owner::Struct(strukt.to_string()));
    l.self_place = Some((Operand::Reg(0), Operand::Reg(1)));
    l.next_reg = 2;
    l.struct_prologue(strukt);
    l.emit(Instr::Return { values: vec![] });
    IRFunction {
        name: implicit_init_name(strukt),
        params: vec![ParamKind::Place],
        returns: 0,
        num_regs: l.next_reg,
        payable: false,
        entry: None,
        body: l.code,
    }
}

fn words_of_return(env: &Environment, ty: &Type) -> u32 {
    match ty {
        Type::Void | Type::Error => 0,
        t if env.is_dynamic(t) => 2,
        _ => 1,
    }
}

fn entry_checks(env: &Environment, c: &ContractInfo, slots: &[u64], info: &FunctionInfo) -> Option<EntryChecks> {
    let typestates: Vec<u32> = info.states.iter().filter_map(|s| c.typestate_ordinal(s)).collect();
    let mut protections = Vec::new();
    if let Some(b) = info.behaviour.map(|b| &c.behaviours[b]) {
        let kinds: Vec<&ProtectionKind> = b.protections.iter().filter_map(|(_, k)| k.as_ref()).collect();
        if !kinds.iter().any(|k| matches!(k, ProtectionKind::Any)) {
            for k in kinds {
                protections.push(match k {
                    ProtectionKind::AddressProperty(p) => {
                        ProtectionCheck::AddressProperty { slot: slots[c.property(p).unwrap().0] }
                    }
                    ProtectionKind::AddressListProperty(p) => {
                        ProtectionCheck::AddressList { slot: slots[c.property(p).unwrap().0] }
                    }
                    ProtectionKind::Predicate(f) => ProtectionCheck::Predicate { function: env.function(*f).mangled.clone() },
                    ProtectionKind::Any => unreachable!(),
                });
            }
        }
    }
    if info.kind == FunctionKind::Initialiser || (typestates.is_empty() && protections.is_empty()) {
        None
    } else {
        Some(EntryChecks { typestates, protections })
    }
}

fn lower_function(a: &Analysis, c: Option<&ContractInfo>, slots: &[u64], id: FnId, info: &FunctionInfo) -> IRFunction {
    let env = &a.env;
    let mut l = Lowerer::new(a, c, slots, Some(id), info.owner.clone());
    let mut params = Vec::new();
    if let Owner::Struct(_) = info.owner {
        l.self_place = Some((Operand::Reg(0), Operand::Reg(1)));
        l.next_reg = 2;
        params.push(ParamKind::Place);
    }
    for (i, p) in info.params.iter().enumerate() {
        if env.is_dynamic(&p.ty) {
            let r = l.next_reg;
            l.next_reg += 2;
            l.locals.insert(i, Slot::Place(r, r + 1));
            params.push(if p.is_implicit && env.is_currency(&p.ty) { ParamKind::ImplicitValue } else { ParamKind::Place });
        } else {
            let r = l.reg();
            l.locals.insert(i, Slot::Word(r));
            params.push(ParamKind::Word { abi: abi_of(env, &p.ty) });
        }
    }
    let returns = words_of_return(env, &info.ret);
    if let Some(prop) = info.getter_of {
        let v = l.reg();
        l.emit(Instr::Load { dst: v, addr: Operand::int(slots[prop]), is_mem: Operand::int(0) });
        l.emit(Instr::Return { values: vec![Operand::Reg(v)] });
    } else if let Some(loc) = info.loc {
        let decl = function_decl(&a.module, loc);
        if info.kind == FunctionKind::Initialiser {
            match &info.owner {
                Owner::Contract(_) => l.contract_prologue(),
                Owner::Struct(s) => l.struct_prologue(s),
                Owner::Global => {}
            }
        }
        if let Some(body) = &decl.body {
            l.block(body);
        }
        l.emit(Instr::Return { values: vec![Operand::int(0); returns as usize] });
    }
    let entry = match (c, &info.owner) {
        (Some(c), Owner::Contract(_)) => entry_checks(env, c, slots, info),
        _ => None,
    };
    IRFunction {
        name: info.mangled.clone(),
        params,
        returns,
        num_regs: l.next_reg,
        payable: info.is_payable,
        entry,
        body: l.code,
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Word(Reg),
    Place(Reg, Reg),
}

#[derive(Debug, Clone, Copy)]
enum Val {
    Word(Operand),
    Place(Operand, Operand),
}

impl Val {
    fn word(self) -> Operand {
        match self {
            Val::Word(o) => o,
            Val::Place(..) => panic!("expected a word value"),
        }
    }

    fn place(self) -> (Operand, Operand) {
        match self {
            Val::Place(p, m) => (p, m),
            Val::Word(_) => panic!("expected a place value"),
        }
    }
}

struct Lowerer<'a> {
    a: &'a Analysis,
    env: &'a Environment,
    ann: &'a Annotations,
    contract: Option<&'a ContractInfo>,
    slots: &'a [u64],
    fn_id: Option<FnId>,
    owner: Owner,
    code: Vec<Instr>,
    next_reg: u32,
    next_label: u32,
    locals: HashMap<LocalId, Slot>,
    self_place: Option<(Operand, Operand)>,
}

const STORAGE: Operand = Operand::Const(U256([0, 0, 0, 0]));
const MEMORY: Operand = Operand::Const(U256([1, 0, 0, 0]));

impl<'a> Lowerer<'a> {
    fn new(a: &'a Analysis, contract: Option<&'a ContractInfo>, slots: &'a [u64], fn_id: Option<FnId>, owner: Owner) -> Self {
        Lowerer {
            a,
            env: &a.env,
            ann: &a.annotations,
            contract,
            slots,
            fn_id,
            owner,
            code: Vec::new(),
            next_reg: 0,
            next_label: 0,
            locals: HashMap::new(),
            self_place: None,
        }
    }

    fn emit(&mut self, i: Instr) {
        self.code.push(i);
    }

    fn reg(&mut self) -> Reg {
        self.next_reg += 1;
        self.next_reg - 1
    }

    fn label(&mut self) -> Label {
        self.next_label += 1;
        self.next_label - 1
    }

    fn ty(&self, e: &Expr) -> Type {
        self.ann.ty(e)
    }

    fn is_place_type(&self, t: &Type) -> bool {
        self.env.is_dynamic(t)
    }

    fn words(&self, t: &Type) -> u64 {
        self.env.words(t)
    }

    fn offset(&mut self, base: Operand, words: Operand, is_mem: Operand) -> Operand {
        if let (Some(b), Some(w), Some(m)) = (base.as_const(), words.as_const(), is_mem.as_const()) {
            let scale = if m.is_zero() { 1u64 } else { 32 };
            return Operand::Const(b + w * U256::from(scale));
        }
        if words.as_const() == Some(U256::zero()) {
            return base;
        }
        let dst = self.reg();
        self.emit(Instr::Offset { dst, base, words, is_mem });
        Operand::Reg(dst)
    }

    fn load(&mut self, (addr, is_mem): (Operand, Operand)) -> Operand {
        let dst = self.reg();
        self.emit(Instr::Load { dst, addr, is_mem });
        Operand::Reg(dst)
    }

    fn require_storage(&mut self, is_mem: Operand) {
        if is_mem.as_const() != Some(U256::zero()) {
            self.emit(Instr::RequireStorage { is_mem });
        }
    }

    fn property_place(&mut self, index: usize) -> (Operand, Operand) {
        match (&self.owner, self.self_place) {
            (Owner::Struct(s), Some((p, m))) => {
                let off = self.env.field_offset(s, index);
                let a = self.offset(p, Operand::int(off), m);
                (a, m)
            }
            _ => (Operand::int(self.slots[index]), STORAGE),
        }
    }

    fn property_type(&self, index: usize) -> Type {
        self.env.properties(&self.owner)[index].ty.clone()
    }

    fn read_place(&mut self, ty: &Type, place: (Operand, Operand)) -> Val {
        if self.is_place_type(ty) {
            Val::Place(place.0, place.1)
        } else {
            Val::Word(self.load(place))
        }
    }

    // ---- prologues -----------------------------------------------------

    fn contract_prologue(&mut self) {
        let Some(c) = self.contract else { return };
        let Some(TopLevelDecl::Contract(decl)) = self.a.module.declarations.get(c.decl) else { return };
        let defaults: Vec<(usize, &Expr)> = decl
            .members
            .iter()
            .filter_map(|m| match m {
                ContractMember::Property(v) => v.value.as_deref().map(|e| (v.name.name.clone(), e)),
                ContractMember::Event(_) => None,
            })
            .filter_map(|(n, e)| c.property(&n).map(|(i, _)| (i, e)))
            .collect();
        for (i, e) in defaults {
            let place = (Operand::int(self.slots[i]), STORAGE);
            let ty = self.property_type(i);
            self.init_place(place, &ty, e);
        }
    }

    fn struct_prologue(&mut self, strukt: &str) {
        let info = &self.env.structs[strukt];
        let Some(TopLevelDecl::Struct(decl)) = self.a.module.declarations.get(info.decl) else { return };
        let defaults: Vec<(usize, &Expr)> = decl
            .members
            .iter()
            .filter_map(|m| match m {
                StructMember::Property(v) => v.value.as_deref().map(|e| (v.name.name.clone(), e)),
                StructMember::Function(_) => None,
            })
            .filter_map(|(n, e)| info.property(&n).map(|(i, _)| (i, e)))
            .collect();
        let (p, m) = self.self_place.expect("struct initialiser has a receiver");
        for (i, e) in defaults {
            let off = self.env.field_offset(strukt, i);
            let a = self.offset(p, Operand::int(off), m);
            let ty = info.properties[i].ty.clone();
            self.init_place((a, m), &ty, e);
        }
    }

    /// Stores the value of `e` into `place`, constructing structures in place.
    fn init_place(&mut self, place: (Operand, Operand), ty: &Type, e: &Expr) {
        let e = e.unbracketed();
        if let (ExprKind::Call { args, .. }, Some(CallTarget::Init { strukt, init })) = (&e.kind, self.ann.calls.get(&e.id)) {
            let (strukt, init) = (strukt.clone(), *init);
            self.construct(place, &strukt, init, args);
            return;
        }
        if matches!(e.kind, ExprKind::EmptyArray | ExprKind::EmptyDictionary) {
            self.emit(Instr::Store { addr: place.0, value: Operand::int(0), is_mem: place.1 });
            return;
        }
        let v = self.value(e);
        self.store_value(place, ty, v, is_temporary(e, self.ann));
    }

    fn store_value(&mut self, place: (Operand, Operand), ty: &Type, v: Val, temporary: bool) {
        match v {
            Val::Word(w) => self.emit(Instr::Store { addr: place.0, value: w, is_mem: place.1 }),
            Val::Place(src, src_mem) => {
                let words = if ty.is_collection() { 1 } else { self.words(ty) };
                self.emit(Instr::Copy { dst: place.0, dst_mem: place.1, src, src_mem, words });
                if temporary && self.env.is_currency(ty) {
                    for w in 0..words {
                        let a = self.offset(src, Operand::int(w), src_mem);
                        self.emit(Instr::Store { addr: a, value: Operand::int(0), is_mem: src_mem });
                    }
                }
            }
        }
    }

    // ---- statements ----------------------------------------------------

    fn block(&mut self, b: &Block) {
        for s in &b.statements {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Expr(e) => {
                self.value_or_void(e);
            }
            StmtKind::Return(v) => {
                let values = match v {
                    None => vec![],
                    Some(e) => match self.value(e) {
                        Val::Word(w) => vec![w],
                        Val::Place(p, m) => vec![p, m],
                    },
                };
                self.emit(Instr::Return { values });
            }
            StmtKind::Become(state) => {
                let ordinal = self.contract.and_then(|c| c.typestate_ordinal(&state.name)).unwrap_or(0);
                self.emit(Instr::BecomeState { ordinal });
            }
            StmtKind::Emit { event, args } => {
                let args: Vec<Operand> = args.iter().map(|a| self.value(&a.value).word()).collect();
                self.emit(Instr::EmitEvent { event: event.name.clone(), args });
            }
            StmtKind::If { condition, then_block, else_block } => {
                let c = self.value(condition).word();
                let (t, e, end) = (self.label(), self.label(), self.label());
                self.emit(Instr::Branch { cond: c, then_label: t, else_label: e });
                self.emit(Instr::Label(t));
                self.block(then_block);
                self.emit(Instr::Jump(end));
                self.emit(Instr::Label(e));
                if let Some(b) = else_block {
                    self.block(b);
                }
                self.emit(Instr::Label(end));
            }
            StmtKind::For { iterable, body, .. } => self.for_loop(iterable, body),
        }
    }

    fn for_loop(&mut self, iterable: &Expr, body: &Block) {
        let var = self.ann.loop_vars[&iterable.id];
        let info = self.ann.local(self.fn_id.expect("loops occur in functions"), var).clone();
        let (head, step, done, end) = (self.label(), self.label(), self.label(), self.label());
        let i = self.reg();
        let it = iterable.unbracketed();
        if let ExprKind::Range { start, end: stop, inclusive } = &it.kind {
            let a = self.value(start).word();
            let b = self.value(stop).word();
            let b_reg = self.reg();
            self.emit(Instr::Move { dst: b_reg, src: b });
            self.emit(Instr::Move { dst: i, src: a });
            let v = self.reg();
            self.locals.insert(var, Slot::Word(v));
            let c = self.reg();
            // Closed ranges test `i > b` and stop after `i == b`, so `b` may be the maximum word.
            self.emit(Instr::Label(head));
            let op = if *inclusive { CmpOp::Le } else { CmpOp::Lt };
            self.emit(Instr::Cmp { dst: c, op, a: Operand::Reg(i), b: Operand::Reg(b_reg) });
            self.emit(Instr::Branch { cond: Operand::Reg(c), then_label: step, else_label: end });
            self.emit(Instr::Label(step));
            self.emit(Instr::Move { dst: v, src: Operand::Reg(i) });
            self.block(body);
            if *inclusive {
                self.emit(Instr::Cmp { dst: c, op: CmpOp::Eq, a: Operand::Reg(i), b: Operand::Reg(b_reg) });
                self.emit(Instr::Branch { cond: Operand::Reg(c), then_label: end, else_label: done });
                self.emit(Instr::Label(done));
            }
            self.emit(Instr::Arith { dst: i, op: ArithOp::WAdd, a: Operand::Reg(i), b: Operand::int(1) });
            self.emit(Instr::Jump(head));
            self.emit(Instr::Label(end));
            return;
        }
        let coll_ty = self.ty(it);
        let (base, base_mem) = self.place(it, false);
        let len = self.reg();
        match &coll_ty {
            Type::FixedArray(_, n) => self.emit(Instr::Move { dst: len, src: Operand::int(*n) }),
            _ => {
                self.require_storage(base_mem);
                self.emit(Instr::Load { dst: len, addr: base, is_mem: base_mem });
            }
        }
        self.emit(Instr::Move { dst: i, src: Operand::int(0) });
        let c = self.reg();
        self.emit(Instr::Label(head));
        self.emit(Instr::Cmp { dst: c, op: CmpOp::Lt, a: Operand::Reg(i), b: Operand::Reg(len) });
        self.emit(Instr::Branch { cond: Operand::Reg(c), then_label: step, else_label: end });
        self.emit(Instr::Label(step));
        let elem: (Operand, Operand) = match &coll_ty {
            Type::FixedArray(t, _) => {
                let w = self.words(t);
                let k = self.reg();
                self.emit(Instr::Arith { dst: k, op: ArithOp::Mul, a: Operand::Reg(i), b: Operand::int(w) });
                (self.offset(base, Operand::Reg(k), base_mem), base_mem)
            }
            Type::Array(t) => {
                let dst = self.reg();
                let kind = SlotKind::ArrayElem { elem_words: self.words(t), write: false };
                self.emit(Instr::KeccakSlot { dst, kind, head: base, key: Operand::Reg(i) });
                (Operand::Reg(dst), STORAGE)
            }
            Type::Dictionary(..) => {
                let key = self.reg();
                self.emit(Instr::DictKeyAt { dst: key, head: base, index: Operand::Reg(i) });
                let dst = self.reg();
                self.emit(Instr::KeccakSlot {
                    dst,
                    kind: SlotKind::DictEntry { write: false },
                    head: base,
                    key: Operand::Reg(key),
                });
                (Operand::Reg(dst), STORAGE)
            }
            _ => (Operand::int(0), STORAGE),
        };
        match info.kind {
            LocalKind::LoopRef { .. } => {
                let (p, m) = (self.reg(), self.reg());
                self.emit(Instr::Move { dst: p, src: elem.0 });
                self.emit(Instr::Move { dst: m, src: elem.1 });
                self.locals.insert(var, Slot::Place(p, m));
            }
            _ => {
                let v = self.reg();
                self.emit(Instr::Load { dst: v, addr: elem.0, is_mem: elem.1 });
                self.locals.insert(var, Slot::Word(v));
            }
        }
        self.block(body);
        self.emit(Instr::Arith { dst: i, op: ArithOp::WAdd, a: Operand::Reg(i), b: Operand::int(1) });
        self.emit(Instr::Jump(head));
        self.emit(Instr::Label(end));
        let _ = done;
    }

    // ---- expressions ---------------------------------------------------

    fn value_or_void(&mut self, e: &Expr) -> Option<Val> {
        let t = self.ty(e);
        if matches!(t, Type::Void) || matches!(e.unbracketed().kind, ExprKind::VarDecl(_)) {
            self.void(e);
            None
        } else {
            Some(self.value(e))
        }
    }

    /// Lowers an expression evaluated for its effect only.
    fn void(&mut self, e: &Expr) {
        match &e.unbracketed().kind {
            ExprKind::Binary { op, lhs, rhs } if op.is_assignment() => self.assign(*op, lhs, rhs),
            ExprKind::VarDecl(d) => self.var_decl(e.unbracketed(), d),
            ExprKind::Call { .. } | ExprKind::Try(_) => {
                self.call_expr(e.unbracketed());
            }
            _ => {
                self.value(e);
            }
        }
    }

    fn value(&mut self, e: &Expr) -> Val {
        match &e.kind {
            ExprKind::Identifier(_) => match self.ann.refs.get(&e.id).cloned() {
                Some(Ref::Local(l)) => match self.locals[&l] {
                    Slot::Word(r) => Val::Word(Operand::Reg(r)),
                    Slot::Place(p, m) => Val::Place(Operand::Reg(p), Operand::Reg(m)),
                },
                Some(Ref::Property(i)) => {
                    let place = self.property_place(i);
                    let ty = self.property_type(i);
                    self.read_place(&ty, place)
                }
                Some(Ref::Caller) => {
                    let dst = self.reg();
                    self.emit(Instr::Caller { dst });
                    Val::Word(Operand::Reg(dst))
                }
                _ => Val::Word(Operand::int(0)),
            },
            ExprKind::SelfValue => match self.self_place {
                Some((p, m)) => Val::Place(p, m),
                None => Val::Place(Operand::int(0), STORAGE),
            },
            ExprKind::Int(t) => Val::Word(Operand::Const(U256::from_dec_str(t).unwrap_or_default())),
            ExprKind::Bool(b) => Val::Word(Operand::int(*b as u64)),
            ExprKind::Address(a) => {
                Val::Word(Operand::Const(U256::from_str_radix(a.trim_start_matches("0x"), 16).unwrap_or_default()))
            }
            ExprKind::Str(s) => Val::Word(Operand::Const(string_word(s))),
            ExprKind::Fraction(_) | ExprKind::EmptyArray | ExprKind::EmptyDictionary => Val::Word(Operand::int(0)),
            ExprKind::InOut(inner) => {
                let (p, m) = self.place(inner, true);
                Val::Place(p, m)
            }
            ExprKind::Bracketed(inner) => self.value(inner),
            ExprKind::Try(_) | ExprKind::Call { .. } => self.call_expr(e).unwrap_or(Val::Word(Operand::int(0))),
            ExprKind::VarDecl(d) => {
                self.var_decl(e, d);
                Val::Word(Operand::int(0))
            }
            ExprKind::Range { .. } => Val::Word(Operand::int(0)),
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs),
            ExprKind::Member { base, .. } => match self.ann.members.get(&e.id).cloned() {
                Some(MemberRef::EnumCase { index, .. }) => Val::Word(Operand::int(index as u64)),
                Some(MemberRef::Size) => {
                    let bt = self.ty(base);
                    if let Type::FixedArray(_, n) = bt {
                        return Val::Word(Operand::int(n));
                    }
                    let (p, m) = self.place(base, false);
                    self.require_storage(m);
                    Val::Word(self.load((p, m)))
                }
                _ => {
                    let ty = self.ty(e);
                    let place = self.place(e, false);
                    self.read_place(&ty, place)
                }
            },
            ExprKind::Subscript { .. } => {
                let ty = self.ty(e);
                let place = self.place(e, false);
                self.read_place(&ty, place)
            }
        }
    }

    fn binary(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr) -> Val {
        use BinaryOp::*;
        if op.is_assignment() {
            self.assign(op, lhs, rhs);
            return Val::Word(Operand::int(0));
        }
        if matches!(op, And | Or) {
            let dst = self.reg();
            let a = self.value(lhs).word();
            self.emit(Instr::Move { dst, src: a });
            let (rhs_label, end) = (self.label(), self.label());
            let (t, f) = if op == And { (rhs_label, end) } else { (end, rhs_label) };
            self.emit(Instr::Branch { cond: a, then_label: t, else_label: f });
            self.emit(Instr::Label(rhs_label));
            let b = self.value(rhs).word();
            self.emit(Instr::Move { dst, src: b });
            self.emit(Instr::Label(end));
            return Val::Word(Operand::Reg(dst));
        }
        let a = self.value(lhs).word();
        let b = self.value(rhs).word();
        let dst = self.reg();
        let arith = |op| Some(op);
        let arith_op = match op {
            Add => arith(ArithOp::Add),
            Sub => arith(ArithOp::Sub),
            Mul => arith(ArithOp::Mul),
            Div => arith(ArithOp::Div),
            Pow => arith(ArithOp::Exp),
            WrapAdd => arith(ArithOp::WAdd),
            WrapSub => arith(ArithOp::WSub),
            WrapMul => arith(ArithOp::WMul),
            _ => None,
        };
        if let Some(op) = arith_op {
            self.emit(Instr::Arith { dst, op, a, b });
        } else {
            let op = match op {
                Eq => CmpOp::Eq,
                NotEq => CmpOp::Ne,
                Lt => CmpOp::Lt,
                LtEq => CmpOp::Le,
                Gt => CmpOp::Gt,
                _ => CmpOp::Ge,
            };
            self.emit(Instr::Cmp { dst, op, a, b });
        }
        Val::Word(Operand::Reg(dst))
    }

    fn assign(&mut self, op: BinaryOp, lhs: &Expr, rhs: &Expr) {
        let ty = self.ty(lhs);
        let lhs_u = lhs.unbracketed();
        let local_word = match (&lhs_u.kind, self.ann.refs.get(&lhs_u.id)) {
            (ExprKind::Identifier(_), Some(Ref::Local(l))) => match self.locals[l] {
                Slot::Word(r) => Some(r),
                Slot::Place(..) => None,
            },
            _ => None,
        };
        let arith = op.compound_base().map(|b| match b {
            BinaryOp::Add => ArithOp::Add,
            BinaryOp::Sub => ArithOp::Sub,
            BinaryOp::Mul => ArithOp::Mul,
            _ => ArithOp::Div,
        });
        if let Some(r) = local_word {
            let v = self.value(rhs).word();
            match arith {
                None => self.emit(Instr::Move { dst: r, src: v }),
                Some(op) => self.emit(Instr::Arith { dst: r, op, a: Operand::Reg(r), b: v }),
            }
            return;
        }
        let place = self.place(lhs, true);
        if let Some(op) = arith {
            let cur = self.load(place);
            let v = self.value(rhs).word();
            let dst = self.reg();
            self.emit(Instr::Arith { dst, op, a: cur, b: v });
            self.emit(Instr::Store { addr: place.0, value: Operand::Reg(dst), is_mem: place.1 });
            return;
        }
        if ty.is_collection() && matches!(rhs.unbracketed().kind, ExprKind::EmptyArray | ExprKind::EmptyDictionary) {
            self.require_storage(place.1);
            self.emit(Instr::Store { addr: place.0, value: Operand::int(0), is_mem: place.1 });
            return;
        }
        let v = self.value(rhs);
        let temp = is_temporary(rhs, self.ann);
        self.store_value(place, &ty, v, temp);
    }

    fn var_decl(&mut self, e: &Expr, d: &VariableDecl) {
        let Some(&local) = self.ann.decls.get(&e.id) else { return };
        let info = self.ann.local(self.fn_id.expect("locals occur in functions"), local).clone();
        let Some(value) = &d.value else {
            let r = self.reg();
            self.locals.insert(local, Slot::Word(r));
            return;
        };
        if self.is_place_type(&info.ty) {
            let v = self.value(value);
            let (p, m) = (self.reg(), self.reg());
            if is_temporary(value, self.ann) {
                let (src, src_mem) = v.place();
                self.emit(Instr::Move { dst: p, src });
                self.emit(Instr::Move { dst: m, src: src_mem });
            } else {
                let words = self.words(&info.ty);
                self.emit(Instr::Alloc { dst: p, words, currency: self.env.is_currency(&info.ty) });
                self.emit(Instr::Move { dst: m, src: MEMORY });
                self.store_value((Operand::Reg(p), Operand::Reg(m)), &info.ty, v, false);
            }
            self.locals.insert(local, Slot::Place(p, m));
        } else {
            let v = self.value(value).word();
            let r = self.reg();
            self.emit(Instr::Move { dst: r, src: v });
            self.locals.insert(local, Slot::Word(r));
        }
    }

    /// Address of an lvalue or place-typed expression. `write` marks
    /// contexts that may store through it.
    fn place(&mut self, e: &Expr, write: bool) -> (Operand, Operand) {
        match &e.kind {
            ExprKind::Bracketed(inner) | ExprKind::InOut(inner) => self.place(inner, write),
            ExprKind::Identifier(_) => match self.ann.refs.get(&e.id).cloned() {
                Some(Ref::Local(l)) => match self.locals[&l] {
                    Slot::Place(p, m) => (Operand::Reg(p), Operand::Reg(m)),
                    Slot::Word(_) => panic!("word local used as a place"),
                },
                Some(Ref::Property(i)) => self.property_place(i),
                _ => (Operand::int(0), STORAGE),
            },
            ExprKind::SelfValue => self.self_place.unwrap_or((Operand::int(0), STORAGE)),
            ExprKind::Member { base, .. } => match self.ann.members.get(&e.id).cloned() {
                Some(MemberRef::SelfProperty(i)) => self.property_place(i),
                Some(MemberRef::Field { strukt, index }) => {
                    let (p, m) = self.place(base, write);
                    let off = self.env.field_offset(&strukt, index);
                    (self.offset(p, Operand::int(off), m), m)
                }
                _ => (Operand::int(0), STORAGE),
            },
            ExprKind::Subscript { base, index } => {
                let bt = self.ty(base);
                let (p, m) = self.place(base, write);
                let key = self.value(index).word();
                match bt {
                    Type::FixedArray(t, n) => {
                        self.emit(Instr::BoundsCheck { index: key, len: Operand::int(n) });
                        let w = self.words(&t);
                        let k = self.reg();
                        self.emit(Instr::Arith { dst: k, op: ArithOp::Mul, a: key, b: Operand::int(w) });
                        (self.offset(p, Operand::Reg(k), m), m)
                    }
                    Type::Array(t) => {
                        self.require_storage(m);
                        let dst = self.reg();
                        let kind = SlotKind::ArrayElem { elem_words: self.words(&t), write };
                        self.emit(Instr::KeccakSlot { dst, kind, head: p, key });
                        (Operand::Reg(dst), STORAGE)
                    }
                    _ => {
                        self.require_storage(m);
                        let dst = self.reg();
                        self.emit(Instr::KeccakSlot { dst, kind: SlotKind::DictEntry { write }, head: p, key });
                        (Operand::Reg(dst), STORAGE)
                    }
                }
            }
            _ => match self.value(e) {
                Val::Place(p, m) => (p, m),
                Val::Word(_) => panic!("word value used as a place"),
            },
        }
    }

    fn construct(&mut self, place: (Operand, Operand), strukt: &str, init: Option<FnId>, args: &[Argument]) {
        let mut ops = vec![place.0, place.1];
        let func = match init {
            Some(f) => {
                let callee = self.env.function(f).clone();
                ops.extend(self.arguments(&callee, args));
                callee.mangled
            }
            None => implicit_init_name(strukt),
        };
        self.emit(Instr::Call { dsts: vec![], func, args: ops, checked: false });
    }

    fn arguments(&mut self, callee: &FunctionInfo, args: &[Argument]) -> Vec<Operand> {
        let mut ops = Vec::new();
        let defaults: Vec<Option<Expr>> = match callee.loc {
            Some(loc) => function_decl(&self.a.module, loc).params.iter().map(|p| p.default.clone()).collect(),
            None => Vec::new(),
        };
        for (i, p) in callee.params.iter().enumerate() {
            let expr = match args.get(i) {
                Some(a) => a.value.clone(),
                None => match defaults.get(i).cloned().flatten() {
                    Some(d) => d,
                    None => continue,
                },
            };
            if self.is_place_type(&p.ty) {
                let (a, m) = match &expr.kind {
                    ExprKind::InOut(inner) => self.place(inner, true),
                    _ => self.value(&expr).place(),
                };
                ops.push(a);
                ops.push(m);
            } else {
                ops.push(self.value(&expr).word());
            }
        }
        ops
    }

    fn call_expr(&mut self, e: &Expr) -> Option<Val> {
        let (e, checked) = match &e.kind {
            ExprKind::Try(inner) => (inner.unbracketed(), true),
            _ => (e, false),
        };
        let ExprKind::Call { receiver, args, .. } = &e.kind else { return None };
        match self.ann.calls.get(&e.id).cloned()? {
            CallTarget::Runtime(rt) => {
                let ops: Vec<Operand> = args.iter().map(|a| self.value(&a.value).word()).collect();
                self.emit(Instr::Call { dsts: vec![], func: rt.name().to_string(), args: ops, checked: false });
                None
            }
            CallTarget::Init { strukt, init } => {
                let dst = self.reg();
                let words = self.env.words(&Type::Named(strukt.clone()));
                let currency = strukt == stdlib::CURRENCY;
                self.emit(Instr::Alloc { dst, words, currency });
                self.construct((Operand::Reg(dst), MEMORY), &strukt, init, args);
                Some(Val::Place(Operand::Reg(dst), MEMORY))
            }
            CallTarget::Function(f) => {
                let callee = self.env.function(f).clone();
                let mut ops = Vec::new();
                if let Owner::Struct(_) = callee.owner {
                    let recv = match receiver.as_deref() {
                        Some(r) if !matches!(r.unbracketed().kind, ExprKind::SelfValue) => self.place(r, callee.is_mutating),
                        _ => self.self_place.unwrap_or((Operand::int(0), STORAGE)),
                    };
                    ops.push(recv.0);
                    ops.push(recv.1);
                } else if let Some(r) = receiver.as_deref() {
                    if !matches!(r.unbracketed().kind, ExprKind::SelfValue) {
                        self.value(r);
                    }
                }
                ops.extend(self.arguments(&callee, args));
                let n = words_of_return(self.env, &callee.ret);
                let dsts: Vec<Reg> = (0..n).map(|_| self.reg()).collect();
                self.emit(Instr::Call { dsts: dsts.clone(), func: callee.mangled.clone(), args: ops, checked });
                match n {
                    0 => None,
                    1 => Some(Val::Word(Operand::Reg(dsts[0]))),
                    _ => Some(Val::Place(Operand::Reg(dsts[0]), Operand::Reg(dsts[1]))),
                }
            }
        }
    }
}

/// Whether `e` yields a fresh value no other name refers to.
fn is_temporary(e: &Expr, ann: &Annotations) -> bool {
    match &e.unbracketed().kind {
        ExprKind::Call { .. } => true,
        ExprKind::Try(inner) => is_temporary(inner, ann),
        _ => false,
    }
}

/// Names of every IR function called anywhere in `c`.
pub fn called_functions(c: &IRContract) -> BTreeSet<String> {
    c.functions
        .iter()
        .flat_map(|f| f.body.iter())
        .filter_map(|i| match i {
            Instr::Call { func, .. } => Some(func.clone()),
            _ => None,
        })
        .collect()
}
