//! Text dump of IR: layout tables as header pragmas, then one instruction per line.

use std::fmt::Write;

use super::ir::*;
use super::selector::selector_hex;

fn op(o: &Operand) -> String {
    match o {
        Operand::Reg(r) => format!("%{r}"),
        Operand::Const(c) if c.bits() <= 64 => c.to_string(),
        Operand::Const(c) => format!("{c:#x}"),
    }
}

fn ops(v: &[Operand]) -> String {
    v.iter().map(op).collect::<Vec<_>>().join(", ")
}

fn layout(l: &LayoutType) -> String {
    match l {
        LayoutType::Word => "word".into(),
        LayoutType::Currency => "currency".into(),
        LayoutType::Struct { fields } => {
            let f: Vec<String> = fields.iter().map(|(o, t)| format!("+{o}:{}", layout(t))).collect();
            format!("struct{{{}}}", f.join(","))
        }
        LayoutType::FixedArray { elem, len, .. } => format!("fixed[{}; {len}]", layout(elem)),
        LayoutType::Array { elem, .. } => format!("array[{}]", layout(elem)),
        LayoutType::Dictionary { value, .. } => format!("dict[{}]", layout(value)),
    }
}

pub fn instr(i: &Instr) -> String {
    match i {
        Instr::Move { dst, src } => format!("%{dst} = {}", op(src)),
        Instr::Arith { dst, op: o, a, b } => format!("%{dst} = {} {}, {}", format!("{o:?}").to_lowercase(), op(a), op(b)),
        Instr::Cmp { dst, op: o, a, b } => format!("%{dst} = cmp.{} {}, {}", format!("{o:?}").to_lowercase(), op(a), op(b)),
        Instr::Load { dst, addr, is_mem } => format!("%{dst} = load {} mem={}", op(addr), op(is_mem)),
        Instr::Store { addr, value, is_mem } => format!("store {} mem={}, {}", op(addr), op(is_mem), op(value)),
        Instr::Offset { dst, base, words, is_mem } => {
            format!("%{dst} = offset {}, {} mem={}", op(base), op(words), op(is_mem))
        }
        Instr::Alloc { dst, words, currency } => {
            format!("%{dst} = alloc {words}{}", if *currency { " ; currency" } else { "" })
        }
        Instr::KeccakSlot { dst, kind, head, key } => match kind {
            SlotKind::ArrayElem { elem_words, write } => {
                format!("%{dst} = keccakslot.array {}, {} words={elem_words}{}", op(head), op(key), if *write { " write" } else { "" })
            }
            SlotKind::DictEntry { write } => {
                format!("%{dst} = keccakslot.dict {}, {}{}", op(head), op(key), if *write { " write" } else { "" })
            }
        },
        Instr::DictKeyAt { dst, head, index } => format!("%{dst} = dictkey {}, {}", op(head), op(index)),
        Instr::BoundsCheck { index, len } => format!("boundscheck {}, {}", op(index), op(len)),
        Instr::RequireStorage { is_mem } => format!("requirestorage {}", op(is_mem)),
        Instr::Copy { dst, dst_mem, src, src_mem, words } => format!(
            "copy {} mem={}, {} mem={}, {words}",
            op(dst),
            op(dst_mem),
            op(src),
            op(src_mem)
        ),
        Instr::Label(l) => format!("L{l}:"),
        Instr::Jump(l) => format!("jump L{l}"),
        Instr::Branch { cond, then_label, else_label } => format!("branch {}, L{then_label}, L{else_label}", op(cond)),
        Instr::Call { dsts, func, args, checked } => {
            let lhs = if dsts.is_empty() {
                String::new()
            } else {
                format!("{} = ", dsts.iter().map(|d| format!("%{d}")).collect::<Vec<_>>().join(", "))
            };
            format!("{lhs}{} {func}({})", if *checked { "call.checked" } else { "call" }, ops(args))
        }
        Instr::Return { values } => format!("return {}", ops(values)).trim_end().to_string(),
        Instr::Revert { reason } => format!("revert {}", reason.name()),
        Instr::EmitEvent { event, args } => format!("emit {event}({})", ops(args)),
        Instr::BecomeState { ordinal } => format!("become {ordinal}"),
        Instr::SendWei { address, amount } => format!("sendwei {}, {}", op(address), op(amount)),
        Instr::Mint { amount } => format!("mint {}", op(amount)),
        Instr::Caller { dst } => format!("%{dst} = caller"),
    }
}

pub fn print_program(p: &IRProgram) -> String {
    let mut out = String::new();
    for c in &p.contracts {
        print_contract(&mut out, c);
    }
    out
}

fn print_contract(out: &mut String, c: &IRContract) {
    let _ = writeln!(out, "#pragma contract {}", c.name);
    for l in &c.layout {
        let _ = writeln!(out, "#pragma slot {} {} : {} words={} {}", l.slot, l.name, l.ty, l.words, layout(&l.layout));
    }
    for (s, o) in &c.typestates {
        let _ = writeln!(out, "#pragma typestate {s} = {o}");
    }
    for e in &c.events {
        let f: Vec<String> = e.fields.iter().map(|(n, t)| format!("{n}: {}", t.name())).collect();
        let _ = writeln!(out, "#pragma event {}({})", e.name, f.join(", "));
    }
    for d in &c.dispatch {
        let _ = writeln!(out, "#pragma dispatch {} {} -> {}", selector_hex(d.selector), d.signature, d.function);
    }
    let _ = writeln!(out, "#pragma init {}", c.init);
    if let Some(f) = &c.fallback {
        let _ = writeln!(out, "#pragma fallback {f}");
    }
    for f in &c.functions {
        let params: Vec<String> = f
            .params
            .iter()
            .map(|p| match p {
                ParamKind::Word { abi: Some(a) } => a.name().to_string(),
                ParamKind::Word { abi: None } => "word".into(),
                ParamKind::Place => "ref, isMem".into(),
                ParamKind::ImplicitValue => "value, isMem".into(),
            })
            .collect();
        let _ = writeln!(
            out,
            "\nfunction {}({}) returns {} regs {}{}",
            f.name,
            params.join(", "),
            f.returns,
            f.num_regs,
            if f.payable { " payable" } else { "" }
        );
        if let Some(e) = &f.entry {
            if !e.typestates.is_empty() {
                let s: Vec<String> = e.typestates.iter().map(|t| t.to_string()).collect();
                let _ = writeln!(out, "  typestatecheck {}", s.join(", "));
            }
            for p in &e.protections {
                let _ = match p {
                    ProtectionCheck::AddressProperty { slot } => writeln!(out, "  protectioncheck address slot {slot}"),
                    ProtectionCheck::AddressList { slot } => writeln!(out, "  protectioncheck list slot {slot}"),
                    ProtectionCheck::Predicate { function } => writeln!(out, "  protectioncheck predicate {function}"),
                };
            }
        }
        for i in &f.body {
            let indent = if matches!(i, Instr::Label(_)) { " " } else { "    " };
            let _ = writeln!(out, "{indent}{}", instr(i));
        }
    }
    out.push('\n');
}
