//! Symbolic tags and the compartmentalization micro-policy.

use std::fmt;

use crate::names::ClassName;
use crate::target::{Instr, MonitorDecision, MonitorInput, Policy, Reg};

/// Tag on the program counter: the current cross-compartment call depth.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PcTag(pub u32);

impl fmt::Display for PcTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tag on a register or on the value held in a memory cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValTag {
    Cleared,
    /// Linear capability to return to depth `n`, expecting a result of the
    /// given class.
    RetCap(u32, ClassName),
    ObjPtr(ClassName),
    PlainWord,
}

impl ValTag {
    /// Destroys a return capability; every other tag is unchanged.
    pub fn clear(self) -> ValTag {
        match self {
            ValTag::RetCap(..) => ValTag::Cleared,
            t => t,
        }
    }
}

impl fmt::Display for ValTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValTag::Cleared => write!(f, "⊥"),
            ValTag::RetCap(n, c) => write!(f, "Ret {n} {c}"),
            ValTag::ObjPtr(c) => write!(f, "O {c}"),
            ValTag::PlainWord => write!(f, "W"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bless {
    Blessed(ClassName),
    NotBlessed,
}

impl fmt::Display for Bless {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bless::Blessed(c) => write!(f, "B {c}"),
            Bless::NotBlessed => write!(f, "NB"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Entry {
    /// Argument and result class of the method starting here.
    EntryPoint(ClassName, ClassName),
    NotEntryPoint,
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::EntryPoint(a, r) => write!(f, "EP {a}->{r}"),
            Entry::NotEntryPoint => write!(f, "NEP"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MemTag {
    pub bless: Bless,
    pub compartment: ClassName,
    pub entry: Entry,
    pub value: ValTag,
}

impl MemTag {
    pub fn plain(compartment: ClassName) -> Self {
        MemTag {
            bless: Bless::NotBlessed,
            compartment,
            entry: Entry::NotEntryPoint,
            value: ValTag::PlainWord,
        }
    }

    pub fn with_value(self, value: ValTag) -> Self {
        MemTag { value, ..self }
    }
}

impl fmt::Display for MemTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.bless, self.compartment, self.entry, self.value)
    }
}

/// The rule that allowed a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    NopBnz,
    Const,
    ConstBlessed,
    Mov,
    Binop,
    Load,
    Store,
    JumpInternal,
    JumpReturn,
    JalInternal,
    JalCall,
    Halt,
}

impl RuleId {
    pub const ALL: [RuleId; 12] = [
        RuleId::NopBnz,
        RuleId::Const,
        RuleId::ConstBlessed,
        RuleId::Mov,
        RuleId::Binop,
        RuleId::Load,
        RuleId::Store,
        RuleId::JumpInternal,
        RuleId::JumpReturn,
        RuleId::JalInternal,
        RuleId::JalCall,
        RuleId::Halt,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleId::NopBnz => "nop-bnz",
            RuleId::Const => "const",
            RuleId::ConstBlessed => "const-blessed",
            RuleId::Mov => "mov",
            RuleId::Binop => "binop",
            RuleId::Load => "load",
            RuleId::Store => "store",
            RuleId::JumpInternal => "jump-internal",
            RuleId::JumpReturn => "jump-return",
            RuleId::JalInternal => "jal-internal",
            RuleId::JalCall => "jal-call",
            RuleId::Halt => "halt",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Why no rule matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Violation {
    /// The current instruction cell is not a plain, unblessed code word
    /// (blessing is only honored on `Const`).
    CodeTag,
    /// The next instruction lies in another compartment.
    NextCompartment(&'static str),
    BnzTag,
    BinopTag,
    LoadPointerTag,
    StorePointerTag,
    LoadCompartment,
    StoreCompartment,
    JumpCleared,
    JumpNoCapability,
    JumpCapabilityInternal,
    JumpDepth,
    JumpReturnType,
    JumpPointerTag,
    JalPointerTag,
    JalNonEntry,
    JalTargetType,
    JalArgType,
}

impl Violation {
    pub fn name(self) -> String {
        match self {
            Violation::CodeTag => "code-tag".into(),
            Violation::NextCompartment(op) => format!("{op}-next-compartment"),
            Violation::BnzTag => "bnz-tag".into(),
            Violation::BinopTag => "binop-tag".into(),
            Violation::LoadPointerTag => "load-pointer-tag".into(),
            Violation::StorePointerTag => "store-pointer-tag".into(),
            Violation::LoadCompartment => "load-compartment".into(),
            Violation::StoreCompartment => "store-compartment".into(),
            Violation::JumpCleared => "jump-cleared".into(),
            Violation::JumpNoCapability => "jump-no-capability".into(),
            Violation::JumpCapabilityInternal => "jump-capability-internal".into(),
            Violation::JumpDepth => "jump-depth".into(),
            Violation::JumpReturnType => "jump-return-type".into(),
            Violation::JumpPointerTag => "jump-pointer-tag".into(),
            Violation::JalPointerTag => "jal-pointer-tag".into(),
            Violation::JalNonEntry => "jal-non-entry".into(),
            Violation::JalTargetType => "jal-target-type".into(),
            Violation::JalArgType => "jal-arg-type".into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The compartmentalization micro-policy.
#[derive(Clone, Copy, Debug, Default)]
pub struct MicroPolicy;

impl Policy for MicroPolicy {
    fn transfer(&self, input: &MonitorInput) -> Result<MonitorDecision, Violation> {
        transfer(input)
    }
}

fn same_compartment(input: &MonitorInput, op: &'static str) -> Result<(), Violation> {
    match input.ni {
        Some(ni) if ni.compartment == input.ci.compartment => Ok(()),
        _ => Err(Violation::NextCompartment(op)),
    }
}

/// The transfer function.
pub fn transfer(input: &MonitorInput) -> Result<MonitorDecision, Violation> {
    let ci = input.ci;
    let current = ci.compartment;
    let depth = input.pc.0;
    let tag = |r: Reg| input.regs[r.index()];
    let allow = |rule| MonitorDecision::new(rule, input.pc);

    if let Instr::Halt = input.instr {
        return Ok(allow(RuleId::Halt));
    }
    if ci.value != ValTag::PlainWord {
        return Err(Violation::CodeTag);
    }
    let blessed = match (ci.bless, input.instr) {
        (Bless::NotBlessed, _) => None,
        (Bless::Blessed(c), Instr::Const(..)) => Some(c),
        (Bless::Blessed(_), _) => return Err(Violation::CodeTag),
    };

    match input.instr {
        Instr::Nop => {
            same_compartment(input, "nop")?;
            Ok(allow(RuleId::NopBnz))
        }
        Instr::Bnz(r, _) => {
            same_compartment(input, "bnz")?;
            if tag(r) != ValTag::PlainWord {
                return Err(Violation::BnzTag);
            }
            Ok(allow(RuleId::NopBnz))
        }
        Instr::Const(_, rd) => {
            same_compartment(input, "const")?;
            Ok(match blessed {
                None => allow(RuleId::Const).write(rd, ValTag::PlainWord),
                Some(c) => allow(RuleId::ConstBlessed).write(rd, ValTag::ObjPtr(c)),
            })
        }
        Instr::Mov(rs, rd) => {
            same_compartment(input, "mov")?;
            let t = tag(rs);
            Ok(allow(RuleId::Mov).write(rd, t).write(rs, t.clear()))
        }
        Instr::Binop(_, r1, r2, rd) => {
            same_compartment(input, "binop")?;
            let ok = |t: ValTag| matches!(t, ValTag::PlainWord | ValTag::ObjPtr(_));
            if !ok(tag(r1)) || !ok(tag(r2)) {
                return Err(Violation::BinopTag);
            }
            Ok(allow(RuleId::Binop).write(rd, ValTag::PlainWord))
        }
        Instr::Load(rp, rd) => {
            same_compartment(input, "load")?;
            if tag(rp) != ValTag::PlainWord {
                return Err(Violation::LoadPointerTag);
            }
            let cell = input.cell.expect("machine supplies the loaded cell tag");
            if cell.compartment != current {
                return Err(Violation::LoadCompartment);
            }
            Ok(allow(RuleId::Load)
                .write(rd, cell.value)
                .cell(cell.with_value(cell.value.clear())))
        }
        Instr::Store(rp, rs) => {
            same_compartment(input, "store")?;
            if tag(rp) != ValTag::PlainWord {
                return Err(Violation::StorePointerTag);
            }
            let cell = input.cell.expect("machine supplies the stored cell tag");
            if cell.compartment != current {
                return Err(Violation::StoreCompartment);
            }
            let t = tag(rs);
            Ok(allow(RuleId::Store)
                .cell(MemTag {
                    bless: Bless::NotBlessed,
                    compartment: current,
                    entry: cell.entry,
                    value: t,
                })
                .write(rs, t.clear()))
        }
        Instr::Jump(r) => {
            let ni = input.ni.ok_or(Violation::NextCompartment("jump"))?;
            match tag(r) {
                ValTag::PlainWord if ni.compartment == current => Ok(allow(RuleId::JumpInternal)),
                ValTag::PlainWord => Err(Violation::JumpNoCapability),
                ValTag::Cleared => Err(Violation::JumpCleared),
                ValTag::ObjPtr(_) => Err(Violation::JumpPointerTag),
                ValTag::RetCap(n, result) => {
                    if ni.compartment == current {
                        return Err(Violation::JumpCapabilityInternal);
                    }
                    if depth != n + 1 {
                        return Err(Violation::JumpDepth);
                    }
                    if tag(Reg::Ret) != ValTag::ObjPtr(result) {
                        return Err(Violation::JumpReturnType);
                    }
                    let mut d = allow(RuleId::JumpReturn);
                    d.pc = PcTag(n);
                    Ok(d.write(r, ValTag::Cleared)
                        .write(Reg::Aux1, ValTag::Cleared)
                        .write(Reg::Aux2, ValTag::Cleared)
                        .write(Reg::Aux3, ValTag::Cleared)
                        .write(Reg::Sp, ValTag::Cleared))
                }
            }
        }
        Instr::Jal(r) => {
            let ni = input.ni.ok_or(Violation::NextCompartment("jal"))?;
            if tag(r) != ValTag::PlainWord {
                return Err(Violation::JalPointerTag);
            }
            if ni.compartment == current {
                return Ok(allow(RuleId::JalInternal).write(Reg::A, ValTag::PlainWord));
            }
            let Entry::EntryPoint(arg, result) = ni.entry else {
                return Err(Violation::JalNonEntry);
            };
            if tag(Reg::Tgt) != ValTag::ObjPtr(ni.compartment) {
                return Err(Violation::JalTargetType);
            }
            if tag(Reg::Arg) != ValTag::ObjPtr(arg) {
                return Err(Violation::JalArgType);
            }
            let mut d = allow(RuleId::JalCall);
            d.pc = PcTag(depth + 1);
            Ok(d.write(Reg::A, ValTag::RetCap(depth, result))
                .write(Reg::Ret, ValTag::Cleared)
                .write(Reg::Spp, ValTag::Cleared)
                .write(Reg::Sp, ValTag::Cleared))
        }
        Instr::Halt => unreachable!("handled above"),
    }
}
