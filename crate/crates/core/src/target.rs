//! The symbolic machine: segmented memory of symbolic locations, ten
//! registers, and a monitor consulted on every step.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::names::{ClassName, MethodIndex, ObjectName};
use crate::policy::{MemTag, PcTag, RuleId, ValTag, Violation};

/// A symbolic memory region. Variant order is the dump order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Loc {
    MethL(ClassName, MethodIndex),
    ObjL(ObjectName),
    StackL(ClassName),
    /// Startup code added by the loader.
    Boot,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loc::MethL(c, m) => write!(f, "methl {c} {m}"),
            Loc::ObjL(o) => write!(f, "objl {o}"),
            Loc::StackL(c) => write!(f, "stackl {c}"),
            Loc::Boot => write!(f, "boot"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Reg {
    A,
    Tgt,
    Arg,
    Ret,
    Aux1,
    Aux2,
    Aux3,
    Sp,
    Spp,
    One,
}

impl Reg {
    pub const COUNT: usize = 10;
    pub const ALL: [Reg; Reg::COUNT] = [
        Reg::A,
        Reg::Tgt,
        Reg::Arg,
        Reg::Ret,
        Reg::Aux1,
        Reg::Aux2,
        Reg::Aux3,
        Reg::Sp,
        Reg::Spp,
        Reg::One,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Reg::A => "r_a",
            Reg::Tgt => "r_tgt",
            Reg::Arg => "r_arg",
            Reg::Ret => "r_ret",
            Reg::Aux1 => "r_aux1",
            Reg::Aux2 => "r_aux2",
            Reg::Aux3 => "r_aux3",
            Reg::Sp => "r_sp",
            Reg::Spp => "r_spp",
            Reg::One => "r_one",
        }
    }

    pub fn from_name(s: &str) -> Option<Reg> {
        Reg::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An immediate operand: an integer or a symbolic pointer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Imm {
    Int(i64),
    Ptr(Loc, i64),
}

impl fmt::Display for Imm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Imm::Int(i) => write!(f, "{i}"),
            Imm::Ptr(l, o) => write!(f, "{l}+{o}"),
        }
    }
}

impl From<Imm> for Word {
    fn from(i: Imm) -> Word {
        match i {
            Imm::Int(n) => Word::Int(n),
            Imm::Ptr(l, o) => Word::Ptr(l, o),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
}

impl BinOp {
    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "Add",
            BinOp::Sub => "Sub",
            BinOp::Eq => "Eq",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Nop,
    Const(Imm, Reg),
    Mov(Reg, Reg),
    Binop(BinOp, Reg, Reg, Reg),
    /// `Load rp rd`: rd := mem[rp]
    Load(Reg, Reg),
    /// `Store rp rs`: mem[rp] := rs
    Store(Reg, Reg),
    Jump(Reg),
    Jal(Reg),
    Bnz(Reg, Imm),
    Halt,
}

impl Instr {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Nop => "Nop",
            Instr::Const(..) => "Const",
            Instr::Mov(..) => "Mov",
            Instr::Binop(op, ..) => op.name(),
            Instr::Load(..) => "Load",
            Instr::Store(..) => "Store",
            Instr::Jump(_) => "Jump",
            Instr::Jal(_) => "Jal",
            Instr::Bnz(..) => "Bnz",
            Instr::Halt => "Halt",
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.mnemonic();
        match self {
            Instr::Nop | Instr::Halt => f.write_str(m),
            Instr::Const(i, r) => write!(f, "{m} {i} {r}"),
            Instr::Mov(a, b) | Instr::Load(a, b) | Instr::Store(a, b) => write!(f, "{m} {a} {b}"),
            Instr::Binop(_, a, b, d) => write!(f, "{m} {a} {b} {d}"),
            Instr::Jump(r) | Instr::Jal(r) => write!(f, "{m} {r}"),
            Instr::Bnz(r, i) => write!(f, "{m} {r} {i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Word {
    Int(i64),
    Ptr(Loc, i64),
    Encoded(Instr),
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Int(i) => write!(f, "{i}"),
            Word::Ptr(l, o) => write!(f, "{l}+{o}"),
            Word::Encoded(i) => write!(f, "{i}"),
        }
    }
}

/// Symbolic decoding: only encoded instructions decode.
pub fn decode(w: Word) -> Result<Instr, Failstop> {
    match w {
        Word::Encoded(i) => Ok(i),
        _ => Err(Failstop::Decode),
    }
}

/// Everything the monitor sees about a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonitorInput {
    pub instr: Instr,
    pub pc: PcTag,
    /// Tag of the current instruction cell.
    pub ci: MemTag,
    /// Tag of the next instruction cell; `None` for `Halt`.
    pub ni: Option<MemTag>,
    /// Tags of all registers, indexed by `Reg::index`.
    pub regs: [ValTag; Reg::COUNT],
    /// Tag of the memory cell read by `Load` or written by `Store`.
    pub cell: Option<MemTag>,
}

/// Tag updates for an allowed step. Register writes are applied in order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonitorDecision {
    pub rule: RuleId,
    pub pc: PcTag,
    pub reg_writes: Vec<(Reg, ValTag)>,
    pub cell: Option<MemTag>,
}

impl MonitorDecision {
    pub fn new(rule: RuleId, pc: PcTag) -> Self {
        MonitorDecision {
            rule,
            pc,
            reg_writes: Vec::new(),
            cell: None,
        }
    }

    pub fn write(mut self, r: Reg, t: ValTag) -> Self {
        self.reg_writes.push((r, t));
        self
    }

    pub fn cell(mut self, t: MemTag) -> Self {
        self.cell = Some(t);
        self
    }
}

pub trait Policy {
    fn transfer(&self, input: &MonitorInput) -> Result<MonitorDecision, Violation>;
}

/// Allows every step and leaves tags untouched.
#[derive(Clone, Copy, Debug, Default)]
pub struct PermitAll;

impl Policy for PermitAll {
    fn transfer(&self, input: &MonitorInput) -> Result<MonitorDecision, Violation> {
        Ok(MonitorDecision::new(RuleId::Halt, input.pc))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum Failstop {
    #[error("decode")]
    Decode,
    #[error("encoded-operand")]
    EncodedOperand,
    #[error("bad-pointer")]
    BadPointer,
    #[error("out-of-range({loc}+{offset})")]
    OutOfRange { loc: Loc, offset: i64 },
    #[error("pointer-arith")]
    PointerArith,
    #[error("overflow")]
    Overflow,
    #[error("bnz-pointer")]
    BnzPointer,
    #[error("policy({0})")]
    Policy(Violation),
}

impl Failstop {
    /// Short reason class, without location detail.
    pub fn class(&self) -> String {
        match self {
            Failstop::OutOfRange { .. } => "out-of-range".into(),
            other => other.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub word: Word,
    pub tag: MemTag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineState {
    pub memory: BTreeMap<Loc, Vec<Cell>>,
    pub regs: [(Word, ValTag); Reg::COUNT],
    pub pc: (Loc, i64),
    pub pc_tag: PcTag,
}

/// Result of one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult {
    Next(RuleId),
    Halted,
    Failstop(Failstop),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TargetOutcome {
    Halted,
    Failstop(Failstop),
    OutOfFuel,
}

impl MachineState {
    pub fn reg(&self, r: Reg) -> Word {
        self.regs[r.index()].0
    }

    pub fn reg_tag(&self, r: Reg) -> ValTag {
        self.regs[r.index()].1
    }

    pub fn cell(&self, loc: Loc, offset: i64) -> Option<&Cell> {
        usize::try_from(offset).ok().and_then(|i| self.memory.get(&loc)?.get(i))
    }

    fn cell_mut(&mut self, loc: Loc, offset: i64) -> Option<&mut Cell> {
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.memory.get_mut(&loc)?.get_mut(i))
    }

    fn operand(&self, r: Reg) -> Result<Word, Failstop> {
        match self.reg(r) {
            Word::Encoded(_) => Err(Failstop::EncodedOperand),
            w => Ok(w),
        }
    }

    fn pointer(&self, r: Reg) -> Result<(Loc, i64), Failstop> {
        match self.operand(r)? {
            Word::Ptr(l, o) => Ok((l, o)),
            _ => Err(Failstop::BadPointer),
        }
    }

    fn addressable(&self, (loc, offset): (Loc, i64)) -> Result<MemTag, Failstop> {
        self.cell(loc, offset)
            .map(|c| c.tag)
            .ok_or(Failstop::OutOfRange { loc, offset })
    }

    /// The instruction at the current pc, if it decodes.
    pub fn current_instr(&self) -> Result<Instr, Failstop> {
        let (loc, offset) = self.pc;
        let cell = self.cell(loc, offset).ok_or(Failstop::OutOfRange { loc, offset })?;
        decode(cell.word)
    }

    /// Executes one step under `policy`. A fail-stop leaves the state
    /// unchanged.
    pub fn step(&mut self, policy: &impl Policy) -> StepResult {
        match self.try_step(policy) {
            Ok(Some(rule)) => StepResult::Next(rule),
            Ok(None) => StepResult::Halted,
            Err(f) => StepResult::Failstop(f),
        }
    }

    fn try_step(&mut self, policy: &impl Policy) -> Result<Option<RuleId>, Failstop> {
        let (loc, offset) = self.pc;
        let ci = self.addressable(self.pc)?;
        let instr = self.current_instr()?;
        let fallthrough = (loc, offset + 1);

        let mut reg_write: Option<(Reg, Word)> = None;
        let mut mem_write: Option<((Loc, i64), Word)> = None;
        let mut cell: Option<MemTag> = None;
        let next: Option<(Loc, i64)> = match instr {
            Instr::Nop => Some(fallthrough),
            Instr::Halt => None,
            Instr::Const(imm, rd) => {
                reg_write = Some((rd, imm.into()));
                Some(fallthrough)
            }
            Instr::Mov(rs, rd) => {
                reg_write = Some((rd, self.operand(rs)?));
                Some(fallthrough)
            }
            Instr::Binop(op, r1, r2, rd) => {
                let v = binop(op, self.operand(r1)?, self.operand(r2)?)?;
                reg_write = Some((rd, v));
                Some(fallthrough)
            }
            Instr::Load(rp, rd) => {
                let at = self.pointer(rp)?;
                cell = Some(self.addressable(at)?);
                let w = self.cell(at.0, at.1).expect("checked above").word;
                reg_write = Some((rd, w));
                Some(fallthrough)
            }
            Instr::Store(rp, rs) => {
                let at = self.pointer(rp)?;
                let v = self.operand(rs)?;
                cell = Some(self.addressable(at)?);
                mem_write = Some((at, v));
                Some(fallthrough)
            }
            Instr::Jump(r) => Some(self.pointer(r)?),
            Instr::Jal(r) => {
                let target = self.pointer(r)?;
                reg_write = Some((Reg::A, Word::Ptr(loc, offset + 1)));
                Some(target)
            }
            Instr::Bnz(r, imm) => {
                let v = match self.operand(r)? {
                    Word::Int(v) => v,
                    _ => return Err(Failstop::BnzPointer),
                };
                let Imm::Int(k) = imm else {
                    return Err(Failstop::BnzPointer);
                };
                if v != 0 {
                    let to = offset
                        .checked_add(1)
                        .and_then(|o| o.checked_add(k))
                        .ok_or(Failstop::Overflow)?;
                    Some((loc, to))
                } else {
                    Some(fallthrough)
                }
            }
        };
        let ni = match next {
            Some(at) => Some(self.addressable(at)?),
            None => None,
        };

        let input = MonitorInput {
            instr,
            pc: self.pc_tag,
            ci,
            ni,
            regs: std::array::from_fn(|i| self.regs[i].1),
            cell,
        };
        let decision = policy.transfer(&input).map_err(Failstop::Policy)?;

        if let Some((at, w)) = mem_write {
            self.cell_mut(at.0, at.1).expect("checked above").word = w;
        }
        if let Some(t) = decision.cell {
            let at = match instr {
                Instr::Load(rp, _) | Instr::Store(rp, _) => self.pointer(rp)?,
                _ => unreachable!("only memory rules write a cell tag"),
            };
            self.cell_mut(at.0, at.1).expect("checked above").tag = t;
        }
        if let Some((r, w)) = reg_write {
            self.regs[r.index()].0 = w;
        }
        for (r, t) in &decision.reg_writes {
            self.regs[r.index()].1 = *t;
        }
        self.pc_tag = decision.pc;
        match next {
            Some(at) => {
                self.pc = at;
                Ok(Some(decision.rule))
            }
            None => Ok(None),
        }
    }

    /// Steps until halt, fail-stop or `fuel` steps; also returns the number
    /// of steps taken, including the final one.
    pub fn run(&mut self, policy: &impl Policy, fuel: u64) -> (TargetOutcome, u64) {
        self.run_observed(policy, fuel, |_, _| {})
    }

    /// Like [`MachineState::run`], calling `observe` after every step with
    /// the state and the step result.
    pub fn run_observed(
        &mut self,
        policy: &impl Policy,
        fuel: u64,
        mut observe: impl FnMut(&MachineState, &StepResult),
    ) -> (TargetOutcome, u64) {
        for taken in 0..fuel {
            let r = self.step(policy);
            observe(self, &r);
            match r {
                StepResult::Next(_) => {}
                StepResult::Halted => return (TargetOutcome::Halted, taken + 1),
                StepResult::Failstop(f) => return (TargetOutcome::Failstop(f), taken + 1),
            }
        }
        (TargetOutcome::OutOfFuel, fuel)
    }
}

fn binop(op: BinOp, a: Word, b: Word) -> Result<Word, Failstop> {
    use Word::{Int, Ptr};
    match (op, a, b) {
        (BinOp::Add, Int(x), Int(y)) => x.checked_add(y).map(Int).ok_or(Failstop::Overflow),
        (BinOp::Sub, Int(x), Int(y)) => x.checked_sub(y).map(Int).ok_or(Failstop::Overflow),
        (BinOp::Eq, Int(x), Int(y)) => Ok(Int((x == y) as i64)),
        (BinOp::Add, Ptr(l, o), Int(y)) => o.checked_add(y).map(|o| Ptr(l, o)).ok_or(Failstop::Overflow),
        (BinOp::Sub, Ptr(l, o), Int(y)) => o.checked_sub(y).map(|o| Ptr(l, o)).ok_or(Failstop::Overflow),
        (BinOp::Eq, Ptr(l1, o1), Ptr(l2, o2)) => Ok(Int((l1 == l2 && o1 == o2) as i64)),
        _ => Err(Failstop::PointerArith),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::MicroPolicy;

    const C: ClassName = ClassName(1);

    fn state(code: Vec<Instr>) -> MachineState {
        let mut memory = BTreeMap::new();
        let tag = MemTag::plain(C);
        memory.insert(
            Loc::MethL(C, MethodIndex(1)),
            code.into_iter()
                .map(|i| Cell {
                    word: Word::Encoded(i),
                    tag,
                })
                .collect(),
        );
        memory.insert(
            Loc::StackL(C),
            vec![
                Cell {
                    word: Word::Int(0),
                    tag
                };
                4
            ],
        );
        memory.insert(
            Loc::ObjL(ObjectName(5)),
            vec![Cell {
                word: Word::Int(0),
                tag: MemTag::plain(ClassName(2)),
            }],
        );
        MachineState {
            memory,
            regs: [(Word::Int(0), ValTag::PlainWord); Reg::COUNT],
            pc: (Loc::MethL(C, MethodIndex(1)), 0),
            pc_tag: PcTag(0),
        }
    }

    fn stack(o: i64) -> Imm {
        Imm::Ptr(Loc::StackL(C), o)
    }

    fn run_permit(code: Vec<Instr>) -> (MachineState, TargetOutcome) {
        let mut s = state(code);
        let (out, _) = s.run(&PermitAll, 100);
        (s, out)
    }

    fn failstop_leaves_state(code: Vec<Instr>, steps_before: usize, expected: Failstop) {
        let mut s = state(code);
        for _ in 0..steps_before {
            assert!(matches!(s.step(&PermitAll), StepResult::Next(_)));
        }
        let before = s.clone();
        assert_eq!(s.step(&PermitAll), StepResult::Failstop(expected));
        assert_eq!(s, before);
    }

    #[test]
    fn decode_only_accepts_encoded_words() {
        assert_eq!(decode(Word::Encoded(Instr::Nop)), Ok(Instr::Nop));
        assert_eq!(decode(Word::Int(7)), Err(Failstop::Decode));
        assert_eq!(decode(Word::Ptr(Loc::ObjL(ObjectName(0)), 0)), Err(Failstop::Decode));
    }

    #[test]
    fn fetching_a_data_word_failstops() {
        let mut s = state(vec![Instr::Nop]);
        s.pc = (Loc::StackL(C), 0);
        assert_eq!(s.step(&PermitAll), StepResult::Failstop(Failstop::Decode));
    }

    #[test]
    fn pointer_offset_arithmetic() {
        assert_eq!(
            binop(BinOp::Add, Word::Ptr(Loc::StackL(C), 2), Word::Int(1)),
            Ok(Word::Ptr(Loc::StackL(C), 3))
        );
        assert_eq!(
            binop(BinOp::Sub, Word::Ptr(Loc::StackL(C), 2), Word::Int(2)),
            Ok(Word::Ptr(Loc::StackL(C), 0))
        );
        let o = Word::Ptr(Loc::ObjL(ObjectName(1)), 0);
        assert_eq!(binop(BinOp::Eq, o, o), Ok(Word::Int(1)));
        assert_eq!(
            binop(BinOp::Eq, o, Word::Ptr(Loc::ObjL(ObjectName(2)), 0)),
            Ok(Word::Int(0))
        );
        assert_eq!(binop(BinOp::Add, Word::Int(1), o), Err(Failstop::PointerArith));
        assert_eq!(binop(BinOp::Add, o, o), Err(Failstop::PointerArith));
        assert_eq!(binop(BinOp::Sub, o, o), Err(Failstop::PointerArith));
        assert_eq!(binop(BinOp::Eq, o, Word::Int(0)), Err(Failstop::PointerArith));
        assert_eq!(binop(BinOp::Eq, Word::Int(0), o), Err(Failstop::PointerArith));
        assert_eq!(
            binop(BinOp::Add, Word::Int(i64::MAX), Word::Int(1)),
            Err(Failstop::Overflow)
        );
    }

    #[test]
    fn load_store_round_trip() {
        let (s, out) = run_permit(vec![
            Instr::Const(stack(2), Reg::Sp),
            Instr::Const(Imm::Int(42), Reg::Aux1),
            Instr::Store(Reg::Sp, Reg::Aux1),
            Instr::Load(Reg::Sp, Reg::Aux2),
            Instr::Halt,
        ]);
        assert_eq!(out, TargetOutcome::Halted);
        assert_eq!(s.reg(Reg::Aux2), Word::Int(42));
        assert_eq!(s.cell(Loc::StackL(C), 2).unwrap().word, Word::Int(42));
    }

    #[test]
    fn jal_saves_return_address_and_bnz_is_relative() {
        let m = Loc::MethL(C, MethodIndex(1));
        let (s, out) = run_permit(vec![
            Instr::Const(Imm::Ptr(m, 3), Reg::Aux3),
            Instr::Jal(Reg::Aux3),
            Instr::Halt,
            Instr::Const(Imm::Int(1), Reg::One),
            Instr::Bnz(Reg::One, Imm::Int(1)),
            Instr::Nop,
            Instr::Jump(Reg::A),
        ]);
        assert_eq!(out, TargetOutcome::Halted);
        assert_eq!(s.pc, (m, 2));
        assert_eq!(s.reg(Reg::A), Word::Ptr(m, 2));
    }

    #[test]
    fn bnz_falls_through_on_zero() {
        let mut s = state(vec![Instr::Bnz(Reg::Aux1, Imm::Int(5)), Instr::Halt]);
        s.step(&PermitAll);
        assert_eq!(s.pc.1, 1);
    }

    #[test]
    fn machine_failstops_preserve_state() {
        use Failstop::*;
        let obj = Imm::Ptr(Loc::ObjL(ObjectName(5)), 0);
        let meth = Imm::Ptr(Loc::MethL(C, MethodIndex(1)), 0);
        // jump, jal, load and store through an integer
        failstop_leaves_state(vec![Instr::Jump(Reg::Aux1)], 0, BadPointer);
        failstop_leaves_state(vec![Instr::Jal(Reg::Aux1)], 0, BadPointer);
        failstop_leaves_state(vec![Instr::Load(Reg::Aux1, Reg::Aux2)], 0, BadPointer);
        failstop_leaves_state(vec![Instr::Store(Reg::Aux1, Reg::Aux2)], 0, BadPointer);
        // pointer misuse in arithmetic
        failstop_leaves_state(
            vec![
                Instr::Const(obj, Reg::Aux1),
                Instr::Binop(BinOp::Add, Reg::Aux2, Reg::Aux1, Reg::Aux1),
            ],
            1,
            PointerArith,
        );
        failstop_leaves_state(
            vec![
                Instr::Const(obj, Reg::Aux1),
                Instr::Binop(BinOp::Eq, Reg::Aux1, Reg::Aux2, Reg::Aux1),
            ],
            1,
            PointerArith,
        );
        // bnz on a pointer register or pointer immediate
        failstop_leaves_state(
            vec![Instr::Const(obj, Reg::Aux1), Instr::Bnz(Reg::Aux1, Imm::Int(0))],
            1,
            BnzPointer,
        );
        failstop_leaves_state(vec![Instr::Bnz(Reg::Aux1, obj)], 0, BnzPointer);
        // encoded words as operands
        failstop_leaves_state(
            vec![
                Instr::Const(meth, Reg::Aux1),
                Instr::Load(Reg::Aux1, Reg::Aux2),
                Instr::Mov(Reg::Aux2, Reg::Aux3),
            ],
            2,
            EncodedOperand,
        );
        failstop_leaves_state(
            vec![
                Instr::Const(meth, Reg::Aux1),
                Instr::Load(Reg::Aux1, Reg::Aux1),
                Instr::Jump(Reg::Aux1),
            ],
            2,
            EncodedOperand,
        );
        // out-of-range access and falling off the region end
        failstop_leaves_state(
            vec![Instr::Const(stack(4), Reg::Sp), Instr::Load(Reg::Sp, Reg::Aux1)],
            1,
            OutOfRange {
                loc: Loc::StackL(C),
                offset: 4,
            },
        );
        failstop_leaves_state(
            vec![Instr::Nop],
            0,
            OutOfRange {
                loc: Loc::MethL(C, MethodIndex(1)),
                offset: 1,
            },
        );
        failstop_leaves_state(
            vec![Instr::Const(stack(-1), Reg::Sp), Instr::Store(Reg::Sp, Reg::Aux1)],
            1,
            OutOfRange {
                loc: Loc::StackL(C),
                offset: -1,
            },
        );
        // decode of a data word reached by a jump
        failstop_leaves_state(
            vec![Instr::Const(stack(0), Reg::Aux1), Instr::Jump(Reg::Aux1)],
            2,
            Decode,
        );
    }

    #[test]
    fn policy_failstop_preserves_state() {
        let mut s = state(vec![
            Instr::Const(Imm::Ptr(Loc::ObjL(ObjectName(5)), 0), Reg::Aux1),
            Instr::Load(Reg::Aux1, Reg::Aux2),
            Instr::Halt,
        ]);
        assert_eq!(s.step(&MicroPolicy), StepResult::Next(RuleId::Const));
        let before = s.clone();
        assert_eq!(
            s.step(&MicroPolicy),
            StepResult::Failstop(Failstop::Policy(Violation::LoadCompartment))
        );
        assert_eq!(s, before);
    }

    #[test]
    fn halt_reports_no_next_instruction() {
        let mut s = state(vec![Instr::Halt]);
        assert_eq!(s.step(&MicroPolicy), StepResult::Halted);
        assert_eq!(s.pc.1, 0);
    }

    #[test]
    fn display_forms() {
        let i = Instr::Const(Imm::Ptr(Loc::MethL(C, MethodIndex(2)), 0), Reg::Aux3);
        assert_eq!(i.to_string(), "Const methl 1 2+0 r_aux3");
        assert_eq!(
            Instr::Binop(BinOp::Sub, Reg::Sp, Reg::One, Reg::Sp).to_string(),
            "Sub r_sp r_one r_sp"
        );
        assert_eq!(Instr::Bnz(Reg::One, Imm::Int(4)).to_string(), "Bnz r_one 4");
        assert_eq!(Word::Ptr(Loc::Boot, 4).to_string(), "boot+4");
        assert!(Loc::MethL(ClassName(9), MethodIndex(9)) < Loc::ObjL(ObjectName(0)));
        assert!(Loc::StackL(ClassName(0)) < Loc::Boot);
    }
}
