//! Intermediate to target compilation: region layout and instruction
//! expansion.

use crate::interm::{ICompartment, IInstr, IProgram};
use crate::loader::TargetProgram;
use crate::names::{ClassName, MethodIndex};
use crate::target::{BinOp, Imm, Instr, Loc, Reg, Word};

/// Default number of stack cells above the stack pointer cell.
pub const DEFAULT_STACK_CAPACITY: usize = 1024;

/// Length of the prologue that saves the return address.
pub const PROLOGUE_LEN: usize = 5;

/// A memory region and its initial (untagged) contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegionPlan {
    pub loc: Loc,
    pub contents: Vec<Word>,
}

/// Number of target instructions one intermediate instruction expands to.
pub fn cost(i: &IInstr) -> usize {
    match i {
        IInstr::Drop | IInstr::Nop | IInstr::Halt | IInstr::Skip(_) => 1,
        IInstr::This | IInstr::Arg => 2,
        IInstr::Ref(_) => 3,
        IInstr::Sel(_) => 5,
        IInstr::Ret | IInstr::Skeq(_) => 6,
        IInstr::Upd(_) => 7,
        IInstr::Call(..) => 18,
    }
}

/// Length of the compiled form of a code sequence.
pub fn length(code: &[IInstr]) -> usize {
    code.iter().map(cost).sum()
}

fn skipped(rest: &[IInstr], n: u32) -> i64 {
    let end = (n as usize).min(rest.len());
    length(&rest[..end]) as i64
}

/// Expands the instruction `code[at]` of a method of class `c`. The rest of
/// the code is needed to size the jumps of `Skip` and `Skeq`.
pub fn compile_iinstr(c: ClassName, code: &[IInstr], at: usize) -> Vec<Instr> {
    use Instr::{Binop, Const, Jal, Jump, Load, Mov, Store};
    use Reg::*;
    let add = |a, b, d| Binop(BinOp::Add, a, b, d);
    let sub = |a, b, d| Binop(BinOp::Sub, a, b, d);
    let rest = &code[at + 1..];
    match code[at] {
        IInstr::Nop => vec![Instr::Nop],
        IInstr::Halt => vec![Instr::Halt],
        IInstr::This => vec![add(Sp, One, Sp), Store(Sp, Tgt)],
        IInstr::Arg => vec![add(Sp, One, Sp), Store(Sp, Arg)],
        IInstr::Ref(o) => vec![
            Const(Imm::Ptr(Loc::ObjL(o), 0), Aux1),
            add(Sp, One, Sp),
            Store(Sp, Aux1),
        ],
        IInstr::Drop => vec![sub(Sp, One, Sp)],
        IInstr::Sel(f) => vec![
            Const(Imm::Int(f.0 as i64 - 1), Aux2),
            Load(Sp, Aux1),
            add(Aux1, Aux2, Aux1),
            Load(Aux1, Aux1),
            Store(Sp, Aux1),
        ],
        IInstr::Upd(f) => vec![
            Const(Imm::Int(f.0 as i64 - 1), Aux2),
            Load(Sp, Aux3),
            sub(Sp, One, Sp),
            Load(Sp, Aux1),
            add(Aux1, Aux2, Aux1),
            Store(Aux1, Aux3),
            Store(Sp, Aux3),
        ],
        IInstr::Call(callee, m) => vec![
            Load(Sp, Aux2),
            sub(Sp, One, Sp),
            Load(Sp, Aux1),
            Store(Sp, Tgt),
            add(Sp, One, Sp),
            Store(Sp, Arg),
            Store(Spp, Sp),
            Mov(Aux1, Tgt),
            Mov(Aux2, Arg),
            Const(Imm::Ptr(Loc::MethL(callee, m), 0), Aux3),
            Jal(Aux3),
            Const(Imm::Int(1), One),
            Const(Imm::Ptr(Loc::StackL(c), 0), Spp),
            Load(Spp, Sp),
            Load(Sp, Arg),
            sub(Sp, One, Sp),
            Load(Sp, Tgt),
            Store(Sp, Ret),
        ],
        IInstr::Ret => vec![
            Load(Sp, Ret),
            sub(Sp, One, Sp),
            Load(Sp, A),
            sub(Sp, One, Sp),
            Store(Spp, Sp),
            Jump(A),
        ],
        IInstr::Skip(n) => vec![Instr::Bnz(One, Imm::Int(skipped(rest, n)))],
        IInstr::Skeq(n) => vec![
            Load(Sp, Aux2),
            sub(Sp, One, Sp),
            Load(Sp, Aux1),
            sub(Sp, One, Sp),
            Binop(BinOp::Eq, Aux1, Aux2, Aux1),
            Instr::Bnz(Aux1, Imm::Int(skipped(rest, n))),
        ],
    }
}

/// The prologue pushing the return address onto the compartment's stack.
pub fn prologue(c: ClassName) -> [Instr; PROLOGUE_LEN] {
    [
        Instr::Const(Imm::Int(1), Reg::One),
        Instr::Const(Imm::Ptr(Loc::StackL(c), 0), Reg::Spp),
        Instr::Load(Reg::Spp, Reg::Sp),
        Instr::Binop(BinOp::Add, Reg::Sp, Reg::One, Reg::Sp),
        Instr::Store(Reg::Sp, Reg::A),
    ]
}

pub fn compile_imethod(c: ClassName, m: MethodIndex, code: &[IInstr]) -> RegionPlan {
    let mut instrs: Vec<Instr> = prologue(c).to_vec();
    for at in 0..code.len() {
        instrs.extend(compile_iinstr(c, code, at));
    }
    RegionPlan {
        loc: Loc::MethL(c, m),
        contents: instrs.into_iter().map(Word::Encoded).collect(),
    }
}

fn obj_word(o: crate::names::ObjectName) -> Word {
    Word::Ptr(Loc::ObjL(o), 0)
}

/// All regions of one compartment: objects, stack, and methods.
pub fn compile_compartment(ic: &ICompartment, stack_capacity: usize) -> Vec<RegionPlan> {
    let mut out = Vec::new();
    for (slot, method) in ic.methods.iter().enumerate() {
        out.push(compile_imethod(ic.class, MethodIndex::from_slot(slot), &method.code));
    }
    for (o, fields) in &ic.objects {
        out.push(RegionPlan {
            loc: Loc::ObjL(*o),
            contents: fields.iter().copied().map(obj_word).collect(),
        });
    }
    let capacity = stack_capacity.max(ic.stack.len()).max(1);
    let stackl = Loc::StackL(ic.class);
    let mut stack = Vec::with_capacity(capacity + 1);
    stack.push(Word::Ptr(stackl, ic.stack.len() as i64));
    stack.extend(ic.stack.iter().copied().map(obj_word));
    stack.resize(capacity + 1, Word::Int(0));
    out.push(RegionPlan {
        loc: stackl,
        contents: stack,
    });
    out
}

/// Compiles every compartment. The interface is carried over unchanged.
pub fn compile_iprogram(ip: &IProgram, stack_capacity: usize) -> TargetProgram {
    let mut tp = TargetProgram {
        interface: ip.interface.clone(),
        ..TargetProgram::default()
    };
    for ic in ip.compartments.values() {
        for plan in compile_compartment(ic, stack_capacity) {
            tp.regions.insert(plan.loc, plan.contents);
        }
    }
    tp
}
