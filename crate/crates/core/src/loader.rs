//! Target-level linking, load-time checks, memory tagging and boot.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::interfaces::{link_interfaces, Interface, LinkError};
use crate::names::{ClassName, MethodIndex, ObjectName, MAIN_CLASS, MAIN_METHOD, MAIN_OBJECT};
use crate::policy::{Bless, Entry, MemTag, PcTag, ValTag};
use crate::target::{Cell, Imm, Instr, Loc, MachineState, Reg, Word};

/// A (possibly partial) target program: an interface and untagged regions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetProgram {
    pub interface: Interface,
    pub regions: BTreeMap<Loc, Vec<Word>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TargetLinkError {
    #[error(transparent)]
    Interface(#[from] LinkError),
    #[error("region {0} defined by more than one program")]
    DuplicateRegion(Loc),
}

/// Links target programs left to right.
pub fn link_target(ps: &[TargetProgram]) -> Result<TargetProgram, TargetLinkError> {
    let mut out = TargetProgram::default();
    for p in ps {
        out.interface = link_interfaces(&out.interface, &p.interface)?;
        for (loc, words) in &p.regions {
            if out.regions.insert(*loc, words.clone()).is_some() {
                return Err(TargetLinkError::DuplicateRegion(*loc));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error("check (1): program is incomplete, {0} import(s) left")]
    Incomplete(usize),
    #[error("check (2): no method region for exported method {0}.{1}")]
    MissingMethod(ClassName, MethodIndex),
    #[error("check (3): no stack region for exported class {0}")]
    MissingStack(ClassName),
    #[error("check (4): no object region for exported object {0}")]
    MissingObject(ObjectName),
    #[error("check (5): region {0} has no matching export")]
    UnexportedRegion(Loc),
    #[error("blessed constant at {loc}+{index} names unexported object {object}")]
    BlessedUnexported { loc: Loc, index: usize, object: ObjectName },
    #[error("the boot region is reserved for the loader")]
    BootRegion,
    #[error("class 0 with method 1 (main) is not defined")]
    MissingMain,
    #[error("object 0 of class 0 is not defined")]
    MissingMainObject,
    #[error("main method takes class {0}, but it is called with object 0 of class 0")]
    MainArgument(ClassName),
}

/// The load-time checks. Reports every failure.
pub fn check_program(p: &TargetProgram) -> Result<(), Vec<LoadError>> {
    let mut errs = Vec::new();
    let imports = &p.interface.imports;
    if !p.interface.is_complete() {
        errs.push(LoadError::Incomplete(imports.classes.len() + imports.objects.len()));
    }
    let exports = &p.interface.exports;
    for decl in exports.classes.values() {
        for slot in 0..decl.methods.len() {
            let m = MethodIndex::from_slot(slot);
            match p.regions.get(&Loc::MethL(decl.name, m)) {
                Some(words) if !words.is_empty() => {}
                _ => errs.push(LoadError::MissingMethod(decl.name, m)),
            }
        }
        if !p.regions.contains_key(&Loc::StackL(decl.name)) {
            errs.push(LoadError::MissingStack(decl.name));
        }
    }
    for o in exports.objects.keys() {
        if !p.regions.contains_key(&Loc::ObjL(*o)) {
            errs.push(LoadError::MissingObject(*o));
        }
    }
    for (loc, words) in &p.regions {
        let exported = match loc {
            Loc::MethL(c, m) => exports.class(*c).and_then(|d| d.method(*m)).is_some(),
            Loc::ObjL(o) => exports.object(*o).is_some(),
            Loc::StackL(c) => exports.class(*c).is_some(),
            Loc::Boot => {
                errs.push(LoadError::BootRegion);
                continue;
            }
        };
        if !exported {
            errs.push(LoadError::UnexportedRegion(*loc));
        }
        for (index, w) in words.iter().enumerate() {
            if let Some(object) = blessed_object(w) {
                if exports.object(object).is_none() {
                    errs.push(LoadError::BlessedUnexported {
                        loc: *loc,
                        index,
                        object,
                    });
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn blessed_object(w: &Word) -> Option<ObjectName> {
    match w {
        Word::Encoded(Instr::Const(Imm::Ptr(Loc::ObjL(o), 0), _)) => Some(*o),
        _ => None,
    }
}

fn region_compartment(interface: &Interface, loc: Loc) -> ClassName {
    match loc {
        Loc::MethL(c, _) | Loc::StackL(c) => c,
        Loc::ObjL(o) => interface.object_class(o).unwrap_or(MAIN_CLASS),
        Loc::Boot => MAIN_CLASS,
    }
}

fn tag_cell(interface: &Interface, loc: Loc, index: usize, w: &Word) -> MemTag {
    let mut tag = MemTag::plain(region_compartment(interface, loc));
    if let (Loc::MethL(c, m), 0) = (loc, index) {
        if let Some(sig) = interface.lookup_signature(c, m) {
            tag.entry = Entry::EntryPoint(sig.arg, sig.result);
        }
    }
    if let Some(class) = blessed_object(w).and_then(|o| interface.object_class(o)) {
        tag.bless = Bless::Blessed(class);
    }
    tag.value = match (w, loc) {
        (Word::Ptr(Loc::ObjL(o), 0), _) => match interface.object_class(*o) {
            Some(c) => ValTag::ObjPtr(c),
            None => ValTag::PlainWord,
        },
        (_, Loc::StackL(_)) if index > 0 => ValTag::Cleared,
        _ => ValTag::PlainWord,
    };
    tag
}

/// Initial tags for every cell of a checked program.
pub fn tag_memory(p: &TargetProgram) -> BTreeMap<Loc, Vec<Cell>> {
    p.regions
        .iter()
        .map(|(loc, words)| {
            let cells = words
                .iter()
                .enumerate()
                .map(|(i, w)| Cell {
                    word: *w,
                    tag: tag_cell(&p.interface, *loc, i, w),
                })
                .collect();
            (*loc, cells)
        })
        .collect()
}

/// The startup code: call main with object 0 as target and argument.
pub fn boot_code() -> Vec<Instr> {
    let obj0 = Imm::Ptr(Loc::ObjL(MAIN_OBJECT), 0);
    vec![
        Instr::Const(obj0, Reg::Tgt),
        Instr::Const(obj0, Reg::Arg),
        Instr::Const(Imm::Ptr(Loc::MethL(MAIN_CLASS, MAIN_METHOD), 0), Reg::Aux3),
        Instr::Jal(Reg::Aux3),
        Instr::Halt,
    ]
}

/// Checks, tags and boots a complete program.
pub fn boot_state(p: &TargetProgram) -> Result<MachineState, Vec<LoadError>> {
    check_program(p)?;
    let exports = &p.interface.exports;
    let main_sig = exports.class(MAIN_CLASS).and_then(|d| d.method(MAIN_METHOD));
    let Some(main_sig) = main_sig else {
        return Err(vec![LoadError::MissingMain]);
    };
    if p.interface.object_class(MAIN_OBJECT) != Some(MAIN_CLASS) {
        return Err(vec![LoadError::MissingMainObject]);
    }
    if main_sig.arg != MAIN_CLASS {
        return Err(vec![LoadError::MainArgument(main_sig.arg)]);
    }
    let mut memory = tag_memory(p);
    let boot = boot_code()
        .iter()
        .enumerate()
        .map(|(i, instr)| {
            let word = Word::Encoded(*instr);
            Cell {
                word,
                tag: tag_cell(&p.interface, Loc::Boot, i, &word),
            }
        })
        .collect();
    memory.insert(Loc::Boot, boot);
    Ok(MachineState {
        memory,
        regs: [(Word::Int(0), ValTag::Cleared); Reg::COUNT],
        pc: (Loc::Boot, 0),
        pc_tag: PcTag(0),
    })
}

/// The object a halted state returns: `r_ret` when main returned to the boot
/// code, the top of the current stack when a method halted.
pub fn halted_result(s: &MachineState) -> Option<ObjectName> {
    let w = if s.pc.0 == Loc::Boot {
        s.reg(Reg::Ret)
    } else {
        match s.reg(Reg::Sp) {
            Word::Ptr(l, o) => s.cell(l, o)?.word,
            _ => return None,
        }
    };
    match w {
        Word::Ptr(Loc::ObjL(o), 0) => Some(o),
        _ => None,
    }
}

/// One line per cell: `region <loc> / <index>: <word> @ <tag>`.
pub fn dump_image(memory: &BTreeMap<Loc, Vec<Cell>>) -> String {
    let mut out = String::new();
    for (loc, cells) in memory {
        for (i, c) in cells.iter().enumerate() {
            let _ = writeln!(out, "region {loc} / {i}: {} @ {}", c.word, c.tag);
        }
    }
    out
}
