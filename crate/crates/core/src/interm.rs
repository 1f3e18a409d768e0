//! The object-oriented stack machine.
//!
//! Each class is a compartment holding its methods, its objects and a local
//! stack. Instructions other than `Call` and `Ret` only touch the current
//! compartment.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::interfaces::{Interface, MethodSig};
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName, MAIN_CLASS, MAIN_METHOD, MAIN_OBJECT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IInstr {
    Nop,
    This,
    Arg,
    Ref(ObjectName),
    Sel(FieldIndex),
    Upd(FieldIndex),
    Call(ClassName, MethodIndex),
    Ret,
    Skip(u32),
    Skeq(u32),
    Drop,
    Halt,
}

impl fmt::Display for IInstr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IInstr::Nop => write!(f, "Nop"),
            IInstr::This => write!(f, "This"),
            IInstr::Arg => write!(f, "Arg"),
            IInstr::Ref(o) => write!(f, "Ref {o}"),
            IInstr::Sel(fi) => write!(f, "Sel {fi}"),
            IInstr::Upd(fi) => write!(f, "Upd {fi}"),
            IInstr::Call(c, m) => write!(f, "Call {c} {m}"),
            IInstr::Ret => write!(f, "Ret"),
            IInstr::Skip(n) => write!(f, "Skip {n}"),
            IInstr::Skeq(n) => write!(f, "Skeq {n}"),
            IInstr::Drop => write!(f, "Drop"),
            IInstr::Halt => write!(f, "Halt"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IMethod {
    pub sig: MethodSig,
    pub code: Vec<IInstr>,
}

/// A class definition together with its objects and its local stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ICompartment {
    pub class: ClassName,
    pub field_types: Vec<ClassName>,
    pub methods: Vec<IMethod>,
    pub objects: BTreeMap<ObjectName, Vec<ObjectName>>,
    /// Top of stack last.
    pub stack: Vec<ObjectName>,
}

impl ICompartment {
    pub fn method(&self, m: MethodIndex) -> Option<&IMethod> {
        m.slot().and_then(|i| self.methods.get(i))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IProgram {
    pub interface: Interface,
    pub compartments: BTreeMap<ClassName, ICompartment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ILinkError {
    #[error(transparent)]
    Interface(#[from] crate::interfaces::LinkError),
    #[error("compartment {0} defined by more than one program")]
    DuplicateCompartment(ClassName),
}

/// Links intermediate programs left to right.
pub fn link_interm(ps: &[IProgram]) -> Result<IProgram, ILinkError> {
    let mut out = IProgram::default();
    for p in ps {
        out.interface = crate::interfaces::link_interfaces(&out.interface, &p.interface)?;
        for (c, ic) in &p.compartments {
            if out.compartments.insert(*c, ic.clone()).is_some() {
                return Err(ILinkError::DuplicateCompartment(*c));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IFrame {
    pub class: ClassName,
    pub method: MethodIndex,
    pub pc: usize,
    pub this: ObjectName,
    pub arg: ObjectName,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IState {
    pub compartments: BTreeMap<ClassName, ICompartment>,
    /// Innermost frame last.
    pub frames: Vec<IFrame>,
    object_class: BTreeMap<ObjectName, ClassName>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ILoadError {
    #[error("program is incomplete")]
    Incomplete,
    #[error("class 0 is not defined")]
    MissingMainClass,
    #[error("class 0 has no method 1 (main)")]
    MissingMainMethod,
    #[error("object 0 is not an object of class 0")]
    MissingMainObject,
    #[error("main method takes class {0}, but it is called with object 0 of class 0")]
    MainArgument(ClassName),
    #[error("object {0} is defined in two compartments")]
    DuplicateObject(ObjectName),
}

/// Why the intermediate machine stopped.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum IFailstop {
    #[error("execution fell off the end of {class}.{method}")]
    FellOffEnd { class: ClassName, method: MethodIndex },
    #[error("pop from the empty stack of compartment {0}")]
    EmptyStack(ClassName),
    #[error("object {object} does not belong to compartment {class}")]
    ForeignObject { class: ClassName, object: ObjectName },
    #[error("object {object} has no field {field}")]
    NoSuchField { object: ObjectName, field: FieldIndex },
    #[error("call expects an object of class {expected}, found {object} of class {found:?}")]
    CallClass {
        expected: ClassName,
        object: ObjectName,
        found: Option<ClassName>,
    },
    #[error("class {class} has no method {method}")]
    NoSuchMethod { class: ClassName, method: MethodIndex },
    #[error("skip past the end of the method code")]
    SkipOutOfRange,
    #[error("unknown object {0}")]
    UnknownObject(ObjectName),
    #[error("no active frame")]
    NoFrame,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IStep {
    Next,
    Terminated(ObjectName),
    Failstop(IFailstop),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IOutcome {
    Terminated(ObjectName),
    Failstop(IFailstop),
    OutOfFuel,
}

/// Prepares a complete program for execution: one frame running the main
/// method with object 0 as both current object and argument.
pub fn iload(program: &IProgram) -> Result<IState, ILoadError> {
    if !program.interface.is_complete() {
        return Err(ILoadError::Incomplete);
    }
    let main = program
        .compartments
        .get(&MAIN_CLASS)
        .ok_or(ILoadError::MissingMainClass)?;
    let main_method = main.method(MAIN_METHOD).ok_or(ILoadError::MissingMainMethod)?;
    if !main.objects.contains_key(&MAIN_OBJECT) {
        return Err(ILoadError::MissingMainObject);
    }
    if main_method.sig.arg != MAIN_CLASS {
        return Err(ILoadError::MainArgument(main_method.sig.arg));
    }
    let mut object_class = BTreeMap::new();
    for comp in program.compartments.values() {
        for o in comp.objects.keys() {
            if object_class.insert(*o, comp.class).is_some() {
                return Err(ILoadError::DuplicateObject(*o));
            }
        }
    }
    Ok(IState {
        compartments: program.compartments.clone(),
        frames: vec![IFrame {
            class: MAIN_CLASS,
            method: MAIN_METHOD,
            pc: 0,
            this: MAIN_OBJECT,
            arg: MAIN_OBJECT,
        }],
        object_class,
    })
}

impl IState {
    pub fn class_of(&self, o: ObjectName) -> Option<ClassName> {
        self.object_class.get(&o).copied()
    }

    fn stack(&mut self, c: ClassName) -> &mut Vec<ObjectName> {
        &mut self
            .compartments
            .get_mut(&c)
            .expect("frames only name loaded compartments")
            .stack
    }

    fn pop(&mut self, c: ClassName) -> Result<ObjectName, IFailstop> {
        self.stack(c).pop().ok_or(IFailstop::EmptyStack(c))
    }

    fn local_field(&mut self, c: ClassName, o: ObjectName, f: FieldIndex) -> Result<&mut ObjectName, IFailstop> {
        let comp = self.compartments.get_mut(&c).expect("loaded compartment");
        let fields = comp
            .objects
            .get_mut(&o)
            .ok_or(IFailstop::ForeignObject { class: c, object: o })?;
        f.slot()
            .and_then(|i| fields.get_mut(i))
            .ok_or(IFailstop::NoSuchField { object: o, field: f })
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> IStep {
        match self.try_step() {
            Ok(None) => IStep::Next,
            Ok(Some(v)) => IStep::Terminated(v),
            Err(e) => IStep::Failstop(e),
        }
    }

    fn try_step(&mut self) -> Result<Option<ObjectName>, IFailstop> {
        let frame = *self.frames.last().ok_or(IFailstop::NoFrame)?;
        let comp = &self.compartments[&frame.class];
        let code = &comp
            .method(frame.method)
            .ok_or(IFailstop::NoSuchMethod {
                class: frame.class,
                method: frame.method,
            })?
            .code;
        let code_len = code.len();
        let instr = *code.get(frame.pc).ok_or(IFailstop::FellOffEnd {
            class: frame.class,
            method: frame.method,
        })?;
        let c = frame.class;
        let mut next_pc = frame.pc + 1;
        match instr {
            IInstr::Nop => {}
            IInstr::This => self.stack(c).push(frame.this),
            IInstr::Arg => self.stack(c).push(frame.arg),
            IInstr::Ref(o) => {
                if self.class_of(o).is_none() {
                    return Err(IFailstop::UnknownObject(o));
                }
                self.stack(c).push(o)
            }
            IInstr::Sel(f) => {
                let o = self.pop(c)?;
                let v = *self.local_field(c, o, f)?;
                self.stack(c).push(v);
            }
            IInstr::Upd(f) => {
                let v = self.pop(c)?;
                let o = self.pop(c)?;
                *self.local_field(c, o, f)? = v;
                self.stack(c).push(v);
            }
            IInstr::Call(callee, m) => {
                let arg = self.pop(c)?;
                let target = self.pop(c)?;
                let found = self.class_of(target);
                if found != Some(callee) {
                    return Err(IFailstop::CallClass {
                        expected: callee,
                        object: target,
                        found,
                    });
                }
                if self.compartments[&callee].method(m).is_none() {
                    return Err(IFailstop::NoSuchMethod {
                        class: callee,
                        method: m,
                    });
                }
                self.frames.last_mut().unwrap().pc = next_pc;
                self.frames.push(IFrame {
                    class: callee,
                    method: m,
                    pc: 0,
                    this: target,
                    arg,
                });
                return Ok(None);
            }
            IInstr::Ret => {
                let v = self.pop(c)?;
                self.frames.pop();
                return match self.frames.last() {
                    None => Ok(Some(v)),
                    Some(caller) => {
                        let cc = caller.class;
                        self.stack(cc).push(v);
                        Ok(None)
                    }
                };
            }
            IInstr::Skip(n) => next_pc += n as usize,
            IInstr::Skeq(n) => {
                let a = self.pop(c)?;
                let b = self.pop(c)?;
                if a == b {
                    next_pc += n as usize;
                }
            }
            IInstr::Drop => {
                self.pop(c)?;
            }
            IInstr::Halt => {
                let top = *self.stack(c).last().ok_or(IFailstop::EmptyStack(c))?;
                return Ok(Some(top));
            }
        }
        if next_pc > code_len {
            return Err(IFailstop::SkipOutOfRange);
        }
        self.frames.last_mut().unwrap().pc = next_pc;
        Ok(None)
    }

    /// Runs for at most `fuel` steps; also returns the number of steps taken.
    pub fn run(&mut self, fuel: u64) -> (IOutcome, u64) {
        for taken in 0..fuel {
            match self.step() {
                IStep::Next => {}
                IStep::Terminated(v) => return (IOutcome::Terminated(v), taken + 1),
                IStep::Failstop(e) => return (IOutcome::Failstop(e), taken + 1),
            }
        }
        (IOutcome::OutOfFuel, fuel)
    }
}

/// Loads and runs a complete intermediate program.
pub fn irun(program: &IProgram, fuel: u64) -> Result<IOutcome, ILoadError> {
    Ok(iload(program)?.run(fuel).0)
}
