//! Continuation-based small-step semantics.
//!
//! A configuration is the object table, a call stack of saved environments,
//! the current object and argument, a continuation (a stack of frames with
//! one hole each) and the focus, which is either an expression still to
//! evaluate or a value to plug into the topmost frame.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{ClassDef, Expr, ObjectDef, SourceProgram};
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName, MAIN_CLASS, MAIN_METHOD, MAIN_OBJECT};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ContFrame {
    /// `[].f`
    SelectHole(FieldIndex),
    /// `[].f := e`
    UpdateHoleLeft(FieldIndex, Expr),
    /// `o.f := []`
    UpdateHoleRight(ObjectName, FieldIndex),
    /// `[].m(e)`
    CallHoleRecv(MethodIndex, Expr),
    /// `o.m([])`
    CallHoleArg(ObjectName, MethodIndex),
    /// `[] == e2 ? e3 : e4`
    IfEqHoleLeft(Expr, Expr, Expr),
    /// `o == [] ? e3 : e4`
    IfEqHoleRight(ObjectName, Expr, Expr),
    /// `[]; e`
    SeqHole(Expr),
    /// `exit []`
    ExitHole,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Focus {
    Expr(Expr),
    Value(ObjectName),
}

/// Caller environment saved on the call stack.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SavedFrame {
    pub this: ObjectName,
    pub arg: ObjectName,
    pub cont: Vec<ContFrame>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub objects: BTreeMap<ObjectName, ObjectDef>,
    pub call_stack: Vec<SavedFrame>,
    pub this: ObjectName,
    pub arg: ObjectName,
    /// Innermost frame last.
    pub cont: Vec<ContFrame>,
    pub focus: Focus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next,
    Terminated(ObjectName),
    Stuck(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SourceOutcome {
    Terminated(ObjectName),
    OutOfFuel,
    Stuck(&'static str),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InitError {
    #[error("program is incomplete: {0} unresolved import declaration(s)")]
    Incomplete(usize),
    #[error("class 0 is not defined")]
    MissingMainClass,
    #[error("class 0 has no method 1 (main)")]
    MissingMainMethod,
    #[error("object 0 of class 0 is not defined")]
    MissingMainObject,
    #[error("main method takes class {0}, but it is called with object 0 of class 0")]
    MainArgument(ClassName),
}

pub(crate) fn check_main(p: &SourceProgram) -> Result<&Expr, InitError> {
    let imports = &p.interface.imports;
    if !p.interface.is_complete() {
        return Err(InitError::Incomplete(imports.classes.len() + imports.objects.len()));
    }
    let main = p.classes.get(&MAIN_CLASS).ok_or(InitError::MissingMainClass)?;
    let md = main.method(MAIN_METHOD).ok_or(InitError::MissingMainMethod)?;
    match p.objects.get(&MAIN_OBJECT) {
        Some(od) if od.class == MAIN_CLASS => {}
        _ => return Err(InitError::MissingMainObject),
    }
    if md.sig.arg != MAIN_CLASS {
        return Err(InitError::MainArgument(md.sig.arg));
    }
    Ok(&md.body)
}

/// Initial configuration: the main method's body with object 0 as both
/// current object and argument.
pub fn init_config(p: &SourceProgram) -> Result<Config, InitError> {
    let body = check_main(p)?;
    Ok(Config {
        objects: p.objects.clone(),
        call_stack: Vec::new(),
        this: MAIN_OBJECT,
        arg: MAIN_OBJECT,
        cont: Vec::new(),
        focus: Focus::Expr(body.clone()),
    })
}

/// Performs one reduction step in place.
pub fn step(cfg: &mut Config, classes: &BTreeMap<ClassName, ClassDef>) -> Step {
    let focus = std::mem::replace(&mut cfg.focus, Focus::Value(cfg.this));
    let next = match focus {
        Focus::Expr(e) => decompose(cfg, e),
        Focus::Value(v) => return plug(cfg, classes, v),
    };
    cfg.focus = next;
    Step::Next
}

fn decompose(cfg: &mut Config, e: Expr) -> Focus {
    match e {
        Expr::This => Focus::Value(cfg.this),
        Expr::Arg => Focus::Value(cfg.arg),
        Expr::Obj(o) => Focus::Value(o),
        Expr::Select(recv, f) => {
            cfg.cont.push(ContFrame::SelectHole(f));
            Focus::Expr(*recv)
        }
        Expr::Update(recv, f, value) => {
            cfg.cont.push(ContFrame::UpdateHoleLeft(f, *value));
            Focus::Expr(*recv)
        }
        Expr::Call(recv, m, arg) => {
            cfg.cont.push(ContFrame::CallHoleRecv(m, *arg));
            Focus::Expr(*recv)
        }
        Expr::IfEq(e1, e2, e3, e4) => {
            cfg.cont.push(ContFrame::IfEqHoleLeft(*e2, *e3, *e4));
            Focus::Expr(*e1)
        }
        Expr::Seq(first, second) => {
            cfg.cont.push(ContFrame::SeqHole(*second));
            Focus::Expr(*first)
        }
        Expr::Exit(value) => {
            cfg.cont.push(ContFrame::ExitHole);
            Focus::Expr(*value)
        }
    }
}

fn plug(cfg: &mut Config, classes: &BTreeMap<ClassName, ClassDef>, v: ObjectName) -> Step {
    let Some(frame) = cfg.cont.pop() else {
        // Method body finished: return to the caller, or terminate.
        return match cfg.call_stack.pop() {
            None => Step::Terminated(v),
            Some(saved) => {
                cfg.this = saved.this;
                cfg.arg = saved.arg;
                cfg.cont = saved.cont;
                cfg.focus = Focus::Value(v);
                Step::Next
            }
        };
    };
    cfg.focus = match frame {
        ContFrame::SelectHole(f) => {
            let Some(value) = field_slot(cfg, v, f).map(|slot| *slot) else {
                return Step::Stuck("field select out of range");
            };
            Focus::Value(value)
        }
        ContFrame::UpdateHoleLeft(f, value) => {
            cfg.cont.push(ContFrame::UpdateHoleRight(v, f));
            Focus::Expr(value)
        }
        ContFrame::UpdateHoleRight(o, f) => {
            let Some(slot) = field_slot(cfg, o, f) else {
                return Step::Stuck("field update out of range");
            };
            *slot = v;
            Focus::Value(v)
        }
        ContFrame::CallHoleRecv(m, arg) => {
            cfg.cont.push(ContFrame::CallHoleArg(v, m));
            Focus::Expr(arg)
        }
        ContFrame::CallHoleArg(target, m) => {
            let body = cfg
                .objects
                .get(&target)
                .and_then(|od| classes.get(&od.class))
                .and_then(|cd| cd.method(m))
                .map(|md| md.body.clone());
            let Some(body) = body else {
                return Step::Stuck("call of an undefined method");
            };
            let saved = SavedFrame {
                this: cfg.this,
                arg: cfg.arg,
                cont: std::mem::take(&mut cfg.cont),
            };
            cfg.call_stack.push(saved);
            cfg.this = target;
            cfg.arg = v;
            Focus::Expr(body)
        }
        ContFrame::IfEqHoleLeft(e2, e3, e4) => {
            cfg.cont.push(ContFrame::IfEqHoleRight(v, e3, e4));
            Focus::Expr(e2)
        }
        ContFrame::IfEqHoleRight(left, e3, e4) => Focus::Expr(if left == v { e3 } else { e4 }),
        ContFrame::SeqHole(second) => Focus::Expr(second),
        ContFrame::ExitHole => return Step::Terminated(v),
    };
    Step::Next
}

fn field_slot(cfg: &mut Config, o: ObjectName, f: FieldIndex) -> Option<&mut ObjectName> {
    let slot = f.slot()?;
    cfg.objects.get_mut(&o)?.fields.get_mut(slot)
}

/// Runs a complete program for at most `fuel` steps.
pub fn run(p: &SourceProgram, fuel: u64) -> Result<SourceOutcome, InitError> {
    let mut cfg = init_config(p)?;
    Ok(run_config(&mut cfg, &p.classes, fuel).0)
}

/// Runs from a configuration; also returns the number of steps taken.
pub fn run_config(cfg: &mut Config, classes: &BTreeMap<ClassName, ClassDef>, fuel: u64) -> (SourceOutcome, u64) {
    for taken in 0..fuel {
        match step(cfg, classes) {
            Step::Next => {}
            Step::Terminated(o) => return (SourceOutcome::Terminated(o), taken + 1),
            Step::Stuck(why) => return (SourceOutcome::Stuck(why), taken + 1),
        }
    }
    (SourceOutcome::OutOfFuel, fuel)
}
