//! Source to intermediate compilation.

use std::collections::BTreeMap;

use crate::interm::{ICompartment, IInstr, IMethod, IProgram};
use crate::names::{ClassName, MethodIndex};
use crate::source::{infer_type, typecheck, Expr, SourceProgram, Ty, TypeError};

/// Compiles an expression occurring in method `m` of class `c`.
pub fn compile_expr(p: &SourceProgram, c: ClassName, m: MethodIndex, e: &Expr) -> Result<Vec<IInstr>, TypeError> {
    let mut out = Vec::new();
    emit(p, c, m, e, &mut out)?;
    Ok(out)
}

fn emit(p: &SourceProgram, c: ClassName, m: MethodIndex, e: &Expr, out: &mut Vec<IInstr>) -> Result<(), TypeError> {
    match e {
        Expr::This => out.push(IInstr::This),
        Expr::Arg => out.push(IInstr::Arg),
        Expr::Obj(o) => out.push(IInstr::Ref(*o)),
        Expr::Select(r, f) => {
            emit(p, c, m, r, out)?;
            out.push(IInstr::Sel(*f));
        }
        Expr::Update(r, f, v) => {
            emit(p, c, m, r, out)?;
            emit(p, c, m, v, out)?;
            out.push(IInstr::Upd(*f));
        }
        Expr::Call(r, callee, a) => {
            let target = match infer_type(p, c, m, r)? {
                Ty::Class(rc) => rc,
                Ty::Bottom => {
                    return Err(TypeError::UnknownReceiver {
                        class: c,
                        method: m,
                        context: "call",
                    })
                }
            };
            emit(p, c, m, r, out)?;
            emit(p, c, m, a, out)?;
            out.push(IInstr::Call(target, *callee));
        }
        Expr::IfEq(e1, e2, e3, e4) => {
            let then_code = compile_expr(p, c, m, e3)?;
            let else_code = compile_expr(p, c, m, e4)?;
            emit(p, c, m, e1, out)?;
            emit(p, c, m, e2, out)?;
            out.push(IInstr::Skeq(else_code.len() as u32 + 1));
            out.extend(else_code);
            out.push(IInstr::Skip(then_code.len() as u32));
            out.extend(then_code);
            out.push(IInstr::Nop);
        }
        Expr::Seq(a, b) => {
            emit(p, c, m, a, out)?;
            out.push(IInstr::Drop);
            emit(p, c, m, b, out)?;
        }
        Expr::Exit(a) => {
            emit(p, c, m, a, out)?;
            out.push(IInstr::Halt);
        }
    }
    Ok(())
}

/// The body followed by `Ret`.
pub fn compile_method(p: &SourceProgram, c: ClassName, m: MethodIndex) -> Result<Vec<IInstr>, TypeError> {
    let md = p
        .classes
        .get(&c)
        .and_then(|cd| cd.method(m))
        .ok_or(TypeError::NoSuchMethod { class: c, method: m })?;
    let mut code = compile_expr(p, c, m, &md.body)?;
    code.push(IInstr::Ret);
    Ok(code)
}

/// Compiles every class of a (possibly partial) program into its
/// compartment. Objects are distributed to the compartment of their class;
/// stacks start empty.
pub fn compile_program(p: &SourceProgram) -> Result<IProgram, Vec<TypeError>> {
    typecheck(p)?;
    let mut compartments = BTreeMap::new();
    for (name, cd) in &p.classes {
        let mut methods = Vec::with_capacity(cd.methods.len());
        for (slot, md) in cd.methods.iter().enumerate() {
            let code = compile_method(p, *name, MethodIndex::from_slot(slot)).map_err(|e| vec![e])?;
            methods.push(IMethod { sig: md.sig, code });
        }
        let objects = p
            .objects
            .values()
            .filter(|od| od.class == *name)
            .map(|od| (od.name, od.fields.clone()))
            .collect();
        compartments.insert(
            *name,
            ICompartment {
                class: *name,
                field_types: cd.field_types.clone(),
                methods,
                objects,
                stack: Vec::new(),
            },
        );
    }
    Ok(IProgram {
        interface: p.interface.clone(),
        compartments,
    })
}
