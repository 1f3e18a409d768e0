use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::{Expr, SourceProgram};
use crate::interfaces::MethodSig;
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName, MAIN_CLASS, MAIN_METHOD};

/// A static type. `Bottom` is the type of `exit e`, which never yields a
/// value to its context and therefore fits any class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Class(ClassName),
    Bottom,
}

impl Ty {
    fn fits(self, expected: ClassName) -> bool {
        match self {
            Ty::Bottom => true,
            Ty::Class(c) => c == expected,
        }
    }

    /// The more precise of two types that must agree, if they do.
    fn meet(self, other: Ty) -> Option<Ty> {
        match (self, other) {
            (Ty::Bottom, t) | (t, Ty::Bottom) => Some(t),
            (Ty::Class(a), Ty::Class(b)) if a == b => Some(Ty::Class(a)),
            _ => None,
        }
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Class(c) => write!(f, "{c}"),
            Ty::Bottom => write!(f, "_|_"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("in {class}.{method}: unknown object {object}")]
    UnknownObject {
        class: ClassName,
        method: MethodIndex,
        object: ObjectName,
    },
    #[error("in {class}.{method}: class {receiver} has no method {called}")]
    UnknownMethod {
        class: ClassName,
        method: MethodIndex,
        receiver: ClassName,
        called: MethodIndex,
    },
    #[error("in {class}.{method}: class {class} has no field {field}")]
    UnknownField {
        class: ClassName,
        method: MethodIndex,
        field: FieldIndex,
    },
    #[error("in {class}.{method}: field access on an object of class {receiver}; fields are private to {class}")]
    ForeignField {
        class: ClassName,
        method: MethodIndex,
        receiver: ClassName,
    },
    #[error("in {class}.{method}: expected {expected}, found {found} ({context})")]
    Mismatch {
        class: ClassName,
        method: MethodIndex,
        expected: ClassName,
        found: Ty,
        context: &'static str,
    },
    #[error("in {class}.{method}: compared expressions have types {left} and {right}")]
    CompareMismatch {
        class: ClassName,
        method: MethodIndex,
        left: Ty,
        right: Ty,
    },
    #[error("in {class}.{method}: branches have types {then_ty} and {else_ty}")]
    BranchMismatch {
        class: ClassName,
        method: MethodIndex,
        then_ty: Ty,
        else_ty: Ty,
    },
    #[error("in {class}.{method}: receiver type cannot be determined ({context})")]
    UnknownReceiver {
        class: ClassName,
        method: MethodIndex,
        context: &'static str,
    },
    #[error("in {class}.{method}: `exit` used but the main method signature is unknown")]
    ExitWithoutMain { class: ClassName, method: MethodIndex },
    #[error("class {class} has no method {method}")]
    NoSuchMethod { class: ClassName, method: MethodIndex },
    #[error("object {object}: field {field} holds {value} of class {found:?}, expected {expected}")]
    ObjectField {
        object: ObjectName,
        field: FieldIndex,
        value: ObjectName,
        expected: ClassName,
        found: Option<ClassName>,
    },
}

/// Body type of every method of a checked program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypingTable {
    pub bodies: BTreeMap<(ClassName, MethodIndex), Ty>,
}

struct Ctx<'p> {
    program: &'p SourceProgram,
    class: ClassName,
    method: MethodIndex,
    sig: MethodSig,
    main_result: Option<ClassName>,
}

impl<'p> Ctx<'p> {
    fn new(program: &'p SourceProgram, class: ClassName, method: MethodIndex) -> Result<Self, TypeError> {
        let sig = program
            .signature(class, method)
            .ok_or(TypeError::NoSuchMethod { class, method })?;
        Ok(Ctx {
            program,
            class,
            method,
            sig,
            main_result: program.signature(MAIN_CLASS, MAIN_METHOD).map(|s| s.result),
        })
    }

    fn infer(&self, e: &Expr) -> Result<Ty, TypeError> {
        let (class, method) = (self.class, self.method);
        match e {
            Expr::This => Ok(Ty::Class(class)),
            Expr::Arg => Ok(Ty::Class(self.sig.arg)),
            Expr::Obj(o) => self
                .program
                .object_class(*o)
                .map(Ty::Class)
                .ok_or(TypeError::UnknownObject {
                    class,
                    method,
                    object: *o,
                }),
            Expr::Select(recv, f) => self.field(recv, *f).map(Ty::Class),
            Expr::Update(recv, f, value) => {
                let ft = self.field(recv, *f)?;
                self.check(value, ft, "assigned value")?;
                Ok(Ty::Class(ft))
            }
            Expr::Call(recv, m, arg) => {
                let rc = self.receiver(recv, "method call")?;
                let sig = self.program.signature(rc, *m).ok_or(TypeError::UnknownMethod {
                    class,
                    method,
                    receiver: rc,
                    called: *m,
                })?;
                self.check(arg, sig.arg, "call argument")?;
                Ok(Ty::Class(sig.result))
            }
            Expr::IfEq(e1, e2, e3, e4) => {
                let (l, r) = (self.infer(e1)?, self.infer(e2)?);
                if l.meet(r).is_none() {
                    return Err(TypeError::CompareMismatch {
                        class,
                        method,
                        left: l,
                        right: r,
                    });
                }
                let (t, f) = (self.infer(e3)?, self.infer(e4)?);
                t.meet(f).ok_or(TypeError::BranchMismatch {
                    class,
                    method,
                    then_ty: t,
                    else_ty: f,
                })
            }
            Expr::Seq(first, second) => {
                self.infer(first)?;
                self.infer(second)
            }
            Expr::Exit(value) => {
                let main = self.main_result.ok_or(TypeError::ExitWithoutMain { class, method })?;
                self.check(value, main, "exit value")?;
                Ok(Ty::Bottom)
            }
        }
    }

    fn check(&self, e: &Expr, expected: ClassName, context: &'static str) -> Result<(), TypeError> {
        let found = self.infer(e)?;
        if found.fits(expected) {
            Ok(())
        } else {
            Err(TypeError::Mismatch {
                class: self.class,
                method: self.method,
                expected,
                found,
                context,
            })
        }
    }

    fn receiver(&self, recv: &Expr, context: &'static str) -> Result<ClassName, TypeError> {
        match self.infer(recv)? {
            Ty::Class(c) => Ok(c),
            Ty::Bottom => Err(TypeError::UnknownReceiver {
                class: self.class,
                method: self.method,
                context,
            }),
        }
    }

    /// Type of field `f` accessed through `recv`, which must be an object
    /// of the enclosing class.
    fn field(&self, recv: &Expr, f: FieldIndex) -> Result<ClassName, TypeError> {
        let rc = self.receiver(recv, "field access")?;
        if rc != self.class {
            return Err(TypeError::ForeignField {
                class: self.class,
                method: self.method,
                receiver: rc,
            });
        }
        self.program
            .classes
            .get(&self.class)
            .and_then(|cd| cd.field_type(f))
            .ok_or(TypeError::UnknownField {
                class: self.class,
                method: self.method,
                field: f,
            })
    }
}

/// Type of `e` inside method `m` of class `c`.
pub fn infer_type(p: &SourceProgram, c: ClassName, m: MethodIndex, e: &Expr) -> Result<Ty, TypeError> {
    Ctx::new(p, c, m)?.infer(e)
}

/// Checks every method body against its signature and every object's field
/// values against the field types of its class.
pub fn typecheck(p: &SourceProgram) -> Result<TypingTable, Vec<TypeError>> {
    let mut errors = Vec::new();
    let mut table = TypingTable::default();
    for cd in p.classes.values() {
        for (slot, md) in cd.methods.iter().enumerate() {
            let m = MethodIndex::from_slot(slot);
            let result = Ctx::new(p, cd.name, m).and_then(|ctx| {
                let ty = ctx.infer(&md.body)?;
                if ty.fits(md.sig.result) {
                    Ok(ty)
                } else {
                    Err(TypeError::Mismatch {
                        class: cd.name,
                        method: m,
                        expected: md.sig.result,
                        found: ty,
                        context: "method body",
                    })
                }
            });
            match result {
                Ok(ty) => {
                    table.bodies.insert((cd.name, m), ty);
                }
                Err(e) => errors.push(e),
            }
        }
    }
    for od in p.objects.values() {
        let Some(cd) = p.classes.get(&od.class) else {
            continue;
        };
        for (slot, (value, expected)) in od.fields.iter().zip(&cd.field_types).enumerate() {
            let found = p.object_class(*value);
            if found != Some(*expected) {
                errors.push(TypeError::ObjectField {
                    object: od.name,
                    field: FieldIndex::from_slot(slot),
                    value: *value,
                    expected: *expected,
                    found,
                });
            }
        }
    }
    if errors.is_empty() {
        Ok(table)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::fixtures::*;
    use crate::source::{ClassDef, MethodDef};

    #[test]
    fn library_components_typecheck() {
        for p in [unit(), boolean(), bnat4()] {
            typecheck(&p).unwrap();
        }
    }

    #[test]
    fn bool_not_body_has_type_bool() {
        let p = boolean();
        let body = &p.classes[&ClassName(BOOL)].methods[0].body;
        assert_eq!(
            infer_type(&p, ClassName(BOOL), MethodIndex(1), body).unwrap(),
            Ty::Class(ClassName(BOOL))
        );
        assert_eq!(
            infer_type(&p, ClassName(BOOL), MethodIndex(1), &Expr::This).unwrap(),
            Ty::Class(ClassName(BOOL))
        );
    }

    #[test]
    fn object_reference_has_declared_class() {
        let p = boolean();
        assert_eq!(
            infer_type(&p, ClassName(BOOL), MethodIndex(1), &Expr::obj(TT)).unwrap(),
            Ty::Class(ClassName(UNIT))
        );
    }

    #[test]
    fn succ_field_has_type_bnat() {
        let p = bnat4();
        assert_eq!(
            infer_type(&p, ClassName(BNAT), MethodIndex(1), &Expr::select(Expr::This, 2)).unwrap(),
            Ty::Class(ClassName(BNAT))
        );
    }

    fn single_class(result: u32, body: Expr) -> SourceProgram {
        let mut p = SourceProgram::default();
        p.classes.insert(
            ClassName(1),
            ClassDef {
                name: ClassName(1),
                field_types: vec![],
                methods: vec![MethodDef {
                    sig: MethodSig::new(1, result),
                    body,
                }],
            },
        );
        p.interface.exports.add_class(crate::interfaces::ClassDecl {
            name: ClassName(1),
            methods: vec![MethodSig::new(1, result)],
        });
        p.interface.exports.add_class(crate::interfaces::ClassDecl {
            name: ClassName(2),
            methods: vec![],
        });
        p
    }

    #[test]
    fn this_has_enclosing_class() {
        assert!(typecheck(&single_class(1, Expr::This)).is_ok());
    }

    #[test]
    fn result_mismatch_is_reported() {
        let errs = typecheck(&single_class(2, Expr::This)).unwrap_err();
        assert!(matches!(
            errs[0],
            TypeError::Mismatch {
                expected: ClassName(2),
                found: Ty::Class(ClassName(1)),
                ..
            }
        ));
    }

    #[test]
    fn foreign_field_access_is_rejected() {
        // BNat4 reading a field of a Bool object.
        let mut p = link_for_foreign();
        let cd = p.classes.get_mut(&ClassName(BNAT)).unwrap();
        cd.methods[0].body = Expr::select(Expr::obj(T), 1);
        let errs = typecheck(&p).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, TypeError::ForeignField { .. })));
    }

    fn link_for_foreign() -> SourceProgram {
        crate::source::link_source(&boolean(), &bnat4()).unwrap()
    }

    #[test]
    fn exit_needs_a_main_signature() {
        let errs = typecheck(&single_class(1, Expr::exit(Expr::This))).unwrap_err();
        assert!(matches!(errs[0], TypeError::ExitWithoutMain { .. }));
    }

    #[test]
    fn exit_fits_any_context() {
        // main : Bool, body `this == this ? exit f : t`
        let p = driver(
            BOOL,
            Expr::if_eq(Expr::This, Expr::This, Expr::exit(Expr::obj(F)), Expr::obj(T)),
        );
        typecheck(&p).unwrap();
        // exit value must have the main result type
        let p = driver(BOOL, Expr::exit(Expr::obj(ZERO)));
        assert!(typecheck(&p).is_err());
    }

    #[test]
    fn object_fields_are_checked() {
        let mut p = bnat4();
        p.objects.get_mut(&ObjectName(ONE)).unwrap().fields[0] = ObjectName(99);
        let errs = typecheck(&p).unwrap_err();
        assert!(matches!(errs[0], TypeError::ObjectField { found: None, .. }));
    }
}
