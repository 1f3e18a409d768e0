//! The class-based source language: syntax tree, static typing, and a
//! continuation-based small-step interpreter.

mod eval;
mod typing;

use std::collections::BTreeMap;

use thiserror::Error;

pub use eval::{
    init_config, run, run_config, step, Config, ContFrame, Focus, InitError, SavedFrame, SourceOutcome, Step,
};
pub use typing::{infer_type, typecheck, Ty, TypeError, TypingTable};

use crate::interfaces::{link_interfaces, ClassDecl, Interface, InterfaceDiagnostic, MethodSig, ObjDecl};
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    This,
    Arg,
    Obj(ObjectName),
    Select(Box<Expr>, FieldIndex),
    Update(Box<Expr>, FieldIndex, Box<Expr>),
    Call(Box<Expr>, MethodIndex, Box<Expr>),
    /// `e1 == e2 ? e3 : e4`
    IfEq(Box<Expr>, Box<Expr>, Box<Expr>, Box<Expr>),
    Seq(Box<Expr>, Box<Expr>),
    Exit(Box<Expr>),
}

impl Expr {
    pub fn select(e: Expr, f: u32) -> Expr {
        Expr::Select(Box::new(e), FieldIndex(f))
    }

    pub fn update(e: Expr, f: u32, v: Expr) -> Expr {
        Expr::Update(Box::new(e), FieldIndex(f), Box::new(v))
    }

    pub fn call(recv: Expr, m: u32, arg: Expr) -> Expr {
        Expr::Call(Box::new(recv), MethodIndex(m), Box::new(arg))
    }

    pub fn if_eq(e1: Expr, e2: Expr, e3: Expr, e4: Expr) -> Expr {
        Expr::IfEq(Box::new(e1), Box::new(e2), Box::new(e3), Box::new(e4))
    }

    pub fn seq(e1: Expr, e2: Expr) -> Expr {
        Expr::Seq(Box::new(e1), Box::new(e2))
    }

    pub fn exit(e: Expr) -> Expr {
        Expr::Exit(Box::new(e))
    }

    pub fn obj(o: u32) -> Expr {
        Expr::Obj(ObjectName(o))
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::This | Expr::Arg | Expr::Obj(_) => 1,
            Expr::Select(e, _) | Expr::Exit(e) => 1 + e.size(),
            Expr::Update(a, _, b) | Expr::Call(a, _, b) | Expr::Seq(a, b) => 1 + a.size() + b.size(),
            Expr::IfEq(a, b, c, d) => 1 + a.size() + b.size() + c.size() + d.size(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MethodDef {
    pub sig: MethodSig,
    pub body: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassDef {
    pub name: ClassName,
    pub field_types: Vec<ClassName>,
    pub methods: Vec<MethodDef>,
}

impl ClassDef {
    pub fn method(&self, m: MethodIndex) -> Option<&MethodDef> {
        m.slot().and_then(|i| self.methods.get(i))
    }

    pub fn field_type(&self, f: FieldIndex) -> Option<ClassName> {
        f.slot().and_then(|i| self.field_types.get(i)).copied()
    }

    pub fn signatures(&self) -> Vec<MethodSig> {
        self.methods.iter().map(|m| m.sig).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ObjectDef {
    pub name: ObjectName,
    pub class: ClassName,
    pub fields: Vec<ObjectName>,
}

/// A (possibly partial) source program: its interface plus the classes and
/// static objects it defines.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SourceProgram {
    pub interface: Interface,
    pub classes: BTreeMap<ClassName, ClassDef>,
    pub objects: BTreeMap<ObjectName, ObjectDef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error(transparent)]
    Interface(#[from] InterfaceDiagnostic),
    #[error("class {0} is defined but not exported")]
    UnexportedClass(ClassName),
    #[error("class {0} is exported but not defined")]
    UndefinedClass(ClassName),
    #[error("class {0} definition does not match its export declaration")]
    ClassDeclMismatch(ClassName),
    #[error("object {0} is defined but not exported")]
    UnexportedObject(ObjectName),
    #[error("object {0} is exported but not defined")]
    UndefinedObject(ObjectName),
    #[error("object {0} definition does not match its export declaration")]
    ObjectDeclMismatch(ObjectName),
    #[error("object {object} instantiates class {class}, which is not defined here")]
    ForeignInstance { object: ObjectName, class: ClassName },
    #[error("object {object} has {found} field values, class {class} has {expected} fields")]
    FieldCount {
        object: ObjectName,
        class: ClassName,
        expected: usize,
        found: usize,
    },
    #[error("class {0} defined twice")]
    DuplicateClass(ClassName),
    #[error("object {0} defined twice")]
    DuplicateObject(ObjectName),
}

impl SourceProgram {
    /// Structural well-formedness: definitions and export declarations agree.
    pub fn validate(&self) -> Result<(), Vec<ProgramError>> {
        let mut errs: Vec<ProgramError> = Vec::new();
        if let Err(diags) = self.interface.validate() {
            errs.extend(diags.into_iter().map(ProgramError::from));
        }
        let exports = &self.interface.exports;
        for (name, def) in &self.classes {
            match exports.class(*name) {
                None => errs.push(ProgramError::UnexportedClass(*name)),
                Some(decl) if decl.methods != def.signatures() => errs.push(ProgramError::ClassDeclMismatch(*name)),
                Some(_) => {}
            }
        }
        for name in exports.classes.keys() {
            if !self.classes.contains_key(name) {
                errs.push(ProgramError::UndefinedClass(*name));
            }
        }
        for (name, def) in &self.objects {
            match exports.object(*name) {
                None => errs.push(ProgramError::UnexportedObject(*name)),
                Some(decl) if decl.class != def.class => errs.push(ProgramError::ObjectDeclMismatch(*name)),
                Some(_) => {}
            }
            match self.classes.get(&def.class) {
                None => errs.push(ProgramError::ForeignInstance {
                    object: *name,
                    class: def.class,
                }),
                Some(cd) if cd.field_types.len() != def.fields.len() => errs.push(ProgramError::FieldCount {
                    object: *name,
                    class: def.class,
                    expected: cd.field_types.len(),
                    found: def.fields.len(),
                }),
                Some(_) => {}
            }
        }
        for name in exports.objects.keys() {
            if !self.objects.contains_key(name) {
                errs.push(ProgramError::UndefinedObject(*name));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Adds an export declaration for every class and object defined here.
    pub fn export_definitions(&mut self) {
        for cd in self.classes.values() {
            self.interface.exports.add_class(ClassDecl {
                name: cd.name,
                methods: cd.signatures(),
            });
        }
        for od in self.objects.values() {
            self.interface.exports.add_object(ObjDecl {
                name: od.name,
                class: od.class,
            });
        }
    }

    /// Class of an object defined here or declared in the interface.
    pub fn object_class(&self, o: ObjectName) -> Option<ClassName> {
        self.objects
            .get(&o)
            .map(|d| d.class)
            .or_else(|| self.interface.object_class(o))
    }

    /// Signature of a method defined here or declared in the interface.
    pub fn signature(&self, c: ClassName, m: MethodIndex) -> Option<MethodSig> {
        match self.classes.get(&c) {
            Some(cd) => cd.method(m).map(|md| md.sig),
            None => self.interface.lookup_signature(c, m),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SourceLinkError {
    #[error(transparent)]
    Interface(#[from] crate::interfaces::LinkError),
    #[error("class {0} defined by both programs")]
    DuplicateClass(ClassName),
    #[error("object {0} defined by both programs")]
    DuplicateObject(ObjectName),
}

/// Links two source programs: union of definitions, linked interfaces.
pub fn link_source(a: &SourceProgram, b: &SourceProgram) -> Result<SourceProgram, SourceLinkError> {
    let interface = link_interfaces(&a.interface, &b.interface)?;
    let mut out = SourceProgram {
        interface,
        classes: a.classes.clone(),
        objects: a.objects.clone(),
    };
    for (name, def) in &b.classes {
        if out.classes.insert(*name, def.clone()).is_some() {
            return Err(SourceLinkError::DuplicateClass(*name));
        }
    }
    for (name, def) in &b.objects {
        if out.objects.insert(*name, def.clone()).is_some() {
            return Err(SourceLinkError::DuplicateObject(*name));
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! The unit, boolean and bounded-natural components. Library names start
    //! at 10 so that class 0 and object 0 stay free for a driver.

    use super::*;

    pub const UNIT: u32 = 10;
    pub const BOOL: u32 = 11;
    pub const BNAT: u32 = 12;
    pub const TT: u32 = 10;
    pub const T: u32 = 11;
    pub const F: u32 = 12;
    pub const ZERO: u32 = 13;
    pub const ONE: u32 = 14;
    pub const TWO: u32 = 15;
    pub const THREE: u32 = 16;

    fn export_all(p: &mut SourceProgram) {
        p.export_definitions();
    }

    fn obj(name: u32, class: u32, fields: &[u32]) -> (ObjectName, ObjectDef) {
        (
            ObjectName(name),
            ObjectDef {
                name: ObjectName(name),
                class: ClassName(class),
                fields: fields.iter().map(|f| ObjectName(*f)).collect(),
            },
        )
    }

    pub fn unit() -> SourceProgram {
        let mut p = SourceProgram::default();
        p.classes.insert(
            ClassName(UNIT),
            ClassDef {
                name: ClassName(UNIT),
                field_types: vec![],
                methods: vec![],
            },
        );
        p.objects.extend([obj(TT, UNIT, &[])]);
        export_all(&mut p);
        p
    }

    pub fn boolean() -> SourceProgram {
        let mut p = SourceProgram::default();
        let ite = |a: Expr, b: Expr| Expr::if_eq(Expr::This, Expr::obj(T), a, b);
        p.classes.insert(
            ClassName(BOOL),
            ClassDef {
                name: ClassName(BOOL),
                field_types: vec![],
                methods: vec![
                    MethodDef {
                        sig: MethodSig::new(UNIT, BOOL),
                        body: ite(Expr::obj(F), Expr::obj(T)),
                    },
                    MethodDef {
                        sig: MethodSig::new(BOOL, BOOL),
                        body: ite(Expr::Arg, Expr::obj(F)),
                    },
                    MethodDef {
                        sig: MethodSig::new(BOOL, BOOL),
                        body: ite(Expr::obj(T), Expr::Arg),
                    },
                ],
            },
        );
        p.objects.extend([obj(T, BOOL, &[]), obj(F, BOOL, &[])]);
        export_all(&mut p);
        p.interface.imports.add_class(ClassDecl {
            name: ClassName(UNIT),
            methods: vec![],
        });
        p.interface.imports.add_object(ObjDecl {
            name: ObjectName(TT),
            class: ClassName(UNIT),
        });
        p
    }

    pub fn bnat4() -> SourceProgram {
        let mut p = SourceProgram::default();
        let pred = |e: Expr| Expr::select(e, 1);
        let succ = |e: Expr| Expr::select(e, 2);
        // add: arg == zero ? this : this.succ.add(arg.pred)
        let add = Expr::if_eq(
            Expr::Arg,
            Expr::obj(ZERO),
            Expr::This,
            Expr::call(succ(Expr::This), 1, pred(Expr::Arg)),
        );
        // mul: arg == zero ? zero : this.mul(arg.pred).add(this)
        let mul = Expr::if_eq(
            Expr::Arg,
            Expr::obj(ZERO),
            Expr::obj(ZERO),
            Expr::call(Expr::call(Expr::This, 2, pred(Expr::Arg)), 1, Expr::This),
        );
        p.classes.insert(
            ClassName(BNAT),
            ClassDef {
                name: ClassName(BNAT),
                field_types: vec![ClassName(BNAT), ClassName(BNAT)],
                methods: vec![
                    MethodDef {
                        sig: MethodSig::new(BNAT, BNAT),
                        body: add,
                    },
                    MethodDef {
                        sig: MethodSig::new(BNAT, BNAT),
                        body: mul,
                    },
                ],
            },
        );
        p.objects.extend([
            obj(ZERO, BNAT, &[ZERO, ONE]),
            obj(ONE, BNAT, &[ZERO, TWO]),
            obj(TWO, BNAT, &[ONE, THREE]),
            obj(THREE, BNAT, &[TWO, THREE]),
        ]);
        export_all(&mut p);
        p
    }

    /// A complete program: the three library components plus a class 0
    /// whose main method has the given result class and body.
    pub fn driver(result: u32, body: Expr) -> SourceProgram {
        driver_with_fields(result, vec![], vec![], body)
    }

    pub fn driver_with_fields(result: u32, field_types: Vec<u32>, field_values: Vec<u32>, body: Expr) -> SourceProgram {
        let mut d = SourceProgram::default();
        d.classes.insert(
            ClassName(0),
            ClassDef {
                name: ClassName(0),
                field_types: field_types.into_iter().map(ClassName).collect(),
                methods: vec![MethodDef {
                    sig: MethodSig::new(0, result),
                    body,
                }],
            },
        );
        d.objects.extend([obj(0, 0, &field_values)]);
        export_all(&mut d);
        let mut p = link_source(&unit(), &boolean()).unwrap();
        p = link_source(&p, &bnat4()).unwrap();
        link_source(&p, &d).unwrap()
    }
}
