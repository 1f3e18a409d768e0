//! Import/export declaration tables shared by every level of the chain.
//!
//! A component publishes an [`Interface`]: the classes and objects it defines
//! (exports) and the ones it expects from others (imports). Interfaces are
//! compared per declaration, so tables are kept as name-sorted maps.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::names::{ClassName, MethodIndex, ObjectName};

/// Argument and result class of a method.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MethodSig {
    pub arg: ClassName,
    pub result: ClassName,
}

impl MethodSig {
    pub fn new(arg: impl Into<ClassName>, result: impl Into<ClassName>) -> Self {
        MethodSig {
            arg: arg.into(),
            result: result.into(),
        }
    }
}

impl fmt::Display for MethodSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.result, self.arg)
    }
}

/// A class declaration: public method signatures only, fields are private.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClassDecl {
    pub name: ClassName,
    pub methods: Vec<MethodSig>,
}

impl ClassDecl {
    pub fn method(&self, m: MethodIndex) -> Option<MethodSig> {
        m.slot().and_then(|i| self.methods.get(i)).copied()
    }
}

impl fmt::Display for ClassDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class decl {} {{ ", self.name)?;
        for (i, sig) in self.methods.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{sig}")?;
        }
        write!(f, " }}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ObjDecl {
    pub name: ObjectName,
    pub class: ClassName,
}

impl fmt::Display for ObjDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "obj decl {} : {}", self.name, self.class)
    }
}

/// A set of class declarations and a set of object declarations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DeclTable {
    pub classes: BTreeMap<ClassName, ClassDecl>,
    pub objects: BTreeMap<ObjectName, ObjDecl>,
}

impl DeclTable {
    pub fn is_empty(&self) -> bool {
        self.classes.is_empty() && self.objects.is_empty()
    }

    pub fn add_class(&mut self, decl: ClassDecl) -> Option<ClassDecl> {
        self.classes.insert(decl.name, decl)
    }

    pub fn add_object(&mut self, decl: ObjDecl) -> Option<ObjDecl> {
        self.objects.insert(decl.name, decl)
    }

    pub fn class(&self, c: ClassName) -> Option<&ClassDecl> {
        self.classes.get(&c)
    }

    pub fn object(&self, o: ObjectName) -> Option<&ObjDecl> {
        self.objects.get(&o)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Interface {
    pub imports: DeclTable,
    pub exports: DeclTable,
}

/// Why two interfaces cannot be linked, or why one interface is ill-formed.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterfaceDiagnostic {
    #[error("class {0} is exported by both components")]
    DuplicateClassExport(ClassName),
    #[error("object {0} is exported by both components")]
    DuplicateObjectExport(ObjectName),
    #[error("import `{import}` does not match export `{export}`")]
    ClassMismatch { import: ClassDecl, export: ClassDecl },
    #[error("import `{import}` does not match export `{export}`")]
    ObjectMismatch { import: ObjDecl, export: ObjDecl },
    #[error("both components import class {name} with different signatures: `{left}` vs `{right}`")]
    ConflictingClassImports {
        name: ClassName,
        left: ClassDecl,
        right: ClassDecl,
    },
    #[error("both components import object {name} with different classes: `{left}` vs `{right}`")]
    ConflictingObjectImports {
        name: ObjectName,
        left: ObjDecl,
        right: ObjDecl,
    },
    #[error("exported object {object} has class {class}, which is not exported by the same component")]
    ForeignObjectClass { object: ObjectName, class: ClassName },
    #[error("imported object {object} has class {class}, which is neither imported nor exported")]
    UndeclaredObjectClass { object: ObjectName, class: ClassName },
    #[error("class {0} is both imported and exported")]
    ClassImportedAndExported(ClassName),
    #[error("object {0} is both imported and exported")]
    ObjectImportedAndExported(ObjectName),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("incompatible interfaces: {}", display_list(.0))]
pub struct LinkError(pub Vec<InterfaceDiagnostic>);

fn display_list(items: &[InterfaceDiagnostic]) -> String {
    items.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

impl Interface {
    pub fn empty() -> Self {
        Interface::default()
    }

    /// Internal well-formedness: exported objects instantiate exported
    /// classes, imported objects name a declared class, and no name is both
    /// imported and exported.
    pub fn validate(&self) -> Result<(), Vec<InterfaceDiagnostic>> {
        let mut diags = Vec::new();
        for od in self.exports.objects.values() {
            if !self.exports.classes.contains_key(&od.class) {
                diags.push(InterfaceDiagnostic::ForeignObjectClass {
                    object: od.name,
                    class: od.class,
                });
            }
        }
        for od in self.imports.objects.values() {
            if !self.imports.classes.contains_key(&od.class) && !self.exports.classes.contains_key(&od.class) {
                diags.push(InterfaceDiagnostic::UndeclaredObjectClass {
                    object: od.name,
                    class: od.class,
                });
            }
        }
        for c in self.imports.classes.keys() {
            if self.exports.classes.contains_key(c) {
                diags.push(InterfaceDiagnostic::ClassImportedAndExported(*c));
            }
        }
        for o in self.imports.objects.keys() {
            if self.exports.objects.contains_key(o) {
                diags.push(InterfaceDiagnostic::ObjectImportedAndExported(*o));
            }
        }
        if diags.is_empty() {
            Ok(())
        } else {
            Err(diags)
        }
    }

    /// A complete program has nothing left to import.
    pub fn is_complete(&self) -> bool {
        self.imports.is_empty()
    }

    /// Signature of method `m` of class `c`, preferring exports over imports.
    pub fn lookup_signature(&self, c: ClassName, m: MethodIndex) -> Option<MethodSig> {
        self.exports
            .class(c)
            .or_else(|| self.imports.class(c))
            .and_then(|decl| decl.method(m))
    }

    /// Class of object `o` according to this interface.
    pub fn object_class(&self, o: ObjectName) -> Option<ClassName> {
        self.exports
            .object(o)
            .or_else(|| self.imports.object(o))
            .map(|d| d.class)
    }
}

/// Checks whether two interfaces may be linked. Returns every reason they
/// cannot; an empty list means compatible.
pub fn compatibility(i1: &Interface, i2: &Interface) -> Vec<InterfaceDiagnostic> {
    let mut diags = Vec::new();
    for c in i1.exports.classes.keys() {
        if i2.exports.classes.contains_key(c) {
            diags.push(InterfaceDiagnostic::DuplicateClassExport(*c));
        }
    }
    for o in i1.exports.objects.keys() {
        if i2.exports.objects.contains_key(o) {
            diags.push(InterfaceDiagnostic::DuplicateObjectExport(*o));
        }
    }
    for (importer, exporter) in [(i1, i2), (i2, i1)] {
        for imp in importer.imports.classes.values() {
            if let Some(exp) = exporter.exports.class(imp.name) {
                if imp != exp {
                    diags.push(InterfaceDiagnostic::ClassMismatch {
                        import: imp.clone(),
                        export: exp.clone(),
                    });
                }
            }
        }
        for imp in importer.imports.objects.values() {
            if let Some(exp) = exporter.exports.object(imp.name) {
                if imp != exp {
                    diags.push(InterfaceDiagnostic::ObjectMismatch {
                        import: *imp,
                        export: *exp,
                    });
                }
            }
        }
    }
    // Two imports of the same name would have to merge into one declaration.
    for (name, left) in &i1.imports.classes {
        if let Some(right) = i2.imports.class(*name) {
            if left != right {
                diags.push(InterfaceDiagnostic::ConflictingClassImports {
                    name: *name,
                    left: left.clone(),
                    right: right.clone(),
                });
            }
        }
    }
    for (name, left) in &i1.imports.objects {
        if let Some(right) = i2.imports.object(*name) {
            if left != right {
                diags.push(InterfaceDiagnostic::ConflictingObjectImports {
                    name: *name,
                    left: *left,
                    right: *right,
                });
            }
        }
    }
    diags
}

pub fn compatible(i1: &Interface, i2: &Interface) -> bool {
    compatibility(i1, i2).is_empty()
}

/// Combines exports and drops the imports the combined exports satisfy.
pub fn link_interfaces(i1: &Interface, i2: &Interface) -> Result<Interface, LinkError> {
    let diags = compatibility(i1, i2);
    if !diags.is_empty() {
        return Err(LinkError(diags));
    }
    let mut exports = i1.exports.clone();
    exports.classes.extend(i2.exports.classes.clone());
    exports.objects.extend(i2.exports.objects.clone());

    let mut imports = DeclTable::default();
    for table in [&i1.imports, &i2.imports] {
        for decl in table.classes.values() {
            if !exports.classes.contains_key(&decl.name) {
                imports.add_class(decl.clone());
            }
        }
        for decl in table.objects.values() {
            if !exports.objects.contains_key(&decl.name) {
                imports.add_object(*decl);
            }
        }
    }
    Ok(Interface { imports, exports })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Numbering used below: Unit = 0, Bool = 1, BNat4 = 2; tt = 0, t = 1, f = 2.
    fn unit() -> Interface {
        let mut i = Interface::empty();
        i.exports.add_class(ClassDecl {
            name: ClassName(0),
            methods: vec![],
        });
        i.exports.add_object(ObjDecl {
            name: ObjectName(0),
            class: ClassName(0),
        });
        i
    }

    fn boolean() -> Interface {
        let mut i = Interface::empty();
        i.imports.add_class(ClassDecl {
            name: ClassName(0),
            methods: vec![],
        });
        i.imports.add_object(ObjDecl {
            name: ObjectName(0),
            class: ClassName(0),
        });
        i.exports.add_class(ClassDecl {
            name: ClassName(1),
            methods: vec![MethodSig::new(0, 1), MethodSig::new(1, 1), MethodSig::new(1, 1)],
        });
        for o in [1, 2] {
            i.exports.add_object(ObjDecl {
                name: ObjectName(o),
                class: ClassName(1),
            });
        }
        i
    }

    fn bnat4() -> Interface {
        let mut i = Interface::empty();
        i.exports.add_class(ClassDecl {
            name: ClassName(2),
            methods: vec![MethodSig::new(2, 2), MethodSig::new(2, 2)],
        });
        for o in 3..7 {
            i.exports.add_object(ObjDecl {
                name: ObjectName(o),
                class: ClassName(2),
            });
        }
        i
    }

    #[test]
    fn bool_and_unit_are_compatible() {
        assert!(compatible(&boolean(), &unit()));
        assert!(compatible(&Interface::empty(), &Interface::empty()));
    }

    #[test]
    fn duplicate_export_is_reported() {
        let diags = compatibility(&unit(), &unit());
        assert!(diags.contains(&InterfaceDiagnostic::DuplicateClassExport(ClassName(0))));
        assert!(diags.contains(&InterfaceDiagnostic::DuplicateObjectExport(ObjectName(0))));
    }

    #[test]
    fn mismatched_import_carries_both_declarations() {
        let mut wrong_unit = unit();
        wrong_unit.exports.add_class(ClassDecl {
            name: ClassName(0),
            methods: vec![MethodSig::new(0, 0)],
        });
        let diags = compatibility(&boolean(), &wrong_unit);
        assert_eq!(diags.len(), 1);
        match &diags[0] {
            InterfaceDiagnostic::ClassMismatch { import, export } => {
                assert!(import.methods.is_empty());
                assert_eq!(export.methods.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linking_unit_and_bool_resolves_imports() {
        let linked = link_interfaces(&unit(), &boolean()).unwrap();
        assert!(linked.imports.is_empty());
        assert_eq!(linked.exports.classes.len(), 2);
        assert_eq!(linked.exports.objects.len(), 3);
        assert!(linked.is_complete());
    }

    #[test]
    fn linking_bool_and_bnat_keeps_unit_imports() {
        let linked = link_interfaces(&boolean(), &bnat4()).unwrap();
        assert!(linked.imports.class(ClassName(0)).is_some());
        assert!(linked.imports.object(ObjectName(0)).is_some());
        assert!(!linked.is_complete());
        let all = link_interfaces(&linked, &unit()).unwrap();
        assert!(all.is_complete());
    }

    #[test]
    fn empty_is_identity() {
        let b = boolean();
        assert_eq!(link_interfaces(&b, &Interface::empty()).unwrap(), b);
        assert!(Interface::empty().is_complete());
        assert!(!b.is_complete());
    }

    #[test]
    fn lookup_prefers_exports() {
        let b = boolean();
        assert_eq!(
            b.lookup_signature(ClassName(1), MethodIndex(1)),
            Some(MethodSig::new(0, 1))
        );
        assert_eq!(
            bnat4().lookup_signature(ClassName(2), MethodIndex(2)),
            Some(MethodSig::new(2, 2))
        );
        assert_eq!(Interface::empty().lookup_signature(ClassName(0), MethodIndex(1)), None);
        assert_eq!(b.lookup_signature(ClassName(0), MethodIndex(1)), None);
    }

    #[test]
    fn validation_flags_foreign_objects() {
        let mut i = Interface::empty();
        i.exports.add_object(ObjDecl {
            name: ObjectName(9),
            class: ClassName(4),
        });
        i.imports.add_object(ObjDecl {
            name: ObjectName(8),
            class: ClassName(5),
        });
        let errs = i.validate().unwrap_err();
        assert_eq!(errs.len(), 2);
        assert!(boolean().validate().is_ok());
    }
}
