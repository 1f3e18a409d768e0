//! The `.ic` format for intermediate components.
//!
//! ```text
//! export class decl 2 { 2(1), 2(2) }
//! export obj decl 3, 4 : 2
//! compartment 2 {
//!   fields { 2 2 }
//!   method 2(1) {
//!     This
//!     Ret
//!   }
//!   object 3 { 3 4 }
//!   stack { }
//! }
//! ```
//!
//! Classes, objects and methods may also be written as identifiers.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::build::{collect_method_names, MethodNames, Resolver};
use super::surface::{decl, numeric_class_decl, scan_decls, SItem};
use super::{Cursor, NameTable, ParseError};
use crate::interfaces::{ClassDecl, DeclTable, MethodSig, ObjDecl};
use crate::interm::{ICompartment, IInstr, IMethod, IProgram};
use crate::names::FieldIndex;

/// Adds a parsed declaration to `p`'s interface.
pub(crate) fn add_decl(
    item: SItem,
    interface: &mut crate::interfaces::Interface,
    r: &mut Resolver,
    cur: &Cursor,
) -> Result<(), ParseError> {
    match item {
        SItem::ClassDecl { import, name, methods } => {
            let decl = ClassDecl {
                name: r.class(&name.tok),
                methods: methods
                    .iter()
                    .map(|s| MethodSig {
                        arg: r.class(&s.arg.tok),
                        result: r.class(&s.result.tok),
                    })
                    .collect(),
            };
            let t = if import {
                &mut interface.imports
            } else {
                &mut interface.exports
            };
            if t.add_class(decl).is_some() {
                return Err(super::ParseError::new(
                    name.pos,
                    format!("class `{}` declared twice", name.tok),
                ));
            }
        }
        SItem::ObjDecl { import, names, class } => {
            let class = r.class(&class.tok);
            for n in names {
                let decl = ObjDecl {
                    name: r.object(&n.tok),
                    class,
                };
                let t = if import {
                    &mut interface.imports
                } else {
                    &mut interface.exports
                };
                if t.add_object(decl).is_some() {
                    return Err(super::ParseError::new(
                        n.pos,
                        format!("object `{}` declared twice", n.tok),
                    ));
                }
            }
        }
        _ => return cur.error("expected a declaration"),
    }
    Ok(())
}

fn index(cur: &mut Cursor) -> Result<u32, ParseError> {
    let pos = cur.pos();
    let v = cur.int()?;
    u32::try_from(v).map_err(|_| ParseError::new(pos, format!("`{v}` is not a valid index")))
}

fn instr(cur: &mut Cursor, r: &mut Resolver) -> Result<IInstr, ParseError> {
    let (op, pos) = cur.ident()?;
    Ok(match op.as_str() {
        "Nop" => IInstr::Nop,
        "This" => IInstr::This,
        "Arg" => IInstr::Arg,
        "Ret" => IInstr::Ret,
        "Drop" => IInstr::Drop,
        "Halt" => IInstr::Halt,
        "Ref" => IInstr::Ref(r.object(&cur.name()?.0)),
        "Sel" | "Upd" => {
            let at = cur.pos();
            let f = index(cur)?;
            if f == 0 {
                return Err(ParseError::new(at, "field indices start at 1"));
            }
            if op == "Sel" {
                IInstr::Sel(FieldIndex(f))
            } else {
                IInstr::Upd(FieldIndex(f))
            }
        }
        "Skip" => IInstr::Skip(index(cur)?),
        "Skeq" => IInstr::Skeq(index(cur)?),
        "Call" => {
            let (ct, _) = cur.name()?;
            let (mt, mpos) = cur.name()?;
            let m = r.method(&ct, &mt, mpos)?;
            IInstr::Call(r.class(&ct), m)
        }
        _ => return Err(ParseError::new(pos, format!("unknown instruction `{op}`"))),
    })
}

fn name_list<T>(
    cur: &mut Cursor,
    mut f: impl FnMut(&mut Cursor) -> Result<T, ParseError>,
) -> Result<Vec<T>, ParseError> {
    cur.sym("{")?;
    let mut out = Vec::new();
    while !cur.eat_sym("}") {
        out.push(f(cur)?);
    }
    Ok(out)
}

fn compartment(cur: &mut Cursor, r: &mut Resolver) -> Result<ICompartment, ParseError> {
    let class = r.class(&cur.name()?.0);
    cur.sym("{")?;
    let mut ic = ICompartment {
        class,
        field_types: vec![],
        methods: vec![],
        objects: BTreeMap::new(),
        stack: vec![],
    };
    let (mut seen_fields, mut seen_stack) = (false, false);
    while !cur.eat_sym("}") {
        let pos = cur.pos();
        let (kw, _) = cur.ident()?;
        match kw.as_str() {
            "fields" if !seen_fields => {
                seen_fields = true;
                ic.field_types = name_list(cur, |c| Ok(r.class(&c.name()?.0)))?;
            }
            "stack" if !seen_stack => {
                seen_stack = true;
                ic.stack = name_list(cur, |c| Ok(r.object(&c.name()?.0)))?;
            }
            "object" => {
                let (ot, opos) = cur.name()?;
                let o = r.object(&ot);
                let fields = name_list(cur, |c| Ok(r.object(&c.name()?.0)))?;
                if ic.objects.insert(o, fields).is_some() {
                    return Err(ParseError::new(opos, format!("object `{ot}` defined twice")));
                }
            }
            "method" => {
                if matches!(cur.peek_at(1), super::Tok::Ident(_) | super::Tok::Int(_)) {
                    cur.ident()?;
                }
                let result = r.class(&cur.name()?.0);
                cur.sym("(")?;
                let arg = r.class(&cur.name()?.0);
                cur.sym(")")?;
                let code = name_list(cur, |c| instr(c, r))?;
                ic.methods.push(IMethod {
                    sig: MethodSig { arg, result },
                    code,
                });
            }
            _ => return Err(ParseError::new(pos, format!("unexpected `{kw}` in compartment"))),
        }
    }
    Ok(ic)
}

pub(crate) fn parse_ic_with(text: &str, r: &mut Resolver) -> Result<IProgram, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut p = IProgram::default();
    while !cur.at_eof() {
        if cur.is_kw("export") || cur.is_kw("import") {
            let import = cur.is_kw("import");
            cur.next();
            let item = decl(&mut cur, import)?;
            add_decl(item, &mut p.interface, r, &cur)?;
        } else if cur.eat_kw("compartment") {
            let pos = cur.pos();
            let ic = compartment(&mut cur, r)?;
            if p.compartments.contains_key(&ic.class) {
                return Err(ParseError::new(pos, format!("compartment {} defined twice", ic.class)));
            }
            p.compartments.insert(ic.class, ic);
        } else {
            return cur.unexpected("`compartment`, `export` or `import`");
        }
    }
    Ok(p)
}

/// Parses a standalone `.ic` file. Symbolic method names resolve against
/// the file's own declarations.
pub fn parse_ic(text: &str, names: &mut NameTable) -> Result<IProgram, ParseError> {
    let mut methods = MethodNames::new();
    collect_method_names(&scan_decls(text)?, &mut methods);
    parse_ic_with(
        text,
        &mut Resolver {
            names,
            methods: &methods,
        },
    )
}

pub(crate) fn print_decl_table(t: &DeclTable, kw: &str, out: &mut String) {
    for d in t.classes.values() {
        let _ = writeln!(out, "{kw} {}", numeric_class_decl(d));
    }
    let mut by_class: BTreeMap<_, Vec<String>> = BTreeMap::new();
    for d in t.objects.values() {
        by_class.entry(d.class).or_default().push(d.name.to_string());
    }
    for (c, os) in by_class {
        let _ = writeln!(out, "{kw} obj decl {} : {c}", os.join(", "));
    }
}

fn list<T: std::fmt::Display>(xs: &[T]) -> String {
    if xs.is_empty() {
        "{ }".into()
    } else {
        let items: Vec<String> = xs.iter().map(T::to_string).collect();
        format!("{{ {} }}", items.join(" "))
    }
}

/// Prints `p` with numeric names; `legend` prepends the table's names as
/// comments.
pub fn print_ic(p: &IProgram, legend: Option<&NameTable>) -> String {
    let mut out = legend.map(NameTable::legend).unwrap_or_default();
    print_decl_table(&p.interface.imports, "import", &mut out);
    print_decl_table(&p.interface.exports, "export", &mut out);
    for ic in p.compartments.values() {
        let _ = writeln!(out, "compartment {} {{", ic.class);
        let _ = writeln!(out, "  fields {}", list(&ic.field_types));
        for m in &ic.methods {
            let _ = writeln!(out, "  method {} {{", m.sig);
            for i in &m.code {
                let _ = writeln!(out, "    {i}");
            }
            out.push_str("  }\n");
        }
        for (o, fields) in &ic.objects {
            let _ = writeln!(out, "  object {o} {}", list(fields));
        }
        let _ = writeln!(out, "  stack {}", list(&ic.stack));
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::{ClassName, MethodIndex, ObjectName};

    #[test]
    fn parses_symbolic_and_numeric_forms() {
        let text = "
            export class decl Bool { Bool not(Bool) }
            export obj decl t, f : Bool
            compartment Bool {
              fields { }
              method not Bool(Bool) { This Ref t Skeq 2 Ref t Skip 1 Ref f Nop Ret }
              object t { }
              object f { }
              stack { }
            }
            compartment 7 { method 7(7) { Call Bool not Call 7 1 Sel 2 Halt } }";
        let mut names = NameTable::new();
        let p = parse_ic(text, &mut names).unwrap();
        let b = names.lookup_class("Bool").unwrap();
        assert_eq!(p.compartments[&b].methods[0].code.len(), 8);
        assert_eq!(p.compartments[&b].objects.len(), 2);
        assert_eq!(
            p.compartments[&ClassName(7)].methods[0].code[..2],
            [
                IInstr::Call(b, MethodIndex(1)),
                IInstr::Call(ClassName(7), MethodIndex(1))
            ]
        );
        assert_eq!(p.interface.exports.objects.len(), 2);
        assert_eq!(names.lookup_object("f"), Some(ObjectName(1)));
    }

    #[test]
    fn print_then_parse_is_identity() {
        let text = "compartment 3 { fields { 3 } method 3(3) { This Sel 1 Ret } object 4 { 4 } stack { 4 } }
                    export class decl 3 { 3(3) } export obj decl 4 : 3";
        let p = parse_ic(text, &mut NameTable::new()).unwrap();
        let printed = print_ic(&p, None);
        assert_eq!(parse_ic(&printed, &mut NameTable::new()).unwrap(), p);
    }

    #[test]
    fn errors_point_at_the_instruction() {
        let err = parse_ic("compartment 1 {\n method 1(1) { Jump } }", &mut NameTable::new()).unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (2, 16));
    }
}
