//! Concrete syntax of source components.
//!
//! ```text
//! unit   := item*
//! item   := ("export" | "import") "obj" "decl" name ("," name)* ":" name
//!         | ("export" | "import") "class" "decl" name "{" [sig ("," sig)*] "}"
//!         | "obj" name ":" name "{" [name ("," name)*] "}"
//!         | "class" name "{" (name ident ("," ident)* ";")* method* "}"
//! sig    := name [ident] "(" name [ident] ")"
//! method := name ident "(" name [ident] ")" "{" seq "}"
//! seq    := assign [";" seq]
//! assign := "exit" assign | cond [":=" assign]
//! cond   := postfix ["==" postfix "?" assign ":" assign]
//! postfix:= atom ("." ident ["(" seq ")"])*
//! atom   := "this" | "arg" | name | "(" seq ")"
//! ```
//!
//! A method's parameter name, when given, is an alias for `arg`.

use std::fmt::Write as _;

use super::{Cursor, NameTable, NameTok, ParseError, Pos, Tok};
use crate::interfaces::{ClassDecl, DeclTable, MethodSig};
use crate::names::{ClassName, FieldIndex, MethodIndex};
use crate::source::{infer_type, Expr, SourceProgram, Ty};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SName {
    pub tok: NameTok,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SIdent {
    pub text: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SSig {
    pub result: SName,
    pub name: Option<SIdent>,
    pub arg: SName,
    pub param: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SExpr {
    This,
    Arg,
    Name(SName),
    Select(Box<SExpr>, SIdent),
    Update(Box<SExpr>, SIdent, Box<SExpr>),
    Call(Box<SExpr>, SIdent, Box<SExpr>),
    IfEq(Box<SExpr>, Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Seq(Box<SExpr>, Box<SExpr>),
    Exit(Box<SExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SMethod {
    pub sig: SSig,
    pub body: SExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SClass {
    pub name: SName,
    pub fields: Vec<(SName, SIdent)>,
    pub methods: Vec<SMethod>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SObj {
    pub name: SName,
    pub class: SName,
    pub fields: Vec<SName>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SItem {
    ClassDecl {
        import: bool,
        name: SName,
        methods: Vec<SSig>,
    },
    ObjDecl {
        import: bool,
        names: Vec<SName>,
        class: SName,
    },
    Class(SClass),
    Obj(SObj),
}

/// A parsed but unresolved source component.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurfaceUnit {
    pub items: Vec<SItem>,
}

fn name(cur: &mut Cursor) -> Result<SName, ParseError> {
    let (tok, pos) = cur.name()?;
    Ok(SName { tok, pos })
}

fn ident(cur: &mut Cursor) -> Result<SIdent, ParseError> {
    let (text, pos) = cur.ident()?;
    Ok(SIdent { text, pos })
}

fn is_name(t: &Tok) -> bool {
    matches!(t, Tok::Ident(_) | Tok::Int(_))
}

/// `R [m] ( A [x] )`
fn sig(cur: &mut Cursor, name_required: bool) -> Result<SSig, ParseError> {
    let result = name(cur)?;
    let method = if name_required || !cur.is_sym("(") {
        Some(ident(cur)?)
    } else {
        None
    };
    cur.sym("(")?;
    let arg = name(cur)?;
    let param = if cur.is_sym(")") { None } else { Some(cur.ident()?.0) };
    cur.sym(")")?;
    Ok(SSig {
        result,
        name: method,
        arg,
        param,
    })
}

/// Parses an interface declaration after its `export`/`import` keyword.
pub(crate) fn decl(cur: &mut Cursor, import: bool) -> Result<SItem, ParseError> {
    if cur.eat_kw("obj") {
        cur.kw("decl")?;
        let mut names = vec![name(cur)?];
        while cur.eat_sym(",") {
            names.push(name(cur)?);
        }
        cur.sym(":")?;
        let class = name(cur)?;
        Ok(SItem::ObjDecl { import, names, class })
    } else if cur.eat_kw("class") {
        cur.kw("decl")?;
        let class = name(cur)?;
        cur.sym("{")?;
        let mut methods = Vec::new();
        if !cur.is_sym("}") {
            methods.push(sig(cur, false)?);
            while cur.eat_sym(",") {
                methods.push(sig(cur, false)?);
            }
        }
        cur.sym("}")?;
        Ok(SItem::ClassDecl {
            import,
            name: class,
            methods,
        })
    } else {
        cur.unexpected("`obj` or `class`")
    }
}

/// Collects the interface declarations of a file whose other top-level
/// items are `keyword ... { ... }` blocks.
pub(crate) fn scan_decls(text: &str) -> Result<Vec<SItem>, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut out = Vec::new();
    while !cur.at_eof() {
        if cur.eat_kw("export") {
            out.push(decl(&mut cur, false)?);
        } else if cur.eat_kw("import") {
            out.push(decl(&mut cur, true)?);
        } else if cur.eat_sym("{") {
            let mut depth = 1;
            while depth > 0 {
                match cur.next().0 {
                    Tok::Sym("{") => depth += 1,
                    Tok::Sym("}") => depth -= 1,
                    Tok::Eof => return cur.unexpected("`}`"),
                    _ => {}
                }
            }
        } else {
            cur.next();
        }
    }
    Ok(out)
}

pub fn parse_surface(text: &str) -> Result<SurfaceUnit, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut items = Vec::new();
    while !cur.at_eof() {
        if cur.eat_kw("export") {
            items.push(decl(&mut cur, false)?);
        } else if cur.eat_kw("import") {
            items.push(decl(&mut cur, true)?);
        } else if cur.eat_kw("obj") {
            let obj = name(&mut cur)?;
            cur.sym(":")?;
            let class = name(&mut cur)?;
            cur.sym("{")?;
            let mut fields = Vec::new();
            if !cur.is_sym("}") {
                fields.push(name(&mut cur)?);
                while cur.eat_sym(",") {
                    fields.push(name(&mut cur)?);
                }
            }
            cur.sym("}")?;
            items.push(SItem::Obj(SObj {
                name: obj,
                class,
                fields,
            }));
        } else if cur.eat_kw("class") {
            items.push(SItem::Class(class(&mut cur)?));
        } else {
            return cur.unexpected("`class`, `obj`, `export` or `import`");
        }
    }
    Ok(SurfaceUnit { items })
}

fn class(cur: &mut Cursor) -> Result<SClass, ParseError> {
    let class = name(cur)?;
    cur.sym("{")?;
    let mut fields = Vec::new();
    let mut methods = Vec::new();
    while !cur.eat_sym("}") {
        // Both members start `Type ident`; a `(` next means a method.
        if !is_name(cur.peek()) {
            return cur.unexpected("a field or method");
        }
        if cur.peek_at(2) == &Tok::Sym("(") {
            let sig = sig(cur, true)?;
            cur.sym("{")?;
            let body = seq(cur)?;
            cur.sym("}")?;
            methods.push(SMethod { sig, body });
        } else {
            if !methods.is_empty() {
                return cur.error("fields must come before methods");
            }
            let ty = name(cur)?;
            fields.push((ty.clone(), ident(cur)?));
            while cur.eat_sym(",") {
                fields.push((ty.clone(), ident(cur)?));
            }
            cur.sym(";")?;
        }
    }
    Ok(SClass {
        name: class,
        fields,
        methods,
    })
}

fn seq(cur: &mut Cursor) -> Result<SExpr, ParseError> {
    let first = assign(cur)?;
    if cur.eat_sym(";") {
        Ok(SExpr::Seq(Box::new(first), Box::new(seq(cur)?)))
    } else {
        Ok(first)
    }
}

fn assign(cur: &mut Cursor) -> Result<SExpr, ParseError> {
    if cur.eat_kw("exit") {
        return Ok(SExpr::Exit(Box::new(assign(cur)?)));
    }
    let pos = cur.pos();
    let lhs = cond(cur)?;
    if cur.eat_sym(":=") {
        let SExpr::Select(recv, f) = lhs else {
            return Err(ParseError::new(pos, "only a field selection can be assigned"));
        };
        return Ok(SExpr::Update(recv, f, Box::new(assign(cur)?)));
    }
    Ok(lhs)
}

fn cond(cur: &mut Cursor) -> Result<SExpr, ParseError> {
    let a = postfix(cur)?;
    if !cur.eat_sym("==") {
        return Ok(a);
    }
    let b = postfix(cur)?;
    cur.sym("?")?;
    let c = assign(cur)?;
    cur.sym(":")?;
    let d = assign(cur)?;
    Ok(SExpr::IfEq(Box::new(a), Box::new(b), Box::new(c), Box::new(d)))
}

fn postfix(cur: &mut Cursor) -> Result<SExpr, ParseError> {
    let mut e = atom(cur)?;
    while cur.eat_sym(".") {
        let member = ident(cur)?;
        if cur.eat_sym("(") {
            let arg = seq(cur)?;
            cur.sym(")")?;
            e = SExpr::Call(Box::new(e), member, Box::new(arg));
        } else {
            e = SExpr::Select(Box::new(e), member);
        }
    }
    Ok(e)
}

fn atom(cur: &mut Cursor) -> Result<SExpr, ParseError> {
    if cur.eat_kw("this") {
        Ok(SExpr::This)
    } else if cur.eat_kw("arg") {
        Ok(SExpr::Arg)
    } else if cur.eat_sym("(") {
        let e = seq(cur)?;
        cur.sym(")")?;
        Ok(e)
    } else if is_name(cur.peek()) && !cur.is_kw("exit") {
        Ok(SExpr::Name(name(cur)?))
    } else {
        cur.unexpected("an expression")
    }
}

// Printing.

const SEQ: u8 = 0;
const ASSIGN: u8 = 1;
const COND: u8 = 2;
const POSTFIX: u8 = 3;

struct Printer<'a, 'b> {
    names: &'a mut NameTable,
    class: ClassName,
    /// Receiver class of each call, in pre-order.
    calls: std::slice::Iter<'b, Option<ClassName>>,
}

impl Printer<'_, '_> {
    fn expr(&mut self, e: &Expr, min: u8, out: &mut String) {
        let own = match e {
            Expr::Seq(..) => SEQ,
            Expr::Update(..) | Expr::Exit(_) => ASSIGN,
            Expr::IfEq(..) => COND,
            _ => POSTFIX,
        };
        if own < min {
            out.push('(');
        }
        match e {
            Expr::This => out.push_str("this"),
            Expr::Arg => out.push_str("arg"),
            Expr::Obj(o) => out.push_str(&self.names.object_label(*o)),
            Expr::Select(r, f) => {
                let label = self.names.field_label(self.class, *f);
                self.expr(r, POSTFIX, out);
                let _ = write!(out, ".{label}");
            }
            Expr::Update(r, f, v) => {
                let label = self.names.field_label(self.class, *f);
                self.expr(r, POSTFIX, out);
                let _ = write!(out, ".{label} := ");
                self.expr(v, ASSIGN, out);
            }
            Expr::Call(r, m, a) => {
                let label = match self.calls.next().copied().flatten() {
                    Some(c) => self.names.method_label(c, *m),
                    None => format!("m{}", m.0),
                };
                self.expr(r, POSTFIX, out);
                let _ = write!(out, ".{label}(");
                self.expr(a, SEQ, out);
                out.push(')');
            }
            Expr::IfEq(a, b, c, d) => {
                self.expr(a, POSTFIX, out);
                out.push_str(" == ");
                self.expr(b, POSTFIX, out);
                out.push_str(" ? ");
                self.expr(c, ASSIGN, out);
                out.push_str(" : ");
                self.expr(d, ASSIGN, out);
            }
            Expr::Seq(a, b) => {
                self.expr(a, ASSIGN, out);
                out.push_str("; ");
                self.expr(b, SEQ, out);
            }
            Expr::Exit(a) => {
                out.push_str("exit ");
                self.expr(a, ASSIGN, out);
            }
        }
        if own < min {
            out.push(')');
        }
    }
}

/// Receiver classes of the calls in `e`, in the printer's traversal order.
fn receiver_classes(p: &SourceProgram, c: ClassName, m: MethodIndex, e: &Expr, out: &mut Vec<Option<ClassName>>) {
    match e {
        Expr::This | Expr::Arg | Expr::Obj(_) => {}
        Expr::Select(r, _) | Expr::Exit(r) => receiver_classes(p, c, m, r, out),
        Expr::Update(a, _, b) | Expr::Seq(a, b) => {
            receiver_classes(p, c, m, a, out);
            receiver_classes(p, c, m, b, out);
        }
        Expr::Call(r, _, a) => {
            out.push(match infer_type(p, c, m, r) {
                Ok(Ty::Class(rc)) => Some(rc),
                _ => None,
            });
            receiver_classes(p, c, m, r, out);
            receiver_classes(p, c, m, a, out);
        }
        Expr::IfEq(a, b, x, y) => {
            for s in [a, b, x, y] {
                receiver_classes(p, c, m, s, out);
            }
        }
    }
}

/// Prints `p` in surface syntax. Names missing from `names` are invented
/// and recorded, so parsing the output against the same table gives back
/// `p`.
pub fn print_source(p: &SourceProgram, names: &mut NameTable) -> String {
    let mut out = String::new();
    print_decls(&p.interface.imports, "import", names, &mut out);
    print_decls(&p.interface.exports, "export", names, &mut out);
    for o in p.objects.values() {
        let fields: Vec<String> = o.fields.iter().map(|f| names.object_label(*f)).collect();
        let _ = write!(
            out,
            "obj {} : {} {{",
            names.object_label(o.name),
            names.class_label(o.class)
        );
        if fields.is_empty() {
            out.push_str(" }\n");
        } else {
            let _ = writeln!(out, " {} }}", fields.join(", "));
        }
    }
    for c in p.classes.values() {
        let _ = writeln!(out, "class {} {{", names.class_label(c.name));
        for (i, t) in c.field_types.iter().enumerate() {
            let ty = names.class_label(*t);
            let _ = writeln!(out, "  {ty} {};", names.field_label(c.name, FieldIndex::from_slot(i)));
        }
        for (i, m) in c.methods.iter().enumerate() {
            let mi = MethodIndex::from_slot(i);
            let _ = write!(
                out,
                "  {} {}({}) {{ ",
                names.class_label(m.sig.result),
                names.method_label(c.name, mi),
                names.class_label(m.sig.arg)
            );
            let mut calls = Vec::new();
            receiver_classes(p, c.name, mi, &m.body, &mut calls);
            let mut printer = Printer {
                names,
                class: c.name,
                calls: calls.iter(),
            };
            printer.expr(&m.body, SEQ, &mut out);
            out.push_str(" }\n");
        }
        out.push_str("}\n");
    }
    out
}

fn print_decls(t: &DeclTable, kw: &str, names: &mut NameTable, out: &mut String) {
    for d in t.classes.values() {
        let _ = writeln!(out, "{kw} {}", class_decl_text(d, names));
    }
    for d in t.objects.values() {
        let _ = writeln!(
            out,
            "{kw} obj decl {} : {}",
            names.object_label(d.name),
            names.class_label(d.class)
        );
    }
}

fn class_decl_text(d: &ClassDecl, names: &mut NameTable) -> String {
    let sigs: Vec<String> = d
        .methods
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let m = names.method_label(d.name, MethodIndex::from_slot(i));
            format!("{} {m}({})", names.class_label(s.result), names.class_label(s.arg))
        })
        .collect();
    braced(&format!("class decl {}", names.class_label(d.name)), &sigs)
}

/// Numeric form used by the `.ic` and `.tgt` printers.
pub(crate) fn numeric_class_decl(d: &ClassDecl) -> String {
    let sigs: Vec<String> = d.methods.iter().map(MethodSig::to_string).collect();
    braced(&format!("class decl {}", d.name), &sigs)
}

fn braced(head: &str, items: &[String]) -> String {
    if items.is_empty() {
        format!("{head} {{ }}")
    } else {
        format!("{head} {{ {} }}", items.join(", "))
    }
}
