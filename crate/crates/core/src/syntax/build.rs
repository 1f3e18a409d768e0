//! Turning a set of files into numbered components.
//!
//! Identifiers for classes and objects are numbered in order of first
//! occurrence across the build; numeric names are taken as written. Method
//! and field names are resolved per source unit, against the declarations
//! and definitions visible in that unit.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

use super::surface::{scan_decls, SExpr, SItem, SName, SSig, SurfaceUnit};
use super::{ic, parse_surface, tgt, NameTok, ParseError, Pos};
use crate::interfaces::{ClassDecl, MethodSig, ObjDecl};
use crate::interm::IProgram;
use crate::loader::TargetProgram;
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName, MAIN_CLASS, MAIN_OBJECT};
use crate::source::{ClassDef, Expr, MethodDef, ObjectDef, SourceProgram};

/// Bidirectional map between identifiers and numeric names.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NameTable {
    classes: BTreeMap<String, ClassName>,
    class_names: BTreeMap<ClassName, String>,
    objects: BTreeMap<String, ObjectName>,
    object_names: BTreeMap<ObjectName, String>,
    methods: BTreeMap<ClassName, Vec<String>>,
    fields: BTreeMap<ClassName, Vec<String>>,
}

impl NameTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number for a class reference, allocating one for a new identifier.
    pub fn class(&mut self, tok: &NameTok) -> ClassName {
        match tok {
            NameTok::Num(n) => ClassName(*n),
            NameTok::Ident(s) => {
                if let Some(c) = self.classes.get(s) {
                    return *c;
                }
                let c = ClassName((0..).find(|n| !self.class_names.contains_key(&ClassName(*n))).unwrap());
                self.bind_class(s, c);
                c
            }
        }
    }

    pub fn object(&mut self, tok: &NameTok) -> ObjectName {
        match tok {
            NameTok::Num(n) => ObjectName(*n),
            NameTok::Ident(s) => {
                if let Some(o) = self.objects.get(s) {
                    return *o;
                }
                let o = ObjectName(
                    (0..)
                        .find(|n| !self.object_names.contains_key(&ObjectName(*n)))
                        .unwrap(),
                );
                self.bind_object(s, o);
                o
            }
        }
    }

    pub fn bind_class(&mut self, name: &str, c: ClassName) {
        self.classes.insert(name.to_string(), c);
        self.class_names.insert(c, name.to_string());
    }

    pub fn bind_object(&mut self, name: &str, o: ObjectName) {
        self.objects.insert(name.to_string(), o);
        self.object_names.insert(o, name.to_string());
    }

    pub fn lookup_class(&self, name: &str) -> Option<ClassName> {
        self.classes.get(name).copied()
    }

    pub fn lookup_object(&self, name: &str) -> Option<ObjectName> {
        self.objects.get(name).copied()
    }

    pub fn class_name(&self, c: ClassName) -> Option<&str> {
        self.class_names.get(&c).map(String::as_str)
    }

    pub fn object_name(&self, o: ObjectName) -> Option<&str> {
        self.object_names.get(&o).map(String::as_str)
    }

    pub fn method_name(&self, c: ClassName, m: MethodIndex) -> Option<&str> {
        let slot = m.slot()?;
        self.methods.get(&c)?.get(slot).map(String::as_str)
    }

    pub fn method_index(&self, c: ClassName, name: &str) -> Option<MethodIndex> {
        let slot = self.methods.get(&c)?.iter().position(|m| m == name)?;
        Some(MethodIndex::from_slot(slot))
    }

    pub fn set_methods(&mut self, c: ClassName, names: Vec<String>) {
        self.methods.insert(c, names);
    }

    pub fn set_fields(&mut self, c: ClassName, names: Vec<String>) {
        self.fields.insert(c, names);
    }

    pub fn class_label(&self, c: ClassName) -> String {
        self.class_name(c).map_or_else(|| c.to_string(), str::to_string)
    }

    pub fn object_label(&self, o: ObjectName) -> String {
        self.object_name(o).map_or_else(|| o.to_string(), str::to_string)
    }

    /// Name of method `m`, inventing `m<i>` names for unnamed slots.
    pub fn method_label(&mut self, c: ClassName, m: MethodIndex) -> String {
        label(self.methods.entry(c).or_default(), m.0, "m")
    }

    pub fn field_label(&mut self, c: ClassName, f: FieldIndex) -> String {
        label(self.fields.entry(c).or_default(), f.0, "f")
    }

    /// `Name (n)` when a name is known, else the number.
    pub fn describe_class(&self, c: ClassName) -> String {
        match self.class_name(c) {
            Some(s) => format!("{s} ({c})"),
            None => c.to_string(),
        }
    }

    /// One `// class 3 = Bool` line per named class and object.
    pub fn legend(&self) -> String {
        let mut out = String::new();
        for (c, s) in &self.class_names {
            out.push_str(&format!("// class {c} = {s}\n"));
        }
        for (o, s) in &self.object_names {
            out.push_str(&format!("// object {o} = {s}\n"));
        }
        out
    }
}

impl NameTable {
    /// Binds the names listed by a [`NameTable::legend`] header, skipping
    /// any that are already taken.
    pub fn read_legend(&mut self, text: &str) {
        for line in text.lines() {
            let Some(rest) = line.trim().strip_prefix("//") else {
                continue;
            };
            let mut words = rest.split_whitespace();
            let (Some(kind), Some(n), Some("="), Some(name), None) =
                (words.next(), words.next(), words.next(), words.next(), words.next())
            else {
                continue;
            };
            let Ok(n) = n.parse::<u32>() else { continue };
            match kind {
                "class" if !self.classes.contains_key(name) && !self.class_names.contains_key(&ClassName(n)) => {
                    self.bind_class(name, ClassName(n))
                }
                "object" if !self.objects.contains_key(name) && !self.object_names.contains_key(&ObjectName(n)) => {
                    self.bind_object(name, ObjectName(n))
                }
                _ => {}
            }
        }
    }
}

fn label(names: &mut Vec<String>, index: u32, prefix: &str) -> String {
    let Some(slot) = (index as usize).checked_sub(1) else {
        return format!("{prefix}{index}");
    };
    while names.len() <= slot {
        let mut k = names.len() + 1;
        while names.contains(&format!("{prefix}{k}")) {
            k += 1000;
        }
        names.push(format!("{prefix}{k}"));
    }
    names[slot].clone()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnitKind {
    Source,
    Interm,
    Target,
}

impl UnitKind {
    pub fn from_path(path: &Path) -> Option<UnitKind> {
        match path.extension()?.to_str()? {
            "src" => Some(UnitKind::Source),
            "ic" => Some(UnitKind::Interm),
            "tgt" => Some(UnitKind::Target),
            _ => None,
        }
    }
}

/// One input file.
#[derive(Clone, Debug)]
pub struct Unit {
    pub path: String,
    pub kind: UnitKind,
    pub text: String,
}

/// Which method starts the program.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Entry {
    /// The unique class defining a method named `main`, if any, with the
    /// first object of that class.
    #[default]
    Auto,
    Explicit {
        class: String,
        method: String,
        object: String,
    },
}

impl Entry {
    /// From `Class.method` and an object name.
    pub fn parse(method: &str, object: &str) -> Result<Entry, String> {
        let (class, m) = method
            .split_once('.')
            .ok_or_else(|| format!("entry `{method}` should have the form Class.method"))?;
        Ok(Entry::Explicit {
            class: class.to_string(),
            method: m.to_string(),
            object: object.to_string(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{path}{}: {msg}", pos.map(|p| format!(":{p}")).unwrap_or_default())]
pub struct BuildError {
    pub path: String,
    pub pos: Option<Pos>,
    pub msg: String,
}

impl BuildError {
    fn at(path: &str, pos: Pos, msg: impl Into<String>) -> Self {
        BuildError {
            path: path.to_string(),
            pos: Some(pos),
            msg: msg.into(),
        }
    }

    fn parse(path: &str, e: ParseError) -> Self {
        Self::at(path, e.pos, e.msg)
    }

    fn general(msg: impl Into<String>) -> Self {
        BuildError {
            path: "<build>".into(),
            pos: None,
            msg: msg.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Component {
    Source(SourceProgram),
    Interm(IProgram),
    Target(TargetProgram),
}

/// Every unit of a build, numbered consistently.
#[derive(Clone, Debug)]
pub struct Build {
    pub names: NameTable,
    pub components: Vec<(String, Component)>,
}

/// Method names per class as written, for resolving symbolic method
/// references in `.ic` and `.tgt` files.
pub(crate) type MethodNames = BTreeMap<NameTok, Vec<String>>;

pub(crate) struct Resolver<'a> {
    pub names: &'a mut NameTable,
    pub methods: &'a MethodNames,
}

impl Resolver<'_> {
    pub fn class(&mut self, t: &NameTok) -> ClassName {
        self.names.class(t)
    }

    pub fn object(&mut self, t: &NameTok) -> ObjectName {
        self.names.object(t)
    }

    pub fn method(&self, class: &NameTok, m: &NameTok, pos: Pos) -> Result<MethodIndex, ParseError> {
        match m {
            NameTok::Num(0) => Err(ParseError::new(pos, "method indices start at 1")),
            NameTok::Num(n) => Ok(MethodIndex(*n)),
            NameTok::Ident(s) => self
                .methods
                .get(class)
                .and_then(|ms| ms.iter().position(|x| x == s))
                .map(MethodIndex::from_slot)
                .ok_or_else(|| ParseError::new(pos, format!("unknown method `{s}` of class `{class}`"))),
        }
    }
}

pub(crate) fn collect_method_names(items: &[SItem], out: &mut MethodNames) {
    for item in items {
        let (class, names): (&SName, Vec<String>) = match item {
            SItem::ClassDecl { name, methods, .. } => (
                name,
                methods
                    .iter()
                    .filter_map(|s| s.name.as_ref().map(|n| n.text.clone()))
                    .collect(),
            ),
            SItem::Class(c) => (
                &c.name,
                c.methods
                    .iter()
                    .filter_map(|m| m.sig.name.as_ref().map(|n| n.text.clone()))
                    .collect(),
            ),
            _ => continue,
        };
        if !names.is_empty() {
            out.entry(class.tok.clone()).or_insert(names);
        }
    }
}

enum Parsed {
    Source(SurfaceUnit),
    Other(Vec<SItem>),
}

impl Build {
    /// Parses and resolves `units` in order.
    pub fn new(units: &[Unit], entry: &Entry) -> Result<Build, Vec<BuildError>> {
        Self::with_names(units, entry, NameTable::new())
    }

    /// As [`Build::new`], starting from a pre-seeded name table.
    pub fn with_names(units: &[Unit], entry: &Entry, mut names: NameTable) -> Result<Build, Vec<BuildError>> {
        let mut errors = Vec::new();
        let mut parsed = Vec::new();
        for u in units {
            let r = match u.kind {
                UnitKind::Source => parse_surface(&u.text).map(Parsed::Source),
                _ => scan_decls(&u.text).map(Parsed::Other),
            };
            match r {
                Ok(p) => parsed.push(p),
                Err(e) => errors.push(BuildError::parse(&u.path, e)),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        for u in units.iter().filter(|u| u.kind != UnitKind::Source) {
            names.read_legend(&u.text);
        }

        if let Some((class, method, object)) = select_entry(&parsed, entry).map_err(|e| vec![e])? {
            for p in &mut parsed {
                let items = match p {
                    Parsed::Source(s) => &mut s.items,
                    Parsed::Other(items) => items,
                };
                move_entry_first(items, &class, &method);
            }
            names.bind_class(&class, MAIN_CLASS);
            names.bind_object(&object, MAIN_OBJECT);
        }

        let mut methods = MethodNames::new();
        for p in &parsed {
            match p {
                Parsed::Source(s) => collect_method_names(&s.items, &mut methods),
                Parsed::Other(items) => collect_method_names(items, &mut methods),
            }
        }

        let mut components = Vec::new();
        for (u, p) in units.iter().zip(&parsed) {
            let mut r = Resolver {
                names: &mut names,
                methods: &methods,
            };
            let c = match (u.kind, p) {
                (UnitKind::Source, Parsed::Source(s)) => {
                    number_surface(s, r.names);
                    None
                }
                (UnitKind::Interm, _) => Some(ic::parse_ic_with(&u.text, &mut r).map(Component::Interm)),
                (UnitKind::Target, _) => Some(tgt::parse_tgt_with(&u.text, &mut r).map(Component::Target)),
                _ => unreachable!("source units parse to surface units"),
            };
            match c {
                Some(Ok(c)) => components.push(Some(c)),
                Some(Err(e)) => errors.push(BuildError::parse(&u.path, e)),
                None => components.push(None),
            }
        }
        if !errors.is_empty() {
            return Err(errors);
        }

        for (tok, ms) in &methods {
            let c = names.class(tok);
            names.set_methods(c, ms.clone());
        }
        let mut out = Vec::new();
        for ((u, p), c) in units.iter().zip(&parsed).zip(components) {
            let c = match (c, p) {
                (Some(c), _) => c,
                (None, Parsed::Source(s)) => match resolve_surface(s, &mut names) {
                    Ok(p) => Component::Source(p),
                    Err(es) => {
                        errors.extend(es.into_iter().map(|(pos, msg)| BuildError::at(&u.path, pos, msg)));
                        continue;
                    }
                },
                (None, Parsed::Other(_)) => unreachable!(),
            };
            out.push((u.path.clone(), c));
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(Build { names, components: out })
    }

    pub fn sources(&self) -> impl Iterator<Item = &SourceProgram> {
        self.components.iter().filter_map(|(_, c)| match c {
            Component::Source(p) => Some(p),
            _ => None,
        })
    }
}

fn select_entry(parsed: &[Parsed], entry: &Entry) -> Result<Option<(String, String, String)>, BuildError> {
    let items = || {
        parsed.iter().flat_map(|p| match p {
            Parsed::Source(s) => s.items.iter(),
            Parsed::Other(items) => items.iter(),
        })
    };
    let ident = |n: &SName| match &n.tok {
        NameTok::Ident(s) => Some(s.clone()),
        NameTok::Num(_) => None,
    };
    let first_object = |class: &str| {
        items().find_map(|i| match i {
            SItem::Obj(o) if ident(&o.class).as_deref() == Some(class) => ident(&o.name),
            SItem::ObjDecl {
                import: false,
                names,
                class: c,
            } if ident(c).as_deref() == Some(class) => names.first().and_then(ident),
            _ => None,
        })
    };
    match entry {
        Entry::Explicit { class, method, object } => {
            let named = |s: &SSig| s.name.as_ref().is_some_and(|n| &n.text == method);
            let defined = items().any(|i| match i {
                SItem::Class(c) => ident(&c.name).as_ref() == Some(class) && c.methods.iter().any(|m| named(&m.sig)),
                SItem::ClassDecl {
                    import: false,
                    name,
                    methods,
                } => ident(name).as_ref() == Some(class) && methods.iter().any(named),
                _ => false,
            });
            if !defined {
                return Err(BuildError::general(format!("entry `{class}.{method}` is not defined")));
            }
            Ok(Some((class.clone(), method.clone(), object.clone())))
        }
        Entry::Auto => {
            let is_main = |s: &SSig| s.name.as_ref().is_some_and(|n| n.text == "main");
            let mut found: Vec<String> = Vec::new();
            for item in items() {
                let class = match item {
                    SItem::Class(c) if c.methods.iter().any(|m| is_main(&m.sig)) => ident(&c.name),
                    SItem::ClassDecl {
                        import: false,
                        name,
                        methods,
                    } if methods.iter().any(is_main) => ident(name),
                    _ => None,
                };
                if let Some(c) = class {
                    if !found.contains(&c) {
                        found.push(c);
                    }
                }
            }
            match found.as_slice() {
                [] => Ok(None),
                [class] => {
                    let object = first_object(class)
                        .ok_or_else(|| BuildError::general(format!("no object of entry class `{class}`")))?;
                    Ok(Some((class.clone(), "main".into(), object)))
                }
                many => Err(BuildError::general(format!(
                    "several classes define `main` ({}); choose one with --entry",
                    many.join(", ")
                ))),
            }
        }
    }
}

fn move_entry_first(items: &mut [SItem], class: &str, method: &str) {
    let is_class = |n: &SName| n.tok == NameTok::Ident(class.to_string());
    let named = |s: &SSig| s.name.as_ref().is_some_and(|n| n.text == method);
    for item in items {
        match item {
            SItem::ClassDecl { name, methods, .. } if is_class(name) => {
                if let Some(i) = methods.iter().position(named) {
                    let m = methods.remove(i);
                    methods.insert(0, m);
                }
            }
            SItem::Class(c) if is_class(&c.name) => {
                if let Some(i) = c.methods.iter().position(|m| named(&m.sig)) {
                    let m = c.methods.remove(i);
                    c.methods.insert(0, m);
                }
            }
            _ => {}
        }
    }
}

/// Allocates numbers for the unit's class and object identifiers in
/// textual order.
fn number_surface(u: &SurfaceUnit, names: &mut NameTable) {
    fn sig(s: &SSig, names: &mut NameTable) {
        names.class(&s.result.tok);
        names.class(&s.arg.tok);
    }
    fn expr(e: &SExpr, param: Option<&str>, names: &mut NameTable) {
        match e {
            SExpr::This | SExpr::Arg => {}
            SExpr::Name(n) => {
                if !matches!(&n.tok, NameTok::Ident(s) if Some(s.as_str()) == param) {
                    names.object(&n.tok);
                }
            }
            SExpr::Select(a, _) | SExpr::Exit(a) => expr(a, param, names),
            SExpr::Update(a, _, b) | SExpr::Call(a, _, b) | SExpr::Seq(a, b) => {
                expr(a, param, names);
                expr(b, param, names);
            }
            SExpr::IfEq(a, b, c, d) => {
                for x in [a, b, c, d] {
                    expr(x, param, names);
                }
            }
        }
    }
    for item in &u.items {
        match item {
            SItem::ClassDecl { name, methods, .. } => {
                names.class(&name.tok);
                methods.iter().for_each(|s| sig(s, names));
            }
            SItem::ObjDecl { names: objs, class, .. } => {
                objs.iter().for_each(|o| {
                    names.object(&o.tok);
                });
                names.class(&class.tok);
            }
            SItem::Obj(o) => {
                names.object(&o.name.tok);
                names.class(&o.class.tok);
                o.fields.iter().for_each(|f| {
                    names.object(&f.tok);
                });
            }
            SItem::Class(c) => {
                names.class(&c.name.tok);
                for (t, _) in &c.fields {
                    names.class(&t.tok);
                }
                for m in &c.methods {
                    sig(&m.sig, names);
                    expr(&m.body, m.sig.param.as_deref(), names);
                }
            }
        }
    }
}

struct ClassView {
    methods: Vec<(String, NameTok)>,
    fields: Option<Vec<(String, NameTok)>>,
}

type Errors = Vec<(Pos, String)>;

struct UnitView {
    classes: BTreeMap<NameTok, ClassView>,
    objects: BTreeMap<NameTok, NameTok>,
}

impl UnitView {
    fn new(u: &SurfaceUnit) -> Self {
        let mut classes: BTreeMap<NameTok, ClassView> = BTreeMap::new();
        let mut objects = BTreeMap::new();
        let named = |sigs: &mut dyn Iterator<Item = &SSig>| -> Vec<(String, NameTok)> {
            sigs.enumerate()
                .map(|(i, s)| {
                    let n = s
                        .name
                        .as_ref()
                        .map_or_else(|| format!("m{}", i + 1), |n| n.text.clone());
                    (n, s.result.tok.clone())
                })
                .collect()
        };
        for item in &u.items {
            match item {
                SItem::Class(c) => {
                    let methods = named(&mut c.methods.iter().map(|m| &m.sig));
                    let fields = c.fields.iter().map(|(t, f)| (f.text.clone(), t.tok.clone())).collect();
                    classes.insert(
                        c.name.tok.clone(),
                        ClassView {
                            methods,
                            fields: Some(fields),
                        },
                    );
                }
                SItem::ClassDecl { name, methods, .. } => {
                    classes.entry(name.tok.clone()).or_insert_with(|| ClassView {
                        methods: named(&mut methods.iter()),
                        fields: None,
                    });
                }
                SItem::Obj(o) => {
                    objects.insert(o.name.tok.clone(), o.class.tok.clone());
                }
                SItem::ObjDecl { names, class, .. } => {
                    for n in names {
                        objects.entry(n.tok.clone()).or_insert_with(|| class.tok.clone());
                    }
                }
            }
        }
        UnitView { classes, objects }
    }
}

struct MethodCtx<'a> {
    view: &'a UnitView,
    names: &'a mut NameTable,
    class: &'a NameTok,
    arg: &'a NameTok,
    param: Option<&'a str>,
}

impl MethodCtx<'_> {
    /// The resolved expression and its class as written; `None` for an
    /// expression that exits.
    fn expr(&mut self, e: &SExpr) -> Result<(Expr, Option<NameTok>), (Pos, String)> {
        Ok(match e {
            SExpr::This => (Expr::This, Some(self.class.clone())),
            SExpr::Arg => (Expr::Arg, Some(self.arg.clone())),
            SExpr::Name(n) => {
                if matches!(&n.tok, NameTok::Ident(s) if Some(s.as_str()) == self.param) {
                    return Ok((Expr::Arg, Some(self.arg.clone())));
                }
                let class = self
                    .view
                    .objects
                    .get(&n.tok)
                    .ok_or_else(|| (n.pos, format!("unknown object `{}`", n.tok)))?;
                (Expr::Obj(self.names.object(&n.tok)), Some(class.clone()))
            }
            SExpr::Select(r, f) => {
                let (r, _) = self.expr(r)?;
                let (i, t) = self.field(f)?;
                (Expr::Select(Box::new(r), i), Some(t))
            }
            SExpr::Update(r, f, v) => {
                let (r, _) = self.expr(r)?;
                let (i, t) = self.field(f)?;
                let (v, _) = self.expr(v)?;
                (Expr::Update(Box::new(r), i, Box::new(v)), Some(t))
            }
            SExpr::Call(r, m, a) => {
                let (re, rt) = self.expr(r)?;
                let rt = rt.ok_or_else(|| (m.pos, format!("receiver of `{}` never returns", m.text)))?;
                let cv = self
                    .view
                    .classes
                    .get(&rt)
                    .ok_or_else(|| (m.pos, format!("class `{rt}` is not declared here")))?;
                let (slot, result) = cv
                    .methods
                    .iter()
                    .enumerate()
                    .find(|(_, (n, _))| *n == m.text)
                    .map(|(i, (_, t))| (i, t.clone()))
                    .ok_or_else(|| (m.pos, format!("class `{rt}` has no method `{}`", m.text)))?;
                let (ae, _) = self.expr(a)?;
                (
                    Expr::Call(Box::new(re), MethodIndex::from_slot(slot), Box::new(ae)),
                    Some(result),
                )
            }
            SExpr::IfEq(a, b, c, d) => {
                let (a, _) = self.expr(a)?;
                let (b, _) = self.expr(b)?;
                let (c, tc) = self.expr(c)?;
                let (d, td) = self.expr(d)?;
                (
                    Expr::IfEq(Box::new(a), Box::new(b), Box::new(c), Box::new(d)),
                    tc.or(td),
                )
            }
            SExpr::Seq(a, b) => {
                let (a, _) = self.expr(a)?;
                let (b, t) = self.expr(b)?;
                (Expr::Seq(Box::new(a), Box::new(b)), t)
            }
            SExpr::Exit(a) => (Expr::Exit(Box::new(self.expr(a)?.0)), None),
        })
    }

    fn field(&self, f: &super::surface::SIdent) -> Result<(FieldIndex, NameTok), (Pos, String)> {
        let fields = self.view.classes.get(self.class).and_then(|c| c.fields.as_ref());
        fields
            .and_then(|fs| {
                fs.iter()
                    .position(|(n, _)| *n == f.text)
                    .map(|i| (FieldIndex::from_slot(i), fs[i].1.clone()))
            })
            .ok_or_else(|| (f.pos, format!("class `{}` has no field `{}`", self.class, f.text)))
    }
}

fn resolve_sig(s: &SSig, names: &mut NameTable) -> MethodSig {
    MethodSig {
        arg: names.class(&s.arg.tok),
        result: names.class(&s.result.tok),
    }
}

/// Resolves a numbered surface unit to a source component.
pub(crate) fn resolve_surface(u: &SurfaceUnit, names: &mut NameTable) -> Result<SourceProgram, Errors> {
    let view = UnitView::new(u);
    let mut p = SourceProgram::default();
    let mut errors = Vec::new();
    for item in &u.items {
        match item {
            SItem::ClassDecl { import, name, methods } => {
                let decl = ClassDecl {
                    name: names.class(&name.tok),
                    methods: methods.iter().map(|s| resolve_sig(s, names)).collect(),
                };
                let table = if *import {
                    &mut p.interface.imports
                } else {
                    &mut p.interface.exports
                };
                if table.add_class(decl).is_some() {
                    errors.push((name.pos, format!("class `{}` declared twice", name.tok)));
                }
            }
            SItem::ObjDecl {
                import,
                names: objs,
                class,
            } => {
                let class = names.class(&class.tok);
                for o in objs {
                    let decl = ObjDecl {
                        name: names.object(&o.tok),
                        class,
                    };
                    let table = if *import {
                        &mut p.interface.imports
                    } else {
                        &mut p.interface.exports
                    };
                    if table.add_object(decl).is_some() {
                        errors.push((o.pos, format!("object `{}` declared twice", o.tok)));
                    }
                }
            }
            SItem::Obj(o) => {
                let def = ObjectDef {
                    name: names.object(&o.name.tok),
                    class: names.class(&o.class.tok),
                    fields: o.fields.iter().map(|f| names.object(&f.tok)).collect(),
                };
                if p.objects.insert(def.name, def).is_some() {
                    errors.push((o.name.pos, format!("object `{}` defined twice", o.name.tok)));
                }
            }
            SItem::Class(c) => {
                let class = names.class(&c.name.tok);
                let mut methods = Vec::new();
                for m in &c.methods {
                    let mut ctx = MethodCtx {
                        view: &view,
                        names,
                        class: &c.name.tok,
                        arg: &m.sig.arg.tok,
                        param: m.sig.param.as_deref(),
                    };
                    match ctx.expr(&m.body) {
                        Ok((body, _)) => methods.push(MethodDef {
                            sig: resolve_sig(&m.sig, names),
                            body,
                        }),
                        Err(e) => errors.push(e),
                    }
                }
                names.set_fields(class, c.fields.iter().map(|(_, f)| f.text.clone()).collect());
                let def = ClassDef {
                    name: class,
                    field_types: c.fields.iter().map(|(t, _)| names.class(&t.tok)).collect(),
                    methods,
                };
                if p.classes.insert(class, def).is_some() {
                    errors.push((c.name.pos, format!("class `{}` defined twice", c.name.tok)));
                }
            }
        }
    }
    if errors.is_empty() {
        Ok(p)
    } else {
        Err(errors)
    }
}

/// Parses and resolves one source unit against `names`, allocating
/// numbers for new identifiers.
pub fn parse_source(text: &str, names: &mut NameTable) -> Result<SourceProgram, Vec<ParseError>> {
    let u = parse_surface(text).map_err(|e| vec![e])?;
    number_surface(&u, names);
    resolve_surface(&u, names).map_err(|es| es.into_iter().map(|(pos, msg)| ParseError::new(pos, msg)).collect())
}
