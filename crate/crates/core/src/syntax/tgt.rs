//! The `.tgt` format for target components: interface declarations and
//! one block per memory region, one cell per line.
//!
//! ```text
//! export class decl 2 { 2(1) }
//! region methl 2 1 {
//!   Const 1 r_one
//!   Const stackl 2+0 r_spp
//!   ...
//! }
//! region objl 3 { objl 4+0 }
//! region stackl 2 {
//!   stackl 2+0
//!   .fill 1024 0
//! }
//! ```
//!
//! A cell is an instruction, an integer, or a pointer `loc+offset`.
//! `.fill n w` repeats a word.

use std::fmt::Write as _;

use super::build::{collect_method_names, MethodNames, Resolver};
use super::ic::{add_decl, print_decl_table};
use super::surface::{decl, scan_decls};
use super::{Cursor, NameTable, ParseError, Tok};
use crate::loader::TargetProgram;
use crate::target::{BinOp, Imm, Instr, Loc, Reg, Word};

/// Runs of identical data words at least this long print as `.fill`.
const FILL_THRESHOLD: usize = 4;

fn reg(cur: &mut Cursor) -> Result<Reg, ParseError> {
    let (s, pos) = cur.ident()?;
    // `rt` is accepted as a short form of the target register.
    let s = if s == "rt" { "r_tgt".to_string() } else { s };
    Reg::from_name(&s).ok_or_else(|| ParseError::new(pos, format!("unknown register `{s}`")))
}

fn loc(cur: &mut Cursor, r: &mut Resolver) -> Result<Option<Loc>, ParseError> {
    let l = if cur.eat_kw("methl") {
        let (ct, _) = cur.name()?;
        let (mt, mpos) = cur.name()?;
        let m = r.method(&ct, &mt, mpos)?;
        Loc::MethL(r.class(&ct), m)
    } else if cur.eat_kw("objl") {
        Loc::ObjL(r.object(&cur.name()?.0))
    } else if cur.eat_kw("stackl") {
        Loc::StackL(r.class(&cur.name()?.0))
    } else if cur.eat_kw("boot") {
        Loc::Boot
    } else {
        return Ok(None);
    };
    Ok(Some(l))
}

fn imm(cur: &mut Cursor, r: &mut Resolver) -> Result<Imm, ParseError> {
    match loc(cur, r)? {
        Some(l) => {
            let off = if cur.eat_sym("+") { cur.int()? } else { 0 };
            Ok(Imm::Ptr(l, off))
        }
        None => match cur.peek() {
            Tok::Int(_) => Ok(Imm::Int(cur.int()?)),
            _ => cur.unexpected("an integer or a pointer"),
        },
    }
}

fn instr(op: &str, cur: &mut Cursor, r: &mut Resolver) -> Result<Option<Instr>, ParseError> {
    Ok(Some(match op {
        "Nop" => Instr::Nop,
        "Halt" => Instr::Halt,
        "Const" => {
            let i = imm(cur, r)?;
            Instr::Const(i, reg(cur)?)
        }
        "Mov" => Instr::Mov(reg(cur)?, reg(cur)?),
        "Load" => Instr::Load(reg(cur)?, reg(cur)?),
        "Store" => Instr::Store(reg(cur)?, reg(cur)?),
        "Add" | "Sub" | "Eq" => {
            let op = match op {
                "Add" => BinOp::Add,
                "Sub" => BinOp::Sub,
                _ => BinOp::Eq,
            };
            Instr::Binop(op, reg(cur)?, reg(cur)?, reg(cur)?)
        }
        "Jump" => Instr::Jump(reg(cur)?),
        "Jal" => Instr::Jal(reg(cur)?),
        "Bnz" => {
            let c = reg(cur)?;
            Instr::Bnz(c, imm(cur, r)?)
        }
        _ => return Ok(None),
    }))
}

fn cells(cur: &mut Cursor, r: &mut Resolver) -> Result<Vec<Word>, ParseError> {
    cur.sym("{")?;
    let mut out = Vec::new();
    while !cur.eat_sym("}") {
        if cur.eat_sym(".") {
            let pos = cur.pos();
            cur.kw("fill")?;
            let n = cur.int()?;
            let n = usize::try_from(n).map_err(|_| ParseError::new(pos, "negative fill count"))?;
            let w = Word::from(imm(cur, r)?);
            out.extend(std::iter::repeat_n(w, n));
            continue;
        }
        if let Tok::Ident(op) = cur.peek().clone() {
            if op.starts_with(|c: char| c.is_ascii_uppercase()) {
                let pos = cur.pos();
                cur.next();
                match instr(&op, cur, r)? {
                    Some(i) => out.push(Word::Encoded(i)),
                    None => return Err(ParseError::new(pos, format!("unknown instruction `{op}`"))),
                }
                continue;
            }
        }
        out.push(Word::from(imm(cur, r)?));
    }
    Ok(out)
}

pub(crate) fn parse_tgt_with(text: &str, r: &mut Resolver) -> Result<TargetProgram, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut p = TargetProgram::default();
    while !cur.at_eof() {
        if cur.is_kw("export") || cur.is_kw("import") {
            let import = cur.is_kw("import");
            cur.next();
            let item = decl(&mut cur, import)?;
            add_decl(item, &mut p.interface, r, &cur)?;
        } else if cur.eat_kw("region") {
            let pos = cur.pos();
            let Some(l) = loc(&mut cur, r)? else {
                return cur.unexpected("a region location");
            };
            let contents = cells(&mut cur, r)?;
            if p.regions.insert(l, contents).is_some() {
                return Err(ParseError::new(pos, format!("region {l} defined twice")));
            }
        } else {
            return cur.unexpected("`region`, `export` or `import`");
        }
    }
    Ok(p)
}

/// Parses a standalone `.tgt` file. Symbolic method names resolve against
/// the file's own declarations.
pub fn parse_tgt(text: &str, names: &mut NameTable) -> Result<TargetProgram, ParseError> {
    let mut methods = MethodNames::new();
    collect_method_names(&scan_decls(text)?, &mut methods);
    parse_tgt_with(
        text,
        &mut Resolver {
            names,
            methods: &methods,
        },
    )
}

/// Prints `p` with numeric names; `legend` prepends the table's names as
/// comments.
pub fn print_tgt(p: &TargetProgram, legend: Option<&NameTable>) -> String {
    let mut out = legend.map(NameTable::legend).unwrap_or_default();
    print_decl_table(&p.interface.imports, "import", &mut out);
    print_decl_table(&p.interface.exports, "export", &mut out);
    for (l, words) in &p.regions {
        let _ = writeln!(out, "region {l} {{");
        let mut i = 0;
        while i < words.len() {
            let w = words[i];
            let run = words[i..].iter().take_while(|x| **x == w).count();
            if run >= FILL_THRESHOLD && !matches!(w, Word::Encoded(_)) {
                let _ = writeln!(out, "  .fill {run} {w}");
                i += run;
            } else {
                let _ = writeln!(out, "  {w}");
                i += 1;
            }
        }
        out.push_str("}\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::{ClassName, MethodIndex, ObjectName};

    #[test]
    fn parses_cells_and_fill() {
        let text = "
            export class decl Evil { Evil go(Evil) }
            region methl Evil go {
              Const objl two+1 r_aux1
              Load r_aux1 r_aux2
              Bnz r_one 3
              Add r_sp r_one r_sp
              Jal rt
              Halt
            }
            region stackl Evil { stackl Evil+0 .fill 3 0 methl Evil go+2 -5 }";
        let mut names = NameTable::new();
        let p = parse_tgt(text, &mut names).unwrap();
        let evil = names.lookup_class("Evil").unwrap();
        let two = names.lookup_object("two").unwrap();
        let code = &p.regions[&Loc::MethL(evil, MethodIndex(1))];
        assert_eq!(
            code[0],
            Word::Encoded(Instr::Const(Imm::Ptr(Loc::ObjL(two), 1), Reg::Aux1))
        );
        assert_eq!(code[2], Word::Encoded(Instr::Bnz(Reg::One, Imm::Int(3))));
        assert_eq!(code[4], Word::Encoded(Instr::Jal(Reg::Tgt)));
        let stack = &p.regions[&Loc::StackL(evil)];
        assert_eq!(stack.len(), 6);
        assert_eq!(stack[4], Word::Ptr(Loc::MethL(evil, MethodIndex(1)), 2));
        assert_eq!(stack[5], Word::Int(-5));
    }

    #[test]
    fn print_then_parse_is_identity() {
        let mut p = TargetProgram::default();
        p.regions.insert(
            Loc::MethL(ClassName(1), MethodIndex(2)),
            vec![
                Word::Encoded(Instr::Const(Imm::Ptr(Loc::Boot, 4), Reg::A)),
                Word::Encoded(Instr::Binop(BinOp::Eq, Reg::A, Reg::Tgt, Reg::Ret)),
                Word::Encoded(Instr::Nop),
                Word::Encoded(Instr::Nop),
                Word::Encoded(Instr::Nop),
                Word::Encoded(Instr::Nop),
            ],
        );
        let mut stack = vec![Word::Ptr(Loc::StackL(ClassName(1)), 0)];
        stack.extend(std::iter::repeat_n(Word::Int(0), 10));
        stack.push(Word::Ptr(Loc::ObjL(ObjectName(9)), -1));
        p.regions.insert(Loc::StackL(ClassName(1)), stack);
        let printed = print_tgt(&p, None);
        assert!(printed.contains(".fill 10 0"), "{printed}");
        assert_eq!(parse_tgt(&printed, &mut NameTable::new()).unwrap(), p);
    }

    #[test]
    fn unknown_register_is_an_error() {
        let err = parse_tgt("region boot { Jump r_zz }", &mut NameTable::new()).unwrap_err();
        assert!(err.msg.contains("r_zz"));
    }
}
