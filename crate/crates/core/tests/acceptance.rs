//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines show up in plain
//! `cargo test` output. Set `MICROPOL_BLESS=1` to rewrite the golden image.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use micropol_core::harness::attacks::{run_attack_suite, ATTACK_FUEL};
use micropol_core::harness::gen::{generate_batch, GenConfig};
use micropol_core::harness::{run_differential_batch, run_differential_build, run_state, Coverage, TargetRunOptions};
use micropol_core::i2t::{compile_iinstr, cost, DEFAULT_STACK_CAPACITY};
use micropol_core::interm::IInstr;
use micropol_core::loader::{boot_state, dump_image, tag_memory};
use micropol_core::names::{ClassName, FieldIndex, MethodIndex, ObjectName};
use micropol_core::pipeline::{interm_units, link_build_target, target_units};
use micropol_core::policy::{Bless, Entry as EntryTag, MemTag, PcTag, RuleId, ValTag};
use micropol_core::syntax::{load_units, Build, Entry};
use micropol_core::target::{
    BinOp, Cell, Failstop, Imm, Instr, Loc, MachineState, PermitAll, Reg, StepResult, TargetOutcome, Word,
};

const DIFF_BUDGET: Duration = Duration::from_secs(60);
const MIN_GENERATED: usize = 200;
const MIN_DRIVERS: usize = 10;
const GEN_FUEL: u64 = 1_000;
const CORPUS_FUEL: u64 = 1_000_000;
const PROLOGUE: usize = 5;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

struct Driver {
    name: String,
    build: Build,
    expected: String,
}

fn drivers() -> Vec<Driver> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.join("deps").is_file())
        .collect();
    dirs.sort();
    dirs.into_iter()
        .map(|d| {
            let units = load_units(&[&d]).unwrap();
            Driver {
                name: d.file_name().unwrap().to_string_lossy().into_owned(),
                build: Build::new(&units, &Entry::Auto).unwrap(),
                expected: std::fs::read_to_string(d.join("expected")).unwrap().trim().to_string(),
            }
        })
        .collect()
}

/// Expansion lengths, written out independently of the compiler.
fn expected_cost(i: &IInstr) -> usize {
    match i {
        IInstr::Call(..) => 18,
        IInstr::Upd(_) => 7,
        IInstr::Ret | IInstr::Skeq(_) => 6,
        IInstr::Sel(_) => 5,
        IInstr::Ref(_) => 3,
        IInstr::This | IInstr::Arg => 2,
        IInstr::Drop | IInstr::Nop | IInstr::Halt | IInstr::Skip(_) => 1,
    }
}

type Verdict = Result<String, String>;

fn differential(drivers: &[Driver]) -> Verdict {
    let start = Instant::now();
    if drivers.len() < MIN_DRIVERS {
        return Err(format!("only {} corpus drivers", drivers.len()));
    }
    for d in drivers {
        let r = run_differential_build(&d.build, CORPUS_FUEL).map_err(|e| format!("{}: {e}", d.name))?;
        let shown = r.target.named(&d.build.names);
        if !r.agree() || r.excluded() || shown != d.expected {
            return Err(format!("{}: {r} (expected {})", d.name, d.expected));
        }
    }
    let cfg = GenConfig::default();
    let (mut generated, mut compared, mut excluded, mut seed) = (0, 0, 0, 0);
    while compared < MIN_GENERATED {
        let batch = generate_batch(seed, 100, &cfg);
        for r in run_differential_batch(&batch, GEN_FUEL) {
            let r = r.map_err(|e| format!("generated program (seed {seed}): {e}"))?;
            if !r.agree() {
                return Err(format!("generated program (seed {seed}) mismatch: {r}"));
            }
            generated += 1;
            if r.excluded() {
                excluded += 1;
            } else {
                compared += 1;
            }
        }
        seed += 1;
    }
    let took = start.elapsed();
    if took > DIFF_BUDGET {
        return Err(format!("took {took:.1?}, budget {DIFF_BUDGET:?}"));
    }
    Ok(format!(
        "{} drivers and {compared} generated programs agree, 0 mismatches ({excluded} of {generated} generated left out on target stack exhaustion) in {took:.1?}",
        drivers.len()
    ))
}

fn cost_consistency(drivers: &[Driver]) -> Verdict {
    let literal = [
        (IInstr::Call(ClassName(0), MethodIndex(1)), 18),
        (IInstr::Ret, 6),
        (IInstr::Upd(FieldIndex(1)), 7),
    ];
    for (i, n) in &literal {
        let emitted = compile_iinstr(ClassName(0), std::slice::from_ref(i), 0).len();
        if cost(i) != *n || emitted != *n {
            return Err(format!("{i}: table {}, emitted {emitted}, expected {n}", cost(i)));
        }
    }
    let mut methods = 0;
    for d in drivers {
        let ics = interm_units(&d.build).unwrap();
        let tgts = target_units(&d.build, DEFAULT_STACK_CAPACITY).unwrap();
        for (ip, tp) in ics.iter().zip(&tgts) {
            for ic in ip.compartments.values() {
                for (k, m) in ic.methods.iter().enumerate() {
                    let loc = Loc::MethL(ic.class, MethodIndex(k as u32 + 1));
                    let want = PROLOGUE + m.code.iter().map(expected_cost).sum::<usize>();
                    let got = tp.regions[&loc].len();
                    if got != want {
                        return Err(format!("{}: {loc} has {got} cells, expected {want}", d.name));
                    }
                    methods += 1;
                }
            }
        }
    }
    Ok(format!(
        "{methods} compiled methods have length 5 + cost(body); Call = 18, Ret = 6, Upd = 7"
    ))
}

/// Runs every corpus driver at the target level with the strict linearity
/// scan, for the transparency and linearity criteria.
fn corpus_runs(drivers: &[Driver]) -> Vec<(String, Verdict, Coverage, Result<(), String>)> {
    drivers
        .iter()
        .map(|d| {
            let p = link_build_target(&d.build, DEFAULT_STACK_CAPACITY).unwrap();
            let run = run_state(
                boot_state(&p).unwrap(),
                CORPUS_FUEL,
                TargetRunOptions { linearity: Some(true) },
            );
            let shown = match &run.outcome {
                TargetOutcome::Failstop(f) => format!("Failstop {}", f.class()),
                _ => run.observable.named(&d.build.names),
            };
            let verdict = if shown == d.expected {
                Ok(shown)
            } else {
                Err(format!("{}: {shown}", d.name))
            };
            (
                d.name.clone(),
                verdict,
                run.coverage,
                run.linearity.map_err(|v| v.to_string()),
            )
        })
        .collect()
}

fn transparency(runs: &[(String, Verdict, Coverage, Result<(), String>)]) -> Verdict {
    let mut total = Coverage::default();
    for (_, verdict, coverage, _) in runs {
        verdict.clone()?;
        total.merge(coverage);
    }
    let missing = total.missing();
    if !missing.is_empty() {
        let names: Vec<&str> = missing.iter().map(|r| r.name()).collect();
        return Err(format!("rules never fired: {}", names.join(", ")));
    }
    let fewest = RuleId::ALL.iter().map(|r| (total.count(*r), r.name())).min().unwrap();
    Ok(format!(
        "{} corpus runs without fail-stop; all {} policy rules fired (rarest: {} x{})",
        runs.len(),
        RuleId::ALL.len(),
        fewest.1,
        fewest.0
    ))
}

fn attacks() -> Verdict {
    let results = run_attack_suite();
    let mut lines = Vec::new();
    for r in &results {
        if !r.passed() || r.steps > ATTACK_FUEL {
            return Err(r.to_string());
        }
        lines.push(format!("{} {}", r.name, r.observed));
    }
    Ok(format!(
        "{} attacks fail-stop as expected within {ATTACK_FUEL} steps: {}",
        results.len(),
        lines.join(", ")
    ))
}

fn linearity(runs: &[(String, Verdict, Coverage, Result<(), String>)]) -> Verdict {
    for (name, _, _, lin) in runs {
        lin.clone().map_err(|v| format!("{name}: {v}"))?;
    }
    let results = run_attack_suite();
    for r in &results {
        r.linearity.clone().map_err(|v| format!("{}: {v}", r.name))?;
    }
    Ok(format!(
        "scan holds after every step of {} corpus runs (one capability per outstanding depth) and {} attack runs",
        runs.len(),
        results.len()
    ))
}

/// Tags the loader must give, computed from the Bool source directly.
fn check_bool_tags(
    image: &BTreeMap<Loc, Vec<Cell>>,
    bool_class: ClassName,
    unit: ClassName,
    t: ObjectName,
    f: ObjectName,
) -> Result<(), String> {
    // not(Unit), and(Bool), or(Bool), all returning Bool
    let sigs = [(unit, bool_class), (bool_class, bool_class), (bool_class, bool_class)];
    for (k, (arg, res)) in sigs.iter().enumerate() {
        let loc = Loc::MethL(bool_class, MethodIndex(k as u32 + 1));
        let cells = image.get(&loc).ok_or(format!("missing {loc}"))?;
        for (i, c) in cells.iter().enumerate() {
            let entry = if i == 0 {
                EntryTag::EntryPoint(*arg, *res)
            } else {
                EntryTag::NotEntryPoint
            };
            if c.tag.entry != entry || c.tag.compartment != bool_class {
                return Err(format!("{loc}+{i}: {}", c.tag));
            }
            let blessed = match c.word {
                Word::Encoded(Instr::Const(Imm::Ptr(Loc::ObjL(o), 0), _)) if o == t || o == f => {
                    Bless::Blessed(bool_class)
                }
                _ => Bless::NotBlessed,
            };
            if c.tag.bless != blessed {
                return Err(format!("{loc}+{i}: {} is {}", c.word, c.tag.bless));
            }
        }
    }
    for o in [t, f] {
        let cells = &image[&Loc::ObjL(o)];
        if cells.iter().any(|c| c.tag.compartment != bool_class) {
            return Err(format!("object {o} not in compartment {bool_class}"));
        }
    }
    let stack = &image[&Loc::StackL(bool_class)];
    if stack
        .iter()
        .any(|c| c.tag.bless != Bless::NotBlessed || c.tag.entry != EntryTag::NotEntryPoint)
    {
        return Err("stack cells carry code tags".into());
    }
    Ok(())
}

fn loader_golden() -> Verdict {
    let units = load_units(&[root().join("corpus/lib/bool.src")]).unwrap();
    let build = Build::new(&units, &Entry::Auto).unwrap();
    let tp = target_units(&build, 4).unwrap().remove(0);
    let image = tag_memory(&tp);
    let names = &build.names;
    let class = |s| names.lookup_class(s).unwrap();
    let object = |s| names.lookup_object(s).unwrap();
    check_bool_tags(&image, class("Bool"), class("Unit"), object("t"), object("f"))?;

    let dump = format!("{}{}", names.legend(), dump_image(&image));
    let golden = root().join("crates/core/tests/golden/bool_image.txt");
    if std::env::var_os("MICROPOL_BLESS").is_some() {
        std::fs::write(&golden, &dump).unwrap();
    }
    let reviewed = std::fs::read_to_string(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    if let Some((i, (a, b))) = reviewed
        .lines()
        .zip(dump.lines())
        .enumerate()
        .find(|(_, (a, b))| a != b)
    {
        return Err(format!("line {}: golden `{a}`, got `{b}`", i + 1));
    }
    if reviewed.lines().count() != dump.lines().count() {
        return Err(format!(
            "golden has {} lines, image {}",
            reviewed.lines().count(),
            dump.lines().count()
        ));
    }
    Ok(format!(
        "tagged Bool image matches the reviewed dump ({} cells)",
        dump_image(&image).lines().count()
    ))
}

const C: ClassName = ClassName(1);
const CODE: Loc = Loc::MethL(C, MethodIndex(1));

/// A one-compartment machine with `code` at the pc, a data cell at offset
/// 100 of the code region, and registers set as given.
fn machine(code: &[Instr], regs: &[(Reg, Word)]) -> MachineState {
    let tag = MemTag::plain(C);
    let mut cells: Vec<Cell> = code
        .iter()
        .map(|i| Cell {
            word: Word::Encoded(*i),
            tag,
        })
        .collect();
    cells.push(Cell {
        word: Word::Int(7),
        tag,
    });
    cells.push(Cell {
        word: Word::Ptr(CODE, 0),
        tag,
    });
    let mut memory = BTreeMap::new();
    memory.insert(CODE, cells);
    memory.insert(
        Loc::ObjL(ObjectName(1)),
        vec![Cell {
            word: Word::Int(0),
            tag,
        }],
    );
    let mut s = MachineState {
        memory,
        regs: [(Word::Int(0), ValTag::PlainWord); Reg::COUNT],
        pc: (CODE, 0),
        pc_tag: PcTag(0),
    };
    for (r, w) in regs {
        s.regs[r.index()].0 = *w;
    }
    s
}

fn failstop_clauses() -> Verdict {
    let ptr = Word::Ptr(Loc::ObjL(ObjectName(1)), 0);
    let code = Word::Encoded(Instr::Nop);
    let mut fetch_int = machine(&[Instr::Nop], &[]);
    fetch_int.pc = (CODE, 1);
    let mut fetch_ptr = machine(&[Instr::Nop], &[]);
    fetch_ptr.pc = (CODE, 2);
    let add = |a, b| Instr::Binop(BinOp::Add, a, b, Reg::Ret);
    let eq = |a, b| Instr::Binop(BinOp::Eq, a, b, Reg::Ret);
    let (a, b) = (Reg::Aux1, Reg::Aux2);
    let cases: Vec<(&str, MachineState, Failstop)> = vec![
        ("decode Int", fetch_int, Failstop::Decode),
        ("decode Ptr", fetch_ptr, Failstop::Decode),
        (
            "Load from Int",
            machine(&[Instr::Load(a, b)], &[(a, Word::Int(3))]),
            Failstop::BadPointer,
        ),
        (
            "Store to Int",
            machine(&[Instr::Store(a, b)], &[(a, Word::Int(3))]),
            Failstop::BadPointer,
        ),
        (
            "Jump to Int",
            machine(&[Instr::Jump(a)], &[(a, Word::Int(3))]),
            Failstop::BadPointer,
        ),
        (
            "Jal to Int",
            machine(&[Instr::Jal(a)], &[(a, Word::Int(3))]),
            Failstop::BadPointer,
        ),
        (
            "Add Ptr Ptr",
            machine(&[add(a, b)], &[(a, ptr), (b, ptr)]),
            Failstop::PointerArith,
        ),
        (
            "Add Int Ptr",
            machine(&[add(a, b)], &[(a, Word::Int(1)), (b, ptr)]),
            Failstop::PointerArith,
        ),
        (
            "Eq Int Ptr",
            machine(&[eq(a, b)], &[(a, Word::Int(1)), (b, ptr)]),
            Failstop::PointerArith,
        ),
        (
            "Add overflow",
            machine(&[add(a, b)], &[(a, Word::Int(i64::MAX)), (b, Word::Int(1))]),
            Failstop::Overflow,
        ),
        (
            "Mov of code",
            machine(&[Instr::Mov(a, b)], &[(a, code)]),
            Failstop::EncodedOperand,
        ),
        (
            "Load out of range",
            machine(&[Instr::Load(a, b)], &[(a, Word::Ptr(CODE, 99))]),
            Failstop::OutOfRange { loc: CODE, offset: 99 },
        ),
        (
            "Bnz on Ptr",
            machine(&[Instr::Bnz(a, Imm::Int(1))], &[(a, ptr)]),
            Failstop::BnzPointer,
        ),
    ];
    let n = cases.len();
    for (name, mut s, want) in cases {
        let before = s.clone();
        let got = s.step(&PermitAll);
        if got != StepResult::Failstop(want) {
            return Err(format!("{name}: {got:?}"));
        }
        if s != before {
            return Err(format!("{name}: state changed"));
        }
        // Stopped for good: running on takes no further step.
        if s.run(&PermitAll, 10) != (TargetOutcome::Failstop(want), 1) || s != before {
            return Err(format!("{name}: machine moved on"));
        }
    }
    Ok(format!(
        "{n} machine fail-stop clauses stop the machine and leave the state untouched"
    ))
}

fn main() {
    let drivers = drivers();
    let runs = corpus_runs(&drivers);
    let criteria: Vec<(&str, Verdict)> = vec![
        ("differential correctness", differential(&drivers)),
        ("cost consistency", cost_consistency(&drivers)),
        ("transparency", transparency(&runs)),
        ("attack suite", attacks()),
        ("linearity", linearity(&runs)),
        ("loader conformance", loader_golden()),
        ("fail-stop semantics", failstop_clauses()),
    ];
    let mut failed = 0;
    for (k, (name, v)) in criteria.iter().enumerate() {
        match v {
            Ok(msg) => println!("PASS {} {name}: {msg}", k + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {name}: {msg}", k + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
