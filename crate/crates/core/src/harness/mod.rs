//! Differential testing across the three levels, the capability linearity
//! scanner, rule coverage, random program generation and the attack suite.

pub mod attacks;
pub mod gen;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::i2t::{compile_iprogram, DEFAULT_STACK_CAPACITY};
use crate::interm::{iload, ILoadError, IOutcome, IProgram};
use crate::loader::{boot_state, halted_result, LoadError, TargetProgram};
use crate::names::ObjectName;
use crate::pipeline::{link_build_interm, link_build_source, link_build_target, PipelineError};
use crate::policy::{MicroPolicy, RuleId, ValTag};
use crate::s2i::compile_program;
use crate::source::{init_config, run_config, InitError, SourceOutcome, SourceProgram, TypeError};
use crate::syntax::Build;
use crate::target::{Failstop, Instr, Loc, MachineState, Reg, StepResult, TargetOutcome, Word};

/// Fuel multiplier for the intermediate level relative to the source level.
pub const IC_FUEL_FACTOR: u64 = 2;
/// Fuel multiplier for the target level relative to the source level.
pub const TGT_FUEL_FACTOR: u64 = 40;
/// How much more fuel a level gets when it alone ran out.
const RETRY_FACTOR: u64 = 20;

/// Compiles a source program down to the target level.
pub fn compile_to_target(p: &SourceProgram, stack_capacity: usize) -> Result<TargetProgram, Vec<TypeError>> {
    Ok(compile_iprogram(&compile_program(p)?, stack_capacity))
}

/// What an outside observer sees of a run.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Terminated(ObjectName),
    /// The machine halted without an object reference as its result.
    HaltedNoResult,
    Failstop(String),
    OutOfFuel,
    /// A compartment stack overflowed its region.
    ResourceExhaustion,
}

impl Observable {
    /// Agreement up to the reason of a fail-stop; resource exhaustion agrees
    /// with everything.
    pub fn agrees_with(&self, other: &Observable) -> bool {
        use Observable::*;
        match (self, other) {
            (ResourceExhaustion, _) | (_, ResourceExhaustion) => true,
            (Failstop(_), Failstop(_)) => true,
            (a, b) => a == b,
        }
    }
}

impl Observable {
    /// As `Display`, with the result object written by name when known.
    pub fn named(&self, names: &crate::syntax::NameTable) -> String {
        match self {
            Observable::Terminated(o) => format!("Terminated {}", names.object_label(*o)),
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::Terminated(o) => write!(f, "Terminated {o}"),
            Observable::HaltedNoResult => write!(f, "Halted"),
            Observable::Failstop(r) => write!(f, "Failstop {r}"),
            Observable::OutOfFuel => write!(f, "OutOfFuel"),
            Observable::ResourceExhaustion => write!(f, "ResourceExhaustion"),
        }
    }
}

impl From<SourceOutcome> for Observable {
    fn from(o: SourceOutcome) -> Self {
        match o {
            SourceOutcome::Terminated(v) => Observable::Terminated(v),
            SourceOutcome::OutOfFuel => Observable::OutOfFuel,
            SourceOutcome::Stuck(why) => Observable::Failstop(format!("stuck({why})")),
        }
    }
}

impl From<IOutcome> for Observable {
    fn from(o: IOutcome) -> Self {
        match o {
            IOutcome::Terminated(v) => Observable::Terminated(v),
            IOutcome::OutOfFuel => Observable::OutOfFuel,
            IOutcome::Failstop(e) => Observable::Failstop(e.to_string()),
        }
    }
}

/// Fire counts per micro-policy rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Coverage(pub [u64; RuleId::ALL.len()]);

impl Coverage {
    pub fn record(&mut self, rule: RuleId) {
        self.0[rule.index()] += 1;
    }

    pub fn merge(&mut self, other: &Coverage) {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
    }

    pub fn count(&self, rule: RuleId) -> u64 {
        self.0[rule.index()]
    }

    /// Rules other than `Halt` that never fired.
    pub fn missing(&self) -> Vec<RuleId> {
        RuleId::ALL
            .into_iter()
            .filter(|r| *r != RuleId::Halt && self.count(*r) == 0)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("linearity violated at depth {pc_depth}: {count} capabilities for depth {depth} at [{}]", .locations.join(", "))]
pub struct LinearityViolation {
    pub pc_depth: u32,
    pub depth: u32,
    pub count: usize,
    pub locations: Vec<String>,
}

/// Counts return capabilities per depth over registers and memory. At most
/// one may exist per depth; with `compiled`, exactly one must exist for each
/// depth below the current one.
pub fn scan_linearity(s: &MachineState, compiled: bool) -> Result<(), LinearityViolation> {
    let mut found: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    for r in Reg::ALL {
        if let ValTag::RetCap(n, _) = s.reg_tag(r) {
            found.entry(n).or_default().push(r.to_string());
        }
    }
    for (loc, cells) in &s.memory {
        for (i, c) in cells.iter().enumerate() {
            if let ValTag::RetCap(n, _) = c.tag.value {
                found.entry(n).or_default().push(format!("{loc}+{i}"));
            }
        }
    }
    let pc_depth = s.pc_tag.0;
    let violation = |depth: u32, locations: Vec<String>| LinearityViolation {
        pc_depth,
        depth,
        count: locations.len(),
        locations,
    };
    for (depth, locs) in &found {
        if locs.len() > 1 {
            return Err(violation(*depth, locs.clone()));
        }
    }
    if compiled {
        for depth in 0..pc_depth {
            if !found.contains_key(&depth) {
                return Err(violation(depth, Vec::new()));
            }
        }
    }
    Ok(())
}

/// Options for a target-level run.
#[derive(Clone, Copy, Debug, Default)]
pub struct TargetRunOptions {
    /// Scan linearity after every step; `Some(true)` also demands one
    /// capability per outstanding depth.
    pub linearity: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct TargetRun {
    pub observable: Observable,
    pub outcome: TargetOutcome,
    pub steps: u64,
    pub coverage: Coverage,
    pub linearity: Result<(), LinearityViolation>,
    pub state: MachineState,
}

pub fn target_observable(outcome: &TargetOutcome, s: &MachineState) -> Observable {
    match outcome {
        TargetOutcome::Halted => match halted_result(s) {
            Some(o) => Observable::Terminated(o),
            None => Observable::HaltedNoResult,
        },
        TargetOutcome::OutOfFuel => Observable::OutOfFuel,
        TargetOutcome::Failstop(Failstop::OutOfRange {
            loc: Loc::StackL(_), ..
        }) => Observable::ResourceExhaustion,
        TargetOutcome::Failstop(f) => Observable::Failstop(f.to_string()),
    }
}

/// Runs a booted state under the micro-policy.
pub fn run_state(mut state: MachineState, fuel: u64, opts: TargetRunOptions) -> TargetRun {
    let mut coverage = Coverage::default();
    let mut linearity = match opts.linearity {
        Some(compiled) => scan_linearity(&state, compiled),
        None => Ok(()),
    };
    let (outcome, steps) = state.run_observed(&MicroPolicy, fuel, |s, r| {
        if let StepResult::Next(rule) = r {
            coverage.record(*rule);
        }
        if let StepResult::Halted = r {
            coverage.record(RuleId::Halt);
        }
        if let (Some(compiled), Ok(())) = (opts.linearity, &linearity) {
            linearity = scan_linearity(s, compiled);
        }
    });
    TargetRun {
        observable: target_observable(&outcome, &state),
        outcome,
        steps,
        coverage,
        linearity,
        state,
    }
}

/// Boots and runs a complete target program.
pub fn run_target(p: &TargetProgram, fuel: u64, opts: TargetRunOptions) -> Result<TargetRun, Vec<LoadError>> {
    Ok(run_state(boot_state(p)?, fuel, opts))
}

pub fn run_source(p: &SourceProgram, fuel: u64) -> Result<Observable, InitError> {
    let mut cfg = init_config(p)?;
    Ok(run_config(&mut cfg, &p.classes, fuel).0.into())
}

pub fn run_interm(p: &IProgram, fuel: u64) -> Result<Observable, ILoadError> {
    Ok(iload(p)?.run(fuel).0.into())
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DiffError {
    #[error("type errors: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Type(Vec<TypeError>),
    #[error("source level: {0}")]
    Source(InitError),
    #[error("intermediate level: {0}")]
    Interm(ILoadError),
    #[error("target level: {}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Load(Vec<LoadError>),
    #[error("{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Pipeline(Vec<PipelineError>),
}

/// Observables of one program at the three levels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffReport {
    pub source: Observable,
    pub interm: Observable,
    pub target: Observable,
    pub target_steps: u64,
    pub coverage: Coverage,
}

impl DiffReport {
    pub fn agree(&self) -> bool {
        self.source.agrees_with(&self.interm)
            && self.source.agrees_with(&self.target)
            && self.interm.agrees_with(&self.target)
    }

    /// The target level hit its stack bound and is left out of the
    /// comparison.
    pub fn excluded(&self) -> bool {
        self.target == Observable::ResourceExhaustion
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "src: {}; ic: {}; tgt: {}", self.source, self.interm, self.target)
    }
}

/// Runs a program at all three levels: the source level with `fuel` steps,
/// the intermediate and target levels with proportionally more. A level that
/// alone ran out of fuel is retried once with a larger budget, so that
/// programs terminating near the bound are not reported as mismatches.
pub fn run_differential(p: &SourceProgram, fuel: u64) -> Result<DiffReport, DiffError> {
    let ip = compile_program(p).map_err(DiffError::Type)?;
    let tp = compile_iprogram(&ip, DEFAULT_STACK_CAPACITY);
    differential(p, &ip, &tp, fuel)
}

/// As [`run_differential`] for a build of source units, each compiled
/// separately and linked at every level.
pub fn run_differential_build(b: &Build, fuel: u64) -> Result<DiffReport, DiffError> {
    let p = link_build_source(b).map_err(DiffError::Pipeline)?;
    let ip = link_build_interm(b).map_err(DiffError::Pipeline)?;
    let tp = link_build_target(b, DEFAULT_STACK_CAPACITY).map_err(DiffError::Pipeline)?;
    differential(&p, &ip, &tp, fuel)
}

fn differential(p: &SourceProgram, ip: &IProgram, tp: &TargetProgram, fuel: u64) -> Result<DiffReport, DiffError> {
    let boot = boot_state(tp).map_err(DiffError::Load)?;

    let src = |fuel| run_source(p, fuel).map_err(DiffError::Source);
    let ic = |fuel| run_interm(ip, fuel).map_err(DiffError::Interm);
    let tgt = |fuel| run_state(boot.clone(), fuel, TargetRunOptions::default());

    let mut fuels = [fuel, fuel * IC_FUEL_FACTOR, fuel * TGT_FUEL_FACTOR];
    let mut source = src(fuels[0])?;
    let mut interm = ic(fuels[1])?;
    let mut target = tgt(fuels[2]);
    let out = [&source, &interm, &target.observable];
    let starved: Vec<bool> = out.iter().map(|o| **o == Observable::OutOfFuel).collect();
    if starved.iter().any(|s| *s) && !starved.iter().all(|s| *s) {
        for f in &mut fuels {
            *f *= RETRY_FACTOR;
        }
        if starved[0] {
            source = src(fuels[0])?;
        }
        if starved[1] {
            interm = ic(fuels[1])?;
        }
        if starved[2] {
            target = tgt(fuels[2]);
        }
    }
    Ok(DiffReport {
        source,
        interm,
        target: target.observable,
        target_steps: target.steps,
        coverage: target.coverage,
    })
}

/// Runs `state` for at most `fuel` steps, calling `emit` with one line per
/// step: the step number, pc, instruction, pc tag after the step, the rule
/// that fired, and every register or cell the step wrote with its new tag.
pub fn trace(state: &mut MachineState, fuel: u64, mut emit: impl FnMut(String)) -> (TargetOutcome, u64) {
    for n in 0..fuel {
        let before = state.clone();
        let (loc, off) = before.pc;
        let instr = match before.current_instr() {
            Ok(i) => i.to_string(),
            Err(_) => "?".into(),
        };
        let r = state.step(&MicroPolicy);
        let mut line = format!("{n} {loc}+{off} {instr}");
        match &r {
            StepResult::Next(rule) => {
                line.push_str(&format!(" pc={} {rule}", state.pc_tag));
                for (reg, (b, a)) in Reg::ALL.iter().zip(before.regs.iter().zip(&state.regs)) {
                    if b != a {
                        line.push_str(&format!(" {reg}={}:{}", a.0, a.1));
                    }
                }
                if let Ok(Instr::Store(rp, _)) = before.current_instr() {
                    if let Word::Ptr(l, o) = before.reg(rp) {
                        if let Some(c) = state.cell(l, o) {
                            line.push_str(&format!(" [{l}+{o}]={}@{}", c.word, c.tag));
                        }
                    }
                }
            }
            StepResult::Halted => line.push_str(" halt"),
            StepResult::Failstop(f) => line.push_str(&format!(" failstop {f}")),
        }
        emit(line);
        match r {
            StepResult::Next(_) => {}
            StepResult::Halted => return (TargetOutcome::Halted, n + 1),
            StepResult::Failstop(f) => return (TargetOutcome::Failstop(f), n + 1),
        }
    }
    (TargetOutcome::OutOfFuel, fuel)
}

/// Differential runs over a batch, one after the other.
pub fn run_differential_batch_seq(programs: &[SourceProgram], fuel: u64) -> Vec<Result<DiffReport, DiffError>> {
    programs.iter().map(|p| run_differential(p, fuel)).collect()
}

/// Differential runs over a batch, in parallel when the `parallel` feature
/// is enabled.
pub fn run_differential_batch(programs: &[SourceProgram], fuel: u64) -> Vec<Result<DiffReport, DiffError>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        programs.par_iter().map(|p| run_differential(p, fuel)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_differential_batch_seq(programs, fuel)
    }
}
