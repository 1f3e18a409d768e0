//! Hand-written malicious target components linked against compiled code.
//! Every scenario must fail-stop with its expected reason.

use std::fmt;

use crate::i2t::DEFAULT_STACK_CAPACITY;
use crate::pipeline::link_build_target;
use crate::syntax::{Build, Entry, Unit, UnitKind};
use crate::target::TargetOutcome;

use super::{run_state, LinearityViolation, TargetRunOptions};

/// Step budget for one scenario.
pub const ATTACK_FUEL: u64 = 10_000;

/// Path relative to the repository root, with the file's contents.
macro_rules! file {
    ($path:literal) => {
        ($path, include_str!(concat!("../../../../", $path)))
    };
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    /// Units in link order.
    pub files: Vec<(&'static str, &'static str)>,
    /// Reason class of the expected fail-stop.
    pub expected: &'static str,
}

impl Scenario {
    pub fn units(&self) -> Vec<Unit> {
        self.files
            .iter()
            .map(|(path, text)| Unit {
                path: path.to_string(),
                kind: UnitKind::from_path(std::path::Path::new(path)).expect("attack files have known extensions"),
                text: text.to_string(),
            })
            .collect()
    }
}

/// The eight attack scenarios.
pub fn attack_suite() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "A1",
            description: "cross-compartment load of another class's object field",
            files: vec![file!("corpus/lib/bnat4.src"), file!("attacks/a1/evil.tgt")],
            expected: "policy(load-compartment)",
        },
        Scenario {
            name: "A2",
            description: "jal to a cell that is not an entry point",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("attacks/a2/evil.tgt"),
            ],
            expected: "policy(jal-non-entry)",
        },
        Scenario {
            name: "A3",
            description: "jump into another compartment without a return capability",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("attacks/a3/evil.tgt"),
            ],
            expected: "policy(jump-no-capability)",
        },
        Scenario {
            name: "A4",
            description: "return capability stored, loaded twice and replayed",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("attacks/a4/evil.tgt"),
                file!("attacks/a4/main.src"),
            ],
            expected: "policy(jump-cleared)",
        },
        Scenario {
            name: "A5",
            description: "call with an argument of the wrong class",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("attacks/a5/evil.tgt"),
            ],
            expected: "policy(jal-arg-type)",
        },
        Scenario {
            name: "A6",
            description: "return of a value of the wrong class",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("corpus/lib/bnat4.src"),
                file!("attacks/a6/evil.tgt"),
                file!("attacks/a6/main.src"),
            ],
            expected: "policy(jump-return-type)",
        },
        Scenario {
            name: "A7",
            description: "store into another compartment's method region",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("attacks/a7/evil.tgt"),
            ],
            expected: "policy(store-compartment)",
        },
        Scenario {
            name: "A8",
            description: "branch falling through the end of a region",
            files: vec![
                file!("corpus/lib/unit.src"),
                file!("corpus/lib/bool.src"),
                file!("attacks/a8/evil.tgt"),
            ],
            expected: "out-of-range",
        },
    ]
}

#[derive(Clone, Debug)]
pub struct AttackResult {
    pub name: &'static str,
    pub expected: &'static str,
    /// Reason class of the fail-stop, or how the run ended otherwise.
    pub observed: String,
    pub failstopped: bool,
    pub steps: u64,
    pub linearity: Result<(), LinearityViolation>,
}

impl AttackResult {
    pub fn passed(&self) -> bool {
        self.failstopped && self.observed == self.expected && self.linearity.is_ok()
    }
}

impl fmt::Display for AttackResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            write!(f, "{} PASS {} after {} steps", self.name, self.observed, self.steps)
        } else if let Err(v) = &self.linearity {
            write!(f, "{} FAIL linearity: {v}", self.name)
        } else {
            write!(
                f,
                "{} FAIL expected {}, got {}",
                self.name, self.expected, self.observed
            )
        }
    }
}

/// Builds, links, boots and runs one scenario.
pub fn run_attack(s: &Scenario) -> AttackResult {
    let fail = |observed: String| AttackResult {
        name: s.name,
        expected: s.expected,
        observed,
        failstopped: false,
        steps: 0,
        linearity: Ok(()),
    };
    let build = match Build::new(&s.units(), &Entry::Auto) {
        Ok(b) => b,
        Err(es) => return fail(format!("build error: {}", es[0])),
    };
    let program = match link_build_target(&build, DEFAULT_STACK_CAPACITY) {
        Ok(p) => p,
        Err(es) => return fail(format!("link error: {}", es[0])),
    };
    let state = match crate::loader::boot_state(&program) {
        Ok(st) => st,
        Err(es) => return fail(format!("load error: {}", es[0])),
    };
    let run = run_state(state, ATTACK_FUEL, TargetRunOptions { linearity: Some(false) });
    let (observed, failstopped) = match &run.outcome {
        TargetOutcome::Failstop(f) => (f.class(), true),
        _ => (run.observable.named(&build.names), false),
    };
    AttackResult {
        name: s.name,
        expected: s.expected,
        observed,
        failstopped,
        steps: run.steps,
        linearity: run.linearity,
    }
}

/// Runs every scenario, in parallel when the `parallel` feature is enabled.
pub fn run_attack_suite() -> Vec<AttackResult> {
    let suite = attack_suite();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        suite.par_iter().map(run_attack).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        suite.iter().map(run_attack).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_attack_failstops_as_expected() {
        let results = run_attack_suite();
        assert_eq!(results.len(), 8);
        for r in &results {
            assert!(r.passed(), "{r}");
            assert!(r.steps <= ATTACK_FUEL);
        }
    }
}
