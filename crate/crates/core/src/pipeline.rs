//! Whole-build operations: separate compilation of every unit to a chosen
//! level, then linking.

use thiserror::Error;

use crate::i2t::compile_iprogram;
use crate::interm::{link_interm, ILinkError, IProgram};
use crate::loader::{link_target, TargetLinkError, TargetProgram};
use crate::s2i::compile_program;
use crate::source::{link_source, typecheck, ProgramError, SourceLinkError, SourceProgram, TypeError};
use crate::syntax::{Build, Component};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Src,
    Ic,
    Tgt,
}

impl Level {
    pub fn name(self) -> &'static str {
        match self {
            Level::Src => "src",
            Level::Ic => "ic",
            Level::Tgt => "tgt",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("{path}: {error}")]
    Invalid { path: String, error: ProgramError },
    #[error("{path}: {error}")]
    Type { path: String, error: TypeError },
    #[error("{path}: a {found} unit cannot be lowered back to {level}")]
    Level {
        path: String,
        found: &'static str,
        level: &'static str,
    },
    #[error("link: {0}")]
    SourceLink(#[from] SourceLinkError),
    #[error("link: {0}")]
    IntermLink(#[from] ILinkError),
    #[error("link: {0}")]
    TargetLink(#[from] TargetLinkError),
    #[error("empty build")]
    Empty,
}

impl PipelineError {
    /// Link failures, as opposed to ill-formed or ill-typed units.
    pub fn is_link(&self) -> bool {
        matches!(
            self,
            PipelineError::SourceLink(_) | PipelineError::IntermLink(_) | PipelineError::TargetLink(_)
        )
    }
}

/// Structural and type checks of one source unit.
pub fn check_source(path: &str, p: &SourceProgram) -> Result<(), Vec<PipelineError>> {
    let mut errs: Vec<PipelineError> = Vec::new();
    if let Err(es) = p.validate() {
        errs.extend(es.into_iter().map(|error| PipelineError::Invalid {
            path: path.to_string(),
            error,
        }));
    }
    if let Err(es) = typecheck(p) {
        errs.extend(es.into_iter().map(|error| PipelineError::Type {
            path: path.to_string(),
            error,
        }));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Checks every source unit of the build.
pub fn check_build(b: &Build) -> Result<(), Vec<PipelineError>> {
    let mut errs = Vec::new();
    for (path, c) in &b.components {
        if let Component::Source(p) = c {
            if let Err(es) = check_source(path, p) {
                errs.extend(es);
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn level_error(path: &str, found: Level, level: Level) -> PipelineError {
    PipelineError::Level {
        path: path.to_string(),
        found: found.name(),
        level: level.name(),
    }
}

/// Links the source units; every unit must be a source unit.
pub fn link_build_source(b: &Build) -> Result<SourceProgram, Vec<PipelineError>> {
    check_build(b)?;
    let mut linked: Option<SourceProgram> = None;
    for (path, c) in &b.components {
        let Component::Source(p) = c else {
            let found = if matches!(c, Component::Interm(_)) {
                Level::Ic
            } else {
                Level::Tgt
            };
            return Err(vec![level_error(path, found, Level::Src)]);
        };
        linked = Some(match linked {
            None => p.clone(),
            Some(acc) => link_source(&acc, p).map_err(|e| vec![e.into()])?,
        });
    }
    linked.ok_or_else(|| vec![PipelineError::Empty])
}

/// Compiles each unit separately to the intermediate level.
pub fn interm_units(b: &Build) -> Result<Vec<IProgram>, Vec<PipelineError>> {
    check_build(b)?;
    let mut out = Vec::new();
    for (path, c) in &b.components {
        out.push(match c {
            Component::Source(p) => compile_program(p).map_err(|es| {
                es.into_iter()
                    .map(|error| PipelineError::Type {
                        path: path.clone(),
                        error,
                    })
                    .collect::<Vec<_>>()
            })?,
            Component::Interm(p) => p.clone(),
            Component::Target(_) => return Err(vec![level_error(path, Level::Tgt, Level::Ic)]),
        });
    }
    Ok(out)
}

pub fn link_build_interm(b: &Build) -> Result<IProgram, Vec<PipelineError>> {
    let units = interm_units(b)?;
    if units.is_empty() {
        return Err(vec![PipelineError::Empty]);
    }
    link_interm(&units).map_err(|e| vec![e.into()])
}

/// Compiles each unit separately to the target level.
pub fn target_units(b: &Build, stack_capacity: usize) -> Result<Vec<TargetProgram>, Vec<PipelineError>> {
    check_build(b)?;
    let mut out = Vec::new();
    for (path, c) in &b.components {
        out.push(match c {
            Component::Source(p) => {
                let ip = compile_program(p).map_err(|es| {
                    es.into_iter()
                        .map(|error| PipelineError::Type {
                            path: path.clone(),
                            error,
                        })
                        .collect::<Vec<_>>()
                })?;
                compile_iprogram(&ip, stack_capacity)
            }
            Component::Interm(p) => compile_iprogram(p, stack_capacity),
            Component::Target(p) => p.clone(),
        });
    }
    Ok(out)
}

pub fn link_build_target(b: &Build, stack_capacity: usize) -> Result<TargetProgram, Vec<PipelineError>> {
    let units = target_units(b, stack_capacity)?;
    if units.is_empty() {
        return Err(vec![PipelineError::Empty]);
    }
    link_target(&units).map_err(|e| vec![e.into()])
}
