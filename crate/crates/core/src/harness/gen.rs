//! Bounded random generation of complete, well-typed source programs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interfaces::MethodSig;
use crate::names::{ClassName, FieldIndex, MethodIndex, ObjectName};
use crate::source::{ClassDef, Expr, MethodDef, ObjectDef, SourceProgram};

/// Size bounds for generated programs.
#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_classes: usize,
    pub max_objects: usize,
    pub max_methods: usize,
    pub max_fields: usize,
    pub max_depth: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_classes: 3,
            max_objects: 4,
            max_methods: 3,
            max_fields: 2,
            max_depth: 5,
        }
    }
}

struct Shape {
    field_types: Vec<Vec<ClassName>>,
    sigs: Vec<Vec<MethodSig>>,
    objects: Vec<ClassName>,
}

impl Shape {
    fn objects_of(&self, c: ClassName) -> Vec<ObjectName> {
        (0..self.objects.len())
            .filter(|i| self.objects[*i] == c)
            .map(|i| ObjectName(i as u32))
            .collect()
    }

    fn classes(&self) -> impl Iterator<Item = ClassName> {
        (0..self.sigs.len() as u32).map(ClassName)
    }
}

struct Gen<'a, R> {
    rng: &'a mut R,
    shape: &'a Shape,
    class: ClassName,
    sig: MethodSig,
    main_result: ClassName,
}

impl<R: Rng> Gen<'_, R> {
    fn pick_class(&mut self) -> ClassName {
        ClassName(self.rng.gen_range(0..self.shape.sigs.len() as u32))
    }

    fn leaf(&mut self, ty: ClassName) -> Expr {
        let mut options = vec![];
        if ty == self.class {
            options.push(Expr::This);
        }
        if ty == self.sig.arg {
            options.push(Expr::Arg);
        }
        for o in self.shape.objects_of(ty) {
            options.push(Expr::Obj(o));
        }
        options.choose(self.rng).cloned().expect("every class has an object")
    }

    /// An expression whose type is `ty`, or bottom when `exit` is allowed.
    fn expr(&mut self, ty: ClassName, depth: u32, allow_exit: bool) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(ty);
        }
        let d = depth - 1;
        let own_fields: Vec<FieldIndex> = self.shape.field_types[self.class.0 as usize]
            .iter()
            .enumerate()
            .filter(|(_, t)| **t == ty)
            .map(|(i, _)| FieldIndex::from_slot(i))
            .collect();
        let callees: Vec<(ClassName, MethodIndex, MethodSig)> = self
            .shape
            .classes()
            .flat_map(|c| {
                self.shape.sigs[c.0 as usize]
                    .iter()
                    .enumerate()
                    .map(move |(i, s)| (c, MethodIndex::from_slot(i), *s))
            })
            .filter(|(_, _, s)| s.result == ty)
            .collect();
        loop {
            match self.rng.gen_range(0..6) {
                0 if !own_fields.is_empty() => {
                    let f = *own_fields.choose(self.rng).unwrap();
                    let recv = self.expr(self.class, d, false);
                    return Expr::Select(Box::new(recv), f);
                }
                1 if !own_fields.is_empty() => {
                    let f = *own_fields.choose(self.rng).unwrap();
                    let recv = self.expr(self.class, d, false);
                    let value = self.expr(ty, d, allow_exit);
                    return Expr::Update(Box::new(recv), f, Box::new(value));
                }
                2 if !callees.is_empty() => {
                    let (c, m, s) = *callees.choose(self.rng).unwrap();
                    let recv = self.expr(c, d, false);
                    let arg = self.expr(s.arg, d, allow_exit);
                    return Expr::Call(Box::new(recv), m, Box::new(arg));
                }
                3 => {
                    let x = self.pick_class();
                    return Expr::if_eq(
                        self.expr(x, d, false),
                        self.expr(x, d, false),
                        self.expr(ty, d, allow_exit),
                        self.expr(ty, d, allow_exit),
                    );
                }
                4 => {
                    let x = self.pick_class();
                    return Expr::seq(self.expr(x, d, allow_exit), self.expr(ty, d, allow_exit));
                }
                5 if allow_exit && self.rng.gen_bool(0.3) => {
                    let main_result = self.main_result;
                    return Expr::exit(self.expr(main_result, d, false));
                }
                _ => {}
            }
        }
    }
}

/// A random complete program within the bounds. Class 0 holds the main
/// method and object 0; every class has at least one object.
pub fn generate(rng: &mut impl Rng, cfg: &GenConfig) -> SourceProgram {
    let n_classes = rng.gen_range(1..=cfg.max_classes.min(cfg.max_objects).max(1));
    let n_objects = rng.gen_range(n_classes..=cfg.max_objects.max(n_classes));
    let mut objects: Vec<ClassName> = (0..n_classes as u32).map(ClassName).collect();
    while objects.len() < n_objects {
        objects.push(ClassName(rng.gen_range(0..n_classes as u32)));
    }
    let class = |rng: &mut _| ClassName(Rng::gen_range(rng, 0..n_classes as u32));
    let mut sigs = Vec::new();
    let mut field_types = Vec::new();
    for c in 0..n_classes {
        let min = usize::from(c == 0);
        let n_methods = rng.gen_range(min..=cfg.max_methods.max(min));
        let mut ms: Vec<MethodSig> = (0..n_methods)
            .map(|_| MethodSig {
                arg: class(rng),
                result: class(rng),
            })
            .collect();
        if c == 0 {
            ms[0].arg = ClassName(0);
        }
        sigs.push(ms);
        let n_fields = rng.gen_range(0..=cfg.max_fields);
        field_types.push((0..n_fields).map(|_| class(rng)).collect::<Vec<_>>());
    }
    let shape = Shape {
        field_types,
        sigs,
        objects,
    };
    let main_result = shape.sigs[0][0].result;

    let mut p = SourceProgram::default();
    for c in shape.classes() {
        let mut methods = Vec::new();
        for sig in shape.sigs[c.0 as usize].clone() {
            let mut g = Gen {
                rng: &mut *rng,
                shape: &shape,
                class: c,
                sig,
                main_result,
            };
            let body = g.expr(sig.result, cfg.max_depth.saturating_sub(1), true);
            methods.push(MethodDef { sig, body });
        }
        p.classes.insert(
            c,
            ClassDef {
                name: c,
                field_types: shape.field_types[c.0 as usize].clone(),
                methods,
            },
        );
    }
    for (i, c) in shape.objects.iter().enumerate() {
        let fields = shape.field_types[c.0 as usize]
            .iter()
            .map(|t| *shape.objects_of(*t).choose(rng).expect("every class has an object"))
            .collect();
        p.objects.insert(
            ObjectName(i as u32),
            ObjectDef {
                name: ObjectName(i as u32),
                class: *c,
                fields,
            },
        );
    }
    p.export_definitions();
    p
}

/// `count` programs from a fixed seed.
pub fn generate_batch(seed: u64, count: usize, cfg: &GenConfig) -> Vec<SourceProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| generate(&mut rng, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::source::typecheck;

    fn depth(e: &Expr) -> u32 {
        1 + match e {
            Expr::This | Expr::Arg | Expr::Obj(_) => 0,
            Expr::Select(a, _) | Expr::Exit(a) => depth(a),
            Expr::Update(a, _, b) | Expr::Call(a, _, b) | Expr::Seq(a, b) => depth(a).max(depth(b)),
            Expr::IfEq(a, b, c, d) => depth(a).max(depth(b)).max(depth(c)).max(depth(d)),
        }
    }

    #[test]
    fn generated_programs_are_well_typed_and_bounded() {
        let cfg = GenConfig::default();
        for p in generate_batch(7, 200, &cfg) {
            p.validate().unwrap();
            typecheck(&p).unwrap_or_else(|e| panic!("{e:?}\n{p:?}"));
            assert!(p.classes.len() <= 3);
            assert!(p.objects.len() <= 4);
            assert!(p.classes.values().all(|c| c.methods.len() <= 3));
            assert!(p.classes.values().flat_map(|c| &c.methods).all(|m| depth(&m.body) <= 5));
            for c in p.classes.keys() {
                assert!(p.objects.values().any(|o| o.class == *c));
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::default();
        assert_eq!(generate_batch(3, 5, &cfg), generate_batch(3, 5, &cfg));
    }
}
