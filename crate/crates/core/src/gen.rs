//! Random well-formed contracts for differential and property testing.
//!
//! Generated contracts use every operator of the contract language. Values
//! stay far from the 32-bit integer range under the default trace domains:
//! every numeric subexpression carries a magnitude bound, equations whose
//! bound grows too large are folded back with `mod` or a clamp, and every
//! divisor is a nonzero literal or guarded as `if d = 0 then 1 else d`.
//! `pre` is only generated in the right operand of an enclosing `->` with no
//! other `pre` in between, which is exactly the well-formedness rule.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contract::{parse, Contract};

/// Magnitude beyond which a subexpression is not grown further.
const LIMIT: f64 = 1e6;
/// Magnitude every numeric equation is kept within.
const CAP: f64 = 1000.0;
/// Magnitude assumed for numeric node parameters.
const PARAM_CAP: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub max_depth: u32,
    pub max_eqs: usize,
    pub max_assumes: usize,
    pub max_guarantees: usize,
    pub max_nodes: usize,
    pub reals: bool,
    pub records: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 3,
            max_eqs: 4,
            max_assumes: 1,
            max_guarantees: 3,
            max_nodes: 2,
            reals: true,
            records: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Bool,
    Int,
    Real,
    Rec,
}

impl Ty {
    fn name(self) -> &'static str {
        match self {
            Ty::Bool => "bool",
            Ty::Int => "int",
            Ty::Real => "real",
            Ty::Rec => "Pair",
        }
    }

    fn numeric(self) -> bool {
        matches!(self, Ty::Int | Ty::Real)
    }
}

#[derive(Debug, Clone)]
struct Var {
    name: String,
    ty: Ty,
    bound: f64,
}

#[derive(Debug, Clone)]
struct NodeSig {
    name: String,
    params: Vec<Ty>,
    result: Ty,
}

#[derive(Clone, Copy)]
struct Ctx {
    depth: u32,
    /// Inside the right operand of `->` with no `pre` since.
    guarded: bool,
}

impl Ctx {
    fn sub(self) -> Ctx {
        Ctx {
            depth: self.depth.saturating_sub(1),
            ..self
        }
    }
}

struct Gen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    /// Same-step readable variables.
    scope: Vec<Var>,
    /// Variables readable under `pre`.
    delayed: Vec<Var>,
    nodes: Vec<NodeSig>,
}

type Num = (String, f64);

fn int_lit(v: i64) -> String {
    if v < 0 {
        format!("(-{})", -v)
    } else {
        v.to_string()
    }
}

const REAL_LITS: [(&str, f64); 8] = [
    ("0.0", 0.0),
    ("0.5", 0.5),
    ("1.25", 1.25),
    ("2.0", 2.0),
    ("(-0.75)", 0.75),
    ("(-3.0)", 3.0),
    ("0.1", 0.1),
    ("10.0", 10.0),
];

impl<R: Rng> Gen<'_, R> {
    fn pick_var(&mut self, ty: Ty, delayed: bool) -> Option<Var> {
        let pool = if delayed { &self.delayed } else { &self.scope };
        let c: Vec<&Var> = pool.iter().filter(|v| v.ty == ty).collect();
        c.choose(self.rng).map(|v| (*v).clone())
    }

    fn pick_node(&mut self, result: Ty) -> Option<NodeSig> {
        let has_rec = self.scope.iter().any(|v| v.ty == Ty::Rec);
        let c: Vec<&NodeSig> = self
            .nodes
            .iter()
            .filter(|n| n.result == result && (has_rec || !n.params.contains(&Ty::Rec)))
            .collect();
        c.choose(self.rng).map(|n| (*n).clone())
    }

    fn call(&mut self, n: &NodeSig, ctx: Ctx) -> String {
        let args: Vec<String> = n
            .params
            .clone()
            .into_iter()
            // Unguarded arguments stay well-formed wherever the body puts them.
            .map(|t| {
                self.bounded_arg(
                    t,
                    Ctx {
                        depth: ctx.depth.saturating_sub(1),
                        guarded: false,
                    },
                )
            })
            .collect();
        format!("{}({})", n.name, args.join(", "))
    }

    /// An expression of type `t` fitting a node parameter.
    fn bounded_arg(&mut self, t: Ty, ctx: Ctx) -> String {
        match t {
            Ty::Int => {
                let (s, b) = self.int(ctx);
                if b > PARAM_CAP {
                    format!("({s} mod {})", PARAM_CAP as i64)
                } else {
                    s
                }
            }
            Ty::Real => {
                let (s, b) = self.real(ctx);
                if b > PARAM_CAP {
                    clamp_real(&s, PARAM_CAP)
                } else {
                    s
                }
            }
            Ty::Bool => self.boolean(ctx),
            Ty::Rec => self.record(ctx),
        }
    }

    fn int_leaf(&mut self, ctx: Ctx) -> Num {
        loop {
            match self.rng.gen_range(0..4) {
                0 => {
                    let v = self.rng.gen_range(-10..=10);
                    return (int_lit(v), v.unsigned_abs() as f64);
                }
                1 => {
                    if let Some(v) = self.pick_var(Ty::Int, false) {
                        return (v.name, v.bound);
                    }
                }
                2 if self.cfg.records && self.scope.iter().any(|v| v.ty == Ty::Rec) => {
                    let r = self.pick_var(Ty::Rec, false).expect("checked");
                    return (format!("{}.n", r.name), 10.0);
                }
                3 if ctx.guarded => {
                    if let Some(v) = self.pick_var(Ty::Int, true) {
                        return (format!("pre({})", v.name), v.bound);
                    }
                }
                _ => {}
            }
        }
    }

    fn divisor_int(&mut self, ctx: Ctx) -> Num {
        if self.rng.gen_bool(0.5) {
            let v = *[-3i64, -2, -1, 1, 2, 3, 5, 7]
                .choose(self.rng)
                .expect("nonempty");
            (int_lit(v), v.unsigned_abs() as f64)
        } else {
            let (d, b) = self.int(ctx);
            (format!("(if {d} = 0 then 1 else {d})"), b.max(1.0))
        }
    }

    fn int(&mut self, ctx: Ctx) -> Num {
        if ctx.depth == 0 {
            return self.int_leaf(ctx);
        }
        let s = ctx.sub();
        let out = match self.rng.gen_range(0..12) {
            0 => {
                let (a, b) = self.int(s);
                (format!("-({a})"), b)
            }
            1 | 2 => {
                let (a, x) = self.int(s);
                let (b, y) = self.int(s);
                let op = if self.rng.gen_bool(0.5) { "+" } else { "-" };
                (format!("({a} {op} {b})"), x + y)
            }
            3 => {
                let (a, x) = self.int(s);
                let (b, y) = self.int(s);
                (format!("({a} * {b})"), x * y)
            }
            4 => {
                let (a, x) = self.int(s);
                let (d, _) = self.divisor_int(s);
                (format!("({a} div {d})"), x)
            }
            5 => {
                let (a, _) = self.int(s);
                let (d, y) = self.divisor_int(s);
                (format!("({a} mod {d})"), y)
            }
            6 => {
                let c = self.boolean(s);
                let (a, x) = self.int(s);
                let (b, y) = self.int(s);
                (format!("(if {c} then {a} else {b})"), x.max(y))
            }
            7 | 8 => {
                let (a, x) = self.int(s);
                let (b, y) = self.int(Ctx { guarded: true, ..s });
                (format!("({a} -> {b})"), x.max(y))
            }
            9 if ctx.guarded => {
                let (a, x) = self.int(Ctx {
                    guarded: false,
                    ..s
                });
                (format!("pre({a})"), x)
            }
            10 => match self.pick_node(Ty::Int) {
                Some(n) => (self.call(&n, ctx), CAP),
                None => self.int_leaf(ctx),
            },
            _ => self.int_leaf(ctx),
        };
        if out.1 > LIMIT {
            self.int_leaf(ctx)
        } else {
            out
        }
    }

    fn real_leaf(&mut self, ctx: Ctx) -> Num {
        loop {
            match self.rng.gen_range(0..3) {
                0 => {
                    let (s, v) = REAL_LITS.choose(self.rng).expect("nonempty");
                    return (s.to_string(), *v);
                }
                1 => {
                    if let Some(v) = self.pick_var(Ty::Real, false) {
                        return (v.name, v.bound);
                    }
                }
                2 if ctx.guarded => {
                    if let Some(v) = self.pick_var(Ty::Real, true) {
                        return (format!("pre({})", v.name), v.bound);
                    }
                }
                _ => {}
            }
        }
    }

    fn real(&mut self, ctx: Ctx) -> Num {
        if ctx.depth == 0 {
            return self.real_leaf(ctx);
        }
        let s = ctx.sub();
        let out = match self.rng.gen_range(0..10) {
            0 => {
                let (a, b) = self.real(s);
                (format!("-({a})"), b)
            }
            1 | 2 => {
                let (a, x) = self.real(s);
                let (b, y) = self.real(s);
                let op = if self.rng.gen_bool(0.5) { "+" } else { "-" };
                (format!("({a} {op} {b})"), x + y)
            }
            3 => {
                let (a, x) = self.real(s);
                let (b, y) = self.real(s);
                (format!("({a} * {b})"), x * y)
            }
            4 => {
                // Quotients are kept small because the divisor may be tiny.
                let (a, x) = self.real(s);
                let (d, _) = self.real(s);
                (
                    format!("({a} / (if {d} = 0.0 then 1.0 else {d}))"),
                    x * 4.0 * 16.0,
                )
            }
            5 => {
                let c = self.boolean(s);
                let (a, x) = self.real(s);
                let (b, y) = self.real(s);
                (format!("(if {c} then {a} else {b})"), x.max(y))
            }
            6 => {
                let (a, x) = self.real(s);
                let (b, y) = self.real(Ctx { guarded: true, ..s });
                (format!("({a} -> {b})"), x.max(y))
            }
            7 if ctx.guarded => {
                let (a, x) = self.real(Ctx {
                    guarded: false,
                    ..s
                });
                (format!("pre({a})"), x)
            }
            8 => match self.pick_node(Ty::Real) {
                Some(n) => (self.call(&n, ctx), CAP),
                None => self.real_leaf(ctx),
            },
            _ => self.real_leaf(ctx),
        };
        if out.1 > LIMIT {
            self.real_leaf(ctx)
        } else {
            out
        }
    }

    fn bool_leaf(&mut self, ctx: Ctx) -> String {
        loop {
            match self.rng.gen_range(0..4) {
                0 => {
                    return if self.rng.gen_bool(0.5) {
                        "true"
                    } else {
                        "false"
                    }
                    .to_string()
                }
                1 => {
                    if let Some(v) = self.pick_var(Ty::Bool, false) {
                        return v.name;
                    }
                }
                2 if self.cfg.records && self.scope.iter().any(|v| v.ty == Ty::Rec) => {
                    let r = self.pick_var(Ty::Rec, false).expect("checked");
                    return format!("{}.b", r.name);
                }
                3 if ctx.guarded => {
                    if let Some(v) = self.pick_var(Ty::Bool, true) {
                        return format!("pre({})", v.name);
                    }
                }
                _ => {}
            }
        }
    }

    fn boolean(&mut self, ctx: Ctx) -> String {
        if ctx.depth == 0 {
            return self.bool_leaf(ctx);
        }
        let s = ctx.sub();
        match self.rng.gen_range(0..14) {
            0 => format!("(not {})", self.boolean(s)),
            1 | 2 => {
                let a = self.boolean(s);
                let b = self.boolean(s);
                let op = ["and", "or", "=>"].choose(self.rng).expect("nonempty");
                format!("({a} {op} {b})")
            }
            3 | 4 => {
                let (a, _) = self.int(s);
                let (b, _) = self.int(s);
                let op = ["<", "<=", ">", ">=", "=", "<>"]
                    .choose(self.rng)
                    .expect("nonempty");
                format!("({a} {op} {b})")
            }
            5 if self.cfg.reals => {
                let (a, _) = self.real(s);
                let (b, _) = self.real(s);
                let op = ["<", "<=", ">", ">=", "=", "<>"]
                    .choose(self.rng)
                    .expect("nonempty");
                format!("({a} {op} {b})")
            }
            6 if self.scope.iter().any(|v| v.ty == Ty::Rec) => {
                let a = self.record(s);
                let b = self.record(s);
                let op = if self.rng.gen_bool(0.5) { "=" } else { "<>" };
                format!("({a} {op} {b})")
            }
            7 => {
                let a = self.boolean(s);
                let b = self.boolean(s);
                let op = if self.rng.gen_bool(0.5) { "=" } else { "<>" };
                format!("({a} {op} {b})")
            }
            8 => {
                let c = self.boolean(s);
                let a = self.boolean(s);
                let b = self.boolean(s);
                format!("(if {c} then {a} else {b})")
            }
            9 | 10 => {
                let a = self.boolean(s);
                let b = self.boolean(Ctx { guarded: true, ..s });
                format!("({a} -> {b})")
            }
            11 if ctx.guarded => format!(
                "pre({})",
                self.boolean(Ctx {
                    guarded: false,
                    ..s
                })
            ),
            12 => match self.pick_node(Ty::Bool) {
                Some(n) => self.call(&n, ctx),
                None => self.bool_leaf(ctx),
            },
            _ => self.bool_leaf(ctx),
        }
    }

    fn record(&mut self, ctx: Ctx) -> String {
        let leaf = |g: &mut Self| {
            let delayed = ctx.guarded && g.rng.gen_bool(0.3);
            match g.pick_var(Ty::Rec, delayed) {
                Some(v) if delayed => format!("pre({})", v.name),
                Some(v) => v.name,
                None => g.pick_var(Ty::Rec, false).expect("records enabled").name,
            }
        };
        if ctx.depth == 0 {
            return leaf(self);
        }
        let s = ctx.sub();
        match self.rng.gen_range(0..4) {
            0 => {
                let c = self.boolean(s);
                let a = self.record(s);
                let b = self.record(s);
                format!("(if {c} then {a} else {b})")
            }
            1 => {
                let a = self.record(s);
                let b = self.record(Ctx { guarded: true, ..s });
                format!("({a} -> {b})")
            }
            _ => leaf(self),
        }
    }

    fn expr(&mut self, ty: Ty, ctx: Ctx) -> Num {
        match ty {
            Ty::Int => self.int(ctx),
            Ty::Real => self.real(ctx),
            Ty::Bool => (self.boolean(ctx), 0.0),
            Ty::Rec => (self.record(ctx), 0.0),
        }
    }
}

fn clamp_real(s: &str, cap: f64) -> String {
    format!("(if {s} > {cap:.1} then {cap:.1} else if {s} < -{cap:.1} then -{cap:.1} else {s})")
}

/// Keeps a numeric equation body within [`CAP`].
fn fold(ty: Ty, body: String, bound: f64, use_mod: bool) -> String {
    if bound <= CAP || !ty.numeric() {
        return body;
    }
    match ty {
        Ty::Int if use_mod => format!("({body} mod {})", CAP as i64),
        Ty::Int => format!(
            "(if {body} > {c} then {c} else if {body} < (-{c}) then (-{c}) else {body})",
            c = CAP as i64
        ),
        _ => clamp_real(&body, CAP),
    }
}

/// Source text of a random well-formed contract.
pub fn random_contract_source(rng: &mut impl Rng, cfg: &GenConfig) -> String {
    let mut types = vec![Ty::Bool, Ty::Int];
    if cfg.reals {
        types.push(Ty::Real);
    }
    if cfg.records {
        types.push(Ty::Rec);
    }
    let mut io: Vec<(bool, Var)> = Vec::new();
    let mut add_io = |input: bool, name: &str, ty: Ty, bound: f64| {
        io.push((
            input,
            Var {
                name: name.to_string(),
                ty,
                bound,
            },
        ))
    };
    add_io(true, "b0", Ty::Bool, 0.0);
    add_io(true, "b1", Ty::Bool, 0.0);
    add_io(true, "i0", Ty::Int, 10.0);
    add_io(true, "i1", Ty::Int, 10.0);
    add_io(false, "ob", Ty::Bool, 0.0);
    add_io(false, "oi", Ty::Int, 10.0);
    if cfg.reals {
        add_io(true, "r0", Ty::Real, 5.0);
        add_io(false, "ox", Ty::Real, 5.0);
    }
    if cfg.records {
        add_io(true, "s0", Ty::Rec, 0.0);
        add_io(false, "os", Ty::Rec, 0.0);
    }

    let n_eqs = rng.gen_range(1..=cfg.max_eqs.max(1));
    let eqs: Vec<Var> = (0..n_eqs)
        .map(|k| {
            let ty = *types.choose(rng).expect("nonempty");
            Var {
                name: format!("e{k}"),
                ty,
                bound: if ty.numeric() { CAP } else { 0.0 },
            }
        })
        .collect();

    let mut g = Gen {
        rng,
        cfg,
        scope: Vec::new(),
        delayed: Vec::new(),
        nodes: Vec::new(),
    };

    let mut node_decls = Vec::new();
    let n_nodes = g.rng.gen_range(0..=cfg.max_nodes);
    for k in 0..n_nodes {
        let arity = g.rng.gen_range(1..=2);
        let params: Vec<Ty> = (0..arity)
            .map(|_| *types.choose(g.rng).expect("nonempty"))
            .collect();
        let result = *types.choose(g.rng).expect("nonempty");
        let pvars: Vec<Var> = params
            .iter()
            .enumerate()
            .map(|(i, t)| Var {
                name: format!("p{i}"),
                ty: *t,
                bound: PARAM_CAP,
            })
            .collect();
        g.scope = pvars.clone();
        g.delayed = pvars.clone();
        if result == Ty::Rec && !params.contains(&Ty::Rec) {
            // A record result needs a record to start from.
            continue;
        }
        let ctx = Ctx {
            depth: cfg.max_depth.min(2),
            guarded: false,
        };
        let (body, bound) = g.expr(result, ctx);
        let use_mod = g.rng.gen_bool(0.5);
        let body = fold(result, body, bound, use_mod);
        let sig: Vec<String> = pvars
            .iter()
            .map(|v| format!("{} : {}", v.name, v.ty.name()))
            .collect();
        let name = format!("f{k}");
        node_decls.push(format!(
            "  node {name}({}) : {} = {body};",
            sig.join(", "),
            result.name()
        ));
        g.nodes.push(NodeSig {
            name,
            params,
            result,
        });
    }

    let signals: Vec<Var> = io.iter().map(|(_, v)| v.clone()).collect();
    g.delayed = signals.iter().chain(&eqs).cloned().collect();
    let mut eq_decls = Vec::new();
    for (k, e) in eqs.iter().enumerate() {
        g.scope = signals.iter().chain(&eqs[..k]).cloned().collect();
        let ctx = Ctx {
            depth: cfg.max_depth,
            guarded: false,
        };
        let (body, bound) = g.expr(e.ty, ctx);
        let use_mod = g.rng.gen_bool(0.5);
        eq_decls.push(format!(
            "  eq {} : {} = {};",
            e.name,
            e.ty.name(),
            fold(e.ty, body, bound, use_mod)
        ));
    }
    eq_decls.shuffle(g.rng);

    g.scope = signals.iter().chain(&eqs).cloned().collect();
    let mut props = Vec::new();
    let n_assumes = g.rng.gen_range(0..=cfg.max_assumes);
    for k in 0..n_assumes {
        let ctx = Ctx {
            depth: cfg.max_depth.min(2),
            guarded: false,
        };
        props.push(format!("  assume \"a{k}\" : {};", g.boolean(ctx)));
    }
    let n_guarantees = g.rng.gen_range(1..=cfg.max_guarantees.max(1));
    for k in 0..n_guarantees {
        let ctx = Ctx {
            depth: cfg.max_depth,
            guarded: false,
        };
        props.push(format!("  guarantee \"g{k}\" : {};", g.boolean(ctx)));
    }

    let mut src = String::from("component Gen {\n");
    if cfg.records {
        src.push_str("  record Pair { b : bool; n : int; }\n");
    }
    for (input, v) in &io {
        let kw = if *input { "input" } else { "output" };
        src.push_str(&format!("  {kw} {} : {};\n", v.name, v.ty.name()));
    }
    for d in node_decls.iter().chain(&eq_decls).chain(&props) {
        src.push_str(d);
        src.push('\n');
    }
    src.push_str("}\n");
    src
}

/// A random well-formed contract drawn from `seed`.
pub fn random_contract(seed: u64, cfg: &GenConfig) -> Contract {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = random_contract_source(&mut rng, cfg);
    match parse(&src) {
        Ok(c) => c,
        Err(e) => panic!("generated contract does not check: {e}\n{src}"),
    }
}
