//! Acceptance criteria 1 to 9. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ite_core::bench::{self, BenchCase, BenchOutcome, Family, Impl};
use ite_core::constructive::nnf;
use ite_core::lang::{self, parse, parse_with_names, print_ctr, RunOptions};
use ite_core::oracle::{self, Connectives, GenOptions, Instance};
use ite_core::{maxk, parallel, Ctr, Env, GlobalKind, IntDomain, KLimit, Status, Store, VarId};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const EXAMPLES: [(&str, &str); 8] = [
    (include_str!("../../../queries/example1.ite"), "X in inf..sup"),
    (include_str!("../../../queries/example2.ite"), "X in {6}\\/{13}\\/(62..77)"),
    (include_str!("../../../queries/example3.ite"), "A in 8..10, B in 1..3"),
    (include_str!("../../../queries/example5.ite"), "A,B,C in {1}\\/{5}"),
    (include_str!("../../../queries/example6.ite"), "J0 = 2, I0 in 5..16, J2 in 10..32"),
    (include_str!("../../../queries/example7_k3.ite"), "X in {0}\\/{9}, Y in {2}\\/(6..7)\\/{9}"),
    (include_str!("../../../queries/example7_k2.ite"), "X in inf..sup, Y in {2}\\/(6..7)\\/{9}"),
    (include_str!("../../../queries/example7_k1.ite"), "X in inf..sup, Y in inf..sup"),
];

const EXAMPLE7: &str = include_str!("../../../queries/example7.ite");

fn golden_examples() -> Verdict {
    let start = Instant::now();
    for (q, want) in EXAMPLES {
        let got = lang::run(q, &RunOptions::default()).map_err(|e| e.to_string())?.text;
        if got != want {
            return Err(format!("{q:?} gave {got:?}, expected {want:?}"));
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(1) {
        return Err(format!("took {t:?}, limit 1s"));
    }
    Ok(format!("8 answers bit-exact in {t:?}"))
}

fn maximal_k() -> Verdict {
    let r = maxk::maximal_k(&parse(EXAMPLE7).map_err(|e| e.to_string())?, 8).map_err(|e| e.to_string())?;
    match r.k {
        Some(3) => Ok(format!("maximal k = 3 (heuristic {})", r.heuristic)),
        other => Err(format!("got {other:?}")),
    }
}

fn oracle_soundness() -> Verdict {
    let start = Instant::now();
    let o = GenOptions { max_vars: 4, lo: 0, hi: 9, max_depth: 4, connectives: Connectives::All };
    let insts = oracle::random_instances(42, 1000, &o);
    let r = oracle::sweep(&insts, &oracle::DEFAULT_KS, 0).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    if !r.ok() {
        return Err(format!("{r}"));
    }
    if t >= Duration::from_secs(120) {
        return Err(format!("took {t:?}, limit 2 min"));
    }
    Ok(format!("{r} in {t:?}"))
}

fn tuples(doms: &[IntDomain]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for d in doms {
        out = out.into_iter().flat_map(|t| d.values().map(move |v| [t.clone(), vec![v]].concat())).collect();
    }
    out
}

fn nnf_complement() -> Verdict {
    let start = Instant::now();
    let o = GenOptions { connectives: Connectives::All, ..GenOptions::default() };
    let insts = oracle::random_instances(4, 500, &o);
    let mut checked = 0usize;
    for (i, inst) in insts.iter().enumerate() {
        let neg = nnf(&Ctr::cn(inst.ctr.clone())).map_err(|e| e.to_string())?;
        for t in tuples(&inst.doms) {
            let val = |v: VarId| t[v.index()];
            if neg.eval(&val) == inst.ctr.eval(&val) {
                return Err(format!("case {i}: tuple {t:?} in both or neither"));
            }
            checked += 1;
        }
    }
    let t = start.elapsed();
    if t >= Duration::from_secs(60) {
        return Err(format!("took {t:?}, limit 1 min"));
    }
    Ok(format!("500 trees, {checked} tuples, complement exact in {t:?}"))
}

fn fixpoint_domains(inst: &Instance, k: u32) -> Result<Vec<IntDomain>, String> {
    let mut s = inst.store().map_err(|e| e.to_string())?;
    let mut env = Env::with_k(k);
    let st = s.post(&inst.ctr, &mut env).map_err(|e| e.to_string())?;
    Ok(inst.vars().iter().map(|&v| if st == Status::Fail { IntDomain::empty() } else { s.dom(v).clone() }).collect())
}

fn k_monotonicity() -> Verdict {
    let o = GenOptions { max_vars: 4, lo: 0, hi: 9, max_depth: 6, connectives: Connectives::CdOnly };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut insts = Vec::new();
    while insts.len() < 200 {
        let inst = oracle::random_instance(&mut rng, &o);
        if matches!(inst.ctr, Ctr::Cd(..)) || inst.ctr.disjunctive_depth() >= 2 {
            insts.push(inst);
        }
    }
    let results = parallel::par_map(&insts, 0, |inst| -> Result<Option<u32>, String> {
        let strata = (0..=5).map(|k| fixpoint_domains(inst, k)).collect::<Result<Vec<_>, _>>()?;
        for k in 0..5 {
            if !strata[k + 1].iter().zip(&strata[k]).all(|(a, b)| a.is_subset(b)) {
                return Ok(Some(k as u32));
            }
        }
        Ok(None)
    });
    for (i, r) in results.into_iter().enumerate() {
        if let Some(k) = r? {
            return Err(format!("case {i}: domains({}) not within domains({k})", k + 1));
        }
    }
    Ok(format!("{} nested-cd formulas, domains(k+1) within domains(k) for k = 0..4", insts.len()))
}

fn global_faithfulness() -> Verdict {
    let mut parts = Vec::new();
    for kind in GlobalKind::ALL {
        let insts = oracle::global_instances(kind, 5);
        let r = oracle::sweep(&insts, &oracle::DEFAULT_KS, 0).map_err(|e| e.to_string())?;
        if !r.ok() {
            return Err(format!("{}: {r}", kind.name()));
        }
        parts.push(format!("{}:{}", kind.name(), r.solutions));
    }
    Ok(format!("labeled sets equal truth sets ({})", parts.join(" ")))
}

const BUDGET: Duration = Duration::from_secs(60);

fn case(family: Family, n: usize, imp: &str) -> BenchCase {
    BenchCase { family, n, imp: imp.parse().expect("impl"), timeout: BUDGET, seed: 0 }
}

fn run_all(cases: &[BenchCase]) -> Vec<bench::BenchRecord> {
    bench::run_cases(cases, 0)
}

fn benchmark_orderings() -> Verdict {
    let grace = BUDGET + BUDGET / 10;
    let mut notes = Vec::new();

    let sizes = [40, 120, 200];
    let cs: Vec<BenchCase> =
        sizes.iter().flat_map(|&n| ["cd(3)", "cd(4)", "reified"].map(|i| case(Family::Element, n, i))).collect();
    let recs = run_all(&cs);
    for r in &recs {
        if r.duration > grace {
            return Err(format!("{} ran {:?}, past the grace period", r.csv_row(), r.duration));
        }
        let finished = r.outcome != BenchOutcome::Timeout;
        if finished == (r.case.imp == Impl::Reified) {
            return Err(format!("(a) element ordering broken: {}", r.csv_row()));
        }
    }
    notes.push(format!("(a) element N={sizes:?}: reified times out, cd(3)/cd(4) finish"));

    let n = 200;
    let recs = run_all(&["cd", "cd(2)", "cd(3)"].map(|i| case(Family::Domain, n, i)));
    let runs: Vec<u64> = recs.iter().map(|r| r.stats.prop_runs).collect();
    if recs.iter().any(|r| r.outcome != BenchOutcome::Solved) || !(runs[1] < runs[0] && runs[2] < runs[0]) {
        return Err(format!("(b) domain N={n}: prop_runs cd/cd(2)/cd(3) = {runs:?}"));
    }
    notes.push(format!("(b) domain N={n} prop_runs cd={} cd(2)={} cd(3)={}", runs[0], runs[1], runs[2]));

    let imps: Vec<String> = (2..=7).map(|k| format!("cd({k})")).collect();
    let recs = run_all(&imps.iter().map(|i| case(Family::Mulctr, n, i)).collect::<Vec<_>>());
    let runs: Vec<u64> = recs.iter().map(|r| r.stats.prop_runs).collect();
    let nodes: Vec<u64> = recs.iter().map(|r| r.stats.nodes).collect();
    let specs: Vec<u64> = recs.iter().map(|r| r.stats.speculations).collect();
    if recs.iter().any(|r| r.outcome != BenchOutcome::Solved) || runs[1..].iter().any(|&r| r >= runs[0]) {
        return Err(format!("(c) mulctr N={n}: prop_runs for k=2..7 = {runs:?}"));
    }
    if specs.windows(2).any(|w| w[1] < w[0]) {
        return Err(format!("mulctr speculations not monotone in k: {specs:?}"));
    }
    notes.push(format!("(c) mulctr N={n} prop_runs k=2..7 {runs:?}, nodes {nodes:?}"));

    let mut compared = 0;
    for family in Family::ALL {
        // Unbounded cd on disjctr nests every pairwise speculation inside every
        // other one, so its root fixpoint is exponential in the task count.
        let sizes: &[usize] = if family == Family::Disjunctive { &[2, 3, 4] } else { &[2, 4, 8, 16] };
        for &n in sizes {
            let cd = bench::root_domains(family, n, Impl::Cd(KLimit::Unbounded), 0).map_err(|e| e.to_string())?;
            let re = bench::root_domains(family, n, Impl::Reified, 0).map_err(|e| e.to_string())?;
            let ok = match (&cd, &re) {
                (None, _) => true,
                (Some(_), None) => false,
                (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x.is_subset(y)),
            };
            if !ok {
                return Err(format!("(d) {family} N={n}: cd pruned less than reified"));
            }
            compared += 1;
        }
    }
    notes.push(format!("(d) cd within reified on {compared} shared instances"));
    Ok(notes.join("; "))
}

fn engine_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gen = GenOptions { max_vars: 6, lo: 0, hi: 9, max_depth: 3, connectives: Connectives::All };
    let mut store = Store::new();
    let mut env = Env::with_k(2);
    let mut vars: Vec<VarId> = Vec::new();
    let mut marks = Vec::new();
    let doms = |s: &Store| s.vars().map(|v| s.dom(v).clone()).collect::<Vec<_>>();
    let (mut specs, mut restores, mut fixpoints) = (0, 0, 0);
    for step in 0..10_000 {
        if vars.len() < 2 || (store.is_failed() && marks.is_empty()) {
            store = Store::new();
            marks.clear();
            vars = (0..6).map(|_| store.new_var(IntDomain::range(0, 9)).expect("var")).collect();
        }
        match rng.gen_range(0..10) {
            0..=2 => {
                let c = oracle::random_ctr(&mut rng, vars.len(), 3, &gen);
                let before = doms(&store);
                store.speculate(&c, &vars, &mut env).map_err(|e| e.to_string())?;
                if doms(&store) != before {
                    return Err(format!("step {step}: speculation changed the store"));
                }
                specs += 1;
            }
            3 | 4 => marks.push((store.snapshot(), doms(&store), store.is_failed())),
            5 | 6 => {
                let c = oracle::random_ctr(&mut rng, vars.len(), 3, &gen);
                if store.post(&c, &mut env).map_err(|e| e.to_string())? != Status::Fail {
                    let before = doms(&store);
                    store.fixpoint(&mut env).map_err(|e| e.to_string())?;
                    if doms(&store) != before {
                        return Err(format!("step {step}: second fixpoint changed domains"));
                    }
                    fixpoints += 1;
                }
            }
            _ => {
                if let Some((m, d, failed)) = marks.pop() {
                    store.restore(m).map_err(|e| e.to_string())?;
                    let now = doms(&store);
                    if now[..d.len()] != d[..] || store.is_failed() != failed {
                        return Err(format!("step {step}: restore is not exact"));
                    }
                    restores += 1;
                }
            }
        }
    }
    Ok(format!("10000 operations: {specs} speculations, {fixpoints} fixpoint checks, {restores} restores exact"))
}

fn parser_suite() -> Verdict {
    let names: Vec<String> = (0..4).map(|i| format!("V{i}")).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let o = GenOptions { max_depth: 5, connectives: Connectives::All, ..GenOptions::default() };
    for i in 0..1000 {
        let c = oracle::random_ctr(&mut rng, 4, 5, &o);
        let text = print_ctr(&c, &names);
        match parse_with_names(&format!("{text}."), &names) {
            Ok(q) if q.body == c => {}
            Ok(q) => return Err(format!("case {i}: {text} reparsed as {}", print_ctr(&q.body, &q.names))),
            Err(e) => return Err(format!("case {i}: {text}: {e}")),
        }
    }
    let mut texts: Vec<&str> = EXAMPLES.iter().map(|(q, _)| *q).collect();
    texts.push(EXAMPLE7);
    for q in &texts {
        parse(q).map_err(|e| format!("example query failed to parse: {e}"))?;
    }
    let alphabet: Vec<&str> = vec![
        "X",
        "Y",
        "_",
        "1",
        "42",
        "-",
        "+",
        "*",
        "#=",
        "#\\=",
        "#<",
        "#>=",
        "=",
        "in",
        "..",
        "\\/",
        "#\\/",
        "#\\",
        "cd",
        "cxd",
        "cn",
        "=>",
        "ite",
        "(",
        ")",
        "[",
        "]",
        "{",
        "}",
        ",",
        ".",
        " ",
        "sum",
        "incr",
        "inf",
        "sup",
        "%",
        "\n",
        "um3",
        "lexctr",
        "kflag",
        "init_env",
        "9999999999999999999999",
    ];
    let mut crashes = 0;
    for i in 0..100_000 {
        let len = rng.gen_range(0..24);
        let input: String = if i % 4 == 0 {
            (0..len).map(|_| char::from(rng.gen_range(0u8..128))).collect()
        } else {
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect::<Vec<_>>().join("")
        };
        if std::panic::catch_unwind(|| parse(&input)).is_err() {
            crashes += 1;
        }
    }
    if crashes > 0 {
        return Err(format!("{crashes} fuzz inputs crashed the parser"));
    }
    Ok(format!("1000 round trips, {} example texts, 100000 fuzz inputs without a crash", texts.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("golden example answers", golden_examples),
        ("maximal k of the stratified example", maximal_k),
        ("oracle soundness on random CSPs", oracle_soundness),
        ("nnf complement", nnf_complement),
        ("k monotonicity", k_monotonicity),
        ("global constraint faithfulness", global_faithfulness),
        ("benchmark orderings", benchmark_orderings),
        ("engine properties", engine_properties),
        ("parser round trip and fuzzing", parser_suite),
    ];
    let only: Option<usize> = std::env::var("ITE_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let verdict = parallel::with_big_stack(f);
        match verdict {
            Ok(detail) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
