use super::*;
use crate::dist::rat;
use crate::kernel::DEFAULT_STATE_CAP;
use crate::stream::{observe, run_det};
use crate::value::Value;

fn src(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../programs/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn run_ints(text: &str, main: Option<&str>, ticks: usize) -> Vec<Value> {
    let c = compile_source(text, main, &Signature::standard()).unwrap();
    run_det(&c.stream, &vec![vec![]; ticks], ticks - 1)
        .unwrap()
        .into_iter()
        .map(|mut y| y.remove(0))
        .collect()
}

fn ints(xs: &[i64]) -> Vec<Value> {
    xs.iter().map(|&x| Value::int(x)).collect()
}

#[test]
fn fib_parses_to_nested_fby() {
    let p = parse(&src("fib.ms")).unwrap();
    let e = &p.def("fib").unwrap().expr;
    let ExprKind::Binary(BinOp::Fby, a, b) = &e.kind else { panic!("{e:?}") };
    assert_eq!(a.to_string(), "0");
    assert_eq!(b.to_string(), "(fib + (1 fby wait(fib)))");
}

#[test]
fn syntax_error_at_end_of_input() {
    let err = parse("x = 1 + ").unwrap_err();
    assert_eq!(err.pos, Pos { line: 1, col: 9 });
    assert!(err.message.contains("end of input"));
}

#[test]
fn precedence_and_associativity() {
    let e = parse_expr("1 fby 2 fby 3 + 4 * -x - 5").unwrap();
    assert_eq!(e, parse_expr("1 fby (2 fby ((3 + (4 * (-x))) - 5))").unwrap().strip_parens());
}

impl Expr {
    fn strip_parens(&self) -> Expr {
        let kind = match &self.kind {
            ExprKind::Paren(e) => return e.strip_parens(),
            ExprKind::Neg(e) => ExprKind::Neg(Box::new(e.strip_parens())),
            ExprKind::Wait(e) => ExprKind::Wait(Box::new(e.strip_parens())),
            ExprKind::Binary(op, a, b) => ExprKind::Binary(*op, Box::new(a.strip_parens()), Box::new(b.strip_parens())),
            ExprKind::Call(f, xs) => ExprKind::Call(f.clone(), xs.iter().map(Expr::strip_parens).collect()),
            ExprKind::Tuple(xs) => ExprKind::Tuple(xs.iter().map(Expr::strip_parens).collect()),
            k => k.clone(),
        };
        Expr::new(kind, self.pos)
    }
}

#[test]
fn corpus_round_trips() {
    let dir = format!("{}/../../programs", env!("CARGO_MANIFEST_DIR"));
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let p = parse(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse(&p.to_string()).unwrap(), p, "{}", path.display());
    }
}

#[test]
fn causality() {
    let err = check_causality(&parse("x = x + 1").unwrap()).unwrap_err();
    assert!(matches!(&err, LangError::Causality { name, .. } if name == "x"), "{err}");
    check_causality(&parse("a = 0 fby b; b = a + 1").unwrap()).unwrap();
    let fib = check_causality(&parse(&src("fib.ms")).unwrap()).unwrap();
    assert!(fib.occurrences.iter().all(|o| o.recursive && o.guard == Guard::Delayed));
    let err = check_causality(&parse("a = b + 1\nb = a").unwrap()).unwrap_err();
    assert!(matches!(err, LangError::Causality { .. }));
    assert!(matches!(
        check_causality(&parse("a = c").unwrap()).unwrap_err(),
        LangError::Unbound { .. }
    ));
}

#[test]
fn fib_runs() {
    assert_eq!(run_ints(&src("fib.ms"), None, 10), ints(&[0, 1, 1, 2, 3, 5, 8, 13, 21, 34]));
}

#[test]
fn fib_term_has_figure_shape() {
    let p = parse(&src("fib.ms")).unwrap();
    let el = elaborate(&check_causality(&p).unwrap(), None).unwrap();
    let text = crate::ir::pretty(&el.term);
    for token in ["fbk(int|", "fby(int)", "fby(int@1)", "wait(int@1)"] {
        assert!(text.contains(token), "{token} missing from {text}");
    }
}

#[test]
fn walk_marginal_at_two() {
    let c = compile_source(&src("walk.ms"), None, &Signature::standard()).unwrap();
    let p = observe(&c.stream, 2, DEFAULT_STATE_CAP).unwrap();
    let m = &p.tick_marginal(2)[&vec![vec![]; 3]];
    let one = |n| Value::tuple(vec![Value::int(n)]);
    assert_eq!(m.prob(&one(-2)), rat(1, 4));
    assert_eq!(m.prob(&one(0)), rat(1, 2));
    assert_eq!(m.prob(&one(2)), rat(1, 4));
}

#[test]
fn constant_definition() {
    assert_eq!(run_ints("y = 1 + 2", None, 4), ints(&[3, 3, 3, 3]));
}

#[test]
fn mutual_recursion() {
    assert_eq!(run_ints(&src("pingpong.ms"), Some("ping"), 5), ints(&[0, 1, 2, 3, 4]));
    assert_eq!(run_ints(&src("pingpong.ms"), Some("pong"), 3), ints(&[1, 2, 3]));
}

#[test]
fn fby_follows_lucid_law_on_inputs() {
    let c = compile_source(&src("accumulate.ms"), None, &Signature::standard()).unwrap();
    let xs = [3, 1, 0, 2, 2];
    let inputs: Vec<Vec<Value>> = xs.iter().map(|&x| vec![Value::int(x)]).collect();
    let out = run_det(&c.stream, &inputs, 4).unwrap();
    let pairs: Vec<(i64, i64)> = out
        .iter()
        .map(|y| {
            let t = y[0].as_tuple().unwrap();
            (t[0].as_i64().unwrap(), t[1].as_i64().unwrap())
        })
        .collect();
    assert_eq!(pairs, [(3, 0), (4, 3), (4, 1), (6, 0), (8, 2)]);
}

#[test]
fn wait_shifts_and_delays_must_match() {
    assert_eq!(
        run_ints("n = 0 fby n + 1\nm = 1 fby wait(n)", Some("m"), 4),
        ints(&[1, 0, 1, 2])
    );
    let err = compile_source("n = 0 fby n + 1\nm = n + wait(n)", Some("m"), &Signature::standard()).unwrap_err();
    assert!(matches!(err, LangError::Type { .. }), "{err}");
    let c = compile_source("n = 0 fby n + 1\nm = wait(n) + 10", Some("m"), &Signature::standard()).unwrap();
    let out = run_det(&c.stream, &vec![vec![]; 3], 2).unwrap();
    assert_eq!(out, vec![vec![], vec![Value::int(10)], vec![Value::int(11)]]);
}

#[test]
fn guarded_only_through_box_reads_member_on_demand() {
    assert_eq!(run_ints("y = wait(z)\nz = 0 fby y + 1", Some("z"), 4), ints(&[0, 1, 2, 3]));
}
