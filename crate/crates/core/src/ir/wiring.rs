use super::{Term, WireType};
use crate::shape::BaseShape;
use crate::value::Value;

/// `b@delay` carrying the constant `v` from tick `delay` on.
pub fn constant_at(v: Value, base: BaseShape, delay: usize) -> Term {
    (0..delay).fold(Term::Const(v, base), |t, _| Term::delay(t))
}

/// `n ≥ 1` copies of a wire.
fn fan(w: &WireType, n: usize) -> Term {
    match n {
        0 => Term::Discard(w.clone()),
        1 => Term::Id(vec![w.clone()]),
        2 => Term::Copy(w.clone()),
        _ => Term::seq(
            Term::Copy(w.clone()),
            Term::par(Term::Id(vec![w.clone()]), fan(w, n - 1)),
        ),
    }
}

/// A structural term `inputs → [inputs[sel[0]], inputs[sel[1]], …]` built
/// from copies, discards and symmetries. Indices may repeat or be omitted.
pub fn wiring(inputs: &[WireType], sel: &[usize]) -> Term {
    if sel.len() == inputs.len() && sel.iter().enumerate().all(|(i, &j)| i == j) {
        return Term::Id(inputs.to_vec());
    }
    let mut counts = vec![0usize; inputs.len()];
    for &j in sel {
        counts[j] += 1;
    }
    let fans = merge_ids(inputs.iter().zip(&counts).map(|(w, &c)| fan(w, c)).collect());

    // Where each grouped copy must end up.
    let mut next_slot: Vec<Vec<usize>> = vec![Vec::new(); inputs.len()];
    for (target, &j) in sel.iter().enumerate().rev() {
        next_slot[j].push(target);
    }
    let mut order: Vec<usize> = Vec::new();
    for (j, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            order.push(next_slot[j].pop().expect("count matches"));
        }
    }
    let mut current: Vec<WireType> = order.iter().map(|&t| inputs[sel[t]].clone()).collect();

    // Selection sort by rotation: each layer pulls the wire for slot `p`
    // leftwards across the block `p..q` with a single symmetry.
    let mut layers = vec![fans];
    for p in 0..order.len() {
        let q = (p..order.len()).find(|&q| order[q] == p).expect("permutation");
        if q == p {
            continue;
        }
        layers.push(merge_ids(vec![
            Term::Id(current[..p].to_vec()),
            Term::Sym(current[p..q].to_vec(), vec![current[q].clone()]),
            Term::Id(current[q + 1..].to_vec()),
        ]));
        order[p..=q].rotate_right(1);
        current[p..=q].rotate_right(1);
    }
    let selected: Vec<WireType> = sel.iter().map(|&j| inputs[j].clone()).collect();
    Term::seqs(layers, &selected)
}

/// Parallel composition of a layer, fusing neighbouring identities.
fn merge_ids(parts: Vec<Term>) -> Term {
    let mut fused: Vec<Term> = Vec::new();
    for t in parts {
        if matches!(&t, Term::Id(ws) if ws.is_empty()) {
            continue;
        }
        match (fused.last_mut(), t) {
            (Some(Term::Id(acc)), Term::Id(ws)) => acc.extend(ws),
            (_, t) => fused.push(t),
        }
    }
    Term::pars(fused)
}
