//! Kernel-level laws of the Markov category of finite stochastic kernels.

use std::cell::Cell;
use std::collections::BTreeMap;

use mstream::ir::{compile, read_term, Signature};
use mstream::stream::obs_diff;
use mstream::{rat, BaseShape, Dist, Kernel, Value, WireShape, DEFAULT_STATE_CAP};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{ensure, Outcome};

/// Wires with at most four values.
fn base(code: u8) -> BaseShape {
    match code % 4 {
        0 => BaseShape::Bool,
        1 => BaseShape::IntRange(0, 1),
        2 => BaseShape::IntRange(0, 2),
        _ => BaseShape::IntRange(0, 3),
    }
}

fn shape(codes: &[u8]) -> WireShape {
    WireShape::of(codes.iter().map(|&c| base(c)).collect::<Vec<_>>())
}

/// A random total kernel; each row has a support of at most four outputs.
fn random_kernel(input: &WireShape, output: &WireShape, rng: &mut ChaCha8Rng, dirac: bool) -> Kernel {
    let ys = output.enumerate(DEFAULT_STATE_CAP).unwrap();
    let table = input
        .enumerate(DEFAULT_STATE_CAP)
        .unwrap()
        .into_iter()
        .map(|x| {
            let k = if dirac { 1 } else { rng.random_range(1..=ys.len().min(4)) };
            let support: Vec<_> = ys.choose_multiple(rng, k).cloned().collect();
            let entries = support
                .into_iter()
                .map(|y| (Value::Tuple(y), rat(rng.random_range(1..=6), 1)));
            (x, Dist::normalized(entries).unwrap())
        })
        .collect();
    Kernel::from_table(input.clone(), output.clone(), table).unwrap()
}

/// Perturbs the rows of `g: B ⊗ A → C` at inputs `(b, a)` with `f(b|a) = 0`.
fn perturb_off_support(f: &Kernel, g: &Kernel, rng: &mut ChaCha8Rng) -> Kernel {
    let other = random_kernel(g.input(), g.output(), rng, false);
    let b_len = f.output().len();
    let mut table: BTreeMap<_, _> = g.table(DEFAULT_STATE_CAP).unwrap();
    for (ba, row) in table.iter_mut() {
        let (b, a) = ba.split_at(b_len);
        let fa = f.apply(a).unwrap();
        if fa.prob(&Value::Tuple(b.to_vec())) == rat(0, 1) {
            *row = other.apply(ba).unwrap();
        }
    }
    Kernel::from_table(g.input().clone(), g.output().clone(), table).unwrap()
}

fn same(a: &Kernel, b: &Kernel) -> bool {
    a.same_as(b).unwrap()
}

fn kernel_strategy() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, u64)> {
    (
        prop::collection::vec(any::<u8>(), 0..=2),
        prop::collection::vec(any::<u8>(), 1..=2),
        any::<u64>(),
    )
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

pub fn markov_laws() -> Outcome {
    let checked = Cell::new(0);
    runner(120)
        .run(&kernel_strategy(), |(ins, outs, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (shape(&ins), shape(&outs));
            let f = random_kernel(&a, &b, &mut rng, false);

            // Discarding is natural.
            prop_assert!(same(&f.compose(&Kernel::discard(&b)).unwrap(), &Kernel::discard(&a)), "discard naturality");

            // Copy is a commutative comonoid.
            let copy = Kernel::copy(&b);
            let id = Kernel::identity(&b);
            let left = copy.compose(&copy.tensor(&id)).unwrap();
            let right = copy.compose(&id.tensor(&copy)).unwrap();
            prop_assert!(same(&left, &right), "coassociativity");
            let disc = Kernel::discard(&b);
            prop_assert!(same(&copy.compose(&disc.tensor(&id)).unwrap(), &id), "left counit");
            prop_assert!(same(&copy.compose(&id.tensor(&disc)).unwrap(), &id), "right counit");
            prop_assert!(same(&copy.compose(&Kernel::swap(&b, &b)).unwrap(), &copy), "commutativity");

            // Conditionals reconstruct the kernel.
            let x_len = rng.random_range(0..=b.len());
            let (marginal, cond) = f.conditional(x_len).unwrap();
            prop_assert!(same(&marginal.triangle(&cond).unwrap(), &f), "f = f_Y ◁ c_f (x_len {})", x_len);

            // Ranges.
            let r = f.range();
            let ab = a.concat(&b);
            let swap_ba = Kernel::swap(&b, &a);
            prop_assert!(
                same(&f.triangle(&swap_ba.compose(&r).unwrap()).unwrap(), &f.triangle(&swap_ba).unwrap()),
                "range (1): output unchanged"
            );
            let copy_ab = Kernel::copy(&ab);
            prop_assert!(
                same(&r.compose(&copy_ab).unwrap(), &copy_ab.compose(&r.tensor(&r)).unwrap()),
                "range (2): deterministic"
            );
            let c = shape(&[rng.random()]);
            let g = random_kernel(&b.concat(&a), &c, &mut rng, false);
            let h = perturb_off_support(&f, &g, &mut rng);
            prop_assert!(same(&f.triangle(&g).unwrap(), &f.triangle(&h).unwrap()), "g, h agree on the support");
            let swap_ab = Kernel::swap(&a, &b);
            let via = |k: &Kernel| r.compose(&swap_ab).unwrap().compose(k).unwrap();
            prop_assert!(same(&via(&g), &via(&h)), "range (3): r_f cancels g vs h");
            checked.set(checked.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("{} random kernels: discard, comonoid, conditional, ranges (1)-(3)", checked.get()))
}

pub fn copy_witness() -> Outcome {
    let sig = Signature::standard();
    let coin = sig.get("coin").unwrap().kernel;
    let bool1 = WireShape::of(vec![BaseShape::Bool]);
    let left = coin.compose(&Kernel::copy(&bool1)).unwrap();
    let right = coin.tensor(&coin);
    let pair = |a, b| Value::tuple(vec![Value::Bool(a), Value::Bool(b)]);
    let expected_left = Dist::from_entries([(pair(false, false), rat(1, 2)), (pair(true, true), rat(1, 2))]).unwrap();
    let expected_right =
        Dist::uniform([pair(false, false), pair(false, true), pair(true, false), pair(true, true)]).unwrap();
    ensure(left.apply(&[]).unwrap() == expected_left, || "coin ; copy is not the diagonal".into())?;
    ensure(right.apply(&[]).unwrap() == expected_right, || "coin ⊗ coin is not uniform".into())?;

    // The same witness through the term language, at horizon 0.
    let stream = |src: &str| compile(&read_term(src).unwrap(), &sig).unwrap();
    let diff = obs_diff(&stream("coin ; copy(bool@0)"), &stream("coin * coin"), 3, DEFAULT_STATE_CAP).unwrap();
    ensure(diff.as_ref().is_some_and(|d| d.horizon == 0), || "streams should first differ at horizon 0".into())?;

    let checked = Cell::new(0);
    runner(100)
        .run(&kernel_strategy(), |(ins, outs, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b) = (shape(&ins), shape(&outs));
            let f = random_kernel(&a, &b, &mut rng, true);
            let left = f.compose(&Kernel::copy(&b)).unwrap();
            let right = Kernel::copy(&a).compose(&f.tensor(&f)).unwrap();
            prop_assert!(same(&left, &right), "copy is natural for deterministic kernels");
            checked.set(checked.get() + 1);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("coin witness differs at horizon 0; naturality holds for {} Dirac kernels", checked.get()))
}
