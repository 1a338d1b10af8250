use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Aig, AigBuilder, LatchReset};

/// A random system with 4 latches, 2 inputs and 10 AND gates.
pub fn random_aig(seed: u64) -> Aig {
    random_aig_with(seed, 4, 2, 10)
}

/// A random system: latches reset to zero, AND gates over random earlier
/// signals, random next-state functions, and a bad-state cube over two or
/// three latches with at least one positive literal, so the all-zero
/// initial state is good.
pub fn random_aig_with(seed: u64, latches: usize, inputs: usize, ands: usize) -> Aig {
    assert!(latches >= 1, "a system needs a latch");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = AigBuilder::new();
    let ls: Vec<u32> = (0..latches).map(|_| b.latch(LatchReset::Zero)).collect();
    let mut signals: Vec<u32> = ls.clone();
    signals.extend((0..inputs).map(|_| b.input()));
    for _ in 0..ands {
        let x = signals[rng.gen_range(0..signals.len())] ^ rng.gen_range(0..2);
        let y = signals[rng.gen_range(0..signals.len())] ^ rng.gen_range(0..2);
        let g = b.and(x, y);
        if g > 1 && !signals.contains(&(g & !1)) {
            signals.push(g & !1);
        }
    }
    for &l in &ls {
        let next = signals[rng.gen_range(0..signals.len())] ^ rng.gen_range(0..2);
        b.set_next(l, next);
    }
    let width = rng.gen_range(2..=3).min(latches);
    let picked = sample(&mut rng, latches, width).into_vec();
    let mut bad = 1;
    for (i, idx) in picked.into_iter().enumerate() {
        let negate = i > 0 && rng.gen_bool(0.5);
        bad = b.and(bad, ls[idx] ^ negate as u32);
    }
    b.bad(bad);
    b.comment(format!("random system, seed {seed}"));
    b.finish()
}
