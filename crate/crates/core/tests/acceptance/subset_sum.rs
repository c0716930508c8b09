//! Random subset-sum instances against brute force.

use std::time::{Duration, Instant};

use rand::Rng;
use weakha::gen::{gen_subset_sum, SubsetSumInstance};
use weakha::model::infer_ranks;
use weakha::stats::Stats;
use weakha::wsha::{wsha_reachable, ReachResult, SearchOptions};

use crate::support::{ensure, rng, Ledger};

/// Whether some non-empty subset sums to `k`.
fn brute_force(set: &[i64], k: i64) -> bool {
    (1u32..1 << set.len()).any(|mask| set.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x).sum::<i64>() == k)
}

fn instance(r: &mut rand_chacha::ChaCha8Rng) -> SubsetSumInstance {
    let n = r.gen_range(1..=8);
    let set: Vec<i64> = (0..n)
        .map(|_| {
            let x = r.gen_range(1..=20);
            if r.gen_bool(0.5) {
                x
            } else {
                -x
            }
        })
        .collect();
    // Half the targets are sums of random subsets so both verdicts occur often.
    let k = if r.gen_bool(0.5) {
        set.iter().filter(|_| r.gen_bool(0.5)).sum()
    } else {
        r.gen_range(-40..=40)
    };
    SubsetSumInstance { set, k }
}

pub fn criterion(ledger: &mut Ledger) -> Result<String, String> {
    let began = Instant::now();
    let mut r = rng(2);
    let (mut yes, mut agree) = (0, 0);
    for i in 0..200 {
        let inst = instance(&mut r);
        let (h, v0, target) = gen_subset_sum(&inst).map_err(|e| e.to_string())?;
        let ranks = infer_ranks(&h).map_err(|e| e.to_string())?;
        let got = wsha_reachable(&h, &ranks, &v0, &target, SearchOptions::default(), &mut Stats::default())
            .map_err(|e| format!("instance {i}: {e}"))?;
        let expect = brute_force(&inst.set, inst.k);
        if let ReachResult::Yes { run, .. } = &got {
            ledger.run(&format!("subset-sum {i}"), &h, run, Some(&target));
            yes += 1;
        }
        ensure(matches!(got, ReachResult::Yes { .. }) == expect, || {
            format!("instance {i} {:?} k={}: brute force says {expect}", inst.set, inst.k)
        })?;
        agree += 1;
    }
    let elapsed = began.elapsed();
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!("{agree}/200 agree, {yes} reachable"))
}
