//! Subset-sum as WSHA reachability.

use crate::geometry::{LinearConstraint, Polyhedron, Relation};
use crate::model::{HybridAutomaton, Valuation};
use crate::rational::Rational;

use super::{open_interval, Builder};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSumInstance {
    pub set: Vec<i64>,
    pub k: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubsetSumError {
    #[error("the set must be non-empty")]
    Empty,
    #[error("zero elements are not supported")]
    ZeroElement,
}

/// Builds the automaton, the zero start vector and the target.
///
/// Variables `x0..x(n+2)`, modes `m0..m(2n)`. Dwelling one unit in `m0` loads
/// `x_i = a_i`; level `j` offers `m(2j-1)`, which moves `a_j` into the sum
/// `x(n+1)` and counts it in `x(n+2)`, or `m(2j)`, which just drains `x_j`.
pub fn gen_subset_sum(inst: &SubsetSumInstance) -> Result<(HybridAutomaton, Valuation, Polyhedron), SubsetSumError> {
    let a = &inst.set;
    let n = a.len();
    if n == 0 {
        return Err(SubsetSumError::Empty);
    }
    if a.contains(&0) {
        return Err(SubsetSumError::ZeroElement);
    }
    let dim = n + 3;
    let names: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut b = Builder::new(&name_refs);

    let bound = 1 + a.iter().map(|x| x.abs()).sum::<i64>() + inst.k.abs() + n as i64;
    let bound = Rational::from_int(bound);
    let boxed = Polyhedron::new((0..dim).flat_map(|v| open_interval(v, -bound.clone(), bound.clone())));

    let mut rate0 = vec![Rational::zero(); dim];
    rate0[0] = Rational::one();
    for (i, &ai) in a.iter().enumerate() {
        rate0[i + 1] = Rational::from_int(ai);
    }
    let mut modes = vec![b.mode("m0", rate0, boxed.clone())];
    for (j, &aj) in a.iter().enumerate() {
        let mut take = vec![Rational::zero(); dim];
        take[j + 1] = Rational::from_int(-aj);
        take[n + 1] = Rational::from_int(aj);
        take[n + 2] = Rational::one();
        let mut skip = vec![Rational::zero(); dim];
        skip[j + 1] = Rational::from_int(-aj);
        modes.push(b.mode(&format!("m{}", 2 * j + 1), take, boxed.clone()));
        modes.push(b.mode(&format!("m{}", 2 * j + 2), skip, boxed.clone()));
    }
    for to in [1, 2] {
        b.edge(modes[0], modes[to], Polyhedron::top(), Vec::new());
    }
    for j in 1..n {
        for from in [2 * j - 1, 2 * j] {
            for to in [2 * j + 1, 2 * j + 2] {
                b.edge(modes[from], modes[to], Polyhedron::top(), Vec::new());
            }
        }
    }
    let h = b.finish(&[modes[0]]);

    let mut target = vec![LinearConstraint::bound(0, Relation::Eq, Rational::one())];
    for i in 1..=n {
        target.push(LinearConstraint::bound(i, Relation::Eq, Rational::zero()));
    }
    target.push(LinearConstraint::bound(n + 1, Relation::Eq, Rational::from_int(inst.k)));
    target.push(LinearConstraint::bound(n + 2, Relation::Ge, Rational::one()));
    target.push(LinearConstraint::bound(n + 2, Relation::Le, Rational::from_int(n as i64)));
    Ok((h, vec![Rational::zero(); dim], Polyhedron::new(target)))
}
