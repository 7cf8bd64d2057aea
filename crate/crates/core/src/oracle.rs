//! Exhaustive verification oracle over every rank vector in {1..k}^D.

use std::fmt::Write as _;

use crate::chem::{BuildingBlockSet, Molecule};
use crate::encoding::{rank_midpoint, route_record, Evaluator, Genome};
use crate::error::{Error, Result};
use crate::expander::Expander;
use crate::report::{Archive, ArchivedRoute};

pub const DEFAULT_SPACE_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceResult {
    pub max_f: f64,
    /// First rank vector (lexicographic) reaching `max_f`.
    pub argmax: Vec<usize>,
    /// Feasible routes, deduplicated by ranks used, in enumeration order.
    pub feasible: Vec<ArchivedRoute>,
    pub evaluated: u64,
}

impl BruteForceResult {
    pub fn to_text(&self) -> String {
        let argmax: Vec<String> = self.argmax.iter().map(usize::to_string).collect();
        let mut out = format!(
            "max_f\t{}\targmax\t{}\tfeasible\t{}\tevaluated\t{}\n",
            self.max_f,
            argmax.join(","),
            self.feasible.len(),
            self.evaluated
        );
        for r in &self.feasible {
            let _ = writeln!(out, "{}", route_record(&r.route, &r.fit));
        }
        out
    }

    pub fn max_feasible_f(&self) -> Option<f64> {
        self.feasible.iter().map(|r| r.fit.f).reduce(f64::max)
    }
}

pub fn space_size(k: usize, depth: usize) -> Option<u128> {
    (k as u128).checked_pow(u32::try_from(depth).ok()?)
}

/// Decodes every gene vector through the midpoint of each rank's interval.
pub fn brute_force<E: Expander>(
    target: &Molecule,
    expander: E,
    blocks: &BuildingBlockSet,
    k: usize,
    depth: usize,
    cap: u128,
) -> Result<BruteForceResult> {
    if k == 0 {
        return Err(Error::DegenerateConfig("beam width k = 0".into()));
    }
    let size = space_size(k, depth).unwrap_or(u128::MAX);
    if size > cap {
        return Err(Error::SpaceTooLarge { size, cap });
    }
    let evaluator = Evaluator::new(target.clone(), expander, blocks, k, depth);
    let mut ranks = vec![1usize; depth];
    let mut archive = Archive::new();
    let mut max_f = f64::NEG_INFINITY;
    let mut argmax = ranks.clone();
    let mut evaluated = 0u64;
    loop {
        let genes = ranks.iter().map(|&r| rank_midpoint(r, k)).collect();
        let ind = evaluator.evaluate(Genome::new(genes)?);
        debug_assert_eq!(ind.route.genes, ranks);
        evaluated += 1;
        if ind.fit.f > max_f {
            max_f = ind.fit.f;
            argmax.clone_from(&ranks);
        }
        archive.offer(&ind.route, &ind.fit);

        // odometer increment, last position fastest
        let mut pos = depth;
        loop {
            if pos == 0 {
                return Ok(BruteForceResult {
                    max_f,
                    argmax,
                    feasible: archive.into_routes(),
                    evaluated,
                });
            }
            pos -= 1;
            if ranks[pos] < k {
                ranks[pos] += 1;
                break;
            }
            ranks[pos] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::{Candidate, ReactionTable};

    fn mol(s: &str) -> Molecule {
        Molecule::canonicalize(s).unwrap()
    }

    #[test]
    fn smallest_instance() {
        let mut t = ReactionTable::new();
        t.insert(
            mol("P"),
            vec![Candidate::new(vec![mol("a")], 0.6).unwrap()],
        );
        let blocks = BuildingBlockSet::new([mol("a")]).unwrap();
        let res = brute_force(&mol("P"), &t, &blocks, 1, 1, DEFAULT_SPACE_CAP).unwrap();
        assert_eq!(res.evaluated, 1);
        assert_eq!(res.feasible.len(), 1);
        assert_eq!(res.max_f, 0.6);
    }

    #[test]
    fn no_route_world() {
        let mut t = ReactionTable::new();
        t.insert(
            mol("P"),
            vec![
                Candidate::new(vec![mol("QQ"), mol("a")], 0.9).unwrap(),
                Candidate::new(vec![mol("ZZ")], 0.5).unwrap(),
            ],
        );
        let blocks = BuildingBlockSet::new([mol("a")]).unwrap();
        let res = brute_force(&mol("P"), &t, &blocks, 2, 2, DEFAULT_SPACE_CAP).unwrap();
        assert!(res.feasible.is_empty());
        assert!(res.max_f < 1.0);
        assert_eq!(res.evaluated, 4);
    }

    #[test]
    fn cap_is_enforced() {
        let t = ReactionTable::new();
        let blocks = BuildingBlockSet::new([mol("a")]).unwrap();
        assert!(matches!(
            brute_force(&mol("P"), &t, &blocks, 10, 7, DEFAULT_SPACE_CAP),
            Err(Error::SpaceTooLarge { size: 10_000_000, .. })
        ));
        assert_eq!(space_size(64, 16), Some(1u128 << 96));
    }
}
