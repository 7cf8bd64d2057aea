//! Molecule identity, hashed n-gram fingerprints and building-block similarity.
//!
//! Molecules are opaque canonical token strings. A fingerprint is a 1024-bit
//! vector where every character 1-, 2- and 3-gram of the molecule text sets
//! one bit chosen by a fixed 64-bit hash, so fingerprints are identical on
//! every platform and every run.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Width of a fingerprint in bits.
pub const FINGERPRINT_BITS: usize = 1024;
const WORDS: usize = FINGERPRINT_BITS / 64;
const MAX_GRAM: usize = 3;
const HASH_SEED: u64 = 0x5eed_c0de_2f1a_9b37;

/// A canonical molecule string. Cloning is cheap.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Molecule(Arc<str>);

impl Molecule {
    /// Trims surrounding whitespace and validates the remaining text.
    pub fn canonicalize(raw: &str) -> Result<Self> {
        let text = raw.trim();
        if text.is_empty() {
            return Err(Error::EmptyMolecule);
        }
        if text.chars().any(char::is_control) {
            return Err(Error::InvalidMolecule(text.to_owned()));
        }
        Ok(Molecule(Arc::from(text)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::of(self.as_str())
    }
}

impl fmt::Display for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Molecule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Molecule({:?})", &*self.0)
    }
}

impl std::str::FromStr for Molecule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Molecule::canonicalize(s)
    }
}

/// FNV-1a over the bytes, seeded, followed by a splitmix64 finalizer so that
/// the low bits used for the bit index are well mixed.
fn gram_hash(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64 ^ HASH_SEED;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: [u64; WORDS],
}

impl Fingerprint {
    pub const fn zero() -> Self {
        Fingerprint { words: [0; WORDS] }
    }

    pub fn of(text: &str) -> Self {
        let mut fp = Fingerprint::zero();
        let offsets: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let chars = offsets.len() - 1;
        for n in 1..=MAX_GRAM {
            for start in 0..chars.saturating_sub(n - 1) {
                let gram = &text.as_bytes()[offsets[start]..offsets[start + n]];
                fp.set((gram_hash(gram) % FINGERPRINT_BITS as u64) as usize);
            }
        }
        fp
    }

    /// Builds a fingerprint from explicit bit positions.
    pub fn from_bits(bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Fingerprint::zero();
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < FINGERPRINT_BITS, "bit {bit} out of range");
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// |a ∧ b| / |a ∨ b|, or 0 when both vectors are empty.
    pub fn tanimoto(&self, other: &Fingerprint) -> f64 {
        let mut and = 0u32;
        let mut or = 0u32;
        for (a, b) in self.words.iter().zip(other.words.iter()) {
            and += (a & b).count_ones();
            or += (a | b).count_ones();
        }
        if or == 0 {
            0.0
        } else {
            f64::from(and) / f64::from(or)
        }
    }
}

impl fmt::Debug for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: Vec<usize> = (0..FINGERPRINT_BITS).filter(|&b| self.get(b)).collect();
        f.debug_struct("Fingerprint").field("bits", &bits).finish()
    }
}

pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> f64 {
    a.tanimoto(b)
}

/// The terminal set of purchasable molecules, with fingerprints precomputed.
#[derive(Clone, Debug)]
pub struct BuildingBlockSet {
    members: Vec<Molecule>,
    lookup: HashSet<Molecule>,
    fingerprints: Vec<Fingerprint>,
}

impl BuildingBlockSet {
    /// Deduplicates and sorts the members. Rejects an empty set.
    pub fn new(members: impl IntoIterator<Item = Molecule>) -> Result<Self> {
        let mut members: Vec<Molecule> = members.into_iter().collect();
        members.sort();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptyBuildingBlockSet);
        }
        let lookup = members.iter().cloned().collect();
        let fingerprints = members.iter().map(Molecule::fingerprint).collect();
        Ok(BuildingBlockSet {
            members,
            lookup,
            fingerprints,
        })
    }

    pub fn contains(&self, m: &Molecule) -> bool {
        self.lookup.contains(m)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Molecule> {
        self.members.iter()
    }

    /// g(m): 1 for exact members, otherwise the best Tanimoto similarity to any member.
    pub fn similarity_score(&self, m: &Molecule) -> f64 {
        if self.contains(m) {
            return 1.0;
        }
        max_similarity(&m.fingerprint(), &self.fingerprints)
    }

    /// Parses the one-molecule-per-line format; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut members = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let m = Molecule::canonicalize(trimmed).map_err(|e| Error::Parse {
                path: origin.to_owned(),
                line: idx + 1,
                message: e.to_string(),
            })?;
            members.push(m);
        }
        BuildingBlockSet::new(members)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        BuildingBlockSet::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for m in &self.members {
            out.push_str(m.as_str());
            out.push('\n');
        }
        out
    }
}

/// Max Tanimoto similarity of `query` against `pool`; 0 for an empty pool.
pub fn max_similarity(query: &Fingerprint, pool: &[Fingerprint]) -> f64 {
    pool.iter()
        .map(|z| query.tanimoto(z))
        .fold(0.0, f64::max)
}

/// Convenience wrapper over [`BuildingBlockSet::similarity_score`].
pub fn similarity_score(m: &Molecule, blocks: &BuildingBlockSet) -> f64 {
    blocks.similarity_score(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mol(s: &str) -> Molecule {
        Molecule::canonicalize(s).unwrap()
    }

    #[test]
    fn canonicalize_trims_and_is_idempotent() {
        assert_eq!(mol("  CCO ").as_str(), "CCO");
        assert_eq!(mol("CCO").as_str(), "CCO");
        let once = mol(" c1ccccc1 ");
        assert_eq!(mol(once.as_str()), once);
    }

    #[test]
    fn canonicalize_rejects_empty_and_control_chars() {
        assert!(matches!(Molecule::canonicalize(""), Err(Error::EmptyMolecule)));
        assert!(matches!(Molecule::canonicalize(" \t\n "), Err(Error::EmptyMolecule)));
        assert!(matches!(
            Molecule::canonicalize("C\tO"),
            Err(Error::InvalidMolecule(_))
        ));
    }

    #[test]
    fn fingerprint_bit_counts() {
        assert_eq!(mol("A").fingerprint().count_ones(), 1);
        let ab = mol("AB").fingerprint().count_ones();
        assert!((1..=3).contains(&ab));
        assert_eq!(mol("CCO").fingerprint(), mol("CCO").fingerprint());
    }

    #[test]
    fn fingerprint_is_frozen() {
        // Pins the hash so a change to it is caught.
        let fp = mol("CCO").fingerprint();
        let bits: Vec<usize> = (0..FINGERPRINT_BITS).filter(|&b| fp.get(b)).collect();
        assert_eq!(bits, FROZEN_CCO_BITS);
    }

    const FROZEN_CCO_BITS: &[usize] = &[76, 163, 199, 600, 751];

    #[test]
    fn tanimoto_examples() {
        let a = Fingerprint::from_bits([0, 1]);
        let b = Fingerprint::from_bits([0, 2]);
        assert!((a.tanimoto(&b) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.tanimoto(&a), 1.0);
        let c = Fingerprint::from_bits([5, 6]);
        assert_eq!(a.tanimoto(&c), 0.0);
        assert_eq!(Fingerprint::zero().tanimoto(&Fingerprint::zero()), 0.0);
    }

    #[test]
    fn max_similarity_picks_the_best_member() {
        // Query has bits 0..10. z1 shares 4 of its 10 bits (|and|=4, |or|=10 -> 0.4),
        // z2 shares 7 of 10 (|and|=7, |or|=10 -> 0.7).
        let q = Fingerprint::from_bits(0..10);
        let z1 = Fingerprint::from_bits(0..4);
        let z2 = Fingerprint::from_bits(0..7);
        assert!((q.tanimoto(&z1) - 0.4).abs() < 1e-15);
        assert!((q.tanimoto(&z2) - 0.7).abs() < 1e-15);
        assert!((max_similarity(&q, &[z1, z2]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn similarity_score_membership_and_disjoint() {
        let blocks = BuildingBlockSet::new([mol("CCO"), mol("NN")]).unwrap();
        assert_eq!(blocks.similarity_score(&mol("CCO")), 1.0);

        let m = mol("A");
        let other = mol("B");
        assert_eq!(m.fingerprint().tanimoto(&other.fingerprint()), 0.0);
        let single = BuildingBlockSet::new([other]).unwrap();
        assert_eq!(single.similarity_score(&m), 0.0);
    }

    #[test]
    fn similarity_score_matches_pairwise_max() {
        let members = ["CCO", "CCN", "c1ccccc1", "OC(=O)C"].map(mol);
        let blocks = BuildingBlockSet::new(members.clone()).unwrap();
        let m = mol("CCOC");
        let expected = members
            .iter()
            .map(|z| tanimoto(&m.fingerprint(), &z.fingerprint()))
            .fold(0.0, f64::max);
        assert_eq!(blocks.similarity_score(&m), expected);
    }

    #[test]
    fn empty_block_set_is_rejected() {
        assert!(matches!(
            BuildingBlockSet::new(Vec::new()),
            Err(Error::EmptyBuildingBlockSet)
        ));
        assert!(matches!(
            BuildingBlockSet::parse("# only a comment\n\n", "mem"),
            Err(Error::EmptyBuildingBlockSet)
        ));
    }

    #[test]
    fn block_file_skips_comments_and_blanks() {
        let blocks = BuildingBlockSet::parse("# header\nCCO\n\n  NN  \n#x\nCCO\n", "mem").unwrap();
        assert_eq!(blocks.len(), 2);
        assert!(blocks.contains(&mol("NN")));
        assert_eq!(blocks.to_text(), "CCO\nNN\n");
    }
}
