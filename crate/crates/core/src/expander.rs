//! Single-step expansion: the oracle that proposes ranked reactant sets for a product.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use crate::chem::Molecule;
use crate::error::{Error, Result};

/// One ranked output of a single-step expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub reactants: Vec<Molecule>,
    pub beta: f64,
}

impl Candidate {
    pub fn new(reactants: Vec<Molecule>, beta: f64) -> Result<Self> {
        if reactants.is_empty() {
            return Err(Error::Parse {
                path: String::new(),
                line: 0,
                message: "candidate has no reactants".into(),
            });
        }
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::BetaOutOfRange {
                path: String::new(),
                line: 0,
                beta,
            });
        }
        Ok(Candidate { reactants, beta })
    }

    /// Reactants joined by '.', as in a multi-component SMILES string.
    pub fn reactant_string(&self) -> String {
        join_molecules(&self.reactants)
    }
}

pub(crate) fn join_molecules(ms: &[Molecule]) -> String {
    let mut out = String::new();
    for (i, m) in ms.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        out.push_str(m.as_str());
    }
    out
}

/// Candidates for one product, best first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExpansionResult {
    pub candidates: Vec<Candidate>,
}

impl ExpansionResult {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, rank: usize) -> Option<&Candidate> {
        rank.checked_sub(1).and_then(|i| self.candidates.get(i))
    }
}

/// A single-step retrosynthesis model.
///
/// Implementations must be deterministic: the same molecule and `k` always
/// produce the same result. An unknown molecule yields an empty result.
pub trait Expander: Send + Sync {
    fn expand(&self, m: &Molecule, k: usize) -> ExpansionResult;
}

impl<E: Expander + ?Sized> Expander for &E {
    fn expand(&self, m: &Molecule, k: usize) -> ExpansionResult {
        (**self).expand(m, k)
    }
}

impl<E: Expander + ?Sized> Expander for Arc<E> {
    fn expand(&self, m: &Molecule, k: usize) -> ExpansionResult {
        (**self).expand(m, k)
    }
}

/// Table-driven expander.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReactionTable {
    entries: BTreeMap<Molecule, Vec<Candidate>>,
}

impl ReactionTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts candidates for `product`, keeping the per-product order canonical.
    pub fn insert(&mut self, product: Molecule, candidates: Vec<Candidate>) {
        let slot = self.entries.entry(product).or_default();
        slot.extend(candidates);
        sort_candidates(slot);
    }

    pub fn get(&self, product: &Molecule) -> Option<&[Candidate]> {
        self.entries.get(product).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn products(&self) -> impl Iterator<Item = &Molecule> {
        self.entries.keys()
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries: BTreeMap<Molecule, Vec<Candidate>> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_owned(),
                line: lineno,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(parse_err(format!(
                    "expected 4 tab-separated fields, found {}",
                    fields.len()
                )));
            }
            let product =
                Molecule::canonicalize(fields[0]).map_err(|e| parse_err(e.to_string()))?;
            let rank: usize = fields[1]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad rank {:?}", fields[1])))?;
            if rank == 0 {
                return Err(parse_err("rank must be at least 1".into()));
            }
            let beta: f64 = fields[2]
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad beta {:?}", fields[2])))?;
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::BetaOutOfRange {
                    path: origin.to_owned(),
                    line: lineno,
                    beta,
                });
            }
            let reactants = fields[3]
                .split('.')
                .map(Molecule::canonicalize)
                .collect::<Result<Vec<_>>>()
                .map_err(|e| parse_err(format!("bad reactant list: {e}")))?;
            entries
                .entry(product)
                .or_default()
                .push(Candidate { reactants, beta });
        }
        for list in entries.values_mut() {
            sort_candidates(list);
        }
        Ok(ReactionTable { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ReactionTable::parse(&text, &path.display().to_string())
    }

    /// Serializes in the tab-separated table format; ranks are rewritten 1..n.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (product, list) in &self.entries {
            for (i, c) in list.iter().enumerate() {
                writeln!(out, "{}\t{}\t{}\t{}", product, i + 1, c.beta, c.reactant_string())
                    .expect("writing to a String cannot fail");
            }
        }
        out
    }
}

fn sort_candidates(list: &mut [Candidate]) {
    list.sort_by(|a, b| {
        b.beta
            .total_cmp(&a.beta)
            .then_with(|| a.reactants.cmp(&b.reactants))
    });
}

impl Expander for ReactionTable {
    fn expand(&self, m: &Molecule, k: usize) -> ExpansionResult {
        let candidates = self
            .entries
            .get(m)
            .map(|list| list.iter().take(k).cloned().collect())
            .unwrap_or_default();
        ExpansionResult { candidates }
    }
}

/// Memoizes expansions for a fixed beam width and counts real expander calls.
///
/// Lookups take a shared lock; a miss takes the write lock and expands while
/// holding it, so each distinct molecule is expanded exactly once no matter
/// how many workers race for it.
pub struct CachedExpander<E> {
    inner: E,
    k: usize,
    cache: RwLock<HashMap<Molecule, Arc<ExpansionResult>>>,
    calls: AtomicU64,
}

impl<E: Expander> CachedExpander<E> {
    pub fn new(inner: E, k: usize) -> Self {
        CachedExpander {
            inner,
            k,
            cache: RwLock::new(HashMap::new()),
            calls: AtomicU64::new(0),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn inner(&self) -> &E {
        &self.inner
    }

    /// Number of cache misses, i.e. calls forwarded to the wrapped expander.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn get(&self, m: &Molecule) -> Arc<ExpansionResult> {
        if let Some(hit) = self.cache.read().expect("cache lock poisoned").get(m) {
            return Arc::clone(hit);
        }
        let mut cache = self.cache.write().expect("cache lock poisoned");
        if let Some(hit) = cache.get(m) {
            return Arc::clone(hit);
        }
        let result = Arc::new(self.inner.expand(m, self.k));
        self.calls.fetch_add(1, Ordering::SeqCst);
        cache.insert(m.clone(), Arc::clone(&result));
        result
    }
}
