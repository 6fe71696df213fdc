use std::collections::HashMap;
use std::hash::Hash;

use crate::error::{Error, Result};

/// Categorical response with `K` levels coded `0..K`.
///
/// Codes are zero-based; level `c` corresponds to the `(c+1)`-th level in
/// one-based notation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    codes: Vec<usize>,
    k: usize,
    level_names: Option<Vec<String>>,
}

impl LabelVector {
    /// Codes in `0..k`; levels need not all be observed.
    pub fn from_codes(codes: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::TooFewLevels { k });
        }
        if let Some(&code) = codes.iter().find(|&&c| c >= k) {
            return Err(Error::InvalidLabel { code, k });
        }
        Ok(Self {
            codes,
            k,
            level_names: None,
        })
    }

    /// Recodes raw labels by order of first appearance.
    pub fn from_raw<S: Eq + Hash + Clone + ToString>(raw: &[S]) -> Self {
        let mut index: HashMap<S, usize> = HashMap::new();
        let mut names = Vec::new();
        let codes = raw
            .iter()
            .map(|v| {
                *index.entry(v.clone()).or_insert_with(|| {
                    names.push(v.to_string());
                    names.len() - 1
                })
            })
            .collect();
        Self {
            codes,
            k: names.len(),
            level_names: Some(names),
        }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn level_names(&self) -> Option<&[String]> {
        self.level_names.as_deref()
    }

    /// Number of levels that actually occur.
    pub fn observed_levels(&self) -> usize {
        let mut seen = vec![false; self.k];
        for &c in &self.codes {
            seen[c] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Applies a bijection of the levels: code `c` becomes `perm[c]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k];
        if perm.len() != self.k {
            return Err(Error::LengthMismatch {
                what: "level permutation",
                expected: self.k,
                found: perm.len(),
            });
        }
        for &p in perm {
            if p >= self.k || seen[p] {
                return Err(Error::InvalidArgument("relabeling is not a bijection".into()));
            }
            seen[p] = true;
        }
        let codes = self.codes.iter().map(|&c| perm[c]).collect();
        let level_names = self.level_names.as_ref().map(|names| {
            let mut out = vec![String::new(); self.k];
            for (c, name) in names.iter().enumerate() {
                out[perm[c]] = name.clone();
            }
            out
        });
        Ok(Self {
            codes,
            k: self.k,
            level_names,
        })
    }
}
