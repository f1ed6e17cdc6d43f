use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpTag {
    Equal,
    Insert,
    Delete,
    Replace,
}

/// `(tag, i1, i2, j1, j2)`: old[i1..i2] relates to new[j1..j2]. Offsets count chars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opcode {
    pub tag: OpTag,
    pub i1: usize,
    pub i2: usize,
    pub j1: usize,
    pub j2: usize,
}

impl Opcode {
    pub fn new(tag: OpTag, i1: usize, i2: usize, j1: usize, j2: usize) -> Self {
        Opcode {
            tag,
            i1,
            i2,
            j1,
            j2,
        }
    }
}

/// Ratcliff–Obershelp matcher over two char sequences, no junk heuristics.
pub struct SequenceMatcher<'a, T> {
    a: &'a [T],
    b: &'a [T],
    b2j: HashMap<&'a T, Vec<usize>>,
}

impl<'a, T: Eq + std::hash::Hash> SequenceMatcher<'a, T> {
    pub fn new(a: &'a [T], b: &'a [T]) -> Self {
        let mut b2j: HashMap<&T, Vec<usize>> = HashMap::new();
        for (j, x) in b.iter().enumerate() {
            b2j.entry(x).or_default().push(j);
        }
        SequenceMatcher { a, b, b2j }
    }

    /// Longest common block in a[alo..ahi] × b[blo..bhi]. Among equally long
    /// blocks the one starting earliest in `a` wins, then earliest in `b`.
    pub fn find_longest_match(
        &self,
        alo: usize,
        ahi: usize,
        blo: usize,
        bhi: usize,
    ) -> (usize, usize, usize) {
        let (mut besti, mut bestj, mut bestk) = (alo, blo, 0);
        // j2len[j] = length of the match ending at a[i-1], b[j]
        let mut j2len: HashMap<usize, usize> = HashMap::new();
        for i in alo..ahi {
            let mut next: HashMap<usize, usize> = HashMap::new();
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = if j > 0 {
                        j2len.get(&(j - 1)).copied().unwrap_or(0) + 1
                    } else {
                        1
                    };
                    next.insert(j, k);
                    if k > bestk {
                        besti = i + 1 - k;
                        bestj = j + 1 - k;
                        bestk = k;
                    }
                }
            }
            j2len = next;
        }
        (besti, bestj, bestk)
    }

    /// Matching blocks in increasing order, adjacent blocks merged, ending
    /// with the `(len a, len b, 0)` sentinel.
    pub fn matching_blocks(&self) -> Vec<(usize, usize, usize)> {
        let mut queue = vec![(0, self.a.len(), 0, self.b.len())];
        let mut blocks = Vec::new();
        while let Some((alo, ahi, blo, bhi)) = queue.pop() {
            let (i, j, k) = self.find_longest_match(alo, ahi, blo, bhi);
            if k > 0 {
                blocks.push((i, j, k));
                if alo < i && blo < j {
                    queue.push((alo, i, blo, j));
                }
                if i + k < ahi && j + k < bhi {
                    queue.push((i + k, ahi, j + k, bhi));
                }
            }
        }
        blocks.sort_unstable();
        let mut merged: Vec<(usize, usize, usize)> = Vec::with_capacity(blocks.len() + 1);
        for (i, j, k) in blocks {
            match merged.last_mut() {
                Some((pi, pj, pk)) if *pi + *pk == i && *pj + *pk == j => *pk += k,
                _ => merged.push((i, j, k)),
            }
        }
        merged.push((self.a.len(), self.b.len(), 0));
        merged
    }

    pub fn opcodes(&self) -> Vec<Opcode> {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        for (ai, bj, size) in self.matching_blocks() {
            let tag = match (i < ai, j < bj) {
                (true, true) => Some(OpTag::Replace),
                (true, false) => Some(OpTag::Delete),
                (false, true) => Some(OpTag::Insert),
                (false, false) => None,
            };
            if let Some(tag) = tag {
                out.push(Opcode::new(tag, i, ai, j, bj));
            }
            i = ai + size;
            j = bj + size;
            if size > 0 {
                out.push(Opcode::new(OpTag::Equal, ai, i, bj, j));
            }
        }
        out
    }

    /// 2·M / T, and 1.0 when both sides are empty.
    pub fn ratio(&self) -> f64 {
        let total = self.a.len() + self.b.len();
        if total == 0 {
            return 1.0;
        }
        let m: usize = self.matching_blocks().iter().map(|b| b.2).sum();
        2.0 * m as f64 / total as f64
    }
}

pub fn diff_text(old: &str, new: &str) -> Vec<Opcode> {
    let a: Vec<char> = old.chars().collect();
    let b: Vec<char> = new.chars().collect();
    SequenceMatcher::new(&a, &b).opcodes()
}

pub fn similarity(old: &str, new: &str) -> f64 {
    let a: Vec<char> = old.chars().collect();
    let b: Vec<char> = new.chars().collect();
    SequenceMatcher::new(&a, &b).ratio()
}

/// Rebuild `new` from `old` plus the inserted/replacing slices of `new`.
pub fn apply_opcodes(old: &str, new: &str, ops: &[Opcode]) -> String {
    let a: Vec<char> = old.chars().collect();
    let b: Vec<char> = new.chars().collect();
    let mut out = String::new();
    for op in ops {
        match op.tag {
            OpTag::Equal => out.extend(&a[op.i1..op.i2]),
            OpTag::Insert | OpTag::Replace => out.extend(&b[op.j1..op.j2]),
            OpTag::Delete => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use OpTag::*;

    #[test]
    fn identity_and_delete() {
        assert_eq!(
            diff_text("abc", "abc"),
            vec![Opcode::new(Equal, 0, 3, 0, 3)]
        );
        assert_eq!(diff_text("abc", ""), vec![Opcode::new(Delete, 0, 3, 0, 0)]);
        assert!(diff_text("", "").is_empty());
    }

    #[test]
    fn hello_world_is_one_insert() {
        assert_eq!(
            diff_text("hello", "hello world"),
            vec![
                Opcode::new(Equal, 0, 5, 0, 5),
                Opcode::new(Insert, 5, 5, 5, 11)
            ]
        );
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(similarity("abcd", "bcde"), 0.75);
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("ab", "cd"), 0.0);
    }
}
