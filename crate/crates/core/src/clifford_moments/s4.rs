//! The symmetric group on four letters: elements, classes and characters.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// `p[j]` is the image of slot `j` (0-based).
pub type Perm = [usize; 4];

/// Class order: identity, transposition, double transposition, 3-cycle, 4-cycle.
pub const CLASS_NAMES: [&str; 5] = ["e", "(12)", "(12)(34)", "(123)", "(1234)"];
pub const CLASS_SIZES: [usize; 5] = [1, 6, 3, 8, 6];

/// Partitions (4), (31), (22), (211), (1111).
pub const PARTITIONS: [&[usize]; 5] = [&[4], &[3, 1], &[2, 2], &[2, 1, 1], &[1, 1, 1, 1]];
pub const IRREP_DIMS: [i64; 5] = [1, 3, 2, 3, 1];

/// `CHARACTERS[λ][class]`.
pub const CHARACTERS: [[i64; 5]; 5] = [
    [1, 1, 1, 1, 1],
    [3, 1, -1, 0, -1],
    [2, 0, 2, -1, 0],
    [3, -1, -1, 0, 1],
    [1, -1, 1, 1, -1],
];

pub const IDENTITY: Perm = [0, 1, 2, 3];

pub fn compose(s: &Perm, t: &Perm) -> Perm {
    [s[t[0]], s[t[1]], s[t[2]], s[t[3]]]
}

pub fn inverse(p: &Perm) -> Perm {
    let mut out = [0; 4];
    for j in 0..4 {
        out[p[j]] = j;
    }
    out
}

/// Cycle lengths, longest first.
pub fn cycle_type(p: &Perm) -> Vec<usize> {
    let mut seen = [false; 4];
    let mut lens = Vec::new();
    for start in 0..4 {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = p[j];
            len += 1;
        }
        lens.push(len);
    }
    lens.sort_unstable_by(|a, b| b.cmp(a));
    lens
}

pub fn n_cycles(p: &Perm) -> usize {
    cycle_type(p).len()
}

pub fn class_of(p: &Perm) -> usize {
    match cycle_type(p).as_slice() {
        [1, 1, 1, 1] => 0,
        [2, 1, 1] => 1,
        [2, 2] => 2,
        [3, 1] => 3,
        [4] => 4,
        other => unreachable!("cycle type {other:?}"),
    }
}

/// Product of disjoint cycles given 1-based, e.g. `from_cycles(&[&[1, 3], &[2, 4]])`.
pub fn from_cycles(cycles: &[&[usize]]) -> Perm {
    let mut p = IDENTITY;
    for cyc in cycles {
        for (i, &a) in cyc.iter().enumerate() {
            p[a - 1] = cyc[(i + 1) % cyc.len()] - 1;
        }
    }
    p
}

pub struct S4Data {
    elements: Vec<Perm>,
    classes: Vec<usize>,
    table: Vec<[usize; 24]>,
}

impl S4Data {
    /// Shared instance; the character table is checked on first use.
    pub fn get() -> &'static S4Data {
        static DATA: OnceLock<S4Data> = OnceLock::new();
        DATA.get_or_init(|| {
            let d = S4Data::build();
            d.self_test().expect("S4 character table failed its self-test");
            d
        })
    }

    fn build() -> Self {
        let mut elements = Vec::with_capacity(24);
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        let p = [a, b, c, d];
                        let mut s = p;
                        s.sort_unstable();
                        if s == IDENTITY {
                            elements.push(p);
                        }
                    }
                }
            }
        }
        let classes = elements.iter().map(class_of).collect();
        let index = |p: &Perm| elements.iter().position(|e| e == p).unwrap();
        let table = elements
            .iter()
            .map(|s| {
                let mut row = [0usize; 24];
                for (j, t) in elements.iter().enumerate() {
                    row[j] = index(&compose(s, t));
                }
                row
            })
            .collect();
        Self { elements, classes, table }
    }

    pub fn elements(&self) -> &[Perm] {
        &self.elements
    }

    pub fn class(&self, idx: usize) -> usize {
        self.classes[idx]
    }

    /// Index of `elements[a] ∘ elements[b]`.
    pub fn product(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn index_of(&self, p: &Perm) -> usize {
        self.elements.iter().position(|e| e == p).expect("not a permutation")
    }

    pub fn character(&self, irrep: usize, idx: usize) -> i64 {
        CHARACTERS[irrep][self.classes[idx]]
    }

    pub fn self_test(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Numerical(format!("S4 self-test: {m}")));
        if self.elements.len() != 24 {
            return fail("wrong group order".into());
        }
        if IRREP_DIMS.iter().map(|d| d * d).sum::<i64>() != 24 {
            return fail("dimensions do not square-sum to 24".into());
        }
        for c in 0..5 {
            let n = self.classes.iter().filter(|&&x| x == c).count();
            if n != CLASS_SIZES[c] {
                return fail(format!("class {} has {n} elements", CLASS_NAMES[c]));
            }
        }
        for (l, row) in CHARACTERS.iter().enumerate() {
            if row[0] != IRREP_DIMS[l] {
                return fail(format!("χ_{l}(e) ≠ d_{l}"));
            }
        }
        for a in 0..5 {
            for b in 0..5 {
                let rows: i64 = (0..5)
                    .map(|c| CLASS_SIZES[c] as i64 * CHARACTERS[a][c] * CHARACTERS[b][c])
                    .sum();
                if rows != if a == b { 24 } else { 0 } {
                    return fail(format!("row orthogonality ({a},{b})"));
                }
                let cols: i64 = (0..5).map(|l| CHARACTERS[l][a] * CHARACTERS[l][b]).sum();
                let want = if a == b { 24 / CLASS_SIZES[a] as i64 } else { 0 };
                if cols != want {
                    return fail(format!("column orthogonality ({a},{b})"));
                }
            }
        }
        // class function check on products: χ(st) is constant on conjugates
        for (i, s) in self.elements.iter().enumerate() {
            for t in &self.elements {
                let conj = compose(&compose(t, s), &inverse(t));
                if class_of(&conj) != self.classes[i] {
                    return fail("conjugation changed a class".into());
                }
            }
        }
        Ok(())
    }
}
