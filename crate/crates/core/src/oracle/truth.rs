//! Truth tables over at most three variables and their NPN classes.
//!
//! Tables are stored as 8 bits; variable `i` toggles with period `2^i`.
//! A function of fewer than three variables is replicated over the unused
//! upper variables.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub const MAX_VARS: usize = 3;

const VAR_MASKS: [u8; MAX_VARS] = [0xAA, 0xCC, 0xF0];

#[derive(
    Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct TruthTable(pub u8);

impl TruthTable {
    pub const FALSE: TruthTable = TruthTable(0);
    pub const TRUE: TruthTable = TruthTable(0xFF);
    pub const XOR2: TruthTable = TruthTable(0x66);
    pub const AND2: TruthTable = TruthTable(0x88);
    pub const XOR3: TruthTable = TruthTable(0x96);
    pub const MAJ3: TruthTable = TruthTable(0xE8);

    pub fn var(i: usize) -> TruthTable {
        TruthTable(VAR_MASKS[i])
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn bit(self, minterm: usize) -> bool {
        (self.0 >> minterm) & 1 == 1
    }

    pub fn depends_on(self, i: usize) -> bool {
        let shift = 1 << i;
        let hi = self.0 & VAR_MASKS[i];
        let lo = self.0 & !VAR_MASKS[i];
        (hi >> shift) != lo
    }

    /// Bit `i` set iff the function depends on variable `i`.
    pub fn support_mask(self) -> u8 {
        (0..MAX_VARS).fold(0, |m, i| m | ((self.depends_on(i) as u8) << i))
    }

    /// Re-expresses the function over only the variables in `mask`,
    /// compacted to positions `0..popcount(mask)` and replicated.
    pub fn shrink(self, mask: u8) -> TruthTable {
        let positions: Vec<usize> = (0..MAX_VARS).filter(|&i| mask >> i & 1 == 1).collect();
        let mut out = 0u8;
        for m in 0..8usize {
            let mut src = 0usize;
            for (k, &p) in positions.iter().enumerate() {
                src |= ((m >> k) & 1) << p;
            }
            out |= (self.bit(src) as u8) << m;
        }
        TruthTable(out)
    }

    /// Maps a table over `s` sorted leaves onto a superset of leaves;
    /// `positions` is the bit mask of where the old leaves sit in the new
    /// ordering.
    #[inline]
    pub fn stretch(self, positions: u8) -> TruthTable {
        TruthTable(stretch_table()[positions as usize][self.0 as usize])
    }
}

impl std::ops::Not for TruthTable {
    type Output = TruthTable;

    fn not(self) -> TruthTable {
        TruthTable(!self.0)
    }
}

impl std::ops::BitAnd for TruthTable {
    type Output = TruthTable;

    fn bitand(self, rhs: TruthTable) -> TruthTable {
        TruthTable(self.0 & rhs.0)
    }
}

impl std::ops::BitXor for TruthTable {
    type Output = TruthTable;

    fn bitxor(self, rhs: TruthTable) -> TruthTable {
        TruthTable(self.0 ^ rhs.0)
    }
}

fn stretch_table() -> &'static [[u8; 256]; 8] {
    static TABLE: OnceLock<Box<[[u8; 256]; 8]>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u8; 256]; 8]);
        for mask in 0..8u8 {
            for tt in 0..256usize {
                let positions: Vec<usize> = (0..MAX_VARS).filter(|&i| mask >> i & 1 == 1).collect();
                let mut out = 0u8;
                for m in 0..8usize {
                    let mut src = 0usize;
                    for (k, &p) in positions.iter().enumerate() {
                        src |= ((m >> p) & 1) << k;
                    }
                    out |= (((tt >> src) & 1) as u8) << m;
                }
                t[mask as usize][tt] = out;
            }
        }
        t
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    match n {
        0 => vec![vec![]],
        _ => {
            let mut out = Vec::new();
            for p in permutations(n - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
    }
}

/// Applies input permutation `perm`, input negation `neg` and output
/// negation to a function over `num_vars` variables.
pub fn transform(
    tt: TruthTable,
    num_vars: usize,
    perm: &[usize],
    neg: u8,
    out_neg: bool,
) -> TruthTable {
    let mut out = 0u8;
    for m in 0..8usize {
        let mut src = m & !((1 << num_vars) - 1);
        for (i, &p) in perm.iter().enumerate() {
            let bit = ((m >> i) & 1) ^ ((neg as usize >> i) & 1);
            src |= bit << p;
        }
        out |= ((tt.bit(src) ^ out_neg) as u8) << m;
    }
    TruthTable(out)
}

fn canonical_table(num_vars: usize) -> &'static [u8; 256] {
    static TABLES: [OnceLock<Box<[u8; 256]>>; MAX_VARS + 1] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    TABLES[num_vars].get_or_init(|| {
        let perms = permutations(num_vars);
        let mut t = Box::new([0u8; 256]);
        for tt in 0..256usize {
            let f = TruthTable(tt as u8);
            let mut best = u8::MAX;
            for p in &perms {
                for neg in 0..(1u8 << num_vars) {
                    for out_neg in [false, true] {
                        best = best.min(transform(f, num_vars, p, neg, out_neg).0);
                    }
                }
            }
            t[tt] = best;
        }
        t
    })
}

/// Smallest table over all `num_vars! * 2^num_vars * 2` NPN transforms.
pub fn npn_class(tt: TruthTable, num_vars: usize) -> TruthTable {
    assert!(
        num_vars <= MAX_VARS,
        "NPN classes are tabulated for at most 3 variables"
    );
    TruthTable(canonical_table(num_vars)[tt.0 as usize])
}

/// Adder-relevant function classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionClass {
    Xor2,
    Xor3,
    Maj3,
    And2,
}

/// Classifies a table by its true support; returns the class and the
/// support mask, or `None` if the function is not adder-relevant.
pub fn function_class(tt: TruthTable) -> Option<(FunctionClass, u8)> {
    static TABLE: OnceLock<[Option<(FunctionClass, u8)>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|f| classify_table(TruthTable(f as u8))))
        [tt.0 as usize]
}

fn classify_table(tt: TruthTable) -> Option<(FunctionClass, u8)> {
    let mask = tt.support_mask();
    match mask.count_ones() {
        3 => {
            let c = npn_class(tt, 3);
            if c == npn_class(TruthTable::XOR3, 3) {
                Some((FunctionClass::Xor3, mask))
            } else if c == npn_class(TruthTable::MAJ3, 3) {
                Some((FunctionClass::Maj3, mask))
            } else {
                None
            }
        }
        2 => {
            let c = npn_class(tt.shrink(mask), 2);
            if c == npn_class(TruthTable::XOR2, 2) {
                Some((FunctionClass::Xor2, mask))
            } else if c == npn_class(TruthTable::AND2, 2) {
                Some((FunctionClass::And2, mask))
            } else {
                None
            }
        }
        _ => None,
    }
}
