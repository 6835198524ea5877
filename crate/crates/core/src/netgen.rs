//! Multiplier generators.
//!
//! Both generators build every adder bitslice through [`DatapathBuilder`],
//! which records each instantiated full/half adder so the exact oracle can
//! be checked against constructive ground truth.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aig::{Aig, AigBuilder, Literal};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AdderKind {
    #[serde(rename = "FA")]
    Full,
    #[serde(rename = "HA")]
    Half,
}

/// One adder bitslice as instantiated by a generator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderRecord {
    pub kind: AdderKind,
    pub inputs: Vec<Literal>,
    pub sum: Literal,
    pub carry: Literal,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructiveAdders {
    pub adders: Vec<AdderRecord>,
}

impl ConstructiveAdders {
    pub fn count(&self, kind: AdderKind) -> usize {
        self.adders.iter().filter(|a| a.kind == kind).count()
    }

    /// `(kind, sorted input node ids)` per adder, sorted.
    pub fn signatures(&self) -> Vec<(AdderKind, Vec<u32>)> {
        let mut sigs: Vec<_> = self
            .adders
            .iter()
            .map(|a| {
                let mut ids: Vec<u32> = a.inputs.iter().map(|l| l.var()).collect();
                ids.sort_unstable();
                (a.kind, ids)
            })
            .collect();
        sigs.sort();
        sigs
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for a in &self.adders {
            out.push_str(&serde_json::to_string(a).expect("adder record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_json_lines(text: &str) -> Result<ConstructiveAdders, serde_json::Error> {
        let adders = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(ConstructiveAdders { adders })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetgenError {
    #[error("bit width {bits} is below the minimum of {min} for this multiplier")]
    BitWidth { bits: usize, min: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Csa,
    Booth,
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csa" => Ok(Family::Csa),
            "booth" => Ok(Family::Booth),
            other => Err(format!("unknown multiplier family {other:?}")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::Csa => "csa",
            Family::Booth => "booth",
        })
    }
}

/// Generates a multiplier of the given family and operand width.
pub fn generate(family: Family, bits: usize) -> Result<(Aig, ConstructiveAdders), NetgenError> {
    match family {
        Family::Csa => gen_csa_multiplier(bits),
        Family::Booth => gen_booth_multiplier(bits),
    }
}

/// An [`AigBuilder`] that also records the adders it instantiates.
#[derive(Debug)]
pub struct DatapathBuilder {
    pub aig: AigBuilder,
    adders: Vec<AdderRecord>,
}

impl DatapathBuilder {
    pub fn new(num_inputs: usize) -> DatapathBuilder {
        DatapathBuilder {
            aig: AigBuilder::new(num_inputs),
            adders: Vec::new(),
        }
    }

    pub fn input(&self, index: usize) -> Literal {
        self.aig.input(index)
    }

    /// Half adder: `carry = a & b` and a three-AND XOR that shares the
    /// carry node. Constant or repeated operands fold without gates and are
    /// not recorded.
    pub fn half_adder(&mut self, a: Literal, b: Literal) -> (Literal, Literal) {
        if a == Literal::FALSE {
            return (b, Literal::FALSE);
        }
        if b == Literal::FALSE {
            return (a, Literal::FALSE);
        }
        if a == Literal::TRUE {
            return (!b, b);
        }
        if b == Literal::TRUE {
            return (!a, a);
        }
        if a == b {
            return (Literal::FALSE, a);
        }
        if a == !b {
            return (Literal::TRUE, Literal::FALSE);
        }
        let carry = self.aig.and(a, b);
        let neither = self.aig.and(!a, !b);
        let sum = self.aig.and(!carry, !neither);
        self.adders.push(AdderRecord {
            kind: AdderKind::Half,
            inputs: vec![a, b],
            sum,
            carry,
        });
        (sum, carry)
    }

    /// Full adder: sum as two chained XOR2s, carry as
    /// `(a & b) | (cin & (a ^ b))` reusing the first XOR2.
    pub fn full_adder(&mut self, a: Literal, b: Literal, cin: Literal) -> (Literal, Literal) {
        let ops = [a, b, cin];
        if let Some(k) = ops.iter().position(|&l| l == Literal::FALSE) {
            let rest: Vec<_> = (0..3).filter(|&i| i != k).map(|i| ops[i]).collect();
            return self.half_adder(rest[0], rest[1]);
        }
        if let Some(k) = ops.iter().position(|&l| l == Literal::TRUE) {
            // p + q + 1: sum = !(p ^ q), carry = p | q
            let rest: Vec<_> = (0..3).filter(|&i| i != k).map(|i| ops[i]).collect();
            let (s, c) = self.half_adder(!rest[0], !rest[1]);
            return (!s, !c);
        }
        for (x, y, z) in [(a, b, cin), (a, cin, b), (b, cin, a)] {
            if x == y {
                return (z, x);
            }
            if x == !y {
                return (!z, z);
            }
        }
        let both = self.aig.and(a, b);
        let neither = self.aig.and(!a, !b);
        let half = self.aig.and(!both, !neither);
        let prop = self.aig.and(half, cin);
        let kill = self.aig.and(!half, !cin);
        let sum = self.aig.and(!prop, !kill);
        let carry = !self.aig.and(!both, !prop);
        self.adders.push(AdderRecord {
            kind: AdderKind::Full,
            inputs: vec![a, b, cin],
            sum,
            carry,
        });
        (sum, carry)
    }

    pub fn finish(self) -> (Aig, ConstructiveAdders) {
        (
            self.aig.finish(),
            ConstructiveAdders {
                adders: self.adders,
            },
        )
    }
}

/// Unsigned `n x n` carry-save array multiplier with a ripple-carry final
/// row. Inputs are `a[0..n]` then `b[0..n]`, outputs the `2n` product bits
/// LSB first. Uses `n(n-2)` full adders and `n` half adders for `n >= 2`.
pub fn gen_csa_multiplier(n: usize) -> Result<(Aig, ConstructiveAdders), NetgenError> {
    if n == 0 {
        return Err(NetgenError::BitWidth { bits: n, min: 1 });
    }
    let mut d = DatapathBuilder::new(2 * n);
    let a: Vec<Literal> = (0..n).map(|j| d.input(j)).collect();
    let b: Vec<Literal> = (0..n).map(|i| d.input(n + i)).collect();
    let pp: Vec<Vec<Literal>> = (0..n)
        .map(|i| (0..n).map(|j| d.aig.and(a[j], b[i])).collect())
        .collect();

    let mut product = Vec::with_capacity(2 * n);
    // sums[j] has weight i + j for the row i just reduced; carries[j] has
    // weight i + j + 1.
    let mut sums = pp[0].clone();
    let mut carries: Vec<Literal> = Vec::new();
    product.push(sums[0]);
    for (i, row) in pp.iter().enumerate().skip(1) {
        let mut next_sums = Vec::with_capacity(n);
        let mut next_carries = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let (s, c) = if i == 1 {
                d.half_adder(row[j], sums[j + 1])
            } else {
                d.full_adder(row[j], sums[j + 1], carries[j])
            };
            next_sums.push(s);
            next_carries.push(c);
        }
        next_sums.push(row[n - 1]);
        product.push(next_sums[0]);
        sums = next_sums;
        carries = next_carries;
    }

    let mut ripple = Literal::FALSE;
    for k in 0..n - 1 {
        let (s, c) = if k == 0 {
            d.half_adder(sums[1], carries[0])
        } else {
            d.full_adder(sums[k + 1], carries[k], ripple)
        };
        product.push(s);
        ripple = c;
    }
    product.push(ripple);

    for lit in product {
        d.aig.add_output(lit).expect("product literal exists");
    }
    Ok(d.finish())
}

/// A row of bits keyed by weight.
type Row = Vec<Option<Literal>>;

/// Signed `n x n` radix-4 Booth multiplier.
///
/// Partial products select `{0, ±A, ±2A}` from overlapping multiplier bit
/// triplets. Each row's sign bit is complemented and the resulting
/// constant offset is precomputed into a single row together with the
/// `+1` negation bits, giving `ceil(n/2) + 1` rows. The rows are reduced
/// by a tree of 3:2 carry-save stages and a final ripple-carry adder.
pub fn gen_booth_multiplier(n: usize) -> Result<(Aig, ConstructiveAdders), NetgenError> {
    if n < 2 {
        return Err(NetgenError::BitWidth { bits: n, min: 2 });
    }
    let width = 2 * n;
    let mut d = DatapathBuilder::new(2 * n);
    let a: Vec<Literal> = (0..n).map(|j| d.input(j)).collect();
    let b: Vec<Literal> = (0..n).map(|i| d.input(n + i)).collect();
    let a_ext = |j: isize| -> Literal {
        if j < 0 {
            Literal::FALSE
        } else {
            a[(j as usize).min(n - 1)]
        }
    };
    let b_ext = |k: isize| -> Literal {
        if k < 0 {
            Literal::FALSE
        } else {
            b[(k as usize).min(n - 1)]
        }
    };

    let groups = n.div_ceil(2);
    let mut rows: Vec<Row> = Vec::with_capacity(groups + 1);
    let mut extra: Row = vec![None; width];
    let mut offset = vec![false; width];
    for g in 0..groups {
        let base = 2 * g as isize;
        let (y2, y1, y0) = (b_ext(base + 1), b_ext(base), b_ext(base - 1));
        let neg = y2;
        let one = d.aig.xor(y1, y0);
        let ones = d.aig.and(y1, y0);
        let zeros = d.aig.and(!y1, !y0);
        let pos_two = d.aig.and(!y2, ones);
        let neg_two = d.aig.and(y2, zeros);
        let two = d.aig.or(pos_two, neg_two);

        let mut row: Row = vec![None; width];
        for j in 0..=n {
            let pos = 2 * g + j;
            if pos >= width {
                break;
            }
            let pick_one = d.aig.and(one, a_ext(j as isize));
            let pick_two = d.aig.and(two, a_ext(j as isize - 1));
            let sel = d.aig.or(pick_one, pick_two);
            let bit = d.aig.xor(sel, neg);
            row[pos] = Some(if j == n { !bit } else { bit });
        }
        rows.push(row);
        extra[2 * g] = Some(neg);
        if 2 * g + n < width {
            offset[2 * g + n] = true;
        }
    }
    // The complemented sign bits overcount by sum(2^(2g+n)); add its
    // two's-complement negation modulo 2^(2n).
    let mut carry = true;
    for (pos, bit) in offset.iter().enumerate() {
        let inv = !bit;
        let value = inv ^ carry;
        carry = inv && carry;
        if value {
            debug_assert!(extra[pos].is_none());
            extra[pos] = Some(Literal::TRUE);
        }
    }
    rows.push(extra);

    while rows.len() > 2 {
        let mut next = Vec::with_capacity(rows.len() * 2 / 3 + 2);
        let mut chunks = rows.chunks_exact(3);
        for chunk in &mut chunks {
            let mut sum_row: Row = vec![None; width];
            let mut carry_row: Row = vec![None; width];
            for w in 0..width {
                let bits: Vec<Literal> = chunk.iter().filter_map(|r| r[w]).collect();
                let (s, c) = match bits.as_slice() {
                    [] => continue,
                    [x] => (*x, Literal::FALSE),
                    [x, y] => d.half_adder(*x, *y),
                    [x, y, z] => d.full_adder(*x, *y, *z),
                    _ => unreachable!(),
                };
                sum_row[w] = Some(s);
                if w + 1 < width && c != Literal::FALSE {
                    carry_row[w + 1] = Some(c);
                }
            }
            next.push(sum_row);
            next.push(carry_row);
        }
        next.extend(chunks.remainder().iter().cloned());
        rows = next;
    }

    let mut ripple = Literal::FALSE;
    for w in 0..width {
        // the ripple carry enters as the first adder input
        let mut bits: Vec<Literal> = Vec::with_capacity(3);
        if ripple != Literal::FALSE {
            bits.push(ripple);
        }
        bits.extend(rows.iter().filter_map(|r| r[w]));
        let (s, c) = match bits.as_slice() {
            [] => (Literal::FALSE, Literal::FALSE),
            [x] => (*x, Literal::FALSE),
            [x, y] => d.half_adder(*x, *y),
            [x, y, z] => d.full_adder(*x, *y, *z),
            _ => unreachable!(),
        };
        d.aig.add_output(s).expect("product literal exists");
        ripple = c;
    }
    Ok(d.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_words(aig: &Aig, words: &[u64], lit: Literal) -> u64 {
        crate::aig::eval_lit(&aig.simulate_nodes(words), lit)
    }

    #[test]
    fn half_adder_degenerate_cases() {
        let mut d = DatapathBuilder::new(1);
        let x = d.input(0);
        assert_eq!(d.half_adder(Literal::FALSE, x), (x, Literal::FALSE));
        assert_eq!(d.half_adder(x, x), (Literal::FALSE, x));
        let (aig, adders) = d.finish();
        assert_eq!(aig.num_ands(), 0);
        assert!(adders.adders.is_empty());
    }

    #[test]
    fn half_adder_exhaustive() {
        let mut d = DatapathBuilder::new(2);
        let (a, b) = (d.input(0), d.input(1));
        let (s, c) = d.half_adder(a, b);
        let (aig, adders) = d.finish();
        assert_eq!(aig.num_ands(), 3);
        assert_eq!(adders.count(AdderKind::Half), 1);
        // bit k of the words encodes assignment k
        let words = [0b1010u64, 0b1100];
        let (sw, cw) = (eval_words(&aig, &words, s), eval_words(&aig, &words, c));
        for k in 0..4 {
            let (x, y) = ((words[0] >> k) & 1, (words[1] >> k) & 1);
            assert_eq!((sw >> k) & 1, (x + y) % 2);
            assert_eq!((cw >> k) & 1, (x + y) / 2);
        }
    }

    #[test]
    fn full_adder_exhaustive() {
        let mut d = DatapathBuilder::new(3);
        let (a, b, c) = (d.input(0), d.input(1), d.input(2));
        let (s, co) = d.full_adder(a, b, c);
        let (aig, adders) = d.finish();
        assert_eq!(aig.num_ands(), 7);
        assert_eq!(adders.count(AdderKind::Full), 1);
        let words = [0b1010_1010u64, 0b1100_1100, 0b1111_0000];
        let (sw, cw) = (eval_words(&aig, &words, s), eval_words(&aig, &words, co));
        for k in 0..8 {
            let total: u64 = words.iter().map(|w| (w >> k) & 1).sum();
            assert_eq!((sw >> k) & 1, total % 2);
            assert_eq!((cw >> k) & 1, total / 2);
        }
    }

    #[test]
    fn full_adder_with_constants_degenerates() {
        let mut d = DatapathBuilder::new(2);
        let (a, b) = (d.input(0), d.input(1));
        let (s0, c0) = d.full_adder(a, b, Literal::FALSE);
        let (aig, adders) = d.finish();
        assert_eq!(adders.signatures(), vec![(AdderKind::Half, vec![1, 2])]);
        assert_eq!(aig.num_ands(), 3);
        let words = [0b1010u64, 0b1100];
        assert_eq!(eval_words(&aig, &words, s0) & 0xf, 0b0110);
        assert_eq!(eval_words(&aig, &words, c0) & 0xf, 0b1000);

        let mut d = DatapathBuilder::new(2);
        let (a, b) = (d.input(0), d.input(1));
        let (s1, c1) = d.full_adder(Literal::TRUE, a, b);
        let (aig, _) = d.finish();
        assert_eq!(eval_words(&aig, &words, s1) & 0xf, 0b1001);
        assert_eq!(eval_words(&aig, &words, c1) & 0xf, 0b1110);
    }

    #[test]
    fn csa_adder_counts() {
        for n in 1..=10 {
            let (_, adders) = gen_csa_multiplier(n).unwrap();
            let expected_fa = if n >= 2 { n * (n - 2) } else { 0 };
            let expected_ha = if n >= 2 { n } else { 0 };
            assert_eq!(adders.count(AdderKind::Full), expected_fa, "n={n}");
            assert_eq!(adders.count(AdderKind::Half), expected_ha, "n={n}");
        }
        let (aig, adders) = gen_csa_multiplier(1).unwrap();
        assert_eq!(aig.num_ands(), 1);
        assert!(adders.adders.is_empty());
        assert_eq!(
            gen_csa_multiplier(0).unwrap_err(),
            NetgenError::BitWidth { bits: 0, min: 1 }
        );
        assert!(gen_booth_multiplier(1).is_err());
    }

    #[test]
    fn json_lines_round_trip() {
        let (_, adders) = gen_csa_multiplier(3).unwrap();
        let text = adders.to_json_lines();
        assert!(text
            .lines()
            .next()
            .unwrap()
            .starts_with("{\"kind\":\"HA\",\"inputs\":["));
        assert_eq!(ConstructiveAdders::from_json_lines(&text).unwrap(), adders);
    }
}

/// Simulates a generated multiplier on operand pairs (low `bits` bits of
/// each operand are used) and returns the raw `2 * bits`-wide output words.
pub fn simulate_product(aig: &Aig, bits: usize, pairs: &[(u64, u64)]) -> Vec<u128> {
    assert_eq!(aig.num_inputs(), 2 * bits);
    assert!(bits <= 64);
    let mut result = Vec::with_capacity(pairs.len());
    for chunk in pairs.chunks(64) {
        let mut words = vec![0u64; 2 * bits];
        for (p, &(x, y)) in chunk.iter().enumerate() {
            for j in 0..bits {
                words[j] |= ((x >> j) & 1) << p;
                words[bits + j] |= ((y >> j) & 1) << p;
            }
        }
        let outs = aig.simulate(&words);
        for p in 0..chunk.len() {
            let mut v = 0u128;
            for (k, w) in outs.iter().enumerate() {
                v |= (((w >> p) & 1) as u128) << k;
            }
            result.push(v);
        }
    }
    result
}
