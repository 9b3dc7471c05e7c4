//! Private-key functions: multi-output Boolean functions in algebraic normal
//! form, the balanced single-output family, a lazily sampled random oracle and
//! GF(2) linear algebra.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bits::{Bits, MAX_WIDTH};
use crate::error::{QpkeError, Result};

/// Upper bound on monomials per output bit, as a multiple of the input width.
pub const MAX_TERMS_PER_INPUT: usize = 4;

/// Default rejection budget for the balanced family.
pub const DEFAULT_BALANCE_BUDGET: usize = 10_000;

/// Largest input width for which balance is checked exhaustively.
pub const MAX_BALANCED_WIDTH: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnfParams {
    pub m: usize,
    pub n_out: usize,
    pub terms_per_output: usize,
    /// Toss one extra coin per output to decide the constant term.
    pub toss_constants: bool,
}

impl AnfParams {
    /// `m` monomials per output bit and a tossed constant.
    pub fn new(m: usize, n_out: usize) -> Self {
        Self { m, n_out, terms_per_output: m, toss_constants: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnfFunction {
    m: usize,
    n_out: usize,
    constants: Bits,
    /// Monomial exponent masks per output bit.
    terms: Vec<BTreeSet<Bits>>,
}

fn check_widths(m: usize, n_out: usize) -> Result<()> {
    if m == 0 || n_out == 0 || m > MAX_WIDTH || n_out > MAX_WIDTH {
        return Err(QpkeError::InvalidParameters(format!(
            "function widths must be in 1..={MAX_WIDTH}, got m={m} n_out={n_out}"
        )));
    }
    Ok(())
}

impl AnfFunction {
    pub fn new(m: usize, constants: Bits, terms: Vec<Vec<Bits>>) -> Result<Self> {
        let n_out = constants.width();
        check_widths(m, n_out)?;
        if terms.len() != n_out {
            return Err(QpkeError::WidthMismatch { expected: n_out, actual: terms.len() });
        }
        let mut sets = Vec::with_capacity(n_out);
        for list in terms {
            if list.len() > MAX_TERMS_PER_INPUT * m {
                return Err(QpkeError::InvalidParameters(format!(
                    "{} monomials exceed the limit of {}",
                    list.len(),
                    MAX_TERMS_PER_INPUT * m
                )));
            }
            let mut set = BTreeSet::new();
            for mask in list {
                if mask.width() != m {
                    return Err(QpkeError::WidthMismatch { expected: m, actual: mask.width() });
                }
                toggle(&mut set, mask);
            }
            sets.push(set);
        }
        Ok(Self { m, n_out, constants, terms: sets })
    }

    pub fn zero(m: usize, n_out: usize) -> Result<Self> {
        check_widths(m, n_out)?;
        Ok(Self { m, n_out, constants: Bits::zeros(n_out), terms: vec![BTreeSet::new(); n_out] })
    }

    /// Coin-tossing generator: each monomial is fixed by `m` tosses, one per
    /// exponent. Repeated monomials cancel.
    pub fn generate<R: Rng + ?Sized>(params: &AnfParams, rng: &mut R) -> Result<Self> {
        let AnfParams { m, n_out, terms_per_output, toss_constants } = *params;
        check_widths(m, n_out)?;
        if terms_per_output == 0 || terms_per_output > MAX_TERMS_PER_INPUT * m {
            return Err(QpkeError::InvalidParameters(format!(
                "terms per output must be in 1..={}",
                MAX_TERMS_PER_INPUT * m
            )));
        }
        let mut terms = Vec::with_capacity(n_out);
        for _ in 0..n_out {
            let mut set = BTreeSet::new();
            for _ in 0..terms_per_output {
                let tosses: Vec<bool> = (0..m).map(|_| rng.gen::<bool>()).collect();
                toggle(&mut set, Bits::from_bools(&tosses)?);
            }
            terms.push(set);
        }
        let constants = if toss_constants {
            let tosses: Vec<bool> = (0..n_out).map(|_| rng.gen::<bool>()).collect();
            Bits::from_bools(&tosses)?
        } else {
            Bits::zeros(n_out)
        };
        Ok(Self { m, n_out, constants, terms })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn constants(&self) -> Bits {
        self.constants
    }

    pub fn terms(&self, output: usize) -> &BTreeSet<Bits> {
        &self.terms[output]
    }

    /// One output bit on a packed input.
    pub fn eval_bit(&self, output: usize, s: u64) -> bool {
        let mut acc = self.constants.get(output);
        for mask in &self.terms[output] {
            let mv = mask.value();
            acc ^= s & mv == mv;
        }
        acc
    }

    pub fn evaluate(&self, s: &Bits) -> Result<Bits> {
        if s.width() != self.m {
            return Err(QpkeError::WidthMismatch { expected: self.m, actual: s.width() });
        }
        let bits: Vec<bool> = (0..self.n_out).map(|o| self.eval_bit(o, s.value())).collect();
        Bits::from_bools(&bits)
    }

    /// Output bit via the affine rewriting `x^a = xa ⊕ a ⊕ 1` of each factor.
    pub fn eval_bit_linearized(&self, output: usize, s: &Bits) -> bool {
        let mut acc = self.constants.get(output);
        for mask in &self.terms[output] {
            let term = s.iter().zip(mask.iter()).fold(true, |p, (x, a)| p & linearize_monomial(x, a));
            acc ^= term;
        }
        acc
    }

    /// Full truth table of one output via the binary Möbius transform.
    pub fn truth_table(&self, output: usize) -> Result<Vec<bool>> {
        if self.m > MAX_BALANCED_WIDTH {
            return Err(QpkeError::InvalidParameters(format!(
                "truth tables limited to m ≤ {MAX_BALANCED_WIDTH}"
            )));
        }
        let size = 1usize << self.m;
        let mut table = vec![false; size];
        for mask in &self.terms[output] {
            table[mask.value() as usize] ^= true;
        }
        for bit in 0..self.m {
            let stride = 1usize << bit;
            for x in 0..size {
                if x & stride != 0 {
                    table[x] ^= table[x ^ stride];
                }
            }
        }
        if self.constants.get(output) {
            table.iter_mut().for_each(|b| *b = !*b);
        }
        Ok(table)
    }

    /// Number of inputs mapping to 1 on the given output.
    pub fn weight(&self, output: usize) -> Result<usize> {
        Ok(self.truth_table(output)?.iter().filter(|&&b| b).count())
    }

    pub fn is_balanced(&self, output: usize) -> Result<bool> {
        Ok(self.weight(output)? == 1usize << (self.m - 1))
    }

    /// `f ⊕ 1` on the given output.
    pub fn with_constant_flipped(&self, output: usize) -> Self {
        let mut out = self.clone();
        out.constants.flip(output);
        out
    }
}

fn toggle(set: &mut BTreeSet<Bits>, mask: Bits) {
    if !set.remove(&mask) {
        set.insert(mask);
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnfRecord {
    m: usize,
    n_out: usize,
    constants: Bits,
    terms: Vec<Vec<Bits>>,
}

impl<'de> Deserialize<'de> for AnfFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = AnfRecord::deserialize(d)?;
        if rec.constants.width() != rec.n_out {
            return Err(serde::de::Error::custom("constants width differs from n_out"));
        }
        AnfFunction::new(rec.m, rec.constants, rec.terms).map_err(serde::de::Error::custom)
    }
}

/// Rejection-samples a balanced single-output function on `m` inputs, then
/// tosses one more coin to decide whether to add the constant 1, so the family
/// is closed under `f ↦ f ⊕ 1`.
pub fn generate_balanced_f2<R: Rng + ?Sized>(m: usize, budget: usize, rng: &mut R) -> Result<AnfFunction> {
    if m == 0 || m > MAX_BALANCED_WIDTH {
        return Err(QpkeError::InvalidParameters(format!(
            "balanced functions need 1 ≤ m ≤ {MAX_BALANCED_WIDTH}"
        )));
    }
    let params = AnfParams { m, n_out: 1, terms_per_output: m, toss_constants: false };
    for _ in 0..budget {
        let f = AnfFunction::generate(&params, rng)?;
        if f.is_balanced(0)? {
            return Ok(if rng.gen::<bool>() { f.with_constant_flipped(0) } else { f });
        }
    }
    Err(QpkeError::RejectionExhausted { what: "balanced F2", attempts: budget })
}

/// `x^a` written without exponentiation: `xa ⊕ a ⊕ 1`.
pub fn linearize_monomial(x: bool, a: bool) -> bool {
    (x & a) ^ a ^ true
}

/// Rank of a set of GF(2) rows.
pub fn gf2_rank(rows: &[Bits], n: usize) -> Result<usize> {
    Ok(n - gf2_nullspace(rows, n)?.len())
}

/// Basis of `{v : r·v = 0 for every row r}` by Gauss-Jordan elimination.
pub fn gf2_nullspace(rows: &[Bits], n: usize) -> Result<Vec<Bits>> {
    if n == 0 || n > MAX_WIDTH {
        return Err(QpkeError::InvalidParameters(format!("row width must be in 1..={MAX_WIDTH}")));
    }
    let mut matrix: Vec<Bits> = Vec::with_capacity(rows.len());
    for r in rows {
        if r.width() != n {
            return Err(QpkeError::WidthMismatch { expected: n, actual: r.width() });
        }
        matrix.push(*r);
    }

    // Reduced row echelon form; pivot_cols[r] is the pivot column of row r.
    let mut pivot_cols = Vec::new();
    let mut rank = 0;
    for col in 0..n {
        let Some(p) = (rank..matrix.len()).find(|&r| matrix[r].get(col)) else {
            continue;
        };
        matrix.swap(rank, p);
        let pivot = matrix[rank];
        for (r, row) in matrix.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                *row = *row ^ pivot;
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }

    let mut basis = Vec::with_capacity(n - rank);
    for free in (0..n).filter(|c| !pivot_cols.contains(c)) {
        let mut v = Bits::zeros(n);
        v.set(free, true);
        for (r, &pc) in pivot_cols.iter().enumerate() {
            if matrix[r].get(free) {
                v.set(pc, true);
            }
        }
        basis.push(v);
    }
    Ok(basis)
}

/// Lazily sampled uniform function: each unseen input gets a fresh uniform
/// output, remembered thereafter.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomOracle {
    input_width: usize,
    output_width: usize,
    table: RefCell<BTreeMap<Bits, Bits>>,
    rng: RefCell<ChaCha8Rng>,
}

impl RandomOracle {
    pub fn new(input_width: usize, output_width: usize, seed: u64) -> Result<Self> {
        check_widths(input_width, output_width)?;
        Ok(Self {
            input_width,
            output_width,
            table: RefCell::new(BTreeMap::new()),
            rng: RefCell::new(ChaCha8Rng::seed_from_u64(seed)),
        })
    }

    pub fn input_width(&self) -> usize {
        self.input_width
    }

    pub fn output_width(&self) -> usize {
        self.output_width
    }

    pub fn queried(&self) -> usize {
        self.table.borrow().len()
    }

    pub fn evaluate(&self, s: &Bits) -> Result<Bits> {
        if s.width() != self.input_width {
            return Err(QpkeError::WidthMismatch { expected: self.input_width, actual: s.width() });
        }
        let mut table = self.table.borrow_mut();
        let out = *table
            .entry(*s)
            .or_insert_with(|| Bits::random(self.output_width, &mut *self.rng.borrow_mut()));
        Ok(out)
    }
}

impl PartialEq for RandomOracle {
    fn eq(&self, other: &Self) -> bool {
        self.input_width == other.input_width
            && self.output_width == other.output_width
            && *self.table.borrow() == *other.table.borrow()
    }
}

/// A private-key function: explicit ANF or a random oracle. Serialized as the
/// bare ANF or oracle record; the two are told apart by their fields.
#[allow(clippy::large_enum_variant)]
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum KeyFunction {
    Anf(AnfFunction),
    Oracle(RandomOracle),
}

impl<'de> Deserialize<'de> for KeyFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        // Buffer through serde_json::Value: serde's own untagged buffering
        // cannot carry the 128-bit word position of the oracle's generator.
        let value = serde_json::Value::deserialize(d)?;
        let result = if value.get("terms").is_some() {
            serde_json::from_value(value).map(KeyFunction::Anf)
        } else {
            serde_json::from_value(value).map(KeyFunction::Oracle)
        };
        result.map_err(serde::de::Error::custom)
    }
}

impl KeyFunction {
    pub fn evaluate(&self, s: &Bits) -> Result<Bits> {
        match self {
            KeyFunction::Anf(f) => f.evaluate(s),
            KeyFunction::Oracle(o) => o.evaluate(s),
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            KeyFunction::Anf(f) => f.m(),
            KeyFunction::Oracle(o) => o.input_width(),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            KeyFunction::Anf(f) => f.n_out(),
            KeyFunction::Oracle(o) => o.output_width(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiSquareOutcome {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

impl ChiSquareOutcome {
    pub fn passes(&self, significance: f64) -> bool {
        self.p_value >= significance
    }
}

/// Pearson chi-square test of observed bin counts against the uniform law.
pub fn chi_square_uniform(counts: &[u64]) -> ChiSquareOutcome {
    let total: u64 = counts.iter().sum();
    let bins = counts.len();
    let expected = total as f64 / bins as f64;
    let statistic = counts.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum::<f64>();
    let dof = bins - 1;
    let p_value = ChiSquared::new(dof as f64).map(|d| 1.0 - d.cdf(statistic)).unwrap_or(f64::NAN);
    ChiSquareOutcome { statistic, degrees_of_freedom: dof, p_value }
}

/// Draws `samples` fresh coin-tossed functions, evaluates each once on a
/// fresh uniform input and tests the outputs for uniformity.
pub fn output_uniformity<R: Rng + ?Sized>(
    params: &AnfParams,
    samples: usize,
    rng: &mut R,
) -> Result<ChiSquareOutcome> {
    if params.n_out > 16 {
        return Err(QpkeError::InvalidParameters("uniformity test limited to n_out ≤ 16".into()));
    }
    let mut counts = vec![0u64; 1 << params.n_out];
    for _ in 0..samples {
        let f = AnfFunction::generate(params, rng)?;
        let s = Bits::random(params.m, rng);
        counts[f.evaluate(&s)?.value() as usize] += 1;
    }
    Ok(chi_square_uniform(&counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn bits(s: &str) -> Bits {
        s.parse().unwrap()
    }

    /// Every coin lands heads.
    struct AllHeads;

    impl RngCore for AllHeads {
        fn next_u32(&mut self) -> u32 {
            u32::MAX
        }
        fn next_u64(&mut self) -> u64 {
            u64::MAX
        }
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(0xff);
        }
        fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
            dest.fill(0xff);
            Ok(())
        }
    }

    /// Naive oracle: evaluate every monomial as a product over its variables.
    fn naive_eval(f: &AnfFunction, output: usize, s: &Bits) -> bool {
        let mut acc = f.constants().get(output);
        for mask in f.terms(output) {
            let mut term = true;
            for v in 0..f.m() {
                if mask.get(v) {
                    term &= s.get(v);
                }
            }
            acc ^= term;
        }
        acc
    }

    #[test]
    fn forced_heads_gives_full_monomial() {
        let params = AnfParams { m: 5, n_out: 3, terms_per_output: 1, toss_constants: false };
        let f = AnfFunction::generate(&params, &mut AllHeads).unwrap();
        for o in 0..3 {
            assert_eq!(f.terms(o).iter().collect::<Vec<_>>(), vec![&bits("11111")]);
        }
        assert_eq!(f.evaluate(&bits("11111")).unwrap(), bits("111"));
        assert_eq!(f.evaluate(&bits("11110")).unwrap(), bits("000"));
    }

    #[test]
    fn evaluate_examples() {
        let zero = AnfFunction::zero(3, 2).unwrap();
        for s in Bits::all(3) {
            assert_eq!(zero.evaluate(&s).unwrap(), bits("00"));
        }
        let and = AnfFunction::new(2, bits("0"), vec![vec![bits("11")]]).unwrap();
        assert_eq!(and.evaluate(&bits("11")).unwrap(), bits("1"));
        // s1 ⊕ s1s2 at s = 11 → 1 ⊕ 1 = 0
        let f = AnfFunction::new(2, bits("0"), vec![vec![bits("10"), bits("11")]]).unwrap();
        assert_eq!(f.evaluate(&bits("11")).unwrap(), bits("0"));
        assert_eq!(f.evaluate(&bits("10")).unwrap(), bits("1"));
        assert!(matches!(f.evaluate(&bits("1")), Err(QpkeError::WidthMismatch { .. })));
    }

    #[test]
    fn duplicate_monomials_cancel() {
        let f = AnfFunction::new(2, bits("0"), vec![vec![bits("10"), bits("10")]]).unwrap();
        assert!(f.terms(0).is_empty());
    }

    #[test]
    fn evaluate_matches_naive_truth_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 1..=10 {
            let f = AnfFunction::generate(&AnfParams::new(m, 3), &mut rng).unwrap();
            for o in 0..3 {
                let table = f.truth_table(o).unwrap();
                for s in Bits::all(m) {
                    let expected = naive_eval(&f, o, &s);
                    assert_eq!(f.eval_bit(o, s.value()), expected);
                    assert_eq!(table[s.value() as usize], expected);
                    assert_eq!(f.eval_bit_linearized(o, &s), expected);
                }
            }
        }
    }

    #[test]
    fn deterministic_reevaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = AnfFunction::generate(&AnfParams::new(8, 4), &mut rng).unwrap();
        for s in Bits::all(8) {
            assert_eq!(f.evaluate(&s).unwrap(), f.evaluate(&s).unwrap());
        }
    }

    #[test]
    fn balance_examples() {
        let linear = AnfFunction::new(4, bits("0"), vec![vec![bits("1000")]]).unwrap();
        assert!(linear.is_balanced(0).unwrap());
        let constant = AnfFunction::zero(4, 1).unwrap();
        assert!(!constant.is_balanced(0).unwrap());
    }

    #[test]
    fn balanced_family_closed_under_complement() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let f = generate_balanced_f2(6, DEFAULT_BALANCE_BUDGET, &mut rng).unwrap();
            assert_eq!(f.weight(0).unwrap(), 32);
            assert_eq!(f.with_constant_flipped(0).weight(0).unwrap(), 32);
        }
    }

    #[test]
    fn balanced_generation_can_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = generate_balanced_f2(12, 1, &mut AllHeads).unwrap_err();
        assert!(matches!(err, QpkeError::RejectionExhausted { attempts: 1, .. }));
        assert!(generate_balanced_f2(21, 10, &mut rng).is_err());
    }

    #[test]
    fn linearization_table() {
        assert!(linearize_monomial(false, false));
        assert!(linearize_monomial(true, false));
        assert!(!linearize_monomial(false, true));
        assert!(linearize_monomial(true, true));
        for x in [0u32, 1] {
            for a in [0u32, 1] {
                assert_eq!(linearize_monomial(x == 1, a == 1) as u32, x.pow(a));
            }
        }
    }

    /// Exhaustive nullspace oracle.
    fn brute_nullspace(rows: &[Bits], n: usize) -> Vec<Bits> {
        Bits::all(n).filter(|v| rows.iter().all(|r| !r.dot(v))).collect()
    }

    #[test]
    fn nullspace_examples() {
        assert_eq!(gf2_nullspace(&[], 2).unwrap().len(), 2);
        assert_eq!(gf2_nullspace(&[bits("10")], 2).unwrap(), vec![bits("01")]);
        assert_eq!(brute_nullspace(&[bits("110"), bits("011")], 3), vec![bits("000"), bits("111")]);
        assert_eq!(gf2_nullspace(&[bits("110"), bits("011")], 3).unwrap(), vec![bits("111")]);
        assert!(gf2_nullspace(&[bits("10")], 3).is_err());
    }

    #[test]
    fn random_oracle_memoizes() {
        let o = RandomOracle::new(16, 4, 9).unwrap();
        let s = bits("0000000000000001");
        let first = o.evaluate(&s).unwrap();
        assert_eq!(o.evaluate(&s).unwrap(), first);
        assert_eq!(o.queried(), 1);
        let json = serde_json::to_string(&o).unwrap();
        let back: RandomOracle = serde_json::from_str(&json).unwrap();
        assert_eq!(back.evaluate(&s).unwrap(), first);
        let fresh = bits("0000000000000010");
        assert_eq!(back.evaluate(&fresh).unwrap(), o.evaluate(&fresh).unwrap());
    }

    #[test]
    fn anf_json_format() {
        let f = AnfFunction::new(4, bits("01"), vec![vec![bits("0110")], vec![bits("1000"), bits("0001")]])
            .unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"m":4,"n_out":2,"constants":"01","terms":[["0110"],["0001","1000"]]}"#);
        assert_eq!(serde_json::from_str::<AnfFunction>(&json).unwrap(), f);
        assert!(serde_json::from_str::<AnfFunction>(r#"{"m":4,"n_out":1,"constants":"01","terms":[[]]}"#).is_err());
        assert!(serde_json::from_str::<AnfFunction>(r#"{"m":4,"n_out":1,"constants":"0","terms":[["01"]]}"#).is_err());
    }

    #[test]
    fn key_function_untagged_forms() {
        let f = AnfFunction::new(2, bits("0"), vec![vec![bits("11")]]).unwrap();
        let json = serde_json::to_string(&KeyFunction::Anf(f)).unwrap();
        assert!(matches!(serde_json::from_str::<KeyFunction>(&json).unwrap(), KeyFunction::Anf(_)));
        let o = RandomOracle::new(3, 2, 1).unwrap();
        let json = serde_json::to_string(&KeyFunction::Oracle(o)).unwrap();
        assert!(matches!(serde_json::from_str::<KeyFunction>(&json).unwrap(), KeyFunction::Oracle(_)));
    }

    #[test]
    fn chi_square_sanity() {
        let flat = chi_square_uniform(&[100, 100, 100, 100]);
        assert_eq!(flat.statistic, 0.0);
        assert!(flat.passes(0.01));
        let skewed = chi_square_uniform(&[400, 0, 0, 0]);
        assert!(!skewed.passes(0.01));
    }

    proptest! {
        #[test]
        fn nullspace_matches_exhaustive_search(n in 1usize..=7, raw in proptest::collection::vec(any::<u64>(), 0..8)) {
            let rows: Vec<Bits> = raw.iter().map(|r| Bits::new(n, r & ((1 << n) - 1)).unwrap()).collect();
            let basis = gf2_nullspace(&rows, n).unwrap();
            for v in &basis {
                for r in &rows {
                    prop_assert!(!r.dot(v));
                }
            }
            // Independent basis spanning exactly the brute-force solution set.
            let solutions = brute_nullspace(&rows, n);
            prop_assert_eq!(solutions.len(), 1usize << basis.len());
            let mut span = BTreeSet::new();
            for combo in 0u64..(1 << basis.len()) {
                let mut acc = Bits::zeros(n);
                for (b, v) in basis.iter().enumerate() {
                    if combo >> b & 1 == 1 {
                        acc = acc ^ *v;
                    }
                }
                span.insert(acc);
            }
            prop_assert_eq!(span.into_iter().collect::<Vec<_>>(), solutions);
        }
    }
}
