//! MKP instance data, OR-Library parsing, validation and random generation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use thiserror::Error;

/// An immutable 0-1 multidimensional knapsack instance.
///
/// Maximize `p·x` subject to `r·x <= b` componentwise, `x` binary.
/// Consumption is stored constraint-major: `consumption[i][j]` is the
/// amount item `j` takes from resource `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MkpInstance {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub profits: Vec<f64>,
    pub consumption: Vec<Vec<f64>>,
    pub capacities: Vec<f64>,
    pub known_best: Option<f64>,
}

impl MkpInstance {
    pub fn new(
        name: impl Into<String>,
        profits: Vec<f64>,
        consumption: Vec<Vec<f64>>,
        capacities: Vec<f64>,
    ) -> Self {
        let n = profits.len();
        let m = capacities.len();
        assert!(n > 0 && m > 0, "instance must have items and constraints");
        assert!(consumption.len() == m && consumption.iter().all(|row| row.len() == n));
        MkpInstance {
            name: name.into(),
            n,
            m,
            profits,
            consumption,
            capacities,
            known_best: None,
        }
    }

    pub fn with_known_best(mut self, best: f64) -> Self {
        self.known_best = Some(best);
        self
    }

    pub fn max_profit(&self) -> f64 {
        self.profits.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Total profit of a binary solution (unbiased objective).
    pub fn fitness(&self, x: &[bool]) -> f64 {
        x.iter()
            .zip(&self.profits)
            .filter(|(&set, _)| set)
            .map(|(_, &p)| p)
            .sum()
    }

    /// True iff `x` satisfies every knapsack constraint.
    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.consumption.iter().zip(&self.capacities).all(|(row, &cap)| {
            let used: f64 = x
                .iter()
                .zip(row)
                .filter(|(&set, _)| set)
                .map(|(_, &r)| r)
                .sum();
            used <= cap + 1e-9
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonpositiveProfit,
    ItemExceedsCapacity,
    SlackConstraint,
}

/// One well-statedness violation: the kind plus the constraint/item it
/// concerns (`usize::MAX` marks "not applicable").
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub constraint: usize,
    pub item: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_well_stated(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check the well-statedness conditions: p_j > 0, r_ij <= b_i, and
/// b_i < sum_j r_ij for every constraint. Reporting only.
pub fn validate(inst: &MkpInstance) -> ValidationReport {
    let mut violations = Vec::new();
    for (j, &p) in inst.profits.iter().enumerate() {
        if p <= 0.0 {
            violations.push(Violation {
                kind: ViolationKind::NonpositiveProfit,
                constraint: usize::MAX,
                item: j,
            });
        }
    }
    for i in 0..inst.m {
        let cap = inst.capacities[i];
        for (j, &r) in inst.consumption[i].iter().enumerate() {
            if r > cap {
                violations.push(Violation {
                    kind: ViolationKind::ItemExceedsCapacity,
                    constraint: i,
                    item: j,
                });
            }
        }
        let row_sum: f64 = inst.consumption[i].iter().sum();
        if row_sum <= cap {
            violations.push(Violation {
                kind: ViolationKind::SlackConstraint,
                constraint: i,
                item: usize::MAX,
            });
        }
    }
    ValidationReport { violations }
}

/// Result of the optional preprocessing pass: slack constraints dropped,
/// items that cannot fit fixed to zero.
#[derive(Debug, Clone)]
pub struct Preprocessed {
    pub instance: MkpInstance,
    pub dropped_constraints: Vec<usize>,
    pub fixed_zero_items: Vec<usize>,
}

/// Repair a non-well-stated instance: drop constraints slack for the full
/// item set and fix `x_j = 0` for items exceeding some capacity on their
/// own. Profits must still be positive; that violation is not repairable.
pub fn preprocess(inst: &MkpInstance) -> Result<Preprocessed, InstanceError> {
    if inst.profits.iter().any(|&p| p <= 0.0) {
        return Err(InstanceError::NonpositiveProfit);
    }
    let mut fixed_zero_items = Vec::new();
    for j in 0..inst.n {
        if (0..inst.m).any(|i| inst.consumption[i][j] > inst.capacities[i]) {
            fixed_zero_items.push(j);
        }
    }
    let keep_items: Vec<usize> = (0..inst.n).filter(|j| !fixed_zero_items.contains(j)).collect();
    if keep_items.is_empty() {
        return Err(InstanceError::Empty);
    }
    let mut dropped_constraints = Vec::new();
    let mut keep_rows = Vec::new();
    for i in 0..inst.m {
        let row_sum: f64 = keep_items.iter().map(|&j| inst.consumption[i][j]).sum();
        if row_sum <= inst.capacities[i] {
            dropped_constraints.push(i);
        } else {
            keep_rows.push(i);
        }
    }
    if keep_rows.is_empty() {
        return Err(InstanceError::Empty);
    }
    let profits = keep_items.iter().map(|&j| inst.profits[j]).collect();
    let consumption = keep_rows
        .iter()
        .map(|&i| keep_items.iter().map(|&j| inst.consumption[i][j]).collect())
        .collect();
    let capacities = keep_rows.iter().map(|&i| inst.capacities[i]).collect();
    let mut out = MkpInstance::new(inst.name.clone(), profits, consumption, capacities);
    out.known_best = inst.known_best;
    Ok(Preprocessed {
        instance: out,
        dropped_constraints,
        fixed_zero_items,
    })
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("truncated token stream at token {position}: expected {expected}")]
    Truncated { position: usize, expected: &'static str },
    #[error("non-numeric token {token:?} at position {position}")]
    BadToken { position: usize, token: String },
    #[error("non-positive dimension at token {position}: {value}")]
    BadDimension { position: usize, value: i64 },
    #[error("leftover tokens after the declared instances (first at position {position})")]
    TrailingTokens { position: usize },
    #[error("tightness ratio must lie strictly in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("empty value range")]
    EmptyRange,
    #[error("nonpositive profit present")]
    NonpositiveProfit,
    #[error("preprocessing left no items or constraints")]
    Empty,
}

struct Tokens<'a> {
    iter: std::str::SplitAsciiWhitespace<'a>,
    position: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { iter: text.split_ascii_whitespace(), position: 0 }
    }

    fn next_f64(&mut self, expected: &'static str) -> Result<f64, InstanceError> {
        let tok = self.iter.next().ok_or(InstanceError::Truncated {
            position: self.position,
            expected,
        })?;
        self.position += 1;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(InstanceError::BadToken {
                position: self.position - 1,
                token: tok.to_string(),
            }),
        }
    }

    fn next_usize(&mut self, expected: &'static str) -> Result<usize, InstanceError> {
        let pos = self.position;
        let v = self.next_f64(expected)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(InstanceError::BadDimension { position: pos, value: v as i64 });
        }
        Ok(v as usize)
    }
}

/// Parse the OR-Library `mknapcb` token stream: instance count K, then per
/// instance `n m opt`, n profits, m*n consumption coefficients
/// constraint-major, and m capacities. An `opt` of 0 means unknown.
pub fn parse_orlib(text: &str) -> Result<Vec<MkpInstance>, InstanceError> {
    parse_orlib_named(text, "orlib")
}

/// Like [`parse_orlib`] but naming instances `{stem}-{index}`.
pub fn parse_orlib_named(text: &str, stem: &str) -> Result<Vec<MkpInstance>, InstanceError> {
    let mut toks = Tokens::new(text);
    // capacity hints are clamped: the dimension tokens are untrusted and
    // must not drive allocation ahead of the data that backs them
    const CAP_HINT: usize = 1 << 16;
    let count = toks.next_usize("instance count")?;
    let mut out = Vec::with_capacity(count.min(CAP_HINT));
    for idx in 0..count {
        let n = toks.next_usize("item count n")?;
        let m = toks.next_usize("constraint count m")?;
        let opt = toks.next_f64("optimal value")?;
        let mut profits = Vec::with_capacity(n.min(CAP_HINT));
        for _ in 0..n {
            profits.push(toks.next_f64("profit")?);
        }
        let mut consumption = Vec::with_capacity(m.min(CAP_HINT));
        for _ in 0..m {
            let mut row = Vec::with_capacity(n.min(CAP_HINT));
            for _ in 0..n {
                row.push(toks.next_f64("consumption coefficient")?);
            }
            consumption.push(row);
        }
        let mut capacities = Vec::with_capacity(m.min(CAP_HINT));
        for _ in 0..m {
            capacities.push(toks.next_f64("capacity")?);
        }
        let mut inst = MkpInstance::new(format!("{stem}-{idx}"), profits, consumption, capacities);
        if opt != 0.0 {
            inst.known_best = Some(opt);
        }
        out.push(inst);
    }
    if toks.iter.next().is_some() {
        return Err(InstanceError::TrailingTokens { position: toks.position });
    }
    Ok(out)
}

fn fmt_num(out: &mut String, v: f64) {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        write!(out, "{}", v as i64).unwrap();
    } else {
        write!(out, "{v}").unwrap();
    }
}

/// Serialize instances back to the OR-Library token layout.
pub fn serialize_orlib(instances: &[MkpInstance]) -> String {
    let mut out = String::new();
    writeln!(out, "{}", instances.len()).unwrap();
    for inst in instances {
        write!(out, "{} {} ", inst.n, inst.m).unwrap();
        fmt_num(&mut out, inst.known_best.unwrap_or(0.0));
        out.push('\n');
        for (j, &p) in inst.profits.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            fmt_num(&mut out, p);
        }
        out.push('\n');
        for row in &inst.consumption {
            for (j, &r) in row.iter().enumerate() {
                if j > 0 {
                    out.push(' ');
                }
                fmt_num(&mut out, r);
            }
            out.push('\n');
        }
        for (i, &b) in inst.capacities.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            fmt_num(&mut out, b);
        }
        out.push('\n');
    }
    out
}

/// Inclusive integer value range used by the random generators.
#[derive(Debug, Clone, Copy)]
pub struct ValueRange {
    pub min: u32,
    pub max: u32,
}

impl ValueRange {
    pub fn new(min: u32, max: u32) -> Self {
        ValueRange { min, max }
    }
}

/// Generate a random instance with `b_i = alpha * sum_j r_ij` exactly.
/// Items violating `r_ij <= b_i` are redrawn until the instance is
/// well-stated. Deterministic per seed.
pub fn generate_random(
    n: usize,
    m: usize,
    alpha: f64,
    profit_range: ValueRange,
    consumption_range: ValueRange,
    seed: u64,
) -> Result<MkpInstance, InstanceError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(InstanceError::BadAlpha(alpha));
    }
    if profit_range.min > profit_range.max
        || consumption_range.min > consumption_range.max
        || profit_range.max == 0
    {
        return Err(InstanceError::EmptyRange);
    }
    assert!(n >= 1 && m >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pmin = profit_range.min.max(1);
    let mut profits: Vec<f64> = (0..n)
        .map(|_| rng.random_range(pmin..=profit_range.max) as f64)
        .collect();
    let mut consumption: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| rng.random_range(consumption_range.min..=consumption_range.max) as f64)
                .collect()
        })
        .collect();
    // Redraw columns until every item fits every capacity alone. Capacities
    // move with the row sums, so iterate to a fixed point.
    for _ in 0..1000 {
        let caps: Vec<f64> = consumption
            .iter()
            .map(|row| alpha * row.iter().sum::<f64>())
            .collect();
        let bad: Vec<usize> = (0..n)
            .filter(|&j| (0..m).any(|i| consumption[i][j] > caps[i]))
            .collect();
        if bad.is_empty() {
            let mut inst = MkpInstance::new(
                format!("rand-n{n}-m{m}-a{alpha}-s{seed}"),
                std::mem::take(&mut profits),
                std::mem::take(&mut consumption),
                caps,
            );
            inst.known_best = None;
            return Ok(inst);
        }
        for j in bad {
            for row in consumption.iter_mut() {
                row[j] =
                    rng.random_range(consumption_range.min..=consumption_range.max) as f64;
            }
        }
    }
    // Tiny n with extreme ranges can fail to stabilize; shrink the largest
    // coefficient directly.
    let caps: Vec<f64> = consumption
        .iter()
        .map(|row| alpha * row.iter().sum::<f64>())
        .collect();
    for i in 0..m {
        for j in 0..n {
            if consumption[i][j] > caps[i] {
                consumption[i][j] = caps[i].floor().max(1.0);
            }
        }
    }
    let caps: Vec<f64> = consumption
        .iter()
        .map(|row| alpha * row.iter().sum::<f64>())
        .collect();
    Ok(MkpInstance::new(
        format!("rand-n{n}-m{m}-a{alpha}-s{seed}"),
        profits,
        consumption,
        caps,
    ))
}

/// Generate an instance following the Chu-Beasley recipe: consumptions
/// uniform on [0, 1000], capacities `alpha` times the row sums, and
/// profits correlated with average consumption
/// (`p_j = sum_i r_ij / m + 500 u_j`, `u_j` uniform on (0,1), rounded).
pub fn generate_cb_style(
    n: usize,
    m: usize,
    alpha: f64,
    seed: u64,
) -> Result<MkpInstance, InstanceError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(InstanceError::BadAlpha(alpha));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let consumption: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0..=1000) as f64).collect())
        .collect();
    let capacities: Vec<f64> = consumption
        .iter()
        .map(|row| (alpha * row.iter().sum::<f64>()).round())
        .collect();
    let profits: Vec<f64> = (0..n)
        .map(|j| {
            let avg: f64 = (0..m).map(|i| consumption[i][j]).sum::<f64>() / m as f64;
            (avg + 500.0 * rng.random::<f64>()).round().max(1.0)
        })
        .collect();
    Ok(MkpInstance::new(
        format!("cb-n{n}-m{m}-a{alpha}-s{seed}"),
        profits,
        consumption,
        capacities,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn five_item() -> MkpInstance {
        MkpInstance::new(
            "p5",
            vec![12.0, 12.0, 9.0, 8.0, 8.0],
            vec![vec![11.0, 12.0, 10.0, 10.0, 10.0]],
            vec![30.0],
        )
    }

    #[test]
    fn parse_minimal() {
        let insts = parse_orlib("1  2 1 0  10 7  3 4  5").unwrap();
        assert_eq!(insts.len(), 1);
        let inst = &insts[0];
        assert_eq!((inst.n, inst.m), (2, 1));
        assert_eq!(inst.profits, vec![10.0, 7.0]);
        assert_eq!(inst.consumption, vec![vec![3.0, 4.0]]);
        assert_eq!(inst.capacities, vec![5.0]);
        assert!(inst.known_best.is_none());
    }

    #[test]
    fn parse_five_item() {
        let insts = parse_orlib("1 5 1 0 12 12 9 8 8 11 12 10 10 10 30").unwrap();
        let inst = &insts[0];
        assert_eq!(inst.profits, five_item().profits);
        assert_eq!(inst.consumption, five_item().consumption);
        assert_eq!(inst.capacities, five_item().capacities);
    }

    #[test]
    fn parse_truncated() {
        let err = parse_orlib("1 2 1 0 10 7 3 4").unwrap_err();
        assert!(matches!(err, InstanceError::Truncated { .. }));
    }

    #[test]
    fn parse_bad_token() {
        let err = parse_orlib("1 2 1 0 10 seven 3 4 5").unwrap_err();
        assert!(matches!(err, InstanceError::BadToken { position: 5, .. }));
    }

    #[test]
    fn parse_bad_dimension() {
        assert!(matches!(
            parse_orlib("1 0 1 0"),
            Err(InstanceError::BadDimension { .. })
        ));
        assert!(matches!(
            parse_orlib("1 2 -1 0"),
            Err(InstanceError::BadDimension { .. })
        ));
    }

    #[test]
    fn parse_rejects_nonfinite_tokens() {
        for bad in ["nan", "inf", "-inf", "NaN"] {
            let err = parse_orlib(&format!("1 2 1 0 10 {bad} 3 4 5")).unwrap_err();
            assert!(matches!(err, InstanceError::BadToken { position: 5, .. }), "{bad}");
        }
    }

    #[test]
    fn parse_huge_dimension_fails_without_allocating() {
        // the dimension token far exceeds the data behind it
        let err = parse_orlib("1 999999999999 1 0 5").unwrap_err();
        assert!(matches!(err, InstanceError::Truncated { .. }));
    }

    #[test]
    fn parse_rejects_trailing_tokens() {
        let err = parse_orlib("1 2 1 0 10 7 3 4 5 99").unwrap_err();
        assert!(matches!(err, InstanceError::TrailingTokens { .. }));
    }

    #[test]
    fn parse_known_best() {
        let insts = parse_orlib("1 2 1 17 10 7 3 4 5").unwrap();
        assert_eq!(insts[0].known_best, Some(17.0));
    }

    #[test]
    fn roundtrip_serialize_parse() {
        let orig = parse_orlib("2  2 1 17  10 7  3 4  5  3 2 0  1 2 3  1 1 1  2 2 2  2 2").unwrap();
        let text = serialize_orlib(&orig);
        let back = parse_orlib(&text).unwrap();
        for (a, b) in orig.iter().zip(&back) {
            assert_eq!(a.profits, b.profits);
            assert_eq!(a.consumption, b.consumption);
            assert_eq!(a.capacities, b.capacities);
            assert_eq!(a.known_best, b.known_best);
        }
    }

    #[test]
    fn validate_well_stated() {
        assert!(validate(&five_item()).is_well_stated());
    }

    #[test]
    fn validate_nonpositive_profit() {
        let inst = MkpInstance::new("t", vec![0.0, 5.0], vec![vec![1.0, 1.0]], vec![1.5]);
        let report = validate(&inst);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::NonpositiveProfit);
        assert_eq!(report.violations[0].item, 0);
    }

    #[test]
    fn validate_item_exceeds_capacity() {
        let inst = MkpInstance::new("t", vec![3.0, 1.0], vec![vec![6.0, 1.0]], vec![5.0]);
        let report = validate(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::ItemExceedsCapacity
                && v.constraint == 0
                && v.item == 0));
    }

    #[test]
    fn validate_slack_constraint() {
        let inst = MkpInstance::new("t", vec![3.0, 1.0], vec![vec![1.0, 1.0]], vec![10.0]);
        let report = validate(&inst);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::SlackConstraint && v.constraint == 0));
    }

    #[test]
    fn preprocess_fixes_and_drops() {
        // item 0 cannot fit row 0; after dropping it, row 1 becomes slack
        let inst = MkpInstance::new(
            "t",
            vec![3.0, 1.0, 2.0],
            vec![vec![9.0, 4.0, 2.0], vec![1.0, 1.0, 1.0]],
            vec![5.0, 4.0],
        );
        let pre = preprocess(&inst).unwrap();
        assert_eq!(pre.fixed_zero_items, vec![0]);
        assert_eq!(pre.dropped_constraints, vec![1]);
        assert_eq!(pre.instance.n, 2);
        assert_eq!(pre.instance.m, 1);
        assert!(validate(&pre.instance).is_well_stated());
    }

    #[test]
    fn generate_alpha_exact() {
        let inst = generate_random(
            50,
            3,
            0.5,
            ValueRange::new(1, 100),
            ValueRange::new(0, 100),
            42,
        )
        .unwrap();
        for i in 0..inst.m {
            let sum: f64 = inst.consumption[i].iter().sum();
            assert!((inst.capacities[i] / sum - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn generate_deterministic() {
        let a = generate_random(20, 4, 0.25, ValueRange::new(1, 50), ValueRange::new(0, 60), 7)
            .unwrap();
        let b = generate_random(20, 4, 0.25, ValueRange::new(1, 50), ValueRange::new(0, 60), 7)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_well_stated() {
        for seed in 0..20 {
            let inst = generate_random(
                100,
                5,
                0.5,
                ValueRange::new(1, 1000),
                ValueRange::new(0, 1000),
                seed,
            )
            .unwrap();
            assert!(validate(&inst).is_well_stated(), "seed {seed}");
        }
    }

    #[test]
    fn generate_rejects_bad_alpha() {
        assert!(matches!(
            generate_random(5, 1, 0.0, ValueRange::new(1, 9), ValueRange::new(1, 9), 0),
            Err(InstanceError::BadAlpha(_))
        ));
        assert!(matches!(
            generate_random(5, 1, 1.0, ValueRange::new(1, 9), ValueRange::new(1, 9), 0),
            Err(InstanceError::BadAlpha(_))
        ));
    }

    #[test]
    fn cb_style_profits_correlated() {
        let inst = generate_cb_style(100, 5, 0.5, 3).unwrap();
        assert!(validate(&inst).is_well_stated());
        for i in 0..inst.m {
            let sum: f64 = inst.consumption[i].iter().sum();
            let ratio = inst.capacities[i] / sum;
            assert!((ratio - 0.5).abs() < 1e-3);
        }
    }
}
