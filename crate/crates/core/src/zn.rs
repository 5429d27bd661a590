//! Partitions of `Z_n`, exact sums of roots of unity, dual partitions and
//! the admissibility conditions on monodromy partitions.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `{0, ..., n-1}` with sorted blocks ordered by least element.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ZnPartition {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

impl ZnPartition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("modulus must be positive".into()));
        }
        let mut seen = vec![false; n];
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidInput("empty block".into()));
            }
            for &x in b {
                if x >= n || seen[x] {
                    return Err(Error::InvalidInput(format!(
                        "residue {x} is out of range or repeated"
                    )));
                }
                seen[x] = true;
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("residue {x} is not covered")));
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { n, blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            n,
            blocks: (0..n).map(|k| vec![k]).collect(),
        }
    }

    /// Groups residues by a label; blocks come out ordered by least element.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut order: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (x, &l) in labels.iter().enumerate() {
            order.entry(l).or_default().push(x);
        }
        let mut blocks: Vec<Vec<usize>> = order.into_values().collect();
        blocks.sort_by_key(|b| b[0]);
        Self {
            n: labels.len(),
            blocks,
        }
    }

    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    /// Index of the block containing `x`, for every residue.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (i, b) in self.blocks.iter().enumerate() {
            for &x in b {
                out[x] = i;
            }
        }
        out
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.blocks
            .iter()
            .position(|b| b.contains(&x))
            .expect("residue is covered")
    }

    /// Parses `{{0},{2},{1,3}}`; `n` is the number of residues listed.
    pub fn parse(text: &str) -> Result<Self> {
        let inner = text
            .trim()
            .strip_prefix('{')
            .and_then(|t| t.strip_suffix('}'))
            .ok_or_else(|| Error::InvalidInput(format!("malformed partition {text:?}")))?;
        let mut blocks = Vec::new();
        for part in inner.split('}') {
            let part = part.trim().trim_start_matches(',').trim();
            if part.is_empty() {
                continue;
            }
            let body = part
                .strip_prefix('{')
                .ok_or_else(|| Error::InvalidInput(format!("malformed block in {text:?}")))?;
            let block = body
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::InvalidInput(format!("bad residue in {text:?}: {e}")))?;
            blocks.push(block);
        }
        let n = blocks.iter().map(Vec::len).sum();
        Self::new(n, blocks)
    }
}

impl fmt::Display for ZnPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let items: Vec<String> = b.iter().map(|x| x.to_string()).collect();
            write!(f, "{{{}}}", items.join(","))?;
        }
        write!(f, "}}")
    }
}

/// An element of `Z[x] / Phi_n`, i.e. of the ring generated by `zeta_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CyclotomicElement {
    pub n: usize,
    pub coeffs: Vec<i64>,
}

impl CyclotomicElement {
    /// Reduces `sum_e counts[e] x^e` modulo `Phi_n`.
    pub fn from_exponent_counts(n: usize, counts: &[i64]) -> Self {
        let phi = cached_cyclotomic(n);
        let deg = phi.len() - 1;
        let mut r = counts.to_vec();
        for top in (deg..r.len()).rev() {
            let lead = r[top];
            if lead != 0 {
                for (i, &p) in phi.iter().enumerate() {
                    r[top - deg + i] -= lead * p;
                }
            }
        }
        r.resize(deg, 0);
        Self { n, coeffs: r }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn to_complex(&self) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / self.n as f64)
                    * c as f64
            })
            .sum()
    }
}

thread_local! {
    static CYCLOTOMIC: std::cell::RefCell<std::collections::HashMap<usize, std::rc::Rc<Vec<i64>>>> =
        Default::default();
}

fn cached_cyclotomic(n: usize) -> std::rc::Rc<Vec<i64>> {
    CYCLOTOMIC.with(|cache| {
        cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| std::rc::Rc::new(cyclotomic_polynomial(n)))
            .clone()
    })
}

/// `Phi_n` with ascending integer coefficients.
pub fn cyclotomic_polynomial(n: usize) -> Vec<i64> {
    assert!(n >= 1);
    let mut p = vec![0i64; n + 1];
    p[0] = -1;
    p[n] = 1;
    for d in 1..n {
        if n % d == 0 {
            p = exact_divide(&p, &cyclotomic_polynomial(d));
        }
    }
    p
}

fn exact_divide(num: &[i64], den: &[i64]) -> Vec<i64> {
    let dn = den.len() - 1;
    let mut r = num.to_vec();
    let mut q = vec![0i64; num.len() - dn];
    for k in (0..q.len()).rev() {
        let c = r[k + dn];
        q[k] = c;
        for (i, &d) in den.iter().enumerate() {
            r[k + i] -= c * d;
        }
    }
    debug_assert!(r.iter().all(|&c| c == 0));
    q
}

/// `sum_{k in G} zeta^{k j}` as an exact cyclotomic element.
pub fn root_of_unity_sum(block: &[usize], j: usize, n: usize) -> CyclotomicElement {
    let mut counts = vec![0i64; n];
    for &k in block {
        counts[(k * j) % n] += 1;
    }
    CyclotomicElement::from_exponent_counts(n, &counts)
}

/// The signature of `j`: its root-of-unity sum over every block.
fn signature(p: &ZnPartition, j: usize) -> Vec<CyclotomicElement> {
    p.blocks
        .iter()
        .map(|b| root_of_unity_sum(b, j, p.n))
        .collect()
}

/// `j1 ~ j2` iff their root-of-unity sums agree on every block.
pub fn dual_partition(p: &ZnPartition) -> ZnPartition {
    let mut classes: BTreeMap<Vec<CyclotomicElement>, usize> = BTreeMap::new();
    let mut labels = Vec::with_capacity(p.n);
    for j in 0..p.n {
        let next = classes.len();
        labels.push(*classes.entry(signature(p, j)).or_insert(next));
    }
    ZnPartition::from_labels(&labels)
}

/// Why a partition fails one of the admissibility conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    /// `{0}` is not a block.
    Alpha0,
    /// `G_left + G_right` hits the elements of `block` unevenly.
    Alpha1 {
        left: usize,
        right: usize,
        block: usize,
    },
    /// The negation of `block` is not a block.
    Alpha2 { block: usize },
    /// The dual has a different number of blocks.
    Alpha3 { q: usize, dual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Alpha0 => write!(f, "alpha0: {{0}} is not a block"),
            Violation::Alpha1 { left, right, block } => {
                write!(
                    f,
                    "alpha1: blocks {left} + {right} cover block {block} unevenly"
                )
            }
            Violation::Alpha2 { block } => {
                write!(f, "alpha2: negation of block {block} is not a block")
            }
            Violation::Alpha3 { q, dual } => write!(f, "alpha3: {q} blocks but {dual} dual blocks"),
        }
    }
}

pub type Check = std::result::Result<(), Violation>;

pub fn check_alpha0(p: &ZnPartition) -> Check {
    if p.blocks[0] == [0] {
        Ok(())
    } else {
        Err(Violation::Alpha0)
    }
}

pub fn check_alpha1(p: &ZnPartition) -> Check {
    let n = p.n;
    for (i, a) in p.blocks.iter().enumerate() {
        for (j, b) in p.blocks.iter().enumerate() {
            let mut counts = vec![0usize; n];
            for &x in a {
                for &y in b {
                    counts[(x + y) % n] += 1;
                }
            }
            for (k, c) in p.blocks.iter().enumerate() {
                if c.iter().any(|&x| counts[x] != counts[c[0]]) {
                    return Err(Violation::Alpha1 {
                        left: i,
                        right: j,
                        block: k,
                    });
                }
            }
        }
    }
    Ok(())
}

pub fn negate_block(block: &[usize], n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = block.iter().map(|&x| (n - x) % n).collect();
    out.sort_unstable();
    out
}

pub fn check_alpha2(p: &ZnPartition) -> Check {
    for (i, b) in p.blocks.iter().enumerate() {
        let neg = negate_block(b, p.n);
        if !p.blocks.contains(&neg) {
            return Err(Violation::Alpha2 { block: i });
        }
    }
    Ok(())
}

pub fn check_alpha3(p: &ZnPartition) -> Check {
    let dual = dual_partition(p).q();
    if dual == p.q() {
        Ok(())
    } else {
        Err(Violation::Alpha3 { q: p.q(), dual })
    }
}

pub fn check_all(p: &ZnPartition) -> Check {
    check_alpha0(p)?;
    check_alpha2(p)?;
    check_alpha1(p)?;
    check_alpha3(p)
}

/// The subgroup `{0, d, 2d, ...}` when it is a union of blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubgroupUnion {
    pub step: usize,
    pub elements: Vec<usize>,
    pub trivial: bool,
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|d| n % d == 0).collect()
}

/// Subgroups that are unions of blocks, smallest first.
pub fn subgroup_unions(p: &ZnPartition) -> Vec<SubgroupUnion> {
    let n = p.n;
    let labels = p.labels();
    let mut out: Vec<SubgroupUnion> = divisors(n)
        .into_iter()
        .rev()
        .filter_map(|d| {
            let elements: Vec<usize> = (0..n).step_by(d).collect();
            let mut member = vec![false; n];
            for &x in &elements {
                member[x] = true;
            }
            let union =
                (0..n).all(|x| !member[x] || p.blocks[labels[x]].iter().all(|&y| member[y]));
            union.then(|| SubgroupUnion {
                step: d,
                trivial: d == n || d == 1,
                elements,
            })
        })
        .collect();
    out.sort_by_key(|s| s.elements.len());
    out
}

pub fn is_reducible(p: &ZnPartition) -> bool {
    subgroup_unions(p).iter().any(|s| !s.trivial)
}

/// Entry `(k, j)` is `sum_{i in G_k} zeta^{i l}` for any `l` in the dual block `j`.
pub fn eigenvalue_matrix(p: &ZnPartition, dual: &ZnPartition) -> Vec<Vec<CyclotomicElement>> {
    p.blocks
        .iter()
        .map(|g| {
            dual.blocks
                .iter()
                .map(|d| root_of_unity_sum(g, d[0], p.n))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn part(text: &str) -> ZnPartition {
        ZnPartition::parse(text).unwrap()
    }

    fn float_sum(block: &[usize], j: usize, n: usize) -> Complex64 {
        block
            .iter()
            .map(|&k| {
                Complex64::from_polar(1.0, std::f64::consts::TAU * ((k * j) % n) as f64 / n as f64)
            })
            .sum()
    }

    /// Dual by floating signatures compared at a coarse tolerance.
    fn float_dual(p: &ZnPartition) -> ZnPartition {
        let sigs: Vec<Vec<Complex64>> = (0..p.n)
            .map(|j| p.blocks.iter().map(|b| float_sum(b, j, p.n)).collect())
            .collect();
        let mut labels = vec![usize::MAX; p.n];
        let mut next = 0;
        for j in 0..p.n {
            if labels[j] != usize::MAX {
                continue;
            }
            labels[j] = next;
            for l in j + 1..p.n {
                if sigs[j]
                    .iter()
                    .zip(&sigs[l])
                    .all(|(a, b)| (a - b).norm() < 1e-6)
                {
                    labels[l] = next;
                }
            }
            next += 1;
        }
        ZnPartition::from_labels(&labels)
    }

    #[test]
    fn cyclotomic_examples() {
        assert_eq!(cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(12), vec![1, 0, -1, 0, 1]);
    }

    #[test]
    fn cyclotomic_degree_is_totient() {
        for n in 1..=30usize {
            let totient = (1..=n).filter(|&k| gcd(k, n) == 1).count();
            let p = cyclotomic_polynomial(n);
            assert_eq!(p.len() - 1, totient);
            assert_eq!(*p.last().unwrap(), 1);
        }
    }

    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }

    #[test]
    fn root_of_unity_sum_examples() {
        let one = root_of_unity_sum(&[0], 5, 7);
        assert_eq!(one.coeffs[0], 1);
        assert!(one.coeffs[1..].iter().all(|&c| c == 0));
        assert!(root_of_unity_sum(&[1, 3], 1, 4).is_zero());
        let s = root_of_unity_sum(&[1, 3, 5, 7], 4, 8);
        assert_eq!(s.coeffs, vec![-4, 0, 0, 0]);
    }

    #[test]
    fn exact_sums_match_floating_evaluation() {
        for n in 1..=24usize {
            for mask in [
                0b1usize,
                0b1011,
                0b110101,
                0b1111_0000_1,
                0b1010_1010_1010_1,
            ] {
                let block: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
                if block.is_empty() {
                    continue;
                }
                for j in 0..n {
                    let exact = root_of_unity_sum(&block, j, n).to_complex();
                    assert!((exact - float_sum(&block, j, n)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn dual_examples() {
        for n in [1, 4, 7, 8, 12] {
            assert_eq!(
                dual_partition(&ZnPartition::singletons(n)),
                ZnPartition::singletons(n)
            );
        }
        assert_eq!(
            dual_partition(&part("{{0},{2,4,6},{1,3,5,7}}")),
            part("{{0},{4},{1,2,3,5,6,7}}")
        );
        assert_eq!(
            dual_partition(&part("{{0},{4},{1,2,3,5,6,7}}")),
            part("{{0},{2,4,6},{1,3,5,7}}")
        );
    }

    #[test]
    fn dual_of_odd_block_partition() {
        // j = 2 and j = 6 have identical signatures: zeta^4 = zeta^12, zeta^8 = zeta^24,
        // and every odd-residue sum vanishes.
        let p = part("{{0},{2},{4},{6},{1,3,5,7}}");
        assert_eq!(dual_partition(&p), part("{{0},{4},{2,6},{1,5},{3,7}}"));
        assert_eq!(dual_partition(&p), float_dual(&p));
    }

    #[test]
    fn dual_matches_floating_oracle() {
        let cases = [
            "{{0},{2},{1,3}}",
            "{{0},{1,2,3}}",
            "{{0},{4},{2,6},{1,3,5,7}}",
            "{{0},{3},{1,2,4,5}}",
            "{{0},{1,5},{2,4},{3}}",
            "{{0},{6},{1,11},{2,10},{3,9},{4,8},{5,7}}",
            "{{0},{1,2,3,4,5,6,7,8}}",
        ];
        for text in cases {
            let p = part(text);
            assert_eq!(dual_partition(&p), float_dual(&p), "{text}");
        }
    }

    #[test]
    fn alpha1_examples() {
        assert!(check_alpha1(&part("{{0},{1,2,3}}")).is_ok());
        assert!(check_alpha1(&part("{{0},{2},{4},{6},{1,3},{5,7}}")).is_err());
        assert!(check_alpha1(&part("{{0},{4},{1,2,3},{5,6,7}}")).is_err());
    }

    #[test]
    fn alpha1_witness_names_the_offending_pair() {
        let p = part("{{0},{2},{4},{6},{1,3},{5,7}}");
        let Err(Violation::Alpha1 { left, right, block }) = check_alpha1(&p) else {
            panic!("expected a violation");
        };
        let mut counts = vec![0; 8];
        for &x in &p.blocks[left] {
            for &y in &p.blocks[right] {
                counts[(x + y) % 8] += 1;
            }
        }
        let c = &p.blocks[block];
        assert!(c.iter().any(|&x| counts[x] != counts[c[0]]));
    }

    #[test]
    fn alpha2_examples() {
        assert!(check_alpha2(&part("{{0},{2},{1,3}}")).is_ok());
        assert_eq!(
            check_alpha2(&part("{{0},{3},{1,2}}")),
            Err(Violation::Alpha2 { block: 1 })
        );
        assert!(check_alpha2(&part("{{0},{4},{1,2,5},{3,6,7}}")).is_ok());
    }

    #[test]
    fn alpha3_examples() {
        assert!(check_alpha3(&ZnPartition::singletons(9)).is_ok());
        assert!(check_alpha3(&part("{{0},{2},{4},{6},{1,5},{3,7}}")).is_ok());
        // five blocks and five dual blocks
        assert!(check_alpha3(&part("{{0},{2},{4},{6},{1,3,5,7}}")).is_ok());
        assert_eq!(
            check_alpha3(&part("{{0},{1,2},{3}}")),
            Err(Violation::Alpha3 { q: 3, dual: 4 })
        );
    }

    #[test]
    fn subgroup_union_examples() {
        let s = subgroup_unions(&part("{{0},{2},{1,3}}"));
        let nontrivial: Vec<_> = s
            .iter()
            .filter(|s| !s.trivial)
            .map(|s| s.elements.clone())
            .collect();
        assert_eq!(nontrivial, vec![vec![0, 2]]);
        assert!(is_reducible(&part("{{0},{2},{1,3}}")));

        let s = subgroup_unions(&part("{{0},{1,2,3}}"));
        assert!(s.iter().all(|s| s.trivial));
        assert_eq!(s.len(), 2);
        assert!(!is_reducible(&part("{{0},{1,2,3}}")));

        let s = subgroup_unions(&part("{{0},{4},{2,6},{1,3,5,7}}"));
        let nontrivial: Vec<_> = s
            .iter()
            .filter(|s| !s.trivial)
            .map(|s| s.elements.clone())
            .collect();
        assert_eq!(nontrivial, vec![vec![0, 4], vec![0, 2, 4, 6]]);
        assert!(is_reducible(&part("{{0},{4},{2,6},{1,3,5,7}}")));
    }

    #[test]
    fn eigenvalue_matrix_examples() {
        let p = ZnPartition::singletons(4);
        let m = eigenvalue_matrix(&p, &dual_partition(&p));
        for k in 0..4 {
            for j in 0..4 {
                let expected =
                    Complex64::from_polar(1.0, std::f64::consts::TAU * (k * j) as f64 / 4.0);
                assert!((m[k][j].to_complex() - expected).norm() < 1e-12);
            }
        }
        let p = part("{{0},{2},{1,3}}");
        let d = dual_partition(&p);
        assert_eq!(d, p);
        let m = eigenvalue_matrix(&p, &d);
        // canonical order: blocks {0}, {1,3}, {2}
        let expected = [[1.0, 1.0, 1.0], [2.0, 0.0, -2.0], [1.0, -1.0, 1.0]];
        for k in 0..3 {
            for j in 0..3 {
                assert!(
                    (m[k][j].to_complex() - Complex64::new(expected[k][j], 0.0)).norm() < 1e-12
                );
            }
        }
    }

    #[test]
    fn eigenvalue_columns_are_distinct() {
        for text in [
            "{{0},{4},{2,6},{1,3,5,7}}",
            "{{0},{1,2,3,4,5}}",
            "{{0},{3},{1,5},{2,4}}",
        ] {
            let p = part(text);
            let d = dual_partition(&p);
            let m = eigenvalue_matrix(&p, &d);
            let cols: Vec<Vec<&CyclotomicElement>> = (0..d.q())
                .map(|j| m.iter().map(|row| &row[j]).collect())
                .collect();
            for a in 0..cols.len() {
                for b in a + 1..cols.len() {
                    assert_ne!(cols[a], cols[b]);
                }
            }
        }
    }

    #[test]
    fn partition_validation_and_display() {
        assert!(ZnPartition::new(3, vec![vec![0], vec![1]]).is_err());
        assert!(ZnPartition::new(3, vec![vec![0, 1], vec![1, 2]]).is_err());
        let p = ZnPartition::new(4, vec![vec![3, 1], vec![2], vec![0]]).unwrap();
        assert_eq!(p.to_string(), "{{0},{1,3},{2}}");
        assert_eq!(part(&p.to_string()), p);
    }
}
