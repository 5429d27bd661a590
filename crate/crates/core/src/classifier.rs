//! Enumeration of admissible partitions of `Z_n` and their grouping by the
//! factorization they force.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::zn::{
    check_alpha1, check_alpha2, check_alpha3, dual_partition, subgroup_unions, SubgroupUnion,
    ZnPartition,
};

/// Largest order enumerated by default.
pub const DEFAULT_SIZE_LIMIT: usize = 12;

/// Which conditions the enumeration enforces; `{0}` is always a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Filters {
    pub alpha1: bool,
    pub alpha2: bool,
    pub alpha3: bool,
}

impl Filters {
    pub const ALL: Filters = Filters {
        alpha1: true,
        alpha2: true,
        alpha3: true,
    };
}

pub fn enumerate_admissible(n: usize) -> Result<Vec<ZnPartition>> {
    enumerate_with(n, Filters::ALL, DEFAULT_SIZE_LIMIT)
}

/// Residues `1, n-1, 2, n-2, ...` so that each negation follows closely.
fn pair_order(n: usize) -> Vec<usize> {
    let mut order = Vec::with_capacity(n.saturating_sub(1));
    for x in 1..n {
        let y = n - x;
        if x > y {
            break;
        }
        order.push(x);
        if y != x {
            order.push(y);
        }
    }
    order
}

struct Search<'a> {
    n: usize,
    order: &'a [usize],
    prune_negation: bool,
    labels: Vec<usize>,
    assigned: Vec<bool>,
    out: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// Negation must map the partial partition to itself: for assigned
    /// `x, y` with assigned negatives, `x ~ y` iff `-x ~ -y`.
    fn consistent(&self, x: usize) -> bool {
        let n = self.n;
        let nx = (n - x) % n;
        if !self.assigned[nx] {
            return true;
        }
        for y in 1..n {
            let ny = (n - y) % n;
            if y == x || !self.assigned[y] || !self.assigned[ny] {
                continue;
            }
            let same = self.labels[x] == self.labels[y];
            let same_neg = self.labels[nx] == self.labels[ny];
            if same != same_neg {
                return false;
            }
        }
        true
    }

    fn run(&mut self, depth: usize, blocks: usize) {
        if depth == self.order.len() {
            self.out.push(self.labels.clone());
            return;
        }
        let x = self.order[depth];
        self.assigned[x] = true;
        for label in 1..=blocks + 1 {
            self.labels[x] = label;
            if self.prune_negation && !self.consistent(x) {
                continue;
            }
            self.run(depth + 1, blocks.max(label));
        }
        self.assigned[x] = false;
    }
}

pub fn enumerate_with(n: usize, filters: Filters, limit: usize) -> Result<Vec<ZnPartition>> {
    if n == 0 {
        return Err(Error::InvalidInput("order must be positive".into()));
    }
    if n > limit {
        return Err(Error::SizeLimit { n, limit });
    }
    let order = pair_order(n);
    let mut search = Search {
        n,
        order: &order,
        prune_negation: filters.alpha2,
        labels: vec![0; n],
        assigned: vec![false; n],
        out: Vec::new(),
    };
    search.assigned[0] = true;
    search.run(0, 0);
    let mut result: Vec<ZnPartition> = search
        .out
        .into_par_iter()
        .map(|labels| ZnPartition::from_labels(&labels))
        .filter(|p| {
            (!filters.alpha2 || check_alpha2(p).is_ok())
                && (!filters.alpha1 || check_alpha1(p).is_ok())
                && (!filters.alpha3 || check_alpha3(p).is_ok())
        })
        .collect();
    result.sort();
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Realization {
    Realized,
    Unknown,
}

/// A product realizing a partition, in the command-line expression syntax.
pub struct Witness {
    pub partition: &'static str,
    pub expression: &'static str,
}

/// Products whose monodromy partition is checked by the test suite.
/// Besides these, `z^n` realizes the singleton partition for every `n`.
pub const WITNESSES: &[Witness] = &[
    Witness { partition: "{{0},{1,2}}", expression: "mobius(0.3+0.1i)*mobius(-0.4+0.2i)*mobius(0.1-0.5i)" },
    Witness {
        partition: "{{0},{1,2,3}}",
        expression: "mobius(0.3-0.2i)*mobius(0.5+0.5i)*mobius(-0.6)*z",
    },
    Witness { partition: "{{0},{1,3},{2}}", expression: "mobius(0.5)^2 @ z^2" },
    Witness {
        partition: "{{0},{1,2,3,4,5,6,7}}",
        expression: "mobius(0.5+0.1i)*mobius(-0.3+0.6i)*mobius(0.2-0.7i)*mobius(-0.55-0.25i)\
                     *mobius(0.7+0.3i)*mobius(-0.1+0.05i)*mobius(0.35-0.35i)*mobius(-0.65+0.1i)",
    },
    Witness {
        partition: "{{0},{1,2,3,5,6,7},{4}}",
        expression: "(mobius(0.3-0.2i)*mobius(0.5+0.5i)*mobius(-0.6)*z) @ z^2",
    },
    Witness {
        partition: "{{0},{1,3,5,7},{2,4,6}}",
        expression: "(mobius(0.1+0.2i)*mobius(-0.5+0.1i)) @ (mobius(0.3-0.2i)*mobius(0.5+0.5i)*mobius(-0.6)*z)",
    },
    Witness { partition: "{{0},{1,3,5,7},{2},{4},{6}}", expression: "mobius(0.5)^2 @ z^4" },
    Witness {
        partition: "{{0},{1,3,5,7},{2,6},{4}}",
        expression: "(mobius(0.3+0.1i)*mobius(-0.2+0.4i)) @ (mobius(0.1-0.3i)*mobius(0.45+0.2i)) \
                     @ (mobius(-0.35-0.1i)*mobius(0.2+0.25i))",
    },
    Witness {
        partition: "{{0},{1,5},{2,6},{3,7},{4}}",
        expression: "z^4 @ (mobius(0.3+0.1i)*mobius(-0.2+0.4i))",
    },
];

pub fn witness_for(p: &ZnPartition) -> Option<String> {
    if p.q() == p.n {
        return Some(format!("z^{}", p.n));
    }
    let text = p.to_string();
    WITNESSES
        .iter()
        .find(|w| w.partition == text)
        .map(|w| w.expression.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionEntry {
    pub partition: ZnPartition,
    pub q: usize,
    pub dual: ZnPartition,
    pub dual_is_involution: bool,
    pub subgroup_unions: Vec<SubgroupUnion>,
    pub reducible: bool,
    /// Orders `(outer, inner)` of the factorization forced by the largest
    /// nontrivial subgroup union.
    pub factorization: Option<(usize, usize)>,
    pub scenario: String,
    pub realization: Realization,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub key: String,
    pub partitions: Vec<ZnPartition>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub n: usize,
    pub entries: Vec<PartitionEntry>,
    pub scenarios: Vec<Scenario>,
}

/// The scenario of a partition: cyclic, irreducible, or the largest
/// nontrivial subgroup union `H` together with the partition it induces
/// on `H`, rescaled to `Z_|H|`.
pub fn scenario_key(p: &ZnPartition) -> String {
    if p.q() == p.n {
        return "cyclic".into();
    }
    let unions = subgroup_unions(p);
    let Some(h) = unions
        .iter()
        .filter(|s| !s.trivial)
        .max_by_key(|s| s.elements.len())
    else {
        return "irreducible".into();
    };
    let m = h.elements.len();
    let blocks: Vec<Vec<usize>> = p
        .blocks
        .iter()
        .filter(|b| b.iter().all(|x| x % h.step == 0))
        .map(|b| b.iter().map(|x| x / h.step).collect())
        .collect();
    let restricted =
        ZnPartition::new(m, blocks).expect("a subgroup union restricts to a partition");
    format!("inner order {m}: {restricted}")
}

pub fn classify_scenarios(n: usize, partitions: &[ZnPartition]) -> Classification {
    let entries: Vec<PartitionEntry> = partitions
        .iter()
        .map(|p| {
            let dual = dual_partition(p);
            let unions = subgroup_unions(p);
            let largest = unions
                .iter()
                .filter(|s| !s.trivial)
                .map(|s| s.elements.len())
                .max();
            let witness = witness_for(p);
            PartitionEntry {
                partition: p.clone(),
                q: p.q(),
                dual_is_involution: dual_partition(&dual) == *p,
                dual,
                reducible: largest.is_some(),
                factorization: largest.map(|m| (n / m, m)),
                subgroup_unions: unions,
                scenario: scenario_key(p),
                realization: if witness.is_some() {
                    Realization::Realized
                } else {
                    Realization::Unknown
                },
                witness,
            }
        })
        .collect();
    let mut groups: BTreeMap<String, Vec<ZnPartition>> = BTreeMap::new();
    for e in &entries {
        groups
            .entry(e.scenario.clone())
            .or_default()
            .push(e.partition.clone());
    }
    let mut scenarios: Vec<Scenario> = groups
        .into_iter()
        .map(|(key, partitions)| Scenario { key, partitions })
        .collect();
    scenarios.sort_by(|a, b| a.partitions[0].cmp(&b.partitions[0]));
    Classification {
        n,
        entries,
        scenarios,
    }
}
