//! Finite groupoids stored as validated partial-product tables.
//!
//! Arrows carry contiguous integer ids. The partial product `a·b` is defined
//! exactly when `source(a) = range(b)`; units are the arrows fixed by source,
//! range, and inverse. Constructors document their id ordering so that files
//! written from them are reproducible bit for bit.

// Index loops over multiplication tables read better than iterator chains here.
#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;
use thiserror::Error;

/// Dense product tables up to this arrow count, hash map above.
const DENSE_LIMIT: usize = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupoidError {
    #[error("malformed groupoid tables: {0}")]
    Malformed(String),
    #[error("invalid group table: {0}")]
    InvalidGroupTable(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("arrow set is not a subgroupoid: {0}")]
    NotASubgroupoid(String),
}

/// Bit set over the arrow ids of a fixed groupoid.
#[derive(Clone, PartialEq, Eq)]
pub struct ArrowSet {
    nbits: usize,
    words: Vec<u64>,
}

impl ArrowSet {
    pub fn new(nbits: usize) -> Self {
        ArrowSet {
            nbits,
            words: vec![0; nbits.div_ceil(64)],
        }
    }

    pub fn full(nbits: usize) -> Self {
        let mut s = ArrowSet::new(nbits);
        for i in 0..nbits {
            s.insert(i);
        }
        s
    }

    pub fn from_iter(nbits: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut s = ArrowSet::new(nbits);
        for i in ids {
            s.insert(i);
        }
        s
    }

    pub fn capacity(&self) -> usize {
        self.nbits
    }

    pub fn insert(&mut self, i: usize) -> bool {
        assert!(i < self.nbits, "arrow id {i} out of range");
        let fresh = self.words[i / 64] & (1 << (i % 64)) == 0;
        self.words[i / 64] |= 1 << (i % 64);
        fresh
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.nbits, "arrow id {i} out of range");
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.nbits && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nbits).filter(move |&i| self.contains(i))
    }

    pub fn union(&self, other: &ArrowSet) -> ArrowSet {
        assert_eq!(self.nbits, other.nbits);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        ArrowSet {
            nbits: self.nbits,
            words,
        }
    }

    pub fn intersection(&self, other: &ArrowSet) -> ArrowSet {
        assert_eq!(self.nbits, other.nbits);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        ArrowSet {
            nbits: self.nbits,
            words,
        }
    }

    pub fn difference(&self, other: &ArrowSet) -> ArrowSet {
        assert_eq!(self.nbits, other.nbits);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & !b)
            .collect();
        ArrowSet {
            nbits: self.nbits,
            words,
        }
    }

    pub fn is_subset_of(&self, other: &ArrowSet) -> bool {
        assert_eq!(self.nbits, other.nbits);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl std::fmt::Debug for ArrowSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ArrowSet{:?}", self.to_vec())
    }
}

#[derive(Clone, PartialEq)]
enum ProductTable {
    Dense { n: usize, cells: Vec<u32> },
    Sparse(HashMap<(u32, u32), u32>),
}

impl ProductTable {
    fn new(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            ProductTable::Dense {
                n,
                cells: vec![u32::MAX; n * n],
            }
        } else {
            ProductTable::Sparse(HashMap::new())
        }
    }

    fn set(&mut self, a: usize, b: usize, ab: usize) -> bool {
        match self {
            ProductTable::Dense { n, cells } => {
                let cell = &mut cells[a * *n + b];
                let fresh = *cell == u32::MAX;
                *cell = ab as u32;
                fresh
            }
            ProductTable::Sparse(map) => map.insert((a as u32, b as u32), ab as u32).is_none(),
        }
    }

    fn get(&self, a: usize, b: usize) -> Option<usize> {
        match self {
            ProductTable::Dense { n, cells } => {
                let cell = cells[a * n + b];
                (cell != u32::MAX).then_some(cell as usize)
            }
            ProductTable::Sparse(map) => map.get(&(a as u32, b as u32)).map(|&v| v as usize),
        }
    }
}

/// One violated groupoid law with a witness.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LawViolation {
    pub law: String,
    pub witness: String,
}

/// Outcome of [`Groupoid::validate`]: empty means every law checked out.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<LawViolation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A finite groupoid: arrows `0..len`, a unit subset, source/range/inverse
/// tables, and a partial product defined exactly on composable pairs.
#[derive(Clone, PartialEq)]
pub struct Groupoid {
    units: Vec<usize>,
    unit_flags: Vec<bool>,
    source: Vec<usize>,
    range: Vec<usize>,
    inverse: Vec<usize>,
    product: ProductTable,
    by_source: Vec<Vec<usize>>,
    by_range: Vec<Vec<usize>>,
}

impl std::fmt::Debug for Groupoid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Groupoid({} arrows, {} units)",
            self.len(),
            self.units.len()
        )
    }
}

impl Groupoid {
    /// Builds a groupoid from raw tables, checking only structural sanity
    /// (index bounds, duplicate product entries). Law checking is `validate`.
    pub fn from_tables(
        units: Vec<usize>,
        source: Vec<usize>,
        range: Vec<usize>,
        inverse: Vec<usize>,
        products: &[(usize, usize, usize)],
    ) -> Result<Groupoid, GroupoidError> {
        let n = source.len();
        if n == 0 {
            return Err(GroupoidError::Malformed(
                "a groupoid needs at least one arrow".into(),
            ));
        }
        if range.len() != n || inverse.len() != n {
            return Err(GroupoidError::Malformed(format!(
                "table lengths differ: source {}, range {}, inverse {}",
                n,
                range.len(),
                inverse.len()
            )));
        }
        for (name, table) in [
            ("source", &source),
            ("range", &range),
            ("inverse", &inverse),
        ] {
            if let Some(&bad) = table.iter().find(|&&v| v >= n) {
                return Err(GroupoidError::Malformed(format!(
                    "{name} entry {bad} out of range"
                )));
            }
        }
        let mut unit_flags = vec![false; n];
        for &u in &units {
            if u >= n {
                return Err(GroupoidError::Malformed(format!(
                    "unit id {u} out of range"
                )));
            }
            unit_flags[u] = true;
        }
        let mut units = units;
        units.sort_unstable();
        units.dedup();

        let mut product = ProductTable::new(n);
        for &(a, b, ab) in products {
            if a >= n || b >= n || ab >= n {
                return Err(GroupoidError::Malformed(format!(
                    "product entry ({a},{b},{ab}) out of range"
                )));
            }
            if !product.set(a, b, ab) {
                return Err(GroupoidError::Malformed(format!(
                    "duplicate product entry for ({a},{b})"
                )));
            }
        }

        let mut by_source = vec![Vec::new(); n];
        let mut by_range = vec![Vec::new(); n];
        for a in 0..n {
            by_source[source[a]].push(a);
            by_range[range[a]].push(a);
        }

        Ok(Groupoid {
            units,
            unit_flags,
            source,
            range,
            inverse,
            product,
            by_source,
            by_range,
        })
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one arrow by construction
    }

    pub fn units(&self) -> &[usize] {
        &self.units
    }

    pub fn is_unit(&self, a: usize) -> bool {
        self.unit_flags[a]
    }

    pub fn source(&self, a: usize) -> usize {
        self.source[a]
    }

    pub fn range(&self, a: usize) -> usize {
        self.range[a]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn product(&self, a: usize, b: usize) -> Option<usize> {
        self.product.get(a, b)
    }

    pub fn composable(&self, a: usize, b: usize) -> bool {
        self.source[a] == self.range[b]
    }

    /// Arrows with the given source unit, ascending.
    pub fn arrows_with_source(&self, unit: usize) -> &[usize] {
        &self.by_source[unit]
    }

    /// Arrows with the given range unit, ascending.
    pub fn arrows_with_range(&self, unit: usize) -> &[usize] {
        &self.by_range[unit]
    }

    /// All product triples `(a, b, ab)` in ascending `(a, b)` order.
    pub fn product_triples(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.len() {
            for &b in &self.by_range[self.source[a]] {
                if let Some(ab) = self.product.get(a, b) {
                    out.push((a, b, ab));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Checks every groupoid law, reporting the first witness per law.
    pub fn validate(&self) -> ValidationReport {
        let mut violations: Vec<LawViolation> = Vec::new();
        let n = self.len();
        let fail = |violations: &mut Vec<LawViolation>, law: &str, witness: String| {
            if !violations.iter().any(|v| v.law == law) {
                violations.push(LawViolation {
                    law: law.into(),
                    witness,
                });
            }
        };

        if self.units.is_empty() {
            fail(
                &mut violations,
                "units.nonempty",
                "groupoid has no units".into(),
            );
        }
        for &u in &self.units {
            if self.source[u] != u || self.range[u] != u || self.inverse[u] != u {
                fail(
                    &mut violations,
                    "units.fixed",
                    format!("unit {u} moved by source/range/inverse"),
                );
            }
        }
        for a in 0..n {
            if !self.unit_flags[self.source[a]] {
                fail(
                    &mut violations,
                    "endpoints.unit",
                    format!("source({a}) = {} is not a unit", self.source[a]),
                );
            }
            if !self.unit_flags[self.range[a]] {
                fail(
                    &mut violations,
                    "endpoints.unit",
                    format!("range({a}) = {} is not a unit", self.range[a]),
                );
            }
            if self.inverse[self.inverse[a]] != a {
                fail(
                    &mut violations,
                    "inverse.involution",
                    format!("inverse(inverse({a})) != {a}"),
                );
            }
            if self.source[self.inverse[a]] != self.range[a]
                || self.range[self.inverse[a]] != self.source[a]
            {
                fail(
                    &mut violations,
                    "inverse.endpoints",
                    format!("inverse({a}) swaps source/range incorrectly"),
                );
            }
        }
        // Product domain: defined exactly on composable pairs.
        for a in 0..n {
            for b in 0..n {
                let defined = self.product.get(a, b).is_some();
                if defined != self.composable(a, b) {
                    fail(
                        &mut violations,
                        "product.domain",
                        format!(
                            "pair ({a},{b}): defined={defined} but source({a})={} range({b})={}",
                            self.source[a], self.range[b]
                        ),
                    );
                }
            }
        }
        for a in 0..n {
            for &b in &self.by_range[self.source[a]] {
                if let Some(ab) = self.product.get(a, b) {
                    if self.source[ab] != self.source[b] || self.range[ab] != self.range[a] {
                        fail(
                            &mut violations,
                            "product.endpoints",
                            format!("({a},{b}) -> {ab} has wrong endpoints"),
                        );
                    }
                }
            }
            let inv = self.inverse[a];
            if self.product.get(a, inv) != Some(self.range[a]) {
                fail(
                    &mut violations,
                    "product.inverse",
                    format!("{a}·{inv} != range unit {}", self.range[a]),
                );
            }
            if self.product.get(inv, a) != Some(self.source[a]) {
                fail(
                    &mut violations,
                    "product.inverse",
                    format!("{inv}·{a} != source unit {}", self.source[a]),
                );
            }
            if self.product.get(a, self.source[a]) != Some(a) {
                fail(
                    &mut violations,
                    "product.unit_law",
                    format!("{a}·source({a}) != {a}"),
                );
            }
            if self.product.get(self.range[a], a) != Some(a) {
                fail(
                    &mut violations,
                    "product.unit_law",
                    format!("range({a})·{a} != {a}"),
                );
            }
        }
        // Associativity over every composable triple.
        'outer: for b in 0..n {
            for &a in &self.by_source[self.range[b]] {
                for &c in &self.by_range[self.source[b]] {
                    let ab = match self.product.get(a, b) {
                        Some(x) => x,
                        None => continue,
                    };
                    let bc = match self.product.get(b, c) {
                        Some(x) => x,
                        None => continue,
                    };
                    if self.product.get(ab, c) != self.product.get(a, bc) {
                        fail(
                            &mut violations,
                            "product.associative",
                            format!("witness triple ({a},{b},{c}): ({a}·{b})·{c} != {a}·({b}·{c})"),
                        );
                        break 'outer;
                    }
                }
            }
        }

        ValidationReport { violations }
    }
}

/// Pair groupoid on `n` points: arrows are ordered pairs `(i,j)` with id
/// `i*n + j`, units the diagonal, and `(i,j)·(j,k) = (i,k)`.
pub fn pair_groupoid(n: usize) -> Groupoid {
    assert!(n >= 1);
    let id = |i: usize, j: usize| i * n + j;
    let mut source = vec![0; n * n];
    let mut range = vec![0; n * n];
    let mut inverse = vec![0; n * n];
    let mut units = Vec::with_capacity(n);
    let mut products = Vec::new();
    for i in 0..n {
        units.push(id(i, i));
        for j in 0..n {
            source[id(i, j)] = id(j, j);
            range[id(i, j)] = id(i, i);
            inverse[id(i, j)] = id(j, i);
            for k in 0..n {
                products.push((id(i, j), id(j, k), id(i, k)));
            }
        }
    }
    Groupoid::from_tables(units, source, range, inverse, &products)
        .expect("pair groupoid tables are well-formed")
}

/// Group as a one-unit groupoid from its multiplication table. Arrow ids keep
/// the table's element order.
pub fn from_group(cayley: &[Vec<usize>]) -> Result<Groupoid, GroupoidError> {
    let n = cayley.len();
    if n == 0 {
        return Err(GroupoidError::InvalidGroupTable("empty table".into()));
    }
    for row in cayley {
        if row.len() != n || row.iter().any(|&v| v >= n) {
            return Err(GroupoidError::InvalidGroupTable(
                "table is not square over 0..n".into(),
            ));
        }
    }
    let identity = (0..n)
        .find(|&e| (0..n).all(|g| cayley[e][g] == g && cayley[g][e] == g))
        .ok_or_else(|| GroupoidError::InvalidGroupTable("no identity element".into()))?;
    let mut inverse = vec![None; n];
    for g in 0..n {
        for h in 0..n {
            if cayley[g][h] == identity && cayley[h][g] == identity {
                inverse[g] = Some(h);
            }
        }
    }
    let inverse: Vec<usize> = inverse
        .into_iter()
        .enumerate()
        .map(|(g, i)| {
            i.ok_or_else(|| GroupoidError::InvalidGroupTable(format!("{g} has no inverse")))
        })
        .collect::<Result<_, _>>()?;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if cayley[cayley[a][b]][c] != cayley[a][cayley[b][c]] {
                    return Err(GroupoidError::InvalidGroupTable(format!(
                        "associativity fails at ({a},{b},{c})"
                    )));
                }
            }
        }
    }
    let mut products = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            products.push((a, b, cayley[a][b]));
        }
    }
    Groupoid::from_tables(
        vec![identity],
        vec![identity; n],
        vec![identity; n],
        inverse,
        &products,
    )
}

/// Cyclic group of order `n` as a groupoid.
pub fn cyclic_group(n: usize) -> Groupoid {
    assert!(n >= 1);
    let cayley: Vec<Vec<usize>> = (0..n)
        .map(|a| (0..n).map(|b| (a + b) % n).collect())
        .collect();
    from_group(&cayley).expect("cyclic table is a group")
}

/// Disjoint union; the second groupoid's ids are shifted up by `g1.len()`.
pub fn disjoint_union(g1: &Groupoid, g2: &Groupoid) -> Groupoid {
    let n1 = g1.len();
    let mut units: Vec<usize> = g1.units().to_vec();
    units.extend(g2.units().iter().map(|&u| u + n1));
    let mut source: Vec<usize> = (0..n1).map(|a| g1.source(a)).collect();
    source.extend((0..g2.len()).map(|a| g2.source(a) + n1));
    let mut range: Vec<usize> = (0..n1).map(|a| g1.range(a)).collect();
    range.extend((0..g2.len()).map(|a| g2.range(a) + n1));
    let mut inverse: Vec<usize> = (0..n1).map(|a| g1.inverse(a)).collect();
    inverse.extend((0..g2.len()).map(|a| g2.inverse(a) + n1));
    let mut products = g1.product_triples();
    products.extend(
        g2.product_triples()
            .into_iter()
            .map(|(a, b, c)| (a + n1, b + n1, c + n1)),
    );
    Groupoid::from_tables(units, source, range, inverse, &products)
        .expect("disjoint union tables are well-formed")
}

/// Direct product; the arrow `(a, b)` gets id `a * g2.len() + b`.
pub fn direct_product(g1: &Groupoid, g2: &Groupoid) -> Groupoid {
    let n2 = g2.len();
    let id = |a: usize, b: usize| a * n2 + b;
    let mut units = Vec::new();
    for &u1 in g1.units() {
        for &u2 in g2.units() {
            units.push(id(u1, u2));
        }
    }
    let n = g1.len() * n2;
    let mut source = vec![0; n];
    let mut range = vec![0; n];
    let mut inverse = vec![0; n];
    for a in 0..g1.len() {
        for b in 0..n2 {
            source[id(a, b)] = id(g1.source(a), g2.source(b));
            range[id(a, b)] = id(g1.range(a), g2.range(b));
            inverse[id(a, b)] = id(g1.inverse(a), g2.inverse(b));
        }
    }
    let mut products = Vec::new();
    for (a1, b1, c1) in g1.product_triples() {
        for (a2, b2, c2) in g2.product_triples() {
            products.push((id(a1, a2), id(b1, b2), id(c1, c2)));
        }
    }
    Groupoid::from_tables(units, source, range, inverse, &products)
        .expect("direct product tables are well-formed")
}

/// Action groupoid of a group acting on a finite set by permutations.
///
/// `action[g]` is the permutation applied by group element `g`; the arrow
/// `(g, x)` gets id `g * set_size + x`, with source `x` and range `g·x`.
pub fn action_groupoid(
    cayley: &[Vec<usize>],
    action: &[Vec<usize>],
) -> Result<Groupoid, GroupoidError> {
    let group = from_group(cayley)?;
    let k = cayley.len();
    if action.len() != k {
        return Err(GroupoidError::InvalidAction(
            "one permutation per group element required".into(),
        ));
    }
    let m = action[0].len();
    if m == 0 {
        return Err(GroupoidError::InvalidAction(
            "the acted-on set is empty".into(),
        ));
    }
    for (g, perm) in action.iter().enumerate() {
        if perm.len() != m {
            return Err(GroupoidError::InvalidAction(format!(
                "permutation {g} has wrong length"
            )));
        }
        let mut seen = vec![false; m];
        for &x in perm {
            if x >= m || seen[x] {
                return Err(GroupoidError::InvalidAction(format!(
                    "entry {g} is not a permutation"
                )));
            }
            seen[x] = true;
        }
    }
    let e = group.units()[0];
    if action[e].iter().enumerate().any(|(x, &gx)| x != gx) {
        return Err(GroupoidError::InvalidAction(
            "identity must act trivially".into(),
        ));
    }
    for g in 0..k {
        for h in 0..k {
            let gh = cayley[g][h];
            for x in 0..m {
                if action[gh][x] != action[g][action[h][x]] {
                    return Err(GroupoidError::InvalidAction(format!(
                        "action is not a homomorphism at (g={g}, h={h}, x={x})"
                    )));
                }
            }
        }
    }

    let id = |g: usize, x: usize| g * m + x;
    let n = k * m;
    let mut units = Vec::with_capacity(m);
    for x in 0..m {
        units.push(id(e, x));
    }
    let mut source = vec![0; n];
    let mut range = vec![0; n];
    let mut inverse = vec![0; n];
    for g in 0..k {
        let ginv = group.inverse(g);
        for x in 0..m {
            source[id(g, x)] = id(e, x);
            range[id(g, x)] = id(e, action[g][x]);
            inverse[id(g, x)] = id(ginv, action[g][x]);
        }
    }
    // (g, h·y)·(h, y) composes to (gh, y).
    let mut products = Vec::new();
    for g in 0..k {
        for h in 0..k {
            let gh = cayley[g][h];
            for y in 0..m {
                products.push((id(g, action[h][y]), id(h, y), id(gh, y)));
            }
        }
    }
    Groupoid::from_tables(units, source, range, inverse, &products)
}

/// True iff source and range are each injective on `s`.
pub fn is_slice(g: &Groupoid, s: &ArrowSet) -> bool {
    let mut seen_source = vec![false; g.len()];
    let mut seen_range = vec![false; g.len()];
    for a in s.iter() {
        if seen_source[g.source(a)] || seen_range[g.range(a)] {
            return false;
        }
        seen_source[g.source(a)] = true;
        seen_range[g.range(a)] = true;
    }
    true
}

/// Pointwise product set `{ kl : k in K, l in L, source(k) = range(l) }`.
pub fn set_product(g: &Groupoid, k: &ArrowSet, l: &ArrowSet) -> ArrowSet {
    let mut out = ArrowSet::new(g.len());
    for a in k.iter() {
        for b in l.iter() {
            if let Some(ab) = g.product(a, b) {
                out.insert(ab);
            }
        }
    }
    out
}

/// Image of `s` under inverse.
pub fn set_inverse(g: &Groupoid, s: &ArrowSet) -> ArrowSet {
    ArrowSet::from_iter(g.len(), s.iter().map(|a| g.inverse(a)))
}

/// Smallest subset containing `s` closed under inverse, composable products,
/// and source/range units. Worklist closure.
pub fn generated_subgroupoid(g: &Groupoid, s: &ArrowSet) -> ArrowSet {
    let mut member = ArrowSet::new(g.len());
    let mut list: Vec<usize> = Vec::new();
    fn push(member: &mut ArrowSet, list: &mut Vec<usize>, a: usize) {
        if member.insert(a) {
            list.push(a);
        }
    }
    for a in s.iter() {
        push(&mut member, &mut list, a);
    }
    let mut i = 0;
    while i < list.len() {
        let a = list[i];
        i += 1;
        push(&mut member, &mut list, g.inverse(a));
        push(&mut member, &mut list, g.source(a));
        push(&mut member, &mut list, g.range(a));
        let mut j = 0;
        while j < list.len() {
            let b = list[j];
            j += 1;
            if let Some(ab) = g.product(a, b) {
                push(&mut member, &mut list, ab);
            }
            if let Some(ba) = g.product(b, a) {
                push(&mut member, &mut list, ba);
            }
        }
    }
    member
}

/// True iff `s` is closed under inverse, composable products, and contains the
/// source/range units of its members.
pub fn is_subgroupoid(g: &Groupoid, s: &ArrowSet) -> bool {
    for a in s.iter() {
        if !s.contains(g.inverse(a)) || !s.contains(g.source(a)) || !s.contains(g.range(a)) {
            return false;
        }
        for b in s.iter() {
            if let Some(ab) = g.product(a, b) {
                if !s.contains(ab) {
                    return false;
                }
            }
        }
    }
    true
}

/// Splits the subgroupoid `delta` into `(G, H)` where `H` saturates `m`
/// inside `delta` and `G` is the rest.
///
/// The recursion starts from `m ∩ delta` and alternately collects the unit
/// sets of the current layer and every arrow of `delta` touching those units,
/// until a fixed point. Guarantees: `G` and `H` are subgroupoids partitioning
/// `delta`, `G` avoids `m`, and no unit of `G` is a unit of `H`.
pub fn saturation_split(
    g: &Groupoid,
    delta: &ArrowSet,
    m: &ArrowSet,
) -> Result<(ArrowSet, ArrowSet), GroupoidError> {
    if !is_subgroupoid(g, delta) {
        return Err(GroupoidError::NotASubgroupoid(
            "saturation_split requires a closed arrow set".into(),
        ));
    }
    let mut h = m.intersection(delta);
    loop {
        let mut touched_units = vec![false; g.len()];
        for a in h.iter() {
            touched_units[g.source(a)] = true;
            touched_units[g.range(a)] = true;
        }
        let mut next = h.clone();
        for a in delta.iter() {
            if touched_units[g.source(a)] || touched_units[g.range(a)] {
                next.insert(a);
            }
        }
        if next == h {
            break;
        }
        h = next;
    }
    let g_part = delta.difference(&h);
    Ok((g_part, h))
}

/// Extracts a subgroupoid as a standalone groupoid.
///
/// New ids follow the ascending order of the old ones; the returned vector
/// maps new ids back to ids in the parent.
pub fn extract_subgroupoid(
    g: &Groupoid,
    arrows: &ArrowSet,
) -> Result<(Groupoid, Vec<usize>), GroupoidError> {
    if !is_subgroupoid(g, arrows) {
        return Err(GroupoidError::NotASubgroupoid(
            "cannot extract a non-closed arrow set".into(),
        ));
    }
    if arrows.is_empty() {
        return Err(GroupoidError::NotASubgroupoid(
            "cannot extract an empty subgroupoid".into(),
        ));
    }
    let to_parent: Vec<usize> = arrows.iter().collect();
    let mut from_parent = vec![usize::MAX; g.len()];
    for (new, &old) in to_parent.iter().enumerate() {
        from_parent[old] = new;
    }
    let units = g
        .units()
        .iter()
        .filter(|&&u| arrows.contains(u))
        .map(|&u| from_parent[u])
        .collect();
    let source = to_parent
        .iter()
        .map(|&a| from_parent[g.source(a)])
        .collect();
    let range = to_parent.iter().map(|&a| from_parent[g.range(a)]).collect();
    let inverse = to_parent
        .iter()
        .map(|&a| from_parent[g.inverse(a)])
        .collect();
    let mut products = Vec::new();
    for (new_a, &a) in to_parent.iter().enumerate() {
        for (new_b, &b) in to_parent.iter().enumerate() {
            if let Some(ab) = g.product(a, b) {
                products.push((new_a, new_b, from_parent[ab]));
            }
        }
    }
    let sub = Groupoid::from_tables(units, source, range, inverse, &products)?;
    Ok((sub, to_parent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Test-side closure oracle: repeat a naive full pass until stable.
    fn naive_closure(g: &Groupoid, s: &ArrowSet) -> ArrowSet {
        let mut cur = s.clone();
        loop {
            let mut next = cur.clone();
            for a in cur.iter() {
                next.insert(g.inverse(a));
                next.insert(g.source(a));
                next.insert(g.range(a));
                for b in cur.iter() {
                    if let Some(ab) = g.product(a, b) {
                        next.insert(ab);
                    }
                }
            }
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }

    fn klein_four() -> Vec<Vec<usize>> {
        vec![
            vec![0, 1, 2, 3],
            vec![1, 0, 3, 2],
            vec![2, 3, 0, 1],
            vec![3, 2, 1, 0],
        ]
    }

    #[test]
    fn constructors_validate() {
        assert!(pair_groupoid(3).validate().is_valid());
        assert!(cyclic_group(4).validate().is_valid());
        assert!(from_group(&klein_four()).unwrap().validate().is_valid());
        let u = disjoint_union(&pair_groupoid(2), &cyclic_group(3));
        assert!(u.validate().is_valid());
        let p = direct_product(&pair_groupoid(2), &cyclic_group(2));
        assert!(p.validate().is_valid());
    }

    #[test]
    fn pair_groupoid_counts() {
        let g = pair_groupoid(2);
        assert_eq!(g.len(), 4);
        assert_eq!(g.units().len(), 2);
        let g1 = pair_groupoid(1);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1.units().len(), 1);
    }

    #[test]
    fn from_group_z2() {
        let g = from_group(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.units().len(), 1);
        assert!(g.validate().is_valid());
    }

    #[test]
    fn from_group_rejects_non_group() {
        // Row 1 is not a permutation.
        let bad = vec![vec![0, 1], vec![0, 0]];
        assert!(matches!(
            from_group(&bad),
            Err(GroupoidError::InvalidGroupTable(_))
        ));
    }

    #[test]
    fn disjoint_union_counts() {
        let u = disjoint_union(&pair_groupoid(2), &pair_groupoid(2));
        assert_eq!(u.len(), 8);
        assert_eq!(u.units().len(), 4);
        assert!(u.validate().is_valid());
    }

    #[test]
    fn action_groupoid_swap() {
        let z2 = vec![vec![0, 1], vec![1, 0]];
        let swap = vec![vec![0, 1], vec![1, 0]];
        let g = action_groupoid(&z2, &swap).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.units().len(), 2);
        assert!(g.validate().is_valid());
    }

    #[test]
    fn action_groupoid_rejects_bad_action() {
        let z2 = vec![vec![0, 1], vec![1, 0]];
        let not_perm = vec![vec![0, 0], vec![1, 0]];
        assert!(matches!(
            action_groupoid(&z2, &not_perm),
            Err(GroupoidError::InvalidAction(_))
        ));
    }

    #[test]
    fn corrupted_product_reports_violation() {
        let g = pair_groupoid(2);
        let mut triples = g.product_triples();
        // ids: (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3; corrupt (0,1)·(1,0) = (0,0).
        let idx = triples
            .iter()
            .position(|&(a, b, _)| a == 1 && b == 2)
            .unwrap();
        triples[idx].2 = 3;
        let bad = Groupoid::from_tables(
            g.units().to_vec(),
            (0..4).map(|a| g.source(a)).collect(),
            (0..4).map(|a| g.range(a)).collect(),
            (0..4).map(|a| g.inverse(a)).collect(),
            &triples,
        )
        .unwrap();
        let report = bad.validate();
        assert!(!report.is_valid());
        assert!(
            report
                .violations
                .iter()
                .any(|v| v.law.starts_with("product.")),
            "got {report:?}"
        );
    }

    #[test]
    fn slices_in_pair_groupoid() {
        let g = pair_groupoid(2);
        // ids: (0,0)=0, (0,1)=1, (1,0)=2, (1,1)=3
        assert!(is_slice(&g, &ArrowSet::from_iter(4, [1, 2])));
        assert!(!is_slice(&g, &ArrowSet::from_iter(4, [0, 2]))); // (0,0) and (1,0) share source
        assert!(is_slice(&g, &ArrowSet::new(4)));
    }

    #[test]
    fn set_product_examples() {
        let g = pair_groupoid(3);
        let id = |i: usize, j: usize| i * 3 + j;
        let k = ArrowSet::from_iter(9, [id(1, 0)]);
        let l = ArrowSet::from_iter(9, [id(0, 2)]);
        let kl = set_product(&g, &k, &l);
        assert_eq!(kl.to_vec(), vec![id(1, 2)]);
        let disjoint = set_product(
            &g,
            &ArrowSet::from_iter(9, [id(0, 1)]),
            &ArrowSet::from_iter(9, [id(0, 2)]),
        );
        assert!(disjoint.is_empty());
    }

    #[test]
    fn generated_subgroupoid_examples() {
        let g = pair_groupoid(3);
        let id = |i: usize, j: usize| i * 3 + j;
        let s = ArrowSet::from_iter(9, [id(0, 1)]);
        let closure = generated_subgroupoid(&g, &s);
        assert_eq!(closure, naive_closure(&g, &s));
        assert_eq!(
            closure.to_vec(),
            vec![id(0, 0), id(0, 1), id(1, 0), id(1, 1)]
        );
        assert!(generated_subgroupoid(&g, &ArrowSet::new(9)).is_empty());
        let all = ArrowSet::full(9);
        assert_eq!(generated_subgroupoid(&g, &all), all);
    }

    #[test]
    fn saturation_split_disjoint_union() {
        let g = disjoint_union(&pair_groupoid(2), &pair_groupoid(2));
        let delta = ArrowSet::full(8);
        let m = ArrowSet::from_iter(8, [1]); // one arrow in the first copy
        let (g_part, h) = saturation_split(&g, &delta, &m).unwrap();
        assert_eq!(h.to_vec(), vec![0, 1, 2, 3]);
        assert_eq!(g_part.to_vec(), vec![4, 5, 6, 7]);
    }

    #[test]
    fn saturation_split_trivial_and_spreading() {
        let g = pair_groupoid(3);
        let delta = ArrowSet::full(9);
        let (g_part, h) = saturation_split(&g, &delta, &ArrowSet::new(9)).unwrap();
        assert_eq!(g_part, delta);
        assert!(h.is_empty());
        // A single arrow saturates the whole connected pair groupoid.
        let (g_part, h) = saturation_split(&g, &delta, &ArrowSet::from_iter(9, [1])).unwrap();
        assert!(g_part.is_empty());
        assert_eq!(h, delta);
    }

    #[test]
    fn saturation_split_rejects_non_subgroupoid() {
        let g = pair_groupoid(2);
        let not_closed = ArrowSet::from_iter(4, [1]);
        assert!(matches!(
            saturation_split(&g, &not_closed, &ArrowSet::new(4)),
            Err(GroupoidError::NotASubgroupoid(_))
        ));
    }

    #[test]
    fn extract_subgroupoid_roundtrip() {
        let g = disjoint_union(&pair_groupoid(2), &cyclic_group(3));
        let second = ArrowSet::from_iter(g.len(), 4..7);
        let (sub, to_parent) = extract_subgroupoid(&g, &second).unwrap();
        assert!(sub.validate().is_valid());
        assert_eq!(sub.len(), 3);
        assert_eq!(to_parent, vec![4, 5, 6]);
    }

    fn random_groupoid_for_props(rng: &mut ChaCha8Rng) -> Groupoid {
        match rng.gen_range(0..3) {
            0 => pair_groupoid(rng.gen_range(2..6)),
            1 => cyclic_group(rng.gen_range(1..8)),
            _ => disjoint_union(
                &pair_groupoid(rng.gen_range(2..4)),
                &cyclic_group(rng.gen_range(2..5)),
            ),
        }
    }

    fn random_slice(rng: &mut ChaCha8Rng, g: &Groupoid) -> ArrowSet {
        let mut order: Vec<usize> = (0..g.len()).collect();
        order.shuffle(rng);
        let mut used_s = vec![false; g.len()];
        let mut used_r = vec![false; g.len()];
        let mut out = ArrowSet::new(g.len());
        for a in order {
            if rng.gen_bool(0.6) && !used_s[g.source(a)] && !used_r[g.range(a)] {
                used_s[g.source(a)] = true;
                used_r[g.range(a)] = true;
                out.insert(a);
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

        #[test]
        fn product_of_slices_is_slice(seed in 0u64..1u64 << 48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_groupoid_for_props(&mut rng);
            let k = random_slice(&mut rng, &g);
            let l = random_slice(&mut rng, &g);
            prop_assert!(is_slice(&g, &set_product(&g, &k, &l)));
        }

        #[test]
        fn slice_iff_products_with_inverse_land_in_units(seed in 0u64..1u64 << 48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_groupoid_for_props(&mut rng);
            let mut s = ArrowSet::new(g.len());
            for a in 0..g.len() {
                if rng.gen_bool(0.4) {
                    s.insert(a);
                }
            }
            let units = ArrowSet::from_iter(g.len(), g.units().iter().copied());
            let inv = set_inverse(&g, &s);
            let both = set_product(&g, &s, &inv).union(&set_product(&g, &inv, &s));
            prop_assert_eq!(is_slice(&g, &s), both.is_subset_of(&units));
        }

        #[test]
        fn closure_matches_oracle_and_is_monotone(seed in 0u64..1u64 << 48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_groupoid_for_props(&mut rng);
            let mut s = ArrowSet::new(g.len());
            let mut extra = ArrowSet::new(g.len());
            for a in 0..g.len() {
                if rng.gen_bool(0.25) {
                    s.insert(a);
                }
                if rng.gen_bool(0.35) {
                    extra.insert(a);
                }
            }
            let t = s.union(&extra);
            let cs = generated_subgroupoid(&g, &s);
            prop_assert_eq!(&cs, &naive_closure(&g, &s));
            // Idempotent and monotone.
            prop_assert_eq!(&generated_subgroupoid(&g, &cs), &cs);
            prop_assert!(cs.is_subset_of(&generated_subgroupoid(&g, &t)));
        }

        #[test]
        fn saturation_split_postconditions(seed in 0u64..1u64 << 48) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_groupoid_for_props(&mut rng);
            let mut seed_set = ArrowSet::new(g.len());
            for a in 0..g.len() {
                if rng.gen_bool(0.3) {
                    seed_set.insert(a);
                }
            }
            let delta = generated_subgroupoid(&g, &seed_set);
            let mut m = ArrowSet::new(g.len());
            for a in 0..g.len() {
                if rng.gen_bool(0.2) {
                    m.insert(a);
                }
            }
            let (gp, h) = saturation_split(&g, &delta, &m).unwrap();
            prop_assert!(is_subgroupoid(&g, &gp));
            prop_assert!(is_subgroupoid(&g, &h));
            prop_assert!(gp.intersection(&m).is_empty());
            prop_assert_eq!(gp.union(&h), delta);
            prop_assert!(gp.intersection(&h).is_empty());
            // Unit sets of the two halves are disjoint.
            let mut g_units = vec![false; g.len()];
            for a in gp.iter() {
                g_units[g.source(a)] = true;
                g_units[g.range(a)] = true;
            }
            for a in h.iter() {
                prop_assert!(!g_units[g.source(a)] && !g_units[g.range(a)]);
            }
        }
    }
}
