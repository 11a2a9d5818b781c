//! Concrete groups used as vertex groups, acting groups and finite quotients.
//!
//! Permutations are stored as image arrays and composed as functions:
//! `(σ·τ)(x) = σ(τ(x))`, so the right factor is applied first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("element {element:?} does not belong to {spec}")]
    Mismatch { spec: String, element: GroupElement },
    #[error("invalid group description: {0}")]
    InvalidSpec(String),
    #[error("invalid homomorphism: {0}")]
    InvalidHomomorphism(String),
    #[error("the identity cannot be separated from itself")]
    IdentityElement,
    #[error("{0} is infinite and cannot be enumerated")]
    Infinite(String),
}

/// Multiplication table of a finite group on `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteTable {
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

impl FiniteTable {
    /// Validates closure, identity, inverses and associativity by exhaustive scan.
    pub fn new(table: Vec<Vec<usize>>, identity: usize) -> Result<Self, GroupError> {
        let n = table.len();
        if n == 0 {
            return Err(GroupError::InvalidSpec("empty multiplication table".into()));
        }
        if identity >= n {
            return Err(GroupError::InvalidSpec(format!("identity index {identity} out of range")));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupError::InvalidSpec(format!("row {i} has length {} (expected {n})", row.len())));
            }
            if let Some(&bad) = row.iter().find(|&&x| x >= n) {
                return Err(GroupError::InvalidSpec(format!("entry {bad} in row {i} is out of range")));
            }
        }
        for a in 0..n {
            if table[identity][a] != a || table[a][identity] != a {
                return Err(GroupError::InvalidSpec(format!("{identity} is not an identity for {a}")));
            }
        }
        let mut inverses = vec![0; n];
        for a in 0..n {
            match (0..n).find(|&b| table[a][b] == identity && table[b][a] == identity) {
                Some(b) => inverses[a] = b,
                None => return Err(GroupError::InvalidSpec(format!("element {a} has no inverse"))),
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = table[a][b];
                for c in 0..n {
                    if table[ab][c] != table[a][table[b][c]] {
                        return Err(GroupError::InvalidSpec(format!("associativity fails on ({a}, {b}, {c})")));
                    }
                }
            }
        }
        Ok(FiniteTable { table, identity, inverses })
    }

    pub fn size(&self) -> usize {
        self.table.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.table
    }
}

/// A concrete group.
///
/// `CyclicPower` is the finite abelian group `(ℤ/modulus)^rank`; it is the target
/// of the reduction maps out of `FreeAbelian`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroupSpec {
    Cyclic { order: u64 },
    Symmetric { degree: usize },
    FiniteTable(FiniteTable),
    FreeAbelian { rank: usize },
    CyclicPower { modulus: u64, rank: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupElement {
    Residue(u64),
    Vector(Vec<i64>),
    Index(usize),
    Perm(Vec<usize>),
}

impl std::fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GroupSpec::Cyclic { order } => write!(f, "C{order}"),
            GroupSpec::Symmetric { degree } => write!(f, "S{degree}"),
            GroupSpec::FiniteTable(t) => write!(f, "table group of order {}", t.size()),
            GroupSpec::FreeAbelian { rank } => write!(f, "Z^{rank}"),
            GroupSpec::CyclicPower { modulus, rank } => write!(f, "(Z/{modulus})^{rank}"),
        }
    }
}

impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn list<T: std::fmt::Display>(f: &mut std::fmt::Formatter<'_>, xs: &[T]) -> std::fmt::Result {
            write!(f, "[")?;
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "]")
        }
        match self {
            GroupElement::Residue(r) => write!(f, "{r}"),
            GroupElement::Index(i) => write!(f, "#{i}"),
            GroupElement::Vector(v) => list(f, v),
            GroupElement::Perm(p) => list(f, p),
        }
    }
}

fn is_permutation(p: &[usize], degree: usize) -> bool {
    if p.len() != degree {
        return false;
    }
    let mut seen = vec![false; degree];
    for &x in p {
        if x >= degree || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

impl GroupSpec {
    pub fn cyclic(order: u64) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::InvalidSpec("cyclic order must be at least 1".into()));
        }
        Ok(GroupSpec::Cyclic { order })
    }

    pub fn symmetric(degree: usize) -> Result<Self, GroupError> {
        if degree == 0 {
            return Err(GroupError::InvalidSpec("symmetric degree must be at least 1".into()));
        }
        Ok(GroupSpec::Symmetric { degree })
    }

    pub fn table(table: Vec<Vec<usize>>, identity: usize) -> Result<Self, GroupError> {
        FiniteTable::new(table, identity).map(GroupSpec::FiniteTable)
    }

    pub fn free_abelian(rank: usize) -> Self {
        GroupSpec::FreeAbelian { rank }
    }

    pub fn cyclic_power(modulus: u64, rank: usize) -> Result<Self, GroupError> {
        if modulus == 0 {
            return Err(GroupError::InvalidSpec("modulus must be at least 1".into()));
        }
        Ok(GroupSpec::CyclicPower { modulus, rank })
    }

    /// Re-checks the structural invariants, for values that did not go through a constructor.
    pub fn validate_spec(&self) -> Result<(), GroupError> {
        match self {
            GroupSpec::Cyclic { order } => Self::cyclic(*order).map(drop),
            GroupSpec::Symmetric { degree } => Self::symmetric(*degree).map(drop),
            GroupSpec::FiniteTable(t) => FiniteTable::new(t.table.clone(), t.identity).map(drop),
            GroupSpec::FreeAbelian { .. } => Ok(()),
            GroupSpec::CyclicPower { modulus, rank } => Self::cyclic_power(*modulus, *rank).map(drop),
        }
    }

    pub fn contains(&self, a: &GroupElement) -> bool {
        match (self, a) {
            (GroupSpec::Cyclic { order }, GroupElement::Residue(r)) => r < order,
            (GroupSpec::Symmetric { degree }, GroupElement::Perm(p)) => is_permutation(p, *degree),
            (GroupSpec::FiniteTable(t), GroupElement::Index(i)) => *i < t.size(),
            (GroupSpec::FreeAbelian { rank }, GroupElement::Vector(v)) => v.len() == *rank,
            (GroupSpec::CyclicPower { modulus, rank }, GroupElement::Vector(v)) => {
                v.len() == *rank && v.iter().all(|&x| x >= 0 && (x as u64) < *modulus)
            }
            _ => false,
        }
    }

    pub fn check(&self, a: &GroupElement) -> Result<(), GroupError> {
        if self.contains(a) {
            Ok(())
        } else {
            Err(GroupError::Mismatch { spec: self.to_string(), element: a.clone() })
        }
    }

    pub fn identity(&self) -> GroupElement {
        match self {
            GroupSpec::Cyclic { .. } => GroupElement::Residue(0),
            GroupSpec::Symmetric { degree } => GroupElement::Perm((0..*degree).collect()),
            GroupSpec::FiniteTable(t) => GroupElement::Index(t.identity),
            GroupSpec::FreeAbelian { rank } | GroupSpec::CyclicPower { rank, .. } => {
                GroupElement::Vector(vec![0; *rank])
            }
        }
    }

    pub fn is_identity(&self, a: &GroupElement) -> bool {
        *a == self.identity()
    }

    pub fn compose(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (self, a, b) {
            (GroupSpec::Cyclic { order }, GroupElement::Residue(x), GroupElement::Residue(y)) => {
                GroupElement::Residue(((*x as u128 + *y as u128) % *order as u128) as u64)
            }
            (GroupSpec::Symmetric { .. }, GroupElement::Perm(s), GroupElement::Perm(t)) => {
                GroupElement::Perm(t.iter().map(|&x| s[x]).collect())
            }
            (GroupSpec::FiniteTable(tab), GroupElement::Index(x), GroupElement::Index(y)) => {
                GroupElement::Index(tab.table[*x][*y])
            }
            (GroupSpec::FreeAbelian { .. }, GroupElement::Vector(x), GroupElement::Vector(y)) => {
                GroupElement::Vector(x.iter().zip(y).map(|(p, q)| p + q).collect())
            }
            (GroupSpec::CyclicPower { modulus, .. }, GroupElement::Vector(x), GroupElement::Vector(y)) => {
                let m = *modulus as i64;
                GroupElement::Vector(x.iter().zip(y).map(|(p, q)| (p + q).rem_euclid(m)).collect())
            }
            _ => unreachable!("checked above"),
        })
    }

    pub fn invert(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.check(a)?;
        Ok(match (self, a) {
            (GroupSpec::Cyclic { order }, GroupElement::Residue(x)) => GroupElement::Residue((order - x) % order),
            (GroupSpec::Symmetric { .. }, GroupElement::Perm(p)) => {
                let mut inv = vec![0; p.len()];
                for (i, &x) in p.iter().enumerate() {
                    inv[x] = i;
                }
                GroupElement::Perm(inv)
            }
            (GroupSpec::FiniteTable(t), GroupElement::Index(x)) => GroupElement::Index(t.inverses[*x]),
            (GroupSpec::FreeAbelian { .. }, GroupElement::Vector(v)) => {
                GroupElement::Vector(v.iter().map(|x| -x).collect())
            }
            (GroupSpec::CyclicPower { modulus, .. }, GroupElement::Vector(v)) => {
                let m = *modulus as i64;
                GroupElement::Vector(v.iter().map(|x| (-x).rem_euclid(m)).collect())
            }
            _ => unreachable!("checked above"),
        })
    }

    /// `a·b·a⁻¹·b⁻¹`.
    pub fn commutator(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
        let ab = self.compose(a, b)?;
        let ai = self.invert(a)?;
        let bi = self.invert(b)?;
        self.compose(&self.compose(&ab, &ai)?, &bi)
    }

    /// Number of elements, `None` for infinite groups.
    pub fn order(&self) -> Option<u64> {
        match self {
            GroupSpec::Cyclic { order } => Some(*order),
            GroupSpec::Symmetric { degree } => (1..=*degree as u64).try_fold(1u64, |acc, k| acc.checked_mul(k)),
            GroupSpec::FiniteTable(t) => Some(t.size() as u64),
            GroupSpec::FreeAbelian { rank } => (*rank == 0).then_some(1),
            GroupSpec::CyclicPower { modulus, rank } => modulus.checked_pow(*rank as u32),
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, GroupSpec::FreeAbelian { rank } if *rank > 0)
    }

    pub fn is_abelian(&self) -> bool {
        match self {
            GroupSpec::Cyclic { .. } | GroupSpec::FreeAbelian { .. } | GroupSpec::CyclicPower { .. } => true,
            GroupSpec::Symmetric { degree } => *degree <= 2,
            GroupSpec::FiniteTable(t) => {
                let n = t.size();
                (0..n).all(|a| (a + 1..n).all(|b| t.table[a][b] == t.table[b][a]))
            }
        }
    }

    /// A pair of non-commuting elements, smallest first in enumeration order.
    pub fn noncommuting_pair(&self) -> Option<(GroupElement, GroupElement)> {
        match self {
            GroupSpec::Symmetric { degree } if *degree >= 3 => {
                let mut g: Vec<usize> = (0..*degree).collect();
                g.swap(0, 1);
                let mut h: Vec<usize> = (0..*degree).collect();
                h.swap(0, 2);
                Some((GroupElement::Perm(g), GroupElement::Perm(h)))
            }
            GroupSpec::FiniteTable(t) => {
                let n = t.size();
                (0..n)
                    .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                    .find(|&(a, b)| t.table[a][b] != t.table[b][a])
                    .map(|(a, b)| (GroupElement::Index(a), GroupElement::Index(b)))
            }
            _ => None,
        }
    }

    /// Some non-identity element, if one exists.
    pub fn nontrivial_element(&self) -> Option<GroupElement> {
        match self {
            GroupSpec::Cyclic { order } => (*order > 1).then_some(GroupElement::Residue(1)),
            GroupSpec::Symmetric { degree } => (*degree >= 2).then(|| {
                let mut p: Vec<usize> = (0..*degree).collect();
                p.swap(0, 1);
                GroupElement::Perm(p)
            }),
            GroupSpec::FiniteTable(t) => (0..t.size()).find(|&i| i != t.identity).map(GroupElement::Index),
            GroupSpec::FreeAbelian { rank } => (*rank > 0).then(|| {
                let mut v = vec![0; *rank];
                v[0] = 1;
                GroupElement::Vector(v)
            }),
            GroupSpec::CyclicPower { modulus, rank } => (*modulus > 1 && *rank > 0).then(|| {
                let mut v = vec![0; *rank];
                v[0] = 1;
                GroupElement::Vector(v)
            }),
        }
    }

    /// All elements of a finite group in a fixed order; `element_index` is its inverse.
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        match self {
            GroupSpec::Cyclic { order } => Ok((0..*order).map(GroupElement::Residue).collect()),
            GroupSpec::Symmetric { degree } => Ok(permutations(*degree).into_iter().map(GroupElement::Perm).collect()),
            GroupSpec::FiniteTable(t) => Ok((0..t.size()).map(GroupElement::Index).collect()),
            GroupSpec::FreeAbelian { rank } if *rank == 0 => Ok(vec![GroupElement::Vector(vec![])]),
            GroupSpec::FreeAbelian { .. } => Err(GroupError::Infinite(self.to_string())),
            GroupSpec::CyclicPower { modulus, rank } => {
                let mut out = vec![vec![]];
                for _ in 0..*rank {
                    out = out
                        .into_iter()
                        .flat_map(|v: Vec<i64>| {
                            (0..*modulus as i64).map(move |x| {
                                let mut w = v.clone();
                                w.push(x);
                                w
                            })
                        })
                        .collect();
                }
                Ok(out.into_iter().map(GroupElement::Vector).collect())
            }
        }
    }

    pub fn element_index(&self, a: &GroupElement) -> Result<usize, GroupError> {
        self.check(a)?;
        match (self, a) {
            (GroupSpec::Cyclic { .. }, GroupElement::Residue(r)) => Ok(*r as usize),
            (GroupSpec::Symmetric { .. }, GroupElement::Perm(p)) => Ok(lehmer_rank(p)),
            (GroupSpec::FiniteTable(_), GroupElement::Index(i)) => Ok(*i),
            (GroupSpec::CyclicPower { modulus, .. }, GroupElement::Vector(v)) => {
                Ok(v.iter().fold(0usize, |acc, &x| acc * *modulus as usize + x as usize))
            }
            (GroupSpec::FreeAbelian { .. }, GroupElement::Vector(v)) if v.is_empty() => Ok(0),
            _ => Err(GroupError::Infinite(self.to_string())),
        }
    }
}

/// All permutations of `0..degree` in lexicographic order.
fn permutations(degree: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (0..degree).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..degree).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..degree).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

fn lehmer_rank(p: &[usize]) -> usize {
    let n = p.len();
    let mut rank = 0;
    for i in 0..n {
        let smaller = p[i + 1..].iter().filter(|&&x| x < p[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HomRule {
    Identity,
    ReduceMod { modulus: u64 },
    /// Images of the source elements, in `GroupSpec::elements` order.
    Table { images: Vec<GroupElement> },
}

/// A homomorphism between concrete groups, validated at construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Homomorphism {
    source: GroupSpec,
    target: GroupSpec,
    rule: HomRule,
}

impl Homomorphism {
    pub fn new(source: GroupSpec, target: GroupSpec, rule: HomRule) -> Result<Self, GroupError> {
        match &rule {
            HomRule::Identity => {
                if source != target {
                    return Err(GroupError::InvalidHomomorphism("identity rule needs equal source and target".into()));
                }
            }
            HomRule::ReduceMod { modulus } => {
                let ok = match (&source, &target) {
                    (GroupSpec::FreeAbelian { rank }, GroupSpec::CyclicPower { modulus: m, rank: r }) => {
                        rank == r && m == modulus
                    }
                    _ => false,
                };
                if !ok || *modulus == 0 {
                    return Err(GroupError::InvalidHomomorphism(format!(
                        "reduction mod {modulus} must go from Z^r to (Z/{modulus})^r"
                    )));
                }
            }
            HomRule::Table { images } => {
                let elems = source.elements()?;
                if images.len() != elems.len() {
                    return Err(GroupError::InvalidHomomorphism(format!(
                        "table has {} images for {} source elements",
                        images.len(),
                        elems.len()
                    )));
                }
                for img in images {
                    target.check(img)?;
                }
                for (i, a) in elems.iter().enumerate() {
                    for (j, b) in elems.iter().enumerate() {
                        let ab = source.element_index(&source.compose(a, b)?)?;
                        if images[ab] != target.compose(&images[i], &images[j])? {
                            return Err(GroupError::InvalidHomomorphism(format!(
                                "table does not respect the product of {a} and {b}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Homomorphism { source, target, rule })
    }

    pub fn identity(spec: &GroupSpec) -> Self {
        Homomorphism { source: spec.clone(), target: spec.clone(), rule: HomRule::Identity }
    }

    pub fn source(&self) -> &GroupSpec {
        &self.source
    }

    pub fn target(&self) -> &GroupSpec {
        &self.target
    }

    pub fn rule(&self) -> &HomRule {
        &self.rule
    }

    pub fn apply(&self, a: &GroupElement) -> Result<GroupElement, GroupError> {
        self.source.check(a)?;
        match &self.rule {
            HomRule::Identity => Ok(a.clone()),
            HomRule::ReduceMod { modulus } => match a {
                GroupElement::Vector(v) => {
                    Ok(GroupElement::Vector(v.iter().map(|x| x.rem_euclid(*modulus as i64)).collect()))
                }
                _ => unreachable!("checked by source"),
            },
            HomRule::Table { images } => Ok(images[self.source.element_index(a)?].clone()),
        }
    }
}

/// A homomorphism onto a finite group under which `a` stays nontrivial.
///
/// Finite groups separate themselves; for `ℤ^r` the smallest modulus `m ≥ 2`
/// leaving some coordinate of `a` nonzero is used.
pub fn separating_quotient(spec: &GroupSpec, a: &GroupElement) -> Result<(Homomorphism, GroupElement), GroupError> {
    spec.check(a)?;
    if spec.is_identity(a) {
        return Err(GroupError::IdentityElement);
    }
    let (hom, image) = match (spec, a) {
        (GroupSpec::FreeAbelian { rank }, GroupElement::Vector(v)) => {
            let modulus = (2u64..)
                .find(|&m| v.iter().any(|x| x.rem_euclid(m as i64) != 0))
                .expect("a nonzero integer is nonzero modulo some m > |x|");
            let hom = Homomorphism::new(
                spec.clone(),
                GroupSpec::cyclic_power(modulus, *rank)?,
                HomRule::ReduceMod { modulus },
            )?;
            let image = hom.apply(a)?;
            (hom, image)
        }
        _ => (Homomorphism::identity(spec), a.clone()),
    };
    assert!(!hom.target().is_identity(&image), "separating quotient killed {a}");
    Ok((hom, image))
}
