//! Finite subsets of Z^d with a stable site ↔ row bijection.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Site(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Site(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn l1_dist(&self, other: &Site) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// x·ω as a real number (not reduced mod 1).
    pub fn dot(&self, omega: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(omega)
            .map(|(&x, &w)| x as f64 * w)
            .sum()
    }

    pub fn add(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Site) -> Site {
        Site(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// The 2d nearest neighbours, in a fixed order.
    pub fn neighbors(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.dim()).flat_map(move |k| {
            [-1i64, 1].into_iter().map(move |step| {
                let mut c = self.0.clone();
                c[k] += step;
                Site(c)
            })
        })
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<Vec<i64>> for Site {
    fn from(v: Vec<i64>) -> Self {
        Site(v)
    }
}

/// A point of (Z/2)^d stored in doubled coordinates, so block centers that sit
/// halfway between two lattice points stay exact.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Center(pub Vec<i64>);

impl Center {
    pub fn from_doubled(doubled: impl Into<Vec<i64>>) -> Self {
        Center(doubled.into())
    }

    pub fn from_site(site: &Site) -> Self {
        Center(site.0.iter().map(|c| 2 * c).collect())
    }

    /// (a + b) / 2. The two centers must differ by a lattice vector.
    pub fn midpoint(a: &Center, b: &Center) -> Self {
        debug_assert_eq!(a.parity(), b.parity());
        Center(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) / 2).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn doubled(&self) -> &[i64] {
        &self.0
    }

    /// The lattice site, when every coordinate is an integer.
    pub fn to_site(&self) -> Option<Site> {
        self.0
            .iter()
            .map(|c| (c % 2 == 0).then_some(c / 2))
            .collect::<Option<Vec<_>>>()
            .map(Site)
    }

    /// Residue of each doubled coordinate mod 2; equal parities mean the two
    /// centers differ by a lattice vector.
    pub fn parity(&self) -> Vec<i64> {
        self.0.iter().map(|c| c.rem_euclid(2)).collect()
    }

    pub fn coords(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64 / 2.0).collect()
    }

    /// c·ω
    pub fn dot(&self, omega: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(omega)
            .map(|(&c, &w)| c as f64 * w)
            .sum::<f64>()
            / 2.0
    }

    /// Twice the ℓ¹ distance to another center.
    pub fn l1_dist_doubled(&self, other: &Center) -> i64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Twice the ℓ¹ distance to a lattice site.
    pub fn l1_dist_doubled_site(&self, site: &Site) -> i64 {
        self.0
            .iter()
            .zip(&site.0)
            .map(|(c, x)| (2 * x - c).abs())
            .sum()
    }

    /// The mirror image 2c − x of a site.
    pub fn reflect(&self, site: &Site) -> Site {
        Site(self.0.iter().zip(&site.0).map(|(c, x)| c - x).collect())
    }

    /// c + v for an integer vector v.
    pub fn shift(&self, v: &Site) -> Center {
        Center(self.0.iter().zip(&v.0).map(|(c, x)| c + 2 * x).collect())
    }

    /// The integer vector self − other; `None` when the parities differ.
    pub fn offset_from(&self, other: &Center) -> Option<Site> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a - b;
                (d % 2 == 0).then_some(d / 2)
            })
            .collect::<Option<Vec<_>>>()
            .map(Site)
    }
}

impl fmt::Debug for Center {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.coords())
    }
}

/// A finite region of Z^d. Sites are kept in lexicographic order and the
/// position in that order is the matrix row.
#[derive(Clone, PartialEq, Eq)]
pub struct LatticeRegion {
    dim: usize,
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
}

impl fmt::Debug for LatticeRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LatticeRegion")
            .field("dim", &self.dim)
            .field("len", &self.sites.len())
            .finish()
    }
}

impl LatticeRegion {
    /// Builds a region from an explicit list; duplicates are rejected.
    pub fn from_sites(dim: usize, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut set = BTreeSet::new();
        for s in sites {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.dim(),
                });
            }
            if let Some(dup) = set.replace(s) {
                return Err(Error::DuplicateSite(dup.0));
            }
        }
        Ok(Self::from_set(dim, set))
    }

    pub fn from_set(dim: usize, set: BTreeSet<Site>) -> Self {
        let sites: Vec<Site> = set.into_iter().collect();
        let index = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        LatticeRegion { dim, sites, index }
    }

    /// The box ∏ [lo_k, hi_k].
    pub fn cuboid(lo: &[i64], hi: &[i64]) -> Self {
        let dim = lo.len();
        let mut set = BTreeSet::new();
        let mut cur = lo.to_vec();
        if lo.iter().zip(hi).any(|(l, h)| l > h) {
            return Self::from_set(dim, set);
        }
        loop {
            set.insert(Site(cur.clone()));
            let mut k = dim;
            loop {
                if k == 0 {
                    return Self::from_set(dim, set);
                }
                k -= 1;
                if cur[k] < hi[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = lo[k];
            }
        }
    }

    /// The sup-norm box of half-width `radius` about `center`.
    pub fn cube(center: &Site, radius: i64) -> Self {
        let lo: Vec<i64> = center.0.iter().map(|c| c - radius).collect();
        let hi: Vec<i64> = center.0.iter().map(|c| c + radius).collect();
        Self::cuboid(&lo, &hi)
    }

    /// A box with `side` sites per axis whose lowest corner is `-(side/2)`.
    pub fn centered_box(dim: usize, side: i64) -> Self {
        let lo = vec![-(side / 2); dim];
        let hi = vec![side - 1 - side / 2; dim];
        Self::cuboid(&lo, &hi)
    }

    /// {x ∈ Z^d : ‖x − c‖₁ ≤ radius}, for a possibly half-integer center c.
    pub fn l1_ball(center: &Center, radius: f64) -> Self {
        let dim = center.dim();
        Self::from_set(dim, l1_ball_set(center, radius))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> &Site {
        &self.sites[i]
    }

    pub fn index_of(&self, s: &Site) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn contains(&self, s: &Site) -> bool {
        self.index.contains_key(s)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Site> {
        self.sites.iter()
    }

    pub fn to_set(&self) -> BTreeSet<Site> {
        self.sites.iter().cloned().collect()
    }

    pub fn is_subset_of(&self, other: &LatticeRegion) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn intersects(&self, other: &LatticeRegion) -> bool {
        let (small, big) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.sites.iter().any(|s| big.contains(s))
    }

    pub fn union(&self, other: &LatticeRegion) -> LatticeRegion {
        let mut set = self.to_set();
        set.extend(other.sites.iter().cloned());
        Self::from_set(self.dim, set)
    }

    pub fn difference(&self, other: &LatticeRegion) -> LatticeRegion {
        Self::from_set(
            self.dim,
            self.sites
                .iter()
                .filter(|s| !other.contains(s))
                .cloned()
                .collect(),
        )
    }

    pub fn translate(&self, v: &Site) -> LatticeRegion {
        Self::from_set(self.dim, self.sites.iter().map(|s| s.add(v)).collect())
    }

    /// Keeps the sites satisfying `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&Site) -> bool) -> LatticeRegion {
        Self::from_set(
            self.dim,
            self.sites.iter().filter(|s| keep(s)).cloned().collect(),
        )
    }

    /// Unordered nearest-neighbour pairs (i < j) by matrix index.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, s) in self.sites.iter().enumerate() {
            for n in s.neighbors() {
                if let Some(j) = self.index_of(&n) {
                    if i < j {
                        out.push((i, j));
                    }
                }
            }
        }
        out
    }

    /// ℓ¹ distance from a site to the region.
    pub fn dist_to(&self, s: &Site) -> Option<i64> {
        self.sites.iter().map(|x| x.l1_dist(s)).min()
    }

    /// Whether x ∈ Λ ⇒ 2c − x ∈ Λ.
    pub fn is_symmetric_about(&self, c: &Center) -> bool {
        self.sites.iter().all(|s| self.contains(&c.reflect(s)))
    }

    /// Connected components under nearest-neighbour adjacency, each in
    /// lexicographic order of its smallest site.
    pub fn components(&self) -> Vec<LatticeRegion> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = BTreeSet::new();
            while let Some(i) = stack.pop() {
                comp.insert(self.sites[i].clone());
                for n in self.sites[i].neighbors() {
                    if let Some(j) = self.index_of(&n) {
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            out.push(Self::from_set(self.dim, comp));
        }
        out
    }
}

/// The lattice points of an ℓ¹ ball about a (possibly half-integer) center.
pub fn l1_ball_set(center: &Center, radius: f64) -> BTreeSet<Site> {
    let dim = center.dim();
    let mut set = BTreeSet::new();
    if radius < 0.0 {
        return set;
    }
    // work in doubled units: ‖2x − 2c‖₁ ≤ 2r
    let budget = (2.0 * radius + 1e-9).floor() as i64;
    let mut cur = vec![0i64; dim];
    fn rec(
        k: usize,
        center: &[i64],
        budget: i64,
        cur: &mut Vec<i64>,
        out: &mut BTreeSet<Site>,
    ) {
        if k == center.len() {
            out.insert(Site(cur.clone()));
            return;
        }
        let c = center[k];
        let lo = (c - budget).div_euclid(2) - 1;
        let hi = (c + budget).div_euclid(2) + 1;
        for x in lo..=hi {
            let used = (2 * x - c).abs();
            if used <= budget {
                cur[k] = x;
                rec(k + 1, center, budget - used, cur, out);
            }
        }
    }
    rec(0, center.doubled(), budget, &mut cur, &mut set);
    set
}

/// Pairs (z, z') with z inside `inner`, z' ∈ ambient ∖ inner and ‖z − z'‖₁ = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCoupling {
    pub pairs: Vec<(Site, Site)>,
}

impl BoundaryCoupling {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn boundary_coupling(inner: &LatticeRegion, ambient: &LatticeRegion) -> Result<BoundaryCoupling> {
    if let Some(s) = inner.iter().find(|s| !ambient.contains(s)) {
        return Err(Error::NotSubset(s.0.clone()));
    }
    let mut pairs = Vec::new();
    for z in inner.iter() {
        for n in z.neighbors() {
            if ambient.contains(&n) && !inner.contains(&n) {
                pairs.push((z.clone(), n));
            }
        }
    }
    Ok(BoundaryCoupling { pairs })
}
