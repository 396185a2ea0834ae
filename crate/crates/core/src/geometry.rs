//! Resonant blocks: symmetric, translation-invariant neighbourhoods of the
//! singular centers that swallow every earlier-stage block they touch.

use std::collections::{BTreeSet, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{l1_ball_set, Center, LatticeRegion, Site};
use crate::torus::torus_norm;

/// The pigeonhole bound on growth steps per prior stage.
pub const ABSORPTION_LIMIT: usize = 10;
/// Blocks stay within this many multiples of the padding scale.
pub const PADDING_FACTOR: i64 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ResonantBlock {
    pub center: Center,
    pub sites: LatticeRegion,
    pub stage: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockFamily {
    pub stage: usize,
    /// base ℓ¹ radius L of the blocks
    pub length: i64,
    /// the previous stage's length, which bounds the padding
    pub pad: i64,
    /// centers in doubled coordinates, lexicographic
    pub centers: Vec<Center>,
    /// doubled offsets 2x − 2c of the block sites, shared by every block
    pub template: Vec<Site>,
    /// growth steps t_r per prior stage r (highest stage first), summed over passes
    pub absorption_counts: Vec<usize>,
    #[serde(skip)]
    pub blocks: Vec<ResonantBlock>,
}

impl BlockFamily {
    /// A family with no prior absorption: Λ_L(c) for each center.
    pub fn plain(stage: usize, centers: &[Center], length: i64) -> Result<Self> {
        build_with_stage(stage, centers, &[], length, 0)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The block centered at `c`, or `None` if `c` is not one of the centers.
    pub fn block_at(&self, c: &Center) -> Option<&ResonantBlock> {
        self.blocks.iter().find(|b| &b.center == c)
    }

    /// Template instantiated at an arbitrary center of the right parity.
    pub fn instantiate(&self, c: &Center) -> Option<LatticeRegion> {
        instantiate(&self.template, c).map(|set| LatticeRegion::from_set(c.dim(), set))
    }
}

fn instantiate(template: &[Site], c: &Center) -> Option<BTreeSet<Site>> {
    template
        .iter()
        .map(|d| {
            d.0.iter()
                .zip(c.doubled())
                .map(|(a, b)| {
                    let s = a + b;
                    (s % 2 == 0).then_some(s / 2)
                })
                .collect::<Option<Vec<_>>>()
                .map(Site)
        })
        .collect()
}

fn to_template(sites: &BTreeSet<Site>, c: &Center) -> Vec<Site> {
    sites
        .iter()
        .map(|x| Site(x.0.iter().zip(c.doubled()).map(|(a, b)| 2 * a - b).collect()))
        .collect()
}

/// Builds the stage-(n+1) family for `centers`, absorbing the blocks of every
/// prior family (stages 1..=n, any order).
///
/// The result is independent of the order of `centers` and of the prior
/// families' center lists.
pub fn build_block_family(
    centers: &[Center],
    prior_families: &[BlockFamily],
    base_size: i64,
    pad: i64,
) -> Result<BlockFamily> {
    let stage = prior_families.iter().map(|f| f.stage).max().unwrap_or(0) + 1;
    build_with_stage(stage, centers, prior_families, base_size, pad)
}

fn build_with_stage(
    stage: usize,
    centers: &[Center],
    prior_families: &[BlockFamily],
    base_size: i64,
    pad: i64,
) -> Result<BlockFamily> {
    if base_size < 0 || pad < 0 {
        return Err(Error::InvalidParameter("block sizes must be ≥ 0".into()));
    }
    let mut centers: Vec<Center> = centers.to_vec();
    centers.sort();
    centers.dedup();
    let Some(k0) = centers.first().cloned() else {
        return Ok(BlockFamily {
            stage,
            length: base_size,
            pad,
            centers,
            template: Vec::new(),
            absorption_counts: vec![0; prior_families.len()],
            blocks: Vec::new(),
        });
    };
    let dim = k0.dim();
    if centers.iter().any(|c| c.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: centers.iter().map(Center::dim).find(|&d| d != dim).unwrap_or(dim),
        });
    }
    if centers.iter().any(|c| c.parity() != k0.parity()) {
        return Err(Error::MixedCenterParity);
    }

    let mut priors: Vec<&BlockFamily> = prior_families.iter().collect();
    priors.sort_by_key(|p| std::cmp::Reverse(p.stage));

    // Neighbourhood sets N(h) = Λ_{2l_m}(h) ∪ (T_m + h) for h ∈ H_r, as sets.
    let mut candidates: Vec<Vec<BTreeSet<Site>>> = Vec::with_capacity(priors.len());
    for fam in &priors {
        let mut hs: BTreeSet<Center> = BTreeSet::new();
        for c in &centers {
            for p in &fam.centers {
                let fwd: Vec<i64> = (0..dim)
                    .map(|k| k0.doubled()[k] - c.doubled()[k] + p.doubled()[k])
                    .collect();
                let back: Vec<i64> = (0..dim)
                    .map(|k| k0.doubled()[k] + c.doubled()[k] - p.doubled()[k])
                    .collect();
                hs.insert(Center(fwd));
                hs.insert(Center(back));
            }
        }
        let mut sets = Vec::with_capacity(hs.len());
        for h in hs {
            let mut n = l1_ball_set(&h, 2.0 * fam.length as f64);
            let tmpl = instantiate(&fam.template, &h).ok_or(Error::MixedCenterParity)?;
            n.extend(tmpl);
            sets.push(n);
        }
        candidates.push(sets);
    }

    let mut j: BTreeSet<Site> = l1_ball_set(&k0, base_size as f64);
    let mut counts = vec![0usize; priors.len()];
    let mut used: Vec<Vec<bool>> = candidates.iter().map(|c| vec![false; c.len()]).collect();
    loop {
        let mut changed = false;
        for (r, sets) in candidates.iter().enumerate() {
            let mut t = 0usize;
            loop {
                let mut grow = Vec::new();
                for (i, n) in sets.iter().enumerate() {
                    if !used[r][i] && n.iter().any(|s| j.contains(s)) {
                        grow.push(i);
                    }
                }
                if grow.is_empty() {
                    break;
                }
                t += 1;
                if t >= ABSORPTION_LIMIT {
                    return Err(Error::AbsorptionOverflow {
                        stage,
                        prior_stage: priors[r].stage,
                        limit: ABSORPTION_LIMIT,
                    });
                }
                for i in grow {
                    used[r][i] = true;
                    j.extend(sets[i].iter().cloned());
                }
                changed = true;
            }
            counts[r] = counts[r].max(t);
        }
        if !changed {
            break;
        }
    }

    let template = to_template(&j, &k0);
    let budget = base_size + PADDING_FACTOR * pad;
    let reached = j
        .iter()
        .map(|s| k0.l1_dist_doubled_site(s))
        .max()
        .unwrap_or(0);
    if reached > 2 * budget {
        return Err(Error::PaddingBudget {
            reached: reached as f64 / 2.0,
            budget: budget as f64,
        });
    }

    let mut blocks = Vec::with_capacity(centers.len());
    let mut owner: HashMap<Site, usize> = HashMap::new();
    for (i, c) in centers.iter().enumerate() {
        let set = instantiate(&template, c).ok_or(Error::MixedCenterParity)?;
        for s in &set {
            if let Some(&other) = owner.get(s) {
                return Err(Error::BlockOverlap {
                    a: centers[other].0.clone(),
                    b: c.0.clone(),
                });
            }
            owner.insert(s.clone(), i);
        }
        blocks.push(ResonantBlock {
            center: c.clone(),
            sites: LatticeRegion::from_set(dim, set),
            stage,
        });
    }

    let family = BlockFamily {
        stage,
        length: base_size,
        pad,
        centers,
        template,
        absorption_counts: counts,
        blocks,
    };
    if let Some((b, c)) = first_absorption_failure(&family, prior_families) {
        return Err(Error::InvalidParameter(format!(
            "block at {:?} cuts the prior block at {:?}",
            b, c
        )));
    }
    Ok(family)
}

/// A pair (new center, prior center) whose blocks meet without containment.
pub fn first_absorption_failure(
    family: &BlockFamily,
    prior_families: &[BlockFamily],
) -> Option<(Center, Center)> {
    for b in &family.blocks {
        for fam in prior_families {
            for pb in &fam.blocks {
                if pb.sites.intersects(&b.sites) && !pb.sites.is_subset_of(&b.sites) {
                    return Some((b.center.clone(), pb.center.clone()));
                }
            }
        }
    }
    None
}

/// Adds to Λ every block that meets it, until no block cuts the boundary.
/// The result stays within ℓ¹ distance 50·pad of Λ.
pub fn enclose_region(
    lambda: &LatticeRegion,
    families: &[BlockFamily],
    pad: i64,
) -> Result<LatticeRegion> {
    let mut set = lambda.to_set();
    let blocks: Vec<&ResonantBlock> = families.iter().flat_map(|f| &f.blocks).collect();
    let mut added = vec![false; blocks.len()];
    loop {
        let mut changed = false;
        for (i, b) in blocks.iter().enumerate() {
            if added[i] {
                continue;
            }
            if b.sites.iter().any(|s| set.contains(s)) {
                added[i] = true;
                if b.sites.iter().any(|s| !set.contains(s)) {
                    set.extend(b.sites.iter().cloned());
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let budget = PADDING_FACTOR * pad;
    for s in &set {
        if !lambda.contains(s) && lambda.dist_to(s).unwrap_or(i64::MAX) > budget {
            return Err(Error::EnclosureBudget {
                budget: budget as f64,
            });
        }
    }
    Ok(LatticeRegion::from_set(lambda.dim(), set))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorImage {
    pub image: Center,
    /// +1 for c + (c_J − c_I), −1 for c − (c_J − c_I)
    pub sign: i8,
    /// ‖2θ* + (c + c̃)·ω‖ for the chosen sign
    pub distance: f64,
    /// the same quantity for the rejected sign
    pub other_distance: f64,
    /// both signs met the bound
    pub ambiguous: bool,
}

/// The partner c̃ = c ± (c_J − c_I) whose reflected sum is resonant:
/// ‖2θ* + (c + c̃)·ω‖ ≤ 6δ^{1/2}. When both signs qualify, the closer one wins.
pub fn mirror_image(
    c: &Center,
    reference_pair: (&Center, &Center),
    theta_star: f64,
    omega: &[f64],
    delta: f64,
) -> Result<MirrorImage> {
    let (ci, cj) = reference_pair;
    let step = cj
        .offset_from(ci)
        .ok_or_else(|| Error::InvalidParameter("reference pair differs by a half-integer vector".into()))?;
    let plus = c.shift(&step);
    let minus = c.shift(&Site(step.0.iter().map(|x| -x).collect()));
    let dist = |img: &Center| torus_norm(2.0 * theta_star + c.dot(omega) + img.dot(omega));
    let (dp, dm) = (dist(&plus), dist(&minus));
    let bound = 6.0 * delta.sqrt();
    let (image, sign, distance, other_distance) = if dp <= dm {
        (plus, 1, dp, dm)
    } else {
        (minus, -1, dm, dp)
    };
    if distance > bound {
        return Err(Error::MirrorNotFound {
            bound,
            best: distance,
        });
    }
    Ok(MirrorImage {
        image,
        sign,
        distance,
        other_distance,
        ambiguous: other_distance <= bound,
    })
}
