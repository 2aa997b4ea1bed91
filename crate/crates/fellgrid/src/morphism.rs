//! Morphisms between bundles and the induced maps on section algebras.
//!
//! A bundle morphism here is a pair: a star-bijective functor `φ` from a
//! subgroupoid of the target's base into the source's base, together with a
//! fiberwise linear *-homomorphism `β` from the pullback of the source bundle
//! along `φ` into the target bundle. The induced section-level map pulls a
//! section back along `φ` and then pushes the values through `β`, extending
//! by zero; it is a *-homomorphism for convolution and never increases the
//! reduced norm.
//!
//! Fiber maps are conjugations `v ↦ L·v·R` for matrix bundles and scalars for
//! line bundles, which is enough to generate every fiberwise *-homomorphism
//! these suites exercise; the laws are validated numerically on construction.

use crate::bundle::{Bundle, MatrixBundle, TwistedLineBundle};
use crate::groupoid::{extract_subgroupoid, ArrowSet, Groupoid};
use crate::linalg::CMatrix;
use crate::sample;
use crate::section::Section;
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorphismError {
    #[error("not a functor: {0}")]
    NotAFunctor(String),
    #[error("base map is not star-bijective: {0}")]
    NotStarBijective(String),
    #[error("morphisms are not composable: {0}")]
    NotComposable(String),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
}

fn same_groupoid(a: &Arc<Groupoid>, b: &Arc<Groupoid>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

fn same_bundle(a: &Arc<Bundle>, b: &Arc<Bundle>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// A functor between finite groupoids: an arrow map preserving composability,
/// products, and (consequently) units and inverses.
#[derive(Clone)]
pub struct GroupoidFunctor {
    dom: Arc<Groupoid>,
    cod: Arc<Groupoid>,
    map: Vec<usize>,
}

impl GroupoidFunctor {
    pub fn new(
        dom: Arc<Groupoid>,
        cod: Arc<Groupoid>,
        map: Vec<usize>,
    ) -> Result<Self, MorphismError> {
        if map.len() != dom.len() {
            return Err(MorphismError::NotAFunctor(format!(
                "map covers {} arrows, domain has {}",
                map.len(),
                dom.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&v| v >= cod.len()) {
            return Err(MorphismError::NotAFunctor(format!(
                "image arrow {bad} out of range"
            )));
        }
        for a in 0..dom.len() {
            for &b in dom.arrows_with_range(dom.source(a)) {
                let ab = dom.product(a, b).expect("composable by adjacency");
                match cod.product(map[a], map[b]) {
                    Some(image) if image == map[ab] => {}
                    Some(image) => {
                        return Err(MorphismError::NotAFunctor(format!(
                            "f({a})·f({b}) = {image} but f({a}·{b}) = {}",
                            map[ab]
                        )))
                    }
                    None => {
                        return Err(MorphismError::NotAFunctor(format!(
                            "f({a}) and f({b}) are not composable"
                        )))
                    }
                }
            }
        }
        // Units and inverses follow from the product law; assert anyway.
        for &u in dom.units() {
            if !cod.is_unit(map[u]) {
                return Err(MorphismError::NotAFunctor(format!(
                    "unit {u} maps to a non-unit"
                )));
            }
        }
        for a in 0..dom.len() {
            if map[dom.inverse(a)] != cod.inverse(map[a]) {
                return Err(MorphismError::NotAFunctor(format!(
                    "inverse of {a} is not preserved"
                )));
            }
        }
        Ok(GroupoidFunctor { dom, cod, map })
    }

    pub fn identity(g: &Arc<Groupoid>) -> Self {
        GroupoidFunctor {
            dom: g.clone(),
            cod: g.clone(),
            map: (0..g.len()).collect(),
        }
    }

    pub fn dom(&self) -> &Arc<Groupoid> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<Groupoid> {
        &self.cod
    }

    pub fn apply(&self, arrow: usize) -> usize {
        self.map[arrow]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    /// Arrow image in the codomain.
    pub fn image(&self) -> ArrowSet {
        ArrowSet::from_iter(self.cod.len(), self.map.iter().copied())
    }

    /// Unique-lift property: for every domain unit `x` and codomain arrow
    /// starting at its image, exactly one arrow starting at `x` maps there.
    pub fn is_star_bijective(&self) -> bool {
        for &x in self.dom.units() {
            for &target in self.cod.arrows_with_source(self.map[x]) {
                let lifts = self
                    .dom
                    .arrows_with_source(x)
                    .iter()
                    .filter(|&&gamma| self.map[gamma] == target)
                    .count();
                if lifts != 1 {
                    return false;
                }
            }
        }
        true
    }
}

impl std::fmt::Debug for GroupoidFunctor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "GroupoidFunctor({:?} -> {:?})", self.dom, self.cod)
    }
}

/// Star-bijectivity check for a validated functor.
pub fn check_star_bijective(f: &GroupoidFunctor) -> bool {
    f.is_star_bijective()
}

/// Pullback of a bundle along a star-bijective functor into its base: fiber
/// shapes (and twists) are read off through the arrow map.
pub fn pullback_bundle(
    f: &GroupoidFunctor,
    rho: &Arc<Bundle>,
) -> Result<Arc<Bundle>, MorphismError> {
    if !same_groupoid(f.cod(), rho.groupoid()) {
        return Err(MorphismError::InvalidMorphism(
            "functor codomain is not the bundle's base".into(),
        ));
    }
    if !f.is_star_bijective() {
        return Err(MorphismError::NotStarBijective(
            "pullback requires unique lifts".into(),
        ));
    }
    let pulled = match rho.as_ref() {
        Bundle::Matrix(mb) => {
            let dims: Vec<(usize, usize)> = f
                .dom()
                .units()
                .iter()
                .map(|&u| (u, mb.dim(f.apply(u))))
                .collect();
            Bundle::Matrix(
                MatrixBundle::new(f.dom().clone(), &dims)
                    .expect("pulled-back dimensions are positive"),
            )
        }
        Bundle::TwistedLine(tl) => {
            let mut cocycle = BTreeMap::new();
            for (a, b, _) in f.dom().product_triples() {
                cocycle.insert((a, b), tl.sigma(f.apply(a), f.apply(b)));
            }
            Bundle::TwistedLine(TwistedLineBundle::new_unchecked(f.dom().clone(), cocycle))
        }
    };
    Ok(Arc::new(pulled))
}

/// Pullback of a section: the value over `γ` is the value of `a` over
/// `f(γ)`. A *-homomorphism for convolution whose reduced norm equals that of
/// `a` restricted to the image of `f`.
pub fn pullback_section(
    f: &GroupoidFunctor,
    rho: &Arc<Bundle>,
    a: &Section,
) -> Result<Section, MorphismError> {
    if !same_bundle(rho, a.bundle()) {
        return Err(MorphismError::InvalidMorphism(
            "section is not over the given bundle".into(),
        ));
    }
    let pulled = pullback_bundle(f, rho)?;
    let values = (0..f.dom().len())
        .map(|gamma| a.value(f.apply(gamma)).clone())
        .collect();
    Ok(Section::from_values(&pulled, values).expect("pulled values match the pulled shapes"))
}

/// A single fiber map: conjugation by a matrix pair, or a scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberMap {
    Pair { left: CMatrix, right: CMatrix },
    Scalar(Complex64),
}

impl FiberMap {
    pub fn apply(&self, v: &CMatrix) -> CMatrix {
        match self {
            FiberMap::Pair { left, right } => left.matmul(v).matmul(right),
            FiberMap::Scalar(z) => v.scale(*z),
        }
    }

    fn compose_after(&self, inner: &FiberMap) -> Result<FiberMap, MorphismError> {
        match (self, inner) {
            (
                FiberMap::Pair {
                    left: l2,
                    right: r2,
                },
                FiberMap::Pair {
                    left: l1,
                    right: r1,
                },
            ) => Ok(FiberMap::Pair {
                left: l2.matmul(l1),
                right: r1.matmul(r2),
            }),
            (FiberMap::Scalar(z2), FiberMap::Scalar(z1)) => Ok(FiberMap::Scalar(z2 * z1)),
            _ => Err(MorphismError::NotComposable(
                "fiber map kinds differ".into(),
            )),
        }
    }
}

/// A morphism from the bundle `source` (over `Γ`) to `target` (over `Γ'`):
/// a star-bijective functor `φ` from a subgroupoid of `Γ'` to `Γ` plus fiber
/// maps from the pullback of `source` along `φ` into `target`.
#[derive(Clone)]
pub struct FellMorphism {
    source: Arc<Bundle>,
    target: Arc<Bundle>,
    sub_arrows: ArrowSet,
    sub_to_parent: Vec<usize>,
    parent_to_sub: Vec<usize>, // usize::MAX where undefined
    phi: GroupoidFunctor,      // sub -> source base
    pullback: Arc<Bundle>,     // source pulled back over sub
    beta: Vec<FiberMap>,       // indexed by sub arrows
}

impl std::fmt::Debug for FellMorphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "FellMorphism({:?} -> {:?} via {} arrows)",
            self.source,
            self.target,
            self.sub_to_parent.len()
        )
    }
}

impl FellMorphism {
    /// Builds and fully validates a morphism. `phi_parent` maps arrows of the
    /// target's base (inside `sub_arrows`) to arrows of the source's base;
    /// `beta_parent` gives one fiber map per arrow of `sub_arrows`.
    pub fn new(
        source: Arc<Bundle>,
        target: Arc<Bundle>,
        sub_arrows: ArrowSet,
        phi_parent: &BTreeMap<usize, usize>,
        beta_parent: &BTreeMap<usize, FiberMap>,
    ) -> Result<Self, MorphismError> {
        let parent = target.groupoid();
        let (sub, sub_to_parent) = extract_subgroupoid(parent, &sub_arrows)
            .map_err(|e| MorphismError::InvalidMorphism(e.to_string()))?;
        let sub = Arc::new(sub);
        let mut parent_to_sub = vec![usize::MAX; parent.len()];
        for (new, &old) in sub_to_parent.iter().enumerate() {
            parent_to_sub[old] = new;
        }
        let mut map = Vec::with_capacity(sub.len());
        for &old in &sub_to_parent {
            match phi_parent.get(&old) {
                Some(&image) => map.push(image),
                None => {
                    return Err(MorphismError::InvalidMorphism(format!(
                        "base map missing arrow {old}"
                    )))
                }
            }
        }
        let phi = GroupoidFunctor::new(sub.clone(), source.groupoid().clone(), map)?;
        if !phi.is_star_bijective() {
            return Err(MorphismError::NotStarBijective(
                "the base map must lift arrows uniquely".into(),
            ));
        }
        let pullback = pullback_bundle(&phi, &source)?;
        let mut beta = Vec::with_capacity(sub.len());
        for &old in &sub_to_parent {
            match beta_parent.get(&old) {
                Some(m) => beta.push(m.clone()),
                None => {
                    return Err(MorphismError::InvalidMorphism(format!(
                        "fiber map missing arrow {old}"
                    )))
                }
            }
        }
        let m = FellMorphism {
            source,
            target,
            sub_arrows,
            sub_to_parent,
            parent_to_sub,
            phi,
            pullback,
            beta,
        };
        m.validate_fiber_maps()?;
        Ok(m)
    }

    /// Identity morphism on a bundle.
    pub fn identity(bundle: &Arc<Bundle>) -> Self {
        let g = bundle.groupoid();
        let sub_arrows = ArrowSet::full(g.len());
        let mut phi_parent = BTreeMap::new();
        let mut beta_parent = BTreeMap::new();
        for arrow in 0..g.len() {
            phi_parent.insert(arrow, arrow);
            let map = match bundle.as_ref() {
                Bundle::Matrix(_) => {
                    let (r, c) = bundle.fiber_shape(arrow);
                    FiberMap::Pair {
                        left: CMatrix::identity(r),
                        right: CMatrix::identity(c),
                    }
                }
                Bundle::TwistedLine(_) => FiberMap::Scalar(Complex64::new(1.0, 0.0)),
            };
            beta_parent.insert(arrow, map);
        }
        FellMorphism::new(
            bundle.clone(),
            bundle.clone(),
            sub_arrows,
            &phi_parent,
            &beta_parent,
        )
        .expect("the identity morphism is valid")
    }

    pub fn source(&self) -> &Arc<Bundle> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Bundle> {
        &self.target
    }

    pub fn phi(&self) -> &GroupoidFunctor {
        &self.phi
    }

    /// The pullback of the source bundle over the base-map domain.
    pub fn pullback(&self) -> &Arc<Bundle> {
        &self.pullback
    }

    pub fn sub_arrows(&self) -> &ArrowSet {
        &self.sub_arrows
    }

    /// Base map indexed by parent arrows, for interchange and comparison.
    pub fn phi_by_parent(&self) -> BTreeMap<usize, usize> {
        self.sub_to_parent
            .iter()
            .enumerate()
            .map(|(sub_id, &parent)| (parent, self.phi.apply(sub_id)))
            .collect()
    }

    pub fn beta_by_parent(&self) -> BTreeMap<usize, FiberMap> {
        self.sub_to_parent
            .iter()
            .enumerate()
            .map(|(sub_id, &parent)| (parent, self.beta[sub_id].clone()))
            .collect()
    }

    /// Numerical validation of the fiber-map laws on deterministic probes:
    /// shape conformance, star and product compatibility, and contractivity.
    fn validate_fiber_maps(&self) -> Result<(), MorphismError> {
        let sub = self.phi.dom().clone();
        for sub_id in 0..sub.len() {
            let parent = self.sub_to_parent[sub_id];
            let (pr, pc) = self.pullback.fiber_shape(sub_id);
            let (tr, tc) = self.target.fiber_shape(parent);
            match (&self.beta[sub_id], self.target.as_ref()) {
                (FiberMap::Pair { left, right }, Bundle::Matrix(_)) => {
                    if left.shape() != (tr, pr) || right.shape() != (pc, tc) {
                        return Err(MorphismError::InvalidMorphism(format!(
                            "fiber map at arrow {parent} has mismatched shapes"
                        )));
                    }
                }
                (FiberMap::Scalar(_), Bundle::TwistedLine(_)) => {
                    if (pr, pc) != (1, 1) || (tr, tc) != (1, 1) {
                        return Err(MorphismError::InvalidMorphism(
                            "scalar fiber maps need line bundles".into(),
                        ));
                    }
                }
                _ => {
                    return Err(MorphismError::InvalidMorphism(
                        "fiber map kind does not match the bundle kind".into(),
                    ));
                }
            }
        }

        let mut rng = sample::trial_rng(0xF311, 0);
        let tol = 1e-9;
        // Star compatibility and contractivity per arrow.
        for sub_id in 0..sub.len() {
            let parent = self.sub_to_parent[sub_id];
            for _ in 0..2 {
                let v = sample::random_fiber(&mut rng, &self.pullback, sub_id).value;
                let image = self.beta[sub_id].apply(&v);
                let scale = 1.0 + v.max_abs();
                if image.operator_norm() > v.operator_norm() + tol * scale {
                    return Err(MorphismError::InvalidMorphism(format!(
                        "fiber map at arrow {parent} is not contractive"
                    )));
                }
                let inv_sub = sub.inverse(sub_id);
                let lhs = self.beta[inv_sub].apply(&self.pullback.star_value(sub_id, &v));
                let rhs = self.target.star_value(parent, &image);
                if lhs.max_abs_diff(&rhs) > tol * scale {
                    return Err(MorphismError::InvalidMorphism(format!(
                        "fiber map at arrow {parent} does not respect the involution"
                    )));
                }
            }
        }
        // Product compatibility per composable pair.
        for (alpha, beta_arrow, prod) in sub.product_triples() {
            for _ in 0..2 {
                let u = sample::random_fiber(&mut rng, &self.pullback, alpha).value;
                let v = sample::random_fiber(&mut rng, &self.pullback, beta_arrow).value;
                let lhs =
                    self.beta[prod].apply(&self.pullback.mul_values(alpha, &u, beta_arrow, &v));
                let rhs = self.target.mul_values(
                    self.sub_to_parent[alpha],
                    &self.beta[alpha].apply(&u),
                    self.sub_to_parent[beta_arrow],
                    &self.beta[beta_arrow].apply(&v),
                );
                let scale = (1.0 + u.max_abs()) * (1.0 + v.max_abs());
                if lhs.max_abs_diff(&rhs) > tol * scale {
                    return Err(MorphismError::InvalidMorphism(format!(
                        "fiber maps at ({},{}) do not respect the product",
                        self.sub_to_parent[alpha], self.sub_to_parent[beta_arrow]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Pushes a section of the pullback bundle through the fiber maps,
    /// extending by zero outside the base-map domain.
    pub fn apply_fibre_morphism(&self, a: &Section) -> Result<Section, MorphismError> {
        if !same_bundle(a.bundle(), &self.pullback) {
            return Err(MorphismError::InvalidMorphism(
                "section is not over the morphism's pullback bundle".into(),
            ));
        }
        let mut out = Section::zero(&self.target);
        for sub_id in 0..self.sub_to_parent.len() {
            let parent = self.sub_to_parent[sub_id];
            out.set_value(parent, self.beta[sub_id].apply(a.value(sub_id)))
                .expect("fiber maps produce target shapes");
        }
        Ok(out)
    }

    /// Full section-level action: pull back along the base map, then apply
    /// the fiber maps. A convolution *-homomorphism, contractive in the
    /// reduced norm.
    pub fn algebraize(&self, a: &Section) -> Result<Section, MorphismError> {
        if !same_bundle(a.bundle(), &self.source) {
            return Err(MorphismError::InvalidMorphism(
                "section is not over the morphism's source bundle".into(),
            ));
        }
        let mut out = Section::zero(&self.target);
        for sub_id in 0..self.sub_to_parent.len() {
            let parent = self.sub_to_parent[sub_id];
            let pulled = a.value(self.phi.apply(sub_id));
            out.set_value(parent, self.beta[sub_id].apply(pulled))
                .expect("fiber maps produce target shapes");
        }
        Ok(out)
    }
}

/// Composition `second ∘ first`: the base maps compose through the preimage
/// subgroupoid and the fiber maps compose pointwise.
pub fn compose_fell(
    second: &FellMorphism,
    first: &FellMorphism,
) -> Result<FellMorphism, MorphismError> {
    if !same_bundle(second.source(), first.target()) {
        return Err(MorphismError::NotComposable(
            "inner target and outer source bundles differ".into(),
        ));
    }
    let outer_parent = second.target.groupoid();
    // Arrows of the outer base whose image under the outer base map lands in
    // the inner base-map domain.
    let mut arrows = ArrowSet::new(outer_parent.len());
    for (sub_id, &parent) in second.sub_to_parent.iter().enumerate() {
        let mid = second.phi.apply(sub_id); // arrow of first.target's base
        if first.sub_arrows.contains(mid) {
            arrows.insert(parent);
        }
    }
    if arrows.is_empty() {
        return Err(MorphismError::NotComposable(
            "the composite base map has empty domain".into(),
        ));
    }
    let mut phi_parent = BTreeMap::new();
    let mut beta_parent = BTreeMap::new();
    for parent in arrows.iter() {
        let sub2 = second.parent_to_sub[parent];
        let mid = second.phi.apply(sub2);
        let sub1 = first.parent_to_sub[mid];
        phi_parent.insert(parent, first.phi.apply(sub1));
        beta_parent.insert(parent, second.beta[sub2].compose_after(&first.beta[sub1])?);
    }
    FellMorphism::new(
        first.source.clone(),
        second.target.clone(),
        arrows,
        &phi_parent,
        &beta_parent,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::{disjoint_union, pair_groupoid};
    use crate::sample;

    fn line_bundle(g: Arc<Groupoid>) -> Arc<Bundle> {
        Arc::new(Bundle::TwistedLine(TwistedLineBundle::trivial(g)))
    }

    #[test]
    fn identity_functor_is_star_bijective() {
        let g = Arc::new(pair_groupoid(3));
        let f = GroupoidFunctor::identity(&g);
        assert!(check_star_bijective(&f));
    }

    #[test]
    fn inclusion_is_not_star_bijective() {
        let small: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let big: Arc<Groupoid> = Arc::new(pair_groupoid(3));
        // (i,j) in pair(2) -> (i,j) in pair(3).
        let map: Vec<usize> = (0..4).map(|a| (a / 2) * 3 + (a % 2)).collect();
        let f = GroupoidFunctor::new(small, big, map).unwrap();
        assert!(!check_star_bijective(&f));
    }

    #[test]
    fn fold_map_is_star_bijective() {
        let base: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let doubled: Arc<Groupoid> = Arc::new(disjoint_union(&base, &base));
        let map: Vec<usize> = (0..8).map(|a| a % 4).collect();
        let f = GroupoidFunctor::new(doubled, base, map).unwrap();
        assert!(check_star_bijective(&f));
    }

    #[test]
    fn non_functor_is_rejected() {
        let g: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        // Swap a unit with a non-unit arbitrarily: breaks the product law.
        let map = vec![1, 0, 2, 3];
        assert!(matches!(
            GroupoidFunctor::new(g.clone(), g, map),
            Err(MorphismError::NotAFunctor(_))
        ));
    }

    #[test]
    fn pullback_bundle_shapes() {
        let base: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let rho = Arc::new(Bundle::Matrix(
            MatrixBundle::new(base.clone(), &[(0, 2), (3, 3)]).unwrap(),
        ));
        // Identity pullback leaves shapes alone.
        let f = GroupoidFunctor::identity(&base);
        let pulled = pullback_bundle(&f, &rho).unwrap();
        for arrow in 0..4 {
            assert_eq!(pulled.fiber_shape(arrow), rho.fiber_shape(arrow));
        }
        // Fold pullback copies the shapes onto both summands.
        let doubled: Arc<Groupoid> = Arc::new(disjoint_union(&base, &base));
        let fold = GroupoidFunctor::new(doubled, base, (0..8).map(|a| a % 4).collect()).unwrap();
        let pulled = pullback_bundle(&fold, &rho).unwrap();
        for arrow in 0..8 {
            assert_eq!(pulled.fiber_shape(arrow), rho.fiber_shape(arrow % 4));
        }
        let report = crate::bundle::validate_fell(&pulled, 60, 3);
        assert!(report.pass, "{}", report.to_json());
    }

    #[test]
    fn pullback_rejects_non_star_bijective() {
        let small: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let big: Arc<Groupoid> = Arc::new(pair_groupoid(3));
        let map: Vec<usize> = (0..4).map(|a| (a / 2) * 3 + (a % 2)).collect();
        let f = GroupoidFunctor::new(small, big.clone(), map).unwrap();
        let rho = line_bundle(big);
        assert!(matches!(
            pullback_bundle(&f, &rho),
            Err(MorphismError::NotStarBijective(_))
        ));
    }

    #[test]
    fn pullback_section_is_a_star_homomorphism() {
        let base: Arc<Groupoid> = Arc::new(pair_groupoid(3));
        let rho = Arc::new(Bundle::Matrix(
            MatrixBundle::new(base.clone(), &[(0, 1), (4, 2), (8, 2)]).unwrap(),
        ));
        let doubled: Arc<Groupoid> = Arc::new(disjoint_union(&base, &base));
        let fold =
            GroupoidFunctor::new(doubled, base.clone(), (0..18).map(|a| a % 9).collect()).unwrap();
        let mut rng = sample::trial_rng(31, 0);
        for _ in 0..5 {
            let a = sample::random_section(&mut rng, &rho, 1.0);
            let b = sample::random_section(&mut rng, &rho, 1.0);
            let pa = pullback_section(&fold, &rho, &a).unwrap();
            let pb = pullback_section(&fold, &rho, &b).unwrap();
            // Convolution and star commute with the pullback.
            let lhs = pullback_section(&fold, &rho, &a.convolve(&b).unwrap()).unwrap();
            let rhs = pa.convolve(&pb).unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-10);
            assert_eq!(
                pullback_section(&fold, &rho, &a.star())
                    .unwrap()
                    .max_abs_diff(&pa.star()),
                0.0
            );
            // Surjective base map: the reduced norm is preserved.
            assert!((pa.norm_b() - a.norm_b()).abs() < 1e-9 * (1.0 + a.norm_b()));
        }
        // Identity pullback returns the section itself.
        let a = sample::random_section(&mut rng, &rho, 1.0);
        let f = GroupoidFunctor::identity(&base);
        assert_eq!(
            pullback_section(&f, &rho, &a).unwrap().max_abs_diff(&a),
            0.0
        );
    }

    #[test]
    fn pullback_norm_matches_image_restriction() {
        let mut rng = sample::trial_rng(37, 0);
        for trial in 0..8 {
            let (m, _) = sample::random_composable_fell_pair(&mut rng);
            let a = sample::random_section(&mut rng, m.source(), 1.0);
            let pulled = pullback_section(m.phi(), m.source(), &a).unwrap();
            let image = m.phi().image();
            let restricted = a.restrict(&image);
            assert!(
                (pulled.norm_b() - restricted.norm_b()).abs() <= 1e-9 + 1e-7 * restricted.norm_b(),
                "trial {trial}"
            );
        }
    }

    #[test]
    fn identity_morphism_acts_trivially() {
        let g: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let rho = Arc::new(Bundle::Matrix(
            MatrixBundle::new(g, &[(0, 2), (3, 1)]).unwrap(),
        ));
        let id = FellMorphism::identity(&rho);
        let mut rng = sample::trial_rng(5, 0);
        let a = sample::random_section(&mut rng, &rho, 1.0);
        assert_eq!(id.algebraize(&a).unwrap().max_abs_diff(&a), 0.0);
    }

    #[test]
    fn corner_inclusion_zero_pads_and_preserves_norm() {
        let base: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let rho = Arc::new(Bundle::Matrix(
            MatrixBundle::new(base.clone(), &[(0, 2), (3, 2)]).unwrap(),
        ));
        let big: Arc<Groupoid> = Arc::new(disjoint_union(&base, &pair_groupoid(2)));
        let target = Arc::new(Bundle::Matrix(
            MatrixBundle::new(big.clone(), &[(0, 2), (3, 2), (4, 1), (7, 3)]).unwrap(),
        ));
        let sub = ArrowSet::from_iter(8, 0..4);
        let mut phi_parent = BTreeMap::new();
        let mut beta_parent = BTreeMap::new();
        for arrow in 0..4 {
            phi_parent.insert(arrow, arrow);
            beta_parent.insert(
                arrow,
                FiberMap::Pair {
                    left: CMatrix::identity(2),
                    right: CMatrix::identity(2),
                },
            );
        }
        let m = FellMorphism::new(rho.clone(), target, sub, &phi_parent, &beta_parent).unwrap();
        let mut rng = sample::trial_rng(6, 0);
        let a = sample::random_section(&mut rng, &rho, 1.0);
        let image = m.algebraize(&a).unwrap();
        for arrow in 4..8 {
            assert!(image.value(arrow).is_zero());
        }
        assert!((image.norm_b() - a.norm_b()).abs() < 1e-9 * (1.0 + a.norm_b()));
    }

    #[test]
    fn character_twist_preserves_norm() {
        let g: Arc<Groupoid> = Arc::new(pair_groupoid(3));
        let rho = line_bundle(g.clone());
        // chi(gamma) = c(range)·conj(c(source)) for unit scalars c: a character
        // compatible with the trivial cocycle.
        let mut rng = sample::trial_rng(7, 0);
        let c: Vec<Complex64> = g
            .units()
            .iter()
            .map(|_| sample::unit_scalar(&mut rng))
            .collect();
        let unit_index = |u: usize| g.units().iter().position(|&x| x == u).unwrap();
        let sub = ArrowSet::full(9);
        let mut phi_parent = BTreeMap::new();
        let mut beta_parent = BTreeMap::new();
        for arrow in 0..9 {
            phi_parent.insert(arrow, arrow);
            let chi = c[unit_index(g.range(arrow))] * c[unit_index(g.source(arrow))].conj();
            beta_parent.insert(arrow, FiberMap::Scalar(chi));
        }
        let m =
            FellMorphism::new(rho.clone(), rho.clone(), sub, &phi_parent, &beta_parent).unwrap();
        let a = sample::random_section(&mut rng, &rho, 1.0);
        let image = m.algebraize(&a).unwrap();
        assert!((image.norm_b() - a.norm_b()).abs() < 1e-9 * (1.0 + a.norm_b()));
    }

    #[test]
    fn zero_fiber_maps_are_a_valid_morphism() {
        let g: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let rho = line_bundle(g.clone());
        let sub = ArrowSet::full(4);
        let mut phi_parent = BTreeMap::new();
        let mut beta_parent = BTreeMap::new();
        for arrow in 0..4 {
            phi_parent.insert(arrow, arrow);
            beta_parent.insert(arrow, FiberMap::Scalar(Complex64::new(0.0, 0.0)));
        }
        let m =
            FellMorphism::new(rho.clone(), rho.clone(), sub, &phi_parent, &beta_parent).unwrap();
        let mut rng = sample::trial_rng(8, 0);
        let a = sample::random_section(&mut rng, &rho, 1.0);
        assert!(m.algebraize(&a).unwrap().is_zero());
    }

    #[test]
    fn invalid_fiber_maps_are_rejected() {
        let g: Arc<Groupoid> = Arc::new(pair_groupoid(2));
        let rho = line_bundle(g.clone());
        let sub = ArrowSet::full(4);
        let mut phi_parent = BTreeMap::new();
        let mut beta_parent = BTreeMap::new();
        for arrow in 0..4 {
            phi_parent.insert(arrow, arrow);
            // Non-unit modulus on a single non-unit arrow breaks the product
            // law against its inverse.
            let z = if arrow == 1 {
                Complex64::new(0.5, 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            };
            beta_parent.insert(arrow, FiberMap::Scalar(z));
        }
        assert!(matches!(
            FellMorphism::new(rho.clone(), rho, sub, &phi_parent, &beta_parent),
            Err(MorphismError::InvalidMorphism(_))
        ));
    }

    #[test]
    fn composition_laws() {
        let mut rng = sample::trial_rng(40, 0);
        for trial in 0..6 {
            let (m1, m2) = sample::random_composable_fell_pair(&mut rng);
            let composed = compose_fell(&m2, &m1).unwrap();
            // The composite base map is the pointwise composition.
            for (parent, image) in composed.phi_by_parent() {
                let sub2 = m2.parent_to_sub[parent];
                let mid = m2.phi.apply(sub2);
                let sub1 = m1.parent_to_sub[mid];
                assert_eq!(image, m1.phi.apply(sub1));
            }
            // Functor law on sections.
            for _ in 0..10 {
                let a = sample::random_section(&mut rng, m1.source(), 1.0);
                let lhs = composed.algebraize(&a).unwrap();
                let rhs = m2.algebraize(&m1.algebraize(&a).unwrap()).unwrap();
                assert!(lhs.max_abs_diff(&rhs) < 1e-10, "trial {trial}");
            }
            // Unit laws.
            let id_src = FellMorphism::identity(m1.source());
            let id_tgt = FellMorphism::identity(m1.target());
            let right = compose_fell(&m1, &id_src).unwrap();
            let left = compose_fell(&id_tgt, &m1).unwrap();
            assert_eq!(right.phi_by_parent(), m1.phi_by_parent());
            assert_eq!(left.phi_by_parent(), m1.phi_by_parent());
            let a = sample::random_section(&mut rng, m1.source(), 1.0);
            assert!(
                right
                    .algebraize(&a)
                    .unwrap()
                    .max_abs_diff(&m1.algebraize(&a).unwrap())
                    < 1e-12
            );
            assert!(
                left.algebraize(&a)
                    .unwrap()
                    .max_abs_diff(&m1.algebraize(&a).unwrap())
                    < 1e-12
            );
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = sample::trial_rng(41, 0);
        for trial in 0..4 {
            let (m1, m2) = sample::random_composable_fell_pair(&mut rng);
            let m3 = sample::random_fell_morphism(&mut rng, m2.target());
            let left = compose_fell(&m3, &compose_fell(&m2, &m1).unwrap()).unwrap();
            let right = compose_fell(&compose_fell(&m3, &m2).unwrap(), &m1).unwrap();
            assert_eq!(left.phi_by_parent(), right.phi_by_parent());
            for _ in 0..5 {
                let a = sample::random_section(&mut rng, m1.source(), 1.0);
                let la = left.algebraize(&a).unwrap();
                let ra = right.algebraize(&a).unwrap();
                assert!(la.max_abs_diff(&ra) < 1e-10, "trial {trial}");
            }
        }
    }

    #[test]
    fn algebraize_is_a_contractive_homomorphism() {
        let mut rng = sample::trial_rng(42, 0);
        for trial in 0..8 {
            let m = {
                let g = sample::random_groupoid(&mut rng, 16);
                let rho = sample::random_bundle(&mut rng, &g, 2);
                sample::random_fell_morphism(&mut rng, &rho)
            };
            let a = sample::random_section(&mut rng, m.source(), 1.0);
            let b = sample::random_section(&mut rng, m.source(), 1.0);
            let lhs = m.algebraize(&a.convolve(&b).unwrap()).unwrap();
            let rhs = m
                .algebraize(&a)
                .unwrap()
                .convolve(&m.algebraize(&b).unwrap())
                .unwrap();
            assert!(lhs.max_abs_diff(&rhs) < 1e-9, "trial {trial}");
            let star_gap = m
                .algebraize(&a.star())
                .unwrap()
                .max_abs_diff(&m.algebraize(&a).unwrap().star());
            assert!(star_gap < 1e-10, "trial {trial}");
            let na = a.norm_b();
            assert!(
                m.algebraize(&a).unwrap().norm_b() <= na + 1e-9 * (1.0 + na),
                "trial {trial}"
            );
        }
    }
}
