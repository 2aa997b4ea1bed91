//! Seeded random instance generators for the law suites.
//!
//! Everything here is a pure function of the supplied RNG, and the suites
//! derive one RNG stream per trial from a master seed, so any run is
//! reproducible bit for bit from `(inputs, seed, trials)`.

use crate::bundle::{Bundle, FiberElement, MatrixBundle, TwistedLineBundle};
use crate::groupoid::{
    cyclic_group, direct_product, disjoint_union, pair_groupoid, ArrowSet, Groupoid,
};
use crate::linalg::CMatrix;
use crate::section::Section;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Largest per-unit block size the generated bundles may induce; keeps the
/// eigensolves in the suites at desk scale.
const BLOCK_CAP: usize = 64;

/// One RNG stream per `(seed, stream)` pair.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard normal via Box-Muller.
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng))
}

/// Uniformly random point on the unit circle.
pub fn unit_scalar(rng: &mut ChaCha8Rng) -> Complex64 {
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    Complex64::new(theta.cos(), theta.sin())
}

pub fn random_arrow(rng: &mut ChaCha8Rng, g: &Groupoid) -> usize {
    rng.gen_range(0..g.len())
}

pub fn random_unit(rng: &mut ChaCha8Rng, g: &Groupoid) -> usize {
    g.units()[rng.gen_range(0..g.units().len())]
}

pub fn random_arrow_with_source(rng: &mut ChaCha8Rng, g: &Groupoid, unit: usize) -> usize {
    let arrows = g.arrows_with_source(unit);
    arrows[rng.gen_range(0..arrows.len())]
}

pub fn random_arrow_with_range(rng: &mut ChaCha8Rng, g: &Groupoid, unit: usize) -> usize {
    let arrows = g.arrows_with_range(unit);
    arrows[rng.gen_range(0..arrows.len())]
}

/// Gaussian fiber value over the given arrow.
pub fn random_fiber(rng: &mut ChaCha8Rng, bundle: &Bundle, arrow: usize) -> FiberElement {
    let (r, c) = bundle.fiber_shape(arrow);
    let value = CMatrix::from_fn(r, c, |_, _| complex_gaussian(rng));
    FiberElement { arrow, value }
}

/// Fully supported section with independent gaussian entries scaled by
/// `scale`.
pub fn random_section(rng: &mut ChaCha8Rng, bundle: &Arc<Bundle>, scale: f64) -> Section {
    let g = bundle.groupoid();
    let values = (0..g.len())
        .map(|arrow| {
            let (r, c) = bundle.fiber_shape(arrow);
            CMatrix::from_fn(r, c, |_, _| complex_gaussian(rng).scale(scale))
        })
        .collect();
    Section::from_values(bundle, values).expect("generated values have the fiber shapes")
}

/// Random subset on which source and range are both injective.
pub fn random_slice(rng: &mut ChaCha8Rng, g: &Groupoid) -> ArrowSet {
    let mut order: Vec<usize> = (0..g.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut used_source = vec![false; g.len()];
    let mut used_range = vec![false; g.len()];
    let mut out = ArrowSet::new(g.len());
    for a in order {
        if rng.gen_bool(0.7) && !used_source[g.source(a)] && !used_range[g.range(a)] {
            used_source[g.source(a)] = true;
            used_range[g.range(a)] = true;
            out.insert(a);
        }
    }
    out
}

/// Random section supported on a random slice.
pub fn random_slice_section(rng: &mut ChaCha8Rng, bundle: &Arc<Bundle>, scale: f64) -> Section {
    let slice = random_slice(rng, bundle.groupoid());
    random_section(rng, bundle, scale).restrict(&slice)
}

/// Random subset of the unit arrows.
pub fn random_unit_subset(rng: &mut ChaCha8Rng, g: &Groupoid) -> ArrowSet {
    ArrowSet::from_iter(
        g.len(),
        g.units().iter().copied().filter(|_| rng.gen_bool(0.5)),
    )
}

/// Random arrow subset; used as a negligible-arrow input.
pub fn random_arrow_subset(rng: &mut ChaCha8Rng, g: &Groupoid, density: f64) -> ArrowSet {
    ArrowSet::from_iter(g.len(), (0..g.len()).filter(|_| rng.gen_bool(density)))
}

/// Random groupoid from a mixed family of constructions, at most
/// `max_arrows` arrows (requires `max_arrows >= 4`).
pub fn random_groupoid(rng: &mut ChaCha8Rng, max_arrows: usize) -> Arc<Groupoid> {
    assert!(max_arrows >= 4);
    loop {
        let g = match rng.gen_range(0..7) {
            0 => pair_groupoid(rng.gen_range(2..=7)),
            1 => cyclic_group(rng.gen_range(2..=12)),
            2 => {
                let m = rng.gen_range(2..=3);
                direct_product(&cyclic_group(m), &cyclic_group(m))
            }
            3 => disjoint_union(
                &pair_groupoid(rng.gen_range(2..=4)),
                &cyclic_group(rng.gen_range(2..=6)),
            ),
            4 => disjoint_union(
                &pair_groupoid(rng.gen_range(2..=4)),
                &pair_groupoid(rng.gen_range(2..=4)),
            ),
            5 => direct_product(
                &pair_groupoid(rng.gen_range(2..=3)),
                &cyclic_group(rng.gen_range(2..=5)),
            ),
            _ => {
                // Cyclic rotation action on its own underlying set.
                let m = rng.gen_range(2..=6);
                let cayley: Vec<Vec<usize>> = (0..m)
                    .map(|a| (0..m).map(|b| (a + b) % m).collect())
                    .collect();
                let action: Vec<Vec<usize>> = (0..m)
                    .map(|gel| (0..m).map(|x| (gel + x) % m).collect())
                    .collect();
                crate::groupoid::action_groupoid(&cayley, &action)
                    .expect("rotation action is a homomorphism")
            }
        };
        if g.len() <= max_arrows {
            return Arc::new(g);
        }
    }
}

/// Disjoint union of two or three small pieces; the shape the essential
/// seminorm suite wants, where saturation can sever whole components.
pub fn random_disjoint_groupoid(rng: &mut ChaCha8Rng) -> Arc<Groupoid> {
    let piece = |rng: &mut ChaCha8Rng| match rng.gen_range(0..2) {
        0 => pair_groupoid(rng.gen_range(2..=3)),
        _ => cyclic_group(rng.gen_range(2..=4)),
    };
    let mut g = disjoint_union(&piece(rng), &piece(rng));
    if rng.gen_bool(0.4) {
        g = disjoint_union(&g, &piece(rng));
    }
    Arc::new(g)
}

/// Coboundary cocycle `σ(a,b) = c(a)·c(b)·conj(c(ab))` from random unit
/// scalars `c` with `c = 1` on units; always normalized and multiplicative.
pub fn random_coboundary_cocycle(
    rng: &mut ChaCha8Rng,
    g: &Arc<Groupoid>,
) -> BTreeMap<(usize, usize), Complex64> {
    let c: Vec<Complex64> = (0..g.len())
        .map(|a| {
            if g.is_unit(a) {
                Complex64::new(1.0, 0.0)
            } else {
                unit_scalar(rng)
            }
        })
        .collect();
    let mut cocycle = BTreeMap::new();
    for (a, b, ab) in g.product_triples() {
        cocycle.insert((a, b), c[a] * c[b] * c[ab].conj());
    }
    cocycle
}

/// The product group `Z/m × Z/m` with the bicharacter cocycle
/// `σ((a1,a2),(b1,b2)) = ω^(a2·b1)`, a genuinely non-trivial twist.
pub fn bicharacter_twist(m: usize) -> (Arc<Groupoid>, BTreeMap<(usize, usize), Complex64>) {
    let g = Arc::new(direct_product(&cyclic_group(m), &cyclic_group(m)));
    let omega = std::f64::consts::TAU / m as f64;
    let mut cocycle = BTreeMap::new();
    for (a, b, _) in g.product_triples() {
        let (a2, b1) = (a % m, b / m);
        let angle = omega * ((a2 * b1) % m) as f64;
        cocycle.insert((a, b), Complex64::new(angle.cos(), angle.sin()));
    }
    (g, cocycle)
}

/// Random bundle over the groupoid: a matrix bundle with per-unit dimensions
/// capped so that no unit's column space exceeds the block budget, or a
/// coboundary-twisted line bundle.
pub fn random_bundle(rng: &mut ChaCha8Rng, g: &Arc<Groupoid>, max_dim: usize) -> Arc<Bundle> {
    if rng.gen_bool(0.5) {
        let worst_fan = g
            .units()
            .iter()
            .map(|&u| g.arrows_with_source(u).len())
            .max()
            .unwrap_or(1);
        let cap = (BLOCK_CAP / worst_fan).clamp(1, max_dim.max(1));
        let dims: Vec<(usize, usize)> = g
            .units()
            .iter()
            .map(|&u| (u, rng.gen_range(1..=cap)))
            .collect();
        Arc::new(Bundle::Matrix(
            MatrixBundle::new(g.clone(), &dims).expect("generated dims are valid"),
        ))
    } else {
        let cocycle = random_coboundary_cocycle(rng, g);
        Arc::new(Bundle::TwistedLine(
            TwistedLineBundle::new(g.clone(), cocycle).expect("coboundary cocycles are valid"),
        ))
    }
}

/// Random bundle morphism out of `source`, over a fold, a corner inclusion,
/// a connected-component inclusion, or an identity base map.
///
/// Matrix bundles get per-unit isometry conjugations into a target with equal
/// or one-larger fiber dimensions; line bundles get a free scalar cochain,
/// with the target cocycle adjusted so every fiber-map law holds on the nose.
/// The component variant is the one whose base map has a proper image, so the
/// image-restriction norm identity is exercised non-trivially.
pub fn random_fell_morphism(
    rng: &mut ChaCha8Rng,
    source: &Arc<crate::bundle::Bundle>,
) -> crate::morphism::FellMorphism {
    use crate::morphism::{FellMorphism, FiberMap};

    let base = source.groupoid().clone();
    let n = base.len();
    let identity_base = |base: &Arc<Groupoid>| {
        (
            base.clone(),
            ArrowSet::full(base.len()),
            (0..base.len()).map(|a| (a, a)).collect(),
        )
    };
    let (big, sub_arrows, phi_parent): (Arc<Groupoid>, ArrowSet, BTreeMap<usize, usize>) = match rng
        .gen_range(0..4)
    {
        0 => {
            let big = Arc::new(disjoint_union(&base, &base));
            let sub = ArrowSet::full(2 * n);
            let phi = (0..2 * n).map(|a| (a, a % n)).collect();
            (big, sub, phi)
        }
        1 => {
            let big = Arc::new(disjoint_union(&base, &pair_groupoid(2)));
            let sub = ArrowSet::from_iter(n + 4, 0..n);
            let phi = (0..n).map(|a| (a, a)).collect();
            (big, sub, phi)
        }
        2 => {
            // Inclusion of the connected component of a random unit; the
            // base map then lands on a proper subset when the groupoid
            // splits.
            let u = random_unit(rng, &base);
            let seed_arrow = ArrowSet::from_iter(n, [u]);
            let (_, component) =
                crate::groupoid::saturation_split(&base, &ArrowSet::full(n), &seed_arrow)
                    .expect("the full arrow set is a subgroupoid");
            if component.len() == n {
                identity_base(&base)
            } else {
                let (sub_g, to_parent) = crate::groupoid::extract_subgroupoid(&base, &component)
                    .expect("a saturated component is a subgroupoid");
                let big = Arc::new(sub_g);
                let sub = ArrowSet::full(big.len());
                let phi = to_parent.iter().enumerate().map(|(a, &p)| (a, p)).collect();
                (big, sub, phi)
            }
        }
        _ => identity_base(&base),
    };

    match source.as_ref() {
        Bundle::Matrix(mb) => {
            let mut dims = Vec::new();
            let mut isometries: BTreeMap<usize, CMatrix> = BTreeMap::new();
            for &u in big.units() {
                if sub_arrows.contains(u) {
                    let d = mb.dim(phi_parent[&u]);
                    let extra = rng.gen_range(0..=1);
                    dims.push((u, d + extra));
                    isometries.insert(u, random_isometry(rng, d + extra, d));
                } else {
                    dims.push((u, rng.gen_range(1..=2)));
                }
            }
            let target = Arc::new(Bundle::Matrix(
                MatrixBundle::new(big.clone(), &dims).expect("generated dims are valid"),
            ));
            let mut beta = BTreeMap::new();
            for arrow in sub_arrows.iter() {
                beta.insert(
                    arrow,
                    FiberMap::Pair {
                        left: isometries[&big.range(arrow)].clone(),
                        right: isometries[&big.source(arrow)].adjoint(),
                    },
                );
            }
            FellMorphism::new(source.clone(), target, sub_arrows, &phi_parent, &beta)
                .expect("isometry conjugations satisfy the fiber-map laws")
        }
        Bundle::TwistedLine(tl) => {
            let mut chi: BTreeMap<usize, Complex64> = BTreeMap::new();
            for arrow in sub_arrows.iter() {
                let z = if big.is_unit(arrow) {
                    Complex64::new(1.0, 0.0)
                } else {
                    unit_scalar(rng)
                };
                chi.insert(arrow, z);
            }
            // Junk component, when present, carries its own coboundary.
            let junk_cochain: Vec<Complex64> = (0..big.len())
                .map(|a| {
                    if sub_arrows.contains(a) || big.is_unit(a) {
                        Complex64::new(1.0, 0.0)
                    } else {
                        unit_scalar(rng)
                    }
                })
                .collect();
            let mut cocycle = BTreeMap::new();
            for (a, b, ab) in big.product_triples() {
                if sub_arrows.contains(a) && sub_arrows.contains(b) {
                    let pulled = tl.sigma(phi_parent[&a], phi_parent[&b]);
                    cocycle.insert((a, b), pulled * chi[&ab] * (chi[&a] * chi[&b]).conj());
                } else {
                    cocycle.insert(
                        (a, b),
                        junk_cochain[a] * junk_cochain[b] * junk_cochain[ab].conj(),
                    );
                }
            }
            let target = Arc::new(Bundle::TwistedLine(
                TwistedLineBundle::new(big.clone(), cocycle)
                    .expect("twisted cocycles built from cochains are valid"),
            ));
            let beta = sub_arrows
                .iter()
                .map(|a| (a, FiberMap::Scalar(chi[&a])))
                .collect();
            FellMorphism::new(source.clone(), target, sub_arrows, &phi_parent, &beta)
                .expect("scalar cochains satisfy the fiber-map laws")
        }
    }
}

/// A composable pair `(first, second)` with `second ∘ first` defined.
pub fn random_composable_fell_pair(
    rng: &mut ChaCha8Rng,
) -> (crate::morphism::FellMorphism, crate::morphism::FellMorphism) {
    let g = random_groupoid(rng, 12);
    let rho = random_bundle(rng, &g, 2);
    let first = random_fell_morphism(rng, &rho);
    let second = random_fell_morphism(rng, first.target());
    (first, second)
}

/// Haar-ish random unitary: polar factor of a gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let inv_root = m
        .gram()
        .psd_power(-0.5)
        .expect("gram matrix is positive semidefinite");
    m.matmul(&inv_root)
}

/// Random isometry: the first `cols` columns of a random unitary.
pub fn random_isometry(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    assert!(rows >= cols);
    let u = random_unitary(rng, rows);
    CMatrix::from_fn(rows, cols, |i, j| u[(i, j)])
}
