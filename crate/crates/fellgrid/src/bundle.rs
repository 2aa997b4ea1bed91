//! Fiber bundles over a finite groupoid with a multiplicative, involutive
//! fiber structure and a C*-compatible norm.
//!
//! Two realizations cover everything the suites need:
//!
//! - [`MatrixBundle`]: the fiber over an arrow `γ` is the space of complex
//!   `dim(range γ) × dim(source γ)` matrices, with matrix product and
//!   conjugate transpose. Unit fibers carry identity matrices, so the bundle
//!   is unit-full by construction.
//! - [`TwistedLineBundle`]: every fiber is one-dimensional and the product of
//!   values over `(α, β)` picks up a unit-modulus factor `σ(α, β)` from a
//!   normalized multiplicative 2-cocycle.
//!
//! The line-bundle involution over `γ` is `v ↦ conj(v) · conj(σ(γ, γ⁻¹))`.
//! The compensation factor is forced: it is exactly what makes `a·a*` land as
//! a nonnegative real scalar on the unit fiber, so the star-semigroupoid laws
//! hold with a twisted product.

use crate::groupoid::Groupoid;
use crate::linalg::{loewner_leq, CMatrix, Tolerance};
use crate::report::{CheckRecord, Report};
use crate::sample;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("arrows {left} and {right} are not composable")]
    NotComposable { left: usize, right: usize },
    #[error("fiber value over arrow {arrow} has shape {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    FiberShape {
        arrow: usize,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("invalid bundle data: {0}")]
    Invalid(String),
}

/// Matrix bundle: a positive dimension per unit, rectangular matrix fibers.
#[derive(Clone, PartialEq)]
pub struct MatrixBundle {
    groupoid: Arc<Groupoid>,
    dims: Vec<usize>, // indexed by arrow id; meaningful at unit ids
}

impl MatrixBundle {
    /// `dims` assigns a dimension to every unit, each at least 1.
    pub fn new(groupoid: Arc<Groupoid>, dims: &[(usize, usize)]) -> Result<Self, BundleError> {
        let mut table = vec![0usize; groupoid.len()];
        for &(unit, dim) in dims {
            if unit >= groupoid.len() || !groupoid.is_unit(unit) {
                return Err(BundleError::Invalid(format!("{unit} is not a unit id")));
            }
            if dim == 0 {
                return Err(BundleError::Invalid(format!(
                    "unit {unit} assigned dimension 0"
                )));
            }
            if table[unit] != 0 {
                return Err(BundleError::Invalid(format!("unit {unit} assigned twice")));
            }
            table[unit] = dim;
        }
        for &u in groupoid.units() {
            if table[u] == 0 {
                return Err(BundleError::Invalid(format!("unit {u} has no dimension")));
            }
        }
        Ok(MatrixBundle {
            groupoid,
            dims: table,
        })
    }

    pub fn uniform(groupoid: Arc<Groupoid>, dim: usize) -> Self {
        let dims: Vec<(usize, usize)> = groupoid.units().iter().map(|&u| (u, dim)).collect();
        MatrixBundle::new(groupoid, &dims).expect("uniform dims are valid")
    }

    pub fn dim(&self, unit: usize) -> usize {
        self.dims[unit]
    }

    pub fn dims(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.groupoid
            .units()
            .iter()
            .map(move |&u| (u, self.dims[u]))
    }
}

/// Line bundle twisted by a normalized unit-modulus 2-cocycle on composable
/// pairs.
#[derive(Clone, PartialEq)]
pub struct TwistedLineBundle {
    groupoid: Arc<Groupoid>,
    cocycle: BTreeMap<(usize, usize), Complex64>,
}

impl TwistedLineBundle {
    /// Validates the cocycle: defined exactly on composable pairs, unit
    /// modulus, normalized on units, and multiplicative over composable
    /// triples.
    pub fn new(
        groupoid: Arc<Groupoid>,
        cocycle: BTreeMap<(usize, usize), Complex64>,
    ) -> Result<Self, BundleError> {
        let bundle = TwistedLineBundle::new_unchecked(groupoid, cocycle);
        bundle
            .check_cocycle(&Tolerance::default())
            .map_err(BundleError::Invalid)?;
        Ok(bundle)
    }

    /// Skips validation; used to build deliberately corrupted instances that
    /// the randomized checker must then flag.
    pub fn new_unchecked(
        groupoid: Arc<Groupoid>,
        cocycle: BTreeMap<(usize, usize), Complex64>,
    ) -> Self {
        TwistedLineBundle { groupoid, cocycle }
    }

    /// All-ones cocycle.
    pub fn trivial(groupoid: Arc<Groupoid>) -> Self {
        let mut cocycle = BTreeMap::new();
        for (a, b, _) in groupoid.product_triples() {
            cocycle.insert((a, b), Complex64::new(1.0, 0.0));
        }
        TwistedLineBundle { groupoid, cocycle }
    }

    pub fn sigma(&self, a: usize, b: usize) -> Complex64 {
        self.cocycle[&(a, b)]
    }

    pub fn cocycle(&self) -> &BTreeMap<(usize, usize), Complex64> {
        &self.cocycle
    }

    fn check_cocycle(&self, tol: &Tolerance) -> Result<(), String> {
        let g = &self.groupoid;
        let triples = g.product_triples();
        if self.cocycle.len() != triples.len() {
            return Err(format!(
                "cocycle defined on {} pairs, groupoid has {} composable pairs",
                self.cocycle.len(),
                triples.len()
            ));
        }
        let allow = tol.allowance(1.0);
        for &(a, b, ab) in &triples {
            let s = match self.cocycle.get(&(a, b)) {
                Some(&s) => s,
                None => return Err(format!("missing cocycle value at ({a},{b})")),
            };
            if (s.norm() - 1.0).abs() > allow {
                return Err(format!("|sigma({a},{b})| = {} != 1", s.norm()));
            }
            if (g.is_unit(a) || g.is_unit(b)) && (s - Complex64::new(1.0, 0.0)).norm() > allow {
                return Err(format!("sigma not normalized at unit pair ({a},{b})"));
            }
            // sigma(a,b)·sigma(ab,c) = sigma(b,c)·sigma(a,bc) for all c.
            for &c in g.arrows_with_range(g.source(b)) {
                let bc = g.product(b, c).expect("composable by adjacency");
                let lhs = s * self.cocycle[&(ab, c)];
                let rhs = self.cocycle[&(b, c)] * self.cocycle[&(a, bc)];
                if (lhs - rhs).norm() > allow {
                    return Err(format!("cocycle identity fails on triple ({a},{b},{c})"));
                }
            }
        }
        Ok(())
    }
}

/// A fiber bundle over a finite groupoid.
#[derive(Clone, PartialEq)]
pub enum Bundle {
    Matrix(MatrixBundle),
    TwistedLine(TwistedLineBundle),
}

impl std::fmt::Debug for Bundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bundle::Matrix(b) => write!(f, "MatrixBundle over {:?}", b.groupoid),
            Bundle::TwistedLine(b) => write!(f, "TwistedLineBundle over {:?}", b.groupoid),
        }
    }
}

impl Bundle {
    pub fn groupoid(&self) -> &Arc<Groupoid> {
        match self {
            Bundle::Matrix(b) => &b.groupoid,
            Bundle::TwistedLine(b) => &b.groupoid,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Bundle::Matrix(_) => "matrix",
            Bundle::TwistedLine(_) => "twisted_line",
        }
    }

    /// Shape of the fiber over an arrow: `(dim(range), dim(source))` for
    /// matrix bundles, `1×1` for line bundles.
    pub fn fiber_shape(&self, arrow: usize) -> (usize, usize) {
        match self {
            Bundle::Matrix(b) => (
                b.dims[b.groupoid.range(arrow)],
                b.dims[b.groupoid.source(arrow)],
            ),
            Bundle::TwistedLine(_) => (1, 1),
        }
    }

    pub fn zero_value(&self, arrow: usize) -> CMatrix {
        let (r, c) = self.fiber_shape(arrow);
        CMatrix::zeros(r, c)
    }

    /// Identity element of a unit fiber.
    pub fn unit_value(&self, unit: usize) -> CMatrix {
        debug_assert!(self.groupoid().is_unit(unit));
        let (r, _) = self.fiber_shape(unit);
        CMatrix::identity(r)
    }

    /// Scalar picked up when multiplying values over the composable pair
    /// `(a, b)`: the cocycle for twisted line bundles, `1` otherwise.
    pub fn twist(&self, a: usize, b: usize) -> Complex64 {
        match self {
            Bundle::Matrix(_) => Complex64::new(1.0, 0.0),
            Bundle::TwistedLine(tl) => tl.sigma(a, b),
        }
    }

    /// Product of raw fiber values over the composable pair `(a, b)`.
    pub fn mul_values(&self, a: usize, va: &CMatrix, b: usize, vb: &CMatrix) -> CMatrix {
        match self {
            Bundle::Matrix(_) => va.matmul(vb),
            Bundle::TwistedLine(tl) => va.matmul(vb).scale(tl.sigma(a, b)),
        }
    }

    /// Involution of a raw fiber value over `arrow`; the result sits over the
    /// inverse arrow.
    pub fn star_value(&self, arrow: usize, v: &CMatrix) -> CMatrix {
        match self {
            Bundle::Matrix(_) => v.adjoint(),
            Bundle::TwistedLine(tl) => {
                let inv = tl.groupoid.inverse(arrow);
                v.adjoint().scale(tl.sigma(arrow, inv).conj())
            }
        }
    }

    /// Structural checks that do not need randomization: fiber dimensions and
    /// cocycle laws.
    pub fn validate_cheap(&self) -> Result<(), BundleError> {
        match self {
            Bundle::Matrix(b) => {
                for &u in b.groupoid.units() {
                    if b.dims[u] == 0 {
                        return Err(BundleError::Invalid(format!("unit {u} has dimension 0")));
                    }
                }
                Ok(())
            }
            Bundle::TwistedLine(tl) => tl
                .check_cocycle(&Tolerance::default())
                .map_err(BundleError::Invalid),
        }
    }
}

/// An arrow id together with a value of that arrow's fiber shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberElement {
    pub arrow: usize,
    pub value: CMatrix,
}

impl FiberElement {
    pub fn new(bundle: &Bundle, arrow: usize, value: CMatrix) -> Result<Self, BundleError> {
        let (r, c) = bundle.fiber_shape(arrow);
        if value.shape() != (r, c) {
            return Err(BundleError::FiberShape {
                arrow,
                got_rows: value.rows(),
                got_cols: value.cols(),
                want_rows: r,
                want_cols: c,
            });
        }
        Ok(FiberElement { arrow, value })
    }

    pub fn norm(&self) -> f64 {
        self.value.operator_norm()
    }
}

/// Fiber-level product; the result sits over the product arrow.
pub fn fiber_product(
    bundle: &Bundle,
    a: &FiberElement,
    b: &FiberElement,
) -> Result<FiberElement, BundleError> {
    let g = bundle.groupoid();
    let ab = g
        .product(a.arrow, b.arrow)
        .ok_or(BundleError::NotComposable {
            left: a.arrow,
            right: b.arrow,
        })?;
    let value = bundle.mul_values(a.arrow, &a.value, b.arrow, &b.value);
    Ok(FiberElement { arrow: ab, value })
}

/// Fiber-level involution; the result sits over the inverse arrow.
pub fn fiber_star(bundle: &Bundle, a: &FiberElement) -> FiberElement {
    FiberElement {
        arrow: bundle.groupoid().inverse(a.arrow),
        value: bundle.star_value(a.arrow, &a.value),
    }
}

/// Randomized check of the fiber axioms: C*-identity, star-square existence,
/// submultiplicativity, star isometry/involution/antihomomorphism, the
/// conjugation bound `b*a*ab ≤ ‖a‖²·b*b`, unit identities, and (for line
/// bundles) the exact cocycle laws.
pub fn validate_fell(bundle: &Bundle, trials: usize, seed: u64) -> Report {
    let g = bundle.groupoid().clone();
    let tol = Tolerance::default();
    let mut cstar = CheckRecord::passed("fiber.cstar_identity", trials);
    let mut sqrt = CheckRecord::passed("fiber.star_square_root", trials);
    let mut submult = CheckRecord::passed("fiber.submultiplicative", trials);
    let mut star_iso = CheckRecord::passed("fiber.star_isometric", trials);
    let mut star_inv = CheckRecord::passed("fiber.star_involution", trials);
    let mut star_anti = CheckRecord::passed("fiber.star_antihomomorphism", trials);
    let mut conj_bound = CheckRecord::passed("fiber.conjugation_bound", trials);
    let mut unit_id = CheckRecord::passed("fiber.unit_identity", trials);

    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let arrow = sample::random_arrow(&mut rng, &g);
        let b = sample::random_fiber(&mut rng, bundle, arrow);
        let bn = b.norm();
        let scale = (1.0 + bn) * (1.0 + bn);

        let bstar = fiber_star(bundle, &b);
        let bsb = fiber_product(bundle, &bstar, &b).expect("b* and b compose");
        let gap = (bsb.norm() - bn * bn).abs();
        cstar.observe(gap - tol.allowance(scale), || {
            format!("trial {trial}: arrow {arrow}, |norm(b*b) - norm(b)^2| = {gap:.3e}")
        });

        let root = bsb
            .value
            .psd_power(0.5)
            .expect("b*b is positive semidefinite");
        let rebuilt = root.matmul(&root);
        let rerr = rebuilt.max_abs_diff(&bsb.value);
        sqrt.observe(rerr - tol.allowance(scale), || {
            format!("trial {trial}: arrow {arrow}, square-root defect {rerr:.3e}")
        });

        let iso_gap = (bstar.norm() - bn).abs();
        star_iso.observe(iso_gap - tol.allowance(1.0 + bn), || {
            format!("trial {trial}: arrow {arrow}, |norm(b*) - norm(b)| = {iso_gap:.3e}")
        });

        let twice = fiber_star(bundle, &bstar);
        let inv_gap = twice.value.max_abs_diff(&b.value);
        star_inv.observe(inv_gap - tol.allowance(1.0 + bn), || {
            format!("trial {trial}: arrow {arrow}, |b** - b| = {inv_gap:.3e}")
        });

        // A composable pair through the source unit of `arrow`.
        let next = sample::random_arrow_with_range(&mut rng, &g, g.source(arrow));
        let c = sample::random_fiber(&mut rng, bundle, next);
        let bc = fiber_product(bundle, &b, &c).expect("sampled pair is composable");
        let sub_gap = bc.norm() - bn * c.norm();
        submult.observe(sub_gap - tol.allowance(scale * (1.0 + c.norm())), || {
            format!("trial {trial}: arrows ({arrow},{next}), norm(bc) exceeds norm(b)norm(c) by {sub_gap:.3e}")
        });

        let anti = fiber_star(bundle, &bc);
        let cs_bs = fiber_product(bundle, &fiber_star(bundle, &c), &bstar)
            .expect("starred pair is composable");
        let anti_gap = anti.value.max_abs_diff(&cs_bs.value);
        star_anti.observe(anti_gap - tol.allowance(scale * (1.0 + c.norm())), || {
            format!("trial {trial}: arrows ({arrow},{next}), |(bc)* - c*b*| = {anti_gap:.3e}")
        });

        // b c (c b-roles swapped): bound conj(c)* b* b conj(c) <= norm(b)^2 c*c.
        let lhs = fiber_product(bundle, &fiber_star(bundle, &bc), &bc).expect("composable");
        let rhs_inner = fiber_product(bundle, &fiber_star(bundle, &c), &c).expect("composable");
        let rhs = rhs_inner.value.scale(Complex64::new(bn * bn, 0.0));
        let bound_tol = tol.allowance(scale * (1.0 + c.norm()) * (1.0 + c.norm()));
        let ok = loewner_leq(&lhs.value, &rhs, bound_tol).unwrap_or(false);
        conj_bound.observe(if ok { 0.0 } else { 1.0 }, || {
            format!("trial {trial}: arrows ({arrow},{next}), c*b*bc not below norm(b)^2 c*c")
        });

        let e_range = FiberElement::new(bundle, g.range(arrow), bundle.unit_value(g.range(arrow)))
            .expect("unit identity has the unit fiber shape");
        let eb = fiber_product(bundle, &e_range, &b).expect("unit composes");
        let unit_gap = eb.value.max_abs_diff(&b.value);
        unit_id.observe(unit_gap - tol.allowance(1.0 + bn), || {
            format!("trial {trial}: arrow {arrow}, |e·b - b| = {unit_gap:.3e}")
        });
    }

    let mut checks = vec![
        cstar, sqrt, submult, star_iso, star_inv, star_anti, conj_bound, unit_id,
    ];

    if let Bundle::TwistedLine(tl) = bundle {
        let mut rec = CheckRecord::passed("cocycle.laws", 1);
        if let Err(msg) = tl.check_cocycle(&tol) {
            rec.observe(1.0, || msg);
        }
        checks.push(rec);
    }

    Report::new(
        format!("validate_fell[{}]", bundle.kind_name()),
        seed,
        trials,
        checks,
    )
}
