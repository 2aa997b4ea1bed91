//! Sections of a fiber bundle under convolution, with the full norm family.
//!
//! A section assigns to every arrow a value of that arrow's fiber shape; it is
//! the concrete element of every algebra and module built here. Convolution
//! sums fiber products over all factorizations of each arrow:
//!
//! ```text
//! (a·b)(γ) = Σ over γ = αβ of a(α)b(β),   enumerated as α = γβ⁻¹
//!            for β ranging over the arrows with source(β) = source(γ).
//! ```
//!
//! # The reduced norm as a block operator
//!
//! `norm_b` is the operator norm of left convolution acting on sections,
//! measured in the per-unit Gram norm `norm_2`. At finite scale this has a
//! closed form. Fix a unit `x` and let `Γx` be the arrows with source `x`.
//! A section `f` supported on `Γx` is a "column": the tuple of its values
//! `f(γ)`, each of shape `(dim(range γ), dim(x))`. Convolution by `a` maps
//! this column to another one over `Γx`:
//!
//! ```text
//! (a·f)(δ) = Σ over γ in Γx of twist(δγ⁻¹, γ) · a(δγ⁻¹) · f(γ),   δ in Γx,
//! ```
//!
//! so on each column space the action is the block matrix `REP_x(a)` with
//! row/column blocks indexed by `δ, γ in Γx` and block `(δ, γ)` equal to
//! `twist(δγ⁻¹, γ) · a(δγ⁻¹)`. Left multiplication by a fixed matrix acts on
//! each of the `dim(x)` columns of a value independently, so `REP_x(a)` acts
//! as `(block matrix) ⊗ identity` and its operator norm is just the block
//! matrix's. Since convolution preserves the source of the support,
//! the action of `a` splits as a direct sum over units, and the Gram norm of
//! a column section is exactly the Euclidean norm of its stacked entries;
//! hence
//!
//! ```text
//! norm_b(a) = max over units x of operator_norm(REP_x(a)).
//! ```
//!
//! [`Section::norm_b_oracle`] witnesses the same value from below without
//! ever assembling a block matrix (random columns plus power iteration), and
//! the test suites hold the two routes against each other.

use crate::bundle::{Bundle, BundleError};
use crate::groupoid::ArrowSet;
use crate::linalg::CMatrix;
use crate::sample;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use thiserror::Error;

/// Power-iteration steps used by the reduced-norm oracle.
const ORACLE_REFINE_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error("sections live over different bundles")]
    BundleMismatch,
    #[error(transparent)]
    Fiber(#[from] BundleError),
}

/// Total assignment of a fiber value to every arrow; zero values allowed.
#[derive(Clone, PartialEq)]
pub struct Section {
    bundle: Arc<Bundle>,
    values: Vec<CMatrix>,
}

impl std::fmt::Debug for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Section over {:?} with support {:?}",
            self.bundle,
            self.support()
        )
    }
}

fn same_bundle(a: &Arc<Bundle>, b: &Arc<Bundle>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl Section {
    pub fn zero(bundle: &Arc<Bundle>) -> Section {
        let n = bundle.groupoid().len();
        let values = (0..n).map(|arrow| bundle.zero_value(arrow)).collect();
        Section {
            bundle: bundle.clone(),
            values,
        }
    }

    /// Identity matrix on every unit, zero elsewhere; the unit of convolution.
    pub fn identity(bundle: &Arc<Bundle>) -> Section {
        let mut e = Section::zero(bundle);
        for &u in bundle.groupoid().units() {
            e.values[u] = bundle.unit_value(u);
        }
        e
    }

    pub fn from_values(
        bundle: &Arc<Bundle>,
        values: Vec<CMatrix>,
    ) -> Result<Section, SectionError> {
        if values.len() != bundle.groupoid().len() {
            return Err(SectionError::Fiber(BundleError::Invalid(format!(
                "expected {} values, got {}",
                bundle.groupoid().len(),
                values.len()
            ))));
        }
        for (arrow, value) in values.iter().enumerate() {
            if value.shape() != bundle.fiber_shape(arrow) {
                let (want_rows, want_cols) = bundle.fiber_shape(arrow);
                return Err(SectionError::Fiber(BundleError::FiberShape {
                    arrow,
                    got_rows: value.rows(),
                    got_cols: value.cols(),
                    want_rows,
                    want_cols,
                }));
            }
        }
        Ok(Section {
            bundle: bundle.clone(),
            values,
        })
    }

    pub fn bundle(&self) -> &Arc<Bundle> {
        &self.bundle
    }

    pub fn value(&self, arrow: usize) -> &CMatrix {
        &self.values[arrow]
    }

    pub fn set_value(&mut self, arrow: usize, value: CMatrix) -> Result<(), SectionError> {
        if value.shape() != self.bundle.fiber_shape(arrow) {
            let (want_rows, want_cols) = self.bundle.fiber_shape(arrow);
            return Err(SectionError::Fiber(BundleError::FiberShape {
                arrow,
                got_rows: value.rows(),
                got_cols: value.cols(),
                want_rows,
                want_cols,
            }));
        }
        self.values[arrow] = value;
        Ok(())
    }

    /// Arrows carrying a nonzero value.
    pub fn support(&self) -> ArrowSet {
        ArrowSet::from_iter(
            self.values.len(),
            self.values
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, _)| i),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn add(&self, other: &Section) -> Result<Section, SectionError> {
        if !same_bundle(&self.bundle, &other.bundle) {
            return Err(SectionError::BundleMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(Section {
            bundle: self.bundle.clone(),
            values,
        })
    }

    pub fn sub(&self, other: &Section) -> Result<Section, SectionError> {
        if !same_bundle(&self.bundle, &other.bundle) {
            return Err(SectionError::BundleMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.sub(b))
            .collect();
        Ok(Section {
            bundle: self.bundle.clone(),
            values,
        })
    }

    pub fn scale(&self, z: Complex64) -> Section {
        let values = self.values.iter().map(|v| v.scale(z)).collect();
        Section {
            bundle: self.bundle.clone(),
            values,
        }
    }

    /// Largest entry modulus of the pointwise difference.
    pub fn max_abs_diff(&self, other: &Section) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    /// Convolution: sums `a(γβ⁻¹)·b(β)` over arrows `β` sharing the output's
    /// source unit.
    pub fn convolve(&self, other: &Section) -> Result<Section, SectionError> {
        if !same_bundle(&self.bundle, &other.bundle) {
            return Err(SectionError::BundleMismatch);
        }
        let g = self.bundle.groupoid();
        let left_nonzero: Vec<bool> = self.values.iter().map(|v| !v.is_zero()).collect();
        let right_nonzero: Vec<bool> = other.values.iter().map(|v| !v.is_zero()).collect();
        let mut out = Section::zero(&self.bundle);
        for gamma in 0..g.len() {
            let mut acc = self.bundle.zero_value(gamma);
            for &beta in g.arrows_with_source(g.source(gamma)) {
                if !right_nonzero[beta] {
                    continue;
                }
                let alpha = g
                    .product(gamma, g.inverse(beta))
                    .expect("gamma and beta share a source unit");
                if !left_nonzero[alpha] {
                    continue;
                }
                let term =
                    self.bundle
                        .mul_values(alpha, &self.values[alpha], beta, &other.values[beta]);
                acc = acc.add(&term);
            }
            out.values[gamma] = acc;
        }
        Ok(out)
    }

    /// Involution: the value over `γ` is the fiber star of the value over
    /// `γ⁻¹`.
    pub fn star(&self) -> Section {
        let g = self.bundle.groupoid();
        let values = (0..g.len())
            .map(|gamma| {
                let inv = g.inverse(gamma);
                self.bundle.star_value(inv, &self.values[inv])
            })
            .collect();
        Section {
            bundle: self.bundle.clone(),
            values,
        }
    }

    /// Zero-restriction to an arrow set.
    pub fn restrict(&self, keep: &ArrowSet) -> Section {
        let mut out = Section::zero(&self.bundle);
        for arrow in keep.iter() {
            out.values[arrow] = self.values[arrow].clone();
        }
        out
    }

    /// Zero-restriction to the unit arrows.
    pub fn diagonal(&self) -> Section {
        let g = self.bundle.groupoid();
        self.restrict(&ArrowSet::from_iter(g.len(), g.units().iter().copied()))
    }

    /// Zero-restriction to the arrows whose source lies in the given units.
    pub fn restrict_by_source(&self, units: &ArrowSet) -> Section {
        let g = self.bundle.groupoid();
        let keep = ArrowSet::from_iter(
            g.len(),
            (0..g.len()).filter(|&a| units.contains(g.source(a))),
        );
        self.restrict(&keep)
    }

    /// Zero-restriction to the arrows whose range lies in the given units.
    pub fn restrict_by_range(&self, units: &ArrowSet) -> Section {
        let g = self.bundle.groupoid();
        let keep = ArrowSet::from_iter(
            g.len(),
            (0..g.len()).filter(|&a| units.contains(g.range(a))),
        );
        self.restrict(&keep)
    }

    /// Module inner product: the diagonal of `self* · other`, a unit-supported
    /// section with positive values when `other = self`.
    pub fn inner_product(&self, other: &Section) -> Result<Section, SectionError> {
        Ok(self.star().convolve(other)?.diagonal())
    }

    /// Largest fiber norm.
    pub fn norm_inf(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.operator_norm())
            .fold(0.0, f64::max)
    }

    /// Largest per-source-unit sum of fiber norms.
    pub fn norm_1(&self) -> f64 {
        let g = self.bundle.groupoid();
        g.units()
            .iter()
            .map(|&x| {
                g.arrows_with_source(x)
                    .iter()
                    .map(|&gamma| self.values[gamma].operator_norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Per-source-unit Gram norm: the Hilbert-module norm
    /// `max over x of sqrt(norm(Σ over source(γ)=x of a(γ)* a(γ)))`.
    pub fn norm_2(&self) -> f64 {
        let g = self.bundle.groupoid();
        let mut worst = 0.0f64;
        for &x in g.units() {
            let (_, dim) = self.bundle.fiber_shape(x);
            let mut gram = CMatrix::zeros(dim, dim);
            let mut any = false;
            for &gamma in g.arrows_with_source(x) {
                if self.values[gamma].is_zero() {
                    continue;
                }
                gram = gram.add(&self.values[gamma].gram());
                any = true;
            }
            if any {
                worst = worst.max(gram.operator_norm());
            }
        }
        worst.sqrt()
    }

    /// Max of the 1-norm and the 1-norm of the involute.
    pub fn norm_i(&self) -> f64 {
        self.norm_1().max(self.star().norm_1())
    }

    /// The block matrix of left convolution on the column space of a unit.
    ///
    /// Rows and columns are indexed by the arrows with source `x` in
    /// ascending id order; the `(δ, γ)` block is `twist(δγ⁻¹, γ)·a(δγ⁻¹)`.
    pub fn rep_block(&self, x: usize) -> CMatrix {
        let g = self.bundle.groupoid();
        let arrows = g.arrows_with_source(x);
        let mut offsets = Vec::with_capacity(arrows.len() + 1);
        let mut total = 0usize;
        for &gamma in arrows {
            offsets.push(total);
            total += self.bundle.fiber_shape(gamma).0;
        }
        offsets.push(total);
        let mut block = CMatrix::zeros(total.max(1), total.max(1));
        for (bi, &delta) in arrows.iter().enumerate() {
            for (bj, &gamma) in arrows.iter().enumerate() {
                let mid = g
                    .product(delta, g.inverse(gamma))
                    .expect("delta and gamma share a source unit");
                if self.values[mid].is_zero() {
                    continue;
                }
                let coeff = self.bundle.twist(mid, gamma);
                let v = &self.values[mid];
                for i in 0..v.rows() {
                    for j in 0..v.cols() {
                        block[(offsets[bi] + i, offsets[bj] + j)] = v[(i, j)] * coeff;
                    }
                }
            }
        }
        block
    }

    /// Reduced norm: the operator norm of left convolution, computed per unit
    /// from [`Section::rep_block`]. See the module docs for the derivation.
    pub fn norm_b(&self) -> f64 {
        let g = self.bundle.groupoid();
        g.units()
            .iter()
            .map(|&x| self.rep_block(x).operator_norm())
            .fold(0.0, f64::max)
    }

    /// Lower-bound witness for [`Section::norm_b`] that never touches the
    /// block-matrix path: the best ratio `norm_2(a·f)/norm_2(f)` over random
    /// sections `f`, refined by power iteration (apply `a`, then `a*`,
    /// renormalize) from the best sample.
    ///
    /// Every reported value is a valid lower bound up to roundoff; with
    /// refinement it lands within about `1e-3` relative of the reduced norm.
    pub fn norm_b_oracle(&self, trials: usize, seed: u64) -> f64 {
        let trials = trials.max(1);
        let star = self.star();
        let ratio = |f: &Section| -> f64 {
            let nf = f.norm_2();
            if nf == 0.0 {
                return 0.0;
            }
            let af = self.convolve(f).expect("oracle probes share the bundle");
            af.norm_2() / nf
        };

        let mut best = 0.0f64;
        let mut best_probe: Option<Section> = None;
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let f = sample::random_section(&mut rng, &self.bundle, 1.0);
            let r = ratio(&f);
            if r > best || best_probe.is_none() {
                best = r;
                best_probe = Some(f);
            }
        }

        let mut g = match best_probe {
            Some(f) if !f.is_zero() => f,
            _ => return best,
        };
        for _ in 0..ORACLE_REFINE_ITERS {
            best = best.max(ratio(&g));
            let ag = self.convolve(&g).expect("oracle probes share the bundle");
            let next = star.convolve(&ag).expect("oracle probes share the bundle");
            let n = next.norm_2();
            if n == 0.0 {
                break;
            }
            g = next.scale(Complex64::new(1.0 / n, 0.0));
        }
        best = best.max(ratio(&g));
        // The converged iterate may mix units; its per-unit pieces are often
        // sharper witnesses.
        let groupoid = self.bundle.groupoid();
        for &x in groupoid.units() {
            let piece = g.restrict(&ArrowSet::from_iter(
                groupoid.len(),
                groupoid.arrows_with_source(x).iter().copied(),
            ));
            if !piece.is_zero() {
                best = best.max(ratio(&piece));
            }
        }
        best
    }
}
