//! JSON interchange for groupoids, bundles, sections, negligible sets, and
//! morphisms.
//!
//! Bundle files reference their groupoid file by path, section files their
//! bundle file, morphism files their two bundle files; references resolve
//! relative to the referencing file's directory. Loading validates: groupoid
//! laws, bundle axioms that are cheap and exact, value shapes, and the full
//! morphism laws.
//!
//! Complex numbers serialize as `[re, im]` pairs; matrix entries are row-major.

// The file-format mirror types spell out their tuple layouts on purpose.
#![allow(clippy::type_complexity)]

use crate::algebra::NegligibleSet;
use crate::bundle::{Bundle, MatrixBundle, TwistedLineBundle};
use crate::groupoid::{ArrowSet, Groupoid};
use crate::linalg::CMatrix;
use crate::morphism::{FellMorphism, FiberMap};
use crate::section::Section;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
    #[error("cross-reference error in {path}: {msg}")]
    CrossReference { path: String, msg: String },
}

fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: path.display().to_string(),
        msg: e.to_string(),
    })
}

fn crossref(path: &Path, msg: impl Into<String>) -> IoError {
    IoError::CrossReference {
        path: path.display().to_string(),
        msg: msg.into(),
    }
}

fn resolve(referencing_file: &Path, reference: &str) -> PathBuf {
    let candidate = PathBuf::from(reference);
    if candidate.is_absolute() {
        candidate
    } else {
        referencing_file
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(candidate)
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), IoError> {
    std::fs::write(path, content).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Groupoid files

#[derive(Debug, Serialize, Deserialize)]
pub struct GroupoidFile {
    pub units: Vec<usize>,
    pub source: Vec<usize>,
    pub range: Vec<usize>,
    pub inverse: Vec<usize>,
    pub product: Vec<(usize, usize, usize)>,
}

pub fn groupoid_to_file(g: &Groupoid) -> GroupoidFile {
    GroupoidFile {
        units: g.units().to_vec(),
        source: (0..g.len()).map(|a| g.source(a)).collect(),
        range: (0..g.len()).map(|a| g.range(a)).collect(),
        inverse: (0..g.len()).map(|a| g.inverse(a)).collect(),
        product: g.product_triples(),
    }
}

pub fn save_groupoid(path: &Path, g: &Groupoid) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(&groupoid_to_file(g)).expect("serializable");
    write_file(path, &text)
}

pub fn load_groupoid(path: &Path) -> Result<Arc<Groupoid>, IoError> {
    let file: GroupoidFile = parse(path, &read(path)?)?;
    let g = Groupoid::from_tables(
        file.units,
        file.source,
        file.range,
        file.inverse,
        &file.product,
    )
    .map_err(|e| crossref(path, e.to_string()))?;
    let report = g.validate();
    if let Some(first) = report.violations.first() {
        return Err(crossref(
            path,
            format!("groupoid law {}: {}", first.law, first.witness),
        ));
    }
    Ok(Arc::new(g))
}

// ---------------------------------------------------------------------------
// Bundle files

#[derive(Debug, Serialize, Deserialize)]
pub struct BundleFile {
    pub groupoid: String,
    #[serde(flatten)]
    pub kind: BundleKindFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BundleKindFile {
    /// Unit id (as a JSON object key) to fiber dimension.
    Matrix { dims: BTreeMap<String, usize> },
    TwistedLine {
        cocycle: Vec<(usize, usize, f64, f64)>,
    },
}

pub fn bundle_to_file(bundle: &Bundle, groupoid_ref: &str) -> BundleFile {
    let kind = match bundle {
        Bundle::Matrix(mb) => BundleKindFile::Matrix {
            dims: mb.dims().map(|(u, d)| (u.to_string(), d)).collect(),
        },
        Bundle::TwistedLine(tl) => BundleKindFile::TwistedLine {
            cocycle: tl
                .cocycle()
                .iter()
                .map(|(&(a, b), z)| (a, b, z.re, z.im))
                .collect(),
        },
    };
    BundleFile {
        groupoid: groupoid_ref.into(),
        kind,
    }
}

pub fn save_bundle(path: &Path, bundle: &Bundle, groupoid_ref: &str) -> Result<(), IoError> {
    let text =
        serde_json::to_string_pretty(&bundle_to_file(bundle, groupoid_ref)).expect("serializable");
    write_file(path, &text)
}

pub fn load_bundle(path: &Path) -> Result<Arc<Bundle>, IoError> {
    let file: BundleFile = parse(path, &read(path)?)?;
    let groupoid = load_groupoid(&resolve(path, &file.groupoid))?;
    let bundle = match file.kind {
        BundleKindFile::Matrix { dims } => {
            let mut pairs = Vec::with_capacity(dims.len());
            for (key, dim) in dims {
                let unit: usize = key
                    .parse()
                    .map_err(|_| crossref(path, format!("dims key {key:?} is not a unit id")))?;
                pairs.push((unit, dim));
            }
            Bundle::Matrix(
                MatrixBundle::new(groupoid, &pairs).map_err(|e| crossref(path, e.to_string()))?,
            )
        }
        BundleKindFile::TwistedLine { cocycle } => {
            let mut map = BTreeMap::new();
            for (a, b, re, im) in cocycle {
                if map.insert((a, b), Complex64::new(re, im)).is_some() {
                    return Err(crossref(
                        path,
                        format!("duplicate cocycle entry at ({a},{b})"),
                    ));
                }
            }
            Bundle::TwistedLine(
                TwistedLineBundle::new(groupoid, map).map_err(|e| crossref(path, e.to_string()))?,
            )
        }
    };
    Ok(Arc::new(bundle))
}

// ---------------------------------------------------------------------------
// Section files

#[derive(Debug, Serialize, Deserialize)]
pub struct SectionFile {
    pub bundle: String,
    /// `(arrow, row-major entries)`; omitted arrows are zero.
    pub values: Vec<(usize, Vec<[f64; 2]>)>,
}

pub fn section_to_file(section: &Section, bundle_ref: &str) -> SectionFile {
    let mut values = Vec::new();
    for arrow in section.support().iter() {
        let v = section.value(arrow);
        let entries = v.entries().iter().map(|z| [z.re, z.im]).collect();
        values.push((arrow, entries));
    }
    SectionFile {
        bundle: bundle_ref.into(),
        values,
    }
}

pub fn save_section(path: &Path, section: &Section, bundle_ref: &str) -> Result<(), IoError> {
    let text =
        serde_json::to_string_pretty(&section_to_file(section, bundle_ref)).expect("serializable");
    write_file(path, &text)
}

/// Loads a section along with the canonical path of its bundle file.
pub fn load_section(path: &Path) -> Result<(Section, PathBuf), IoError> {
    let file: SectionFile = parse(path, &read(path)?)?;
    let bundle_path = resolve(path, &file.bundle);
    let bundle = load_bundle(&bundle_path)?;
    let mut section = Section::zero(&bundle);
    let mut seen = vec![false; bundle.groupoid().len()];
    for (arrow, entries) in file.values {
        if arrow >= bundle.groupoid().len() {
            return Err(crossref(path, format!("arrow {arrow} out of range")));
        }
        if seen[arrow] {
            return Err(crossref(path, format!("duplicate value for arrow {arrow}")));
        }
        seen[arrow] = true;
        let (rows, cols) = bundle.fiber_shape(arrow);
        if entries.len() != rows * cols {
            return Err(crossref(
                path,
                format!(
                    "arrow {arrow} wants {}x{} = {} entries, got {}",
                    rows,
                    cols,
                    rows * cols,
                    entries.len()
                ),
            ));
        }
        let value = CMatrix::from_fn(rows, cols, |i, j| {
            let [re, im] = entries[i * cols + j];
            Complex64::new(re, im)
        });
        section
            .set_value(arrow, value)
            .expect("shape checked above");
    }
    Ok((section, bundle_path))
}

// ---------------------------------------------------------------------------
// Negligible-set files

#[derive(Debug, Serialize, Deserialize)]
pub struct NegligibleFile {
    pub null_arrows: Vec<usize>,
}

pub fn save_negligible(path: &Path, n: &NegligibleSet) -> Result<(), IoError> {
    let file = NegligibleFile {
        null_arrows: n.null_arrows.to_vec(),
    };
    write_file(
        path,
        &serde_json::to_string_pretty(&file).expect("serializable"),
    )
}

pub fn load_negligible(path: &Path, groupoid: &Groupoid) -> Result<NegligibleSet, IoError> {
    let file: NegligibleFile = parse(path, &read(path)?)?;
    if let Some(&bad) = file.null_arrows.iter().find(|&&a| a >= groupoid.len()) {
        return Err(crossref(path, format!("arrow {bad} out of range")));
    }
    Ok(NegligibleSet::new(ArrowSet::from_iter(
        groupoid.len(),
        file.null_arrows,
    )))
}

// ---------------------------------------------------------------------------
// Morphism files

#[derive(Debug, Serialize, Deserialize)]
pub struct MorphismFile {
    pub source_bundle: String,
    pub target_bundle: String,
    pub phi: PhiFile,
    pub beta: BetaFile,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PhiFile {
    /// Arrows of the target's base forming the base-map domain.
    pub dom_subgroupoid: Vec<usize>,
    /// Pairs `(target-base arrow, source-base arrow)`.
    pub map: Vec<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaFile {
    /// `(arrow, left entries, right entries)`, shapes implied by the bundles.
    MatrixPairs {
        maps: Vec<(usize, Vec<[f64; 2]>, Vec<[f64; 2]>)>,
    },
    /// `(arrow, re, im)`.
    Scalars { maps: Vec<(usize, f64, f64)> },
}

pub fn morphism_to_file(m: &FellMorphism, source_ref: &str, target_ref: &str) -> MorphismFile {
    let phi_map: Vec<(usize, usize)> = m.phi_by_parent().into_iter().collect();
    let dom: Vec<usize> = m.sub_arrows().to_vec();
    let beta_parent = m.beta_by_parent();
    let beta = match m.target().as_ref() {
        Bundle::Matrix(_) => BetaFile::MatrixPairs {
            maps: beta_parent
                .into_iter()
                .map(|(arrow, map)| match map {
                    FiberMap::Pair { left, right } => (
                        arrow,
                        left.entries().iter().map(|z| [z.re, z.im]).collect(),
                        right.entries().iter().map(|z| [z.re, z.im]).collect(),
                    ),
                    FiberMap::Scalar(_) => unreachable!("matrix bundles use pair maps"),
                })
                .collect(),
        },
        Bundle::TwistedLine(_) => BetaFile::Scalars {
            maps: beta_parent
                .into_iter()
                .map(|(arrow, map)| match map {
                    FiberMap::Scalar(z) => (arrow, z.re, z.im),
                    FiberMap::Pair { .. } => unreachable!("line bundles use scalar maps"),
                })
                .collect(),
        },
    };
    MorphismFile {
        source_bundle: source_ref.into(),
        target_bundle: target_ref.into(),
        phi: PhiFile {
            dom_subgroupoid: dom,
            map: phi_map,
        },
        beta,
    }
}

pub fn save_morphism(
    path: &Path,
    m: &FellMorphism,
    source_ref: &str,
    target_ref: &str,
) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(&morphism_to_file(m, source_ref, target_ref))
        .expect("serializable");
    write_file(path, &text)
}

/// Loads a fully validated morphism along with the canonical paths of its
/// source and target bundle files.
pub fn load_morphism(path: &Path) -> Result<(FellMorphism, PathBuf, PathBuf), IoError> {
    let file: MorphismFile = parse(path, &read(path)?)?;
    let source_path = resolve(path, &file.source_bundle);
    let target_path = resolve(path, &file.target_bundle);
    let source = load_bundle(&source_path)?;
    let target = load_bundle(&target_path)?;
    let parent_len = target.groupoid().len();
    if let Some(&bad) = file.phi.dom_subgroupoid.iter().find(|&&a| a >= parent_len) {
        return Err(crossref(path, format!("domain arrow {bad} out of range")));
    }
    let sub_arrows = ArrowSet::from_iter(parent_len, file.phi.dom_subgroupoid.iter().copied());
    let mut phi_parent = BTreeMap::new();
    for (from, to) in &file.phi.map {
        if *to >= source.groupoid().len() {
            return Err(crossref(path, format!("image arrow {to} out of range")));
        }
        if phi_parent.insert(*from, *to).is_some() {
            return Err(crossref(
                path,
                format!("duplicate base-map entry for arrow {from}"),
            ));
        }
    }
    let mut beta_parent: BTreeMap<usize, FiberMap> = BTreeMap::new();
    match (&file.beta, target.as_ref()) {
        (BetaFile::MatrixPairs { maps }, Bundle::Matrix(_)) => {
            let Bundle::Matrix(_) = source.as_ref() else {
                return Err(crossref(
                    path,
                    "matrix fiber maps over a line bundle source",
                ));
            };
            for (arrow, left_entries, right_entries) in maps {
                if !sub_arrows.contains(*arrow) {
                    return Err(crossref(
                        path,
                        format!("fiber map at {arrow} outside the domain"),
                    ));
                }
                let phi_image = *phi_parent.get(arrow).ok_or_else(|| {
                    crossref(path, format!("no base-map image for arrow {arrow}"))
                })?;
                let (pr, pc) = source.fiber_shape(phi_image);
                let (tr, tc) = target.fiber_shape(*arrow);
                if left_entries.len() != tr * pr || right_entries.len() != pc * tc {
                    return Err(crossref(
                        path,
                        format!("fiber map at {arrow} has wrong entry counts"),
                    ));
                }
                let left = CMatrix::from_fn(tr, pr, |i, j| {
                    let [re, im] = left_entries[i * pr + j];
                    Complex64::new(re, im)
                });
                let right = CMatrix::from_fn(pc, tc, |i, j| {
                    let [re, im] = right_entries[i * tc + j];
                    Complex64::new(re, im)
                });
                beta_parent.insert(*arrow, FiberMap::Pair { left, right });
            }
        }
        (BetaFile::Scalars { maps }, Bundle::TwistedLine(_)) => {
            for (arrow, re, im) in maps {
                beta_parent.insert(*arrow, FiberMap::Scalar(Complex64::new(*re, *im)));
            }
        }
        _ => {
            return Err(crossref(
                path,
                "fiber-map kind does not match the target bundle kind",
            ))
        }
    }
    let morphism = FellMorphism::new(source, target, sub_arrows, &phi_parent, &beta_parent)
        .map_err(|e| crossref(path, e.to_string()))?;
    Ok((morphism, source_path, target_path))
}
