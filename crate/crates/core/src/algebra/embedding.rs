use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::haar_unitary_with;
use crate::matrix::{matmul, ComplexMatrix, ToleranceConfig, C64, ONE, ZERO};
use crate::spectral::{min_eigenvalue_unchecked, range_basis};

/// Shape `[n₁, …, n_r]` of an abstract algebra `⊕ᵢ M_{nᵢ}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockStructure(Vec<usize>);

impl BlockStructure {
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidEmbedding(
                "block structure needs at least one block".into(),
            ));
        }
        if blocks.contains(&0) {
            return Err(Error::InvalidEmbedding(
                "block sizes must be positive".into(),
            ));
        }
        Ok(Self(blocks))
    }

    pub fn blocks(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `Σ nᵢ²`, the vector-space dimension of the algebra.
    pub fn dimension(&self) -> usize {
        self.0.iter().map(|n| n * n).sum()
    }

    /// `Σ nᵢ`, the size of the block-diagonal realization.
    pub fn abstract_dim(&self) -> usize {
        self.0.iter().sum()
    }

    fn offsets(&self) -> Vec<usize> {
        self.0
            .iter()
            .scan(0, |acc, &n| {
                let o = *acc;
                *acc += n;
                Some(o)
            })
            .collect()
    }
}

/// Raw matrix-unit images, the wire form of an embedding.
///
/// `images[i][s * nᵢ + t]` is the image of `e^{(i)}_{st}` (zero-based).
#[derive(Clone, Debug)]
pub struct UnitImages {
    pub ambient_dim: usize,
    pub structure: BlockStructure,
    pub images: Vec<Vec<ComplexMatrix>>,
}

#[derive(Serialize, Deserialize)]
struct UnitImagesJson {
    ambient_dim: usize,
    blocks: Vec<usize>,
    unit_images: BTreeMap<String, ComplexMatrix>,
}

fn parse_key(key: &str) -> Option<(usize, usize, usize)> {
    let mut it = key.split('.');
    let i = it.next()?.parse::<usize>().ok()?;
    let s = it.next()?.parse::<usize>().ok()?;
    let t = it.next()?.parse::<usize>().ok()?;
    if it.next().is_some() || i == 0 || s == 0 || t == 0 {
        return None;
    }
    Some((i - 1, s - 1, t - 1))
}

impl TryFrom<UnitImagesJson> for UnitImages {
    type Error = Error;

    fn try_from(j: UnitImagesJson) -> Result<Self> {
        let structure = BlockStructure::new(j.blocks)?;
        if j.ambient_dim == 0 {
            return Err(Error::Format("ambient_dim must be positive".into()));
        }
        let expected = structure.blocks().iter().try_fold(0usize, |acc, &n| {
            n.checked_mul(n).and_then(|sq| acc.checked_add(sq))
        });
        if expected != Some(j.unit_images.len()) {
            return Err(Error::Format(format!(
                "expected one image per matrix unit, got {} images for blocks {:?}",
                j.unit_images.len(),
                structure.blocks()
            )));
        }
        let mut slots: Vec<Vec<Option<ComplexMatrix>>> = structure
            .blocks()
            .iter()
            .map(|&n| vec![None; n * n])
            .collect();
        for (key, m) in j.unit_images {
            let (i, s, t) = parse_key(&key)
                .ok_or_else(|| Error::Format(format!("bad unit-image key {key:?}")))?;
            let n = *structure
                .blocks()
                .get(i)
                .ok_or_else(|| Error::Format(format!("key {key:?}: no block {}", i + 1)))?;
            if s >= n || t >= n {
                return Err(Error::Format(format!(
                    "key {key:?} outside block of size {n}"
                )));
            }
            if m.dim() != j.ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: j.ambient_dim,
                    found: m.dim(),
                });
            }
            slots[i][s * n + t] = Some(m);
        }
        let images = slots
            .into_iter()
            .map(|b| b.into_iter().collect::<Option<Vec<_>>>())
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::Format("missing matrix-unit image".into()))?;
        Ok(UnitImages {
            ambient_dim: j.ambient_dim,
            structure,
            images,
        })
    }
}

impl Serialize for UnitImages {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for (i, block) in self.images.iter().enumerate() {
            let n = self.structure.blocks()[i];
            for (idx, m) in block.iter().enumerate() {
                map.insert(
                    format!("{}.{}.{}", i + 1, idx / n + 1, idx % n + 1),
                    m.clone(),
                );
            }
        }
        UnitImagesJson {
            ambient_dim: self.ambient_dim,
            blocks: self.structure.blocks().to_vec(),
            unit_images: map,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitImages {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = UnitImagesJson::deserialize(d)?;
        UnitImages::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl UnitImages {
    pub fn image(&self, i: usize, s: usize, t: usize) -> &ComplexMatrix {
        let n = self.structure.blocks()[i];
        &self.images[i][s * n + t]
    }

    fn check_shape(&self) -> Result<()> {
        if self.images.len() != self.structure.len() {
            return Err(Error::InvalidEmbedding(format!(
                "{} image families for {} blocks",
                self.images.len(),
                self.structure.len()
            )));
        }
        for (i, (fam, &n)) in self.images.iter().zip(self.structure.blocks()).enumerate() {
            if fam.len() != n * n {
                return Err(Error::InvalidEmbedding(format!(
                    "block {} has {} images, expected {}",
                    i + 1,
                    fam.len(),
                    n * n
                )));
            }
            if let Some(m) = fam.iter().find(|m| m.dim() != self.ambient_dim) {
                return Err(Error::DimensionMismatch {
                    expected: self.ambient_dim,
                    found: m.dim(),
                });
            }
        }
        Ok(())
    }
}

/// Parses the JSON embedding format into raw unit images (no validation of
/// the algebraic relations).
pub fn parse_embedding_json(text: &str) -> Result<UnitImages> {
    let j: UnitImagesJson = serde_json::from_str(text)?;
    UnitImages::try_from(j)
}

/// Worst residual per relation family of a candidate embedding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// `max ‖e_{st} e_{t'v} − δ_{tt'} e_{sv}‖`, across all blocks (products
    /// of units from different blocks must vanish).
    pub relation_residual: f64,
    /// `max ‖e_{st}* − e_{ts}‖`.
    pub adjoint_residual: f64,
    /// `‖Σ e_{ss} − 1_N‖`.
    pub unit_residual: f64,
    /// Smallest eigenvalue of the normalized Hilbert–Schmidt Gram matrix of the images.
    pub gram_min_eigenvalue: f64,
    pub valid: bool,
    pub violations: Vec<String>,
}

/// Checks the matrix-unit relations, adjoint relations, unitality and
/// injectivity of a candidate embedding. Violations are reported, not raised;
/// only malformed shapes are errors.
pub fn validate_embedding(raw: &UnitImages, tol: &ToleranceConfig) -> Result<EmbeddingReport> {
    raw.check_shape()?;
    let n_amb = raw.ambient_dim;
    let flat: Vec<(usize, usize, usize, &ComplexMatrix)> = raw
        .images
        .iter()
        .enumerate()
        .flat_map(|(i, fam)| {
            let n = raw.structure.blocks()[i];
            fam.iter()
                .enumerate()
                .map(move |(idx, m)| (i, idx / n, idx % n, m))
        })
        .collect();

    let mut relation: f64 = 0.0;
    for &(i, s, t, a) in &flat {
        for &(j, t2, v, b) in &flat {
            let prod = a * b;
            let expected = if i == j && t == t2 {
                Some(raw.image(i, s, v))
            } else {
                None
            };
            let r = match expected {
                Some(e) => (&prod - e).max_abs(),
                None => prod.max_abs(),
            };
            relation = relation.max(r);
        }
    }

    let mut adjoint: f64 = 0.0;
    for &(i, s, t, a) in &flat {
        adjoint = adjoint.max((&a.adjoint() - raw.image(i, t, s)).max_abs());
    }

    let mut sum = ComplexMatrix::zeros(n_amb);
    for (i, &n) in raw.structure.blocks().iter().enumerate() {
        for s in 0..n {
            sum = &sum + raw.image(i, s, s);
        }
    }
    let unit = (&sum - &ComplexMatrix::identity(n_amb)).max_abs();

    // normalized Gram matrix: images of valid matrix units are HS-orthogonal
    let k = flat.len();
    let norms: Vec<f64> = flat.iter().map(|f| f.3.frobenius_norm()).collect();
    let gram = ComplexMatrix::from_fn(k, |p, q| {
        if norms[p] == 0.0 || norms[q] == 0.0 {
            ZERO
        } else {
            flat[p].3.hs_inner(flat[q].3) / (norms[p] * norms[q])
        }
    });
    let gram_min = min_eigenvalue_unchecked(&gram);

    let mut violations = Vec::new();
    if relation > tol.identity_tol {
        violations.push(format!("matrix-unit relation residual {relation:.3e}"));
    }
    if adjoint > tol.identity_tol {
        violations.push(format!("adjoint relation residual {adjoint:.3e}"));
    }
    if unit > tol.identity_tol {
        violations.push(format!("unitality residual {unit:.3e}"));
    }
    if !(gram_min > tol.eig_floor) {
        violations.push(format!(
            "images linearly dependent (Gram min eigenvalue {gram_min:.3e})"
        ));
    }
    Ok(EmbeddingReport {
        relation_residual: relation,
        adjoint_residual: adjoint,
        unit_residual: unit,
        gram_min_eigenvalue: gram_min,
        valid: violations.is_empty(),
        violations,
    })
}

/// A validated unital embedding `⊕ᵢ M_{nᵢ} → M_N` in frame form.
#[derive(Clone, Debug)]
pub struct SubalgebraEmbedding {
    ambient_dim: usize,
    structure: BlockStructure,
    multiplicities: Vec<usize>,
    /// `N × (nᵢ mᵢ)` isometries; column `s * mᵢ + r` is `ι(e_{s0}) v_r`.
    frames: Vec<DMatrix<C64>>,
}

impl SubalgebraEmbedding {
    /// Validates raw unit images and converts them to frame form.
    pub fn from_unit_images(raw: &UnitImages, tol: &ToleranceConfig) -> Result<Self> {
        let report = validate_embedding(raw, tol)?;
        if !report.valid {
            return Err(Error::InvalidEmbedding(report.violations.join("; ")));
        }
        let n_amb = raw.ambient_dim;
        let mut frames = Vec::with_capacity(raw.structure.len());
        let mut mults = Vec::with_capacity(raw.structure.len());
        for (i, &n) in raw.structure.blocks().iter().enumerate() {
            let p = raw.image(i, 0, 0).as_dmatrix();
            let basis = range_basis(p, 0.5);
            let m = basis.len();
            let mut f = DMatrix::zeros(n_amb, n * m);
            for s in 0..n {
                let es0 = raw.image(i, s, 0);
                for (r, v) in basis.iter().enumerate() {
                    let col = es0.apply(v);
                    for (row, z) in col.into_iter().enumerate() {
                        f[(row, s * m + r)] = z;
                    }
                }
            }
            frames.push(f);
            mults.push(m);
        }
        Self::from_frames(n_amb, raw.structure.clone(), frames, tol)
    }

    /// Builds an embedding from frames, checking that together they form a
    /// unitary of `C^N`.
    pub fn from_frames(
        ambient_dim: usize,
        structure: BlockStructure,
        frames: Vec<DMatrix<C64>>,
        tol: &ToleranceConfig,
    ) -> Result<Self> {
        if frames.len() != structure.len() {
            return Err(Error::InvalidEmbedding(
                "one frame per block required".into(),
            ));
        }
        let mut mults = Vec::with_capacity(frames.len());
        let mut total = 0;
        for (f, &n) in frames.iter().zip(structure.blocks()) {
            if f.nrows() != ambient_dim || f.ncols() % n != 0 || f.ncols() == 0 {
                return Err(Error::InvalidEmbedding(format!(
                    "frame of shape {}x{} incompatible with block size {n}",
                    f.nrows(),
                    f.ncols()
                )));
            }
            mults.push(f.ncols() / n);
            total += f.ncols();
        }
        if total != ambient_dim {
            return Err(Error::InvalidEmbedding(format!(
                "frames span {total} dimensions of an ambient space of dimension {ambient_dim}"
            )));
        }
        let mut all = DMatrix::zeros(ambient_dim, ambient_dim);
        let mut c = 0;
        for f in &frames {
            all.view_mut((0, c), (ambient_dim, f.ncols())).copy_from(f);
            c += f.ncols();
        }
        let w = ComplexMatrix::wrap(all);
        let resid = (&w.adjoint() * &w - ComplexMatrix::identity(ambient_dim)).max_abs();
        if resid > tol.identity_tol.max(1e-12) * 10.0 {
            return Err(Error::InvalidEmbedding(format!(
                "frames are not orthonormal (residual {resid:.3e})"
            )));
        }
        Ok(Self {
            ambient_dim,
            structure,
            multiplicities: mults,
            frames,
        })
    }

    fn trusted(ambient_dim: usize, structure: BlockStructure, frames: Vec<DMatrix<C64>>) -> Self {
        let multiplicities = frames
            .iter()
            .zip(structure.blocks())
            .map(|(f, n)| f.ncols() / n)
            .collect();
        Self {
            ambient_dim,
            structure,
            multiplicities,
            frames,
        }
    }

    /// `M_n = M_n`.
    pub fn full(n: usize) -> Self {
        Self::ampliation(n, 1)
    }

    /// `C·1 ⊆ M_n`.
    pub fn scalars(n: usize) -> Self {
        Self::trusted(n, BlockStructure(vec![1]), vec![DMatrix::identity(n, n)])
    }

    /// `x ↦ x ⊗ 1_m`, i.e. `M_n ⊗ 1 ⊆ M_{nm}`.
    pub fn ampliation(n: usize, m: usize) -> Self {
        Self::trusted(
            n * m,
            BlockStructure(vec![n]),
            vec![DMatrix::identity(n * m, n * m)],
        )
    }

    /// `x ↦ 1_m ⊗ x`, i.e. `1 ⊗ M_n ⊆ M_{mn}`.
    pub fn right_ampliation(n: usize, m: usize) -> Self {
        let dim = n * m;
        let mut f = DMatrix::zeros(dim, dim);
        for s in 0..n {
            for r in 0..m {
                f[(r * n + s, s * m + r)] = ONE;
            }
        }
        Self::trusted(dim, BlockStructure(vec![n]), vec![f])
    }

    /// `⊕ M_{nᵢ}` embedded block-diagonally in `M_{Σnᵢ}`.
    pub fn block_diagonal(blocks: &[usize]) -> Result<Self> {
        let structure = BlockStructure::new(blocks.to_vec())?;
        let dim = structure.abstract_dim();
        let frames = structure
            .offsets()
            .iter()
            .zip(blocks)
            .map(|(&o, &n)| {
                let mut f = DMatrix::zeros(dim, n);
                for s in 0..n {
                    f[(o + s, s)] = ONE;
                }
                f
            })
            .collect();
        Ok(Self::trusted(dim, structure, frames))
    }

    /// The diagonal matrices of `M_n`.
    pub fn diagonal(n: usize) -> Self {
        Self::block_diagonal(&vec![1; n]).expect("n >= 1")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn structure(&self) -> &BlockStructure {
        &self.structure
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub(crate) fn frame(&self, i: usize) -> &DMatrix<C64> {
        &self.frames[i]
    }

    /// The unitary whose columns are all frames, block after block.
    pub fn frame_unitary(&self) -> ComplexMatrix {
        let n = self.ambient_dim;
        let mut all = DMatrix::zeros(n, n);
        let mut c = 0;
        for f in &self.frames {
            all.view_mut((0, c), (n, f.ncols())).copy_from(f);
            c += f.ncols();
        }
        ComplexMatrix::wrap(all)
    }

    /// Image of the matrix unit `e^{(i)}_{st}` (zero-based).
    pub fn unit_image(&self, i: usize, s: usize, t: usize) -> ComplexMatrix {
        let m = self.multiplicities[i];
        let f = &self.frames[i];
        let a = f.columns(s * m, m);
        let b = f.columns(t * m, m);
        ComplexMatrix::wrap(matmul(&a.into_owned(), &b.adjoint()))
    }

    /// All matrix-unit images in wire form. Allocates `Σ nᵢ²` ambient matrices.
    pub fn to_unit_images(&self) -> UnitImages {
        let images = self
            .structure
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                (0..n * n)
                    .map(|idx| self.unit_image(i, idx / n, idx % n))
                    .collect()
            })
            .collect();
        UnitImages {
            ambient_dim: self.ambient_dim,
            structure: self.structure.clone(),
            images,
        }
    }

    /// `ι(⊕ xᵢ) = Σᵢ Fᵢ (xᵢ ⊗ 1) Fᵢ*`.
    pub fn apply_blocks(&self, blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        if blocks.len() != self.structure.len() {
            return Err(Error::DimensionMismatch {
                expected: self.structure.len(),
                found: blocks.len(),
            });
        }
        let mut out = DMatrix::zeros(self.ambient_dim, self.ambient_dim);
        for (i, x) in blocks.iter().enumerate() {
            let n = self.structure.blocks()[i];
            if x.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: x.dim(),
                });
            }
            let m = self.multiplicities[i];
            let f = &self.frames[i];
            let xm = x.ampliate(m);
            out += matmul(&matmul(f, xm.as_dmatrix()), &f.adjoint());
        }
        Ok(ComplexMatrix::wrap(out))
    }

    /// Applies the embedding to an element of the block-diagonal realization
    /// of the abstract algebra in `M_{Σnᵢ}`. Off-block entries are ignored.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.apply_blocks(&self.split_abstract(x)?)
    }

    /// Splits a block-diagonal abstract element into its blocks.
    pub fn split_abstract(&self, x: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        if x.dim() != self.structure.abstract_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.structure.abstract_dim(),
                found: x.dim(),
            });
        }
        Ok(self
            .structure
            .offsets()
            .iter()
            .zip(self.structure.blocks())
            .map(|(&o, &n)| ComplexMatrix::wrap(x.as_dmatrix().view((o, o), (n, n)).into_owned()))
            .collect())
    }

    /// Inverse of [`split_abstract`](Self::split_abstract).
    pub fn join_abstract(&self, blocks: &[ComplexMatrix]) -> ComplexMatrix {
        let mut it = blocks.iter();
        let first = it.next().expect("at least one block").clone();
        it.fold(first, |acc, b| acc.direct_sum(b))
    }

    pub(crate) fn compress(&self, i: usize, a: &ComplexMatrix) -> DMatrix<C64> {
        let f = &self.frames[i];
        matmul(&matmul(&f.adjoint(), a.as_dmatrix()), f)
    }

    /// Blockwise pull-back `xᵢ = tr_{mᵢ}(Fᵢ* a Fᵢ)/mᵢ`. For `a` in the image this
    /// inverts [`apply_blocks`](Self::apply_blocks); in general it is the
    /// parametrization of the trace-preserving expectation onto the image.
    pub fn pull_back(&self, a: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
        if a.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: a.dim(),
            });
        }
        Ok((0..self.structure.len())
            .map(|i| {
                let n = self.structure.blocks()[i];
                let m = self.multiplicities[i];
                let x = self.compress(i, a);
                ComplexMatrix::from_fn(n, |s, t| {
                    (0..m).map(|r| x[(s * m + r, t * m + r)]).sum::<C64>() / m as f64
                })
            })
            .collect())
    }

    /// Hilbert–Schmidt orthogonal projection onto the image `ι(B)`.
    pub fn project_onto_image(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        let blocks = self.pull_back(a)?;
        self.apply_blocks(&blocks)
    }

    /// `‖a − P_B(a)‖_HS`.
    pub fn membership_residual(&self, a: &ComplexMatrix) -> Result<f64> {
        Ok((a - &self.project_onto_image(a)?).frobenius_norm())
    }

    /// Membership test at `eig_floor`, relative to `max(1, ‖a‖_HS)`.
    pub fn contains(&self, a: &ComplexMatrix, tol: &ToleranceConfig) -> Result<bool> {
        let scale = a.frobenius_norm().max(1.0);
        Ok(self.membership_residual(a)? <= tol.eig_floor * scale)
    }

    /// The embedding `x ↦ u* ι(x) u`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.dim() != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: u.dim(),
            });
        }
        let ua = u.as_dmatrix().adjoint();
        let frames = self.frames.iter().map(|f| matmul(&ua, f)).collect();
        Ok(Self::trusted(
            self.ambient_dim,
            self.structure.clone(),
            frames,
        ))
    }

    /// `λ ∘ ι` where `outer` embeds the full algebra `M_N` (one block of size
    /// `N = self.ambient_dim`) into a larger ambient algebra.
    pub fn compose_into(&self, outer: &SubalgebraEmbedding) -> Result<Self> {
        if outer.structure.blocks() != [self.ambient_dim] {
            return Err(Error::InvalidEmbedding(format!(
                "outer embedding must have the single block [{}]",
                self.ambient_dim
            )));
        }
        let g = &outer.frames[0];
        let mo = outer.multiplicities[0];
        let ident = DMatrix::<C64>::identity(mo, mo);
        let frames = self
            .frames
            .iter()
            .map(|f| matmul(g, &f.kronecker(&ident)))
            .collect();
        Ok(Self::trusted(
            outer.ambient_dim,
            self.structure.clone(),
            frames,
        ))
    }

    /// The commutant `ι(B)' = ⊕ᵢ 1_{nᵢ} ⊗ M_{mᵢ}` as an embedding with blocks
    /// `[mᵢ]` and multiplicities `[nᵢ]`.
    pub fn commutant_embedding(&self) -> Self {
        let frames = self
            .frames
            .iter()
            .zip(self.structure.blocks().iter().zip(&self.multiplicities))
            .map(|(f, (&n, &m))| {
                let mut g = DMatrix::zeros(self.ambient_dim, n * m);
                for r in 0..m {
                    for s in 0..n {
                        g.set_column(r * n + s, &f.column(s * m + r));
                    }
                }
                g
            })
            .collect();
        Self::trusted(
            self.ambient_dim,
            BlockStructure(self.multiplicities.clone()),
            frames,
        )
    }

    /// Haar unitary of `B`, sampled blockwise and pushed into the ambient algebra.
    /// Returns the abstract blocks and the ambient image.
    pub fn sample_unitary<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> (Vec<ComplexMatrix>, ComplexMatrix) {
        let blocks: Vec<ComplexMatrix> = self
            .structure
            .blocks()
            .iter()
            .map(|&n| haar_unitary_with(rng, n))
            .collect();
        let img = self.apply_blocks(&blocks).expect("block sizes match");
        (blocks, img)
    }

    pub(crate) fn tensor_with(&self, other: &Self) -> Self {
        let dim = self.ambient_dim * other.ambient_dim;
        let mut blocks = Vec::new();
        let mut frames = Vec::new();
        for (i, f) in self.frames.iter().enumerate() {
            let (n, m) = (self.structure.blocks()[i], self.multiplicities[i]);
            for (j, g) in other.frames.iter().enumerate() {
                let (n2, m2) = (other.structure.blocks()[j], other.multiplicities[j]);
                let mut h = DMatrix::zeros(dim, n * n2 * m * m2);
                for s in 0..n {
                    for s2 in 0..n2 {
                        for r in 0..m {
                            for r2 in 0..m2 {
                                let col = (s * n2 + s2) * (m * m2) + r * m2 + r2;
                                let a = f.column(s * m + r);
                                let b = g.column(s2 * m2 + r2);
                                h.set_column(col, &a.kronecker(&b));
                            }
                        }
                    }
                }
                blocks.push(n * n2);
                frames.push(h);
            }
        }
        Self::trusted(dim, BlockStructure(blocks), frames)
    }
}
