//! Finite-dimensional normed Lie algebras given by structure constants.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Working bracket constants are the sampled constant times this factor.
pub const SAFETY_FACTOR: f64 = 2.0;

const RANDOM_PAIRS: usize = 10_000;
const NORM_SEED: u64 = 0xc0ffee;
const MAX_VERTEX_DIM: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    MaxCoefficient,
    SumCoefficient,
}

/// `‖x‖ = scale · max|xᵢ|` or `scale · Σ|xᵢ|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientNorm {
    pub kind: NormKind,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CoefficientNorm {
    fn default() -> Self {
        CoefficientNorm { kind: NormKind::MaxCoefficient, scale: 1.0 }
    }
}

impl CoefficientNorm {
    pub fn max() -> Self {
        Self::default()
    }

    pub fn sum() -> Self {
        CoefficientNorm { kind: NormKind::SumCoefficient, scale: 1.0 }
    }

    pub fn scaled(self, lambda: f64) -> Self {
        CoefficientNorm { scale: self.scale * lambda, ..self }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let raw = match self.kind {
            NormKind::MaxCoefficient => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            NormKind::SumCoefficient => x.iter().map(|v| v.abs()).sum(),
        };
        self.scale * raw
    }
}

#[derive(Debug, PartialEq)]
struct AlgebraData {
    dim: usize,
    labels: Vec<String>,
    /// Dense `c[(i·dim + j)·dim + k]`.
    constants: Vec<f64>,
    norm: CoefficientNorm,
}

/// A Lie algebra `[eᵢ,eⱼ] = Σₖ c[i][j][k] eₖ` with a coefficient norm.
/// Cheap to clone; elements hold a shared reference.
#[derive(Clone, Debug, PartialEq)]
pub struct NormedLieAlgebra(Arc<AlgebraData>);

/// Serialized form: `{dim, labels, structure_constants: [[i,j,k,value],...], norm}`.
#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    dim: usize,
    labels: Vec<String>,
    structure_constants: Vec<(usize, usize, usize, f64)>,
    #[serde(default)]
    norm: CoefficientNorm,
}

impl NormedLieAlgebra {
    /// Builds from the nonzero constants `[eᵢ,eⱼ] ∋ value·eₖ` with `i < j`
    /// given once; the `(j,i)` entries are filled by antisymmetry.
    pub fn new(labels: Vec<String>, triples: &[(usize, usize, usize, f64)], norm: CoefficientNorm) -> Result<Self> {
        let dim = labels.len();
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        let mut c = vec![0.0; dim * dim * dim];
        for &(i, j, k, v) in triples {
            if i >= dim || j >= dim || k >= dim || !v.is_finite() {
                return Err(Error::InvalidAlgebra(format!("bad structure constant ({i},{j},{k},{v})")));
            }
            if i == j {
                if v != 0.0 {
                    return Err(Error::InvalidAlgebra(format!("[e{i},e{i}] must vanish")));
                }
                continue;
            }
            let a = (i * dim + j) * dim + k;
            let b = (j * dim + i) * dim + k;
            if c[a] != 0.0 && c[a] != v {
                return Err(Error::InvalidAlgebra(format!("conflicting constants at ({i},{j},{k})")));
            }
            c[a] = v;
            c[b] = -v;
        }
        let alg = NormedLieAlgebra(Arc::new(AlgebraData { dim, labels, constants: c, norm }));
        let jac = alg.jacobi_residual();
        if jac > 1e-12 {
            return Err(Error::InvalidAlgebra(format!("Jacobi residual {jac:e}")));
        }
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.0.labels
    }

    pub fn norm_spec(&self) -> CoefficientNorm {
        self.0.norm
    }

    /// The same algebra with another norm.
    pub fn with_norm(&self, norm: CoefficientNorm) -> Self {
        NormedLieAlgebra(Arc::new(AlgebraData {
            dim: self.0.dim,
            labels: self.0.labels.clone(),
            constants: self.0.constants.clone(),
            norm,
        }))
    }

    #[inline]
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.0.dim;
        self.0.constants[(i * d + j) * d + k]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.0.labels.iter().position(|l| l == label)
    }

    pub fn basis(&self, i: usize) -> AlgebraElement {
        let mut c = vec![0.0; self.dim()];
        c[i] = 1.0;
        AlgebraElement { algebra: self.clone(), coefficients: c }
    }

    pub fn element(&self, coefficients: Vec<f64>) -> Result<AlgebraElement> {
        if coefficients.len() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "{} coefficients for an algebra of dimension {}",
                coefficients.len(),
                self.dim()
            )));
        }
        if let Some((index, &value)) = coefficients.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(AlgebraElement { algebra: self.clone(), coefficients })
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement { algebra: self.clone(), coefficients: vec![0.0; self.dim()] }
    }

    fn bracket_coeffs(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                if y[j] == 0.0 || i == j {
                    continue;
                }
                let w = x[i] * y[j];
                let base = (i * d + j) * d;
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.0.constants[base + k];
                }
            }
        }
        out
    }

    /// `max |Σ_cyc [[eᵢ,eⱼ],eₖ]|` over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let e = |i: usize| {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            v
        };
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let a = self.bracket_coeffs(&self.bracket_coeffs(&e(i), &e(j)), &e(k));
                    let b = self.bracket_coeffs(&self.bracket_coeffs(&e(j), &e(k)), &e(i));
                    let c = self.bracket_coeffs(&self.bracket_coeffs(&e(k), &e(i)), &e(j));
                    for m in 0..d {
                        worst = worst.max((a[m] + b[m] + c[m]).abs());
                    }
                }
            }
        }
        worst
    }

    /// Nilpotency class: smallest `m` with every `(m+1)`-fold bracket zero.
    pub fn nilpotency_degree(&self) -> Option<usize> {
        let d = self.dim();
        // Lower central series spanned by brackets of basis elements.
        let mut span: Vec<Vec<f64>> = (0..d).map(|i| self.basis(i).coefficients).collect();
        for m in 1..=d + 1 {
            if span.iter().all(|v| v.iter().all(|c| *c == 0.0)) {
                return Some(m - 1);
            }
            let mut next = Vec::new();
            for v in &span {
                for i in 0..d {
                    let b = self.bracket_coeffs(v, &self.basis(i).coefficients);
                    if b.iter().any(|c| *c != 0.0) {
                        next.push(b);
                    }
                }
            }
            span = next;
        }
        None
    }

    pub fn to_json(&self) -> Result<String> {
        let d = self.dim();
        let mut triples = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                for k in 0..d {
                    let v = self.constant(i, j, k);
                    if v != 0.0 {
                        triples.push((i, j, k, v));
                    }
                }
            }
        }
        let js = AlgebraJson { dim: d, labels: self.0.labels.clone(), structure_constants: triples, norm: self.0.norm };
        Ok(serde_json::to_string_pretty(&js)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let js: AlgebraJson = serde_json::from_str(text)?;
        if js.labels.len() != js.dim {
            return Err(Error::InvalidAlgebra(format!("{} labels for dimension {}", js.labels.len(), js.dim)));
        }
        Self::new(js.labels, &js.structure_constants, js.norm)
    }
}

impl fmt::Display for NormedLieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lie algebra of dimension {} with basis {}", self.dim(), self.labels().join(", "))
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Basis `f, g, h` with `[f,g] = h` central.
pub fn heisenberg3() -> NormedLieAlgebra {
    NormedLieAlgebra::new(vec!["f".into(), "g".into(), "h".into()], &[(0, 1, 2, 1.0)], CoefficientNorm::max())
        .expect("Heisenberg relations are valid")
}

/// Basis `a1..an, b1..bn, c` with `[aᵢ,bⱼ] = δᵢⱼ c`.
pub fn nilpotent2(n: usize) -> Result<NormedLieAlgebra> {
    if n == 0 {
        return Err(Error::InvalidAlgebra("nilpotent2 needs n ≥ 1".into()));
    }
    let mut names = labels("a", n);
    names.extend(labels("b", n));
    names.push("c".into());
    let triples: Vec<_> = (0..n).map(|i| (i, n + i, 2 * n, 1.0)).collect();
    NormedLieAlgebra::new(names, &triples, CoefficientNorm::max())
}

pub fn abelian(d: usize) -> Result<NormedLieAlgebra> {
    if d == 0 {
        return Err(Error::InvalidAlgebra("abelian needs d ≥ 1".into()));
    }
    NormedLieAlgebra::new(labels("e", d), &[], CoefficientNorm::max())
}

/// `heisenberg3`, `nilpotent2(n)` or `abelian(d)`.
pub fn builtin(name: &str) -> Result<NormedLieAlgebra> {
    let name = name.trim();
    if name == "heisenberg3" || name == "heisenberg" {
        return Ok(heisenberg3());
    }
    let arg = |prefix: &str| -> Option<Result<usize>> {
        let rest = name.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
        Some(rest.trim().parse::<usize>().map_err(|_| Error::UnknownAlgebra(name.to_string())))
    };
    if let Some(n) = arg("nilpotent2") {
        return nilpotent2(n?);
    }
    if let Some(d) = arg("abelian") {
        return abelian(d?);
    }
    Err(Error::UnknownAlgebra(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    algebra: NormedLieAlgebra,
    coefficients: Vec<f64>,
}

impl AlgebraElement {
    pub fn algebra(&self) -> &NormedLieAlgebra {
        &self.algebra
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn norm(&self) -> f64 {
        self.algebra.0.norm.eval(&self.coefficients)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    fn same(&self, other: &AlgebraElement) -> Result<()> {
        if Arc::ptr_eq(&self.algebra.0, &other.algebra.0) || self.algebra == other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    pub fn add(&self, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.axpy(1.0, other)
    }

    /// `self + k·other`.
    pub fn axpy(&self, k: f64, other: &AlgebraElement) -> Result<AlgebraElement> {
        self.same(other)?;
        let c = self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a + k * b).collect();
        Ok(AlgebraElement { algebra: self.algebra.clone(), coefficients: c })
    }

    pub fn scale(&self, k: f64) -> AlgebraElement {
        AlgebraElement { algebra: self.algebra.clone(), coefficients: self.coefficients.iter().map(|c| k * c).collect() }
    }

    pub fn label(&self) -> String {
        let terms: Vec<String> = self
            .coefficients
            .iter()
            .zip(self.algebra.labels())
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, l)| if *c == 1.0 { l.clone() } else { format!("{c}{l}") })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

pub fn bracket(x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
    x.same(y)?;
    Ok(AlgebraElement { algebra: x.algebra.clone(), coefficients: x.algebra.bracket_coeffs(&x.coefficients, &y.coefficients) })
}

/// `ad(g)ʲ f` with `ad(g) f = [f, g]`.
pub fn ad_power(g: &AlgebraElement, f: &AlgebraElement, j: usize) -> Result<AlgebraElement> {
    f.same(g)?;
    let mut x = f.clone();
    for _ in 0..j {
        if x.is_zero() {
            break;
        }
        x = bracket(&x, g)?;
    }
    Ok(x)
}

/// Sampled bracket constant: `sampled` is the largest ratio
/// `‖[x,y]‖ / (‖x‖‖y‖)` seen, `working = SAFETY_FACTOR · sampled`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketConstant {
    pub sampled: f64,
    pub working: f64,
    pub safety_factor: f64,
    pub samples: usize,
}

/// Maximizes the bracket ratio over all basis pairs, the extreme points of
/// the unit ball (sign vectors for the max norm, for dimension ≤ 6) and
/// 10⁴ seeded random unit pairs.
pub fn bracket_norm_constant(algebra: &NormedLieAlgebra) -> BracketConstant {
    let d = algebra.dim();
    let norm = algebra.0.norm;
    let mut best: f64 = 0.0;
    let mut samples = 0;
    let mut probe = |x: &[f64], y: &[f64]| {
        let (nx, ny) = (norm.eval(x), norm.eval(y));
        if nx > 0.0 && ny > 0.0 {
            best = best.max(norm.eval(&algebra.bracket_coeffs(x, y)) / (nx * ny));
        }
        samples += 1;
    };
    let e = |i: usize| {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    };
    for i in 0..d {
        for j in 0..d {
            probe(&e(i), &e(j));
        }
    }
    if norm.kind == NormKind::MaxCoefficient && d <= MAX_VERTEX_DIM {
        let vertex = |m: usize| -> Vec<f64> { (0..d).map(|b| if m >> b & 1 == 1 { -1.0 } else { 1.0 }).collect() };
        for a in 0..1usize << d {
            for b in 0..1usize << d {
                probe(&vertex(a), &vertex(b));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(NORM_SEED);
    for _ in 0..RANDOM_PAIRS {
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        probe(&x, &y);
    }
    BracketConstant { sampled: best, working: SAFETY_FACTOR * best, safety_factor: SAFETY_FACTOR, samples }
}
