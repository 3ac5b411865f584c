//! Scaling quantum graphs and their directed-bond transition matrix.
//!
//! Directed bond `2i` runs along bond `i` from its first to its second vertex,
//! `2i + 1` runs back. At every vertex the incident bond ends are ordered by
//! bond index (a self-loop contributes its first end, then its second), and
//! the vertex scattering matrix is indexed `[outgoing end][incoming end]`.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exp_sum::{ExponentialSum, FrequencyVector};
use crate::numeric::CMatrix;

pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bond {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// One end of a bond: `end == 0` sits at `bond.a`, `end == 1` at `bond.b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BondEnd {
    pub bond: usize,
    pub end: u8,
}

impl BondEnd {
    /// Directed bond arriving at the vertex through this end.
    pub fn incoming(&self) -> usize {
        if self.end == 1 {
            2 * self.bond
        } else {
            2 * self.bond + 1
        }
    }

    /// Directed bond leaving the vertex through this end.
    pub fn outgoing(&self) -> usize {
        if self.end == 0 {
            2 * self.bond
        } else {
            2 * self.bond + 1
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScatteringSpec {
    Neumann,
    Matrix(CMatrix),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub id: String,
    pub ends: Vec<BondEnd>,
    pub neumann: bool,
    pub scattering: CMatrix,
}

impl Vertex {
    pub fn degree(&self) -> usize {
        self.ends.len()
    }
}

/// Deterministic directed-bond indexing for a graph with `bonds` bonds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DirectedBondBasis {
    bonds: usize,
}

impl DirectedBondBasis {
    pub fn new(bonds: usize) -> Self {
        Self { bonds }
    }

    pub fn len(&self) -> usize {
        2 * self.bonds
    }

    pub fn is_empty(&self) -> bool {
        self.bonds == 0
    }

    pub fn index(&self, bond: usize, forward: bool) -> usize {
        2 * bond + usize::from(!forward)
    }

    pub fn bond_of(&self, d: usize) -> usize {
        d / 2
    }

    pub fn is_forward(&self, d: usize) -> bool {
        d % 2 == 0
    }

    pub fn reverse(&self, d: usize) -> usize {
        d ^ 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumGraph {
    vertices: Vec<Vertex>,
    bonds: Vec<Bond>,
}

/// Entries of unitary matrices with |σ| below this count as structural zeros.
const ZERO_AMPLITUDE: f64 = 1e-15;

/// Neumann (Kirchhoff) vertex matrix 2/d − δ_ij.
pub fn neumann_scattering(degree: usize) -> CMatrix {
    assert!(degree >= 1, "vertex degree must be at least 1");
    let d = degree as f64;
    let mut m = CMatrix::zeros(degree);
    for i in 0..degree {
        for j in 0..degree {
            let v = 2.0 / d - if i == j { 1.0 } else { 0.0 };
            m[(i, j)] = Complex64::new(v, 0.0);
        }
    }
    m
}

impl QuantumGraph {
    /// Validate and assemble. `scattering` maps vertex ids to explicit matrices;
    /// vertices not listed get Neumann conditions.
    pub fn new(
        vertex_ids: Vec<String>,
        bonds: Vec<Bond>,
        scattering: &HashMap<String, ScatteringSpec>,
    ) -> Result<Self> {
        if bonds.is_empty() {
            return Err(Error::InvalidArgument("graph has no bonds".into()));
        }
        for b in &bonds {
            if !(b.length > 0.0 && b.length.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "bond `{}` has nonpositive length {}",
                    b.id, b.length
                )));
            }
            if b.a >= vertex_ids.len() || b.b >= vertex_ids.len() {
                return Err(Error::InvalidArgument(format!("bond `{}` names an unknown vertex", b.id)));
            }
        }
        let mut ends: Vec<Vec<BondEnd>> = vec![Vec::new(); vertex_ids.len()];
        for (i, b) in bonds.iter().enumerate() {
            ends[b.a].push(BondEnd { bond: i, end: 0 });
            ends[b.b].push(BondEnd { bond: i, end: 1 });
        }
        let mut vertices = Vec::with_capacity(vertex_ids.len());
        for (id, ends) in vertex_ids.into_iter().zip(ends) {
            let d = ends.len();
            if d == 0 {
                return Err(Error::Disconnected);
            }
            let (neumann, matrix) = match scattering.get(&id) {
                None | Some(ScatteringSpec::Neumann) => (true, neumann_scattering(d)),
                Some(ScatteringSpec::Matrix(m)) => {
                    if m.dim() != d {
                        return Err(Error::InvalidArgument(format!(
                            "vertex `{id}` has degree {d} but a {}×{} scattering matrix",
                            m.dim(),
                            m.dim()
                        )));
                    }
                    (false, m.clone())
                }
            };
            let dev = matrix.unitarity_deviation();
            if dev > UNITARITY_TOL {
                return Err(Error::NonUnitary {
                    vertex: id,
                    deviation: dev,
                });
            }
            vertices.push(Vertex {
                id,
                ends,
                neumann,
                scattering: matrix,
            });
        }
        let g = Self { vertices, bonds };
        if !g.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(g)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in &self.vertices[v].ends {
                let b = &self.bonds[e.bond];
                let w = if e.end == 0 { b.b } else { b.a };
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn basis(&self) -> DirectedBondBasis {
        DirectedBondBasis::new(self.bonds.len())
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.length).collect()
    }

    /// L₀ = Σ L_i.
    pub fn total_length(&self) -> f64 {
        crate::numeric::compensated_sum(self.bonds.iter().map(|b| b.length))
    }

    /// Ω_i = L_i / L₀.
    pub fn omegas(&self) -> Vec<f64> {
        let l0 = self.total_length();
        self.bonds.iter().map(|b| b.length / l0).collect()
    }

    pub fn mean_spacing(&self) -> f64 {
        std::f64::consts::PI / self.total_length()
    }

    /// Same topology and scattering with new bond lengths.
    pub fn with_lengths(&self, lengths: &[f64]) -> Result<Self> {
        if lengths.len() != self.bonds.len() {
            return Err(Error::DimensionMismatch {
                left: self.bonds.len(),
                right: lengths.len(),
            });
        }
        if let Some(bad) = lengths.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidArgument(format!("nonpositive length {bad}")));
        }
        let mut g = self.clone();
        for (b, &l) in g.bonds.iter_mut().zip(lengths) {
            b.length = l;
        }
        Ok(g)
    }

    /// Nonzero vertex amplitudes as (outgoing, incoming, σ) triples over directed bonds.
    pub fn scattering_amplitudes(&self) -> Vec<(usize, usize, Complex64)> {
        let mut out = Vec::new();
        for v in &self.vertices {
            for (o, eo) in v.ends.iter().enumerate() {
                for (i, ei) in v.ends.iter().enumerate() {
                    let s = v.scattering[(o, i)];
                    if s.norm() > ZERO_AMPLITUDE {
                        out.push((eo.outgoing(), ei.incoming(), s));
                    }
                }
            }
        }
        out.sort_by_key(|a| (a.0, a.1));
        out
    }

    /// Dense k-independent part S[d′, d] of T(k) = S·D(k).
    pub fn bond_scattering_matrix(&self) -> CMatrix {
        let mut s = CMatrix::zeros(self.basis().len());
        for (o, i, a) in self.scattering_amplitudes() {
            s[(o, i)] += a;
        }
        s
    }

    /// Serialize back to the line format accepted by [`parse_graph`].
    pub fn to_text(&self) -> String {
        let mut s = String::from("version 1\n");
        for v in &self.vertices {
            let _ = writeln!(s, "vertex {}", v.id);
        }
        for b in &self.bonds {
            let _ = writeln!(
                s,
                "bond {} {} {} {:?}",
                b.id, self.vertices[b.a].id, self.vertices[b.b].id, b.length
            );
        }
        for v in &self.vertices {
            if v.neumann {
                continue;
            }
            let _ = write!(s, "scattering {} matrix", v.id);
            for z in v.scattering.as_slice() {
                let _ = write!(s, " {:?} {:?}", z.re, z.im);
            }
            s.push('\n');
        }
        s
    }
}

/// Parse the line-oriented graph format.
///
/// ```text
/// version 1
/// vertex c
/// bond b1 c e1 1.0
/// scattering c matrix <re im pairs, row-major>
/// scattering e1 neumann
/// ```
pub fn parse_graph(text: &str) -> Result<QuantumGraph> {
    let mut vertex_ids: Vec<String> = Vec::new();
    let mut vertex_index: HashMap<String, usize> = HashMap::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut bond_lines: Vec<usize> = Vec::new();
    let mut scattering: HashMap<String, ScatteringSpec> = HashMap::new();
    let mut scattering_lines: HashMap<String, usize> = HashMap::new();
    let mut seen_version = false;

    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut vertex = |id: &str, ids: &mut Vec<String>| -> usize {
        *vertex_index.entry(id.to_string()).or_insert_with(|| {
            ids.push(id.to_string());
            ids.len() - 1
        })
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tok: Vec<&str> = content.split_whitespace().collect();
        if !seen_version {
            if tok.len() == 2 && tok[0] == "version" {
                if tok[1] != "1" {
                    return Err(perr(line, format!("unsupported format version {}", tok[1])));
                }
                seen_version = true;
                continue;
            }
            return Err(perr(line, "expected `version 1` before any other line".into()));
        }
        match tok[0] {
            "version" => return Err(perr(line, "duplicate version line".into())),
            "vertex" => {
                if tok.len() != 2 {
                    return Err(perr(line, "expected `vertex <id>`".into()));
                }
                vertex(tok[1], &mut vertex_ids);
            }
            "bond" => {
                if tok.len() != 5 {
                    return Err(perr(line, "expected `bond <id> <v1> <v2> <length>`".into()));
                }
                if bonds.iter().any(|b| b.id == tok[1]) {
                    return Err(perr(line, format!("duplicate bond id `{}`", tok[1])));
                }
                let length: f64 = tok[4]
                    .parse()
                    .map_err(|_| perr(line, format!("bad length `{}`", tok[4])))?;
                if !(length > 0.0 && length.is_finite()) {
                    return Err(perr(line, format!("bond length must be positive, got {}", tok[4])));
                }
                let a = vertex(tok[2], &mut vertex_ids);
                let b = vertex(tok[3], &mut vertex_ids);
                bonds.push(Bond {
                    id: tok[1].to_string(),
                    a,
                    b,
                    length,
                });
                bond_lines.push(line);
            }
            "scattering" => {
                if tok.len() < 3 {
                    return Err(perr(line, "expected `scattering <vertex> neumann|matrix ...`".into()));
                }
                let id = tok[1].to_string();
                if scattering.contains_key(&id) {
                    return Err(perr(line, format!("duplicate scattering for vertex `{id}`")));
                }
                let spec = match tok[2] {
                    "neumann" if tok.len() == 3 => ScatteringSpec::Neumann,
                    "matrix" => {
                        let nums: Vec<f64> = tok[3..]
                            .iter()
                            .map(|t| t.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| perr(line, "non-numeric matrix entry".into()))?;
                        let d = ((nums.len() / 2) as f64).sqrt().round() as usize;
                        if d == 0 || 2 * d * d != nums.len() {
                            return Err(perr(
                                line,
                                format!("matrix needs 2d² numbers, got {}", nums.len()),
                            ));
                        }
                        let data = nums.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
                        ScatteringSpec::Matrix(CMatrix::from_rows(d, data))
                    }
                    other => return Err(perr(line, format!("unknown scattering kind `{other}`"))),
                };
                scattering_lines.insert(id.clone(), line);
                scattering.insert(id, spec);
            }
            other => return Err(perr(line, format!("unknown directive `{other}`"))),
        }
    }
    if !seen_version {
        return Err(perr(1, "missing `version 1` line".into()));
    }
    for (id, &line) in &scattering_lines {
        if !vertex_index.contains_key(id) {
            return Err(perr(line, format!("scattering for unknown vertex `{id}`")));
        }
    }
    QuantumGraph::new(vertex_ids, bonds, &scattering).map_err(|e| match e {
        Error::NonUnitary { vertex, deviation } => {
            let line = scattering_lines.get(&vertex).copied().unwrap_or(0);
            Error::Parse {
                line,
                message: format!(
                    "scattering matrix at vertex `{vertex}` is not unitary (deviation {deviation:.3e})"
                ),
            }
        }
        Error::InvalidArgument(msg) if msg.contains("scattering matrix") => {
            let line = scattering_lines
                .iter()
                .find(|(id, _)| msg.contains(&format!("`{id}`")))
                .map(|(_, &l)| l)
                .unwrap_or(0);
            Error::Parse { line, message: msg }
        }
        Error::Disconnected => Error::Parse {
            line: bond_lines.last().copied().unwrap_or(0),
            message: "graph is not connected".into(),
        },
        other => other,
    })
}

/// T(k) = S·D(k) as a 2B×2B matrix of one-term (or empty) exponential sums.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    dim: usize,
    entries: Vec<ExponentialSum>,
    lengths: Vec<f64>,
}

impl TransitionMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> &ExponentialSum {
        &self.entries[row * self.dim + col]
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn nonzero_count(&self) -> usize {
        self.entries.iter().filter(|e| !e.is_empty()).count()
    }

    /// Nonzeros of column `col` as (row, amplitude, frequency).
    pub fn column(&self, col: usize) -> Vec<(usize, Complex64, FrequencyVector)> {
        (0..self.dim)
            .filter_map(|r| {
                let e = self.entry(r, col);
                e.iter().next().map(|(m, c, _)| (r, c, m.clone()))
            })
            .collect()
    }

    /// Dense numeric T(k).
    pub fn at(&self, k: f64) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                m[(r, c)] = self.entry(r, c).evaluate(k);
            }
        }
        m
    }
}

pub fn transition_matrix(g: &QuantumGraph) -> TransitionMatrix {
    let lengths = g.lengths();
    let dim = g.basis().len();
    let b = g.bond_count();
    let mut entries = vec![ExponentialSum::zero(&lengths); dim * dim];
    for (o, i, s) in g.scattering_amplitudes() {
        let m = FrequencyVector::unit(b, i / 2);
        let e = ExponentialSum::monomial(&lengths, m, s);
        let slot = &mut entries[o * dim + i];
        *slot = slot.add(&e).expect("same lengths");
    }
    TransitionMatrix {
        dim,
        entries,
        lengths,
    }
}

/// Canned graphs used by tests, benchmarks and the shipped data files.
pub mod library {
    use super::*;

    /// Single bond with Neumann (reflection +1) ends.
    pub fn single_bond(length: f64) -> QuantumGraph {
        let bonds = vec![Bond {
            id: "b1".into(),
            a: 0,
            b: 1,
            length,
        }];
        QuantumGraph::new(vec!["v1".into(), "v2".into()], bonds, &HashMap::new()).expect("valid")
    }

    /// Reflection amplitude at the centre of the shipped regular star.
    pub const STAR_RHO: f64 = 0.65;

    /// Bond lengths of the shipped regular star.
    pub fn star_lengths() -> [f64; 2] {
        [1.0, std::f64::consts::SQRT_2 - 0.2]
    }

    /// Two bonds joined at a centre with matrix [[ρ, τ], [τ, −ρ]], τ = √(1−ρ²);
    /// dead ends reflect with +1. `rho = 0` gives the Neumann centre.
    pub fn two_bond_star(l1: f64, l2: f64, rho: f64) -> QuantumGraph {
        let bonds = vec![
            Bond {
                id: "b1".into(),
                a: 0,
                b: 1,
                length: l1,
            },
            Bond {
                id: "b2".into(),
                a: 0,
                b: 2,
                length: l2,
            },
        ];
        let tau = (1.0 - rho * rho).sqrt();
        let m = CMatrix::from_rows(
            2,
            vec![
                Complex64::new(rho, 0.0),
                Complex64::new(tau, 0.0),
                Complex64::new(tau, 0.0),
                Complex64::new(-rho, 0.0),
            ],
        );
        let mut s = HashMap::new();
        if rho != 0.0 {
            s.insert("c".to_string(), ScatteringSpec::Matrix(m));
        }
        QuantumGraph::new(vec!["c".into(), "e1".into(), "e2".into()], bonds, &s).expect("valid")
    }

    /// The regular star shipped as `graphs/star2.qg`.
    pub fn regular_star() -> QuantumGraph {
        let [l1, l2] = star_lengths();
        two_bond_star(l1, l2, STAR_RHO)
    }

    /// Bond lengths (√2, √3, √5, √7, √11, √13)/2 of the shipped quadrangle.
    pub fn quadrangle_lengths() -> [f64; 6] {
        [2.0f64, 3.0, 5.0, 7.0, 11.0, 13.0].map(|p| p.sqrt() / 2.0)
    }

    /// Fully connected quadrangle (K₄) with Neumann vertices.
    pub fn quadrangle(lengths: [f64; 6]) -> QuantumGraph {
        let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let bonds = pairs
            .iter()
            .zip(lengths)
            .enumerate()
            .map(|(i, (&(a, b), length))| Bond {
                id: format!("b{}", i + 1),
                a,
                b,
                length,
            })
            .collect();
        let ids = (1..=4).map(|i| format!("v{i}")).collect();
        QuantumGraph::new(ids, bonds, &HashMap::new()).expect("valid")
    }

    pub fn standard_quadrangle() -> QuantumGraph {
        quadrangle(quadrangle_lengths())
    }

    /// `count` lengths in [0.5, 1.5) whose pairwise ratios are not within 1e−6 of a
    /// fraction with denominator ≤ 100, drawn reproducibly from `seed`.
    pub fn random_irrational_lengths(count: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<f64> = Vec::with_capacity(count);
        while out.len() < count {
            let x = 0.5 + rng.gen::<f64>();
            if out.iter().all(|&y| !crate::numeric::looks_rational(x / y, 100, 1e-6)) {
                out.push(x);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_small_degrees() {
        let m1 = neumann_scattering(1);
        assert_eq!(m1[(0, 0)], Complex64::new(1.0, 0.0));
        let m2 = neumann_scattering(2);
        assert_eq!(m2[(0, 0)].re, 0.0);
        assert_eq!(m2[(0, 1)].re, 1.0);
        assert!(neumann_scattering(4).unitarity_deviation() < 1e-15);
    }

    #[test]
    fn directed_bond_ends() {
        let e = BondEnd { bond: 3, end: 1 };
        assert_eq!(e.incoming(), 6);
        assert_eq!(e.outgoing(), 7);
        let basis = DirectedBondBasis::new(4);
        assert_eq!(basis.index(3, true), 6);
        assert_eq!(basis.reverse(6), 7);
    }

    #[test]
    fn single_bond_transition_is_antidiagonal() {
        let g = library::single_bond(1.7);
        let t = transition_matrix(&g);
        assert_eq!(t.dim(), 2);
        assert!(t.entry(0, 0).is_empty());
        assert!(t.entry(1, 1).is_empty());
        for (r, c) in [(0, 1), (1, 0)] {
            let e = t.entry(r, c);
            assert_eq!(e.len(), 1);
            assert_eq!(e.coefficient(&FrequencyVector::unit(1, 0)), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn star_transition_nonzero_count() {
        let t = transition_matrix(&library::regular_star());
        assert_eq!(t.nonzero_count(), 6);
        let neumann_centre = transition_matrix(&library::two_bond_star(1.0, 1.3, 0.0));
        assert_eq!(neumann_centre.nonzero_count(), 4);
    }

    #[test]
    fn quadrangle_rows_have_three_entries() {
        let g = library::standard_quadrangle();
        assert_eq!(g.bond_count(), 6);
        let t = transition_matrix(&g);
        assert_eq!(t.dim(), 12);
        for r in 0..12 {
            assert_eq!((0..12).filter(|&c| !t.entry(r, c).is_empty()).count(), 3);
        }
    }
}
