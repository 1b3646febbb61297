//! Evaluation metrics: constraint resemblance between a generated and a
//! ground-truth program (precision/recall/F1 over object and layout
//! constraints), and solution correctness of a layout.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::constraints::{compile_program, ratio, EvalContext, EvalError};
use crate::dsl::{print_expr, typecheck, AssertKind, Assertion, CmpOp, Expr, ExprKind, Program};
use crate::scene::{category_from_id, EntityProps, SceneLayout};

pub const DEFAULT_TAU: f64 = 0.7;
pub const TRIGRAM_DIM: usize = 512;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("embedding lengths differ: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("no embedding for `{0}`")]
    MissingEmbedding(String),
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Program(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Text embedding provider. Vectors are expected to be unit length.
pub trait Embedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError>;
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// Hashed character-trigram counts over the lowercased, space-padded text.
#[derive(Clone, Copy, Debug)]
pub struct TrigramEmbedder {
    pub dim: usize,
}

impl Default for TrigramEmbedder {
    fn default() -> Self {
        TrigramEmbedder { dim: TRIGRAM_DIM }
    }
}

impl Embedder for TrigramEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        let padded: Vec<char> = format!("  {} ", text.to_lowercase()).chars().collect();
        let dim = self.dim.max(1);
        let mut v = vec![0.0; dim];
        for w in padded.windows(3) {
            let mut h: u64 = 0xcbf29ce484222325;
            for c in w {
                for b in c.to_string().bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
            }
            v[(h % dim as u64) as usize] += 1.0;
        }
        normalize(&mut v);
        Ok(v)
    }
}

/// Precomputed vectors keyed by exact text, read from `text<TAB>v1,v2,...`
/// lines. Vectors are normalized on load.
#[derive(Clone, Debug, Default)]
pub struct TableEmbedder {
    pub vectors: BTreeMap<String, Vec<f64>>,
}

impl TableEmbedder {
    pub fn parse(text: &str, path: &str) -> Result<Self, MetricsError> {
        let mut vectors = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| MetricsError::Format { path: path.into(), line: n + 1, message };
            let (id, values) = line.split_once('\t').ok_or_else(|| err("expected `id<TAB>v1,v2,...`".into()))?;
            let mut v: Vec<f64> = values
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("bad vector: {e}")))?;
            normalize(&mut v);
            if vectors.insert(id.to_string(), v).is_some() {
                return Err(err(format!("duplicate id `{id}`")));
            }
        }
        Ok(TableEmbedder { vectors })
    }

    pub fn load(path: &Path) -> Result<Self, MetricsError> {
        let text = std::fs::read_to_string(path).map_err(|e| MetricsError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }
}

impl Embedder for TableEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
        self.vectors.get(text).cloned().ok_or_else(|| MetricsError::MissingEmbedding(text.to_string()))
    }
}

/// Cosine of unit vectors mapped linearly from [-1, 1] onto [0, 1].
pub fn scaled_dot(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Dimension(a.len(), b.len()));
    }
    let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok(((c.clamp(-1.0, 1.0) + 1.0) / 2.0).clamp(0.0, 1.0))
}

pub fn harmonic(a: f64, b: f64) -> f64 {
    if a + b > 0.0 {
        2.0 * a * b / (a + b)
    } else {
        0.0
    }
}

/// Rows are generated items, columns ground-truth items.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub thresholded: bool,
}

impl ConfidenceMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        ConfidenceMatrix { rows, cols, data: vec![0.0; rows * cols], thresholded: false }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged confidence matrix");
        ConfidenceMatrix { rows: rows.len(), cols, data: rows.concat(), thresholded: false }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    /// Zeroes every entry below `tau`.
    pub fn threshold(&mut self, tau: f64) {
        self.data.iter_mut().filter(|v| **v < tau).for_each(|v| *v = 0.0);
        self.thresholded = true;
    }
}

/// Maximum-total one-to-one assignment as `(row, col)` pairs sorted by row.
/// Zero entries are never matched.
pub fn hungarian_assign(m: &ConfidenceMatrix) -> Vec<(usize, usize)> {
    if m.rows == 0 || m.cols == 0 {
        return Vec::new();
    }
    let transpose = m.rows > m.cols;
    let (n, k) = if transpose { (m.cols, m.rows) } else { (m.rows, m.cols) };
    let w = |i: usize, j: usize| if transpose { m.get(j, i) } else { m.get(i, j) };
    let max = m.data.iter().cloned().fold(0.0, f64::max);
    let cost = |i: usize, j: usize| max - w(i, j);

    // Shortest augmenting paths with potentials; 1-based with column 0 as
    // the virtual source.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; k + 1];
    let mut p = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=k)
        .filter(|&j| p[j] != 0)
        .map(|j| if transpose { (j - 1, p[j] - 1) } else { (p[j] - 1, j - 1) })
        .filter(|&(r, c)| m.get(r, c) > 0.0)
        .collect();
    pairs.sort_unstable();
    pairs
}

pub fn assignment_total(m: &ConfidenceMatrix, pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| m.get(r, c)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatchScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MatchScores {
    /// Ratios with an empty denominator are 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = div(tp, tp + fp);
        let recall = div(tp, tp + fn_);
        MatchScores { precision, recall, f1: harmonic(precision, recall), tp, fp, fn_ }
    }
}

/// Pairwise harmonic means of object and layout scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OverallScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn overall_resemblance(objects: &MatchScores, layout: &MatchScores) -> OverallScores {
    OverallScores {
        precision: harmonic(objects.precision, layout.precision),
        recall: harmonic(objects.recall, layout.recall),
        f1: harmonic(objects.f1, layout.f1),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectItem {
    pub name: String,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObjectMatch {
    pub scores: MatchScores,
    pub matrix: ConfidenceMatrix,
    pub pairs: Vec<(usize, usize)>,
}

/// Scores a thresholded object confidence matrix: true positives are
/// generated objects assigned to a ground-truth object.
pub fn object_scores(matrix: &ConfidenceMatrix) -> (MatchScores, Vec<(usize, usize)>) {
    let pairs = hungarian_assign(matrix);
    let tp = pairs.len();
    (MatchScores::from_counts(tp, matrix.rows - tp, matrix.cols - tp), pairs)
}

pub fn object_resemblance(
    generated: &[ObjectItem],
    truth: &[ObjectItem],
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<ObjectMatch, MetricsError> {
    let embed_all = |items: &[ObjectItem]| -> Result<Vec<(Vec<f64>, Vec<f64>)>, MetricsError> {
        items.iter().map(|o| Ok((embedder.embed(&o.name)?, embedder.embed(&o.description)?))).collect()
    };
    let g = embed_all(generated)?;
    let t = embed_all(truth)?;
    let mut matrix = ConfidenceMatrix::new(g.len(), t.len());
    for (r, (gn, gd)) in g.iter().enumerate() {
        for (c, (tn, td)) in t.iter().enumerate() {
            matrix.set(r, c, harmonic(scaled_dot(gn, tn)?, scaled_dot(gd, td)?));
        }
    }
    matrix.threshold(tau);
    let (scores, pairs) = object_scores(&matrix);
    Ok(ObjectMatch { scores, matrix, pairs })
}

/// Lowercased alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Whether `name` occurs in `text` as a whole run of tokens, ignoring case.
pub fn mentions(text: &[String], name: &str) -> bool {
    let name = tokens(name);
    !name.is_empty() && text.windows(name.len()).any(|w| w == name.as_slice())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LayoutMatch {
    pub scores: MatchScores,
    pub matrix: ConfidenceMatrix,
}

/// Scores a zeroed layout confidence matrix: a ground-truth constraint is
/// a true positive when at least one generated constraint maps to it.
pub fn layout_scores(matrix: &ConfidenceMatrix) -> MatchScores {
    let tp = (0..matrix.cols).filter(|&c| (0..matrix.rows).any(|r| matrix.get(r, c) > 0.0)).count();
    let fp = (0..matrix.rows).filter(|&r| (0..matrix.cols).all(|c| matrix.get(r, c) == 0.0)).count();
    MatchScores::from_counts(tp, fp, matrix.cols - tp)
}

/// `object_names` is the vocabulary used to find which objects a
/// ground-truth constraint mentions. A pair is zeroed when the generated
/// constraint mentions none of them, or when its score is below `tau`.
pub fn layout_resemblance(
    generated: &[String],
    truth: &[String],
    object_names: &[String],
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<LayoutMatch, MetricsError> {
    let g: Vec<Vec<f64>> = generated.iter().map(|s| embedder.embed(s)).collect::<Result<_, _>>()?;
    let t: Vec<Vec<f64>> = truth.iter().map(|s| embedder.embed(s)).collect::<Result<_, _>>()?;
    let g_tokens: Vec<Vec<String>> = generated.iter().map(|s| tokens(s)).collect();
    let t_names: Vec<Vec<&String>> = truth
        .iter()
        .map(|s| {
            let toks = tokens(s);
            object_names.iter().filter(|n| mentions(&toks, n)).collect()
        })
        .collect();
    let mut matrix = ConfidenceMatrix::new(g.len(), t.len());
    for r in 0..g.len() {
        for c in 0..t.len() {
            let shares_name = t_names[c].iter().any(|n| mentions(&g_tokens[r], n));
            let s = scaled_dot(&g[r], &t[c])?;
            matrix.set(r, c, if shares_name { s } else { 0.0 });
        }
    }
    matrix.threshold(tau);
    Ok(LayoutMatch { scores: layout_scores(&matrix), matrix })
}

fn cmp_words(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "equals",
        CmpOp::Ne => "differs from",
        CmpOp::Lt => "is less than",
        CmpOp::Le => "is at most",
        CmpOp::Gt => "is greater than",
        CmpOp::Ge => "is at least",
    }
}

fn verbalize_expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Prop(p) => {
            let mut s = String::from("the");
            if let Some(c) = p.component {
                s += &format!(" {}", c.name());
            }
            let prop = match p.property {
                Some(prop) => match prop.name() {
                    "pos" => "position",
                    "rot" => "rotation",
                    other => other,
                },
                None => "value",
            };
            format!("{s} {prop} of {}", p.target)
        }
        ExprKind::Dot { a, b } => format!("the alignment of {} with {}", verbalize_expr(a), verbalize_expr(b)),
        ExprKind::Str { value } => format!("\"{value}\""),
        _ => print_expr(e),
    }
}

/// Template English rendering of an assertion, keeping identifiers verbatim.
pub fn verbalize(a: &Assertion) -> String {
    match &a.kind {
        AssertKind::Compare { lhs, op, rhs } => format!("{} {} {}", verbalize_expr(lhs), cmp_words(*op), verbalize_expr(rhs)),
        AssertKind::Inside { object, region } => format!("{object} is inside {region}"),
        AssertKind::And(x, y) => format!("{} and {}", verbalize(x), verbalize(y)),
        AssertKind::Or(x, y) => format!("either {} or {}", verbalize(x), verbalize(y)),
        AssertKind::Not(x) => format!("it is not the case that {}", verbalize(x)),
    }
}

/// Name and description of each declared object.
pub fn object_items(program: &Program, props: &BTreeMap<String, EntityProps>) -> Vec<ObjectItem> {
    program
        .objects()
        .into_iter()
        .map(|id| {
            let p = props.get(id).cloned().unwrap_or_default();
            let mut description: Vec<String> = [p.color, p.material].into_iter().flatten().collect();
            description.push(category_from_id(id));
            let mut description = description.join(" ");
            if let Some(f) = p.features.filter(|f| !f.is_empty()) {
                description = format!("{description}, {f}");
            }
            ObjectItem { name: id.replace('_', " "), description }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Resemblance {
    pub objects: MatchScores,
    pub layout: MatchScores,
    pub overall: OverallScores,
}

/// Resemblance between two programs: object declarations with their
/// assigned properties, and verbalized assertions.
pub fn program_resemblance(
    generated: &Program,
    truth: &Program,
    embedder: &dyn Embedder,
    tau: f64,
) -> Result<Resemblance, MetricsError> {
    let props = |p: &Program| -> Result<BTreeMap<String, EntityProps>, MetricsError> {
        let typed = typecheck(p).map_err(|e| MetricsError::Program(e.to_string()))?;
        Ok(compile_program(&typed, 0).map_err(|e| MetricsError::Program(e.to_string()))?.props)
    };
    let objects = object_resemblance(&object_items(generated, &props(generated)?), &object_items(truth, &props(truth)?), embedder, tau)?;
    let mut names: Vec<String> = truth.objects().into_iter().chain(generated.objects()).map(String::from).collect();
    names.sort();
    names.dedup();
    let g: Vec<String> = generated.assertions().map(verbalize).collect();
    let t: Vec<String> = truth.assertions().map(verbalize).collect();
    let layout = layout_resemblance(&g, &t, &names, embedder, tau)?;
    Ok(Resemblance { overall: overall_resemblance(&objects.scores, &layout.scores), objects: objects.scores, layout: layout.scores })
}

/// Satisfied and total counts of all compiled constraints, hidden ones
/// included.
pub fn satisfaction_counts(program: &Program, layout: &SceneLayout, seed: u64) -> Result<(usize, usize), MetricsError> {
    let typed = typecheck(program).map_err(|e| MetricsError::Program(e.to_string()))?;
    let compiled = compile_program(&typed, seed).map_err(|e| MetricsError::Program(e.to_string()))?;
    let ctx = EvalContext::new(layout, &compiled.constraints)?;
    let verdicts = compiled.constraints.evaluate_all(&ctx)?;
    Ok((verdicts.iter().filter(|v| **v).count(), verdicts.len()))
}

/// Satisfied over total constraints; 1 when there are none.
pub fn solution_correctness(program: &Program, layout: &SceneLayout, seed: u64) -> Result<f64, MetricsError> {
    let typed = typecheck(program).map_err(|e| MetricsError::Program(e.to_string()))?;
    let compiled = compile_program(&typed, seed).map_err(|e| MetricsError::Program(e.to_string()))?;
    let ctx = EvalContext::new(layout, &compiled.constraints)?;
    Ok(ratio(&compiled.constraints.evaluate_all(&ctx)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::geom::Vec3;
    use crate::scene::{Region, SceneObject};
    use proptest::prelude::*;

    /// Embeds each distinct text as its own basis vector.
    struct Exact(Vec<String>);

    impl Embedder for Exact {
        fn embed(&self, text: &str) -> Result<Vec<f64>, MetricsError> {
            let i = self.0.iter().position(|t| t == text).ok_or_else(|| MetricsError::MissingEmbedding(text.into()))?;
            let mut v = vec![0.0; self.0.len()];
            v[i] = 1.0;
            Ok(v)
        }
    }

    fn brute_force(m: &ConfidenceMatrix) -> f64 {
        fn go(m: &ConfidenceMatrix, r: usize, used: &mut Vec<bool>) -> f64 {
            if r == m.rows {
                return 0.0;
            }
            let mut best = go(m, r + 1, used);
            for c in 0..m.cols {
                if !used[c] {
                    used[c] = true;
                    best = best.max(m.get(r, c) + go(m, r + 1, used));
                    used[c] = false;
                }
            }
            best
        }
        go(m, 0, &mut vec![false; m.cols])
    }

    fn item(s: &str) -> ObjectItem {
        ObjectItem { name: s.into(), description: format!("a {s}") }
    }

    #[test]
    fn identity_and_zero_matrices() {
        let id = ConfidenceMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert_eq!(hungarian_assign(&id), vec![(0, 0), (1, 1), (2, 2)]);
        assert!(hungarian_assign(&ConfidenceMatrix::new(3, 2)).is_empty());
        assert!(hungarian_assign(&ConfidenceMatrix::new(0, 2)).is_empty());
    }

    #[test]
    fn object_counts_follow_generated_side() {
        let names: Vec<String> = ["bed", "lamp", "desk", "a bed", "a lamp", "a desk"].map(String::from).to_vec();
        let e = Exact(names);
        let all = [item("bed"), item("lamp"), item("desk")];
        let same = object_resemblance(&all, &all, &e, 0.7).unwrap();
        assert_eq!(same.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!((same.scores.precision, same.scores.recall, same.scores.f1), (1.0, 1.0, 1.0));

        let m = ConfidenceMatrix::from_rows(&[vec![0.9, 0.8, 0.75], vec![0.8, 0.95, 0.71]]);
        let (s, _) = object_scores(&m);
        assert_eq!((s.tp, s.fp, s.fn_), (2, 0, 1));
        assert_eq!(s.precision, 1.0);
        assert!((s.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.f1 - 0.8).abs() < 1e-15);

        let mut low = m.clone();
        low.threshold(0.99);
        assert_eq!(object_scores(&low).0, MatchScores::from_counts(0, 2, 3));
        assert_eq!(object_scores(&low).0.f1, 0.0);
    }

    #[test]
    fn layout_rule_requires_a_shared_object_name() {
        let e = TrigramEmbedder::default();
        let names = ["sofa".to_string(), "tv".to_string()];
        let gt = vec!["the sofa faces the tv".to_string()];
        let without = vec!["the couch faces the screen".to_string()];
        let r = layout_resemblance(&without, &gt, &names, &e, 0.0).unwrap();
        assert_eq!(r.matrix.get(0, 0), 0.0);
        assert_eq!((r.scores.tp, r.scores.fp, r.scores.fn_), (0, 1, 1));
        let with = vec!["the sofa faces the tv".to_string()];
        let r = layout_resemblance(&with, &gt, &names, &e, 0.7).unwrap();
        assert_eq!(r.scores.f1, 1.0);
        assert!(mentions(&tokens("Coffee-Table near"), "coffee_table"));
        assert!(!mentions(&tokens("sofabed"), "sofa"));
    }

    #[test]
    fn layout_counts_follow_ground_truth_side() {
        // Two generated rows both map to GT column 0; row 2 maps nowhere.
        let m = ConfidenceMatrix::from_rows(&[vec![0.8, 0.0], vec![0.9, 0.0], vec![0.0, 0.0]]);
        let s = layout_scores(&m);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 1, 1));
        assert_eq!((s.precision, s.recall), (0.5, 0.5));
    }

    #[test]
    fn overall_is_pairwise_harmonic() {
        let a = MatchScores { precision: 0.987, recall: 1.0, f1: 1.0, tp: 0, fp: 0, fn_: 0 };
        let b = MatchScores { precision: 0.983, recall: 1.0, f1: 0.0, tp: 0, fp: 0, fn_: 0 };
        let o = overall_resemblance(&a, &b);
        assert!((o.precision - 2.0 * 0.987 * 0.983 / (0.987 + 0.983)).abs() < 1e-15);
        assert!((o.precision - 0.985).abs() < 5e-4);
        assert_eq!((o.recall, o.f1), (1.0, 0.0));
    }

    #[test]
    fn embedders_are_unit_length_and_checked() {
        let v = TrigramEmbedder::default().embed("oak table").unwrap();
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(scaled_dot(&[1.0], &[1.0, 0.0]), Err(MetricsError::Dimension(1, 2))));
        let t = TableEmbedder::parse("a\t3,4\n# note\nb\t0,2\n", "v.tsv").unwrap();
        assert_eq!(t.embed("a").unwrap(), vec![0.6, 0.8]);
        assert!((scaled_dot(&t.embed("a").unwrap(), &t.embed("b").unwrap()).unwrap() - 0.9).abs() < 1e-12);
        assert!(t.embed("c").is_err());
        assert!(matches!(TableEmbedder::parse("a 1,2", "v.tsv"), Err(MetricsError::Format { line: 1, .. })));
    }

    #[test]
    fn correctness_counts_constraints() {
        let p = parse("region room; object a; object b; assert a.pos.x < b.pos.x;").unwrap();
        let layout = |bx: f64| SceneLayout {
            regions: vec![Region::rectangle("room", 0.0, 0.0, 6.0, 6.0, 3.0).unwrap()],
            objects: vec![
                SceneObject::new("a", Vec3::ONE, "room").at(Vec3::new(0.0, 0.5, 0.0)),
                SceneObject::new("b", Vec3::ONE, "room").at(Vec3::new(bx, 0.5, 0.0)),
            ],
            ..Default::default()
        };
        // 1 explicit + 1 pair + 2 support + 2 containment.
        assert_eq!(solution_correctness(&p, &layout(2.0), 0).unwrap(), 1.0);
        assert_eq!(satisfaction_counts(&p, &layout(-0.5), 0).unwrap(), (4, 6));
        let empty = parse("region room;").unwrap();
        assert_eq!(solution_correctness(&empty, &SceneLayout { regions: layout(0.0).regions, ..Default::default() }, 0).unwrap(), 1.0);
    }

    #[test]
    fn verbalized_program_resembles_itself() {
        let src = r#"region room; object sofa; object tv; sofa.color <- "grey";
            assert sofa.pos.x < tv.pos.x - 1; assert dot(sofa.pos, tv.pos) < 0;"#;
        let p = parse(src).unwrap();
        let r = program_resemblance(&p, &p, &TrigramEmbedder::default(), DEFAULT_TAU).unwrap();
        assert_eq!(r.overall.f1, 1.0);
        assert_eq!(verbalize(p.assertions().nth(1).unwrap()), "the alignment of the position of sofa with the position of tv is less than 0");
    }

    fn matrix() -> impl Strategy<Value = ConfidenceMatrix> {
        (0usize..=6, 0usize..=6).prop_flat_map(|(r, c)| {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0..1.0f64], r * c)
                .prop_map(move |data| ConfidenceMatrix { rows: r, cols: c, data, thresholded: false })
        })
    }

    proptest! {
        #[test]
        fn assignment_is_optimal_and_one_to_one(m in matrix()) {
            let pairs = hungarian_assign(&m);
            let rows: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.0).collect();
            let cols: std::collections::BTreeSet<_> = pairs.iter().map(|p| p.1).collect();
            prop_assert_eq!(rows.len(), pairs.len());
            prop_assert_eq!(cols.len(), pairs.len());
            prop_assert!(pairs.iter().all(|&(r, c)| m.get(r, c) > 0.0));
            prop_assert!((assignment_total(&m, &pairs) - brute_force(&m)).abs() < 1e-9);
        }

        #[test]
        fn raising_tau_never_adds_true_positives(m in matrix(), lo in 0.0..1.0f64, hi in 0.0..1.0f64) {
            let (lo, hi) = (lo.min(hi), lo.max(hi));
            let (mut a, mut b) = (m.clone(), m);
            a.threshold(lo);
            b.threshold(hi);
            prop_assert!(object_scores(&b).0.tp <= object_scores(&a).0.tp);
            prop_assert!(layout_scores(&b).tp <= layout_scores(&a).tp);
        }

        #[test]
        fn scores_invariant_under_permutation(m in matrix(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut rp: Vec<usize> = (0..m.rows).collect();
            let mut cp: Vec<usize> = (0..m.cols).collect();
            rp.shuffle(&mut rng);
            cp.shuffle(&mut rng);
            let mut q = ConfidenceMatrix::new(m.rows, m.cols);
            for r in 0..m.rows {
                for c in 0..m.cols {
                    q.set(rp[r], cp[c], m.get(r, c));
                }
            }
            let (s, pairs) = object_scores(&m);
            let (t, qpairs) = object_scores(&q);
            prop_assert!((assignment_total(&m, &pairs) - assignment_total(&q, &qpairs)).abs() < 1e-9);
            prop_assert_eq!(s.tp, t.tp);
            prop_assert_eq!(layout_scores(&m), layout_scores(&q));
        }

        #[test]
        fn f1_bounds(tp in 0usize..20, fp in 0usize..20, fn_ in 0usize..20) {
            let s = MatchScores::from_counts(tp, fp, fn_);
            prop_assert!(s.f1 <= (2.0 * s.precision).min(2.0 * s.recall) + 1e-12);
            prop_assert!(s.f1 <= s.precision.max(s.recall) + 1e-12);
            prop_assert!((0.0..=1.0).contains(&s.f1));
        }
    }
}
