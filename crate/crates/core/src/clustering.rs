//! Average-linkage hierarchical agglomerative clustering.
//!
//! Two word vectors have similarity `1 / (1 + |u - v|)`. The similarity of
//! two clusters is the mean similarity over all cross-cluster pairs, and the
//! agglomeration repeatedly merges the most similar pair of clusters.
//!
//! Leaves are numbered `0..n` and every merge creates the next id, `n`,
//! `n + 1`, .... Equal linkages are resolved in favour of the pair with the
//! smallest `(min id, max id)`. Sums over cluster members are always taken in
//! ascending leaf order (first cluster = smaller id), so the result is fully
//! reproducible.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use crate::embedding::{read_vectors, write_vectors, EmbeddingError};
use crate::matrix::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("clusters overlap on member {0}")]
    Overlap(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("cluster count k = {k} must lie in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("nothing to cluster")]
    NoVectors,
    #[error("assignment line {line}: unknown word `{word}`")]
    UnknownWord { line: usize, word: String },
    #[error("assignment line {line}: duplicate word `{word}`")]
    DuplicateWord { line: usize, word: String },
    #[error("cluster id {id} out of range (k = {k})")]
    IdOutOfRange { id: usize, k: usize },
    #[error("centroid file has no row for cluster {0}")]
    MissingCentroid(usize),
    #[error("{file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("centroid file: {0}")]
    CentroidFormat(#[from] EmbeddingError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

type Result<T> = std::result::Result<T, ClusterError>;

/// Similarity in `(0, 1]`; 1 only for identical vectors.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SimilarityValue(f64);

impl SimilarityValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Similarity between two points. Implementations must be symmetric.
pub trait PairSimilarity: Sync {
    fn similarity(&self, u: &[f64], v: &[f64]) -> f64;
}

/// `1 / (1 + euclidean distance)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct EuclideanSimilarity;

impl PairSimilarity for EuclideanSimilarity {
    fn similarity(&self, u: &[f64], v: &[f64]) -> f64 {
        let sq: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        1.0 / (1.0 + sq.sqrt())
    }
}

pub fn pair_similarity(u: &[f64], v: &[f64]) -> Result<SimilarityValue> {
    if u.len() != v.len() {
        return Err(ClusterError::DimensionMismatch(u.len(), v.len()));
    }
    Ok(SimilarityValue(EuclideanSimilarity.similarity(u, v)))
}

/// Mean pairwise similarity between two disjoint, non-empty sets of rows of
/// `vectors`.
pub fn average_linkage(a: &[usize], b: &[usize], vectors: &Matrix) -> Result<SimilarityValue> {
    if a.is_empty() || b.is_empty() {
        return Err(ClusterError::EmptyCluster(if a.is_empty() { 0 } else { 1 }));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    if let Some(&x) = a.iter().find(|x| b.binary_search(x).is_ok()) {
        return Err(ClusterError::Overlap(x));
    }
    let mut sum = 0.0;
    for &u in &a {
        for &v in &b {
            sum += EuclideanSimilarity.similarity(vectors.row(u), vectors.row(v));
        }
    }
    Ok(SimilarityValue(sum / (a.len() * b.len()) as f64))
}

/// One agglomeration step: clusters `a < b` joined into `id`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
    pub id: usize,
}

/// Merge history over `leaf_count` leaves.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dendrogram {
    pub leaf_count: usize,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Number of clusters left after all recorded merges.
    pub fn remaining(&self) -> usize {
        self.leaf_count - self.merges.len()
    }

    /// Flat labels after applying the first `leaf_count - k` merges. Cluster
    /// ids are numbered by their smallest leaf, ascending.
    pub fn cut(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.leaf_count;
        if k < self.remaining().max(1) || k > n {
            return Err(ClusterError::InvalidK { k, n });
        }
        // representative leaf of every cluster id
        let mut parent: Vec<usize> = (0..n).collect();
        let mut rep: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for m in &self.merges[..n - k] {
            let ra = find(&mut parent, rep[m.a]);
            let rb = find(&mut parent, rep[m.b]);
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi] = lo;
            rep.push(lo);
        }
        let mut label_of_root = HashMap::new();
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let root = find(&mut parent, leaf);
            let next = label_of_root.len();
            labels.push(*label_of_root.entry(root).or_insert(next));
        }
        Ok(labels)
    }
}

/// Agglomerates the rows of `vectors` until `k` clusters remain.
pub fn agglomerate(vectors: &Matrix, k: usize) -> Result<Dendrogram> {
    agglomerate_with(vectors, k, &EuclideanSimilarity)
}

/// [`agglomerate`] with a custom point similarity; the cluster linkage is
/// always the average of point similarities.
pub fn agglomerate_with<S: PairSimilarity>(
    vectors: &Matrix,
    k: usize,
    sim: &S,
) -> Result<Dendrogram> {
    use rayon::prelude::*;

    let n = vectors.rows();
    if n == 0 {
        return Err(ClusterError::NoVectors);
    }
    if k < 1 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }

    // point similarities; also the initial cluster sums
    let mut sums = vec![0.0; n * n];
    sums.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, s) in row.iter_mut().enumerate() {
            if i != j {
                *s = sim.similarity(vectors.row(i), vectors.row(j));
            }
        }
    });
    let point_sim = sums.clone();

    let mut state = AgglomerationState {
        n,
        active: vec![true; n],
        ids: (0..n).collect(),
        members: (0..n).map(|i| vec![i]).collect(),
        sums,
        best: vec![0; n],
        best_val: vec![f64::NEG_INFINITY; n],
    };
    for i in 0..n {
        state.refresh_row(i);
    }

    let mut merges = Vec::with_capacity(n - k);
    for step in 0..n - k {
        let (x, y, similarity) = state.select(&point_sim);
        let id = n + step;
        let (ida, idb) = (state.ids[x], state.ids[y]);
        merges.push(Merge {
            a: ida.min(idb),
            b: ida.max(idb),
            similarity,
            id,
        });
        state.merge(x, y, id);
    }
    Ok(Dendrogram {
        leaf_count: n,
        merges,
    })
}

struct AgglomerationState {
    n: usize,
    active: Vec<bool>,
    /// cluster id held by each slot
    ids: Vec<usize>,
    /// sorted leaves of each slot
    members: Vec<Vec<usize>>,
    /// running sum of point similarities between slots
    sums: Vec<f64>,
    best: Vec<usize>,
    best_val: Vec<f64>,
}

impl AgglomerationState {
    fn approx(&self, i: usize, j: usize) -> f64 {
        self.sums[i * self.n + j] / (self.members[i].len() * self.members[j].len()) as f64
    }

    fn refresh_row(&mut self, i: usize) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for j in 0..self.n {
            if j != i && self.active[j] {
                let v = self.approx(i, j);
                if v > best.1 {
                    best = (j, v);
                }
            }
        }
        self.best[i] = best.0;
        self.best_val[i] = best.1;
    }

    /// Linkage summed in ascending leaf order, smaller cluster id first.
    fn exact(&self, i: usize, j: usize, point_sim: &[f64]) -> f64 {
        let (first, second) = if self.ids[i] < self.ids[j] {
            (i, j)
        } else {
            (j, i)
        };
        let mut sum = 0.0;
        for &u in &self.members[first] {
            let row = &point_sim[u * self.n..(u + 1) * self.n];
            for &v in &self.members[second] {
                sum += row[v];
            }
        }
        sum / (self.members[first].len() * self.members[second].len()) as f64
    }

    /// Picks the pair to merge. Running sums locate the maximum; every pair
    /// within rounding distance of it is re-evaluated exactly so the choice
    /// matches a direct evaluation of every linkage.
    fn select(&self, point_sim: &[f64]) -> (usize, usize, f64) {
        let top = (0..self.n)
            .filter(|&i| self.active[i])
            .map(|i| self.best_val[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let threshold = top - top.abs() * 1e-9;

        let mut chosen: Option<(f64, (usize, usize), usize, usize)> = None;
        for i in 0..self.n {
            if !self.active[i] || self.best_val[i] < threshold {
                continue;
            }
            for j in 0..self.n {
                if j == i || !self.active[j] || self.approx(i, j) < threshold {
                    continue;
                }
                let key = (self.ids[i].min(self.ids[j]), self.ids[i].max(self.ids[j]));
                let value = self.exact(i, j, point_sim);
                let better = match &chosen {
                    None => true,
                    Some((v, k, _, _)) => value > *v || (value == *v && key < *k),
                };
                if better {
                    chosen = Some((value, key, i, j));
                }
            }
        }
        let (value, _, i, j) = chosen.expect("at least two active clusters");
        (i, j, value)
    }

    fn merge(&mut self, x: usize, y: usize, id: usize) {
        let (keep, gone) = if x < y { (x, y) } else { (y, x) };
        let n = self.n;
        self.active[gone] = false;
        for z in 0..n {
            if self.active[z] && z != keep {
                let s = self.sums[keep * n + z] + self.sums[gone * n + z];
                self.sums[keep * n + z] = s;
                self.sums[z * n + keep] = s;
            }
        }
        let other = std::mem::take(&mut self.members[gone]);
        let mine = std::mem::take(&mut self.members[keep]);
        self.members[keep] = merge_sorted(&mine, &other);
        self.ids[keep] = id;

        self.refresh_row(keep);
        for z in 0..n {
            if !self.active[z] || z == keep {
                continue;
            }
            if self.best[z] == keep || self.best[z] == gone {
                self.refresh_row(z);
            } else {
                let v = self.approx(z, keep);
                if v > self.best_val[z] {
                    self.best[z] = keep;
                    self.best_val[z] = v;
                }
            }
        }
    }
}

fn merge_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Mean of the member rows of every cluster, summed in ascending row order.
pub fn compute_centroids(assign: &[usize], vectors: &Matrix) -> Result<Matrix> {
    let k = assign.iter().map(|&c| c + 1).max().unwrap_or(0);
    let mut centroids = Matrix::zeros(k, vectors.cols());
    let mut counts = vec![0usize; k];
    for (row, &c) in assign.iter().enumerate() {
        counts[c] += 1;
        for (acc, &x) in centroids.row_mut(c).iter_mut().zip(vectors.row(row)) {
            *acc += x;
        }
    }
    for (c, &m) in counts.iter().enumerate() {
        if m == 0 {
            return Err(ClusterError::EmptyCluster(c));
        }
        centroids.row_mut(c).iter_mut().for_each(|x| *x /= m as f64);
    }
    Ok(centroids)
}

/// Flat clustering of a set of words with per-cluster centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub words: Vec<String>,
    /// cluster of `words[i]`
    pub assign: Vec<usize>,
    pub centroids: Matrix,
    pub member_counts: Vec<usize>,
}

impl ClusterAssignment {
    /// Builds an assignment from labels, computing centroids from `vectors`
    /// (one row per word).
    pub fn from_labels(words: Vec<String>, assign: Vec<usize>, vectors: &Matrix) -> Result<Self> {
        assert_eq!(words.len(), assign.len());
        assert_eq!(words.len(), vectors.rows());
        let centroids = compute_centroids(&assign, vectors)?;
        let mut member_counts = vec![0; centroids.rows()];
        for &c in &assign {
            member_counts[c] += 1;
        }
        Ok(ClusterAssignment {
            words,
            assign,
            centroids,
            member_counts,
        })
    }

    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    /// Cluster of `word`, if it was clustered.
    pub fn cluster_of(&self, word: &str) -> Option<usize> {
        self.words
            .iter()
            .position(|w| w == word)
            .map(|i| self.assign[i])
    }

    /// Members of cluster `c`, in word order.
    pub fn members(&self, c: usize) -> Vec<&str> {
        self.words
            .iter()
            .zip(&self.assign)
            .filter(|(_, &a)| a == c)
            .map(|(w, _)| w.as_str())
            .collect()
    }
}

/// Clusters the rows of `vectors` (one per word) into `k` groups.
pub fn hac_cluster(
    words: &[String],
    vectors: &Matrix,
    k: usize,
) -> Result<(Dendrogram, ClusterAssignment)> {
    assert_eq!(words.len(), vectors.rows());
    let dendrogram = agglomerate(vectors, k)?;
    let labels = dendrogram.cut(k)?;
    let assignment = ClusterAssignment::from_labels(words.to_vec(), labels, vectors)?;
    Ok((dendrogram, assignment))
}

fn io_error(path: &Path) -> impl Fn(io::Error) -> ClusterError + '_ {
    move |source| ClusterError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `word<TAB>cluster_id` lines and a companion centroid file whose
/// rows are named `cluster_<id>`.
pub fn save_assignment(
    assignment: &ClusterAssignment,
    path: impl AsRef<Path>,
    centroid_path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path).map_err(io_error(path))?);
    for (word, c) in assignment.words.iter().zip(&assignment.assign) {
        writeln!(w, "{word}\t{c}").map_err(io_error(path))?;
    }
    w.flush().map_err(io_error(path))?;

    let cpath = centroid_path.as_ref();
    let mut w = BufWriter::new(File::create(cpath).map_err(io_error(cpath))?);
    let names: Vec<String> = (0..assignment.k())
        .map(|c| format!("cluster_{c}"))
        .collect();
    write_vectors(&mut w, &names, &assignment.centroids)
        .and_then(|_| w.flush())
        .map_err(io_error(cpath))
}

/// Reads files written by [`save_assignment`]. When `known_words` is given,
/// every assigned word must be in it.
pub fn load_assignment(
    path: impl AsRef<Path>,
    centroid_path: impl AsRef<Path>,
    known_words: Option<&crate::corpus::Vocabulary>,
) -> Result<ClusterAssignment> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let mut words = Vec::new();
    let mut assign = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: &str| ClusterError::Parse {
            file: path.display().to_string(),
            line: line_no,
            message: message.to_string(),
        };
        let (word, id) = line
            .split_once('\t')
            .ok_or_else(|| parse_err("expected `word<TAB>cluster_id`"))?;
        let id: usize = id
            .trim()
            .parse()
            .map_err(|_| parse_err("cluster id is not an integer"))?;
        if let Some(vocab) = known_words {
            if vocab.id(word).is_none() {
                return Err(ClusterError::UnknownWord {
                    line: line_no,
                    word: word.to_string(),
                });
            }
        }
        if !seen.insert(word.to_string()) {
            return Err(ClusterError::DuplicateWord {
                line: line_no,
                word: word.to_string(),
            });
        }
        words.push(word.to_string());
        assign.push(id);
    }
    let k = assign.iter().map(|&c| c + 1).max().unwrap_or(0);

    let cpath = centroid_path.as_ref();
    let file = File::open(cpath).map_err(io_error(cpath))?;
    let (names, rows) = read_vectors(BufReader::new(file))?;
    let mut centroids = Matrix::zeros(k, rows.cols());
    let mut present = vec![false; k];
    for (row, name) in names.iter().enumerate() {
        let id: usize = name
            .strip_prefix("cluster_")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ClusterError::Parse {
                file: cpath.display().to_string(),
                line: row + 2,
                message: format!("expected a `cluster_<id>` row name, found `{name}`"),
            })?;
        if id >= k {
            return Err(ClusterError::IdOutOfRange { id, k });
        }
        centroids.row_mut(id).copy_from_slice(rows.row(row));
        present[id] = true;
    }
    if let Some(missing) = present.iter().position(|&p| !p) {
        return Err(ClusterError::MissingCentroid(missing));
    }
    let mut member_counts = vec![0; k];
    for &c in &assign {
        member_counts[c] += 1;
    }
    if let Some(empty) = member_counts.iter().position(|&m| m == 0) {
        return Err(ClusterError::EmptyCluster(empty));
    }
    Ok(ClusterAssignment {
        words,
        assign,
        centroids,
        member_counts,
    })
}
