//! Labeled plane trees and the Cori-Vauquelin-Schaeffer bijection.
//!
//! A labeled plane tree is stored as its contour word (`true` = step down to
//! a new child) and the labels of its vertices in preorder. Labels are
//! normalized so that the minimum is 1; they are then the distances to the
//! extra pointed vertex in the associated quadrangulation.
//!
//! The `ltree-v1` text format is a single line
//!
//! ```text
//! ltree-v1 <word> <steps>
//! ```
//!
//! where `<word>` is a balanced parenthesis word of length `2n` and
//! `<steps>` has the same length, holding the label change (`-`, `0` or
//! `+`) of each contour step. A `)` step must carry the opposite change of
//! its matching `(`.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::planar_map::{
    bfs_distances, Dart, DistanceField, FaceId, MapError, RootedQuadrangulation, Vertex,
};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchaefferError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("face {face} has corner distances {dists:?}, which match no Schaeffer pattern")]
    PatternViolation { face: FaceId, dists: [u32; 4] },
    #[error("a labeled tree needs at least one edge")]
    EmptyTree,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("ltree-v1 parse error: {0}")]
    Parse(String),
}

/// Orientation of the root edge relative to the distance labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Sign {
    /// Root dart leaves the endpoint closer to the pointed vertex.
    Plus,
    /// Root dart enters the endpoint closer to the pointed vertex.
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

/// Plane tree with integer labels differing by at most one along edges.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabeledPlaneTree {
    word: Vec<bool>,
    labels: Vec<i64>,
}

impl LabeledPlaneTree {
    pub fn new(word: Vec<bool>, labels: Vec<i64>) -> Result<Self, SchaefferError> {
        let n = word.len() / 2;
        if n == 0 {
            return Err(SchaefferError::EmptyTree);
        }
        check_dyck(&word)?;
        if labels.len() != n + 1 {
            return Err(SchaefferError::InvalidTree(format!(
                "{} labels for {} vertices",
                labels.len(),
                n + 1
            )));
        }
        let tree = LabeledPlaneTree { word, labels };
        for (v, p) in tree.parents().iter().enumerate() {
            if let Some(p) = p {
                if (tree.labels[v] - tree.labels[*p as usize]).abs() > 1 {
                    return Err(SchaefferError::InvalidTree(format!(
                        "label jump on edge {p}-{v}"
                    )));
                }
            }
        }
        let min = *tree.labels.iter().min().expect("nonempty");
        let labels = tree.labels.iter().map(|l| l - min + 1).collect();
        Ok(LabeledPlaneTree { labels, ..tree })
    }

    /// Builds a tree from its contour word and, for every non-root vertex in
    /// preorder, the label increment from its parent.
    pub fn from_increments(word: Vec<bool>, increments: &[i8]) -> Result<Self, SchaefferError> {
        let n = word.len() / 2;
        if increments.len() != n {
            return Err(SchaefferError::InvalidTree(format!(
                "{} increments for {n} edges",
                increments.len()
            )));
        }
        check_dyck(&word)?;
        let mut labels = vec![0i64; n + 1];
        let mut stack = vec![0usize];
        let mut next = 1;
        for &down in &word {
            if down {
                let parent = *stack.last().expect("balanced");
                labels[next] = labels[parent] + increments[next - 1] as i64;
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
            }
        }
        Self::new(word, labels)
    }

    pub fn n_edges(&self) -> usize {
        self.word.len() / 2
    }

    pub fn n_vertices(&self) -> usize {
        self.labels.len()
    }

    pub fn word(&self) -> &[bool] {
        &self.word
    }

    /// Labels in preorder, minimum 1.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Label increments of the non-root vertices, in preorder.
    pub fn increments(&self) -> Vec<i8> {
        self.parents()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(v, p)| (self.labels[v] - self.labels[p.expect("non-root") as usize]) as i8)
            .collect()
    }

    pub fn parents(&self) -> Vec<Option<u32>> {
        let mut parents = vec![None; self.n_vertices()];
        let mut stack = vec![0u32];
        let mut next = 1u32;
        for &down in &self.word {
            if down {
                parents[next as usize] = stack.last().copied();
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
            }
        }
        parents
    }

    /// Vertex at each of the `2n` corners, in contour order starting from
    /// the root corner.
    pub fn contour(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.word.len());
        let mut stack = vec![0u32];
        let mut next = 1u32;
        out.push(0);
        for &down in &self.word[..self.word.len() - 1] {
            if down {
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
            }
            out.push(*stack.last().expect("balanced"));
        }
        out
    }

    pub fn to_ltree(&self) -> String {
        let mut word = String::with_capacity(self.word.len());
        let mut steps = String::with_capacity(self.word.len());
        let contour = self.contour();
        for (i, &down) in self.word.iter().enumerate() {
            word.push(if down { '(' } else { ')' });
            let from = self.labels[contour[i] as usize];
            let to = self.labels[contour[(i + 1) % contour.len()] as usize];
            steps.push(match to - from {
                -1 => '-',
                0 => '0',
                _ => '+',
            });
        }
        format!("ltree-v1 {word} {steps}")
    }

    pub fn from_ltree(text: &str) -> Result<Self, SchaefferError> {
        let fields: Vec<&str> = text.split_whitespace().collect();
        let [magic, word, steps] = fields[..] else {
            return Err(SchaefferError::Parse(
                "expected `ltree-v1 <word> <steps>`".into(),
            ));
        };
        if magic != "ltree-v1" {
            return Err(SchaefferError::Parse(format!("unknown header `{magic}`")));
        }
        if word.chars().count() != steps.chars().count() {
            return Err(SchaefferError::Parse(
                "word and steps differ in length".into(),
            ));
        }
        let word_bits: Vec<bool> = word
            .chars()
            .map(|c| match c {
                '(' => Ok(true),
                ')' => Ok(false),
                _ => Err(SchaefferError::Parse(format!("bad word character `{c}`"))),
            })
            .collect::<Result<_, _>>()?;
        let step_vals: Vec<i8> = steps
            .chars()
            .map(|c| match c {
                '-' => Ok(-1),
                '0' => Ok(0),
                '+' => Ok(1),
                _ => Err(SchaefferError::Parse(format!("bad step character `{c}`"))),
            })
            .collect::<Result<_, _>>()?;
        check_dyck(&word_bits)?;
        let mut increments = Vec::new();
        let mut open = Vec::new();
        for (&down, &s) in word_bits.iter().zip(&step_vals) {
            if down {
                increments.push(s);
                open.push(s);
            } else if open.pop() != Some(-s) {
                return Err(SchaefferError::Parse(
                    "a `)` step does not undo its `(` step".into(),
                ));
            }
        }
        Self::from_increments(word_bits, &increments)
    }
}

fn check_dyck(word: &[bool]) -> Result<(), SchaefferError> {
    let mut height = 0i64;
    for &down in word {
        height += if down { 1 } else { -1 };
        if height < 0 {
            return Err(SchaefferError::InvalidTree(
                "contour word goes below the root".into(),
            ));
        }
    }
    if height != 0 || word.len() % 2 == 1 {
        return Err(SchaefferError::InvalidTree(
            "contour word is not balanced".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArcKind {
    /// The map edge between an `R` corner and the following `R + 1` corner.
    Edge,
    /// The diagonal between the two `R + 1` corners.
    Diagonal,
}

/// The arc a face contributes to a Schaeffer tree, given by the two face
/// darts whose origins it joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeArc {
    pub face: FaceId,
    pub from: Dart,
    pub to: Dart,
    pub kind: ArcKind,
}

impl TreeArc {
    /// Same arc, regardless of endpoint order.
    pub fn same_as(&self, other: &TreeArc) -> bool {
        self.kind == other.kind
            && ((self.from, self.to) == (other.from, other.to)
                || (self.from, self.to) == (other.to, other.from))
    }
}

/// The arc of face `f` for distances `dist`: corners read counterclockwise
/// as `(R, R+1, R, R-1)` give the edge `(R, R+1)`, and `(R, R+1, R, R+1)`
/// gives the diagonal `(R+1, R+1)`.
pub fn face_arc(
    map: &RootedQuadrangulation,
    f: FaceId,
    dist: &[u32],
) -> Result<TreeArc, SchaefferError> {
    let darts = map.face_darts(f);
    let d: [u32; 4] = darts.map(|x| dist[map.origin(x) as usize]);
    face_arc_from_pattern(f, darts, d)
}

pub(crate) fn face_arc_from_pattern(
    f: FaceId,
    darts: [Dart; 4],
    d: [u32; 4],
) -> Result<TreeArc, SchaefferError> {
    let dd = d.map(|x| x as i64);
    for i in 0..4 {
        let (a, b, c, e) = (dd[i], dd[(i + 1) % 4], dd[(i + 2) % 4], dd[(i + 3) % 4]);
        if b == a + 1 && c == a {
            if e == a - 1 {
                return Ok(TreeArc {
                    face: f,
                    from: darts[i],
                    to: darts[(i + 1) % 4],
                    kind: ArcKind::Edge,
                });
            }
            if e == a + 1 {
                return Ok(TreeArc {
                    face: f,
                    from: darts[(i + 1) % 4],
                    to: darts[(i + 3) % 4],
                    kind: ArcKind::Diagonal,
                });
            }
        }
    }
    Err(SchaefferError::PatternViolation { face: f, dists: d })
}

/// The Schaeffer tree of a map seen from `base`: one arc per face.
#[derive(Debug, Clone)]
pub struct SchaefferTree {
    pub base: Vertex,
    pub dist: DistanceField,
    pub arcs: Vec<TreeArc>,
}

impl SchaefferTree {
    pub fn endpoints(&self, map: &RootedQuadrangulation, arc: &TreeArc) -> (Vertex, Vertex) {
        (map.origin(arc.from), map.origin(arc.to))
    }

    /// Acyclic and spanning exactly the vertices other than `base`.
    pub fn is_spanning_tree(&self, map: &RootedQuadrangulation) -> bool {
        let nv = map.n_vertices();
        if self.arcs.len() + 2 != nv {
            return false;
        }
        let mut uf = UnionFind::new(nv);
        for arc in &self.arcs {
            let (a, b) = self.endpoints(map, arc);
            if a == self.base || b == self.base || !uf.union(a as usize, b as usize) {
                return false;
            }
        }
        true
    }

    /// Every arc lies in the face it was chosen from.
    pub fn arcs_are_face_local(&self, map: &RootedQuadrangulation) -> bool {
        self.arcs
            .iter()
            .all(|a| map.face(a.from) == a.face && map.face(a.to) == a.face && a.from != a.to)
    }
}

pub fn schaeffer_tree(
    map: &RootedQuadrangulation,
    base: Vertex,
) -> Result<SchaefferTree, SchaefferError> {
    let dist = bfs_distances(map, base)?;
    schaeffer_tree_with(map, dist)
}

/// Schaeffer construction driven by an arbitrary distance-like field.
pub fn schaeffer_tree_with(
    map: &RootedQuadrangulation,
    dist: DistanceField,
) -> Result<SchaefferTree, SchaefferError> {
    let arcs = (0..map.n_faces() as FaceId)
        .map(|f| face_arc(map, f, &dist.dist))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SchaefferTree {
        base: dist.base,
        dist,
        arcs,
    })
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the classes of `a` and `b`; false if they were already equal.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// A rooted quadrangulation with its pointed vertex, as built from a tree.
#[derive(Debug, Clone)]
pub struct PointedQuadrangulation {
    pub map: RootedQuadrangulation,
    pub pointed: Vertex,
    /// Map vertex of each tree vertex (tree vertices in preorder).
    pub tree_vertex: Vec<Vertex>,
}

/// Builds the pointed rooted quadrangulation of a labeled tree.
///
/// Each corner is joined to the next corner in contour order carrying a
/// label one less, and corners of label 1 are joined to the pointed vertex.
/// The root edge is the arc of the root corner.
pub fn cvs_forward(tree: &LabeledPlaneTree, sign: Sign) -> PointedQuadrangulation {
    let m = tree.word.len();
    let contour = tree.contour();
    let lab: Vec<usize> = contour
        .iter()
        .map(|&v| tree.labels[v as usize] as usize)
        .collect();
    let max_label = *lab.iter().max().expect("nonempty");

    // successor corner of each corner, NONE for the pointed vertex
    let mut succ = vec![NONE; m];
    let mut last = vec![NONE; max_label + 1];
    for j in (0..2 * m).rev() {
        let i = j % m;
        if j < m && lab[i] > 1 {
            succ[i] = last[lab[i] - 1];
        }
        last[lab[i]] = i as u32;
    }

    let mut incoming: Vec<Vec<u32>> = vec![Vec::new(); m];
    for (k, &s) in succ.iter().enumerate() {
        if s != NONE {
            incoming[s as usize].push(k as u32);
        }
    }
    for (i, list) in incoming.iter_mut().enumerate() {
        list.sort_by_key(|&k| (k as usize + m - i - 1) % m);
    }

    let mut corners_of: Vec<Vec<u32>> = vec![Vec::new(); tree.n_vertices()];
    for (i, &v) in contour.iter().enumerate() {
        corners_of[v as usize].push(i as u32);
    }

    let mut sigma = vec![NONE; 2 * m];
    let mut link = |seq: &[Dart]| {
        for (j, &d) in seq.iter().enumerate() {
            sigma[d as usize] = seq[(j + 1) % seq.len()];
        }
    };
    let mut seq = Vec::new();
    for corners in &corners_of {
        seq.clear();
        for &i in corners.iter().rev() {
            seq.push(2 * i);
            seq.extend(incoming[i as usize].iter().map(|&k| 2 * k + 1));
        }
        link(&seq);
    }
    seq.clear();
    seq.extend(
        (0..m as u32)
            .filter(|&i| lab[i as usize] == 1)
            .map(|i| 2 * i + 1),
    );
    link(&seq);
    let pointed_dart = seq[0];

    let root = match sign {
        Sign::Plus => 1,
        Sign::Minus => 0,
    };
    let map = RootedQuadrangulation::from_sigma(sigma, root)
        .expect("the bijection builds a valid quadrangulation");
    let tree_vertex = corners_of.iter().map(|c| map.origin(2 * c[0])).collect();
    let pointed = map.origin(pointed_dart);
    PointedQuadrangulation {
        map,
        pointed,
        tree_vertex,
    }
}

/// Recovers the labeled tree and root sign of a pointed rooted map.
pub fn cvs_inverse(
    map: &RootedQuadrangulation,
    pointed: Vertex,
) -> Result<(LabeledPlaneTree, Sign), SchaefferError> {
    let sch = schaeffer_tree(map, pointed)?;
    let dist = &sch.dist;
    let mut partner = vec![NONE; map.n_darts()];
    for arc in &sch.arcs {
        partner[arc.from as usize] = arc.to;
        partner[arc.to as usize] = arc.from;
    }
    // next tree half-arc clockwise after the slot of dart `d`; a half-arc
    // sits in the face corner following its dart counterclockwise
    let next_cw = |d: Dart| {
        let mut c = map.sigma_inv(d);
        while partner[c as usize] == NONE {
            c = map.sigma_inv(c);
        }
        c
    };

    let r = map.root();
    let (sign, root_out) = if dist.get(map.origin(r)) < dist.get(map.target(r)) {
        (Sign::Plus, r ^ 1)
    } else {
        (Sign::Minus, r)
    };
    let root_vertex = map.origin(root_out);
    if root_vertex == pointed {
        return Err(SchaefferError::InvalidTree(
            "root edge points at the pointed vertex from above".into(),
        ));
    }
    let first = next_cw(root_out);

    let mut word = Vec::with_capacity(2 * sch.arcs.len());
    let mut labels = Vec::with_capacity(sch.arcs.len() + 1);
    labels.push(dist.get(root_vertex) as i64);
    struct Frame {
        cur: Dart,
        stop: Dart,
        fresh: bool,
    }
    let mut stack = vec![Frame {
        cur: first,
        stop: first,
        fresh: true,
    }];
    while let Some(top) = stack.last_mut() {
        if !top.fresh && top.cur == top.stop {
            stack.pop();
            if !stack.is_empty() {
                word.push(false);
            }
            continue;
        }
        top.fresh = false;
        let h = top.cur;
        top.cur = next_cw(h);
        let a = partner[h as usize];
        word.push(true);
        labels.push(dist.get(map.origin(a)) as i64);
        stack.push(Frame {
            cur: next_cw(a),
            stop: a,
            fresh: false,
        });
    }
    Ok((LabeledPlaneTree::new(word, labels)?, sign))
}

/// Uniform plane tree with `n` edges, by the cycle lemma.
pub fn sample_dyck_word<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<bool> {
    let mut steps: Vec<bool> = std::iter::repeat_n(true, n)
        .chain(std::iter::repeat_n(false, n + 1))
        .collect();
    steps.shuffle(rng);
    // rotate to start right after the first minimum of the prefix sums
    let (mut h, mut min, mut arg) = (0i64, 0i64, 0usize);
    for (i, &s) in steps.iter().enumerate() {
        h += if s { 1 } else { -1 };
        if h < min {
            min = h;
            arg = i + 1;
        }
    }
    let len = steps.len();
    steps.rotate_left(arg % len);
    steps.pop();
    steps
}

/// Uniform labeled plane tree with `n >= 1` edges.
pub fn sample_labeled_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> LabeledPlaneTree {
    assert!(n >= 1, "a labeled tree needs at least one edge");
    let word = sample_dyck_word(n, rng);
    let increments: Vec<i8> = (0..n).map(|_| rng.gen_range(-1i8..=1)).collect();
    LabeledPlaneTree::from_increments(word, &increments).expect("sampled tree is valid")
}

/// Uniform pointed rooted quadrangulation with `n` faces.
pub fn sample_pointed_quadrangulation<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> (LabeledPlaneTree, Sign, PointedQuadrangulation) {
    let tree = sample_labeled_tree(n, rng);
    let sign = if rng.gen::<bool>() {
        Sign::Plus
    } else {
        Sign::Minus
    };
    let pq = cvs_forward(&tree, sign);
    (tree, sign, pq)
}

/// Uniform rooted quadrangulation with `n` faces; every such map has
/// `n + 2` vertices, so forgetting the pointed vertex keeps uniformity.
pub fn sample_quadrangulation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RootedQuadrangulation {
    sample_pointed_quadrangulation(n, rng).2.map
}

/// Every Dyck word with `n` up steps.
pub fn all_dyck_words(n: usize) -> Vec<Vec<bool>> {
    fn rec(n: usize, up: usize, down: usize, cur: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        if up == n && down == n {
            out.push(cur.clone());
            return;
        }
        if up < n {
            cur.push(true);
            rec(n, up + 1, down, cur, out);
            cur.pop();
        }
        if down < up {
            cur.push(false);
            rec(n, up, down + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, 0, 0, &mut Vec::new(), &mut out);
    out
}

/// Every labeled tree with `n` edges (`Cat(n) 3^n` of them).
pub fn all_labeled_trees(n: usize) -> Vec<LabeledPlaneTree> {
    let mut out = Vec::new();
    for word in all_dyck_words(n) {
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let incs: Vec<i8> = (0..n)
                .map(|_| {
                    let d = (c % 3) as i8 - 1;
                    c /= 3;
                    d
                })
                .collect();
            out.push(LabeledPlaneTree::from_increments(word.clone(), &incs).expect("valid"));
        }
    }
    out
}
