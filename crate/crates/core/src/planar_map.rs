//! Rooted quadrangulations stored as combinatorial maps.
//!
//! Darts are dense integers `0..2E`. The edge involution is implicit: the
//! opposite of dart `d` is `d ^ 1`. The vertex permutation `sigma` sends a
//! dart to the next dart counterclockwise around its origin, and the face
//! permutation is `phi = sigma⁻¹ ∘ alpha`, which walks each face with the
//! face on its left, i.e. visits the corners of a face in counterclockwise
//! order. Every face-pattern rule elsewhere in the crate reads corners in
//! this order.

use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

pub type Dart = u32;
pub type Vertex = u32;
pub type FaceId = u32;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("dart table is empty")]
    Empty,
    #[error("dart {0} is out of range or listed twice")]
    BadDart(u32),
    #[error("alpha is not a fixed-point-free involution at dart {0}")]
    NotInvolution(Dart),
    #[error("sigma is not a permutation of the darts")]
    NotPermutation,
    #[error("face through dart {dart} has degree {degree}, expected 4")]
    FaceNotQuad { dart: Dart, degree: usize },
    #[error("the underlying graph is not connected")]
    NotConnected,
    #[error("odd cycle through vertex {0}")]
    OddCycle(Vertex),
    #[error("Euler formula violated: V - E + F = {0}")]
    EulerViolation(i64),
    #[error("root dart {0} is out of range")]
    BadRoot(Dart),
    #[error("vertex {0} is out of range")]
    BadVertex(Vertex),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A planar map whose faces all have degree four, with a root dart.
#[derive(Debug, Clone)]
pub struct RootedQuadrangulation {
    sigma: Vec<Dart>,
    sigma_inv: Vec<Dart>,
    root: Dart,
    vertex_of: Vec<Vertex>,
    face_of: Vec<FaceId>,
    vertex_dart: Vec<Dart>,
    face_dart: Vec<Dart>,
}

impl RootedQuadrangulation {
    /// Builds a map from its vertex rotation, with `alpha(d) = d ^ 1`.
    pub fn from_sigma(sigma: Vec<Dart>, root: Dart) -> Result<Self, MapError> {
        let n = sigma.len();
        if n == 0 {
            return Err(MapError::Empty);
        }
        if n % 2 == 1 {
            return Err(MapError::NotInvolution((n - 1) as Dart));
        }
        if root as usize >= n {
            return Err(MapError::BadRoot(root));
        }
        let mut sigma_inv = vec![NONE; n];
        for (d, &s) in sigma.iter().enumerate() {
            if s as usize >= n || sigma_inv[s as usize] != NONE {
                return Err(MapError::NotPermutation);
            }
            sigma_inv[s as usize] = d as Dart;
        }

        let vertex_dart = cycle_representatives(n, |d| sigma[d as usize]);
        let mut vertex_of = vec![0; n];
        for (v, &start) in vertex_dart.iter().enumerate() {
            walk_cycle(
                start,
                |d| sigma[d as usize],
                |d| vertex_of[d as usize] = v as Vertex,
            );
        }

        let phi = |d: Dart| sigma_inv[(d ^ 1) as usize];
        let face_dart = cycle_representatives(n, phi);
        let mut face_of = vec![0; n];
        for (f, &start) in face_dart.iter().enumerate() {
            let mut degree = 0;
            walk_cycle(start, phi, |d| {
                face_of[d as usize] = f as FaceId;
                degree += 1;
            });
            if degree != 4 {
                return Err(MapError::FaceNotQuad {
                    dart: start,
                    degree,
                });
            }
        }

        let map = RootedQuadrangulation {
            sigma,
            sigma_inv,
            root,
            vertex_of,
            face_of,
            vertex_dart,
            face_dart,
        };
        map.check_graph()?;
        Ok(map)
    }

    /// Builds a map from an explicit `(dart, alpha(dart), sigma(dart))`
    /// table with arbitrary dart names. Darts are renamed so that opposite
    /// darts become `2k, 2k + 1`; the renaming follows the order of first
    /// appearance in the table.
    pub fn build_map(table: &[(u32, u32, u32)], root: u32) -> Result<Self, MapError> {
        if table.is_empty() {
            return Err(MapError::Empty);
        }
        let n = table.len();
        let mut row_of = std::collections::HashMap::with_capacity(n);
        for (i, &(d, _, _)) in table.iter().enumerate() {
            if row_of.insert(d, i).is_some() {
                return Err(MapError::BadDart(d));
            }
        }
        let mut new_name = vec![NONE; n];
        let mut next = 0u32;
        for (i, &(d, a, _)) in table.iter().enumerate() {
            let j = *row_of.get(&a).ok_or(MapError::BadDart(a))?;
            if j == i || table[j].1 != d {
                return Err(MapError::NotInvolution(d));
            }
            if new_name[i] == NONE {
                new_name[i] = next;
                new_name[j] = next + 1;
                next += 2;
            }
        }
        let mut sigma = vec![NONE; n];
        for (i, &(_, _, s)) in table.iter().enumerate() {
            let j = *row_of.get(&s).ok_or(MapError::NotPermutation)?;
            sigma[new_name[i] as usize] = new_name[j];
        }
        let root_row = *row_of.get(&root).ok_or(MapError::BadRoot(root))?;
        Self::from_sigma(sigma, new_name[root_row])
    }

    fn check_graph(&self) -> Result<(), MapError> {
        let nv = self.n_vertices();
        let mut color = vec![u8::MAX; nv];
        let mut queue = VecDeque::new();
        color[0] = 0;
        queue.push_back(0 as Vertex);
        let mut seen = 1;
        while let Some(v) = queue.pop_front() {
            for d in self.rotation(v) {
                let w = self.target(d);
                if color[w as usize] == u8::MAX {
                    color[w as usize] = 1 - color[v as usize];
                    seen += 1;
                    queue.push_back(w);
                } else if color[w as usize] == color[v as usize] {
                    return Err(MapError::OddCycle(v));
                }
            }
        }
        if seen != nv {
            return Err(MapError::NotConnected);
        }
        let chi = nv as i64 - self.n_edges() as i64 + self.n_faces() as i64;
        if chi != 2 {
            return Err(MapError::EulerViolation(chi));
        }
        Ok(())
    }

    pub fn n_darts(&self) -> usize {
        self.sigma.len()
    }
    pub fn n_edges(&self) -> usize {
        self.sigma.len() / 2
    }
    pub fn n_vertices(&self) -> usize {
        self.vertex_dart.len()
    }
    pub fn n_faces(&self) -> usize {
        self.face_dart.len()
    }
    pub fn root(&self) -> Dart {
        self.root
    }
    pub fn root_vertex(&self) -> Vertex {
        self.origin(self.root)
    }

    /// The same map with a different root dart.
    pub fn rerooted(&self, root: Dart) -> Self {
        assert!((root as usize) < self.n_darts(), "root dart out of range");
        RootedQuadrangulation {
            root,
            ..self.clone()
        }
    }

    #[inline]
    pub fn alpha(&self, d: Dart) -> Dart {
        d ^ 1
    }
    #[inline]
    pub fn sigma(&self, d: Dart) -> Dart {
        self.sigma[d as usize]
    }
    #[inline]
    pub fn sigma_inv(&self, d: Dart) -> Dart {
        self.sigma_inv[d as usize]
    }
    /// Next dart along the face lying to the left of `d`.
    #[inline]
    pub fn phi(&self, d: Dart) -> Dart {
        self.sigma_inv[(d ^ 1) as usize]
    }
    #[inline]
    pub fn origin(&self, d: Dart) -> Vertex {
        self.vertex_of[d as usize]
    }
    #[inline]
    pub fn target(&self, d: Dart) -> Vertex {
        self.vertex_of[(d ^ 1) as usize]
    }
    #[inline]
    pub fn face(&self, d: Dart) -> FaceId {
        self.face_of[d as usize]
    }

    pub fn vertex_dart(&self, v: Vertex) -> Dart {
        self.vertex_dart[v as usize]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.rotation(v).count()
    }

    /// Darts leaving `v`, counterclockwise.
    pub fn rotation(&self, v: Vertex) -> impl Iterator<Item = Dart> + '_ {
        let start = self.vertex_dart[v as usize];
        let mut cur = Some(start);
        std::iter::from_fn(move || {
            let d = cur?;
            let next = self.sigma[d as usize];
            cur = (next != start).then_some(next);
            Some(d)
        })
    }

    /// The four darts of face `f` in counterclockwise order; their origins
    /// are the corners of the face.
    pub fn face_darts(&self, f: FaceId) -> [Dart; 4] {
        let d0 = self.face_dart[f as usize];
        let d1 = self.phi(d0);
        let d2 = self.phi(d1);
        [d0, d1, d2, self.phi(d2)]
    }

    pub fn face_corners(&self, f: FaceId) -> [Vertex; 4] {
        self.face_darts(f).map(|d| self.origin(d))
    }

    pub fn neighbors(&self, v: Vertex) -> impl Iterator<Item = Vertex> + '_ {
        self.rotation(v).map(move |d| self.target(d))
    }

    pub fn sigma_table(&self) -> &[Dart] {
        &self.sigma
    }

    /// Canonical code of the rooted map; two rooted maps are isomorphic
    /// (root preserved) iff their codes are equal.
    pub fn canonical_code(&self) -> Vec<u32> {
        canonical_code(self, self.root, |_| true)
    }

    /// Serializes to the `quadmap-v1` text format.
    pub fn to_quadmap(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "quadmap-v1 {} {}", self.n_darts(), self.root);
        for (d, s) in self.sigma.iter().enumerate() {
            let _ = writeln!(out, "{d} {s}");
        }
        out
    }

    /// Parses the `quadmap-v1` text format.
    pub fn from_quadmap(text: &str) -> Result<Self, MapError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let parse_err = |line, msg: &str| MapError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hline, header) = lines.next().ok_or(MapError::Empty)?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 || fields[0] != "quadmap-v1" {
            return Err(parse_err(
                hline,
                "expected `quadmap-v1 <n_darts> <root_dart>`",
            ));
        }
        let n: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(hline, "bad dart count"))?;
        let root: Dart = fields[2]
            .parse()
            .map_err(|_| parse_err(hline, "bad root dart"))?;
        let mut sigma = vec![NONE; n];
        let mut count = 0;
        for (line, l) in lines {
            let mut it = l.split_whitespace();
            let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
                return Err(parse_err(line, "expected `<dart> <sigma(dart)>`"));
            };
            let d: usize = a.parse().map_err(|_| parse_err(line, "bad dart"))?;
            let s: Dart = b.parse().map_err(|_| parse_err(line, "bad sigma value"))?;
            if d >= n || sigma[d] != NONE {
                return Err(MapError::BadDart(d as u32));
            }
            sigma[d] = s;
            count += 1;
        }
        if count != n {
            return Err(parse_err(
                hline,
                "dart count does not match the number of lines",
            ));
        }
        Self::from_sigma(sigma, root)
    }
}

fn walk_cycle(start: Dart, next: impl Fn(Dart) -> Dart, mut visit: impl FnMut(Dart)) {
    let mut d = start;
    loop {
        visit(d);
        d = next(d);
        if d == start {
            break;
        }
    }
}

/// Smallest dart of every cycle of `perm`, in increasing order.
fn cycle_representatives(n: usize, perm: impl Fn(Dart) -> Dart) -> Vec<Dart> {
    let mut seen = vec![false; n];
    let mut reps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        reps.push(start as Dart);
        walk_cycle(start as Dart, &perm, |d| seen[d as usize] = true);
    }
    reps
}

/// Breadth-first relabeling of the darts reachable from `root` through
/// `phi` and `alpha`, restricted to darts accepted by `inside`. Each dart
/// contributes the new labels of `phi(d)` and `alpha(d)`, the latter being
/// `u32::MAX` on a boundary.
fn canonical_code(
    map: &RootedQuadrangulation,
    root: Dart,
    inside: impl Fn(Dart) -> bool,
) -> Vec<u32> {
    let mut label = vec![NONE; map.n_darts()];
    let mut order = Vec::new();
    label[root as usize] = 0;
    order.push(root);
    let mut code = Vec::new();
    let mut head = 0;
    while head < order.len() {
        let d = order[head];
        head += 1;
        for (nb, boundary_ok) in [(map.phi(d), false), (map.alpha(d), true)] {
            if boundary_ok && !inside(nb) {
                code.push(NONE);
                continue;
            }
            if label[nb as usize] == NONE {
                label[nb as usize] = order.len() as u32;
                order.push(nb);
            }
            code.push(label[nb as usize]);
        }
    }
    code
}

/// Graph distances from a base vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceField {
    pub base: Vertex,
    pub dist: Vec<u32>,
}

impl DistanceField {
    #[inline]
    pub fn get(&self, v: Vertex) -> u32 {
        self.dist[v as usize]
    }

    pub fn eccentricity(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }
}

pub fn bfs_distances(map: &RootedQuadrangulation, base: Vertex) -> Result<DistanceField, MapError> {
    if base as usize >= map.n_vertices() {
        return Err(MapError::BadVertex(base));
    }
    let mut dist = vec![NONE; map.n_vertices()];
    let mut queue = VecDeque::with_capacity(map.n_vertices());
    dist[base as usize] = 0;
    queue.push_back(base);
    while let Some(v) = queue.pop_front() {
        let dv = dist[v as usize];
        for w in map.neighbors(v) {
            if dist[w as usize] == NONE {
                dist[w as usize] = dv + 1;
                queue.push_back(w);
            }
        }
    }
    Ok(DistanceField { base, dist })
}

/// A face diagonal, given by the two face darts whose origins it joins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Diagonal {
    pub face: FaceId,
    pub from: Dart,
    pub to: Dart,
}

/// The quadrangulation together with both diagonals of every face.
#[derive(Debug, Clone)]
pub struct CrossGraph<'a> {
    pub map: &'a RootedQuadrangulation,
    pub diagonals: Vec<Diagonal>,
}

impl CrossGraph<'_> {
    pub fn diagonal_endpoints(&self, diag: &Diagonal) -> (Vertex, Vertex) {
        (self.map.origin(diag.from), self.map.origin(diag.to))
    }
}

pub fn cross_graph(map: &RootedQuadrangulation) -> CrossGraph<'_> {
    let mut diagonals = Vec::with_capacity(2 * map.n_faces());
    for f in 0..map.n_faces() as FaceId {
        let [d0, d1, d2, d3] = map.face_darts(f);
        diagonals.push(Diagonal {
            face: f,
            from: d0,
            to: d2,
        });
        diagonals.push(Diagonal {
            face: f,
            from: d1,
            to: d3,
        });
    }
    CrossGraph { map, diagonals }
}

/// The faces of a map having a corner at distance `< radius` from the root
/// vertex. Darts whose opposite lies outside the fragment are boundary darts.
#[derive(Debug, Clone)]
pub struct Fragment<'a> {
    map: &'a RootedQuadrangulation,
    root: Dart,
    faces: Vec<bool>,
    n_faces: usize,
}

impl<'a> Fragment<'a> {
    pub fn is_empty(&self) -> bool {
        self.n_faces == 0
    }
    pub fn n_faces(&self) -> usize {
        self.n_faces
    }
    pub fn contains_face(&self, f: FaceId) -> bool {
        self.faces[f as usize]
    }
    pub fn contains_dart(&self, d: Dart) -> bool {
        self.faces[self.map.face(d) as usize]
    }
    pub fn is_boundary(&self, d: Dart) -> bool {
        self.contains_dart(d) && !self.contains_dart(d ^ 1)
    }
    pub fn is_whole_map(&self) -> bool {
        self.n_faces == self.map.n_faces()
    }

    /// True when both fragments live in the same map and every face of
    /// `self` is a face of `other`.
    pub fn is_subfragment_of(&self, other: &Fragment<'_>) -> bool {
        std::ptr::eq(self.map, other.map)
            && self.faces.iter().zip(&other.faces).all(|(&a, &b)| !a || b)
    }

    /// Canonical code, invariant under dart relabeling.
    pub fn canonical_code(&self) -> Vec<u32> {
        if self.is_empty() {
            return Vec::new();
        }
        canonical_code(self.map, self.root, |d| self.contains_dart(d))
    }
}

pub fn ball<'a>(map: &'a RootedQuadrangulation, root: Dart, radius: u32) -> Fragment<'a> {
    let dist = bfs_distances(map, map.origin(root)).expect("origin of a dart is a vertex");
    let faces: Vec<bool> = (0..map.n_faces() as FaceId)
        .map(|f| map.face_corners(f).iter().any(|&v| dist.get(v) < radius))
        .collect();
    let n_faces = faces.iter().filter(|&&b| b).count();
    Fragment {
        map,
        root,
        faces,
        n_faces,
    }
}

pub fn balls_equal(a: &Fragment<'_>, b: &Fragment<'_>) -> bool {
    a.n_faces == b.n_faces && a.canonical_code() == b.canonical_code()
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn smallest_quadrangulation_is_accepted() {
        let m = path_map();
        assert_eq!((m.n_vertices(), m.n_edges(), m.n_faces()), (3, 2, 1));
    }

    #[test]
    fn explicit_table_is_renamed() {
        // Same path map with scrambled dart names.
        let table = [(10, 11, 10), (11, 10, 20), (20, 21, 11), (21, 20, 21)];
        let m = RootedQuadrangulation::build_map(&table, 10).unwrap();
        assert_eq!(m.canonical_code(), path_map().canonical_code());
    }

    #[test]
    fn alpha_fixed_point_is_rejected() {
        let table = [(0, 0, 0), (1, 2, 2), (2, 1, 1), (3, 3, 3)];
        assert!(matches!(
            RootedQuadrangulation::build_map(&table, 0),
            Err(MapError::NotInvolution(_))
        ));
    }

    #[test]
    fn triangle_is_rejected() {
        // A triangle a, b, c: darts 0=a->b, 1=b->a, 2=b->c, 3=c->b, 4=c->a, 5=a->c.
        let sigma = vec![5, 2, 3, 4, 1, 0];
        let err = RootedQuadrangulation::from_sigma(sigma, 0).unwrap_err();
        assert!(
            matches!(err, MapError::FaceNotQuad { .. } | MapError::OddCycle(_)),
            "{err:?}"
        );
    }

    #[test]
    fn sigma_must_be_a_permutation() {
        assert_eq!(
            RootedQuadrangulation::from_sigma(vec![0, 0, 1, 3], 0).unwrap_err(),
            MapError::NotPermutation
        );
    }

    #[test]
    fn disconnected_table_is_rejected() {
        // Two copies of the path map side by side.
        let sigma = vec![0, 2, 1, 3, 4, 6, 5, 7];
        assert!(RootedQuadrangulation::from_sigma(sigma, 0).is_err());
    }

    #[test]
    fn path_distances() {
        let m = path_map();
        let x = m.root_vertex();
        let d = bfs_distances(&m, x).unwrap();
        let z = m.target(2);
        let mid = m.target(0);
        assert_eq!((d.get(x), d.get(mid), d.get(z)), (0, 1, 2));
        assert_eq!(bfs_distances(&m, 7), Err(MapError::BadVertex(7)));
    }

    #[test]
    fn cube_is_a_quadrangulation() {
        let c = cube();
        assert_eq!((c.n_vertices(), c.n_edges(), c.n_faces()), (8, 12, 6));
    }

    #[test]
    fn cube_distances_match_brute_force() {
        let c = cube();
        // all-pairs shortest paths by Floyd-Warshall on the adjacency matrix
        let n = c.n_vertices();
        let mut m = vec![vec![u32::MAX / 2; n]; n];
        for v in 0..n {
            m[v][v] = 0;
            for w in c.neighbors(v as Vertex) {
                m[v][w as usize] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m[i][j] = m[i][j].min(m[i][k] + m[k][j]);
                }
            }
        }
        for v in 0..n as Vertex {
            let d = bfs_distances(&c, v).unwrap();
            assert_eq!(d.dist, m[v as usize]);
            let mut sorted = d.dist.clone();
            sorted.sort();
            assert_eq!(sorted, vec![0, 1, 1, 1, 2, 2, 2, 3]);
        }
    }

    #[test]
    fn diagonal_counts() {
        let m = path_map();
        let cg = cross_graph(&m);
        assert_eq!(cg.diagonals.len(), 2);
        let d = bfs_distances(&m, m.root_vertex()).unwrap();
        let parity_equal = cg
            .diagonals
            .iter()
            .filter(|g| {
                let (a, b) = cg.diagonal_endpoints(g);
                d.get(a) % 2 == d.get(b) % 2
            })
            .count();
        assert_eq!(parity_equal, 2);
        assert_eq!(cross_graph(&cube()).diagonals.len(), 12);
    }

    #[test]
    fn ball_extremes() {
        let c = cube();
        assert!(ball(&c, 0, 0).is_empty());
        assert!(ball(&c, 0, 3).is_whole_map());
        for r in 0..4 {
            assert!(ball(&c, 0, r).is_subfragment_of(&ball(&c, 0, r + 1)));
        }
    }

    #[test]
    fn the_two_rooted_path_maps_differ() {
        let a = path_map();
        let b = a.rerooted(1);
        assert!(!balls_equal(&ball(&a, a.root(), 2), &ball(&b, b.root(), 2)));
        assert!(balls_equal(&ball(&a, a.root(), 2), &ball(&a, a.root(), 2)));
    }

    #[test]
    fn quadmap_round_trip_and_errors() {
        let c = cube();
        let text = c.to_quadmap();
        let back = RootedQuadrangulation::from_quadmap(&text).unwrap();
        assert_eq!(back.canonical_code(), c.canonical_code());
        assert!(matches!(
            RootedQuadrangulation::from_quadmap("quadmap-v2 4 0\n"),
            Err(MapError::Parse { .. })
        ));
        assert!(RootedQuadrangulation::from_quadmap("quadmap-v1 4 0\n0 0\n1 2\n2 1\n").is_err());
        assert!(matches!(
            RootedQuadrangulation::from_quadmap("quadmap-v1 6 0\n0 5\n1 2\n2 3\n3 4\n4 1\n5 0\n"),
            Err(MapError::FaceNotQuad { .. }) | Err(MapError::OddCycle(_))
        ));
    }
}
