//! Level cycles `gamma_R`, hulls and the skeleton tree.
//!
//! The far vertex stands in for infinity. For a level `R` the hole is the
//! set of vertices at distance `> R` reachable from the far vertex without
//! going down to `R`; two corners at distance `R + 1` of the same face count
//! as adjacent, as they are in the cross graph. `gamma_R` is the boundary of
//! the hole, read off by walking around it in the embedding.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::planar_map::{
    bfs_distances, Dart, DistanceField, FaceId, MapError, RootedQuadrangulation, Vertex,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HullError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("level {level} outside 1..{limit}")]
    LevelOutOfRange { level: u32, limit: u32 },
    #[error("level {level}: {reason}")]
    DegenerateHull { level: u32, reason: String },
}

/// A vertex of maximal distance from `base`, smallest id on ties.
///
/// Panics if `base` is not a vertex of `map`.
pub fn far_vertex(map: &RootedQuadrangulation, base: Vertex) -> Vertex {
    far_vertex_of(&bfs_distances(map, base).expect("base is a vertex of the map"))
}

pub fn far_vertex_of(dist: &DistanceField) -> Vertex {
    let ecc = dist.eccentricity();
    dist.dist.iter().position(|&d| d == ecc).expect("nonempty") as Vertex
}

/// One edge of `gamma_R`: the `(R, R)` diagonal of a face whose corners,
/// read counterclockwise from `from`, are at distances `R, R+1, R, R-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleEdge {
    pub face: FaceId,
    pub from: Vertex,
    pub to: Vertex,
    /// The corner at distance `R + 1`, inside the hole.
    pub high: Vertex,
    /// The corner at distance `R - 1`, called `w` in the skeleton.
    pub low: Vertex,
    /// Face dart leaving `low`.
    pub low_dart: Dart,
}

#[derive(Debug, Clone)]
pub struct SeparatingCycle {
    pub level: u32,
    /// Edges in the order of the walk around the hole.
    pub edges: Vec<CycleEdge>,
    /// Membership of every vertex in the hole.
    pub hole: Vec<bool>,
    /// Position of every dart swept while walking the cycle, in a cyclic
    /// numbering shared with `edge_pos`.
    slot_pos: HashMap<Dart, u32>,
    edge_pos: Vec<u32>,
    period: u32,
}

impl SeparatingCycle {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.edges.iter().map(|e| e.from)
    }

    pub fn hole_size(&self) -> usize {
        self.hole.iter().filter(|&&h| h).count()
    }

    /// Checks the level, face-pattern, closure and separation invariants.
    pub fn verify(
        &self,
        map: &RootedQuadrangulation,
        dist: &DistanceField,
        far: Vertex,
    ) -> Result<(), String> {
        let r = self.level;
        if self.edges.is_empty() {
            return Err("empty cycle".into());
        }
        for (k, e) in self.edges.iter().enumerate() {
            if dist.get(e.from) != r || dist.get(e.to) != r {
                return Err(format!("edge {k} leaves level {r}"));
            }
            if dist.get(e.high) != r + 1 || dist.get(e.low) + 1 != r {
                return Err(format!("edge {k} sits in a face of the wrong type"));
            }
            let next = &self.edges[(k + 1) % self.edges.len()];
            if e.to != next.from {
                return Err(format!("edges {k} and {} do not meet", k + 1));
            }
            if map.face(e.low_dart) != e.face || map.origin(e.low_dart) != e.low {
                return Err(format!("edge {k} has a stray low dart"));
            }
        }
        if !self.hole[far as usize] {
            return Err("far vertex outside the hole".into());
        }
        // map edges cannot cross a diagonal, so the cycle vertices must cut
        // every path from the base to the hole
        let on_cycle: Vec<bool> = {
            let mut c = vec![false; map.n_vertices()];
            for v in self.vertices() {
                c[v as usize] = true;
            }
            c
        };
        let mut seen = vec![false; map.n_vertices()];
        let mut queue = VecDeque::from([dist.base]);
        seen[dist.base as usize] = true;
        while let Some(v) = queue.pop_front() {
            if self.hole[v as usize] {
                return Err(format!("vertex {v} of the hole is reachable from the base"));
            }
            for w in map.neighbors(v) {
                if !seen[w as usize] && !on_cycle[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(())
    }
}

/// Distances from a base and the chosen far vertex, shared by all levels.
#[derive(Debug, Clone)]
pub struct HullContext<'a> {
    pub map: &'a RootedQuadrangulation,
    pub dist: DistanceField,
    pub far: Vertex,
}

impl<'a> HullContext<'a> {
    pub fn new(map: &'a RootedQuadrangulation, base: Vertex) -> Result<Self, HullError> {
        let dist = bfs_distances(map, base)?;
        let far = far_vertex_of(&dist);
        Ok(HullContext { map, dist, far })
    }

    pub fn with_far(
        map: &'a RootedQuadrangulation,
        base: Vertex,
        far: Vertex,
    ) -> Result<Self, HullError> {
        let dist = bfs_distances(map, base)?;
        if far as usize >= map.n_vertices() {
            return Err(MapError::BadVertex(far).into());
        }
        Ok(HullContext { map, dist, far })
    }

    pub fn base(&self) -> Vertex {
        self.dist.base
    }

    /// `d(base, far)`; levels `1..depth()` have a cycle.
    pub fn depth(&self) -> u32 {
        self.dist.get(self.far)
    }

    /// The hole of level `r`.
    pub fn hole(&self, r: u32) -> Vec<bool> {
        let map = self.map;
        let d = |v: Vertex| self.dist.get(v);
        let mut hole = vec![false; map.n_vertices()];
        if d(self.far) <= r {
            return hole;
        }
        hole[self.far as usize] = true;
        let mut queue = VecDeque::from([self.far]);
        while let Some(v) = queue.pop_front() {
            let mut push = |w: Vertex, hole: &mut Vec<bool>| {
                if !hole[w as usize] && d(w) > r {
                    hole[w as usize] = true;
                    queue.push_back(w);
                }
            };
            for dart in map.rotation(v) {
                push(map.target(dart), &mut hole);
                if d(v) == r + 1 {
                    // the opposite corner of a face with corners R, R+1, R, R+1
                    let [_, d1, d2, _] = face_from(map, dart);
                    let (a, b, c) = (map.origin(d1), map.origin(d2), map.target(d2));
                    if d(a) == r && d(c) == r && d(b) == r + 1 {
                        push(b, &mut hole);
                    }
                }
            }
        }
        hole
    }

    pub fn gamma_cycle(&self, r: u32) -> Result<SeparatingCycle, HullError> {
        let depth = self.depth();
        if r == 0 || r >= depth {
            return Err(HullError::LevelOutOfRange {
                level: r,
                limit: depth,
            });
        }
        let map = self.map;
        let d = |v: Vertex| self.dist.get(v);
        let hole = self.hole(r);

        // a boundary face, given by its face dart leaving the R corner that
        // precedes the hole corner
        let boundary_start = |x: Dart| -> bool {
            let [d0, d1, d2, d3] = face_from(map, x);
            let (s, h, e, l) = (
                map.origin(d0),
                map.origin(d1),
                map.origin(d2),
                map.origin(d3),
            );
            d(s) == r && d(h) == r + 1 && d(e) == r && d(l) + 1 == r && hole[h as usize]
        };
        let mut n_boundary = 0usize;
        let mut first = None;
        for f in 0..map.n_faces() as FaceId {
            for x in map.face_darts(f) {
                if boundary_start(x) {
                    n_boundary += 1;
                    first.get_or_insert(x);
                }
            }
        }
        let Some(first) = first else {
            return Err(HullError::DegenerateHull {
                level: r,
                reason: "no boundary face".into(),
            });
        };

        let mut edges = Vec::new();
        let mut slot_pos = HashMap::new();
        let mut edge_pos = Vec::new();
        let mut pos = 0u32;
        let mut ds = first;
        loop {
            let [d0, d1, d2, d3] = face_from(map, ds);
            edges.push(CycleEdge {
                face: map.face(ds),
                from: map.origin(d0),
                to: map.origin(d2),
                high: map.origin(d1),
                low: map.origin(d3),
                low_dart: d3,
            });
            edge_pos.push(pos);
            pos += 1;
            if edges.len() > n_boundary {
                return Err(HullError::DegenerateHull {
                    level: r,
                    reason: "boundary walk does not close".into(),
                });
            }
            // sweep counterclockwise around the far end of the diagonal,
            // starting from the hole corner
            let e = map.origin(d2);
            let mut x = map.alpha(d1);
            let mut steps = 0;
            while !boundary_start(x) {
                slot_pos.entry(x).or_insert(pos);
                pos += 1;
                x = map.sigma(x);
                steps += 1;
                if steps > map.degree(e) {
                    return Err(HullError::DegenerateHull {
                        level: r,
                        reason: format!("stuck at vertex {e}"),
                    });
                }
            }
            slot_pos.entry(x).or_insert(pos);
            pos += 1;
            ds = x;
            if ds == first {
                break;
            }
        }
        if edges.len() != n_boundary {
            return Err(HullError::DegenerateHull {
                level: r,
                reason: format!("walk covers {} of {n_boundary} boundary faces", edges.len()),
            });
        }
        Ok(SeparatingCycle {
            level: r,
            edges,
            hole,
            slot_pos,
            edge_pos,
            period: pos,
        })
    }

    pub fn hull_decomposition(&self, rmax: u32) -> Result<HullDecomposition, HullError> {
        let depth = self.depth();
        if rmax >= depth {
            return Err(HullError::LevelOutOfRange {
                level: rmax,
                limit: depth,
            });
        }
        let cycles = (1..=rmax)
            .map(|r| self.gamma_cycle(r))
            .collect::<Result<Vec<_>, _>>()?;
        let mut offspring: Vec<Vec<Vec<u32>>> = Vec::with_capacity(cycles.len());
        for (i, cycle) in cycles.iter().enumerate() {
            if i == 0 {
                offspring.push(vec![Vec::new(); cycle.len()]);
            } else {
                offspring.push(assign_offspring(cycle, &cycles[i - 1])?);
            }
        }
        Ok(HullDecomposition {
            cycles,
            skeleton: SkeletonTree { offspring },
        })
    }

    /// Components of `{d > r}` under map edges.
    pub fn count_far_components(&self, r: u32) -> usize {
        count_components_above(self.map, &self.dist, r)
    }
}

/// Face darts starting with `x`, in face order.
fn face_from(map: &RootedQuadrangulation, x: Dart) -> [Dart; 4] {
    let a = map.phi(x);
    let b = map.phi(a);
    [x, a, b, map.phi(b)]
}

/// Offspring of each edge of `upper`, as indices into `lower`'s edges.
fn assign_offspring(
    upper: &SeparatingCycle,
    lower: &SeparatingCycle,
) -> Result<Vec<Vec<u32>>, HullError> {
    let level = upper.level;
    let p: Vec<u32> = upper
        .edges
        .iter()
        .map(|e| {
            lower
                .slot_pos
                .get(&e.low_dart)
                .copied()
                .ok_or_else(|| HullError::DegenerateHull {
                    level,
                    reason: format!("corner of face {} is not on the lower cycle", e.face),
                })
        })
        .collect::<Result<_, _>>()?;
    let m = p.len();
    let period = lower.period;
    let descents = (0..m).filter(|&i| p[(i + 1) % m] <= p[i]).count();
    if m > 1 && descents != 1 {
        return Err(HullError::DegenerateHull {
            level,
            reason: "corners on the lower cycle are out of order".into(),
        });
    }
    let mut out = vec![Vec::new(); m];
    for (k, &q) in lower.edge_pos.iter().enumerate() {
        // the arc (p_n, p_{n+1}) holding q, measured from p_0
        let rel = |x: u32| (x + period - p[0]) % period;
        let rq = rel(q);
        let n = if m == 1 {
            0
        } else {
            p.partition_point(|&x| rel(x) < rq).saturating_sub(1)
        };
        out[n].push(k as u32);
    }
    Ok(out)
}

/// Skeleton links: `offspring[R-1][n]` lists the edges of `gamma_{R-1}`
/// descending from edge `n` of `gamma_R`.
#[derive(Debug, Clone, Serialize)]
pub struct SkeletonTree {
    pub offspring: Vec<Vec<Vec<u32>>>,
}

impl SkeletonTree {
    pub fn levels(&self) -> usize {
        self.offspring.len()
    }

    pub fn offspring_counts(&self, r: u32) -> Vec<usize> {
        self.offspring[r as usize - 1]
            .iter()
            .map(Vec::len)
            .collect()
    }

    /// Parent of every edge of `gamma_R` in `gamma_{R+1}`, for `R < levels()`.
    pub fn parents(&self, r: u32) -> Vec<Option<u32>> {
        let lower_len = if r == 0 {
            0
        } else {
            self.offspring[r as usize - 1].len()
        };
        let mut parent = vec![None; lower_len];
        if (r as usize) < self.offspring.len() {
            for (n, kids) in self.offspring[r as usize].iter().enumerate() {
                for &k in kids {
                    parent[k as usize] = Some(n as u32);
                }
            }
        }
        parent
    }

    /// Every level-`(R-1)` node has exactly one parent at level `R`.
    pub fn is_partition(&self) -> bool {
        (1..self.offspring.len()).all(|i| {
            let mut seen = vec![0u32; self.offspring[i - 1].len()];
            for kids in &self.offspring[i] {
                for &k in kids {
                    match seen.get_mut(k as usize) {
                        Some(c) => *c += 1,
                        None => return false,
                    }
                }
            }
            seen.iter().all(|&c| c == 1)
        })
    }

    /// Number of distinct ancestors at level `r + h` of the edges of
    /// `gamma_r`.
    pub fn ancestors(&self, r: u32, h: u32) -> usize {
        let mut current: Vec<u32> = (0..self.offspring[r as usize - 1].len() as u32).collect();
        for level in r..r + h {
            let parent = self.parents(level);
            let mut next: Vec<u32> = current.iter().filter_map(|&v| parent[v as usize]).collect();
            next.sort_unstable();
            next.dedup();
            current = next;
        }
        current.len()
    }
}

#[derive(Debug, Clone)]
pub struct HullDecomposition {
    pub cycles: Vec<SeparatingCycle>,
    pub skeleton: SkeletonTree,
}

impl HullDecomposition {
    pub fn cycle_lengths(&self) -> Vec<usize> {
        self.cycles.iter().map(SeparatingCycle::len).collect()
    }
}

pub fn gamma_cycle(
    map: &RootedQuadrangulation,
    base: Vertex,
    far: Vertex,
    r: u32,
) -> Result<SeparatingCycle, HullError> {
    HullContext::with_far(map, base, far)?.gamma_cycle(r)
}

pub fn hull_decomposition(
    map: &RootedQuadrangulation,
    base: Vertex,
    far: Vertex,
    rmax: u32,
) -> Result<HullDecomposition, HullError> {
    HullContext::with_far(map, base, far)?.hull_decomposition(rmax)
}

/// Components of the complement of the closed ball of radius `r`.
pub fn count_far_components(
    map: &RootedQuadrangulation,
    base: Vertex,
    r: u32,
) -> Result<usize, HullError> {
    Ok(count_components_above(map, &bfs_distances(map, base)?, r))
}

fn count_components_above(map: &RootedQuadrangulation, dist: &DistanceField, r: u32) -> usize {
    let mut seen = vec![false; map.n_vertices()];
    let mut count = 0;
    let mut stack = Vec::new();
    for v in 0..map.n_vertices() as Vertex {
        if seen[v as usize] || dist.get(v) <= r {
            continue;
        }
        count += 1;
        seen[v as usize] = true;
        stack.push(v);
        while let Some(u) = stack.pop() {
            for w in map.neighbors(u) {
                if !seen[w as usize] && dist.get(w) > r {
                    seen[w as usize] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar_map::fixtures::{cube, path_map};
    use crate::schaeffer::sample_quadrangulation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn far_vertex_small_maps() {
        let m = path_map();
        let x = m.root_vertex();
        let z = m.target(2);
        assert_eq!(far_vertex(&m, x), z);
        let c = cube();
        for v in 0..8 {
            let dist = bfs_distances(&c, v).unwrap();
            let f = far_vertex(&c, v);
            assert_eq!(dist.get(f), 3);
            assert_eq!(dist.get(f), dist.eccentricity());
        }
    }

    #[test]
    fn cube_level_one() {
        let c = cube();
        let ctx = HullContext::new(&c, 0).unwrap();
        let cycle = ctx.gamma_cycle(1).unwrap();
        assert_eq!(cycle.len(), 3);
        let mut vs: Vec<_> = cycle.vertices().collect();
        vs.sort_unstable();
        vs.dedup();
        assert_eq!(vs.len(), 3);
        assert!(vs.iter().all(|&v| ctx.dist.get(v) == 1));
        cycle.verify(&c, &ctx.dist, ctx.far).unwrap();
        assert!(matches!(
            ctx.gamma_cycle(3),
            Err(HullError::LevelOutOfRange { .. })
        ));
        assert!(matches!(
            ctx.gamma_cycle(0),
            Err(HullError::LevelOutOfRange { .. })
        ));
        // single level-1 edges of parallel faces are allowed too
        let two = ctx.gamma_cycle(2).unwrap();
        assert_eq!(two.len(), 3);
        two.verify(&c, &ctx.dist, ctx.far).unwrap();
    }

    #[test]
    fn far_components_small() {
        let m = path_map();
        let x = m.root_vertex();
        assert_eq!(count_far_components(&m, x, 1).unwrap(), 1);
        assert_eq!(count_far_components(&m, x, 2).unwrap(), 0);
        let c = cube();
        assert_eq!(count_far_components(&c, 0, 0).unwrap(), 1);
        assert_eq!(count_far_components(&c, 0, 3).unwrap(), 0);
    }

    #[test]
    fn sampled_decompositions_hold_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut done = 0;
        for _ in 0..40 {
            let m = sample_quadrangulation(2000, &mut rng);
            let ctx = HullContext::new(&m, m.root_vertex()).unwrap();
            let rmax = (ctx.depth() - 1).min(8);
            if rmax == 0 {
                continue;
            }
            let hd = match ctx.hull_decomposition(rmax) {
                Ok(hd) => hd,
                Err(e) => panic!("{e}"),
            };
            for (i, cycle) in hd.cycles.iter().enumerate() {
                cycle.verify(&m, &ctx.dist, ctx.far).unwrap();
                if i > 0 {
                    let lower = &hd.cycles[i - 1];
                    // nesting: the outer hole sits inside the inner one
                    assert!(cycle.hole.iter().zip(&lower.hole).all(|(&a, &b)| !a || b));
                    // each low corner is a vertex of the lower cycle
                    for e in &cycle.edges {
                        assert!(lower.vertices().any(|v| v == e.low));
                    }
                }
            }
            assert!(hd.skeleton.is_partition());
            for r in 2..=rmax {
                let total: usize = hd.skeleton.offspring_counts(r).iter().sum();
                assert_eq!(total, hd.cycles[r as usize - 2].len());
            }
            done += 1;
        }
        assert!(done > 30);
    }
}
