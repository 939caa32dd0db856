//! Distance differences between two adjacent roots, geodesics, slits and
//! rightmost geodesics, divergence points, and the locality of the
//! Schaeffer tree under a change of root.
//!
//! Infinity is played by a far vertex: slits are paths toward it along
//! which the distance to the base never decreases.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::hulls::{HullContext, HullDecomposition, HullError, SeparatingCycle};
use crate::planar_map::{
    bfs_distances, Dart, DistanceField, MapError, RootedQuadrangulation, Vertex,
};
use crate::schaeffer::{schaeffer_tree, schaeffer_tree_with, ArcKind, SchaefferError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Schaeffer(#[from] SchaefferError),
    #[error("not a geodesic: {0}")]
    NotAGeodesic(String),
    #[error("vertex {0} has no slit toward the far vertex")]
    NoSlit(Vertex),
    #[error("face {face} has the same distance increments for both roots but different arcs")]
    LocalityViolation { face: u32 },
}

/// `f(v) = d_x(v) - d_y(v)` for the endpoints `x, y` of a dart.
#[derive(Debug, Clone)]
pub struct FFunction {
    pub x: Vertex,
    pub y: Vertex,
    pub dx: DistanceField,
    pub dy: DistanceField,
    pub values: Vec<i8>,
}

impl FFunction {
    pub fn get(&self, v: Vertex) -> i8 {
        self.values[v as usize]
    }

    /// `(#V-, #V+)`.
    pub fn counts(&self) -> (usize, usize) {
        let minus = self.values.iter().filter(|&&f| f < 0).count();
        (minus, self.values.len() - minus)
    }

    /// The common value on `vs`, if there is one.
    pub fn constant_on(&self, vs: impl IntoIterator<Item = Vertex>) -> Option<i8> {
        let mut it = vs.into_iter().map(|v| self.get(v));
        let first = it.next()?;
        it.all(|f| f == first).then_some(first)
    }
}

pub fn f_function(map: &RootedQuadrangulation, x_dart: Dart) -> Result<FFunction, GeodesicError> {
    if x_dart as usize >= map.n_darts() {
        return Err(MapError::BadDart(x_dart).into());
    }
    let (x, y) = (map.origin(x_dart), map.target(x_dart));
    let dx = bfs_distances(map, x)?;
    let dy = bfs_distances(map, y)?;
    let values = dx
        .dist
        .iter()
        .zip(&dy.dist)
        .map(|(&a, &b)| (a as i64 - b as i64) as i8)
        .collect();
    Ok(FFunction {
        x,
        y,
        dx,
        dy,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathFlavor {
    Geodesic,
    Slit,
    Rightmost,
}

/// A vertex path; geodesics start at `base` and move away from it, slits
/// and rightmost geodesics start at their free end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeodesicPath {
    pub vertices: Vec<Vertex>,
    pub base: Vertex,
    pub flavor: PathFlavor,
}

impl GeodesicPath {
    pub fn len(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.len() <= 1
    }

    /// The same vertices, read from the base.
    pub fn from_base(&self) -> Vec<Vertex> {
        let mut v = self.vertices.clone();
        if v.first() != Some(&self.base) {
            v.reverse();
        }
        v
    }
}

/// Whether `f` is monotone along a geodesic from `x` (non-decreasing) or
/// from `y` (non-increasing).
pub fn check_geodesic_monotone(
    map: &RootedQuadrangulation,
    f: &FFunction,
    path: &GeodesicPath,
) -> Result<bool, GeodesicError> {
    let vs = path.from_base();
    let dist = if path.base == f.x {
        &f.dx
    } else if path.base == f.y {
        &f.dy
    } else {
        return Err(GeodesicError::NotAGeodesic(format!(
            "base {} is neither root",
            path.base
        )));
    };
    if vs.first() != Some(&path.base) {
        return Err(GeodesicError::NotAGeodesic(
            "path does not touch its base".into(),
        ));
    }
    for (i, w) in vs.windows(2).enumerate() {
        if !map.neighbors(w[0]).any(|u| u == w[1]) {
            return Err(GeodesicError::NotAGeodesic(format!(
                "step {i} is not an edge"
            )));
        }
        if dist.get(w[1]) != dist.get(w[0]) + 1 {
            return Err(GeodesicError::NotAGeodesic(format!(
                "step {i} does not move away from the base"
            )));
        }
    }
    let sign = if path.base == f.x { 1 } else { -1 };
    Ok(vs
        .windows(2)
        .all(|w| sign * (f.get(w[1]) - f.get(w[0])) >= 0))
}

/// A geodesic from `base` of at most `max_len` steps, each step to a
/// uniformly chosen neighbor one further away.
pub fn random_geodesic<R: Rng + ?Sized>(
    map: &RootedQuadrangulation,
    dist: &DistanceField,
    max_len: usize,
    rng: &mut R,
) -> GeodesicPath {
    let mut vertices = vec![dist.base];
    let mut up = Vec::new();
    while vertices.len() <= max_len {
        let v = *vertices.last().expect("nonempty");
        up.clear();
        up.extend(map.neighbors(v).filter(|&w| dist.get(w) == dist.get(v) + 1));
        match up.choose(rng) {
            Some(&w) => vertices.push(w),
            None => break,
        }
    }
    GeodesicPath {
        vertices,
        base: dist.base,
        flavor: PathFlavor::Geodesic,
    }
}

/// Constancy of `f` on one level cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelConstancy {
    pub level: u32,
    pub value: Option<i8>,
    /// Vertices beyond the cycle where `f` differs from its value on the
    /// cycle; zero whenever `value` is set.
    pub far_side_violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstantRadius {
    pub level: u32,
    pub value: i8,
    /// `#W`: vertices where `f` differs from `value`.
    pub exceptional: usize,
    pub far_side_violations: usize,
}

/// Levels `2..=rmax` of the hulls around `x`, with the far-side check run
/// on every level where `f` is constant.
pub fn constant_levels(
    ctx: &HullContext<'_>,
    f: &FFunction,
    rmax: u32,
) -> Result<Vec<LevelConstancy>, GeodesicError> {
    let cycles = (2..=rmax)
        .map(|r| ctx.gamma_cycle(r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(constant_levels_on(ctx.map, ctx.base(), f, &cycles))
}

/// Constancy of `f` on already extracted cycles; level-1 cycles are skipped.
pub fn constant_levels_on(
    map: &RootedQuadrangulation,
    base: Vertex,
    f: &FFunction,
    cycles: &[SeparatingCycle],
) -> Vec<LevelConstancy> {
    let mut out = Vec::new();
    for cycle in cycles.iter().filter(|c| c.level >= 2) {
        let value = f.constant_on(cycle.vertices());
        let mut far_side_violations = 0;
        if let Some(c) = value {
            // root side: reachable from the base avoiding the cycle
            let mut blocked = vec![false; map.n_vertices()];
            for v in cycle.vertices() {
                blocked[v as usize] = true;
            }
            let mut root_side = vec![false; map.n_vertices()];
            let mut queue = VecDeque::from([base]);
            root_side[base as usize] = true;
            while let Some(v) = queue.pop_front() {
                for w in map.neighbors(v) {
                    if !root_side[w as usize] && !blocked[w as usize] {
                        root_side[w as usize] = true;
                        queue.push_back(w);
                    }
                }
            }
            far_side_violations = (0..map.n_vertices())
                .filter(|&v| !root_side[v] && f.values[v] != c)
                .count();
        }
        out.push(LevelConstancy {
            level: cycle.level,
            value,
            far_side_violations,
        });
    }
    out
}

/// The first constant level, with the size of the exceptional set.
pub fn first_constant(f: &FFunction, levels: &[LevelConstancy]) -> Option<ConstantRadius> {
    levels.iter().find_map(|lc| {
        lc.value.map(|value| ConstantRadius {
            level: lc.level,
            value,
            exceptional: f.values.iter().filter(|&&v| v != value).count(),
            far_side_violations: lc.far_side_violations,
        })
    })
}

/// Smallest `R` in `2..=rmax` with `f` constant on `gamma_R`.
pub fn min_constant_radius(
    ctx: &HullContext<'_>,
    f: &FFunction,
    rmax: u32,
) -> Result<Option<ConstantRadius>, GeodesicError> {
    Ok(first_constant(f, &constant_levels(ctx, f, rmax)?))
}

/// A position in the rotation around a vertex: on a dart, or in the face
/// corner between a dart and the next one counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Dart(Dart),
    Corner(Dart),
}

/// Neighbors of `v` in the cross graph, with their slots, counterclockwise.
pub fn cross_neighbors(
    map: &RootedQuadrangulation,
    v: Vertex,
) -> impl Iterator<Item = (Slot, Vertex)> + '_ {
    map.rotation(v).flat_map(move |d| {
        let opposite = map.origin(map.phi(map.phi(d)));
        [(Slot::Dart(d), map.target(d)), (Slot::Corner(d), opposite)]
    })
}

/// Slits and rightmost geodesics toward one base.
#[derive(Debug, Clone)]
pub struct SlitField<'a> {
    pub map: &'a RootedQuadrangulation,
    pub dist: DistanceField,
    pub far: Vertex,
    /// Vertices with a slit toward `far`.
    pub in_slit: Vec<bool>,
}

impl<'a> SlitField<'a> {
    pub fn new(
        map: &'a RootedQuadrangulation,
        base: Vertex,
        far: Vertex,
    ) -> Result<Self, GeodesicError> {
        let dist = bfs_distances(map, base)?;
        Self::with_distances(map, dist, far)
    }

    pub fn with_distances(
        map: &'a RootedQuadrangulation,
        dist: DistanceField,
        far: Vertex,
    ) -> Result<Self, GeodesicError> {
        if far as usize >= map.n_vertices() {
            return Err(MapError::BadVertex(far).into());
        }
        let mut in_slit = vec![false; map.n_vertices()];
        in_slit[far as usize] = true;
        let mut queue = VecDeque::from([far]);
        while let Some(v) = queue.pop_front() {
            for (_, u) in cross_neighbors(map, v) {
                if !in_slit[u as usize] && dist.get(u) <= dist.get(v) {
                    in_slit[u as usize] = true;
                    queue.push_back(u);
                }
            }
        }
        Ok(SlitField {
            map,
            dist,
            far,
            in_slit,
        })
    }

    pub fn base(&self) -> Vertex {
        self.dist.base
    }

    /// Slots at `z` where a slit from `z` can leave without coming back
    /// through `z`. Neighbors further from the base always qualify; a
    /// neighbor at the same distance needs a slit avoiding `z`.
    pub fn slit_starts(&self, z: Vertex) -> Vec<Slot> {
        let dz = self.dist.get(z);
        cross_neighbors(self.map, z)
            .filter(|&(_, u)| {
                u != z
                    && self.in_slit[u as usize]
                    && (self.dist.get(u) > dz || (self.dist.get(u) == dz && self.slit_avoids(u, z)))
            })
            .map(|(s, _)| s)
            .collect()
    }

    /// Whether `u` has a slit that never visits `z`, where `d(u) = d(z)`.
    fn slit_avoids(&self, u: Vertex, z: Vertex) -> bool {
        let dz = self.dist.get(z);
        let mut seen = std::collections::HashSet::from([u, z]);
        let mut queue = VecDeque::from([u]);
        while let Some(v) = queue.pop_front() {
            // once above the level of z a slit can no longer meet it
            if v == self.far || (self.dist.get(v) > dz && self.in_slit[v as usize]) {
                return true;
            }
            for (_, w) in cross_neighbors(self.map, v) {
                if self.dist.get(w) >= self.dist.get(v)
                    && self.in_slit[w as usize]
                    && seen.insert(w)
                {
                    queue.push_back(w);
                }
            }
        }
        false
    }

    /// The start used for the rightmost step: the first neighbor further
    /// from the base, else the first valid neighbor at the same distance.
    fn preferred_start(&self, z: Vertex) -> Option<Slot> {
        let dz = self.dist.get(z);
        cross_neighbors(self.map, z)
            .find(|&(_, u)| self.dist.get(u) > dz && self.in_slit[u as usize])
            .map(|(s, _)| s)
            .or_else(|| self.slit_starts(z).first().copied())
    }

    /// First neighbor clockwise after `start` one step closer to the base.
    pub fn successor_from(&self, z: Vertex, start: Slot) -> Option<Vertex> {
        let map = self.map;
        let mut d = match start {
            Slot::Dart(d) => map.sigma_inv(d),
            Slot::Corner(d) => d,
        };
        let target = self.dist.get(z).checked_sub(1)?;
        for _ in 0..map.degree(z) {
            if self.dist.get(map.target(d)) == target {
                return Some(map.target(d));
            }
            d = map.sigma_inv(d);
        }
        None
    }

    /// The first down-neighbor of `far` in its rotation, standing in for
    /// the point where the infinite rightmost geodesic enters the map.
    pub fn far_successor(&self) -> Option<Vertex> {
        let target = self.dist.get(self.far).checked_sub(1)?;
        self.map
            .neighbors(self.far)
            .find(|&w| self.dist.get(w) == target)
    }

    /// Next vertex of the rightmost geodesic from `z`.
    pub fn successor(&self, z: Vertex) -> Result<Option<Vertex>, GeodesicError> {
        if z == self.base() {
            return Ok(None);
        }
        if z == self.far {
            return Ok(self.far_successor());
        }
        if !self.in_slit[z as usize] {
            return Err(GeodesicError::NoSlit(z));
        }
        let start = self.preferred_start(z).ok_or(GeodesicError::NoSlit(z))?;
        Ok(self.successor_from(z, start))
    }

    /// Successors obtained from every possible slit start at `z`.
    pub fn successors_all_starts(&self, z: Vertex) -> Vec<Option<Vertex>> {
        self.slit_starts(z)
            .into_iter()
            .map(|s| self.successor_from(z, s))
            .collect()
    }

    pub fn rightmost_geodesic(&self, z: Vertex) -> Result<GeodesicPath, GeodesicError> {
        let mut vertices = vec![z];
        let mut cur = z;
        while let Some(next) = self.successor(cur)? {
            vertices.push(next);
            cur = next;
        }
        if cur != self.base() {
            return Err(GeodesicError::NotAGeodesic(format!(
                "rightmost walk from {z} stalls at {cur}"
            )));
        }
        Ok(GeodesicPath {
            vertices,
            base: self.base(),
            flavor: PathFlavor::Rightmost,
        })
    }

    /// Successor of every vertex with a slit, the union of all rightmost
    /// geodesics.
    pub fn rightmost_forest(&self) -> Result<Vec<Option<Vertex>>, GeodesicError> {
        (0..self.map.n_vertices() as Vertex)
            .map(|z| {
                if self.in_slit[z as usize] {
                    self.successor(z)
                } else {
                    Ok(None)
                }
            })
            .collect()
    }

    /// A slit from `z` to the far vertex.
    pub fn slit_path(&self, z: Vertex) -> Result<GeodesicPath, GeodesicError> {
        if !self.in_slit[z as usize] {
            return Err(GeodesicError::NoSlit(z));
        }
        // BFS from z over non-decreasing cross-graph steps inside the slit set
        let n = self.map.n_vertices();
        let mut prev = vec![u32::MAX; n];
        prev[z as usize] = z;
        let mut queue = VecDeque::from([z]);
        while let Some(v) = queue.pop_front() {
            if v == self.far {
                break;
            }
            for (_, u) in cross_neighbors(self.map, v) {
                if prev[u as usize] == u32::MAX
                    && self.in_slit[u as usize]
                    && self.dist.get(u) >= self.dist.get(v)
                {
                    prev[u as usize] = v;
                    queue.push_back(u);
                }
            }
        }
        let mut vertices = vec![self.far];
        let mut cur = self.far;
        while cur != z {
            cur = prev[cur as usize];
            vertices.push(cur);
        }
        vertices.reverse();
        Ok(GeodesicPath {
            vertices,
            base: self.base(),
            flavor: PathFlavor::Slit,
        })
    }
}

pub fn rightmost_geodesic(
    map: &RootedQuadrangulation,
    z: Vertex,
    base: Vertex,
    far: Vertex,
) -> Result<GeodesicPath, GeodesicError> {
    SlitField::new(map, base, far)?.rightmost_geodesic(z)
}

/// A divergence point `v = delta(z)` with the next vertex `b` of the
/// rightmost geodesic from `v` to `y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DivergenceRecord {
    pub z: Vertex,
    pub v: Vertex,
    pub b: Vertex,
    /// `d_x(v)`.
    pub level: u32,
    /// `d_y(b) = d_y(v) - 1 = R`, `d_x(b) = R + 1`, `f(b) = +1`.
    pub properties: [bool; 3],
}

impl DivergenceRecord {
    pub fn holds(&self) -> bool {
        self.properties.iter().all(|&p| p)
    }
}

/// The x-side rightmost geodesic toward the far vertex and its divergence
/// points against the y-side rightmost geodesics.
#[derive(Debug, Clone)]
pub struct DivergenceScan {
    /// Rightmost geodesic from the far vertex to `x`.
    pub trunk: GeodesicPath,
    pub records: Vec<DivergenceRecord>,
}

/// Divergence points along the x-side rightmost geodesic from `far`, for
/// the points `z` where `f(z) = -1` that also have a y-slit.
pub fn divergence_points(
    map: &RootedQuadrangulation,
    x_dart: Dart,
    far: Vertex,
) -> Result<DivergenceScan, GeodesicError> {
    let f = f_function(map, x_dart)?;
    let sx = SlitField::with_distances(map, f.dx.clone(), far)?;
    let sy = SlitField::with_distances(map, f.dy.clone(), far)?;
    divergence_points_with(&f, &sx, &sy)
}

pub fn divergence_points_with(
    f: &FFunction,
    sx: &SlitField<'_>,
    sy: &SlitField<'_>,
) -> Result<DivergenceScan, GeodesicError> {
    let trunk = sx.rightmost_geodesic(sx.far)?;
    let n = sx.map.n_vertices();
    let mut on_x = vec![false; n];
    let mut on_y = vec![false; n];
    let mut seen_v = vec![false; n];
    let mut records = Vec::new();
    for (i, &z) in trunk.vertices.iter().enumerate().skip(1) {
        if f.get(z) != -1 || !sy.in_slit[z as usize] {
            continue;
        }
        let rx = &trunk.vertices[i..];
        let ry = sy.rightmost_geodesic(z)?;
        for &w in rx {
            on_x[w as usize] = true;
        }
        for &w in &ry.vertices {
            on_y[w as usize] = true;
        }
        let v = rx
            .iter()
            .copied()
            .filter(|&w| on_y[w as usize])
            .min_by_key(|&w| (f.dx.get(w), f.dy.get(w)))
            .expect("z is common");
        for &w in rx {
            on_x[w as usize] = false;
        }
        for &w in &ry.vertices {
            on_y[w as usize] = false;
        }
        if seen_v[v as usize] {
            continue;
        }
        seen_v[v as usize] = true;
        let pos = ry
            .vertices
            .iter()
            .position(|&w| w == v)
            .expect("v lies on Rg_y");
        let Some(&b) = ry.vertices.get(pos + 1) else {
            continue;
        };
        let r = f.dx.get(v);
        let properties = [
            f.dy.get(b) + 1 == f.dy.get(v) && f.dy.get(b) == r,
            f.dx.get(b) == r + 1,
            f.get(b) == 1,
        ];
        records.push(DivergenceRecord {
            z,
            v,
            b,
            level: r,
            properties,
        });
    }
    Ok(DivergenceScan { trunk, records })
}

/// Position of the trunk geodesic relative to the skeleton trunk on one
/// level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrunkApproach {
    pub level: u32,
    pub cycle_len: usize,
    /// Cyclic distance, in cycle steps, from `v_R` to the nearest endpoint
    /// of the skeleton trunk edge `e_R`.
    pub distance: usize,
}

/// Levels where all edges of `gamma_1` have a single ancestor, with the
/// cycle distance between that ancestor and the point where `trunk`
/// crosses the level.
pub fn trunk_approaches(
    hd: &HullDecomposition,
    trunk: &GeodesicPath,
    dx: &DistanceField,
) -> Vec<TrunkApproach> {
    let mut out = Vec::new();
    let levels = hd.cycles.len() as u32;
    if levels == 0 {
        return out;
    }
    let mut current: Vec<u32> = (0..hd.cycles[0].len() as u32).collect();
    for r in 1..=levels {
        if r > 1 {
            let parent = hd.skeleton.parents(r - 1);
            let mut next: Vec<u32> = current.iter().filter_map(|&k| parent[k as usize]).collect();
            next.sort_unstable();
            next.dedup();
            current = next;
        }
        if current.len() != 1 {
            continue;
        }
        let cycle = &hd.cycles[r as usize - 1];
        let Some(&v) = trunk.vertices.iter().find(|&&w| dx.get(w) == r) else {
            continue;
        };
        let m = cycle.len();
        let e = current[0] as usize;
        let distance = cycle
            .edges
            .iter()
            .enumerate()
            .filter(|(_, ed)| ed.from == v)
            .map(|(k, _)| {
                // edge e joins vertex positions e and e + 1
                let a = (k + m - e) % m;
                let b = (e + 1 + m - k) % m;
                a.min(b)
            })
            .min();
        if let Some(distance) = distance {
            out.push(TrunkApproach {
                level: r,
                cycle_len: m,
                distance,
            });
        }
    }
    out
}

/// Number of faces whose Schaeffer arc differs between the two roots.
pub fn sch_symmetric_difference(
    map: &RootedQuadrangulation,
    x_dart: Dart,
) -> Result<usize, GeodesicError> {
    let f = f_function(map, x_dart)?;
    sch_symmetric_difference_with(map, &f)
}

pub fn sch_symmetric_difference_with(
    map: &RootedQuadrangulation,
    f: &FFunction,
) -> Result<usize, GeodesicError> {
    let sx = schaeffer_tree_with(map, f.dx.clone())?;
    let sy = schaeffer_tree_with(map, f.dy.clone())?;
    let mut count = 0;
    for (ax, ay) in sx.arcs.iter().zip(&sy.arcs) {
        if ax.same_as(ay) {
            continue;
        }
        count += 1;
        if f.constant_on(map.face_corners(ax.face)).is_some() {
            return Err(GeodesicError::LocalityViolation { face: ax.face });
        }
    }
    Ok(count)
}

/// `h` up to a constant, proxied by the distance to a far vertex.
#[derive(Debug, Clone)]
pub struct HField {
    pub far: Vertex,
    pub h: DistanceField,
}

impl HField {
    pub fn delta(&self, u: Vertex, v: Vertex) -> i64 {
        self.h.get(u) as i64 - self.h.get(v) as i64
    }

    /// Sum of increments around every face is zero and every map edge
    /// changes `h` by one.
    pub fn is_consistent(&self, map: &RootedQuadrangulation) -> bool {
        (0..map.n_faces() as u32).all(|f| {
            let c = map.face_corners(f);
            let steps: Vec<i64> = (0..4).map(|i| self.delta(c[(i + 1) % 4], c[i])).collect();
            steps.iter().sum::<i64>() == 0 && steps.iter().all(|s| s.abs() == 1)
        })
    }
}

pub fn h_field(map: &RootedQuadrangulation, far: Vertex) -> Result<HField, GeodesicError> {
    Ok(HField {
        far,
        h: bfs_distances(map, far)?,
    })
}

/// Window statistics of the Schaeffer forest built from `h`.
#[derive(Debug, Clone, Serialize)]
pub struct SchInfinityStats {
    pub window: u32,
    pub window_vertices: usize,
    /// Components of the forest restricted to the window.
    pub components: usize,
    /// `offspring_hist[k]`: window vertices with `k` children.
    pub offspring_hist: Vec<u64>,
    /// Counts of `h(child) - h(parent)` for `-1, 0, +1`.
    pub increment_hist: [u64; 3],
}

/// `Sch_infinity` around the root vertex: the tree is rooted at the first
/// neighbor of `far`, children point away from it, and only vertices whose
/// whole neighborhood lies in the window contribute offspring counts.
pub fn sch_infinity(
    map: &RootedQuadrangulation,
    far: Vertex,
    window: u32,
) -> Result<SchInfinityStats, GeodesicError> {
    let hf = h_field(map, far)?;
    let tree = schaeffer_tree_with(map, hf.h.clone())?;
    let n = map.n_vertices();
    let mut adj: Vec<Vec<Vertex>> = vec![Vec::new(); n];
    for arc in &tree.arcs {
        let (a, b) = tree.endpoints(map, arc);
        adj[a as usize].push(b);
        adj[b as usize].push(a);
    }
    let root_dist = bfs_distances(map, map.root_vertex())?;
    let in_window = |v: Vertex| root_dist.get(v) <= window && v != far;

    let tree_root = map.neighbors(far).next().expect("far has a neighbor");
    let mut parent = vec![u32::MAX; n];
    parent[tree_root as usize] = tree_root;
    let mut stack = vec![tree_root];
    while let Some(v) = stack.pop() {
        for &w in &adj[v as usize] {
            if parent[w as usize] == u32::MAX {
                parent[w as usize] = v;
                stack.push(w);
            }
        }
    }

    let window_vertices = (0..n as Vertex).filter(|&v| in_window(v)).count();
    let mut uf = crate::schaeffer::UnionFind::new(n);
    let mut components = window_vertices;
    for arc in &tree.arcs {
        let (a, b) = tree.endpoints(map, arc);
        if in_window(a) && in_window(b) && uf.union(a as usize, b as usize) {
            components -= 1;
        }
    }

    let mut offspring_hist = Vec::new();
    let mut increment_hist = [0u64; 3];
    for v in 0..n as Vertex {
        if v == far || root_dist.get(v) + 2 > window {
            continue;
        }
        let kids: Vec<Vertex> = adj[v as usize]
            .iter()
            .copied()
            .filter(|&w| parent[w as usize] == v && w != v)
            .collect();
        if offspring_hist.len() <= kids.len() {
            offspring_hist.resize(kids.len() + 1, 0);
        }
        offspring_hist[kids.len()] += 1;
        for w in kids {
            increment_hist[(hf.delta(w, v) + 1) as usize] += 1;
        }
    }
    // diagonal arcs carry increment zero; tree edges carry one
    debug_assert!(tree.arcs.iter().all(|a| (a.kind == ArcKind::Diagonal)
        == (hf.h.get(map.origin(a.from)) == hf.h.get(map.origin(a.to)))));
    Ok(SchInfinityStats {
        window,
        window_vertices,
        components,
        offspring_hist,
        increment_hist,
    })
}

/// Whether the forest built from `h` equals the Schaeffer tree of `far`.
pub fn sch_infinity_matches_pointed(
    map: &RootedQuadrangulation,
    far: Vertex,
) -> Result<bool, GeodesicError> {
    let a = schaeffer_tree_with(map, h_field(map, far)?.h)?;
    let b = schaeffer_tree(map, far)?;
    Ok(a.arcs.iter().zip(&b.arcs).all(|(p, q)| p.same_as(q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hulls::far_vertex;
    use crate::planar_map::fixtures::{cube, path_map};
    use crate::schaeffer::{all_labeled_trees, cvs_forward, sample_quadrangulation, Sign};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn f_on_the_path_map() {
        let m = path_map();
        let f = f_function(&m, m.root()).unwrap();
        let z = m.target(2);
        assert_eq!((f.get(f.x), f.get(f.y), f.get(z)), (-1, 1, 1));
        assert_eq!(f.counts(), (1, 2));
    }

    #[test]
    fn f_takes_two_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let m = sample_quadrangulation(1000, &mut rng);
            let f = f_function(&m, m.root()).unwrap();
            assert!(f.values.iter().all(|v| v.abs() == 1));
            let (a, b) = f.counts();
            assert_eq!(a + b, m.n_vertices());
        }
    }

    #[test]
    fn geodesics_are_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut tested = 0;
        for _ in 0..20 {
            let m = sample_quadrangulation(3000, &mut rng);
            let f = f_function(&m, m.root()).unwrap();
            for _ in 0..250 {
                for d in [&f.dx, &f.dy] {
                    let g = random_geodesic(&m, d, usize::MAX, &mut rng);
                    assert!(check_geodesic_monotone(&m, &f, &g).unwrap());
                    tested += 1;
                }
            }
        }
        assert_eq!(tested, 10_000);
    }

    #[test]
    fn root_edge_and_bad_paths() {
        let m = path_map();
        let f = f_function(&m, m.root()).unwrap();
        let edge = GeodesicPath {
            vertices: vec![f.x, f.y],
            base: f.x,
            flavor: PathFlavor::Geodesic,
        };
        assert!(check_geodesic_monotone(&m, &f, &edge).unwrap());
        let back = GeodesicPath {
            vertices: vec![f.y, f.x, f.y],
            base: f.y,
            flavor: PathFlavor::Geodesic,
        };
        assert!(matches!(
            check_geodesic_monotone(&m, &f, &back),
            Err(GeodesicError::NotAGeodesic(_))
        ));
        let z = m.target(2);
        let other = GeodesicPath {
            vertices: vec![z],
            base: z,
            flavor: PathFlavor::Geodesic,
        };
        assert!(check_geodesic_monotone(&m, &f, &other).is_err());
    }

    #[test]
    fn far_side_is_constant_whenever_a_cycle_is() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut found = 0;
        for _ in 0..30 {
            let m = sample_quadrangulation(3000, &mut rng);
            let f = f_function(&m, m.root()).unwrap();
            let ctx = HullContext::new(&m, f.x).unwrap();
            let rmax = (ctx.depth() - 1).min(12);
            let levels = constant_levels(&ctx, &f, rmax).unwrap();
            for lc in &levels {
                assert_eq!(lc.far_side_violations, 0, "level {}", lc.level);
            }
            match min_constant_radius(&ctx, &f, rmax).unwrap() {
                Some(cr) => {
                    found += 1;
                    assert!(cr.exceptional < m.n_vertices());
                    assert!(levels
                        .iter()
                        .take_while(|l| l.level < cr.level)
                        .all(|l| l.value.is_none()));
                }
                None => assert!(levels.iter().all(|l| l.value.is_none())),
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn small_maps_with_a_single_exception() {
        // maps where f = +1 except at x have R* = 2 whenever level 2 exists
        let mut seen = 0;
        for n in 3..=4 {
            for t in all_labeled_trees(n) {
                let m = cvs_forward(&t, Sign::Plus).map;
                let f = f_function(&m, m.root()).unwrap();
                if f.counts().0 != 1 {
                    continue;
                }
                let ctx = HullContext::new(&m, f.x).unwrap();
                if ctx.depth() <= 2 {
                    continue;
                }
                let cr = min_constant_radius(&ctx, &f, 2)
                    .unwrap()
                    .expect("constant on level 2");
                assert_eq!((cr.level, cr.value, cr.exceptional), (2, 1, 1));
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn rightmost_geodesics_form_a_deterministic_forest() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let m = sample_quadrangulation(2000, &mut rng);
            let x = m.root_vertex();
            let far = far_vertex(&m, x);
            let sf = SlitField::new(&m, x, far).unwrap();
            let succ = sf.rightmost_forest().unwrap();
            for z in 0..m.n_vertices() as Vertex {
                if !sf.in_slit[z as usize] || z == x {
                    continue;
                }
                let s = succ[z as usize].expect("every vertex but the base has a successor");
                assert_eq!(sf.dist.get(s) + 1, sf.dist.get(z));
                if z != far {
                    let all = sf.successors_all_starts(z);
                    assert!(all.iter().all(|&b| b == Some(s)), "z = {z}: {all:?}");
                }
                let g = sf.rightmost_geodesic(z).unwrap();
                assert_eq!(g.len() as u32, sf.dist.get(z));
                assert_eq!(*g.vertices.last().unwrap(), x);
                let slit = sf.slit_path(z).unwrap();
                assert!(slit
                    .vertices
                    .windows(2)
                    .all(|w| sf.dist.get(w[1]) >= sf.dist.get(w[0])));
            }
        }
    }

    #[test]
    fn divergence_records_have_the_printed_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let (mut total, mut bad) = (0, 0);
        for _ in 0..40 {
            let m = sample_quadrangulation(3000, &mut rng);
            let far = far_vertex(&m, m.root_vertex());
            let scan = divergence_points(&m, m.root(), far).unwrap();
            assert_eq!(*scan.trunk.vertices.last().unwrap(), m.root_vertex());
            total += scan.records.len();
            bad += scan.records.iter().filter(|r| !r.holds()).count();
        }
        assert!(total > 0);
        assert_eq!(bad, 0, "{bad} of {total} records");
    }

    #[test]
    fn locality_of_schaeffer_arcs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let m = sample_quadrangulation(2000, &mut rng);
            let c = sch_symmetric_difference(&m, m.root()).unwrap();
            assert!(c <= m.n_faces());
        }
        let c = cube();
        assert!(sch_symmetric_difference(&c, c.root()).unwrap() <= 6);
    }

    #[test]
    fn h_field_and_pointed_degeneration() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..10 {
            let m = sample_quadrangulation(1500, &mut rng);
            let far = far_vertex(&m, m.root_vertex());
            let hf = h_field(&m, far).unwrap();
            assert!(hf.is_consistent(&m));
            assert!(sch_infinity_matches_pointed(&m, far).unwrap());
            let st = sch_infinity(&m, far, 4).unwrap();
            assert!(st.components >= 1 && st.components <= st.window_vertices);
            assert!(st.offspring_hist.iter().sum::<u64>() > 0);
        }
    }
}
