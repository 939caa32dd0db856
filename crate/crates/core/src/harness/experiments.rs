use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::edge_walk::{edge_walk_stationarity, edge_walk_visits};
use super::rng::{replica_rng, ReplicaRng};
use super::stats::{chi_square, Aggregate, ChiSquare, StatRecord, Summary};
use super::{Check, Experiment, ExperimentConfig, ExperimentReport, HarnessError, Table};
use crate::geodesics::{
    check_geodesic_monotone, constant_levels_on, divergence_points_with, f_function,
    first_constant, random_geodesic, sch_infinity, sch_symmetric_difference_with, trunk_approaches,
    SchInfinityStats, SlitField, TrunkApproach,
};
use crate::hulls::{far_vertex, HullContext};
use crate::planar_map::{bfs_distances, RootedQuadrangulation};
use crate::schaeffer::{
    all_labeled_trees, cvs_forward, cvs_inverse, sample_pointed_quadrangulation,
    sample_quadrangulation, LabeledPlaneTree, PointedQuadrangulation, Sign,
};
use crate::skeleton_process::series::ratio_to_f64;
use crate::skeleton_process::{
    check_all_identities, expected_inverse_cycle_length_closed, f_series, phi_closed,
    prob_single_ancestor_closed, transition_prob, CycleChainSampler,
};

pub(super) fn run(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    let (samples, summary, checks, tables) = match cfg.experiment {
        Experiment::Sample => sample(cfg),
        Experiment::Census => census(cfg),
        Experiment::SeriesCheck => series_check(cfg),
        Experiment::Hull => hull(cfg),
        Experiment::Theorem1 => theorem1(cfg),
        Experiment::SkeletonStats => skeleton_stats(cfg)?,
        Experiment::EdgeWalk => edge_walk(cfg),
        Experiment::Converge => converge(cfg),
        Experiment::Conjectures => conjectures(cfg),
    };
    Ok(ExperimentReport {
        config: cfg.clone(),
        samples,
        summary,
        checks,
        tables,
    })
}

type Parts = (Vec<Value>, Value, Vec<Check>, Vec<Table>);

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

/// Runs `f` on every replica in parallel, in replica order.
fn replicas<T: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(u64, &mut ReplicaRng) -> T + Sync,
) -> Vec<T> {
    (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| f(i, &mut replica_rng(cfg.seed, i)))
        .collect()
}

fn summaries_json(agg: &Aggregate) -> Value {
    serde_json::to_value(agg.summaries()).expect("serializable")
}

/// The tree labels, shifted to distances, match BFS from the pointed vertex.
pub fn distance_encoding_holds(tree: &LabeledPlaneTree, pq: &PointedQuadrangulation) -> bool {
    let dist = bfs_distances(&pq.map, pq.pointed).expect("pointed vertex exists");
    dist.get(pq.pointed) == 0
        && pq
            .tree_vertex
            .iter()
            .zip(tree.labels())
            .all(|(&v, &l)| dist.get(v) as i64 == l)
}

/// Forward then inverse gives back the tree and sign.
pub fn round_trip_holds(tree: &LabeledPlaneTree, sign: Sign) -> bool {
    let pq = cvs_forward(tree, sign);
    matches!(cvs_inverse(&pq.map, pq.pointed), Ok((t, s)) if &t == tree && s == sign)
}

fn sample(cfg: &ExperimentConfig) -> Parts {
    let rows = replicas(cfg, |_, rng| {
        let (tree, sign, pq) = sample_pointed_quadrangulation(cfg.faces, rng);
        let m = &pq.map;
        let root_dist = bfs_distances(m, m.root_vertex()).expect("root exists");
        let mut rec = StatRecord::new();
        rec.set("vertices", m.n_vertices() as f64)
            .set("root_eccentricity", root_dist.eccentricity() as f64)
            .set(
                "pointed_eccentricity",
                *tree.labels().iter().max().expect("nonempty") as f64,
            )
            .set(
                "max_degree",
                (0..m.n_vertices() as u32)
                    .map(|v| m.degree(v))
                    .max()
                    .unwrap_or(0) as f64,
            )
            .set(
                "distance_encoding",
                distance_encoding_holds(&tree, &pq) as u8 as f64,
            );
        let data = json!({ "stats": rec, "sign": sign, "ltree": tree.to_ltree() });
        (rec, data)
    });
    let agg: Aggregate = rows.iter().map(|(r, _)| r.clone()).collect();
    let ok = agg.values("distance_encoding").iter().all(|&v| v == 1.0);
    let checks = vec![check(
        "distance encoding",
        ok,
        format!("{} samples", rows.len()),
    )];
    (
        rows.into_iter().map(|(_, d)| d).collect(),
        summaries_json(&agg),
        checks,
        Vec::new(),
    )
}

/// Number of rooted quadrangulations with `n` faces.
pub fn expected_census(n: usize) -> u64 {
    // 2 * 3^n * Cat(n) / (n + 2)
    let mut cat: u64 = 1;
    for k in 0..n as u64 {
        cat = cat * 2 * (2 * k + 1) / (k + 2);
    }
    2 * 3u64.pow(n as u32) * cat / (n as u64 + 2)
}

/// Distinct rooted maps obtained from all labeled trees with `n` edges.
pub fn census_count(n: usize) -> usize {
    all_labeled_trees(n)
        .iter()
        .flat_map(|t| Sign::BOTH.map(|s| cvs_forward(t, s).map.canonical_code()))
        .collect::<HashSet<_>>()
        .len()
}

/// Frequencies of the rooted maps with `n` faces over `draws` samples, in
/// the order of their canonical codes.
pub fn census_frequencies(n: usize, draws: usize, seed: u64) -> Vec<u64> {
    let codes: Vec<Vec<u32>> = (0..draws as u64)
        .into_par_iter()
        .map(|i| sample_quadrangulation(n, &mut replica_rng(seed, i)).canonical_code())
        .collect();
    let mut h: BTreeMap<Vec<u32>, u64> = all_labeled_trees(n)
        .iter()
        .flat_map(|t| Sign::BOTH.map(|s| (cvs_forward(t, s).map.canonical_code(), 0)))
        .collect();
    for c in codes {
        *h.get_mut(&c).expect("sampled map is in the census") += 1;
    }
    h.into_values().collect()
}

fn census(cfg: &ExperimentConfig) -> Parts {
    let n = cfg.faces;
    let distinct = census_count(n);
    let expected = expected_census(n);
    let freq = census_frequencies(n, cfg.samples, cfg.seed);
    let probs = vec![1.0 / freq.len() as f64; freq.len()];
    let chi = chi_square(&freq, &probs);
    let samples = freq
        .iter()
        .enumerate()
        .map(|(i, &c)| json!({ "class": i, "count": c, "expected": cfg.samples as f64 / freq.len() as f64 }))
        .collect();
    let checks = vec![
        check(
            "distinct rooted maps",
            distinct as u64 == expected,
            format!("{distinct} found, {expected} expected"),
        ),
        check(
            "sampler uniform (p > 0.001)",
            chi.p_value > 0.001,
            format!("{chi:?}"),
        ),
    ];
    let table = Table {
        name: "census".into(),
        columns: vec!["class".into(), "count".into()],
        rows: freq
            .iter()
            .enumerate()
            .map(|(i, c)| vec![i.to_string(), c.to_string()])
            .collect(),
    };
    let summary =
        json!({ "faces": n, "distinct": distinct, "expected": expected, "chi_square": chi });
    (samples, summary, checks, vec![table])
}

fn series_check(cfg: &ExperimentConfig) -> Parts {
    let (k, rmax) = (cfg.truncation, cfg.rmax as usize);
    let ids = check_all_identities(k, rmax);
    let checks: Vec<Check> = ids
        .iter()
        .map(|c| check(c.name.clone(), c.pass, c.detail.clone()))
        .collect();
    let samples = ids
        .iter()
        .map(|c| serde_json::to_value(c).expect("serializable"))
        .collect();

    let f = f_series(k);
    let phis: Vec<_> = (1..=rmax).map(|r| phi_closed(r, k)).collect();
    let mut columns = vec!["k".to_string(), "F".to_string()];
    columns.extend((1..=rmax).map(|r| format!("phi_{r}")));
    let rows = (0..=k)
        .map(|i| {
            let mut row = vec![i.to_string(), f.at(i).to_string()];
            row.extend(phis.iter().map(|p| p.at(i).to_string()));
            row
        })
        .collect();
    let r = 1000usize;
    let e = expected_inverse_cycle_length_closed(r);
    let scaled = ratio_to_f64(&e) * (r * r) as f64;
    let summary = json!({
        "identities": checks.len(),
        "passed": checks.iter().filter(|c| c.pass).count(),
        "r2_expected_inverse_cycle_length_at_1000": scaled,
    });
    (
        samples,
        summary,
        checks,
        vec![Table {
            name: "coefficients".into(),
            columns,
            rows,
        }],
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct HullSample {
    pub depth: u32,
    pub rmax_used: u32,
    pub cycle_lengths: Vec<usize>,
    /// Offspring counts of the edges of each level, from level 1.
    pub offspring: Vec<Vec<usize>>,
    pub invariants_ok: bool,
    pub far_components: usize,
    /// `(r, h, all edges of gamma_r have one ancestor at r + h)`.
    pub single_ancestor: Vec<(u32, u32, bool)>,
    pub error: Option<String>,
}

pub fn hull_sample(map: &RootedQuadrangulation, rmax: u32, radius: u32) -> HullSample {
    let ctx = HullContext::new(map, map.root_vertex()).expect("root exists");
    let depth = ctx.depth();
    let rmax_used = rmax.min(depth.saturating_sub(1));
    let far_components = ctx.count_far_components(radius);
    let mut out = HullSample {
        depth,
        rmax_used,
        cycle_lengths: Vec::new(),
        offspring: Vec::new(),
        invariants_ok: false,
        far_components,
        single_ancestor: Vec::new(),
        error: None,
    };
    if rmax_used == 0 {
        out.invariants_ok = true;
        return out;
    }
    match ctx.hull_decomposition(rmax_used) {
        Err(e) => out.error = Some(e.to_string()),
        Ok(hd) => {
            out.cycle_lengths = hd.cycle_lengths();
            out.offspring = (1..=rmax_used)
                .map(|r| hd.skeleton.offspring_counts(r))
                .collect();
            let cycles_ok = hd
                .cycles
                .iter()
                .all(|c| c.verify(map, &ctx.dist, ctx.far).is_ok());
            let nested = hd
                .cycles
                .windows(2)
                .all(|w| w[1].hole.iter().zip(&w[0].hole).all(|(&a, &b)| !a || b));
            out.invariants_ok = cycles_ok && nested && hd.skeleton.is_partition();
            for r in 1..rmax_used {
                for h in 1..=rmax_used - r {
                    out.single_ancestor
                        .push((r, h, hd.skeleton.ancestors(r, h) == 1));
                }
            }
        }
    }
    out
}

fn hull(cfg: &ExperimentConfig) -> Parts {
    let rows = replicas(cfg, |_, rng| {
        hull_sample(
            &sample_quadrangulation(cfg.faces, rng),
            cfg.rmax,
            cfg.radius,
        )
    });
    let mut agg = Aggregate::new();
    let mut ancestor: BTreeMap<(u32, u32), (u64, u64)> = BTreeMap::new();
    for s in &rows {
        let mut rec = StatRecord::new();
        for (i, &l) in s.cycle_lengths.iter().enumerate() {
            rec.set(format!("inv_len_{}", i + 1), 1.0 / l as f64);
            rec.set(format!("len_{}", i + 1), l as f64);
        }
        rec.set("far_components", s.far_components as f64);
        rec.set("unique_far_component", (s.far_components == 1) as u8 as f64);
        agg.add(&rec);
        for &(r, h, one) in &s.single_ancestor {
            let e = ancestor.entry((r, h)).or_default();
            e.0 += one as u64;
            e.1 += 1;
        }
    }
    let sums = agg.summaries();
    let mut table = Table {
        name: "inverse_cycle_length".into(),
        columns: ["r", "samples", "mean", "sem", "exact"]
            .map(String::from)
            .to_vec(),
        rows: Vec::new(),
    };
    for r in 1..=cfg.rmax {
        if let Some(s) = sums.get(&format!("inv_len_{r}")) {
            let exact = ratio_to_f64(&expected_inverse_cycle_length_closed(r as usize));
            table.rows.push(vec![
                r.to_string(),
                s.count.to_string(),
                s.mean.to_string(),
                s.sem().to_string(),
                exact.to_string(),
            ]);
        }
    }
    let anc_rows: Vec<Vec<String>> = ancestor
        .iter()
        .map(|(&(r, h), &(k, n))| {
            let exact = ratio_to_f64(&prob_single_ancestor_closed(r as usize, h as usize));
            vec![
                r.to_string(),
                h.to_string(),
                n.to_string(),
                (k as f64 / n as f64).to_string(),
                exact.to_string(),
            ]
        })
        .collect();
    let anc_table = Table {
        name: "single_ancestor".into(),
        columns: ["r", "h", "samples", "fraction", "exact"]
            .map(String::from)
            .to_vec(),
        rows: anc_rows,
    };
    let errors = rows.iter().filter(|s| s.error.is_some()).count();
    let bad = rows
        .iter()
        .filter(|s| s.error.is_none() && !s.invariants_ok)
        .count();
    let checks = vec![check(
        "hull invariants",
        bad == 0,
        format!("{bad} violating samples, {errors} degenerate"),
    )];
    let summary = json!({ "stats": summaries_json(&agg), "degenerate": errors });
    let samples = rows
        .iter()
        .map(|s| serde_json::to_value(s).expect("serializable"))
        .collect();
    (samples, summary, checks, vec![table, anc_table])
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem1Sample {
    pub faces: usize,
    pub depth: u32,
    pub rmax_used: u32,
    pub r_star: Option<u32>,
    pub f_value: Option<i8>,
    /// `#W` at `R*`.
    pub exceptional: Option<usize>,
    /// Levels in `2..=rmax_used` where `f` is constant.
    pub constant_levels: Vec<u32>,
    pub far_side_violations: usize,
    pub geodesics_tested: usize,
    pub monotonicity_violations: usize,
    pub sch_symmetric_difference: usize,
    /// Divergence points per level `d_x(v)`.
    pub divergence_by_level: BTreeMap<u32, usize>,
    pub divergence_violations: usize,
    pub trunk_approaches: Vec<TrunkApproach>,
    pub error: Option<String>,
}

/// All re-rooting measurements on one map rooted at its root dart.
pub fn theorem1_sample<R: Rng + ?Sized>(
    map: &RootedQuadrangulation,
    rmax: u32,
    geodesics: usize,
    rng: &mut R,
) -> Theorem1Sample {
    let f = f_function(map, map.root()).expect("root dart exists");
    let ctx = HullContext::new(map, f.x).expect("root exists");
    let depth = ctx.depth();
    let rmax_used = rmax.min(depth.saturating_sub(1));
    let mut out = Theorem1Sample {
        faces: map.n_faces(),
        depth,
        rmax_used,
        r_star: None,
        f_value: None,
        exceptional: None,
        constant_levels: Vec::new(),
        far_side_violations: 0,
        geodesics_tested: 0,
        monotonicity_violations: 0,
        sch_symmetric_difference: 0,
        divergence_by_level: BTreeMap::new(),
        divergence_violations: 0,
        trunk_approaches: Vec::new(),
        error: None,
    };
    for _ in 0..geodesics {
        for d in [&f.dx, &f.dy] {
            let g = random_geodesic(map, d, usize::MAX, rng);
            out.geodesics_tested += 1;
            if !matches!(check_geodesic_monotone(map, &f, &g), Ok(true)) {
                out.monotonicity_violations += 1;
            }
        }
    }
    match sch_symmetric_difference_with(map, &f) {
        Ok(c) => out.sch_symmetric_difference = c,
        Err(e) => out.error = Some(e.to_string()),
    }
    let hd = if rmax_used >= 1 {
        match ctx.hull_decomposition(rmax_used) {
            Ok(hd) => Some(hd),
            Err(e) => {
                out.error = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    if let Some(hd) = &hd {
        let levels = constant_levels_on(map, f.x, &f, &hd.cycles);
        out.constant_levels = levels
            .iter()
            .filter(|l| l.value.is_some())
            .map(|l| l.level)
            .collect();
        out.far_side_violations = levels.iter().map(|l| l.far_side_violations).sum();
        if let Some(cr) = first_constant(&f, &levels) {
            out.r_star = Some(cr.level);
            out.f_value = Some(cr.value);
            out.exceptional = Some(cr.exceptional);
        }
    }
    let scan = SlitField::with_distances(map, f.dx.clone(), ctx.far).and_then(|sx| {
        let sy = SlitField::with_distances(map, f.dy.clone(), ctx.far)?;
        divergence_points_with(&f, &sx, &sy)
    });
    match scan {
        Ok(scan) => {
            for r in &scan.records {
                *out.divergence_by_level.entry(r.level).or_default() += 1;
                out.divergence_violations += !r.holds() as usize;
            }
            if let Some(hd) = &hd {
                out.trunk_approaches = trunk_approaches(hd, &scan.trunk, &f.dx);
            }
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

/// Fraction of samples with `R*` found, and the median symmetric difference.
fn theorem1_summary(rows: &[Theorem1Sample]) -> (Value, Vec<Check>) {
    let n = rows.len() as f64;
    let found = rows.iter().filter(|s| s.r_star.is_some()).count() as f64 / n;
    let diffs: Vec<f64> = rows
        .iter()
        .map(|s| s.sch_symmetric_difference as f64)
        .collect();
    let monotone: usize = rows.iter().map(|s| s.monotonicity_violations).sum();
    let far_side: usize = rows.iter().map(|s| s.far_side_violations).sum();
    let div_bad: usize = rows.iter().map(|s| s.divergence_violations).sum();
    let div_total: usize = rows
        .iter()
        .flat_map(|s| s.divergence_by_level.values())
        .sum();
    let errors = rows.iter().filter(|s| s.error.is_some()).count();
    let approaches: Vec<&TrunkApproach> = rows.iter().flat_map(|s| &s.trunk_approaches).collect();
    let near = approaches.iter().filter(|a| a.distance == 0).count();
    let mean_inv: f64 = if approaches.is_empty() {
        0.0
    } else {
        approaches
            .iter()
            .map(|a| 1.0 / a.cycle_len as f64)
            .sum::<f64>()
            / approaches.len() as f64
    };
    let summary = json!({
        "samples": rows.len(),
        "fraction_r_star_found": found,
        "sch_symmetric_difference": Summary::of(&diffs),
        "monotonicity_violations": monotone,
        "far_side_violations": far_side,
        "divergence_points": div_total,
        "divergence_violations": div_bad,
        "degenerate": errors,
        "trunk_levels_measured": approaches.len(),
        "trunk_adjacent_fraction": if approaches.is_empty() { 0.0 } else { near as f64 / approaches.len() as f64 },
        "trunk_mean_inverse_cycle_length": mean_inv,
    });
    let checks = vec![
        check(
            "monotonicity of f along geodesics",
            monotone == 0,
            format!("{monotone} violations"),
        ),
        check(
            "far-side constancy",
            far_side == 0,
            format!("{far_side} violations"),
        ),
        check(
            "divergence point properties",
            div_bad == 0,
            format!("{div_bad} of {div_total} records"),
        ),
    ];
    (summary, checks)
}

fn theorem1(cfg: &ExperimentConfig) -> Parts {
    let sizes = if cfg.sizes.is_empty() {
        vec![cfg.faces]
    } else {
        cfg.sizes.clone()
    };
    let mut samples = Vec::new();
    let mut checks = Vec::new();
    let mut per_size = Vec::new();
    let mut table = Table {
        name: "theorem1".into(),
        columns: [
            "faces",
            "samples",
            "fraction_r_star_found",
            "median_sch_symmetric_difference",
        ]
        .map(String::from)
        .to_vec(),
        rows: Vec::new(),
    };
    for (si, &n) in sizes.iter().enumerate() {
        let sub = ExperimentConfig {
            seed: cfg.seed ^ ((si as u64) << 48),
            ..cfg.clone()
        };
        let rows = replicas(&sub, |_, rng| {
            let map = sample_quadrangulation(n, rng);
            theorem1_sample(&map, cfg.rmax, cfg.geodesics, rng)
        });
        let (summary, c) = theorem1_summary(&rows);
        table.rows.push(vec![
            n.to_string(),
            rows.len().to_string(),
            summary["fraction_r_star_found"].to_string(),
            summary["sch_symmetric_difference"]["median"].to_string(),
        ]);
        checks.extend(c.into_iter().map(|c| Check {
            name: format!("N={n}: {}", c.name),
            ..c
        }));
        per_size.push(json!({ "faces": n, "summary": summary }));
        samples.extend(
            rows.iter()
                .map(|s| serde_json::to_value(s).expect("serializable")),
        );
    }
    (samples, json!({ "sizes": per_size }), checks, vec![table])
}

#[derive(Debug, Clone, Serialize)]
pub struct SkeletonChainStats {
    pub trajectories: usize,
    pub truncation: usize,
    /// `(R, empirical mean of 1/|gamma_R|, standard error, exact)`.
    pub inverse_length: Vec<(u32, f64, f64, f64)>,
    /// Observed steps out of state 1.
    pub from_one: u64,
    /// `(k, empirical frequency of 1 -> k, exact)`.
    pub transitions_from_one: Vec<(usize, f64, f64)>,
}

impl SkeletonChainStats {
    /// Largest `|z|` of the inverse-length means.
    pub fn max_inverse_length_z(&self) -> f64 {
        self.inverse_length
            .iter()
            .map(|&(_, m, se, e)| ((m - e) / se).abs())
            .fold(0.0, f64::max)
    }

    /// Largest binomial `|z|` of the transition frequencies.
    pub fn max_transition_z(&self) -> f64 {
        let n = self.from_one as f64;
        self.transitions_from_one
            .iter()
            .map(|&(_, q, p)| ((q - p) / (p * (1.0 - p) / n).sqrt()).abs())
            .fold(0.0, f64::max)
    }
}

/// Monte Carlo summary of `trajectories` runs of the chain on levels
/// `0..=r_end`.
pub fn skeleton_chain_stats(
    r_end: u32,
    trajectories: usize,
    seed: u64,
    truncation: usize,
    max_k: usize,
) -> Result<(SkeletonChainStats, Vec<Vec<u64>>), HarnessError> {
    let sampler = CycleChainSampler::with_adaptive_truncation(r_end as usize, truncation);
    let paths: Vec<Vec<u64>> = (0..trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(seed, i);
            loop {
                // a length beyond the truncation is redrawn; its mass is below 1e-12
                if let Ok(p) = sampler.sample(&mut rng) {
                    return p;
                }
            }
        })
        .collect();
    let mut inverse_length = Vec::new();
    for r in 1..=r_end {
        let v: Vec<f64> = paths.iter().map(|p| 1.0 / p[r as usize] as f64).collect();
        let s = Summary::of(&v).expect("nonempty");
        let exact = ratio_to_f64(&expected_inverse_cycle_length_closed(r as usize));
        inverse_length.push((r, s.mean, s.sem(), exact));
    }
    let mut counts = vec![0u64; max_k + 1];
    let mut from_one = 0;
    for p in &paths {
        for w in p.windows(2) {
            if w[0] == 1 {
                from_one += 1;
                if (w[1] as usize) <= max_k {
                    counts[w[1] as usize] += 1;
                }
            }
        }
    }
    let transitions_from_one = (1..=max_k)
        .map(|k| {
            let exact =
                ratio_to_f64(&transition_prob(1, k, 1, max_k).expect("k within truncation"));
            (k, counts[k] as f64 / from_one as f64, exact)
        })
        .collect();
    Ok((
        SkeletonChainStats {
            trajectories,
            truncation: sampler.truncation(),
            inverse_length,
            from_one,
            transitions_from_one,
        },
        paths,
    ))
}

fn skeleton_stats(cfg: &ExperimentConfig) -> Result<Parts, HarnessError> {
    let (stats, paths) = skeleton_chain_stats(cfg.rmax, cfg.samples, cfg.seed, cfg.truncation, 6)?;
    let zi = stats.max_inverse_length_z();
    let zt = stats.max_transition_z();
    let checks = vec![
        check(
            "E[1/|gamma_R|] within 3 sigma",
            zi <= 3.0,
            format!("max |z| = {zi:.3}"),
        ),
        check(
            "transitions from 1 within 3 sigma",
            zt <= 3.0,
            format!("max |z| = {zt:.3}"),
        ),
    ];
    let table = Table {
        name: "inverse_cycle_length".into(),
        columns: ["r", "mean", "sem", "exact"].map(String::from).to_vec(),
        rows: stats
            .inverse_length
            .iter()
            .map(|&(r, m, s, e)| vec![r.to_string(), m.to_string(), s.to_string(), e.to_string()])
            .collect(),
    };
    let samples = paths.iter().map(|p| json!({ "lengths": p })).collect();
    Ok((samples, serde_json::to_value(&stats)?, checks, vec![table]))
}

fn edge_walk(cfg: &ExperimentConfig) -> Parts {
    let mut maps: BTreeMap<Vec<u32>, RootedQuadrangulation> = BTreeMap::new();
    for n in 1..=cfg.faces {
        for t in all_labeled_trees(n) {
            for s in Sign::BOTH {
                let m = cvs_forward(&t, s).map;
                maps.entry(m.canonical_code()).or_insert(m);
            }
        }
    }
    let reports: Vec<_> = maps
        .values()
        .map(|m| (m.n_faces(), edge_walk_stationarity(m)))
        .collect();
    let exact_ok = reports.iter().all(|(_, r)| r.pass());
    let mut samples: Vec<Value> = reports
        .iter()
        .map(|(n, r)| json!({ "faces": n, "exact": r }))
        .collect();
    let mut checks = vec![check(
        "uniform law is the stationary law",
        exact_ok,
        format!("{} maps with at most {} faces", reports.len(), cfg.faces),
    )];
    let mut visits = Vec::new();
    for (si, &n) in cfg.sizes.iter().enumerate() {
        let mut rng = replica_rng(cfg.seed, si as u64);
        let m = sample_quadrangulation(n, &mut rng);
        let steps = cfg.samples as u64 * m.n_darts() as u64;
        let v = edge_walk_visits(&m, steps, &mut rng);
        samples.push(json!({ "faces": n, "visits": v }));
        visits.push(v);
    }
    // batch-mean z-scores use 19 dof, so about 0.8% of darts exceed 3
    checks.push(check(
        "long-run visits within 3 sigma (at least 97% of darts)",
        visits.iter().all(|v| v.within_3_sigma >= 0.97),
        visits
            .iter()
            .map(|v| format!("{:.3} within 3 sigma", v.within_3_sigma))
            .collect::<Vec<_>>()
            .join(", "),
    ));
    let summary = json!({ "exact_maps": reports.len(), "exact_pass": exact_ok, "visits": visits });
    (samples, summary, checks, Vec::new())
}

fn converge(cfg: &ExperimentConfig) -> Parts {
    let r =
        super::convergence::local_convergence_probe(&cfg.sizes, cfg.radius, cfg.samples, cfg.seed);
    let samples = r
        .histograms
        .iter()
        .zip(&r.sizes)
        .map(|(h, n)| json!({ "faces": n, "histogram": h }))
        .collect();
    let table = Table {
        name: "tv".into(),
        columns: ["from", "to", "tv"].map(String::from).to_vec(),
        rows: r
            .sizes
            .windows(2)
            .zip(&r.tv)
            .map(|(w, tv)| vec![w[0].to_string(), w[1].to_string(), tv.to_string()])
            .collect(),
    };
    let summary = json!({ "radius": r.radius, "sizes": r.sizes, "types": r.types, "tv": r.tv });
    (samples, summary, Vec::new(), vec![table])
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureSample {
    pub far_distance: u32,
    pub stats: SchInfinityStats,
}

pub fn conjecture_sample(map: &RootedQuadrangulation, window: u32) -> ConjectureSample {
    let root = map.root_vertex();
    let far = far_vertex(map, root);
    let far_distance = bfs_distances(map, root).expect("root exists").get(far);
    let stats = sch_infinity(map, far, window).expect("valid map");
    ConjectureSample {
        far_distance,
        stats,
    }
}

/// Offspring bins `0..=5` and a tail bin against geometric-1/2.
fn offspring_chi_square(hist: &[u64]) -> ChiSquare {
    let bins = 6;
    let mut obs = vec![0u64; bins + 1];
    for (k, &c) in hist.iter().enumerate() {
        obs[k.min(bins)] += c;
    }
    let mut probs: Vec<f64> = (0..bins).map(|k| 0.5f64.powi(k as i32 + 1)).collect();
    probs.push(0.5f64.powi(bins as i32));
    chi_square(&obs, &probs)
}

fn conjectures(cfg: &ExperimentConfig) -> Parts {
    let rows = replicas(cfg, |_, rng| {
        conjecture_sample(&sample_quadrangulation(cfg.faces, rng), cfg.radius)
    });
    let mut offspring: Vec<u64> = Vec::new();
    let mut increments = [0u64; 3];
    let mut comps = Vec::new();
    for s in &rows {
        if offspring.len() < s.stats.offspring_hist.len() {
            offspring.resize(s.stats.offspring_hist.len(), 0);
        }
        for (k, &c) in s.stats.offspring_hist.iter().enumerate() {
            offspring[k] += c;
        }
        for (acc, c) in increments.iter_mut().zip(s.stats.increment_hist) {
            *acc += c;
        }
        comps.push(s.stats.components as f64);
    }
    let chi_off = offspring_chi_square(&offspring);
    let chi_inc = chi_square(&increments, &[1.0 / 3.0; 3]);
    let connected = comps.iter().filter(|&&c| c == 1.0).count() as f64 / comps.len() as f64;
    let summary = json!({
        "window": cfg.radius,
        "components": Summary::of(&comps),
        "fraction_connected": connected,
        "offspring_hist": offspring,
        "offspring_vs_geometric_half": chi_off,
        "increment_hist": increments,
        "increments_vs_uniform": chi_inc,
    });
    let table = Table {
        name: "offspring".into(),
        columns: ["k", "count", "geometric_half"].map(String::from).to_vec(),
        rows: offspring
            .iter()
            .enumerate()
            .map(|(k, c)| {
                vec![
                    k.to_string(),
                    c.to_string(),
                    0.5f64.powi(k as i32 + 1).to_string(),
                ]
            })
            .collect(),
    };
    let samples = rows
        .iter()
        .map(|s| serde_json::to_value(s).expect("serializable"))
        .collect();
    (samples, summary, Vec::new(), vec![table])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn census_formula() {
        assert_eq!(
            (1..=4).map(expected_census).collect::<Vec<_>>(),
            vec![2, 9, 54, 378]
        );
        assert_eq!(census_count(4), 378);
    }

    #[test]
    fn chain_stats_small_run() {
        let (s, paths) = skeleton_chain_stats(3, 2000, 5, 128, 4).unwrap();
        assert_eq!(paths.len(), 2000);
        assert_eq!(s.inverse_length.len(), 3);
        assert!(s.from_one > 0);
        assert!((s.transitions_from_one[0].2 - 5.0 / 27.0).abs() < 1e-15);
    }

    #[test]
    fn edge_walk_experiment_passes() {
        let mut cfg = ExperimentConfig::new(Experiment::EdgeWalk);
        cfg.faces = 2;
        cfg.sizes = vec![50];
        cfg.samples = 20;
        let r = run(&cfg).unwrap();
        assert!(r.all_pass());
        assert_eq!(r.summary["exact_maps"], 11);
    }

    #[test]
    fn theorem1_small_maps() {
        let mut cfg = ExperimentConfig::new(Experiment::Theorem1);
        cfg.faces = 500;
        cfg.samples = 8;
        cfg.rmax = 6;
        cfg.geodesics = 5;
        let r = run(&cfg).unwrap();
        assert!(r.all_pass(), "{:?}", r.checks);
        assert_eq!(r.samples.len(), 8);
    }
}
