//! Finite ℓ1 covers of the mixture-weight set.
//!
//! The full simplex over `k` sources is covered by the rational grid
//! `{c / m : c ∈ N^k, Σc = m}` with `m = ⌈2(k−1)/ε⌉`. Rounding any simplex
//! point to the grid by largest remainders moves each coordinate by less than
//! `1/m`, so the ℓ1 error is below `k/m ≤ 2(k−1)/m ≤ ε` for `k ≥ 2`.
//! Convex hulls of given vertices use the same grid in barycentric
//! coordinates; the barycentric map is ℓ1-non-expansive, so the radius carries
//! over.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::MixtureWeights;
use crate::error::{Error, Result};
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSetKind {
    FullSimplex,
    FiniteList,
    VertexHull,
}

/// Description of the valid mixture-weight set Λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSetSpec {
    pub kind: WeightSetKind,
    pub num_sources: usize,
    #[serde(default)]
    pub vertices: Vec<MixtureWeights>,
}

impl WeightSetSpec {
    pub fn full_simplex(num_sources: usize) -> Self {
        Self {
            kind: WeightSetKind::FullSimplex,
            num_sources,
            vertices: Vec::new(),
        }
    }

    pub fn finite_list(points: Vec<MixtureWeights>) -> Result<Self> {
        Self::with_vertices(WeightSetKind::FiniteList, points)
    }

    pub fn vertex_hull(vertices: Vec<MixtureWeights>) -> Result<Self> {
        Self::with_vertices(WeightSetKind::VertexHull, vertices)
    }

    fn with_vertices(kind: WeightSetKind, vertices: Vec<MixtureWeights>) -> Result<Self> {
        let spec = Self {
            kind,
            num_sources: vertices.first().map_or(0, MixtureWeights::len),
            vertices,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sources == 0 {
            return Err(Error::invalid("weight set needs at least one source"));
        }
        match self.kind {
            WeightSetKind::FullSimplex => Ok(()),
            WeightSetKind::FiniteList | WeightSetKind::VertexHull => {
                if self.vertices.is_empty() {
                    return Err(Error::invalid("weight set needs at least one point"));
                }
                if let Some(v) = self.vertices.iter().find(|v| v.len() != self.num_sources) {
                    return Err(Error::DimensionMismatch {
                        expected: self.num_sources,
                        actual: v.len(),
                    });
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSet {
    pub points: Vec<MixtureWeights>,
    pub epsilon: f64,
    pub certified_radius: Option<f64>,
}

impl CoverSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_sources(&self) -> usize {
        self.points[0].len()
    }

    /// ℓ1 distance from `x` to the closest cover point.
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|p| p.l1_distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let k = self.num_sources();
        w.write_record((0..k).map(|s| format!("w{s}")))?;
        for p in &self.points {
            w.write_record(p.as_slice().iter().map(|x| x.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid resolution for an ε-cover of a simplex with `k` vertices.
pub fn grid_resolution(k: usize, epsilon: f64) -> usize {
    if k <= 1 {
        return 0;
    }
    (2.0 * (k as f64 - 1.0) / epsilon).ceil() as usize
}

/// All compositions of `m` into `k` non-negative parts, lexicographic with
/// the first coordinate descending.
pub fn compositions(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(rem: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            cur.push(rem);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for c in (0..=rem).rev() {
            cur.push(c);
            rec(rem - c, k - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(m, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

fn grid_points(k: usize, epsilon: f64) -> Vec<Vec<f64>> {
    let m = grid_resolution(k, epsilon);
    if m == 0 {
        return vec![vec![1.0]];
    }
    compositions(m, k)
        .into_iter()
        .map(|c| c.into_iter().map(|x| x as f64 / m as f64).collect())
        .collect()
}

/// Renormalize away rounding drift so the point passes simplex validation.
fn to_weights(mut w: Vec<f64>) -> MixtureWeights {
    for x in w.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    for x in w.iter_mut() {
        *x /= s;
    }
    MixtureWeights::new(w).expect("grid point lies on the simplex")
}

fn dedup(points: Vec<MixtureWeights>) -> Vec<MixtureWeights> {
    let mut seen = HashSet::new();
    points
        .into_iter()
        .filter(|p| {
            let key: Vec<i64> = p
                .as_slice()
                .iter()
                .map(|x| (x * 1e12).round() as i64)
                .collect();
            seen.insert(key)
        })
        .collect()
}

pub fn build_cover(spec: &WeightSetSpec, epsilon: f64) -> Result<CoverSet> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    spec.validate()?;
    let (points, radius) = match spec.kind {
        WeightSetKind::FiniteList => (dedup(spec.vertices.clone()), Some(0.0)),
        WeightSetKind::FullSimplex => (
            grid_points(spec.num_sources, epsilon)
                .into_iter()
                .map(to_weights)
                .collect(),
            None,
        ),
        WeightSetKind::VertexHull => {
            let r = spec.vertices.len();
            let k = spec.num_sources;
            let pts = grid_points(r, epsilon)
                .into_iter()
                .map(|beta| {
                    let mut w = vec![0.0; k];
                    for (b, v) in beta.iter().zip(&spec.vertices) {
                        for (ws, vs) in w.iter_mut().zip(v.as_slice()) {
                            *ws += b * vs;
                        }
                    }
                    to_weights(w)
                })
                .collect();
            (dedup(pts), None)
        }
    };
    Ok(CoverSet {
        points,
        epsilon,
        certified_radius: radius,
    })
}

/// Uniform point of the simplex with `k` vertices (normalized exponential spacings).
pub fn sample_simplex<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..k)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let s: f64 = e.iter().sum();
    e.iter_mut().for_each(|x| *x /= s);
    e
}

/// Draw one point of Λ.
pub fn sample_weight_set<R: Rng + ?Sized>(rng: &mut R, spec: &WeightSetSpec) -> Vec<f64> {
    match spec.kind {
        WeightSetKind::FullSimplex => sample_simplex(rng, spec.num_sources),
        WeightSetKind::FiniteList => {
            let i = rng.random_range(0..spec.vertices.len());
            spec.vertices[i].as_slice().to_vec()
        }
        WeightSetKind::VertexHull => {
            let beta = sample_simplex(rng, spec.vertices.len());
            let mut w = vec![0.0; spec.num_sources];
            for (b, v) in beta.iter().zip(&spec.vertices) {
                for (ws, vs) in w.iter_mut().zip(v.as_slice()) {
                    *ws += b * vs;
                }
            }
            w
        }
    }
}

const CERTIFY_CHUNK: usize = 256;

/// Monte Carlo covering radius: the largest ℓ1 distance from `samples`
/// draws of Λ to their nearest cover point. Stored on the cover and returned.
pub fn certify_radius(cover: &mut CoverSet, spec: &WeightSetSpec, samples: usize, seed: u64) -> f64 {
    let samples = samples.max(1);
    let chunks = samples.div_ceil(CERTIFY_CHUNK);
    let maxima = par::map_range(chunks, |c| {
        let mut rng = rng::stream(seed, c as u64, rng::tag::COVER);
        let count = CERTIFY_CHUNK.min(samples - c * CERTIFY_CHUNK);
        (0..count)
            .map(|_| cover.nearest_distance(&sample_weight_set(&mut rng, spec)))
            .fold(0.0, f64::max)
    });
    let radius = maxima.into_iter().fold(0.0, f64::max);
    cover.certified_radius = Some(radius);
    radius
}

pub fn write_certificate(cover: &CoverSet, mut out: impl Write) -> Result<()> {
    let js = serde_json::json!({
        "size": cover.len(),
        "epsilon": cover.epsilon,
        "certified_radius": cover.certified_radius,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&js)?)?;
    Ok(())
}
