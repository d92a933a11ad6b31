//! Noisy Radon observations.
//!
//! Every frequency index `j` is measured along the direction of its primitive
//! lattice vector (its *direction key*). Colinear indices, including `j` and
//! `-j`, share the key and therefore the same projection lines, sample
//! offsets and noise values; only the signed frequency used to weight the
//! samples differs.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::phantoms::Phantom;
use crate::{Error, Index, Result};

/// Per-index projection geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexContext {
    pub j: Index,
    /// Euclidean norm `|j|`.
    pub norm: f64,
    /// Unit vector along the direction key.
    pub nu: Vec<f64>,
    /// Smallest nonzero `|component|` of `nu`.
    pub nu_star: f64,
    /// Half-width `L` of the sampled offset interval `[-L, L]`.
    pub half_width: f64,
    /// `|j| π / x_star`.
    pub beta: f64,
    /// `+1` when `j` points along its key, `-1` when opposite.
    pub orientation: f64,
    pub direction_key: Index,
    /// `floor(1 / nu_star)`, computed in exact integer arithmetic.
    pub inv_nu_floor: i64,
    /// Smallest nonzero `|j_l|` (0 for `j = 0`), equal to `|j| * nu_star`.
    pub lattice_step: i64,
}

impl IndexContext {
    /// Signed frequency along `nu`: `j · x π / x_star = frequency() * (nu · x)`.
    pub fn frequency(&self) -> f64 {
        self.orientation * self.beta
    }

    /// `β̌ = π (1 + floor(1/nu_star)) nu_star |j| / q`.
    pub fn beta_check(&self, q: usize) -> f64 {
        PI * ((1 + self.inv_nu_floor) * self.lattice_step) as f64 / q as f64
    }

    /// Cell width `Δ = 2L / q`.
    pub fn spacing(&self, q: usize) -> f64 {
        2.0 * self.half_width / q as f64
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Primitive, sign-normalized direction of `j` (`e_1` for `j = 0`).
pub fn direction_key(j: &[i64]) -> Index {
    let g = j.iter().fold(0, |acc, &v| gcd(acc, v));
    if g == 0 {
        let mut e = vec![0; j.len()];
        e[0] = 1;
        return e;
    }
    let sign = j.iter().find(|&&v| v != 0).map_or(1, |v| v.signum());
    j.iter().map(|v| sign * v / g).collect()
}

pub fn index_context(j: &[i64], x_star: f64) -> IndexContext {
    let key = direction_key(j);
    let key_norm_sq: i64 = key.iter().map(|v| v * v).sum();
    let key_norm = (key_norm_sq as f64).sqrt();
    let key_min = key.iter().filter(|v| **v != 0).map(|v| v.abs()).min().unwrap_or(1);
    // largest n with (n * key_min)^2 <= |key|^2
    let mut inv_nu_floor = ((key_norm / key_min as f64).floor() as i64).max(1);
    while (inv_nu_floor + 1) * (inv_nu_floor + 1) * key_min * key_min <= key_norm_sq {
        inv_nu_floor += 1;
    }
    while inv_nu_floor * inv_nu_floor * key_min * key_min > key_norm_sq {
        inv_nu_floor -= 1;
    }
    let nu_star = key_min as f64 / key_norm;
    let norm = (j.iter().map(|v| v * v).sum::<i64>() as f64).sqrt();
    let multiple = j.iter().zip(&key).find(|(_, k)| **k != 0).map_or(0, |(v, k)| v / k);
    IndexContext {
        j: j.to_vec(),
        norm,
        nu: key.iter().map(|&v| v as f64 / key_norm).collect(),
        nu_star,
        half_width: (1 + inv_nu_floor) as f64 * key_min as f64 / key_norm * x_star,
        beta: norm * PI / x_star,
        orientation: if multiple < 0 { -1.0 } else { 1.0 },
        direction_key: key,
        inv_nu_floor,
        lattice_step: multiple.abs() * key_min,
    }
}

/// Uniform partition `s_l = -L + 2 L l / q`, `l = 0..=q`.
pub fn partition(ctx: &IndexContext, q: usize) -> Result<Vec<f64>> {
    if q < 2 {
        return Err(Error::Input(format!("q must be >= 2, got {q}")));
    }
    let l = ctx.half_width;
    Ok((0..=q).map(|i| -l + 2.0 * l * i as f64 / q as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    Rademacher,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Laplace => "laplace",
            NoiseKind::Rademacher => "rademacher",
        }
    }
}

/// Centered noise law with variance `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Input(format!("noise variance must be >= 0, got {sigma}")));
        }
        Ok(Self { kind, sigma })
    }

    /// `E ξ^4`: `3σ²` (Gaussian), `6σ²` (Laplace), `σ²` (Rademacher).
    pub fn fourth_moment(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        match self.kind {
            NoiseKind::Gaussian => 3.0 * s2,
            NoiseKind::Laplace => 6.0 * s2,
            NoiseKind::Rademacher => s2,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sd = self.sigma.sqrt();
        match self.kind {
            NoiseKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                sd * z
            }
            NoiseKind::Laplace => {
                // difference of two unit exponentials is Laplace(0, 1), variance 2
                let a: f64 = Exp1.sample(rng);
                let b: f64 = Exp1.sample(rng);
                sd / std::f64::consts::SQRT_2 * (a - b)
            }
            NoiseKind::Rademacher => {
                if rng.next_u32() & 1 == 0 {
                    -sd
                } else {
                    sd
                }
            }
        }
    }
}

/// Admissible noise laws with variance bounds `[sigma_lo, sigma_hi]` and a
/// fourth-moment bound `fourth_hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFamily {
    models: Vec<NoiseModel>,
    sigma_lo: f64,
    sigma_hi: f64,
    fourth_hi: f64,
}

impl NoiseFamily {
    pub fn new(models: Vec<NoiseModel>, sigma_lo: f64, sigma_hi: f64, fourth_hi: f64) -> Result<Self> {
        if !(sigma_lo > 0.0 && sigma_lo <= sigma_hi) {
            return Err(Error::Input(format!(
                "need 0 < sigma_lo <= sigma_hi, got {sigma_lo}, {sigma_hi}"
            )));
        }
        for m in &models {
            if m.sigma < sigma_lo || m.sigma > sigma_hi {
                return Err(Error::Input(format!(
                    "{} noise variance {} outside [{sigma_lo}, {sigma_hi}]",
                    m.kind.name(),
                    m.sigma
                )));
            }
            if m.fourth_moment() > fourth_hi {
                return Err(Error::Input(format!(
                    "{} noise fourth moment {} exceeds {fourth_hi}",
                    m.kind.name(),
                    m.fourth_moment()
                )));
            }
        }
        Ok(Self { models, sigma_lo, sigma_hi, fourth_hi })
    }

    /// Gaussian, Laplace and Rademacher laws, each with variance 0.05.
    pub fn desk_default() -> Self {
        let models = [NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::Rademacher]
            .into_iter()
            .map(|k| NoiseModel { kind: k, sigma: 0.05 })
            .collect();
        Self::new(models, 0.02, 0.1, 0.02).expect("default family is admissible")
    }

    pub fn models(&self) -> &[NoiseModel] {
        &self.models
    }

    pub fn sigma_lo(&self) -> f64 {
        self.sigma_lo
    }

    pub fn sigma_hi(&self) -> f64 {
        self.sigma_hi
    }

    pub fn fourth_hi(&self) -> f64 {
        self.fourth_hi
    }
}

/// Seeded generator for replication `stream` of a run rooted at `seed`.
/// Streams are independent and do not depend on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample_noise(model: &NoiseModel, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Input("count must be >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    Ok((0..count).map(|_| model.sample(&mut rng)).collect())
}

/// How noise values are assigned to projection lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKeying {
    /// One noise value per (direction key, offset index).
    #[default]
    PerDirection,
    /// One noise vector reused by every direction. Breaks independence
    /// across directions; used only for mutation testing.
    SharedAcrossDirections,
}

/// Sample offsets and noiseless projections of one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionLine {
    pub key: Index,
    pub nu: Vec<f64>,
    pub half_width: f64,
    /// `s_1 … s_q` (right cell endpoints).
    pub offsets: Vec<f64>,
    pub radon: Vec<f64>,
}

/// Deterministic part of a sinogram: the lines needed for a set of indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SinogramDesign {
    q: usize,
    x_star: f64,
    dimension: usize,
    indices: Vec<Index>,
    lines: Vec<ProjectionLine>,
    lookup: HashMap<Index, usize>,
}

impl SinogramDesign {
    pub fn new(phantom: &Phantom, indices: &[Index], q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::Input(format!("q must be >= 2, got {q}")));
        }
        let d = phantom.dimension();
        let mut keys: BTreeMap<Index, IndexContext> = BTreeMap::new();
        for j in indices {
            if j.len() != d {
                return Err(Error::Input(format!("index {j:?} has wrong dimension, expected {d}")));
            }
            let ctx = index_context(j, phantom.x_star());
            keys.entry(ctx.direction_key.clone()).or_insert(ctx);
        }
        let mut lines = Vec::with_capacity(keys.len());
        let mut lookup = HashMap::with_capacity(keys.len());
        for (i, (key, ctx)) in keys.into_iter().enumerate() {
            let grid = partition(&ctx, q)?;
            let offsets = grid[1..].to_vec();
            let radon = offsets.iter().map(|&s| phantom.radon_unchecked(&ctx.nu, s)).collect();
            lookup.insert(key.clone(), i);
            lines.push(ProjectionLine { key, nu: ctx.nu, half_width: ctx.half_width, offsets, radon });
        }
        Ok(Self { q, x_star: phantom.x_star(), dimension: d, indices: indices.to_vec(), lines, lookup })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn x_star(&self) -> f64 {
        self.x_star
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn indices(&self) -> &[Index] {
        &self.indices
    }

    pub fn lines(&self) -> &[ProjectionLine] {
        &self.lines
    }

    pub fn line_of(&self, key: &[i64]) -> Option<usize> {
        self.lookup.get(key).copied()
    }

    /// Total number of distinct scalar observations.
    pub fn n_total(&self) -> usize {
        self.q * self.lines.len()
    }

    /// Draws one noise table (one row per line, `q` values each).
    pub fn draw_noise<R: Rng + ?Sized>(&self, model: &NoiseModel, keying: NoiseKeying, rng: &mut R) -> Vec<Vec<f64>> {
        match keying {
            NoiseKeying::PerDirection => self
                .lines
                .iter()
                .map(|_| (0..self.q).map(|_| model.sample(rng)).collect())
                .collect(),
            NoiseKeying::SharedAcrossDirections => {
                let row: Vec<f64> = (0..self.q).map(|_| model.sample(rng)).collect();
                vec![row; self.lines.len()]
            }
        }
    }
}

/// A realized sinogram: design plus one noise table.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    design: SinogramDesign,
    noise: Vec<Vec<f64>>,
    seed: u64,
}

impl SampleSet {
    pub fn from_parts(design: SinogramDesign, noise: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if noise.len() != design.lines.len() || noise.iter().any(|r| r.len() != design.q) {
            return Err(Error::Input("noise table does not match the design".into()));
        }
        Ok(Self { design, noise, seed })
    }

    pub fn design(&self) -> &SinogramDesign {
        &self.design
    }

    pub fn q(&self) -> usize {
        self.design.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_total(&self) -> usize {
        self.design.n_total()
    }

    pub fn noise_table(&self) -> &[Vec<f64>] {
        &self.noise
    }

    /// Observations `y_{j,1..q}` for index `j`, resolved through its key.
    pub fn observations(&self, j: &[i64]) -> Result<Vec<f64>> {
        let key = direction_key(j);
        let i = self
            .design
            .line_of(&key)
            .ok_or_else(|| Error::MissingObservation { index: j.to_vec(), l: 1 })?;
        let line = &self.design.lines[i];
        Ok(line.radon.iter().zip(&self.noise[i]).map(|(r, n)| r + n).collect())
    }

    /// Noise values `ξ_{j,1..q}`.
    pub fn noise_of(&self, j: &[i64]) -> Option<&[f64]> {
        self.design.line_of(&direction_key(j)).map(|i| self.noise[i].as_slice())
    }

    /// CSV with one row per (index, l): `j1..jd, l, s, radon_value, noise, y`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let d = self.design.dimension;
        let mut header: Vec<String> = (1..=d).map(|i| format!("j{i}")).collect();
        header.extend(["l", "s", "radon_value", "noise", "y"].map(String::from));
        w.write_record(&header)?;
        for j in &self.design.indices {
            let i = self.design.line_of(&direction_key(j)).expect("design covers its indices");
            let line = &self.design.lines[i];
            for l in 0..self.design.q {
                let mut rec: Vec<String> = j.iter().map(|v| v.to_string()).collect();
                let noise = self.noise[i][l];
                rec.push((l + 1).to_string());
                rec.push(format_float(line.offsets[l]));
                rec.push(format_float(line.radon[l]));
                rec.push(format_float(noise));
                rec.push(format_float(line.radon[l] + noise));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Rebuilds a sample set from [`SampleSet::write_csv`] output, checking
    /// that rows for colinear indices agree.
    pub fn read_csv<R: Read>(reader: R, x_star: f64, seed: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let d = headers.iter().filter(|h| h.starts_with('j')).count();
        if d < 2 || headers.len() != d + 5 {
            return Err(Error::Input(format!("unexpected sample CSV header: {headers:?}")));
        }
        let mut indices: Vec<Index> = Vec::new();
        let mut rows: BTreeMap<Index, Vec<Option<(f64, f64, f64)>>> = BTreeMap::new();
        let mut q = 0usize;
        for (line_no, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec[k].trim().parse::<f64>().map_err(|e| {
                    Error::Input(format!("sample CSV row {}: column {k}: {e}", line_no + 2))
                })
            };
            let j: Index = (0..d).map(|k| parse(k).map(|v| v as i64)).collect::<Result<_>>()?;
            let l = parse(d)? as usize;
            let (s, radon, noise) = (parse(d + 1)?, parse(d + 2)?, parse(d + 3)?);
            q = q.max(l);
            if indices.last() != Some(&j) && !indices.contains(&j) {
                indices.push(j.clone());
            }
            let key = direction_key(&j);
            let slot = rows.entry(key).or_default();
            if slot.len() < l {
                slot.resize(l, None);
            }
            match slot[l - 1] {
                None => slot[l - 1] = Some((s, radon, noise)),
                Some(prev) if prev == (s, radon, noise) => {}
                Some(_) => {
                    return Err(Error::Input(format!(
                        "sample CSV row {}: index {j:?} disagrees with a colinear index at l = {l}",
                        line_no + 2
                    )))
                }
            }
        }
        let mut lines = Vec::new();
        let mut noise = Vec::new();
        let mut lookup = HashMap::new();
        for (i, (key, vals)) in rows.into_iter().enumerate() {
            if vals.len() != q || vals.iter().any(Option::is_none) {
                let missing = vals.iter().position(Option::is_none).unwrap_or(vals.len());
                return Err(Error::MissingObservation { index: key, l: missing + 1 });
            }
            let ctx = index_context(&key, x_star);
            let vals: Vec<(f64, f64, f64)> = vals.into_iter().flatten().collect();
            lookup.insert(key.clone(), i);
            lines.push(ProjectionLine {
                key,
                nu: ctx.nu,
                half_width: ctx.half_width,
                offsets: vals.iter().map(|v| v.0).collect(),
                radon: vals.iter().map(|v| v.1).collect(),
            });
            noise.push(vals.iter().map(|v| v.2).collect());
        }
        let design = SinogramDesign { q, x_star, dimension: d, indices, lines, lookup };
        Self::from_parts(design, noise, seed)
    }
}

/// Shortest representation that round-trips through `f64::from_str`.
pub(crate) fn format_float(v: f64) -> String {
    format!("{v:?}")
}

/// Draws a sample set: `y_{j,l} = R(S)(ν_j, s_{j,l}) + ξ_{key(j), l}`.
pub fn draw_samples(
    phantom: &Phantom,
    indices: &[Index],
    q: usize,
    noise: &NoiseModel,
    seed: u64,
) -> Result<SampleSet> {
    let design = SinogramDesign::new(phantom, indices, q)?;
    let mut rng = stream_rng(seed, 0);
    let table = design.draw_noise(noise, NoiseKeying::PerDirection, &mut rng);
    SampleSet::from_parts(design, table, seed)
}
