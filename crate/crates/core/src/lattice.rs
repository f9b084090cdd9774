//! Finite boxes of `Z^d`, seeded i.i.d. potential environments, the cube
//! coarse-graining and lattice animals.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::rng;

/// A point of `Z^d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site(pub Vec<i64>);

impl Site {
    pub fn origin(d: usize) -> Self {
        Site(vec![0; d])
    }

    /// `n·e_k`.
    pub fn axis(d: usize, k: usize, n: i64) -> Self {
        let mut v = vec![0; d];
        v[k] = n;
        Site(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn linf(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn scaled(&self, n: i64) -> Self {
        Site(self.0.iter().map(|c| c * n).collect())
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Site)
            .map_err(|_| Error::Config(format!("cannot parse site '{s}'")))
    }
}

/// The box `{x : ‖x‖∞ ≤ radius}` enumerated lexicographically, first
/// coordinate most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub d: usize,
    pub radius: usize,
}

impl BoxSpec {
    pub fn new(d: usize, radius: usize) -> Result<Self> {
        if d < 1 || radius < 1 {
            return Err(Error::Config(format!("box needs d >= 1 and radius >= 1, got d={d}, L={radius}")));
        }
        Ok(BoxSpec { d, radius })
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.d as u32)
    }

    pub fn contains(&self, x: &Site) -> bool {
        x.dim() == self.d && x.linf() <= self.radius as i64
    }

    pub fn index_of(&self, x: &Site) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i64;
        Some(x.0.iter().fold(0usize, |acc, &c| acc * side + (c + r) as usize))
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let side = self.side();
        let r = self.radius as i64;
        let mut coords = vec![0i64; self.d];
        for k in (0..self.d).rev() {
            coords[k] = (index % side) as i64 - r;
            index /= side;
        }
        Site(coords)
    }

    /// Coordinates of every site in enumeration order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.site_count()).map(move |i| self.site_at(i))
    }
}

/// One realization of i.i.d. potentials on a box.
///
/// `values[i] = F^{-1}(ξ(x_i))` with `ξ(x)` the per-site uniform derived from
/// `(seed, x)`; any two environments with the same seed are coupled, and
/// nested boxes agree on common sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub box_spec: BoxSpec,
    pub dist: DistSpec,
    pub seed: u64,
    pub values: Vec<f64>,
}

impl Environment {
    pub fn sample(dist: &DistSpec, box_spec: BoxSpec, seed: u64) -> Result<Self> {
        dist.validate()?;
        if !dist.in_d() {
            return Err(Error::InvalidDist(format!("{} is not in D: F(0) = 1", dist.id())));
        }
        Ok(Self::sample_unchecked(dist, box_spec, seed))
    }

    /// Samples without the `F(0) < 1` check; used for `V ≡ 0` diagnostics.
    pub fn sample_unchecked(dist: &DistSpec, box_spec: BoxSpec, seed: u64) -> Self {
        let values = box_spec.sites().map(|x| dist.quantile(rng::site_uniform(seed, &x.0))).collect();
        Environment { box_spec, dist: dist.clone(), seed, values }
    }

    /// Same uniforms, new law.
    pub fn coupled(&self, dist2: &DistSpec) -> Result<Self> {
        dist2.validate()?;
        let values = self
            .box_spec
            .sites()
            .map(|x| dist2.quantile(rng::site_uniform(self.seed, &x.0)))
            .collect();
        Ok(Environment { box_spec: self.box_spec, dist: dist2.clone(), seed: self.seed, values })
    }

    /// Environment with explicitly given values, for hand-built fixtures.
    pub fn from_values(box_spec: BoxSpec, dist: DistSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != box_spec.site_count() {
            return Err(Error::Config(format!(
                "expected {} values, got {}",
                box_spec.site_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("potentials must be non-negative".into()));
        }
        Ok(Environment { box_spec, dist, seed: 0, values })
    }

    pub fn potential(&self, x: &Site) -> Option<f64> {
        self.box_spec.index_of(x).map(|i| self.values[i])
    }

    /// Restriction to a smaller concentric box.
    pub fn restrict(&self, radius: usize) -> Result<Self> {
        let inner = BoxSpec::new(self.box_spec.d, radius)?;
        if radius > self.box_spec.radius {
            return Err(Error::Config("restriction radius exceeds the box".into()));
        }
        let values = inner
            .sites()
            .map(|x| self.values[self.box_spec.index_of(&x).expect("nested box")])
            .collect();
        Ok(Environment { box_spec: inner, dist: self.dist.clone(), seed: self.seed, values })
    }

    const MAGIC: &'static [u8; 8] = b"LYAPENV1";

    /// Flat binary layout: magic, `d: u32`, `L: u32`, `seed: u64`,
    /// `len: u32` + dist JSON, then `values` as little-endian `f64` in
    /// enumeration order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let json = self.dist.id();
        w.write_all(Self::MAGIC)?;
        w.write_all(&(self.box_spec.d as u32).to_le_bytes())?;
        w.write_all(&(self.box_spec.radius as u32).to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(json.as_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Io("not an environment file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let d = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let radius = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        r.read_exact(&mut b4)?;
        let mut json = vec![0u8; u32::from_le_bytes(b4) as usize];
        r.read_exact(&mut json)?;
        let dist = DistSpec::from_json(
            std::str::from_utf8(&json).map_err(|e| Error::Io(e.to_string()))?,
        )?;
        let box_spec = BoxSpec::new(d, radius)?;
        let mut values = Vec::with_capacity(box_spec.site_count());
        for _ in 0..box_spec.site_count() {
            r.read_exact(&mut b8)?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok(Environment { box_spec, dist, seed, values })
    }
}

/// On-disk cache of sampled environments keyed by `(dist, d, L, seed)`.
#[derive(Debug, Clone)]
pub struct EnvCache {
    dir: PathBuf,
}

impl EnvCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(EnvCache { dir: dir.as_ref().to_path_buf() })
    }

    fn path(&self, dist: &DistSpec, box_spec: BoxSpec, seed: u64) -> PathBuf {
        let key = rng::mix_coords(seed, &[box_spec.d as i64, box_spec.radius as i64]);
        let h = dist.id().bytes().fold(key, |h, b| rng::mix(h, b as u64));
        self.dir.join(format!("env-d{}-L{}-{:016x}.bin", box_spec.d, box_spec.radius, h))
    }

    /// Loads a cached environment, sampling and storing it on a miss.
    pub fn get_or_sample(&self, dist: &DistSpec, box_spec: BoxSpec, seed: u64) -> Result<Environment> {
        let path = self.path(dist, box_spec, seed);
        if let Ok(f) = std::fs::File::open(&path) {
            if let Ok(env) = Environment::read_from(std::io::BufReader::new(f)) {
                if env.dist == *dist && env.box_spec == box_spec && env.seed == seed {
                    return Ok(env);
                }
            }
        }
        let env = Environment::sample(dist, box_spec, seed)?;
        let tmp = path.with_extension("tmp");
        env.write_to(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(&tmp, &path)?;
        Ok(env)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CubeClass {
    Occupied,
    Empty,
}

/// Cubes `C(q) = lq + [-l/2, l/2)^d` intersecting a box, each classified as
/// occupied when it holds a site `z ≠ y` with `V(z) ≥ δ`.
#[derive(Debug, Clone)]
pub struct CubePartition {
    pub l: i64,
    pub delta: f64,
    pub classes: BTreeMap<Vec<i64>, CubeClass>,
}

impl CubePartition {
    pub fn classify(env: &Environment, l: i64, delta: f64, y: &Site) -> Result<Self> {
        if l <= 0 || l % 2 != 0 {
            return Err(Error::Config(format!("cube side l = {l} must be a positive even integer")));
        }
        if !(delta > 0.0) {
            return Err(Error::Config(format!("delta = {delta} must be > 0")));
        }
        if 1.0 - env.dist.cdf_left(delta) <= 0.0 {
            return Err(Error::DegenerateThreshold(format!(
                "P(V >= {delta}) = 0 under {}",
                env.dist.id()
            )));
        }
        let mut classes = BTreeMap::new();
        for (i, x) in env.box_spec.sites().enumerate() {
            let q = cube_of(&x, l);
            let hit = x != *y && env.values[i] >= delta;
            let entry = classes.entry(q).or_insert(CubeClass::Empty);
            if hit {
                *entry = CubeClass::Occupied;
            }
        }
        Ok(CubePartition { l, delta, classes })
    }

    pub fn cube_of(&self, x: &Site) -> Vec<i64> {
        cube_of(x, self.l)
    }

    pub fn class_of(&self, x: &Site) -> CubeClass {
        self.classes.get(&self.cube_of(x)).copied().unwrap_or(CubeClass::Empty)
    }

    pub fn occupied_count(&self) -> usize {
        self.classes.values().filter(|c| **c == CubeClass::Occupied).count()
    }
}

/// Index `q` of the cube containing `x`: `q_k = ⌊(x_k + l/2) / l⌋`.
pub fn cube_of(x: &Site, l: i64) -> Vec<i64> {
    x.0.iter().map(|&c| (c + l / 2).div_euclid(l)).collect()
}

/// Connectivity under `|q - q'|₁ ≤ 1`.
pub fn is_lattice_animal(qs: &BTreeSet<Vec<i64>>) -> bool {
    let Some(start) = qs.iter().next() else {
        return false;
    };
    let mut seen: BTreeSet<&Vec<i64>> = BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    seen.insert(start);
    while let Some(q) = queue.pop_front() {
        for k in 0..q.len() {
            for s in [-1, 1] {
                let mut n = q.clone();
                n[k] += s;
                if let Some(found) = qs.get(&n) {
                    if seen.insert(found) {
                        queue.push_back(found);
                    }
                }
            }
        }
    }
    seen.len() == qs.len()
}
