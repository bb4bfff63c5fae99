//! Space-time activation clusters and king-avalanche statistics.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{FieldState, Geometry, Observer, SeriesPoint, SnapshotReader};
use crate::output::{create_buffered, fmt_f64};

const NONE: u32 = u32::MAX;

/// How an active site links to the previous frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeLink {
    /// Only the same site one frame earlier.
    #[default]
    SameSite,
    /// The same site and its spatial neighbours one frame earlier.
    Neighborhood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AvalancheOptions {
    /// A site-frame is active when its density exceeds this.
    pub threshold: f64,
    pub time_link: TimeLink,
    /// Clusters smaller than this (in site-frames) are listed but not counted.
    pub min_site_frames: u64,
}

impl Default for AvalancheOptions {
    fn default() -> Self {
        Self { threshold: 1e-7, time_link: TimeLink::SameSite, min_site_frames: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub site_frames: u64,
    pub distinct_sites: u64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvalancheStats {
    pub clusters: Vec<Cluster>,
    pub n_sites_total: usize,
    pub king_count: usize,
    pub total_count: usize,
    pub frames: u64,
}

impl AvalancheStats {
    pub fn is_king(&self, c: &Cluster) -> bool {
        2 * c.distinct_sites > self.n_sites_total as u64
    }
}

/// Fraction of counted clusters that cover more than half the lattice; `None`
/// when no cluster was counted.
pub fn king_probability(stats: &AvalancheStats) -> Option<f64> {
    (stats.total_count > 0).then(|| stats.king_count as f64 / stats.total_count as f64)
}

#[derive(Debug, Default)]
struct Acc {
    site_frames: u64,
    sites: FxHashSet<u32>,
    t_start: f64,
}

/// Streaming labeler: frames are pushed in time order and only the previous
/// frame's labels are kept.
#[derive(Debug)]
pub struct AvalancheLabeler {
    geom: Geometry,
    opts: AvalancheOptions,
    prev_label: Vec<u32>,
    live: Vec<Acc>,
    finished: Vec<Cluster>,
    active: Vec<bool>,
    parent: Vec<u32>,
    last_t: Option<f64>,
    spacing: Option<f64>,
    frames: u64,
}

impl AvalancheLabeler {
    pub fn new(geom: Geometry, opts: AvalancheOptions) -> Result<Self> {
        if !(opts.threshold > 0.0) || !opts.threshold.is_finite() {
            return Err(invalid("threshold", format!("must be positive and finite, got {}", opts.threshold)));
        }
        let n = geom.n_sites();
        Ok(Self {
            geom,
            opts,
            prev_label: vec![NONE; n],
            live: Vec::new(),
            finished: Vec::new(),
            active: vec![false; n],
            parent: Vec::new(),
            last_t: None,
            spacing: None,
            frames: 0,
        })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn push_frame(&mut self, rho: &[f64], t: f64) -> Result<()> {
        let n = self.geom.n_sites();
        if rho.len() != n {
            return Err(Error::Geometry(format!("frame has {} sites, expected {n}", rho.len())));
        }
        if let Some(last) = self.last_t {
            let dt = t - last;
            match self.spacing {
                None if dt > 0.0 => self.spacing = Some(dt),
                Some(s) if (dt - s).abs() <= 1e-9 * s.max(1.0) => {}
                _ => return Err(Error::Format(format!("snapshot at t = {t} breaks uniform spacing"))),
            }
        }

        let th = self.opts.threshold;
        self.active.par_iter_mut().zip(rho.par_iter()).for_each(|(a, &r)| *a = r > th);

        let p = self.live.len();
        self.parent.clear();
        self.parent.extend(0..(p + n) as u32);
        let geom = self.geom;
        for i in 0..n {
            if !self.active[i] {
                continue;
            }
            let node = (p + i) as u32;
            geom.for_each_forward_neighbor(i, |j| {
                if self.active[j] {
                    union(&mut self.parent, node, (p + j) as u32);
                }
            });
            if self.prev_label[i] != NONE {
                union(&mut self.parent, node, self.prev_label[i]);
            }
            if self.opts.time_link == TimeLink::Neighborhood {
                geom.for_each_neighbor(i, |j| {
                    if self.prev_label[j] != NONE {
                        union(&mut self.parent, node, self.prev_label[j]);
                    }
                });
            }
        }

        // New clusters are numbered by their lowest active site.
        let mut root_to_new: FxHashMap<u32, u32> = FxHashMap::default();
        let mut next: Vec<Acc> = Vec::new();
        let mut new_label = vec![NONE; n];
        for i in 0..n {
            if !self.active[i] {
                continue;
            }
            let r = find(&mut self.parent, (p + i) as u32);
            let idx = *root_to_new.entry(r).or_insert_with(|| {
                next.push(Acc { t_start: t, ..Acc::default() });
                (next.len() - 1) as u32
            });
            new_label[i] = idx;
        }

        let t_prev = self.last_t.unwrap_or(t);
        for (k, acc) in std::mem::take(&mut self.live).into_iter().enumerate() {
            let r = find(&mut self.parent, k as u32);
            match root_to_new.get(&r) {
                Some(&idx) => {
                    let dst = &mut next[idx as usize];
                    dst.site_frames += acc.site_frames;
                    dst.t_start = dst.t_start.min(acc.t_start);
                    let mut src = acc.sites;
                    if src.len() > dst.sites.len() {
                        std::mem::swap(&mut src, &mut dst.sites);
                    }
                    dst.sites.extend(src);
                }
                None => self.finished.push(Cluster {
                    site_frames: acc.site_frames,
                    distinct_sites: acc.sites.len() as u64,
                    t_start: acc.t_start,
                    t_end: t_prev,
                }),
            }
        }

        for i in 0..n {
            let idx = new_label[i];
            if idx == NONE {
                continue;
            }
            let acc = &mut next[idx as usize];
            acc.site_frames += 1;
            // A site active in the previous frame is already in the merged set.
            if self.prev_label[i] == NONE {
                acc.sites.insert(i as u32);
            }
        }

        self.prev_label = new_label;
        self.live = next;
        self.last_t = Some(t);
        self.frames += 1;
        Ok(())
    }

    pub fn finish(mut self) -> AvalancheStats {
        let t_end = self.last_t.unwrap_or(0.0);
        for acc in std::mem::take(&mut self.live) {
            self.finished.push(Cluster {
                site_frames: acc.site_frames,
                distinct_sites: acc.sites.len() as u64,
                t_start: acc.t_start,
                t_end,
            });
        }
        let n_sites_total = self.geom.n_sites();
        let counted = self.finished.iter().filter(|c| c.site_frames >= self.opts.min_site_frames);
        let (mut total_count, mut king_count) = (0, 0);
        for c in counted {
            total_count += 1;
            if 2 * c.distinct_sites > n_sites_total as u64 {
                king_count += 1;
            }
        }
        AvalancheStats { clusters: self.finished, n_sites_total, king_count, total_count, frames: self.frames }
    }
}

impl Observer for AvalancheLabeler {
    fn sample(&mut self, _point: SeriesPoint) -> Result<()> {
        Ok(())
    }

    fn snapshot(&mut self, state: &FieldState, geom: &Geometry) -> Result<()> {
        if *geom != self.geom {
            return Err(Error::Geometry(format!("snapshot geometry {geom:?} differs from {:?}", self.geom)));
        }
        self.push_frame(&state.rho, state.t)
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let gp = parent[parent[x as usize] as usize];
        parent[x as usize] = gp;
        x = gp;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        // Smaller index wins so roots are deterministic.
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Labels every frame of a binary snapshot file.
pub fn label_snapshot_file(path: &Path, opts: AvalancheOptions) -> Result<AvalancheStats> {
    let mut labeler: Option<AvalancheLabeler> = None;
    for frame in SnapshotReader::open(path)? {
        let (geom, snap) = frame?;
        let lab = match &mut labeler {
            Some(l) => l,
            None => labeler.insert(AvalancheLabeler::new(geom, opts)?),
        };
        if geom != lab.geom {
            return Err(Error::Geometry(format!("frame at t = {} has geometry {geom:?}, expected {:?}", snap.t, lab.geom)));
        }
        lab.push_frame(&snap.rho, snap.t)?;
    }
    match labeler {
        Some(l) => Ok(l.finish()),
        None => Err(Error::Format(format!("{} contains no frames", path.display()))),
    }
}

/// One row per cluster: `site_frames,distinct_sites,t_start,t_end,king`.
pub fn write_avalanches_csv(path: &Path, stats: &AvalancheStats) -> Result<()> {
    let mut w = create_buffered(path)?;
    writeln!(w, "site_frames,distinct_sites,t_start,t_end,king")?;
    for c in &stats.clusters {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.site_frames,
            c.distinct_sites,
            fmt_f64(c.t_start),
            fmt_f64(c.t_end),
            u8::from(stats.is_king(c))
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_king_json(path: &Path, stats: &AvalancheStats, opts: &AvalancheOptions) -> Result<()> {
    let p = king_probability(stats);
    let doc = serde_json::json!({
        "n_sites_total": stats.n_sites_total,
        "frames": stats.frames,
        "clusters": stats.clusters.len(),
        "king_count": stats.king_count,
        "total_count": stats.total_count,
        "probability": p,
        "undefined": p.is_none(),
        "options": opts,
    });
    std::fs::write(path, serde_json::to_string_pretty(&doc)? + "\n")?;
    Ok(())
}
