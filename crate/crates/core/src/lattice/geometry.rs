use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic hypercubic lattice of side `l` in `d` dimensions, row-major site order
/// (the first coordinate varies fastest).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    d: usize,
    l: usize,
    n_sites: usize,
}

impl Geometry {
    pub fn new(d: usize, l: usize) -> Result<Self> {
        if !(1..=3).contains(&d) {
            return Err(Error::Geometry(format!("dimension must be 1, 2 or 3, got {d}")));
        }
        if l < 2 {
            return Err(Error::Geometry(format!("linear size must be at least 2, got {l}")));
        }
        let n_sites = l
            .checked_pow(d as u32)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::Geometry(format!("lattice {l}^{d} is too large")))?;
        Ok(Self { d, l, n_sites })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    #[inline]
    fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.l,
            _ => self.l * self.l,
        }
    }

    /// Calls `f` with each of the `2d` nearest neighbours of `site`.
    #[inline]
    pub fn for_each_neighbor(&self, site: usize, mut f: impl FnMut(usize)) {
        for axis in 0..self.d {
            let stride = self.stride(axis);
            let c = (site / stride) % self.l;
            let up = if c + 1 == self.l { site + stride - self.l * stride } else { site + stride };
            let down = if c == 0 { site + (self.l - 1) * stride } else { site - stride };
            f(up);
            f(down);
        }
    }

    /// Indices of the `2d` nearest neighbours; unused slots repeat `site`.
    #[inline]
    pub fn neighbors(&self, site: usize) -> ([usize; 6], usize) {
        let mut out = [site; 6];
        let mut k = 0;
        self.for_each_neighbor(site, |j| {
            out[k] = j;
            k += 1;
        });
        (out, k)
    }

    /// Sum of neighbour values minus `2d` times the centre value.
    #[inline]
    pub fn laplacian_sum(&self, field: &[f64], site: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_neighbor(site, |j| s += field[j]);
        s - 2.0 * self.d as f64 * field[site]
    }

    /// Forward neighbours only (one per axis); each undirected bond is visited once.
    #[inline]
    pub fn for_each_forward_neighbor(&self, site: usize, mut f: impl FnMut(usize)) {
        for axis in 0..self.d {
            let stride = self.stride(axis);
            let c = (site / stride) % self.l;
            f(if c + 1 == self.l { site + stride - self.l * stride } else { site + stride });
        }
    }

    pub fn coords(&self, site: usize) -> [usize; 3] {
        let mut c = [0; 3];
        for (axis, slot) in c.iter_mut().enumerate().take(self.d) {
            *slot = (site / self.stride(axis)) % self.l;
        }
        c
    }

    pub fn index(&self, coords: [usize; 3]) -> usize {
        (0..self.d).map(|a| coords[a] * self.stride(a)).sum()
    }

    /// Same as [`Geometry::neighbors`] for a site whose coordinates are known,
    /// avoiding integer division.
    #[inline]
    pub fn neighbors_at(&self, site: usize, coords: &[usize; 3]) -> ([usize; 6], usize) {
        let mut out = [site; 6];
        for axis in 0..self.d {
            let stride = self.stride(axis);
            let c = coords[axis];
            out[2 * axis] = if c + 1 == self.l { site + stride - self.l * stride } else { site + stride };
            out[2 * axis + 1] = if c == 0 { site + (self.l - 1) * stride } else { site - stride };
        }
        (out, 2 * self.d)
    }

    /// Advances coordinates to the next site in storage order.
    #[inline]
    pub fn advance_coords(&self, coords: &mut [usize; 3]) {
        for c in coords.iter_mut().take(self.d) {
            *c += 1;
            if *c < self.l {
                return;
            }
            *c = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(Geometry::new(0, 4).is_err());
        assert!(Geometry::new(4, 4).is_err());
        assert!(Geometry::new(2, 1).is_err());
        assert_eq!(Geometry::new(3, 5).unwrap().n_sites(), 125);
    }

    #[test]
    fn neighbours_are_symmetric_and_periodic() {
        for d in 1..=3 {
            let g = Geometry::new(d, 4).unwrap();
            for i in 0..g.n_sites() {
                let mut nb = Vec::new();
                g.for_each_neighbor(i, |j| nb.push(j));
                assert_eq!(nb.len(), 2 * d);
                for &j in &nb {
                    let mut back = Vec::new();
                    g.for_each_neighbor(j, |k| back.push(k));
                    assert!(back.contains(&i));
                    // Manhattan distance one on the torus.
                    let (a, b) = (g.coords(i), g.coords(j));
                    let dist: usize = (0..d).map(|ax| {
                        let diff = a[ax].abs_diff(b[ax]);
                        diff.min(4 - diff)
                    }).sum();
                    assert_eq!(dist, 1);
                }
                assert_eq!(g.index(g.coords(i)), i);
                assert_eq!(g.neighbors_at(i, &g.coords(i)), g.neighbors(i));
                if i + 1 < g.n_sites() {
                    let mut c = g.coords(i);
                    g.advance_coords(&mut c);
                    assert_eq!(c, g.coords(i + 1));
                }
            }
        }
    }

    #[test]
    fn laplacian_telescopes() {
        let g = Geometry::new(2, 5).unwrap();
        let field: Vec<f64> = (0..g.n_sites()).map(|i| (i as f64 * 0.37).sin() + 2.0).collect();
        let total: f64 = (0..g.n_sites()).map(|i| g.laplacian_sum(&field, i)).sum();
        assert!(total.abs() < 1e-12);
    }
}
