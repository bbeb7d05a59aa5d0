//! Mask surfaces and surface-to-surface distances.

use crate::volume::{Geometry, RegionMask};

const NEIGHBORS: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Member voxels with at least one 6-neighbour outside the mask. Neighbours
/// beyond the grid border count as outside. Returned in linear voxel order.
pub fn surface_voxels(m: &RegionMask) -> Vec<[usize; 3]> {
    let g = m.geometry();
    let member = m.member();
    (0..g.len())
        .filter(|&idx| member[idx])
        .map(|idx| g.coords(idx))
        .filter(|&c| {
            NEIGHBORS.iter().any(|d| {
                let p = [0, 1, 2].map(|a| c[a] as i64 + d[a]);
                !g.contains(p) || !member[g.index(p[0] as usize, p[1] as usize, p[2] as usize)]
            })
        })
        .collect()
}

/// Exact squared Euclidean distance transform (mm²) to a set of sites inside a
/// box, separable over the three axes with the lower-envelope-of-parabolas
/// pass along each line. Cells with no reachable site hold `f64::INFINITY`.
struct DistanceField {
    origin: [usize; 3],
    dims: [usize; 3],
    sq: Vec<f64>,
}

impl DistanceField {
    fn new(origin: [usize; 3], dims: [usize; 3], spacing: [f64; 3], sites: &[[usize; 3]]) -> Self {
        let len = dims.iter().product();
        let mut sq = vec![f64::INFINITY; len];
        let at = |c: [usize; 3]| c[0] + dims[0] * (c[1] + dims[1] * c[2]);
        for s in sites {
            sq[at([0, 1, 2].map(|a| s[a] - origin[a]))] = 0.0;
        }
        let longest = *dims.iter().max().unwrap();
        let mut line = vec![0.0; longest];
        let mut out = vec![0.0; longest];
        let mut env = Envelope::with_capacity(longest);
        for axis in 0..3 {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            let n = dims[axis];
            for b in 0..dims[v] {
                for a in 0..dims[u] {
                    let mut c = [0usize; 3];
                    c[u] = a;
                    c[v] = b;
                    for (t, slot) in line[..n].iter_mut().enumerate() {
                        c[axis] = t;
                        *slot = sq[at(c)];
                    }
                    env.transform(&line[..n], spacing[axis], &mut out[..n]);
                    for (t, &d) in out[..n].iter().enumerate() {
                        c[axis] = t;
                        sq[at(c)] = d;
                    }
                }
            }
        }
        Self { origin, dims, sq }
    }

    fn distance(&self, c: [usize; 3]) -> f64 {
        let l = [0, 1, 2].map(|a| c[a] - self.origin[a]);
        self.sq[l[0] + self.dims[0] * (l[1] + self.dims[1] * l[2])].sqrt()
    }
}

struct Envelope {
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Self {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
        }
    }

    /// `out[i] = min_q f[q] + ((i − q)·h)²` over finite `f[q]`.
    fn transform(&mut self, f: &[f64], h: f64, out: &mut [f64]) {
        self.sites.clear();
        self.bounds.clear();
        let x = |i: usize| i as f64 * h;
        let cross = |p: usize, q: usize| -> f64 {
            ((f[q] + x(q) * x(q)) - (f[p] + x(p) * x(p))) / (2.0 * (x(q) - x(p)))
        };
        for q in 0..f.len() {
            if !f[q].is_finite() {
                continue;
            }
            loop {
                match self.sites.last() {
                    None => {
                        self.sites.push(q);
                        self.bounds.push(f64::NEG_INFINITY);
                        break;
                    }
                    Some(&p) => {
                        let s = cross(p, q);
                        if s <= *self.bounds.last().unwrap() {
                            self.sites.pop();
                            self.bounds.pop();
                        } else {
                            self.sites.push(q);
                            self.bounds.push(s);
                            break;
                        }
                    }
                }
            }
        }
        if self.sites.is_empty() {
            out.fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for (i, o) in out.iter_mut().enumerate() {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < x(i) {
                k += 1;
            }
            let q = self.sites[k];
            let d = x(i) - x(q);
            *o = d * d + f[q];
        }
    }
}

fn bounding_box(points: impl Iterator<Item = [usize; 3]>) -> Option<([usize; 3], [usize; 3])> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for p in points {
        any = true;
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a] + 1);
        }
    }
    any.then_some((lo, hi))
}

/// Distances (mm) from every surface voxel of `from` to the nearest surface
/// voxel of `to`. Both surfaces must be nonempty.
pub(crate) fn directed_distances(
    geometry: &Geometry,
    from: &[[usize; 3]],
    to: &[[usize; 3]],
) -> Vec<f64> {
    // Every site lies in the joint box, so the separable transform restricted
    // to it is still exact for queries inside the box.
    let (lo, hi) = bounding_box(from.iter().chain(to).copied()).expect("nonempty surfaces");
    let dims = [0, 1, 2].map(|a| hi[a] - lo[a]);
    let field = DistanceField::new(lo, dims, geometry.spacing, to);
    from.iter().map(|&c| field.distance(c)).collect()
}
