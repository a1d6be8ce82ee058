//! Discretized type distribution over `(z, c)` and deterministic quadrature.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::GridError;
use crate::params::FirmType;

/// Closed interval of a strictly positive support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self, GridError> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(GridError::Support { lo, hi });
        }
        Ok(Support { lo, hi })
    }
}

/// Generating family of the type distribution. Both axes are independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform,
    /// Lognormal on each axis, truncated to the support. `mu_*` and `s_*`
    /// are the mean and standard deviation of the log.
    TruncatedLognormal {
        mu_z: f64,
        s_z: f64,
        mu_c: f64,
        s_c: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::TruncatedLognormal { .. } => "lognormal",
        }
    }
}

/// One axis of the midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub edges: Vec<f64>,
    pub nodes: Vec<f64>,
    /// Marginal cell probabilities, summing to one.
    pub probs: Vec<f64>,
}

impl Axis {
    fn build(support: Support, n: usize, log_params: Option<(f64, f64)>) -> Result<Axis, GridError> {
        let width = (support.hi - support.lo) / n as f64;
        let edges: Vec<f64> = (0..=n)
            .map(|i| {
                if i == n {
                    support.hi
                } else {
                    support.lo + width * i as f64
                }
            })
            .collect();
        let nodes: Vec<f64> = edges.windows(2).map(|e| 0.5 * (e[0] + e[1])).collect();
        let raw: Vec<f64> = match log_params {
            None => vec![1.0; n],
            Some((mu, s)) => {
                if !(s > 0.0 && s.is_finite()) {
                    return Err(GridError::Scale(s));
                }
                let normal = Normal::new(mu, s).map_err(|_| GridError::Scale(s))?;
                edges
                    .windows(2)
                    .map(|e| normal.cdf(e[1].ln()) - normal.cdf(e[0].ln()))
                    .collect()
            }
        };
        let total = neumaier(raw.iter().copied());
        let probs = raw.iter().map(|p| p / total).collect();
        Ok(Axis { edges, nodes, probs })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn support(&self) -> Support {
        Support {
            lo: self.edges[0],
            hi: self.edges[self.edges.len() - 1],
        }
    }
}

/// Probability mass and first `z` moment of a covered part of a grid row.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub z_mass: f64,
}

impl Moments {
    /// Integral of `slope * z + intercept` against the covered mass.
    pub fn affine(&self, slope: f64, intercept: f64) -> f64 {
        slope * self.z_mass + intercept * self.mass
    }
}

/// A (possibly fractional) horizontal strip of the grid: all z-cells of c-row
/// `row`, restricted to the part of the c-cell with `c` in `[c_lo, c_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowPiece {
    pub row: usize,
    /// Midpoint of the covered part of the c-cell.
    pub c: f64,
    /// Covered fraction of the c-cell.
    pub frac: f64,
}

/// Discretized `Phi(z, c)` on a product midpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeGrid {
    pub family: Family,
    pub z: Axis,
    pub c: Axis,
    /// Cell probabilities, row-major in `c` (index `i_c * n_z + i_z`).
    pub weights: Vec<f64>,
    /// Per row, running sums of `(weight, weight * z_node)` over z-cells,
    /// `n_z + 1` entries per row starting at zero.
    prefix: Vec<(f64, f64)>,
}

pub fn build_grid(
    family: Family,
    z_support: Support,
    c_support: Support,
    resolution: (usize, usize),
) -> Result<TypeGrid, GridError> {
    let (nz, nc) = resolution;
    for n in [nz, nc] {
        if n < 2 {
            return Err(GridError::Resolution(n));
        }
    }
    let z_support = Support::new(z_support.lo, z_support.hi)?;
    let c_support = Support::new(c_support.lo, c_support.hi)?;
    let (zp, cp) = match family {
        Family::Uniform => (None, None),
        Family::TruncatedLognormal { mu_z, s_z, mu_c, s_c } => (Some((mu_z, s_z)), Some((mu_c, s_c))),
    };
    let z = Axis::build(z_support, nz, zp)?;
    let c = Axis::build(c_support, nc, cp)?;
    let mut weights = Vec::with_capacity(nz * nc);
    for pc in &c.probs {
        for pz in &z.probs {
            weights.push(pc * pz);
        }
    }
    let total = neumaier(weights.iter().copied());
    for w in &mut weights {
        *w /= total;
    }
    let nc = c.len();
    let mut prefix = Vec::with_capacity(nc * (nz + 1));
    for i in 0..nc {
        let mut m = Neumaier::default();
        let mut zm = Neumaier::default();
        prefix.push((0.0, 0.0));
        for j in 0..nz {
            let w = weights[i * nz + j];
            m.add(w);
            zm.add(w * z.nodes[j]);
            prefix.push((m.sum(), zm.sum()));
        }
    }
    Ok(TypeGrid {
        family,
        z,
        c,
        weights,
        prefix,
    })
}

impl TypeGrid {
    /// Default distribution: independent uniform on `[0.5, 1.5]^2`.
    pub fn default_uniform(resolution: usize) -> Result<TypeGrid, GridError> {
        let s = Support { lo: 0.5, hi: 1.5 };
        build_grid(Family::Uniform, s, s, (resolution, resolution))
    }

    pub fn nz(&self) -> usize {
        self.z.len()
    }

    pub fn nc(&self) -> usize {
        self.c.len()
    }

    pub fn weight(&self, i_c: usize, i_z: usize) -> f64 {
        self.weights[i_c * self.nz() + i_z]
    }

    /// Nodes in fixed order: c-major, z-minor.
    pub fn nodes(&self) -> impl Iterator<Item = (FirmType, f64)> + '_ {
        self.c.nodes.iter().enumerate().flat_map(move |(i, &c)| {
            self.z
                .nodes
                .iter()
                .enumerate()
                .map(move |(j, &z)| (FirmType { z, c }, self.weight(i, j)))
        })
    }

    /// Midpoint-rule integral of `f` over nodes passing `mask`, summed in
    /// node order with compensated summation.
    pub fn integrate<F, M>(&self, f: F, mask: M) -> Result<f64, GridError>
    where
        F: Fn(FirmType) -> f64,
        M: Fn(FirmType) -> bool,
    {
        let mut acc = Neumaier::default();
        for (t, w) in self.nodes() {
            if !mask(t) {
                continue;
            }
            let v = f(t);
            if !v.is_finite() {
                return Err(GridError::NonFinite { z: t.z, c: t.c });
            }
            acc.add(w * v);
        }
        Ok(acc.sum())
    }

    /// Splits every c-cell at the given breakpoints. Pieces come out in
    /// ascending `c`.
    pub fn row_pieces(&self, breaks: &[f64]) -> Vec<RowPiece> {
        let mut out = Vec::with_capacity(self.nc() + breaks.len());
        for i in 0..self.nc() {
            let (a, b) = (self.c.edges[i], self.c.edges[i + 1]);
            let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
            cuts.sort_by(f64::total_cmp);
            let mut lo = a;
            for hi in cuts.into_iter().chain(std::iter::once(b)) {
                out.push(RowPiece {
                    row: i,
                    c: 0.5 * (lo + hi),
                    frac: (hi - lo) / (b - a),
                });
                lo = hi;
            }
        }
        out
    }

    /// Mass and first `z` moment of `piece` restricted to `z` in
    /// `[z_from, z_to)`. Partially covered z-cells contribute their covered
    /// fraction at the midpoint of the covered part, so affine integrands in
    /// `z` are integrated exactly under a within-cell uniform density.
    pub fn row_moments(&self, piece: RowPiece, z_from: f64, z_to: f64) -> Moments {
        let edges = &self.z.edges;
        let nz = self.nz();
        let lo = z_from.max(edges[0]);
        let hi = z_to.min(edges[nz]);
        if !(hi > lo) {
            return Moments::default();
        }
        // first cell with right edge above lo, last cell with left edge below hi
        let first = edges[1..].partition_point(|&b| b <= lo);
        let last = edges[..nz].partition_point(|&a| a < hi) - 1;
        let base = piece.row * nz;
        let partial = |j: usize, a: f64, b: f64| {
            let (ea, eb) = (edges[j], edges[j + 1]);
            let m = self.weights[base + j] * (b - a) / (eb - ea);
            (m, m * 0.5 * (a + b))
        };
        let (mass, z_mass) = if first == last {
            partial(first, lo, hi)
        } else {
            let (m0, z0) = partial(first, lo, edges[first + 1]);
            let (m1, z1) = partial(last, edges[last], hi);
            let p = piece.row * (nz + 1);
            let (ca, za) = self.prefix[p + first + 1];
            let (cb, zb) = self.prefix[p + last];
            (m0 + (cb - ca) + m1, z0 + (zb - za) + z1)
        };
        Moments {
            mass: mass * piece.frac,
            z_mass: z_mass * piece.frac,
        }
    }
}

/// Neumaier compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn sum(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Neumaier::default();
    for x in xs {
        acc.add(x);
    }
    acc.sum()
}
