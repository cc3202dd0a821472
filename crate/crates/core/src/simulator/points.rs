//! Realisations of the unit-rate Poisson process on `[0, t] × [0, eta_max]`.
//!
//! The rectangle is cut into η-bands whose edges form a geometric grid in
//! `1 + η`. Each band receives a `Poisson(t · width)` count; the coordinates
//! of point `i` in band `b` are a pure function of `(seed, b, i)` and are
//! generated on demand, so samples with billions of points cost only as
//! much memory as the points that are actually touched.

use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{derive_seed, mix64, open_unit, stream};

/// Materialisation limit on the point count.
pub const DEFAULT_POINT_LIMIT: f64 = 1e8;
/// Limit on the expected point count of a lazily generated sample.
pub const DEFAULT_LAZY_POINT_LIMIT: f64 = 1e15;
/// Ratio between consecutive band edges in `1 + η`.
pub const BAND_RATIO: f64 = 1.189_207_115_002_721; // 2^(1/4)

const TAG_COUNT: u64 = 0x0063_6f75_6e74;
const TAG_ETA: u64 = 0x0065_7461;
const TAG_THETA: u64 = 0x0074_6865_7461;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub theta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

impl Band {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Band edges `BAND_RATIO^k − 1`, the last one clipped to `eta_max`.
pub fn band_edges(eta_max: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let mut k = 1;
    loop {
        let e = BAND_RATIO.powi(k) - 1.0;
        if e >= eta_max * (1.0 - 1e-12) {
            edges.push(eta_max);
            return edges;
        }
        edges.push(e);
        k += 1;
    }
}

#[derive(Debug, Clone)]
pub struct PointSample {
    t: f64,
    eta_max: f64,
    seed: u64,
    bands: Vec<Band>,
    /// Global index of the first point of each band.
    offsets: Vec<u64>,
    /// Pinned points grouped by band; `None` for lazily generated samples.
    explicit: Option<Vec<Point>>,
}

fn check_horizon(t: f64, eta_max: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive and finite, got {t}")));
    }
    if !(eta_max > 0.0 && eta_max.is_finite()) {
        return Err(Error::Domain(format!(
            "eta_max must be positive and finite, got {eta_max}"
        )));
    }
    Ok(())
}

fn offsets_of(bands: &[Band]) -> Vec<u64> {
    let mut acc = 0;
    let mut offsets = Vec::with_capacity(bands.len() + 1);
    offsets.push(0);
    for b in bands {
        acc += b.count;
        offsets.push(acc);
    }
    offsets
}

/// Draws a Poisson process on `[0, t] × [0, eta_max]`.
pub fn sample_points(t: f64, eta_max: f64, seed: u64) -> Result<PointSample> {
    sample_points_with_limit(t, eta_max, seed, DEFAULT_LAZY_POINT_LIMIT)
}

pub fn sample_points_with_limit(t: f64, eta_max: f64, seed: u64, limit: f64) -> Result<PointSample> {
    check_horizon(t, eta_max)?;
    let expected = t * eta_max;
    if expected > limit {
        return Err(Error::Capacity {
            what: "expected point count",
            requested: expected,
            limit,
        });
    }
    let edges = band_edges(eta_max);
    let bands: Vec<Band> = edges
        .windows(2)
        .enumerate()
        .map(|(b, w)| {
            let rate = t * (w[1] - w[0]);
            let count = if rate > 0.0 {
                let mut rng = stream(seed, &[TAG_COUNT, b as u64]);
                Poisson::new(rate)
                    .map_err(|e| Error::Numeric(e.to_string()))?
                    .sample(&mut rng) as u64
            } else {
                0
            };
            Ok(Band {
                lo: w[0],
                hi: w[1],
                count,
            })
        })
        .collect::<Result<_>>()?;
    Ok(PointSample {
        t,
        eta_max,
        seed,
        offsets: offsets_of(&bands),
        bands,
        explicit: None,
    })
}

impl PointSample {
    /// A sample with pinned coordinates, mainly for tests and replays.
    pub fn from_points(t: f64, eta_max: f64, seed: u64, points: &[Point]) -> Result<Self> {
        check_horizon(t, eta_max)?;
        for p in points {
            if !(0.0..=t).contains(&p.theta) || !(0.0..=eta_max).contains(&p.eta) {
                return Err(Error::Domain(format!(
                    "point ({}, {}) outside the rectangle",
                    p.theta, p.eta
                )));
            }
        }
        let edges = band_edges(eta_max);
        let band_of = |eta: f64| edges[1..].partition_point(|&e| e < eta).min(edges.len() - 2);
        let mut grouped: Vec<Vec<Point>> = vec![Vec::new(); edges.len() - 1];
        for &p in points {
            grouped[band_of(p.eta)].push(p);
        }
        let bands: Vec<Band> = edges
            .windows(2)
            .zip(&grouped)
            .map(|(w, g)| Band {
                lo: w[0],
                hi: w[1],
                count: g.len() as u64,
            })
            .collect();
        Ok(Self {
            t,
            eta_max,
            seed,
            offsets: offsets_of(&bands),
            bands,
            explicit: Some(grouped.into_iter().flatten().collect()),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eta_max(&self) -> f64 {
        self.eta_max
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn len(&self) -> u64 {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index of point `i` of band `band`.
    #[inline]
    pub fn global_index(&self, band: usize, i: u64) -> u64 {
        self.offsets[band] + i
    }

    /// η of point `i` of band `band`.
    #[inline]
    pub fn eta_in_band(&self, band: usize, i: u64) -> f64 {
        match &self.explicit {
            Some(pts) => pts[(self.offsets[band] + i) as usize].eta,
            None => {
                let b = &self.bands[band];
                let key = mix64(derive_seed(self.seed, &[TAG_ETA, band as u64]), i);
                b.lo + b.width() * open_unit(key)
            }
        }
    }

    #[inline]
    pub fn point_in_band(&self, band: usize, i: u64) -> Point {
        let theta = match &self.explicit {
            Some(pts) => pts[(self.offsets[band] + i) as usize].theta,
            None => self.t * open_unit(mix64(derive_seed(self.seed, &[TAG_THETA, band as u64]), i)),
        };
        Point {
            theta,
            eta: self.eta_in_band(band, i),
        }
    }

    /// Point with global index `g`.
    pub fn point(&self, g: u64) -> Point {
        let band = self.offsets.partition_point(|&o| o <= g) - 1;
        self.point_in_band(band, g - self.offsets[band])
    }

    /// All points in global-index order.
    pub fn materialize(&self) -> Result<Vec<Point>> {
        self.materialize_with_limit(DEFAULT_POINT_LIMIT)
    }

    pub fn materialize_with_limit(&self, limit: f64) -> Result<Vec<Point>> {
        if self.len() as f64 > limit {
            return Err(Error::Capacity {
                what: "materialized point count",
                requested: self.len() as f64,
                limit,
            });
        }
        if let Some(pts) = &self.explicit {
            return Ok(pts.clone());
        }
        Ok(self
            .bands
            .iter()
            .enumerate()
            .flat_map(|(b, band)| (0..band.count).map(move |i| self.point_in_band(b, i)))
            .collect())
    }
}
