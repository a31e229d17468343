//! Synthetic occupancies with a geometric decay of users per grid count and
//! geometric per-grid contribution counts, plus projected-Gaussian values.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;
use rand_distr::{Distribution, Geometric, Normal};

use crate::dataset::{Dataset, GridId, OccupancyArray, Record, UserId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// G.
    pub num_grids: usize,
    /// L, at most 2^G − 1.
    pub num_users: usize,
    /// Success probability of the geometric count distribution on {1, 2, …}.
    pub geo_q: f64,
    /// Heavy-hitter boost: one user per grid gets ⌈(1 + γ)·m⌉.
    pub heavy_gamma: f64,
    pub bound_u: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            num_grids: 12,
            num_users: (1 << 12) - 1,
            geo_q: 0.01,
            heavy_gamma: 0.0,
            bound_u: 65.0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_grids == 0 || self.num_grids > 63 {
            return Err(Error::InvalidParameter(format!(
                "number of grids must lie in 1..=63 (got {})",
                self.num_grids
            )));
        }
        let max_users = (1u64 << self.num_grids) - 1;
        if self.num_users == 0 || self.num_users as u64 > max_users {
            return Err(Error::InvalidParameter(format!(
                "number of users must lie in 1..={max_users} (got {})",
                self.num_users
            )));
        }
        if !(self.geo_q > 0.0 && self.geo_q <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "q must lie in (0, 1] (got {})",
                self.geo_q
            )));
        }
        if !(self.heavy_gamma >= 0.0 && self.heavy_gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "heavy-hitter gamma must be finite and non-negative (got {})",
                self.heavy_gamma
            )));
        }
        Ok(())
    }

    /// Token of the user with 1-based index `l`.
    pub fn user_token(&self, l: usize) -> UserId {
        let width = self.num_users.to_string().len();
        UserId::from(format!("u{l:0width$}"))
    }

    /// Token of the grid with 0-based index `g`.
    pub fn grid_token(&self, g: usize) -> GridId {
        let width = self.num_grids.to_string().len().max(2);
        GridId::from(format!("g{:0width$}", g + 1))
    }
}

/// Number of grids the user with 1-based index `l` occupies: G − ⌊log2 l⌋.
pub fn grids_for_user(num_grids: usize, l: usize) -> usize {
    num_grids - (usize::BITS - 1 - l.leading_zeros()) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeavyHitter {
    pub user: UserId,
    pub original: u64,
    pub boosted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOccupancy {
    pub occupancy: OccupancyArray,
    pub heavy_hitters: BTreeMap<GridId, HeavyHitter>,
}

/// ⌈x⌉, except that values within floating-point noise of an integer are
/// rounded to it.
fn snapped_ceil(x: f64) -> u64 {
    let r = libm::round(x);
    if libm::fabs(x - r) <= 1e-9 * x.max(1.0) {
        r as u64
    } else {
        libm::ceil(x) as u64
    }
}

pub fn generate_occupancy_detailed<R: RngCore + ?Sized>(
    params: &SynthParams,
    rng: &mut R,
) -> Result<SynthOccupancy> {
    params.validate()?;
    let geo = Geometric::new(params.geo_q).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let g = params.num_grids;
    let mut rows: Vec<BTreeMap<UserId, u64>> = (0..g).map(|_| BTreeMap::new()).collect();
    let mut order: Vec<usize> = (0..g).collect();
    for l in 1..=params.num_users {
        let k = grids_for_user(g, l);
        order.sort_unstable();
        let (chosen, _) = order.partial_shuffle(rng, k);
        let mut chosen = chosen.to_vec();
        chosen.sort_unstable();
        let user = params.user_token(l);
        for gi in chosen {
            let count = geo.sample(rng) + 1;
            rows[gi].insert(user.clone(), count);
        }
    }

    let mut occupancy = OccupancyArray::new();
    let mut heavy_hitters = BTreeMap::new();
    for (gi, mut row) in rows.into_iter().enumerate() {
        let grid = params.grid_token(gi);
        // least token among the users with the largest count
        let (user, original) = row
            .iter()
            .fold(None::<(&UserId, u64)>, |best, (u, &c)| match best {
                Some((_, b)) if b >= c => best,
                _ => Some((u, c)),
            })
            .map(|(u, c)| (u.clone(), c))
            .expect("the first user occupies every grid");
        let boosted = snapped_ceil((1.0 + params.heavy_gamma) * original as f64);
        row.insert(user.clone(), boosted);
        heavy_hitters.insert(
            grid.clone(),
            HeavyHitter {
                user,
                original,
                boosted,
            },
        );
        for (u, c) in row {
            occupancy.insert(u, grid.clone(), c)?;
        }
    }
    Ok(SynthOccupancy {
        occupancy,
        heavy_hitters,
    })
}

pub fn generate_occupancy<R: RngCore + ?Sized>(
    params: &SynthParams,
    rng: &mut R,
) -> Result<OccupancyArray> {
    Ok(generate_occupancy_detailed(params, rng)?.occupancy)
}

/// Parameters of the projected Gaussian Π_{[0,U]}(N(μ, σ²)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueModel {
    pub mu: f64,
    pub sigma: f64,
}

/// One projected-Gaussian value per occupied slot, grids in token order,
/// users in token order within a grid.
pub fn generate_values<R: RngCore + ?Sized>(
    occupancy: &OccupancyArray,
    model: ValueModel,
    bound_u: f64,
    rng: &mut R,
) -> Result<Dataset> {
    if !(model.sigma >= 0.0 && model.sigma.is_finite() && model.mu.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "value model needs finite mu and sigma >= 0 (got {}, {})",
            model.mu, model.sigma
        )));
    }
    let normal =
        Normal::new(model.mu, model.sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut records = Vec::new();
    for (u, g, c) in occupancy.entries() {
        for _ in 0..c {
            let x = if model.sigma == 0.0 {
                model.mu
            } else {
                normal.sample(rng)
            };
            records.push(Record {
                user: u.clone(),
                grid: g.clone(),
                value: x.clamp(0.0, bound_u),
            });
        }
    }
    Dataset::new(records, bound_u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScalingMode {
    /// Every count multiplied by λ.
    Sample,
    /// Every user replicated λ times.
    User,
}

/// Applies sample or user scaling. Replicas of user `u` are named `u.1`,
/// `u.2`, …; λ = 1 returns the input unchanged.
pub fn scale_occupancy(
    occupancy: &OccupancyArray,
    mode: ScalingMode,
    lambda: u64,
) -> Result<OccupancyArray> {
    if lambda == 0 {
        return Err(Error::InvalidParameter(
            "scaling factor must be at least 1".into(),
        ));
    }
    if lambda == 1 {
        return Ok(occupancy.clone());
    }
    let mut out = OccupancyArray::new();
    for (u, g, c) in occupancy.entries() {
        match mode {
            ScalingMode::Sample => out.insert(u.clone(), g.clone(), c * lambda)?,
            ScalingMode::User => {
                for i in 1..=lambda {
                    let name: String = format!("{u}.{i}");
                    out.insert(UserId::from(name), g.clone(), c)?;
                }
            }
        }
    }
    Ok(out)
}

/// Sample or user scaling of a plain count list.
pub fn scale_counts(m_list: &[u64], mode: ScalingMode, lambda: u64) -> Vec<u64> {
    match mode {
        ScalingMode::Sample => m_list.iter().map(|&m| m * lambda).collect(),
        ScalingMode::User => m_list
            .iter()
            .flat_map(|&m| core::iter::repeat_n(m, lambda as usize))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn grids_per_user() {
        assert_eq!(grids_for_user(12, 1), 12);
        assert_eq!(grids_for_user(12, 2), 11);
        assert_eq!(grids_for_user(12, 3), 11);
        assert_eq!(grids_for_user(12, 4), 10);
        assert_eq!(grids_for_user(12, 4095), 1);
    }

    #[test]
    fn structure_of_small_draw() {
        let p = SynthParams {
            num_grids: 4,
            num_users: 15,
            geo_q: 0.3,
            heavy_gamma: 3.0,
            bound_u: 65.0,
        };
        let s = generate_occupancy_detailed(&p, &mut RngStream::new(1)).unwrap();
        let ug = s.occupancy.user_grids();
        for l in 1..=15 {
            assert_eq!(ug[&p.user_token(l)].len(), grids_for_user(4, l));
        }
        assert_eq!(s.heavy_hitters.len(), 4);
        for (g, h) in &s.heavy_hitters {
            assert_eq!(h.boosted, 4 * h.original);
            assert_eq!(s.occupancy.count(g, &h.user), h.boosted);
        }
        let again = generate_occupancy_detailed(&p, &mut RngStream::new(1)).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn degenerate_parameters() {
        let p = SynthParams {
            num_grids: 3,
            num_users: 7,
            geo_q: 1.0,
            heavy_gamma: 0.0,
            bound_u: 1.0,
        };
        let occ = generate_occupancy(&p, &mut RngStream::new(2)).unwrap();
        assert!(occ.entries().all(|(_, _, c)| c == 1));
        let bad = SynthParams { num_users: 8, ..p };
        assert!(generate_occupancy(&bad, &mut RngStream::new(2)).is_err());
    }

    #[test]
    fn snapping() {
        assert_eq!(snapped_ceil(1.1 * 10.0), 11);
        assert_eq!(snapped_ceil(10.2), 11);
        assert_eq!(snapped_ceil(4.0), 4);
    }

    #[test]
    fn values_clamp_and_constant() {
        let occ = OccupancyArray::from_entries([("a", "g", 3), ("b", "g", 2)]).unwrap();
        let d = generate_values(
            &occ,
            ValueModel {
                mu: 70.0,
                sigma: 0.0,
            },
            65.0,
            &mut RngStream::new(1),
        )
        .unwrap();
        assert!(d.records().iter().all(|r| r.value == 65.0));
        assert_eq!(d.occupancy(), occ);
    }

    #[test]
    fn scaling() {
        let occ = OccupancyArray::from_entries([("u1", "g1", 1), ("u2", "g1", 4), ("u3", "g1", 9)])
            .unwrap();
        assert_eq!(scale_occupancy(&occ, ScalingMode::User, 1).unwrap(), occ);
        let s = scale_occupancy(&occ, ScalingMode::Sample, 10).unwrap();
        assert_eq!(s.grid_counts(&"g1".into()).unwrap(), [10, 40, 90]);
        let one = OccupancyArray::from_entries([("u1", "g1", 2)]).unwrap();
        let u = scale_occupancy(&one, ScalingMode::User, 2).unwrap();
        assert_eq!(u.num_users(), 2);
        assert_eq!(u.count(&"g1".into(), &"u1.2".into()), 2);
        assert_eq!(scale_counts(&[1, 4], ScalingMode::User, 2), [1, 1, 4, 4]);
    }
}
