//! Chamber-count bounds for groups with a BN-pair acting on their building,
//! and covolume rescaling to lattices.

use num::{One, Signed};

use crate::error::{Error, Result};
use crate::exact::{int, Rational};

/// A rank-n building: n+1 panel types, the residue field size q, and the
/// number of chambers on each panel type (q+1 by default).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChamberData {
    n: usize,
    q: u64,
    panel_splits: Vec<u64>,
}

impl ChamberData {
    pub fn new(n: usize, q: u64, panel_splits: Option<Vec<u64>>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidQ(q));
        }
        let panel_splits = panel_splits.unwrap_or_else(|| vec![q + 1; n + 1]);
        if panel_splits.len() != n + 1 {
            return Err(Error::ShapeMismatch(format!("{} panel splits for {} generators", panel_splits.len(), n + 1)));
        }
        if let Some(i) = panel_splits.iter().position(|&s| s < 2) {
            return Err(Error::Consistency { orbit: format!("panel {i}"), msg: "a panel must split into at least 2 cosets".into() });
        }
        Ok(Self { n, q, panel_splits })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn panel_splits(&self) -> &[u64] {
        &self.panel_splits
    }
}

/// βⁿ ≥ 1 − Σ_panels 1/split, with the chamber stabilizer of measure 1: the
/// top cells form one orbit and each codimension-one face type is an orbit
/// whose stabilizer has measure split.
pub fn top_degree_lower_bound(cd: &ChamberData) -> Rational {
    Rational::one() - cd.panel_splits.iter().map(|&s| Rational::new(1.into(), s.into())).sum::<Rational>()
}

pub fn lattice_rescale(beta: &Rational, covolume: &Rational) -> Result<Rational> {
    if !covolume.is_positive() {
        return Err(Error::InvalidScale);
    }
    Ok(beta * covolume)
}

/// β¹ of the (q+1)-regular Bruhat–Tits tree with chamber measure 1: one
/// edge orbit of measure 1 and two vertex orbits of measure q+1.
pub fn tree_building_beta1(q: u64) -> Result<Rational> {
    let cd = ChamberData::new(1, q, None)?;
    let vertices: Rational = cd.panel_splits.iter().map(|&s| Rational::new(1.into(), s.into())).sum();
    Ok(int(1) - vertices)
}
