//! Surface signatures, rank, finite-type classification and closed-form counts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SurfaceError {
    #[error("invalid surface: {0}")]
    Invalid(String),
    #[error("cannot parse surface preset `{0}` (expected disc:b, moebius:n or annulus:p,q)")]
    BadPreset(String),
}

/// Unpunctured marked surface up to homeomorphism.
///
/// `genus` is the orientable genus when `orientable`, otherwise the number of crosscaps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SurfaceSignature {
    pub orientable: bool,
    pub genus: u32,
    pub boundary: Vec<u32>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub punctures: u32,
}

fn is_zero(x: &u32) -> bool {
    *x == 0
}

impl SurfaceSignature {
    pub fn new(orientable: bool, genus: u32, boundary: Vec<u32>) -> Result<Self, SurfaceError> {
        let s = SurfaceSignature { orientable, genus, boundary, punctures: 0 };
        s.validate()?;
        Ok(s)
    }

    pub fn disc(b: u32) -> Result<Self, SurfaceError> {
        Self::new(true, 0, vec![b])
    }

    pub fn moebius(n: u32) -> Result<Self, SurfaceError> {
        Self::new(false, 1, vec![n])
    }

    pub fn annulus(p: u32, q: u32) -> Result<Self, SurfaceError> {
        Self::new(true, 0, vec![p, q])
    }

    pub fn from_json(text: &str) -> Result<Self, SurfaceError> {
        let s: SurfaceSignature = serde_json::from_str(text).map_err(|e| SurfaceError::Invalid(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("signature serializes")
    }

    /// Checks the structural restrictions. Punctures are rejected outright, which also rules out
    /// the once-punctured Klein bottle.
    pub fn validate(&self) -> Result<(), SurfaceError> {
        if self.punctures != 0 {
            return Err(SurfaceError::Invalid("punctured surfaces are not supported".into()));
        }
        if self.boundary.is_empty() {
            return Err(SurfaceError::Invalid("at least one boundary component is required".into()));
        }
        if self.boundary.contains(&0) {
            return Err(SurfaceError::Invalid("every boundary component needs a marked point".into()));
        }
        if !self.orientable && self.genus == 0 {
            return Err(SurfaceError::Invalid("non-orientable genus must be at least 1".into()));
        }
        if self.orientable && self.genus == 0 && self.boundary.len() == 1 && self.boundary[0] <= 3 {
            return Err(SurfaceError::Invalid("monogon, digon and triangle are excluded".into()));
        }
        if self.rank_i64() < 1 {
            return Err(SurfaceError::Invalid("rank must be positive".into()));
        }
        Ok(())
    }

    fn rank_i64(&self) -> i64 {
        let n = self.boundary.len() as i64;
        let sum: i64 = self.boundary.iter().map(|&b| b as i64).sum();
        let g = self.genus as i64;
        if self.orientable {
            6 * g - 6 + 3 * n + sum
        } else {
            3 * g - 6 + 3 * n + sum
        }
    }

    /// Number of elements in every quasi-triangulation.
    pub fn rank(&self) -> usize {
        self.rank_i64().max(0) as usize
    }

    pub fn euler_characteristic(&self) -> i64 {
        let n = self.boundary.len() as i64;
        if self.orientable {
            2 - 2 * self.genus as i64 - n
        } else {
            2 - self.genus as i64 - n
        }
    }

    pub fn is_disc(&self) -> bool {
        self.orientable && self.genus == 0 && self.boundary.len() == 1
    }

    pub fn is_moebius(&self) -> bool {
        !self.orientable && self.genus == 1 && self.boundary.len() == 1
    }

    pub fn is_annulus(&self) -> bool {
        self.orientable && self.genus == 0 && self.boundary.len() == 2
    }

    /// Finite type iff disc with at least four marked points or a Moebius strip.
    pub fn is_finite_type(&self) -> bool {
        (self.is_disc() && self.boundary[0] >= 4) || (self.is_moebius() && self.boundary[0] >= 1)
    }

    /// `(quasi-arcs, arcs)` for finite-type surfaces.
    pub fn count_quasi_arcs_closed_form(&self) -> Option<(u64, u64)> {
        if !self.is_finite_type() {
            return None;
        }
        let b = self.boundary[0] as u64;
        if self.is_disc() {
            let c = b * (b - 3) / 2;
            Some((c, c))
        } else {
            Some(((3 * b * b - b + 2) / 2, b * (3 * b - 1) / 2))
        }
    }

    /// Signature of the orientation double cover of a non-orientable surface.
    pub fn double_cover(&self) -> Option<SurfaceSignature> {
        if self.orientable {
            return None;
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for &b in &self.boundary {
            boundary.push(b);
            boundary.push(b);
        }
        boundary.sort_unstable();
        Some(SurfaceSignature { orientable: true, genus: self.genus - 1, boundary, punctures: 0 })
    }

    /// Same surface with the boundary partition sorted, for comparisons.
    pub fn normalized(&self) -> SurfaceSignature {
        let mut s = self.clone();
        s.boundary.sort_unstable();
        s
    }
}

impl fmt::Display for SurfaceSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b: Vec<String> = self.boundary.iter().map(|x| x.to_string()).collect();
        if self.orientable {
            write!(f, "orientable(g={};b=[{}])", self.genus, b.join(","))
        } else {
            write!(f, "nonorientable(k={};b=[{}])", self.genus, b.join(","))
        }
    }
}

/// Built-in surfaces with a standard initial triangulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Disc(u32),
    Moebius(u32),
    Annulus(u32, u32),
}

impl Preset {
    pub fn signature(&self) -> Result<SurfaceSignature, SurfaceError> {
        match *self {
            Preset::Disc(b) => SurfaceSignature::disc(b),
            Preset::Moebius(n) => SurfaceSignature::moebius(n),
            Preset::Annulus(p, q) => SurfaceSignature::annulus(p, q),
        }
    }

    /// Recognizes signatures that have a built-in constructor.
    pub fn from_signature(s: &SurfaceSignature) -> Option<Preset> {
        if s.is_disc() {
            Some(Preset::Disc(s.boundary[0]))
        } else if s.is_moebius() {
            Some(Preset::Moebius(s.boundary[0]))
        } else if s.is_annulus() {
            Some(Preset::Annulus(s.boundary[0], s.boundary[1]))
        } else {
            None
        }
    }
}

impl FromStr for Preset {
    type Err = SurfaceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SurfaceError::BadPreset(s.to_string());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        let nums: Vec<u32> = args
            .split(',')
            .map(|x| x.trim().parse::<u32>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let p = match (kind.trim(), nums.as_slice()) {
            ("disc", [b]) => Preset::Disc(*b),
            ("moebius", [n]) => Preset::Moebius(*n),
            ("annulus", [p, q]) => Preset::Annulus(*p, *q),
            _ => return Err(bad()),
        };
        p.signature()?;
        Ok(p)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Disc(b) => write!(f, "disc:{b}"),
            Preset::Moebius(n) => write!(f, "moebius:{n}"),
            Preset::Annulus(p, q) => write!(f, "annulus:{p},{q}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(SurfaceSignature::moebius(3).unwrap().rank(), 3);
        assert_eq!(SurfaceSignature::disc(6).unwrap().rank(), 3);
        assert_eq!(SurfaceSignature::annulus(1, 1).unwrap().rank(), 2);
        for n in 1..=10 {
            assert_eq!(SurfaceSignature::moebius(n).unwrap().rank(), n as usize);
        }
    }

    #[test]
    fn finite_type() {
        assert!(SurfaceSignature::moebius(3).unwrap().is_finite_type());
        assert!(SurfaceSignature::disc(5).unwrap().is_finite_type());
        assert!(!SurfaceSignature::new(false, 2, vec![1]).unwrap().is_finite_type());
        assert!(!SurfaceSignature::annulus(1, 1).unwrap().is_finite_type());
    }

    #[test]
    fn closed_forms() {
        let m = |n| SurfaceSignature::moebius(n).unwrap().count_quasi_arcs_closed_form();
        assert_eq!(m(2), Some((6, 5)));
        assert_eq!(m(3), Some((13, 12)));
        assert_eq!(m(4), Some((23, 22)));
        assert_eq!(SurfaceSignature::disc(6).unwrap().count_quasi_arcs_closed_form(), Some((9, 9)));
        assert_eq!(SurfaceSignature::annulus(2, 1).unwrap().count_quasi_arcs_closed_form(), None);
    }

    #[test]
    fn rejects_degenerate() {
        assert!(SurfaceSignature::disc(3).is_err());
        assert!(SurfaceSignature::new(true, 0, vec![]).is_err());
        assert!(SurfaceSignature::new(false, 0, vec![2]).is_err());
        assert!(SurfaceSignature::from_json(r#"{"orientable":true,"genus":0,"boundary":[5],"punctures":1}"#).is_err());
        let s = SurfaceSignature::from_json(r#"{"orientable":false,"genus":1,"boundary":[2]}"#).unwrap();
        assert_eq!(s, SurfaceSignature::moebius(2).unwrap());
    }

    #[test]
    fn presets() {
        assert_eq!("moebius:2".parse::<Preset>().unwrap(), Preset::Moebius(2));
        assert_eq!("annulus:1,2".parse::<Preset>().unwrap(), Preset::Annulus(1, 2));
        assert!("disc:3".parse::<Preset>().is_err());
        assert!("torus:1".parse::<Preset>().is_err());
    }
}
