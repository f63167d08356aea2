//! The two fixed grading scales and the rating literals that live on them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseLiteralError;

/// Which level of an element is being graded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Standard {
    Minimum,
    Excellence,
}

impl Standard {
    pub const ALL: [Standard; 2] = [Standard::Minimum, Standard::Excellence];

    /// The scale every rating for this standard must come from.
    pub fn scale(self) -> Scale {
        match self {
            Standard::Minimum => Scale::PassFail,
            Standard::Excellence => Scale::NonePartialFull,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Standard::Minimum => "minimum",
            Standard::Excellence => "excellence",
        }
    }
}

impl fmt::Display for Standard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Standard {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "minimum" => Ok(Standard::Minimum),
            "excellence" => Ok(Standard::Excellence),
            other => Err(ParseLiteralError::new("standard", other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Minimum standard: pass or fail.
    PassFail,
    /// Standard of excellence: none, partial or full.
    NonePartialFull,
}

impl Scale {
    pub fn levels(self) -> &'static [Rating] {
        match self {
            Scale::PassFail => &[Rating::Fail, Rating::Pass],
            Scale::NonePartialFull => &[Rating::None, Rating::Partial, Rating::Full],
        }
    }

    pub fn contains(self, rating: Rating) -> bool {
        rating.scale() == self
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::PassFail => "pass-fail",
            Scale::NonePartialFull => "none-partial-full",
        })
    }
}

/// A rating literal. The literal set is closed: `pass|fail|none|partial|full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rating {
    Fail,
    Pass,
    None,
    Partial,
    Full,
}

impl Rating {
    pub fn scale(self) -> Scale {
        match self {
            Rating::Pass | Rating::Fail => Scale::PassFail,
            Rating::None | Rating::Partial | Rating::Full => Scale::NonePartialFull,
        }
    }

    pub fn is_on_scale_for(self, standard: Standard) -> bool {
        standard.scale().contains(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rating::Fail => "fail",
            Rating::Pass => "pass",
            Rating::None => "none",
            Rating::Partial => "partial",
            Rating::Full => "full",
        }
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rating {
    type Err = ParseLiteralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(Rating::Pass),
            "fail" => Ok(Rating::Fail),
            "none" => Ok(Rating::None),
            "partial" => Ok(Rating::Partial),
            "full" => Ok(Rating::Full),
            other => Err(ParseLiteralError::new("rating", other)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals_round_trip_through_from_str() {
        for r in [Rating::Pass, Rating::Fail, Rating::None, Rating::Partial, Rating::Full] {
            assert_eq!(r.as_str().parse::<Rating>().unwrap(), r);
        }
        assert!("maybe".parse::<Rating>().is_err());
        assert!("Pass".parse::<Rating>().is_err());
    }

    #[test]
    fn scales_are_fixed_per_standard() {
        assert!(Rating::Pass.is_on_scale_for(Standard::Minimum));
        assert!(!Rating::Pass.is_on_scale_for(Standard::Excellence));
        assert!(Rating::Partial.is_on_scale_for(Standard::Excellence));
        assert!(!Rating::None.is_on_scale_for(Standard::Minimum));
        assert_eq!(Scale::NonePartialFull.levels().len(), 3);
    }
}
