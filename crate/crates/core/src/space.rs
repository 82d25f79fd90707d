//! Coordinate channels, leaf variables and the masks over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    X,
    Y,
    Z,
    T,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::X, Channel::Y, Channel::Z];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn letter(self) -> char {
        match self {
            Channel::X => 'x',
            Channel::Y => 'y',
            Channel::Z => 'z',
        }
    }
}

impl Variable {
    /// Canonical order, also the order used for remapping and swizzles.
    pub const ALL: [Variable; 4] = [Variable::X, Variable::Y, Variable::Z, Variable::T];

    pub fn bit(self) -> u8 {
        1 << self as u8
    }

    pub fn letter(self) -> char {
        match self {
            Variable::X => 'x',
            Variable::Y => 'y',
            Variable::Z => 'z',
            Variable::T => 't',
        }
    }

    pub fn from_index(index: u8) -> Option<Variable> {
        Variable::ALL.get(index as usize).copied()
    }
}

macro_rules! mask_type {
    ($name:ident, $elem:ident, $width:expr, $what:literal) => {
        #[doc = concat!("Bit set over ", $what, "; bit k is the k-th element in canonical order.")]
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
        pub struct $name(u8);

        impl $name {
            pub const WIDTH: usize = $width;
            pub const FULL: $name = $name((1 << $width) - 1);
            pub const EMPTY: $name = $name(0);

            /// Keeps only the low `WIDTH` bits.
            pub fn from_bits(bits: u8) -> Self {
                Self(bits & Self::FULL.0)
            }

            pub fn bits(self) -> u8 {
                self.0
            }

            pub fn of(items: &[$elem]) -> Self {
                Self(items.iter().fold(0, |acc, item| acc | item.bit()))
            }

            pub fn contains(self, item: $elem) -> bool {
                self.0 & item.bit() != 0
            }

            pub fn is_empty(self) -> bool {
                self.0 == 0
            }

            pub fn len(self) -> usize {
                self.0.count_ones() as usize
            }

            pub fn union(self, other: Self) -> Self {
                Self(self.0 | other.0)
            }

            pub fn is_subset(self, other: Self) -> bool {
                self.0 & !other.0 == 0
            }

            pub fn iter(self) -> impl Iterator<Item = $elem> {
                $elem::ALL
                    .into_iter()
                    .filter(move |item| self.contains(*item))
            }

            pub fn to_vec(self) -> Vec<$elem> {
                self.iter().collect()
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let letters: Vec<String> = self.iter().map(|i| i.letter().to_string()).collect();
                f.write_str(&letters.join(","))
            }
        }

        /// Accepts `"x,t"`, `"xt"` or `"x t"`.
        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let mut mask = Self::EMPTY;
                for c in s.chars().filter(|c| !matches!(c, ',' | ' ' | '\t')) {
                    let item = $elem::ALL
                        .into_iter()
                        .find(|item| item.letter() == c.to_ascii_lowercase())
                        .ok_or_else(|| {
                            Error::InvalidSpace(format!(
                                "unknown {} '{c}'",
                                stringify!($elem).to_lowercase()
                            ))
                        })?;
                    mask = mask.union(Self::of(&[item]));
                }
                Ok(mask)
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(
                &self,
                serializer: S,
            ) -> std::result::Result<S::Ok, S::Error> {
                self.to_vec().serialize(serializer)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(
                deserializer: D,
            ) -> std::result::Result<Self, D::Error> {
                let items = Vec::<$elem>::deserialize(deserializer)?;
                Ok(Self::of(&items))
            }
        }
    };
}

mask_type!(ChannelMask, Channel, 3, "the coordinate channels {x, y, z}");
mask_type!(VariableMask, Variable, 4, "the leaf variables {x, y, z, t}");

/// The variables and channels a session's expressions may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SearchSpace {
    channels: ChannelMask,
    variables: VariableMask,
}

impl SearchSpace {
    pub fn new(channels: ChannelMask, variables: VariableMask) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidSpace("channel mask is empty".into()));
        }
        if variables.is_empty() {
            return Err(Error::InvalidSpace("variable mask is empty".into()));
        }
        Ok(Self {
            channels,
            variables,
        })
    }

    /// Parses two mask strings, e.g. `SearchSpace::parse("x", "x,t")`.
    pub fn parse(channels: &str, variables: &str) -> Result<Self> {
        Self::new(channels.parse()?, variables.parse()?)
    }

    pub fn channels(&self) -> ChannelMask {
        self.channels
    }

    pub fn variables(&self) -> VariableMask {
        self.variables
    }

    pub fn union(&self, other: &SearchSpace) -> SearchSpace {
        SearchSpace {
            channels: self.channels.union(other.channels),
            variables: self.variables.union(other.variables),
        }
    }

    pub fn contains(&self, other: &SearchSpace) -> bool {
        other.channels.is_subset(self.channels) && other.variables.is_subset(self.variables)
    }
}

impl fmt::Display for SearchSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{{}}}, {{{}}})", self.channels, self.variables)
    }
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            channels: ChannelMask,
            variables: VariableMask,
        }
        let raw = Raw::deserialize(deserializer)?;
        SearchSpace::new(raw.channels, raw.variables).map_err(serde::de::Error::custom)
    }
}
